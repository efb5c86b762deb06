#include "season/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace season::model {

namespace {

constexpr int kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"d_model", c.d_model},
                        {"n_heads", c.n_heads},
                        {"n_enc_layers", c.n_enc_layers},
                        {"n_dec_layers", c.n_dec_layers},
                        {"ffn_dim", c.ffn_dim},
                        {"vocab_size", c.vocab_size},
                        {"n_degrees", c.n_degrees},
                        {"tau", c.tau},
                        {"tau_cls_train", c.tau_cls_train},
                        {"dropout", c.dropout},
                        {"max_positions", c.max_positions}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_enc_layers = j.at("n_enc_layers").get<int>();
  c.n_dec_layers = j.at("n_dec_layers").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.n_degrees = j.at("n_degrees").get<int>();
  c.tau = j.at("tau").get<double>();
  c.tau_cls_train = j.at("tau_cls_train").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.max_positions = j.at("max_positions").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Parameters& params,
                     const ModelConfig& config,
                     const std::string* train_state_json) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config"] = config_to_json(config);
  nlohmann::json tensors = nlohmann::json::object();
  params.for_each([&tensors](const std::string& name,
                             const tensor::NodePtr& node) {
    tensors[name] = {{"shape", node->shape}, {"data", node->value}};
  });
  j["params"] = std::move(tensors);
  if (train_state_json != nullptr && !train_state_json->empty()) {
    j["train_state"] = nlohmann::json::parse(*train_state_json);
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot open checkpoint for write: " + path);
  out << j.dump() << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid checkpoint: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != kVersion) {
    throw InputError("checkpoint: unsupported or missing version");
  }
  Checkpoint ckpt;
  ckpt.config = config_from_json(j.at("config"));
  ckpt.params = Parameters::init(ckpt.config, /*seed=*/0);
  const nlohmann::json& tensors = j.at("params");
  ckpt.params.for_each([&tensors, &path](const std::string& name,
                                         const tensor::NodePtr& node) {
    if (!tensors.contains(name)) {
      throw InputError("checkpoint " + path + ": missing tensor " + name);
    }
    const auto shape = tensors[name].at("shape").get<std::vector<int>>();
    if (shape != node->shape) {
      throw InputError("checkpoint " + path + ": shape mismatch for " + name);
    }
    const auto data = tensors[name].at("data").get<std::vector<double>>();
    if (data.size() != node->value.size()) {
      throw InputError("checkpoint " + path + ": size mismatch for " + name);
    }
    node->value = data;
  });
  if (j.contains("train_state")) {
    ckpt.train_state_json = j["train_state"].dump();
  }
  return ckpt;
}

}  // namespace season::model
