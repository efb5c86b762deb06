#include "season/config_file.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace season::config {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      cfg.sections_[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line_no, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (section.empty()) throw ParseError(line_no, "key outside a section");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stod(get(section, key, ""));
  } catch (const std::exception&) {
    throw InputError("config: " + section + "." + key + " is not a number");
  }
}

int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                            int64_t fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return std::stoll(get(section, key, ""));
  } catch (const std::exception&) {
    throw InputError("config: " + section + "." + key + " is not an integer");
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get(section, key, "");
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: " + section + "." + key + " is not a boolean");
}

void ConfigFile::set(const std::string& dotted_key, const std::string& value) {
  const size_t dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw InputError("override must look like section.key=value: " +
                     dotted_key);
  }
  sections_[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
}

std::string ConfigFile::serialize() const {
  std::ostringstream os;
  for (const auto& [section, entries] : sections_) {
    os << "[" << section << "]\n";
    for (const auto& [key, value] : entries) {
      os << key << " = " << value << "\n";
    }
    os << "\n";
  }
  return os.str();
}

std::vector<double> parse_fraction_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("not a fraction list: " + csv);
    }
  }
  if (out.empty()) throw InputError("empty fraction list: " + csv);
  return out;
}

decode::DecodeConfig::Estimation parse_estimation(const std::string& name) {
  if (name == "soft") return decode::DecodeConfig::Estimation::kSoft;
  if (name == "hard") return decode::DecodeConfig::Estimation::kHard;
  if (name == "gold") return decode::DecodeConfig::Estimation::kGold;
  if (name == "zero") return decode::DecodeConfig::Estimation::kZero;
  throw InputError("unknown estimation mode: " + name +
                   " (expected soft|hard|gold|zero)");
}

namespace {

std::string estimation_name(decode::DecodeConfig::Estimation e) {
  switch (e) {
    case decode::DecodeConfig::Estimation::kSoft: return "soft";
    case decode::DecodeConfig::Estimation::kHard: return "hard";
    case decode::DecodeConfig::Estimation::kGold: return "gold";
    case decode::DecodeConfig::Estimation::kZero: return "zero";
  }
  return "soft";
}

std::string smoothing_name(train::TrainConfig::Smoothing s) {
  return s == train::TrainConfig::Smoothing::kAdjacent ? "adjacent"
                                                       : "uniform";
}

std::string join_fractions(const std::vector<double>& fr) {
  std::ostringstream os;
  for (size_t i = 0; i < fr.size(); ++i) {
    if (i) os << ",";
    os << fr[i];
  }
  return os.str();
}

}  // namespace

RunConfig RunConfig::from_config(const ConfigFile& f) {
  RunConfig rc;
  rc.model.d_model = static_cast<int>(f.get_int("model", "d_model", 128));
  rc.model.n_heads = static_cast<int>(f.get_int("model", "n_heads", 4));
  rc.model.n_enc_layers =
      static_cast<int>(f.get_int("model", "n_enc_layers", 3));
  rc.model.n_dec_layers =
      static_cast<int>(f.get_int("model", "n_dec_layers", 3));
  rc.model.ffn_dim = static_cast<int>(f.get_int("model", "ffn_dim", 512));
  rc.model.n_degrees = static_cast<int>(f.get_int("model", "n_degrees", 3));
  rc.model.tau = f.get_double("model", "tau", 0.5);
  rc.model.tau_cls_train = f.get_double("model", "tau_cls_train", 1.0);
  rc.model.dropout = f.get_double("model", "dropout", 0.1);
  rc.model.max_positions =
      static_cast<int>(f.get_int("model", "max_positions", 512));

  rc.train.alpha = f.get_double("train", "alpha", 1.5);
  rc.train.beta = f.get_double("train", "beta", 0.2);
  const std::string smoothing = f.get("train", "smoothing", "adjacent");
  if (smoothing == "adjacent") {
    rc.train.smoothing = train::TrainConfig::Smoothing::kAdjacent;
  } else if (smoothing == "uniform") {
    rc.train.smoothing = train::TrainConfig::Smoothing::kUniform;
  } else {
    throw InputError("config: train.smoothing must be adjacent|uniform");
  }
  rc.train.lr = f.get_double("train", "lr", 3e-4);
  rc.train.warmup_steps =
      static_cast<int>(f.get_int("train", "warmup_steps", 200));
  rc.train.weight_decay = f.get_double("train", "weight_decay", 0.01);
  rc.train.clip_norm = f.get_double("train", "clip_norm", 0.1);
  rc.train.epochs = static_cast<int>(f.get_int("train", "epochs", 30));
  rc.train.batch_size = static_cast<int>(f.get_int("train", "batch_size", 8));
  rc.train.seed = static_cast<uint64_t>(f.get_int("train", "seed", 1));
  rc.train.stop_at_loss_lm = f.get_double("train", "stop_at_loss_lm", 0.0);
  rc.train.val_every = static_cast<int>(f.get_int("train", "val_every", 1));
  rc.train.zero_guidance = f.get_bool("train", "zero_guidance", false);

  rc.decode.beam_size = static_cast<int>(f.get_int("decode", "beam_size", 5));
  rc.decode.length_penalty = f.get_double("decode", "length_penalty", 1.5);
  rc.decode.block_ngram =
      static_cast<int>(f.get_int("decode", "block_ngram", 3));
  rc.decode.min_len = static_cast<int>(f.get_int("decode", "min_len", 20));
  rc.decode.max_len = static_cast<int>(f.get_int("decode", "max_len", 128));
  rc.decode.tau = f.get_double("decode", "tau", 0.5);
  rc.decode.estimation =
      parse_estimation(f.get("decode", "estimation", "soft"));
  rc.decode.emit_probs = f.get_bool("decode", "emit_probs", false);

  rc.max_src = static_cast<int>(f.get_int("corpus", "max_src", 512));
  rc.max_tgt = static_cast<int>(f.get_int("corpus", "max_tgt", 128));
  rc.percentiles = parse_fraction_list(
      f.get("salience", "percentiles", "0.15,0.50"));
  rc.seed = static_cast<uint64_t>(f.get_int("run", "seed", 1));
  return rc;
}

ConfigFile RunConfig::to_config() const {
  ConfigFile f;
  auto set = [&f](const std::string& k, const std::string& v) { f.set(k, v); };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  set("model.d_model", std::to_string(model.d_model));
  set("model.n_heads", std::to_string(model.n_heads));
  set("model.n_enc_layers", std::to_string(model.n_enc_layers));
  set("model.n_dec_layers", std::to_string(model.n_dec_layers));
  set("model.ffn_dim", std::to_string(model.ffn_dim));
  set("model.n_degrees", std::to_string(model.n_degrees));
  set("model.tau", num(model.tau));
  set("model.tau_cls_train", num(model.tau_cls_train));
  set("model.dropout", num(model.dropout));
  set("model.max_positions", std::to_string(model.max_positions));
  set("train.alpha", num(train.alpha));
  set("train.beta", num(train.beta));
  set("train.smoothing", smoothing_name(train.smoothing));
  set("train.lr", num(train.lr));
  set("train.warmup_steps", std::to_string(train.warmup_steps));
  set("train.weight_decay", num(train.weight_decay));
  set("train.clip_norm", num(train.clip_norm));
  set("train.epochs", std::to_string(train.epochs));
  set("train.batch_size", std::to_string(train.batch_size));
  set("train.seed", std::to_string(train.seed));
  set("train.stop_at_loss_lm", num(train.stop_at_loss_lm));
  set("train.val_every", std::to_string(train.val_every));
  set("train.zero_guidance", train.zero_guidance ? "true" : "false");
  set("decode.beam_size", std::to_string(decode.beam_size));
  set("decode.length_penalty", num(decode.length_penalty));
  set("decode.block_ngram", std::to_string(decode.block_ngram));
  set("decode.min_len", std::to_string(decode.min_len));
  set("decode.max_len", std::to_string(decode.max_len));
  set("decode.tau", num(decode.tau));
  set("decode.estimation", estimation_name(decode.estimation));
  set("decode.emit_probs", decode.emit_probs ? "true" : "false");
  set("corpus.max_src", std::to_string(max_src));
  set("corpus.max_tgt", std::to_string(max_tgt));
  set("salience.percentiles", join_fractions(percentiles));
  set("run.seed", std::to_string(seed));
  return f;
}

void RunConfig::write_effective(const std::string& out_dir) const {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/effective_config.ini");
  if (!out) throw InputError("cannot write effective config in " + out_dir);
  out << to_config().serialize();
}

}  // namespace season::config
