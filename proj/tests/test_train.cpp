#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "season/checkpoint.hpp"
#include "season/train.hpp"
#include "support/synthetic.hpp"

using namespace season;
using tensor::Tape;
using tensor::Tensor;

namespace {

struct TinySetup {
  std::vector<corpus::RawDocument> docs;
  corpus::Vocabulary vocab;
  std::vector<salience::LabeledDocument> labeled;
  salience::ThresholdSpec spec;
  model::ModelConfig mcfg;

  explicit TinySetup(int n_docs = 4, uint64_t seed = 1) {
    testing::SyntheticOptions opt;
    opt.n_docs = n_docs;
    opt.seed = seed;
    opt.paraphrase = false;
    docs = testing::make_synthetic_corpus(opt);
    vocab = corpus::Vocabulary::build(docs, 2000);
    std::tie(labeled, spec) =
        salience::label_corpus(docs, std::vector<double>{0.15, 0.5});
    mcfg.d_model = 24;
    mcfg.n_heads = 2;
    mcfg.n_enc_layers = 1;
    mcfg.n_dec_layers = 1;
    mcfg.ffn_dim = 48;
    mcfg.vocab_size = vocab.size();
    mcfg.dropout = 0.0;
    mcfg.max_positions = 128;
  }

  std::vector<train::TrainExample> examples() const {
    return train::make_train_examples(labeled, vocab, 128, 32);
  }
};

}  // namespace

TEST_CASE("loss_cls hand values") {
  Tape tape;
  // Perfect predictions on one-hot targets: zero (log clamped at 1e-12).
  const std::vector<double> onehot = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  Tensor probs = tape.leaf({2, 3}, onehot);
  CHECK(train::loss_cls(probs, onehot).item() ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Uniform predictions: ln 3 against any normalized target.
  const std::vector<double> uniform(6, 1.0 / 3.0);
  Tensor up = tape.leaf({2, 3}, uniform);
  CHECK(train::loss_cls(up, onehot).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
  const std::vector<double> smoothed = {0.1, 0.8, 0.1, 0.1, 0.8, 0.1};
  CHECK(train::loss_cls(up, smoothed).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("loss_lm hand values") {
  Tape tape;
  const int v = 7;
  // Near-deterministic logits on the gold tokens: loss ~ 0.
  std::vector<double> logits(3 * v, 0.0);
  const std::vector<int> targets = {5, 6, 5};
  for (int k = 0; k < 3; ++k) logits[k * v + targets[k]] = 60.0;
  CHECK(train::loss_lm(tape.leaf({3, v}, logits), targets).item() ==
        doctest::Approx(0.0).epsilon(1e-9));

  // Uniform logits: ln V.
  std::vector<double> flat(2 * v, 0.25);
  const std::vector<int> two = {1, 2};
  CHECK(train::loss_lm(tape.leaf({2, v}, flat), two).item() ==
        doctest::Approx(std::log(double(v))).epsilon(1e-12));

  // One-token target equals that token's negative log-probability.
  std::vector<double> one(v, 0.0);
  one[3] = 1.7;
  Tensor lg = tape.leaf({1, v}, one);
  const std::vector<int> single = {3};
  double z = 0.0;
  for (double x : one) z += std::exp(x - 1.7);
  CHECK(train::loss_lm(lg, single).item() ==
        doctest::Approx(std::log(z)).epsilon(1e-12));
}

TEST_CASE("loss_total combines with alpha") {
  Tape tape;
  Tensor lm = tape.scalar(2.0);
  Tensor cls = tape.scalar(1.0);
  CHECK(train::loss_total(lm, cls, 0.0).item() == doctest::Approx(2.0));
  CHECK(train::loss_total(lm, cls, 1.5).item() == doctest::Approx(3.5));
}

TEST_CASE("warmup schedule is linear then constant") {
  train::TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.warmup_steps = 100;
  CHECK(train::lr_at_step(cfg, 1) == doctest::Approx(1e-5));
  CHECK(train::lr_at_step(cfg, 50) == doctest::Approx(5e-4));
  CHECK(train::lr_at_step(cfg, 100) == doctest::Approx(1e-3));
  CHECK(train::lr_at_step(cfg, 5000) == doctest::Approx(1e-3));
  cfg.warmup_steps = 0;
  CHECK(train::lr_at_step(cfg, 1) == doctest::Approx(1e-3));
}

TEST_CASE("optimizer: zero gradients and zero decay leave parameters alone") {
  auto w = tensor::make_node({2, 2}, true);
  w->value = {1.0, -2.0, 3.0, -4.0};
  w->ensure_grad();
  train::AdamW opt({{"w", w}});
  const std::vector<double> before = w->value;
  opt.step(1e-3, 0.0, 0.1);
  CHECK(w->value == before);
}

TEST_CASE("optimizer clips the global norm before updating") {
  // Gradients (0.6, 0.8): global norm 1, clip 0.1 scales them by 0.1.
  auto w = tensor::make_node({2}, true);
  w->value = {0.0, 0.0};
  w->ensure_grad();
  w->grad = {0.6, 0.8};
  train::AdamW opt({{"w", w}});
  CHECK(opt.gradient_norm() == doctest::Approx(1.0));
  opt.step(1e-3, 0.0, 0.1);
  // First step: update = lr * g_clipped / (|g_clipped| + eps), elementwise.
  for (int i = 0; i < 2; ++i) {
    const double g = (i == 0 ? 0.06 : 0.08);
    const double expect = -1e-3 * g / (std::sqrt(g * g) + 1e-8);
    CHECK(w->value[i] == doctest::Approx(expect).epsilon(1e-9));
  }

  // Below the cap the gradient passes through unchanged: two optimizers,
  // one with a huge cap, must produce identical updates.
  auto a = tensor::make_node({3}, true);
  auto b = tensor::make_node({3}, true);
  a->value = b->value = {0.5, -0.25, 0.125};
  a->ensure_grad();
  b->ensure_grad();
  a->grad = b->grad = {0.01, -0.02, 0.015};
  train::AdamW oa({{"p", a}});
  train::AdamW ob({{"p", b}});
  oa.step(1e-3, 0.01, 0.1);    // norm ~0.027 < 0.1
  ob.step(1e-3, 0.01, 1e9);
  CHECK(a->value == b->value);
}

TEST_CASE("optimizer rejects non-finite gradients naming the parameter") {
  auto w = tensor::make_node({2}, true);
  w->ensure_grad();
  w->grad = {1.0, std::nan("")};
  train::AdamW opt({{"bad_param", w}});
  try {
    opt.step(1e-3, 0.0, 0.1);
    FAIL("expected NonFiniteGradient");
  } catch (const NonFiniteGradient& e) {
    CHECK(std::string(e.what()).find("bad_param") != std::string::npos);
  }
}

TEST_CASE("weight decay skips rank-1 parameters") {
  auto w = tensor::make_node({2, 2}, true);
  auto b = tensor::make_node({4}, true);
  w->value = {1.0, 1.0, 1.0, 1.0};
  b->value = {1.0, 1.0, 1.0, 1.0};
  w->ensure_grad();
  b->ensure_grad();
  train::AdamW opt({{"w", w}, {"b", b}});
  opt.step(1e-2, 0.5, 1e9);
  for (double v : b->value) CHECK(v == 1.0);          // no grad, no decay
  for (double v : w->value) CHECK(v < 1.0);           // decayed
}

TEST_CASE("with alpha=0 the classifier head receives no gradient") {
  TinySetup setup;
  model::Parameters params = model::Parameters::init(setup.mcfg, 7);
  const auto examples = setup.examples();
  const train::TrainExample& ex = examples[0];

  Tape tape;
  const model::EncoderOutput enc =
      model::encode(tape, ex.enc, params, setup.mcfg);
  const Tensor probs = model::salience_probs(tape, enc.sentence_states, params,
                                             setup.mcfg.tau_cls_train);
  std::vector<double> targets;
  for (int j = 0; j < ex.enc.n_sentences; ++j) {
    const auto t = salience::smooth_labels(ex.degrees[j], 3, 0.2);
    targets.insert(targets.end(), t.distribution.begin(),
                   t.distribution.end());
  }
  const Tensor cls = train::loss_cls(probs, targets);
  const Tensor gold = model::salience_embedding_gold(
      tape, std::span<const int>(ex.degrees.data(), ex.enc.n_sentences),
      params);
  const Tensor zeta = model::broadcast_salience(gold, enc.sent_index);
  const std::vector<int> input(ex.enc.target_ids.begin(),
                               ex.enc.target_ids.end() - 1);
  const std::vector<int> predict(ex.enc.target_ids.begin() + 1,
                                 ex.enc.target_ids.end());
  const Tensor logits =
      model::decoder_forward(tape, input, enc, zeta, params, setup.mcfg);
  const Tensor lm = train::loss_lm(logits, predict);
  tape.backward(train::loss_total(lm, cls, /*alpha=*/0.0));

  // Training feeds ground-truth guidance, so the classifier head is outside
  // the token-loss path entirely.
  for (double g : params.classifier_weight->grad) CHECK(g == 0.0);
  for (double g : params.classifier_bias->grad) CHECK(g == 0.0);
  // The salience embeddings do feed the decoder via the gold lookup.
  double emb_grad = 0.0;
  for (double g : params.salience_embeddings->grad) emb_grad += std::fabs(g);
  CHECK(emb_grad > 0.0);
  // Shared encoder still learns from the token loss.
  double enc_grad = 0.0;
  for (double g : params.encoder[0].self_attn.wq->grad) {
    enc_grad += std::fabs(g);
  }
  CHECK(enc_grad > 0.0);
}

TEST_CASE("full multi-task loss passes a finite-difference check") {
  TinySetup setup(3, 5);
  model::ModelConfig mcfg = setup.mcfg;
  mcfg.d_model = 16;
  mcfg.ffn_dim = 24;
  model::Parameters params = model::Parameters::init(mcfg, 11);
  // Nonzero salience embeddings so their gradient path is exercised.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> dist(0.0, 0.1);
  for (double& v : params.salience_embeddings->value) v = dist(rng);

  const auto examples =
      train::make_train_examples(setup.labeled, setup.vocab, 64, 16);
  const train::TrainExample& ex = examples[0];
  std::vector<double> targets;
  for (int j = 0; j < ex.enc.n_sentences; ++j) {
    const auto t = salience::smooth_labels(ex.degrees[j], 3, 0.2);
    targets.insert(targets.end(), t.distribution.begin(),
                   t.distribution.end());
  }

  auto build_loss = [&](Tape& tape) {
    const model::EncoderOutput enc = model::encode(tape, ex.enc, params, mcfg);
    const Tensor probs = model::salience_probs(tape, enc.sentence_states,
                                               params, mcfg.tau_cls_train);
    const Tensor cls = train::loss_cls(probs, targets);
    const Tensor gold = model::salience_embedding_gold(
        tape, std::span<const int>(ex.degrees.data(), ex.enc.n_sentences),
        params);
    const Tensor zeta = model::broadcast_salience(gold, enc.sent_index);
    const std::vector<int> input(ex.enc.target_ids.begin(),
                                 ex.enc.target_ids.end() - 1);
    const std::vector<int> predict(ex.enc.target_ids.begin() + 1,
                                   ex.enc.target_ids.end());
    const Tensor logits =
        model::decoder_forward(tape, input, enc, zeta, params, mcfg);
    const Tensor lm = train::loss_lm(logits, predict);
    return train::loss_total(lm, cls, 1.5);
  };
  auto loss_value = [&]() {
    Tape tape;
    return build_loss(tape).item();
  };

  {
    Tape tape;
    tape.backward(build_loss(tape));
  }
  const auto named = params.named();
  const auto report = tensor::finite_diff_check(loss_value, named, 1e-4, 8,
                                                99);
  CAPTURE(report.worst_param);
  CHECK(report.max_group_rel_error <= 1e-4);
  // Per-coordinate ratios are noisier (truncation over tiny gradients).
  CHECK(report.max_rel_error <= 1e-2);
}

TEST_CASE("training overfits a tiny corpus and is deterministic") {
  TinySetup setup(4, 9);
  const auto examples = setup.examples();

  train::TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 2;
  cfg.lr = 3e-3;
  cfg.warmup_steps = 20;
  cfg.seed = 3;

  auto run = [&](int epochs) {
    train::TrainConfig c = cfg;
    c.epochs = epochs;
    model::Parameters params = model::Parameters::init(setup.mcfg, 42);
    return train::train(params, setup.mcfg, c, examples, {}, {});
  };

  const train::TrainResult a = run(40);
  REQUIRE(a.log.size() == 40);
  CHECK(a.log.back().loss_total < a.log.front().loss_total);
  CHECK(a.log[39].loss_lm < a.log[0].loss_lm);

  const train::TrainResult b = run(40);
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].loss_lm == b.log[i].loss_lm);
    CHECK(a.log[i].loss_cls == b.log[i].loss_cls);
  }
}

TEST_CASE("resuming from the last checkpoint replays the same run") {
  TinySetup setup(4, 13);
  const auto examples = setup.examples();
  const std::string dir_a =
      std::filesystem::temp_directory_path() / "season_resume_a";
  const std::string dir_b =
      std::filesystem::temp_directory_path() / "season_resume_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  train::TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.lr = 1e-3;
  cfg.warmup_steps = 10;
  cfg.seed = 5;

  // Uninterrupted run: 6 epochs.
  model::Parameters straight = model::Parameters::init(setup.mcfg, 17);
  train::TrainConfig cfg6 = cfg;
  cfg6.epochs = 6;
  train::TrainOptions opts_a;
  opts_a.out_dir = dir_a;
  const train::TrainResult full =
      train::train(straight, setup.mcfg, cfg6, examples, {}, opts_a);

  // Interrupted run: 3 epochs, then resume for 3 more.
  model::Parameters part = model::Parameters::init(setup.mcfg, 17);
  train::TrainConfig cfg3 = cfg;
  cfg3.epochs = 3;
  train::TrainOptions opts_b;
  opts_b.out_dir = dir_b;
  train::train(part, setup.mcfg, cfg3, examples, {}, opts_b);

  const model::Checkpoint last =
      model::load_checkpoint(dir_b + "/last.ckpt.json");
  model::Parameters resumed = model::Parameters::init(setup.mcfg, 0);
  {
    const auto src = last.params.named();
    const auto dst = resumed.named();
    for (size_t i = 0; i < src.size(); ++i) {
      dst[i].node->value = src[i].node->value;
    }
  }
  train::TrainOptions opts_c;
  opts_c.out_dir = dir_b;
  opts_c.resume_state_json = last.train_state_json;
  const train::TrainResult tail =
      train::train(resumed, setup.mcfg, cfg6, examples, {}, opts_c);

  REQUIRE(tail.log.size() == 3);  // epochs 4..6
  for (int e = 3; e < 6; ++e) {
    CHECK(tail.log[e - 3].loss_lm == full.log[e].loss_lm);
    CHECK(tail.log[e - 3].loss_total == full.log[e].loss_total);
  }
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("make_train_examples requires labels") {
  TinySetup setup;
  auto unlabeled = setup.labeled;
  unlabeled[0].degrees.clear();
  CHECK_THROWS_AS(
      train::make_train_examples(unlabeled, setup.vocab, 128, 32),
      MissingLabels);
}
