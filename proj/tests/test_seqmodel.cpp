#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numeric>

#include "orl/rng.hpp"
#include "orl/seqmodel.hpp"
#include "support/reference_model.hpp"

using namespace orl;

namespace {

ModelConfig small_config(bool attention) {
  ModelConfig cfg;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 6;
  cfg.feature_dim = 5;
  cfg.n_classes = 4;
  cfg.attention_dim = attention ? 7 : 0;
  return cfg;
}

LabelVocabulary vocab_for(const ModelConfig& cfg, std::uint64_t seed = 1) {
  LabelVocabulary vocab;
  Rng rng(seed);
  for (int c = 0; c < cfg.n_classes; ++c) {
    vocab.names.push_back("c" + std::to_string(c));
    vocab.frequencies.push_back(static_cast<std::int64_t>(rng.below(1000)));
  }
  return vocab;
}

SampleRecord random_sample(const ModelConfig& cfg, int n_labels, std::uint64_t seed,
                           int grid_cells = 4) {
  Rng rng(seed);
  SampleRecord sample;
  sample.global_feature.resize(cfg.feature_dim);
  for (double& v : sample.global_feature) v = rng.uniform(-1.0, 1.0);
  sample.spatial_features.assign(grid_cells, Vector(cfg.feature_dim));
  for (Vector& cell : sample.spatial_features) {
    for (double& v : cell) v = rng.uniform(-1.0, 1.0);
  }
  std::vector<int> pool(cfg.n_classes);
  std::iota(pool.begin(), pool.end(), 0);
  rng.shuffle(pool);
  sample.labels.assign(pool.begin(), pool.begin() + n_labels);
  return sample;
}

double max_abs_gradient(const ModelParameters& grads) {
  double max_abs = 0.0;
  for (const auto& [name, block] : grads.named_blocks()) {
    (void)name;
    for (double v : block) max_abs = std::max(max_abs, std::abs(v));
  }
  return max_abs;
}

}  // namespace

TEST_CASE("init_state applies the encoder projection") {
  const ModelConfig cfg = small_config(false);

  ModelParameters zero(cfg);
  const Vector nothing(cfg.feature_dim, 0.0);
  DecoderState state = init_state(nothing, zero);
  for (double v : state.h) CHECK(v == 0.0);
  for (double v : state.c) CHECK(v == 0.0);
  CHECK(state.t == 0);

  // identity projection carries the feature through
  ModelConfig square = cfg;
  square.feature_dim = cfg.hidden_dim;
  ModelParameters identity(square);
  for (int k = 0; k < square.hidden_dim; ++k) identity.w_encode(k, k) = 1.0;
  Vector feature(square.feature_dim);
  Rng rng(3);
  for (double& v : feature) v = rng.uniform(-2.0, 2.0);
  state = init_state(feature, identity);
  for (int k = 0; k < square.hidden_dim; ++k) CHECK(state.h[k] == feature[k]);

  // seeded projection matches an independent dense-algebra route
  const ModelParameters params = ModelParameters::random_init(cfg, 42);
  Vector seeded(cfg.feature_dim);
  for (double& v : seeded) v = rng.uniform(-1.0, 1.0);
  state = init_state(seeded, params);
  const Eigen::VectorXd expected = testing::to_eigen(params.w_encode) * testing::to_eigen(seeded) +
                                   testing::to_eigen(params.b_encode);
  for (int k = 0; k < cfg.hidden_dim; ++k) {
    CHECK(state.h[k] == doctest::Approx(expected[k]).epsilon(1e-14));
  }

  Vector wrong(cfg.feature_dim + 1, 0.0);
  CHECK_THROWS_AS(init_state(wrong, params), ValidationError);
}

TEST_CASE("lstm_step closed forms at zero weights") {
  const ModelConfig cfg = small_config(false);
  const ModelParameters zero(cfg);
  const Vector x(cfg.input_dim(), 0.3);

  DecoderState state;
  state.h.assign(cfg.hidden_dim, 0.0);
  state.c.assign(cfg.hidden_dim, 0.0);
  DecoderState next = lstm_step(x, state, zero);
  for (double v : next.h) CHECK(v == 0.0);  // sigma(0)=0.5, tanh(0)=0
  for (double v : next.c) CHECK(v == 0.0);
  CHECK(next.t == 1);

  // with c_prev = v: c = 0.5 v, h = 0.5 tanh(0.5 v)
  Rng rng(9);
  for (double& v : state.c) v = rng.uniform(-2.0, 2.0);
  next = lstm_step(x, state, zero);
  for (int k = 0; k < cfg.hidden_dim; ++k) {
    CHECK(next.c[k] == doctest::Approx(0.5 * state.c[k]).epsilon(1e-14));
    CHECK(next.h[k] == doctest::Approx(0.5 * std::tanh(0.5 * state.c[k])).epsilon(1e-14));
  }
}

TEST_CASE("lstm_step matches the scalar-loop reference and is stateless") {
  const ModelConfig cfg = small_config(false);
  const ModelParameters params = ModelParameters::random_init(cfg, 7);
  Rng rng(11);
  Vector x(cfg.input_dim());
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  DecoderState state;
  state.h.resize(cfg.hidden_dim);
  state.c.resize(cfg.hidden_dim);
  for (double& v : state.h) v = rng.uniform(-0.9, 0.9);
  for (double& v : state.c) v = rng.uniform(-1.5, 1.5);

  const DecoderState next = lstm_step(x, state, params);
  Vector h_ref, c_ref;
  testing::reference_lstm_step(x, state.h, state.c, params, h_ref, c_ref);
  for (int k = 0; k < cfg.hidden_dim; ++k) {
    CHECK(next.h[k] == doctest::Approx(h_ref[k]).epsilon(1e-13));
    CHECK(next.c[k] == doctest::Approx(c_ref[k]).epsilon(1e-13));
    CHECK(std::abs(next.h[k]) < 1.0);  // tanh-bounded output gate product
  }
  const DecoderState again = lstm_step(x, state, params);
  CHECK(again.h == next.h);
  CHECK(again.c == next.c);
}

TEST_CASE("decode_step yields uniform probabilities at zero weights") {
  const ModelConfig cfg = small_config(false);
  const ModelParameters zero(cfg);
  const SampleRecord sample = random_sample(cfg, 2, 21);
  DecoderState state = init_state(sample.global_feature, zero);
  const DecodeOutput out = decode_step(cfg.start_token(), state, sample, zero, false);
  for (double p : out.probs) CHECK(p == doctest::Approx(1.0 / cfg.vocab_size()).epsilon(1e-12));
}

TEST_CASE("attention over a single cell is that cell") {
  ModelConfig cfg = small_config(true);
  const ModelParameters params = ModelParameters::random_init(cfg, 5);
  SampleRecord sample = random_sample(cfg, 1, 33, 1);
  Vector h_prev(cfg.hidden_dim, 0.25);
  const AttentionResult attention = attention_context(h_prev, sample, params);
  REQUIRE(attention.weights.size() == 1);
  CHECK(attention.weights[0] == doctest::Approx(1.0));
  for (int d = 0; d < cfg.feature_dim; ++d) {
    CHECK(attention.context[d] == doctest::Approx(sample.spatial_features[0][d]).epsilon(1e-14));
  }
}

TEST_CASE("decode_step column matches the oracle chain") {
  const ModelConfig cfg = small_config(false);
  const ModelParameters params = ModelParameters::random_init(cfg, 17);
  const SampleRecord sample = random_sample(cfg, 2, 23);
  const DecoderState state = init_state(sample.global_feature, params);
  const int prev = cfg.start_token();
  const DecodeOutput out = decode_step(prev, state, sample, params, false);

  // embedding -> lstm -> affine -> softmax, through the reference pieces
  Vector x(params.config.embed_dim);
  for (int d = 0; d < cfg.embed_dim; ++d) x[d] = params.embedding(prev, d);
  Vector h_ref, c_ref;
  testing::reference_lstm_step(x, state.h, state.c, params, h_ref, c_ref);
  Eigen::VectorXd logits = testing::to_eigen(params.w_out) * testing::to_eigen(h_ref) +
                           testing::to_eigen(params.b_out);
  Eigen::VectorXd probs = (logits.array() - logits.maxCoeff()).exp();
  probs /= probs.sum();
  double column_sum = 0.0;
  for (int r = 0; r < cfg.vocab_size(); ++r) {
    CHECK(out.probs[r] == doctest::Approx(probs[r]).epsilon(1e-12));
    column_sum += out.probs[r];
    CHECK(out.probs[r] > 0.0);
  }
  CHECK(column_sum == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(decode_step(cfg.vocab_size(), state, sample, params, false), ValidationError);
}

TEST_CASE("greedy_decode stops on the end token and respects max_steps") {
  const ModelConfig cfg = small_config(false);
  // rig the output bias so the end token always wins
  ModelParameters params(cfg);
  params.b_out[cfg.end_token()] = 10.0;
  const SampleRecord sample = random_sample(cfg, 2, 31);
  CHECK(greedy_decode(sample, params, 8, false).empty());

  // and with a never-ending favourite class, the loop bound holds
  ModelParameters loopy(cfg);
  loopy.b_out[1] = 10.0;
  const std::vector<int> decoded = greedy_decode(sample, loopy, 5, false);
  CHECK(decoded.size() <= 5);
  CHECK_THROWS_AS(greedy_decode(sample, loopy, 0, false), ValidationError);
}

TEST_CASE("rigged near-one-hot predictions give near-zero loss and gradients") {
  ModelConfig cfg;
  cfg.n_classes = 2;  // A=0, B=1, start=2, end=3
  cfg.hidden_dim = 4;
  cfg.embed_dim = 4;
  cfg.feature_dim = 3;
  ModelParameters params(cfg);
  for (int k = 0; k < 4; ++k) {
    params.embedding(k, k) = 5.0;  // embeddings ~ 5 * one-hot
    params.w_cell(k, k) = 1.0;     // candidate copies the input token
    params.b_output[k] = 40.0;     // output gate saturated open
  }
  // h encodes the previous token; map start->A and A->end with a large margin
  params.w_out(0, 2) = 500.0;
  params.w_out(3, 0) = 500.0;

  SampleRecord sample;
  sample.global_feature.assign(cfg.feature_dim, 0.0);
  sample.labels = {0};
  const LabelVocabulary vocab = vocab_for(cfg);
  const ForwardBackwardResult result =
      forward_backward(sample, params, OrderingStrategy::mla, false, vocab);
  CHECK(result.loss < 1e-9);
  CHECK(max_abs_gradient(result.gradients) < 1e-9);
  CHECK(result.targets.step_to_label == std::vector<int>{0, 3});
}

TEST_CASE("analytic gradients match central finite differences") {
  for (const bool attention : {false, true}) {
    CAPTURE(attention);
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.n_classes = 4;  // vocab m = 6
    cfg.embed_dim = 5;
    cfg.feature_dim = 4;
    cfg.attention_dim = attention ? 6 : 0;
    const LabelVocabulary vocab = vocab_for(cfg);

    Rng seeds(2024);
    for (int trial = 0; trial < 3; ++trial) {
      const ModelParameters params = ModelParameters::random_init(cfg, seeds.next());
      const SampleRecord sample =
          random_sample(cfg, 1 + trial % 3, seeds.next());
      for (const OrderingStrategy strategy :
           {OrderingStrategy::mla, OrderingStrategy::pla, OrderingStrategy::frequent_first}) {
        const ForwardBackwardResult result =
            forward_backward(sample, params, strategy, attention, vocab);
        const testing::GradCheckResult check = testing::finite_difference_check(
            sample, params, result.fed_labels, result.targets.step_to_label, attention);
        CAPTURE(check.worst_block);
        CHECK(check.max_relative_error < 1e-4);
      }
    }
  }
}

TEST_CASE("forward_backward loss equals sequence_loss on its own outputs") {
  const ModelConfig cfg = small_config(true);
  const LabelVocabulary vocab = vocab_for(cfg);
  const ModelParameters params = ModelParameters::random_init(cfg, 77);
  const SampleRecord sample = random_sample(cfg, 3, 78);
  const ForwardBackwardResult result =
      forward_backward(sample, params, OrderingStrategy::pla, true, vocab);
  CHECK(result.loss == sequence_loss(result.predictions, result.targets));
  CHECK(std::isfinite(result.loss));
  CHECK(result.loss >= 0.0);
}

TEST_CASE("mla loss never exceeds the fixed-order loss for the same parameters") {
  const ModelConfig cfg = small_config(false);
  const LabelVocabulary vocab = vocab_for(cfg);
  Rng seeds(555);
  for (int trial = 0; trial < 25; ++trial) {
    const ModelParameters params = ModelParameters::random_init(cfg, seeds.next());
    const SampleRecord sample = random_sample(cfg, 1 + seeds.below_int(3), seeds.next());
    const double mla_loss =
        forward_backward(sample, params, OrderingStrategy::mla, false, vocab).loss;
    const double fixed_loss =
        forward_backward(sample, params, OrderingStrategy::frequent_first, false, vocab).loss;
    CHECK(mla_loss <= fixed_loss + 1e-9);
  }
}

TEST_CASE("teacher forcing feeds the target sequence") {
  const ModelConfig cfg = small_config(false);
  const LabelVocabulary vocab = vocab_for(cfg);
  const ModelParameters params = ModelParameters::random_init(cfg, 99);
  const SampleRecord sample = random_sample(cfg, 3, 100);
  ForwardOptions options;
  options.teacher_forcing = true;
  const ForwardBackwardResult result = forward_backward(
      sample, params, OrderingStrategy::frequent_first, false, vocab, options);
  const std::vector<int> expected_order =
      fixed_order_targets(sample.labels, OrderingStrategy::frequent_first, vocab);
  REQUIRE(result.fed_labels.size() == expected_order.size());
  CHECK(result.fed_labels[0] == cfg.start_token());
  for (std::size_t t = 1; t < result.fed_labels.size(); ++t) {
    CHECK(result.fed_labels[t] == expected_order[t - 1]);
  }
}

TEST_CASE("checkpoint round trip preserves every block") {
  const ModelConfig cfg = small_config(true);
  const ModelParameters params = ModelParameters::random_init(cfg, 404);
  const auto path = std::filesystem::temp_directory_path() / "orl_test_model.orlmodel";
  save_model(params, path);
  const ModelParameters loaded = load_model(path);
  CHECK(loaded.config.hidden_dim == cfg.hidden_dim);
  CHECK(loaded.config.attention_dim == cfg.attention_dim);
  const auto original_blocks = params.named_blocks();
  const auto loaded_blocks = loaded.named_blocks();
  REQUIRE(original_blocks.size() == loaded_blocks.size());
  for (std::size_t b = 0; b < original_blocks.size(); ++b) {
    REQUIRE(original_blocks[b].second.size() == loaded_blocks[b].second.size());
    for (std::size_t i = 0; i < original_blocks[b].second.size(); ++i) {
      CHECK(original_blocks[b].second[i] == loaded_blocks[b].second[i]);
    }
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_model("/nonexistent/model.orlmodel"), RuntimeError);
}
