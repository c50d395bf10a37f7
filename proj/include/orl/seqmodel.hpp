#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "orl/alignment.hpp"
#include "orl/matrix.hpp"
#include "orl/types.hpp"

namespace orl {

struct ModelConfig {
  int hidden_dim = 64;
  int embed_dim = 32;
  int feature_dim = 16;
  int n_classes = 10;
  int attention_dim = 0;  // 0 disables the attention block

  int vocab_size() const { return n_classes + 2; }
  int start_token() const { return n_classes; }
  int end_token() const { return n_classes + 1; }
  bool has_attention() const { return attention_dim > 0; }
  // embedding, optionally concatenated with the attention context
  int input_dim() const { return embed_dim + (has_attention() ? feature_dim : 0); }

  void validate() const;
};

// All learnable weights. Gradients reuse this struct (same shapes).
struct ModelParameters {
  ModelConfig config;

  Matrix w_forget, w_input, w_output, w_cell;  // hidden x input_dim
  Matrix u_forget, u_input, u_output, u_cell;  // hidden x hidden
  Vector b_forget, b_input, b_output, b_cell;  // hidden

  Matrix embedding;  // vocab x embed

  Matrix w_out;  // vocab x hidden
  Vector b_out;  // vocab

  Matrix w_encode;  // hidden x feature (initializes the hidden state)
  Vector b_encode;  // hidden

  Matrix attn_hidden;   // attention x hidden
  Matrix attn_feature;  // attention x feature
  Vector attn_bias;     // attention
  Vector attn_score;    // attention

  explicit ModelParameters(const ModelConfig& cfg);

  // uniform in [-0.08, 0.08]
  static ModelParameters random_init(const ModelConfig& cfg, std::uint64_t seed);

  // Blocks in checkpoint order (see docs/formats.md).
  std::vector<std::pair<std::string_view, std::span<double>>> named_blocks();
  std::vector<std::pair<std::string_view, std::span<const double>>> named_blocks() const;

  std::size_t parameter_count() const;
  void set_zero();
  bool all_finite() const;
};

struct DecoderState {
  Vector h;
  Vector c;
  int t = 0;
};

// h = w_encode * feature + b_encode, c = 0, t = 0
DecoderState init_state(std::span<const double> feature, const ModelParameters& params);

// One LSTM cell update: sigmoid gates, tanh candidate, tanh-squashed output.
DecoderState lstm_step(std::span<const double> x, const DecoderState& state,
                       const ModelParameters& params);

struct AttentionResult {
  Vector context;  // feature_dim, the weight-averaged grid cell
  Vector weights;  // one per grid cell, softmax-normalized
  Matrix tanh_pre;  // grid x attention_dim, cached for the backward pass
};

// Additive attention over the sample's spatial grid, queried by the previous
// hidden state.
AttentionResult attention_context(std::span<const double> h_prev, const SampleRecord& sample,
                                  const ModelParameters& params);

struct DecodeOutput {
  Vector probs;  // softmax column over the full vocabulary
  DecoderState state;
};

// Embeds prev_label (plus attention context when enabled), runs the LSTM,
// projects to class probabilities.
DecodeOutput decode_step(int prev_label, const DecoderState& state, const SampleRecord& sample,
                         const ModelParameters& params, bool use_attention);

// Feed argmax predictions back until the end token or max_steps; start/end
// tokens never appear in the returned sequence.
std::vector<int> greedy_decode(const SampleRecord& sample, const ModelParameters& params,
                               int max_steps, bool use_attention);

// Everything the backward pass needs from one decode step.
struct StepTape {
  int fed_label = -1;
  Vector x;  // input_dim
  Vector gate_forget, gate_input, gate_output, candidate;  // hidden
  Vector cell, tanh_cell, hidden;                           // hidden
  Vector probs;                                             // vocab
  Vector attn_weights;                                      // grid (attention only)
  Matrix attn_tanh;                                         // grid x attention_dim
};

struct ForwardTape {
  Vector h_init;
  std::vector<StepTape> steps;

  PredictionMatrix predictions() const;
  std::vector<int> fed_labels() const;
};

// Runs n_steps of decoding. With forced_inputs the given token sequence is
// fed; otherwise the model feeds back its own argmax predictions starting
// from the start token.
ForwardTape run_forward(const SampleRecord& sample, const ModelParameters& params, int n_steps,
                        bool use_attention, const std::vector<int>* forced_inputs = nullptr);

// Analytic gradients of sequence_loss(tape predictions, targets) w.r.t. every
// parameter. The targets and the fed token indices are treated as constants.
ModelParameters run_backward(const SampleRecord& sample, const ModelParameters& params,
                             const ForwardTape& tape, const AlignmentMatrix& targets,
                             bool use_attention);

struct ForwardOptions {
  bool teacher_forcing = false;
  // per-call shuffle seed, required by strategy random_order
  std::optional<std::uint64_t> order_seed;
};

struct ForwardBackwardResult {
  double loss = 0.0;
  ModelParameters gradients;
  PredictionMatrix predictions;
  AlignmentMatrix targets;
  std::vector<int> fed_labels;
  double alignment_ms = 0.0;  // wall time spent aligning (mla/pla only)
};

// Decodes |labels| + 1 steps, builds targets per the strategy, returns the
// loss and its exact gradients with the alignment held constant.
ForwardBackwardResult forward_backward(const SampleRecord& sample, const ModelParameters& params,
                                       OrderingStrategy strategy, bool use_attention,
                                       const LabelVocabulary& vocab,
                                       const ForwardOptions& options = {});

// Versioned textual checkpoint, layout documented in docs/formats.md.
void save_model(const ModelParameters& params, const std::filesystem::path& path);
ModelParameters load_model(const std::filesystem::path& path);

}  // namespace orl
