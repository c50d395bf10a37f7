#include "orl/seqmodel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "orl/rng.hpp"

namespace orl {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_feature(const SampleRecord& sample, const ModelConfig& cfg) {
  if (static_cast<int>(sample.global_feature.size()) != cfg.feature_dim)
    throw ValidationError("seqmodel: global feature dimension mismatch");
}

void check_attention_inputs(const SampleRecord& sample, const ModelParameters& params,
                            bool use_attention) {
  if (!use_attention) return;
  if (!params.config.has_attention())
    throw ValidationError("seqmodel: parameters were built without attention weights");
  if (sample.spatial_features.empty())
    throw ValidationError("seqmodel: attention needs spatial features");
  for (const Vector& cell : sample.spatial_features) {
    if (static_cast<int>(cell.size()) != params.config.feature_dim)
      throw ValidationError("seqmodel: spatial feature dimension mismatch");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (hidden_dim < 1 || embed_dim < 1 || feature_dim < 1 || n_classes < 1)
    throw ValidationError("model config: dimensions must be >= 1");
  if (attention_dim < 0) throw ValidationError("model config: attention_dim must be >= 0");
}

ModelParameters::ModelParameters(const ModelConfig& cfg) : config(cfg) {
  cfg.validate();
  const int hidden = cfg.hidden_dim;
  const int input = cfg.input_dim();
  w_forget = Matrix(hidden, input);
  w_input = Matrix(hidden, input);
  w_output = Matrix(hidden, input);
  w_cell = Matrix(hidden, input);
  u_forget = Matrix(hidden, hidden);
  u_input = Matrix(hidden, hidden);
  u_output = Matrix(hidden, hidden);
  u_cell = Matrix(hidden, hidden);
  b_forget.assign(hidden, 0.0);
  b_input.assign(hidden, 0.0);
  b_output.assign(hidden, 0.0);
  b_cell.assign(hidden, 0.0);
  embedding = Matrix(cfg.vocab_size(), cfg.embed_dim);
  w_out = Matrix(cfg.vocab_size(), hidden);
  b_out.assign(cfg.vocab_size(), 0.0);
  w_encode = Matrix(hidden, cfg.feature_dim);
  b_encode.assign(hidden, 0.0);
  if (cfg.has_attention()) {
    attn_hidden = Matrix(cfg.attention_dim, hidden);
    attn_feature = Matrix(cfg.attention_dim, cfg.feature_dim);
    attn_bias.assign(cfg.attention_dim, 0.0);
    attn_score.assign(cfg.attention_dim, 0.0);
  }
}

ModelParameters ModelParameters::random_init(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParameters params(cfg);
  Rng rng(seed);
  for (auto& [name, block] : params.named_blocks()) {
    (void)name;
    for (double& v : block) v = rng.uniform(-0.08, 0.08);
  }
  return params;
}

std::vector<std::pair<std::string_view, std::span<double>>> ModelParameters::named_blocks() {
  std::vector<std::pair<std::string_view, std::span<double>>> blocks = {
      {"w_forget", w_forget.flat()}, {"w_input", w_input.flat()},
      {"w_output", w_output.flat()}, {"w_cell", w_cell.flat()},
      {"u_forget", u_forget.flat()}, {"u_input", u_input.flat()},
      {"u_output", u_output.flat()}, {"u_cell", u_cell.flat()},
      {"b_forget", b_forget},        {"b_input", b_input},
      {"b_output", b_output},        {"b_cell", b_cell},
      {"embedding", embedding.flat()},
      {"w_out", w_out.flat()},       {"b_out", b_out},
      {"w_encode", w_encode.flat()}, {"b_encode", b_encode},
  };
  if (config.has_attention()) {
    blocks.emplace_back("attn_hidden", attn_hidden.flat());
    blocks.emplace_back("attn_feature", attn_feature.flat());
    blocks.emplace_back("attn_bias", std::span<double>(attn_bias));
    blocks.emplace_back("attn_score", std::span<double>(attn_score));
  }
  return blocks;
}

std::vector<std::pair<std::string_view, std::span<const double>>> ModelParameters::named_blocks()
    const {
  auto& self = const_cast<ModelParameters&>(*this);
  std::vector<std::pair<std::string_view, std::span<const double>>> blocks;
  for (auto& [name, block] : self.named_blocks()) blocks.emplace_back(name, block);
  return blocks;
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t count = 0;
  for (const auto& [name, block] : named_blocks()) {
    (void)name;
    count += block.size();
  }
  return count;
}

void ModelParameters::set_zero() {
  for (auto& [name, block] : named_blocks()) {
    (void)name;
    std::fill(block.begin(), block.end(), 0.0);
  }
}

bool ModelParameters::all_finite() const {
  for (const auto& [name, block] : named_blocks()) {
    (void)name;
    for (double v : block) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

DecoderState init_state(std::span<const double> feature, const ModelParameters& params) {
  if (static_cast<int>(feature.size()) != params.config.feature_dim)
    throw ValidationError("init_state: feature dimension mismatch");
  DecoderState state;
  state.h.assign(params.config.hidden_dim, 0.0);
  matvec(params.w_encode, feature, state.h);
  axpy(1.0, params.b_encode, state.h);
  state.c.assign(params.config.hidden_dim, 0.0);
  state.t = 0;
  return state;
}

namespace {

struct LstmActivations {
  Vector gate_forget, gate_input, gate_output, candidate;
  Vector cell, tanh_cell, hidden;
};

LstmActivations lstm_forward(std::span<const double> x, const Vector& h_prev, const Vector& c_prev,
                             const ModelParameters& params) {
  const int hidden = params.config.hidden_dim;
  if (static_cast<int>(x.size()) != params.config.input_dim())
    throw ValidationError("lstm: input dimension mismatch");
  if (static_cast<int>(h_prev.size()) != hidden || static_cast<int>(c_prev.size()) != hidden)
    throw ValidationError("lstm: state dimension mismatch");

  LstmActivations act;
  auto preactivation = [&](const Matrix& w, const Matrix& u, const Vector& b) {
    Vector a = b;
    matvec_add(w, x, a);
    matvec_add(u, h_prev, a);
    return a;
  };
  act.gate_forget = preactivation(params.w_forget, params.u_forget, params.b_forget);
  act.gate_input = preactivation(params.w_input, params.u_input, params.b_input);
  act.gate_output = preactivation(params.w_output, params.u_output, params.b_output);
  act.candidate = preactivation(params.w_cell, params.u_cell, params.b_cell);
  act.cell.resize(hidden);
  act.tanh_cell.resize(hidden);
  act.hidden.resize(hidden);
  for (int k = 0; k < hidden; ++k) {
    act.gate_forget[k] = sigmoid(act.gate_forget[k]);
    act.gate_input[k] = sigmoid(act.gate_input[k]);
    act.gate_output[k] = sigmoid(act.gate_output[k]);
    act.candidate[k] = std::tanh(act.candidate[k]);
    act.cell[k] = act.gate_forget[k] * c_prev[k] + act.gate_input[k] * act.candidate[k];
    act.tanh_cell[k] = std::tanh(act.cell[k]);
    act.hidden[k] = act.gate_output[k] * act.tanh_cell[k];
    if (!std::isfinite(act.cell[k]) || !std::isfinite(act.hidden[k]))
      throw RuntimeError("lstm: non-finite state");
  }
  return act;
}

}  // namespace

DecoderState lstm_step(std::span<const double> x, const DecoderState& state,
                       const ModelParameters& params) {
  LstmActivations act = lstm_forward(x, state.h, state.c, params);
  DecoderState next;
  next.h = std::move(act.hidden);
  next.c = std::move(act.cell);
  next.t = state.t + 1;
  return next;
}

AttentionResult attention_context(std::span<const double> h_prev, const SampleRecord& sample,
                                  const ModelParameters& params) {
  if (!params.config.has_attention())
    throw ValidationError("attention_context: model has no attention weights");
  if (sample.spatial_features.empty())
    throw ValidationError("attention_context: sample has no spatial features");
  const int attn = params.config.attention_dim;
  const int feature = params.config.feature_dim;
  const int n_cells = static_cast<int>(sample.spatial_features.size());

  Vector query(attn, 0.0);  // shared across cells
  matvec(params.attn_hidden, h_prev, query);
  axpy(1.0, params.attn_bias, query);

  AttentionResult result;
  result.tanh_pre = Matrix(n_cells, attn);
  result.weights.resize(n_cells);
  for (int g = 0; g < n_cells; ++g) {
    const Vector& cell = sample.spatial_features[g];
    if (static_cast<int>(cell.size()) != feature)
      throw ValidationError("attention_context: spatial feature dimension mismatch");
    Vector pre = query;
    matvec_add(params.attn_feature, cell, pre);
    auto row = result.tanh_pre.row(g);
    for (int a = 0; a < attn; ++a) row[a] = std::tanh(pre[a]);
    result.weights[g] = dot(params.attn_score, row);
  }
  softmax_inplace(result.weights);
  result.context.assign(feature, 0.0);
  for (int g = 0; g < n_cells; ++g) {
    axpy(result.weights[g], sample.spatial_features[g], result.context);
  }
  return result;
}

namespace {

// Input vector for one decode step: embedding row, plus attention context.
Vector build_input(int prev_label, const Vector& h_prev, const SampleRecord& sample,
                   const ModelParameters& params, bool use_attention, StepTape* tape) {
  if (prev_label < 0 || prev_label >= params.config.vocab_size())
    throw ValidationError("decode: class index out of range");
  Vector x(params.config.input_dim());
  const auto emb = params.embedding.row(prev_label);
  std::copy(emb.begin(), emb.end(), x.begin());
  if (use_attention) {
    AttentionResult attention = attention_context(h_prev, sample, params);
    std::copy(attention.context.begin(), attention.context.end(),
              x.begin() + params.config.embed_dim);
    if (tape) {
      tape->attn_weights = std::move(attention.weights);
      tape->attn_tanh = std::move(attention.tanh_pre);
    }
  }
  return x;
}

Vector output_probs(const Vector& hidden, const ModelParameters& params) {
  Vector logits = params.b_out;
  matvec_add(params.w_out, hidden, logits);
  softmax_inplace(logits);
  return logits;
}

}  // namespace

DecodeOutput decode_step(int prev_label, const DecoderState& state, const SampleRecord& sample,
                         const ModelParameters& params, bool use_attention) {
  check_attention_inputs(sample, params, use_attention);
  const Vector x = build_input(prev_label, state.h, sample, params, use_attention, nullptr);
  DecoderState next = lstm_step(x, state, params);
  DecodeOutput out;
  out.probs = output_probs(next.h, params);
  out.state = std::move(next);
  return out;
}

std::vector<int> greedy_decode(const SampleRecord& sample, const ModelParameters& params,
                               int max_steps, bool use_attention) {
  if (max_steps < 1) throw ValidationError("greedy_decode: max_steps must be >= 1");
  check_feature(sample, params.config);
  check_attention_inputs(sample, params, use_attention);

  DecoderState state = init_state(sample.global_feature, params);
  int prev = params.config.start_token();
  std::vector<int> decoded;
  for (int step = 0; step < max_steps; ++step) {
    DecodeOutput out = decode_step(prev, state, sample, params, use_attention);
    const int label = argmax(out.probs);
    if (label == params.config.end_token()) break;
    if (label != params.config.start_token()) decoded.push_back(label);
    prev = label;
    state = std::move(out.state);
  }
  return decoded;
}

PredictionMatrix ForwardTape::predictions() const {
  if (steps.empty()) throw ValidationError("forward tape: empty");
  const int m = static_cast<int>(steps.front().probs.size());
  Matrix probs(m, static_cast<int>(steps.size()));
  for (int t = 0; t < static_cast<int>(steps.size()); ++t) {
    for (int r = 0; r < m; ++r) probs(r, t) = steps[t].probs[r];
  }
  return make_prediction_matrix(std::move(probs));
}

std::vector<int> ForwardTape::fed_labels() const {
  std::vector<int> fed;
  fed.reserve(steps.size());
  for (const StepTape& step : steps) fed.push_back(step.fed_label);
  return fed;
}

ForwardTape run_forward(const SampleRecord& sample, const ModelParameters& params, int n_steps,
                        bool use_attention, const std::vector<int>* forced_inputs) {
  if (n_steps < 1) throw ValidationError("run_forward: need at least one step");
  check_feature(sample, params.config);
  check_attention_inputs(sample, params, use_attention);
  if (forced_inputs && static_cast<int>(forced_inputs->size()) != n_steps)
    throw ValidationError("run_forward: forced input length mismatch");

  ForwardTape tape;
  DecoderState state = init_state(sample.global_feature, params);
  tape.h_init = state.h;
  int fed = params.config.start_token();
  for (int t = 0; t < n_steps; ++t) {
    if (forced_inputs) fed = (*forced_inputs)[t];
    StepTape step;
    step.fed_label = fed;
    step.x = build_input(fed, state.h, sample, params, use_attention, &step);
    LstmActivations act = lstm_forward(step.x, state.h, state.c, params);
    step.gate_forget = std::move(act.gate_forget);
    step.gate_input = std::move(act.gate_input);
    step.gate_output = std::move(act.gate_output);
    step.candidate = std::move(act.candidate);
    step.cell = std::move(act.cell);
    step.tanh_cell = std::move(act.tanh_cell);
    step.hidden = std::move(act.hidden);
    step.probs = output_probs(step.hidden, params);
    state.h = step.hidden;
    state.c = step.cell;
    state.t += 1;
    fed = argmax(step.probs);  // feedback for the next step
    tape.steps.push_back(std::move(step));
  }
  return tape;
}

ModelParameters run_backward(const SampleRecord& sample, const ModelParameters& params,
                             const ForwardTape& tape, const AlignmentMatrix& targets,
                             bool use_attention) {
  const ModelConfig& cfg = params.config;
  const int n = static_cast<int>(tape.steps.size());
  if (targets.n_steps() != n) throw ValidationError("run_backward: target length mismatch");
  const int hidden = cfg.hidden_dim;
  const int embed = cfg.embed_dim;
  const int feature = cfg.feature_dim;

  ModelParameters grads(cfg);
  Vector dh_next(hidden, 0.0);
  Vector dc_next(hidden, 0.0);

  for (int t = n - 1; t >= 0; --t) {
    const StepTape& step = tape.steps[t];
    const Vector& h_prev = t > 0 ? tape.steps[t - 1].hidden : tape.h_init;
    const Vector* c_prev = t > 0 ? &tape.steps[t - 1].cell : nullptr;

    // softmax + clamped cross-entropy; a clamped target contributes nothing
    const int target = targets.step_to_label[t];
    if (target < 0 || target >= cfg.vocab_size())
      throw ValidationError("run_backward: target label out of range");
    Vector dlogits(cfg.vocab_size(), 0.0);
    if (step.probs[target] > kProbFloor) {
      dlogits = step.probs;
      dlogits[target] -= 1.0;
    }
    outer_add(grads.w_out, dlogits, step.hidden);
    axpy(1.0, dlogits, grads.b_out);

    Vector dh = dh_next;
    matvec_transpose_add(params.w_out, dlogits, dh);
    Vector dc = dc_next;

    // h = o * tanh(c)
    Vector d_gate_output(hidden), d_gate_forget(hidden), d_gate_input(hidden),
        d_candidate(hidden);
    for (int k = 0; k < hidden; ++k) {
      d_gate_output[k] = dh[k] * step.tanh_cell[k];
      dc[k] += dh[k] * step.gate_output[k] * (1.0 - step.tanh_cell[k] * step.tanh_cell[k]);
    }
    // c = f * c_prev + i * g
    Vector dc_prev(hidden, 0.0);
    for (int k = 0; k < hidden; ++k) {
      const double cp = c_prev ? (*c_prev)[k] : 0.0;
      d_gate_forget[k] = dc[k] * cp;
      d_gate_input[k] = dc[k] * step.candidate[k];
      d_candidate[k] = dc[k] * step.gate_input[k];
      dc_prev[k] = dc[k] * step.gate_forget[k];
    }
    // through the nonlinearities to the pre-activations
    for (int k = 0; k < hidden; ++k) {
      d_gate_forget[k] *= step.gate_forget[k] * (1.0 - step.gate_forget[k]);
      d_gate_input[k] *= step.gate_input[k] * (1.0 - step.gate_input[k]);
      d_gate_output[k] *= step.gate_output[k] * (1.0 - step.gate_output[k]);
      d_candidate[k] *= 1.0 - step.candidate[k] * step.candidate[k];
    }

    Vector dx(cfg.input_dim(), 0.0);
    Vector dh_prev(hidden, 0.0);
    auto accumulate_gate = [&](const Vector& d_pre, Matrix& grad_w, Matrix& grad_u,
                               Vector& grad_b, const Matrix& w, const Matrix& u) {
      outer_add(grad_w, d_pre, step.x);
      outer_add(grad_u, d_pre, h_prev);
      axpy(1.0, d_pre, grad_b);
      matvec_transpose_add(w, d_pre, dx);
      matvec_transpose_add(u, d_pre, dh_prev);
    };
    accumulate_gate(d_gate_forget, grads.w_forget, grads.u_forget, grads.b_forget,
                    params.w_forget, params.u_forget);
    accumulate_gate(d_gate_input, grads.w_input, grads.u_input, grads.b_input, params.w_input,
                    params.u_input);
    accumulate_gate(d_gate_output, grads.w_output, grads.u_output, grads.b_output,
                    params.w_output, params.u_output);
    accumulate_gate(d_candidate, grads.w_cell, grads.u_cell, grads.b_cell, params.w_cell,
                    params.u_cell);

    // embedding slice of the input
    axpy(1.0, std::span<const double>(dx.data(), embed), grads.embedding.row(step.fed_label));

    // attention slice
    if (use_attention) {
      const std::span<const double> dctx(dx.data() + embed, feature);
      const int n_cells = static_cast<int>(sample.spatial_features.size());
      const int attn = cfg.attention_dim;

      Vector d_weights(n_cells);
      for (int g = 0; g < n_cells; ++g) d_weights[g] = dot(dctx, sample.spatial_features[g]);
      double mixed = 0.0;
      for (int g = 0; g < n_cells; ++g) mixed += step.attn_weights[g] * d_weights[g];

      Vector d_pre_sum(attn, 0.0);
      Vector d_pre(attn);
      for (int g = 0; g < n_cells; ++g) {
        const double d_score = step.attn_weights[g] * (d_weights[g] - mixed);
        const auto tanh_row = step.attn_tanh.row(g);
        axpy(d_score, tanh_row, grads.attn_score);
        for (int a = 0; a < attn; ++a) {
          d_pre[a] = d_score * params.attn_score[a] * (1.0 - tanh_row[a] * tanh_row[a]);
        }
        outer_add(grads.attn_feature, d_pre, sample.spatial_features[g]);
        axpy(1.0, d_pre, grads.attn_bias);
        axpy(1.0, d_pre, d_pre_sum);
      }
      outer_add(grads.attn_hidden, d_pre_sum, h_prev);
      matvec_transpose_add(params.attn_hidden, d_pre_sum, dh_prev);
    }

    dh_next = std::move(dh_prev);
    dc_next = std::move(dc_prev);
  }

  // h_init = w_encode * feature + b_encode
  outer_add(grads.w_encode, dh_next, sample.global_feature);
  axpy(1.0, dh_next, grads.b_encode);
  return grads;
}

ForwardBackwardResult forward_backward(const SampleRecord& sample, const ModelParameters& params,
                                       OrderingStrategy strategy, bool use_attention,
                                       const LabelVocabulary& vocab,
                                       const ForwardOptions& options) {
  const ModelConfig& cfg = params.config;
  if (vocab.n_classes() != cfg.n_classes)
    throw ValidationError("forward_backward: vocabulary size mismatch");
  sample.validate(cfg.n_classes);
  const int n_steps = static_cast<int>(sample.labels.size()) + 1;

  // Fixed strategies know their target order up front; under teacher forcing
  // with mla/pla the canonical ascending listing is fed (targets themselves
  // are still aligned after the forward pass).
  std::vector<int> ordered_targets;
  if (!is_dynamic(strategy)) {
    ordered_targets = fixed_order_targets(sample.labels, strategy, vocab, options.order_seed);
  } else if (options.teacher_forcing) {
    ordered_targets = sample.labels;
    std::sort(ordered_targets.begin(), ordered_targets.end());
    ordered_targets.push_back(vocab.end_token());
  }

  std::vector<int> forced_inputs;
  if (options.teacher_forcing) {
    forced_inputs.resize(n_steps);
    forced_inputs[0] = cfg.start_token();
    for (int t = 1; t < n_steps; ++t) forced_inputs[t] = ordered_targets[t - 1];
  }

  ForwardTape tape = run_forward(sample, params, n_steps, use_attention,
                                 options.teacher_forcing ? &forced_inputs : nullptr);

  ForwardBackwardResult result{.loss = 0.0,
                               .gradients = ModelParameters(cfg),
                               .predictions = {},
                               .targets = {},
                               .fed_labels = tape.fed_labels(),
                               .alignment_ms = 0.0};
  result.predictions = shape_predictions(tape.predictions(), n_steps);

  if (is_dynamic(strategy)) {
    const auto start = std::chrono::steady_clock::now();
    result.targets = strategy == OrderingStrategy::mla
                         ? align_mla(result.predictions, sample.labels, vocab.end_token())
                         : align_pla(result.predictions, sample.labels, vocab.end_token());
    const auto stop = std::chrono::steady_clock::now();
    result.alignment_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  } else {
    result.targets.step_to_label = ordered_targets;
  }

  result.loss = sequence_loss(result.predictions, result.targets);
  result.gradients = run_backward(sample, params, tape, result.targets, use_attention);
  return result;
}

// ---------------------------------------------------------------------------
// checkpoint I/O

void save_model(const ModelParameters& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("save_model: cannot open " + path.string());
  out.precision(17);
  const ModelConfig& cfg = params.config;
  out << "orlmodel 1\n";
  out << "config hidden_dim=" << cfg.hidden_dim << " embed_dim=" << cfg.embed_dim
      << " feature_dim=" << cfg.feature_dim << " n_classes=" << cfg.n_classes
      << " attention_dim=" << cfg.attention_dim << "\n";
  for (const auto& [name, block] : params.named_blocks()) {
    out << "block " << name << " " << block.size() << "\n";
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (i > 0) out << ' ';
      out << block[i];
    }
    out << "\n";
  }
  out << "end\n";
  if (!out) throw RuntimeError("save_model: write failed for " + path.string());
}

namespace {

[[noreturn]] void model_parse_error(const std::filesystem::path& path, int line,
                                    const std::string& what) {
  throw ValidationError("load_model: " + path.string() + ":" + std::to_string(line) + ": " + what);
}

int parse_kv_int(const std::string& token, const std::string& key,
                 const std::filesystem::path& path, int line) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0) model_parse_error(path, line, "expected " + prefix + "...");
  int value = 0;
  const char* begin = token.data() + prefix.size();
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) model_parse_error(path, line, "bad integer in " + token);
  return value;
}

}  // namespace

ModelParameters load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("load_model: cannot open " + path.string());
  int line_no = 0;
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) model_parse_error(path, line_no + 1, "unexpected end of file");
    ++line_no;
  };

  next_line();
  if (line != "orlmodel 1") model_parse_error(path, line_no, "bad magic, expected 'orlmodel 1'");

  next_line();
  std::istringstream header(line);
  std::string word;
  header >> word;
  if (word != "config") model_parse_error(path, line_no, "expected config line");
  ModelConfig cfg;
  std::string token;
  header >> token;
  cfg.hidden_dim = parse_kv_int(token, "hidden_dim", path, line_no);
  header >> token;
  cfg.embed_dim = parse_kv_int(token, "embed_dim", path, line_no);
  header >> token;
  cfg.feature_dim = parse_kv_int(token, "feature_dim", path, line_no);
  header >> token;
  cfg.n_classes = parse_kv_int(token, "n_classes", path, line_no);
  header >> token;
  cfg.attention_dim = parse_kv_int(token, "attention_dim", path, line_no);

  ModelParameters params(cfg);
  for (auto& [name, block] : params.named_blocks()) {
    next_line();
    std::istringstream block_header(line);
    std::string tag, block_name;
    std::size_t count = 0;
    block_header >> tag >> block_name >> count;
    if (tag != "block" || block_name != name)
      model_parse_error(path, line_no, "expected 'block " + std::string(name) + " ...'");
    if (count != block.size())
      model_parse_error(path, line_no, "block " + std::string(name) + " has wrong size");
    next_line();
    const char* cursor = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t i = 0; i < block.size(); ++i) {
      while (cursor != end && *cursor == ' ') ++cursor;
      auto [ptr, ec] = std::from_chars(cursor, end, block[i]);
      if (ec != std::errc{})
        model_parse_error(path, line_no, "bad value in block " + std::string(name));
      cursor = ptr;
    }
    while (cursor != end && *cursor == ' ') ++cursor;
    if (cursor != end)
      model_parse_error(path, line_no, "trailing data in block " + std::string(name));
  }
  next_line();
  if (line != "end") model_parse_error(path, line_no, "missing end marker");
  if (!params.all_finite()) model_parse_error(path, line_no, "non-finite parameter value");
  return params;
}

}  // namespace orl
