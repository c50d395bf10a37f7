#include "orl/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "orl/metrics.hpp"
#include "orl/rng.hpp"

namespace orl {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start, Clock::time_point stop) {
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

int max_label_count(const std::vector<SampleRecord>& samples) {
  std::size_t max_labels = 1;
  for (const SampleRecord& sample : samples) max_labels = std::max(max_labels, sample.labels.size());
  return static_cast<int>(max_labels);
}

struct AdamState {
  ModelParameters first_moment;
  ModelParameters second_moment;
  std::int64_t step = 0;

  explicit AdamState(const ModelConfig& cfg) : first_moment(cfg), second_moment(cfg) {}
};

void apply_update(ModelParameters& params, const ModelParameters& grads, const TrainConfig& config,
                  double learning_rate, AdamState& adam) {
  if (config.optimizer == OptimizerKind::sgd) {
    auto param_blocks = params.named_blocks();
    auto grad_blocks = const_cast<ModelParameters&>(grads).named_blocks();
    for (std::size_t b = 0; b < param_blocks.size(); ++b) {
      axpy(-learning_rate, grad_blocks[b].second, param_blocks[b].second);
    }
    return;
  }
  ++adam.step;
  const double beta1 = config.adam.beta1;
  const double beta2 = config.adam.beta2;
  const double correction1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
  const double correction2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
  auto param_blocks = params.named_blocks();
  auto grad_blocks = const_cast<ModelParameters&>(grads).named_blocks();
  auto m_blocks = adam.first_moment.named_blocks();
  auto v_blocks = adam.second_moment.named_blocks();
  for (std::size_t b = 0; b < param_blocks.size(); ++b) {
    auto p = param_blocks[b].second;
    auto g = grad_blocks[b].second;
    auto m = m_blocks[b].second;
    auto v = v_blocks[b].second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.adam.epsilon);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be > 0");
  if (!(lr_decay > 0.0) || lr_decay > 1.0)
    throw ValidationError("train config: lr_decay must lie in (0, 1]");
  for (double milestone : lr_milestones) {
    if (milestone <= 0.0 || milestone >= 1.0)
      throw ValidationError("train config: lr milestones are fractions in (0, 1)");
  }
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw ValidationError("train config: validation_fraction must lie in [0, 1)");
  if (hidden_dim < 1 || embed_dim < 1)
    throw ValidationError("train config: model dimensions must be >= 1");
  if (use_attention && attention_dim < 1)
    throw ValidationError("train config: attention_dim must be >= 1 when attention is on");
}

ModelConfig resolve_model_config(const TrainConfig& config, const LabelVocabulary& vocab,
                                 int feature_dim) {
  ModelConfig model;
  model.hidden_dim = config.hidden_dim;
  model.embed_dim = config.embed_dim;
  model.feature_dim = feature_dim;
  model.n_classes = vocab.n_classes();
  model.attention_dim = config.use_attention ? config.attention_dim : 0;
  model.validate();
  return model;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int n_samples, double fraction,
                                                            std::uint64_t seed) {
  std::vector<int> order(n_samples);
  for (int i = 0; i < n_samples; ++i) order[i] = i;
  Rng rng(derive_seed(seed, kSplitStream));
  rng.shuffle(order);
  const int n_val = static_cast<int>(fraction * n_samples);
  std::vector<int> train_idx(order.begin(), order.end() - n_val);
  std::vector<int> val_idx(order.end() - n_val, order.end());
  return {train_idx, val_idx};
}

EvaluationBatch decode_batch(const std::vector<SampleRecord>& samples,
                             const ModelParameters& params, int max_steps, bool use_attention) {
  EvaluationBatch batch;
  batch.ground_truth.reserve(samples.size());
  batch.predictions.reserve(samples.size());
  for (const SampleRecord& sample : samples) {
    batch.ground_truth.push_back(sample.labels);
    batch.predictions.push_back(greedy_decode(sample, params, max_steps, use_attention));
  }
  return batch;
}

TrainResult train(const std::vector<SampleRecord>& dataset, const LabelVocabulary& vocab,
                  const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ValidationError("train: dataset must be non-empty");
  vocab.validate();
  for (const SampleRecord& sample : dataset) sample.validate(vocab.n_classes());

  const int feature_dim = static_cast<int>(dataset.front().global_feature.size());
  const ModelConfig model_cfg = resolve_model_config(config, vocab, feature_dim);

  auto [train_idx, val_idx] =
      split_indices(static_cast<int>(dataset.size()), config.validation_fraction, config.seed);
  if (train_idx.empty()) throw ValidationError("train: validation split left no training data");

  TrainResult result{ModelParameters::random_init(model_cfg, config.seed), TrainLog{}};
  AdamState adam(model_cfg);
  Rng loop_rng(derive_seed(config.seed, kTrainLoopStream));
  const int eval_steps = max_label_count(dataset) + 2;

  ModelParameters grad_sum(model_cfg);
  ModelParameters grad_mean(model_cfg);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double learning_rate = config.learning_rate;
    for (double milestone : config.lr_milestones) {
      if (epoch >= static_cast<int>(milestone * config.epochs)) learning_rate *= config.lr_decay;
    }
    loop_rng.shuffle(train_idx);
    for (std::size_t batch_start = 0; batch_start < train_idx.size();
         batch_start += config.batch_size) {
      const std::size_t batch_end =
          std::min(batch_start + config.batch_size, train_idx.size());
      grad_sum.set_zero();
      double loss_sum = 0.0;
      for (std::size_t i = batch_start; i < batch_end; ++i) {
        ForwardOptions options;
        options.teacher_forcing = config.teacher_forcing;
        if (config.strategy == OrderingStrategy::random_order) options.order_seed = loop_rng.next();
        const ForwardBackwardResult fb =
            forward_backward(dataset[train_idx[i]], result.params, config.strategy,
                             config.use_attention, vocab, options);
        if (!std::isfinite(fb.loss))
          throw RuntimeError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", iteration " + std::to_string(result.log.iteration_losses.size()));
        loss_sum += fb.loss;
        if (is_dynamic(config.strategy)) result.log.alignment_time.record(fb.alignment_ms);
        auto sum_blocks = grad_sum.named_blocks();
        auto fb_blocks = const_cast<ModelParameters&>(fb.gradients).named_blocks();
        for (std::size_t b = 0; b < sum_blocks.size(); ++b) {
          axpy(1.0, fb_blocks[b].second, sum_blocks[b].second);
        }
      }
      const double batch_n = static_cast<double>(batch_end - batch_start);
      auto mean_blocks = grad_mean.named_blocks();
      auto sum_blocks = grad_sum.named_blocks();
      for (std::size_t b = 0; b < mean_blocks.size(); ++b) {
        auto mean = mean_blocks[b].second;
        auto sum = sum_blocks[b].second;
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = sum[i] / batch_n;
      }
      apply_update(result.params, grad_mean, config, learning_rate, adam);
      result.log.iteration_losses.push_back(loss_sum / batch_n);
    }

    if (!val_idx.empty()) {
      std::vector<SampleRecord> val_samples;
      val_samples.reserve(val_idx.size());
      for (int idx : val_idx) val_samples.push_back(dataset[idx]);
      const EvaluationBatch batch =
          decode_batch(val_samples, result.params, eval_steps, config.use_attention);
      const MetricsReport report = evaluate_batch(batch, vocab);
      result.log.epoch_metrics.push_back({epoch, "val_o_f1", report.o_f1});
      result.log.epoch_metrics.push_back({epoch, "val_c_f1", report.c_f1});
      result.log.epoch_metrics.push_back({epoch, "val_duplicate_ratio", report.duplicate_ratio});
    }
  }
  return result;
}

AlignmentBenchmark benchmark_alignment(const std::vector<SampleRecord>& dataset,
                                       const LabelVocabulary& vocab,
                                       const ModelParameters& params, int min_samples) {
  if (dataset.empty()) throw ValidationError("benchmark_alignment: dataset must be non-empty");
  if (min_samples < 1) throw ValidationError("benchmark_alignment: min_samples must be >= 1");
  vocab.validate();

  AlignmentBenchmark bench;
  const bool use_attention = params.config.has_attention();
  while (bench.samples < min_samples) {
    for (const SampleRecord& sample : dataset) {
      const int n_steps = static_cast<int>(sample.labels.size()) + 1;

      auto t0 = Clock::now();
      const ForwardTape tape = run_forward(sample, params, n_steps, use_attention);
      auto t1 = Clock::now();
      const PredictionMatrix preds = shape_predictions(tape.predictions(), n_steps);

      auto t2 = Clock::now();
      const AlignmentMatrix mla = align_mla(preds, sample.labels, vocab.end_token());
      auto t3 = Clock::now();
      const AlignmentMatrix pla = align_pla(preds, sample.labels, vocab.end_token());
      auto t4 = Clock::now();
      (void)pla;

      const ModelParameters grads = run_backward(sample, params, tape, mla, use_attention);
      auto t5 = Clock::now();
      (void)grads;

      bench.forward.record(elapsed_ms(t0, t1));
      bench.mla.record(elapsed_ms(t2, t3));
      bench.pla.record(elapsed_ms(t3, t4));
      bench.backward.record(elapsed_ms(t4, t5));
      ++bench.samples;
      if (bench.samples >= min_samples) break;
    }
  }
  return bench;
}

void write_loss_csv(const TrainLog& log, std::ostream& out) {
  out.precision(17);
  out << "iteration,loss\n";
  for (std::size_t i = 0; i < log.iteration_losses.size(); ++i) {
    out << i << ',' << log.iteration_losses[i] << "\n";
  }
}

void write_epoch_csv(const TrainLog& log, std::ostream& out) {
  out.precision(17);
  out << "epoch,metric,value\n";
  for (const TrainLog::EpochMetric& metric : log.epoch_metrics) {
    out << metric.epoch << ',' << metric.name << ',' << metric.value << "\n";
  }
}

}  // namespace orl
