#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "orl/alignment.hpp"
#include "orl/data.hpp"
#include "orl/metrics.hpp"
#include "orl/seqmodel.hpp"

namespace orl {

enum class OptimizerKind { sgd, adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  OrderingStrategy strategy = OrderingStrategy::pla;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  // optional step decay: rate is multiplied by lr_decay at each milestone
  // (fractions of the epoch budget); defaults keep the rate constant
  double lr_decay = 1.0;
  std::vector<double> lr_milestones;
  std::uint64_t seed = 0;
  bool use_attention = false;
  bool teacher_forcing = false;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamConfig adam;

  int hidden_dim = 64;
  int embed_dim = 32;
  int attention_dim = 16;  // used only when use_attention

  double validation_fraction = 0.1;

  void validate() const;
};

struct TimingStats {
  std::int64_t count = 0;
  double total_ms = 0.0;
  double max_ms = 0.0;

  void record(double ms) {
    ++count;
    total_ms += ms;
    if (ms > max_ms) max_ms = ms;
  }
  double mean_ms() const { return count > 0 ? total_ms / count : 0.0; }
};

struct TrainLog {
  std::vector<double> iteration_losses;  // batch-mean loss per optimizer step

  struct EpochMetric {
    int epoch;
    std::string name;
    double value;
  };
  std::vector<EpochMetric> epoch_metrics;

  TimingStats alignment_time;  // per-sample, dynamic strategies only
};

struct TrainResult {
  ModelParameters params;
  TrainLog log;
};

// rng stream tags; parameters init from config.seed directly, the split and
// the epoch shuffles derive their streams from these
inline constexpr std::uint64_t kSplitStream = 0x5eed5911;
inline constexpr std::uint64_t kTrainLoopStream = 0x700b;

// Model dims resolved against the dataset (n_classes, feature_dim).
ModelConfig resolve_model_config(const TrainConfig& config, const LabelVocabulary& vocab,
                                 int feature_dim);

// Deterministic index split: last validation_fraction of a seeded shuffle.
std::pair<std::vector<int>, std::vector<int>> split_indices(int n_samples, double fraction,
                                                            std::uint64_t seed);

// Mini-batch training with per-sample forward/backward, gradient averaging in
// visit order, and one optimizer step per batch. Deterministic given the seed
// (wall-clock timing stats aside).
TrainResult train(const std::vector<SampleRecord>& dataset, const LabelVocabulary& vocab,
                  const TrainConfig& config);

// Decode every sample and score against its ground truth.
EvaluationBatch decode_batch(const std::vector<SampleRecord>& samples,
                             const ModelParameters& params, int max_steps, bool use_attention);

struct AlignmentBenchmark {
  TimingStats forward, mla, pla, backward;
  int samples = 0;
};

// Mean per-sample wall time of forward pass, MLA / PLA alignment, and
// backward pass over at least min_samples (dataset recycled as needed).
AlignmentBenchmark benchmark_alignment(const std::vector<SampleRecord>& dataset,
                                       const LabelVocabulary& vocab,
                                       const ModelParameters& params, int min_samples = 100);

// iteration,loss
void write_loss_csv(const TrainLog& log, std::ostream& out);
// epoch,metric,value
void write_epoch_csv(const TrainLog& log, std::ostream& out);

}  // namespace orl
