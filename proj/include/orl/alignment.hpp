#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "orl/matrix.hpp"
#include "orl/types.hpp"

namespace orl {

// Probabilities below this are clamped before any logarithm.
inline constexpr double kProbFloor = 1e-12;

enum class OrderingStrategy {
  frequent_first,
  rare_first,
  dictionary_order,
  random_order,
  mla,  // minimal loss alignment
  pla,  // predicted label alignment
};

inline constexpr OrderingStrategy kAllStrategies[] = {
    OrderingStrategy::frequent_first, OrderingStrategy::rare_first,
    OrderingStrategy::dictionary_order, OrderingStrategy::random_order,
    OrderingStrategy::mla, OrderingStrategy::pla};

std::string_view strategy_name(OrderingStrategy strategy);
std::optional<OrderingStrategy> parse_strategy(std::string_view name);

// mla/pla need predictions before targets exist; the other four do not.
inline bool is_dynamic(OrderingStrategy s) {
  return s == OrderingStrategy::mla || s == OrderingStrategy::pla;
}

// Per-sample probabilities: column t is the class distribution at step t.
struct PredictionMatrix {
  Matrix probs;                      // total_classes x n_steps
  std::vector<int> predicted_labels;  // per-column argmax, smallest index on ties

  int n_steps() const { return probs.cols(); }
  int n_total_classes() const { return probs.rows(); }
};

// Validates column sums and entry range, fills predicted_labels.
PredictionMatrix make_prediction_matrix(Matrix probs);

// Target assignment: step_to_label[t] is the class index trained at step t.
struct AlignmentMatrix {
  std::vector<int> step_to_label;

  int n_steps() const { return static_cast<int>(step_to_label.size()); }
};

// Truncates to the first n_targets columns or pads with uniform columns.
PredictionMatrix shape_predictions(const PredictionMatrix& raw, int n_targets);

// Orders a label set by one of the fixed strategies and appends the end
// token. random_order requires a seed; frequency ties break by class index.
std::vector<int> fixed_order_targets(const std::vector<int>& labels, OrderingStrategy strategy,
                                     const LabelVocabulary& vocab,
                                     std::optional<std::uint64_t> rng_seed = std::nullopt);

// Minimal loss alignment: the label-to-step bijection minimizing summed
// cross-entropy, solved as an assignment problem on -log probabilities.
// preds must already be shaped to |labels| + 1 steps; the end token is pinned
// to the final step and excluded from the matching.
AlignmentMatrix align_mla(const PredictionMatrix& preds, const std::vector<int>& labels,
                          int end_token);

// Predicted label alignment: every ground-truth label the model predicted is
// pinned to its earliest prediction step, the rest are assigned optimally.
AlignmentMatrix align_pla(const PredictionMatrix& preds, const std::vector<int>& labels,
                          int end_token);

// -sum_t log p(step_to_label[t] | t), probabilities clamped to [1e-12, 1].
double sequence_loss(const PredictionMatrix& preds, const AlignmentMatrix& targets);

}  // namespace orl
