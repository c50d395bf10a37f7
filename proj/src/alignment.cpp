#include "orl/alignment.hpp"

#include <algorithm>
#include <cmath>

#include "orl/assignment.hpp"
#include "orl/rng.hpp"

namespace orl {
namespace {

double clamped_neg_log(double p) { return -std::log(std::min(std::max(p, kProbFloor), 1.0)); }

// Labels sorted ascending; canonical row order for the cost matrices keeps
// alignment independent of how the caller listed the label set.
std::vector<int> sorted_labels(const std::vector<int>& labels, const PredictionMatrix& preds,
                               int end_token) {
  if (labels.empty()) throw ValidationError("alignment: label set must be non-empty");
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= preds.n_total_classes())
      throw ValidationError("alignment: label outside prediction matrix range");
    if (sorted[i] == end_token) throw ValidationError("alignment: end token cannot be a label");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw ValidationError("alignment: duplicate label");
  }
  if (preds.n_steps() != static_cast<int>(sorted.size()) + 1)
    throw ValidationError("alignment: predictions must be shaped to |labels| + 1 steps");
  if (end_token < 0 || end_token >= preds.n_total_classes())
    throw ValidationError("alignment: end token out of range");
  return sorted;
}

}  // namespace

std::string_view strategy_name(OrderingStrategy strategy) {
  switch (strategy) {
    case OrderingStrategy::frequent_first: return "frequent_first";
    case OrderingStrategy::rare_first: return "rare_first";
    case OrderingStrategy::dictionary_order: return "dictionary_order";
    case OrderingStrategy::random_order: return "random_order";
    case OrderingStrategy::mla: return "mla";
    case OrderingStrategy::pla: return "pla";
  }
  throw ValidationError("unknown strategy");
}

std::optional<OrderingStrategy> parse_strategy(std::string_view name) {
  for (OrderingStrategy s : kAllStrategies) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

PredictionMatrix make_prediction_matrix(Matrix probs) {
  if (probs.rows() < 1 || probs.cols() < 1)
    throw ValidationError("prediction matrix: needs at least one class and one step");
  for (int t = 0; t < probs.cols(); ++t) {
    double sum = 0.0;
    for (int r = 0; r < probs.rows(); ++r) {
      const double p = probs(r, t);
      if (!(p >= 0.0) || p > 1.0 + 1e-9)
        throw ValidationError("prediction matrix: entries must lie in [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw ValidationError("prediction matrix: column does not sum to 1");
  }
  PredictionMatrix result;
  result.probs = std::move(probs);
  result.predicted_labels.resize(result.probs.cols());
  for (int t = 0; t < result.probs.cols(); ++t) {
    int best = 0;
    for (int r = 1; r < result.probs.rows(); ++r) {
      if (result.probs(r, t) > result.probs(best, t)) best = r;
    }
    result.predicted_labels[t] = best;
  }
  return result;
}

PredictionMatrix shape_predictions(const PredictionMatrix& raw, int n_targets) {
  if (n_targets < 1) throw ValidationError("shape_predictions: n_targets must be >= 1");
  if (raw.n_steps() < 1) throw ValidationError("shape_predictions: need at least one step");
  const int m = raw.n_total_classes();
  Matrix shaped(m, n_targets);
  const int copied = std::min(raw.n_steps(), n_targets);
  for (int t = 0; t < copied; ++t) {
    for (int r = 0; r < m; ++r) shaped(r, t) = raw.probs(r, t);
  }
  // "empty" padding columns carry the uniform distribution
  for (int t = copied; t < n_targets; ++t) {
    for (int r = 0; r < m; ++r) shaped(r, t) = 1.0 / m;
  }
  return make_prediction_matrix(std::move(shaped));
}

std::vector<int> fixed_order_targets(const std::vector<int>& labels, OrderingStrategy strategy,
                                     const LabelVocabulary& vocab,
                                     std::optional<std::uint64_t> rng_seed) {
  if (is_dynamic(strategy))
    throw ValidationError("fixed_order_targets: mla/pla need predictions, not a fixed order");
  if (labels.empty()) throw ValidationError("fixed_order_targets: label set must be non-empty");
  std::vector<int> ordered = labels;
  std::sort(ordered.begin(), ordered.end());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (ordered[i] < 0 || ordered[i] >= vocab.n_classes())
      throw ValidationError("fixed_order_targets: label outside vocabulary");
    if (i > 0 && ordered[i] == ordered[i - 1])
      throw ValidationError("fixed_order_targets: duplicate label");
  }

  switch (strategy) {
    case OrderingStrategy::frequent_first:
      std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        if (vocab.frequencies[a] != vocab.frequencies[b])
          return vocab.frequencies[a] > vocab.frequencies[b];
        return a < b;
      });
      break;
    case OrderingStrategy::rare_first:
      std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        if (vocab.frequencies[a] != vocab.frequencies[b])
          return vocab.frequencies[a] < vocab.frequencies[b];
        return a < b;
      });
      break;
    case OrderingStrategy::dictionary_order:
      std::sort(ordered.begin(), ordered.end(),
                [&](int a, int b) { return vocab.names[a] < vocab.names[b]; });
      break;
    case OrderingStrategy::random_order: {
      if (!rng_seed)
        throw ValidationError("fixed_order_targets: random_order needs an rng seed");
      Rng rng(*rng_seed);
      rng.shuffle(ordered);
      break;
    }
    default:
      break;  // unreachable, guarded above
  }
  ordered.push_back(vocab.end_token());
  return ordered;
}

AlignmentMatrix align_mla(const PredictionMatrix& preds, const std::vector<int>& labels,
                          int end_token) {
  const std::vector<int> sorted = sorted_labels(labels, preds, end_token);
  const int n_labels = static_cast<int>(sorted.size());

  CostMatrix costs{Matrix(n_labels, n_labels)};
  for (int r = 0; r < n_labels; ++r) {
    for (int t = 0; t < n_labels; ++t) {
      costs.entries(r, t) = clamped_neg_log(preds.probs(sorted[r], t));
    }
  }
  const Assignment assigned = solve_assignment(costs);

  AlignmentMatrix result;
  result.step_to_label.assign(preds.n_steps(), end_token);
  for (int r = 0; r < n_labels; ++r) {
    result.step_to_label[assigned.row_to_col[r]] = sorted[r];
  }
  return result;
}

AlignmentMatrix align_pla(const PredictionMatrix& preds, const std::vector<int>& labels,
                          int end_token) {
  const std::vector<int> sorted = sorted_labels(labels, preds, end_token);
  const int n_labels = static_cast<int>(sorted.size());

  AlignmentMatrix result;
  result.step_to_label.assign(preds.n_steps(), -1);
  result.step_to_label.back() = end_token;

  // Pin each correctly predicted label to its earliest prediction step.
  std::vector<char> label_pinned(n_labels, 0);
  for (int t = 0; t < n_labels; ++t) {
    const int predicted = preds.predicted_labels[t];
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), predicted);
    if (it == sorted.end() || *it != predicted) continue;
    const int label_idx = static_cast<int>(it - sorted.begin());
    if (label_pinned[label_idx]) continue;
    label_pinned[label_idx] = 1;
    result.step_to_label[t] = predicted;
  }

  std::vector<int> free_labels;
  for (int r = 0; r < n_labels; ++r) {
    if (!label_pinned[r]) free_labels.push_back(sorted[r]);
  }
  std::vector<int> free_steps;
  for (int t = 0; t < n_labels; ++t) {
    if (result.step_to_label[t] < 0) free_steps.push_back(t);
  }

  if (!free_labels.empty()) {
    const int k = static_cast<int>(free_labels.size());
    CostMatrix costs{Matrix(k, k)};
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) {
        costs.entries(r, c) = clamped_neg_log(preds.probs(free_labels[r], free_steps[c]));
      }
    }
    const Assignment assigned = solve_assignment(costs);
    for (int r = 0; r < k; ++r) {
      result.step_to_label[free_steps[assigned.row_to_col[r]]] = free_labels[r];
    }
  }
  return result;
}

double sequence_loss(const PredictionMatrix& preds, const AlignmentMatrix& targets) {
  if (targets.n_steps() != preds.n_steps())
    throw ValidationError("sequence_loss: step count mismatch");
  double loss = 0.0;
  for (int t = 0; t < preds.n_steps(); ++t) {
    const int label = targets.step_to_label[t];
    if (label < 0 || label >= preds.n_total_classes())
      throw ValidationError("sequence_loss: target label out of range");
    loss += clamped_neg_log(preds.probs(label, t));
  }
  return loss;
}

}  // namespace orl
