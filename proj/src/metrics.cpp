#include "orl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

namespace orl {
namespace {

void check_batch(const EvaluationBatch& batch, const LabelVocabulary& vocab) {
  if (batch.ground_truth.empty()) throw ValidationError("metrics: empty batch");
  if (batch.ground_truth.size() != batch.predictions.size())
    throw ValidationError("metrics: ground truth / prediction count mismatch");
  for (const auto& labels : batch.ground_truth) {
    for (int label : labels) {
      if (label < 0 || label >= vocab.n_classes())
        throw ValidationError("metrics: ground-truth label outside vocabulary");
    }
  }
  for (const auto& labels : batch.predictions) {
    for (int label : labels) {
      if (label < 0 || label >= vocab.n_classes())
        throw ValidationError("metrics: predicted label outside vocabulary");
    }
  }
}

double combine(double precision, double recall, F1Mean mean) {
  if (mean == F1Mean::geometric) return std::sqrt(precision * recall);
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

}  // namespace

std::pair<std::vector<int>, bool> dedup(const std::vector<int>& sequence) {
  std::vector<int> kept;
  kept.reserve(sequence.size());
  bool had_duplicates = false;
  for (int label : sequence) {
    if (std::find(kept.begin(), kept.end(), label) == kept.end()) {
      kept.push_back(label);
    } else {
      had_duplicates = true;
    }
  }
  return {kept, had_duplicates};
}

MetricsReport prf1(const EvaluationBatch& batch, const LabelVocabulary& vocab, F1Mean mean) {
  check_batch(batch, vocab);

  MetricsReport report;
  report.per_class.assign(vocab.n_classes(), {});
  std::int64_t pooled_tp = 0, pooled_pred = 0, pooled_gt = 0;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [predicted, dropped] = dedup(batch.predictions[i]);
    (void)dropped;
    const auto& truth = batch.ground_truth[i];
    pooled_pred += static_cast<std::int64_t>(predicted.size());
    pooled_gt += static_cast<std::int64_t>(truth.size());
    for (int label : predicted) {
      ++report.per_class[label].predicted;
      if (std::find(truth.begin(), truth.end(), label) != truth.end()) {
        ++pooled_tp;
        ++report.per_class[label].true_positives;
      }
    }
    for (int label : truth) ++report.per_class[label].actual;
  }

  double precision_sum = 0.0, recall_sum = 0.0;
  for (PerClassStats& stats : report.per_class) {
    stats.precision_defined = stats.predicted > 0;
    stats.recall_defined = stats.actual > 0;
    stats.precision = stats.precision_defined
                          ? static_cast<double>(stats.true_positives) / stats.predicted
                          : 0.0;
    stats.recall =
        stats.recall_defined ? static_cast<double>(stats.true_positives) / stats.actual : 0.0;
    precision_sum += stats.precision;
    recall_sum += stats.recall;
  }
  report.c_precision = precision_sum / vocab.n_classes();
  report.c_recall = recall_sum / vocab.n_classes();
  report.c_f1 = combine(report.c_precision, report.c_recall, mean);

  report.o_precision = pooled_pred > 0 ? static_cast<double>(pooled_tp) / pooled_pred : 0.0;
  report.o_recall = pooled_gt > 0 ? static_cast<double>(pooled_tp) / pooled_gt : 0.0;
  report.o_f1 = combine(report.o_precision, report.o_recall, mean);
  return report;
}

double duplicate_ratio(const EvaluationBatch& batch) {
  if (batch.predictions.empty()) throw ValidationError("duplicate_ratio: empty batch");
  int with_duplicates = 0;
  for (const auto& sequence : batch.predictions) {
    if (dedup(sequence).second) ++with_duplicates;
  }
  return static_cast<double>(with_duplicates) / static_cast<double>(batch.predictions.size());
}

RigidnessResult order_rigidness(const EvaluationBatch& batch) {
  if (batch.predictions.empty()) throw ValidationError("order_rigidness: empty batch");
  // counts[(a, b)] = times a appeared before b in a deduplicated sequence
  std::map<std::pair<int, int>, std::int64_t> counts;
  for (const auto& raw : batch.predictions) {
    const auto sequence = dedup(raw).first;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
      for (std::size_t j = i + 1; j < sequence.size(); ++j) {
        ++counts[{sequence[i], sequence[j]}];
      }
    }
  }
  std::int64_t dominant = 0, total = 0;
  for (const auto& [pair, forward] : counts) {
    if (pair.first > pair.second) continue;  // visit each unordered pair once
    const auto reverse_it = counts.find({pair.second, pair.first});
    const std::int64_t reverse = reverse_it != counts.end() ? reverse_it->second : 0;
    dominant += std::max(forward, reverse);
    total += forward + reverse;
  }
  if (total == 0) return {1.0, true};
  return {static_cast<double>(dominant) / static_cast<double>(total), false};
}

Matrix cooccurrence_diff(const EvaluationBatch& batch, const LabelVocabulary& vocab) {
  check_batch(batch, vocab);
  Matrix diff(vocab.n_classes(), vocab.n_classes());
  auto accumulate = [&](const std::vector<int>& labels, double sign) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[i] != labels[j]) diff(labels[i], labels[j]) += sign;
      }
    }
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    accumulate(dedup(batch.predictions[i]).first, 1.0);
    accumulate(dedup(batch.ground_truth[i]).first, -1.0);
  }
  return diff;
}

MetricsReport evaluate_batch(const EvaluationBatch& batch, const LabelVocabulary& vocab,
                             F1Mean mean) {
  MetricsReport report = prf1(batch, vocab, mean);
  report.duplicate_ratio = duplicate_ratio(batch);
  const RigidnessResult rigidness = order_rigidness(batch);
  report.order_rigidness = rigidness.value;
  report.rigidness_no_pairs = rigidness.no_cooccurrence;
  return report;
}

void write_metrics_csv(const MetricsReport& report, std::ostream& out) {
  out.precision(17);
  out << "metric,value\n";
  out << "c_precision," << report.c_precision << "\n";
  out << "c_recall," << report.c_recall << "\n";
  out << "c_f1," << report.c_f1 << "\n";
  out << "o_precision," << report.o_precision << "\n";
  out << "o_recall," << report.o_recall << "\n";
  out << "o_f1," << report.o_f1 << "\n";
  out << "duplicate_ratio," << report.duplicate_ratio << "\n";
  out << "order_rigidness," << report.order_rigidness << "\n";
  out << "rigidness_no_pairs," << (report.rigidness_no_pairs ? 1 : 0) << "\n";
}

void write_per_class_csv(const MetricsReport& report, const LabelVocabulary& vocab,
                         std::ostream& out) {
  out.precision(17);
  out << "class,name,true_positives,predicted,actual,precision,recall,defined\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const PerClassStats& stats = report.per_class[c];
    out << c << ',' << vocab.names[c] << ',' << stats.true_positives << ',' << stats.predicted
        << ',' << stats.actual << ',' << stats.precision << ',' << stats.recall << ','
        << (stats.precision_defined && stats.recall_defined ? 1 : 0) << "\n";
  }
}

std::string format_metrics_table(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "C-P " << report.c_precision << "  C-R " << report.c_recall << "  C-F1 " << report.c_f1
      << "\n";
  out << "O-P " << report.o_precision << "  O-R " << report.o_recall << "  O-F1 " << report.o_f1
      << "\n";
  out << "duplicate_ratio " << report.duplicate_ratio << "\n";
  out << "order_rigidness " << report.order_rigidness;
  if (report.rigidness_no_pairs) out << " (no co-occurring pairs)";
  out << "\n";
  return out.str();
}

}  // namespace orl
