#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "orl/matrix.hpp"
#include "orl/types.hpp"

namespace orl {

// Per-image ground-truth sets and raw predicted sequences (ordered, possibly
// containing duplicates).
struct EvaluationBatch {
  std::vector<std::vector<int>> ground_truth;
  std::vector<std::vector<int>> predictions;

  std::size_t size() const { return ground_truth.size(); }
};

enum class F1Mean {
  geometric,  // default
  harmonic,
};

struct PerClassStats {
  int true_positives = 0;
  int predicted = 0;
  int actual = 0;
  double precision = 0.0;  // 0 when predicted == 0
  double recall = 0.0;     // 0 when actual == 0
  bool precision_defined = false;
  bool recall_defined = false;
};

struct MetricsReport {
  double c_precision = 0.0, c_recall = 0.0, c_f1 = 0.0;
  double o_precision = 0.0, o_recall = 0.0, o_f1 = 0.0;
  double duplicate_ratio = 0.0;
  double order_rigidness = 0.0;
  bool rigidness_no_pairs = false;  // no class pair ever co-occurred
  std::vector<PerClassStats> per_class;
};

// First occurrence of each label wins; the flag reports whether anything was
// dropped.
std::pair<std::vector<int>, bool> dedup(const std::vector<int>& sequence);

// Precision / recall / F1, overall pooled over images and per-class averaged.
// Predictions are deduplicated internally; zero-denominator classes score 0.
MetricsReport prf1(const EvaluationBatch& batch, const LabelVocabulary& vocab,
                   F1Mean mean = F1Mean::geometric);

// Fraction of images whose raw sequence repeats a label.
double duplicate_ratio(const EvaluationBatch& batch);

struct RigidnessResult {
  double value = 1.0;
  bool no_cooccurrence = false;
};

// Share of pairwise co-occurrences explained by each pair's most frequent
// relative order; 1.0 (flagged) when no pair ever co-occurs.
RigidnessResult order_rigidness(const EvaluationBatch& batch);

// Predicted-label co-occurrence matrix minus the ground-truth one, diagonal
// zeroed. Entries count images containing both classes.
Matrix cooccurrence_diff(const EvaluationBatch& batch, const LabelVocabulary& vocab);

// prf1 + duplicate_ratio + order_rigidness in one report.
MetricsReport evaluate_batch(const EvaluationBatch& batch, const LabelVocabulary& vocab,
                             F1Mean mean = F1Mean::geometric);

void write_metrics_csv(const MetricsReport& report, std::ostream& out);
void write_per_class_csv(const MetricsReport& report, const LabelVocabulary& vocab,
                         std::ostream& out);
std::string format_metrics_table(const MetricsReport& report);

}  // namespace orl
