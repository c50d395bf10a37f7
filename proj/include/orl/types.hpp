#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orl/errors.hpp"
#include "orl/matrix.hpp"

namespace orl {

// Real classes occupy indices 0..n_classes-1; the two control tokens sit at
// the end of the index range, so the full class count is n_classes + 2.
struct LabelVocabulary {
  std::vector<std::string> names;         // one per real class
  std::vector<std::int64_t> frequencies;  // dataset occurrence counts per class

  int n_classes() const { return static_cast<int>(names.size()); }
  int start_token() const { return n_classes(); }
  int end_token() const { return n_classes() + 1; }
  int total_classes() const { return n_classes() + 2; }

  void validate() const {
    if (names.empty()) throw ValidationError("vocabulary: needs at least one class");
    if (names.size() != frequencies.size())
      throw ValidationError("vocabulary: names/frequencies size mismatch");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty()) throw ValidationError("vocabulary: empty class name");
      if (frequencies[i] < 0) throw ValidationError("vocabulary: negative frequency");
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        if (names[i] == names[j]) throw ValidationError("vocabulary: duplicate name " + names[i]);
      }
    }
  }
};

// One training example: global feature vector, spatial feature grid for the
// attention path, and the (unordered) ground-truth label set.
struct SampleRecord {
  Vector global_feature;
  std::vector<Vector> spatial_features;  // one vector per grid cell
  std::vector<int> labels;               // non-empty, unique class indices

  void validate(int n_classes) const {
    if (labels.empty()) throw ValidationError("sample: label set must be non-empty");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= n_classes)
        throw ValidationError("sample: label index out of vocabulary range");
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        if (labels[i] == labels[j]) throw ValidationError("sample: duplicate label");
      }
    }
  }
};

}  // namespace orl
