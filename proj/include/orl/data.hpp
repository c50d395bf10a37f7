#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "orl/matrix.hpp"
#include "orl/types.hpp"

namespace orl {

struct GeneratorConfig {
  int n_classes = 10;
  int n_samples = 100;
  double zipf_exponent = 1.0;  // 0 = uniform class popularity

  struct CorrelationPair {
    int first = 0;
    int second = 0;
    double strength = 0.0;  // P(second added | first drawn), in [0, 1]
  };
  std::vector<CorrelationPair> correlation_pairs;

  int labels_min = 1;
  int labels_max = 3;
  int feature_dim = 16;
  int grid_size = 3;        // spatial grid is grid_size x grid_size
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  LabelVocabulary vocab;
  std::vector<SampleRecord> samples;
  GeneratorConfig config;  // dims and seed travel with the data
};

// Unit-norm class prototype vectors, one row per class. Deterministic in the
// seed; generate() derives its seed via derive_seed(config.seed, ...).
Matrix make_prototypes(int n_classes, int feature_dim, std::uint64_t seed);

// Zipfian label sets with optional pairwise co-occurrence boosts; features
// are noisy prototype mixtures, spatial grids place prototypes in random
// cell subsets.
Dataset generate(const GeneratorConfig& config);

// Line-delimited text format with a dims/seed header; see docs/formats.md.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace orl
