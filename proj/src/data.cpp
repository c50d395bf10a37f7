#include "orl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "orl/rng.hpp"

namespace orl {
namespace {

// independent rng streams within one dataset seed
constexpr std::uint64_t kNameStream = 1;
constexpr std::uint64_t kPrototypeStream = 2;
constexpr std::uint64_t kSampleStream = 3;

const char* const kSyllables[] = {"ba", "re", "mi", "to", "ka", "su", "ne",
                                  "lo", "vi", "da", "po", "chu", "ger", "lan",
                                  "fi", "mo", "ze", "ri", "ta", "bu"};

std::vector<std::string> make_names(int n_classes, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> taken;
  std::vector<std::string> names;
  names.reserve(n_classes);
  constexpr int n_syllables = static_cast<int>(std::size(kSyllables));
  while (static_cast<int>(names.size()) < n_classes) {
    std::string name;
    const int parts = 2 + rng.below_int(2);
    for (int p = 0; p < parts; ++p) name += kSyllables[rng.below_int(n_syllables)];
    if (taken.insert(name).second) names.push_back(std::move(name));
  }
  return names;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_classes < 1) throw ValidationError("generator: n_classes must be >= 1");
  if (n_samples < 1) throw ValidationError("generator: n_samples must be >= 1");
  if (labels_min < 1) throw ValidationError("generator: labels_min must be >= 1");
  if (labels_max < labels_min) throw ValidationError("generator: labels_max < labels_min");
  if (labels_max > n_classes)
    throw ValidationError("generator: labels_max exceeds n_classes (infeasible)");
  if (feature_dim < 1) throw ValidationError("generator: feature_dim must be >= 1");
  if (grid_size < 1) throw ValidationError("generator: grid_size must be >= 1");
  if (noise_sigma < 0.0) throw ValidationError("generator: noise_sigma must be >= 0");
  if (zipf_exponent < 0.0) throw ValidationError("generator: zipf_exponent must be >= 0");
  for (const auto& pair : correlation_pairs) {
    if (pair.first < 0 || pair.first >= n_classes || pair.second < 0 ||
        pair.second >= n_classes || pair.first == pair.second)
      throw ValidationError("generator: correlation pair indices out of range");
    if (pair.strength < 0.0 || pair.strength > 1.0)
      throw ValidationError("generator: correlation strength must lie in [0, 1]");
  }
}

Matrix make_prototypes(int n_classes, int feature_dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix prototypes(n_classes, feature_dim);
  for (int c = 0; c < n_classes; ++c) {
    auto row = prototypes.row(c);
    double norm_sq = 0.0;
    for (int d = 0; d < feature_dim; ++d) {
      row[d] = rng.gaussian();
      norm_sq += row[d] * row[d];
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0) {
      for (int d = 0; d < feature_dim; ++d) row[d] /= norm;
    }
  }
  return prototypes;
}

Dataset generate(const GeneratorConfig& config) {
  config.validate();

  Dataset dataset;
  dataset.config = config;
  dataset.vocab.names = make_names(config.n_classes, derive_seed(config.seed, kNameStream));
  dataset.vocab.frequencies.assign(config.n_classes, 0);

  const Matrix prototypes = make_prototypes(config.n_classes, config.feature_dim,
                                            derive_seed(config.seed, kPrototypeStream));

  // class popularity ~ 1 / rank^s
  std::vector<double> weights(config.n_classes);
  for (int c = 0; c < config.n_classes; ++c) {
    weights[c] = std::pow(static_cast<double>(c + 1), -config.zipf_exponent);
  }

  Rng rng(derive_seed(config.seed, kSampleStream));
  const int n_cells = config.grid_size * config.grid_size;
  dataset.samples.reserve(config.n_samples);

  for (int s = 0; s < config.n_samples; ++s) {
    SampleRecord sample;
    const int target_count =
        config.labels_min + rng.below_int(config.labels_max - config.labels_min + 1);

    std::vector<char> chosen(config.n_classes, 0);
    std::vector<int> labels;
    while (static_cast<int>(labels.size()) < target_count) {
      double available = 0.0;
      for (int c = 0; c < config.n_classes; ++c) {
        if (!chosen[c]) available += weights[c];
      }
      double pick = rng.uniform() * available;
      int selected = -1;
      for (int c = 0; c < config.n_classes; ++c) {
        if (chosen[c]) continue;
        pick -= weights[c];
        selected = c;
        if (pick <= 0.0) break;
      }
      chosen[selected] = 1;
      labels.push_back(selected);
    }

    // pairwise co-occurrence boosts, then clip back to labels_max
    std::vector<char> protected_label(config.n_classes, 0);
    for (const auto& pair : config.correlation_pairs) {
      if (!chosen[pair.first] || chosen[pair.second]) continue;
      if (rng.uniform() < pair.strength) {
        chosen[pair.second] = 1;
        labels.push_back(pair.second);
        protected_label[pair.first] = 1;
        protected_label[pair.second] = 1;
      }
    }
    while (static_cast<int>(labels.size()) > config.labels_max) {
      int drop = -1;
      for (int i = static_cast<int>(labels.size()) - 1; i >= 0; --i) {
        if (!protected_label[labels[i]]) {
          drop = i;
          break;
        }
      }
      if (drop < 0) drop = static_cast<int>(labels.size()) - 1;
      chosen[labels[drop]] = 0;
      labels.erase(labels.begin() + drop);
    }

    sample.labels = labels;
    for (int label : labels) ++dataset.vocab.frequencies[label];

    // each label occupies a random subset of grid cells ("object size"); the
    // cell count doubles as the label's salience in the pooled global feature
    sample.spatial_features.assign(n_cells, Vector(config.feature_dim, 0.0));
    std::vector<int> spans(labels.size());
    const int min_span = std::max(1, n_cells / 4);
    const int max_span = std::max(min_span, n_cells / 2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      spans[i] = min_span + rng.below_int(max_span - min_span + 1);
    }
    std::vector<int> cell_order(n_cells);
    for (int g = 0; g < n_cells; ++g) cell_order[g] = g;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      rng.shuffle(cell_order);
      for (int k = 0; k < spans[i]; ++k) {
        axpy(1.0, prototypes.row(labels[i]), sample.spatial_features[cell_order[k]]);
      }
    }

    // global feature: normalized sum of the placed prototypes plus noise
    sample.global_feature.assign(config.feature_dim, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      axpy(static_cast<double>(spans[i]), prototypes.row(labels[i]), sample.global_feature);
    }
    const double norm = std::sqrt(squared_norm(sample.global_feature));
    if (norm > 0.0) {
      for (double& v : sample.global_feature) v /= norm;
    }
    for (double& v : sample.global_feature) v += config.noise_sigma * rng.gaussian();

    if (config.noise_sigma > 0.0) {
      for (Vector& cell : sample.spatial_features) {
        for (double& v : cell) v += config.noise_sigma * rng.gaussian();
      }
    }

    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// file format

namespace {

[[noreturn]] void data_parse_error(const std::filesystem::path& path, int line,
                                   const std::string& what) {
  throw ValidationError("load_dataset: " + path.string() + ":" + std::to_string(line) + ": " +
                        what);
}

class LineReader {
 public:
  LineReader(std::ifstream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  const std::string& next() {
    if (!std::getline(in_, line_)) data_parse_error(path_, line_no_ + 1, "unexpected end of file");
    ++line_no_;
    return line_;
  }

  int line_no() const { return line_no_; }

 private:
  std::ifstream& in_;
  const std::filesystem::path& path_;
  std::string line_;
  int line_no_ = 0;
};

void parse_doubles(const std::string& line, std::size_t offset, Vector& out, std::size_t count,
                   const std::filesystem::path& path, int line_no) {
  out.resize(count);
  const char* cursor = line.data() + offset;
  const char* end = line.data() + line.size();
  for (std::size_t i = 0; i < count; ++i) {
    while (cursor != end && *cursor == ' ') ++cursor;
    auto [ptr, ec] = std::from_chars(cursor, end, out[i]);
    if (ec != std::errc{}) data_parse_error(path, line_no, "bad numeric value");
    cursor = ptr;
  }
  while (cursor != end && *cursor == ' ') ++cursor;
  if (cursor != end) data_parse_error(path, line_no, "trailing data");
}

template <class T>
T parse_kv(const std::string& token, const std::string& key, const std::filesystem::path& path,
           int line_no) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0) data_parse_error(path, line_no, "expected " + prefix + "...");
  T value{};
  const char* begin = token.data() + prefix.size();
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) data_parse_error(path, line_no, "bad value in " + token);
  return value;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.vocab.validate();
  std::ofstream out(path);
  if (!out) throw RuntimeError("save_dataset: cannot open " + path.string());
  out.precision(17);

  const GeneratorConfig& cfg = dataset.config;
  out << "orldataset 1 n_classes=" << dataset.vocab.n_classes()
      << " n_samples=" << dataset.samples.size() << " feature_dim=" << cfg.feature_dim
      << " grid_size=" << cfg.grid_size << " seed=" << cfg.seed << "\n";
  for (int c = 0; c < dataset.vocab.n_classes(); ++c) {
    if (dataset.vocab.names[c].find(' ') != std::string::npos)
      throw ValidationError("save_dataset: class names cannot contain spaces");
    out << "class " << dataset.vocab.names[c] << " " << dataset.vocab.frequencies[c] << "\n";
  }
  const int n_cells = cfg.grid_size * cfg.grid_size;
  for (const SampleRecord& sample : dataset.samples) {
    sample.validate(dataset.vocab.n_classes());
    if (static_cast<int>(sample.global_feature.size()) != cfg.feature_dim ||
        static_cast<int>(sample.spatial_features.size()) != n_cells)
      throw ValidationError("save_dataset: sample shape disagrees with header dims");
    out << "sample " << sample.labels.size();
    for (int label : sample.labels) out << ' ' << label;
    out << "\n";
    out << "feature";
    for (double v : sample.global_feature) out << ' ' << v;
    out << "\n";
    for (const Vector& cell : sample.spatial_features) {
      out << "cell";
      for (double v : cell) out << ' ' << v;
      out << "\n";
    }
  }
  out << "end\n";
  if (!out) throw RuntimeError("save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("load_dataset: cannot open " + path.string());
  LineReader reader(in, path);

  std::istringstream header(reader.next());
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != "orldataset" || version != 1)
    data_parse_error(path, reader.line_no(), "bad magic, expected 'orldataset 1'");
  std::string token;
  header >> token;
  const int n_classes = parse_kv<int>(token, "n_classes", path, reader.line_no());
  header >> token;
  const int n_samples = parse_kv<int>(token, "n_samples", path, reader.line_no());
  header >> token;
  const int feature_dim = parse_kv<int>(token, "feature_dim", path, reader.line_no());
  header >> token;
  const int grid_size = parse_kv<int>(token, "grid_size", path, reader.line_no());
  header >> token;
  const std::uint64_t seed = parse_kv<std::uint64_t>(token, "seed", path, reader.line_no());
  if (n_classes < 1 || n_samples < 0 || feature_dim < 1 || grid_size < 1)
    data_parse_error(path, reader.line_no(), "invalid header dimensions");

  Dataset dataset;
  dataset.config.n_classes = n_classes;
  dataset.config.n_samples = n_samples;
  dataset.config.feature_dim = feature_dim;
  dataset.config.grid_size = grid_size;
  dataset.config.seed = seed;
  dataset.config.labels_max = n_classes;

  for (int c = 0; c < n_classes; ++c) {
    std::istringstream line(reader.next());
    std::string tag, name;
    std::int64_t freq = -1;
    line >> tag >> name >> freq;
    if (tag != "class" || name.empty() || freq < 0 || !line.eof())
      data_parse_error(path, reader.line_no(), "expected 'class <name> <frequency>'");
    dataset.vocab.names.push_back(name);
    dataset.vocab.frequencies.push_back(freq);
  }
  dataset.vocab.validate();

  const int n_cells = grid_size * grid_size;
  dataset.samples.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    SampleRecord sample;
    {
      std::istringstream line(reader.next());
      std::string tag;
      std::size_t n_labels = 0;
      line >> tag >> n_labels;
      if (tag != "sample" || n_labels == 0)
        data_parse_error(path, reader.line_no(), "expected 'sample <n> <labels...>'");
      sample.labels.resize(n_labels);
      for (std::size_t i = 0; i < n_labels; ++i) {
        if (!(line >> sample.labels[i]))
          data_parse_error(path, reader.line_no(), "missing label index");
      }
      if (!line.eof()) data_parse_error(path, reader.line_no(), "trailing data on sample line");
    }
    {
      const std::string& line = reader.next();
      if (line.rfind("feature", 0) != 0)
        data_parse_error(path, reader.line_no(), "expected feature line");
      parse_doubles(line, 7, sample.global_feature, feature_dim, path, reader.line_no());
    }
    sample.spatial_features.resize(n_cells);
    for (int g = 0; g < n_cells; ++g) {
      const std::string& line = reader.next();
      if (line.rfind("cell", 0) != 0)
        data_parse_error(path, reader.line_no(), "expected cell line");
      parse_doubles(line, 4, sample.spatial_features[g], feature_dim, path, reader.line_no());
    }
    try {
      sample.validate(n_classes);
    } catch (const ValidationError& err) {
      data_parse_error(path, reader.line_no(), err.what());
    }
    dataset.samples.push_back(std::move(sample));
  }
  if (reader.next() != "end") data_parse_error(path, reader.line_no(), "missing end marker");
  return dataset;
}

}  // namespace orl
