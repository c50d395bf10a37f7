#include "orl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "orl/data.hpp"
#include "orl/metrics.hpp"
#include "orl/training.hpp"

namespace orl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

GeneratorConfig generator_from_json(const json& spec) {
  GeneratorConfig config;
  config.n_classes = spec.value("n_classes", config.n_classes);
  config.n_samples = spec.value("n_samples", config.n_samples);
  config.zipf_exponent = spec.value("zipf_exponent", config.zipf_exponent);
  if (spec.contains("labels_per_sample")) {
    const auto& range = spec.at("labels_per_sample");
    if (!range.is_array() || range.size() != 2)
      throw ValidationError("config: labels_per_sample must be [min, max]");
    config.labels_min = range[0].get<int>();
    config.labels_max = range[1].get<int>();
  }
  config.labels_min = spec.value("labels_min", config.labels_min);
  config.labels_max = spec.value("labels_max", config.labels_max);
  config.feature_dim = spec.value("feature_dim", config.feature_dim);
  config.grid_size = spec.value("grid_size", config.grid_size);
  config.noise_sigma = spec.value("noise_sigma", config.noise_sigma);
  config.seed = spec.value("seed", config.seed);
  if (spec.contains("correlation_pairs")) {
    for (const auto& entry : spec.at("correlation_pairs")) {
      if (!entry.is_array() || entry.size() != 3)
        throw ValidationError("config: correlation pair must be [first, second, strength]");
      config.correlation_pairs.push_back(
          {entry[0].get<int>(), entry[1].get<int>(), entry[2].get<double>()});
    }
  }
  return config;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError("config " + path.string() + ": " + err.what());
  }
}

void apply_train_json(const json& spec, TrainConfig& config) {
  if (spec.contains("strategy")) {
    const auto strategy = parse_strategy(spec.at("strategy").get<std::string>());
    if (!strategy) throw ValidationError("config: unknown strategy");
    config.strategy = *strategy;
  }
  config.epochs = spec.value("epochs", config.epochs);
  config.batch_size = spec.value("batch_size", config.batch_size);
  config.learning_rate = spec.value("learning_rate", config.learning_rate);
  config.lr_decay = spec.value("lr_decay", config.lr_decay);
  if (spec.contains("lr_milestones")) {
    config.lr_milestones.clear();
    for (const auto& milestone : spec.at("lr_milestones")) {
      config.lr_milestones.push_back(milestone.get<double>());
    }
  }
  config.seed = spec.value("seed", config.seed);
  config.use_attention = spec.value("use_attention", config.use_attention);
  config.teacher_forcing = spec.value("teacher_forcing", config.teacher_forcing);
  config.hidden_dim = spec.value("hidden_dim", config.hidden_dim);
  config.embed_dim = spec.value("embed_dim", config.embed_dim);
  config.attention_dim = spec.value("attention_dim", config.attention_dim);
  config.validation_fraction = spec.value("validation_fraction", config.validation_fraction);
  if (spec.contains("optimizer")) {
    const std::string name = spec.at("optimizer").get<std::string>();
    if (name == "sgd") {
      config.optimizer = OptimizerKind::sgd;
    } else if (name == "adam") {
      config.optimizer = OptimizerKind::adam;
    } else {
      throw ValidationError("config: optimizer must be sgd or adam");
    }
  }
}

OrderingStrategy parse_strategy_or_throw(const std::string& name) {
  const auto strategy = parse_strategy(name);
  if (!strategy)
    throw ValidationError("unknown strategy '" + name +
                          "' (expected frequent_first, rare_first, dictionary_order, "
                          "random_order, mla or pla)");
  return *strategy;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create output directory " + dir.string());
}

template <class WriteFn>
void write_file(const fs::path& path, WriteFn&& write) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  write(out);
  if (!out) throw RuntimeError("write failed for " + path.string());
}

int eval_max_steps(const std::vector<SampleRecord>& samples) {
  std::size_t max_labels = 1;
  for (const SampleRecord& sample : samples) max_labels = std::max(max_labels, sample.labels.size());
  return static_cast<int>(max_labels) + 2;
}

double smoothed_final_loss(const std::vector<double>& losses, int window = 50) {
  if (losses.empty()) return 0.0;
  const int n = static_cast<int>(losses.size());
  const int take = std::min(window, n);
  double sum = 0.0;
  for (int i = n - take; i < n; ++i) sum += losses[i];
  return sum / take;
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct GenArgs {
  std::string config_path;
  std::string out_path = "dataset.orldata";
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const GenArgs& args, std::ostream& out) {
  GeneratorConfig config = generator_from_json(load_json(args.config_path));
  if (args.seed) config.seed = *args.seed;
  const Dataset dataset = generate(config);
  save_dataset(dataset, args.out_path);

  double label_total = 0.0;
  for (const SampleRecord& sample : dataset.samples) label_total += sample.labels.size();
  out << "wrote " << args.out_path << "\n";
  out << "samples " << dataset.samples.size() << ", classes " << dataset.vocab.n_classes()
      << ", mean labels/sample " << label_total / dataset.samples.size() << "\n";
  out << "class frequencies:";
  for (int c = 0; c < dataset.vocab.n_classes(); ++c) {
    out << ' ' << dataset.vocab.names[c] << '=' << dataset.vocab.frequencies[c];
  }
  out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_path;
  std::string out_dir = "train_out";
  TrainConfig config;
};

int cmd_train(const TrainArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data_path);
  const TrainResult result = train(dataset.samples, dataset.vocab, args.config);
  ensure_directory(args.out_dir);
  const fs::path dir(args.out_dir);
  save_model(result.params, dir / "model.orlmodel");
  write_file(dir / "loss.csv", [&](std::ostream& f) { write_loss_csv(result.log, f); });
  write_file(dir / "epochs.csv", [&](std::ostream& f) { write_epoch_csv(result.log, f); });
  out << "strategy " << strategy_name(args.config.strategy) << ", iterations "
      << result.log.iteration_losses.size() << "\n";
  out << "final smoothed loss " << smoothed_final_loss(result.log.iteration_losses) << "\n";
  if (is_dynamic(args.config.strategy)) {
    out << "mean alignment ms " << result.log.alignment_time.mean_ms() << "\n";
  }
  out << "wrote " << (dir / "model.orlmodel").string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string data_path;
  std::string model_path;
  std::string out_dir = "eval_out";
  F1Mean mean = F1Mean::geometric;
  int max_steps = 0;  // 0 = auto
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data_path);
  const ModelParameters params = load_model(args.model_path);
  if (params.config.n_classes != dataset.vocab.n_classes())
    throw ValidationError("eval: model and dataset class counts disagree");
  const int steps = args.max_steps > 0 ? args.max_steps : eval_max_steps(dataset.samples);
  const EvaluationBatch batch =
      decode_batch(dataset.samples, params, steps, params.config.has_attention());
  const MetricsReport report = evaluate_batch(batch, dataset.vocab, args.mean);
  ensure_directory(args.out_dir);
  const fs::path dir(args.out_dir);
  write_file(dir / "metrics.csv", [&](std::ostream& f) { write_metrics_csv(report, f); });
  write_file(dir / "per_class.csv",
             [&](std::ostream& f) { write_per_class_csv(report, dataset.vocab, f); });
  out << format_metrics_table(report);
  out << "wrote " << (dir / "metrics.csv").string() << "\n";
  return 0;
}

struct CompareArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int cmd_compare(const CompareArgs& args, std::ostream& out) {
  const json spec = load_json(args.config_path);

  if (!spec.contains("strategies") || !spec.at("strategies").is_array() ||
      spec.at("strategies").empty())
    throw ValidationError("compare config: needs a non-empty 'strategies' array");
  std::vector<OrderingStrategy> strategies;
  for (const auto& name : spec.at("strategies")) {
    strategies.push_back(parse_strategy_or_throw(name.get<std::string>()));
  }

  TrainConfig base;
  if (spec.contains("train")) apply_train_json(spec.at("train"), base);
  if (args.seed) base.seed = *args.seed;
  base.validate();

  Dataset dataset;
  if (spec.contains("dataset")) {
    dataset = load_dataset(spec.at("dataset").get<std::string>());
  } else if (spec.contains("generator")) {
    dataset = generate(generator_from_json(spec.at("generator")));
  } else {
    throw ValidationError("compare config: needs 'dataset' or 'generator'");
  }

  std::string out_dir = args.out_dir;
  if (out_dir.empty()) out_dir = spec.value("out", "compare_out");
  ensure_directory(out_dir);
  const fs::path dir(out_dir);

  const auto [train_idx, val_idx] = split_indices(static_cast<int>(dataset.samples.size()),
                                                  base.validation_fraction, base.seed);
  std::vector<SampleRecord> val_samples;
  for (int idx : val_idx) val_samples.push_back(dataset.samples[idx]);
  const int steps = eval_max_steps(dataset.samples);

  std::ostringstream combined;
  combined.precision(17);
  combined << "strategy,c_f1,o_f1,duplicate_ratio,order_rigidness,final_loss,alignment_ms\n";
  for (OrderingStrategy strategy : strategies) {
    TrainConfig config = base;
    config.strategy = strategy;
    const TrainResult result = train(dataset.samples, dataset.vocab, config);
    const auto& eval_samples = val_samples.empty() ? dataset.samples : val_samples;
    const EvaluationBatch batch =
        decode_batch(eval_samples, result.params, steps, config.use_attention);
    const MetricsReport report = evaluate_batch(batch, dataset.vocab);
    const double final_loss = smoothed_final_loss(result.log.iteration_losses);

    combined << strategy_name(strategy) << ',' << report.c_f1 << ',' << report.o_f1 << ','
             << report.duplicate_ratio << ',' << report.order_rigidness << ',' << final_loss
             << ',' << result.log.alignment_time.mean_ms() << "\n";
    write_file(dir / ("loss_" + std::string(strategy_name(strategy)) + ".csv"),
               [&](std::ostream& f) { write_loss_csv(result.log, f); });
    out << strategy_name(strategy) << ": o_f1 " << report.o_f1 << ", duplicates "
        << report.duplicate_ratio << ", rigidness " << report.order_rigidness << ", final loss "
        << final_loss << "\n";
  }
  write_file(dir / "combined.csv", [&](std::ostream& f) { f << combined.str(); });
  out << "wrote " << (dir / "combined.csv").string() << "\n";
  return 0;
}

struct AlignArgs {
  std::string matrix_path;
  std::string labels;
  std::string mode = "both";
};

Matrix parse_matrix_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open matrix file " + path.string());
  std::vector<Vector> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    Vector row;
    const char* cursor = line.data();
    const char* end = line.data() + line.size();
    while (cursor != end) {
      while (cursor != end && (*cursor == ' ' || *cursor == '\t')) ++cursor;
      if (cursor == end) break;
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cursor, end, value);
      if (ec != std::errc{})
        throw ValidationError("matrix " + path.string() + ":" + std::to_string(line_no) +
                              ": bad numeric value");
      row.push_back(value);
      cursor = ptr;
    }
    if (row.empty()) continue;
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ValidationError("matrix " + path.string() + ":" + std::to_string(line_no) +
                            ": ragged row (expected " + std::to_string(width) + " values)");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("matrix " + path.string() + ": no rows");
  Matrix matrix(static_cast<int>(rows.size()), static_cast<int>(width));
  for (int r = 0; r < matrix.rows(); ++r) {
    for (int c = 0; c < matrix.cols(); ++c) matrix(r, c) = rows[r][c];
  }
  return matrix;
}

std::vector<int> parse_label_list(const std::string& text) {
  std::vector<int> labels;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      throw ValidationError("bad label list entry '" + token + "'");
    labels.push_back(value);
  }
  if (labels.empty()) throw ValidationError("label list is empty");
  return labels;
}

int cmd_align(const AlignArgs& args, std::ostream& out) {
  // rows are classes (last row = end token), columns are time steps
  const Matrix matrix = parse_matrix_file(args.matrix_path);
  const PredictionMatrix preds = make_prediction_matrix(matrix);
  const std::vector<int> labels = parse_label_list(args.labels);
  const int end_token = preds.n_total_classes() - 1;

  auto report = [&](const char* name, const AlignmentMatrix& alignment) {
    out << name << ": order";
    for (int t = 0; t < alignment.n_steps(); ++t) {
      const int label = alignment.step_to_label[t];
      if (label == end_token) {
        out << " <end>";
      } else {
        out << ' ' << label;
      }
    }
    out.precision(6);
    out << ", loss " << std::fixed << sequence_loss(preds, alignment) << "\n";
    out.unsetf(std::ios::fixed);
  };

  if (args.mode != "mla" && args.mode != "pla" && args.mode != "both")
    throw ValidationError("mode must be mla, pla or both");
  if (args.mode == "mla" || args.mode == "both")
    report("mla", align_mla(preds, labels, end_token));
  if (args.mode == "pla" || args.mode == "both")
    report("pla", align_pla(preds, labels, end_token));
  return 0;
}

struct BenchArgs {
  std::string data_path;
  std::string model_path;
  int samples = 1000;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data_path);
  ModelParameters params =
      args.model_path.empty()
          ? ModelParameters::random_init(
                resolve_model_config(TrainConfig{}, dataset.vocab,
                                     static_cast<int>(dataset.samples.front().global_feature.size())),
                args.seed)
          : load_model(args.model_path);
  const AlignmentBenchmark bench =
      benchmark_alignment(dataset.samples, dataset.vocab, params, args.samples);
  out.precision(6);
  out << std::fixed;
  out << "samples " << bench.samples << "\n";
  out << "mean forward ms  " << bench.forward.mean_ms() << "\n";
  out << "mean mla ms      " << bench.mla.mean_ms() << "\n";
  out << "mean pla ms      " << bench.pla.mean_ms() << "\n";
  out << "mean backward ms " << bench.backward.mean_ms() << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"orderless recurrent multi-label training toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", gen_args.config_path, "generator config (json)")->required();
  gen->add_option("--out", gen_args.out_path, "output dataset path");
  std::uint64_t gen_seed = 0;
  CLI::Option* gen_seed_opt = gen->add_option("--seed", gen_seed, "override config seed");

  TrainArgs train_args;
  std::string train_strategy = "pla";
  std::string train_optimizer = "adam";
  CLI::App* train_cmd = app.add_subcommand("train", "train one strategy");
  train_cmd->add_option("--data", train_args.data_path, "dataset file")->required();
  train_cmd->add_option("--strategy", train_strategy, "ordering strategy");
  train_cmd->add_option("--epochs", train_args.config.epochs, "training epochs");
  train_cmd->add_option("--batch-size", train_args.config.batch_size, "mini-batch size");
  train_cmd->add_option("--lr", train_args.config.learning_rate, "learning rate");
  train_cmd->add_option("--lr-decay", train_args.config.lr_decay,
                        "step-decay factor applied at each milestone");
  train_cmd->add_option("--lr-milestones", train_args.config.lr_milestones,
                        "epoch fractions where the rate decays")
      ->delimiter(',');
  train_cmd->add_option("--seed", train_args.config.seed, "rng seed");
  train_cmd->add_flag("--attention", train_args.config.use_attention, "enable attention");
  train_cmd->add_flag("--teacher-forcing", train_args.config.teacher_forcing,
                      "feed ground-truth tokens during training");
  train_cmd->add_option("--hidden-dim", train_args.config.hidden_dim, "LSTM hidden size");
  train_cmd->add_option("--embed-dim", train_args.config.embed_dim, "embedding size");
  train_cmd->add_option("--optimizer", train_optimizer, "sgd or adam");
  train_cmd->add_option("--val-fraction", train_args.config.validation_fraction,
                        "held-out fraction");
  train_cmd->add_option("--out", train_args.out_dir, "output directory");

  EvalArgs eval_args;
  std::string eval_mean = "geometric";
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--data", eval_args.data_path, "dataset file")->required();
  eval_cmd->add_option("--model", eval_args.model_path, "checkpoint file")->required();
  eval_cmd->add_option("--out", eval_args.out_dir, "output directory");
  eval_cmd->add_option("--f1-mean", eval_mean, "geometric or harmonic");
  eval_cmd->add_option("--max-steps", eval_args.max_steps, "decode step cap (0 = auto)");

  CompareArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand("compare", "train and compare strategies");
  compare_cmd->add_option("--config", compare_args.config_path, "experiment spec (json)")
      ->required();
  compare_cmd->add_option("--out", compare_args.out_dir, "output directory");
  std::uint64_t compare_seed = 0;
  CLI::Option* compare_seed_opt =
      compare_cmd->add_option("--seed", compare_seed, "override experiment seed");

  AlignArgs align_args;
  CLI::App* align_cmd = app.add_subcommand("align", "one-shot alignment on a matrix file");
  align_cmd->add_option("--matrix", align_args.matrix_path, "probability matrix file")->required();
  align_cmd->add_option("--labels", align_args.labels, "comma-separated class indices")
      ->required();
  align_cmd->add_option("--mode", align_args.mode, "mla, pla or both");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "alignment timing benchmark");
  bench_cmd->add_option("--data", bench_args.data_path, "dataset file")->required();
  bench_cmd->add_option("--model", bench_args.model_path, "checkpoint file (optional)");
  bench_cmd->add_option("--samples", bench_args.samples, "minimum samples to time");
  bench_cmd->add_option("--seed", bench_args.seed, "seed for random params when no model given");

  std::vector<const char*> argv;
  argv.push_back("orl");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& help) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& parse_error) {
    err << "error: " << parse_error.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      if (*gen_seed_opt) gen_args.seed = gen_seed;
      return cmd_gen(gen_args, out);
    }
    if (train_cmd->parsed()) {
      train_args.config.strategy = parse_strategy_or_throw(train_strategy);
      if (train_optimizer == "sgd") {
        train_args.config.optimizer = OptimizerKind::sgd;
      } else if (train_optimizer == "adam") {
        train_args.config.optimizer = OptimizerKind::adam;
      } else {
        throw ValidationError("optimizer must be sgd or adam");
      }
      return cmd_train(train_args, out);
    }
    if (eval_cmd->parsed()) {
      if (eval_mean == "geometric") {
        eval_args.mean = F1Mean::geometric;
      } else if (eval_mean == "harmonic") {
        eval_args.mean = F1Mean::harmonic;
      } else {
        throw ValidationError("--f1-mean must be geometric or harmonic");
      }
      return cmd_eval(eval_args, out);
    }
    if (compare_cmd->parsed()) {
      if (*compare_seed_opt) compare_args.seed = compare_seed;
      return cmd_compare(compare_args, out);
    }
    if (align_cmd->parsed()) return cmd_align(align_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, out);
    err << "error: no subcommand\n";
    return 1;
  } catch (const ValidationError& error) {
    err << "error: " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << "\n";
    return 2;
  }
}

}  // namespace orl
