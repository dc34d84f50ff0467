#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "polyacp/checkpoint.hpp"
#include "polyacp/config.hpp"
#include "polyacp/error.hpp"
#include "polyacp/evaluation.hpp"
#include "polyacp/inference.hpp"
#include "polyacp/io.hpp"
#include "polyacp/labels.hpp"
#include "polyacp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace polyacp;

namespace {

template <class T>
T number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + text + "' for '" + key + "'");
  return value;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
};

PlantedCoreScenario scenario_from(const KeyValues& values) {
  PlantedCoreScenario s;
  const std::map<std::string, std::size_t*> sizes = {
      {"reviewers", &s.reviewers},         {"products", &s.products},
      {"ratings", &s.ratings},             {"weeks", &s.weeks},
      {"background_tuples", &s.background_tuples}, {"cores", &s.cores},
      {"core_reviewers", &s.core_reviewers}, {"core_products", &s.core_products},
      {"core_ratings", &s.core_ratings},   {"core_weeks", &s.core_weeks},
  };
  for (const auto& [key, value] : values) {
    if (const auto it = sizes.find(key); it != sizes.end()) {
      *it->second = number<std::size_t>(key, value);
    } else if (key == "core_density") {
      s.core_density = number<double>(key, value);
    } else if (key == "label_fraction") {
      s.label_fraction = number<double>(key, value);
    } else if (key == "task_overlap") {
      s.task_overlap = number<double>(key, value);
    } else if (key == "epoch_origin") {
      s.epoch_origin = number<std::int64_t>(key, value);
    } else {
      throw ConfigError("unknown simulate key '" + key + "'");
    }
  }
  return s;
}

int simulate(const SimulateArgs& args) {
  const auto scenario = scenario_from(args.config.empty() ? KeyValues{} : read_key_values(args.config));
  const auto config = planted_core_config(scenario);
  auto rng = make_rng(args.seed, Stream::synthetic);
  const auto data = generate(config, rng);
  fs::create_directories(args.out_dir);
  write_dataset(data, args.out_dir);

  // Ready-made fit config declaring the mode kinds of tuples.csv.
  auto out = io::open_output(fs::path(args.out_dir) / "fit.conf");
  out << "modes = ";
  for (std::size_t k = 0; k < config.modes.size(); ++k) {
    out << (k ? "," : "") << config.modes[k].name << ':' << to_string(config.modes[k].kind);
  }
  out << "\nepoch_origin = " << config.epoch_origin << '\n';

  std::printf("%zu tuples, %zu labeled entities, %zu cores -> %s\n", data.tensor.size(),
              data.labels.labeled_any().size(), data.core_members.size(), args.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string tuples;
  std::string labels;
  std::string validation;
  std::string config;
  std::string checkpoint;
  std::string report;
  std::string resume;
  std::vector<std::string> set;
  std::optional<int> workers;
  std::optional<int> rank;
  std::optional<std::int64_t> iters;
  std::optional<std::string> optimizer;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batch_size;
  bool quiet = false;
};

std::vector<ModeDecl> parse_modes(const std::string& text) {
  std::vector<ModeDecl> modes;
  for (const auto& item : io::split(text, ',')) {
    const auto entry = std::string(io::trim(item));
    const auto colon = entry.find(':');
    ModeDecl decl;
    decl.name = std::string(io::trim(entry.substr(0, colon)));
    if (colon != std::string::npos) decl.kind = parse_mode_kind(io::trim(entry.substr(colon + 1)));
    if (decl.name.empty()) throw ConfigError("empty mode name in 'modes'");
    modes.push_back(decl);
  }
  return modes;
}

void check_same_scheme(const TensorScheme& a, const TensorScheme& b) {
  if (a.mode_count() != b.mode_count()) throw CheckpointError("checkpoint was fit on a different number of modes");
  for (std::size_t k = 0; k < a.mode_count(); ++k) {
    if (a.modes[k].name != b.modes[k].name || a.entities[k].ids() != b.entities[k].ids()) {
      throw CheckpointError("checkpoint entities differ from the tuples in mode '" + a.modes[k].name + "'");
    }
  }
}

int fit_command(const FitArgs& args) {
  std::optional<Checkpoint> resumed;
  Hyperparams hyper;
  if (!args.resume.empty()) {
    resumed = load_checkpoint(args.resume);
    hyper = resumed->hyper;
  }

  IngestOptions ingest;
  KeyValues file = args.config.empty() ? KeyValues{} : read_key_values(args.config);
  for (const auto& entry : args.set) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + entry + "'");
    file[std::string(io::trim(std::string_view(entry).substr(0, eq)))] =
        std::string(io::trim(std::string_view(entry).substr(eq + 1)));
  }
  for (const auto& [key, value] : apply_hyperparams(hyper, file)) {
    if (key == "modes") {
      ingest.modes = parse_modes(value);
    } else if (key == "epoch_origin") {
      ingest.epoch_origin = number<std::int64_t>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (args.workers) hyper.workers = *args.workers;
  if (args.rank) hyper.rank = *args.rank;
  if (args.iters) hyper.max_iters = *args.iters;
  if (args.optimizer) hyper.optimizer = parse_optimizer(*args.optimizer);
  if (args.seed) hyper.seed = *args.seed;
  if (args.batch_size) hyper.batch_size = *args.batch_size;
  hyper.validate();

  auto data = ingest_tuples(args.tuples, ingest);
  if (data.rejected > 0) std::fprintf(stderr, "polyacp: rejected %zu of %zu records\n", data.rejected, data.records);
  const auto& tensor = data.tensor;

  std::vector<LabelSet> labels;
  if (!args.labels.empty()) {
    auto read = read_labels(args.labels, tensor.scheme());
    if (read.unknown_entities > 0) {
      std::fprintf(stderr, "polyacp: skipped %zu label rows for unknown entities\n", read.unknown_entities);
    }
    labels = std::move(read.sets);
  }
  FitOptions options;
  if (!args.validation.empty()) options.validation = read_labels(args.validation, tensor.scheme()).sets;
  if (!args.quiet) {
    options.on_iteration = [&](const IterationRecord& record, const ModelState&) {
      if ((record.t + 1) % 100 == 0) {
        std::fprintf(stderr, "t=%lld objective=%s shrunk=%zu\n", static_cast<long long>(record.t + 1),
                     record.objective ? std::to_string(*record.objective).c_str() : "-", record.shrunk);
      }
      return true;
    };
  }

  std::optional<ModelState> start;
  std::int64_t done = 0;
  if (resumed) {
    check_same_scheme(tensor.scheme(), resumed->scheme);
    start = std::move(resumed->state);
    done = resumed->iterations_run;
  }
  const auto report = fit(tensor, labels, hyper, options, std::move(start));

  if (!args.checkpoint.empty()) {
    save_checkpoint({hyper, report.state, tensor.scheme(),
                     done + static_cast<std::int64_t>(report.iterations.size())},
                    args.checkpoint);
  }
  if (!args.report.empty()) {
    auto out = io::open_output(args.report);
    write_report(report, out);
  }
  std::printf("fit %zu iterations, %zu tuples, %zu of %d components shrunk%s\n", report.iterations.size(),
              tensor.size(), shrunk_components(report.state.lambda), hyper.rank,
              report.stopped_early ? " (stopped early)" : "");
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string checkpoint;
  std::string mode;
  std::string task;
  std::string out;
};

int score_command(const ScoreArgs& args) {
  const auto checkpoint = load_checkpoint(args.checkpoint);
  const auto& scheme = checkpoint.scheme;
  const auto mode = scheme.mode_index(args.mode);
  if (!mode) throw Error("unknown mode '" + args.mode + "'");

  std::vector<ScoreRow> rows;
  if (args.task.empty()) {
    const auto norms = lambda_weighted_norms(checkpoint.state, *mode);
    for (std::size_t e = 0; e < norms.size(); ++e) {
      rows.push_back({args.mode, scheme.entities[*mode].id(static_cast<EntityIndex>(e)), "unsupervised", norms[e]});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) { return a.score > b.score; });
  } else {
    const auto* head = checkpoint.state.head_for_mode(*mode);
    if (head == nullptr) throw Error("mode '" + args.mode + "' has no supervised head");
    std::optional<std::size_t> task;
    for (std::size_t l = 0; l < head->tasks.size(); ++l) {
      if (head->tasks[l].name == args.task) task = l;
    }
    if (!task) throw Error("mode '" + args.mode + "' has no task '" + args.task + "'");
    rows = score_rows(checkpoint.state, scheme, *mode, *task);
  }

  if (args.out.empty() || args.out == "-") {
    write_scores(rows, std::cout);
  } else {
    auto out = io::open_output(args.out);
    write_scores(rows, out);
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> scores;
  std::string truth;
  std::string exclude;
  double threshold = 0.5;
};

// (mode, entity, task) -> label, read from a labels/truth file.
using Truth = std::map<std::tuple<std::string, std::string, std::string>, int>;

Truth read_truth(const std::string& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!io::read_line(in, line)) throw IngestError(path + ": empty file");
  const char delimiter = io::detect_delimiter(line);
  Truth truth;
  std::size_t line_number = 1;
  while (io::read_line(in, line)) {
    ++line_number;
    if (io::trim(line).empty()) continue;
    const auto f = io::split(line, delimiter);
    if (f.size() < 4) throw IngestError(path + " line " + std::to_string(line_number) + ": expected 4 columns");
    const auto z = std::string(io::trim(f[3]));
    int label = 0;
    if (z == "1" || z == "+1") {
      label = 1;
    } else if (z == "-1" || z == "0") {
      label = 0;
    } else {
      throw IngestError(path + " line " + std::to_string(line_number) + ": invalid label '" + z + "'");
    }
    truth[{std::string(io::trim(f[0])), std::string(io::trim(f[1])), std::string(io::trim(f[2]))}] = label;
  }
  return truth;
}

int eval_command(const EvalArgs& args) {
  const auto truth = read_truth(args.truth);
  std::set<std::pair<std::string, std::string>> excluded;
  if (!args.exclude.empty()) {
    for (const auto& [key, label] : read_truth(args.exclude)) excluded.emplace(std::get<0>(key), std::get<1>(key));
  }

  std::vector<double> aucs, f1s;
  for (const auto& path : args.scores) {
    auto in = io::open_input(path);
    const auto rows = read_scores(in);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& row : rows) {
      if (excluded.count({row.mode, row.entity})) continue;
      auto it = truth.find({row.mode, row.entity, row.task});
      // Unsupervised scores are matched against the first task of the entity.
      if (it == truth.end() && row.task == "unsupervised") {
        it = truth.lower_bound({row.mode, row.entity, ""});
        if (it != truth.end() && (std::get<0>(it->first) != row.mode || std::get<1>(it->first) != row.entity)) {
          it = truth.end();
        }
      }
      if (it == truth.end()) continue;
      scores.push_back(row.score);
      labels.push_back(it->second);
    }
    if (scores.empty()) throw Error(path + ": no scored entity appears in the truth file");
    const auto metrics = classification_metrics(scores, labels, args.threshold);
    if (args.scores.size() > 1) std::cout << "# " << path << '\n';
    write_metrics(metrics, std::cout);
    aucs.push_back(metrics.auc);
    f1s.push_back(metrics.f1);
  }
  if (args.scores.size() > 1) {
    const auto print = [](const char* name, const std::vector<double>& v) {
      const auto d = dispersion_report(v);
      std::printf("%s: min %.6f q1 %.6f median %.6f q3 %.6f max %.6f\n", name, d.min, d.q1, d.median, d.q3, d.max);
    };
    std::cout << "# dispersion over " << args.scores.size() << " runs\n";
    print("auc", aucs);
    print("f1", f1s);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised binary tensor decomposition for dense-core detection"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a planted-core synthetic dataset");
  simulate_cmd->add_option("--config", sim.config, "Scenario key-value file")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  simulate_cmd->add_option("--seed", sim.seed, "Random seed");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a tuple file");
  fit_cmd->add_option("--tuples", fa.tuples, "Tuple file, one column per mode")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--labels", fa.labels, "Training labels: mode,entity,task,label")->check(CLI::ExistingFile);
  fit_cmd->add_option("--validation", fa.validation, "Held-out labels for validation AUC")->check(CLI::ExistingFile);
  fit_cmd->add_option("--config", fa.config, "Key-value config (hyperparameters, modes, epoch_origin)")
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--set", fa.set, "Override one config key (KEY=VALUE, repeatable)");
  fit_cmd->add_option("--checkpoint", fa.checkpoint, "Where to write the checkpoint");
  fit_cmd->add_option("--report", fa.report, "Where to write the per-iteration report");
  fit_cmd->add_option("--resume", fa.resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  fit_cmd->add_option("--workers", fa.workers, "Worker threads per step");
  fit_cmd->add_option("--rank", fa.rank, "CP rank R");
  fit_cmd->add_option("--iters", fa.iters, "Iterations to run");
  fit_cmd->add_option("--optimizer", fa.optimizer, "natgrad1, natgrad2 or sgd");
  fit_cmd->add_option("--seed", fa.seed, "Random seed");
  fit_cmd->add_option("--batch-size", fa.batch_size, "Positives per mini-batch");
  fit_cmd->add_flag("--quiet", fa.quiet, "No progress lines");

  ScoreArgs sa;
  auto* score_cmd = app.add_subcommand("score", "Score the entities of one mode");
  score_cmd->add_option("--checkpoint", sa.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--mode", sa.mode, "Mode name")->required();
  score_cmd->add_option("--task", sa.task, "Task name (omit for the unsupervised norm score)");
  score_cmd->add_option("--out", sa.out, "Output file (default stdout)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "AUC, precision, recall and F1 of score files");
  eval_cmd->add_option("--scores", ea.scores, "Score file (repeatable)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", ea.truth, "Truth labels: mode,entity,task,label")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--exclude", ea.exclude, "Label file whose entities are left out (training labels)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--threshold", ea.threshold, "Decision threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "polyacp: error: %s\n", e.what());
    return e.get_exit_code() ? e.get_exit_code() : 2;
  }

  try {
    if (*simulate_cmd) return simulate(sim);
    if (*fit_cmd) return fit_command(fa);
    if (*score_cmd) return score_command(sa);
    if (*eval_cmd) return eval_command(ea);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "polyacp: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
