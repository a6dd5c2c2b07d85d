// mvprune command-line entry point.
//
// Exit codes: 0 success, 1 runtime failure (including failed seeds),
// 2 bad arguments or configuration, 3 missing or malformed input, 4 refusal
// to overwrite.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mvprune/mvprune.hpp"

namespace fs = std::filesystem;
using namespace mvprune;

namespace {

struct Refusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Inputs

fs::path resolve_dataset_dir(const std::string& arg) {
  if (fs::is_directory(arg)) return fs::absolute(arg).lexically_normal();
  if (const char* root = std::getenv("MVPRUNE_DATA_DIR")) {
    const fs::path p = fs::path(root) / arg;
    if (fs::is_directory(p)) return fs::absolute(p).lexically_normal();
    throw LoadError("dataset not found: " + arg + " (also tried " + p.string() + ")");
  }
  throw LoadError("dataset not found: " + arg + " (MVPRUNE_DATA_DIR is not set)");
}

/// TU name: the directory's basename if `<base>_A.txt` exists, else the only `*_A.txt` inside.
std::string detect_tu_name(const fs::path& dir) {
  const std::string base = dir.filename().string();
  if (fs::exists(dir / (base + "_A.txt"))) return base;
  std::vector<std::string> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    if (f.size() > 6 && f.ends_with("_A.txt")) found.push_back(f.substr(0, f.size() - 6));
  }
  if (found.size() == 1) return found.front();
  if (found.empty()) throw LoadError("no *_A.txt file in " + dir.string());
  throw LoadError("several TU datasets in " + dir.string() + "; pass --name");
}

struct LoadedDataset {
  fs::path dir;
  std::string name;
  Dataset data;
};

LoadedDataset load_dataset(const std::string& arg, const std::string& name_override) {
  LoadedDataset d;
  d.dir = resolve_dataset_dir(arg);
  d.name = name_override.empty() ? detect_tu_name(d.dir) : name_override;
  d.data = tu::load(d.dir, d.name);
  return d;
}

/// Prepares `dir` for writing. An existing non-empty directory is refused unless `force`,
/// in which case its contents are removed first.
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw Refusal("--out " + dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw Refusal("refusing to overwrite " + dir.string() + " (use --force)");
    for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
  }
  fs::create_directories(dir);
}

void prepare_out_file(const fs::path& file, bool force) {
  if (fs::exists(file) && !force) throw Refusal("refusing to overwrite " + file.string() + " (use --force)");
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

// ---------------------------------------------------------------------------
// Config flags shared by train and sweep. Precedence: flags > config file > defaults.

struct ConfigFlags {
  std::string config_file;
  std::string dataset, dataset_name;  // `dataset` / `dataset_name` lines of the config file
  std::string backend;
  std::optional<std::size_t> views, epochs, pretrain_epochs;
  std::optional<double> learning_rate, threshold, lambda;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::optional<bool> use_mvp;
  std::vector<std::string> settings;  // key=value
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config_file, "key = value run configuration file");
  app->add_option("--backend", f.backend, "pooling backend (mean, sum, gcn-mean, gcn-sum, attention-topk, feature-topk, mincut)");
  app->add_option("--views", f.views, "number of feature views k");
  app->add_option("--epochs", f.epochs, "total training epochs");
  app->add_option("--pretrain-epochs", f.pretrain_epochs, "epochs before the MVP stage is enabled");
  app->add_option("--lr", f.learning_rate, "learning rate");
  app->add_option("--threshold", f.threshold, "threshold multiplier c");
  app->add_option("--lambda", f.lambda, "adjacency/feature blend of the node score");
  app->add_option("--seed", f.seed, "single seed (overrides the seed list)");
  app->add_option("--seeds", f.seeds, "seed list, e.g. 0-9 or 1,4,7");
  app->add_option("--mvp", f.use_mvp, "enable the multi-view pruning stage (true/false)");
  app->add_option("--set", f.settings, "extra key=value config override (repeatable)");
}

/// Reads a config file, pulling out the run-level `dataset` and `dataset_name`
/// keys (which are not training settings). A relative dataset path is taken
/// relative to the config file when it exists there.
std::string read_config_file(ConfigFlags& f) {
  std::ifstream in(f.config_file);
  if (!in) throw ConfigError("config", "cannot open " + f.config_file);
  std::string rest, line;
  while (std::getline(in, line)) {
    std::string body = line.substr(0, line.find('#'));
    const auto eq = body.find('=');
    const std::string key = eq == std::string::npos ? "" : config_detail::trim(body.substr(0, eq));
    if (key == "dataset" || key == "dataset_name") {
      const std::string value = config_detail::trim(body.substr(eq + 1));
      if (key == "dataset_name") {
        f.dataset_name = value;
        continue;
      }
      const fs::path near = fs::path(f.config_file).parent_path() / value;
      f.dataset = fs::path(value).is_relative() && fs::is_directory(near) ? near.string() : value;
      continue;
    }
    rest += line + '\n';
  }
  return rest;
}

TrainConfig resolve_config(ConfigFlags& f) {
  TrainConfig c;
  if (!f.config_file.empty()) apply_config_text(c, read_config_file(f));
  if (!f.backend.empty()) apply_setting(c, "backend", f.backend);
  for (const std::string& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
    apply_setting(c, config_detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  if (f.views) c.views = *f.views;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.pretrain_epochs) c.pretrain_epochs = *f.pretrain_epochs;
  if (f.learning_rate) c.learning_rate = *f.learning_rate;
  if (f.threshold) c.threshold = *f.threshold;
  if (f.lambda) c.lambda = *f.lambda;
  if (!f.seeds.empty()) c.seeds = parse_seed_list(f.seeds);
  if (f.seed) c.seeds = {*f.seed};
  if (f.use_mvp) c.use_mvp = *f.use_mvp;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Runs as policy sources

struct RunSource {
  fs::path dir;
  RunManifest manifest;
  RestoredSeed state;
};

RunSource open_run(const std::string& arg, const Dataset& raw, std::optional<std::uint64_t> seed) {
  RunSource r;
  r.dir = arg;
  if (!fs::exists(r.dir / "manifest.json")) throw LoadError("no manifest.json in run directory " + r.dir.string());
  r.manifest = load_manifest(r.dir);
  std::uint64_t s = seed.value_or(r.manifest.partitions.empty() ? r.manifest.seeds.front() : r.manifest.partitions.front().seed);
  r.state = restore_seed(r.dir, r.manifest, raw, s);
  return r;
}

/// Policies contributed by a run: its MVP indicator when MVP is on, and the
/// selection of a top-k backend.
std::vector<Policy> run_policies(RunSource& r) {
  std::vector<Policy> out;
  const TrainConfig& c = r.manifest.config;
  const bool mvp = mvp_at_evaluation(c);
  if (mvp) out.push_back({"mvp", threshold_policy(mvp_scores(r.state.model, r.state.data), c.threshold)});
  if (c.pool.kind == PoolKind::AttentionTopK || c.pool.kind == PoolKind::FeatureTopK) {
    const std::string name = c.pool.kind == PoolKind::AttentionTopK ? "attention" : "feature-topk";
    out.push_back({mvp ? "mvp+" + name : name, backend_selection_policy(r.state.model, r.state.data, mvp)});
  }
  return out;
}

void append_unique(std::vector<Policy>& all, std::vector<Policy> more) {
  for (Policy& p : more) {
    std::string name = p.name;
    for (int k = 2; std::any_of(all.begin(), all.end(), [&](const Policy& q) { return q.name == name; }); ++k)
      name = p.name + "#" + std::to_string(k);
    p.name = name;
    all.push_back(std::move(p));
  }
}

// ---------------------------------------------------------------------------
// Commands

struct TrainArgs {
  std::string dataset, name, out, from_manifest;
  bool force = false;
  std::size_t jobs = 1;
  ConfigFlags cfg;
};

int cmd_train(TrainArgs& a) {
  TrainConfig cfg;
  LoadedDataset ds;
  if (!a.from_manifest.empty()) {
    fs::path mp = a.from_manifest;
    if (fs::is_directory(mp)) mp /= "manifest.json";
    const RunManifest m = manifest_from_json(read_json(mp));
    cfg = m.config;
    ds = load_dataset(m.dataset_path, m.dataset_name);
    if (fingerprint(ds.data) != m.dataset_fingerprint) {
      throw FormatError("dataset at " + m.dataset_path + " no longer matches the manifest fingerprint");
    }
  } else {
    cfg = resolve_config(a.cfg);
    const std::string dir = a.dataset.empty() ? a.cfg.dataset : a.dataset;
    if (dir.empty()) throw ConfigError("dataset", "--dataset, a 'dataset' config line or --from-manifest is required");
    ds = load_dataset(dir, a.name.empty() ? a.cfg.dataset_name : a.name);
  }
  prepare_out_dir(a.out, a.force);
  TrialOutcome out = run_trials(cfg, ds.data, a.jobs);
  write_run(a.out, out, ds.dir.string());
  const auto& r = out.report;
  std::cout << ds.name << " backend=" << to_string(cfg.pool.kind) << " mvp=" << (cfg.use_mvp ? "on" : "off") << " seeds=" << r.seeds.size()
            << " accuracy=" << format_real(r.mean_accuracy) << " std=" << format_real(r.std_accuracy) << '\n';
  for (const auto& f : r.failures) std::cerr << "seed " << f.seed << " failed: " << f.message << '\n';
  return r.failures.empty() ? 0 : 1;
}

struct SynthArgs {
  SynthConfig cfg;
  std::string out, name = "SYNTH";
  bool force = false;
};

int cmd_synth(const SynthArgs& a) {
  const SynthCorpus corpus = synth_planted_anomalies(a.cfg);
  prepare_out_dir(a.out, a.force);
  write_synth(corpus, a.out, a.name);
  std::size_t anomalies = 0;
  for (const auto& g : corpus.anomalies) anomalies += static_cast<std::size_t>(std::count(g.begin(), g.end(), true));
  std::cout << "wrote " << corpus.dataset.graphs.size() << " graphs, " << anomalies << " planted anomalies to " << a.out << '\n';
  return 0;
}

struct AnalyzeArgs {
  std::string what, dataset, name, out;
  std::vector<std::string> runs;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const LoadedDataset ds = load_dataset(a.dataset, a.name);
  std::vector<Policy> policies;
  for (const std::string& run : a.runs) {
    RunSource r = open_run(run, ds.data, a.seed);
    append_unique(policies, run_policies(r));
  }
  append_unique(policies, degree_policies(ds.data));
  const fs::path out_dir = !a.out.empty() ? fs::path(a.out) : !a.runs.empty() ? fs::path(a.runs.front()) : fs::path(".");
  if (a.what == "centrality") {
    const fs::path file = out_dir / "centrality.csv";
    prepare_out_file(file, a.force);
    const CentralityReport rep = centrality_report(ds.data, policies);
    write_centrality_csv(file, ds.data, rep, policies);
    for (const auto& p : rep.policies)
      std::cout << p.policy << ": graphs_with_pruning=" << p.graphs_with_pruning << " harmonic_betweenness q1=" << format_real(p.q1)
                << " median=" << format_real(p.median) << " q3=" << format_real(p.q3) << '\n';
  } else {
    const fs::path file = out_dir / "degree_profile.csv";
    prepare_out_file(file, a.force);
    write_degree_profile_csv(file, degree_pruning_profile(ds.data, policies));
    for (const Policy& p : policies) {
      const DegreeSummary s = degree_summary(ds.data, p);
      std::cout << s.policy << ": pruned=" << s.pruned << "/" << s.nodes << " mean_degree_pruned=" << format_real(s.mean_degree_pruned)
                << " mean_degree_kept=" << format_real(s.mean_degree_kept) << '\n';
    }
  }
  return 0;
}

struct SweepArgs {
  std::vector<std::string> datasets;
  std::string name, out, multipliers, mode = "retrain";
  bool force = false;
  std::size_t jobs = 1;
  ConfigFlags cfg;
};

int cmd_sweep(SweepArgs& a) {
  const TrainConfig cfg = resolve_config(a.cfg);
  const std::vector<double> mult = a.multipliers.empty() ? default_multipliers() : parse_real_list("multipliers", a.multipliers);
  if (a.mode != "retrain" && a.mode != "reevaluate") throw ConfigError("mode", "expected retrain or reevaluate, got '" + a.mode + "'");
  const SweepMode mode = a.mode == "retrain" ? SweepMode::Retrain : SweepMode::Reevaluate;
  if (a.datasets.empty() && !a.cfg.dataset.empty()) a.datasets.push_back(a.cfg.dataset);
  if (a.datasets.empty()) throw ConfigError("dataset", "--dataset or a 'dataset' config line is required");
  const std::string single_name = a.name.empty() ? a.cfg.dataset_name : a.name;
  std::vector<LoadedDataset> sets;
  for (const std::string& d : a.datasets) sets.push_back(load_dataset(d, a.datasets.size() == 1 ? single_name : ""));
  const fs::path file = fs::path(a.out) / "sweep.csv";
  prepare_out_file(file, a.force);
  std::ofstream f(file);
  if (!f) throw LoadError("cannot write " + file.string());
  f << "dataset,multiplier,mean_accuracy,std_accuracy,mean_pruned_fraction,max_pruned_fraction,seeds,failures\n";
  std::size_t failures = 0;
  for (const LoadedDataset& ds : sets) {
    for (const SweepRow& r : threshold_sweep(ds.data, cfg, mult, mode, a.jobs)) {
      f << ds.name << ',' << format_real(r.multiplier) << ',' << format_real(r.mean_accuracy) << ',' << format_real(r.std_accuracy) << ','
        << format_real(r.mean_pruned_fraction) << ',' << format_real(r.max_pruned_fraction) << ',' << r.seeds << ',' << r.failures << '\n';
      std::cout << ds.name << " c=" << format_real(r.multiplier) << " accuracy=" << format_real(r.mean_accuracy)
                << " pruned=" << format_real(r.mean_pruned_fraction) << '\n';
      failures += r.failures;
    }
  }
  f.close();
  if (!f) throw LoadError("write failed for " + file.string());
  return failures == 0 ? 0 : 1;
}

struct ExportArgs {
  std::string dataset, name, run, out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

int cmd_export_scores(const ExportArgs& a) {
  const LoadedDataset ds = load_dataset(a.dataset, a.name);
  RunSource r = open_run(a.run, ds.data, a.seed);
  if (!mvp_at_evaluation(r.manifest.config)) throw ConfigError("use_mvp", "run " + a.run + " was trained without the MVP stage");
  const fs::path file = a.out.empty() ? r.dir / "scores.csv" : fs::path(a.out);
  prepare_out_file(file, a.force);
  std::ofstream f(file);
  if (!f) throw LoadError("cannot write " + file.string());
  f << "graph_id,node_id,degree,score,kept\n";
  const auto scores = mvp_scores(r.state.model, r.state.data);
  for (std::size_t g = 0; g < scores.size(); ++g) {
    const Indicator ind = build_indicator(scores[g], r.manifest.config.threshold);
    const auto deg = r.state.data.graphs[g].degrees();
    for (std::size_t i = 0; i < scores[g].size(); ++i)
      f << g << ',' << i << ',' << deg[i] << ',' << format_real(scores[g][i]) << ',' << (ind.keep[i] != 0.0 ? 1 : 0) << '\n';
  }
  f.close();
  if (!f) throw LoadError("write failed for " + file.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view pruning for graph classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "run the multi-seed training protocol and write a run directory");
  t->add_option("--dataset", train.dataset, "TU dataset directory or name under MVPRUNE_DATA_DIR (default: the config's 'dataset')");
  t->add_option("--name", train.name, "TU file prefix (default: detected)");
  t->add_option("--out", train.out, "output run directory")->required();
  t->add_option("--from-manifest", train.from_manifest, "re-run the configuration recorded in a manifest");
  t->add_flag("--force", train.force, "overwrite an existing output directory");
  t->add_option("--jobs", train.jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);
  add_config_flags(t, train.cfg);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a planted-anomaly corpus in TU format");
  s->add_option("--graphs", synth.cfg.graphs, "number of graphs");
  s->add_option("--nodes", synth.cfg.nodes, "nodes per graph");
  s->add_option("--anomaly", synth.cfg.anomaly_fraction, "fraction of anomaly nodes per graph");
  s->add_option("--seed", synth.cfg.seed, "generator seed");
  s->add_option("--name", synth.name, "TU file prefix");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_flag("--force", synth.force, "overwrite an existing output directory");

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "pruning diagnostics (centrality or degree profile)");
  an->add_option("what", analyze.what, "centrality | degree")->required()->check(CLI::IsMember({"centrality", "degree"}));
  an->add_option("--dataset", analyze.dataset, "TU dataset directory")->required();
  an->add_option("--name", analyze.name, "TU file prefix (default: detected)");
  an->add_option("--run", analyze.runs, "run directory contributing policies (repeatable)");
  an->add_option("--seed", analyze.seed, "which seed's model to use (default: first)");
  an->add_option("--out", analyze.out, "output directory (default: the first run directory)");
  an->add_flag("--force", analyze.force, "overwrite an existing CSV");

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "accuracy and pruned fraction per threshold multiplier");
  sw->add_option("--dataset", sweep.datasets, "TU dataset directory (repeatable)");
  sw->add_option("--name", sweep.name, "TU file prefix (single dataset only)");
  sw->add_option("--multipliers", sweep.multipliers, "comma-separated c values (default 0.5,1,1.5,2,2.5,3)");
  sw->add_option("--mode", sweep.mode, "retrain | reevaluate");
  sw->add_option("--out", sweep.out, "output directory")->required();
  sw->add_flag("--force", sweep.force, "overwrite an existing sweep.csv");
  sw->add_option("--jobs", sweep.jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);
  add_config_flags(sw, sweep.cfg);

  ExportArgs ex;
  auto* e = app.add_subcommand("export-scores", "per-node MVP scores and indicators as CSV");
  e->add_option("--dataset", ex.dataset, "TU dataset directory")->required();
  e->add_option("--name", ex.name, "TU file prefix (default: detected)");
  e->add_option("--run", ex.run, "run directory")->required();
  e->add_option("--seed", ex.seed, "which seed's model to use (default: first)");
  e->add_option("--out", ex.out, "output CSV (default: <run>/scores.csv)");
  e->add_flag("--force", ex.force, "overwrite an existing CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (t->parsed()) return cmd_train(train);
    if (s->parsed()) return cmd_synth(synth);
    if (an->parsed()) return cmd_analyze(analyze);
    if (sw->parsed()) return cmd_sweep(sweep);
    if (e->parsed()) return cmd_export_scores(ex);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const LoadError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const Refusal& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
