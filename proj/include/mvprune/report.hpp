#pragma once

// Run directory layout written by `train`:
//   manifest.json          resolved config, dataset fingerprint, seeds, partitions, artifact list
//   report.json            TrialReport (per-seed accuracy, traces, pruning stats)
//   metrics.csv            one row per successful seed
//   models/seed-<s>.json   selected parameters per seed
//
// metrics.csv columns:
//   seed,train_size,val_size,test_size,best_epoch,val_accuracy,test_accuracy,
//   pruned_fraction,mean_degree_pruned,mean_degree_kept

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mvprune/config.hpp"
#include "mvprune/error.hpp"
#include "mvprune/format.hpp"
#include "mvprune/model.hpp"
#include "mvprune/split.hpp"
#include "mvprune/train.hpp"

namespace mvprune {

inline constexpr const char* kToolVersion = "mvprune 0.1.0";
inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

// ---------------------------------------------------------------------------
// Report

inline json to_json(const PruningStats& p) {
  json hist = json::object();
  for (const auto& [d, c] : p.pruned_degree_histogram) hist[std::to_string(d)] = c;
  return {{"nodes", p.nodes},
          {"pruned", p.pruned},
          {"pruned_fraction", p.pruned_fraction},
          {"mean_degree_pruned", p.mean_degree_pruned},
          {"mean_degree_kept", p.mean_degree_kept},
          {"pruned_degree_histogram", hist}};
}

inline json to_json(const EpochTrace& t) {
  return {{"epoch", t.epoch},
          {"mvp_active", t.mvp_active},
          {"loss", t.loss},
          {"cross_entropy", t.cross_entropy},
          {"adjacency_loss", t.adjacency_loss},
          {"feature_loss", t.feature_loss},
          {"pool_loss", t.pool_loss},
          {"train_accuracy", t.train_accuracy},
          {"val_accuracy", t.val_accuracy}};
}

inline json to_json(const TrialReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json trace = json::array();
    for (const auto& t : s.trace) trace.push_back(to_json(t));
    seeds.push_back({{"seed", s.seed},
                     {"train_size", s.train_size},
                     {"val_size", s.val_size},
                     {"test_size", s.test_size},
                     {"best_epoch", s.best_epoch ? json(*s.best_epoch) : json(nullptr)},
                     {"val_accuracy", s.val_accuracy},
                     {"test_accuracy", s.test_accuracy},
                     {"pruning", to_json(s.pruning)},
                     {"trace", trace}});
  }
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"seed", f.seed}, {"message", f.message}});
  return {{"schema_version", kSchemaVersion},
          {"dataset", r.dataset_name},
          {"dataset_fingerprint", r.dataset_fingerprint},
          {"backend", to_string(r.config.pool.kind)},
          {"use_mvp", r.config.use_mvp},
          {"mean_accuracy", r.mean_accuracy},
          {"std_accuracy", r.std_accuracy},
          {"failure_count", r.failures.size()},
          {"seeds", seeds},
          {"failures", failures}};
}

inline std::string metrics_csv(const TrialReport& r) {
  std::ostringstream o;
  o << "seed,train_size,val_size,test_size,best_epoch,val_accuracy,test_accuracy,pruned_fraction,mean_degree_pruned,mean_degree_kept\n";
  for (const auto& s : r.seeds) {
    o << s.seed << ',' << s.train_size << ',' << s.val_size << ',' << s.test_size << ',';
    if (s.best_epoch) o << *s.best_epoch;
    o << ',' << format_real(s.val_accuracy) << ',' << format_real(s.test_accuracy) << ',' << format_real(s.pruning.pruned_fraction)
      << ',' << format_real(s.pruning.mean_degree_pruned) << ',' << format_real(s.pruning.mean_degree_kept) << '\n';
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Models

inline json model_to_json(MvpModel& m, std::uint64_t seed) {
  json params = json::object();
  for (Parameter* p : m.parameters()) {
    params[p->name] = {{"rows", p->value.rows()}, {"cols", p->value.cols()}, {"values", std::vector<double>(p->value.values().begin(), p->value.values().end())}};
  }
  return {{"schema_version", kSchemaVersion}, {"seed", seed}, {"parameters", params}};
}

/// Overwrites the parameters of a freshly created model with saved values.
inline void load_model_parameters(MvpModel& m, const json& j) {
  const json& params = j.at("parameters");
  auto all = m.parameters();
  if (params.size() != all.size()) throw FormatError("model file: expected " + std::to_string(all.size()) + " parameters, found " + std::to_string(params.size()));
  for (Parameter* p : all) {
    if (!params.contains(p->name)) throw FormatError("model file: missing parameter " + p->name);
    const json& e = params.at(p->name);
    const auto rows = e.at("rows").get<std::size_t>();
    const auto cols = e.at("cols").get<std::size_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) throw FormatError("model file: shape mismatch for " + p->name);
    p->value = Tensor(rows, cols, e.at("values").get<std::vector<double>>());
  }
}

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_text;  // canonical render_config output
  TrainConfig config;
  std::string dataset_name;
  std::string dataset_path;
  std::string dataset_fingerprint;
  std::vector<std::uint64_t> seeds;
  std::vector<ViewPartition> partitions;  // per successful seed
  std::vector<std::string> artifacts;
};

inline json to_json(const RunManifest& m) {
  json parts = json::array();
  for (std::size_t i = 0; i < m.partitions.size(); ++i) {
    const auto& p = m.partitions[i];
    parts.push_back({{"seed", p.seed}, {"overlap_ratio", p.overlap_ratio}, {"views", p.columns}});
  }
  return {{"schema_version", kSchemaVersion},
          {"tool_version", m.tool_version},
          {"config", m.config_text},
          {"dataset", {{"name", m.dataset_name}, {"path", m.dataset_path}, {"fingerprint", m.dataset_fingerprint}}},
          {"seeds", m.seeds},
          {"partitions", parts},
          {"artifacts", m.artifacts}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    apply_config_text(m.config, m.config_text);
    const json& d = j.at("dataset");
    m.dataset_name = d.at("name").get<std::string>();
    m.dataset_path = d.at("path").get<std::string>();
    m.dataset_fingerprint = d.at("fingerprint").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const json& p : j.at("partitions")) {
      ViewPartition vp;
      vp.seed = p.at("seed").get<std::uint64_t>();
      vp.overlap_ratio = p.at("overlap_ratio").get<double>();
      vp.columns = p.at("views").get<std::vector<std::vector<std::size_t>>>();
      m.partitions.push_back(std::move(vp));
    }
    m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw LoadError("cannot write " + path.string());
  f << text;
  if (!f) throw LoadError("write failed for " + path.string());
}

inline RunManifest load_manifest(const std::filesystem::path& run_dir) {
  return manifest_from_json(read_json(run_dir / "manifest.json"));
}

inline std::string model_file(std::uint64_t seed) { return "models/seed-" + std::to_string(seed) + ".json"; }

/// Writes manifest, report, metrics and per-seed models into `dir` (which must exist).
inline RunManifest write_run(const std::filesystem::path& dir, TrialOutcome& out, const std::string& dataset_path) {
  std::filesystem::create_directories(dir / "models");
  RunManifest m;
  m.config = out.report.config;
  m.config_text = render_config(m.config);
  m.dataset_name = out.report.dataset_name;
  m.dataset_path = dataset_path;
  m.dataset_fingerprint = out.report.dataset_fingerprint;
  m.seeds = m.config.seeds;
  m.artifacts = {"report.json", "metrics.csv"};
  for (TrainResult& r : out.results) {
    m.partitions.push_back(r.model.partition);
    write_text(dir / model_file(r.seed), model_to_json(r.model, r.seed).dump() + "\n");
    m.artifacts.push_back(model_file(r.seed));
  }
  write_text(dir / "report.json", to_json(out.report).dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_csv(out.report));
  write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

/// Trained state of one seed reconstructed from a run directory: the split and
/// scaler are re-derived from the seed, parameters come from the model file.
struct RestoredSeed {
  std::uint64_t seed = 0;
  SplitSpec split;
  Dataset data;  // scaled
  MvpModel model;
};

inline RestoredSeed restore_seed(const std::filesystem::path& run_dir, const RunManifest& m, const Dataset& raw, std::uint64_t seed) {
  if (fingerprint(raw) != m.dataset_fingerprint) {
    throw FormatError("dataset fingerprint " + fingerprint(raw) + " does not match run manifest (" + m.dataset_fingerprint + ")");
  }
  RestoredSeed r;
  r.seed = seed;
  r.split = split(raw, seed);
  r.data = FeatureScaler::fit(raw, r.split.train, m.config.feature_norm).apply(raw);
  r.model = MvpModel::create(m.config, r.data, r.split.train, seed);
  load_model_parameters(r.model, read_json(run_dir / model_file(seed)));
  return r;
}

}  // namespace mvprune
