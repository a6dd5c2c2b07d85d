#pragma once

// Run configuration and its key = value file format.
//
//   # comment
//   backend = mincut
//   views = 8
//   seeds = 0,1,2
//
// Unknown keys and unparsable values raise ConfigError naming the key.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/pooling.hpp"
#include "mvprune/split.hpp"

namespace mvprune {

struct LossToggles {
  bool reconstruction = true;  // L_r = L_a + L_x
  bool pooling = true;         // L_pool
};

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 5e-4;
  std::size_t batch_size = 8;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool use_mvp = true;
  double lambda = 0.5;
  double threshold = 2.0;  // c in μ + c·σ
  std::size_t views = 8;
  double overlap_ratio = -1.0;  // < 0 → default rule
  std::size_t latent_width = 64;
  std::string view_groups;  // optional column grouping file
  PoolConfig pool;
  std::size_t head_hidden = 32;
  LossToggles losses;
  std::size_t pretrain_epochs = 50;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  FeatureNorm feature_norm = FeatureNorm::Standardize;
  bool select_last = false;  // model_selection = last: keep the final epoch instead of best validation

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate", "must be positive");
    if (batch_size == 0) throw ConfigError("batch_size", "must be positive");
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must lie in [0, 1]");
    if (views == 0) throw ConfigError("views", "must be positive");
    if (overlap_ratio >= 1.0) throw ConfigError("overlap_ratio", "must lie in [0, 1)");
    if (latent_width == 0) throw ConfigError("latent_width", "must be positive");
    if (pool.hidden == 0) throw ConfigError("pool_hidden", "must be positive");
    if (!(pool.keep_ratio > 0.0 && pool.keep_ratio <= 1.0)) throw ConfigError("keep_ratio", "must lie in (0, 1]");
    if (pool.aux_loss_weight < 0.0) throw ConfigError("aux_loss_weight", "must be non-negative");
    if (head_hidden == 0) throw ConfigError("head_hidden", "must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1", "must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2", "must lie in [0, 1)");
    if (adam_eps <= 0.0) throw ConfigError("adam_eps", "must be positive");
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a number, got '" + v + "'");
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long n = std::stoull(v, &used);
      if (used == v.size()) return static_cast<std::size_t>(n);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

}  // namespace config_detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = config_detail::trim(tok);
    if (tok.empty()) continue;
    const auto dash = tok.find('-', 1);
    if (dash != std::string::npos) {
      // inclusive range "a-b"
      const auto a = config_detail::to_count("seeds", tok.substr(0, dash));
      const auto b = config_detail::to_count("seeds", tok.substr(dash + 1));
      if (b < a) throw ConfigError("seeds", "empty range '" + tok + "'");
      for (auto s = a; s <= b; ++s) out.push_back(s);
    } else {
      out.push_back(config_detail::to_count("seeds", tok));
    }
  }
  if (out.empty()) throw ConfigError("seeds", "no seeds in '" + v + "'");
  return out;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = config_detail::trim(tok);
    if (!tok.empty()) out.push_back(config_detail::to_real(key, tok));
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

/// Applies one `key = value` setting.
inline void apply_setting(TrainConfig& c, const std::string& key, const std::string& raw) {
  using namespace config_detail;
  const std::string v = trim(raw);
  if (key == "epochs") c.epochs = to_count(key, v);
  else if (key == "learning_rate") c.learning_rate = to_real(key, v);
  else if (key == "batch_size") c.batch_size = to_count(key, v);
  else if (key == "seeds") c.seeds = parse_seed_list(v);
  else if (key == "use_mvp") c.use_mvp = to_bool(key, v);
  else if (key == "lambda") c.lambda = to_real(key, v);
  else if (key == "threshold") c.threshold = to_real(key, v);
  else if (key == "views") c.views = to_count(key, v);
  else if (key == "overlap_ratio") c.overlap_ratio = v == "auto" ? -1.0 : to_real(key, v);
  else if (key == "latent_width") c.latent_width = to_count(key, v);
  else if (key == "view_groups") c.view_groups = v;
  else if (key == "backend") c.pool.kind = parse_pool_kind(v);
  else if (key == "pool_hidden") c.pool.hidden = to_count(key, v);
  else if (key == "keep_ratio") c.pool.keep_ratio = to_real(key, v);
  else if (key == "clusters") c.pool.clusters = v == "auto" ? 0 : to_count(key, v);
  else if (key == "aux_loss_weight") c.pool.aux_loss_weight = to_real(key, v);
  else if (key == "head_hidden") c.head_hidden = to_count(key, v);
  else if (key == "use_lr") c.losses.reconstruction = to_bool(key, v);
  else if (key == "use_lpool") c.losses.pooling = to_bool(key, v);
  else if (key == "pretrain_epochs") c.pretrain_epochs = to_count(key, v);
  else if (key == "adam_beta1") c.adam_beta1 = to_real(key, v);
  else if (key == "adam_beta2") c.adam_beta2 = to_real(key, v);
  else if (key == "adam_eps") c.adam_eps = to_real(key, v);
  else if (key == "feature_norm") c.feature_norm = parse_feature_norm(v);
  else if (key == "model_selection") {
    if (v != "val" && v != "last") throw ConfigError(key, "expected val or last, got '" + v + "'");
    c.select_last = v == "last";
  }
  else throw ConfigError(key, "unknown configuration key");
}

/// Parses `key = value` lines; '#' starts a comment.
inline void apply_config_text(TrainConfig& c, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", "line " + std::to_string(no) + ": expected 'key = value'");
    apply_setting(c, config_detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

inline void apply_config_file(TrainConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(c, ss.str());
}

/// Canonical key = value rendering; apply_config_text(render(c)) reproduces c.
inline std::string render_config(const TrainConfig& c) {
  std::ostringstream o;
  o.precision(17);
  auto b = [](bool x) { return x ? "true" : "false"; };
  o << "epochs = " << c.epochs << '\n'
    << "learning_rate = " << c.learning_rate << '\n'
    << "batch_size = " << c.batch_size << '\n'
    << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? "," : "") << c.seeds[i];
  o << '\n'
    << "use_mvp = " << b(c.use_mvp) << '\n'
    << "lambda = " << c.lambda << '\n'
    << "threshold = " << c.threshold << '\n'
    << "views = " << c.views << '\n'
    << "overlap_ratio = ";
  if (c.overlap_ratio < 0.0) o << "auto";
  else o << c.overlap_ratio;
  o << '\n';
  if (!c.view_groups.empty()) o << "view_groups = " << c.view_groups << '\n';
  o << "latent_width = " << c.latent_width << '\n'
    << "backend = " << to_string(c.pool.kind) << '\n'
    << "pool_hidden = " << c.pool.hidden << '\n'
    << "keep_ratio = " << c.pool.keep_ratio << '\n'
    << "clusters = ";
  if (c.pool.clusters == 0) o << "auto";
  else o << c.pool.clusters;
  o << '\n'
    << "aux_loss_weight = " << c.pool.aux_loss_weight << '\n'
    << "head_hidden = " << c.head_hidden << '\n'
    << "use_lr = " << b(c.losses.reconstruction) << '\n'
    << "use_lpool = " << b(c.losses.pooling) << '\n'
    << "pretrain_epochs = " << c.pretrain_epochs << '\n'
    << "adam_beta1 = " << c.adam_beta1 << '\n'
    << "adam_beta2 = " << c.adam_beta2 << '\n'
    << "adam_eps = " << c.adam_eps << '\n'
    << "feature_norm = " << to_string(c.feature_norm) << '\n'
    << "model_selection = " << (c.select_last ? "last" : "val") << '\n';
  return o.str();
}

}  // namespace mvprune
