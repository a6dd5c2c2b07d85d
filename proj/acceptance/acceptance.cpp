// Acceptance harness: one PASS / FAIL / SKIP line per criterion.
//
// Exit status is 0 when every evaluated criterion matches its expectation.
// Criteria listed with --expect-fail are reported as FAIL (known) and turn
// the exit status nonzero only if they unexpectedly pass. SKIP means the
// criterion could not be evaluated here (missing dataset) and is not counted.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "mvprune/mvprune.hpp"

using namespace mvprune;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Random instances

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(r, c);
  for (double& v : t.values()) v = n(rng);
  return t;
}

Graph random_graph(std::size_t n, std::size_t d, std::mt19937_64& rng, double p = 0.35) {
  Graph g;
  g.adjacency = Tensor(n, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 1; i < n; ++i) g.adjacency(order[i - 1], order[i]) = g.adjacency(order[i], order[i - 1]) = 1.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  g.features = random_tensor(n, d, rng);
  return g;
}

// ---------------------------------------------------------------------------
// 1. Finite differences

double gradient_error(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& loss) {
  const double h = 1e-5;
  for (Parameter* p : params) p->zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  double worst = 0.0;
  for (Parameter* p : params) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      Tape up;
      const double fu = loss(up).value().item();
      p->value[i] = keep - h;
      Tape down;
      const double fd = loss(down).value().item();
      p->value[i] = keep;
      const double num = (fu - fd) / (2.0 * h);
      diff += (num - p->grad[i]) * (num - p->grad[i]);
      na += p->grad[i] * p->grad[i];
      nn += num * num;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    worst = std::max(worst, denom < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / denom);
  }
  return worst;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  const std::size_t graphs = 20, d = 7;
  double worst = 0.0;
  std::string where;
  std::size_t checks = 0;
  for (std::size_t gi = 0; gi < graphs; ++gi) {
    std::mt19937_64 rng(1000 + gi);
    const Graph g = random_graph(4 + gi % 5, d, rng);
    Dataset ds;
    ds.class_count = 3;
    ds.feature_dim = d;
    ds.graphs = {g};
    ds.graphs[0].label = gi % 3;
    for (const auto& [name, kind] : pool_kind_names()) {
      TrainConfig c;
      c.views = 2;
      c.latent_width = 6;
      c.pool.kind = kind;
      c.pool.hidden = 5;
      c.pool.clusters = 2;
      c.head_hidden = 6;
      MvpModel m = MvpModel::create(c, ds, {0}, gi);
      for (Parameter* p : m.recon.parameters()) p->value = random_tensor(p->value.rows(), p->value.cols(), rng, 0.5);
      for (Parameter* p : m.head.parameters()) p->value = random_tensor(p->value.rows(), p->value.cols(), rng, 0.5);
      const Graph& gr = ds.graphs[0];
      // Reconstruction path: views → GCN → Z → decoders → La + Lx.
      if (kind == PoolKind::MeanReadout) {
        const double e = gradient_error(m.mvp_parameters(), [&](Tape& t) {
          const Reconstruction rec = reconstruct(encode_views(t, gr, m.partition, m.encoder), m.recon);
          return recon_losses(gr.adjacency, gr.features, rec.adjacency, rec.features).total;
        });
        ++checks;
        if (e > worst) worst = e, where = "reconstruction";
      }
      // Backend path: readout / pooling → L_ce + L_pool.
      const double e = gradient_error(m.downstream_parameters(), [&](Tape& t) {
        MvpModel::Pass p = m.forward(t, gr, false);
        return ad::add(p.cross_entropy, p.pool_loss);
      });
      ++checks;
      if (e > worst) worst = e, where = name;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-4 && secs < 60.0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("worst relative error %.2e (%s) over %zu checks on %zu graphs of 4-8 nodes, %.1fs", worst, where.c_str(), checks, graphs, secs)};
}

// ---------------------------------------------------------------------------
// 2. Loop oracles

std::vector<double> brandes_free_betweenness(const Graph& g) {
  // σ_st(v) = σ_sv·σ_vt when d(s,v) + d(v,t) = d(s,t); counts from BFS layers.
  const std::size_t n = g.node_count();
  std::vector<std::vector<long>> dist(n, std::vector<long>(n, -1));
  std::vector<std::vector<double>> cnt(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> q = {s};
    dist[s][s] = 0;
    cnt[s][s] = 1.0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      const std::size_t v = q[h];
      for (std::size_t w = 0; w < n; ++w) {
        if (g.adjacency(v, w) == 0.0) continue;
        if (dist[s][w] < 0) {
          dist[s][w] = dist[s][v] + 1;
          q.push_back(w);
        }
        if (dist[s][w] == dist[s][v] + 1) cnt[s][w] += cnt[s][v];
      }
    }
  }
  std::vector<double> cb(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] < 0) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] < 0 || dist[v][t] < 0) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) cb[v] += cnt[s][v] * cnt[v][t] / cnt[s][t];
      }
    }
  return cb;
}

Outcome oracles() {
  const std::size_t instances = 100;
  double la = 0.0, lx = 0.0, sc = 0.0, bt = 0.0;
  std::size_t indicator_mismatch = 0, mask_mismatch = 0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::lognormal_distribution<double> heavy(0.0, 1.5);
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 2 + rng() % 10, d = 1 + rng() % 6;
    const Graph g = random_graph(n, d, rng, 0.25);
    Tensor p(n, n);
    for (double& v : p.values()) v = u(rng);
    const Tensor xh = random_tensor(n, d, rng);
    const double lambda = u(rng);

    double bce = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double q = std::clamp(p(i, j), 1e-7, 1.0 - 1e-7);
        bce -= g.adjacency(i, j) * std::log(q) + (1.0 - g.adjacency(i, j)) * std::log(1.0 - q);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) sq += std::pow(g.features(i, j) - xh(i, j), 2);
    Tape t;
    const ReconLosses l = recon_losses(g.adjacency, g.features, t.constant(p), t.constant(xh));
    la = std::max(la, std::abs(l.adjacency.value().item() - bce / static_cast<double>(n * n)));
    lx = std::max(lx, std::abs(l.features.value().item() - sq / static_cast<double>(n * d)));

    const auto s = node_scores(g.adjacency, g.features, p, xh, lambda);
    for (std::size_t i = 0; i < n; ++i) {
      double ra = 0.0, rx = 0.0;
      for (std::size_t j = 0; j < n; ++j) ra += std::pow(g.adjacency(i, j) - p(i, j), 2);
      for (std::size_t j = 0; j < d; ++j) rx += std::pow(g.features(i, j) - xh(i, j), 2);
      sc = std::max(sc, std::abs(s[i] - (lambda * ra + (1.0 - lambda) * rx)));
    }

    std::vector<double> scores(n);
    for (double& v : scores) v = heavy(rng);
    const double c = 0.5 + 2.5 * u(rng);
    const Indicator ind = build_indicator(scores, c);
    long double mu = 0.0L, var = 0.0L;
    for (double v : scores) mu += v;
    mu /= n;
    for (double v : scores) var += (v - mu) * (v - mu);
    const long double cut = mu + c * std::sqrt(var / n);
    for (std::size_t i = 0; i < n; ++i) indicator_mismatch += ind.keep[i] != (scores[i] <= cut ? 1.0 : 0.0);

    const MaskedGraph m = apply_mask(g, ind.keep);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mask_mismatch += m.adjacency(i, j) != g.adjacency(i, j) * ind.keep[i] * ind.keep[j];
      for (std::size_t j = 0; j < d; ++j) mask_mismatch += m.features(i, j) != g.features(i, j) * ind.keep[i];
    }

    const Graph bg = random_graph(6 + rng() % 7, 1, rng, 0.2);
    const auto fast = betweenness(bg), slow = brandes_free_betweenness(bg);
    for (std::size_t i = 0; i < fast.size(); ++i) bt = std::max(bt, std::abs(fast[i] - slow[i]));
  }
  const bool ok = la <= 1e-9 && lx <= 1e-9 && sc <= 1e-9 && bt <= 1e-9 && indicator_mismatch == 0 && mask_mismatch == 0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%zu instances; max |err| La %.1e Lx %.1e score %.1e betweenness %.1e; indicator mismatches %zu, mask mismatches %zu",
              instances, la, lx, sc, bt, indicator_mismatch, mask_mismatch)};
}

// ---------------------------------------------------------------------------
// 3. Chebyshev

Outcome chebyshev() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::lognormal_distribution<double> heavy(0.0, 2.0);
  std::cauchy_distribution<double> cauchy(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> s(2 + rng() % 99);
    for (double& v : s) v = k % 3 == 0 ? u(rng) : k % 3 == 1 ? heavy(rng) : std::abs(cauchy(rng));
    const Indicator ind = build_indicator(s, 2.0);
    worst = std::max(worst, static_cast<double>(ind.dropped()) / static_cast<double>(s.size()));
  }
  bool uniform_clean = true;
  for (std::size_t n : {1u, 5u, 20u, 100u}) uniform_clean = uniform_clean && build_indicator(std::vector<double>(n, 0.7), 2.0).dropped() == 0;
  const bool ok = worst <= 0.25 && uniform_clean;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("max pruned fraction %.4f at c = 2 over 1000 score vectors; uniform scores prune %s", worst, uniform_clean ? "nothing" : "something")};
}

// ---------------------------------------------------------------------------
// 4-7. Synthetic corpus

TrainConfig corpus_config(std::size_t seeds) {
  TrainConfig c;
  c.epochs = 60;
  c.pretrain_epochs = 20;
  c.learning_rate = 5e-3;
  c.seeds.clear();
  for (std::size_t s = 0; s < seeds; ++s) c.seeds.push_back(s);
  return c;
}

struct CorpusRuns {
  SynthCorpus corpus;
  TrialOutcome mvp_mean, mean, attention;
  double seconds = 0.0;
};

/// Nodes pruned / kept by MVP (indicator) or attention (not selected).
KeepMasks keep_masks(TrainResult& r, bool mvp_indicator) {
  return mvp_indicator ? threshold_policy(mvp_scores(r.model, r.data), r.model.threshold)
                       : backend_selection_policy(r.model, r.data, false);
}

Outcome recall(CorpusRuns& c) {
  if (c.mvp_mean.results.empty()) return {Verdict::Fail, "every seed failed"};
  double rec = 0.0, fp = 0.0;
  for (TrainResult& r : c.mvp_mean.results) {
    const KeepMasks keep = keep_masks(r, true);
    std::size_t an = 0, ap = 0, nn = 0, np = 0;
    for (std::size_t g = 0; g < keep.size(); ++g)
      for (std::size_t i = 0; i < keep[g].size(); ++i) {
        const bool pruned = keep[g][i] == 0.0;
        if (c.corpus.anomalies[g][i]) ++an, ap += pruned;
        else ++nn, np += pruned;
      }
    rec += static_cast<double>(ap) / static_cast<double>(an);
    fp += static_cast<double>(np) / static_cast<double>(nn);
  }
  const double k = static_cast<double>(c.mvp_mean.results.size());
  rec /= k;
  fp /= k;
  const bool ok = rec >= 0.70 && fp <= 0.15 && c.mvp_mean.report.failures.empty();
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("anomaly recall %.3f (>= 0.70), normal nodes pruned %.3f (<= 0.15), %zu seeds, %zu failed", rec, fp,
              c.mvp_mean.results.size(), c.mvp_mean.report.failures.size())};
}

/// One-sided 95 % Student t quantile.
double t_critical(std::size_t df) {
  static const double table[] = {0,     6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812,
                                 1.796, 1.782, 1.771, 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
                                 1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703, 1.701, 1.699, 1.697};
  return df < std::size(table) ? table[df] : 1.645;
}

Outcome improvement(const CorpusRuns& c) {
  const auto& a = c.mvp_mean.report.seeds;
  const auto& b = c.mean.report.seeds;
  if (a.size() != b.size() || a.size() < 2) return {Verdict::Fail, "need paired results for at least 2 seeds"};
  std::vector<double> diff;
  for (std::size_t i = 0; i < a.size(); ++i) diff.push_back(a[i].test_accuracy - b[i].test_accuracy);
  const double n = static_cast<double>(diff.size());
  double mu = 0.0, var = 0.0;
  for (double x : diff) mu += x / n;
  for (double x : diff) var += (x - mu) * (x - mu) / (n - 1.0);
  const double se = std::sqrt(var / n);
  const double t = se == 0.0 ? (mu > 0.0 ? INFINITY : 0.0) : mu / se;
  const double crit = t_critical(diff.size() - 1);
  const bool ok = mu > 0.0 && t > crit;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("MVP+mean %.4f vs mean %.4f; paired difference %+.4f, t = %.2f (one-sided 5%% critical %.3f), %zu seeds",
              c.mvp_mean.report.mean_accuracy, c.mean.report.mean_accuracy, mu, t, crit, diff.size())};
}

DegreeSummary pooled_degrees(std::vector<TrainResult>& runs, bool mvp_indicator, const std::string& name) {
  DegreeSummary total;
  total.policy = name;
  double dp = 0.0, dk = 0.0;
  for (TrainResult& r : runs) {
    const DegreeSummary s = degree_summary(r.data, {name, keep_masks(r, mvp_indicator)});
    total.nodes += s.nodes;
    total.pruned += s.pruned;
    dp += s.mean_degree_pruned * static_cast<double>(s.pruned);
    dk += s.mean_degree_kept * static_cast<double>(s.nodes - s.pruned);
  }
  if (total.pruned) total.mean_degree_pruned = dp / static_cast<double>(total.pruned);
  if (total.nodes > total.pruned) total.mean_degree_kept = dk / static_cast<double>(total.nodes - total.pruned);
  return total;
}

Outcome degree_bias(CorpusRuns& c) {
  const DegreeSummary att = pooled_degrees(c.attention.results, false, "attention");
  const DegreeSummary mvp = pooled_degrees(c.mvp_mean.results, true, "mvp");
  std::size_t lower = 0;
  for (TrainResult& r : c.attention.results) {
    const DegreeSummary s = degree_summary(r.data, {"attention", keep_masks(r, false)});
    lower += s.mean_degree_pruned < s.mean_degree_kept;
  }
  const bool biased = att.pruned > 0 && att.mean_degree_pruned < att.mean_degree_kept;
  const bool smaller = std::abs(mvp.gap()) < std::abs(att.gap());
  return {biased && smaller ? Verdict::Pass : Verdict::Fail,
          fmt("attention pruned/kept mean degree %.3f/%.3f (lower in %zu of %zu seeds); MVP %.3f/%.3f; |gap| attention %.3f vs MVP %.3f",
              att.mean_degree_pruned, att.mean_degree_kept, lower, c.attention.results.size(), mvp.mean_degree_pruned,
              mvp.mean_degree_kept, std::abs(att.gap()), std::abs(mvp.gap()))};
}

Outcome centrality(CorpusRuns& c) {
  auto pooled = [](std::vector<TrainResult>& runs, bool mvp_indicator) {
    std::vector<double> sample;
    for (TrainResult& r : runs) {
      const CentralityReport rep = centrality_report(r.data, {{"p", keep_masks(r, mvp_indicator)}});
      for (const auto& v : rep.policies[0].per_graph)
        if (v) sample.push_back(*v);
    }
    return sample;
  };
  const std::vector<double> mvp = pooled(c.mvp_mean.results, true), att = pooled(c.attention.results, false);
  if (mvp.empty() || att.empty()) return {Verdict::Fail, "a policy pruned no nodes at all"};
  const double mm = quantile(mvp, 0.5), ma = quantile(att, 0.5);
  return {mm <= ma ? Verdict::Pass : Verdict::Fail,
          fmt("median per-graph harmonic-mean betweenness: MVP %.3g (%zu graphs) vs attention %.3g (%zu graphs)", mm, mvp.size(), ma, att.size())};
}

// ---------------------------------------------------------------------------
// 8. PROTEINS

Outcome proteins(std::size_t seeds, std::size_t jobs) {
  const char* root = std::getenv("MVPRUNE_DATA_DIR");
  const fs::path dir = root ? fs::path(root) / "PROTEINS" : fs::path();
  if (!root || !fs::exists(dir / "PROTEINS_A.txt"))
    return {Verdict::Skip, "PROTEINS not found under MVPRUNE_DATA_DIR; absolute-accuracy check not evaluated"};
  const Dataset ds = tu::load(dir, "PROTEINS");
  TrainConfig base;
  base.pool.kind = PoolKind::MinCut;
  base.seeds.clear();
  for (std::size_t s = 0; s < seeds; ++s) base.seeds.push_back(s);
  TrainConfig alone = base;
  alone.use_mvp = false;
  const TrialOutcome a = run_trials(alone, ds, jobs), b = run_trials(base, ds, jobs);
  const double gap = std::abs(100.0 * a.report.mean_accuracy - 76.87);
  const bool ok = gap <= 6.0 && b.report.mean_accuracy >= a.report.mean_accuracy;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("MinCut %.2f (reference 76.87, |diff| %.2f <= 6), MVP+MinCut %.2f", 100.0 * a.report.mean_accuracy, gap,
              100.0 * b.report.mean_accuracy)};
}

// ---------------------------------------------------------------------------
// 9. Manifest determinism

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mvprune_acceptance";
  fs::remove_all(root);
  SynthConfig sc;
  sc.graphs = 60;
  sc.nodes = 12;
  write_synth(synth_planted_anomalies(sc), root / "data", "SYNTH");
  const Dataset ds = tu::load(root / "data", "SYNTH");
  TrainConfig cfg = corpus_config(3);
  cfg.epochs = 8;
  cfg.pretrain_epochs = 3;
  cfg.pool.kind = PoolKind::MinCut;
  TrialOutcome first = run_trials(cfg, ds, 1);
  write_run(root / "first", first, (root / "data").string());

  const RunManifest m = load_manifest(root / "first");
  const Dataset again = tu::load(m.dataset_path, m.dataset_name);
  if (fingerprint(again) != m.dataset_fingerprint) return {Verdict::Fail, "dataset fingerprint changed on reload"};
  TrialOutcome second = run_trials(m.config, again, 3);  // concurrent seeds must not change anything
  write_run(root / "second", second, m.dataset_path);
  std::vector<std::string> differ;
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "first")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "first");
    ++compared;
    if (slurp(e.path()) != slurp(root / "second" / rel)) differ.push_back(rel.string());
  }
  std::string list;
  for (const auto& d : differ) list += " " + d;
  return {differ.empty() && compared >= 4 ? Verdict::Pass : Verdict::Fail,
          differ.empty() ? fmt("%zu run files byte-identical after re-running from the manifest (3 seeds, 3 jobs)", compared)
                         : "differing files:" + list};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> expect_fail;
  std::size_t seeds = 10, jobs = 1;
  app.add_option("--expect-fail", expect_fail, "criteria known to fail (reported, not counted)");
  app.add_option("--seeds", seeds, "seeds for the synthetic-corpus and PROTEINS criteria")->check(CLI::Range(2, 100));
  app.add_option("--jobs", jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  const std::set<int> known(expect_fail.begin(), expect_fail.end());

  int unexpected = 0;
  auto report = [&](int id, const char* title, const Outcome& o) {
    const bool expected_fail = known.count(id) > 0;
    const char* tag = o.verdict == Verdict::Skip ? "SKIP" : o.verdict == Verdict::Pass ? "PASS" : "FAIL";
    std::string note;
    if (o.verdict == Verdict::Fail && expected_fail) note = " (known failure)";
    if (o.verdict == Verdict::Fail && !expected_fail) ++unexpected;
    if (o.verdict == Verdict::Pass && expected_fail) {
      note = " (listed as expected failure)";
      ++unexpected;
    }
    std::printf("%s %d %s: %s%s\n", tag, id, title, o.detail.c_str(), note.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient correctness", gradients());
  report(2, "oracle fidelity", oracles());
  report(3, "chebyshev bound", chebyshev());

  CorpusRuns c;
  const auto t0 = Clock::now();
  c.corpus = synth_planted_anomalies(SynthConfig{});
  TrainConfig mvp_mean = corpus_config(seeds);
  TrainConfig mean = mvp_mean;
  mean.use_mvp = false;
  TrainConfig attention = mean;
  attention.pool.kind = PoolKind::AttentionTopK;
  c.mvp_mean = run_trials(mvp_mean, c.corpus.dataset, jobs);
  c.mean = run_trials(mean, c.corpus.dataset, jobs);
  c.attention = run_trials(attention, c.corpus.dataset, jobs);
  c.seconds = seconds_since(t0);
  Outcome r4 = recall(c);
  r4.detail += fmt(", training %.0fs for three %zu-seed trials", c.seconds, seeds);
  if (c.seconds > 600.0) r4.verdict = Verdict::Fail;
  report(4, "planted-anomaly recall", r4);
  report(5, "comparative improvement", improvement(c));
  report(6, "degree bias", degree_bias(c));
  report(7, "centrality", centrality(c));
  report(8, "PROTEINS accuracy", proteins(seeds, jobs));
  report(9, "determinism", determinism());
  return unexpected == 0 ? 0 : 1;
}
