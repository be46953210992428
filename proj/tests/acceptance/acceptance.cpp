// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Optional arguments select criteria by number.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "btft/game.hpp"
#include "btft/lattice.hpp"
#include "btft/rng.hpp"
#include "btft/snapshot.hpp"
#include "btft/wellmixed.hpp"
#include "oracles.hpp"

using namespace btft;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Time series CSVs of the stochastic runs, kept for the determinism check.
std::map<std::string, std::string> g_series;

std::string series_csv(const RunRecord& rec) {
  std::ostringstream out;
  write_timeseries_csv(rec, out);
  return out.str();
}

SimConfig lattice_config(double r, double tc, double tt, std::uint64_t seed, bool extended, bool cd_start) {
  GameParams p{r, tc, tt, 0.1};
  auto cfg = extended ? SimConfig::extended(200, p, seed) : SimConfig::standard(200, p, seed);
  if (cd_start) cfg.init = InitialCondition::uniform_cd();
  return cfg;
}

std::string run_key(const SimConfig& c) {
  return fmt("r=%g tc=%g tt=%g seed=%llu mcs=%lld init=%s", c.params.r, c.params.theta_c, c.params.theta_t,
             static_cast<unsigned long long>(c.seed), static_cast<long long>(c.mcs_total),
             to_string(c.init.kind).c_str());
}

RunRecord tracked_run(const SimConfig& cfg) {
  auto rec = run(cfg);
  g_series.emplace(run_key(cfg), series_csv(rec));
  return rec;
}

// ---------------------------------------------------------------- analytical

Outcome payoff_matrix() {
  Rng rng(2024);
  double worst = 0;
  for (int n = 0; n < 1000; ++n) {
    const double r = 0.001 + 0.998 * rng.uniform();
    const double tc = 0.01 + 3.0 * rng.uniform();
    const double tt = 0.01 + 3.0 * rng.uniform();
    const double lit[3][3] = {{1 - r, -r, tc - r}, {1, 0, 0}, {1 - tc * r, 0, tt * (1 - r)}};
    const auto m = build_payoff_matrix({r, tc, tt, 0.1});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(m(kAllStrategies[i], kAllStrategies[j]) - lit[i][j]));
  }
  return {worst <= 1e-15, fmt("1000 draws, max |diff| = %.3g (tol 1e-15)", worst)};
}

Outcome fermi_rule() {
  bool half = true;
  for (double v : {-3.0, 0.0, 0.25, 17.0}) half = half && fermi_probability(v, v, 0.1) == 0.5;
  Rng rng(99);
  double worst = 0;
  for (int n = 0; n < 100000; ++n) {
    const double a = 6 * rng.uniform() - 3, b = 6 * rng.uniform() - 3;
    worst = std::max(worst, std::abs(fermi_probability(a, b, 0.1) + fermi_probability(b, a, 0.1) - 1.0));
  }
  const auto t = oracle::imitation_frequency(100000, 31337);
  const double z = std::abs(t.observed - t.expected) / t.std_error;
  const bool ok = half && worst <= 1e-12 && z <= 3.0;
  return {ok, fmt("W(x,x)=0.5: %s; max |W(a,b)+W(b,a)-1| = %.2g; MC %.5f vs %.5f over %lld trials (%.2f sigma)",
                  half ? "yes" : "no", worst, t.observed, t.expected, static_cast<long long>(t.hits), z)};
}

Outcome appendix_equilibria() {
  Rng rng(7);
  double rhs_worst = 0, eig_worst = 0, fd_worst = 0;
  int checked = 0, edges = 0, interiors = 0;
  for (int n = 0; n < 1000; ++n) {
    const GameParams p{0.01 + 0.98 * rng.uniform(), 0.05 + 2.5 * rng.uniform(), 0.05 + 2.0 * rng.uniform(), 0.1};
    for (const auto& rep : wm::equilibria(p)) {
      if (!rep.exists) continue;
      ++checked;
      edges += rep.kind == wm::EquilibriumKind::edge_ct;
      interiors += rep.kind == wm::EquilibriumKind::interior;
      const auto f = wm::replicator_rhs(*rep.point, p);
      rhs_worst = std::max(rhs_worst, std::hypot(f[0], f[1]));

      const auto j = wm::jacobian(*rep.point, p);
      Eigen::Matrix2d m;
      m << j[0][0], j[0][1], j[1][0], j[1][1];
      const Eigen::Vector2cd ev = Eigen::EigenSolver<Eigen::Matrix2d>(m, false).eigenvalues();
      const auto& cf = *rep.eigenvalues;
      const double direct = std::max(std::abs(cf[0] - ev[0]), std::abs(cf[1] - ev[1]));
      const double swapped = std::max(std::abs(cf[0] - ev[1]), std::abs(cf[1] - ev[0]));
      eig_worst = std::max(eig_worst, std::min(direct, swapped));
    }
    // Finite-difference Jacobian at a random simplex point and at each existing equilibrium.
    double a = rng.uniform(), b = rng.uniform();
    if (a > b) std::swap(a, b);
    const wm::SimplexState x{a, 1 - b};
    const double h = 1e-6;
    const auto j = wm::jacobian(x, p);
    for (int col = 0; col < 2; ++col) {
      wm::SimplexState xp = x, xm = x;
      (col == 0 ? xp.x_c : xp.x_t) += h;
      (col == 0 ? xm.x_c : xm.x_t) -= h;
      const auto fp = wm::replicator_rhs(xp, p), fm = wm::replicator_rhs(xm, p);
      for (int row = 0; row < 2; ++row) fd_worst = std::max(fd_worst, std::abs((fp[row] - fm[row]) / (2 * h) - j[row][col]));
    }
  }
  const bool ok = rhs_worst < 1e-10 && eig_worst <= 1e-9 && fd_worst <= 1e-6 && edges > 0 && interiors > 0;
  return {ok, fmt("%d equilibria (%d edge, %d interior): max |rhs| %.2g, max eig diff %.2g, max FD diff %.2g", checked,
                  edges, interiors, rhs_worst, eig_worst, fd_worst)};
}

// Phase conditions evaluated directly from their definitions.
wm::PhaseLabel oracle_phase(double r, double tc, double tt) {
  const double a = tt * (1 - r);
  if (a > std::max(tc - r, 0.0)) return wm::PhaseLabel::t_only;
  if (tc * (tc - r) < a && a < tc - r) return wm::PhaseLabel::c_t;
  if (tc * (tc - r) > a && tc < 1) return wm::PhaseLabel::interior_stable;
  return wm::PhaseLabel::cyclic;
}

Outcome phase_map_reproduction() {
  using wm::PhaseLabel;
  const double r = 0.1;
  const int n = 300;
  const auto map = wm::phase_map(r, n, n, 1.5, 2.5);
  auto at = [&](int i, int j) -> const wm::PhaseMapPoint& { return map[static_cast<std::size_t>(j) * n + i]; };

  int mismatches = 0;
  std::set<PhaseLabel> seen;
  for (const auto& pt : map) {
    seen.insert(pt.phase.label);
    if (pt.phase.label != oracle_phase(r, pt.theta_c, pt.theta_t)) ++mismatches;
  }

  // Ordering along theta_T in each theta_C column.
  int order_violations = 0;
  for (int j = 0; j < n; ++j) {
    const double tc = at(0, j).theta_c;
    std::vector<PhaseLabel> expected;
    if (tc < r) expected = {PhaseLabel::t_only};
    else if (tc > r && tc < 1) expected = {PhaseLabel::interior_stable, PhaseLabel::c_t, PhaseLabel::t_only};
    else if (tc > 1) expected = {PhaseLabel::cyclic, PhaseLabel::t_only};
    else continue;
    std::size_t pos = 0;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (at(i, j).phase.boundary) continue;
      while (pos < expected.size() && expected[pos] != at(i, j).phase.label) ++pos;
      ok = pos < expected.size();
    }
    if (!ok) ++order_violations;
  }

  // Every label change between grid neighbours crosses one of the boundary curves.
  auto g = [&](const wm::PhaseMapPoint& p) {
    const double a = p.theta_t * (1 - r);
    return std::array<double, 4>{a - (p.theta_c - r), a - p.theta_c * (p.theta_c - r), p.theta_c - 1, p.theta_c - r};
  };
  std::set<std::pair<PhaseLabel, PhaseLabel>> adjacent;
  int stray = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{0, 1}}) {
        if (i + di >= n || j + dj >= n) continue;
        const auto &p = at(i, j), &q = at(i + di, j + dj);
        if (p.phase.label == q.phase.label) continue;
        adjacent.insert(std::minmax(p.phase.label, q.phase.label));
        const auto gp = g(p), gq = g(q);
        bool crosses = false;
        for (int k = 0; k < 4; ++k) crosses = crosses || gp[k] * gq[k] <= 0;
        if (!crosses) ++stray;
      }
  const std::vector<std::pair<PhaseLabel, PhaseLabel>> required{
      std::minmax(PhaseLabel::t_only, PhaseLabel::c_t), std::minmax(PhaseLabel::c_t, PhaseLabel::interior_stable),
      std::minmax(PhaseLabel::interior_stable, PhaseLabel::cyclic), std::minmax(PhaseLabel::t_only, PhaseLabel::cyclic)};
  int missing_adjacency = 0;
  for (const auto& pr : required) missing_adjacency += adjacent.count(pr) == 0;

  const bool ok = mismatches == 0 && seen.size() == 4 && order_violations == 0 && stray == 0 && missing_adjacency == 0;
  return {ok, fmt("%dx%d grid: %zu regions, %d label mismatches, %d column-order violations, %d off-boundary "
                  "changes, %d missing adjacencies",
                  n, n, seen.size(), mismatches, order_violations, stray, missing_adjacency)};
}

Outcome dynamics_statics() {
  using wm::PhaseLabel;
  int cyclic = 0, settled = 0, bad = 0;
  double worst = 0;
  std::string first_bad;
  for (int i = 1; i <= 20; ++i)
    for (int j = 1; j <= 20; ++j) {
      const GameParams p{0.1, 2.5 * j / 20, 1.5 * i / 20, 0.1};
      const auto phase = wm::wm_phase(p);
      wm::IntegrateOptions o;
      // Non-cyclic points may pass close to the marginal D vertex and linger
      // there for a long time before reaching their attractor.
      o.t_max = phase.label == PhaseLabel::cyclic ? 1e4 : 1e7;
      wm::Trajectory tr;
      try {
        tr = wm::integrate({1.0 / 3, 1.0 / 3}, p, o);
      } catch (const std::exception& e) {
        ++bad;
        if (first_bad.empty()) first_bad = fmt(" first: tc=%g tt=%g %s", p.theta_c, p.theta_t, e.what());
        continue;
      }
      if (phase.label == PhaseLabel::cyclic) {
        ++cyclic;
        if (tr.converged) {
          ++bad;
          if (first_bad.empty()) first_bad = fmt(" first: tc=%g tt=%g converged (cyclic)", p.theta_c, p.theta_t);
        }
        continue;
      }
      ++settled;
      wm::SimplexState target{0, 1};
      if (phase.label == PhaseLabel::c_t) target = wm::edge_point(p);
      if (phase.label == PhaseLabel::interior_stable) target = wm::interior_point(p);
      const double err = std::max({std::abs(target.x_c - tr.endpoint.x_c), std::abs(target.x_t - tr.endpoint.x_t),
                                   std::abs(target.x_d() - tr.endpoint.x_d())});
      worst = std::max(worst, err);
      if (!tr.converged || err > 1e-5) {
        ++bad;
        if (first_bad.empty()) first_bad = fmt(" first: tc=%g tt=%g err %.2g", p.theta_c, p.theta_t, err);
      }
    }
  return {bad == 0, fmt("20x20 grid: %d non-cyclic points (max endpoint error %.2g), %d cyclic points, %d failures%s",
                        settled, worst, cyclic, bad, first_bad.c_str())};
}

// ----------------------------------------------------------------- stochastic

constexpr int kSeeds = 5;

Outcome two_strategy_baseline() {
  int passes = 0;
  std::string per_seed;
  for (int s = 1; s <= kSeeds; ++s) {
    const double lo = tracked_run(lattice_config(0.01, 1, 1, s, false, true)).stationary[0];
    const double mid = tracked_run(lattice_config(0.05, 1, 1, s, false, true)).stationary[0];
    const double hi = tracked_run(lattice_config(0.2, 1, 1, s, false, true)).stationary[0];
    const bool ok = lo > mid && hi < 0.01;
    passes += ok;
    per_seed += fmt(" [seed %d: %.3f/%.3f/%.3f]", s, lo, mid, hi);
  }
  return {passes * 2 > kSeeds, fmt("%d/%d seeds with x_C(0.01) > x_C(0.05) and x_C(0.2) < 0.01;%s", passes, kSeeds,
                                   per_seed.c_str())};
}

Outcome coexistence() {
  int passes = 0;
  std::string per_seed;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto x = tracked_run(lattice_config(0.1, 1.5, 1.0, s, false, false)).stationary;
    passes += std::min({x[0], x[1], x[2]}) > 0.05;
    per_seed += fmt(" [%.3f %.3f %.3f]", x[0], x[1], x[2]);
  }
  return {passes >= 4, fmt("%d/%d seeds with all stationary fractions > 0.05 (need 4);%s", passes, kSeeds,
                           per_seed.c_str())};
}

Outcome hidden_t_phase() {
  int passes = 0, excluded = 0;
  std::string per_seed;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto rec = tracked_run(lattice_config(0.1, 1.5, 0.1, s, true, false));
    const double xt = rec.final_fractions()[2];
    bool t_died = false;
    for (const auto& sample : rec.series) t_died = t_died || sample.counts[2] == 0;
    if (t_died) {
      ++excluded;
      per_seed += fmt(" [seed %d: T extinct, excluded]", s);
      continue;
    }
    passes += xt > 0.95;
    per_seed += fmt(" [seed %d: x_T %.3f%s]", s, xt, rec.absorbed() ? fmt(" at MCS %lld", (long long)rec.end_mcs).c_str() : "");
  }
  const int valid = kSeeds - excluded;
  const bool ok = valid > 0 && passes * kSeeds >= 3 * valid;
  return {ok, fmt("%d/%d non-excluded seeds with final x_T > 0.95 (need 3/5 of them), %d excluded;%s", passes, valid,
                  excluded, per_seed.c_str())};
}

Outcome structured_contrast() {
  const auto phase = wm::wm_phase({0.1, 1.5, 0.1, 0.1});
  return {phase.label == wm::PhaseLabel::cyclic && !phase.boundary,
          "well-mixed label at r=0.1, theta_C=1.5, theta_T=0.1: " + wm::to_string(phase.label)};
}

Outcome determinism() {
  const std::vector<SimConfig> repeats{lattice_config(0.01, 1, 1, 1, false, true),
                                       lattice_config(0.1, 1.5, 1.0, 1, false, false),
                                       lattice_config(0.1, 1.5, 0.1, 2, true, false)};
  int identical = 0, compared = 0;
  for (const auto& cfg : repeats) {
    const std::string again = series_csv(run(cfg));
    auto it = g_series.find(run_key(cfg));
    const std::string first = it != g_series.end() ? it->second : series_csv(run(cfg));
    ++compared;
    identical += first == again;
  }
  return {identical == compared, fmt("%d/%d repeated runs byte-identical (one per stochastic criterion)", identical,
                                     compared)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> all{
      {1, "payoff matrix transcription", payoff_matrix},
      {2, "Fermi rule and imitation frequency", fermi_rule},
      {3, "closed-form equilibria and eigenvalues", appendix_equilibria},
      {4, "well-mixed phase map", phase_map_reproduction},
      {5, "replicator dynamics vs phase prediction", dynamics_statics},
      {6, "two-strategy baseline", two_strategy_baseline},
      {7, "three-strategy coexistence", coexistence},
      {8, "hidden T phase on the lattice", hidden_t_phase},
      {9, "hidden T phase absent when well mixed", structured_contrast},
      {10, "determinism of lattice runs", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
