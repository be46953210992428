#include "btft/lattice.hpp"

#include <algorithm>
#include <set>

#include "btft/snapshot.hpp"

namespace btft {

Lattice::Lattice(int side, Strategy fill) : Lattice(side, std::vector<Strategy>(static_cast<std::size_t>(side) * std::max(side, 0), fill)) {}

Lattice::Lattice(int side, std::vector<Strategy> cells) : side_(side), cells_(std::move(cells)) {
  if (side < 2) throw DomainError("lattice side must be at least 2");
  if (cells_.size() != static_cast<std::size_t>(side) * side)
    throw DomainError("grid has " + std::to_string(cells_.size()) + " cells, expected " +
                      std::to_string(static_cast<std::size_t>(side) * side));
  for (Strategy s : cells_) {
    if (index_of(s) > 2) throw DomainError("invalid strategy value in grid");
    ++counts_[index_of(s)];
  }
  build_neighbors();
}

void Lattice::build_neighbors() {
  const auto L = static_cast<std::uint32_t>(side_);
  neighbors_.resize(cells_.size());
  for (std::uint32_t y = 0; y < L; ++y) {
    for (std::uint32_t x = 0; x < L; ++x) {
      neighbors_[y * L + x] = {((y + L - 1) % L) * L + x, ((y + 1) % L) * L + x, y * L + (x + L - 1) % L,
                               y * L + (x + 1) % L};
    }
  }
}

void Lattice::set(std::size_t site, Strategy s) {
  --counts_[index_of(cells_[site])];
  ++counts_[index_of(s)];
  cells_[site] = s;
}

bool Lattice::homogeneous() const {
  const auto n = static_cast<std::int64_t>(cells_.size());
  return std::any_of(counts_.begin(), counts_.end(), [n](std::int64_t c) { return c == n; });
}

InitialCondition InitialCondition::from_lattice(const Lattice& lattice) {
  return {InitKind::explicit_grid, {lattice.cells().begin(), lattice.cells().end()}};
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::uniform3: return "uniform3";
    case InitKind::uniform_cd: return "cd";
    case InitKind::explicit_grid: return "explicit";
  }
  return "?";
}

void SimConfig::validate() const {
  params.validate();
  if (side_l < 4) throw DomainError("side_l must be at least 4");
  if (stationary_window < 1) throw DomainError("stationary_window must be at least 1");
  if (mcs_total < stationary_window) throw DomainError("mcs_total must be >= stationary_window");
  if (record_every < 1) throw DomainError("record_every must be at least 1");
  if (init.kind == InitKind::explicit_grid && init.cells.size() != static_cast<std::size_t>(side_l) * side_l)
    throw DomainError("explicit grid does not match side_l = " + std::to_string(side_l));
  for (auto t : snapshot_schedule)
    if (t < 0) throw DomainError("snapshot times must be non-negative");
}

SimConfig SimConfig::standard(int side_l, const GameParams& params, std::uint64_t seed) {
  SimConfig c;
  c.side_l = side_l;
  c.params = params;
  c.seed = seed;
  c.mcs_total = 15000;
  c.stationary_window = 5000;
  return c;
}

SimConfig SimConfig::extended(int side_l, const GameParams& params, std::uint64_t seed) {
  SimConfig c = standard(side_l, params, seed);
  c.mcs_total = 30000;
  c.stationary_window = 15000;
  return c;
}

std::array<double, 3> RunRecord::fractions(const CountSample& s) const {
  const auto n = static_cast<double>(sites);
  return {static_cast<double>(s.counts[0]) / n, static_cast<double>(s.counts[1]) / n,
          static_cast<double>(s.counts[2]) / n};
}

Lattice init_lattice(const SimConfig& config, Rng& rng) {
  const int L = config.side_l;
  const std::size_t n = static_cast<std::size_t>(L) * L;
  switch (config.init.kind) {
    case InitKind::explicit_grid:
      if (config.init.cells.size() != n) throw DomainError("explicit grid does not match side_l");
      return Lattice(L, config.init.cells);
    case InitKind::uniform_cd: {
      std::vector<Strategy> cells(n);
      for (auto& c : cells) c = rng.below(2) == 0 ? Strategy::C : Strategy::D;
      return Lattice(L, std::move(cells));
    }
    case InitKind::uniform3: {
      std::vector<Strategy> cells(n);
      for (auto& c : cells) c = static_cast<Strategy>(rng.below(3));
      return Lattice(L, std::move(cells));
    }
  }
  throw DomainError("unknown initial condition");
}

namespace {

// Flattened 3x3 matrix for the inner loop.
struct FlatPayoff {
  explicit FlatPayoff(const PayoffMatrix& m) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) v[i * 3 + j] = m.data()[i][j];
  }
  double v[9];
};

inline double payoff_of(const Lattice& lat, const FlatPayoff& m, std::size_t site) {
  const double* row = m.v + 3 * index_of(lat[site]);
  const auto& nb = lat.neighbors(site);
  const double sum = row[index_of(lat[nb[0]])] + row[index_of(lat[nb[1]])] + row[index_of(lat[nb[2]])] +
                     row[index_of(lat[nb[3]])];
  return sum / Lattice::kDegree;
}

inline bool step_impl(Lattice& lat, const FlatPayoff& m, double noise_k, Rng& rng) {
  const std::size_t i = rng.below(lat.size());
  const std::size_t j = lat.neighbors(i)[rng.below(Lattice::kDegree)];
  const double u = rng.uniform();
  const Strategy si = lat[i];
  const Strategy sj = lat[j];
  if (si == sj) return false;
  const double pi_i = payoff_of(lat, m, i);
  const double pi_j = payoff_of(lat, m, j);
  if (u < fermi_probability(pi_i, pi_j, noise_k)) {
    lat.set(i, sj);
    return true;
  }
  return false;
}

std::string snapshot_stem(const std::filesystem::path& dir, std::int64_t mcs) {
  return (dir / ("snapshot_mcs" + std::to_string(mcs))).string();
}

}  // namespace

double site_payoff(const Lattice& lattice, const PayoffMatrix& matrix, std::size_t site) {
  return payoff_of(lattice, FlatPayoff(matrix), site);
}

bool elementary_step(Lattice& lattice, const PayoffMatrix& matrix, double noise_k, Rng& rng) {
  return step_impl(lattice, FlatPayoff(matrix), noise_k, rng);
}

RunRecord run(const SimConfig& config) {
  config.validate();
  const PayoffMatrix matrix = build_payoff_matrix(config.params);
  const FlatPayoff flat(matrix);
  const double noise_k = config.params.noise_k;

  Rng rng(config.seed);
  Lattice lattice = init_lattice(config, rng);
  const auto n = static_cast<std::int64_t>(lattice.size());

  RunRecord rec;
  rec.sites = n;
  rec.seed = config.seed;

  std::set<std::int64_t> pending(config.snapshot_schedule.begin(), config.snapshot_schedule.end());
  auto take_snapshots_upto = [&](std::int64_t t) {
    while (!pending.empty() && *pending.begin() <= t) {
      const auto when = *pending.begin();
      pending.erase(pending.begin());
      if (config.snapshot_dir.empty()) continue;
      try {
        export_snapshot(lattice, snapshot_stem(config.snapshot_dir, when));
      } catch (const std::exception& e) {
        rec.snapshot_errors.push_back(e.what());
      }
    }
  };

  rec.series.push_back({0, lattice.counts()});
  take_snapshots_upto(0);

  auto finish_absorbed = [&](std::int64_t t) {
    rec.termination = Termination::absorbed;
    rec.end_mcs = t;
    for (Strategy s : kAllStrategies)
      if (lattice.count(s) == n) rec.absorbing_strategy = s;
    if (rec.series.back().mcs != t) rec.series.push_back({t, lattice.counts()});
    rec.stationary = rec.fractions(rec.series.back());
    // The state is frozen from here on, so later snapshots are exact.
    take_snapshots_upto(config.mcs_total);
    return rec;
  };

  if (lattice.homogeneous()) return finish_absorbed(0);

  const std::int64_t window_start = config.mcs_total - config.stationary_window;  // exclusive
  std::array<std::int64_t, 3> window_sums{};

  for (std::int64_t t = 1; t <= config.mcs_total; ++t) {
    for (std::int64_t s = 0; s < n; ++s) {
      if (step_impl(lattice, flat, noise_k, rng) && lattice.homogeneous()) return finish_absorbed(t);
    }
    if (t > window_start)
      for (int k = 0; k < 3; ++k) window_sums[k] += lattice.counts()[k];
    if (t % config.record_every == 0 || t == config.mcs_total) rec.series.push_back({t, lattice.counts()});
    take_snapshots_upto(t);
  }

  rec.end_mcs = config.mcs_total;
  const double denom = static_cast<double>(config.stationary_window) * static_cast<double>(n);
  for (int k = 0; k < 3; ++k) rec.stationary[k] = static_cast<double>(window_sums[k]) / denom;
  return rec;
}

}  // namespace btft
