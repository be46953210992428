#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "btft/game.hpp"
#include "btft/rng.hpp"

namespace btft {

// L x L periodic square lattice, row-major (site = y * L + x), with the four
// von Neumann neighbours of every site precomputed.
class Lattice {
 public:
  static constexpr int kDegree = 4;
  using Counts = std::array<std::int64_t, 3>;

  explicit Lattice(int side, Strategy fill = Strategy::D);
  Lattice(int side, std::vector<Strategy> cells);

  int side() const { return side_; }
  std::size_t size() const { return cells_.size(); }

  Strategy operator[](std::size_t site) const { return cells_[site]; }
  Strategy at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * side_ + x]; }
  void set(std::size_t site, Strategy s);

  // Neighbours in the fixed order up, down, left, right.
  const std::array<std::uint32_t, kDegree>& neighbors(std::size_t site) const { return neighbors_[site]; }

  std::span<const Strategy> cells() const { return cells_; }
  const Counts& counts() const { return counts_; }
  std::int64_t count(Strategy s) const { return counts_[index_of(s)]; }
  bool homogeneous() const;

  bool operator==(const Lattice& other) const { return side_ == other.side_ && cells_ == other.cells_; }

 private:
  void build_neighbors();

  int side_;
  std::vector<Strategy> cells_;
  std::vector<std::array<std::uint32_t, kDegree>> neighbors_;
  Counts counts_{};
};

enum class InitKind { uniform3, uniform_cd, explicit_grid };

struct InitialCondition {
  InitKind kind = InitKind::uniform3;
  std::vector<Strategy> cells;  // explicit_grid only, row-major side*side

  static InitialCondition uniform3() { return {}; }
  static InitialCondition uniform_cd() { return {InitKind::uniform_cd, {}}; }
  static InitialCondition from_lattice(const Lattice& lattice);
};

std::string to_string(InitKind kind);

struct SimConfig {
  int side_l = 200;
  GameParams params;
  std::int64_t mcs_total = 15000;
  std::int64_t stationary_window = 5000;
  std::uint64_t seed = 1;
  InitialCondition init;
  std::vector<std::int64_t> snapshot_schedule;  // MCS times; 0 = initial state
  std::filesystem::path snapshot_dir;           // empty disables snapshot files
  std::int64_t record_every = 1;                // thinning of the stored series

  void validate() const;

  // Run lengths of the standard protocol and of the extended protocol used
  // close to phase transitions.
  static SimConfig standard(int side_l, const GameParams& params, std::uint64_t seed);
  static SimConfig extended(int side_l, const GameParams& params, std::uint64_t seed);
};

struct CountSample {
  std::int64_t mcs;
  Lattice::Counts counts;
};

enum class Termination { completed, absorbed };

struct RunRecord {
  std::int64_t sites = 0;
  std::vector<CountSample> series;
  std::array<double, 3> stationary{};  // (x_C, x_D, x_T)
  Termination termination = Termination::completed;
  Strategy absorbing_strategy = Strategy::D;  // meaningful when absorbed
  std::int64_t end_mcs = 0;                   // last MCS executed
  std::uint64_t seed = 0;
  std::vector<std::string> snapshot_errors;

  std::array<double, 3> fractions(const CountSample& s) const;
  std::array<double, 3> final_fractions() const { return fractions(series.back()); }
  bool absorbed() const { return termination == Termination::absorbed; }
};

Lattice init_lattice(const SimConfig& config, Rng& rng);

// Average payoff of a site against its four neighbours.
double site_payoff(const Lattice& lattice, const PayoffMatrix& matrix, std::size_t site);

// One random-sequential imitation attempt. Always consumes exactly three
// draws from rng (site, neighbour, acceptance). Returns true if the focal
// site changed strategy.
bool elementary_step(Lattice& lattice, const PayoffMatrix& matrix, double noise_k, Rng& rng);

// Executes config.mcs_total Monte Carlo steps of L^2 elementary steps each,
// stopping early once the lattice is homogeneous.
RunRecord run(const SimConfig& config);

}  // namespace btft
