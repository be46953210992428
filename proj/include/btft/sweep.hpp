#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "btft/lattice.hpp"

namespace btft {

// Set of strategies that survive a run, e.g. "C+D" or "T".
class PhaseLabel {
 public:
  PhaseLabel() = default;
  static PhaseLabel from_mask(std::uint8_t mask);
  static std::optional<PhaseLabel> parse(const std::string& text);

  bool contains(Strategy s) const { return (mask_ >> index_of(s)) & 1U; }
  std::uint8_t mask() const { return mask_; }
  std::string str() const;

  auto operator<=>(const PhaseLabel&) const = default;

 private:
  explicit PhaseLabel(std::uint8_t mask) : mask_(mask) {}
  std::uint8_t mask_ = 0;
};

inline constexpr double kDefaultExtinctionEps = 1e-3;

// A strategy survives iff its stationary fraction exceeds eps. The triple
// must be a distribution (non-negative, summing to 1 within 1e-9).
PhaseLabel classify_phase(const std::array<double, 3>& stationary, double eps = kDefaultExtinctionEps);

enum class SweptParam { r, theta_c, theta_t };
std::string to_string(SweptParam p);
std::optional<SweptParam> parse_swept_param(const std::string& name);

struct Axis {
  SweptParam param = SweptParam::theta_t;
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;

  // min, min+step, ... up to max (inclusive within rounding).
  std::vector<double> values() const;
};

struct SweepSpec {
  std::vector<Axis> axes;  // one or two; the last axis varies fastest
  SimConfig base;          // fixed parameters and run protocol for every point
  int replicates = 5;
  std::uint64_t base_seed = 1;
  double extinction_eps = kDefaultExtinctionEps;
  int workers = 1;

  void validate() const;
  std::size_t point_count() const;
  // Parameters of grid point `index`.
  GameParams params_at(std::size_t index) const;
  // Full run configuration of one replicate at one point.
  SimConfig config_at(std::size_t index, int replicate) const;
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::array<double, 3> stationary{};
  PhaseLabel label;
  std::string error;
};

struct SweepPoint {
  std::size_t index = 0;
  GameParams params;
  std::vector<ReplicateResult> replicates;
  std::array<double, 3> mean{};
  PhaseLabel phase;
  int ok_count = 0;

  bool missing() const { return ok_count == 0; }
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

using RunFunction = std::function<RunRecord(const SimConfig&)>;

// Majority label among the given labels. Ties go to the label of the mean
// triple when it is among the tied ones, otherwise to the smallest mask.
PhaseLabel majority_label(const std::vector<PhaseLabel>& labels, const std::array<double, 3>& mean, double eps);

SweepPoint aggregate_point(std::size_t index, const GameParams& params, std::vector<ReplicateResult> reps, double eps);

// Runs every replicate of a single grid point sequentially.
SweepPoint run_point(const SweepSpec& spec, std::size_t index, const RunFunction& runner = run);

// Runs the whole grid on spec.workers threads. Results are indexed by grid
// point and do not depend on scheduling.
SweepResult run_sweep(const SweepSpec& spec, const RunFunction& runner = run,
                      const std::function<void(std::size_t, std::size_t)>& progress = {});

// `theta_t,theta_c,r,x_c,x_d,x_t,phase,replicates`
void write_sweep_csv(const SweepResult& result, std::ostream& out);

// Flat key=value text; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in);
// Applies recognised keys to spec; throws DomainError on unknown keys or bad values.
void apply_sweep_keys(const KeyValues& kv, SweepSpec& spec);
SweepSpec load_sweep_spec(std::istream& in);

}  // namespace btft
