#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "btft/game.hpp"

// Replicator dynamics of the three-strategy game in an infinite well-mixed
// population, reduced to the two free coordinates (x_C, x_T).
namespace btft::wm {

struct SimplexState {
  double x_c = 0.0;
  double x_t = 0.0;

  double x_d() const { return 1.0 - x_c - x_t; }
  // Throws DomainError unless every component lies in [-tol, 1 + tol].
  void validate(double tol = 1e-9) const;
};

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using EigenPair = std::array<std::complex<double>, 2>;

struct Payoffs {
  double c, d, t;
};

Payoffs wm_payoffs(const SimplexState& x, const GameParams& p);
double mean_payoff(const SimplexState& x, const GameParams& p);

// (dx_C/dt, dx_T/dt) from the expanded polynomials.
Vec2 replicator_rhs(const SimplexState& x, const GameParams& p);
// Same flow through x_i * (pi_i - <pi>); kept as an independent route.
Vec2 replicator_rhs_generic(const SimplexState& x, const GameParams& p);

Mat2 jacobian(const SimplexState& x, const GameParams& p);

// Roots of the characteristic polynomial, larger real part first.
EigenPair eigenvalues(const Mat2& m);

class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegrateOptions {
  double t_max = 1e4;
  double dt = 0.01;
  double rhs_tol = 1e-12;
  // Slowest decay rate a rest point must show to count as converged; near
  // non-hyperbolic vertices the flow stalls without being attracted.
  double min_decay_rate = 1e-6;
  bool renormalize = true;
  std::int64_t record_every = 0;  // steps between stored points; 0 stores only the ends
};

struct TrajectoryPoint {
  double t;
  SimplexState x;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  SimplexState endpoint;
  double t_end = 0.0;
  bool converged = false;
};

// Fixed-step RK4. Converged means the flow has come to rest at a locally
// attracting point (|rhs| < rhs_tol and both Jacobian eigenvalues have real
// part <= -min_decay_rate), or that x0 itself is a rest point.
Trajectory integrate(const SimplexState& x0, const GameParams& p, const IntegrateOptions& opts = {});

enum class EquilibriumKind { vertex_c, vertex_d, vertex_t, edge_ct, interior };
enum class Verdict { stable, unstable, marginal, not_applicable };

std::string to_string(EquilibriumKind k);
std::string to_string(Verdict v);

struct EquilibriumReport {
  EquilibriumKind kind;
  bool exists = false;
  std::optional<SimplexState> point;
  std::optional<EigenPair> eigenvalues;
  Verdict verdict = Verdict::not_applicable;
};

inline constexpr double kExistenceEps = 1e-12;
inline constexpr double kEdgeSingularTol = 1e-10;
inline constexpr double kMarginalTol = 1e-12;

Verdict classify_eigenvalues(const EigenPair& eig, double tol = kMarginalTol);

// Closed-form equilibrium locations (may lie outside the simplex).
SimplexState edge_point(const GameParams& p);
SimplexState interior_point(const GameParams& p);

// Closed-form Jacobians at the edge and interior equilibria. These are the
// simplified expressions; jacobian() at the point is the reference.
Mat2 edge_jacobian_closed_form(const GameParams& p);
Mat2 interior_jacobian_closed_form(const GameParams& p);

// Discriminant governing real vs complex interior eigenvalues.
double interior_discriminant(const GameParams& p);

// All five candidates in the order C, D, T, edge, interior.
std::vector<EquilibriumReport> equilibria(const GameParams& p);

enum class PhaseLabel { t_only, c_t, interior_stable, cyclic };
std::string to_string(PhaseLabel l);

struct Phase {
  PhaseLabel label;
  bool boundary = false;  // some defining inequality is an equality within 1e-12
};

Phase wm_phase(const GameParams& p);

struct PhaseMapPoint {
  double theta_t;
  double theta_c;
  Phase phase;
};

// Grid points theta = max * i / n for i = 1..n on both axes, theta_t
// varying fastest.
std::vector<PhaseMapPoint> phase_map(double r, int n_theta_t, int n_theta_c, double theta_t_max = 1.5,
                                     double theta_c_max = 2.5);

void write_phase_map_csv(const std::vector<PhaseMapPoint>& map, std::ostream& out);
void write_equilibria_csv(const std::vector<EquilibriumReport>& reports, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace btft::wm
