#include "btft/wellmixed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "btft/snapshot.hpp"

namespace btft::wm {

void SimplexState::validate(double tol) const {
  const double xd = x_d();
  auto bad = [tol](double v) { return !(v >= -tol && v <= 1.0 + tol); };
  if (bad(x_c) || bad(x_t) || bad(xd))
    throw DomainError("state (" + std::to_string(x_c) + ", " + std::to_string(xd) + ", " + std::to_string(x_t) +
                      ") is not on the simplex");
}

Payoffs wm_payoffs(const SimplexState& x, const GameParams& p) {
  const double r = p.r;
  return {x.x_c + p.theta_c * x.x_t - r, x.x_c, x.x_c * (1.0 - p.theta_c * r) + x.x_t * p.theta_t * (1.0 - r)};
}

double mean_payoff(const SimplexState& x, const GameParams& p) {
  const Payoffs pi = wm_payoffs(x, p);
  return x.x_c * pi.c + x.x_d() * pi.d + x.x_t * pi.t;
}

Vec2 replicator_rhs(const SimplexState& x, const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double xc = x.x_c, xt = x.x_t;
  const double q = 1.0 - r;
  return {
      xc * (r * xc - tc * q * xc * xt + tc * xt - tt * q * xt * xt - r),
      xt * ((1.0 - tc) * r * xc - tc * q * xc * xt + tt * q * xt - tt * q * xt * xt),
  };
}

Vec2 replicator_rhs_generic(const SimplexState& x, const GameParams& p) {
  const Payoffs pi = wm_payoffs(x, p);
  const double avg = mean_payoff(x, p);
  return {x.x_c * (pi.c - avg), x.x_t * (pi.t - avg)};
}

Mat2 jacobian(const SimplexState& x, const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double xc = x.x_c, xt = x.x_t;
  const double q = 1.0 - r;
  return {{
      {2 * r * xc - 2 * tc * q * xc * xt + tc * xt - tt * q * xt * xt - r, xc * (-tc * q * xc + tc - 2 * tt * q * xt)},
      {xt * ((1 - tc) * r - tc * q * xt), (1 - tc) * r * xc - 2 * tc * q * xc * xt + 2 * tt * q * xt - 3 * tt * q * xt * xt},
  }};
}

EigenPair eigenvalues(const Mat2& m) {
  const double half_tr = 0.5 * (m[0][0] + m[1][1]);
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = half_tr * half_tr - det;
  if (disc >= 0) {
    const double s = std::sqrt(disc);
    return {std::complex<double>(half_tr + s, 0.0), std::complex<double>(half_tr - s, 0.0)};
  }
  const double s = std::sqrt(-disc);
  return {std::complex<double>(half_tr, s), std::complex<double>(half_tr, -s)};
}

namespace {

double norm2(const Vec2& v) { return std::hypot(v[0], v[1]); }

bool locally_attracting(const SimplexState& x, const GameParams& p, double min_decay) {
  const auto eig = eigenvalues(jacobian(x, p));
  return std::max(eig[0].real(), eig[1].real()) <= -min_decay;
}

// Subnormal fractions only arise deep in a boundary approach; flushing them
// keeps the arithmetic at full speed.
double flush(double v) { return std::abs(v) < std::numeric_limits<double>::min() ? 0.0 : v; }

SimplexState rk4_step(const SimplexState& x, const GameParams& p, double dt) {
  auto shifted = [&](const Vec2& k, double h) { return SimplexState{x.x_c + h * k[0], x.x_t + h * k[1]}; };
  const Vec2 k1 = replicator_rhs(x, p);
  const Vec2 k2 = replicator_rhs(shifted(k1, dt / 2), p);
  const Vec2 k3 = replicator_rhs(shifted(k2, dt / 2), p);
  const Vec2 k4 = replicator_rhs(shifted(k3, dt), p);
  return {x.x_c + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
          x.x_t + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

// Clamp small negative excursions and rescale so the three fractions sum to 1.
SimplexState project(const SimplexState& x) {
  double c = std::max(x.x_c, 0.0);
  double t = std::max(x.x_t, 0.0);
  double d = std::max(x.x_d(), 0.0);
  const double sum = c + d + t;
  return {c / sum, t / sum};
}

constexpr double kDriftTol = 1e-12;
constexpr double kAbortTol = 1e-9;

}  // namespace

Trajectory integrate(const SimplexState& x0, const GameParams& p, const IntegrateOptions& opts) {
  p.validate();
  if (!(opts.dt > 0.0)) throw DomainError("dt must be positive");
  if (!(opts.t_max >= 0.0)) throw DomainError("t_max must be non-negative");
  x0.validate();

  Trajectory tr;
  SimplexState x = x0;
  tr.points.push_back({0.0, x});

  if (norm2(replicator_rhs(x, p)) < opts.rhs_tol) {
    tr.endpoint = x;
    tr.converged = true;
    return tr;
  }

  const auto n_steps = static_cast<std::int64_t>(std::ceil(opts.t_max / opts.dt - 1e-9));
  double t = 0.0;
  for (std::int64_t step = 1; step <= n_steps; ++step) {
    x = rk4_step(x, p, opts.dt);
    x = {flush(x.x_c), flush(x.x_t)};
    t = static_cast<double>(step) * opts.dt;
    const double xd = x.x_d();
    for (double v : {x.x_c, x.x_t, xd}) {
      if (!(v >= -kAbortTol && v <= 1.0 + kAbortTol))
        throw StepSizeError("integration left the simplex at t = " + std::to_string(t) + "; reduce dt");
    }
    if (opts.renormalize && std::min({x.x_c, x.x_t, xd}) < -kDriftTol) x = project(x);

    if (opts.record_every > 0 && step % opts.record_every == 0) tr.points.push_back({t, x});
    if (norm2(replicator_rhs(x, p)) < opts.rhs_tol && locally_attracting(x, p, opts.min_decay_rate)) {
      tr.converged = true;
      break;
    }
  }
  if (tr.points.back().t != t) tr.points.push_back({t, x});
  tr.endpoint = x;
  tr.t_end = t;
  return tr;
}

std::string to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::vertex_c: return "vertex_C";
    case EquilibriumKind::vertex_d: return "vertex_D";
    case EquilibriumKind::vertex_t: return "vertex_T";
    case EquilibriumKind::edge_ct: return "edge_CT";
    case EquilibriumKind::interior: return "interior";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::marginal: return "marginal";
    case Verdict::not_applicable: return "n/a";
  }
  return "?";
}

Verdict classify_eigenvalues(const EigenPair& eig, double tol) {
  const double max_re = std::max(eig[0].real(), eig[1].real());
  if (std::abs(max_re) <= tol) return Verdict::marginal;
  return max_re < 0 ? Verdict::stable : Verdict::unstable;
}

SimplexState edge_point(const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double den = (tc - tt) * (1 - r);
  return {(tc - r - tt * (1 - r)) / den, (1 - tc) * r / den};
}

SimplexState interior_point(const GameParams& p) {
  const double tc = p.theta_c;
  return {p.theta_t * (1 - p.r) / (tc * tc), p.r / tc};
}

Mat2 edge_jacobian_closed_form(const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double den = (tc - tt) * (tc - tt) * (1 - r);
  const double a = tc - r - tt * (1 - r);
  return {{
      {(tc * tc - tt) * a * r / den, (tc - 2 * tt + tc * tt) * a * r / den},
      {-tt * (1 - tc) * (1 - tc) * r * r / den,
       (1 - tc) * (tc * r - 2 * tt * r + tt * tt * r - (tc - tt) * (tc - tt)) * r / den},
  }};
}

Mat2 interior_jacobian_closed_form(const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double q = 1 - r;
  return {{
      {tt * q * r * r / (tc * tc), tt * q * (tc * tc - tt + tt * r * r) / (tc * tc * tc)},
      {-(tc - r) * r * r / tc, -tt * q * (1 - tc + r) * r / (tc * tc)},
  }};
}

double interior_discriminant(const GameParams& p) {
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double tc2 = tc * tc;
  return tt * (1 - r) *
         (tt - tt * r + tt * tc2 + 4 * tc2 * r - 4 * tc2 * tc + 2 * tt * tc - 2 * tt * tc * r - tt * tc2 * r);
}

namespace {

bool strictly_inside(double v) { return v > kExistenceEps && v < 1.0 - kExistenceEps; }

EigenPair real_pair(double a, double b) { return {std::complex<double>(a, 0.0), std::complex<double>(b, 0.0)}; }

EquilibriumReport vertex(EquilibriumKind kind, SimplexState x, EigenPair eig) {
  return {kind, true, x, eig, classify_eigenvalues(eig)};
}

}  // namespace

std::vector<EquilibriumReport> equilibria(const GameParams& p) {
  p.validate();
  const double r = p.r, tc = p.theta_c, tt = p.theta_t;
  const double q = 1 - r;

  std::vector<EquilibriumReport> out;
  out.push_back(vertex(EquilibriumKind::vertex_c, {1.0, 0.0}, real_pair(r, (1 - tc) * r)));
  out.push_back(vertex(EquilibriumKind::vertex_d, {0.0, 0.0}, real_pair(-r, 0.0)));
  out.push_back(vertex(EquilibriumKind::vertex_t, {0.0, 1.0}, real_pair(tc - r - tt * q, -tt * q)));

  EquilibriumReport edge{EquilibriumKind::edge_ct, false, std::nullopt, std::nullopt, Verdict::not_applicable};
  if (std::abs(tc - tt) >= kEdgeSingularTol) {
    const SimplexState e = edge_point(p);
    if (strictly_inside(e.x_c) && strictly_inside(e.x_t)) {
      const double l1 = (tc * (tc - r) - tt * q) * r / ((tc - tt) * q);
      const double l2 = -(tc - tt) * q * e.x_c * e.x_t;
      edge.exists = true;
      edge.point = e;
      edge.eigenvalues = real_pair(l1, l2);
      edge.verdict = classify_eigenvalues(*edge.eigenvalues);
    }
  }
  out.push_back(edge);

  EquilibriumReport inner{EquilibriumKind::interior, false, std::nullopt, std::nullopt, Verdict::not_applicable};
  const SimplexState in = interior_point(p);
  if (strictly_inside(in.x_c) && strictly_inside(in.x_t) && strictly_inside(in.x_d())) {
    const double disc = interior_discriminant(p);
    const double scale = r / (2 * tc * tc);
    const double base = -tt * (1 - tc) * q;
    EigenPair eig;
    if (disc >= 0) {
      const double s = std::sqrt(disc);
      eig = real_pair((base + s) * scale, (base - s) * scale);
    } else {
      const double s = std::sqrt(-disc);
      eig = {std::complex<double>(base * scale, s * scale), std::complex<double>(base * scale, -s * scale)};
    }
    inner.exists = true;
    inner.point = in;
    inner.eigenvalues = eig;
    inner.verdict = classify_eigenvalues(eig);
  }
  out.push_back(inner);
  return out;
}

std::string to_string(PhaseLabel l) {
  switch (l) {
    case PhaseLabel::t_only: return "T";
    case PhaseLabel::c_t: return "C+T";
    case PhaseLabel::interior_stable: return "(C+D+T)**";
    case PhaseLabel::cyclic: return "C+D+T";
  }
  return "?";
}

Phase wm_phase(const GameParams& p) {
  p.validate();
  const double r = p.r, tc = p.theta_c;
  const double t_gain = p.theta_t * (1 - r);  // theta_T (1 - r)
  const double c_gain = tc - r;               // theta_C - r
  const double cc = tc * (tc - r);            // theta_C (theta_C - r)

  constexpr double tol = 1e-12;
  Phase ph{PhaseLabel::cyclic, false};
  ph.boundary = std::abs(t_gain - std::max(c_gain, 0.0)) <= tol || std::abs(cc - t_gain) <= tol ||
                std::abs(t_gain - c_gain) <= tol || std::abs(tc - 1.0) <= tol;

  if (t_gain > std::max(c_gain, 0.0))
    ph.label = PhaseLabel::t_only;
  else if (cc < t_gain && t_gain < c_gain)
    ph.label = PhaseLabel::c_t;
  else if (cc > t_gain && tc < 1.0)
    ph.label = PhaseLabel::interior_stable;
  return ph;
}

std::vector<PhaseMapPoint> phase_map(double r, int n_theta_t, int n_theta_c, double theta_t_max,
                                     double theta_c_max) {
  if (n_theta_t < 1 || n_theta_c < 1) throw DomainError("phase map grid must be at least 1x1");
  if (!(theta_t_max > 0) || !(theta_c_max > 0)) throw DomainError("phase map ranges must be positive");
  std::vector<PhaseMapPoint> out;
  out.reserve(static_cast<std::size_t>(n_theta_t) * n_theta_c);
  for (int j = 1; j <= n_theta_c; ++j) {
    for (int i = 1; i <= n_theta_t; ++i) {
      GameParams p;
      p.r = r;
      p.theta_t = theta_t_max * i / n_theta_t;
      p.theta_c = theta_c_max * j / n_theta_c;
      out.push_back({p.theta_t, p.theta_c, wm_phase(p)});
    }
  }
  return out;
}

void write_phase_map_csv(const std::vector<PhaseMapPoint>& map, std::ostream& out) {
  out << "theta_t,theta_c,phase,boundary_flag\n";
  for (const auto& pt : map)
    out << format_double(pt.theta_t) << ',' << format_double(pt.theta_c) << ',' << to_string(pt.phase.label) << ','
        << (pt.phase.boundary ? 1 : 0) << '\n';
}

void write_equilibria_csv(const std::vector<EquilibriumReport>& reports, std::ostream& out) {
  out << "kind,exists,x_c,x_d,x_t,re_l1,im_l1,re_l2,im_l2,verdict\n";
  for (const auto& e : reports) {
    out << to_string(e.kind) << ',' << (e.exists ? 1 : 0);
    if (e.point)
      out << ',' << format_double(e.point->x_c) << ',' << format_double(e.point->x_d()) << ','
          << format_double(e.point->x_t);
    else
      out << ",,,";
    if (e.eigenvalues) {
      for (const auto& l : *e.eigenvalues) out << ',' << format_double(l.real()) << ',' << format_double(l.imag());
    } else {
      out << ",,,,";
    }
    out << ',' << to_string(e.verdict) << '\n';
  }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,x_c,x_d,x_t\n";
  for (const auto& pt : traj.points)
    out << format_double(pt.t) << ',' << format_double(pt.x.x_c) << ',' << format_double(pt.x.x_d()) << ','
        << format_double(pt.x.x_t) << '\n';
}

}  // namespace btft::wm
