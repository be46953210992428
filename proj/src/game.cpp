#include "btft/game.hpp"

#include <algorithm>
#include <cmath>

namespace btft {

std::optional<Strategy> strategy_from_external(int idx) {
  if (idx < 1 || idx > 3) return std::nullopt;
  return static_cast<Strategy>(idx - 1);
}

char strategy_letter(Strategy s) {
  switch (s) {
    case Strategy::C: return 'C';
    case Strategy::D: return 'D';
    case Strategy::T: return 'T';
  }
  return '?';
}

void GameParams::validate() const {
  // Written as negated comparisons so NaN is rejected too.
  if (!(r > 0.0 && r < 1.0)) throw DomainError("r must lie in (0,1), got " + std::to_string(r));
  if (!(theta_c > 0.0) || !std::isfinite(theta_c))
    throw DomainError("theta_c must be positive, got " + std::to_string(theta_c));
  if (!(theta_t > 0.0) || !std::isfinite(theta_t))
    throw DomainError("theta_t must be positive, got " + std::to_string(theta_t));
  if (!(noise_k > 0.0) || !std::isfinite(noise_k))
    throw DomainError("noise K must be positive, got " + std::to_string(noise_k));
}

PayoffMatrix build_payoff_matrix(const GameParams& p) {
  p.validate();
  const double r = p.r;
  return PayoffMatrix({{
      {1.0 - r, -r, p.theta_c - r},
      {1.0, 0.0, 0.0},
      {1.0 - p.theta_c * r, 0.0, p.theta_t * (1.0 - r)},
  }});
}

double fermi_probability(double pi_i, double pi_j, double noise_k) {
  constexpr double kMaxExponent = 500.0;
  const double arg = std::clamp(-(pi_j - pi_i) / noise_k, -kMaxExponent, kMaxExponent);
  return 1.0 / (1.0 + std::exp(arg));
}

}  // namespace btft
