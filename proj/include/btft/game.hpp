#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace btft {

// Strategy indices follow the usual C=1, D=2, T=3 convention when printed;
// internally they are zero-based so they can index the payoff matrix.
enum class Strategy : std::uint8_t { C = 0, D = 1, T = 2 };

inline constexpr std::array<Strategy, 3> kAllStrategies{Strategy::C, Strategy::D, Strategy::T};

constexpr int index_of(Strategy s) { return static_cast<int>(s); }
constexpr int external_index(Strategy s) { return static_cast<int>(s) + 1; }
std::optional<Strategy> strategy_from_external(int idx);
char strategy_letter(Strategy s);

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GameParams {
  double r = 0.1;        // cost-to-benefit ratio, 0 < r < 1
  double theta_c = 1.0;  // T's donation coefficient toward C partners
  double theta_t = 1.0;  // T's donation coefficient toward T partners
  double noise_k = 0.1;  // selection noise of the Fermi rule

  // Throws DomainError naming the offending field.
  void validate() const;
};

class PayoffMatrix {
 public:
  using Row = std::array<double, 3>;

  PayoffMatrix() = default;
  explicit PayoffMatrix(std::array<Row, 3> m) : m_(m) {}

  double operator()(Strategy row, Strategy col) const { return m_[index_of(row)][index_of(col)]; }
  const Row& row(Strategy s) const { return m_[index_of(s)]; }
  const std::array<Row, 3>& data() const { return m_; }

 private:
  std::array<Row, 3> m_{};
};

// Biased donation game matrix, rows/cols ordered C, D, T:
//   C: 1-r,          -r,  theta_c - r
//   D: 1,             0,  0
//   T: 1-theta_c*r,   0,  theta_t*(1-r)
PayoffMatrix build_payoff_matrix(const GameParams& params);

inline double pairwise_payoff(const PayoffMatrix& m, Strategy si, Strategy sj) { return m(si, sj); }

// Probability that a player with payoff pi_i adopts the strategy of a player
// with payoff pi_j. Saturates cleanly for any payoff difference.
double fermi_probability(double pi_i, double pi_j, double noise_k);

}  // namespace btft
