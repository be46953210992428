#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "btft/lattice.hpp"

namespace btft {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grey levels used for the image form of a snapshot.
constexpr int pgm_level(Strategy s) {
  switch (s) {
    case Strategy::C: return 85;
    case Strategy::D: return 0;
    case Strategy::T: return 170;
  }
  return 255;
}

// Rows of comma-separated strategy indices 1/2/3.
void write_grid_csv(const Lattice& lattice, std::ostream& out);
// Plain (P2) portable graymap, maxval 255.
void write_grid_pgm(const Lattice& lattice, std::ostream& out);

// Writes <stem>.csv and <stem>.pgm. Throws IoError.
void export_snapshot(const Lattice& lattice, const std::filesystem::path& stem);

// Parses the CSV grid form back into a lattice. The grid must be square.
Lattice read_grid_csv(std::istream& in);
Lattice read_grid_csv(const std::filesystem::path& path);

// `mcs,x_c,x_d,x_t`, one row per stored sample.
void write_timeseries_csv(const RunRecord& record, std::ostream& out);

// Shortest round-trip decimal form; identical bits always print identically.
std::string format_double(double v);

}  // namespace btft
