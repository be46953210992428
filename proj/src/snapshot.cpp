#include "btft/snapshot.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace btft {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

void write_grid_csv(const Lattice& lattice, std::ostream& out) {
  const int L = lattice.side();
  std::string line;
  line.reserve(static_cast<std::size_t>(2 * L));
  for (int y = 0; y < L; ++y) {
    line.clear();
    for (int x = 0; x < L; ++x) {
      if (x) line.push_back(',');
      line.push_back(static_cast<char>('0' + external_index(lattice.at(x, y))));
    }
    line.push_back('\n');
    out << line;
  }
}

void write_grid_pgm(const Lattice& lattice, std::ostream& out) {
  const int L = lattice.side();
  out << "P2\n" << L << ' ' << L << "\n255\n";
  for (int y = 0; y < L; ++y) {
    for (int x = 0; x < L; ++x) {
      if (x) out << ' ';
      out << pgm_level(lattice.at(x, y));
    }
    out << '\n';
  }
}

namespace {

template <class Writer>
void write_file(const std::filesystem::path& path, const Lattice& lattice, Writer writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  writer(lattice, f);
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace

void export_snapshot(const Lattice& lattice, const std::filesystem::path& stem) {
  auto csv = stem;
  csv += ".csv";
  auto pgm = stem;
  pgm += ".pgm";
  write_file(csv, lattice, write_grid_csv);
  write_file(pgm, lattice, write_grid_pgm);
}

Lattice read_grid_csv(std::istream& in) {
  std::vector<Strategy> cells;
  std::string line;
  std::size_t width = 0, rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t row_len = 0;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      auto s = strategy_from_external(v);
      if (ec != std::errc{} || p != tok.data() + tok.size() || !s)
        throw DomainError("invalid strategy index '" + tok + "' on grid row " + std::to_string(rows + 1));
      cells.push_back(*s);
      ++row_len;
    }
    if (rows == 0) width = row_len;
    if (row_len != width) throw DomainError("ragged grid: row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0 || rows != width)
    throw DomainError("grid must be square, got " + std::to_string(rows) + "x" + std::to_string(width));
  return Lattice(static_cast<int>(rows), std::move(cells));
}

Lattice read_grid_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open grid file " + path.string());
  return read_grid_csv(f);
}

void write_timeseries_csv(const RunRecord& record, std::ostream& out) {
  out << "mcs,x_c,x_d,x_t\n";
  for (const auto& s : record.series) {
    auto x = record.fractions(s);
    out << s.mcs << ',' << format_double(x[0]) << ',' << format_double(x[1]) << ',' << format_double(x[2]) << '\n';
  }
}

}  // namespace btft
