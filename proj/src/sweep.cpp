#include "btft/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "btft/rng.hpp"
#include "btft/snapshot.hpp"

namespace btft {

PhaseLabel PhaseLabel::from_mask(std::uint8_t mask) {
  if (mask == 0 || mask > 7) throw DomainError("phase label must name at least one strategy");
  return PhaseLabel(mask);
}

std::optional<PhaseLabel> PhaseLabel::parse(const std::string& text) {
  std::uint8_t mask = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto plus = text.find('+', pos);
    const std::string tok = text.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos);
    if (tok == "C") mask |= 1;
    else if (tok == "D") mask |= 2;
    else if (tok == "T") mask |= 4;
    else return std::nullopt;
    if (plus == std::string::npos) break;
    pos = plus + 1;
  }
  return PhaseLabel(mask);
}

std::string PhaseLabel::str() const {
  std::string s;
  for (Strategy st : kAllStrategies) {
    if (!contains(st)) continue;
    if (!s.empty()) s.push_back('+');
    s.push_back(strategy_letter(st));
  }
  return s;
}

PhaseLabel classify_phase(const std::array<double, 3>& x, double eps) {
  for (double v : x)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("frequency outside [0,1]: " + std::to_string(v));
  const double sum = x[0] + x[1] + x[2];
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("frequencies sum to " + std::to_string(sum) + ", not 1");
  if (!(eps >= 0.0 && eps < 1.0 / 3.0)) throw DomainError("extinction eps must lie in [0, 1/3)");
  std::uint8_t mask = 0;
  for (int k = 0; k < 3; ++k)
    if (x[k] > eps) mask |= static_cast<std::uint8_t>(1U << k);
  return PhaseLabel::from_mask(mask);
}

std::string to_string(SweptParam p) {
  switch (p) {
    case SweptParam::r: return "r";
    case SweptParam::theta_c: return "theta_c";
    case SweptParam::theta_t: return "theta_t";
  }
  return "?";
}

std::optional<SweptParam> parse_swept_param(const std::string& name) {
  if (name == "r") return SweptParam::r;
  if (name == "theta_c" || name == "theta-c") return SweptParam::theta_c;
  if (name == "theta_t" || name == "theta-t") return SweptParam::theta_t;
  return std::nullopt;
}

std::vector<double> Axis::values() const {
  std::vector<double> v;
  if (!(step > 0.0) || max < min) return v;
  const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(min + static_cast<double>(i) * step);
  return v;
}

namespace {

void set_param(GameParams& p, SweptParam which, double value) {
  switch (which) {
    case SweptParam::r: p.r = value; break;
    case SweptParam::theta_c: p.theta_c = value; break;
    case SweptParam::theta_t: p.theta_t = value; break;
  }
}

}  // namespace

void SweepSpec::validate() const {
  if (axes.empty() || axes.size() > 2) throw DomainError("a sweep needs one or two axes");
  if (axes.size() == 2 && axes[0].param == axes[1].param) throw DomainError("sweep axes must differ");
  for (const auto& a : axes) {
    if (!(a.step > 0.0)) throw DomainError("axis " + to_string(a.param) + ": step must be positive");
    if (!(a.max >= a.min)) throw DomainError("axis " + to_string(a.param) + ": empty range");
  }
  if (replicates < 1) throw DomainError("replicates must be at least 1");
  if (workers < 1) throw DomainError("workers must be at least 1");
  if (!(extinction_eps >= 0.0 && extinction_eps < 1.0 / 3.0)) throw DomainError("eps must lie in [0, 1/3)");
  // Check the protocol once with a representative point; per-point domain
  // errors (e.g. an r axis reaching 1) are rejected here too.
  for (std::size_t i = 0; i < point_count(); ++i) params_at(i).validate();
  SimConfig probe = base;
  probe.params = params_at(0);
  probe.validate();
}

std::size_t SweepSpec::point_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values().size();
  return axes.empty() ? 0 : n;
}

GameParams SweepSpec::params_at(std::size_t index) const {
  GameParams p = base.params;
  std::size_t rest = index;
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto vals = axes[k].values();
    set_param(p, axes[k].param, vals.at(rest % vals.size()));
    rest /= vals.size();
  }
  return p;
}

SimConfig SweepSpec::config_at(std::size_t index, int replicate) const {
  SimConfig c = base;
  c.params = params_at(index);
  c.seed = derive_seed(base_seed, {static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(replicate)});
  c.snapshot_schedule.clear();
  c.snapshot_dir.clear();
  return c;
}

PhaseLabel majority_label(const std::vector<PhaseLabel>& labels, const std::array<double, 3>& mean, double eps) {
  if (labels.empty()) throw DomainError("no labels to vote on");
  std::array<int, 8> votes{};
  for (const auto& l : labels) ++votes[l.mask()];
  const int best = *std::max_element(votes.begin(), votes.end());
  const PhaseLabel of_mean = classify_phase(mean, eps);
  if (votes[of_mean.mask()] == best) return of_mean;
  for (std::uint8_t m = 1; m < 8; ++m)
    if (votes[m] == best) return PhaseLabel::from_mask(m);
  return of_mean;
}

SweepPoint aggregate_point(std::size_t index, const GameParams& params, std::vector<ReplicateResult> reps, double eps) {
  SweepPoint pt;
  pt.index = index;
  pt.params = params;
  pt.replicates = std::move(reps);
  std::vector<PhaseLabel> labels;
  for (const auto& r : pt.replicates) {
    if (!r.ok) continue;
    ++pt.ok_count;
    labels.push_back(r.label);
    for (int k = 0; k < 3; ++k) pt.mean[k] += r.stationary[k];
  }
  if (pt.ok_count == 0) return pt;
  for (auto& m : pt.mean) m /= pt.ok_count;
  // The mean of distributions is a distribution up to rounding.
  const double sum = pt.mean[0] + pt.mean[1] + pt.mean[2];
  for (auto& m : pt.mean) m /= sum;
  pt.phase = majority_label(labels, pt.mean, eps);
  return pt;
}

namespace {

ReplicateResult run_replicate(const SweepSpec& spec, std::size_t index, int replicate, const RunFunction& runner) {
  ReplicateResult res;
  const SimConfig cfg = spec.config_at(index, replicate);
  res.seed = cfg.seed;
  try {
    const RunRecord rec = runner(cfg);
    res.stationary = rec.stationary;
    res.label = classify_phase(rec.stationary, spec.extinction_eps);
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

}  // namespace

SweepPoint run_point(const SweepSpec& spec, std::size_t index, const RunFunction& runner) {
  std::vector<ReplicateResult> reps;
  for (int k = 0; k < spec.replicates; ++k) reps.push_back(run_replicate(spec, index, k, runner));
  return aggregate_point(index, spec.params_at(index), std::move(reps), spec.extinction_eps);
}

SweepResult run_sweep(const SweepSpec& spec, const RunFunction& runner,
                      const std::function<void(std::size_t, std::size_t)>& progress) {
  spec.validate();
  const std::size_t n_points = spec.point_count();
  const auto n_reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t n_tasks = n_points * n_reps;

  std::vector<ReplicateResult> slots(n_tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      slots[task] = run_replicate(spec, task / n_reps, static_cast<int>(task % n_reps), runner);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, n_tasks);
      }
    }
  };

  const auto n_workers = static_cast<std::size_t>(std::max(1, spec.workers));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, n_tasks); ++w) pool.emplace_back(worker);
  }

  SweepResult result;
  result.points.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    std::vector<ReplicateResult> reps(std::make_move_iterator(slots.begin() + static_cast<std::ptrdiff_t>(i * n_reps)),
                                      std::make_move_iterator(slots.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_reps)));
    result.points.push_back(aggregate_point(i, spec.params_at(i), std::move(reps), spec.extinction_eps));
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "theta_t,theta_c,r,x_c,x_d,x_t,phase,replicates\n";
  for (const auto& pt : result.points) {
    out << format_double(pt.params.theta_t) << ',' << format_double(pt.params.theta_c) << ','
        << format_double(pt.params.r) << ',';
    if (pt.missing()) {
      out << ",,,missing,0\n";
      continue;
    }
    out << format_double(pt.mean[0]) << ',' << format_double(pt.mean[1]) << ',' << format_double(pt.mean[2]) << ','
        << pt.phase.str() << ',' << pt.ok_count << '\n';
  }
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DomainError(key + ": not a number: '" + v + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw DomainError(key + ": not an integer: '" + v + "'");
  return out;
}

}  // namespace

void apply_sweep_keys(const KeyValues& kv, SweepSpec& spec) {
  std::array<std::optional<Axis>, 2> axes;
  for (std::size_t k = 0; k < spec.axes.size() && k < 2; ++k) axes[k] = spec.axes[k];

  for (const auto& [key, value] : kv) {
    if (key.rfind("axis", 0) == 0 && key.size() > 6 && (key[4] == '1' || key[4] == '2') && key[5] == '_') {
      auto& axis = axes[key[4] - '1'];
      if (!axis) axis = Axis{};
      const std::string field = key.substr(6);
      if (field == "param") {
        auto p = parse_swept_param(value);
        if (!p) throw DomainError(key + ": unknown parameter '" + value + "'");
        axis->param = *p;
      } else if (field == "min") axis->min = to_double(key, value);
      else if (field == "max") axis->max = to_double(key, value);
      else if (field == "step") axis->step = to_double(key, value);
      else throw DomainError("unknown key '" + key + "'");
    } else if (key == "r") spec.base.params.r = to_double(key, value);
    else if (key == "theta_c") spec.base.params.theta_c = to_double(key, value);
    else if (key == "theta_t") spec.base.params.theta_t = to_double(key, value);
    else if (key == "k") spec.base.params.noise_k = to_double(key, value);
    else if (key == "l") spec.base.side_l = static_cast<int>(to_int(key, value));
    else if (key == "mcs") spec.base.mcs_total = to_int(key, value);
    else if (key == "window") spec.base.stationary_window = to_int(key, value);
    else if (key == "init") {
      if (value == "uniform3") spec.base.init = InitialCondition::uniform3();
      else if (value == "cd") spec.base.init = InitialCondition::uniform_cd();
      else throw DomainError("init: sweeps accept uniform3 or cd, got '" + value + "'");
    } else if (key == "replicates") spec.replicates = static_cast<int>(to_int(key, value));
    else if (key == "base_seed" || key == "seed") spec.base_seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "eps") spec.extinction_eps = to_double(key, value);
    else if (key == "workers") spec.workers = static_cast<int>(to_int(key, value));
    else throw DomainError("unknown key '" + key + "'");
  }

  spec.axes.clear();
  for (auto& a : axes)
    if (a) spec.axes.push_back(*a);
}

SweepSpec load_sweep_spec(std::istream& in) {
  SweepSpec spec;
  apply_sweep_keys(parse_key_values(in), spec);
  return spec;
}

}  // namespace btft
