#include "btft/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "btft/lattice.hpp"
#include "btft/snapshot.hpp"
#include "btft/sweep.hpp"
#include "btft/wellmixed.hpp"

#ifndef BTFT_VERSION
#define BTFT_VERSION "0.0.0"
#endif

namespace btft::cli {

namespace fs = std::filesystem;
using Settings = std::map<std::string, std::string>;

const std::vector<Preset>& presets() {
  // Desk-scale versions of the published parameter sets. Sweeps use L = 100
  // and single runs L = 200 instead of the L = 600 production lattices.
  static const std::vector<Preset> all = [] {
    const Settings theta_t_axis{{"axis1_param", "theta_t"}, {"axis1_min", "0.05"}, {"axis1_max", "1.5"},
                                {"axis1_step", "0.05"}};
    const Settings theta_c_axis{{"axis1_param", "theta_c"}, {"axis1_min", "0.1"}, {"axis1_max", "2.5"},
                                {"axis1_step", "0.1"}};
    auto plane = [](const std::string& r) {
      return Settings{{"r", r},
                      {"axis1_param", "theta_c"},
                      {"axis1_min", "0.1"},
                      {"axis1_max", "2.5"},
                      {"axis1_step", "0.1"},
                      {"axis2_param", "theta_t"},
                      {"axis2_min", "0.05"},
                      {"axis2_max", "1.5"},
                      {"axis2_step", "0.05"},
                      {"l", "100"}};
    };
    auto merge = [](Settings a, const Settings& b) {
      a.insert(b.begin(), b.end());
      return a;
    };
    std::vector<Preset> v;
    v.push_back({"fig2a", "sweep", "two-strategy donation game: x_C versus r (C/D start)",
                 {{"init", "cd"}, {"theta_c", "1"}, {"theta_t", "1"}, {"axis1_param", "r"}, {"axis1_min", "0.005"},
                  {"axis1_max", "0.1"}, {"axis1_step", "0.005"}, {"l", "100"}}});
    v.push_back({"fig2b", "sweep", "theta_T-theta_C plane at r = 0.01", plane("0.01")});
    v.push_back({"fig2c1", "sweep", "theta_T-theta_C plane at r = 0.1", plane("0.1")});
    v.push_back({"fig2c2", "sweep", "theta_T-theta_C plane at r = 0.2", plane("0.2")});
    v.push_back({"fig3a", "simulate", "coexistence by cyclic dominance (theta_T = 1)",
                 {{"r", "0.1"}, {"theta_c", "1.5"}, {"theta_t", "1"}, {"l", "200"}, {"mcs", "15000"},
                  {"window", "5000"}, {"snapshots", "0,100,1000,15000"}}});
    v.push_back({"fig3b", "simulate", "hidden T phase (theta_T = 0.1), extended protocol",
                 {{"r", "0.1"}, {"theta_c", "1.5"}, {"theta_t", "0.1"}, {"l", "200"}, {"mcs", "30000"},
                  {"window", "15000"}, {"snapshots", "0,50,200,500,1000,30000"}}});
    v.push_back({"fig4a", "sweep", "x versus theta_C at theta_T = 0.1, r = 0.1",
                 merge({{"r", "0.1"}, {"theta_t", "0.1"}, {"l", "100"}}, theta_c_axis)});
    v.push_back({"fig4b", "sweep", "x versus theta_C at theta_T = 1, r = 0.1",
                 merge({{"r", "0.1"}, {"theta_t", "1"}, {"l", "100"}}, theta_c_axis)});
    v.push_back({"fig4c", "sweep", "x versus theta_T at theta_C = 1, r = 0.1",
                 merge({{"r", "0.1"}, {"theta_c", "1"}, {"l", "100"}}, theta_t_axis)});
    v.push_back({"fig4d", "sweep", "x versus theta_T at theta_C = 2, r = 0.1",
                 merge({{"r", "0.1"}, {"theta_c", "2"}, {"l", "100"}}, theta_t_axis)});
    v.push_back({"fig5", "wm-phases", "well-mixed phase map at r = 0.1", {{"r", "0.1"}, {"grid", "300x300"}}});
    return v;
  }();
  return all;
}

std::optional<Preset> find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  return std::nullopt;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string flag_of(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

double get_double(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw UsageError(flag_of(key) + ": not a number: '" + v + "'");
  return out;
}

std::int64_t get_int(const Settings& s, const std::string& key) {
  const std::string& v = s.at(key);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw UsageError(flag_of(key) + ": not an integer: '" + v + "'");
  return out;
}

GameParams game_params(const Settings& s) {
  GameParams p;
  p.r = get_double(s, "r");
  p.theta_c = get_double(s, "theta_c");
  p.theta_t = get_double(s, "theta_t");
  p.noise_k = get_double(s, "k");
  if (!(p.r > 0 && p.r < 1)) throw UsageError("--r must lie in (0,1), got " + s.at("r"));
  if (!(p.theta_c > 0)) throw UsageError("--theta-c must be positive, got " + s.at("theta_c"));
  if (!(p.theta_t > 0)) throw UsageError("--theta-t must be positive, got " + s.at("theta_t"));
  if (!(p.noise_k > 0)) throw UsageError("--k must be positive, got " + s.at("k"));
  return p;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

// Accepts "0.25" or "1/3".
double parse_fraction(const std::string& text, const std::string& flag) {
  const auto slash = text.find('/');
  Settings tmp{{"x", text.substr(0, slash)}};
  try {
    double v = get_double(tmp, "x");
    if (slash != std::string::npos) {
      tmp["x"] = text.substr(slash + 1);
      v /= get_double(tmp, "x");
    }
    return v;
  } catch (const UsageError&) {
    throw UsageError(flag + ": cannot parse '" + text + "'");
  }
}

fs::path prepare_out_dir(const Settings& s) {
  fs::path dir = s.at("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed: " + path.string());
}

void write_metadata(const fs::path& dir, const std::string& subcommand, const Settings& s,
                    const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["tool"] = "btft";
  j["version"] = BTFT_VERSION;
  j["subcommand"] = subcommand;
  j["settings"] = s;
  if (s.count("seed")) j["seed"] = std::stoull(s.at("seed"));
  j["outputs"] = outputs;
  write_text(dir / "metadata.json", j.dump(2) + "\n");
}

int cmd_simulate(Settings s, std::ostream& out, std::ostream& err) {
  SimConfig cfg;
  cfg.params = game_params(s);
  cfg.mcs_total = get_int(s, "mcs");
  cfg.stationary_window = get_int(s, "window");
  cfg.seed = static_cast<std::uint64_t>(get_int(s, "seed"));
  cfg.record_every = get_int(s, "record_every");
  cfg.side_l = static_cast<int>(get_int(s, "l"));

  const std::string& init = s.at("init");
  if (init == "uniform3") {
    cfg.init = InitialCondition::uniform3();
  } else if (init == "cd") {
    cfg.init = InitialCondition::uniform_cd();
  } else if (init.rfind("file:", 0) == 0) {
    Lattice grid = [&] {
      try {
        return read_grid_csv(fs::path(init.substr(5)));
      } catch (const DomainError& e) {
        throw UsageError(std::string("--init: ") + e.what());
      }
    }();
    if (s.count("l_given") && grid.side() != cfg.side_l)
      throw UsageError("--l " + std::to_string(cfg.side_l) + " does not match grid side " + std::to_string(grid.side()));
    cfg.side_l = grid.side();
    s["l"] = std::to_string(grid.side());
    cfg.init = InitialCondition::from_lattice(grid);
  } else {
    throw UsageError("--init must be uniform3, cd or file:PATH, got '" + init + "'");
  }

  for (const auto& t : split(s.at("snapshots"), ',')) {
    if (t.empty()) continue;
    Settings tmp{{"snapshots", t}};
    cfg.snapshot_schedule.push_back(get_int(tmp, "snapshots"));
  }

  if (cfg.side_l < 4) throw UsageError("--l must be at least 4");
  if (cfg.stationary_window < 1) throw UsageError("--window must be at least 1");
  if (cfg.mcs_total < cfg.stationary_window) throw UsageError("--mcs must be at least --window");
  if (cfg.record_every < 1) throw UsageError("--record-every must be at least 1");
  for (auto t : cfg.snapshot_schedule)
    if (t < 0) throw UsageError("--snapshots: times must be non-negative");

  s.erase("l_given");
  const fs::path dir = prepare_out_dir(s);
  cfg.snapshot_dir = dir;
  const RunRecord rec = btft::run(cfg);

  std::ostringstream ts;
  write_timeseries_csv(rec, ts);
  write_text(dir / "timeseries.csv", ts.str());

  std::vector<std::string> outputs{"timeseries.csv"};
  for (auto t : cfg.snapshot_schedule)
    if (t <= cfg.mcs_total) outputs.push_back("snapshot_mcs" + std::to_string(t) + ".{csv,pgm}");
  write_metadata(dir, "simulate", s, outputs);

  out << "stationary x_c=" << format_double(rec.stationary[0]) << " x_d=" << format_double(rec.stationary[1])
      << " x_t=" << format_double(rec.stationary[2]) << '\n';
  if (rec.absorbed())
    out << "absorbed by " << strategy_letter(rec.absorbing_strategy) << " at MCS " << rec.end_mcs << '\n';
  else
    out << "completed " << rec.end_mcs << " MCS\n";

  for (const auto& e : rec.snapshot_errors) err << "snapshot error: " << e << '\n';
  return rec.snapshot_errors.empty() ? kExitOk : kExitRuntime;
}

int cmd_sweep(Settings s, std::ostream& out, std::ostream& err) {
  game_params(s);
  SweepSpec spec;
  Settings keys;
  for (const auto& [k, v] : s)
    if (k != "out" && k != "preset" && k != "spec") keys[k] = v;
  try {
    apply_sweep_keys(keys, spec);
    if (spec.axes.empty()) throw UsageError("sweep needs --axis1 (name:min:max:step), a preset or a spec file");
    spec.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = prepare_out_dir(s);
  const SweepResult result = run_sweep(spec, btft::run, [&err](std::size_t done, std::size_t total) {
    if (done == total || done % 10 == 0) err << "\rsweep: " << done << "/" << total << std::flush;
  });
  err << '\n';

  std::ostringstream csv;
  write_sweep_csv(result, csv);
  write_text(dir / "sweep.csv", csv.str());
  write_metadata(dir, "sweep", s, {"sweep.csv"});

  std::size_t missing = 0;
  for (const auto& pt : result.points) missing += pt.missing() ? 1 : 0;
  out << result.points.size() << " points written to " << (dir / "sweep.csv").string() << '\n';
  if (missing) err << missing << " points missing (all replicates failed)\n";
  return kExitOk;
}

int cmd_replicator(Settings s, std::ostream& out, std::ostream&) {
  const GameParams p = game_params(s);
  const auto parts = split(s.at("x0"), ',');
  if (parts.size() != 3) throw UsageError("--x0 needs three comma-separated fractions x_c,x_d,x_t");
  const double xc = parse_fraction(parts[0], "--x0");
  const double xd = parse_fraction(parts[1], "--x0");
  const double xt = parse_fraction(parts[2], "--x0");
  if (std::min({xc, xd, xt}) < 0 || std::abs(xc + xd + xt - 1.0) > 1e-9)
    throw UsageError("--x0 must be a point of the simplex (non-negative, summing to 1)");

  wm::IntegrateOptions opts;
  opts.t_max = get_double(s, "tmax");
  opts.dt = get_double(s, "dt");
  opts.record_every = get_int(s, "record_every");
  if (!(opts.dt > 0)) throw UsageError("--dt must be positive");
  if (!(opts.t_max >= 0)) throw UsageError("--tmax must be non-negative");
  if (opts.record_every < 0) throw UsageError("--record-every must be non-negative");

  const fs::path dir = prepare_out_dir(s);
  const wm::Trajectory tr = wm::integrate({xc, xt}, p, opts);
  std::ostringstream csv;
  wm::write_trajectory_csv(tr, csv);
  write_text(dir / "trajectory.csv", csv.str());
  write_metadata(dir, "replicator", s, {"trajectory.csv"});

  out << "endpoint x_c=" << format_double(tr.endpoint.x_c) << " x_d=" << format_double(tr.endpoint.x_d())
      << " x_t=" << format_double(tr.endpoint.x_t) << " t=" << format_double(tr.t_end)
      << (tr.converged ? " converged" : " not converged") << '\n';
  out << "predicted phase: " << wm::to_string(wm::wm_phase(p).label) << '\n';
  return kExitOk;
}

int cmd_wm_phases(Settings s, std::ostream& out, std::ostream&) {
  const GameParams p = game_params(s);
  const auto dims = split(s.at("grid"), 'x');
  if (dims.size() != 2) throw UsageError("--grid must look like 300x300");
  Settings tmp{{"grid", dims[0]}};
  const auto nt = get_int(tmp, "grid");
  tmp["grid"] = dims[1];
  const auto nc = get_int(tmp, "grid");
  if (nt < 1 || nc < 1) throw UsageError("--grid dimensions must be positive");
  const double tmax = get_double(s, "theta_t_max");
  const double cmax = get_double(s, "theta_c_max");
  if (!(tmax > 0)) throw UsageError("--theta-t-max must be positive");
  if (!(cmax > 0)) throw UsageError("--theta-c-max must be positive");

  const fs::path dir = prepare_out_dir(s);
  const auto map = wm::phase_map(p.r, static_cast<int>(nt), static_cast<int>(nc), tmax, cmax);
  std::ostringstream csv;
  wm::write_phase_map_csv(map, csv);
  write_text(dir / "phase_map.csv", csv.str());
  write_metadata(dir, "wm-phases", s, {"phase_map.csv"});

  std::map<std::string, std::size_t> tally;
  for (const auto& pt : map) ++tally[wm::to_string(pt.phase.label)];
  for (const auto& [label, n] : tally) out << label << ": " << n << '\n';
  return kExitOk;
}

int cmd_equilibria(Settings s, std::ostream& out, std::ostream&) {
  const GameParams p = game_params(s);
  const fs::path dir = prepare_out_dir(s);
  std::ostringstream csv;
  wm::write_equilibria_csv(wm::equilibria(p), csv);
  write_text(dir / "equilibria.csv", csv.str());
  write_metadata(dir, "equilibria", s, {"equilibria.csv"});
  out << csv.str();
  out << "phase: " << wm::to_string(wm::wm_phase(p).label) << '\n';
  return kExitOk;
}

struct Command {
  std::string name;
  std::string help;
  Settings defaults;
  int (*handler)(Settings, std::ostream&, std::ostream&);
};

std::vector<Command> commands() {
  const Settings common{{"r", "0.1"}, {"theta_c", "1.5"}, {"theta_t", "1"}, {"k", "0.1"}, {"out", "out"}};
  auto with = [&](Settings extra) {
    extra.insert(common.begin(), common.end());
    return extra;
  };
  const std::string workers = std::to_string(std::max(1U, std::thread::hardware_concurrency()));
  return {
      {"simulate", "single lattice run: time series, snapshots",
       with({{"l", "200"}, {"mcs", "15000"}, {"window", "5000"}, {"seed", "1"}, {"init", "uniform3"},
             {"snapshots", ""}, {"record_every", "1"}}),
       cmd_simulate},
      {"sweep", "grid of lattice runs over one or two parameters",
       with({{"l", "100"}, {"mcs", "15000"}, {"window", "5000"}, {"seed", "1"}, {"init", "uniform3"},
             {"workers", workers}, {"replicates", "5"}, {"eps", "0.001"}}),
       cmd_sweep},
      {"replicator", "integrate the well-mixed replicator equation",
       with({{"x0", "1/3,1/3,1/3"}, {"tmax", "10000"}, {"dt", "0.01"}, {"record_every", "100"}}), cmd_replicator},
      {"wm-phases", "well-mixed phase map over the theta_T-theta_C plane",
       with({{"grid", "300x300"}, {"theta_t_max", "1.5"}, {"theta_c_max", "2.5"}}), cmd_wm_phases},
      {"equilibria", "well-mixed equilibria, eigenvalues and stability", with({}), cmd_equilibria},
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biased Tit-for-Tat donation game: lattice simulator and well-mixed analyzer", "btft"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BTFT_VERSION);

  const auto cmds = commands();
  std::map<std::string, Settings> storage;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> axis_flags, spec_files;
  std::map<std::string, CLI::App*> subs;

  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    subs[c.name] = sub;
    auto& st = storage[c.name];
    for (const auto& [key, def] : c.defaults) {
      st[key] = def;
      options[c.name][key] = sub->add_option(flag_of(key), st[key], "default: " + (def.empty() ? "none" : def));
    }
    st["preset"] = "";
    options[c.name]["preset"] = sub->add_option("--preset", st["preset"], "named parameter set (see --list-presets)");
    if (c.name == "sweep") {
      sub->add_option("--axis1", axis_flags["axis1"], "swept parameter name:min:max:step");
      sub->add_option("--axis2", axis_flags["axis2"], "second swept parameter name:min:max:step");
      sub->add_option("--spec", spec_files["sweep"], "key=value sweep spec file");
    }
  }
  bool list = false;
  app.add_flag("--list-presets", list, "print the available presets");
  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << BTFT_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    app.exit(e, msg, msg);
    err << msg.str();
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  if (list) {
    for (const auto& p : presets()) out << p.name << " (" << p.subcommand << "): " << p.description << '\n';
    return kExitOk;
  }
  const Command* chosen = nullptr;
  for (const auto& c : cmds)
    if (subs[c.name]->parsed()) chosen = &c;
  if (!chosen) {
    err << "a subcommand is required\n" << app.help();
    return kExitUsage;
  }

  try {
    // defaults < preset < spec file < explicit flags
    Settings resolved = chosen->defaults;
    const std::string preset_name = storage[chosen->name]["preset"];
    if (!preset_name.empty()) {
      auto preset = find_preset(preset_name);
      if (!preset) throw UsageError("--preset: unknown preset '" + preset_name + "'");
      if (preset->subcommand != chosen->name)
        throw UsageError("--preset " + preset_name + " belongs to the '" + preset->subcommand + "' subcommand");
      for (const auto& [k, v] : preset->settings) resolved[k] = v;
      resolved["preset"] = preset_name;
    }
    if (chosen->name == "sweep" && !spec_files["sweep"].empty()) {
      std::ifstream f(spec_files["sweep"]);
      if (!f) throw UsageError("--spec: cannot open " + spec_files["sweep"]);
      try {
        for (const auto& [k, v] : parse_key_values(f)) resolved[k == "base_seed" ? "seed" : k] = v;
      } catch (const DomainError& e) {
        throw UsageError(std::string("--spec: ") + e.what());
      }
      resolved["spec"] = spec_files["sweep"];
    }
    for (const auto& [key, opt] : options[chosen->name]) {
      if (key == "preset" || opt->count() == 0) continue;
      resolved[key] = storage[chosen->name][key];
      if (key == "l") resolved["l_given"] = "1";
    }
    if (chosen->name == "sweep") {
      for (const auto& [axis, text] : axis_flags) {
        if (text.empty()) continue;
        const auto parts = split(text, ':');
        if (parts.size() != 4) throw UsageError("--" + axis + " must look like name:min:max:step");
        resolved[axis + "_param"] = parts[0];
        resolved[axis + "_min"] = parts[1];
        resolved[axis + "_max"] = parts[2];
        resolved[axis + "_step"] = parts[3];
      }
    }
    if (chosen->name != "simulate") resolved.erase("l_given");
    return chosen->handler(resolved, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace btft::cli
