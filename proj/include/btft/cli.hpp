#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace btft::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Preset {
  std::string name;
  std::string subcommand;
  std::string description;
  std::map<std::string, std::string> settings;  // same keys as the sweep spec file
};

const std::vector<Preset>& presets();
std::optional<Preset> find_preset(const std::string& name);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace btft::cli
