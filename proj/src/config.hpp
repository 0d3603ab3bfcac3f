#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "characterize.hpp"
#include "engine.hpp"

namespace spdsim {

struct SweepGrid {
  std::vector<double> v_ex;
  std::vector<double> temperature;
  std::optional<double> duration_s;  // falls back to the top-level duration
};

struct Config {
  SimConfig sim;
  CharacterizeParams cal;
  std::optional<SweepGrid> sweep;
};

// key = value lines, '#' comments, blank lines ignored. Unknown keys and
// malformed values raise ConfigError naming the key and line.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

// Single-key access by the same names the file format uses.
void set_key(Config& cfg, const std::string& key, const std::string& value);
std::string get_key(const Config& cfg, const std::string& key);

// Full dump in canonical key order, one "key = value" per line. Parses back
// to an identical configuration.
std::string echo_config(const Config& cfg);

// Cross-field checks beyond what the engine validates.
void validate(const Config& cfg);

}  // namespace spdsim
