// config.hpp: run configuration, its line-oriented text form and the named parameter presets.
//
// Grammar: one `key = value` per line, `#` starts a comment, blank lines are
// ignored. Keys (angles in degrees):
//
//   preset            fig2a..fig2d, fig3a, fig3b, fig4a..fig4c (applied where it appears)
//   delta omega gamma eta eta_max beta theta psi nmax
//   drive.kind        traveling | standing
//   drive.phi         standing-wave phase at the trap centre
//   grid.min grid.max grid.points
//   mode              perturbative | oracle | both
//   sidebands         resolved | single
//   output            output path of the spectrum table
//   emit_lines emit_plot_script   true | false

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ionfluor/errors.hpp"
#include "ionfluor/model.hpp"

namespace ionfluor {

enum class RunMode { Perturbative, Oracle, Both };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Perturbative: return "perturbative";
    case RunMode::Oracle: return "oracle";
    case RunMode::Both: return "both";
  }
  return "perturbative";
}

inline std::optional<RunMode> parse_mode(std::string_view s) {
  if (s == "perturbative") return RunMode::Perturbative;
  if (s == "oracle") return RunMode::Oracle;
  if (s == "both") return RunMode::Both;
  return std::nullopt;
}

struct GridSpec {
  double min = -4.0;
  double max = 4.0;
  int points = 2001;
  bool operator==(const GridSpec&) const = default;
};

struct RunConfig {
  PhysParams params;
  GridSpec grid;
  RunMode mode = RunMode::Perturbative;
  std::optional<std::string> preset;
  std::string output = "spectrum.dat";
  bool emit_lines = false;
  bool emit_plot_script = false;
  bool resolved_sidebands = true;

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    params.validate();
    if (!(grid.min < grid.max)) throw InvalidParameter("grid.min must be < grid.max");
    if (grid.points < 2) throw InvalidParameter("grid.points must be >= 2");
    if (output.empty()) throw InvalidParameter("output path must not be empty");
  }
};

struct Preset {
  std::string_view name;
  double gamma;
  double eta;
  double psi_deg;
  bool standing;
  double phi_deg;
};

inline constexpr std::array<Preset, 9> kPresets{{
    {"fig2a", 0.33, 0.1, 40.0, false, 0.0},
    {"fig2b", 0.33, 0.1, 200.0, false, 0.0},
    {"fig2c", 0.1, 0.1, 40.0, false, 0.0},
    {"fig2d", 0.1, 0.1, 200.0, false, 0.0},
    {"fig3a", 0.1, 0.1, 40.0, true, 45.0},
    {"fig3b", 0.1, 0.1, 200.0, true, 45.0},
    {"fig4a", 0.1, 0.05, 200.0, true, 45.0},
    {"fig4b", 0.1, 0.05, 200.0, true, 67.5},
    {"fig4c", 0.1, 0.05, 200.0, true, 90.0},
}};

// Physics parameters of a preset on top of the documented defaults.
inline PhysParams preset_params(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name != name) continue;
    PhysParams out;
    out.gamma = p.gamma;
    out.eta = p.eta;
    out.psi = deg_to_rad(p.psi_deg);
    out.drive = p.standing ? Drive::standing(deg_to_rad(p.phi_deg)) : Drive::traveling();
    return out;
  }
  throw InvalidParameter("unknown preset '" + std::string(name) + "'");
}

inline RunConfig preset_config(std::string_view name) {
  RunConfig c;
  c.params = preset_params(name);
  c.preset = std::string(name);
  return c;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(int line, std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(line, "'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

inline int parse_int(int line, std::string_view key, std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(line, "'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(int line, std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(line, "'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

// Shortest decimal that reads back to exactly x.
inline std::string format_shortest(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Shortest decimal degree value d with deg_to_rad(d) == rad, so that angles
// written in degrees read back bit-identical.
inline std::string format_angle(double rad) {
  const double deg = rad_to_deg(rad);
  char buf[64];
  for (int prec = 0; prec <= 17; ++prec) {
    const auto r = std::to_chars(buf, buf + sizeof buf, deg, std::chars_format::fixed, prec);
    double back = 0.0;
    std::from_chars(buf, r.ptr, back);
    if (deg_to_rad(back) == rad) return std::string(buf, r.ptr);
  }
  for (int prec = 1; prec <= 17; ++prec) {
    const auto r = std::to_chars(buf, buf + sizeof buf, deg, std::chars_format::general, prec);
    double back = 0.0;
    std::from_chars(buf, r.ptr, back);
    if (deg_to_rad(back) == rad) return std::string(buf, r.ptr);
  }
  return format_shortest(deg);
}

struct FieldIssue {
  std::vector<std::string> keys;  // keys to blame, most specific first
  std::string message;
};

inline std::optional<FieldIssue> first_issue(const RunConfig& c) {
  const PhysParams& p = c.params;
  if (!(p.gamma > 0.0)) return FieldIssue{{"gamma"}, "gamma must be > 0"};
  if (!(p.omega >= 0.0)) return FieldIssue{{"omega"}, "omega must be >= 0"};
  if (!(p.eta > 0.0 && p.eta < p.eta_max))
    return FieldIssue{{"eta", "eta_max", "preset"},
                      "eta = " + format_shortest(p.eta) + " violates the Lamb-Dicke guard 0 < eta < " +
                          format_shortest(p.eta_max)};
  if (!(p.beta > 0.0 && p.beta <= 1.0)) return FieldIssue{{"beta"}, "beta must lie in (0, 1]"};
  if (p.nmax < 4) return FieldIssue{{"nmax"}, "nmax must be >= 4"};
  if (!(c.grid.min < c.grid.max))
    return FieldIssue{{"grid.max", "grid.min"}, "grid.min must be < grid.max"};
  if (c.grid.points < 2) return FieldIssue{{"grid.points"}, "grid.points must be >= 2"};
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    return FieldIssue{{}, e.what()};
  }
  return std::nullopt;
}

}  // namespace detail

// Parses the line-oriented config text; every diagnostic names its line.
inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::map<std::string, int> set_on;  // key -> line that last set it
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (val.empty()) throw ConfigError(line_no, "missing value for '" + std::string(key) + "'");
    auto num = [&] { return detail::parse_double(line_no, key, val); };
    PhysParams& p = c.params;

    if (key == "preset") {
      try {
        const RunConfig base = preset_config(val);
        c.params = base.params;
        c.preset = base.preset;
        for (const char* k : {"gamma", "eta", "psi", "drive.kind", "drive.phi"}) set_on[k] = line_no;
      } catch (const InvalidParameter& e) {
        throw ConfigError(line_no, e.what());
      }
    } else if (key == "delta") {
      p.delta = num();
    } else if (key == "omega") {
      p.omega = num();
    } else if (key == "gamma") {
      p.gamma = num();
    } else if (key == "eta") {
      p.eta = num();
    } else if (key == "eta_max") {
      p.eta_max = num();
    } else if (key == "beta") {
      p.beta = num();
    } else if (key == "theta") {
      p.theta = deg_to_rad(num());
    } else if (key == "psi") {
      p.psi = deg_to_rad(num());
    } else if (key == "nmax") {
      p.nmax = detail::parse_int(line_no, key, val);
    } else if (key == "drive.kind") {
      if (val == "traveling") {
        p.drive.kind = DriveKind::TravelingWave;
      } else if (val == "standing") {
        p.drive.kind = DriveKind::StandingWave;
      } else {
        throw ConfigError(line_no, "drive.kind must be traveling or standing, got '" + std::string(val) + "'");
      }
    } else if (key == "drive.phi") {
      p.drive.phi = deg_to_rad(num());
    } else if (key == "grid.min") {
      c.grid.min = num();
    } else if (key == "grid.max") {
      c.grid.max = num();
    } else if (key == "grid.points") {
      c.grid.points = detail::parse_int(line_no, key, val);
    } else if (key == "mode") {
      const auto m = parse_mode(val);
      if (!m) throw ConfigError(line_no, "mode must be perturbative, oracle or both, got '" + std::string(val) + "'");
      c.mode = *m;
    } else if (key == "sidebands") {
      if (val == "resolved") {
        c.resolved_sidebands = true;
      } else if (val == "single") {
        c.resolved_sidebands = false;
      } else {
        throw ConfigError(line_no, "sidebands must be resolved or single, got '" + std::string(val) + "'");
      }
    } else if (key == "output") {
      c.output = std::string(val);
    } else if (key == "emit_lines") {
      c.emit_lines = detail::parse_bool(line_no, key, val);
    } else if (key == "emit_plot_script") {
      c.emit_plot_script = detail::parse_bool(line_no, key, val);
    } else {
      throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    }

    set_on[std::string(key)] = line_no;
  }
  if (const auto issue = detail::first_issue(c)) {
    int at = line_no;
    for (const auto& k : issue->keys)
      if (const auto it = set_on.find(k); it != set_on.end()) {
        at = it->second;
        break;
      }
    throw ConfigError(at, issue->message);
  }
  return c;
}

// Canonical text form: every key, fixed order, values that read back exactly.
inline std::string serialize(const RunConfig& c) {
  using detail::format_angle;
  using detail::format_shortest;
  const PhysParams& p = c.params;
  std::ostringstream os;
  if (c.preset) os << "preset = " << *c.preset << '\n';
  os << "delta = " << format_shortest(p.delta) << '\n'
     << "omega = " << format_shortest(p.omega) << '\n'
     << "gamma = " << format_shortest(p.gamma) << '\n'
     << "eta = " << format_shortest(p.eta) << '\n'
     << "eta_max = " << format_shortest(p.eta_max) << '\n'
     << "beta = " << format_shortest(p.beta) << '\n'
     << "theta = " << format_angle(p.theta) << '\n'
     << "psi = " << format_angle(p.psi) << '\n'
     << "nmax = " << p.nmax << '\n'
     << "drive.kind = " << (p.drive.kind == DriveKind::TravelingWave ? "traveling" : "standing") << '\n'
     << "drive.phi = " << format_angle(p.drive.phi) << '\n'
     << "grid.min = " << format_shortest(c.grid.min) << '\n'
     << "grid.max = " << format_shortest(c.grid.max) << '\n'
     << "grid.points = " << c.grid.points << '\n'
     << "mode = " << to_string(c.mode) << '\n'
     << "sidebands = " << (c.resolved_sidebands ? "resolved" : "single") << '\n'
     << "output = " << c.output << '\n'
     << "emit_lines = " << (c.emit_lines ? "true" : "false") << '\n'
     << "emit_plot_script = " << (c.emit_plot_script ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace ionfluor
