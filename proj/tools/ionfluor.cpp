// ionfluor: fluorescence spectrum of a trapped, laser-cooled two-level ion.
//
//   ionfluor --preset fig2c --mode both --out fig2c.dat --emit-lines --emit-plot-script
//
// Exit codes: 0 ok, 1 I/O failure, 2 config error, 3 physics-domain error, 4 numerical failure.

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ionfluor/run.hpp"

namespace {

ionfluor::GridSpec parse_grid(const std::string& s) {
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (b == std::string::npos) throw ionfluor::InvalidParameter("--grid expects MIN:MAX:N, got '" + s + "'");
  ionfluor::GridSpec g;
  auto num = [&](std::string_view part, auto& out) {
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc() || p != part.data() + part.size())
      throw ionfluor::InvalidParameter("--grid expects MIN:MAX:N, got '" + s + "'");
  };
  const std::string_view v(s);
  num(v.substr(0, a), g.min);
  num(v.substr(a + 1, b - a - 1), g.max);
  num(v.substr(b + 1), g.points);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonance-fluorescence spectrum of a trapped ion to second order in the Lamb-Dicke parameter"};
  std::string config_path, preset, mode, out, grid;
  bool emit_lines = false, emit_plot = false;
  app.add_option("--config", config_path, "Configuration file (key = value lines)");
  app.add_option("--preset", preset, "Named parameter preset: fig2a..fig2d, fig3a, fig3b, fig4a..fig4c");
  app.add_option("--mode", mode, "perturbative, oracle or both")
      ->check(CLI::IsMember({"perturbative", "oracle", "both"}));
  app.add_option("--out", out, "Output path of the spectrum table");
  app.add_option("--grid", grid, "Frequency grid MIN:MAX:N in units of nu, relative to the laser");
  app.add_flag("--emit-lines", emit_lines, "Write the line inventory to OUT.lines");
  app.add_flag("--emit-plot-script", emit_plot, "Write a gnuplot script to OUT.gp");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ionfluor::kExitConfig;
  }

  ionfluor::RunConfig cfg;
  try {
    // The preset is the base; a config file and explicit flags refine it.
    std::string text;
    if (!preset.empty()) text += "preset = " + preset + "\n";
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) {
        std::cerr << "error: cannot read config '" << config_path << "'\n";
        return ionfluor::kExitIo;
      }
      std::ostringstream ss;
      ss << f.rdbuf();
      text += ss.str();
    }
    cfg = ionfluor::parse_config(text);
    if (!mode.empty()) cfg.mode = *ionfluor::parse_mode(mode);
    if (!out.empty()) cfg.output = out;
    if (!grid.empty()) cfg.grid = parse_grid(grid);
    cfg.emit_lines = cfg.emit_lines || emit_lines;
    cfg.emit_plot_script = cfg.emit_plot_script || emit_plot;
    cfg.validate();
  } catch (const ionfluor::ConfigError& e) {
    // Line numbers count from the config file, after the injected preset line.
    const int shift = preset.empty() ? 0 : 1;
    const std::string what = e.what();
    const std::string msg = what.substr(what.find(": ") + 2);
    if (e.line() <= shift) {
      std::cerr << "config error: --preset: " << msg << '\n';
    } else {
      std::cerr << "config error: " << (config_path.empty() ? "" : config_path + ": ") << "line "
                << e.line() - shift << ": " << msg << '\n';
    }
    return ionfluor::kExitConfig;
  } catch (const ionfluor::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ionfluor::kExitConfig;
  }
  return ionfluor::run(cfg, std::cerr);
}
