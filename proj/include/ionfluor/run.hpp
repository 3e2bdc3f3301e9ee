// run.hpp: pipeline orchestration behind the command-line tool.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ionfluor/config.hpp"
#include "ionfluor/errors.hpp"
#include "ionfluor/oracle.hpp"
#include "ionfluor/spectrum.hpp"

namespace ionfluor {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitDomain = 3,
  kExitNumerical = 4,
};

// 17 significant digits, locale independent.
inline std::string fmt17(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::string describe(const PhysParams& p) {
  using detail::format_angle;
  using detail::format_shortest;
  std::string s = "delta=" + format_shortest(p.delta) + " omega=" + format_shortest(p.omega) +
                  " gamma=" + format_shortest(p.gamma) + " eta=" + format_shortest(p.eta) +
                  " theta=" + format_angle(p.theta) + "deg psi=" + format_angle(p.psi) +
                  "deg beta=" + format_shortest(p.beta) + " nmax=" + std::to_string(p.nmax) + " drive=";
  if (p.drive.kind == DriveKind::TravelingWave) return s + "traveling";
  return s + "standing(phi=" + format_angle(p.drive.phi) + "deg)";
}

struct Comparison {
  double max_rel_deviation = 0.0;           // max |total - oracle| / max(oracle)
  double max_rel_deviation_windowed = 0.0;  // excluding +-0.02 around the elastic sidebands
  double pert_elastic = 0.0;
  double oracle_elastic = 0.0;
  double pert_nbar = 0.0;
  double oracle_nbar = 0.0;
};

inline Comparison compare(const SpectrumResult& pert, const ExactSpectrum& exact, double oracle_nbar) {
  Comparison c;
  const auto total = pert.total();
  double peak = 0.0;
  for (double v : exact.curve) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) peak = 1.0;
  for (std::size_t i = 0; i < total.size(); ++i) {
    const double d = std::abs(total[i] - exact.curve[i]) / peak;
    c.max_rel_deviation = std::max(c.max_rel_deviation, d);
    const double w = pert.grid[i];
    if (std::abs(w - 1.0) >= 0.02 && std::abs(w + 1.0) >= 0.02)
      c.max_rel_deviation_windowed = std::max(c.max_rel_deviation_windowed, d);
  }
  c.pert_elastic = pert.elastic_weight + pert.elastic_correction;
  c.oracle_elastic = exact.elastic_weight;
  c.pert_nbar = pert.rates.nbar;
  c.oracle_nbar = oracle_nbar;
  return c;
}

struct RunOutputs {
  std::optional<SpectrumResult> perturbative;
  std::optional<ExactSpectrum> exact;
  std::optional<double> exact_nbar;
  std::optional<Comparison> comparison;
  std::vector<std::string> files;
};

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}

inline void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline void write_table(const RunConfig& cfg, const RunOutputs& out, const std::string& path) {
  auto f = open_out(path);
  f << "# ionfluor spectrum, omega = (w - w_L)/nu\n";
  if (cfg.preset) f << "# preset " << *cfg.preset << '\n';
  f << "# " << describe(cfg.params) << '\n';
  if (out.perturbative) {
    f << "# elastic_weight " << fmt17(out.perturbative->elastic_weight) << '\n'
      << "# elastic_correction " << fmt17(out.perturbative->elastic_correction) << '\n'
      << "# nbar " << fmt17(out.perturbative->rates.nbar) << '\n';
  }
  if (out.exact) f << "# oracle_elastic_weight " << fmt17(out.exact->elastic_weight) << '\n';
  if (out.exact_nbar) f << "# oracle_nbar " << fmt17(*out.exact_nbar) << '\n';

  const bool pert = out.perturbative.has_value();
  const bool exact = out.exact.has_value();
  f << "# omega";
  if (pert) f << " s0 s2 total";
  if (exact) f << " oracle";
  f << '\n';
  const std::vector<double> grid =
      pert ? out.perturbative->grid : linear_grid(cfg.grid.min, cfg.grid.max, cfg.grid.points);
  const std::vector<double> total = pert ? out.perturbative->total() : std::vector<double>{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    f << fmt17(grid[i]);
    if (pert)
      f << ' ' << fmt17(out.perturbative->s0[i]) << ' ' << fmt17(out.perturbative->s2[i]) << ' '
        << fmt17(total[i]);
    if (exact) f << ' ' << fmt17(out.exact->curve[i]);
    f << '\n';
  }
  finish(f, path);
}

inline void write_summary(const RunConfig& cfg, const Comparison& c, const std::string& path) {
  auto f = open_out(path);
  f << "# ionfluor comparison summary\n";
  if (cfg.preset) f << "preset = " << *cfg.preset << '\n';
  f << "max_rel_deviation = " << fmt17(c.max_rel_deviation) << '\n'
    << "max_rel_deviation_outside_sideband_windows = " << fmt17(c.max_rel_deviation_windowed) << '\n'
    << "elastic_weight_perturbative = " << fmt17(c.pert_elastic) << '\n'
    << "elastic_weight_oracle = " << fmt17(c.oracle_elastic) << '\n'
    << "nbar_perturbative = " << fmt17(c.pert_nbar) << '\n'
    << "nbar_oracle = " << fmt17(c.oracle_nbar) << '\n';
  finish(f, path);
}

inline void write_lines(const SpectrumResult& r, const std::string& path) {
  auto f = open_out(path);
  f << "# ionfluor line inventory; S(w) = Re sum A / (i (w - w_L) - pole)\n"
    << "elastic_weight = " << fmt17(r.elastic_weight) << '\n'
    << "elastic_correction = " << fmt17(r.elastic_correction) << '\n'
    << "nbar = " << fmt17(r.rates.nbar) << '\n'
    << "a_plus = " << fmt17(r.rates.a_plus) << '\n'
    << "a_minus = " << fmt17(r.rates.a_minus) << '\n'
    << "first_order_max = " << fmt17(r.first_order_max) << '\n'
    << "degraded = " << (r.degraded ? "true" : "false") << '\n'
    << "# origin internal sideband mode centre half_width re_amplitude im_amplitude\n";
  for (const auto& l : r.lines) {
    f << to_string(l.origin) << ' ' << l.internal_index << ' ' << l.sideband << ' ' << l.mode << ' '
      << fmt17(l.centre()) << ' ' << fmt17(l.half_width()) << ' ' << fmt17(l.amplitude.real()) << ' '
      << fmt17(l.amplitude.imag()) << '\n';
  }
  finish(f, path);
}

inline std::string basename_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

inline void write_plot_script(const RunConfig& cfg, const RunOutputs& out, const std::string& path) {
  auto f = open_out(path);
  const std::string data = basename_of(cfg.output);
  f << "# gnuplot script; run from the directory holding " << data << '\n'
    << "set xlabel '(omega - omega_L) / nu'\n"
    << "set ylabel 'S (arb. units)'\n"
    << "set key top right\n"
    << "set arrow 1 from 0, graph 0 to 0, graph 1 nohead dashtype 2 lw 0.5\n";
  if (out.perturbative && out.exact) {
    f << "plot '" << data << "' using 1:4 with lines title 'S0 + S2', \\\n"
      << "     '' using 1:2 with lines dashtype 3 title 'S0', \\\n"
      << "     '' using 1:5 with lines title 'oracle'\n";
  } else if (out.perturbative) {
    f << "plot '" << data << "' using 1:4 with lines title 'S0 + S2', \\\n"
      << "     '' using 1:2 with lines dashtype 3 title 'S0'\n";
  } else {
    f << "plot '" << data << "' using 1:2 with lines title 'oracle'\n";
  }
  finish(f, path);
}

}  // namespace detail

// Runs the configured pipelines and writes the output files. Throws on failure.
inline RunOutputs run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  RunOutputs out;
  const std::vector<double> grid = linear_grid(cfg.grid.min, cfg.grid.max, cfg.grid.points);
  if (cfg.mode != RunMode::Oracle) {
    SpectrumOptions opt;
    opt.mode_resolved_sidebands = cfg.resolved_sidebands;
    out.perturbative = assemble(cfg.params, grid, opt);
  }
  if (cfg.mode != RunMode::Perturbative) {
    const ExactModel model = build_exact(cfg.params);
    out.exact = exact_spectrum(model, grid);
    out.exact_nbar = exact_nbar(model);
  }
  if (out.perturbative && out.exact)
    out.comparison = compare(*out.perturbative, *out.exact, *out.exact_nbar);

  detail::write_table(cfg, out, cfg.output);
  out.files.push_back(cfg.output);
  if (out.comparison) {
    detail::write_summary(cfg, *out.comparison, cfg.output + ".summary");
    out.files.push_back(cfg.output + ".summary");
  }
  if (cfg.emit_lines && out.perturbative) {
    detail::write_lines(*out.perturbative, cfg.output + ".lines");
    out.files.push_back(cfg.output + ".lines");
  }
  if (cfg.emit_plot_script) {
    detail::write_plot_script(cfg, out, cfg.output + ".gp");
    out.files.push_back(cfg.output + ".gp");
  }
  return out;
}

// Runs and maps failures onto the documented exit codes, reporting to err.
inline int run(const RunConfig& cfg, std::ostream& err) {
  const std::string context =
      " [" + (cfg.preset ? "preset " + *cfg.preset + ", " : std::string()) + describe(cfg.params) + "]";
  try {
    run_pipeline(cfg);
    return kExitOk;
  } catch (const InvalidParameter& e) {
    err << "config error: " << e.what() << context << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "physics domain error: " << e.what() << context << '\n';
    return kExitDomain;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << context << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << context << '\n';
    return kExitIo;
  }
}

}  // namespace ionfluor
