// spectrum.hpp: resonance-fluorescence spectrum of the trapped dipole to
// second order in the Lamb-Dicke parameter, as a sum of spectral lines
//
//   S(w) = Re sum_lambda A_lambda / (i (w - w_L) - lambda),
//
// with the elastic (lambda = 0) weights reported separately as delta peaks.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ionfluor/cooling.hpp"
#include "ionfluor/errors.hpp"
#include "ionfluor/hilbert.hpp"
#include "ionfluor/joint_space.hpp"
#include "ionfluor/lamb_dicke.hpp"
#include "ionfluor/model.hpp"

namespace ionfluor {

enum class LineOrigin {
  Elastic,             // zero-order elastic delta weight
  ElasticCorrection,   // second-order correction to the elastic delta weight
  Mollow,              // zero-order inelastic line at lambda_I
  ElasticSideband,     // Stokes / anti-Stokes line at +-i nu (+ W^(+-1) mode)
  InelasticSideband,   // motional sideband lambda_I +- i nu of a Mollow line
  CarrierCorrection,   // second-order amplitude correction at lambda_I
};

inline const char* to_string(LineOrigin o) {
  switch (o) {
    case LineOrigin::Elastic: return "elastic";
    case LineOrigin::ElasticCorrection: return "elastic-correction";
    case LineOrigin::Mollow: return "mollow";
    case LineOrigin::ElasticSideband: return "elastic-sideband";
    case LineOrigin::InelasticSideband: return "inelastic-sideband";
    case LineOrigin::CarrierCorrection: return "carrier-correction";
  }
  return "unknown";
}

struct SpectralLine {
  Complex pole;       // centre = Im, half-width = -Re (units of nu)
  Complex amplitude;
  LineOrigin origin = LineOrigin::Mollow;
  std::size_t internal_index = 0;  // parent internal eigen-triplet
  int sideband = 0;                // -1, 0, +1 motional coherence order
  int mode = -1;                   // W^(sideband) eigenmode, -1 if unresolved

  bool is_delta() const {
    return origin == LineOrigin::Elastic || origin == LineOrigin::ElasticCorrection;
  }
  double centre() const { return pole.imag(); }
  double half_width() const { return -pole.real(); }

  // Re[A / (i delta - pole)]; delta lines contribute nothing on a grid.
  double value(double delta) const {
    if (is_delta()) return 0.0;
    return (amplitude / (kI * delta - pole)).real();
  }
};

struct SpectrumResult {
  std::vector<double> grid;  // omega - omega_L in units of nu
  std::vector<double> s0;
  std::vector<double> s2;
  double elastic_weight = 0.0;
  double elastic_correction = 0.0;
  std::vector<SpectralLine> lines;
  RateData rates;
  double first_order_max = 0.0;  // largest first-order amplitude, zero for thermal mu
  bool degraded = false;         // elastic sidebands fell back to a single pole

  std::vector<double> total() const {
    std::vector<double> t(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) t[i] = s0[i] + s2[i];
    return t;
  }
};

inline std::vector<double> linear_grid(double lo, double hi, int points) {
  if (!(lo < hi) || points < 2) throw InvalidParameter("grid needs min < max and >= 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[std::size_t(i)] = lo + (hi - lo) * double(i) / double(points - 1);
  return g;
}

inline std::vector<double> evaluate_lines(std::span<const SpectralLine> lines,
                                          std::span<const double> grid) {
  std::vector<double> out(grid.size(), 0.0);
  for (const auto& l : lines)
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] += l.value(grid[i]);
  return out;
}

// Zero-order lines G(lambda_I) = g check-g; the lambda_I = 0 weight is the elastic delta.
inline std::vector<SpectralLine> mollow_lines(const InternalSystem& internal) {
  std::vector<SpectralLine> lines;
  for (std::size_t k = 0; k < internal.size(); ++k) {
    const DipolePair gp = g_pair(internal, k);
    if (k == internal.steady_index) {
      lines.push_back({0.0, gp.product(), LineOrigin::Elastic, k, 0, -1});
    } else {
      lines.push_back({internal.eigen[k].value, gp.product(), LineOrigin::Mollow, k, 0, -1});
    }
  }
  return lines;
}

struct ZeroOrderSpectrum {
  std::vector<double> curve;
  double elastic_weight = 0.0;
};

inline ZeroOrderSpectrum s0_curve(const InternalSystem& internal, std::span<const double> grid) {
  const auto lines = mollow_lines(internal);
  ZeroOrderSpectrum out{evaluate_lines(lines, grid), 0.0};
  out.elastic_weight = lines[internal.steady_index].amplitude.real();
  return out;
}

// Resolvent traces of the internal dipole that build the sideband amplitudes.
struct RRUT {
  Complex r;
  Complex r_star;
  Complex u;
  Complex t;
};

namespace detail {

// (z - L_I)^{-1} X, excluding any internal eigenvalue degenerate with z.
inline Operator internal_resolvent(const InternalSystem& internal, Complex z, const Operator& x) {
  std::vector<Complex> exclude;
  for (const auto& c : internal.eigen.clusters()) {
    const Complex v = internal.eigen[c.front()].value;
    if (std::abs(v - z) <= internal.eigen.cluster_tol()) exclude.push_back(v);
  }
  return constrained_resolvent(internal.liouvillian, internal.eigen, z, exclude, x);
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

}  // namespace detail

// lambda_I is addressed by internal triplet index k; lambda_E = +-i nu.
inline RRUT rrut(const InternalSystem& internal, const PerturbationOps& pert, std::size_t k,
                 Complex lambda_e) {
  const auto& t = internal.eigen[k];
  const Operator& rho0 = internal.steady;
  const Operator s = two_level::sigma();
  const Operator sd = two_level::sigma_dag();
  const Operator& v1 = pert.v1;
  const Complex z = t.value + lambda_e;
  // (lambda_E + L_I)^{-1} = -(-lambda_E - L_I)^{-1}
  auto plus_resolvent = [&](const Operator& x) {
    return Operator(-detail::internal_resolvent(internal, -lambda_e, x));
  };
  const Operator d0rho0 = s * rho0;
  const Operator rz_d0rho0 = detail::internal_resolvent(internal, z, d0rho0);

  RRUT out;
  out.r = trace_product(sd, detail::internal_resolvent(internal, z, detail::commutator(v1, t.right)));
  out.r_star = trace_product(t.left, s * plus_resolvent(detail::commutator(v1, rho0)));
  out.u = -trace_product(t.left, detail::commutator(v1, rz_d0rho0));
  out.t = trace_product(t.left, s * plus_resolvent(Operator(rho0 * v1))) -
          trace_product(Operator(v1 * t.left), rz_d0rho0);
  return out;
}

// Tr_E{x U^{i ell nu} x mu} and Tr_E{x U^{i ell nu} [x, mu]} for thermal mu, in units of x0^2.
struct ExternalTraces {
  Complex sym;
  Complex com;
};

inline ExternalTraces external_traces(int ell, double nbar) {
  if (ell == 1) return {nbar, -1.0};
  if (ell == -1) return {nbar + 1.0, 1.0};
  throw InvalidParameter("external_traces: ell must be -1 or +1");
}

// Sideband amplitude from the internal traces and the external traces. The
// cos(theta) projections already sit inside r, r*, u, t (through V1).
inline Complex sideband_amplitude(const RRUT& q, const DipolePair& gp, const ExternalTraces& ext,
                                  double eta, double cos_psi) {
  const double e2 = eta * eta;
  const Complex bracket = (q.r_star + q.u) * ext.sym + q.t * ext.com;
  return e2 * q.r * bracket - e2 * cos_psi * (gp.g * bracket + q.r * gp.g_check * ext.sym) +
         e2 * cos_psi * cos_psi * gp.g * gp.g_check * ext.sym;
}

// F+(lambda_I), F-(lambda_I) for the internal triplet k.
inline std::pair<Complex, Complex> f_sidebands(const InternalSystem& internal,
                                               const PerturbationOps& pert, double nbar,
                                               std::size_t k) {
  const DipolePair gp = g_pair(internal, k);
  const Complex fp = sideband_amplitude(rrut(internal, pert, k, kI), gp, external_traces(1, nbar),
                                        pert.eta, pert.cos_psi);
  const Complex fm = sideband_amplitude(rrut(internal, pert, k, -kI), gp,
                                        external_traces(-1, nbar), pert.eta, pert.cos_psi);
  return {fp, fm};
}

// Term-by-term traces Tr{D_a^+ P_b D_c rho_d} on the joint truncated space.
class ExpansionTraces {
 public:
  ExpansionTraces(const JointExpansion& je, const Matrix& mu, const PhysParams& p)
      : je_(je), steady_(SteadyExpansion::build(je, mu)), det_(detector_ops(p, je.nmax())) {}

  const JointExpansion& expansion() const noexcept { return je_; }

  Complex term(const L0Cluster& c, int a, int b, int cidx, int d) const {
    const Operator dc_rho = detector(cidx) * steady_.terms.at(std::size_t(d));
    const Operator proj = je_.projector_correction(c, b, dc_rho);
    return trace_product(detector(a).adjoint(), proj);
  }

  // Sum of all terms with a + b + c + d = order.
  Complex amplitude(const L0Cluster& c, int order) const {
    Complex sum{0.0, 0.0};
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b)
        for (int cc = 0; a + b + cc <= order; ++cc) sum += term(c, a, b, cc, order - a - b - cc);
    return sum;
  }

 private:
  const Operator& detector(int a) const {
    switch (a) {
      case 0: return det_.d0;
      case 1: return det_.d1;
      case 2: return det_.d2;
      default: throw InvalidParameter("detector order must be 0, 1 or 2");
    }
  }

  const JointExpansion& je_;
  SteadyExpansion steady_;
  DetectorOps det_;
};

// Second-order correction F0(lambda_I) to the line at lambda_I (lambda_E = 0).
inline Complex f_carrier(const ExpansionTraces& traces, std::size_t k) {
  return traces.amplitude(traces.expansion().cluster_of(k, 0), 2);
}

struct SidebandSplit {
  std::vector<SpectralLine> lines;
  bool degraded = false;
};

// Distributes the elastic-sideband amplitude over the eigenmodes of W^(ell):
// the external traces are re-evaluated with each mode projector U_j in place
// of U^{i ell nu}, so the mode amplitudes sum to the unresolved amplitude.
inline SidebandSplit elastic_sideband_lines(const InternalSystem& internal,
                                            const PerturbationOps& pert, const RateData& rd,
                                            const Matrix& mu, const Matrix& x, int ell,
                                            bool mode_resolved = true) {
  const std::size_t st = internal.steady_index;
  const RRUT q = rrut(internal, pert, st, kI * double(ell));
  const DipolePair gp = g_pair(internal, st);
  const Complex unresolved =
      sideband_amplitude(q, gp, external_traces(ell, rd.nbar), pert.eta, pert.cos_psi);
  const Matrix& w = rd.w_gen.at(ell);
  const auto& eig = rd.w_eigen.at(ell);

  SidebandSplit out;
  if (!mode_resolved || !eig) {
    Eigen::ComplexEigenSolver<Matrix> es(w, false);
    Complex slowest = es.eigenvalues()(0);
    for (Index i = 1; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i).real() > slowest.real()) slowest = es.eigenvalues()(i);
    out.lines.push_back({kI * double(ell) + slowest, unresolved, LineOrigin::ElasticSideband, st,
                         ell, -1});
    out.degraded = !eig;
    return out;
  }

  const int first = manifold_first(ell);
  const int size = manifold_size(ell, int(mu.rows()) - 1);
  const Matrix xmu = x * mu;
  const Matrix com = xmu - mu * x;
  Vector tr_x(size), c_sym(size), c_com(size);
  for (int a = 0; a < size; ++a) {
    const int n = first + a;
    tr_x(a) = x(n + ell, n);        // Tr{x |n><n+ell|}
    c_sym(a) = xmu(n, n + ell);     // Tr{|n+ell><n| x mu}
    c_com(a) = com(n, n + ell);
  }
  for (std::size_t j = 0; j < eig->size(); ++j) {
    const Index jj = Index(j);
    const Complex right = eig->right.col(jj).dot(tr_x.conjugate());
    const ExternalTraces ext{right * (eig->left.row(jj) * c_sym)(0),
                             right * (eig->left.row(jj) * c_com)(0)};
    out.lines.push_back({kI * double(ell) + eig->values(jj),
                         sideband_amplitude(q, gp, ext, pert.eta, pert.cos_psi),
                         LineOrigin::ElasticSideband, st, ell, int(j)});
  }
  return out;
}

struct SpectrumOptions {
  bool mode_resolved_sidebands = true;
};

inline SpectrumResult assemble(const PhysParams& p, std::span<const double> grid,
                               const SpectrumOptions& opt = {}) {
  p.validate();
  InternalSystem internal = build_internal(p);
  const PerturbationOps pert = perturbation_ops(p);
  const JointExpansion je(internal, pert, p.nmax);
  SpectrumResult res;
  res.grid.assign(grid.begin(), grid.end());
  res.rates = cooling_rates(je);
  const Matrix mu = thermal_state(res.rates.nbar, p.nmax);
  const ExpansionTraces traces(je, mu, p);
  const std::size_t st = internal.steady_index;

  std::vector<SpectralLine> zero = mollow_lines(internal);
  res.elastic_weight = zero[st].amplitude.real();

  std::vector<SpectralLine> second;
  for (std::size_t k = 0; k < internal.size(); ++k) {
    if (k == st) {
      const Complex corr = f_carrier(traces, k);
      res.elastic_correction = corr.real();
      second.push_back({0.0, corr, LineOrigin::ElasticCorrection, k, 0, -1});
      for (int ell : {1, -1}) {
        SidebandSplit split = elastic_sideband_lines(internal, pert, res.rates, mu, je.position(),
                                                     ell, opt.mode_resolved_sidebands);
        res.degraded = res.degraded || split.degraded;
        second.insert(second.end(), split.lines.begin(), split.lines.end());
      }
      continue;
    }
    const Complex lam = internal.eigen[k].value;
    const auto [fp, fm] = f_sidebands(internal, pert, res.rates.nbar, k);
    second.push_back({lam, f_carrier(traces, k), LineOrigin::CarrierCorrection, k, 0, -1});
    second.push_back({lam + kI, fp, LineOrigin::InelasticSideband, k, 1, -1});
    second.push_back({lam - kI, fm, LineOrigin::InelasticSideband, k, -1, -1});
  }

  // First order, computed rather than assumed: every cluster reachable at O(eta).
  for (std::size_t k = 0; k < internal.size(); ++k)
    for (int ell = -2; ell <= 2; ++ell)
      res.first_order_max = std::max(res.first_order_max,
                                     std::abs(traces.amplitude(je.cluster_of(k, ell), 1)));

  res.s0 = evaluate_lines(zero, grid);
  res.s2 = evaluate_lines(second, grid);
  res.lines = std::move(zero);
  res.lines.insert(res.lines.end(), second.begin(), second.end());
  return res;
}

}  // namespace ionfluor
