#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ionfluor/config.hpp"
#include "ionfluor/spectrum.hpp"
#include "support/oracles.hpp"

using namespace ionfluor;

namespace {

struct Pipeline {
  PhysParams params;
  InternalSystem internal;
  PerturbationOps pert;
  JointExpansion je;
  RateData rates;
  Matrix mu;

  explicit Pipeline(PhysParams p, int nmax = 12)
      : params(with_nmax(p, nmax)),
        internal(build_internal(params)),
        pert(perturbation_ops(params)),
        je(internal, pert, nmax),
        rates(cooling_rates(je)),
        mu(thermal_state(rates.nbar, nmax)) {}

  static PhysParams with_nmax(PhysParams p, int n) {
    p.nmax = n;
    return p;
  }
};

std::vector<SpectralLine> without(const std::vector<SpectralLine>& lines, LineOrigin o) {
  std::vector<SpectralLine> out;
  for (const auto& l : lines)
    if (l.origin != o) out.push_back(l);
  return out;
}

}  // namespace

TEST(ExternalTraces, ClosedFormsMatchBruteForceFockSums) {
  for (double nbar : {0.0, 0.0006, 0.04, 0.15, 0.6}) {
    for (int ell : {-1, 1}) {
      const ExternalTraces t = external_traces(ell, nbar);
      const auto [sym, com] = oracle_ref::brute_external_traces(ell, nbar, 40);
      const double tail = std::pow(nbar / (1.0 + nbar), 41) * 100.0;
      EXPECT_NEAR(t.sym.real(), sym, 1e-10 + tail) << "nbar " << nbar << " ell " << ell;
      EXPECT_NEAR(t.com.real(), com, 1e-10 + tail) << "nbar " << nbar << " ell " << ell;
    }
  }
  EXPECT_EQ(external_traces(1, 0.0).sym, Complex(0.0));
  EXPECT_NEAR(external_traces(-1, 0.15).sym.real(), 1.15, 1e-15);
  EXPECT_EQ(external_traces(-1, 0.15).com, Complex(1.0));
  EXPECT_THROW(external_traces(0, 0.1), InvalidParameter);
}

TEST(S0, MatchesDirectResolventSolve) {
  PhysParams p;
  const InternalSystem in = build_internal(p);
  const auto grid = linear_grid(-4.0, 4.0, 161);
  const ZeroOrderSpectrum s0 = s0_curve(in, grid);
  double peak = 0.0;
  for (double v : s0.curve) peak = std::max(peak, v);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double want = oracle_ref::mollow_direct(in.liouvillian.matrix(), in.steady, grid[i]);
    EXPECT_NEAR(s0.curve[i], want, 1e-8 * peak) << grid[i];
    EXPECT_GE(s0.curve[i], -1e-12);
  }
  EXPECT_NEAR(s0.elastic_weight, std::norm(trace_product(two_level::sigma(), in.steady)), 1e-14);
}

TEST(S0, MollowSidePeaksAtTheDressedSplitting) {
  PhysParams p;
  const InternalSystem in = build_internal(p);
  const auto grid = linear_grid(0.5, 3.0, 2501);
  const auto s0 = s0_curve(in, grid).curve;
  const auto it = std::max_element(s0.begin(), s0.end());
  const double split = std::sqrt(p.delta * p.delta + p.omega * p.omega);
  EXPECT_NEAR(grid[std::size_t(it - s0.begin())], split, 0.01);
}

TEST(S0, NodeHasNoZeroOrderSpectrum) {
  const InternalSystem in = build_internal(preset_params("fig4c"));
  const auto grid = linear_grid(-3.0, 3.0, 61);
  const ZeroOrderSpectrum s0 = s0_curve(in, grid);
  for (double v : s0.curve) EXPECT_LT(std::abs(v), 1e-14);
  EXPECT_LT(std::abs(s0.elastic_weight), 1e-14);
}

TEST(RRUT, TravelingWaveIdentitiesAtTheSteadyState) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    PhysParams p;
    p.delta = -2.0 + 3.0 * u(rng);
    p.omega = 0.2 + 1.5 * u(rng);
    p.gamma = 0.05 + 0.4 * u(rng);
    p.theta = 1.2 * u(rng);
    const InternalSystem in = build_internal(p);
    const PerturbationOps pert = perturbation_ops(p);
    for (Complex le : {kI, -kI}) {
      const RRUT q = rrut(in, pert, in.steady_index, le);
      EXPECT_LT(std::abs(q.u), 1e-12);
      EXPECT_LT(std::abs(q.r_star - std::conj(q.r)), 1e-12);
    }
  }
}

TEST(RRUT, NodeHasVanishingUAndT) {
  const PhysParams p = preset_params("fig4c");
  const InternalSystem in = build_internal(p);
  const PerturbationOps pert = perturbation_ops(p);
  for (std::size_t k = 0; k < in.size(); ++k)
    for (Complex le : {kI, -kI}) {
      const RRUT q = rrut(in, pert, k, le);
      EXPECT_LT(std::abs(q.u), 1e-12);
      EXPECT_LT(std::abs(q.t), 1e-12);
    }
}

TEST(RRUT, PerpendicularLaserDecouples) {
  PhysParams p;
  p.theta = std::numbers::pi / 2;
  const InternalSystem in = build_internal(p);
  const PerturbationOps pert = perturbation_ops(p);
  for (std::size_t k = 0; k < in.size(); ++k) {
    const RRUT q = rrut(in, pert, k, kI);
    EXPECT_LT(std::abs(q.r) + std::abs(q.r_star) + std::abs(q.u) + std::abs(q.t), 1e-15);
  }
}

// The closed-form sideband amplitudes against the generic second-order trace
// sum_{a+b+c+d=2} Tr{D_a^+ P_b D_c rho_d} on the (lambda_I, +-1) cluster.
TEST(Sidebands, ClosedFormMatchesTermByTermExpansion) {
  PhysParams tilted;
  tilted.theta = 0.5;
  tilted.delta = -1.3;
  tilted.omega = 0.7;
  for (const PhysParams& p : {preset_params("fig2a"), preset_params("fig3b"), tilted}) {
    // Closed forms sum the Fock series exactly; nmax 16 puts the truncated tail below 1e-12.
    const Pipeline pl(p, 16);
    const ExpansionTraces tr(pl.je, pl.mu, pl.params);
    for (std::size_t k = 0; k < pl.internal.size(); ++k) {
      const auto [fp, fm] = f_sidebands(pl.internal, pl.pert, pl.rates.nbar, k);
      const L0Cluster cp = pl.je.cluster_of(k, 1), cm = pl.je.cluster_of(k, -1);
      ASSERT_EQ(cp.members.size(), 1u);
      const double scale = std::abs(fp) + std::abs(fm) + 1e-6 * p.eta * p.eta;
      EXPECT_NEAR(std::abs(fp - tr.amplitude(cp, 2)), 0.0, 1e-9 * scale) << "k " << k;
      EXPECT_NEAR(std::abs(fm - tr.amplitude(cm, 2)), 0.0, 1e-9 * scale) << "k " << k;
    }
  }
}

TEST(Sidebands, PsiCrossTermsFlipWithCosPsi) {
  PhysParams a = preset_params("fig2a");
  PhysParams b = a;
  b.psi = std::numbers::pi - a.psi;  // cos(psi) -> -cos(psi)
  const InternalSystem in = build_internal(a);
  const double nbar = 0.15;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const RRUT q = rrut(in, perturbation_ops(a), k, kI);
    const DipolePair gp = g_pair(in, k);
    const ExternalTraces ext = external_traces(1, nbar);
    const Complex fa = sideband_amplitude(q, gp, ext, a.eta, std::cos(a.psi));
    const Complex fb = sideband_amplitude(q, gp, ext, b.eta, std::cos(b.psi));
    const Complex even = sideband_amplitude(q, gp, ext, a.eta, 0.0);
    const Complex quad = a.eta * a.eta * std::cos(a.psi) * std::cos(a.psi) * gp.product() * ext.sym;
    // Odd part in cos(psi) is the cross term; even part is the r-term plus the g g-check term.
    EXPECT_LT(std::abs(0.5 * (fa + fb) - even - quad), 1e-15);
    const Complex bracket = (q.r_star + q.u) * ext.sym + q.t * ext.com;
    const Complex cross = -a.eta * a.eta * std::cos(a.psi) * (gp.g * bracket + q.r * gp.g_check * ext.sym);
    EXPECT_LT(std::abs(0.5 * (fa - fb) - cross), 1e-15);
  }
}

TEST(Sidebands, ZeroOccupationLeavesOnlyTheCommutatorTermInFplus) {
  const PhysParams p = preset_params("fig2c");
  const InternalSystem in = build_internal(p);
  const PerturbationOps pert = perturbation_ops(p);
  for (std::size_t k = 0; k < in.size(); ++k) {
    const RRUT q = rrut(in, pert, k, kI);
    const Complex fp = sideband_amplitude(q, g_pair(in, k), external_traces(1, 0.0), p.eta, std::cos(p.psi));
    const Complex t_only = p.eta * p.eta * (q.r - std::cos(p.psi) * g_pair(in, k).g) * q.t * Complex(-1.0);
    EXPECT_LT(std::abs(fp - t_only), 1e-15);
  }
  // The occupation-proportional parts of F+ and F- stand in the ratio nbar/(nbar + 1).
  const std::size_t k = in.steady_index;
  const double n1 = 0.1, n2 = 0.3;
  auto nbar_part = [&](Complex le, int ell) {
    const RRUT q = rrut(in, pert, k, le);
    const DipolePair gp = g_pair(in, k);
    return sideband_amplitude(q, gp, external_traces(ell, n2), p.eta, std::cos(p.psi)) -
           sideband_amplitude(q, gp, external_traces(ell, n1), p.eta, std::cos(p.psi));
  };
  const RRUT qp = rrut(in, pert, k, kI), qm = rrut(in, pert, k, -kI);
  const DipolePair gp = g_pair(in, k);
  auto per_phonon = [&](const RRUT& q) {
    const double cp = std::cos(p.psi);
    return p.eta * p.eta * ((q.r - cp * gp.g) * (q.r_star + q.u) - cp * q.r * gp.g_check + cp * cp * gp.product());
  };
  EXPECT_LT(std::abs(nbar_part(kI, 1) - (n2 - n1) * per_phonon(qp)), 1e-15);
  EXPECT_LT(std::abs(nbar_part(-kI, -1) - (n2 - n1) * per_phonon(qm)), 1e-15);
}

TEST(Carrier, NodeCancellationAndVanishingF0) {
  const Pipeline pl(preset_params("fig4c"));
  const ExpansionTraces tr(pl.je, pl.mu, pl.params);
  const Complex lam_minus(-pl.params.gamma / 2, -pl.params.delta);
  for (std::size_t k = 0; k < pl.internal.size(); ++k) {
    const L0Cluster c = pl.je.cluster_of(k, 0);
    const Complex f1 = tr.term(c, 0, 1, 0, 1);
    const Complex f5 = tr.term(c, 0, 0, 0, 2);
    const Complex f6 = tr.term(c, 0, 0, 1, 1);
    EXPECT_LT(std::abs(f6), 1e-10);
    EXPECT_LT(std::abs(f1 + f5), 1e-10);
    EXPECT_LT(std::abs(f_carrier(tr, k)), 1e-10);
    if (std::abs(pl.internal.eigen[k].value - lam_minus) < 1e-9) {
      EXPECT_GT(std::abs(f1), 1e-5);  // the cancellation is between nonzero terms
    } else {
      EXPECT_LT(std::abs(f1), 1e-10);
    }
  }
}

TEST(Carrier, ScalesQuadraticallyInEta) {
  PhysParams a = preset_params("fig2c");
  PhysParams b = a;
  b.eta = a.eta / 2;
  const Pipeline pa(a, 10), pb(b, 10);
  const ExpansionTraces ta(pa.je, pa.mu, pa.params), tb(pb.je, pb.mu, pb.params);
  for (std::size_t k = 0; k < pa.internal.size(); ++k) {
    const Complex fa = f_carrier(ta, k), fb = f_carrier(tb, k);
    EXPECT_NEAR(std::abs(fa / fb - 4.0), 0.0, 1e-6) << "k " << k;
  }
}

TEST(ElasticSidebands, ModeAmplitudesSumToTheUnresolvedAmplitude) {
  // The closed-form amplitude sums the Fock series to infinity; nmax 16 keeps the
  // truncated tail (q^nmax, q = nbar/(1 + nbar)) far below the tolerance.
  for (const char* preset : {"fig2a", "fig2d", "fig3a", "fig4c"}) {
    const Pipeline pl(preset_params(preset), 16);
    const std::size_t st = pl.internal.steady_index;
    const auto [fp, fm] = f_sidebands(pl.internal, pl.pert, pl.rates.nbar, st);
    for (int ell : {1, -1}) {
      const SidebandSplit s = elastic_sideband_lines(pl.internal, pl.pert, pl.rates, pl.mu, pl.je.position(), ell);
      EXPECT_FALSE(s.degraded);
      EXPECT_EQ(s.lines.size(), std::size_t(pl.params.nmax));
      Complex sum = 0.0;
      for (const auto& l : s.lines) {
        sum += l.amplitude;
        EXPECT_LE(l.pole.real(), 0.0);
        EXPECT_NEAR(l.pole.imag(), double(ell), 0.05);
      }
      const Complex want = ell == 1 ? fp : fm;
      EXPECT_LT(std::abs(sum - want), 1e-8 * std::abs(want) + 1e-14) << preset << " ell " << ell;
    }
  }
}

TEST(ElasticSidebands, SinglePoleFallbackCarriesTheFullAmplitude) {
  const Pipeline pl(preset_params("fig2c"));
  const auto [fp, fm] = f_sidebands(pl.internal, pl.pert, pl.rates.nbar, pl.internal.steady_index);
  const SidebandSplit s =
      elastic_sideband_lines(pl.internal, pl.pert, pl.rates, pl.mu, pl.je.position(), 1, false);
  ASSERT_EQ(s.lines.size(), 1u);
  EXPECT_LT(std::abs(s.lines[0].amplitude - fp), 1e-15);
  EXPECT_EQ(s.lines[0].mode, -1);
  // Slowest mode of W^(+1) sets the pole.
  double slowest = -1e300;
  for (Index j = 0; j < pl.rates.w_eigen.at(1)->values.size(); ++j)
    slowest = std::max(slowest, pl.rates.w_eigen.at(1)->values(j).real());
  EXPECT_NEAR(s.lines[0].pole.real(), slowest, 1e-12);
  (void)fm;
}

TEST(ElasticSidebands, NodeSidebandsAreLorentzianAndPsiIndependent) {
  PhysParams a = preset_params("fig4c");
  PhysParams b = a;
  a.psi = deg_to_rad(40.0);
  const auto grid = linear_grid(-2.0, 2.0, 401);
  a.nmax = b.nmax = 12;
  const SpectrumResult ra = assemble(a, grid), rb = assemble(b, grid);
  for (const auto& l : ra.lines) {
    if (l.origin == LineOrigin::ElasticSideband && std::abs(l.amplitude) > 1e-12) {
      EXPECT_LT(std::abs(l.amplitude.imag()), 1e-8 * std::abs(l.amplitude.real()));
    }
  }
  double peak = 0.0;
  for (double v : ra.s2) peak = std::max(peak, std::abs(v));
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(ra.s2[i], rb.s2[i], 1e-8 * peak);
}

TEST(Assemble, LinesReproduceTheCurvesAndInvariantsHold) {
  const auto grid = linear_grid(-4.0, 4.0, 801);
  PhysParams p = preset_params("fig2d");
  p.nmax = 12;
  const SpectrumResult r = assemble(p, grid);
  const auto from_lines = evaluate_lines(r.lines, grid);
  const auto total = r.total();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(total[i], from_lines[i], 1e-10);
    EXPECT_GE(r.s0[i], -1e-12);
  }
  EXPECT_LT(r.first_order_max, 1e-12);
  EXPECT_FALSE(r.degraded);
  const InternalSystem in = build_internal(p);
  for (const auto& l : r.lines) {
    if (!l.is_delta()) {
      EXPECT_LE(l.pole.real(), 1e-15);
    }
    if (l.origin == LineOrigin::InelasticSideband) {
      // Width of the parent Mollow line, centre displaced by one trap quantum.
      EXPECT_EQ(l.pole.real(), in.eigen[l.internal_index].value.real());
      EXPECT_NEAR(l.pole.imag(), in.eigen[l.internal_index].value.imag() + l.sideband, 1e-15);
    }
  }
  double delta_sum = 0.0;
  for (const auto& l : r.lines)
    if (l.is_delta()) delta_sum += l.amplitude.real();
  EXPECT_NEAR(delta_sum, r.elastic_weight + r.elastic_correction, 1e-15);
}

TEST(Assemble, LorentzPartIntegratesToPiTimesReA) {
  const SpectralLine l{Complex(-0.05, 0.3), Complex(0.02, 0.007), LineOrigin::Mollow, 1, 0, -1};
  // Re[A/(i w - lambda)] = Lorentz(Re A) + dispersive(Im A); the dispersive part integrates to 0
  // symmetrically, so a symmetric window around the centre isolates pi Re A.
  const double half = 4000.0;
  const int n = 4000001;
  const double h = 2.0 * half / (n - 1);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = l.centre() - half + h * i;
    integral += (i == 0 || i == n - 1 ? 0.5 : 1.0) * l.value(w);
  }
  integral *= h;
  const double tail = 2.0 * l.amplitude.real() * l.half_width() / half;  // Lorentz mass outside
  EXPECT_NEAR(integral + tail, std::numbers::pi * l.amplitude.real(), 1e-6);
}

TEST(Assemble, FirstOrderTermVanishesForAllPresets) {
  const auto grid = linear_grid(-1.0, 1.0, 3);
  for (const auto& pr : kPresets) {
    PhysParams p = preset_params(pr.name);
    p.nmax = 10;
    EXPECT_LT(assemble(p, grid).first_order_max, 1e-12) << pr.name;
  }
}

TEST(Assemble, SecondOrderCurveScalesAsEtaSquared) {
  const auto grid = linear_grid(-4.0, 4.0, 401);
  PhysParams a = preset_params("fig2c");
  a.nmax = 10;
  PhysParams b = a;
  b.eta = a.eta / 2;
  const SpectrumResult ra = assemble(a, grid), rb = assemble(b, grid);
  // Elastic-sideband poles move with eta (their widths are cooling rates), so the
  // exact factor 4 holds for every other second-order line and for the sideband weights.
  const auto sa = evaluate_lines(without(without(ra.lines, LineOrigin::ElasticSideband), LineOrigin::Mollow), grid);
  const auto sb = evaluate_lines(without(without(rb.lines, LineOrigin::ElasticSideband), LineOrigin::Mollow), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(sa[i], 4.0 * sb[i], 1e-6 * std::abs(sa[i]) + 1e-15);
  Complex wa = 0.0, wb = 0.0;
  for (const auto& l : ra.lines)
    if (l.origin == LineOrigin::ElasticSideband) wa += l.amplitude;
  for (const auto& l : rb.lines)
    if (l.origin == LineOrigin::ElasticSideband) wb += l.amplitude;
  EXPECT_NEAR(std::abs(wa / wb - 4.0), 0.0, 1e-6);
  EXPECT_NEAR(ra.elastic_correction / rb.elastic_correction, 4.0, 1e-6);
}

TEST(Assemble, InelasticSidebandsSitOneTrapQuantumFromEachMollowPeak) {
  const auto grid = linear_grid(-4.0, 4.0, 5);
  PhysParams p = preset_params("fig2c");
  p.nmax = 10;
  const SpectrumResult r = assemble(p, grid);
  int count = 0;
  for (const auto& l : r.lines) {
    if (l.origin != LineOrigin::InelasticSideband) continue;
    ++count;
    for (const auto& m : r.lines) {
      if (m.origin == LineOrigin::Mollow && m.internal_index == l.internal_index) {
        EXPECT_NEAR(l.centre() - m.centre(), double(l.sideband), 1e-14);
      }
    }
  }
  EXPECT_EQ(count, 6);
}
