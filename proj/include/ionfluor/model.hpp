// model.hpp: physical parameters and the zero-order internal (two-level)
// dynamics of the driven, decaying dipole.
//
// Units: the trap frequency nu is 1, hbar is 1, lengths are in units of the
// ground-state size x0, so that k x -> eta (a + a^+).

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ionfluor/errors.hpp"
#include "ionfluor/hilbert.hpp"

namespace ionfluor {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

enum class DriveKind { TravelingWave, StandingWave };

struct Drive {
  DriveKind kind = DriveKind::TravelingWave;
  double phi = 0.0;  // standing-wave phase at the trap centre, radians

  static Drive traveling() { return {}; }
  static Drive standing(double phi) { return {DriveKind::StandingWave, phi}; }
  bool operator==(const Drive&) const = default;
};

struct PhysParams {
  double delta = -1.0;  // laser detuning omega_L - omega_0
  double omega = 1.0;   // Rabi frequency
  double gamma = 0.1;   // excited-state linewidth
  double eta = 0.1;     // Lamb-Dicke parameter
  double theta = 0.0;   // laser / trap axis angle, radians
  double psi = deg_to_rad(40.0);  // detection angle, radians
  Drive drive{};
  double beta = 0.4;  // mean squared recoil projection of a spontaneous photon
  int nmax = 20;      // Fock-space truncation
  double eta_max = 0.3;

  bool operator==(const PhysParams&) const = default;

  // Throws InvalidParameter naming the violated bound.
  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(delta) || !finite(omega) || !finite(gamma) || !finite(eta) || !finite(theta) ||
        !finite(psi) || !finite(beta) || !finite(drive.phi))
      throw InvalidParameter("parameters must be finite");
    if (!(gamma > 0.0)) throw InvalidParameter("gamma must be > 0");
    if (!(omega >= 0.0)) throw InvalidParameter("omega must be >= 0");
    if (!(eta > 0.0 && eta < eta_max))
      throw InvalidParameter("eta = " + std::to_string(eta) +
                             " violates the Lamb-Dicke guard 0 < eta < " + std::to_string(eta_max));
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParameter("beta must lie in (0, 1]");
    if (nmax < 4) throw InvalidParameter("nmax must be >= 4");
  }
};

// Drive profile and its first two phase derivatives at the trap centre.
struct DriveFactors {
  Complex zeta;
  Complex dzeta;
  Complex d2zeta;
};

inline DriveFactors zeta(const Drive& drive) {
  if (drive.kind == DriveKind::TravelingWave) return {1.0, kI, -1.0};
  const double c = std::cos(drive.phi);
  const double s = std::sin(drive.phi);
  return {c, -s, -c};
}

// Two-level operators in the basis {|g>, |e>}.
namespace two_level {

inline Operator ground() {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = 1.0;
  return m;
}
inline Operator excited() {
  Operator m = Operator::Zero(2, 2);
  m(1, 1) = 1.0;
  return m;
}
// sigma = |g><e|
inline Operator sigma() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}
inline Operator sigma_dag() { return sigma().adjoint(); }

// (c/2) sigma^+ + h.c.
inline Operator dipole_coupling(Complex c) {
  return 0.5 * c * sigma_dag() + 0.5 * std::conj(c) * sigma();
}

}  // namespace two_level

struct InternalSystem {
  Superoperator liouvillian;
  EigenSystem eigen;
  Operator steady;
  std::size_t steady_index = 0;

  const EigenTriplet& triplet(std::size_t k) const { return eigen[k]; }
  std::size_t size() const { return eigen.size(); }
};

inline Operator internal_hamiltonian(const PhysParams& p) {
  const DriveFactors z = zeta(p.drive);
  return p.delta * two_level::ground() + two_level::dipole_coupling(p.omega * z.zeta);
}

inline InternalSystem build_internal(const PhysParams& p) {
  InternalSystem sys;
  sys.liouvillian = commutator_superop(internal_hamiltonian(p)) +
                    lindblad_superop(two_level::sigma(), p.gamma);
  sys.eigen = spectral_decompose(sys.liouvillian);
  if (sys.eigen.size() != 4) throw NumericalError("internal Liouvillian must have 4 eigenvalues");
  sys.steady_index = sys.eigen.steady_index();
  sys.steady = sys.eigen[sys.steady_index].right;
  if (sys.liouvillian.apply(sys.steady).cwiseAbs().maxCoeff() > 1e-10)
    throw NumericalError("internal steady state is not annihilated by L_I");
  return sys;
}

// g = Tr{sigma^+ rho^lambda}, g_check = Tr{rhocheck^lambda sigma rho_0}
struct DipolePair {
  Complex g;
  Complex g_check;
  Complex product() const { return g * g_check; }
};

inline DipolePair g_pair(const InternalSystem& sys, std::size_t k) {
  const auto& t = sys.eigen[k];
  return {trace_product(two_level::sigma_dag(), t.right),
          trace_product(t.left, two_level::sigma() * sys.steady)};
}

inline DipolePair g_pair(const InternalSystem& sys, Complex lambda) {
  const auto idx = sys.eigen.cluster_indices(lambda);
  if (idx.size() != 1)
    throw NumericalError("g_pair: internal eigenvalue is degenerate; address triplets by index");
  return g_pair(sys, idx.front());
}

}  // namespace ionfluor
