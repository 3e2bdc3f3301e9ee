// lamb_dicke.hpp: mechanical coupling operators at first and second order in
// eta, the dense joint Liouvillian terms L0, L1, L2 and the detector expansion.
//
// Joint space ordering is internal (x) motional: index = i * (nmax + 1) + n.

#pragma once

#include <cmath>

#include "ionfluor/hilbert.hpp"
#include "ionfluor/model.hpp"

namespace ionfluor {

namespace fock {

inline Matrix annihilation(int nmax) {
  Matrix a = Matrix::Zero(nmax + 1, nmax + 1);
  for (int n = 1; n <= nmax; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}
inline Matrix creation(int nmax) { return annihilation(nmax).adjoint(); }
inline Matrix number(int nmax) {
  Matrix m = Matrix::Zero(nmax + 1, nmax + 1);
  for (int n = 0; n <= nmax; ++n) m(n, n) = double(n);
  return m;
}
// x / x0 = a + a^+
inline Matrix position(int nmax) {
  const Matrix a = annihilation(nmax);
  return a + a.adjoint();
}

}  // namespace fock

// Internal-space factors of the expansion. v1 and v2 carry the cos(theta)
// projections; the eta and (a + a^+) factors are attached on the joint space.
struct PerturbationOps {
  Operator v1;  // (1/2) cos(theta) Omega zeta'  sigma^+ + h.c.
  Operator v2;  // (1/2) cos^2(theta) Omega zeta'' sigma^+ + h.c.
  double eta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double cos_theta = 1.0;
  double cos_psi = 1.0;
};

inline Operator build_v1(const PhysParams& p) {
  return two_level::dipole_coupling(std::cos(p.theta) * p.omega * zeta(p.drive).dzeta);
}

inline Operator build_v2(const PhysParams& p) {
  const double c = std::cos(p.theta);
  return two_level::dipole_coupling(c * c * p.omega * zeta(p.drive).d2zeta);
}

inline PerturbationOps perturbation_ops(const PhysParams& p) {
  return {build_v1(p), build_v2(p), p.eta, p.beta, p.gamma, std::cos(p.theta), std::cos(p.psi)};
}

// rho -> A rho B
inline Superoperator sandwich_superop(const Operator& a, const Operator& b) {
  return Superoperator(a.rows(), kron(b.transpose(), a));
}

// The order-th term of L = L0 + L1 + L2 on the truncated joint space.
inline Superoperator build_joint_L(const PhysParams& p, int order) {
  if (p.nmax < 4) throw InvalidParameter("build_joint_L: nmax must be >= 4");
  const int n = p.nmax;
  const Matrix id_m = Matrix::Identity(n + 1, n + 1);
  const Matrix id_i = Matrix::Identity(2, 2);
  const Matrix x = fock::position(n);
  switch (order) {
    case 0: {
      const Operator h = kron(internal_hamiltonian(p), id_m) + kron(id_i, fock::number(n));
      return commutator_superop(h) + lindblad_superop(kron(two_level::sigma(), id_m), p.gamma);
    }
    case 1:
      return commutator_superop(p.eta * kron(build_v1(p), x));
    case 2: {
      const Matrix x2 = x * x;
      const Operator s = kron(two_level::sigma(), id_m);
      const Operator sx = kron(two_level::sigma(), x);
      const Operator sx2 = kron(two_level::sigma(), x2);
      Superoperator k2 = 2.0 * sandwich_superop(sx, sx.adjoint()) -
                         sandwich_superop(sx2, s.adjoint()) - sandwich_superop(s, sx2.adjoint());
      return commutator_superop(0.5 * p.eta * p.eta * kron(build_v2(p), x2)) +
             Complex(0.5 * p.beta * p.gamma * p.eta * p.eta) * k2;
    }
    default:
      throw InvalidParameter("build_joint_L: order must be 0, 1 or 2");
  }
}

// Detector dipole D(x) = exp(-i eta cos(psi) x) sigma expanded to second order.
struct DetectorOps {
  Operator d0;
  Operator d1;
  Operator d2;
};

inline DetectorOps detector_ops(const PhysParams& p, int nmax) {
  const Matrix x = fock::position(nmax);
  const Matrix id_m = Matrix::Identity(nmax + 1, nmax + 1);
  const double c = p.eta * std::cos(p.psi);
  const Operator s = two_level::sigma();
  return {kron(s, id_m), -kI * c * kron(s, x), Complex(-0.5 * c * c) * kron(s, Matrix(x * x))};
}

}  // namespace ionfluor
