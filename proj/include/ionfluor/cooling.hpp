// cooling.hpp: second-order effective dynamics inside the degenerate
// manifolds rho_0 (x) |n><n+ell| of L0, the heating/cooling rates read off the
// population generator, and the resulting thermal motional state.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "ionfluor/errors.hpp"
#include "ionfluor/hilbert.hpp"
#include "ionfluor/joint_space.hpp"

namespace ionfluor {

// First Fock index n of the basis mu_n = |n><n+ell| of the ell-manifold, and its size.
inline int manifold_first(int ell) { return ell < 0 ? -ell : 0; }
inline int manifold_size(int ell, int nmax) { return nmax + 1 - std::abs(ell); }

// W^(ell)_{ab} = Tr{ (rhocheck_0 (x) mucheck_a) [L2 + L1 Q L1] (rho_0 (x) mu_b) },
// Q the reduced resolvent of L0 at i*ell.
inline Matrix effective_generator(const JointExpansion& je, int ell) {
  if (ell < -1 || ell > 1) throw InvalidParameter("effective_generator: ell must be -1, 0 or 1");
  const std::size_t st = je.internal().steady_index;
  const L0Cluster cluster = je.cluster_of(st, ell);
  const int first = manifold_first(ell);
  const int size = manifold_size(ell, je.nmax());
  const Index md = je.motional_dim();
  Matrix w(size, size);
  for (int b = 0; b < size; ++b) {
    Matrix mu = Matrix::Zero(md, md);
    mu(first + b, first + b + ell) = 1.0;
    const Operator x = je.product(je.internal().steady, mu);
    const Operator y = je.apply_l2(x) + je.apply_l1(je.reduced_resolvent(cluster, je.apply_l1(x)));
    const Matrix m = je.decompose(y)[st];
    for (int a = 0; a < size; ++a) w(a, b) = m(first + a, first + a + ell);
  }
  return w;
}

struct Rates {
  double a_plus = 0.0;
  double a_minus = 0.0;
};

// Reads A+ = W_{1,0}, A- = W_{0,1} from the population generator and checks
// the birth-death structure W_{n+1,n} = (n+1) A+, W_{n-1,n} = n A-.
inline Rates rates(const Matrix& w0, double rel_tol = 1e-6) {
  const Index n = w0.rows();
  if (n < 2 || w0.cols() != n) throw InvalidParameter("rates: W^(0) must be square, size >= 2");
  const double scale = std::max(w0.cwiseAbs().maxCoeff(), 1e-300);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (std::abs(i - j) > 1 && std::abs(w0(i, j)) > 1e-10 * scale)
        throw NumericalError("rates: W^(0) is not tridiagonal (model violation)");
      if (std::abs(w0(i, j).imag()) > 1e-10 * scale)
        throw NumericalError("rates: W^(0) has a non-real entry (model violation)");
    }
  Rates r{w0(1, 0).real(), w0(0, 1).real()};
  const double floor = 1e-14 * scale;
  if (r.a_plus < -floor || r.a_minus < -floor) throw NumericalError("rates: negative transition rate");
  r.a_plus = std::max(r.a_plus, 0.0);
  r.a_minus = std::max(r.a_minus, 0.0);
  for (Index k = 1; k + 1 < n; ++k) {
    const double up = w0(k + 1, k).real() / double(k + 1);
    const double down = w0(k, k + 1).real() / double(k + 1);
    if (std::abs(up - r.a_plus) > rel_tol * std::max(r.a_plus, floor) + floor ||
        std::abs(down - r.a_minus) > rel_tol * std::max(r.a_minus, floor) + floor)
      throw NumericalError("rates: ladder rates are not proportional to n (model violation)");
  }
  return r;
}

// Thermal occupation p_n = (1/(1+nbar)) (nbar/(1+nbar))^n on the truncated Fock space.
inline Matrix thermal_state(double nbar, int nmax, double max_tail = 1e-8) {
  if (!(nbar >= 0.0)) throw InvalidParameter("thermal_state: nbar must be >= 0");
  if (nmax < 0) throw InvalidParameter("thermal_state: nmax must be >= 0");
  Matrix mu = Matrix::Zero(nmax + 1, nmax + 1);
  const double q = nbar / (1.0 + nbar);
  double p = 1.0 / (1.0 + nbar);
  double sum = 0.0;
  for (int n = 0; n <= nmax; ++n) {
    mu(n, n) = p;
    sum += p;
    p *= q;
  }
  if (1.0 - sum > max_tail)
    throw TruncationError("thermal_state: nmax = " + std::to_string(nmax) +
                          " truncates a thermal tail of " + std::to_string(1.0 - sum));
  return mu / sum;
}

struct RateData {
  double a_plus = 0.0;
  double a_minus = 0.0;
  double nbar = 0.0;
  std::map<int, Matrix> w_gen;
  // Spectral data of each W^(ell); empty when the generator is defective.
  std::map<int, std::optional<BiorthogonalEigen>> w_eigen;
};

inline RateData cooling_rates(const JointExpansion& je) {
  RateData out;
  for (int ell : {-1, 0, 1}) {
    out.w_gen[ell] = effective_generator(je, ell);
    try {
      out.w_eigen[ell] = biorthogonal_eigen(out.w_gen[ell]);
    } catch (const NumericalError&) {
      out.w_eigen[ell] = std::nullopt;
    }
  }
  const Rates r = rates(out.w_gen.at(0));
  out.a_plus = r.a_plus;
  out.a_minus = r.a_minus;
  if (!(r.a_minus > r.a_plus))
    throw DomainError("no cooling: A- = " + std::to_string(r.a_minus) +
                      " <= A+ = " + std::to_string(r.a_plus) + ", no thermal steady state");
  out.nbar = r.a_plus / (r.a_minus - r.a_plus);
  return out;
}

}  // namespace ionfluor
