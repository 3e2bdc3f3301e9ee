// oracle.hpp: reference spectrum from the full master equation on a truncated
// Fock space, with the mechanical coupling kept to all orders in eta.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "ionfluor/errors.hpp"
#include "ionfluor/hilbert.hpp"
#include "ionfluor/lamb_dicke.hpp"
#include "ionfluor/model.hpp"

namespace ionfluor {

struct QuadratureRule {
  RealVector nodes;
  RealVector weights;
};

// Gauss-Legendre rule on [-1, 1] from the Jacobi matrix (Golub-Welsch).
inline QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw InvalidParameter("gauss_legendre: order must be >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  QuadratureRule q{es.eigenvalues(), RealVector(order)};
  for (int k = 0; k < order; ++k) q.weights(k) = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  return q;
}

// Emission pattern N(u) = a + b u^2 on u = cos(angle to the trap axis), fixed by
// int N = 1 and int u^2 N = beta. The dipole pattern 3(1 + u^2)/8 is beta = 2/5.
struct EmissionPattern {
  double a = 0.375;
  double b = 0.375;

  static EmissionPattern for_beta(double beta) {
    const double b = 45.0 / 8.0 * (beta - 1.0 / 3.0);
    const EmissionPattern n{0.5 * (1.0 - 2.0 * b / 3.0), b};
    if (n.a < -1e-15 || n.a + n.b < -1e-15)
      throw InvalidParameter("oracle: beta = " + std::to_string(beta) +
                             " has no non-negative quadratic emission pattern (needs 0.2 <= beta <= 0.6)");
    return n;
  }
  double operator()(double u) const { return a + b * u * u; }
};

struct ExactOptions {
  int quadrature_order = 16;
  bool auto_raise = true;  // grow nmax by 4 until the truncation guard passes
  int nmax_cap = 60;
};

struct ExactModel {
  PhysParams params;  // nmax as finally used
  Superoperator liouvillian;
  Operator steady;
  Operator detector;  // exp(-i eta cos(psi) x) sigma
  QuadratureRule quadrature;

  Index hdim() const { return liouvillian.hdim(); }
};

namespace detail {

// f(x) for the truncated position operator, through its eigendecomposition.
template <class F>
Matrix position_function(int nmax, F f) {
  const Eigen::MatrixXd x = fock::position(nmax).real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x);
  Vector d(x.rows());
  for (Index i = 0; i < x.rows(); ++i) d(i) = f(es.eigenvalues()(i));
  const Matrix v = es.eigenvectors().cast<Complex>();
  return v * d.asDiagonal() * v.transpose();
}

inline Superoperator exact_liouvillian(const PhysParams& p, const QuadratureRule& q) {
  const int n = p.nmax;
  const Matrix id_m = Matrix::Identity(n + 1, n + 1);
  const double kc = p.eta * std::cos(p.theta);
  Matrix z;
  if (p.drive.kind == DriveKind::TravelingWave) {
    z = position_function(n, [&](double xi) { return std::exp(kI * kc * xi); });
  } else {
    z = position_function(n, [&](double xi) { return Complex(std::cos(kc * xi + p.drive.phi)); });
  }
  const Operator h = p.delta * kron(two_level::ground(), id_m) +
                     kron(Matrix::Identity(2, 2), fock::number(n)) +
                     0.5 * p.omega * (kron(two_level::sigma_dag(), z) + kron(two_level::sigma(), Matrix(z.adjoint())));
  Superoperator l = commutator_superop(h);
  const EmissionPattern pattern = EmissionPattern::for_beta(p.beta);
  for (Index j = 0; j < q.nodes.size(); ++j) {
    const double u = q.nodes(j);
    const Matrix recoil = position_function(n, [&](double xi) { return std::exp(kI * p.eta * u * xi); });
    l += lindblad_superop(kron(two_level::sigma(), recoil), p.gamma * q.weights(j) * pattern(u));
  }
  return l;
}

// Solves L rho = 0 with Tr rho = 1 through the bordered matrix L + r t^+.
inline Operator exact_steady(const Superoperator& l) {
  const Index hd = l.hdim();
  const Vector t = vec(Operator::Identity(hd, hd));
  Operator seed = Operator::Zero(hd, hd);
  seed(0, 0) = 1.0;  // |g>|0>
  const Vector r = vec(seed);
  const Matrix a = l.matrix() + r * t.adjoint();
  Eigen::PartialPivLU<Matrix> lu(a);
  const Operator rho = unvec(lu.solve(r), hd);
  if (!rho.allFinite()) throw NumericalError("oracle: steady-state solve failed");
  return rho;
}

inline double top_fock_population(const Operator& rho, int nmax) {
  double p = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int n = nmax - 1; n <= nmax; ++n) {
      const Index k = i * (nmax + 1) + n;
      p += std::abs(rho(k, k).real());
    }
  return p;
}

}  // namespace detail

inline ExactModel build_exact(const PhysParams& p, const ExactOptions& opt = {}) {
  p.validate();
  ExactModel m;
  m.params = p;
  m.quadrature = gauss_legendre(opt.quadrature_order);
  for (;;) {
    m.liouvillian = detail::exact_liouvillian(m.params, m.quadrature);
    m.steady = detail::exact_steady(m.liouvillian);
    check_density_matrix(m.steady, 1e-9);
    const double top = detail::top_fock_population(m.steady, m.params.nmax);
    if (top < 1e-8) break;
    if (!opt.auto_raise || m.params.nmax + 4 > opt.nmax_cap)
      throw TruncationError("oracle: top two Fock levels hold population " + std::to_string(top) +
                            " at nmax = " + std::to_string(m.params.nmax));
    m.params.nmax += 4;
  }
  const double c = p.eta * std::cos(p.psi);
  m.detector = kron(two_level::sigma(),
                    detail::position_function(m.params.nmax, [&](double xi) { return std::exp(-kI * c * xi); }));
  return m;
}

inline double exact_nbar(const ExactModel& m) {
  const int n = m.params.nmax;
  return trace_product(kron(Matrix::Identity(2, 2), fock::number(n)), m.steady).real();
}

inline double exact_elastic_weight(const ExactModel& m) {
  return std::norm(trace_product(m.detector, m.steady));
}

struct ExactSpectrum {
  std::vector<double> curve;  // inelastic part, elastic delta removed
  double elastic_weight = 0.0;
  int shifted_points = 0;  // grid points moved by 1e-9 off an exact pole
};

// Re Tr{D^+ (i w - L)^{-1} (1 - P_st) D rho_st} on many frequencies. The
// deflated Liouvillian L - |rho_st>><<1| is reduced once to Hessenberg form, so
// each frequency costs one O(n^2) Hessenberg solve.
class ExactSpectrumSolver {
 public:
  explicit ExactSpectrumSolver(const ExactModel& m) {
    const Index hd = m.hdim();
    const Vector rho = vec(m.steady);
    const Vector tr = vec(Operator::Identity(hd, hd));
    const Matrix deflated = m.liouvillian.matrix() - rho * tr.adjoint();
    Eigen::HessenbergDecomposition<Matrix> hess(deflated);
    h_ = hess.matrixH();
    const Matrix q = hess.matrixQ();
    const Operator drho = m.detector * m.steady;
    const Vector b = vec(drho) - rho * drho.trace();
    b_ = q.adjoint() * b;
    c_ = q.adjoint() * vec(m.detector);
    elastic_ = exact_elastic_weight(m);
    scale_ = std::max(1.0, h_.cwiseAbs().maxCoeff());
  }

  double elastic_weight() const noexcept { return elastic_; }

  // Returns false when the shifted matrix is numerically singular at w.
  bool try_value(double w, double& out) const {
    const Index n = h_.rows();
    const Complex z = kI * w;
    // Row-streaming elimination of (z - H) with adjacent-row pivoting into upper-triangular u.
    Matrix u(n, n);
    Vector rhs(n);
    Eigen::RowVectorXcd carry = -h_.row(0);
    carry(0) += z;
    Complex carry_b = b_(0);
    for (Index k = 0; k < n; ++k) {
      if (k + 1 < n) {
        Eigen::RowVectorXcd next = Eigen::RowVectorXcd::Zero(n);
        next.tail(n - k) = -h_.row(k + 1).tail(n - k);
        next(k + 1) += z;
        Complex next_b = b_(k + 1);
        if (std::abs(next(k)) > std::abs(carry(k))) {
          std::swap(carry, next);
          std::swap(carry_b, next_b);
        }
        if (std::abs(carry(k)) < 1e-14 * scale_) return false;
        const Complex f = next(k) / carry(k);
        u.row(k).tail(n - k) = carry.tail(n - k);
        rhs(k) = carry_b;
        carry.tail(n - k - 1) = next.tail(n - k - 1) - f * carry.tail(n - k - 1);
        carry(k) = 0.0;
        carry_b = next_b - f * carry_b;
      } else {
        if (std::abs(carry(k)) < 1e-14 * scale_) return false;
        u(k, k) = carry(k);
        rhs(k) = carry_b;
      }
    }
    for (Index k = n - 1; k >= 0; --k) {
      Complex s = rhs(k);
      if (k + 1 < n) s -= (u.row(k).tail(n - k - 1) * rhs.tail(n - k - 1))(0);
      rhs(k) = s / u(k, k);
    }
    out = c_.dot(rhs).real();
    return true;
  }

  double value(double w, int* shifted = nullptr) const {
    double out = 0.0;
    if (try_value(w, out)) return out;
    if (shifted) ++*shifted;
    if (try_value(w + 1e-9, out)) return out;
    throw NearPoleError(kI * w, "oracle: deflated Liouvillian singular at omega = " + std::to_string(w));
  }

 private:
  Matrix h_;
  Vector b_, c_;
  double elastic_ = 0.0;
  double scale_ = 1.0;
};

inline ExactSpectrum exact_spectrum(const ExactModel& m, std::span<const double> grid) {
  const ExactSpectrumSolver solver(m);
  ExactSpectrum out;
  out.elastic_weight = solver.elastic_weight();
  out.curve.reserve(grid.size());
  for (double w : grid) out.curve.push_back(solver.value(w, &out.shifted_points));
  return out;
}

}  // namespace ionfluor
