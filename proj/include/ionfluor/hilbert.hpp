// hilbert.hpp: dense operators, column-stacked superoperators and their
// biorthogonal spectral decomposition.
//
// Conventions: hbar = 1, vec() stacks columns, so A X B <-> (B^T (x) A) vec(X).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ionfluor/errors.hpp"

namespace ionfluor {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Operators on a finite Hilbert space are plain dense complex matrices.
using Operator = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

inline Vector vec(const Operator& op) {
  return Eigen::Map<const Vector>(op.data(), op.size());
}

inline Operator unvec(const Vector& v, Index dim) {
  if (v.size() != dim * dim) throw InvalidParameter("unvec: size is not dim^2");
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Tr{A B} without forming the product.
inline Complex trace_product(const Operator& a, const Operator& b) {
  return (a.transpose().array() * b.array()).sum();
}

// Matrix infinity norm (max absolute row sum).
inline double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline bool is_hermitian(const Operator& op, double tol = 1e-10) {
  return op.rows() == op.cols() && (op - op.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Trace one, Hermitian, positive semidefinite; throws NumericalError otherwise.
inline void check_density_matrix(const Operator& rho, double tol = 1e-10) {
  if (rho.rows() != rho.cols()) throw NumericalError("density matrix is not square");
  if (std::abs(rho.trace() - 1.0) > tol)
    throw NumericalError("density matrix trace deviates from 1");
  if (!is_hermitian(rho, tol)) throw NumericalError("density matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (rho + rho.adjoint())),
                                           Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol)
    throw NumericalError("density matrix has a negative eigenvalue");
}

// Linear map on operators of dimension hdim, stored as an hdim^2 x hdim^2
// matrix acting on column-stacked operators.
class Superoperator {
 public:
  Superoperator() = default;
  Superoperator(Index hdim, Matrix matrix) : hdim_(hdim), matrix_(std::move(matrix)) {
    if (matrix_.rows() != hdim * hdim || matrix_.cols() != hdim * hdim)
      throw InvalidParameter("superoperator matrix must be hdim^2 x hdim^2");
  }

  static Superoperator zero(Index hdim) {
    return Superoperator(hdim, Matrix::Zero(hdim * hdim, hdim * hdim));
  }

  Index hdim() const noexcept { return hdim_; }
  const Matrix& matrix() const noexcept { return matrix_; }

  Operator apply(const Operator& x) const {
    check_dim(x);
    return unvec(matrix_ * vec(x), hdim_);
  }

  // Left action: the operator Y with Tr{Y X} = Tr{A L(X)} for all X.
  Operator apply_left(const Operator& a) const {
    check_dim(a);
    Vector w = matrix_.transpose() * vec(Operator(a.transpose()));
    return unvec(w, hdim_).transpose();
  }

  Superoperator& operator+=(const Superoperator& o) {
    if (o.hdim_ != hdim_) throw InvalidParameter("superoperator dimension mismatch");
    matrix_ += o.matrix_;
    return *this;
  }
  friend Superoperator operator+(Superoperator a, const Superoperator& b) { return a += b; }
  friend Superoperator operator-(Superoperator a, const Superoperator& b) {
    if (a.hdim_ != b.hdim_) throw InvalidParameter("superoperator dimension mismatch");
    a.matrix_ -= b.matrix_;
    return a;
  }
  friend Superoperator operator*(Complex s, Superoperator a) {
    a.matrix_ *= s;
    return a;
  }

 private:
  void check_dim(const Operator& x) const {
    if (x.rows() != hdim_ || x.cols() != hdim_)
      throw InvalidParameter("operator dimension does not match superoperator");
  }

  Index hdim_ = 0;
  Matrix matrix_;
};

// rho -> -i (H rho - rho H)
inline Superoperator commutator_superop(const Operator& h) {
  if (h.rows() != h.cols()) throw InvalidParameter("commutator_superop: H must be square");
  const Index d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  return Superoperator(d, -kI * (kron(id, h) - kron(h.transpose(), id)));
}

// rho -> (rate/2)(2 J rho J^+ - J^+J rho - rho J^+J)
inline Superoperator lindblad_superop(const Operator& jump, double rate) {
  if (jump.rows() != jump.cols()) throw InvalidParameter("lindblad_superop: jump must be square");
  if (!(rate >= 0.0)) throw InvalidParameter("lindblad_superop: negative rate");
  const Index d = jump.rows();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix jdj = jump.adjoint() * jump;
  Matrix m = 2.0 * kron(jump.conjugate(), jump) - kron(id, jdj) - kron(jdj.transpose(), id);
  return Superoperator(d, (0.5 * rate) * m);
}

// Eigen-decomposition of a diagonalizable matrix with biorthonormal left
// rows and right columns: left.row(i) * right.col(j) = delta_ij.
struct BiorthogonalEigen {
  Vector values;
  Matrix right;
  Matrix left;
  // Indices grouped by eigenvalue cluster, in the sorted order of values.
  std::vector<std::vector<std::size_t>> clusters;
  double cluster_tol = 0.0;
  double residual = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }

  std::optional<std::size_t> cluster_of(Complex lambda) const {
    for (std::size_t c = 0; c < clusters.size(); ++c)
      if (std::abs(values(static_cast<Index>(clusters[c].front())) - lambda) <= cluster_tol)
        return c;
    return std::nullopt;
  }
};

namespace detail {

inline std::vector<std::vector<std::size_t>> cluster_sorted(const Vector& vals, double tol) {
  const std::size_t n = static_cast<std::size_t>(vals.size());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(vals(Index(i)) - vals(Index(j))) <= tol) parent[find(j)] = find(i);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

}  // namespace detail

inline BiorthogonalEigen biorthogonal_eigen(const Matrix& a, double cluster_rel_tol = 1e-8) {
  if (a.rows() != a.cols()) throw InvalidParameter("biorthogonal_eigen: matrix must be square");
  const Index n = a.rows();
  BiorthogonalEigen out;
  if (n == 0) return out;
  const double scale = std::max(1.0, inf_norm(a));
  out.cluster_tol = cluster_rel_tol * scale;

  Eigen::ComplexEigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");

  // Cluster, replace each cluster by its mean, then order: real part
  // descending, ties (within tolerance) by imaginary part ascending.
  Vector raw = es.eigenvalues();
  Matrix raw_vecs = es.eigenvectors();
  const auto raw_groups = detail::cluster_sorted(raw, out.cluster_tol);
  for (const auto& group : raw_groups) {
    Complex mean{0.0, 0.0};
    for (auto i : group) mean += raw(Index(i));
    mean /= double(group.size());
    for (auto i : group) raw(Index(i)) = mean;
    if (group.size() == 1) continue;
    // Degenerate cluster: take the eigenspace from the numerical kernel.
    const Matrix shifted = a - mean * Matrix::Identity(n, n);
    Eigen::BDCSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
    const Index m = Index(group.size());
    for (Index k = 0; k < m; ++k)
      raw_vecs.col(Index(group[std::size_t(k)])) = svd.matrixV().col(n - m + k);
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return raw(i).real() > raw(j).real(); });
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s + 1;
    while (e < order.size() &&
           std::abs(raw(order[e]).real() - raw(order[s]).real()) <= out.cluster_tol)
      ++e;
    std::stable_sort(order.begin() + long(s), order.begin() + long(e),
                     [&](Index i, Index j) { return raw(i).imag() < raw(j).imag(); });
    s = e;
  }
  Vector vals(n);
  Matrix vecs(n, n);
  for (Index k = 0; k < n; ++k) {
    vals(k) = raw(order[std::size_t(k)]);
    vecs.col(k) = raw_vecs.col(order[std::size_t(k)]);
  }
  out.clusters = detail::cluster_sorted(vals, 0.5 * out.cluster_tol);

  Eigen::FullPivLU<Matrix> lu(vecs);
  if (!lu.isInvertible())
    throw DefectiveMatrixError(std::numeric_limits<double>::infinity(),
                               "eigenvector matrix is singular (defective matrix)");
  Matrix left = lu.inverse();

  const Matrix recon = vecs * vals.asDiagonal() * left;
  out.residual = (recon - a).norm() / std::max(a.norm(), 1e-300);
  if (!(out.residual <= 1e-6))
    throw DefectiveMatrixError(out.residual, "matrix is defective to working precision");

  // Deterministic phase: the largest right component is real and positive,
  // with unit 2-norm; left rows absorb the inverse scale.
  for (Index k = 0; k < n; ++k) {
    Index imax = 0;
    vecs.col(k).cwiseAbs().maxCoeff(&imax);
    const Complex big = vecs(imax, k);
    const Complex s = (std::abs(big) / big) / vecs.col(k).norm();
    vecs.col(k) *= s;
    left.row(k) /= s;
  }
  out.values = std::move(vals);
  out.right = std::move(vecs);
  out.left = std::move(left);
  return out;
}

// Biorthonormal eigen-triplets of a superoperator: Tr{left_i right_j} = delta_ij.
struct EigenTriplet {
  Complex value;
  Operator right;
  Operator left;
};

class EigenSystem {
 public:
  EigenSystem() = default;
  EigenSystem(std::vector<EigenTriplet> triplets, std::vector<std::vector<std::size_t>> clusters,
              double cluster_tol)
      : triplets_(std::move(triplets)), clusters_(std::move(clusters)), cluster_tol_(cluster_tol) {}

  std::size_t size() const noexcept { return triplets_.size(); }
  const EigenTriplet& operator[](std::size_t i) const { return triplets_.at(i); }
  const std::vector<EigenTriplet>& triplets() const noexcept { return triplets_; }
  const std::vector<std::vector<std::size_t>>& clusters() const noexcept { return clusters_; }
  double cluster_tol() const noexcept { return cluster_tol_; }

  // Indices of the triplets whose eigenvalue equals lambda within the cluster tolerance.
  std::span<const std::size_t> cluster_indices(Complex lambda) const {
    for (const auto& c : clusters_)
      if (std::abs(triplets_[c.front()].value - lambda) <= cluster_tol_) return c;
    throw InvalidParameter("eigenvalue (" + std::to_string(lambda.real()) + ", " +
                           std::to_string(lambda.imag()) + ") is not in the eigensystem");
  }

  bool contains(Complex lambda) const {
    return std::any_of(clusters_.begin(), clusters_.end(), [&](const auto& c) {
      return std::abs(triplets_[c.front()].value - lambda) <= cluster_tol_;
    });
  }

  // Index of the unique eigenvalue with |lambda| < tol; throws otherwise.
  std::size_t steady_index(double tol = 1e-10) const {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < triplets_.size(); ++i) {
      if (std::abs(triplets_[i].value) < tol) {
        if (found) throw NumericalError("zero eigenvalue is degenerate: steady state not unique");
        found = i;
      }
    }
    if (!found) throw NumericalError("no zero eigenvalue: not a trace-preserving generator");
    return *found;
  }

 private:
  std::vector<EigenTriplet> triplets_;
  std::vector<std::vector<std::size_t>> clusters_;
  double cluster_tol_ = 0.0;
};

// Eigenvalues sorted by real part descending then imaginary part ascending.
// A nondegenerate zero eigenvalue gets a trace-one right element, so its left
// element is the identity for a trace-preserving generator.
inline EigenSystem spectral_decompose(const Superoperator& l) {
  const Index d = l.hdim();
  BiorthogonalEigen be = biorthogonal_eigen(l.matrix());
  std::vector<EigenTriplet> triplets;
  triplets.reserve(be.size());
  for (Index k = 0; k < be.values.size(); ++k) {
    EigenTriplet t{be.values(k), unvec(be.right.col(k), d),
                   unvec(Vector(be.left.row(k).transpose()), d).transpose()};
    triplets.push_back(std::move(t));
  }
  for (const auto& c : be.clusters) {
    if (c.size() != 1) continue;
    auto& t = triplets[c.front()];
    if (std::abs(t.value) >= 1e-10) continue;
    const Complex tr = t.right.trace();
    if (std::abs(tr) < 1e-12) continue;
    t.right /= tr;
    t.left *= tr;
  }
  return EigenSystem(std::move(triplets), std::move(be.clusters), be.cluster_tol);
}

// P^lambda X = sum over the eigenvalue cluster of rho^k Tr{rhocheck^k X}.
inline Operator projector_apply(const EigenSystem& sys, Complex lambda, const Operator& x) {
  Operator out = Operator::Zero(x.rows(), x.cols());
  for (std::size_t i : sys.cluster_indices(lambda)) {
    const auto& t = sys[i];
    out += t.right * trace_product(t.left, x);
  }
  return out;
}

// Y = (z - L)^{-1} (1 - P_excl) X with P_excl Y = 0, where P_excl projects on
// the listed eigenvalues of L. z may coincide only with excluded eigenvalues.
inline Operator constrained_resolvent(const Superoperator& l, const EigenSystem& sys, Complex z,
                                      std::span<const Complex> exclude, const Operator& x,
                                      double pole_tol = 1e-9) {
  const Index d = l.hdim();
  const Index n = d * d;
  std::vector<bool> excluded(sys.size(), false);
  for (Complex e : exclude)
    for (std::size_t i : sys.cluster_indices(e)) excluded[i] = true;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (!excluded[i] && std::abs(z - sys[i].value) < pole_tol)
      throw NearPoleError(sys[i].value,
                          "constrained_resolvent: z hits the non-excluded eigenvalue (" +
                              std::to_string(sys[i].value.real()) + ", " +
                              std::to_string(sys[i].value.imag()) + ")");
  }
  Matrix a = z * Matrix::Identity(n, n) - l.matrix();
  Matrix proj = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (!excluded[i]) continue;
    const auto& t = sys[i];
    Matrix pi = vec(t.right) * vec(Operator(t.left.transpose())).transpose();
    proj += pi;
    a += (1.0 - (z - t.value)) * pi;
  }
  const Vector rhs = vec(x) - proj * vec(x);
  Eigen::PartialPivLU<Matrix> lu(a);
  Vector y = lu.solve(rhs);
  y -= proj * y;
  return unvec(y, d);
}

}  // namespace ionfluor
