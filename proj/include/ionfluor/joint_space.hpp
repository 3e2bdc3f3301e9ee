// joint_space.hpp: perturbation theory around L0 = L_I + L_E on the truncated
// internal (x) motional space, using the product eigenbasis of L0
// (rho^k (x) |n><m|, eigenvalue lambda_k + i(m - n)) instead of dense
// superoperators.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ionfluor/hilbert.hpp"
#include "ionfluor/lamb_dicke.hpp"
#include "ionfluor/model.hpp"

namespace ionfluor {

// Eigen-manifold of L0: internal triplet k with motional coherences |n><n+ell|.
struct Manifold {
  std::size_t internal = 0;
  int ell = 0;
  bool operator==(const Manifold&) const = default;
};

// All manifolds of L0 sharing one eigenvalue (within tolerance).
struct L0Cluster {
  Complex value;
  std::vector<Manifold> members;

  bool contains(std::size_t k, int ell) const {
    return std::find(members.begin(), members.end(), Manifold{k, ell}) != members.end();
  }
};

class JointExpansion {
 public:
  // Internal-eigenbasis components: X = sum_k rho^k (x) M_k.
  using Components = std::array<Matrix, 4>;

  JointExpansion(InternalSystem internal, PerturbationOps pert, int nmax)
      : internal_(std::move(internal)), pert_(std::move(pert)), nmax_(nmax), md_(nmax + 1) {
    if (nmax < 4) throw InvalidParameter("JointExpansion: nmax must be >= 4");
    const Matrix id_m = Matrix::Identity(md_, md_);
    x_ = fock::position(nmax);
    x2_ = x_ * x_;
    h1_ = pert_.eta * kron(pert_.v1, x_);
    h2_ = (0.5 * pert_.eta * pert_.eta) * kron(pert_.v2, x2_);
    s_ = kron(two_level::sigma(), id_m);
    sx_ = kron(two_level::sigma(), x_);
    sx2_ = kron(two_level::sigma(), x2_);
    recoil_ = 0.5 * pert_.beta * pert_.gamma * pert_.eta * pert_.eta;
    tol_ = internal_.eigen.cluster_tol();
  }

  const InternalSystem& internal() const noexcept { return internal_; }
  const PerturbationOps& pert() const noexcept { return pert_; }
  int nmax() const noexcept { return nmax_; }
  Index motional_dim() const noexcept { return md_; }
  Index dim() const noexcept { return 2 * md_; }
  const Matrix& position() const noexcept { return x_; }

  Operator product(const Operator& internal_op, const Matrix& motional_op) const {
    return kron(internal_op, motional_op);
  }

  // Tr_I{X}
  Matrix trace_internal(const Operator& x) const {
    return x.block(0, 0, md_, md_) + x.block(md_, md_, md_, md_);
  }

  Components decompose(const Operator& x) const {
    Components out;
    for (std::size_t k = 0; k < 4; ++k) {
      const Operator& lk = internal_.eigen[k].left;
      Matrix m = Matrix::Zero(md_, md_);
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          if (lk(j, i) != Complex(0.0)) m += lk(j, i) * x.block(i * md_, j * md_, md_, md_);
      out[k] = std::move(m);
    }
    return out;
  }

  Operator compose(const Components& c) const {
    Operator x = Operator::Zero(dim(), dim());
    for (std::size_t k = 0; k < 4; ++k) {
      const Operator& rk = internal_.eigen[k].right;
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          if (rk(i, j) != Complex(0.0)) x.block(i * md_, j * md_, md_, md_) += rk(i, j) * c[k];
    }
    return x;
  }

  Operator apply_l0(const Operator& x) const {
    const Matrix& li = internal_.liouvillian.matrix();
    Operator y = Operator::Zero(dim(), dim());
    for (Index p = 0; p < 4; ++p) {
      const Index pi = p % 2, pj = p / 2;
      for (Index q = 0; q < 4; ++q) {
        if (li(p, q) == Complex(0.0)) continue;
        const Index qi = q % 2, qj = q / 2;
        y.block(pi * md_, pj * md_, md_, md_) += li(p, q) * x.block(qi * md_, qj * md_, md_, md_);
      }
    }
    for (Index r = 0; r < dim(); ++r)
      for (Index c = 0; c < dim(); ++c) y(r, c) += -kI * double((r % md_) - (c % md_)) * x(r, c);
    return y;
  }

  Operator apply_l1(const Operator& x) const { return -kI * (h1_ * x - x * h1_); }

  Operator apply_l2(const Operator& x) const {
    Operator y = -kI * (h2_ * x - x * h2_);
    y += recoil_ * (2.0 * sx_ * x * sx_.adjoint() - sx2_ * x * s_.adjoint() -
                    s_ * x * sx2_.adjoint());
    return y;
  }

  // L0 eigenvalue of manifold (k, ell).
  Complex manifold_value(std::size_t k, int ell) const {
    return internal_.eigen[k].value + kI * double(ell);
  }

  L0Cluster cluster_at(Complex value) const {
    L0Cluster c{value, {}};
    for (std::size_t k = 0; k < 4; ++k)
      for (int ell = -nmax_; ell <= nmax_; ++ell)
        if (std::abs(manifold_value(k, ell) - value) <= tol_) c.members.push_back({k, ell});
    if (c.members.empty()) throw InvalidParameter("cluster_at: value is not an eigenvalue of L0");
    return c;
  }

  L0Cluster cluster_of(std::size_t k, int ell) const { return cluster_at(manifold_value(k, ell)); }

  Operator project(const L0Cluster& c, const Operator& x) const {
    Components comp = decompose(x);
    for (std::size_t k = 0; k < 4; ++k)
      for (Index n = 0; n < md_; ++n)
        for (Index m = 0; m < md_; ++m)
          if (!c.contains(k, int(m - n))) comp[k](n, m) = 0.0;
    return compose(comp);
  }

  // ((1 - P0) / (lambda0 - L0))^power X for the cluster at lambda0.
  Operator reduced_resolvent(const L0Cluster& c, const Operator& x, int power = 1) const {
    Components comp = decompose(x);
    for (std::size_t k = 0; k < 4; ++k)
      for (Index n = 0; n < md_; ++n)
        for (Index m = 0; m < md_; ++m) {
          if (c.contains(k, int(m - n))) {
            comp[k](n, m) = 0.0;
            continue;
          }
          const Complex d = c.value - manifold_value(k, int(m - n));
          comp[k](n, m) /= std::pow(d, power);
        }
    return compose(comp);
  }

  // Order-b correction to the total projector of cluster c applied to X.
  Operator projector_correction(const L0Cluster& c, int order, const Operator& x) const {
    auto p0 = [&](const Operator& y) { return project(c, y); };
    auto q = [&](const Operator& y) { return reduced_resolvent(c, y, 1); };
    auto q2 = [&](const Operator& y) { return reduced_resolvent(c, y, 2); };
    auto l1 = [&](const Operator& y) { return apply_l1(y); };
    auto l2 = [&](const Operator& y) { return apply_l2(y); };
    switch (order) {
      case 0:
        return p0(x);
      case 1:
        return p0(l1(q(x))) + q(l1(p0(x)));
      case 2: {
        const Operator px = p0(x);
        const Operator qx = q(x);
        const Operator q2x = q2(x);
        Operator y = p0(l2(qx)) + q(l2(px));
        y += p0(l1(q(l1(qx)))) + q(l1(p0(l1(qx)))) + q(l1(q(l1(px))));
        y -= p0(l1(p0(l1(q2x)))) + p0(l1(q2(l1(px)))) + q2(l1(p0(l1(px))));
        return y;
      }
      default:
        throw InvalidParameter("projector_correction: order must be 0, 1 or 2");
    }
  }

 private:
  InternalSystem internal_;
  PerturbationOps pert_;
  int nmax_;
  Index md_;
  Matrix x_, x2_;
  Operator h1_, h2_, s_, sx_, sx2_;
  double recoil_ = 0.0;
  double tol_ = 0.0;
};

// Order-by-order steady state rho_st = rho0 mu + rho_1 + rho_2 around a given
// motional state mu in the (degenerate) zero manifold. The in-manifold parts of
// rho_1 and rho_2 are left out: the first vanishes by parity, the second is a
// traceless diagonal that no second-order trace can see.
struct SteadyExpansion {
  std::array<Operator, 3> terms;

  static SteadyExpansion build(const JointExpansion& je, const Matrix& mu) {
    const L0Cluster zero = je.cluster_of(je.internal().steady_index, 0);
    SteadyExpansion s;
    s.terms[0] = je.product(je.internal().steady, mu);
    s.terms[1] = je.reduced_resolvent(zero, je.apply_l1(s.terms[0]));
    s.terms[2] = je.reduced_resolvent(zero, je.apply_l1(s.terms[1]) + je.apply_l2(s.terms[0]));
    return s;
  }
};

}  // namespace ionfluor
