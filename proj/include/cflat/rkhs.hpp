#pragma once

#include <memory>

#include <unsupported/Eigen/MatrixFunctions>

#include "basis.hpp"
#include "mobius.hpp"

namespace cflat {

using HVector = Vec;
using HOperator = Mat;

// The degree <= N part of H with its orthonormal harmonic basis and the
// matrices of the twisted generators between neighbouring degrees.
class Truncation {
 public:
  Truncation(std::shared_ptr<const GradedHarmonicBasis> basis, int n_max)
      : d_(basis->dim()), n_max_(n_max), basis_(std::move(basis)) {
    if (n_max_ > basis_->n_max()) throw Error(Errc::InvalidArgument, "basis does not reach the requested degree");
    offset_.push_back(0);
    for (int n = 0; n <= n_max_; ++n) {
      offset_.push_back(offset_.back() + basis_->count(n));
      const auto& h = basis_->degree(n);
      Vec sw(h.table.size());
      for (int k = 0; k < h.table.size(); ++k) sw(k) = std::sqrt(h.table.fact[k]);
      scaled_.push_back(h.coef * sw.asDiagonal());
      ratio_.push_back(fisher_h_ratio_d(d_, n));
    }
    P_.assign(d_, {});
    K_.assign(d_, {});
    for (int mu = 0; mu < d_; ++mu)
      for (int n = 0; n < n_max_; ++n) {
        P_[mu].push_back(raising_block(mu, n));
        K_[mu].push_back(lowering_block(mu, n));
      }
  }

  static Truncation make(int d, int n_max, BasisOptions opt = exact_options()) {
    return Truncation(std::make_shared<const GradedHarmonicBasis>(build_basis(d, n_max, opt)), n_max);
  }
  static BasisOptions exact_options() {
    BasisOptions o;
    o.exact = true;
    return o;
  }

  int dim() const { return d_; }
  int n_max() const { return n_max_; }
  int size() const { return offset_.back(); }
  int offset(int n) const { return offset_.at(n); }
  int count(int n) const { return offset_.at(n + 1) - offset_.at(n); }
  int degree_of_index(int i) const {
    int n = 0;
    while (offset_[n + 1] <= i) ++n;
    return n;
  }
  const GradedHarmonicBasis& basis() const { return *basis_; }
  std::shared_ptr<const GradedHarmonicBasis> basis_ptr() const { return basis_; }

  // Y coefficients in Fisher-scaled monomial coordinates; rows have norm sqrt(ratio(n))
  const Mat& scaled(int n) const { return scaled_.at(n); }
  double ratio(int n) const { return ratio_.at(n); }
  // (Y_{n+1,k}, P_mu Y_{n,l})_H
  const Mat& P(int mu, int n) const { return P_.at(mu).at(n); }
  // (Y_{n,k}, K_mu Y_{n+1,l})_H
  const Mat& K(int mu, int n) const { return K_.at(mu).at(n); }

  // (Y_{n,k}, J_{mu nu} Y_{n,l})_H
  Mat J(int mu, int nu, int n) const {
    const auto& tab = basis_->degree(n).table;
    Mat Z = Mat::Zero(tab.size(), count(n));
    for (int k = 0; k < tab.size(); ++k) {
      const MultiIndex& a = tab.index[k];
      auto add = [&](int from, int to, double c) {
        if (a[from] == 0) return;
        MultiIndex b = a;
        b[from] -= 1;
        b[to] += 1;
        const int t = tab.find(b);
        Z.row(t) += c * a[from] * std::sqrt(tab.fact[t] / tab.fact[k]) * scaled_[n].col(k).transpose();
      };
      add(nu, mu, 1.0);
      add(mu, nu, -1.0);
    }
    return scaled_[n] * Z / ratio_[n];
  }

 private:
  Mat raising_block(int mu, int n) const {
    const auto& t0 = basis_->degree(n).table;
    const auto& t1 = basis_->degree(n + 1).table;
    const double a = alpha_d(d_);
    Mat Z = Mat::Zero(t1.size(), count(n));
    for (int k = 0; k < t0.size(); ++k) {
      const MultiIndex& al = t0.index[k];
      MultiIndex b = al;
      b[mu] += 1;
      int t = t1.find(b);
      Z.row(t) += 2.0 * (n + a) * std::sqrt(t1.fact[t] / t0.fact[k]) * scaled_[n].col(k).transpose();
      if (al[mu] == 0) continue;
      for (int i = 0; i < d_; ++i) {
        MultiIndex c = al;
        c[mu] -= 1;
        c[i] += 2;
        t = t1.find(c);
        Z.row(t) -= al[mu] * std::sqrt(t1.fact[t] / t0.fact[k]) * scaled_[n].col(k).transpose();
      }
    }
    return scaled_[n + 1] * Z / ratio_[n + 1];
  }

  Mat lowering_block(int mu, int n) const {
    const auto& t0 = basis_->degree(n).table;
    const auto& t1 = basis_->degree(n + 1).table;
    Mat Z = Mat::Zero(t0.size(), count(n + 1));
    for (int k = 0; k < t1.size(); ++k) {
      const MultiIndex& al = t1.index[k];
      if (al[mu] == 0) continue;
      MultiIndex b = al;
      b[mu] -= 1;
      const int t = t0.find(b);
      Z.row(t) += al[mu] * std::sqrt(t0.fact[t] / t1.fact[k]) * scaled_[n + 1].col(k).transpose();
    }
    return scaled_[n] * Z / ratio_[n];
  }

  int d_, n_max_;
  std::shared_ptr<const GradedHarmonicBasis> basis_;
  std::vector<int> offset_;
  std::vector<Mat> scaled_;
  std::vector<double> ratio_;
  std::vector<std::vector<Mat>> P_, K_;
};

// ---- kernel and evaluation vectors ----

inline double kernel(const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  if (!(x.squaredNorm() < 1.0) || !(y.squaredNorm() < 1.0)) throw Error(Errc::OutsideDisk, "kernel needs x, y in D");
  const double q = 1.0 - 2.0 * x.dot(y) + x.squaredNorm() * y.squaredNorm();
  return std::pow(q, -alpha_d(d));
}

// Partial sum of K(x,y) over degrees <= N via Gegenbauer polynomials
inline double kernel_partial(const Vec& x, const Vec& y, int N) {
  const int d = static_cast<int>(x.size());
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return 1.0;
  const double t = std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
  double s = 0.0, p = 1.0;
  for (int n = 0; n <= N; ++n, p *= nx * ny) s += p * gegenbauer(n, t, d);
  return s;
}

// sum_{n>N} C_n(1) rho^n, which bounds the discarded kernel mass at |x||y| = rho
inline double gegenbauer_tail(int d, int N, double rho) {
  if (rho <= 0.0) return 0.0;
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (int n = N + 1;; ++n) {
    const double term = std::exp(log_pochhammer(d - 2.0, n) - std::lgamma(n + 1.0) + n * std::log(rho));
    s += term;
    if (term < 1e-30 * s || n > N + 100000) break;
  }
  return s;
}

inline double e_vector_tail(int d, int N, double norm_a) { return std::sqrt(gegenbauer_tail(d, N, norm_a * norm_a)); }

inline HVector e_vector(const Vec& a, const Truncation& t) {
  if (a.size() != t.dim()) throw Error(Errc::DimensionMismatch, "e_vector: point dimension");
  if (!(a.squaredNorm() < 1.0)) throw Error(Errc::OutsideDisk, "e_vector needs |a| < 1");
  HVector v(t.size());
  for (int n = 0; n <= t.n_max(); ++n) v.segment(t.offset(n), t.count(n)) = t.basis().evaluate(n, a);
  return v;
}

// ---- operators ----

inline HOperator op_dilation(double r, const Truncation& t) {
  if (!(r > 0.0)) throw Error(Errc::NonPositiveDilation, "r must be > 0");
  HOperator D = HOperator::Zero(t.size(), t.size());
  const double a = alpha_d(t.dim());
  for (int n = 0; n <= t.n_max(); ++n)
    D.diagonal().segment(t.offset(n), t.count(n)).setConstant(std::pow(r, n + a));
  return D;
}

// sum_{n<=N} A_{d,n} r^{n+alpha}
inline double dilation_trace_partial(int d, double r, int N) {
  double s = 0.0;
  for (int n = 0; n <= N; ++n) s += double(dim_harm(d, n)) * std::pow(r, n + alpha_d(d));
  return s;
}

inline double dilation_trace_closed(int d, double r) {
  return std::pow(r, alpha_d(d)) * (1.0 + r) / std::pow(1.0 - r, d - 1);
}

// Geometric majorant of sum_{n>N} A_{d,n} r^{n+alpha}; A_{n+1}/A_n decreases in n.
inline double dilation_trace_tail(int d, double r, int N) {
  const double a1 = double(dim_harm(d, N + 1)), a2 = double(dim_harm(d, N + 2));
  const double q = r * a2 / a1;
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return a1 * std::pow(r, N + 1 + alpha_d(d)) / (1.0 - q);
}

namespace detail {

struct Givens {
  int p, q;
  double theta;  // rotation by theta in the (p,q) plane: e_p -> cos e_p + sin e_q
};

// R = G_1 G_2 ... G_k
inline std::vector<Givens> givens_factors(const Mat& R) {
  const int d = static_cast<int>(R.rows());
  Mat A = R;
  std::vector<Givens> gs;
  for (int j = 0; j < d - 1; ++j)
    for (int i = d - 1; i > j; --i) {
      const double x = A(i - 1, j), y = A(i, j);
      if (y == 0.0 && x >= 0.0) continue;
      const double th = std::atan2(y, x);
      const double c = std::cos(th), s = std::sin(th);
      // left-multiply by the inverse rotation in plane (i-1, i)
      for (int k = 0; k < d; ++k) {
        const double u = A(i - 1, k), v = A(i, k);
        A(i - 1, k) = c * u + s * v;
        A(i, k) = -s * u + c * v;
      }
      gs.push_back({i - 1, i, th});
    }
  return gs;
}

}  // namespace detail

inline void require_rotation(const Mat& R) {
  const int d = static_cast<int>(R.rows());
  if (R.cols() != d || (R.transpose() * R - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol::grp ||
      R.determinant() < 0.0)
    throw Error(Errc::NonOrthogonalRotation, "R must lie in SO(d)");
}

// Block-diagonal action f -> f(R^{-1} x), built from exponentials of the J blocks.
inline HOperator op_rotation(const Mat& R, const Truncation& t) {
  require_rotation(R);
  if (R.rows() != t.dim()) throw Error(Errc::DimensionMismatch, "rotation size");
  const auto gs = detail::givens_factors(R);
  HOperator U = HOperator::Zero(t.size(), t.size());
  for (int n = 0; n <= t.n_max(); ++n) {
    Mat B = Mat::Identity(t.count(n), t.count(n));
    if (n > 0)
      for (const auto& g : gs) {
        // rotation by theta in (p,q) is exp(-theta J_pq) with J_pq = E_pq - E_qp
        Mat X = -g.theta * t.J(g.p, g.q, n);
        B = B * Mat(X.exp());
      }
    U.block(t.offset(n), t.offset(n), t.count(n), t.count(n)) = B;
  }
  return U;
}

// Same operator by substituting R^{-1}x into the monomials.
inline HOperator op_rotation_substitution(const Mat& R, const Truncation& t) {
  require_rotation(R);
  const int d = t.dim();
  const Mat Ri = R.transpose();
  HOperator U = HOperator::Zero(t.size(), t.size());
  for (int n = 0; n <= t.n_max(); ++n) {
    const auto& tab = t.basis().degree(n).table;
    const int M = tab.size();
    // S.col(k): coefficients of (R^{-1}x)^alpha_k
    std::vector<DPoly> lin;
    for (int i = 0; i < d; ++i) {
      DPoly p(d);
      for (int j = 0; j < d; ++j) {
        MultiIndex e(d, 0);
        e[j] = 1;
        p.add_term(e, Ri(i, j));
      }
      lin.push_back(p);
    }
    std::map<MultiIndex, DPoly> memo;
    memo.emplace(MultiIndex(d, 0), DPoly::constant(d, 1.0));
    auto get = [&](auto&& self, const MultiIndex& b) -> const DPoly& {
      auto it = memo.find(b);
      if (it != memo.end()) return it->second;
      int i = 0;
      while (b[i] == 0) ++i;
      MultiIndex c = b;
      c[i] -= 1;
      DPoly v = self(self, c) * lin[i];
      return memo.emplace(b, std::move(v)).first->second;
    };
    Mat S = Mat::Zero(M, M);
    for (int k = 0; k < M; ++k)
      for (const auto& [b, c] : get(get, tab.index[k]).terms())
        S(tab.find(b), k) = c * std::sqrt(tab.fact[tab.find(b)] / tab.fact[k]);
    U.block(t.offset(n), t.offset(n), t.count(n), t.count(n)) = t.scaled(n) * S * t.scaled(n).transpose() / t.ratio(n);
  }
  return U;
}

// exp(sum_mu b_mu P_mu), truncated; exact entrywise on the truncation.
inline HOperator op_raising_exp(const Vec& b, const Truncation& t) {
  const int N = t.n_max();
  HOperator E = HOperator::Zero(t.size(), t.size());
  std::vector<Mat> X;
  for (int n = 0; n < N; ++n) {
    Mat x = Mat::Zero(t.count(n + 1), t.count(n));
    for (int mu = 0; mu < t.dim(); ++mu)
      if (b(mu) != 0.0) x += b(mu) * t.P(mu, n);
    X.push_back(std::move(x));
  }
  for (int n = 0; n <= N; ++n) {
    Mat cur = Mat::Identity(t.count(n), t.count(n));
    E.block(t.offset(n), t.offset(n), t.count(n), t.count(n)) = cur;
    for (int m = n + 1; m <= N; ++m) {
      cur = X[m - 1] * cur / double(m - n);
      E.block(t.offset(m), t.offset(n), t.count(m), t.count(n)) = cur;
    }
  }
  return E;
}

// exp(sum_mu c_mu K_mu); maps the truncation into itself.
inline HOperator op_lowering_exp(const Vec& c, const Truncation& t) {
  const int N = t.n_max();
  HOperator F = HOperator::Zero(t.size(), t.size());
  std::vector<Mat> W;
  for (int n = 0; n < N; ++n) {
    Mat w = Mat::Zero(t.count(n), t.count(n + 1));
    for (int mu = 0; mu < t.dim(); ++mu)
      if (c(mu) != 0.0) w += c(mu) * t.K(mu, n);
    W.push_back(std::move(w));
  }
  for (int m = 0; m <= N; ++m) {
    Mat cur = Mat::Identity(t.count(m), t.count(m));
    F.block(t.offset(m), t.offset(m), t.count(m), t.count(m)) = cur;
    for (int n = m - 1; n >= 0; --n) {
      cur = W[n] * cur / double(m - n);
      F.block(t.offset(n), t.offset(m), t.count(n), t.count(m)) = cur;
    }
  }
  return F;
}

// Direction of each Gauss factor in terms of the generator exponentials.
struct RhoSigns {
  double translation = +1.0;
  double sct = +1.0;
};

inline HOperator op_rho(const MobiusMatrix& g, const Truncation& t, RhoSigns signs = {}) {
  if (g.d != t.dim()) throw Error(Errc::DimensionMismatch, "op_rho dimension");
  const auto gd = gauss_decompose(g);
  return op_raising_exp(signs.translation * gd.b, t) * op_dilation(gd.lambda, t) * op_rotation(gd.R, t) *
         op_lowering_exp(signs.sct * gd.c, t);
}

struct RhoValidation {
  double max_ratio = 0.0;  // error / analytic tail bound
  double max_error = 0.0;
};

// ||rho(g) e(x) - Omega_g(x)^alpha e(gx)|| against ||(1 - P_N) E_x||
inline RhoValidation validate_rho(const MobiusMatrix& g, const Truncation& t, const std::vector<Vec>& xs,
                                  RhoSigns signs = {}) {
  const HOperator R = op_rho(g, t, signs);
  const double a = alpha_d(t.dim());
  RhoValidation out;
  for (const Vec& x : xs) {
    const Vec gx = apply(g, x);
    const Vec lhs = R * e_vector(x, t);
    const Vec rhs = std::pow(conformal_factor(g, x), a) * e_vector(gx, t);
    const double err = (lhs - rhs).norm();
    // rounding allowance: a few ulps of the vectors involved
    const double bound = e_vector_tail(t.dim(), t.n_max(), x.norm()) + 64.0 * 2.2e-16 * rhs.norm();
    out.max_error = std::max(out.max_error, err);
    out.max_ratio = std::max(out.max_ratio, err / bound);
  }
  return out;
}

}  // namespace cflat
