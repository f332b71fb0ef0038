#pragma once

#include <complex>

#include "rkhs.hpp"

namespace cflat {

struct ContractionMatrix {
  int d = 3;
  int n_max = 0;
  Mat C;
  double sigma1 = 0.0, sigma2 = 0.0;
  std::string source;
};

namespace detail {

// rank of a multi-index in the ascending lexicographic order of multi_indices(d, n)
class LexRanker {
 public:
  LexRanker(int d, int n_max) : d_(d), n_max_(n_max) {
    comp_.assign(d + 1, std::vector<long long>(n_max + 1, 0));
    for (int p = 1; p <= d; ++p)
      for (int r = 0; r <= n_max; ++r) comp_[p][r] = binomial_z(r + p - 1, p - 1).get_si();
  }
  int rank(const int* a) const {
    int rem = 0;
    for (int i = 0; i < d_; ++i) rem += a[i];
    long long idx = 0;
    for (int i = 0; i < d_ - 1; ++i) {
      const int parts = d_ - 1 - i;
      for (int k = 0; k < a[i]; ++k) idx += comp_[parts][rem - k];
      rem -= a[i];
    }
    return static_cast<int>(idx);
  }

 private:
  int d_, n_max_;
  std::vector<std::vector<long long>> comp_;
};

// coefficients of pr_H(x_1^N / N!) in the monomial order of MonomialTable(d, N)
inline Vec zonal_e1_coefficients(int d, int N) {
  const auto c = gegenbauer_coeffs(N, d);
  const Rational kappa = fisher_h_ratio<Rational>(d, N);
  const MonomialTable tab(d, N);
  Vec z = Vec::Zero(tab.size());
  for (int k = 0; k < tab.size(); ++k) {
    const MultiIndex& a = tab.index[k];
    bool even = true;
    int tailk = 0;
    mpz_class den = 1;
    for (int i = 1; i < d; ++i) {
      even = even && a[i] % 2 == 0;
      tailk += a[i] / 2;
      den *= factorial_z(a[i] / 2);
    }
    if (!even) continue;
    // x_1^j |x|^{2k}: the x_1^{2e} x'^{a'} coefficient of |x|^{2k} is k!/(e! prod (a_i/2)!)
    Rational s = 0;
    for (int e = 0; 2 * e <= a[0]; ++e) {
      const int j = a[0] - 2 * e;
      if (sgn(c[j]) == 0) continue;
      Rational m(factorial_z(e + tailk));
      m /= Rational(factorial_z(e) * den);
      s += c[j] * m;
    }
    s /= kappa;
    z(k) = s.get_d();
  }
  return z;
}

// rotation R in SO(d) with R u = e_1
inline Mat rotation_to_e1(const Vec& u) {
  const int d = static_cast<int>(u.size());
  Mat R = Mat::Identity(d, d);
  Vec w = u;
  w(0) = 0.0;
  const double s = w.norm();
  const double c = u(0);
  if (s < 1e-15) {
    if (c > 0) return R;
    R(0, 0) = -1.0;
    R(1, 1) = -1.0;
    return R;
  }
  w /= s;
  const Vec e1 = Vec::Unit(d, 0);
  R += (c - 1.0) * (e1 * e1.transpose() + w * w.transpose()) + s * (e1 * w.transpose() - w * e1.transpose());
  return R;
}

}  // namespace detail

// Geometry-free blocks of the contraction at unit separation along e_1:
// block(n,m)_{ij} = kappa_{n+m}/(kappa_n kappa_m) * sum Y_{n,i}[beta] Y_{m,j}[gamma] (beta+gamma)! Z[beta+gamma]
class CoreTable {
 public:
  explicit CoreTable(const Truncation& t) : t_(&t) {
    const int d = t.dim(), N = t.n_max();
    std::vector<Vec> Z;
    for (int k = 0; k <= 2 * N; ++k) Z.push_back(detail::zonal_e1_coefficients(d, k));
    detail::LexRanker ranker(d, 2 * N);
    blocks_.assign(N + 1, std::vector<Mat>(N + 1));
    std::vector<int> sum(d);
    std::vector<double> fact(2 * N + 1, 1.0);
    for (int k = 1; k <= 2 * N; ++k) fact[k] = fact[k - 1] * k;
    for (int n = 0; n <= N; ++n) {
      const auto& tn = t.basis().degree(n).table;
      for (int m = 0; m <= N; ++m) {
        const auto& tm = t.basis().degree(m).table;
        const Vec& z = Z[n + m];
        Mat G(tn.size(), tm.size());
        for (int b = 0; b < tn.size(); ++b)
          for (int g = 0; g < tm.size(); ++g) {
            for (int i = 0; i < d; ++i) sum[i] = tn.index[b][i] + tm.index[g][i];
            const double zv = z(ranker.rank(sum.data()));
            if (zv == 0.0) {
              G(b, g) = 0.0;
              continue;
            }
            double f = 1.0;
            for (int i = 0; i < d; ++i) f *= fact[sum[i]];
            G(b, g) = f * zv / std::sqrt(tn.fact[b] * tm.fact[g]);
          }
        blocks_[n][m] = fisher_h_ratio_d(d, n + m) / (t.ratio(n) * t.ratio(m)) * (t.scaled(n) * G * t.scaled(m).transpose());
      }
    }
  }

  const Truncation& truncation() const { return *t_; }
  const Mat& block(int n, int m) const { return blocks_.at(n).at(m); }

 private:
  const Truncation* t_;
  std::vector<std::vector<Mat>> blocks_;
};

inline void check_pair_geometry(const Vec& a, double r, const Vec& b, double s) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "centers differ in dimension");
  if (!(r > 0.0) || !(s > 0.0)) throw Error(Errc::GeometricOverlap, "radii must be positive");
  if (a.norm() + r > 1.0 + tol::geo || b.norm() + s > 1.0 + tol::geo)
    throw Error(Errc::GeometricOverlap, "ball leaves the unit disk");
  if (!((a - b).norm() > r + s)) throw Error(Errc::GeometricOverlap, "closures of the balls intersect");
}

// Matrix of C_{a,r;b,s} in the orthonormal basis, without the separation check.
inline Mat contraction_core_unchecked(const Vec& a, double r, const Vec& b, double s, const CoreTable& table) {
  const Truncation& t = table.truncation();
  const int d = t.dim(), N = t.n_max();
  const double eta = (a - b).norm();
  if (!(eta > 0.0)) throw Error(Errc::GeometricOverlap, "coincident centers");
  const double s1 = r / eta, s2 = s / eta, al = alpha_d(d);
  Mat K(t.size(), t.size());
  for (int n = 0; n <= N; ++n)
    for (int m = 0; m <= N; ++m) {
      const double f = (n % 2 ? -1.0 : 1.0) * std::pow(s1, n + al) * std::pow(s2, m + al);
      K.block(t.offset(n), t.offset(m), t.count(n), t.count(m)) = f * table.block(n, m);
    }
  const Vec u = (a - b) / eta;
  if ((u - Vec::Unit(d, 0)).norm() < 1e-15) return K;
  const Mat U = op_rotation(detail::rotation_to_e1(u), t);
  return U.transpose() * K * U;
}

inline ContractionMatrix contraction_core(const Vec& a, double r, const Vec& b, double s, const CoreTable& table) {
  check_pair_geometry(a, r, b, s);
  const double eta = (a - b).norm();
  const Truncation& t = table.truncation();
  return {t.dim(), t.n_max(), contraction_core_unchecked(a, r, b, s, table), r / eta, s / eta, "core"};
}

inline ContractionMatrix contraction_core(const Vec& a, double r, const Vec& b, double s, const Truncation& t) {
  return contraction_core(a, r, b, s, CoreTable(t));
}

// C(P^beta.1, P^gamma.1) from derivatives of the Green function
inline double contraction_green(const Vec& a, double r, const Vec& b, double s, const MultiIndex& beta,
                                const MultiIndex& gamma, GreenTable& green) {
  check_pair_geometry(a, r, b, s);
  const int d = static_cast<int>(a.size());
  MultiIndex bg(d);
  for (int i = 0; i < d; ++i) bg[i] = beta[i] + gamma[i];
  const int nb = degree_of(beta), ng = degree_of(gamma);
  const double al = alpha_d(d);
  return std::pow(r, nb + al) * std::pow(s, ng + al) * (ng % 2 ? -1.0 : 1.0) * green.get(bg).evaluate(a - b);
}

inline double contraction_green(const Vec& a, double r, const Vec& b, double s, const MultiIndex& beta,
                                const MultiIndex& gamma) {
  GreenTable g(static_cast<int>(a.size()));
  return contraction_green(a, r, b, s, beta, gamma, g);
}

// Blocks with n+m <= max_total assembled from contraction_green; other blocks are left at zero.
inline Mat contraction_core_by_green(const Vec& a, double r, const Vec& b, double s, const Truncation& t,
                                     int max_total) {
  const int d = t.dim();
  GreenTable green(d);
  Mat C = Mat::Zero(t.size(), t.size());
  for (int n = 0; n <= t.n_max(); ++n)
    for (int m = 0; n + m <= max_total && m <= t.n_max(); ++m) {
      const auto& hn = t.basis().degree(n);
      const auto& hm = t.basis().degree(m);
      Mat V(hn.table.size(), hm.table.size());
      for (int i = 0; i < hn.table.size(); ++i)
        for (int j = 0; j < hm.table.size(); ++j)
          V(i, j) = contraction_green(a, r, b, s, hn.table.index[i], hm.table.index[j], green);
      C.block(t.offset(n), t.offset(m), t.count(n), t.count(m)) =
          hn.coef * V * hm.coef.transpose() / (t.ratio(n) * t.ratio(m));
    }
  return C;
}

// ---- general configurations ----

enum class ContractionRoute { Gauss, DecomposeS };

inline void require_strict_pair(const MobiusMatrix& g1, const MobiusMatrix& g2) {
  const auto cfg = is_CE_config({g1, g2});
  if (!cfg.strict) throw Error(Errc::GeometricOverlap, "closed images intersect");
}

inline ContractionMatrix contraction_general(const MobiusMatrix& g1, const MobiusMatrix& g2, const CoreTable& table,
                                             ContractionRoute route = ContractionRoute::Gauss) {
  require_strict_pair(g1, g2);
  const Truncation& t = table.truncation();
  const auto s1 = decompose_S(g1), s2 = decompose_S(g2);
  const double eta = (s1.x0 - s2.x0).norm();
  ContractionMatrix out{t.dim(), t.n_max(), Mat(), s1.r / eta, s2.r / eta, ""};
  if (route == ContractionRoute::Gauss) {
    const auto a = gauss_decompose(g1), b = gauss_decompose(g2);
    const Mat F1 = op_rotation(a.R, t) * op_lowering_exp(a.c, t);
    const Mat F2 = op_rotation(b.R, t) * op_lowering_exp(b.c, t);
    out.C = F1.transpose() * contraction_core_unchecked(a.b, a.lambda, b.b, b.lambda, table) * F2;
    out.source = "general/gauss";
  } else {
    const Mat R1 = op_rho(s1.h, t), R2 = op_rho(s2.h, t);
    out.C = R1.transpose() * contraction_core_unchecked(s1.x0, s1.r, s2.x0, s2.r, table) * R2;
    out.source = "general/decompose_S";
  }
  return out;
}

// Omega_{g1}(p)^alpha Omega_{g2}(q)^alpha / |g1 p - g2 q|^{d-2}
inline double contraction_kernel_value(const MobiusMatrix& g1, const MobiusMatrix& g2, const Vec& p, const Vec& q) {
  const double al = alpha_d(g1.d);
  const Vec x = apply(g1, p), y = apply(g2, q);
  return std::pow(conformal_factor(g1, p) * conformal_factor(g2, q), al) / std::pow((x - y).norm(), 2 * al);
}

inline double pairing(const ContractionMatrix& C, const Vec& u, const Vec& v) { return u.dot(C.C * v); }

// ---- bounds and norms ----

inline double entry_bound(int n, int m, double s1, double s2, int d) {
  const int N = n + m;
  const double al = alpha_d(d);
  const double bin = binomial(N, n);
  const double sphere = std::sqrt((d - 2.0) * double(dim_harm(d, N)) / (2.0 * N + d - 2.0));
  const double poch = std::exp(log_pochhammer(al, N) - log_pochhammer(al, n) - log_pochhammer(al, m));
  const double Q = sphere * std::sqrt(poch * bin);
  return Q * bin * std::pow(s1, n) * std::pow(s2, m);
}

inline double hs_norm(const ContractionMatrix& C) { return C.C.norm(); }

inline double largest_singular_value(const ContractionMatrix& C) {
  Eigen::JacobiSVD<Mat> svd(C.C);
  return svd.singularValues()(0);
}

// max over blocks of (block Frobenius norm) / entry_bound; an upper bound on every entry ratio
inline double max_entry_ratio(const ContractionMatrix& C, const Truncation& t) {
  double best = 0.0;
  for (int n = 0; n <= C.n_max; ++n)
    for (int m = 0; m <= C.n_max; ++m) {
      const double f = C.C.block(t.offset(n), t.offset(m), t.count(n), t.count(m)).norm();
      best = std::max(best, f / entry_bound(n, m, C.sigma1, C.sigma2, C.d));
    }
  return best;
}

// Frobenius norm squared of the (n,m) block for a translated-dilation pair
inline double hs_block_squared(int n, int m, double s1, double s2, int d) {
  const int N = n + m;
  const double al = alpha_d(d);
  const double lg = 2 * al * std::log(s1 * s2) + 2 * n * std::log(s1) + 2 * m * std::log(s2) +
                    std::log(binomial(N, n)) + log_pochhammer(al, N) + log_pochhammer(2 * al, N) -
                    std::lgamma(N + 1.0) - log_pochhammer(al, n) - log_pochhammer(al, m);
  return std::exp(lg);
}

inline double hs_norm_closed(double s1, double s2, int d, int N) {
  double s = 0.0;
  for (int n = 0; n <= N; ++n)
    for (int m = 0; m <= N; ++m) s += hs_block_squared(n, m, s1, s2, d);
  return std::sqrt(s);
}

inline double hs_upper_bound(double s1, double s2, int d, int N) {
  double s = 0.0;
  for (int n = 0; n <= N; ++n)
    for (int m = 0; m <= N; ++m) {
      const double e = entry_bound(n, m, s1, s2, d);
      s += double(dim_harm(d, n)) * double(dim_harm(d, m)) * e * e;
    }
  return std::sqrt(s);
}

// Bound on |e_p^T C e_q - C(E_p, E_q)| from the blocks outside the truncation.
inline double pairing_tail(double s1, double s2, int d, int N, double np, double nq) {
  double s = 0.0;
  const int cap = N + 4000;
  for (int n = 0; n <= cap; ++n) {
    double row = 0.0;
    for (int m = (n <= N ? N + 1 : 0); m <= cap; ++m) {
      const double term = std::sqrt(hs_block_squared(n, m, s1, s2, d) * gegenbauer_at_one(n, d) *
                                    gegenbauer_at_one(m, d)) *
                          std::pow(np, n) * std::pow(nq, m);
      row += term;
      if (m > N + 10 && term < 1e-20 * row) break;
    }
    s += row;
    if (n > N + 10 && row < 1e-20 * s) break;
  }
  return s;
}

// ---- the unboundedness probe ----

// A_{n,m} of the L(-1) vectors for separation along e_1
inline Mat unbounded_probe_closed(double s1, double s2, int d, int N) {
  const double al = alpha_d(d);
  Mat A(N + 1, N + 1);
  for (int n = 0; n <= N; ++n)
    for (int m = 0; m <= N; ++m) {
      const double lg = log_pochhammer(al, n + m) -
                        0.5 * (std::lgamma(n + 1.0) + std::lgamma(m + 1.0) + log_pochhammer(al, n) +
                               log_pochhammer(al, m)) +
                        al * std::log(s1 * s2) + n * std::log(s1) + m * std::log(s2);
      A(n, m) = (n % 2 ? -1.0 : 1.0) * std::exp(lg);
    }
  return A;
}

// coordinates of Re and Im of L(-1)^n.1 in the orthonormal basis
inline std::pair<Vec, Vec> lminus_coordinates(const Truncation& t, int n) {
  const auto [re, im] = lminus_power(t.dim(), n);
  const auto& tab = t.basis().degree(n).table;
  auto coords = [&](const QPoly& p) {
    Vec w = Vec::Zero(tab.size());
    for (const auto& [a, c] : p.terms()) {
      const int k = tab.find(a);
      w(k) = c.get_d() * std::sqrt(tab.fact[k]);
    }
    Vec out = Vec::Zero(t.size());
    out.segment(t.offset(n), t.count(n)) = t.scaled(n) * w / t.ratio(n);
    return out;
  };
  return {coords(re), coords(im)};
}

// A_{n,m} = C(v_n, v_m) from the contraction matrix, with the complex bilinear extension
inline Eigen::MatrixXcd unbounded_probe_matrix(double s1, double s2, const CoreTable& table) {
  const Truncation& t = table.truncation();
  const int d = t.dim(), N = t.n_max();
  const Mat C = contraction_core_unchecked(Vec::Unit(d, 0), s1, Vec::Zero(d), s2, table);
  std::vector<Vec> u, v;
  for (int n = 0; n <= N; ++n) {
    auto [a, b] = lminus_coordinates(t, n);
    const double nrm = std::sqrt(std::exp(std::lgamma(n + 1.0) + log_pochhammer(alpha_d(d), n)));
    u.push_back(a / nrm);
    v.push_back(b / nrm);
  }
  Eigen::MatrixXcd A(N + 1, N + 1);
  for (int n = 0; n <= N; ++n)
    for (int m = 0; m <= N; ++m) {
      const double re = u[n].dot(C * u[m]) - v[n].dot(C * v[m]);
      const double im = u[n].dot(C * v[m]) + v[n].dot(C * u[m]);
      A(n, m) = {re, im};
    }
  return A;
}

struct LowerBoundProfile {
  double stated = 0.0;       // partial sum as printed, without the (s1 s2)^alpha factor
  double rigorous = 0.0;     // same partial sum times (s1 s2)^alpha
  double closed_norm = 0.0;  // Frobenius norm of the closed-form A_{n,m}, n,m <= N
};

// partial sum of the printed bound up to N
inline double lower_bound_partial(double sigma, int N, int d) {
  double s = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double p = std::pow(sigma, 2 * k);
    s += d == 3 ? p / (2 * k + 1) : p / (k + 1);
  }
  return d == 3 ? std::sqrt(0.5 * s) : std::sqrt(s);
}

// sigma split evenly: s1 = s2 = sigma / 2
inline LowerBoundProfile lower_bound_profile(double sigma, int N, int d) {
  require_dim(d);
  const double s1 = 0.5 * sigma, s2 = 0.5 * sigma;
  LowerBoundProfile p;
  p.stated = lower_bound_partial(sigma, N, d);
  p.rigorous = std::pow(s1 * s2, alpha_d(d)) * p.stated;
  p.closed_norm = unbounded_probe_closed(s1, s2, d, N).norm();
  return p;
}

struct SweepRow {
  int d = 3;
  double sigma = 0.0;
  int N = 0;
  double hs_norm = 0.0;
  double lower_bound = 0.0;
  double max_entry_ratio = 0.0;
};

// Closed-form block norms for the evenly split pair; sigma = 1 is admitted here only.
inline std::vector<SweepRow> boundedness_sweep(std::vector<double> sigmas, std::vector<int> Ns, int d) {
  require_dim(d);
  std::vector<SweepRow> rows;
  for (double sg : sigmas) {
    if (!(sg > 0.0) || sg > 1.0) throw Error(Errc::InvalidArgument, "sigma must lie in (0, 1]");
    const double s1 = 0.5 * sg, s2 = 0.5 * sg;
    for (int N : Ns) {
      if (N < 0) throw Error(Errc::InvalidArgument, "N must be >= 0");
      SweepRow r;
      r.d = d;
      r.sigma = sg;
      r.N = N;
      r.hs_norm = hs_norm_closed(s1, s2, d, N);
      r.lower_bound = lower_bound_profile(sg, N, d).rigorous;
      for (int n = 0; n <= N; ++n)
        for (int m = 0; m <= N; ++m)
          r.max_entry_ratio =
              std::max(r.max_entry_ratio, std::sqrt(hs_block_squared(n, m, s1, s2, d)) / entry_bound(n, m, s1, s2, d));
      rows.push_back(r);
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.sigma, a.N) < std::tie(b.sigma, b.N);
  });
  return rows;
}

}  // namespace cflat
