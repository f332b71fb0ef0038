#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <numeric>

#include "contraction.hpp"

namespace cflat {

// coeff * v_1 (x) ... (x) v_p
struct FockTerm {
  double coeff = 1.0;
  std::vector<Vec> factors;

  int particles() const { return static_cast<int>(factors.size()); }
};

// Plain element of (+)_p H^{(x)p}, a sum of product tensors.
struct Tensor {
  std::vector<FockTerm> terms;
};

// Element of Sym(H) stored as sum of coeff * S(v_1 (x) ... (x) v_p).
struct FockVector {
  std::vector<FockTerm> terms;

  static FockVector vacuum(double c = 1.0) { return FockVector{{FockTerm{c, {}}}}; }
  static FockVector particle(const Vec& v) { return FockVector{{FockTerm{1.0, {v}}}}; }
  static FockVector product(std::vector<Vec> vs, double c = 1.0) { return FockVector{{FockTerm{c, std::move(vs)}}}; }

  int particles() const {
    int p = 0;
    for (const auto& t : terms) p = std::max(p, t.particles());
    return p;
  }
  FockVector& operator+=(const FockVector& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
  FockVector& operator*=(double s) {
    for (auto& t : terms) t.coeff *= s;
    return *this;
  }
  double vacuum_coefficient() const {
    double s = 0.0;
    for (const auto& t : terms)
      if (t.factors.empty()) s += t.coeff;
    return s;
  }
};

inline FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
inline FockVector operator-(FockVector a, FockVector b) { return a += (b *= -1.0); }
inline FockVector operator*(double s, FockVector a) { return a *= s; }

// ---- permanents ----

inline double permanent(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 0) return 1.0;
  if (n == 1) return A(0, 0);
  if (n == 2) return A(0, 0) * A(1, 1) + A(0, 1) * A(1, 0);
  if (n == 3)
    return A(0, 0) * (A(1, 1) * A(2, 2) + A(1, 2) * A(2, 1)) + A(0, 1) * (A(1, 0) * A(2, 2) + A(1, 2) * A(2, 0)) +
           A(0, 2) * (A(1, 0) * A(2, 1) + A(1, 1) * A(2, 0));
  // Ryser with Gray code
  Vec rows = Vec::Zero(n);
  double total = 0.0;
  unsigned long long gray = 0;
  const unsigned long long count = 1ULL << n;
  for (unsigned long long k = 1; k < count; ++k) {
    const unsigned long long g = k ^ (k >> 1);
    const unsigned long long flip = g ^ gray;
    const int j = __builtin_ctzll(flip);
    if (g & flip)
      rows += A.col(j);
    else
      rows -= A.col(j);
    gray = g;
    const double prod = rows.prod();
    total += (__builtin_popcountll(g) % 2 == n % 2) ? prod : -prod;
  }
  return total;
}

inline double factorial_d(int n) { return std::tgamma(n + 1.0); }

// ---- inner products ----

inline Mat factor_gram(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  Mat G(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) G(i, j) = a[i].dot(b[j]);
  return G;
}

inline double tensor_inner(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) {
      if (x.particles() != y.particles()) continue;
      double p = x.coeff * y.coeff;
      for (int k = 0; k < x.particles(); ++k) p *= x.factors[k].dot(y.factors[k]);
      s += p;
    }
  return s;
}

inline double tensor_norm(const Tensor& a) { return std::sqrt(std::max(0.0, tensor_inner(a, a))); }

// <S(v), S(w)> = perm(<v_i, w_j>) / p!
inline double fock_inner(const FockVector& a, const FockVector& b) {
  double s = 0.0;
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) {
      if (x.particles() != y.particles()) continue;
      s += x.coeff * y.coeff * permanent(factor_gram(x.factors, y.factors)) / factorial_d(x.particles());
    }
  return s;
}

inline double fock_norm(const FockVector& a) { return std::sqrt(std::max(0.0, fock_inner(a, a))); }

// ---- truncation and multiset basis ----

// Sorted index tuples of length <= p_max over {0..n-1}, graded by length then lexicographic.
inline std::vector<std::vector<int>> enumerate_multisets(int n, int p_max, std::size_t limit = 4'000'000) {
  double total = 0.0;
  for (int p = 0; p <= p_max; ++p) total += binomial(n + p - 1, p);
  if (total > static_cast<double>(limit))
    throw Error(Errc::InvalidArgument, "Fock basis too large to enumerate (" + std::to_string(total) + ")");
  std::vector<std::vector<int>> out;
  out.push_back({});
  for (int p = 1; p <= p_max; ++p) {
    std::vector<int> cur(p, 0);
    for (;;) {
      out.push_back(cur);
      int k = p - 1;
      while (k >= 0 && cur[k] == n - 1) --k;
      if (k < 0) break;
      ++cur[k];
      for (int j = k + 1; j < p; ++j) cur[j] = cur[k];
    }
  }
  return out;
}

// prod m_i! / p! = <b_I, b_I>
inline double multiset_weight(const std::vector<int>& I) {
  double w = 1.0;
  std::size_t i = 0;
  while (i < I.size()) {
    std::size_t j = i;
    while (j < I.size() && I[j] == I[i]) ++j;
    w *= factorial_d(static_cast<int>(j - i));
    i = j;
  }
  return w / factorial_d(static_cast<int>(I.size()));
}

inline double multiplicity_factorials(const std::vector<int>& I) {
  return multiset_weight(I) * factorial_d(static_cast<int>(I.size()));
}

class FockTruncation {
 public:
  FockTruncation(std::shared_ptr<const Truncation> t, int p_max)
      : t_(std::move(t)), table_(std::make_shared<const CoreTable>(*t_)), p_max_(p_max) {
    if (p_max_ < 0) throw Error(Errc::InvalidArgument, "P_max must be >= 0");
  }

  static FockTruncation make(int d, int n_max, int p_max) {
    return FockTruncation(std::make_shared<const Truncation>(Truncation::make(d, n_max)), p_max);
  }
  static int default_degree(int d) { return d == 3 ? 16 : 12; }
  static constexpr int default_particles = 6;

  int dim() const { return t_->dim(); }
  int p_max() const { return p_max_; }
  int one_particle_size() const { return t_->size(); }
  const Truncation& truncation() const { return *t_; }
  const CoreTable& table() const { return *table_; }

  double basis_size() const {
    double s = 0.0;
    for (int p = 0; p <= p_max_; ++p) s += binomial(one_particle_size() + p - 1, p);
    return s;
  }
  const std::vector<std::vector<int>>& basis() const {
    if (!basis_) basis_ = std::make_shared<std::vector<std::vector<int>>>(enumerate_multisets(one_particle_size(), p_max_));
    return *basis_;
  }

  FockVector basis_vector(const std::vector<int>& I) const {
    std::vector<Vec> f;
    for (int i : I) f.push_back(Vec::Unit(one_particle_size(), i));
    return FockVector::product(std::move(f));
  }

  void require_budget(int particles) const {
    if (particles > p_max_)
      throw Error(Errc::ParticleOverflow, std::to_string(particles) + " particles exceed P_max = " + std::to_string(p_max_));
  }

 private:
  std::shared_ptr<const Truncation> t_;
  std::shared_ptr<const CoreTable> table_;
  int p_max_;
  mutable std::shared_ptr<std::vector<std::vector<int>>> basis_;
};

// Coefficient of b_I in S(v_1..v_p) is perm(V_I) / prod m_i!.
inline double multiset_coordinate(const FockTerm& term, const std::vector<int>& I, const std::vector<Vec>& coords) {
  const int p = term.particles();
  Mat V(p, p);
  for (int k = 0; k < p; ++k)
    for (int l = 0; l < p; ++l) V(k, l) = coords[k](I[l]);
  return term.coeff * permanent(V) / multiplicity_factorials(I);
}

inline Vec to_coordinates(const FockVector& v, const FockTruncation& ft) {
  const auto& B = ft.basis();
  Vec c = Vec::Zero(static_cast<Eigen::Index>(B.size()));
  for (const auto& term : v.terms) {
    ft.require_budget(term.particles());
    for (std::size_t k = 0; k < B.size(); ++k)
      if (static_cast<int>(B[k].size()) == term.particles()) c(k) += multiset_coordinate(term, B[k], term.factors);
  }
  return c;
}

inline FockVector from_coordinates(const Vec& c, const FockTruncation& ft) {
  const auto& B = ft.basis();
  if (c.size() != static_cast<Eigen::Index>(B.size())) throw Error(Errc::DimensionMismatch, "coordinate length");
  FockVector out;
  for (std::size_t k = 0; k < B.size(); ++k)
    if (c(k) != 0.0) {
      FockVector b = ft.basis_vector(B[k]);
      b.terms[0].coeff = c(k);
      out += b;
    }
  return out;
}

inline double coordinate_inner(const Vec& a, const Vec& b, const FockTruncation& ft) {
  const auto& B = ft.basis();
  double s = 0.0;
  for (std::size_t k = 0; k < B.size(); ++k) s += a(k) * b(k) * multiset_weight(B[k]);
  return s;
}

// ‖a - b‖ in symmetric coordinates over an orthonormal basis of the span of the factors.
inline double fock_distance(const FockVector& a, const FockVector& b, std::size_t coord_limit = 3'000'000) {
  int p_top = std::max(a.particles(), b.particles());
  double total = 0.0;
  for (int p = 0; p <= p_top; ++p) {
    std::vector<FockTerm> terms;
    for (const auto& t : a.terms)
      if (t.particles() == p) terms.push_back(t);
    for (const auto& t : b.terms)
      if (t.particles() == p) terms.push_back(FockTerm{-t.coeff, t.factors});
    if (terms.empty()) continue;
    if (p == 0) {
      double s = 0.0;
      for (const auto& t : terms) s += t.coeff;
      total += s * s;
      continue;
    }
    const Eigen::Index D = terms.front().factors.front().size();
    Mat F(D, static_cast<Eigen::Index>(terms.size()) * p);
    Eigen::Index col = 0;
    for (const auto& t : terms)
      for (const auto& v : t.factors) F.col(col++) = v;
    Eigen::ColPivHouseholderQR<Mat> qr(F);
    qr.setThreshold(1e-13);
    const int K = static_cast<int>(qr.rank());
    if (K == 0) continue;
    const Mat Q = Mat(qr.householderQ()).leftCols(K);
    if (binomial(K + p - 1, p) > static_cast<double>(coord_limit)) {
      FockVector x{terms};
      total += fock_inner(x, x);
      continue;
    }
    std::vector<std::vector<Vec>> coords;
    for (const auto& t : terms) {
      std::vector<Vec> c;
      for (const auto& v : t.factors) c.push_back(Q.transpose() * v);
      coords.push_back(std::move(c));
    }
    std::vector<int> I(p, 0);
    for (;;) {
      double c = 0.0;
      for (std::size_t k = 0; k < terms.size(); ++k) c += multiset_coordinate(terms[k], I, coords[k]);
      total += c * c * multiset_weight(I);
      int k = p - 1;
      while (k >= 0 && I[k] == K - 1) --k;
      if (k < 0) break;
      ++I[k];
      for (int j = k + 1; j < p; ++j) I[j] = I[k];
    }
  }
  return std::sqrt(std::max(0.0, total));
}

// ---- symmetrization ----

inline FockVector sym_project(const Tensor& v, const FockTruncation& ft) {
  FockVector out;
  for (const auto& t : v.terms) {
    ft.require_budget(t.particles());
    out.terms.push_back(t);
  }
  return out;
}

// S(v) written out as a plain tensor (p! terms each)
inline Tensor expand_symmetric(const FockVector& v) {
  Tensor out;
  for (const auto& t : v.terms) {
    std::vector<int> perm(t.particles());
    std::iota(perm.begin(), perm.end(), 0);
    const double c = t.coeff / factorial_d(t.particles());
    do {
      FockTerm x{c, {}};
      for (int k : perm) x.factors.push_back(t.factors[k]);
      out.terms.push_back(std::move(x));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return out;
}

// ---- lifted one-particle action ----

class LiftedRho {
 public:
  explicit LiftedRho(HOperator rho) : rho_(std::move(rho)) {}
  const HOperator& one_particle() const { return rho_; }
  FockVector operator()(const FockVector& v) const {
    FockVector out = v;
    for (auto& t : out.terms)
      for (auto& f : t.factors) f = rho_ * f;
    return out;
  }

 private:
  HOperator rho_;
};

inline LiftedRho lift_rho1(const MobiusMatrix& g, const FockTruncation& ft) {
  return LiftedRho(op_rho(g, ft.truncation()));
}

// ---- pairwise contraction on a slot pair ----

struct TermPair {
  double coeff = 1.0;
  std::vector<Vec> left, right;
};

// sum_{i,j} C(v_i, w_j) (v without i) (x) (w without j)
inline std::vector<TermPair> lift_contraction(const Mat& C, const FockTerm& v, const FockTerm& w) {
  std::vector<TermPair> out;
  if (v.factors.empty() || w.factors.empty()) return out;
  for (int i = 0; i < v.particles(); ++i)
    for (int j = 0; j < w.particles(); ++j) {
      TermPair tp;
      tp.coeff = v.coeff * w.coeff * v.factors[i].dot(C * w.factors[j]);
      for (int k = 0; k < v.particles(); ++k)
        if (k != i) tp.left.push_back(v.factors[k]);
      for (int k = 0; k < w.particles(); ++k)
        if (k != j) tp.right.push_back(w.factors[k]);
      out.push_back(std::move(tp));
    }
  return out;
}

// ---- operadic product ----

class OperadicProduct {
 public:
  OperadicProduct(const FockTruncation& ft, const std::vector<MobiusMatrix>& gs,
                  ContractionRoute route = ContractionRoute::Gauss)
      : ft_(&ft), cfg_(is_CE_config(gs, ft.dim())) {
    if (cfg_.d != ft.dim()) throw Error(Errc::DimensionMismatch, "configuration dimension");
    if (!cfg_.strict) throw Error(Errc::NonStrictConfig, "closed images of the configuration intersect");
    const std::size_t n = gs.size();
    for (const auto& g : gs) rho_.push_back(op_rho(g, ft.truncation()));
    C_.assign(n, std::vector<Mat>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        C_[i][j] = contraction_general(gs[i], gs[j], ft.table(), route).C;
        C_[j][i] = C_[i][j].transpose();
      }
  }

  int arity() const { return static_cast<int>(cfg_.size()); }
  const DiskConfig& config() const { return cfg_; }
  const FockTruncation& truncation() const { return *ft_; }
  const Mat& rho(int i) const { return rho_.at(i); }
  const Mat& contraction(int i, int j) const { return C_.at(i).at(j); }

  FockVector operator()(const std::vector<FockVector>& inputs) const { return evaluate(inputs, false); }
  double vacuum(const std::vector<FockVector>& inputs) const { return evaluate(inputs, true).vacuum_coefficient(); }

 private:
  struct Factor {
    int owner;
    const Vec* v;
  };

  void check_inputs(const std::vector<FockVector>& inputs) const {
    if (static_cast<int>(inputs.size()) != arity())
      throw Error(Errc::InvalidArgument, "expected " + std::to_string(arity()) + " inputs");
    int total = 0;
    for (const auto& x : inputs) {
      total += x.particles();
      for (const auto& t : x.terms)
        for (const auto& f : t.factors)
          if (f.size() != ft_->one_particle_size()) throw Error(Errc::DimensionMismatch, "input factor length");
    }
    ft_->require_budget(total);
  }

  FockVector evaluate(const std::vector<FockVector>& inputs, bool vacuum_only) const {
    check_inputs(inputs);
    const int n = arity();
    FockVector out;
    if (n == 0) return FockVector::vacuum();
    for (const auto& x : inputs)
      if (x.terms.empty()) return out;
    std::vector<std::size_t> choice(n, 0);
    double vac = 0.0;
    for (;;) {
      std::vector<Factor> fs;
      double c = 1.0;
      for (int i = 0; i < n; ++i) {
        const auto& t = inputs[i].terms[choice[i]];
        c *= t.coeff;
        for (const auto& v : t.factors) fs.push_back({i, &v});
      }
      if (c != 0.0 && (!vacuum_only || fs.size() % 2 == 0)) expand(fs, c, vacuum_only, out, vac);
      int k = n - 1;
      while (k >= 0 && ++choice[k] == inputs[k].terms.size()) choice[k--] = 0;
      if (k < 0) break;
    }
    if (vac != 0.0 || vacuum_only) out.terms.insert(out.terms.begin(), FockTerm{vac, {}});
    return out;
  }

  // exp(sum C_ij) as a sum over partial matchings between factors of different inputs
  void expand(const std::vector<Factor>& fs, double c, bool vacuum_only, FockVector& out, double& vac) const {
    const int F = static_cast<int>(fs.size());
    Mat W = Mat::Zero(F, F);
    for (int a = 0; a < F; ++a)
      for (int b = a + 1; b < F; ++b)
        if (fs[a].owner != fs[b].owner) W(a, b) = fs[a].v->dot(C_[fs[a].owner][fs[b].owner] * *fs[b].v);
    std::vector<Vec> images;
    if (!vacuum_only)
      for (const auto& f : fs) images.push_back(rho_[f.owner] * *f.v);
    std::vector<char> used(F, 0);
    std::vector<int> free_idx;
    std::function<void(int, double)> rec = [&](int a, double w) {
      while (a < F && used[a]) ++a;
      if (a == F) {
        if (free_idx.empty())
          vac += w;
        else {
          FockTerm t{w, {}};
          for (int k : free_idx) t.factors.push_back(images[k]);
          out.terms.push_back(std::move(t));
        }
        return;
      }
      used[a] = 1;
      if (!vacuum_only) {
        free_idx.push_back(a);
        rec(a + 1, w);
        free_idx.pop_back();
      }
      for (int b = a + 1; b < F; ++b)
        if (!used[b] && fs[a].owner != fs[b].owner) {
          used[b] = 1;
          rec(a + 1, w * W(a, b));
          used[b] = 0;
        }
      used[a] = 0;
    };
    rec(0, c);
  }

  const FockTruncation* ft_;
  DiskConfig cfg_;
  std::vector<Mat> rho_;
  std::vector<std::vector<Mat>> C_;
};

inline FockVector product_rho(const FockTruncation& ft, const std::vector<MobiusMatrix>& gs,
                              const std::vector<FockVector>& inputs) {
  return OperadicProduct(ft, gs)(inputs);
}

// Psi = sqrt(p!) on Sym^p
inline FockVector psi(const FockVector& v, bool inverse = false) {
  FockVector out = v;
  for (auto& t : out.terms) {
    const double s = std::sqrt(factorial_d(t.particles()));
    t.coeff = inverse ? t.coeff / s : t.coeff * s;
  }
  return out;
}

inline FockVector psi_twist_product(const OperadicProduct& prod, const std::vector<FockVector>& inputs) {
  std::vector<FockVector> in;
  for (const auto& x : inputs) in.push_back(psi(x, true));
  return psi(prod(in));
}

inline double vacuum_expectation(const OperadicProduct& prod, const std::vector<FockVector>& inputs) {
  return prod.vacuum(inputs);
}

inline double vacuum_expectation(const FockTruncation& ft, const std::vector<MobiusMatrix>& gs,
                                 const std::vector<FockVector>& inputs) {
  return OperadicProduct(ft, gs).vacuum(inputs);
}

// Hafnian of the pairwise C values by subset recursion.
inline double npoint_wick_oracle(const std::vector<MobiusMatrix>& gs, const std::vector<Vec>& phis,
                                 const CoreTable& table) {
  const int n = static_cast<int>(gs.size());
  if (static_cast<int>(phis.size()) != n) throw Error(Errc::InvalidArgument, "one vector per element");
  if (n % 2 == 1) return 0.0;
  if (n == 0) return 1.0;
  if (n > 24) throw Error(Errc::InvalidArgument, "too many insertions for the matching oracle");
  if (!is_CE_config(gs, table.truncation().dim()).strict) throw Error(Errc::NonStrictConfig, "configuration not strict");
  Mat M = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) M(i, j) = M(j, i) = pairing(contraction_general(gs[i], gs[j], table), phis[i], phis[j]);
  const unsigned full = (1u << n) - 1;
  std::vector<double> h(full + 1, 0.0);
  h[0] = 1.0;
  for (unsigned mask = 1; mask <= full; ++mask) {
    if (__builtin_popcount(mask) % 2) continue;
    const int low = __builtin_ctz(mask);
    const unsigned rest = mask & ~(1u << low);
    double s = 0.0;
    for (int j = low + 1; j < n; ++j)
      if (rest & (1u << j)) s += M(low, j) * h[rest & ~(1u << j)];
    h[mask] = s;
  }
  return h[full];
}

// ---- sphere state ----

struct SphereOptions {
  double margin = 0.1;        // transported images end inside the ball of radius 1 - margin
  double free_margin = 0.25;  // x0 stays outside g_i(ball of radius 1 + free_margin)
  int budget = 10000;
  int skip = 0;               // offset into the low-discrepancy sequence
};

struct SphereResult {
  double value = 1.0;
  SpherePoint x0;
  double scale = 1.0;
  int samples_used = 0;
  std::vector<MobiusMatrix> transported;
};

inline double radical_inverse(unsigned long long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Halton points in [-1,1]^{d+1}, kept inside the unit ball and projected to S^d.
inline Vec halton_sphere_point(int d, unsigned long long& index) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (d + 1 > 12) throw Error(Errc::InvalidArgument, "dimension too large for the Halton table");
  for (;;) {
    ++index;
    Vec u(d + 1);
    for (int k = 0; k <= d; ++k) u(k) = 2.0 * radical_inverse(index, primes[k]) - 1.0;
    const double r = u.norm();
    if (r <= 1.0 && r > 0.1) return u / r;
  }
}

inline SpherePoint from_sphere(const Vec& xi) {
  const int d = static_cast<int>(xi.size()) - 1;
  const double den = 1.0 - xi(d);
  if (den < 1e-12) return SpherePoint::infinity(d);
  return SpherePoint::finite(xi.head(d) / den);
}

inline bool free_point(const std::vector<MobiusMatrix>& gs, const SpherePoint& x, double margin) {
  for (const auto& g : gs) {
    const auto r = act(g.inverse(), x);
    if (!r.point.infinite && r.point.x.norm() <= 1.0 + margin) return false;
  }
  return true;
}

inline void require_disjoint_closures(const std::vector<MobiusMatrix>& gs) {
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = i + 1; j < gs.size(); ++j)
      if (!(inversive_product(gs[i], gs[j]) < -1.0 - tol::geo))
        throw Error(Errc::GeometricOverlap, "closed image regions " + std::to_string(i) + " and " + std::to_string(j) +
                                                " meet");
}

// orientation-preserving map sending x0 to infinity
inline MobiusMatrix send_to_infinity(const SpherePoint& x0, int d) {
  if (x0.infinite) return MobiusMatrix::identity(d);
  MobiusMatrix g = inversion(d) * translation(-x0.x);
  if (g.M.determinant() < 0.0) {
    Mat F = Mat::Identity(d + 2, d + 2);
    F(0, 0) = -1.0;
    g = MobiusMatrix(d, F) * g;
  }
  return g;
}

inline SphereResult sphere_transport(const std::vector<MobiusMatrix>& gs, int d, const SphereOptions& opt = {}) {
  SphereResult res;
  if (gs.empty()) return res;
  require_disjoint_closures(gs);
  unsigned long long index = static_cast<unsigned long long>(opt.skip);
  bool found = false;
  for (int k = 0; k < opt.budget; ++k) {
    res.x0 = from_sphere(halton_sphere_point(d, index));
    res.samples_used = k + 1;
    if (free_point(gs, res.x0, opt.free_margin)) {
      found = true;
      break;
    }
  }
  if (!found) throw Error(Errc::NoFreePoint, "no free point found in " + std::to_string(opt.budget) + " samples");
  const MobiusMatrix gamma = send_to_infinity(res.x0, d);
  std::vector<BallRegion> balls;
  Vec lo = Vec::Constant(d, 1e300), hi = Vec::Constant(d, -1e300);
  for (const auto& g : gs) {
    const BallRegion b = region_from_polar(d, polar_vector(gamma * g));
    if (b.kind != RegionKind::Ball) throw Error(Errc::NoFreePoint, "transported image is unbounded");
    lo = lo.cwiseMin(b.center - Vec::Constant(d, b.radius));
    hi = hi.cwiseMax(b.center + Vec::Constant(d, b.radius));
    balls.push_back(b);
  }
  const Vec c = 0.5 * (lo + hi);
  double R = 0.0;
  for (const auto& b : balls) R = std::max(R, (b.center - c).norm() + b.radius);
  res.scale = (1.0 - opt.margin) / R;
  const MobiusMatrix f = dilation(d, res.scale) * translation(-c) * gamma;
  for (const auto& g : gs) res.transported.push_back(f * g);
  return res;
}

inline SphereResult sphere_state(const FockTruncation& ft, const std::vector<MobiusMatrix>& gs,
                                 const std::vector<FockVector>& inputs, const SphereOptions& opt = {}) {
  if (inputs.size() != gs.size()) throw Error(Errc::InvalidArgument, "one input per element");
  SphereResult res = sphere_transport(gs, ft.dim(), opt);
  if (gs.empty()) return res;
  res.value = OperadicProduct(ft, res.transported).vacuum(inputs);
  return res;
}

// ---- two-point radical probe ----

// Pairs (T_x D(r), D(s)) with sigma_1 = r/|x|, sigma_2 = s/|x| near the given value.
inline std::vector<std::pair<MobiusMatrix, MobiusMatrix>> radical_grid(int d, double sigma = 0.48, int points = 3) {
  std::vector<std::pair<MobiusMatrix, MobiusMatrix>> out;
  const double dist = 0.5;
  for (int k = 0; k < points; ++k) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u(i) = std::cos(1.3 * (k + 1) * (i + 1) + 0.4 * k);
    u /= u.norm();
    const double s1 = sigma * (1.0 - 0.03 * k), s2 = sigma * (1.0 - 0.05 * k);
    out.emplace_back(translation(dist * u) * dilation(d, s1 * dist), dilation(d, s2 * dist));
  }
  return out;
}

inline double radical_probe_2pt(const std::vector<OperadicProduct>& pairs, const FockVector& v,
                                const std::vector<FockVector>& probes) {
  double best = 0.0;
  for (const auto& prod : pairs) {
    if (prod.arity() != 2) throw Error(Errc::InvalidArgument, "radical probe needs two-element configurations");
    for (const auto& w : probes) best = std::max(best, std::abs(prod.vacuum({w, v})));
  }
  return best;
}

inline double radical_probe_2pt(const FockTruncation& ft, const FockVector& v,
                                const std::vector<std::pair<MobiusMatrix, MobiusMatrix>>& grid,
                                const std::vector<FockVector>& probes) {
  std::vector<OperadicProduct> pairs;
  for (const auto& [g1, g2] : grid) pairs.emplace_back(ft, std::vector<MobiusMatrix>{g1, g2});
  return radical_probe_2pt(pairs, v, probes);
}

// ---- operad composition check ----

inline std::vector<MobiusMatrix> compose_configs(const std::vector<MobiusMatrix>& outer,
                                                 const std::vector<MobiusMatrix>& inner, int slot) {
  std::vector<MobiusMatrix> out;
  for (int i = 0; i < static_cast<int>(outer.size()); ++i) {
    if (i != slot) {
      out.push_back(outer[i]);
      continue;
    }
    for (const auto& h : inner) out.push_back(outer[i] * h);
  }
  return out;
}

struct OperadCheck {
  double discrepancy = 0.0;  // relative
  double absolute = 0.0;
  double norm = 0.0;
};

// inputs are listed in the order of the composed configuration
inline OperadCheck operad_check(const FockTruncation& ft, const std::vector<MobiusMatrix>& outer,
                                const std::vector<MobiusMatrix>& inner, int slot,
                                const std::vector<FockVector>& inputs) {
  const int n = static_cast<int>(outer.size()), m = static_cast<int>(inner.size());
  if (slot < 0 || slot >= n) throw Error(Errc::InvalidArgument, "slot out of range");
  if (static_cast<int>(inputs.size()) != n - 1 + m) throw Error(Errc::InvalidArgument, "input count");
  const FockVector composed = OperadicProduct(ft, compose_configs(outer, inner, slot))(inputs);
  std::vector<FockVector> inner_in(inputs.begin() + slot, inputs.begin() + slot + m);
  std::vector<FockVector> outer_in(inputs.begin(), inputs.begin() + slot);
  outer_in.push_back(OperadicProduct(ft, inner)(inner_in));
  outer_in.insert(outer_in.end(), inputs.begin() + slot + m, inputs.end());
  const FockVector nested = OperadicProduct(ft, outer)(outer_in);
  OperadCheck r;
  r.absolute = fock_distance(composed, nested);
  r.norm = fock_norm(composed);
  r.discrepancy = r.norm > 0.0 ? r.absolute / r.norm : r.absolute;
  return r;
}

}  // namespace cflat
