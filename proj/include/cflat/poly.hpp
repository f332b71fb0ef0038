#pragma once

#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace cflat {

using MultiIndex = std::vector<int>;

inline int degree_of(const MultiIndex& a) { return std::accumulate(a.begin(), a.end(), 0); }

inline mpz_class factorial_z(const MultiIndex& a) {
  mpz_class r = 1;
  for (int k : a) r *= factorial_z(k);
  return r;
}

inline double factorial_d(const MultiIndex& a) {
  double r = 1.0;
  for (int k : a) r *= std::tgamma(k + 1.0);
  return r;
}

// All multi-indices of total degree n in ascending lexicographic order.
inline std::vector<MultiIndex> multi_indices(int d, int n) {
  std::vector<MultiIndex> out;
  MultiIndex a(d, 0);
  auto rec = [&](auto&& self, int pos, int rem) -> void {
    if (pos == d - 1) {
      a[pos] = rem;
      out.push_back(a);
      return;
    }
    for (int k = 0; k <= rem; ++k) {
      a[pos] = k;
      self(self, pos + 1, rem - k);
    }
  };
  if (d == 0) return out;
  rec(rec, 0, n);
  return out;
}

template <class T>
inline bool scalar_zero(const T& x) {
  return x == T(0);
}
inline bool scalar_zero(const Rational& x) { return sgn(x) == 0; }

template <class T>
inline T scalar_from_rational(const Rational& q);
template <>
inline Rational scalar_from_rational<Rational>(const Rational& q) {
  return q;
}
template <>
inline double scalar_from_rational<double>(const Rational& q) {
  return q.get_d();
}

template <class T>
T alpha_of(int d) {
  return scalar_from_rational<T>(alpha_q(d));
}

template <class T>
class Poly {
 public:
  using Map = std::map<MultiIndex, T>;

  Poly() = default;
  explicit Poly(int d) : d_(d) {}

  static Poly constant(int d, const T& c) {
    Poly p(d);
    p.add_term(MultiIndex(d, 0), c);
    return p;
  }
  static Poly variable(int d, int i) {
    MultiIndex a(d, 0);
    a[i] = 1;
    return monomial(a, T(1));
  }
  static Poly monomial(const MultiIndex& a, const T& c) {
    Poly p(static_cast<int>(a.size()));
    p.add_term(a, c);
    return p;
  }

  int dim() const { return d_; }
  const Map& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const {
    int m = -1;
    for (const auto& [a, c] : terms_) m = std::max(m, degree_of(a));
    return m;
  }
  bool is_homogeneous() const {
    int m = -2;
    for (const auto& [a, c] : terms_) {
      const int k = degree_of(a);
      if (m == -2) m = k;
      if (k != m) return false;
    }
    return true;
  }

  T coeff(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? T(0) : it->second;
  }

  void add_term(const MultiIndex& a, const T& c) {
    if (scalar_zero(c)) return;
    auto [it, inserted] = terms_.emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (scalar_zero(it->second)) terms_.erase(it);
    }
  }

  Poly& operator+=(const Poly& o) {
    check(o);
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    check(o);
    for (const auto& [a, c] : o.terms_) add_term(a, T(-c));
    return *this;
  }
  Poly& operator*=(const T& s) {
    if (scalar_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto& [a, c] : terms_) c *= s;
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(Poly a, const T& s) { return a *= s; }
  friend Poly operator*(const T& s, Poly a) { return a *= s; }
  Poly operator-() const { return (*this) * T(-1); }

  friend Poly operator*(const Poly& a, const Poly& b) {
    a.check(b);
    Poly r(a.d_);
    MultiIndex m(a.d_);
    for (const auto& [x, cx] : a.terms_)
      for (const auto& [y, cy] : b.terms_) {
        for (int i = 0; i < a.d_; ++i) m[i] = x[i] + y[i];
        r.add_term(m, cx * cy);
      }
    return r;
  }

  friend bool operator==(const Poly& a, const Poly& b) { return a.d_ == b.d_ && a.terms_ == b.terms_; }

  Poly homogeneous_part(int n) const {
    Poly r(d_);
    for (const auto& [a, c] : terms_)
      if (degree_of(a) == n) r.terms_.emplace(a, c);
    return r;
  }

  Poly derivative(int i) const {
    Poly r(d_);
    for (const auto& [a, c] : terms_) {
      if (a[i] == 0) continue;
      MultiIndex b = a;
      b[i] -= 1;
      r.add_term(b, c * T(a[i]));
    }
    return r;
  }

  Poly times_variable(int i) const {
    Poly r(d_);
    for (const auto& [a, c] : terms_) {
      MultiIndex b = a;
      b[i] += 1;
      r.terms_.emplace(b, c);
    }
    return r;
  }

  // Euler operator sum x_i d_i
  Poly euler() const {
    Poly r(d_);
    for (const auto& [a, c] : terms_) r.add_term(a, c * T(degree_of(a)));
    return r;
  }

  template <class U>
  Poly<U> cast() const {
    Poly<U> r(d_);
    for (const auto& [a, c] : terms_) r.add_term(a, convert<U>(c));
    return r;
  }

  double evaluate(const Vec& x) const {
    double s = 0.0;
    for (const auto& [a, c] : terms_) {
      double m = to_double(c);
      for (int i = 0; i < d_; ++i)
        if (a[i]) m *= std::pow(x(i), a[i]);
      s += m;
    }
    return s;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [a, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << c;
      for (int i = 0; i < d_; ++i)
        if (a[i]) os << "*x" << (i + 1) << (a[i] > 1 ? "^" + std::to_string(a[i]) : "");
    }
    if (first) os << "0";
    return os.str();
  }

 private:
  template <class U, class V>
  static U convert(const V& v) {
    if constexpr (std::is_same_v<U, V>)
      return v;
    else if constexpr (std::is_same_v<U, double>)
      return to_double(v);
    else
      return U(v);
  }
  void check(const Poly& o) const {
    if (o.d_ != d_) throw Error(Errc::DimensionMismatch, "polynomials in different dimensions");
  }

  int d_ = 0;
  Map terms_;
};

using QPoly = Poly<Rational>;
using DPoly = Poly<double>;

template <class T>
Poly<T> norm_squared_poly(int d) {
  Poly<T> r(d);
  for (int i = 0; i < d; ++i) {
    MultiIndex a(d, 0);
    a[i] = 2;
    r.add_term(a, T(1));
  }
  return r;
}

template <class T>
Poly<T> power(const Poly<T>& p, int k) {
  Poly<T> r = Poly<T>::constant(p.dim(), T(1));
  for (int i = 0; i < k; ++i) r = r * p;
  return r;
}

// Dense coordinates for homogeneous polynomials of one degree.
struct MonomialTable {
  int d = 0, n = 0;
  std::vector<MultiIndex> index;
  std::map<MultiIndex, int> rank;
  std::vector<double> fact;     // alpha! as double
  std::vector<mpz_class> factz;  // alpha! exact

  MonomialTable() = default;
  MonomialTable(int dim, int deg) : d(dim), n(deg), index(multi_indices(dim, deg)) {
    for (std::size_t k = 0; k < index.size(); ++k) {
      rank.emplace(index[k], static_cast<int>(k));
      factz.push_back(factorial_z(index[k]));
      fact.push_back(factz.back().get_d());
    }
  }
  int size() const { return static_cast<int>(index.size()); }
  int find(const MultiIndex& a) const {
    auto it = rank.find(a);
    return it == rank.end() ? -1 : it->second;
  }

  template <class T>
  std::vector<T> dense(const Poly<T>& p) const {
    std::vector<T> v(index.size(), T(0));
    for (const auto& [a, c] : p.terms()) {
      const int k = find(a);
      if (k < 0) throw Error(Errc::InvalidArgument, "polynomial not homogeneous of the table degree");
      v[k] = c;
    }
    return v;
  }
  template <class T>
  Poly<T> poly(const std::vector<T>& v) const {
    Poly<T> p(d);
    for (std::size_t k = 0; k < v.size(); ++k) p.add_term(index[k], v[k]);
    return p;
  }
  DPoly poly(const Vec& v) const {
    DPoly p(d);
    for (int k = 0; k < size(); ++k) p.add_term(index[k], v(k));
    return p;
  }
  // x^alpha for every alpha in the table
  Vec monomial_values(const Vec& x) const {
    Vec m(size());
    for (int k = 0; k < size(); ++k) {
      double v = 1.0;
      for (int i = 0; i < d; ++i)
        for (int e = 0; e < index[k][i]; ++e) v *= x(i);
      m(k) = v;
    }
    return m;
  }
};

}  // namespace cflat
