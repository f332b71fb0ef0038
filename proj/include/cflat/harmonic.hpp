#pragma once

#include <utility>

#include "poly.hpp"

namespace cflat {

template <class T>
Poly<T> laplacian(const Poly<T>& f) {
  Poly<T> r(f.dim());
  for (int i = 0; i < f.dim(); ++i) r += f.derivative(i).derivative(i);
  return r;
}

inline bool is_harmonic(const QPoly& f) { return laplacian(f).is_zero(); }

inline bool is_harmonic(const DPoly& f, double tol) {
  for (const auto& [a, c] : laplacian(f).terms())
    if (std::abs(c) > tol) return false;
  return true;
}

template <class T>
T fisher_inner(const Poly<T>& f, const Poly<T>& g) {
  if (f.dim() != g.dim()) throw Error(Errc::DimensionMismatch, "fisher_inner: dimensions differ");
  T s(0);
  const auto& small = f.size() <= g.size() ? f : g;
  const auto& big = f.size() <= g.size() ? g : f;
  for (const auto& [a, c] : small.terms()) {
    auto it = big.terms().find(a);
    if (it == big.terms().end()) continue;
    if constexpr (std::is_same_v<T, Rational>)
      s += c * it->second * Rational(factorial_z(a));
    else
      s += c * it->second * factorial_d(a);
  }
  return s;
}

// 2^m ((d-2)/2)_m : the ratio between Fisher and H norms on Harm_{d,m}
template <class T>
T fisher_h_ratio(int d, int m) {
  T r(1);
  const T a = alpha_of<T>(d);
  for (int k = 0; k < m; ++k) r *= T(2) * (a + T(k));
  return r;
}

inline double fisher_h_ratio_d(int d, int m) { return fisher_h_ratio<double>(d, m); }

// Harmonic part of a homogeneous polynomial of degree m:
// sum_j c_j |x|^{2j} Lap^j f,  c_j = (-1)^j / (2^j j! prod_{i=1..j} (d + 2m - 2 - 2i))
template <class T>
Poly<T> project_harmonic_homogeneous(const Poly<T>& f, int m) {
  const int d = f.dim();
  const Poly<T> r2 = norm_squared_poly<T>(d);
  Poly<T> out = f;
  Poly<T> lap = f;
  Poly<T> rpow = Poly<T>::constant(d, T(1));
  Rational c = 1;
  for (int j = 1; 2 * j <= m; ++j) {
    lap = laplacian(lap);
    if (lap.is_zero()) break;
    rpow = rpow * r2;
    c *= rat(-1, 2 * j * (d + 2 * m - 2 - 2 * j));
    out += (rpow * lap) * scalar_from_rational<T>(c);
  }
  return out;
}

template <class T>
Poly<T> project_harmonic(const Poly<T>& f) {
  Poly<T> out(f.dim());
  for (int m = 0; m <= f.degree(); ++m) {
    Poly<T> fm = f.homogeneous_part(m);
    if (!fm.is_zero()) out += project_harmonic_homogeneous(fm, m);
  }
  return out;
}

// ---- twisted so(d+1,1) action ----

struct Generator {
  enum Kind { P, K, D, J } kind;
  int mu = 0, nu = 0;
  static Generator P_(int m) { return {P, m, 0}; }
  static Generator K_(int m) { return {K, m, 0}; }
  static Generator D_() { return {D, 0, 0}; }
  static Generator J_(int m, int n) { return {J, m, n}; }
};

template <class T>
Poly<T> act_twisted(const Generator& g, const Poly<T>& f) {
  const int d = f.dim();
  const T a = alpha_of<T>(d);
  switch (g.kind) {
    case Generator::P: {
      Poly<T> e = f.euler() + f * a;
      return e.times_variable(g.mu) * T(2) - norm_squared_poly<T>(d) * f.derivative(g.mu);
    }
    case Generator::K:
      return f.derivative(g.mu);
    case Generator::D:
      return f.euler() + f * a;
    case Generator::J:
      return f.derivative(g.nu).times_variable(g.mu) - f.derivative(g.mu).times_variable(g.nu);
  }
  return f;
}

// f(P).1 by applying P-monomials to the constant polynomial
template <class T>
Poly<T> apply_P_polynomial(const Poly<T>& f) {
  const int d = f.dim();
  Poly<T> out(d);
  std::map<MultiIndex, Poly<T>> memo;
  memo.emplace(MultiIndex(d, 0), Poly<T>::constant(d, T(1)));
  auto get = [&](auto&& self, const MultiIndex& b) -> const Poly<T>& {
    auto it = memo.find(b);
    if (it != memo.end()) return it->second;
    int i = 0;
    while (b[i] == 0) ++i;
    MultiIndex c = b;
    c[i] -= 1;
    Poly<T> v = act_twisted(Generator::P_(i), self(self, c));
    return memo.emplace(b, std::move(v)).first->second;
  };
  for (const auto& [b, c] : f.terms()) out += get(get, b) * c;
  return out;
}

template <class T>
void require_harmonic(const Poly<T>& f, double tol) {
  if constexpr (std::is_same_v<T, Rational>) {
    (void)tol;
    if (!is_harmonic(f)) throw Error(Errc::NotHarmonic, "polynomial is not harmonic");
  } else {
    if (!is_harmonic(f, tol)) throw Error(Errc::NotHarmonic, "polynomial is not harmonic");
  }
}

template <class T>
T h_inner(const Poly<T>& f, const Poly<T>& g, double tol = 1e-9) {
  require_harmonic(f, tol);
  require_harmonic(g, tol);
  const int d = f.dim();
  T s(0);
  const int m = std::max(f.degree(), g.degree());
  for (int n = 0; n <= m; ++n) {
    Poly<T> fn = f.homogeneous_part(n), gn = g.homogeneous_part(n);
    if (fn.is_zero() || gn.is_zero()) continue;
    s += fisher_inner(fn, gn) / fisher_h_ratio<T>(d, n);
  }
  return s;
}

// ---- Gegenbauer ----

// C_N^{(lambda)}(t), lambda = (d-2)/2, by the three-term recurrence
inline double gegenbauer(int N, double t, int d) {
  const double lam = alpha_d(d);
  double c0 = 1.0;
  if (N == 0) return c0;
  double c1 = 2.0 * lam * t;
  for (int n = 2; n <= N; ++n) {
    const double c2 = (2.0 * t * (n + lam - 1.0) * c1 - (n + 2.0 * lam - 2.0) * c0) / n;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

// exact coefficients of C_N in powers of t
inline std::vector<Rational> gegenbauer_coeffs(int N, int d) {
  const Rational lam = alpha_q(d);
  std::vector<Rational> c0{1};
  if (N == 0) return c0;
  std::vector<Rational> c1{0, 2 * lam};
  for (int n = 2; n <= N; ++n) {
    std::vector<Rational> c2(n + 1, Rational(0));
    for (std::size_t k = 0; k < c1.size(); ++k) c2[k + 1] += 2 * (n + lam - 1) * c1[k] / n;
    for (std::size_t k = 0; k < c0.size(); ++k) c2[k] -= (n + 2 * lam - 2) * c0[k] / n;
    c0 = std::move(c1);
    c1 = std::move(c2);
  }
  return c1;
}

inline double gegenbauer_at_one(int N, int d) {
  return std::exp(log_pochhammer(d - 2.0, N) - std::lgamma(N + 1.0));
}

// ---- zonal vectors ----

// F_a^N = (a.x)^N / N!
template <class T>
Poly<T> power_form(const std::vector<T>& a, int N) {
  const int d = static_cast<int>(a.size());
  Poly<T> f(d);
  for (const MultiIndex& b : multi_indices(d, N)) {
    T c(1);
    for (int i = 0; i < d; ++i)
      for (int e = 0; e < b[i]; ++e) c *= a[i];
    if constexpr (std::is_same_v<T, Rational>)
      c /= Rational(factorial_z(b));
    else
      c /= factorial_d(b);
    f.add_term(b, c);
  }
  return f;
}

// E_a^N = 2^N ((d-2)/2)_N pr_H(F_a^N)
template <class T>
Poly<T> zonal(const std::vector<T>& a, int N) {
  const int d = static_cast<int>(a.size());
  return project_harmonic_homogeneous(power_form(a, N), N) * fisher_h_ratio<T>(d, N);
}

// E_a^N from its definition sum (1/alpha!) a^alpha P^alpha.1
template <class T>
Poly<T> zonal_by_definition(const std::vector<T>& a, int N) {
  return apply_P_polynomial(power_form(a, N));
}

// ---- Green-function derivatives ----

// sum_k p_k(x) |x|^{-(d-2)-2k}
struct GreenForm {
  int d = 3;
  std::map<int, QPoly> parts;

  static GreenForm green(int d) {
    GreenForm g;
    g.d = d;
    g.parts.emplace(0, QPoly::constant(d, Rational(1)));
    return g;
  }

  GreenForm derivative(int i) const {
    GreenForm r;
    r.d = d;
    auto add = [&](int k, const QPoly& p) {
      if (p.is_zero()) return;
      auto it = r.parts.find(k);
      if (it == r.parts.end())
        r.parts.emplace(k, p);
      else
        it->second += p;
    };
    for (const auto& [k, p] : parts) {
      add(k, p.derivative(i));
      add(k + 1, p.times_variable(i) * Rational(-(d - 2 + 2 * k)));
    }
    return r;
  }

  double evaluate(const Vec& x) const {
    const double r2 = x.squaredNorm();
    double s = 0.0;
    for (const auto& [k, p] : parts) s += p.evaluate(x) * std::pow(r2, -0.5 * (d - 2 + 2 * k));
    return s;
  }
};

// Memoized table of d^beta |x|^{-(d-2)}
class GreenTable {
 public:
  explicit GreenTable(int d) : d_(d) { memo_.emplace(MultiIndex(d, 0), GreenForm::green(d)); }

  const GreenForm& get(const MultiIndex& b) {
    auto it = memo_.find(b);
    if (it != memo_.end()) return it->second;
    int i = 0;
    while (b[i] == 0) ++i;
    MultiIndex c = b;
    c[i] -= 1;
    GreenForm g = get(c).derivative(i);
    return memo_.emplace(b, std::move(g)).first->second;
  }

 private:
  int d_;
  std::map<MultiIndex, GreenForm> memo_;
};

// |x|^{d-2+2m} f(-d) |x|^{-(d-2)} for homogeneous f of degree m
inline QPoly kelvin_dual(const QPoly& f) {
  const int d = f.dim();
  if (f.is_zero()) return f;
  if (!f.is_homogeneous()) throw Error(Errc::InvalidArgument, "kelvin_dual needs a homogeneous polynomial");
  const int m = f.degree();
  GreenTable table(d);
  std::map<int, QPoly> acc;
  for (const auto& [b, c] : f.terms()) {
    const Rational sign = (m % 2) ? Rational(-1) : Rational(1);
    for (const auto& [k, p] : table.get(b).parts) {
      auto it = acc.find(k);
      QPoly term = p * Rational(c * sign);
      if (it == acc.end())
        acc.emplace(k, term);
      else
        it->second += term;
    }
  }
  const QPoly r2 = norm_squared_poly<Rational>(d);
  QPoly out(d);
  for (const auto& [k, p] : acc) {
    if (k > m) throw Error(Errc::InvalidArgument, "kelvin_dual: unexpected pole order");
    out += p * power(r2, m - k);
  }
  return out;
}

// L(-1)^n.1 with L(-1) = (P_1 - i P_2)/2, returned as (real part, imaginary part)
inline std::pair<QPoly, QPoly> lminus_power(int d, int n) {
  QPoly re = QPoly::constant(d, Rational(1)), im(d);
  for (int k = 0; k < n; ++k) {
    QPoly p1u = act_twisted(Generator::P_(0), re), p2v = act_twisted(Generator::P_(1), im);
    QPoly p1v = act_twisted(Generator::P_(0), im), p2u = act_twisted(Generator::P_(1), re);
    re = (p1u + p2v) * rat(1, 2);
    im = (p1v - p2u) * rat(1, 2);
  }
  return {re, im};
}

}  // namespace cflat
