#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

namespace cflat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rational = mpq_class;

enum class Errc {
  NonOrthogonalRotation,
  NonPositiveDilation,
  PoleAtPoint,
  DimensionMismatch,
  NotApplicable,
  BoundaryTouching,
  OutsideBigCell,
  NotInS,
  OutsideDomain,
  NotHarmonic,
  RankDeficiency,
  OutsideDisk,
  GeometricOverlap,
  ParticleOverflow,
  NonStrictConfig,
  NoFreePoint,
  UnsupportedDimension,
  InvalidArgument,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::NonOrthogonalRotation: return "NonOrthogonalRotation";
    case Errc::NonPositiveDilation: return "NonPositiveDilation";
    case Errc::PoleAtPoint: return "PoleAtPoint";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotApplicable: return "NotApplicable";
    case Errc::BoundaryTouching: return "BoundaryTouching";
    case Errc::OutsideBigCell: return "OutsideBigCell";
    case Errc::NotInS: return "NotInS";
    case Errc::OutsideDomain: return "OutsideDomain";
    case Errc::NotHarmonic: return "NotHarmonic";
    case Errc::RankDeficiency: return "RankDeficiency";
    case Errc::OutsideDisk: return "OutsideDisk";
    case Errc::GeometricOverlap: return "GeometricOverlap";
    case Errc::ParticleOverflow: return "ParticleOverflow";
    case Errc::NonStrictConfig: return "NonStrictConfig";
    case Errc::NoFreePoint: return "NoFreePoint";
    case Errc::UnsupportedDimension: return "UnsupportedDimension";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

namespace tol {
inline constexpr double grp = 1e-10;
inline constexpr double num = 1e-9;
inline constexpr double geo = 1e-9;
inline constexpr double fd = 1e-5;
inline constexpr double basis = 1e-12;
inline constexpr double pole = 1e-13;
}  // namespace tol

inline void require_dim(int d) {
  if (d < 3) throw Error(Errc::UnsupportedDimension, "d must be >= 3, got " + std::to_string(d));
}

inline Rational rat(long num, long den = 1) {
  Rational q(num);
  q /= den;
  return q;
}

// (d-2)/2 as an exact rational
inline Rational alpha_q(int d) { return rat(d - 2, 2); }
inline double alpha_d(int d) { return 0.5 * (d - 2); }

template <class T>
T pochhammer(const T& a, int n) {
  T r(1);
  for (int k = 0; k < n; ++k) r *= (a + T(k));
  return r;
}

inline mpz_class factorial_z(int n) {
  mpz_class r;
  mpz_fac_ui(r.get_mpz_t(), static_cast<unsigned long>(n));
  return r;
}

inline mpz_class binomial_z(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return r;
}

inline double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

inline double log_pochhammer(double a, int n) { return std::lgamma(a + n) - std::lgamma(a); }

// A_{d,n}
inline long long dim_harm(int d, int n) {
  if (n < 0) return 0;
  mpz_class a = binomial_z(n + d - 1, d - 1) - binomial_z(n + d - 3, d - 1);
  return a.get_si();
}

inline double to_double(const Rational& q) { return q.get_d(); }
inline double to_double(double x) { return x; }

}  // namespace cflat
