#pragma once

#include <random>

#include "mobius.hpp"

namespace cflat {

using Rng = std::mt19937_64;

inline Vec random_gaussian(int d, Rng& rng) {
  std::normal_distribution<double> nd;
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = nd(rng);
  return v;
}

inline Vec random_unit(int d, Rng& rng) {
  Vec v = random_gaussian(d, rng);
  return v / v.norm();
}

// uniform in the ball of radius rmax
inline Vec random_in_ball(int d, double rmax, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return random_unit(d, rng) * rmax * std::pow(u(rng), 1.0 / d);
}

inline Mat random_rotation(int d, Rng& rng) {
  Mat A(d, d);
  for (int j = 0; j < d; ++j) A.col(j) = random_gaussian(d, rng);
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

// Word of length <= 6 in the generators with bounded parameters.
inline MobiusMatrix random_word(int d, Rng& rng, int max_len = 6) {
  std::uniform_int_distribution<int> len(1, max_len), kind(0, 3);
  std::uniform_real_distribution<double> lam(0.5, 2.0);
  MobiusMatrix g = MobiusMatrix::identity(d);
  const int L = len(rng);
  for (int k = 0; k < L; ++k) {
    switch (kind(rng)) {
      case 0: g = g * translation(random_in_ball(d, 0.5, rng)); break;
      case 1: g = g * dilation(d, lam(rng)); break;
      case 2: g = g * rotation(random_rotation(d, rng)); break;
      default: g = g * sct(random_in_ball(d, 0.5, rng)); break;
    }
  }
  return g;
}

// Random element of G: boost composed with a rotation.
inline MobiusMatrix random_G(int d, Rng& rng, double max_shift = 0.7) {
  return boost_to(random_in_ball(d, max_shift, rng)) * rotation(random_rotation(d, rng));
}

// Random element of S \ G whose image ball sits inside the ball of radius `reach`.
inline MobiusMatrix random_S(int d, Rng& rng, double reach = 0.95, double max_shift = 0.6) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = 0.05 + 0.9 * reach * u(rng);
  const Vec c = random_in_ball(d, reach - r, rng);
  return translation(c) * dilation(d, r) * random_G(d, rng, max_shift);
}

// Random g in S, obtained by filtering random words.
inline MobiusMatrix random_S_word(int d, Rng& rng) {
  for (;;) {
    MobiusMatrix g = random_word(d, rng);
    if (classify(g) == Membership::InSNotG) return g;
  }
}

}  // namespace cflat
