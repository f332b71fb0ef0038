#include <gtest/gtest.h>

#include <cflat/contraction.hpp>
#include <cflat/random.hpp>

using namespace cflat;

namespace {

struct Env {
  std::unique_ptr<Truncation> t;
  std::unique_ptr<CoreTable> core;
};

const Env& env(int d, int N) {
  static std::map<std::pair<int, int>, Env> cache;
  auto& e = cache[{d, N}];
  if (!e.t) {
    e.t = std::make_unique<Truncation>(Truncation::make(d, N));
    e.core = std::make_unique<CoreTable>(*e.t);
  }
  return e;
}

struct Pair {
  Vec a, b;
  double r, s;
};

// two disjoint balls inside D with (r + s)/|a - b| <= smax
Pair random_pair(int d, Rng& rng, double smax = 0.6) {
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (;;) {
    Pair p{random_in_ball(d, 0.7, rng), random_in_ball(d, 0.7, rng), 0, 0};
    const double eta = (p.a - p.b).norm();
    if (eta < 0.2) continue;
    p.r = 0.5 * smax * eta * u(rng);
    p.s = 0.5 * smax * eta * u(rng);
    if (p.a.norm() + p.r < 1 && p.b.norm() + p.s < 1) return p;
  }
}

MobiusMatrix td(const Vec& a, double r) { return translation(a) * dilation(static_cast<int>(a.size()), r); }

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

Mat low_block(const Mat& m, const Truncation& t, int n) { return m.topLeftCorner(t.offset(n + 1), t.offset(n + 1)); }

}  // namespace

TEST(Core, VacuumEntry) {
  Rng rng(1);
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, 6);
    const Pair p = random_pair(d, rng);
    const auto C = contraction_core(p.a, p.r, p.b, p.s, *e.core);
    EXPECT_NEAR(C.C(0, 0), std::pow(C.sigma1 * C.sigma2, alpha_d(d)), 1e-15);
  }
}

TEST(Core, AgreesWithGreenOracle) {
  Rng rng(2);
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, 6);
    for (int k = 0; k < 4; ++k) {
      const Pair p = random_pair(d, rng, 0.9);
      const Mat C = contraction_core(p.a, p.r, p.b, p.s, *e.core).C;
      const Mat G = contraction_core_by_green(p.a, p.r, p.b, p.s, *e.t, 6);
      for (int n = 0; n <= 6; ++n)
        for (int m = 0; n + m <= 6; ++m) {
          const auto& t = *e.t;
          const Mat diff = C.block(t.offset(n), t.offset(m), t.count(n), t.count(m)) -
                           G.block(t.offset(n), t.offset(m), t.count(n), t.count(m));
          EXPECT_LT(max_abs(diff), 1e-10) << "d=" << d << " n=" << n << " m=" << m;
        }
    }
  }
}

TEST(Green, NoDerivatives) {
  Vec a(3), b(3);
  a << 0.4, 0.1, 0.0;
  b << -0.3, -0.2, 0.1;
  const MultiIndex z(3, 0);
  EXPECT_NEAR(contraction_green(a, 0.2, b, 0.1, z, z), std::sqrt(0.2 * 0.1) / (a - b).norm(), 1e-15);
}

TEST(Green, Harmonicity) {
  Rng rng(3);
  for (int d = 3; d <= 5; ++d) {
    const Pair p = random_pair(d, rng);
    GreenTable g(d);
    for (const auto& beta : multi_indices(d, 3))
      for (const auto& gamma : multi_indices(d, 1)) {
        double s = 0.0, scale = 0.0;
        for (int mu = 0; mu < d; ++mu) {
          MultiIndex b2 = beta;
          b2[mu] += 2;
          const double v = contraction_green(p.a, p.r, p.b, p.s, b2, gamma, g);
          s += v;
          scale += std::abs(v);
        }
        EXPECT_LE(std::abs(s), 1e-12 * std::max(scale, 1e-300));
      }
  }
}

TEST(Green, SwapSymmetry) {
  Rng rng(4);
  const int d = 3;
  const Pair p = random_pair(d, rng);
  GreenTable g(d);
  for (const auto& beta : multi_indices(d, 2))
    for (const auto& gamma : multi_indices(d, 3)) {
      const double x = contraction_green(p.a, p.r, p.b, p.s, beta, gamma, g);
      const double y = contraction_green(p.b, p.s, p.a, p.r, gamma, beta, g);
      EXPECT_NEAR(x, y, 1e-12 * std::abs(x));
      // the bare derivative is odd: d^delta G(b - a) = (-1)^{|beta|+|gamma|} d^delta G(a - b)
      MultiIndex bg(d);
      for (int i = 0; i < d; ++i) bg[i] = beta[i] + gamma[i];
      const double v = g.get(bg).evaluate(p.a - p.b);
      EXPECT_NEAR(g.get(bg).evaluate(p.b - p.a), -v, 1e-12 * std::abs(v));
    }
}

TEST(Core, EvaluatesKernel) {
  Rng rng(5);
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, d == 3 ? 16 : 10);
    for (int k = 0; k < 5; ++k) {
      const Pair p = random_pair(d, rng, 0.6);
      const auto C = contraction_core(p.a, p.r, p.b, p.s, *e.core);
      const Vec x = random_in_ball(d, 0.5, rng), y = random_in_ball(d, 0.5, rng);
      const double lhs = pairing(C, e_vector(x, *e.t), e_vector(y, *e.t));
      const double rhs = contraction_kernel_value(td(p.a, p.r), td(p.b, p.s), x, y);
      const double tail = pairing_tail(C.sigma1, C.sigma2, d, e.t->n_max(), x.norm(), y.norm());
      EXPECT_LE(std::abs(lhs - rhs), tail + 1e-12) << "d=" << d;
    }
  }
}

TEST(Bounds, EntryBoundBasics) {
  for (int d = 3; d <= 5; ++d) EXPECT_NEAR(entry_bound(0, 0, 0.3, 0.2, d), 1.0, 1e-14);
  for (int n = 0; n < 5; ++n)
    for (int m = 0; m < 5; ++m) {
      const double lo = entry_bound(n, m, 0.2, 0.3, 3), hi = entry_bound(n, m, 0.25, 0.3, 3);
      EXPECT_TRUE(n == 0 ? lo == hi : lo < hi);
    }
}

TEST(Bounds, AllEntriesObeyBound) {
  Rng rng(6);
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, d == 3 ? 12 : 8);
    for (int k = 0; k < 4; ++k) {
      const Pair p = random_pair(d, rng, 0.95);
      const auto C = contraction_core(p.a, p.r, p.b, p.s, *e.core);
      EXPECT_LE(max_entry_ratio(C, *e.t), 1.0);
    }
  }
}

TEST(Bounds, ClosedFormBlockNorms) {
  Rng rng(7);
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, 8);
    const auto& t = *e.t;
    const Pair p = random_pair(d, rng, 0.8);
    const auto C = contraction_core(p.a, p.r, p.b, p.s, *e.core);
    for (int n = 0; n <= 8; ++n)
      for (int m = 0; m <= 8; ++m) {
        const double f = C.C.block(t.offset(n), t.offset(m), t.count(n), t.count(m)).squaredNorm();
        EXPECT_NEAR(f, hs_block_squared(n, m, C.sigma1, C.sigma2, d), 1e-10 * f + 1e-300);
      }
    EXPECT_NEAR(hs_norm(C), hs_norm_closed(C.sigma1, C.sigma2, d, 8), 1e-12);
    EXPECT_LE(hs_norm(C), hs_upper_bound(C.sigma1, C.sigma2, d, 8));
    EXPECT_LE(largest_singular_value(C), hs_norm(C) * (1 + 1e-12));
  }
}

TEST(Bounds, HsMonotoneInN) {
  double prev = 0.0;
  for (int N = 0; N <= 30; N += 3) {
    const double h = hs_norm_closed(0.3, 0.4, 3, N);
    EXPECT_GE(h, prev);
    prev = h;
  }
  ContractionMatrix zero{3, 2, Mat::Zero(4, 4), 0.1, 0.1, ""};
  EXPECT_EQ(hs_norm(zero), 0.0);
}

TEST(Core, Errors) {
  const auto& e = env(3, 2);
  Vec a = Vec::Zero(3), b = Vec::Unit(3, 0) * 0.5;
  EXPECT_THROW(contraction_core(a, 0.3, b, 0.3, *e.core), Error);
  EXPECT_THROW(contraction_core(a, 0.2, Vec::Unit(3, 0) * 0.9, 0.2, *e.core), Error);
}

TEST(General, TranslatedDilationsMatchCore) {
  Rng rng(8);
  const auto& e = env(3, 10);
  const Pair p = random_pair(3, rng);
  const Mat core = contraction_core(p.a, p.r, p.b, p.s, *e.core).C;
  for (auto route : {ContractionRoute::Gauss, ContractionRoute::DecomposeS}) {
    const Mat g = contraction_general(td(p.a, p.r), td(p.b, p.s), *e.core, route).C;
    EXPECT_LT(max_abs(g - core), 1e-9);
  }
}

TEST(General, RoutesAgreeOnLowDegrees) {
  Rng rng(9);
  const auto& e = env(3, 16);
  for (int k = 0; k < 3; ++k) {
    const Pair p = random_pair(3, rng, 0.5);
    const auto g1 = td(p.a, p.r) * random_G(3, rng, 0.3), g2 = td(p.b, p.s) * random_G(3, rng, 0.3);
    const Mat a = contraction_general(g1, g2, *e.core, ContractionRoute::Gauss).C;
    const Mat b = contraction_general(g1, g2, *e.core, ContractionRoute::DecomposeS).C;
    EXPECT_LT(max_abs(low_block(a - b, *e.t, 3)), 1e-6);
  }
}

TEST(General, KernelEvaluation) {
  Rng rng(10);
  const auto& e = env(3, 16);
  for (int k = 0; k < 4; ++k) {
    const Pair p = random_pair(3, rng, 0.5);
    const auto g1 = td(p.a, p.r) * random_G(3, rng, 0.3), g2 = td(p.b, p.s) * random_G(3, rng, 0.3);
    const auto C = contraction_general(g1, g2, *e.core);
    const Vec x = random_in_ball(3, 0.2, rng), y = random_in_ball(3, 0.2, rng);
    const double lhs = pairing(C, e_vector(x, *e.t), e_vector(y, *e.t));
    EXPECT_NEAR(lhs, contraction_kernel_value(g1, g2, x, y), 1e-8);
  }
}

TEST(General, PrecompositionLaw) {
  Rng rng(11);
  const auto& e = env(3, 16);
  const auto& t = *e.t;
  const Pair p = random_pair(3, rng, 0.5);
  const auto g1 = td(p.a, p.r), g2 = td(p.b, p.s);
  const auto f = random_S(3, rng, 0.8, 0.3);
  const Mat lhs = contraction_general(g1 * f, g2, *e.core).C;
  const Mat rhs = op_rho(f, t).transpose() * contraction_general(g1, g2, *e.core).C;
  EXPECT_LT(max_abs(low_block(lhs - rhs, t, 3)), 1e-6);
}

TEST(General, LeftInvariance) {
  Rng rng(12);
  const auto& e = env(3, 12);
  int tested = 0;
  while (tested < 3) {
    const Pair p = random_pair(3, rng, 0.4);
    const auto g1 = td(p.a, p.r), g2 = td(p.b, p.s);
    const auto h = random_G(3, rng, 0.2);
    if (!is_CE_config({h * g1, h * g2}).strict) continue;
    const Mat a = contraction_general(g1, g2, *e.core).C;
    const Mat b = contraction_general(h * g1, h * g2, *e.core).C;
    EXPECT_LT(max_abs(a - b), tol::num);
    ++tested;
  }
}

TEST(General, SwapCovariance) {
  Rng rng(13);
  const auto& e = env(3, 10);
  const Pair p = random_pair(3, rng);
  const auto g1 = td(p.a, p.r) * random_G(3, rng, 0.3), g2 = td(p.b, p.s);
  const Mat a = contraction_general(g1, g2, *e.core).C;
  const Mat b = contraction_general(g2, g1, *e.core).C;
  EXPECT_LT(max_abs(a - b.transpose()), 1e-10);
}

TEST(General, RejectsOverlap) {
  const auto& e = env(3, 2);
  EXPECT_THROW(contraction_general(dilation(3, 0.5), dilation(3, 0.4), *e.core), Error);
}

TEST(Unbounded, MatrixMatchesClosedForm) {
  for (int d = 3; d <= 4; ++d) {
    const auto& e = env(d, 8);
    const double s1 = 0.3, s2 = 0.45;
    const auto A = unbounded_probe_matrix(s1, s2, *e.core);
    const Mat B = unbounded_probe_closed(s1, s2, d, 8);
    EXPECT_LT((A - B.cast<std::complex<double>>()).cwiseAbs().maxCoeff(), 1e-10) << "d=" << d;
  }
}

TEST(Unbounded, ProfileBasics) {
  const auto small = lower_bound_profile(1e-4, 10, 4);
  EXPECT_NEAR(small.closed_norm, std::pow(0.5e-4 * 0.5e-4, 1.0), 1e-15);
  EXPECT_NEAR(small.rigorous, small.closed_norm, 1e-12);
  EXPECT_GE(lower_bound_partial(0.999, 60, 4), 2.0);
  for (int d = 3; d <= 5; ++d)
    for (double sg : {0.3, 0.7, 0.99, 1.0}) {
      const auto p = lower_bound_profile(sg, 20, d);
      EXPECT_GE(p.closed_norm, p.rigorous * (1 - 1e-12));
      EXPECT_GE(hs_norm_closed(sg / 2, sg / 2, d, 20), p.closed_norm * (1 - 1e-12));
    }
}

TEST(Sweep, ThresholdSignature) {
  const auto rows = boundedness_sweep({1.0, 0.5}, {60, 20, 40}, 4);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows.front().sigma, 0.5);
  EXPECT_EQ(rows.front().N, 20);
  EXPECT_LT(std::abs(rows[1].hs_norm - rows[0].hs_norm), 1e-8);
  EXPECT_GT(rows[4].hs_norm, rows[3].hs_norm);
  EXPECT_GT(rows[5].hs_norm, rows[4].hs_norm);
  for (const auto& r : rows) {
    EXPECT_LE(r.lower_bound, r.hs_norm);
    EXPECT_LE(r.max_entry_ratio, 1.0);
  }
  EXPECT_EQ(boundedness_sweep({0.9}, {10}, 3).size(), 1u);
  EXPECT_THROW(boundedness_sweep({1.2}, {10}, 3), Error);
}
