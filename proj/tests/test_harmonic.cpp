#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <cflat/basis.hpp>
#include <cflat/random.hpp>

using namespace cflat;

namespace {

MultiIndex mi(std::initializer_list<int> l) { return MultiIndex(l); }

QPoly random_qpoly(int d, int n, Rng& rng) {
  std::uniform_int_distribution<int> u(-5, 5);
  QPoly p(d);
  for (const auto& a : multi_indices(d, n)) p.add_term(a, rat(u(rng)));
  return p;
}

QPoly random_harmonic(int d, int n, Rng& rng) { return project_harmonic_homogeneous(random_qpoly(d, n, rng), n); }

QPoly apply(const Generator& g, const QPoly& f) { return act_twisted(g, f); }

QPoly commutator(const Generator& a, const Generator& b, const QPoly& f) {
  return apply(a, apply(b, f)) - apply(b, apply(a, f));
}

Rational delta(int a, int b) { return a == b ? Rational(1) : Rational(0); }

}  // namespace

TEST(Poly, LaplacianExamples) {
  const int d = 3;
  EXPECT_EQ(laplacian(QPoly::monomial(mi({2, 0, 0}), 1)), QPoly::constant(d, 2));
  const QPoly f = QPoly::monomial(mi({2, 0, 0}), 1) - norm_squared_poly<Rational>(d) * rat(1, d);
  EXPECT_TRUE(is_harmonic(f));
  EXPECT_TRUE(laplacian(QPoly::constant(d, 7)).is_zero());
  EXPECT_TRUE(is_harmonic(QPoly(d)));
}

TEST(Poly, DimHarm) {
  for (int n = 0; n < 20; ++n) EXPECT_EQ(dim_harm(3, n), 2 * n + 1);
  for (int n = 0; n < 20; ++n) EXPECT_EQ(dim_harm(4, n), (n + 1) * (n + 1));
  for (int d = 3; d < 8; ++d) EXPECT_EQ(dim_harm(d, 0), 1);
}

TEST(Poly, FisherExamples) {
  const QPoly x1sq = QPoly::monomial(mi({2, 0, 0}), 1);
  EXPECT_EQ(fisher_inner(x1sq, x1sq), 2);
  EXPECT_EQ(fisher_inner(QPoly::variable(3, 0), QPoly::variable(3, 1)), 0);
  const QPoly x1x2 = QPoly::monomial(mi({1, 1, 0}), 1);
  EXPECT_EQ(fisher_inner(x1x2, x1x2), 1);
  EXPECT_THROW(fisher_inner(x1x2, QPoly::variable(4, 0)), Error);
}

TEST(Harmonic, ProjectionExamples) {
  const int d = 3;
  const QPoly r2 = norm_squared_poly<Rational>(d);
  EXPECT_TRUE(project_harmonic(r2).is_zero());
  const QPoly x1sq = QPoly::monomial(mi({2, 0, 0}), 1);
  EXPECT_EQ(project_harmonic(x1sq), x1sq - r2 * rat(1, 3));
}

TEST(Harmonic, ProjectionProperties) {
  Rng rng(3);
  for (int d = 3; d <= 5; ++d)
    for (int n = 0; n <= 6; ++n) {
      const QPoly f = random_qpoly(d, n, rng);
      const QPoly h = project_harmonic(f);
      EXPECT_TRUE(is_harmonic(h));
      EXPECT_EQ(project_harmonic(h), h);
      // f - pr_H f is orthogonal to every harmonic polynomial of degree n
      const QPoly g = random_harmonic(d, n, rng);
      EXPECT_EQ(fisher_inner(f - h, g), 0);
    }
}

TEST(Harmonic, ProjectionOfPowerIsGegenbauer) {
  for (int d = 3; d <= 5; ++d)
    for (int N = 0; N <= 8; ++N) {
      // pr_H(x1^N) = N!/(2^N alpha_N) |x|^N C_N(x1/|x|); compare coefficients of x1^{N-2k}|x|^{2k}
      MultiIndex xN(d, 0);
      xN[0] = N;
      const QPoly lhs = project_harmonic(QPoly::monomial(xN, 1));
      const auto c = gegenbauer_coeffs(N, d);
      QPoly rhs(d);
      const QPoly r2 = norm_squared_poly<Rational>(d);
      for (int j = 0; j <= N; ++j) {
        if (sgn(c[j]) == 0) continue;
        MultiIndex a(d, 0);
        a[0] = j;
        rhs += QPoly::monomial(a, c[j]) * power(r2, (N - j) / 2);
      }
      Rational k(factorial_z(N));
      k /= fisher_h_ratio<Rational>(d, N);
      EXPECT_EQ(lhs, rhs * k) << "d=" << d << " N=" << N;
    }
}

TEST(Harmonic, TwistedActionExamples) {
  for (int d = 3; d <= 5; ++d) {
    const QPoly one = QPoly::constant(d, 1);
    for (int mu = 0; mu < d; ++mu) {
      EXPECT_EQ(act_twisted(Generator::P_(mu), one), QPoly::variable(d, mu) * Rational(d - 2));
      EXPECT_TRUE(act_twisted(Generator::K_(mu), one).is_zero());
    }
    EXPECT_EQ(act_twisted(Generator::D_(), one), QPoly::constant(d, alpha_q(d)));
  }
}

TEST(Harmonic, PPreservesHarmonicity) {
  Rng rng(5);
  for (int d = 3; d <= 4; ++d)
    for (int n = 0; n <= 5; ++n) {
      const QPoly f = random_harmonic(d, n, rng);
      for (int mu = 0; mu < d; ++mu) EXPECT_TRUE(is_harmonic(act_twisted(Generator::P_(mu), f)));
    }
}

TEST(Harmonic, CommutationRelations) {
  Rng rng(7);
  for (int d = 3; d <= 4; ++d) {
    std::vector<QPoly> sample;
    for (int n = 0; n <= 6; ++n) sample.push_back(random_harmonic(d, n, rng));
    const auto D = Generator::D_();
    for (const QPoly& f : sample)
      for (int mu = 0; mu < d; ++mu) {
        EXPECT_EQ(commutator(D, Generator::K_(mu), f), -apply(Generator::K_(mu), f));
        EXPECT_EQ(commutator(D, Generator::P_(mu), f), apply(Generator::P_(mu), f));
        for (int nu = 0; nu < d; ++nu) {
          const auto J = Generator::J_(mu, nu);
          EXPECT_TRUE(commutator(D, J, f).is_zero());
          EXPECT_EQ(commutator(Generator::P_(mu), Generator::K_(nu), f),
                    (apply(D, f) * delta(mu, nu) + apply(J, f)) * Rational(-2));
          EXPECT_TRUE(commutator(Generator::P_(mu), Generator::P_(nu), f).is_zero());
          EXPECT_TRUE(commutator(Generator::K_(mu), Generator::K_(nu), f).is_zero());
          for (int rho = 0; rho < d; ++rho) {
            EXPECT_EQ(commutator(J, Generator::P_(rho), f),
                      apply(Generator::P_(mu), f) * delta(nu, rho) - apply(Generator::P_(nu), f) * delta(mu, rho));
            EXPECT_EQ(commutator(J, Generator::K_(rho), f),
                      apply(Generator::K_(mu), f) * delta(nu, rho) - apply(Generator::K_(nu), f) * delta(mu, rho));
            for (int sg = 0; sg < d; ++sg) {
              const QPoly rhs = apply(Generator::J_(mu, sg), f) * delta(nu, rho) -
                                apply(Generator::J_(nu, sg), f) * delta(mu, rho) -
                                apply(Generator::J_(mu, rho), f) * delta(nu, sg) +
                                apply(Generator::J_(nu, rho), f) * delta(mu, sg);
              EXPECT_EQ(commutator(J, Generator::J_(rho, sg), f), rhs);
            }
          }
        }
      }
  }
}

TEST(Harmonic, FisherHProportionality) {
  // f(P).1 = 2^m alpha_m pr_H(f): both sides are computed independently
  Rng rng(11);
  for (int d = 3; d <= 4; ++d)
    for (int m = 0; m <= 6; ++m) {
      const QPoly f = random_qpoly(d, m, rng);
      EXPECT_EQ(apply_P_polynomial(f), project_harmonic(f) * fisher_h_ratio<Rational>(d, m));
    }
}

TEST(Harmonic, HInnerExamples) {
  const int d = 3;
  EXPECT_EQ(h_inner(QPoly::constant(d, 1), QPoly::constant(d, 1)), 1);
  const QPoly y1 = QPoly::variable(d, 0);
  const QPoly y2 = QPoly::monomial(mi({1, 1, 0}), 1);
  EXPECT_EQ(h_inner(y1, y2), 0);
  EXPECT_THROW(h_inner(QPoly::monomial(mi({2, 0, 0}), 1), y1), Error);
  // ||P_1 . 1||_H^2 = (d-2)^2 ||x_1||^2_H = (d-2)^2 / (2 alpha) = d - 2
  const QPoly p1 = act_twisted(Generator::P_(0), QPoly::constant(d, 1));
  EXPECT_EQ(h_inner(p1, p1), d - 2);
}

TEST(Harmonic, LMinusPowerNorm) {
  for (int d = 3; d <= 5; ++d)
    for (int n = 0; n <= 12; ++n) {
      const auto [re, im] = lminus_power(d, n);
      const Rational norm2 = h_inner(re, re) + h_inner(im, im);
      Rational expect(factorial_z(n));
      expect *= pochhammer(alpha_q(d), n);
      EXPECT_EQ(norm2, expect) << "d=" << d << " n=" << n;
    }
}

TEST(Harmonic, KelvinDual) {
  for (int d = 3; d <= 5; ++d) {
    EXPECT_EQ(kelvin_dual(QPoly::constant(d, 1)), QPoly::constant(d, 1));
    EXPECT_EQ(kelvin_dual(QPoly::variable(d, 0)), QPoly::variable(d, 0) * Rational(d - 2));
  }
  Rng rng(13);
  for (int d = 3; d <= 4; ++d)
    for (int m = 0; m <= 6; ++m) {
      const QPoly f = random_qpoly(d, m, rng);
      EXPECT_EQ(kelvin_dual(f), apply_P_polynomial(f)) << "d=" << d << " m=" << m;
    }
}

TEST(Gegenbauer, LowOrder) {
  for (int d = 3; d <= 6; ++d)
    for (double t : {-0.7, 0.0, 0.3, 1.0}) {
      EXPECT_EQ(gegenbauer(0, t, d), 1.0);
      EXPECT_NEAR(gegenbauer(1, t, d), (d - 2) * t, 1e-15);
    }
}

TEST(Gegenbauer, ValueAtOne) {
  for (int d = 3; d <= 6; ++d)
    for (int N = 0; N <= 30; ++N) {
      const double expect = std::exp(log_pochhammer(d - 2.0, N) - std::lgamma(N + 1.0));
      EXPECT_NEAR(gegenbauer(N, 1.0, d) / expect, 1.0, 1e-12);
      EXPECT_NEAR(gegenbauer_at_one(N, d) / expect, 1.0, 1e-12);
    }
}

TEST(Gegenbauer, GeneratingFunction) {
  for (int d = 3; d <= 5; ++d)
    for (double t : {-0.9, -0.2, 0.4, 0.95}) {
      const double r = 0.4;
      double s = 0.0;
      for (int N = 0; N <= 80; ++N) s += gegenbauer(N, t, d) * std::pow(r, N);
      EXPECT_NEAR(s, std::pow(1 - 2 * r * t + r * r, -alpha_d(d)), 1e-12);
    }
}

TEST(Gegenbauer, CoefficientsMatchRecurrence) {
  for (int d = 3; d <= 5; ++d)
    for (int N = 0; N <= 12; ++N) {
      const auto c = gegenbauer_coeffs(N, d);
      for (double t : {-0.8, 0.1, 0.6}) {
        double s = 0.0;
        for (int j = N; j >= 0; --j) s = s * t + c[j].get_d();
        EXPECT_NEAR(s, gegenbauer(N, t, d), 1e-10 * std::max(1.0, std::abs(s)));
      }
    }
}

TEST(Zonal, Degenerate) {
  for (int d = 3; d <= 4; ++d) {
    const std::vector<Rational> zero(d, Rational(0));
    EXPECT_EQ(zonal(zero, 0), QPoly::constant(d, 1));
    for (int N = 1; N <= 4; ++N) EXPECT_TRUE(zonal(zero, N).is_zero());
  }
}

TEST(Zonal, DefinitionAgrees) {
  const std::vector<Rational> a{rat(1, 3), rat(-1, 2), rat(2, 5)};
  for (int N = 0; N <= 6; ++N) EXPECT_EQ(zonal(a, N), zonal_by_definition(a, N));
}

TEST(Zonal, ReproducingProperty) {
  const int d = 3;
  const auto basis = build_basis(d, 6);
  const std::vector<Rational> a{rat(1, 3), rat(-1, 2), rat(2, 5)};
  Vec av(3);
  av << 1.0 / 3, -0.5, 0.4;
  for (int N = 0; N <= 6; ++N) {
    const QPoly E = zonal(a, N);
    for (int l = 0; l < basis.count(N); ++l) {
      const auto [q, nu] = basis.exact_poly(N, l);
      // (E, q)_H = q(a) exactly
      Rational qa = 0;
      for (const auto& [b, c] : q.terms()) {
        Rational m = c;
        for (int i = 0; i < d; ++i)
          for (int e = 0; e < b[i]; ++e) m *= a[i];
        qa += m;
      }
      EXPECT_EQ(h_inner(E, q), qa);
    }
  }
}

TEST(Zonal, GegenbauerPairing) {
  const std::vector<Rational> a{rat(1, 2), rat(1, 3), rat(0)}, b{rat(-1, 4), rat(1, 2), rat(1, 5)};
  Vec av(3), bv(3);
  av << 0.5, 1.0 / 3, 0.0;
  bv << -0.25, 0.5, 0.2;
  for (int N = 0; N <= 8; ++N) {
    const double lhs = h_inner(zonal(a, N), zonal(b, N)).get_d();
    const double rhs =
        std::pow(av.norm() * bv.norm(), N) * gegenbauer(N, av.dot(bv) / (av.norm() * bv.norm()), 3);
    EXPECT_NEAR(lhs, rhs, 1e-14);
  }
}

TEST(Zonal, KernelPartialSums) {
  const int d = 4;
  Vec a(4), b(4);
  a << 0.3, -0.2, 0.1, 0.25;
  b << -0.1, 0.35, 0.2, 0.0;
  double s = 0.0;
  const double t = a.dot(b) / (a.norm() * b.norm());
  for (int N = 0; N <= 40; ++N) s += std::pow(a.norm() * b.norm(), N) * gegenbauer(N, t, d);
  const double K = std::pow(1 - 2 * a.dot(b) + a.squaredNorm() * b.squaredNorm(), -alpha_d(d));
  double tail = 0.0;
  for (int N = 41; N < 400; ++N) tail += gegenbauer_at_one(N, d) * std::pow(a.norm() * b.norm(), N);
  EXPECT_LE(std::abs(s - K), tail + 1e-15);
}

TEST(Harmonic, FisherProductBound) {
  Rng rng(17);
  for (int d = 3; d <= 4; ++d)
    for (int n = 0; n <= 4; ++n)
      for (int m = 0; m <= 4; ++m) {
        const QPoly f = random_qpoly(d, n, rng), g = random_qpoly(d, m, rng);
        const double lhs = fisher_inner(f * g, f * g).get_d();
        const double rhs = binomial(n + m, n) * fisher_inner(f, f).get_d() * fisher_inner(g, g).get_d();
        EXPECT_LE(lhs, rhs * (1 + 1e-12));
      }
}

TEST(Harmonic, FisherAdjoint) {
  Rng rng(19);
  for (int d = 3; d <= 4; ++d)
    for (int n = 0; n <= 4; ++n) {
      const QPoly h = random_qpoly(d, n, rng) * norm_squared_poly<Rational>(d);
      const QPoly g = random_harmonic(d, n + 2, rng);
      EXPECT_EQ(fisher_inner(h, g), 0);
    }
}

class BasisTest : public ::testing::Test {
 protected:
  static const GradedHarmonicBasis& b3() {
    static const GradedHarmonicBasis b = build_basis(3, 12);
    return b;
  }
};

TEST_F(BasisTest, CountsAndDegreeZero) {
  const auto& b = b3();
  for (int n = 0; n <= 12; ++n) EXPECT_EQ(b.count(n), dim_harm(3, n));
  EXPECT_NEAR(b.evaluate(0, Vec::Random(3))(0), 1.0, 1e-15);
}

TEST_F(BasisTest, ExactHarmonicAndOrthonormal) {
  const auto& b = b3();
  for (int n = 0; n <= 6; ++n) {
    std::vector<std::pair<QPoly, Rational>> ys;
    for (int l = 0; l < b.count(n); ++l) ys.push_back(b.exact_poly(n, l));
    for (std::size_t i = 0; i < ys.size(); ++i) {
      EXPECT_TRUE(is_harmonic(ys[i].first));
      for (std::size_t j = 0; j < ys.size(); ++j) {
        const Rational ip = h_inner(ys[i].first, ys[j].first);
        EXPECT_EQ(ip, i == j ? ys[i].second : Rational(0));
      }
    }
  }
}

TEST_F(BasisTest, FloatGramIsIdentity) {
  for (const bool exact : {true, false}) {
    BasisOptions o;
    o.exact = exact;
    const auto b = build_basis(4, 10, o);
    for (int n = 0; n <= 10; ++n) {
      const auto& h = b.degree(n);
      Vec w(h.table.size());
      for (int k = 0; k < w.size(); ++k) w(k) = h.table.fact[k];
      const Mat G = h.coef * w.asDiagonal() * h.coef.transpose() / fisher_h_ratio_d(4, n);
      EXPECT_LT((G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), tol::basis) << "n=" << n;
    }
  }
}

TEST_F(BasisTest, ExactAndFloatSpanAgree) {
  BasisOptions o;
  o.exact = false;
  const auto bf = build_basis(3, 12, o);
  const auto& be = b3();
  for (int n = 0; n <= 12; ++n) {
    // Both bases span the same space, so the transition matrix is orthogonal
    const auto& h = be.degree(n);
    Vec w(h.table.size());
    for (int k = 0; k < w.size(); ++k) w(k) = h.table.fact[k];
    const Mat T = be.degree(n).coef * w.asDiagonal() * bf.degree(n).coef.transpose() / fisher_h_ratio_d(3, n);
    EXPECT_LT((T * T.transpose() - Mat::Identity(T.rows(), T.rows())).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST_F(BasisTest, SphereSupBound) {
  const auto& b = b3();
  Rng rng(23);
  for (int n = 0; n <= 12; ++n) {
    const double bound = std::sqrt((3 - 2) * double(dim_harm(3, n)) / (2 * n + 3 - 2));
    for (int s = 0; s < 200; ++s) {
      const Vec xi = random_unit(3, rng);
      const Vec y = b.evaluate(n, xi);
      EXPECT_LE(y.cwiseAbs().maxCoeff(), bound * (1 + 1e-10));
      // addition theorem: sum_l Y_l(xi)^2 = C_n(1)
      EXPECT_NEAR(y.squaredNorm(), gegenbauer_at_one(n, 3), 1e-9 * gegenbauer_at_one(n, 3));
    }
  }
}

TEST_F(BasisTest, L2RelationMonteCarlo) {
  const auto& b = b3();
  Rng rng(29);
  const int samples = 200000;
  for (int n : {0, 1, 3, 5}) {
    Vec acc = Vec::Zero(b.count(n));
    for (int s = 0; s < samples; ++s) acc += b.evaluate(n, random_unit(3, rng)).cwiseAbs2();
    acc /= samples;
    const double factor = (2.0 * n + 3 - 2) / (3 - 2);
    for (int l = 0; l < acc.size(); ++l) EXPECT_NEAR(acc(l) * factor, 1.0, 0.05) << "n=" << n << " l=" << l;
  }
}

TEST(BasisCache, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cflat_cache_test";
  std::filesystem::remove_all(dir);
  for (const bool exact : {true, false}) {
    BasisOptions o;
    o.exact = exact;
    o.cache_dir = dir.string();
    const auto a = build_basis(3, 5, o);
    EXPECT_TRUE(std::filesystem::exists(detail::cache_file(dir.string(), 3, 5, exact)));
    const auto b = build_basis(3, 5, o);
    for (int n = 0; n <= 5; ++n) EXPECT_EQ(a.degree(n).coef, b.degree(n).coef);
    if (exact) {
      for (int n = 0; n <= 5; ++n) EXPECT_EQ(a.degree(n).nu, b.degree(n).nu);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(BasisErrors, Dimension) { EXPECT_THROW(build_basis(2, 3), Error); }
