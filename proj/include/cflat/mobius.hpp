#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "common.hpp"

namespace cflat {

// Coordinates on R^{d+1,1}: e_1..e_d, then e_+ (index d), e_- (index d+1).
inline int ip(int d) { return d; }
inline int im(int d) { return d + 1; }

inline const double kSqrt2 = std::sqrt(2.0);

inline Mat minkowski_gram(int d) {
  Mat G = Mat::Zero(d + 2, d + 2);
  G.topLeftCorner(d, d).setIdentity();
  G(d, d + 1) = 1.0;
  G(d + 1, d) = 1.0;
  return G;
}

inline double minkowski(int d, const Vec& u, const Vec& v) {
  return u.head(d).dot(v.head(d)) + u(d) * v(d + 1) + u(d + 1) * v(d);
}

struct SpherePoint {
  bool infinite = false;
  Vec x;

  static SpherePoint finite(Vec y) { return {false, std::move(y)}; }
  static SpherePoint infinity(int d) { return {true, Vec::Zero(d)}; }
};

struct MobiusMatrix {
  int d = 3;
  Mat M;

  MobiusMatrix() = default;
  MobiusMatrix(int dim, Mat m) : d(dim), M(std::move(m)) {
    if (M.rows() != d + 2 || M.cols() != d + 2)
      throw Error(Errc::DimensionMismatch, "matrix must be (d+2)x(d+2)");
  }

  static MobiusMatrix identity(int dim) { return {dim, Mat::Identity(dim + 2, dim + 2)}; }

  // max-norm of M^T G M - G
  double form_defect() const {
    Mat G = minkowski_gram(d);
    return (M.transpose() * G * M - G).cwiseAbs().maxCoeff();
  }
  bool preserves_future_cone() const {
    // sigma_0(0) is future null; its image must stay future
    Vec v = M.col(d + 1) / kSqrt2;
    return v(d + 1) - v(d) > 0.0;
  }
  bool is_valid(double tol = tol::grp) const { return form_defect() < tol && preserves_future_cone(); }
  bool is_special(double tol = tol::grp) const { return is_valid(tol) && std::abs(M.determinant() - 1.0) < tol; }

  MobiusMatrix inverse() const {
    Mat G = minkowski_gram(d);
    return {d, G * M.transpose() * G};
  }
};

inline MobiusMatrix compose(const MobiusMatrix& g, const MobiusMatrix& h) {
  if (g.d != h.d) throw Error(Errc::DimensionMismatch, "compose: dimensions differ");
  return {g.d, g.M * h.M};
}
inline MobiusMatrix operator*(const MobiusMatrix& g, const MobiusMatrix& h) { return compose(g, h); }

// ---- generators ----

inline MobiusMatrix translation(const Vec& a) {
  const int d = static_cast<int>(a.size());
  require_dim(d);
  Mat M = Mat::Identity(d + 2, d + 2);
  M.block(0, d + 1, d, 1) = kSqrt2 * a;
  M.block(d, 0, 1, d) = -kSqrt2 * a.transpose();
  M(d, d + 1) = -a.squaredNorm();
  return {d, M};
}

inline MobiusMatrix dilation(int d, double lambda) {
  require_dim(d);
  if (!(lambda > 0.0)) throw Error(Errc::NonPositiveDilation, "lambda must be > 0");
  Mat M = Mat::Identity(d + 2, d + 2);
  M(d, d) = lambda;
  M(d + 1, d + 1) = 1.0 / lambda;
  return {d, M};
}

inline MobiusMatrix rotation(const Mat& R) {
  const int d = static_cast<int>(R.rows());
  require_dim(d);
  if (R.cols() != d) throw Error(Errc::DimensionMismatch, "rotation must be square");
  if ((R.transpose() * R - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol::grp)
    throw Error(Errc::NonOrthogonalRotation, "R^T R != I");
  if (R.determinant() < 0.0) throw Error(Errc::NonOrthogonalRotation, "det R must be +1");
  Mat M = Mat::Identity(d + 2, d + 2);
  M.topLeftCorner(d, d) = R;
  return {d, M};
}

inline MobiusMatrix sct(const Vec& c) {
  const int d = static_cast<int>(c.size());
  require_dim(d);
  Mat M = Mat::Identity(d + 2, d + 2);
  M.block(0, d, d, 1) = kSqrt2 * c;
  M.block(d + 1, 0, 1, d) = -kSqrt2 * c.transpose();
  M(d + 1, d) = -c.squaredNorm();
  return {d, M};
}

inline MobiusMatrix inversion(int d) {
  require_dim(d);
  Mat M = Mat::Identity(d + 2, d + 2);
  M(d, d) = 0.0;
  M(d + 1, d + 1) = 0.0;
  M(d, d + 1) = -1.0;
  M(d + 1, d) = -1.0;
  return {d, M};
}

// Maps the upper half-space onto D, e_d to 0.
inline MobiusMatrix cayley(int d) {
  require_dim(d);
  Mat M = Mat::Identity(d + 2, d + 2);
  const int k = d - 1, p = d, m = d + 1;
  const double s = 1.0 / kSqrt2;
  M(k, k) = 0.0;  M(k, p) = -s;   M(k, m) = -s;
  M(p, k) = s;    M(p, p) = 0.5;  M(p, m) = -0.5;
  M(m, k) = s;    M(m, p) = -0.5; M(m, m) = 0.5;
  return {d, M};
}

// Boost in the (n, (e_+ - e_-)/sqrt2) plane; preserves D and sends 0 to -tanh(t/2) n.
inline MobiusMatrix boost(const Vec& n_unit, double t) {
  const int d = static_cast<int>(n_unit.size());
  Vec n = Vec::Zero(d + 2), u = Vec::Zero(d + 2);
  n.head(d) = n_unit;
  u(d) = 1.0 / kSqrt2;
  u(d + 1) = -1.0 / kSqrt2;
  Mat G = minkowski_gram(d);
  Mat M = Mat::Identity(d + 2, d + 2) + (std::cosh(t) - 1.0) * (n * n.transpose() - u * u.transpose()) * G +
          std::sinh(t) * (u * n.transpose() - n * u.transpose()) * G;
  return {d, M};
}

// Element of G sending 0 to p (|p| < 1).
inline MobiusMatrix boost_to(const Vec& p) {
  const int d = static_cast<int>(p.size());
  const double np = p.norm();
  if (np >= 1.0) throw Error(Errc::OutsideDisk, "boost_to needs |p| < 1");
  if (np == 0.0) return MobiusMatrix::identity(d);
  return boost(p / np, -2.0 * std::atanh(np));
}

// ---- action ----

inline Vec lift(const Vec& x) {
  const int d = static_cast<int>(x.size());
  Vec v(d + 2);
  v.head(d) = x;
  v(d) = -x.squaredNorm() / kSqrt2;
  v(d + 1) = 1.0 / kSqrt2;
  return v;
}

inline Vec lift(const SpherePoint& p) {
  if (!p.infinite) return lift(p.x);
  const int d = static_cast<int>(p.x.size());
  Vec v = Vec::Zero(d + 2);
  v(d) = -1.0 / kSqrt2;
  return v;
}

struct ActResult {
  SpherePoint point;
  double j = 0.0;  // 0 when the image is infinity
};

inline ActResult decode(int d, const Vec& w) {
  const double j = kSqrt2 * w(d + 1);
  if (std::abs(j) < tol::pole) return {SpherePoint::infinity(d), 0.0};
  return {SpherePoint::finite(w.head(d) / j), j};
}

inline ActResult act(const MobiusMatrix& g, const SpherePoint& p) { return decode(g.d, g.M * lift(p)); }
inline ActResult act(const MobiusMatrix& g, const Vec& x) { return act(g, SpherePoint::finite(x)); }

inline Vec apply(const MobiusMatrix& g, const Vec& x) {
  auto r = act(g, x);
  if (r.point.infinite) throw Error(Errc::PoleAtPoint, "image is infinity");
  return r.point.x;
}

inline double conformal_factor(const MobiusMatrix& g, const Vec& x) {
  auto r = act(g, x);
  if (r.point.infinite) throw Error(Errc::PoleAtPoint, "image is infinity");
  return 1.0 / r.j;
}

// ---- image regions ----

enum class RegionKind { Ball, HalfSpace, Exterior };

struct BallRegion {
  RegionKind kind = RegionKind::Ball;
  Vec center;       // Ball / Exterior
  double radius = 0.0;
  Vec normal;       // HalfSpace: {y : normal.y > offset}
  double offset = 0.0;
};

// g applied to the spacelike vector e_+ + e_- whose orthogonal null set is the unit sphere.
inline Vec polar_vector(const MobiusMatrix& g) {
  Vec s = Vec::Zero(g.d + 2);
  s(g.d) = 1.0;
  s(g.d + 1) = 1.0;
  return g.M * s;
}

inline BallRegion region_from_polar(int d, const Vec& sp) {
  BallRegion b;
  const double sm = sp(d + 1), spp = sp(d);
  const Vec n = sp.head(d);
  if (std::abs(sm) < tol::geo * sp.norm() || std::abs(1.0 / sm) > 1.0 / tol::geo) {
    b.kind = RegionKind::HalfSpace;
    const double nn = n.norm();
    b.normal = n / nn;
    b.offset = -spp / (kSqrt2 * nn);
    return b;
  }
  const double t = 1.0 / (kSqrt2 * sm);
  b.kind = t > 0 ? RegionKind::Ball : RegionKind::Exterior;
  b.center = t * n;
  b.radius = 1.0 / std::abs(sm);
  return b;
}

inline BallRegion image_ball(const MobiusMatrix& g) {
  BallRegion b = region_from_polar(g.d, polar_vector(g));
  const int d = g.d;
  std::vector<Vec> pts;
  for (int i = 0; i < d; ++i) {
    pts.push_back(Vec::Unit(d, i));
    pts.push_back(-Vec::Unit(d, i));
  }
  pts.push_back(Vec::Ones(d) / std::sqrt(double(d)));
  pts.push_back(-Vec::Ones(d) / std::sqrt(double(d)));
  for (const Vec& x : pts) {
    auto r = act(g, x);
    if (r.point.infinite) {
      if (b.kind != RegionKind::HalfSpace)
        throw Error(Errc::InvalidArgument, "image_ball: boundary reaches infinity for a ball");
      continue;
    }
    const Vec& y = r.point.x;
    double res;
    if (b.kind == RegionKind::HalfSpace)
      res = std::abs(b.normal.dot(y) - b.offset) / std::max(1.0, y.norm());
    else
      res = std::abs((y - b.center).norm() - b.radius) / std::max(1.0, b.radius);
    if (res > tol::num) throw Error(Errc::InvalidArgument, "image_ball: boundary residual too large");
  }
  return b;
}

enum class Membership { InG, InSNotG, NotInS };

inline const char* membership_name(Membership m) {
  switch (m) {
    case Membership::InG: return "InG";
    case Membership::InSNotG: return "InSNotG";
    case Membership::NotInS: return "NotInS";
  }
  return "?";
}

inline Membership classify(const MobiusMatrix& g) {
  if (!g.is_special()) return Membership::NotInS;
  BallRegion b = image_ball(g);
  if (b.kind != RegionKind::Ball) return Membership::NotInS;
  if (b.center.norm() < tol::geo && std::abs(b.radius - 1.0) < tol::geo) return Membership::InG;
  if (b.center.norm() + b.radius <= 1.0 + tol::geo) return Membership::InSNotG;
  return Membership::NotInS;
}

inline bool in_S(const MobiusMatrix& g) { return classify(g) != Membership::NotInS; }

// ---- decompositions ----

struct SDecomposition {
  Vec x0;
  double r;
  MobiusMatrix h;
};

inline SDecomposition decompose_S(const MobiusMatrix& g) {
  if (classify(g) != Membership::InSNotG) throw Error(Errc::NotApplicable, "decompose_S needs g in S \\ G");
  BallRegion b = image_ball(g);
  MobiusMatrix h = dilation(g.d, 1.0 / b.radius) * translation(-b.center) * g;
  return {b.center, b.radius, h};
}

struct InteriorDecomposition {
  MobiusMatrix h1;
  double r;
  MobiusMatrix h2;
};

inline InteriorDecomposition decompose_interior(const MobiusMatrix& g) {
  const Membership m = classify(g);
  if (m != Membership::InSNotG) throw Error(Errc::NotApplicable, "decompose_interior needs g in S \\ G");
  BallRegion b = image_ball(g);
  const double nc = b.center.norm();
  if (nc + b.radius > 1.0 - tol::geo) throw Error(Errc::BoundaryTouching, "image ball touches the unit sphere");
  MobiusMatrix h1 = MobiusMatrix::identity(g.d);
  double rho = b.radius;
  if (nc > 0.0) {
    const double u1 = std::atanh(nc - b.radius), u2 = std::atanh(nc + b.radius);
    h1 = boost_to(std::tanh(0.5 * (u1 + u2)) * b.center / nc);
    rho = std::tanh(0.5 * (u2 - u1));
  }
  MobiusMatrix h2 = dilation(g.d, 1.0 / rho) * h1.inverse() * g;
  return {h1, rho, h2};
}

struct GaussDecomposition {
  Vec b;
  double lambda;
  Mat R;
  Vec c;
};

inline MobiusMatrix recompose(const GaussDecomposition& gd) {
  const int d = static_cast<int>(gd.b.size());
  Mat M = Mat::Identity(d + 2, d + 2);
  M.topLeftCorner(d, d) = gd.R;
  return translation(gd.b) * dilation(d, gd.lambda) * MobiusMatrix(d, M) * sct(gd.c);
}

inline GaussDecomposition gauss_decompose(const MobiusMatrix& g) {
  const int d = g.d;
  auto r0 = act(g, Vec(Vec::Zero(d)));
  if (r0.point.infinite) throw Error(Errc::OutsideBigCell, "g(0) is infinity");
  GaussDecomposition gd;
  gd.b = r0.point.x;
  Mat g1 = (translation(-gd.b) * g).M;
  gd.lambda = g1(d, d);
  if (!(gd.lambda > 0.0)) throw Error(Errc::OutsideBigCell, "non-positive dilation factor");
  gd.R = g1.topLeftCorner(d, d);
  gd.c = gd.R.transpose() * g1.block(0, d, d, 1) / kSqrt2;
  if ((recompose(gd).M - g.M).cwiseAbs().maxCoeff() > tol::grp * std::max(1.0, g.M.cwiseAbs().maxCoeff()))
    throw Error(Errc::OutsideBigCell, "factorization residual too large");
  return gd;
}

// ---- configurations ----

struct DiskConfig {
  int d = 3;
  std::vector<MobiusMatrix> elements;
  std::vector<BallRegion> balls;
  Mat sigma;  // sigma(i,j) = (r_i + r_j)/|c_i - c_j|, diagonal 0
  bool strict = true;

  std::size_t size() const { return elements.size(); }
};

inline DiskConfig is_CE_config(const std::vector<MobiusMatrix>& gs, int d_hint = 3) {
  DiskConfig cfg;
  cfg.d = gs.empty() ? d_hint : gs.front().d;
  cfg.elements = gs;
  const std::size_t n = gs.size();
  cfg.sigma = Mat::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (gs[i].d != cfg.d) throw Error(Errc::DimensionMismatch, "config elements differ in d");
    if (!in_S(gs[i])) throw Error(Errc::NotInS, "config element " + std::to_string(i) + " is not in S");
    cfg.balls.push_back(image_ball(gs[i]));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = (cfg.balls[i].center - cfg.balls[j].center).norm();
      const double s = (cfg.balls[i].radius + cfg.balls[j].radius) / dist;
      cfg.sigma(i, j) = cfg.sigma(j, i) = s;
      if (!(dist > cfg.balls[i].radius + cfg.balls[j].radius + tol::geo)) cfg.strict = false;
    }
  return cfg;
}

// Closed image regions on S^d are disjoint iff the normalized polar vectors pair below -1.
inline double inversive_product(const MobiusMatrix& g1, const MobiusMatrix& g2) {
  const Vec s1 = polar_vector(g1), s2 = polar_vector(g2);
  const int d = g1.d;
  return minkowski(d, s1, s2) / std::sqrt(minkowski(d, s1, s1) * minkowski(d, s2, s2));
}

// Closed region g(closure D) contains p.
inline bool region_contains(const MobiusMatrix& g, const SpherePoint& p, double margin = 0.0) {
  const Vec s = polar_vector(g);
  Vec v = lift(p);
  v /= v.norm();
  return minkowski(g.d, v, s) / s.norm() >= -margin;
}

// ---- hyperbolic invariants ----

inline double hyperbolic_invariant_disk(const Vec& x, const Vec& y) {
  const double ax = 1.0 - x.squaredNorm(), ay = 1.0 - y.squaredNorm();
  if (!(ax > 0.0) || !(ay > 0.0)) throw Error(Errc::OutsideDomain, "points must lie in the open unit ball");
  return 4.0 * (x - y).squaredNorm() / (ax * ay);
}

inline double hyperbolic_invariant_halfspace(const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  if (!(x(d - 1) > 0.0) || !(y(d - 1) > 0.0)) throw Error(Errc::OutsideDomain, "points must lie in x_d > 0");
  return (x - y).squaredNorm() / (x(d - 1) * y(d - 1));
}

}  // namespace cflat
