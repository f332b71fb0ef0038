#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "harmonic.hpp"

namespace cflat {

inline constexpr int kBasisFormatVersion = 1;

struct HarmonicDegree {
  int n = 0;
  MonomialTable table;
  Mat coef;  // rows: Y_{n,l} in the monomial basis of `table`
  // exact path only: Y_{n,l} = q_l / sqrt(nu_l)
  std::vector<std::vector<Rational>> q;
  std::vector<Rational> nu;
};

struct BasisOptions {
  bool exact = true;
  std::optional<std::string> cache_dir;  // defaults to $CFLAT_CACHE_DIR when set
};

class GradedHarmonicBasis {
 public:
  GradedHarmonicBasis() = default;
  GradedHarmonicBasis(int d, int n_max, bool exact) : d_(d), n_max_(n_max), exact_(exact) {}

  int dim() const { return d_; }
  int n_max() const { return n_max_; }
  bool exact() const { return exact_; }
  const HarmonicDegree& degree(int n) const { return deg_.at(n); }
  int count(int n) const { return static_cast<int>(deg_.at(n).coef.rows()); }

  DPoly poly(int n, int l) const { return deg_.at(n).table.poly(Vec(deg_.at(n).coef.row(l).transpose())); }

  // exact numerator q_{n,l} and squared H-norm nu_{n,l}
  std::pair<QPoly, Rational> exact_poly(int n, int l) const {
    const auto& h = deg_.at(n);
    if (!exact_) throw Error(Errc::InvalidArgument, "basis was built on the float path");
    return {h.table.poly(h.q.at(l)), h.nu.at(l)};
  }

  // Y_{n,l}(x) for all l
  Vec evaluate(int n, const Vec& x) const { return deg_.at(n).coef * deg_.at(n).table.monomial_values(x); }

  std::vector<HarmonicDegree>& degrees() { return deg_; }
  const std::vector<HarmonicDegree>& degrees() const { return deg_; }

 private:
  int d_ = 3, n_max_ = 0;
  bool exact_ = false;
  std::vector<HarmonicDegree> deg_;
};

namespace detail {

// candidates pr_H(x^alpha) with alpha_1 <= 1, in ascending lexicographic order
template <class T>
std::vector<std::vector<T>> basis_candidates(const MonomialTable& tab) {
  std::vector<std::vector<T>> out;
  for (const MultiIndex& a : tab.index) {
    if (a[0] > 1) break;
    Poly<T> p = project_harmonic_homogeneous(Poly<T>::monomial(a, T(1)), tab.n);
    out.push_back(tab.dense(p));
  }
  return out;
}

inline void make_primitive(std::vector<Rational>& v) {
  mpz_class l = 1, g = 0;
  for (auto& x : v) {
    if (sgn(x) == 0) continue;
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), x.get_den_mpz_t());
  }
  for (auto& x : v) {
    x *= l;
    if (sgn(x) != 0) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_num_mpz_t());
  }
  if (g > 1)
    for (auto& x : v) x /= g;
}

inline void build_degree_exact(int d, HarmonicDegree& h) {
  const auto cand = basis_candidates<Rational>(h.table);
  const int M = h.table.size();
  const long long A = dim_harm(d, h.n);
  std::vector<Rational> w(M);
  for (int k = 0; k < M; ++k) w[k] = Rational(h.table.factz[k]);
  std::vector<Rational> fnorm;
  for (const auto& v : cand) {
    std::vector<Rational> q = v;
    for (std::size_t j = 0; j < h.q.size(); ++j) {
      Rational ip = 0;
      for (int k = 0; k < M; ++k)
        if (sgn(v[k]) && sgn(h.q[j][k])) ip += v[k] * h.q[j][k] * w[k];
      if (sgn(ip) == 0) continue;
      const Rational f = ip / fnorm[j];
      for (int k = 0; k < M; ++k)
        if (sgn(h.q[j][k])) q[k] -= f * h.q[j][k];
    }
    bool zero = true;
    for (const auto& x : q) zero = zero && sgn(x) == 0;
    if (zero) continue;
    make_primitive(q);
    Rational nf = 0;
    for (int k = 0; k < M; ++k)
      if (sgn(q[k])) nf += q[k] * q[k] * w[k];
    fnorm.push_back(nf);
    h.nu.push_back(nf / fisher_h_ratio<Rational>(d, h.n));
    h.q.push_back(std::move(q));
  }
  if (static_cast<long long>(h.q.size()) != A)
    throw Error(Errc::RankDeficiency, "degree " + std::to_string(h.n) + ": found " + std::to_string(h.q.size()));
  h.coef.resize(A, M);
  for (long long l = 0; l < A; ++l) {
    const double s = 1.0 / std::sqrt(h.nu[l].get_d());
    for (int k = 0; k < M; ++k) h.coef(l, k) = h.q[l][k].get_d() * s;
  }
}

inline void build_degree_float(int d, HarmonicDegree& h) {
  const auto cand = basis_candidates<double>(h.table);
  const int M = h.table.size();
  const long long A = dim_harm(d, h.n);
  Vec sw(M);
  for (int k = 0; k < M; ++k) sw(k) = std::sqrt(h.table.fact[k]);
  // Fisher-scaled coordinates: Fisher product becomes Euclidean
  Mat Q(M, A);
  int found = 0;
  for (const auto& v : cand) {
    Vec x(M);
    for (int k = 0; k < M; ++k) x(k) = v[k] * sw(k);
    const double n0 = x.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < found; ++j) x -= Q.col(j).dot(x) * Q.col(j);
    const double n1 = x.norm();
    if (n1 <= 1e-10 * n0) continue;
    Q.col(found++) = x / n1;
    if (found == A) break;
  }
  if (found != A)
    throw Error(Errc::RankDeficiency, "degree " + std::to_string(h.n) + ": found " + std::to_string(found));
  const double hs = std::sqrt(fisher_h_ratio_d(d, h.n));
  h.coef.resize(A, M);
  for (long long l = 0; l < A; ++l)
    for (int k = 0; k < M; ++k) h.coef(l, k) = Q(k, l) * hs / sw(k);
}

inline std::optional<std::string> resolve_cache_dir(const BasisOptions& opt) {
  if (opt.cache_dir) return opt.cache_dir;
  if (const char* env = std::getenv("CFLAT_CACHE_DIR")) return std::string(env);
  return std::nullopt;
}

inline std::string cache_file(const std::string& dir, int d, int n_max, bool exact) {
  return dir + "/basis_d" + std::to_string(d) + "_N" + std::to_string(n_max) + (exact ? "_exact" : "_float") + "_v" +
         std::to_string(kBasisFormatVersion) + ".json";
}

}  // namespace detail

inline nlohmann::json basis_to_json(const GradedHarmonicBasis& b) {
  nlohmann::json j;
  j["format"] = "cflat-harmonic-basis";
  j["version"] = kBasisFormatVersion;
  j["d"] = b.dim();
  j["N_max"] = b.n_max();
  j["exact"] = b.exact();
  auto& degs = j["degrees"] = nlohmann::json::array();
  for (const auto& h : b.degrees()) {
    nlohmann::json e;
    e["n"] = h.n;
    if (b.exact()) {
      auto& polys = e["polys"] = nlohmann::json::array();
      for (std::size_t l = 0; l < h.q.size(); ++l) {
        nlohmann::json terms = nlohmann::json::array();
        for (int k = 0; k < h.table.size(); ++k)
          if (sgn(h.q[l][k]))
            terms.push_back({h.table.index[k], h.q[l][k].get_num().get_str(), h.q[l][k].get_den().get_str()});
        polys.push_back({{"terms", terms}, {"nu", {h.nu[l].get_num().get_str(), h.nu[l].get_den().get_str()}}});
      }
    } else {
      auto& rows = e["coef"] = nlohmann::json::array();
      for (int l = 0; l < h.coef.rows(); ++l) {
        std::vector<double> r(h.coef.cols());
        for (int k = 0; k < h.coef.cols(); ++k) r[k] = h.coef(l, k);
        rows.push_back(r);
      }
    }
    degs.push_back(e);
  }
  return j;
}

inline GradedHarmonicBasis basis_from_json(const nlohmann::json& j) {
  if (j.at("format") != "cflat-harmonic-basis" || j.at("version") != kBasisFormatVersion)
    throw Error(Errc::InvalidArgument, "unrecognized basis file");
  GradedHarmonicBasis b(j.at("d"), j.at("N_max"), j.at("exact"));
  const int d = b.dim();
  for (const auto& e : j.at("degrees")) {
    HarmonicDegree h;
    h.n = e.at("n");
    h.table = MonomialTable(d, h.n);
    const int M = h.table.size();
    if (b.exact()) {
      for (const auto& p : e.at("polys")) {
        std::vector<Rational> q(M, Rational(0));
        for (const auto& t : p.at("terms")) {
          Rational v(mpz_class(t[1].get<std::string>()), mpz_class(t[2].get<std::string>()));
          v.canonicalize();
          q.at(h.table.find(t[0].get<MultiIndex>())) = v;
        }
        Rational nu(mpz_class(p.at("nu")[0].get<std::string>()), mpz_class(p.at("nu")[1].get<std::string>()));
        nu.canonicalize();
        h.q.push_back(std::move(q));
        h.nu.push_back(nu);
      }
      h.coef.resize(h.q.size(), M);
      for (std::size_t l = 0; l < h.q.size(); ++l) {
        const double s = 1.0 / std::sqrt(h.nu[l].get_d());
        for (int k = 0; k < M; ++k) h.coef(l, k) = h.q[l][k].get_d() * s;
      }
    } else {
      const auto& rows = e.at("coef");
      h.coef.resize(rows.size(), M);
      for (std::size_t l = 0; l < rows.size(); ++l)
        for (int k = 0; k < M; ++k) h.coef(l, k) = rows[l][k].get<double>();
    }
    b.degrees().push_back(std::move(h));
  }
  return b;
}

inline GradedHarmonicBasis build_basis(int d, int n_max, const BasisOptions& opt = {}) {
  require_dim(d);
  if (n_max < 0) throw Error(Errc::InvalidArgument, "N_max must be >= 0");
  const auto dir = detail::resolve_cache_dir(opt);
  if (dir) {
    const std::string path = detail::cache_file(*dir, d, n_max, opt.exact);
    std::ifstream in(path);
    if (in) {
      try {
        return basis_from_json(nlohmann::json::parse(in));
      } catch (const std::exception&) {
        // unreadable cache entries are rebuilt
      }
    }
  }
  GradedHarmonicBasis b(d, n_max, opt.exact);
  for (int n = 0; n <= n_max; ++n) {
    HarmonicDegree h;
    h.n = n;
    h.table = MonomialTable(d, n);
    if (opt.exact)
      detail::build_degree_exact(d, h);
    else
      detail::build_degree_float(d, h);
    b.degrees().push_back(std::move(h));
  }
  if (dir) {
    std::error_code ec;
    std::filesystem::create_directories(*dir, ec);
    const std::string path = detail::cache_file(*dir, d, n_max, opt.exact);
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp);
      out << basis_to_json(b).dump();
    }
    std::filesystem::rename(tmp, path, ec);
  }
  return b;
}

}  // namespace cflat
