#pragma once

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "fock.hpp"

namespace cflat {

using Json = nlohmann::json;

inline constexpr int kOperatorFormatVersion = 1;

// ---- dense matrices: row-major nested arrays ----

inline Json matrix_rows(const Mat& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Mat matrix_from_rows(const Json& rows, const std::string& field = "matrix") {
  if (!rows.is_array() || rows.empty()) throw Error(Errc::InvalidArgument, field + ": expected a non-empty array of rows");
  const std::size_t n = rows.size(), m = rows[0].size();
  Mat M(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i].is_array() || rows[i].size() != m) throw Error(Errc::InvalidArgument, field + ": ragged row " + std::to_string(i));
    for (std::size_t j = 0; j < m; ++j) {
      if (!rows[i][j].is_number()) throw Error(Errc::InvalidArgument, field + ": non-numeric entry");
      M(i, j) = rows[i][j].get<double>();
    }
  }
  return M;
}

inline Vec vector_from_json(const Json& a, const std::string& field) {
  if (!a.is_array()) throw Error(Errc::InvalidArgument, field + ": expected an array of numbers");
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw Error(Errc::InvalidArgument, field + ": non-numeric entry");
    v(i) = a[i].get<double>();
  }
  return v;
}

inline Json vector_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json mobius_to_json(const MobiusMatrix& g) { return Json{{"d", g.d}, {"matrix", matrix_rows(g.M)}}; }

inline MobiusMatrix mobius_from_json(const Json& j) {
  const int d = j.at("d").get<int>();
  require_dim(d);
  MobiusMatrix g(d, matrix_from_rows(j.at("matrix")));
  if (!g.is_valid(1e-8)) throw Error(Errc::InvalidArgument, "matrix does not preserve the Minkowski form");
  return g;
}

// Operators carry the truncation they were computed on.
inline Json operator_to_json(const Mat& A, const Truncation& t) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) data.push_back(A(i, j));
  return Json{{"format", "cflat-operator"}, {"version", kOperatorFormatVersion}, {"d", t.dim()},
              {"n_max", t.n_max()},         {"basis_version", kBasisFormatVersion},  {"rows", A.rows()},
              {"cols", A.cols()},           {"data", data}};
}

inline Mat operator_from_json(const Json& j, const Truncation& t) {
  if (j.at("format") != "cflat-operator" || j.at("version") != kOperatorFormatVersion)
    throw Error(Errc::InvalidArgument, "not a cflat operator file");
  if (j.at("d") != t.dim() || j.at("n_max") != t.n_max() || j.at("basis_version") != kBasisFormatVersion)
    throw Error(Errc::DimensionMismatch, "operator header does not match the truncation");
  const Eigen::Index r = j.at("rows"), c = j.at("cols");
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw Error(Errc::InvalidArgument, "operator data length");
  Mat A(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) A(i, k) = data[i * c + k].get<double>();
  return A;
}

// ---- generator words ----

// A word is an array of steps multiplied left to right; a bare {"d","matrix"} object is also accepted.
inline MobiusMatrix word_from_json(const Json& w, int d) {
  if (w.is_object() && w.contains("matrix")) {
    MobiusMatrix g = w.contains("d") ? mobius_from_json(w) : mobius_from_json(Json{{"d", d}, {"matrix", w["matrix"]}});
    if (g.d != d) throw Error(Errc::DimensionMismatch, "matrix dimension differs from the run dimension");
    return g;
  }
  if (!w.is_array()) throw Error(Errc::InvalidArgument, "generator word must be an array of steps");
  MobiusMatrix g = MobiusMatrix::identity(d);
  auto vec = [&](const Json& a, const char* what) {
    Vec v = vector_from_json(a, what);
    if (v.size() != d) throw Error(Errc::DimensionMismatch, std::string(what) + ": expected length " + std::to_string(d));
    return v;
  };
  for (const auto& step : w) {
    if (!step.is_object() || step.size() != 1) throw Error(Errc::InvalidArgument, "each step is an object with one key");
    const auto& [key, val] = *step.items().begin();
    if (key == "translate")
      g = g * translation(vec(val, "translate"));
    else if (key == "dilate")
      g = g * dilation(d, val.get<double>());
    else if (key == "rotate")
      g = g * rotation(matrix_from_rows(val, "rotate"));
    else if (key == "sct")
      g = g * sct(vec(val, "sct"));
    else if (key == "boost_to")
      g = g * boost_to(vec(val, "boost_to"));
    else if (key == "invert")
      g = g * inversion(d);
    else if (key == "reflect") {
      Mat F = Mat::Identity(d + 2, d + 2);
      const int k = val.get<int>();
      if (k < 0 || k >= d) throw Error(Errc::InvalidArgument, "reflect: coordinate out of range");
      F(k, k) = -1.0;
      g = g * MobiusMatrix(d, F);
    } else
      throw Error(Errc::InvalidArgument, "unknown generator '" + key + "'");
  }
  return g;
}

// ---- Fock inputs ----

inline Vec particle_from_json(const Json& p, const Truncation& t) {
  const int D = t.size();
  if (p.contains("basis")) {
    const int i = p["basis"].get<int>();
    if (i < 0 || i >= D) throw Error(Errc::InvalidArgument, "basis index out of range");
    return Vec::Unit(D, i);
  }
  if (p.contains("degree")) {
    const int n = p["degree"].get<int>(), k = p.value("index", 0);
    if (n < 0 || n > t.n_max() || k < 0 || k >= t.count(n)) throw Error(Errc::InvalidArgument, "degree/index out of range");
    return Vec::Unit(D, t.offset(n) + k);
  }
  if (p.contains("e_vector")) {
    Vec a = vector_from_json(p["e_vector"], "e_vector");
    if (a.size() != t.dim()) throw Error(Errc::DimensionMismatch, "e_vector point dimension");
    return e_vector(a, t);
  }
  if (p.contains("coords")) {
    Vec c = vector_from_json(p["coords"], "coords");
    if (c.size() > D) throw Error(Errc::InvalidArgument, "coords longer than the truncation");
    Vec v = Vec::Zero(D);
    v.head(c.size()) = c;
    return v;
  }
  throw Error(Errc::InvalidArgument, "particle spec needs one of basis, degree, e_vector, coords");
}

// "vacuum", {"vacuum": c}, {"coeff": c, "particles": [...]}, or an array of these (summed).
inline FockVector fock_from_json(const Json& j, const Truncation& t) {
  if (j.is_string()) {
    if (j != "vacuum") throw Error(Errc::InvalidArgument, "unknown input '" + j.get<std::string>() + "'");
    return FockVector::vacuum();
  }
  if (j.is_array()) {
    FockVector out;
    for (const auto& x : j) out += fock_from_json(x, t);
    return out;
  }
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "input must be a string, object or array");
  if (j.contains("vacuum")) return FockVector::vacuum(j["vacuum"].get<double>());
  std::vector<Vec> fs;
  for (const auto& p : j.at("particles")) fs.push_back(particle_from_json(p, t));
  return FockVector::product(std::move(fs), j.value("coeff", 1.0));
}

inline bool single_particle(const FockVector& v) {
  return v.terms.size() == 1 && v.terms[0].particles() == 1;
}

// FNV-1a of the compact JSON text
inline std::string config_hash(const Json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cflat
