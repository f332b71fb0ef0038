#pragma once

#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "io.hpp"
#include "random.hpp"

namespace cflat {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSweepCsvHeader = "# cflat-norm-sweep v1";

struct RunConfig {
  int d = 3;
  int n_max = 0;  // 0: default for d
  int p_max = FockTruncation::default_particles;
  double tol = 1e-7;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<double> sigmas{0.5, 0.9, 0.99, 1.0};
  std::vector<int> Ns{20, 30, 40, 50, 60, 70, 80};
  int probes = 5;
  bool twisted = false;

  int degree() const { return n_max > 0 ? n_max : FockTruncation::default_degree(d); }

  void validate() const {
    require_dim(d);
    if (n_max < 0) throw Error(Errc::InvalidArgument, "field 'N_max': must be >= 0");
    if (p_max < 0) throw Error(Errc::InvalidArgument, "field 'P_max': must be >= 0");
    if (!(tol > 0.0)) throw Error(Errc::InvalidArgument, "field 'tol': must be positive");
    if (probes < 0) throw Error(Errc::InvalidArgument, "field 'probes': must be >= 0");
  }
};

inline Json config_to_json(const RunConfig& c) {
  return Json{{"d", c.d},     {"N_max", c.n_max}, {"P_max", c.p_max},   {"tol", c.tol},
              {"seed", c.seed}, {"out", c.out},   {"sigmas", c.sigmas}, {"Ns", c.Ns},
              {"probes", c.probes}, {"twisted", c.twisted}};
}

namespace detail {

template <class T>
void read_field(const Json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

// Fields present in j override those of base.
inline RunConfig config_from_json(const Json& j, RunConfig base = {}) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
  static const char* known[] = {"d", "N_max", "P_max", "tol", "seed", "out", "sigmas", "Ns", "probes", "twisted"};
  for (const auto& [k, v] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) == std::end(known))
      throw Error(Errc::InvalidArgument, "field '" + k + "': unknown");
  detail::read_field(j, "d", base.d);
  detail::read_field(j, "N_max", base.n_max);
  detail::read_field(j, "P_max", base.p_max);
  detail::read_field(j, "tol", base.tol);
  detail::read_field(j, "seed", base.seed);
  detail::read_field(j, "out", base.out);
  detail::read_field(j, "sigmas", base.sigmas);
  detail::read_field(j, "Ns", base.Ns);
  detail::read_field(j, "probes", base.probes);
  detail::read_field(j, "twisted", base.twisted);
  base.validate();
  return base;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // e.byte is 1-based; report line and column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else
        ++col;
    }
    throw Error(Errc::InvalidArgument, origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

// ---- reports ----

struct CheckRecord {
  std::string name;
  std::string anchor;
  double measured = 0.0;
  double target = 0.0;
  bool pass = false;
};

struct Report {
  std::string suite;
  RunConfig config;
  std::vector<CheckRecord> checks;
  Json extra = Json::object();

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
  }

  // everything except the environment stamp
  Json body() const {
    Json cs = Json::array();
    for (const auto& c : checks)
      cs.push_back(Json{{"name", c.name}, {"anchor", c.anchor}, {"measured", c.measured}, {"target", c.target},
                        {"pass", c.pass}});
    Json b{{"suite", suite}, {"config", config_to_json(config)}, {"checks", cs}, {"pass", pass()}};
    if (!extra.empty()) b["results"] = extra;
    return b;
  }

  Json to_json() const {
    Json j = body();
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    j["environment"] = Json{{"version", kVersion},
                            {"compiler", __VERSION__},
                            {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
    return j;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c.pass ? "PASS " : "FAIL ") << c.name << "  measured=" << c.measured << " target=" << c.target
         << (c.pass ? "" : "  [" + c.anchor + "]") << "\n";
    os << suite << ": " << (pass() ? "all checks passed" : "some checks failed") << "\n";
    return os.str();
  }
};

// measured <= target
inline CheckRecord check_le(std::string name, std::string anchor, double measured, double target) {
  return {std::move(name), std::move(anchor), measured, target, measured <= target};
}

// ---- verify ----

inline Report cmd_verify(const RunConfig& cfg) {
  cfg.validate();
  Report rep;
  rep.suite = "verify";
  rep.config = cfg;
  const int d = cfg.d;
  Rng rng(cfg.seed);

  {
    double err = 0.0;
    for (int k = 0; k < 300; ++k) {
      const MobiusMatrix g = random_word(d, rng), h = random_word(d, rng);
      const Vec x = random_in_ball(d, 0.8, rng);
      const auto hx = act(h, x);
      if (hx.point.infinite) continue;
      const auto ghx = act(g, hx.point), both = act(g * h, x);
      if (ghx.point.infinite) continue;
      err = std::max(err, std::abs(ghx.j * hx.j - both.j) / std::abs(both.j));
    }
    rep.checks.push_back(check_le("cocycle_law", "j_gh(x) = j_g(hx) j_h(x)", err, 1e-8));
  }
  {
    double err = 0.0;
    for (int k = 0; k < 300; ++k) {
      const MobiusMatrix g = random_S(d, rng);
      const Vec x = random_in_ball(d, 0.95, rng), y = random_in_ball(d, 0.95, rng);
      const double lhs = (apply(g, x) - apply(g, y)).squaredNorm();
      const double rhs = conformal_factor(g, x) * conformal_factor(g, y) * (x - y).squaredNorm();
      err = std::max(err, std::abs(lhs - rhs) / rhs);
    }
    rep.checks.push_back(check_le("distance_identity", "|gx - gy|^2 = Omega(x) Omega(y) |x - y|^2", err, 1e-8));
  }
  {
    const Truncation t = Truncation::make(d, 8);
    double err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const MobiusMatrix g = random_S(d, rng, 0.9);
      const Vec x = random_in_ball(d, 0.3, rng);
      const auto v = validate_rho(g, t, {x});
      err = std::max(err, v.max_ratio);
    }
    rep.checks.push_back(check_le("rho_on_kernel_vectors", "rho(g) E_x = Omega_g(x)^alpha E_gx within tail", err, 1.5));
  }
  const FockTruncation ft = FockTruncation::make(d, std::min(cfg.degree(), d == 3 ? 12 : 8), std::min(cfg.p_max, 6));
  const Truncation& t = ft.truncation();
  {
    double worst = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double r = 0.05 + 0.45 * (k % 10) / 10.0;
      worst = std::max(worst, std::abs(dilation_trace_partial(d, r, 200) - dilation_trace_closed(d, r)) /
                                  (dilation_trace_tail(d, r, 200) + 1e-14 * dilation_trace_closed(d, r)));
    }
    rep.checks.push_back(check_le("dilation_trace", "tr D(r) = r^alpha (1+r)/(1-r)^(d-1)", worst, 1.0));
  }
  {
    const Vec a = 0.4 * random_unit(d, rng), b = Vec::Zero(d);
    const double r = 0.15, s = 0.2;
    const Mat C = contraction_core(a, r, b, s, ft.table()).C;
    const Mat G = contraction_core_by_green(a, r, b, s, t, 4);
    double err = 0.0;
    for (int n = 0; n <= 4; ++n)
      for (int m = 0; n + m <= 4; ++m)
        err = std::max(err, (C.block(t.offset(n), t.offset(m), t.count(n), t.count(m)) -
                             G.block(t.offset(n), t.offset(m), t.count(n), t.count(m)))
                                .cwiseAbs()
                                .maxCoeff());
    rep.checks.push_back(check_le("contraction_dual_path", "core contraction = Green-function derivatives", err, 1e-10));
  }
  {
    double gap = 0.0;
    for (int n : {2, 4}) {
      std::vector<MobiusMatrix> gs;
      for (;;) {
        gs.clear();
        for (int i = 0; i < n; ++i) gs.push_back(translation(random_in_ball(d, 0.7, rng)) * dilation(d, 0.15) * random_G(d, rng, 0.3));
        if (is_CE_config(gs, d).strict) break;
      }
      std::vector<Vec> phis;
      std::vector<FockVector> in;
      for (int i = 0; i < n; ++i) {
        Vec v = Vec::Zero(t.size());
        v.head(t.offset(3)) = random_gaussian(t.offset(3), rng);
        phis.push_back(v);
        in.push_back(FockVector::particle(v));
      }
      const double want = npoint_wick_oracle(gs, phis, ft.table());
      gap = std::max(gap, std::abs(vacuum_expectation(ft, gs, in) - want) / std::max(1.0, std::abs(want)));
    }
    rep.checks.push_back(check_le("wick_dual_path", "vacuum expectation = sum over perfect matchings", gap, 1e-9));
  }
  {
    std::vector<MobiusMatrix> gs{translation(0.5 * Vec::Unit(d, 0)) * dilation(d, 0.3),
                                 translation(-0.5 * Vec::Unit(d, 0)) * dilation(d, 0.3),
                                 translation(0.55 * Vec::Unit(d, 1)) * dilation(d, 0.25),
                                 translation(-0.55 * Vec::Unit(d, 1)) * dilation(d, 0.2)};
    std::vector<FockVector> in;
    for (int i = 0; i < 4; ++i) {
      Vec v = Vec::Zero(t.size());
      v.head(t.offset(3)) = random_gaussian(t.offset(3), rng);
      in.push_back(FockVector::particle(v));
    }
    const double base = sphere_state(ft, gs, in).value;
    double res = 0.0;
    for (int k = 0; k < 5; ++k) {
      MobiusMatrix g = random_word(d, rng);
      std::vector<MobiusMatrix> moved;
      for (const auto& h : gs) moved.push_back(g * h);
      res = std::max(res, std::abs(sphere_state(ft, moved, in).value - base) / std::max(1.0, std::abs(base)));
    }
    rep.checks.push_back(check_le("sphere_invariance", "sphere state is conformally invariant", res, cfg.tol));
    rep.checks.push_back({"sphere_empty", "empty configuration has value 1", sphere_state(ft, {}, {}).value, 1.0,
                          sphere_state(ft, {}, {}).value == 1.0});
  }
  {
    Vec v = Vec::Zero(t.size());
    v.head(t.offset(3)) = random_gaussian(t.offset(3), rng);
    const FockVector x = FockVector::product({v, v}) + FockVector::particle(v) + FockVector::vacuum(0.5);
    const double err = fock_distance(OperadicProduct(ft, {MobiusMatrix::identity(d)})({x}), x) / fock_norm(x);
    rep.checks.push_back(check_le("unit_law", "rho_1(id) = id", err, 1e-9));
  }
  return rep;
}

// ---- norm sweep ----

inline std::vector<SweepRow> cmd_norm_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.sigmas.empty() || cfg.Ns.empty()) throw Error(Errc::InvalidArgument, "sweep grids must be nonempty");
  std::vector<std::pair<double, int>> grid;
  for (double s : cfg.sigmas)
    for (int N : cfg.Ns) grid.emplace_back(s, N);
  std::vector<SweepRow> rows;
  std::mutex mu;
  std::size_t next = 0;
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), grid.size()));
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= grid.size() || failure) return;
        k = next++;
      }
      try {
        auto r = boundedness_sweep({grid[k].first}, {grid[k].second}, cfg.d);
        std::lock_guard<std::mutex> lock(mu);
        rows.insert(rows.end(), r.begin(), r.end());
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return std::tie(a.sigma, a.N) < std::tie(b.sigma, b.N); });
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << kSweepCsvHeader << "\n" << "d,sigma,N,hs_norm,lower_bound,max_entry_ratio\n";
  for (const auto& r : rows)
    os << r.d << "," << r.sigma << "," << r.N << "," << r.hs_norm << "," << r.lower_bound << "," << r.max_entry_ratio << "\n";
  return os.str();
}

// ---- n-point functions ----

inline Report cmd_npoint(const RunConfig& cfg, const Json& query) {
  cfg.validate();
  Report rep;
  rep.suite = "npoint";
  rep.config = cfg;
  const FockTruncation ft = FockTruncation::make(cfg.d, cfg.degree(), cfg.p_max);
  Json results = Json::array();
  const auto& qs = query.at("queries");
  for (std::size_t q = 0; q < qs.size(); ++q) {
    const Json& item = qs[q];
    const std::string name = item.value("name", "query" + std::to_string(q));
    std::vector<MobiusMatrix> gs;
    std::vector<FockVector> in;
    try {
      for (const auto& w : item.at("config")) gs.push_back(word_from_json(w, cfg.d));
      for (const auto& x : item.at("inputs")) in.push_back(fock_from_json(x, ft.truncation()));
    } catch (const Error& e) {
      throw Error(e.code(), "query '" + name + "': " + e.what());
    } catch (const Json::exception& e) {
      throw Error(Errc::InvalidArgument, "query '" + name + "': " + e.what());
    }
    const OperadicProduct prod(ft, gs);
    const double value =
        cfg.twisted ? psi_twist_product(prod, in).vacuum_coefficient() : vacuum_expectation(prod, in);
    Json r{{"name", name}, {"arity", gs.size()}, {"value", value}, {"product", cfg.twisted ? "psi-twisted" : "untwisted"}};
    if (std::all_of(in.begin(), in.end(), [](const FockVector& v) { return single_particle(v); })) {
      std::vector<Vec> phis;
      for (const auto& v : in) phis.push_back(v.terms[0].coeff * v.terms[0].factors[0]);
      const double oracle = npoint_wick_oracle(gs, phis, ft.table());
      const double gap = std::abs(value - oracle);
      r["oracle"] = oracle;
      r["gap"] = gap;
      rep.checks.push_back(check_le(name + ":dual_path", "vacuum expectation = sum over perfect matchings", gap,
                                    1e-9 * std::max(1.0, std::abs(oracle))));
    }
    results.push_back(std::move(r));
  }
  Json cfgs = Json::array();
  for (const auto& item : qs) cfgs.push_back(item.value("config", Json::array()));
  rep.extra = Json{{"provenance", {{"d", cfg.d}, {"N_max", cfg.degree()}, {"P_max", cfg.p_max},
                                   {"config_hash", config_hash(cfgs)}}},
                   {"queries", results}};
  return rep;
}

// ---- sphere state ----

inline MobiusMatrix random_conformal(int d, Rng& rng) {
  MobiusMatrix g = random_word(d, rng);
  if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
    Mat F = Mat::Identity(d + 2, d + 2);
    F(0, 0) = -1.0;
    g = MobiusMatrix(d, F) * inversion(d) * g;
  }
  return g;
}

inline Report cmd_sphere(const RunConfig& cfg, const Json& spec) {
  cfg.validate();
  Report rep;
  rep.suite = "sphere";
  rep.config = cfg;
  const FockTruncation ft = FockTruncation::make(cfg.d, cfg.degree(), cfg.p_max);
  std::vector<MobiusMatrix> gs;
  std::vector<FockVector> in;
  for (const auto& w : spec.at("elements")) gs.push_back(word_from_json(w, cfg.d));
  if (spec.contains("inputs"))
    for (const auto& x : spec.at("inputs")) in.push_back(fock_from_json(x, ft.truncation()));
  else
    in.assign(gs.size(), FockVector::vacuum());
  const auto res = sphere_state(ft, gs, in);
  Rng rng(cfg.seed);
  Json residuals = Json::array();
  double worst = 0.0;
  for (int k = 0; k < cfg.probes; ++k) {
    const MobiusMatrix g = random_conformal(cfg.d, rng);
    std::vector<MobiusMatrix> moved;
    for (const auto& h : gs) moved.push_back(g * h);
    const double r = std::abs(sphere_state(ft, moved, in).value - res.value) / std::max(1.0, std::abs(res.value));
    residuals.push_back(r);
    worst = std::max(worst, r);
  }
  rep.checks.push_back(check_le("invariance", "sphere state is conformally invariant", worst, cfg.tol));
  Json x0 = res.x0.infinite ? Json("infinity") : vector_to_json(res.x0.x);
  rep.extra = Json{{"value", res.value}, {"x0", x0}, {"scale", res.scale}, {"residuals", residuals},
                   {"provenance", {{"d", cfg.d}, {"N_max", cfg.degree()}, {"P_max", cfg.p_max},
                                   {"config_hash", config_hash(spec.at("elements"))}}}};
  return rep;
}

}  // namespace cflat
