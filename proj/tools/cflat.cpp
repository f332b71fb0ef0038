#include <iostream>

#include <CLI11.hpp>

#include <cflat/cli.hpp>

using namespace cflat;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2 };

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformally flat disk operad toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig flags;
  std::string config_file;
  app.add_option("--dim", flags.d, "Dimension d >= 3");
  app.add_option("--degree", flags.n_max, "One-particle degree cutoff N_max (0: 16 for d=3, 12 otherwise)");
  app.add_option("--particles", flags.p_max, "Particle budget P_max");
  app.add_option("--tol", flags.tol, "Tolerance for invariance checks");
  app.add_option("--seed", flags.seed, "Random seed");
  app.add_option("--out", flags.out, "Output file (default: stdout)");
  app.add_option("--config", config_file, "JSON run configuration; its fields override flags");

  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  auto* sweep = app.add_subcommand("norm-sweep", "Hilbert-Schmidt norm sweep across sigma and N");
  sweep->add_option("--sigmas", flags.sigmas, "sigma grid")->delimiter(',');
  sweep->add_option("--Ns", flags.Ns, "N grid")->delimiter(',');
  auto* npoint = app.add_subcommand("npoint", "Vacuum expectations for a query file");
  std::string query_file;
  npoint->add_option("query", query_file, "Query JSON file")->required();
  npoint->add_flag("--twisted", flags.twisted, "Use the Psi-twisted product");
  auto* sphere = app.add_subcommand("sphere", "Sphere state of a configuration on S^d");
  std::string sphere_file;
  sphere->add_option("input", sphere_file, "Configuration JSON file")->required();
  sphere->add_option("--probes", flags.probes, "Number of random conformal transports");
  for (auto* sub : {verify, sweep, npoint, sphere}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  }

  RunConfig cfg;
  Json input;
  try {
    cfg = config_file.empty() ? flags : config_from_json(read_json_file(config_file), flags);
    cfg.validate();
    if (npoint->parsed()) input = read_json_file(query_file);
    if (sphere->parsed()) input = read_json_file(sphere_file);
  } catch (const Error& e) {
    std::cerr << "cflat: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (verify->parsed()) {
      const Report rep = cmd_verify(cfg);
      std::cout << rep.summary();
      if (!cfg.out.empty()) emit(rep.to_json().dump(2) + "\n", cfg.out);
      return rep.pass() ? kPass : kFail;
    }
    if (sweep->parsed()) {
      emit(sweep_csv(cmd_norm_sweep(cfg)), cfg.out);
      return kPass;
    }
    const Report rep = npoint->parsed() ? cmd_npoint(cfg, input) : cmd_sphere(cfg, input);
    emit(rep.to_json().dump(2) + "\n", cfg.out);
    if (!rep.pass()) std::cerr << rep.summary();
    return rep.pass() ? kPass : kFail;
  } catch (const Error& e) {
    std::cerr << "cflat: " << e.what() << "\n";
    return e.code() == Errc::InvalidArgument || e.code() == Errc::DimensionMismatch ? kUsage : kFail;
  } catch (const Json::exception& e) {
    std::cerr << "cflat: malformed input: " << e.what() << "\n";
    return kUsage;
  }
}
