// lakelab: command-line driver for the lake-equation laboratory.
//
//   lakelab <subcommand> [config.ini] [--set section.key=value ...] [--out dir]
//
// Exit codes: 0 ok, 2 config error, 3 solver error, 4 invariant failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lakelab/lakelab.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace lakelab;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kInvariantFailure = 4;

struct Args {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Io:
    case ErrorKind::InvalidDepth:
    case ErrorKind::InvalidGeometry:
    case ErrorKind::InvalidSequence:
    case ErrorKind::BadCutoff:
    case ErrorKind::BadTestFunction:
      return kConfigError;
    default:
      return kSolverError;
  }
}

void report_error(std::string_view kind, const std::string& message) {
  ordered_json j;
  j["kind"] = std::string(kind);
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

RunConfig load(const Args& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  for (const auto& o : a.overrides) cfg.override_with(o);
  return cfg;
}

class Output {
 public:
  Output(const RunConfig& cfg, const Args& a)
      : dir_(a.out.empty() ? cfg.str("output", "dir", "out") : a.out), prefix_(cfg.str("output", "prefix", "")) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir_.string());
  }

  fs::path path(const std::string& name) const { return dir_ / (prefix_ + name); }

  std::ofstream open(const std::string& name) const {
    std::ofstream os(path(name));
    if (!os) fail(ErrorKind::Io, "cannot write " + path(name).string());
    return os;
  }

  void json(const std::string& name, const ordered_json& j) const {
    auto os = open(name);
    os << j.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::string prefix_;
};

int cmd_solve(const Args& a) {
  const RunConfig cfg = load(a);
  const LakeSpec spec = lake_from(cfg);
  const Output out(cfg, a);
  const Grid g = build_grid(spec, grid_from(cfg));
  const DepthSample ds = sample_depth(spec, g);
  BoundaryValues bc{cfg.num("solve", "outer", 0.0), std::nullopt};
  if (g.has_island) bc.island = cfg.num("solve", "island", 0.0);
  const EllipticOperator op = assemble(ds.face, g, bc);
  const double f = cfg.num("solve", "source", 0.0);
  SolveOptions opt;
  opt.tol = cfg.num("solve", "tol", 1e-10);
  SolveReport rep;
  const CellField psi = solve(op, integrated_source(g, [f](Vec2) { return f; }), rep, opt);
  auto os = out.open("psi.csv");
  write_field_csv(os, g, psi);
  ordered_json j;
  j["iterations"] = rep.iterations;
  j["residual"] = rep.residual;
  j["energy"] = rep.energy;
  out.json("solve.json", j);
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_harmonic(const Args& a) {
  const RunConfig cfg = load(a);
  const LakeSpec spec = lake_from(cfg);
  const Output out(cfg, a);
  const Grid g = build_grid(spec, grid_from(cfg));
  const HodgeBasis hb = harmonic_basis(spec, g, cfg.num("solve", "tol", 1e-10));
  {
    auto os = out.open("basis.csv");
    os << "i,j,x,y,phi1,psi1\n";
    char buf[192];
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Cell& cell = g.cells[c];
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g,%.12g,%.12g\n", cell.i, cell.j, cell.center.x,
                    cell.center.y, hb.phi1[c], hb.psi1[c]);
      os << buf;
    }
  }
  ordered_json j;
  j["energy_phi"] = hb.energy_phi;
  j["a_scal"] = hb.a_scal;
  j["capacity"] = hb.capacity;
  out.json("basis.json", j);
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_capacity(const Args& a) {
  const RunConfig cfg = load(a);
  const LakeSpec spec = lake_from(cfg);
  const Output out(cfg, a);
  const Grid g = build_grid(spec, grid_from(cfg));
  const HodgeBasis hb = harmonic_basis(spec, g, cfg.num("solve", "tol", 1e-10));
  ordered_json j;
  j["island_radius"] = spec.island_radius();
  j["capacity"] = hb.capacity;
  j["radial_bound"] = capacity_floor(g, sample_depth(spec, g).cell);
  out.json("capacity.json", j);
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_evolve(const Args& a) {
  const RunConfig cfg = load(a);
  const LakeSpec spec = lake_from(cfg);
  const TimeStepper ts = stepper_from(cfg);
  const OmegaRecipe w = omega_from(cfg);
  const double T = cfg.num("evolve", "T", 0.0);
  const int every = cfg.integer("evolve", "snapshot_every", 0);
  if (T < 0.0 || every < 0) fail(ErrorKind::Config, "evolve.T and evolve.snapshot_every must be nonnegative");
  const Output out(cfg, a);
  const DiscreteLake lake = discretize(spec, grid_from(cfg), cfg.num("solve", "tol", 1e-10));
  const FlowState s0 = make_state(lake, w.sample(lake.g()), cfg.num("vorticity", "gamma", 0.0));

  auto ts_csv = out.open("timeseries.csv");
  ts_csv << "t,mass,max_omega,min_omega,gamma,energy\n";
  char buf[256];
  const auto snaps = evolve(
      s0, T, lake, ts,
      [&](const FlowState& s) {
        std::snprintf(buf, sizeof buf, "%.12g,%.15g,%.15g,%.15g,%.12g,%.12g\n", s.t, s.diag.mass, s.diag.max_omega,
                      s.diag.min_omega, s.diag.gamma, s.diag.energy);
        ts_csv << buf;
      },
      every);
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    std::snprintf(buf, sizeof buf, "omega_%04zu.csv", k);
    auto os = out.open(buf);
    write_field_csv(os, lake.g(), snaps[k].omega);
  }
  ordered_json j;
  j["snapshots"] = snaps.size();
  j["steps"] = snaps.back().steps;
  j["t_final"] = snaps.back().t;
  j["mass"] = snaps.back().diag.mass;
  j["gamma"] = snaps.back().diag.gamma;
  out.json("evolve.json", j);
  std::cout << j.dump() << "\n";
  return kOk;
}

int cmd_limit(const Args& a) {
  const RunConfig cfg = load(a);
  const StudySpec study = study_from(cfg);
  const Output out(cfg, a);
  const ConvergenceReport rep =
      study.mode == SequenceMode::Evanescent ? run_evanescent(study) : run_emergent(study);
  {
    auto os = out.open("report.csv");
    rep.write_csv(os);
  }
  const ordered_json j = rep.summary();
  out.json("summary.json", j);
  std::cout << j.dump() << "\n";
  return rep.all_passed() ? kOk : kInvariantFailure;
}

int cmd_verify(const Args& a) {
  const RunConfig cfg = load(a);
  VerifyOptions opt;
  opt.seed = cfg.seed();
  opt.cfl = cfg.num("evolve", "cfl", 0.45);
  const std::string fixture = detail::need_choice(cfg, "verify", "fixture", "none", {"none", "mis_signed_circulation"});
  opt.mis_signed_circulation = fixture == "mis_signed_circulation";
  const VerifyResult res = run_verify(opt);
  res.print(std::cout);
  return res.all_passed() ? kOk : kInvariantFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the degenerate lake equations"};
  app.require_subcommand(1);
  Args args;

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Args&);
    bool config_required;
  };
  const Sub subs[] = {
      {"solve", "one elliptic solve: field CSV and solver report", cmd_solve, true},
      {"harmonic", "b-harmonic basis phi1, psi1 and its energy", cmd_harmonic, true},
      {"capacity", "weighted capacity of the island", cmd_capacity, true},
      {"evolve", "transport potential vorticity to time T", cmd_evolve, true},
      {"limit", "evanescent or emergent eps-study", cmd_limit, true},
      {"verify", "run the invariant suite", cmd_verify, false},
  };
  const Sub* chosen = nullptr;
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    auto* opt = sc->add_option("config", args.config, "INI run configuration");
    if (s.config_required) opt->required();
    sc->add_option("--set", args.overrides, "override a key: section.key=value");
    sc->add_option("--out", args.out, "output directory (overrides output.dir)");
    sc->callback([&chosen, &s] { chosen = &s; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("config", e.what());
    return kConfigError;
  }

  try {
    return chosen->run(args);
  } catch (const LakeError& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kSolverError;
  }
}
