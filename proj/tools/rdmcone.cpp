// rdmcone command-line front end: solve, scan, verify.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "report.hpp"
#include "verify.hpp"

namespace rdmcone::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

struct HubbardSpec {
  int sites = 0;
  double t = 1.0;
  double u = 0.0;
  int n = -1;
  bool periodic = false;
};

template <class T>
T spec_value(const std::string& item, const std::string& value) {
  T out{};
  std::istringstream in(value);
  in.imbue(std::locale::classic());
  if (!(in >> out) || !(in >> std::ws).eof())
    throw Error("malformed value in hubbard spec item '" + item + "'");
  return out;
}

/// "L=4,t=1,U=4[,N=4][,periodic=1]"
HubbardSpec parse_hubbard(const std::string& text) {
  HubbardSpec spec;
  std::stringstream in(text);
  std::string item;
  bool have_l = false;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("hubbard spec item '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "L") {
      spec.sites = spec_value<int>(item, value);
      have_l = true;
    } else if (key == "t") {
      spec.t = spec_value<double>(item, value);
    } else if (key == "U") {
      spec.u = spec_value<double>(item, value);
    } else if (key == "N") {
      spec.n = spec_value<int>(item, value);
    } else if (key == "periodic") {
      spec.periodic = spec_value<int>(item, value) != 0;
    } else {
      throw Error("unknown hubbard spec key '" + key + "'");
    }
  }
  if (!have_l) throw Error("hubbard spec needs L");
  if (spec.sites < 2 || spec.sites > 31) throw Error("hubbard spec needs 2 <= L <= 31");
  return spec;
}

struct System {
  std::string label;
  std::string source;
  IntegralSet ints;
  int n = 0;
  std::optional<HubbardSpec> lattice;
};

std::string number_label(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

System hubbard_system(const std::string& text, int n_override) {
  const HubbardSpec spec = parse_hubbard(text);
  System s;
  s.label = "hubbard_L" + std::to_string(spec.sites) + "_t" + number_label(spec.t) + "_U" +
            number_label(spec.u) + (spec.periodic ? "_pbc" : "");
  s.source = "hubbard " + text;
  s.ints = hubbard_chain(spec.sites, spec.t, spec.u, spec.periodic);
  s.n = n_override > 0 ? n_override : (spec.n > 0 ? spec.n : spec.sites);
  s.lattice = spec;
  return s;
}

System fcidump_system(const std::string& path, int n_override) {
  System s;
  s.label = std::filesystem::path(path).stem().string();
  s.source = path;
  s.ints = parse_fcidump_file(path);
  s.n = n_override > 0 ? n_override : s.ints.n_electrons;
  return s;
}

void check_particles(const System& s) {
  if (s.n < 2) throw Error(s.label + ": need at least two particles");
  if (s.n > s.ints.spin_orbitals()) throw Error(s.label + ": more particles than spin orbitals");
}

struct SolveConfig {
  std::string hubbard;
  std::string fcidump;
  std::string orbdata;
  int n = -1;
  std::string conditions = "dqg";
  std::string method = "auto";
  double tolerance = 1e-6;
  int max_iterations = 20000;
  int max_outer = 60;
  int g_factors = -1;
  int t2_factors = -1;
  std::uint64_t seed = 0;
  bool fci = false;
  int hf_directions = 0;
  double hf_step = 1e-4;
  bool emit_rdm = false;
  bool history = false;
  std::string output;
};

json config_json(const SolveConfig& c) {
  return {{"hubbard", c.hubbard},   {"fcidump", c.fcidump},
          {"orbdata", c.orbdata},   {"n", c.n},
          {"conditions", c.conditions},
          {"method", c.method},     {"tolerance", c.tolerance},
          {"max_iterations", c.max_iterations},
          {"max_outer_iterations", c.max_outer},
          {"g_factors", c.g_factors},
          {"t2_factors", c.t2_factors},
          {"seed", c.seed},         {"fci", c.fci},
          {"hf_directions", c.hf_directions},
          {"hf_step", c.hf_step},   {"emit_rdm", c.emit_rdm},
          {"history", c.history}};
}

json property_json(const TwoRDM& rdm, const System& sys, const std::optional<OrbitalData>& orb) {
  json p;
  const OneRDM gamma = contract_to_1rdm(rdm);
  const auto no = natural_orbitals(gamma, true);
  p["natural_occupations"] = no.occupations;
  p["entropy"] = no.entropy;
  p["entropy_convention"] = "spin-orbital, -sum nu ln nu";
  if (sys.lattice) p["bond_coherence"] = bond_coherence(gamma, sys.lattice->periodic);
  if (orb) {
    p["mulliken_charges"] = mulliken_charges(gamma, *orb);
    p["metallic_character"] = metallic_character(gamma, *orb);
    if (orb->dipole_integrals) {
      const auto mu = dipole_moment(gamma, *orb);
      p["dipole_debye"] = mu;
      p["dipole_norm_debye"] = std::sqrt(mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]);
    }
  }
  return p;
}

DualProblem dual_problem(const ReducedHamiltonian& k, const std::vector<Condition>& conds,
                         const SolveConfig& c) {
  if (!has_condition(conds, Condition::D2) || !has_condition(conds, Condition::Q2))
    throw Error("the dual solver always fits D2 and Q2; include both in --conditions");
  DualProblem p{k};
  p.n_g_factors = has_condition(conds, Condition::G2) ? c.g_factors : 0;
  p.n_t2_factors = has_condition(conds, Condition::T2) ? c.t2_factors : 0;
  p.tolerance = c.tolerance;
  p.max_outer_iterations = c.max_outer;
  p.seed = c.seed;
  p.record_history = c.history;
  return p;
}

int cmd_solve(const SolveConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  // Input stage: every failure here is an input error and writes nothing.
  if (c.hubbard.empty() == c.fcidump.empty())
    throw Error("give exactly one of --hubbard or --fcidump");
  System sys = c.hubbard.empty() ? fcidump_system(c.fcidump, c.n) : hubbard_system(c.hubbard, c.n);
  check_particles(sys);
  std::optional<OrbitalData> orb;
  if (!c.orbdata.empty()) {
    orb = parse_orbdata_file(c.orbdata);
    orb->validate();
    if (orb->n_mo() != sys.ints.norb) throw Error(c.orbdata + ": MO count does not match the integrals");
  }
  const auto conds = parse_conditions(c.conditions);
  std::string method = c.method;
  if (method == "auto") method = has_condition(conds, Condition::T2) ? "dual" : "primal";
  if (method != "primal" && method != "dual" && method != "both")
    throw Error("--method must be auto, primal, dual or both");
  if (c.tolerance <= 0) throw Error("--tol must be positive");
  if (c.hf_directions > 0 && method == "primal") throw Error("--hf-check needs the dual solver");
  const auto k = assemble_reduced_hamiltonian(sys.ints, sys.n);

  json out;
  out["schema"] = kReportSchema;
  json cfg = config_json(c);
  cfg["method"] = method;
  cfg["n"] = sys.n;
  out["config"] = cfg;
  out["system"] = {{"label", sys.label},
                   {"source", sys.source},
                   {"spin_orbitals", sys.ints.spin_orbitals()},
                   {"n_particles", sys.n},
                   {"pair_dimension", k.basis().dim()},
                   {"core_energy", k.core_energy}};
  json timing;
  json results;
  bool converged = true;
  json headline;

  if (method == "primal" || method == "both") {
    std::vector<Condition> pc;
    for (Condition x : conds)
      if (x != Condition::T2) pc.push_back(x);
    PrimalProblem p{k};
    p.conditions = pc;
    p.tolerance = c.tolerance;
    p.max_iterations = c.max_iterations;
    p.record_history = c.history;
    const auto rep = solve_primal(p);
    json r = report_json(rep, c.history);
    r["properties"] = property_json(rep.rdm, sys, orb);
    if (c.emit_rdm) r["rdm"] = packed_lower(rep.rdm.D);
    results["primal"] = r;
    timing["primal_s"] = rep.wall_time;
    converged = converged && rep.converged;
    headline = {{"energy", rep.energy},
                {"rigorous_bound", rep.rigorous_bound},
                {"residual", std::max(rep.residual_primal, rep.residual_dual)},
                {"converged", rep.converged}};
  }
  if (method == "dual" || method == "both") {
    const DualProblem p = dual_problem(k, conds, c);
    const auto res = solve_dual(p);
    json r = report_json(res.report, c.history);
    r["certificate"] = {{"epsilon", res.certificate.epsilon},
                        {"elements", res.certificate.elements.size()},
                        {"residual", res.certificate.residual},
                        {"g_factors", p.g_count()},
                        {"t2_factors", p.t2_count()}};
    r["multiplier_trace"] = res.multiplier.X.trace();
    r["properties"] = property_json(res.multiplier.as_rdm(), sys, orb);
    if (c.emit_rdm) r["rdm"] = packed_lower(res.multiplier.X);
    timing["dual_s"] = res.report.wall_time;
    converged = converged && res.report.converged;
    headline = {{"energy", res.report.energy},
                {"rigorous_bound", res.report.rigorous_bound},
                {"residual", res.report.residual_primal},
                {"converged", res.report.converged}};
    if (c.hf_directions > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                        0x4846u};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal;
      const int m = k.basis().dim();
      std::vector<PackedMatrix> dirs;
      for (int d = 0; d < c.hf_directions; ++d) {
        Matrix a(m, m);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = normal(rng);
        dirs.emplace_back(k.basis(), a / a.norm());
      }
      const auto hf_start = std::chrono::steady_clock::now();
      json hf = json::array();
      for (const auto& e : hellmann_feynman_check(p, res, dirs, c.hf_step))
        hf.push_back({{"central_difference", e.central_difference},
                      {"multiplier_trace", e.multiplier_trace},
                      {"discrepancy", e.discrepancy},
                      {"converged", e.converged}});
      r["hf_check"] = {{"step", c.hf_step}, {"directions", hf}};
      timing["hf_check_s"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - hf_start).count();
    }
    results["dual"] = r;
  }
  for (auto& [key, value] : headline.items()) out[key] = value;
  if (c.fci) {
    try {
      const auto f = fci_lowest(sys.ints, sys.n);
      out["fci"] = {{"energy", f.energy}, {"ms2", f.ms2}, {"dimension", f.dimension}};
    } catch (const Error& e) {
      out["fci"] = {{"error", e.what()}};
    }
  }
  out["results"] = results;
  timing["total_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Wall-clock data lives only here so reports of identical runs differ only in this field.
  out["timing"] = timing;
  emit(c.output, out.dump(2) + "\n");
  return converged ? kExitOk : kExitNotConverged;
}

struct ScanConfig {
  std::vector<std::string> hubbard;
  std::vector<std::string> fcidump;
  std::string reference;
  std::string methods = "dqg,dqgt";
  double tolerance = 1e-6;
  int max_iterations = 20000;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string output;
};

struct ScanRow {
  std::string label;
  double e_ref = NAN, e_fci = NAN, e_dqg = NAN, e_dqgt = NAN, b_dqg = NAN, b_dqgt = NAN;
  std::string conv_dqg, conv_dqgt;
  std::string status = "ok";
};

std::map<std::string, double> read_reference(const std::string& path) {
  std::map<std::string, double> out;
  std::ifstream in(path);
  if (!in) throw Error("cannot open reference table " + path);
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) cells.push_back(cell);
    return cells;
  };
  std::string line;
  std::size_t line_no = 0;
  // e_ref, else e_fci, else the second column
  std::size_t column = 1;
  if (std::getline(in, line)) {
    ++line_no;
    const auto header = split(line);
    for (const char* name : {"e_fci", "e_ref"})
      for (std::size_t i = 1; i < header.size(); ++i)
        if (header[i] == name) column = i;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() <= column)
      throw ParseError(path + ": reference row has no value column", line_no);
    const std::string& label = cells[0];
    const std::string& value = cells[column];
    try {
      out[label] = std::stod(value);
    } catch (const std::exception&) {
      throw ParseError(path + ": malformed reference value", line_no);
    }
  }
  return out;
}

int resolve_jobs(int requested) {
  int jobs = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("RDMCONE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) jobs = std::min(jobs, cap);
  }
  return std::max(1, jobs);
}

ScanRow scan_point(const System& sys, bool dqg, bool dqgt, const ScanConfig& c) {
  ScanRow row;
  row.label = sys.label;
  try {
    check_particles(sys);
    const auto k = assemble_reduced_hamiltonian(sys.ints, sys.n);
    try {
      row.e_fci = fci_lowest(sys.ints, sys.n).energy;
    } catch (const Error&) {
      // beyond the FCI size guard; leave the column empty
    }
    bool ok = true;
    if (dqg) {
      PrimalProblem p{k};
      p.tolerance = c.tolerance;
      p.max_iterations = c.max_iterations;
      p.record_history = false;
      const auto rep = solve_primal(p);
      row.e_dqg = rep.energy;
      row.b_dqg = rep.rigorous_bound;
      row.conv_dqg = rep.converged ? "1" : "0";
      ok = ok && rep.converged;
    }
    if (dqgt) {
      DualProblem p{k};
      p.tolerance = c.tolerance;
      p.seed = c.seed;
      p.record_history = false;
      const auto res = solve_dual(p);
      row.e_dqgt = res.report.energy;
      row.b_dqgt = res.report.rigorous_bound;
      row.conv_dqgt = res.report.converged ? "1" : "0";
      ok = ok && res.report.converged;
    }
    if (!ok) row.status = "not-converged";
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  return row;
}

int cmd_scan(const ScanConfig& c) {
  std::vector<std::function<System()>> inputs;
  for (const auto& h : c.hubbard) inputs.push_back([h] { return hubbard_system(h, -1); });
  for (const auto& f : c.fcidump) inputs.push_back([f] { return fcidump_system(f, -1); });
  if (inputs.empty()) throw Error("scan needs at least one --hubbard or --fcidump input");
  bool dqg = false, dqgt = false;
  {
    std::stringstream s(c.methods);
    std::string m;
    while (std::getline(s, m, ',')) {
      if (m == "dqg") dqg = true;
      else if (m == "dqgt") dqgt = true;
      else throw Error("--methods accepts dqg and dqgt");
    }
  }
  if (!dqg && !dqgt) throw Error("--methods selects nothing");
  std::map<std::string, double> reference;
  if (!c.reference.empty()) reference = read_reference(c.reference);
  for (const auto& h : c.hubbard) parse_hubbard(h);  // reject malformed specs before any work

  std::vector<ScanRow> rows(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        rows[i] = scan_point(inputs[i](), dqg, dqgt, c);
      } catch (const std::exception& e) {
        rows[i].label = "input" + std::to_string(i + 1);
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        rows[i].status = "error: " + msg;
      }
    }
  };
  const int jobs = std::min<int>(resolve_jobs(c.jobs), static_cast<int>(inputs.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "label,e_ref,e_fci,e_dqg,e_dqgt,gap_dqg,gap_dqgt,bound_dqg,bound_dqgt,converged_dqg,"
         "converged_dqgt,status\n";
  bool all_ok = true;
  for (auto& r : rows) {
    if (auto it = reference.find(r.label); it != reference.end()) r.e_ref = it->second;
    csv << r.label << ',' << csv_number(r.e_ref) << ',' << csv_number(r.e_fci) << ','
        << csv_number(r.e_dqg) << ',' << csv_number(r.e_dqgt) << ','
        << csv_number(r.e_fci - r.e_dqg) << ',' << csv_number(r.e_fci - r.e_dqgt) << ','
        << csv_number(r.b_dqg) << ',' << csv_number(r.b_dqgt) << ',' << r.conv_dqg << ','
        << r.conv_dqgt << ',' << r.status << '\n';
    all_ok = all_ok && r.status == "ok";
  }
  emit(c.output, csv.str());
  return all_ok ? kExitOk : kExitNotConverged;
}

int cmd_verify(const VerifyOptions& opt, const std::string& output) {
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_verify(opt);
  json checks = json::array();
  bool all = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << r.seconds
              << " s)\n";
    all = all && r.pass;
  }
  json timing = json::object();
  for (const auto& r : results) timing[r.name + "_s"] = r.seconds;
  timing["total_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json out{{"schema", kVerifySchema},
           {"only", opt.only},
           {"inject_fault", opt.inject_fault},
           {"checks", checks},
           {"all_pass", all},
           {"timing", timing}};
  emit(output, out.dump(2) + "\n");
  return all ? kExitOk : kExitNotConverged;
}

}  // namespace
}  // namespace rdmcone::cli

int main(int argc, char** argv) {
  using namespace rdmcone::cli;
  CLI::App app{"rdmcone: variational 2-RDM lower bounds by primal and dual-cone SDP"};
  app.require_subcommand(1);

  SolveConfig sc;
  auto* solve = app.add_subcommand("solve", "solve one system and write a JSON report");
  solve->add_option("--hubbard", sc.hubbard, "Hubbard chain spec, e.g. L=4,t=1,U=4[,N=4][,periodic=1]");
  solve->add_option("--fcidump", sc.fcidump, "FCIDUMP integral file");
  solve->add_option("--orbdata", sc.orbdata, "ORBDATA 1 file for Mulliken/dipole/metallic analyses");
  solve->add_option("--n", sc.n, "particle count (default: NELEC or L)");
  solve->add_option("--conditions", sc.conditions, "subset of d,q,g,t")->capture_default_str();
  solve->add_option("--method", sc.method, "auto, primal, dual or both")->capture_default_str();
  solve->add_option("--tol", sc.tolerance, "convergence tolerance")->capture_default_str();
  solve->add_option("--max-iter", sc.max_iterations, "primal iteration cap")->capture_default_str();
  solve->add_option("--max-outer", sc.max_outer, "dual outer iteration cap")->capture_default_str();
  solve->add_option("--g-factors", sc.g_factors, "G2 dual factors (-1: r)")->capture_default_str();
  solve->add_option("--t2-factors", sc.t2_factors, "T2 dual factors (-1: r)")->capture_default_str();
  solve->add_option("--seed", sc.seed, "seed for dual initialization")->capture_default_str();
  solve->add_flag("--fci", sc.fci, "include the FCI oracle energy");
  solve->add_option("--hf-check", sc.hf_directions, "random Hellmann-Feynman directions (dual)");
  solve->add_option("--hf-step", sc.hf_step, "finite-difference step")->capture_default_str();
  solve->add_flag("--emit-rdm", sc.emit_rdm, "serialize the 2-RDM");
  solve->add_flag("--history", sc.history, "include per-iteration history");
  solve->add_option("-o,--output", sc.output, "report path (default stdout)");

  ScanConfig scan_cfg;
  auto* scan = app.add_subcommand("scan", "CSV table of FCI, DQG and DQGT energies over inputs");
  scan->add_option("--hubbard", scan_cfg.hubbard, "Hubbard chain spec (repeatable)");
  scan->add_option("--fcidump", scan_cfg.fcidump, "FCIDUMP file (repeatable)");
  scan->add_option("--reference", scan_cfg.reference, "CSV keyed by label; uses e_ref, else e_fci, else column 2");
  scan->add_option("--methods", scan_cfg.methods, "dqg, dqgt or both")->capture_default_str();
  scan->add_option("--tol", scan_cfg.tolerance, "convergence tolerance")->capture_default_str();
  scan->add_option("--max-iter", scan_cfg.max_iterations, "primal iteration cap")->capture_default_str();
  scan->add_option("--seed", scan_cfg.seed, "seed for dual initialization")->capture_default_str();
  scan->add_option("--jobs", scan_cfg.jobs, "parallel points (capped by RDMCONE_THREADS)");
  scan->add_option("-o,--output", scan_cfg.output, "CSV path (default stdout)");

  VerifyOptions vopt;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the bundled invariant suite");
  verify->add_option("--only", vopt.only, "run only these checks")->delimiter(',');
  verify->add_option("--inject-fault", vopt.inject_fault, "mutation fixture: lift-q2-sign")
      ->check(CLI::IsMember({"lift-q2-sign"}));
  verify->add_option("--seed", vopt.seed, "seed for random probes")->capture_default_str();
  verify->add_option("-o,--output", verify_out, "JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }
  try {
    if (*solve) return cmd_solve(sc);
    if (*scan) return cmd_scan(scan_cfg);
    if (*verify) return cmd_verify(vopt, verify_out);
  } catch (const std::exception& e) {
    std::cerr << "rdmcone: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
