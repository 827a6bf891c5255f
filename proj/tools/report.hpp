#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unistd.h>

#include "rdmcone/rdmcone.hpp"

namespace rdmcone::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "rdmcone-report/1";
inline constexpr const char* kVerifySchema = "rdmcone-verify/1";
inline constexpr const char* kRdmOrdering =
    "pairs (i,j), i<j, lexicographic over spin orbitals; spatial p -> 2p (alpha), 2p+1 (beta); "
    "D[(ij),(kl)] = <a_i+ a_j+ a_l a_k>; values are the lower triangle, row-major";

/// 12 significant digits, '.' decimal regardless of locale.
inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline json packed_lower(const PackedMatrix& d) {
  json values = json::array();
  const Matrix& m = d.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) values.push_back(m(i, j));
  return {{"ordering", kRdmOrdering},
          {"spin_orbitals", d.basis().rank()},
          {"dimension", d.basis().dim()},
          {"packed_lower", std::move(values)}};
}

inline json report_json(const SolveReport& rep, bool with_history = false) {
  json out{{"method", rep.method},
           {"conditions", conditions_label(rep.conditions)},
           {"energy", rep.energy},
           {"rigorous_bound", rep.rigorous_bound},
           {"residual",
            {{"primal", rep.residual_primal}, {"dual", rep.residual_dual}, {"gap", rep.residual_gap}}},
           {"iterations", rep.iterations},
           {"converged", rep.converged},
           {"trace_error", rep.rdm.trace_error()}};
  if (with_history) {
    json h = json::array();
    for (const auto& r : rep.history) h.push_back({r.iteration, r.energy, r.bound, r.residual});
    out["history"] = {{"columns", {"iteration", "energy", "bound", "residual"}}, {"rows", h}};
  }
  return out;
}

/// Writes next to the target and renames, so readers never see a partial file.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move report into place at " + path + ": " + ec.message());
  }
}

inline void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_atomically(path, content);
  }
}

}  // namespace rdmcone::cli
