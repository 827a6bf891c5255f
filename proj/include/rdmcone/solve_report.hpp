#pragma once

#include <string>
#include <vector>

#include "rdmcone/nrep_maps.hpp"

namespace rdmcone {

/// Per-iteration diagnostics. `bound` is a certified lower bound on the
/// ground-state energy valid at that iteration.
struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double bound = 0.0;
  double residual = 0.0;
};

struct SolveReport {
  std::string method;
  std::vector<Condition> conditions;
  double energy = 0.0;
  TwoRDM rdm;
  double residual_primal = 0.0;
  double residual_dual = 0.0;
  double residual_gap = 0.0;
  double rigorous_bound = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::vector<IterationRecord> history;
};

inline bool has_condition(const std::vector<Condition>& conditions, Condition c) {
  for (Condition x : conditions)
    if (x == c) return true;
  return false;
}

inline Condition parse_condition(char letter) {
  switch (letter) {
    case 'D': case 'd': return Condition::D2;
    case 'Q': case 'q': return Condition::Q2;
    case 'G': case 'g': return Condition::G2;
    case 'T': case 't': return Condition::T2;
  }
  throw Error(std::string("unknown N-representability condition '") + letter + "'");
}

/// "dqg" -> {D2, Q2, G2}.
inline std::vector<Condition> parse_conditions(const std::string& letters) {
  std::vector<Condition> out;
  for (char ch : letters) {
    const Condition c = parse_condition(ch);
    if (!has_condition(out, c)) out.push_back(c);
  }
  if (out.empty()) throw Error("empty condition set");
  return out;
}

inline std::string conditions_label(const std::vector<Condition>& conditions) {
  std::string out;
  for (Condition c : {Condition::D2, Condition::Q2, Condition::G2, Condition::T2})
    if (has_condition(conditions, c)) out += static_cast<char>(to_string(c)[0]);
  return out;
}

}  // namespace rdmcone
