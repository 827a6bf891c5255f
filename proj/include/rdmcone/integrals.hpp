#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "rdmcone/error.hpp"
#include "rdmcone/pair_space.hpp"

namespace rdmcone {

/// Restricted one- and two-electron integrals over spatial orbitals.
/// Two-electron integrals are stored in chemist notation (pq|rs) with all
/// eight permutations populated.
struct IntegralSet {
  int norb = 0;
  int n_electrons = 0;
  int ms2 = 0;
  double core_energy = 0.0;
  Matrix h;
  std::vector<double> eri;

  IntegralSet() = default;
  IntegralSet(int norb_, int n_electrons_, int ms2_ = 0)
      : norb(norb_),
        n_electrons(n_electrons_),
        ms2(ms2_),
        h(Matrix::Zero(norb_, norb_)),
        eri(static_cast<std::size_t>(norb_) * norb_ * norb_ * norb_, 0.0) {}

  int spin_orbitals() const noexcept { return 2 * norb; }

  std::size_t offset(int p, int q, int r, int s) const noexcept {
    return ((static_cast<std::size_t>(p) * norb + q) * norb + r) * norb + s;
  }

  double v(int p, int q, int r, int s) const noexcept { return eri[offset(p, q, r, s)]; }

  /// Writes (pq|rs) and its seven permutational partners.
  void set_v(int p, int q, int r, int s, double value) {
    for (auto [a, b, c, d] : std::array<std::array<int, 4>, 8>{{{p, q, r, s},
                                                                {q, p, r, s},
                                                                {p, q, s, r},
                                                                {q, p, s, r},
                                                                {r, s, p, q},
                                                                {s, r, p, q},
                                                                {r, s, q, p},
                                                                {s, r, q, p}}})
      eri[offset(a, b, c, d)] = value;
  }

  void set_h(int p, int q, double value) {
    h(p, q) = value;
    h(q, p) = value;
  }
};

inline IntegralSet linear_combination(double alpha, const IntegralSet& a, double beta,
                                      const IntegralSet& b) {
  if (a.norb != b.norb) throw Error("integral sets have different orbital counts");
  IntegralSet out(a.norb, a.n_electrons, a.ms2);
  out.core_energy = alpha * a.core_energy + beta * b.core_energy;
  out.h = alpha * a.h + beta * b.h;
  for (std::size_t i = 0; i < out.eri.size(); ++i)
    out.eri[i] = alpha * a.eri[i] + beta * b.eri[i];
  return out;
}

// ---------------------------------------------------------------------------
// FCIDUMP

namespace detail {

inline std::optional<long> namelist_int(const std::string& header, const std::string& key) {
  const std::regex re("(^|[^A-Z0-9_])" + key + "\\s*=\\s*(-?[0-9]+)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(header, m, re)) return std::nullopt;
  return std::stol(m[2].str());
}

inline bool parse_double(const std::string& token, double& out) {
  std::string t = token;
  // Fortran writers sometimes emit D exponents.
  std::replace(t.begin(), t.end(), 'D', 'E');
  std::replace(t.begin(), t.end(), 'd', 'e');
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_int(const std::string& token, int& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

inline bool header_terminated(const std::string& line) {
  std::string upper = line;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper.find("&END") != std::string::npos) return true;
  // Fortran namelists may also close with a bare slash.
  return upper.find('/') != std::string::npos;
}

}  // namespace detail

inline IntegralSet parse_fcidump(std::istream& in) {
  std::string header;
  std::string line;
  std::size_t line_no = 0;
  bool terminated = false;
  while (std::getline(in, line)) {
    ++line_no;
    header += line + "\n";
    if (detail::header_terminated(line)) {
      terminated = true;
      break;
    }
  }
  if (!terminated) throw ParseError("FCIDUMP namelist header is not terminated", line_no);

  const auto norb = detail::namelist_int(header, "NORB");
  const auto nelec = detail::namelist_int(header, "NELEC");
  if (!norb) throw ParseError("FCIDUMP header is missing NORB", 1);
  if (!nelec) throw ParseError("FCIDUMP header is missing NELEC", 1);
  if (*norb <= 0 || *norb > 64) throw ParseError("FCIDUMP NORB out of supported range", 1);
  const int ms2 = static_cast<int>(detail::namelist_int(header, "MS2").value_or(0));

  IntegralSet ints(static_cast<int>(*norb), static_cast<int>(*nelec), ms2);
  const int n = ints.norb;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string tok[5];
    int count = 0;
    while (count < 5 && fields >> tok[count]) ++count;
    if (count == 0) continue;
    std::string extra;
    if (count != 5 || (fields >> extra))
      throw ParseError("FCIDUMP integral line must have a value and four indices", line_no);
    double value = 0.0;
    if (!detail::parse_double(tok[0], value))
      throw ParseError("malformed FCIDUMP value '" + tok[0] + "'", line_no);
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      if (!detail::parse_int(tok[k + 1], idx[k]))
        throw ParseError("malformed FCIDUMP index '" + tok[k + 1] + "'", line_no);
      if (idx[k] < 0 || idx[k] > n)
        throw ParseError("FCIDUMP index " + tok[k + 1] + " out of range", line_no);
    }
    const auto [i, j, k, l] = idx;
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      ints.core_energy = value;
    } else if (k == 0 && l == 0) {
      if (i == 0 || j == 0) throw ParseError("FCIDUMP one-electron index is zero", line_no);
      ints.set_h(i - 1, j - 1, value);
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0)
        throw ParseError("FCIDUMP two-electron index is zero", line_no);
      ints.set_v(i - 1, j - 1, k - 1, l - 1, value);
    }
  }
  return ints;
}

inline IntegralSet parse_fcidump(const std::string& text) {
  std::istringstream in(text);
  return parse_fcidump(in);
}

/// Error messages are prefixed with the path.
inline IntegralSet parse_fcidump_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open FCIDUMP file " + path);
  try {
    return parse_fcidump(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

/// Deterministic FCIDUMP writer: canonical (i>=j, k>=l, ij>=kl) two-electron
/// entries, then one-electron entries, then the core energy; values with 15
/// significant digits.
inline void write_fcidump(std::ostream& out, const IntegralSet& ints, double threshold = 0.0) {
  const int n = ints.norb;
  out << "&FCI NORB=" << n << ",NELEC=" << ints.n_electrons << ",MS2=" << ints.ms2 << ",\n";
  out << "  ORBSYM=";
  for (int p = 0; p < n; ++p) out << "1,";
  out << "\n  ISYM=1,\n&END\n";
  char buf[64];
  auto emit = [&](double value, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%23.14E", value);
    out << buf << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) {
          if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
          const double v = ints.v(i, j, k, l);
          if (v != 0.0 && std::abs(v) > threshold) emit(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = ints.h(i, j);
      if (v != 0.0 && std::abs(v) > threshold) emit(v, i + 1, j + 1, 0, 0);
    }
  emit(ints.core_energy, 0, 0, 0, 0);
}

inline std::string serialize_fcidump(const IntegralSet& ints) {
  std::ostringstream out;
  write_fcidump(out, ints);
  return out.str();
}

// ---------------------------------------------------------------------------
// Lattice models

/// One-band Hubbard chain of L sites at half filling. The wrap bond is only
/// added for periodic chains with L > 2 (for L = 2 it would coincide with the
/// open bond).
inline IntegralSet hubbard_chain(int sites, double hopping, double repulsion, bool periodic = false) {
  if (sites < 2) throw Error("hubbard_chain needs at least two sites");
  IntegralSet ints(sites, sites, 0);
  for (int i = 0; i + 1 < sites; ++i) ints.set_h(i, i + 1, -hopping);
  if (periodic && sites > 2) ints.set_h(0, sites - 1, ints.h(0, sites - 1) - hopping);
  for (int i = 0; i < sites; ++i) ints.set_v(i, i, i, i, repulsion);
  return ints;
}

// ---------------------------------------------------------------------------
// Spin-orbital expansion, interleaved: spatial p -> spin orbitals 2p (alpha),
// 2p+1 (beta).

inline int spatial_of(int spin_orbital) noexcept { return spin_orbital >> 1; }
inline int spin_of(int spin_orbital) noexcept { return spin_orbital & 1; }

inline Matrix spin_orbital_one_body(const IntegralSet& ints) {
  const int r = ints.spin_orbitals();
  Matrix h = Matrix::Zero(r, r);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      if (spin_of(p) == spin_of(q)) h(p, q) = ints.h(spatial_of(p), spatial_of(q));
  return h;
}

/// Physicist-notation spin-orbital integral <pq|rs> = (pr|qs) with spin
/// conservation on each electron.
inline double spin_orbital_eri(const IntegralSet& ints, int p, int q, int r, int s) {
  if (spin_of(p) != spin_of(r) || spin_of(q) != spin_of(s)) return 0.0;
  return ints.v(spatial_of(p), spatial_of(r), spatial_of(q), spatial_of(s));
}

/// Packed antisymmetrized two-electron operator <pq||rs> for p<q, r<s; its
/// trace against a 2-RDM is the electron-repulsion energy.
inline PackedMatrix two_body_operator(const IntegralSet& ints) {
  const PairBasis basis(ints.spin_orbitals());
  const int r = basis.rank();
  PackedMatrix out(basis);
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q)
      for (int s = 0; s < r; ++s)
        for (int t = s + 1; t < r; ++t)
          out(basis.ordered_index(p, q), basis.ordered_index(s, t)) =
              spin_orbital_eri(ints, p, q, s, t) - spin_orbital_eri(ints, p, q, t, s);
  return out;
}

}  // namespace rdmcone
