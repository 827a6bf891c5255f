#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdmcone/error.hpp"
#include "rdmcone/pair_space.hpp"

namespace rdmcone {

/// Atomic-orbital data behind population and dipole analyses.
struct OrbitalData {
  /// n_ao x n_mo
  Matrix mo_coefficients;
  Matrix ao_overlap;
  std::vector<int> ao_to_atom;
  std::vector<std::string> atom_labels;
  std::vector<double> nuclear_charges;
  /// n_atom x 3, bohr
  Matrix nuclear_coordinates;
  /// <mu| r_x |nu>, <mu| r_y |nu>, <mu| r_z |nu> about the origin
  std::optional<std::array<Matrix, 3>> dipole_integrals;

  int n_ao() const { return static_cast<int>(mo_coefficients.rows()); }
  int n_mo() const { return static_cast<int>(mo_coefficients.cols()); }
  int n_atoms() const { return static_cast<int>(nuclear_charges.size()); }

  /// Throws unless dimensions agree and C^T S C = I to `tol`.
  void validate(double tol = 1e-8) const {
    const int na = n_ao();
    if (ao_overlap.rows() != na || ao_overlap.cols() != na)
      throw Error("overlap matrix does not match the AO count");
    if (!ao_to_atom.empty() && static_cast<int>(ao_to_atom.size()) != na)
      throw Error("AO-to-atom map does not cover every AO");
    for (int a : ao_to_atom)
      if (a < 0 || a >= n_atoms()) throw Error("AO-to-atom map names a missing atom");
    if (nuclear_coordinates.rows() != n_atoms() || nuclear_coordinates.cols() != 3)
      throw Error("nuclear coordinates must be n_atom x 3");
    if (dipole_integrals)
      for (const Matrix& d : *dipole_integrals)
        if (d.rows() != na || d.cols() != na) throw Error("dipole integrals do not match the AO count");
    const Matrix ortho = mo_coefficients.transpose() * ao_overlap * mo_coefficients;
    const double err = (ortho - Matrix::Identity(n_mo(), n_mo())).cwiseAbs().maxCoeff();
    if (err > tol) throw Error("MO coefficients are not orthonormal under the overlap");
  }
};

/// Reads the "ORBDATA 1" text format:
///
///   ORBDATA 1
///   NAO <n> NMO <m> NATOM <a>
///   ATOMS            (a lines: label Z x y z)
///   AO_ATOM          (n atom indices, 0-based)
///   OVERLAP          (n rows of n values)
///   MO_COEFF         (n rows of m values)
///   DIPOLE_X/Y/Z     (optional, n rows of n values each)
///   END
inline OrbitalData parse_orbdata(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto expect = [&](const char* what) {
    if (!next()) throw ParseError(std::string("ORBDATA ended before ") + what, line_no);
  };

  expect("the header");
  {
    std::istringstream h(line);
    std::string tag;
    int version = 0;
    if (!(h >> tag >> version) || tag != "ORBDATA")
      throw ParseError("missing 'ORBDATA 1' header", line_no);
    if (version != 1) throw ParseError("unsupported ORBDATA version " + std::to_string(version), line_no);
  }
  expect("the dimensions line");
  int nao = -1, nmo = -1, natom = -1;
  {
    std::istringstream d(line);
    std::string key;
    int value = 0;
    while (d >> key >> value) {
      if (key == "NAO") nao = value;
      else if (key == "NMO") nmo = value;
      else if (key == "NATOM") natom = value;
      else throw ParseError("unknown ORBDATA dimension '" + key + "'", line_no);
    }
    if (nao <= 0 || nmo <= 0 || natom <= 0 || nmo > nao)
      throw ParseError("ORBDATA dimensions must satisfy 0 < NMO <= NAO and NATOM > 0", line_no);
  }

  auto read_row = [&](int cols, const char* what) {
    expect(what);
    std::istringstream row(line);
    std::vector<double> v;
    std::string tok;
    while (row >> tok) {
      double x = 0.0;
      std::size_t used = 0;
      try {
        x = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError(std::string("malformed number in ") + what, line_no);
      v.push_back(x);
    }
    if (static_cast<int>(v.size()) != cols)
      throw ParseError(std::string(what) + " row has " + std::to_string(v.size()) +
                           " values, expected " + std::to_string(cols),
                       line_no);
    return v;
  };
  auto read_matrix = [&](int rows, int cols, const char* what) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const auto v = read_row(cols, what);
      for (int j = 0; j < cols; ++j) m(i, j) = v[j];
    }
    return m;
  };

  OrbitalData out;
  bool have_atoms = false, have_map = false, have_s = false, have_c = false;
  std::array<std::optional<Matrix>, 3> dip;
  while (true) {
    expect("END");
    std::istringstream s(line);
    std::string section;
    s >> section;
    if (section == "END") break;
    if (section == "ATOMS") {
      out.nuclear_coordinates.resize(natom, 3);
      for (int a = 0; a < natom; ++a) {
        expect("the atom list");
        std::istringstream row(line);
        std::string label;
        double z = 0, x = 0, y = 0, w = 0;
        if (!(row >> label >> z >> x >> y >> w)) throw ParseError("atom line needs label Z x y z", line_no);
        out.atom_labels.push_back(label);
        out.nuclear_charges.push_back(z);
        out.nuclear_coordinates.row(a) << x, y, w;
      }
      have_atoms = true;
    } else if (section == "AO_ATOM") {
      const auto v = read_row(nao, "AO_ATOM");
      for (double a : v) {
        if (a != std::floor(a) || a < 0 || a >= natom)
          throw ParseError("AO_ATOM entry out of range", line_no);
        out.ao_to_atom.push_back(static_cast<int>(a));
      }
      have_map = true;
    } else if (section == "OVERLAP") {
      out.ao_overlap = read_matrix(nao, nao, "OVERLAP");
      have_s = true;
    } else if (section == "MO_COEFF") {
      out.mo_coefficients = read_matrix(nao, nmo, "MO_COEFF");
      have_c = true;
    } else if (section == "DIPOLE_X" || section == "DIPOLE_Y" || section == "DIPOLE_Z") {
      dip[section.back() - 'X'] = read_matrix(nao, nao, section.c_str());
    } else {
      throw ParseError("unknown ORBDATA section '" + section + "'", line_no);
    }
  }
  if (!have_atoms || !have_s || !have_c)
    throw ParseError("ORBDATA needs ATOMS, OVERLAP and MO_COEFF sections", line_no);
  if (!have_map) throw ParseError("ORBDATA is missing the AO_ATOM map", line_no);
  if (dip[0] || dip[1] || dip[2]) {
    if (!(dip[0] && dip[1] && dip[2])) throw ParseError("ORBDATA needs all three dipole components", line_no);
    out.dipole_integrals = std::array<Matrix, 3>{*dip[0], *dip[1], *dip[2]};
  }
  return out;
}

inline OrbitalData parse_orbdata(const std::string& text) {
  std::istringstream in(text);
  return parse_orbdata(in);
}

inline OrbitalData parse_orbdata_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ORBDATA file " + path);
  try {
    return parse_orbdata(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

}  // namespace rdmcone
