#pragma once

#include "rdmcone/dual_solver.hpp"
#include "rdmcone/fci.hpp"
#include "rdmcone/integrals.hpp"
#include "rdmcone/nrep_maps.hpp"
#include "rdmcone/orbdata.hpp"
#include "rdmcone/pair_space.hpp"
#include "rdmcone/primal_solver.hpp"
#include "rdmcone/properties.hpp"
#include "rdmcone/reduced_hamiltonian.hpp"
#include "rdmcone/solve_report.hpp"
