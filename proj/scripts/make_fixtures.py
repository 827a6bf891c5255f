"""Regenerates the bundled FCIDUMP / ORBDATA fixtures (requires pyscf)."""
import os
import numpy as np
from pyscf import gto, scf, fci
from pyscf.tools import fcidump

HERE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def write_orbdata(path, mol, mf):
    s = mol.intor("int1e_ovlp")
    c = mf.mo_coeff
    labels = [mol.atom_symbol(i) for i in range(mol.natm)]
    ao_atom = [int(x[0]) for x in mol.ao_labels(fmt=False)]
    with mol.with_common_orig((0.0, 0.0, 0.0)):
        dip = mol.intor("int1e_r", comp=3)
    with open(path, "w") as f:
        f.write("ORBDATA 1\n")
        f.write(f"NAO {mol.nao} NMO {c.shape[1]} NATOM {mol.natm}\n")
        f.write("ATOMS\n")
        for i in range(mol.natm):
            x, y, z = mol.atom_coord(i)
            f.write(f"{labels[i]} {mol.atom_charge(i):.1f} {x:.15e} {y:.15e} {z:.15e}\n")
        f.write("AO_ATOM\n" + " ".join(str(a) for a in ao_atom) + "\n")
        for name, m in [("OVERLAP", s), ("MO_COEFF", c)]:
            f.write(name + "\n")
            for row in m:
                f.write(" ".join(f"{v:.15e}" for v in row) + "\n")
        for k, axis in enumerate("XYZ"):
            f.write(f"DIPOLE_{axis}\n")
            for row in dip[k]:
                f.write(" ".join(f"{v:.15e}" for v in row) + "\n")
        f.write("END\n")


def run(name, atoms):
    mol = gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    fcidump.from_scf(mf, os.path.join(HERE, name + ".fcidump"), tol=1e-14)
    write_orbdata(os.path.join(HERE, name + ".orbdata"), mol, mf)
    e_fci = fci.FCI(mf).kernel()[0]
    print(f"{name}: E_HF={mf.e_tot:.10f} E_FCI={e_fci:.10f}")


run("h2_sto3g", "H 0 0 0; H 0 0 0.74")
for r in [0.8, 1.0, 1.2, 1.6, 2.0, 2.4]:
    atoms = "; ".join(f"H 0 0 {i * r:.4f}" for i in range(4))
    run(f"h4_sto3g_r{r:.1f}", atoms)
