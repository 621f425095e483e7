"""
Scoring and refining a docked ligand
====================================

Score aspirin next to a five-residue peptide, then let the rigid-body
refiner move it. The refined pose is only kept if it scores no worse
than where it started.
"""

from pathlib import Path

import numpy as np

from ligkit import evaluate, lbfgs_refine, parse_ligand, parse_receptor, write_ligand

data = Path(__file__).resolve().parent.parent / "tests" / "data"
pocket = parse_receptor((data / "peptide5.pdb").read_bytes())
ligand = parse_ligand((data / "complex_ligand.sdf").read_bytes())
print(f"{len(pocket)} receptor atoms, {len(ligand.atoms)} ligand atoms")

# the starting placement overlaps the peptide, so repulsion dominates
before = evaluate(pocket, ligand)
for name, value in zip(("gauss1", "gauss2", "repulsion", "hydrophobic", "hbond"), before.terms):
    print(f"  {name:<12s} {value:10.4f}")
print(f"total {before.total:.4f} over {before.pair_count} pairs")

result = lbfgs_refine(pocket, ligand, T_max=100)
print(f"E_init {result.e_init:.4f} -> E_opt {result.e_opt:.4f} (accepted: {result.accepted})")

# best-so-far energy every 10 iterations
for it in range(0, len(result.energy_trace), 10):
    print(f"  iter {it:3d}  best {result.energy_trace[it]:.4f}")

moved = ligand.with_coords(result.pose.apply(ligand.coords))
shift = np.linalg.norm(moved.coords.mean(axis=0) - ligand.coords.mean(axis=0))
angle = np.degrees(np.arccos(np.clip((np.trace(result.pose.R) - 1) / 2, -1, 1)))
print(f"centroid moved {shift:.2f} A, rotated {angle:.1f} deg")

# the refined pose with its energies as SDF data fields
sdf = write_ligand(ligand, result.pose, {"E_init": result.e_init, "E_opt": result.e_opt})
print("\n".join(sdf.splitlines()[-7:]))
