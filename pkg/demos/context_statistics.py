"""
Context statistics and information density
==========================================

Summarize the pocket contacts of the atoms a task keeps fixed as
Z = (n_bar, d_bar, t_bar, k_bar), then estimate the entropy of Z over a
set of complexes.
"""

from pathlib import Path

import numpy as np

from ligkit import (
    RigidPose,
    classify_interactions,
    decompose,
    information_density,
    make_mask,
    parse_ligand,
    parse_receptor,
    summarize,
)

data = Path(__file__).resolve().parent.parent / "tests" / "data"
pocket = parse_receptor((data / "peptide5.pdb").read_bytes())
ligand = parse_ligand((data / "complex_ligand.sdf").read_bytes())

records = classify_interactions(pocket, ligand)
print(f"{len(records)} interaction records")
for r in records[:8]:
    res = pocket.atoms[r.pocket_atom].residue
    print(f"  {r.category:<14s} ligand {r.ligand_atom:2d}  {res.name}{res.seq} {pocket.atoms[r.pocket_atom].name:<4s} {r.distance:.2f} A")

d = decompose(ligand)
for task in ("SH", "SC", "DN"):
    s = summarize(pocket, ligand, make_mask(d, task), records=records)
    print(f"{task}: context {s.context_size:2d}  Z = ({s.n_bar:.2f}, {s.d_bar:.2f}, {s.t_bar:.2f}, {s.k_bar:.2f})")

# an ensemble: jitter the ligand placement and collect DN summaries
rng = np.random.default_rng(1)
center = ligand.coords.mean(axis=0)
for spread in (0.5, 1.5, 3.0):
    summaries = []
    for _ in range(120):
        pose = RigidPose.from_vector(np.r_[rng.normal(scale=spread, size=3), rng.normal(scale=0.3, size=3)], center)
        moved = ligand.with_coords(pose.apply(ligand.coords))
        summaries.append(summarize(pocket, moved, make_mask(decompose(moved), "DN")))
    est = information_density(summaries)
    print(f"spread {spread:.1f} A: rho = {est.rho:.3f} nats/dim from {est.n} complexes")
