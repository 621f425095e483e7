"""
Scaffolds and generation masks
==============================

Split drug molecules into a Murcko scaffold and side chains, then build
the three masks: scaffold hopping (SH), side-chain decoration (SC) and
de novo (DN).
"""

from pathlib import Path

import numpy as np

from ligkit import decompose, iter_ligands, make_mask, sample_mask

data = Path(__file__).resolve().parent.parent / "tests" / "data"
corpus = list(iter_ligands((data / "drug_corpus.sdf").read_bytes()))

for mol in corpus[:6]:
    d = decompose(mol)
    print(f"{mol.name:<14s} heavy {len(d.heavy_atoms):3d}  scaffold {len(d.scaffold_atoms):3d}  "
          f"ring systems {len(d.ring_systems)}  linker {len(d.linker_atoms)}")

# ibuprofen: one ring, everything else is side chain
ibu = next(m for m in corpus if m.name == "ibuprofen")
d = decompose(ibu)
for task in ("SH", "SC", "DN"):
    m = make_mask(d, task)
    print(task, "target", sorted(m.target), "context", sorted(m.context))

# a seeded draw picks among the tasks the molecule supports
rng = np.random.default_rng(0)
print([sample_mask(d, rng).task for _ in range(10)])

# acyclic molecules only admit DN
acyclic = [m.name for m in corpus if not decompose(m).has_scaffold]
print("no scaffold:", acyclic)
