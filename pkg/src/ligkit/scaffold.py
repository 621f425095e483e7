"""Bemis-Murcko decomposition and the scaffold-hopping / side-chain / de novo masks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .molio import MolecularGraph

__all__ = [
    "TASKS",
    "NoScaffoldError",
    "Decomposition",
    "MaskAssignment",
    "find_bridges",
    "find_ring_atoms",
    "find_ring_systems",
    "connected_components",
    "decompose",
    "make_mask",
    "sample_mask",
    "small_rings",
]

TASKS = ("SH", "SC", "DN")


class NoScaffoldError(ValueError):
    """A scaffold-dependent task was requested for an acyclic ligand."""


@dataclass(frozen=True)
class Decomposition:
    scaffold_atoms: frozenset[int]
    sidechain_atoms: frozenset[int]
    ring_systems: tuple[frozenset[int], ...]
    linker_atoms: frozenset[int]
    exocyclic_atoms: frozenset[int] = frozenset()
    # heavy atoms of fragments other than the largest one (placed in sidechain_atoms)
    dropped_atoms: frozenset[int] = frozenset()

    @property
    def has_scaffold(self) -> bool:
        return bool(self.scaffold_atoms)

    @property
    def heavy_atoms(self) -> frozenset[int]:
        return self.scaffold_atoms | self.sidechain_atoms


@dataclass(frozen=True)
class MaskAssignment:
    task: str
    target: frozenset[int]
    context: frozenset[int]
    ring_systems: tuple[frozenset[int], ...] = field(default=())

    def context_flags(self, n_atoms: int) -> np.ndarray:
        flags = np.zeros(n_atoms, dtype=bool)
        flags[sorted(self.context)] = True
        return flags

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "target": sorted(self.target),
            "context": sorted(self.context),
            "ring_systems": [sorted(r) for r in self.ring_systems],
        }


def _adjacency(graph: MolecularGraph) -> dict[int, set[int]]:
    return graph.heavy_adjacency()


def connected_components(adj: dict[int, set[int]], nodes: Iterable[int] | None = None) -> list[set[int]]:
    """Components of ``adj`` restricted to ``nodes``, ordered by smallest member."""
    allowed = set(adj) if nodes is None else set(nodes)
    seen: set[int] = set()
    comps = []
    for start in sorted(allowed):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in allowed and w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def find_bridges(adj: dict[int, set[int]]) -> set[tuple[int, int]]:
    """Bridge edges ``(i, j)`` with ``i < j`` (iterative Tarjan low-link)."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges = set()
    counter = 0
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        stack = [(root, -1, iter(sorted(adj[root])))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w in disc:
                    low[v] = min(low[v], disc[w])
                else:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, v, iter(sorted(adj[w]))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if parent >= 0:
                    low[parent] = min(low[parent], low[v])
                    if low[v] > disc[parent]:
                        bridges.add((min(v, parent), max(v, parent)))
    return bridges


def find_ring_atoms(adj: dict[int, set[int]]) -> set[int]:
    bridges = find_bridges(adj)
    ring = set()
    for i, nbrs in adj.items():
        for j in nbrs:
            if (min(i, j), max(i, j)) not in bridges:
                ring.add(i)
                break
    return ring


def find_ring_systems(graph: MolecularGraph) -> list[frozenset[int]]:
    """Maximal connected sets of ring atoms (heavy atoms on at least one cycle).

    Fused and spiro rings share atoms and therefore fall into one system;
    rings joined only by a single bond stay separate.
    """
    adj = _adjacency(graph)
    return [frozenset(c) for c in connected_components(_ring_bond_adjacency(adj))]


def _ring_bond_adjacency(adj: dict[int, set[int]]) -> dict[int, set[int]]:
    """Adjacency over ring atoms using only non-bridge bonds.

    A bridge between two ring atoms (the biphenyl bond) does not join their
    ring systems.
    """
    bridges = find_bridges(adj)
    ring_adj: dict[int, set[int]] = {}
    for i, nbrs in adj.items():
        for j in nbrs:
            if (min(i, j), max(i, j)) not in bridges:
                ring_adj.setdefault(i, set()).add(j)
    return ring_adj


def decompose(graph: MolecularGraph) -> Decomposition:
    """Split heavy atoms into the Murcko scaffold and side chains.

    Side chains are pruned leaf by leaf until only ring atoms, linker atoms
    and atoms double-bonded to them remain. Acyclic molecules give an empty
    scaffold. For disconnected inputs only the largest fragment is decomposed.
    """
    adj = _adjacency(graph)
    heavy = set(adj)
    frags = connected_components(adj)
    if not frags:
        return Decomposition(frozenset(), frozenset(), (), frozenset())
    main = max(frags, key=lambda c: (len(c), -min(c)))
    dropped = heavy - main
    adj = {i: adj[i] & main for i in main}

    ring_adj = _ring_bond_adjacency(adj)
    ring = set(ring_adj)
    systems = tuple(frozenset(c) for c in connected_components(ring_adj))
    if not ring:
        return Decomposition(frozenset(), frozenset(heavy), (), frozenset(), dropped_atoms=frozenset(dropped))

    core = _prune_leaves(adj, ring)
    linker = core - ring
    orders = {}
    for i, j, o in graph.bonds:
        orders[(i, j)] = orders[(j, i)] = o
    exocyclic = {
        v for v in main - core
        if any(orders.get((v, w)) == 2 for w in adj[v] if w in core)
    }
    scaffold = frozenset(core | exocyclic)
    return Decomposition(
        scaffold_atoms=scaffold,
        sidechain_atoms=frozenset(heavy - scaffold),
        ring_systems=systems,
        linker_atoms=frozenset(linker),
        exocyclic_atoms=frozenset(exocyclic),
        dropped_atoms=frozenset(dropped),
    )


def _prune_leaves(adj: dict[int, set[int]], protected: set[int]) -> set[int]:
    """Repeatedly delete unprotected atoms of degree <= 1; return the survivors."""
    remaining = set(adj)
    degree = {i: len(adj[i]) for i in adj}
    queue = [i for i in adj if degree[i] <= 1 and i not in protected]
    while queue:
        v = queue.pop()
        if v not in remaining:
            continue
        remaining.discard(v)
        for w in adj[v]:
            if w in remaining:
                degree[w] -= 1
                if degree[w] <= 1 and w not in protected:
                    queue.append(w)
    return remaining


def make_mask(decomp: Decomposition, task: str) -> MaskAssignment:
    """Target/context split for one task.

    SH regenerates the scaffold given side chains, SC regenerates side chains
    given the scaffold, DN regenerates everything.
    """
    task = task.upper()
    heavy = decomp.heavy_atoms
    if task == "DN":
        return MaskAssignment("DN", frozenset(heavy), frozenset(), decomp.ring_systems)
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if not decomp.has_scaffold:
        raise NoScaffoldError(f"task {task} needs a scaffold; molecule is acyclic")
    if task == "SH":
        return MaskAssignment("SH", decomp.scaffold_atoms, decomp.sidechain_atoms, decomp.ring_systems)
    return MaskAssignment("SC", decomp.sidechain_atoms, decomp.scaffold_atoms, decomp.ring_systems)


def sample_mask(
    decomp: Decomposition,
    rng: np.random.Generator | int | None = None,
    tasks: Sequence[str] = TASKS,
) -> MaskAssignment:
    """Pick one applicable task uniformly at random and return its mask."""
    rng = np.random.default_rng(rng)
    valid = [t for t in tasks if t == "DN" or decomp.has_scaffold]
    if not valid:
        raise NoScaffoldError("no applicable task for an acyclic molecule")
    return make_mask(decomp, valid[int(rng.integers(len(valid)))])


def small_rings(graph: MolecularGraph, max_size: int = 6) -> list[tuple[int, ...]]:
    """All simple cycles of at most ``max_size`` heavy atoms, as ordered atom tuples.

    Each cycle is reported once, starting at its smallest index.
    """
    adj = _adjacency(graph)
    ring = find_ring_atoms(adj)
    found: dict[frozenset, tuple[int, ...]] = {}
    for start in sorted(ring):
        stack = [(start, (start,))]
        while stack:
            v, path = stack.pop()
            for w in adj[v]:
                if w not in ring or w < start:
                    continue
                if w == start and len(path) >= 3:
                    key = frozenset(path)
                    if key not in found:
                        found[key] = path
                elif w not in path and len(path) < max_size:
                    stack.append((w, path + (w,)))
    return sorted(found.values(), key=lambda p: (len(p), sorted(p)))
