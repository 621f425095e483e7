import numpy as np
import pytest

from ligkit.scaffold import (
    NoScaffoldError,
    decompose,
    find_ring_systems,
    make_mask,
    sample_mask,
    small_rings,
)

from conftest import make_ligand


def chain_graph(n_atoms, bonds, elements=None):
    """Ligand with the given topology; coordinates are irrelevant here."""
    elements = elements or ["C"] * n_atoms
    xyz = np.arange(n_atoms * 3, dtype=float).reshape(-1, 3)
    return make_ligand(elements, xyz, bonds)


def ring(start, size, order=1):
    return [(start + k, start + (k + 1) % size, order) for k in range(size)]


BENZENE = chain_graph(6, ring(0, 6))
TOLUENE = chain_graph(7, ring(0, 6) + [(0, 6, 1)])
BIPHENYL = chain_graph(12, ring(0, 6) + [(6 + k, 6 + (k + 1) % 6, 1) for k in range(6)] + [(0, 6, 1)])
NAPHTHALENE = chain_graph(10, ring(0, 6) + [(5, 6, 1), (6, 7, 1), (7, 8, 1), (8, 9, 1), (9, 0, 1)])
DIPHENYLETHANE = chain_graph(
    14, ring(0, 6) + [(7 + k, 7 + (k + 1) % 6, 1) for k in range(6)] + [(0, 6, 1), (6, 13, 1), (13, 7, 1)]
)


def brute_force_ring_systems(graph):
    """Ring bonds via edge removal: a bond is on a cycle iff its ends stay connected
    without it. Ring systems are the components over ring bonds."""
    adj = graph.heavy_adjacency()

    def connected(a, b, skip):
        seen, stack = {a}, [a]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if {v, w} == skip or w in seen:
                    continue
                seen.add(w)
                stack.append(w)
        return b in seen

    ring_atoms = set()
    for i, j, _ in graph.bonds:
        if connected(i, j, {i, j}):
            ring_atoms |= {i, j}
    systems, left = [], set(ring_atoms)
    while left:
        start = min(left)
        comp, stack = {start}, [start]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w in ring_atoms and w not in comp and connected(v, w, {v, w}):
                    comp.add(w)
                    stack.append(w)
        systems.append(frozenset(comp))
        left -= comp
    return sorted(systems, key=min)


class TestRingSystems:
    def test_benzene(self):
        assert find_ring_systems(BENZENE) == [frozenset(range(6))]

    @pytest.mark.parametrize("graph,sizes", [(BIPHENYL, [6, 6]), (NAPHTHALENE, [10])])
    def test_against_edge_removal(self, graph, sizes):
        systems = find_ring_systems(graph)
        assert sorted(map(len, systems)) == sizes
        assert sorted(systems, key=min) == brute_force_ring_systems(graph)

    def test_corpus_against_edge_removal(self, corpus):
        for g in corpus:
            assert sorted(find_ring_systems(g), key=min) == brute_force_ring_systems(g), g.name

    def test_small_rings_naphthalene(self):
        rings = small_rings(NAPHTHALENE)
        assert sorted(map(len, rings)) == [6, 6]


class TestDecompose:
    def test_benzene(self):
        d = decompose(BENZENE)
        assert d.scaffold_atoms == frozenset(range(6)) and not d.sidechain_atoms

    def test_toluene(self):
        d = decompose(TOLUENE)
        assert d.scaffold_atoms == frozenset(range(6))
        assert d.sidechain_atoms == {6}

    def test_diphenylethane(self):
        d = decompose(DIPHENYLETHANE)
        assert len(d.scaffold_atoms) == 14 and not d.sidechain_atoms
        assert d.linker_atoms == {6, 13}

    def test_exocyclic_double_bond_kept(self):
        # cyclohexanone: carbonyl O stays; methyl ketone side chain goes
        g = chain_graph(7, ring(0, 6) + [(0, 6, 2)], ["C"] * 6 + ["O"])
        assert decompose(g).scaffold_atoms == frozenset(range(7))
        g = chain_graph(9, ring(0, 6) + [(0, 6, 1), (6, 7, 2), (6, 8, 1)], ["C"] * 7 + ["O", "C"])
        assert decompose(g).scaffold_atoms == frozenset(range(6))

    def test_acyclic(self):
        g = chain_graph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
        d = decompose(g)
        assert not d.has_scaffold and d.sidechain_atoms == frozenset(range(4))

    def test_disconnected_keeps_largest(self):
        g = chain_graph(8, ring(0, 6) + [(6, 7, 1)])
        d = decompose(g)
        assert d.scaffold_atoms == frozenset(range(6))
        assert d.dropped_atoms == {6, 7}
        assert d.heavy_atoms == frozenset(range(8))

    def test_hydrogens_excluded(self):
        g = make_ligand(["C"] * 6 + ["H"], np.zeros((7, 3)), ring(0, 6) + [(0, 6, 1)])
        d = decompose(g)
        assert d.heavy_atoms == frozenset(range(6))

    def test_idempotent_on_corpus(self, corpus):
        for g in corpus:
            d = decompose(g)
            if not d.has_scaffold:
                continue
            sub = g.subgraph(sorted(d.scaffold_atoms))
            assert decompose(sub).scaffold_atoms == frozenset(range(len(d.scaffold_atoms))), g.name

    def test_ring_atoms_never_pruned(self, corpus):
        for g in corpus:
            d = decompose(g)
            for system in d.ring_systems:
                assert system <= d.scaffold_atoms
            assert d.linker_atoms <= d.scaffold_atoms
            assert d.scaffold_atoms | d.sidechain_atoms == set(g.heavy_indices)
            assert not d.scaffold_atoms & d.sidechain_atoms


class TestMasks:
    def test_toluene_sh(self):
        m = make_mask(decompose(TOLUENE), "SH")
        assert m.target == frozenset(range(6)) and m.context == {6}

    def test_toluene_sc(self):
        m = make_mask(decompose(TOLUENE), "SC")
        assert m.target == {6} and m.context == frozenset(range(6))

    def test_toluene_dn(self):
        m = make_mask(decompose(TOLUENE), "DN")
        assert m.target == frozenset(range(7)) and m.context == frozenset()

    def test_acyclic_rejects_sh_sc(self):
        d = decompose(chain_graph(3, [(0, 1, 1), (1, 2, 1)]))
        for task in ("SH", "SC"):
            with pytest.raises(NoScaffoldError):
                make_mask(d, task)
        assert make_mask(d, "DN").target == {0, 1, 2}

    def test_unknown_task(self):
        with pytest.raises(ValueError):
            make_mask(decompose(BENZENE), "XX")

    def test_context_flags_applied(self):
        m = make_mask(decompose(TOLUENE), "SH")
        g = TOLUENE.with_context(m.context)
        assert [a.context_flag for a in g.atoms] == [False] * 6 + [True]
        assert m.context_flags(7).tolist() == [False] * 6 + [True]

    def test_partition_law_corpus(self, corpus):
        for g in corpus:
            d = decompose(g)
            heavy = set(g.heavy_indices)
            for task in ("SH", "SC", "DN"):
                if task != "DN" and not d.has_scaffold:
                    continue
                m = make_mask(d, task)
                assert m.target | m.context == heavy
                assert not m.target & m.context
                if task == "DN":
                    assert not m.context

    def test_ring_systems_never_split(self, corpus):
        for g in corpus:
            d = decompose(g)
            if not d.has_scaffold:
                continue
            for task in ("SH", "SC"):
                m = make_mask(d, task)
                for system in m.ring_systems:
                    assert system <= m.target or system <= m.context

    def test_sample_mask_seeded(self):
        d = decompose(TOLUENE)
        a = [sample_mask(d, np.random.default_rng(5)).task for _ in range(3)]
        b = [sample_mask(d, np.random.default_rng(5)).task for _ in range(3)]
        assert a == b
        tasks = {sample_mask(d, s).task for s in range(50)}
        assert tasks == {"SH", "SC", "DN"}

    def test_sample_mask_acyclic_only_dn(self):
        d = decompose(chain_graph(2, [(0, 1, 1)]))
        assert {sample_mask(d, s).task for s in range(20)} == {"DN"}
