"""Acceptance suite: one test per criterion, reported in the terminal summary."""

import math
import time

import numpy as np
import pytest

from ligkit.diffsched import (
    coordinate_log_density,
    make_schedule,
    noise_coordinates,
    noise_types,
    score_targets,
)
from ligkit.energy import ScoringContext, evaluate, evaluate_bruteforce
from ligkit.geometry import RigidPose, rodrigues
from ligkit.ibstats import ContextSummary, build_virtual_edges, information_density, kl_entropy
from ligkit.molio import parse_ligand, write_ligand
from ligkit.refine import fd_gradient, lbfgs_minimize, lbfgs_refine
from ligkit.scaffold import decompose, make_mask

from conftest import DATA, make_ligand, make_pocket, random_complex


@pytest.mark.criterion(1, "never-worse refinement over 200 randomized fixtures, < 60 s")
def test_never_worse():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worse = []
    for k in range(200):
        n_pocket = int(rng.integers(10, 120))
        n_ligand = int(rng.integers(1, 30))
        spread = float(rng.uniform(2.5, 9.0))
        pocket, ligand = random_complex(rng, n_pocket, n_ligand, spread)
        # random offset so some ligands start in heavy clash and some barely touch
        ligand = ligand.with_coords(ligand.coords + rng.normal(scale=2.0, size=3))
        res = lbfgs_refine(pocket, ligand, T_max=100)
        # independent re-score of the returned coordinates in the input frame
        e_out = evaluate(pocket, ligand.with_coords(res.pose.apply(ligand.coords))).total
        # re-scoring in another frame only differs by rounding, far below any real change
        if e_out > res.e_init + 1e-12 * max(1.0, abs(res.e_init)):
            worse.append((k, res.e_init, e_out))
    elapsed = time.perf_counter() - start
    assert not worse, worse[:5]
    assert elapsed < 60, elapsed


def _quadratic_case(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    A = Q @ np.diag(np.geomspace(0.5, 5.0, 6)) @ Q.T
    u_star = rng.normal(scale=0.5, size=6)
    return A, u_star


@pytest.mark.criterion(2, "quadratic minimizer (central differences) and one-atom grid minimum reached, < 10 s")
def test_refinement_effectiveness():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(5):
        A, u_star = _quadratic_case(rng)
        res = lbfgs_minimize(lambda u: float((u - u_star) @ A @ (u - u_star)), np.zeros(6),
                             max_iter=100, central=True)
        assert np.linalg.norm(res.u_best - u_star) < 1e-4

    pocket = make_pocket(["C"], [[0, 0, 0]], names=["CB"], resnames=["ALA"])
    ligand = make_ligand(["C"], [[2.8, 0, 0]])
    ctx = ScoringContext(pocket, ligand)
    grid = min(ctx.total(np.array([[r, 0.0, 0.0]])) for r in np.arange(0.5, 8.0, 0.01))
    res = lbfgs_refine(pocket, ligand, T_max=100)
    assert abs(res.e_opt - grid) < 1e-3
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(3, "300-atom pocket / 40-atom ligand refines 100 iterations in < 1 s")
def test_refinement_wall_time():
    rng = np.random.default_rng(3)
    pocket, ligand = random_complex(rng, 300, 40, spread=9.0)
    lbfgs_refine(pocket, ligand, T_max=2)  # warm caches and imports
    start = time.perf_counter()
    res = lbfgs_refine(pocket, ligand, T_max=100)
    elapsed = time.perf_counter() - start
    assert res.iterations_used == 100 and res.error is None
    assert elapsed < 1.0, elapsed


def _smooth_pose_energy(rng):
    """Ligand atoms moved by a pose, attracted to fixed Gaussian sites."""
    X = rng.normal(scale=1.5, size=(8, 3))
    sites = rng.normal(scale=3.0, size=(12, 3))
    depth = rng.uniform(0.5, 2.0, size=12)
    center = X.mean(axis=0)

    def energy(u):
        pose = RigidPose.from_vector(u, center)
        Y = pose.apply(X)
        d2 = np.sum((Y[:, None, :] - sites[None]) ** 2, axis=-1)
        return float(-np.sum(depth * np.exp(-d2 / 4.0)))

    return energy


@pytest.mark.criterion(4, "forward differences at 1e-3 agree with central differences at 1e-5 within 1%")
def test_gradient_fidelity():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        energy = _smooth_pose_energy(rng)
        u = np.concatenate([rng.normal(scale=1.0, size=3), rng.normal(scale=0.5, size=3)])
        fwd = fd_gradient(energy, u, eps=1e-3)
        ref = fd_gradient(energy, u, eps=1e-5, central=True)
        # relative to the gradient scale, so a vanishing component is not divided by ~0
        worst = max(worst, float(np.max(np.abs(fwd - ref)) / np.max(np.abs(ref))))
    assert worst < 1e-2, worst


@pytest.mark.criterion(5, "cell-list energy equals brute force and is SE(3) invariant to 1e-9 on 50 complexes")
def test_energy_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        pocket, ligand = random_complex(rng, int(rng.integers(20, 200)), int(rng.integers(3, 40)),
                                        spread=float(rng.uniform(3, 12)))
        fast, slow = evaluate(pocket, ligand), evaluate_bruteforce(pocket, ligand)
        assert fast.pair_count == slow.pair_count
        np.testing.assert_allclose(fast.terms, slow.terms, rtol=1e-9, atol=1e-12)
        assert fast.total == pytest.approx(slow.total, rel=1e-9, abs=1e-12)
        R, t = rodrigues(rng.normal(size=3) * 2), rng.normal(scale=20, size=3)
        moved = evaluate(pocket.with_coords(pocket.coords @ R.T + t), ligand.with_coords(ligand.coords @ R.T + t))
        assert moved.pair_count == fast.pair_count
        assert moved.total == pytest.approx(fast.total, rel=1e-9, abs=1e-12)


@pytest.mark.criterion(6, "Murcko scaffolds match RDKit on the 59-molecule drug corpus (>= 98%)")
def test_scaffold_oracle(corpus):
    Chem = pytest.importorskip("rdkit.Chem")
    from rdkit.Chem.Scaffolds import MurckoScaffold

    reference = Chem.SDMolSupplier(str(DATA / "drug_corpus.sdf"), removeHs=False)
    agree, disagreements = 0, []
    for ours, mol in zip(corpus, reference):
        for atom in mol.GetAtoms():
            atom.SetIntProp("orig", atom.GetIdx())
        scaffold = MurckoScaffold.GetScaffoldForMol(mol)
        expected = {a.GetIntProp("orig") for a in scaffold.GetAtoms() if a.GetAtomicNum() > 1}
        got = set(decompose(ours).scaffold_atoms)
        if got == expected:
            agree += 1
        else:
            disagreements.append(ours.name)
    assert len(corpus) >= 50
    assert agree / len(corpus) >= 0.98, disagreements


@pytest.mark.criterion(7, "mask partition law holds for every corpus molecule and task")
def test_mask_partition(corpus):
    violations = []
    for g in corpus:
        d = decompose(g)
        heavy = set(g.heavy_indices)
        for task in ("SH", "SC", "DN"):
            if task != "DN" and not d.has_scaffold:
                continue  # no scaffold: only DN is defined
            m = make_mask(d, task)
            if m.target | m.context != heavy or m.target & m.context or (task == "DN" and m.context):
                violations.append((g.name, task))
    assert not violations


@pytest.mark.criterion(8, "virtual edges are strict at 6 A and equal brute force on 50 random clouds")
def test_virtual_edges():
    pocket = make_pocket(["C"], [[0, 0, 0]])
    assert len(build_virtual_edges(pocket, make_ligand(["C"], [[5.999, 0, 0]]))) == 1
    assert len(build_virtual_edges(pocket, make_ligand(["C"], [[6.000, 0, 0]]))) == 0
    rng = np.random.default_rng(8)
    for _ in range(50):
        P, L = rng.uniform(-10, 10, size=(50, 3)), rng.uniform(-7, 7, size=(20, 3))
        got = {(p, q) for p, q, _ in build_virtual_edges(make_pocket(["C"] * 50, P), make_ligand(["C"] * 20, L)).edges}
        expected = {(i, j) for i in range(50) for j in range(20) if math.dist(P[i], L[j]) < 6.0}
        assert got == expected


@pytest.mark.criterion(9, "diffusion channels: uniform endpoint, Monte Carlo moments, analytic score")
def test_diffusion_channels():
    _, p = noise_types(np.eye(8)[3], 0, alpha_bar=0.0)
    assert np.max(np.abs(p - 1 / 8)) < 1e-12

    s = make_schedule(1000, "sigmoid")
    n = 100_000
    t = 600
    ab = s.alpha_bar_at(t)
    x0 = np.array([[0.8, -1.1, 2.0]])
    xt, _ = noise_coordinates(np.repeat(x0, n, axis=0), t, s, seed=0)
    var = 1 - ab
    assert np.all(np.abs(xt.mean(axis=0) - math.sqrt(ab) * x0[0]) < 3 * math.sqrt(var / n))
    assert np.all(np.abs(xt.var(axis=0, ddof=1) - var) < 3 * var * math.sqrt(2 / (n - 1)))

    K, abar = 10, 0.3
    idx, p = noise_types(np.tile(np.eye(K)[0], (n, 1)), 0, alpha_bar=abar, seed=1)
    freq = np.bincount(idx, minlength=K) / n
    assert np.all(np.abs(freq - p[0]) < 3 * np.sqrt(p[0] * (1 - p[0]) / n))

    lin = make_schedule(1000, "linear")
    rng = np.random.default_rng(2)
    x0 = rng.normal(size=(3, 3))
    for t in range(1, 1001, 37):
        xt, _ = noise_coordinates(x0, t, lin, seed=t)
        target = score_targets(x0, xt, t, lin).target
        h = 1e-3 * math.sqrt(1 - lin.alpha_bar_at(t))
        num = np.zeros_like(xt)
        for i in np.ndindex(xt.shape):
            up, dn = xt.copy(), xt.copy()
            up[i] += h
            dn[i] -= h
            num[i] = (coordinate_log_density(up, x0, t, lin) - coordinate_log_density(dn, x0, t, lin)) / (2 * h)
        assert np.max(np.abs(num - target)) < 1e-5 * max(1.0, float(np.max(np.abs(target))))


def _summaries(Z):
    return [ContextSummary(*row, context_size=1, task="DN") for row in Z]


@pytest.mark.criterion(10, "KL entropy within 10% on a 4-D Gaussian; rho monotone over 5 spreads")
def test_entropy_calibration():
    rng = np.random.default_rng(10)
    x = rng.normal(scale=math.sqrt(0.5), size=(2000, 4))
    closed = 2 * math.log(2 * math.pi * math.e * 0.5)
    assert abs(kl_entropy(x, k=3) - closed) < 0.1 * abs(closed)

    base = rng.normal(size=(500, 4))
    rhos = [information_density(_summaries(base * s + [4, 4.5, 1, 2])).rho for s in (0.1, 0.3, 0.9, 2.7, 8.1)]
    assert all(a < b for a, b in zip(rhos, rhos[1:])), rhos


@pytest.mark.criterion(11, "SDF write/parse is a fixed point on 100 generated molecules within 1e-4 A")
def test_sdf_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        elements = list(rng.choice(["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "H"], n))
        xyz = rng.uniform(-99, 99, size=(n, 3))
        bonds = [(int(rng.integers(0, i)), i, int(rng.integers(1, 4))) for i in range(1, n)]
        charges = [int(c) for c in rng.choice([0, 0, 0, 1, -1], n)]
        g = make_ligand(elements, xyz, bonds, charges=charges)
        text = write_ligand(g)
        once = parse_ligand(text)
        np.testing.assert_allclose(once.coords, xyz, atol=1e-4)
        assert once.elements == g.elements and once.bonds == g.bonds
        assert [a.charge for a in once.atoms] == charges
        assert write_ligand(once) == text
