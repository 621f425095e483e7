"""Context statistics over pocket-ligand contacts, information density and G-SNR.

A complex is summarized by ``Z = (n_bar, d_bar, t_bar, k_bar)`` computed
over the atoms a task keeps as context: mean virtual-edge degree, mean
edge length, mean number of distinct interaction categories and mean
number of distinct interacting pocket atoms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from .energy import assign_atom_types
from .molio import MolecularGraph, PocketStructure
from .scaffold import MaskAssignment, small_rings

__all__ = [
    "CATEGORIES",
    "DEFAULT_THRESHOLDS",
    "VirtualEdgeGraph",
    "InteractionRecord",
    "ContextSummary",
    "DensityEstimate",
    "GSNRResult",
    "build_virtual_edges",
    "aromatic_rings",
    "receptor_rings",
    "classify_interactions",
    "summarize",
    "kl_entropy",
    "information_density",
    "hexbin",
    "gradient_snr",
]

log = logging.getLogger(__name__)

CATEGORIES = ("hydrophobic", "hydrogen-bond", "water-bridge", "pi-pi", "pi-cation", "halogen", "metal")

DEFAULT_THRESHOLDS = {
    "edge": 6.0,
    "hydrophobic": 4.0,
    "hbond": 3.5,
    "water_bridge": 3.5,
    "pi_pi": 5.5,
    "pi_cation": 6.0,
    "halogen": 3.5,
    "metal": 3.0,
    "planarity_rms": 0.1,
}

_RECEPTOR_RINGS = {
    "PHE": (("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),),
    "TYR": (("CG", "CD1", "CD2", "CE1", "CE2", "CZ"),),
    "HIS": (("CG", "ND1", "CD2", "CE1", "NE2"),),
    "TRP": (("CG", "CD1", "NE1", "CE2", "CD2"), ("CD2", "CE2", "CE3", "CZ2", "CZ3", "CH2")),
}
_RECEPTOR_CATIONS = {"LYS": ("NZ",), "ARG": ("NE", "NH1", "NH2")}


@dataclass(frozen=True)
class VirtualEdgeGraph:
    pocket_index: np.ndarray
    ligand_index: np.ndarray
    distance: np.ndarray
    threshold: float = 6.0

    def __len__(self):
        return len(self.distance)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(p), int(q), float(d)) for p, q, d in zip(self.pocket_index, self.ligand_index, self.distance)]


@dataclass(frozen=True)
class InteractionRecord:
    category: str
    ligand_atom: int
    pocket_atom: int
    distance: float
    centroid_distance: float | None = None


@dataclass(frozen=True)
class ContextSummary:
    n_bar: float
    d_bar: float | None
    t_bar: float
    k_bar: float
    context_size: int
    task: str
    # per tally atom: (degree, distinct categories, distinct pocket atoms)
    per_atom: Mapping[int, tuple[int, int, int]] = field(default_factory=dict, compare=False)

    @property
    def z(self) -> np.ndarray:
        return np.array([self.n_bar, np.nan if self.d_bar is None else self.d_bar, self.t_bar, self.k_bar])


def build_virtual_edges(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    threshold: float = 6.0,
) -> VirtualEdgeGraph:
    """All heavy-atom pocket-ligand pairs strictly closer than ``threshold``."""
    p_idx = np.array(pocket.heavy_indices, dtype=np.int64)
    l_idx = np.array(ligand.heavy_indices, dtype=np.int64)
    if len(p_idx) == 0 or len(l_idx) == 0:
        empty = np.empty(0, dtype=np.int64)
        return VirtualEdgeGraph(empty, empty, np.empty(0), threshold)
    diff = pocket.coords[p_idx][:, None, :] - ligand.coords[l_idx][None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    a, b = np.nonzero(dist < threshold)
    return VirtualEdgeGraph(p_idx[a], l_idx[b], dist[a, b], threshold)


def _plane_rms(xyz: np.ndarray) -> float:
    centered = xyz - xyz.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return float(sv[-1] / math.sqrt(len(xyz)))


def aromatic_rings(ligand: MolecularGraph, planarity_rms: float = 0.1) -> list[tuple[int, ...]]:
    """Planar five- and six-membered rings made only of C and N."""
    rings = []
    for ring in small_rings(ligand, 6):
        if len(ring) < 5:
            continue
        if any(ligand.atoms[i].element not in ("C", "N") for i in ring):
            continue
        if _plane_rms(ligand.coords[list(ring)]) < planarity_rms:
            rings.append(ring)
    return rings


def receptor_rings(pocket: PocketStructure) -> list[tuple[int, ...]]:
    """Aromatic side-chain rings of PHE/TYR/HIS/TRP residues with all atoms present."""
    by_res: dict = {}
    for i, a in enumerate(pocket.atoms):
        if a.residue is not None and a.residue.name in _RECEPTOR_RINGS:
            by_res.setdefault(a.residue, {})[a.name] = i
    rings = []
    for res, names in by_res.items():
        for template in _RECEPTOR_RINGS[res.name]:
            if all(n in names for n in template):
                rings.append(tuple(names[n] for n in template))
    return rings


def _nearest(xyz: np.ndarray, indices: Sequence[int], point: np.ndarray) -> int:
    d = np.linalg.norm(xyz[list(indices)] - point, axis=1)
    return int(list(indices)[int(np.argmin(d))])


def classify_interactions(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    thresholds: Mapping[str, float] | None = None,
) -> list[InteractionRecord]:
    """Geometric interaction records between ligand and pocket heavy atoms.

    Ring categories produce one record per ligand ring atom (pi-pi, and
    pi-cation with a receptor cation) or per cationic ligand N (pi-cation
    with a receptor ring), pointing at the nearest partner ring atom.
    """
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    ltypes = assign_atom_types(ligand)
    ptypes = assign_atom_types(pocket)
    pxyz, lxyz = pocket.coords, ligand.coords
    p_heavy = [i for i in pocket.heavy_indices]
    l_heavy = ligand.heavy_indices
    records: list[InteractionRecord] = []
    if not p_heavy or not l_heavy:
        return records

    dist = np.linalg.norm(pxyz[p_heavy][:, None, :] - lxyz[l_heavy][None, :, :], axis=-1)
    water = [pocket.atoms[i].is_water and pocket.atoms[i].element == "O" for i in p_heavy]

    for a, pi in enumerate(p_heavy):
        patom, pt = pocket.atoms[pi], ptypes[pi]
        for b, li in enumerate(l_heavy):
            r = float(dist[a, b])
            latom, lt = ligand.atoms[li], ltypes[li]
            if water[a]:
                continue
            if pt.is_hydrophobic and lt.is_hydrophobic and r <= th["hydrophobic"]:
                records.append(InteractionRecord("hydrophobic", li, pi, r))
            if ((lt.is_donor and pt.is_acceptor) or (lt.is_acceptor and pt.is_donor)) and r <= th["hbond"]:
                records.append(InteractionRecord("hydrogen-bond", li, pi, r))
            if latom.element in ("Cl", "Br", "I") and pt.is_acceptor and r <= th["halogen"]:
                records.append(InteractionRecord("halogen", li, pi, r))
            if patom.is_metal and latom.element in ("N", "O", "S") and r <= th["metal"]:
                records.append(InteractionRecord("metal", li, pi, r))

    # water bridges: ligand polar atom - water O - receptor polar atom
    receptor_polar = [
        i for i in p_heavy
        if not pocket.atoms[i].is_water and (ptypes[i].is_donor or ptypes[i].is_acceptor)
    ]
    for a, wi in enumerate(p_heavy):
        if not water[a]:
            continue
        if receptor_polar:
            dw = np.linalg.norm(pxyz[receptor_polar] - pxyz[wi], axis=1)
            if not np.any(dw <= th["water_bridge"]):
                continue
        else:
            continue
        for b, li in enumerate(l_heavy):
            lt = ltypes[li]
            if (lt.is_donor or lt.is_acceptor) and dist[a, b] <= th["water_bridge"]:
                records.append(InteractionRecord("water-bridge", li, wi, float(dist[a, b])))

    l_rings = aromatic_rings(ligand, th["planarity_rms"])
    p_rings = receptor_rings(pocket)
    l_cent = [lxyz[list(r)].mean(axis=0) for r in l_rings]
    p_cent = [pxyz[list(r)].mean(axis=0) for r in p_rings]

    for lr, lc in zip(l_rings, l_cent):
        for pr, pc in zip(p_rings, p_cent):
            cd = float(np.linalg.norm(lc - pc))
            if cd <= th["pi_pi"]:
                for li in lr:
                    pj = _nearest(pxyz, pr, lxyz[li])
                    records.append(InteractionRecord("pi-pi", li, pj, float(np.linalg.norm(pxyz[pj] - lxyz[li])), cd))
        for pi in p_heavy:
            patom = pocket.atoms[pi]
            if patom.residue is None or patom.name not in _RECEPTOR_CATIONS.get(patom.residue.name, ()):
                continue
            cd = float(np.linalg.norm(lc - pxyz[pi]))
            if cd <= th["pi_cation"]:
                for li in lr:
                    records.append(InteractionRecord("pi-cation", li, pi, float(np.linalg.norm(pxyz[pi] - lxyz[li])), cd))

    cations = [i for i in l_heavy if ligand.atoms[i].element == "N" and ligand.atoms[i].charge > 0]
    for li in cations:
        for pr, pc in zip(p_rings, p_cent):
            cd = float(np.linalg.norm(pc - lxyz[li]))
            if cd <= th["pi_cation"]:
                pj = _nearest(pxyz, pr, lxyz[li])
                records.append(InteractionRecord("pi-cation", li, pj, float(np.linalg.norm(pxyz[pj] - lxyz[li])), cd))
    return records


def summarize(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    mask: MaskAssignment,
    threshold: float = 6.0,
    thresholds: Mapping[str, float] | None = None,
    records: Sequence[InteractionRecord] | None = None,
) -> ContextSummary:
    """Context summary ``Z`` for one complex under ``mask``.

    DN tallies over every ligand heavy atom, SH/SC over ``mask.context``.
    Atoms without edges count as zero in ``n_bar``, ``t_bar`` and ``k_bar``;
    ``d_bar`` pools edge lengths and is ``None`` when there are no edges.
    """
    if mask.task == "DN":
        tally = list(ligand.heavy_indices)
    else:
        tally = sorted(i for i in mask.context if ligand.atoms[i].is_heavy)
    if not tally:
        raise ValueError(f"empty tally set for task {mask.task}")
    edges = build_virtual_edges(pocket, ligand, threshold)
    if records is None:
        records = classify_interactions(pocket, ligand, thresholds)
    tally_set = set(tally)
    degree = {i: 0 for i in tally}
    lengths = []
    for q, d in zip(edges.ligand_index, edges.distance):
        q = int(q)
        if q in tally_set:
            degree[q] += 1
            lengths.append(float(d))
    cats: dict[int, set[str]] = {i: set() for i in tally}
    partners: dict[int, set[int]] = {i: set() for i in tally}
    for rec in records:
        if rec.ligand_atom in tally_set:
            cats[rec.ligand_atom].add(rec.category)
            partners[rec.ligand_atom].add(rec.pocket_atom)
    n = len(tally)
    per_atom = {i: (degree[i], len(cats[i]), len(partners[i])) for i in tally}
    return ContextSummary(
        n_bar=sum(degree.values()) / n,
        d_bar=(math.fsum(lengths) / len(lengths)) if lengths else None,
        t_bar=sum(len(c) for c in cats.values()) / n,
        k_bar=sum(len(p) for p in partners.values()) / n,
        context_size=n,
        task=mask.task,
        per_atom=per_atom,
    )


def kl_entropy(x: np.ndarray, k: int = 3) -> float:
    """Kozachenko-Leonenko k-NN differential entropy estimate in nats.

    ``H = psi(n) - psi(k) + log V_d + (d / n) sum_i log r_i`` where ``r_i`` is
    the distance from sample ``i`` to its k-th nearest neighbor and ``V_d``
    the volume of the unit d-ball.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    r = cKDTree(x).query(x, k=k + 1)[0][:, k]
    log_vd = (d / 2) * math.log(math.pi) - gammaln(d / 2 + 1)
    with np.errstate(divide="ignore"):
        return float(digamma(n) - digamma(k) + log_vd + d * np.mean(np.log(r)))


@dataclass
class DensityEstimate:
    rho: float | None
    entropy: float | None
    n: int
    degenerate: bool = False
    low_confidence: bool = False
    jittered: bool = False
    dropped: int = 0
    axis_means: dict = field(default_factory=dict)
    hexbins: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "entropy": self.entropy,
            "n": self.n,
            "degenerate": self.degenerate,
            "low_confidence": self.low_confidence,
            "jittered": self.jittered,
            "dropped": self.dropped,
            "axis_means": self.axis_means,
            "hexbins": self.hexbins,
        }


def information_density(
    summaries: Sequence[ContextSummary],
    k: int = 3,
    gridsize: int = 30,
    jitter: float = 1e-9,
    seed: int = 0,
) -> DensityEstimate:
    """Estimate ``rho = H(Z) / 4`` from per-complex summaries.

    Summaries without edges (``d_bar is None``) are dropped. Samples whose
    k-th neighbor distance is zero for more than 10% of points get Gaussian
    jitter of scale ``jitter``; a sample with no spread at all is reported
    as degenerate with ``rho = None``.
    """
    rows = [s.z for s in summaries if s.d_bar is not None]
    dropped = len(summaries) - len(rows)
    Z = np.array(rows, dtype=float).reshape(-1, 4)
    n = len(Z)
    est = DensityEstimate(None, None, n, dropped=dropped, low_confidence=n < 50)
    if n:
        est.axis_means = dict(zip(("n_bar", "d_bar", "t_bar", "k_bar"), Z.mean(axis=0).tolist()))
        est.hexbins = {
            "distance_plane": hexbin(Z[:, 0], Z[:, 1], gridsize),
            "interaction_plane": hexbin(Z[:, 2], Z[:, 3], gridsize),
        }
    if n <= k or np.all(Z == Z[0]):
        est.degenerate = True
        return est
    r = cKDTree(Z).query(Z, k=k + 1)[0][:, k]
    if np.mean(r == 0) > 0.1:
        log.warning("%.0f%% of k-NN distances are zero; adding jitter %g", 100 * np.mean(r == 0), jitter)
        Z = Z + np.random.default_rng(seed).normal(scale=jitter, size=Z.shape)
        est.jittered = True
    h = kl_entropy(Z, k)
    if not np.isfinite(h):
        est.degenerate = True
        return est
    est.entropy = h
    est.rho = h / 4
    return est


def hexbin(x, y, gridsize: int = 30) -> list[tuple[float, float, int]]:
    """Counts on a hexagonal lattice over the observed range of ``(x, y)``.

    Two interleaved rectangular lattices as in matplotlib's ``hexbin``;
    returns ``(center_x, center_y, count)`` for non-empty cells.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        return []
    nx = ny = gridsize
    xmin, xmax = x.min(), x.max()
    ymin, ymax = y.min(), y.max()
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    sx = (xmax - xmin) / nx
    sy = (ymax - ymin) / ny
    ix = (x - xmin) / sx
    iy = (y - ymin) / sy
    i1, j1 = np.round(ix), np.round(iy)
    i2, j2 = np.floor(ix), np.floor(iy)
    d1 = (ix - i1) ** 2 + 3.0 * (iy - j1) ** 2
    d2 = (ix - i2 - 0.5) ** 2 + 3.0 * (iy - j2 - 0.5) ** 2
    first = d1 < d2
    cx = np.where(first, i1, i2 + 0.5) * sx + xmin
    cy = np.where(first, j1, j2 + 0.5) * sy + ymin
    counts: dict[tuple[float, float], int] = {}
    for key in zip(cx.tolist(), cy.tolist()):
        counts[key] = counts.get(key, 0) + 1
    return [(kx, ky, c) for (kx, ky), c in sorted(counts.items())]


@dataclass
class GSNRResult:
    snr: np.ndarray
    capped: np.ndarray
    rolling_variance: np.ndarray
    window: int


def gradient_snr(samples, window: int = 32, rolling: int = 10, floor: float = 1e-12) -> GSNRResult:
    """Per-window ``|mean g|^2 / (trace Cov g + floor)`` over consecutive windows.

    Windows do not overlap; a trailing partial window shorter than 2 is
    discarded. ``capped`` marks windows whose covariance trace is below
    ``floor`` (noise-free limit). ``rolling_variance[i]`` is the variance of
    the last ``rolling`` SNR values up to window ``i`` (NaN until enough
    windows exist).
    """
    rows = [np.asarray(g, dtype=float).ravel() for g in samples]
    if not rows:
        raise ValueError("no gradient samples")
    dim = len(rows[0])
    for k, g in enumerate(rows):
        if len(g) != dim:
            raise ValueError(f"sample {k} has dimension {len(g)}, expected {dim}")
    if window < 2:
        raise ValueError("window must be >= 2")
    G = np.vstack(rows)
    snr, capped = [], []
    for start in range(0, len(G), window):
        block = G[start:start + window]
        if len(block) < 2:
            break
        mean = block.mean(axis=0)
        tr = float(np.sum(block.var(axis=0, ddof=1)))
        snr.append(float(mean @ mean) / (tr + floor))
        capped.append(tr < floor)
    snr_arr = np.array(snr)
    rv = np.full(len(snr_arr), np.nan)
    for i in range(rolling - 1, len(snr_arr)):
        rv[i] = np.var(snr_arr[i - rolling + 1:i + 1])
    return GSNRResult(snr_arr, np.array(capped, dtype=bool), rv, window)
