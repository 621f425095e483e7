"""Empirical five-term contact energy between a receptor pocket and a ligand.

Terms follow the AutoDock Vina intermolecular form on surface distances
``d = r - R_i - R_j``: two attractive Gaussians, a quadratic overlap
penalty, a hydrophobic ramp and a distance-only hydrogen-bond ramp.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .molio import MolecularGraph, PocketStructure

__all__ = [
    "VINA_WEIGHTS",
    "VDW_RADII",
    "CUTOFF",
    "AtomType",
    "TypeArrays",
    "EnergyBreakdown",
    "assign_atom_types",
    "surface_distance",
    "pair_terms",
    "pair_terms_array",
    "CellGrid",
    "ScoringContext",
    "evaluate",
    "evaluate_bruteforce",
]

log = logging.getLogger(__name__)

# (gauss1, gauss2, repulsion, hydrophobic, hbond)
VINA_WEIGHTS = np.array([-0.035579, -0.005156, 0.840245, -0.035069, -0.587439])
TERM_NAMES = ("g1", "g2", "rep", "hyd", "hd")

VDW_RADII = {
    "C": 1.9, "N": 1.8, "O": 1.7, "S": 2.0, "F": 1.5, "Cl": 1.8, "Br": 2.0,
    "I": 2.2, "P": 2.1,
    "Zn": 1.2, "Mg": 1.2, "Ca": 1.2, "Mn": 1.2, "Fe": 1.2, "Na": 1.2, "K": 1.2,
}
CUTOFF = 8.0
# below this many point-query pairs CellGrid.pairs uses a dense distance matrix
DENSE_PAIR_LIMIT = 4096

HETERO = frozenset({"N", "O", "F", "P", "S", "Cl", "Br", "I"})
_VALENCE = {"N": 3, "O": 2}
_COVALENT_MAX = 1.9

# Receptor residue templates. Carbons bonded to N/O/S, and polar atom roles.
_BACKBONE_POLAR_C = {"CA", "C"}
_POLAR_CARBONS = {
    "SER": {"CB"}, "THR": {"CB"}, "TYR": {"CZ"}, "ASP": {"CG"}, "GLU": {"CD"},
    "ASN": {"CG"}, "GLN": {"CD"}, "LYS": {"CE"}, "ARG": {"CD", "CZ"},
    "HIS": {"CG", "CD2", "CE1"}, "TRP": {"CD1", "CE2"}, "CYS": {"CB"},
    "MET": {"CG", "CE"}, "PRO": {"CD"},
}
_SIDECHAIN_DONORS = {
    "ARG": {"NE", "NH1", "NH2"}, "ASN": {"ND2"}, "GLN": {"NE2"}, "HIS": {"ND1", "NE2"},
    "LYS": {"NZ"}, "SER": {"OG"}, "THR": {"OG1"}, "TYR": {"OH"}, "TRP": {"NE1"},
}
_SIDECHAIN_ACCEPTORS = {
    "ASP": {"OD1", "OD2"}, "GLU": {"OE1", "OE2"}, "ASN": {"OD1"}, "GLN": {"OE1"},
    "HIS": {"ND1", "NE2"}, "SER": {"OG"}, "THR": {"OG1"}, "TYR": {"OH"},
}
_STANDARD = frozenset(
    "ALA ARG ASN ASP CYS GLN GLU GLY HIS ILE LEU LYS MET PHE PRO SER THR TRP TYR VAL".split()
)


@dataclass(frozen=True)
class AtomType:
    vdw_radius: float
    is_hydrophobic: bool = False
    is_donor: bool = False
    is_acceptor: bool = False

    def __post_init__(self):
        if not 0.5 < self.vdw_radius < 2.5:
            raise ValueError(f"vdw radius {self.vdw_radius} outside (0.5, 2.5)")


@dataclass(frozen=True)
class TypeArrays:
    """Column form of a list of :class:`AtomType` for vectorized scoring."""

    radius: np.ndarray
    hydrophobic: np.ndarray
    donor: np.ndarray
    acceptor: np.ndarray

    @classmethod
    def from_types(cls, types: Sequence[AtomType]) -> "TypeArrays":
        return cls(
            np.array([t.vdw_radius for t in types], dtype=float),
            np.array([t.is_hydrophobic for t in types], dtype=bool),
            np.array([t.is_donor for t in types], dtype=bool),
            np.array([t.is_acceptor for t in types], dtype=bool),
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    e_g1: float
    e_g2: float
    e_rep: float
    e_hyd: float
    e_hd: float
    weights: tuple[float, ...]
    total: float
    pair_count: int

    @property
    def terms(self) -> np.ndarray:
        return np.array([self.e_g1, self.e_g2, self.e_rep, self.e_hyd, self.e_hd])

    def as_dict(self) -> dict:
        return {
            "g1": self.e_g1,
            "g2": self.e_g2,
            "rep": self.e_rep,
            "hyd": self.e_hyd,
            "hd": self.e_hd,
            "weights": list(self.weights),
            "total": self.total,
            "pair_count": self.pair_count,
        }


def _breakdown(terms: np.ndarray, weights: np.ndarray, pair_count: int) -> EnergyBreakdown:
    terms = np.asarray(terms, dtype=float)
    total = float(np.dot(weights, terms))
    return EnergyBreakdown(*(float(v) for v in terms), tuple(float(w) for w in weights), total, int(pair_count))


def _ligand_hydrogens(graph: MolecularGraph, i: int) -> int:
    explicit = sum(1 for j, _ in graph.neighbors[i] if graph.atoms[j].element == "H")
    if explicit:
        return explicit
    el = graph.atoms[i].element
    if el not in _VALENCE:
        return 0
    used = 0.0
    for _, order in graph.neighbors[i]:
        used += 1.5 if order == 4 else order
    valence = _VALENCE[el] + graph.atoms[i].charge
    return max(0, int(round(valence - used)))


def _is_amide_n(graph: MolecularGraph, i: int) -> bool:
    for j, order in graph.neighbors[i]:
        if graph.atoms[j].element != "C" or order != 1:
            continue
        for k, o2 in graph.neighbors[j]:
            if k != i and o2 == 2 and graph.atoms[k].element in ("O", "S"):
                return True
    return False


def _type_ligand(graph: MolecularGraph) -> list[AtomType]:
    types = []
    for i, atom in enumerate(graph.atoms):
        el = atom.element
        if el == "H":
            types.append(AtomType(1.1))
            continue
        radius = VDW_RADII[el]
        nbr_el = {graph.atoms[j].element for j, _ in graph.neighbors[i]}
        hydrophobic = el == "C" and not (nbr_el & HETERO)
        donor = acceptor = False
        if el in ("N", "O"):
            donor = _ligand_hydrogens(graph, i) > 0
            if el == "O":
                acceptor = True
            else:
                acceptor = (
                    not donor and atom.charge <= 0 and len(graph.neighbors[i]) < 4
                    and not _is_amide_n(graph, i)
                )
        types.append(AtomType(radius, hydrophobic, donor, acceptor))
    return types


def _bonded_hetero_by_distance(pocket: PocketStructure, i: int) -> bool:
    d = np.linalg.norm(pocket.coords - pocket.coords[i], axis=1)
    near = np.flatnonzero((d > 0) & (d < _COVALENT_MAX))
    return any(pocket.atoms[j].element in HETERO for j in near)


def _type_receptor(pocket: PocketStructure, stats: dict | None = None) -> list[AtomType]:
    types = []
    unknown = 0
    for i, atom in enumerate(pocket.atoms):
        el = atom.element
        if el == "H":
            types.append(AtomType(1.1))
            continue
        radius = VDW_RADII[el]
        if atom.is_metal:
            types.append(AtomType(radius))
            continue
        if atom.is_water:
            types.append(AtomType(radius, False, el == "O", el == "O"))
            continue
        res = atom.residue.name
        name = atom.name
        if res not in _STANDARD:
            unknown += 1
            hydrophobic = el == "C" and not _bonded_hetero_by_distance(pocket, i)
            types.append(AtomType(radius, hydrophobic))
            continue
        if el == "C":
            polar = name in _BACKBONE_POLAR_C or name in _POLAR_CARBONS.get(res, ())
            types.append(AtomType(radius, not polar))
            continue
        donor = acceptor = False
        if name == "N":
            donor = res != "PRO"
        elif name in ("O", "OXT"):
            acceptor = True
        else:
            donor = name in _SIDECHAIN_DONORS.get(res, ())
            acceptor = name in _SIDECHAIN_ACCEPTORS.get(res, ())
        types.append(AtomType(radius, False, donor, acceptor))
    if unknown:
        log.warning("%d receptor atoms without a residue template; typed as non-polar", unknown)
    if stats is not None:
        stats["untemplated"] = unknown
    return types


def assign_atom_types(structure: MolecularGraph | PocketStructure, stats: dict | None = None) -> list[AtomType]:
    """Per-atom van der Waals radius and hydrophobic/donor/acceptor roles.

    Ligand roles come from the bond graph (explicit hydrogens, or valence
    when hydrogens are implicit); receptor roles from residue templates.
    Hydrogen atoms get a placeholder type and are never scored.
    """
    if isinstance(structure, MolecularGraph):
        return _type_ligand(structure)
    return _type_receptor(structure, stats)


def surface_distance(pos_i, pos_j, radius_i: float, radius_j: float) -> float:
    """Center distance minus both van der Waals radii (negative on overlap)."""
    r = float(np.linalg.norm(np.asarray(pos_i, dtype=float) - np.asarray(pos_j, dtype=float)))
    return r - radius_i - radius_j


def _ramp(d, good, bad):
    """1 at/below ``good``, 0 at/above ``bad``, linear in between."""
    return np.clip((bad - d) / (bad - good), 0.0, 1.0)


def pair_terms_array(d: np.ndarray, hydrophobic_pair: np.ndarray, hbond_pair: np.ndarray) -> np.ndarray:
    """Unweighted terms for arrays of pairs; returns shape ``(len(d), 5)``."""
    d = np.asarray(d, dtype=float)
    out = np.empty(d.shape + (5,))
    out[..., 0] = np.exp(-((d / 0.5) ** 2))
    out[..., 1] = np.exp(-(((d - 3.0) / 2.0) ** 2))
    out[..., 2] = np.where(d < 0.0, d * d, 0.0)
    out[..., 3] = np.where(hydrophobic_pair, _ramp(d, 0.5, 1.5), 0.0)
    out[..., 4] = np.where(hbond_pair, _ramp(d, -0.7, 0.0), 0.0)
    return out


def pair_terms(d: float, ti: AtomType, tj: AtomType) -> np.ndarray:
    hyd = ti.is_hydrophobic and tj.is_hydrophobic
    hb = (ti.is_donor and tj.is_acceptor) or (ti.is_acceptor and tj.is_donor)
    return pair_terms_array(np.array([d]), np.array([hyd]), np.array([hb]))[0]


class CellGrid:
    """Uniform grid of cubic cells over fixed points for cutoff queries.

    ``pairs(query)`` returns every ``(point, query)`` index pair closer than
    ``cutoff`` by scanning the 27 cells around each query point.
    """

    def __init__(self, points: np.ndarray, cutoff: float = CUTOFF):
        self.points = np.asarray(points, dtype=float).reshape(-1, 3)
        self.cutoff = float(cutoff)
        if len(self.points) == 0:
            self.origin = np.zeros(3)
            self.dims = np.ones(3, dtype=np.int64)
            self.keys = np.empty(0, dtype=np.int64)
            self.order = np.empty(0, dtype=np.int64)
            return
        self.origin = self.points.min(axis=0)
        cell = np.floor((self.points - self.origin) / self.cutoff).astype(np.int64)
        self.dims = cell.max(axis=0) + 1
        keys = self._linear(cell)
        self.order = np.argsort(keys, kind="stable")
        self.keys = keys[self.order]
        offs = np.array(np.meshgrid([-1, 0, 1], [-1, 0, 1], [-1, 0, 1], indexing="ij")).reshape(3, -1).T
        self._offsets = offs

    def _linear(self, cell: np.ndarray) -> np.ndarray:
        return (cell[..., 0] * self.dims[1] + cell[..., 1]) * self.dims[2] + cell[..., 2]

    def candidates(self, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs in neighboring cells (superset of the cutoff pairs)."""
        query = np.asarray(query, dtype=float).reshape(-1, 3)
        if len(self.keys) == 0 or len(query) == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        qcell = np.floor((query - self.origin) / self.cutoff).astype(np.int64)
        cells = qcell[:, None, :] + self._offsets[None, :, :]
        valid = np.all((cells >= 0) & (cells < self.dims), axis=-1)
        qidx = np.nonzero(valid)[0]
        keys = self._linear(cells[valid])
        lo = np.searchsorted(self.keys, keys, side="left")
        hi = np.searchsorted(self.keys, keys, side="right")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        q = np.repeat(qidx, counts)
        starts = np.repeat(lo - np.cumsum(counts) + counts, counts)
        p = self.order[starts + np.arange(total)]
        return p, q

    def pairs(self, query: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(point_idx, query_idx, distance)`` for all pairs with distance < cutoff."""
        query = np.asarray(query, dtype=float).reshape(-1, 3)
        if len(self.points) * len(query) <= DENSE_PAIR_LIMIT:
            # small problems: one distance matrix beats the cell bookkeeping
            diff = self.points[:, None, :] - query[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            p, q = np.nonzero(dist < self.cutoff)
            return p, q, dist[p, q]
        p, q = self.candidates(query)
        r = np.sqrt(np.sum((self.points[p] - query[q]) ** 2, axis=1))
        keep = r < self.cutoff
        return p[keep], q[keep], r[keep]


def _scored_pocket_atoms(pocket: PocketStructure) -> np.ndarray:
    return np.array(
        [i for i, a in enumerate(pocket.atoms) if a.is_heavy and not a.is_water], dtype=np.int64
    )


class ScoringContext:
    """Pocket-side state reused across many ligand poses.

    Holds the receptor typing, the cell grid over scored receptor atoms and
    the ligand heavy-atom typing, so a pose evaluation is one neighbor query
    plus vectorized term sums.
    """

    def __init__(
        self,
        pocket: PocketStructure,
        ligand: MolecularGraph,
        weights: Sequence[float] | None = None,
        cutoff: float = CUTOFF,
    ):
        self.pocket_index = _scored_pocket_atoms(pocket)
        self.ligand_index = np.array(ligand.heavy_indices, dtype=np.int64)
        if len(self.pocket_index) == 0:
            raise ValueError("pocket has no scorable heavy atoms")
        if len(self.ligand_index) == 0:
            raise ValueError("ligand has no heavy atoms")
        self.weights = np.asarray(VINA_WEIGHTS if weights is None else weights, dtype=float)
        if self.weights.shape != (5,):
            raise ValueError("weights must have five entries")
        self.cutoff = float(cutoff)
        ptypes = assign_atom_types(pocket)
        ltypes = assign_atom_types(ligand)
        self.ptypes = TypeArrays.from_types([ptypes[i] for i in self.pocket_index])
        self.ltypes = TypeArrays.from_types([ltypes[i] for i in self.ligand_index])
        self.pocket_xyz = np.array(pocket.coords[self.pocket_index])
        self.ligand_xyz = np.array(ligand.coords[self.ligand_index])
        self.grid = CellGrid(self.pocket_xyz, self.cutoff)

    def _terms(self, p, q, r) -> np.ndarray:
        pt, lt = self.ptypes, self.ltypes
        d = r - pt.radius[p] - lt.radius[q]
        hyd = pt.hydrophobic[p] & lt.hydrophobic[q]
        hb = (pt.donor[p] & lt.acceptor[q]) | (pt.acceptor[p] & lt.donor[q])
        return pair_terms_array(d, hyd, hb).sum(axis=0)

    def score_coords(self, ligand_heavy_xyz: np.ndarray) -> EnergyBreakdown:
        p, q, r = self.grid.pairs(ligand_heavy_xyz)
        return _breakdown(self._terms(p, q, r), self.weights, len(r))

    def score_coords_bruteforce(self, ligand_heavy_xyz: np.ndarray) -> EnergyBreakdown:
        terms = np.zeros(5)
        count = 0
        pt, lt = self.ptypes, self.ltypes
        for a in range(len(self.pocket_xyz)):
            for b in range(len(ligand_heavy_xyz)):
                r = float(np.linalg.norm(self.pocket_xyz[a] - ligand_heavy_xyz[b]))
                if r >= self.cutoff:
                    continue
                d = r - pt.radius[a] - lt.radius[b]
                ti = AtomType(pt.radius[a], pt.hydrophobic[a], pt.donor[a], pt.acceptor[a])
                tj = AtomType(lt.radius[b], lt.hydrophobic[b], lt.donor[b], lt.acceptor[b])
                terms += pair_terms(d, ti, tj)
                count += 1
        return _breakdown(terms, self.weights, count)

    def total(self, ligand_heavy_xyz: np.ndarray) -> float:
        p, q, r = self.grid.pairs(ligand_heavy_xyz)
        return float(np.dot(self.weights, self._terms(p, q, r)))

    def recentered(self, origin) -> "ScoringContext":
        """Copy with both coordinate sets expressed relative to ``origin``.

        Energies depend only on differences, so scores are unchanged; working
        near the origin keeps rounding independent of where the complex sits.
        """
        origin = np.asarray(origin, dtype=float)
        out = copy.copy(self)
        out.pocket_xyz = self.pocket_xyz - origin
        out.ligand_xyz = self.ligand_xyz - origin
        out.grid = CellGrid(out.pocket_xyz, self.cutoff)
        return out


def evaluate(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    pose=None,
    weights: Sequence[float] | None = None,
    cutoff: float = CUTOFF,
) -> EnergyBreakdown:
    """Score ``ligand`` (optionally moved by ``pose``) against ``pocket``.

    Receptor waters and all hydrogens are excluded. Raises ``ValueError``
    when either side has no scorable atoms.
    """
    ctx = ScoringContext(pocket, ligand, weights, cutoff)
    xyz = ctx.ligand_xyz if pose is None else pose.apply(ctx.ligand_xyz)
    return ctx.score_coords(xyz)


def evaluate_bruteforce(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    pose=None,
    weights: Sequence[float] | None = None,
    cutoff: float = CUTOFF,
) -> EnergyBreakdown:
    """Double-loop reference for :func:`evaluate` (no neighbor acceleration)."""
    ctx = ScoringContext(pocket, ligand, weights, cutoff)
    xyz = ctx.ligand_xyz if pose is None else pose.apply(ctx.ligand_xyz)
    return ctx.score_coords_bruteforce(xyz)
