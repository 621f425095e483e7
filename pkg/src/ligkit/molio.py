"""Reading and writing receptor (PDB) and ligand (SDF/MOL V2000) structures.

Parsed structures are frozen dataclasses; coordinate arrays exposed through
``coords`` are read-only views built once per structure.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "LIGAND_ELEMENTS",
    "METAL_ELEMENTS",
    "ELEMENTS",
    "STANDARD_RESIDUES",
    "ParseError",
    "ResidueId",
    "Atom",
    "MolecularGraph",
    "PocketStructure",
    "parse_receptor",
    "parse_ligand",
    "iter_ligands",
    "write_ligand",
    "heavy_atom_sphere_check",
]

LIGAND_ELEMENTS = ("H", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I")
METAL_ELEMENTS = ("Zn", "Mg", "Ca", "Mn", "Fe", "Na", "K")
ELEMENTS = LIGAND_ELEMENTS + METAL_ELEMENTS
_ELEMENT_LOOKUP = {e.upper(): e for e in ELEMENTS}

STANDARD_RESIDUES = (
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL",
)
WATER_RESIDUES = ("HOH", "WAT", "DOD")
BACKBONE_NAMES = frozenset({"N", "CA", "C", "O"})

# V2000 charge codes in the atom block
_CHARGE_CODES = {0: 0, 1: 3, 2: 2, 3: 1, 4: 0, 5: -1, 6: -2, 7: -3}
_CHARGE_TO_CODE = {v: k for k, v in _CHARGE_CODES.items() if k != 4}


class ParseError(ValueError):
    """Raised for malformed PDB/SDF input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, serials: Sequence[int] = ()):
        self.line = line
        self.serials = tuple(serials)
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class ResidueId:
    name: str
    chain: str
    seq: int
    icode: str = ""

    @property
    def code(self) -> int:
        """Index into the residue vocabulary (20 amino acids, water, other)."""
        if self.name in STANDARD_RESIDUES:
            return STANDARD_RESIDUES.index(self.name)
        if self.name in WATER_RESIDUES:
            return len(STANDARD_RESIDUES)
        return len(STANDARD_RESIDUES) + 1


@dataclass(frozen=True)
class Atom:
    """One atom, in either the ligand role or the receptor role.

    Ligand atoms carry ``context_flag`` (True when held fixed by the task
    context); receptor atoms carry ``backbone_flag`` and ``residue``.
    """

    serial: int
    element: str
    position: tuple[float, float, float]
    name: str = ""
    charge: int = 0
    context_flag: bool | None = None
    backbone_flag: bool | None = None
    residue: ResidueId | None = None
    hetero: bool = False

    def __post_init__(self):
        if self.element not in ELEMENTS:
            raise ValueError(f"element {self.element!r} outside vocabulary")
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise ValueError(f"atom {self.serial}: non-finite or malformed position {self.position!r}")
        object.__setattr__(self, "position", pos)
        ligand_role = self.context_flag is not None
        receptor_role = self.backbone_flag is not None or self.residue is not None
        if ligand_role == receptor_role:
            raise ValueError(f"atom {self.serial}: exactly one of ligand/receptor role must be set")

    @property
    def is_heavy(self) -> bool:
        return self.element != "H"

    @property
    def is_water(self) -> bool:
        return self.residue is not None and self.residue.name in WATER_RESIDUES

    @property
    def is_metal(self) -> bool:
        return self.element in METAL_ELEMENTS


@dataclass(frozen=True)
class MolecularGraph:
    """Ligand atoms plus covalent bonds ``(i, j, order)`` with ``i < j``.

    Bond order 4 is the V2000 aromatic code.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[tuple[int, int, int], ...] = ()
    name: str = ""
    properties: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        n = len(atoms)
        seen = set()
        bonds = []
        for i, j, order in self.bonds:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop bond on atom {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bond ({i}, {j}) references a missing atom")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            seen.add(key)
            bonds.append((key[0], key[1], int(order)))
        object.__setattr__(self, "bonds", tuple(bonds))
        object.__setattr__(self, "properties", dict(self.properties))
        for a in atoms:
            if a.context_flag is None:
                raise ValueError(f"atom {a.serial} is not a ligand-role atom")

    def __len__(self):
        return len(self.atoms)

    @cached_property
    def coords(self) -> np.ndarray:
        xyz = np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)
        xyz.flags.writeable = False
        return xyz

    @cached_property
    def elements(self) -> tuple[str, ...]:
        return tuple(a.element for a in self.atoms)

    @cached_property
    def heavy_mask(self) -> np.ndarray:
        m = np.array([a.is_heavy for a in self.atoms], dtype=bool)
        m.flags.writeable = False
        return m

    @property
    def heavy_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.atoms) if a.is_heavy]

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-atom tuples of ``(neighbor, bond order)``."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for i, j, order in self.bonds:
            adj[i].append((j, order))
            adj[j].append((i, order))
        return tuple(tuple(x) for x in adj)

    def heavy_adjacency(self) -> dict[int, set[int]]:
        heavy = set(self.heavy_indices)
        adj: dict[int, set[int]] = {i: set() for i in heavy}
        for i, j, _ in self.bonds:
            if i in heavy and j in heavy:
                adj[i].add(j)
                adj[j].add(i)
        return adj

    def with_coords(self, xyz: np.ndarray) -> "MolecularGraph":
        xyz = np.asarray(xyz, dtype=float)
        if xyz.shape != (len(self.atoms), 3):
            raise ValueError(f"expected coordinates of shape {(len(self.atoms), 3)}, got {xyz.shape}")
        atoms = tuple(replace(a, position=tuple(p)) for a, p in zip(self.atoms, xyz))
        return replace(self, atoms=atoms)

    def with_context(self, context: Sequence[int]) -> "MolecularGraph":
        """Copy with ``context_flag`` set exactly on ``context``."""
        ctx = set(context)
        atoms = tuple(replace(a, context_flag=(i in ctx)) for i, a in enumerate(self.atoms))
        return replace(self, atoms=atoms)

    def subgraph(self, indices: Sequence[int]) -> "MolecularGraph":
        """Induced subgraph; atoms keep their relative order."""
        keep = sorted(set(indices))
        remap = {old: new for new, old in enumerate(keep)}
        bonds = [(remap[i], remap[j], o) for i, j, o in self.bonds if i in remap and j in remap]
        return MolecularGraph(tuple(self.atoms[i] for i in keep), tuple(bonds), self.name)


@dataclass(frozen=True)
class PocketStructure:
    atoms: tuple[Atom, ...]
    source: str = ""
    clip_center: tuple[float, float, float] | None = None
    clip_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        for a in self.atoms:
            if a.backbone_flag is None:
                raise ValueError(f"atom {a.serial} is not a receptor-role atom")
        if self.clip_radius is not None:
            if self.clip_center is None:
                raise ValueError("clip_radius requires clip_center")
            c = np.asarray(self.clip_center, dtype=float)
            heavy = self.coords[self.heavy_mask]
            if len(heavy) and np.any(np.linalg.norm(heavy - c, axis=1) > self.clip_radius):
                raise ValueError("heavy atom outside clip sphere")

    def __len__(self):
        return len(self.atoms)

    @cached_property
    def coords(self) -> np.ndarray:
        xyz = np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)
        xyz.flags.writeable = False
        return xyz

    @cached_property
    def heavy_mask(self) -> np.ndarray:
        m = np.array([a.is_heavy for a in self.atoms], dtype=bool)
        m.flags.writeable = False
        return m

    @property
    def heavy_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.atoms) if a.is_heavy]

    def with_coords(self, xyz: np.ndarray) -> "PocketStructure":
        xyz = np.asarray(xyz, dtype=float)
        if xyz.shape != (len(self.atoms), 3):
            raise ValueError(f"expected coordinates of shape {(len(self.atoms), 3)}, got {xyz.shape}")
        atoms = tuple(replace(a, position=tuple(p)) for a, p in zip(self.atoms, xyz))
        return PocketStructure(atoms, self.source)


def _text(content: bytes | str) -> str:
    if isinstance(content, bytes):
        return content.decode("utf-8", errors="replace")
    return content


def _resolve_element(raw: str) -> str | None:
    return _ELEMENT_LOOKUP.get(raw.strip().upper())


def _pdb_element(line: str) -> str | None:
    if len(line) >= 78:
        sym = line[76:78].strip()
        if sym:
            return _resolve_element(sym)
    # fall back on the atom name: element is right-justified in columns 13-14
    name = line[12:16]
    if name[:1].strip() and not name[:1].isdigit():
        two = _resolve_element(name[:2])
        if two is not None and len(name[:2].strip()) == 2:
            return two
    letters = "".join(ch for ch in name if ch.isalpha())
    return _resolve_element(letters[:1]) if letters else None


def parse_receptor(
    content: bytes | str,
    clip: tuple[Sequence[float], float] | None = None,
    source: str = "",
) -> PocketStructure:
    """Parse PDB ATOM/HETATM records into a :class:`PocketStructure`.

    Only the first MODEL is read and alternate locations other than ' ' and
    'A' are skipped. When ``clip=(center, radius)`` is given, atoms farther
    than ``radius`` from ``center`` are dropped.
    """
    atoms: list[Atom] = []
    unknown: list[int] = []
    seen_model = False
    for lineno, line in enumerate(_text(content).splitlines(), start=1):
        rec = line[:6]
        if rec.startswith("MODEL"):
            if seen_model:
                break
            seen_model = True
            continue
        if rec.startswith("ENDMDL"):
            break
        if rec not in ("ATOM  ", "HETATM"):
            continue
        altloc = line[16:17] if len(line) > 16 else " "
        if altloc not in (" ", "A"):
            continue
        try:
            serial = int(line[6:11])
        except ValueError:
            raise ParseError(f"bad serial field {line[6:11]!r}", lineno) from None
        try:
            pos = (float(line[30:38]), float(line[38:46]), float(line[46:54]))
        except ValueError:
            raise ParseError(f"malformed coordinate field {line[30:54]!r}", lineno) from None
        if not all(np.isfinite(pos)):
            raise ParseError("non-finite coordinate", lineno)
        element = _pdb_element(line)
        if element is None:
            unknown.append(serial)
            continue
        name = line[12:16].strip()
        resname = line[17:20].strip()
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise ParseError(f"bad residue number {line[22:26]!r}", lineno) from None
        residue = ResidueId(resname, line[21:22].strip(), resseq, line[26:27].strip())
        atoms.append(
            Atom(
                serial=serial,
                element=element,
                position=pos,
                name=name,
                backbone_flag=(resname in STANDARD_RESIDUES and name in BACKBONE_NAMES),
                residue=residue,
                hetero=(rec == "HETATM"),
            )
        )
    if unknown:
        raise ParseError(f"unknown element for atom serial(s) {unknown}", serials=unknown)

    if clip is None:
        return PocketStructure(tuple(atoms), source)
    center, radius = clip
    c = np.asarray(center, dtype=float)
    kept = [a for a in atoms if np.linalg.norm(np.asarray(a.position) - c) <= radius]
    return PocketStructure(tuple(kept), source, tuple(float(v) for v in c), float(radius))


def _parse_mol_block(lines: list[str], offset: int) -> MolecularGraph:
    """Parse one V2000 record; ``offset`` is the 0-based line index of its header."""
    if len(lines) < 4:
        raise ParseError("truncated header", offset + len(lines) + 1)
    name = lines[0].strip()
    counts = lines[3]
    if "V3000" in counts:
        raise ParseError("V3000 records are not supported", offset + 4)
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError:
        raise ParseError(f"malformed counts line {counts!r}", offset + 4) from None

    atoms: list[dict] = []
    for k in range(n_atoms):
        idx = 4 + k
        lineno = offset + idx + 1
        if idx >= len(lines):
            raise ParseError(f"counts line declares {n_atoms} atoms, found {k}", lineno)
        line = lines[idx]
        try:
            pos = (float(line[0:10]), float(line[10:20]), float(line[20:30]))
            symbol = line[31:34].strip()
        except ValueError:
            raise ParseError(f"counts line declares {n_atoms} atoms, found {k}", lineno) from None
        if not symbol or not symbol[0].isalpha():
            raise ParseError(f"counts line declares {n_atoms} atoms, found {k}", lineno)
        element = _resolve_element(symbol)
        if element is None or element in METAL_ELEMENTS:
            raise ParseError(f"element {symbol!r} outside ligand vocabulary", lineno)
        code = line[36:39].strip()
        charge = _CHARGE_CODES.get(int(code), 0) if code.isdigit() else 0
        atoms.append({"serial": k + 1, "element": element, "position": pos, "charge": charge})

    bonds = []
    for k in range(n_bonds):
        idx = 4 + n_atoms + k
        lineno = offset + idx + 1
        if idx >= len(lines):
            raise ParseError(f"counts line declares {n_bonds} bonds, found {k}", lineno)
        line = lines[idx]
        try:
            i, j, order = int(line[0:3]), int(line[3:6]), int(line[6:9])
        except ValueError:
            raise ParseError(f"counts line declares {n_bonds} bonds, found {k}", lineno) from None
        if not (1 <= i <= n_atoms and 1 <= j <= n_atoms):
            raise ParseError(f"bond references atom outside 1..{n_atoms}", lineno)
        bonds.append((i - 1, j - 1, order))

    idx = 4 + n_atoms + n_bonds
    if idx < len(lines):
        nxt = lines[idx]
        if not nxt.startswith(("M  ", "A  ", "V  ", "G  ", "S  ", "$$$$", ">")):
            raise ParseError("counts line does not match the atom/bond blocks", offset + idx + 1)

    charges_from_block = True
    properties: dict[str, str] = {}
    while idx < len(lines):
        line = lines[idx]
        if line.startswith("M  CHG"):
            if charges_from_block:
                # M  CHG supersedes atom-block charges
                for a in atoms:
                    a["charge"] = 0
                charges_from_block = False
            fields = line.split()[3:]
            for a_idx, q in zip(fields[0::2], fields[1::2]):
                atoms[int(a_idx) - 1]["charge"] = int(q)
        elif line.startswith(">"):
            start = line.find("<")
            end = line.find(">", start + 1)
            key = line[start + 1:end] if start >= 0 and end > start else line[1:].strip()
            vals = []
            idx += 1
            while idx < len(lines) and lines[idx].strip() != "":
                vals.append(lines[idx])
                idx += 1
            properties[key] = "\n".join(vals)
        idx += 1

    atom_objs = tuple(Atom(context_flag=False, **a) for a in atoms)
    try:
        return MolecularGraph(atom_objs, tuple(bonds), name, properties)
    except ValueError as exc:
        raise ParseError(str(exc), offset + 1) from None


def _split_records(text: str) -> Iterator[tuple[int, list[str]]]:
    lines = text.splitlines()
    start = 0
    for k, line in enumerate(lines):
        if line.startswith("$$$$"):
            if any(s.strip() for s in lines[start:k]):
                yield start, lines[start:k]
            start = k + 1
    if any(s.strip() for s in lines[start:]):
        yield start, lines[start:]


def iter_ligands(content: bytes | str) -> Iterator[MolecularGraph]:
    """Yield every record of a (multi-record) SDF."""
    for offset, lines in _split_records(_text(content)):
        yield _parse_mol_block(lines, offset)


def parse_ligand(content: bytes | str) -> MolecularGraph:
    """Parse the first record of an SDF/MOL V2000 text."""
    for graph in iter_ligands(content):
        return graph
    raise ParseError("no MOL record found")


def _format_value(value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_ligand(
    graph: MolecularGraph,
    pose=None,
    annotations: Mapping[str, object] | None = None,
) -> str:
    """Serialize ``graph`` as one V2000 SDF record (terminated by ``$$$$``).

    ``pose`` is anything with an ``apply(coords)`` method, e.g.
    :class:`ligkit.geometry.RigidPose`. Annotation values become SDF data
    fields; sequences are written space-separated.
    """
    xyz = np.asarray(graph.coords, dtype=float)
    if pose is not None and len(xyz):
        xyz = pose.apply(xyz)
    out = io.StringIO()
    out.write(f"{graph.name}\n  ligkit\n\n")
    out.write(f"{len(graph.atoms):3d}{len(graph.bonds):3d}  0  0  0  0  0  0  0  0999 V2000\n")
    for a, (x, y, z) in zip(graph.atoms, xyz):
        code = _CHARGE_TO_CODE.get(a.charge, 0)
        out.write(f"{x:10.4f}{y:10.4f}{z:10.4f} {a.element:<3} 0{code:3d}  0  0  0  0  0  0  0  0  0  0\n")
    for i, j, order in graph.bonds:
        out.write(f"{i + 1:3d}{j + 1:3d}{order:3d}  0\n")
    charged = [(k + 1, a.charge) for k, a in enumerate(graph.atoms) if a.charge]
    for start in range(0, len(charged), 8):
        chunk = charged[start:start + 8]
        out.write(f"M  CHG{len(chunk):3d}" + "".join(f" {k:3d} {q:3d}" for k, q in chunk) + "\n")
    out.write("M  END\n")
    fields = dict(graph.properties)
    if annotations:
        fields.update({k: _format_value(v) for k, v in annotations.items()})
    for key, value in fields.items():
        out.write(f">  <{key}>\n{value}\n\n")
    out.write("$$$$\n")
    return out.getvalue()


def heavy_atom_sphere_check(
    graph: MolecularGraph,
    center: Sequence[float],
    radius: float = 10.0,
) -> tuple[bool, list[int]]:
    """Check that every heavy atom lies within ``radius`` of ``center``.

    Returns ``(ok, violating_atom_indices)``.
    """
    if not len(graph.atoms):
        raise ValueError("empty graph")
    dist = np.linalg.norm(graph.coords - np.asarray(center, dtype=float), axis=1)
    bad = np.flatnonzero(graph.heavy_mask & (dist > radius))
    return len(bad) == 0, bad.tolist()
