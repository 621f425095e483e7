"""Rigid-body pose refinement by finite-difference L-BFGS over six parameters.

The parameter vector ``u = (dx, dy, dz, wx, wy, wz)`` starts at zero (the
input pose). Each iteration takes a fixed-size step along the L-BFGS
direction; no line search is performed. The best energy seen is tracked
and the refined pose is kept only when it is no worse than the start.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import CUTOFF, ScoringContext
from .geometry import RigidPose, rodrigues
from .molio import MolecularGraph, PocketStructure

__all__ = [
    "EnergyEvaluationError",
    "fd_gradient",
    "two_loop_direction",
    "MinimizeResult",
    "lbfgs_minimize",
    "RefineResult",
    "lbfgs_refine",
    "pose_energy_function",
]

DEFAULT_EPS = 1e-3
DEFAULT_STEP = 0.1
DEFAULT_MEMORY = 5
DEFAULT_MAX_ITER = 100
CURVATURE_TOL = 1e-10
GRAD_TOL = 1e-6


class EnergyEvaluationError(RuntimeError):
    """Non-finite energy at a gradient probe; ``probe`` is -1 for the base point."""

    def __init__(self, message: str, probe: int):
        super().__init__(message)
        self.probe = probe


def fd_gradient(
    energy: Callable[[np.ndarray], float],
    u,
    eps: float = DEFAULT_EPS,
    f0: float | None = None,
    central: bool = False,
) -> np.ndarray:
    """Finite-difference gradient of ``energy`` at ``u``.

    Forward differences by default, ``(E(u + eps e_i) - E(u)) / eps``; pass
    ``f0`` to reuse a known ``E(u)``. ``central=True`` switches to
    ``(E(u + eps e_i) - E(u - eps e_i)) / (2 eps)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    u = np.asarray(u, dtype=float)
    if not central:
        if f0 is None:
            f0 = float(energy(u))
        if not np.isfinite(f0):
            raise EnergyEvaluationError("non-finite energy at base point", -1)
    g = np.empty_like(u)
    for i in range(len(u)):
        up = u.copy()
        up[i] += eps
        fp = float(energy(up))
        if not np.isfinite(fp):
            raise EnergyEvaluationError(f"non-finite energy at probe {i}", i)
        if central:
            um = u.copy()
            um[i] -= eps
            fm = float(energy(um))
            if not np.isfinite(fm):
                raise EnergyEvaluationError(f"non-finite energy at probe {i}", i)
            g[i] = (fp - fm) / (2 * eps)
        else:
            g[i] = (fp - f0) / eps
    return g


def two_loop_direction(g: np.ndarray, pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Approximate ``H^{-1} g`` from curvature pairs ``(s, y)``, oldest first."""
    q = np.array(g, dtype=float)
    if not pairs:
        return q
    rhos = [1.0 / float(y @ s) for s, y in pairs]
    alphas = []
    for (s, y), rho in zip(reversed(pairs), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y), rho, a in zip(pairs, rhos, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


@dataclass
class MinimizeResult:
    u_init: np.ndarray
    u_best: np.ndarray
    e_init: float
    e_best: float
    iterations: int
    energy_trace: list[float] = field(default_factory=list)
    best_trace: list[float] = field(default_factory=list)
    converged: bool = False
    error: str | None = None


def lbfgs_minimize(
    energy: Callable[[np.ndarray], float],
    u0=None,
    max_iter: int = DEFAULT_MAX_ITER,
    step: float = DEFAULT_STEP,
    memory: int = DEFAULT_MEMORY,
    eps: float = DEFAULT_EPS,
    central: bool = False,
    grad_tol: float = GRAD_TOL,
) -> MinimizeResult:
    """Fixed-step L-BFGS on ``energy`` with finite-difference gradients.

    ``energy_trace[k]`` is the energy of iterate ``k + 1`` and ``best_trace``
    the running minimum including the start point. If an evaluation fails
    the run stops, ``error`` is set and ``u_best`` falls back to ``u0``.
    """
    if max_iter < 0:
        raise ValueError("max_iter must be >= 0")
    u = np.zeros(6) if u0 is None else np.array(u0, dtype=float)
    u_init = u.copy()
    e = float(energy(u))
    if not np.isfinite(e):
        return MinimizeResult(u_init, u_init, e, e, 0, error="non-finite initial energy")
    res = MinimizeResult(u_init, u.copy(), e, e, 0)
    pairs: deque = deque(maxlen=memory)
    u_prev = g_prev = None
    for k in range(max_iter):
        try:
            g = fd_gradient(energy, u, eps, f0=e, central=central)
        except EnergyEvaluationError as exc:
            res.error = str(exc)
            break
        if g_prev is not None:
            s, y = u - u_prev, g - g_prev
            if float(s @ y) > CURVATURE_TOL:
                pairs.append((s, y))
        if np.max(np.abs(g)) < grad_tol:
            res.converged = True
            break
        direction = two_loop_direction(g, list(pairs))
        u_prev, g_prev = u, g
        u = u - step * direction
        e = float(energy(u))
        res.iterations = k + 1
        if not np.isfinite(e):
            res.error = f"non-finite energy at iteration {k + 1}"
            break
        res.energy_trace.append(e)
        if e < res.e_best:
            res.e_best = e
            res.u_best = u.copy()
        res.best_trace.append(res.e_best)
    if res.error is not None:
        res.u_best = u_init.copy()
        res.e_best = res.e_init
    return res


def pose_energy_function(ctx: ScoringContext, center: np.ndarray) -> Callable[[np.ndarray], float]:
    """``u -> E_total`` for the ligand heavy atoms held in ``ctx``.

    Scoring happens in a frame centred on ``center`` so that a joint
    translation of pocket and ligand changes nothing but that offset.
    """
    local = ctx.recentered(center)
    X = local.ligand_xyz

    def energy(u):
        return local.total(X @ rodrigues(u[3:]).T + u[:3])

    return energy


@dataclass
class RefineResult:
    initial_pose: RigidPose
    best_pose: RigidPose
    e_init: float
    e_opt: float
    accepted: bool
    iterations_used: int
    energy_trace: list[float]
    raw_trace: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def pose(self) -> RigidPose:
        """The kept pose: ``best_pose`` if accepted, else ``initial_pose``."""
        return self.best_pose if self.accepted else self.initial_pose

    @property
    def e_final(self) -> float:
        return self.e_opt if self.accepted else self.e_init


def lbfgs_refine(
    pocket: PocketStructure,
    ligand: MolecularGraph,
    T_max: int = DEFAULT_MAX_ITER,
    step: float = DEFAULT_STEP,
    memory: int = DEFAULT_MEMORY,
    eps: float = DEFAULT_EPS,
    central: bool = False,
    weights: Sequence[float] | None = None,
    cutoff: float = CUTOFF,
) -> RefineResult:
    """Refine the rigid placement of ``ligand`` in ``pocket``.

    Rotations act about the ligand heavy-atom centroid. ``energy_trace``
    holds the best-so-far energy, starting with ``E_init``.
    """
    ctx = ScoringContext(pocket, ligand, weights, cutoff)
    center = ctx.ligand_xyz.mean(axis=0)
    energy = pose_energy_function(ctx, center)
    res = lbfgs_minimize(energy, np.zeros(6), T_max, step, memory, eps, central)
    initial = RigidPose.identity(center)
    best = RigidPose.from_vector(res.u_best, center)
    accepted = res.error is None and res.e_best <= res.e_init
    return RefineResult(
        initial_pose=initial,
        best_pose=best if accepted else initial,
        e_init=res.e_init,
        e_opt=res.e_best if accepted else res.e_init,
        accepted=accepted,
        iterations_used=res.iterations,
        energy_trace=[res.e_init] + res.best_trace,
        raw_trace=[res.e_init] + res.energy_trace,
        error=res.error,
    )
