"""Rigid-body transforms parameterized by translation + axis-angle vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["skew", "rodrigues", "RigidPose", "compose_update", "apply_pose", "orthonormalize"]

_SMALL_ANGLE = 1e-12
_DRIFT_TOL = 1e-9


def skew(w: np.ndarray) -> np.ndarray:
    """Cross-product matrix: ``skew(w) @ v == np.cross(w, v)``."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def rodrigues(omega) -> np.ndarray:
    """Rotation matrix for the axis-angle vector ``omega`` (radians)."""
    w = np.asarray(omega, dtype=float).reshape(3)
    theta = float(np.linalg.norm(w))
    W = skew(w)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + W + 0.5 * (W @ W)
    K = W / theta
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1
        Q = U @ Vt
    return Q


@dataclass(frozen=True)
class RigidPose:
    """``X' = R (X - c) + c + t`` with ``c`` the rotation center.

    ``u = (dx, dy, dz, wx, wy, wz)`` is the parameter vector the pose was
    realized from (translation in Angstrom, rotation vector in radians).
    Poses built by :func:`compose_update` keep the accumulated ``u`` only
    approximately meaningful; ``R`` and ``t`` are authoritative.
    """

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    u: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        for name, shape in (("R", (3, 3)), ("t", (3,)), ("center", (3,)), ("u", (6,))):
            arr = np.array(getattr(self, name), dtype=float).reshape(shape)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls, center=(0.0, 0.0, 0.0)) -> "RigidPose":
        return cls(center=center)

    @classmethod
    def from_vector(cls, u, center=(0.0, 0.0, 0.0)) -> "RigidPose":
        u = np.asarray(u, dtype=float).reshape(6)
        return cls(R=rodrigues(u[3:]), t=u[:3], center=center, u=u)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return apply_pose(self, X)

    def as_dict(self) -> dict:
        return {
            "u": self.u.tolist(),
            "R": self.R.tolist(),
            "t": self.t.tolist(),
            "center": self.center.tolist(),
        }


def compose_update(pose: RigidPose, omega, delta) -> RigidPose:
    """Left-compose a small rotation ``exp(omega^x)`` and add translation ``delta``."""
    omega = np.asarray(omega, dtype=float).reshape(3)
    delta = np.asarray(delta, dtype=float).reshape(3)
    R = rodrigues(omega) @ pose.R
    if np.abs(R.T @ R - np.eye(3)).max() > _DRIFT_TOL:
        R = orthonormalize(R)
    u = pose.u + np.concatenate([delta, omega])
    return RigidPose(R=R, t=pose.t + delta, center=pose.center, u=u)


_I3 = np.eye(3)


def apply_pose(pose: RigidPose, X: np.ndarray) -> np.ndarray:
    """Transform row-wise coordinates ``X`` of shape ``(N, 3)``."""
    X = np.asarray(X, dtype=float)
    if np.array_equal(pose.R, _I3):
        # skip the round trip through the center so identity is exact
        return X + pose.t
    c = pose.center
    return (X - c) @ pose.R.T + c + pose.t
