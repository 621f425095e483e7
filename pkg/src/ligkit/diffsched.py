"""Forward noising channels and loss weights for pocket-conditioned diffusion.

Coordinates use a Gaussian channel, ``x_t ~ N(sqrt(abar_t) x0, (1 - abar_t) I)``;
atom types a categorical channel, ``v_t ~ Cat(abar_t v0 + (1 - abar_t) / K)``.
Steps are 1-based; ``t = 0`` denotes clean data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VarianceSchedule",
    "make_schedule",
    "schedule_from_alphas",
    "noise_coordinates",
    "noise_types",
    "perturb_protein",
    "ScoreTargets",
    "score_targets",
    "coordinate_log_density",
]

# sigmoid beta range TargetDiff uses for atom positions
TARGETDIFF_BETA_START = 1e-7
TARGETDIFF_BETA_END = 2e-3
PROTEIN_NOISE_STD = 0.1


@dataclass(frozen=True)
class VarianceSchedule:
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma_sq: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    kind: str = "custom"

    @property
    def T(self) -> int:
        return len(self.alpha)

    def alpha_bar_at(self, t: int) -> float:
        if t == 0:
            return 1.0
        self._check(t)
        return float(self.alpha_bar[t - 1])

    def _check(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise ValueError(f"step {t} outside 1..{self.T}")

    def table(self) -> list[tuple[int, float, float, float, float]]:
        return [
            (t + 1, float(a), float(ab), float(l), float(g))
            for t, (a, ab, l, g) in enumerate(zip(self.alpha, self.alpha_bar, self.lam, self.gamma))
        ]


def schedule_from_alphas(alphas, kind: str = "custom") -> VarianceSchedule:
    alpha = np.asarray(alphas, dtype=float).ravel()
    if len(alpha) == 0:
        raise ValueError("schedule needs at least one step")
    if np.any(~np.isfinite(alpha)) or np.any(alpha <= 0) or np.any(alpha >= 1):
        raise ValueError("every alpha_t must lie in (0, 1)")
    alpha_bar = np.cumprod(alpha)
    sigma_sq = 1.0 - alpha
    return VarianceSchedule(
        alpha=alpha,
        alpha_bar=alpha_bar,
        sigma_sq=sigma_sq,
        lam=sigma_sq / alpha**2,
        gamma=1.0 - alpha_bar,
        kind=kind,
    )


def make_schedule(
    T: int = 1000,
    kind: str = "sigmoid",
    beta_start: float | None = None,
    beta_end: float | None = None,
    s: float = 0.008,
) -> VarianceSchedule:
    """Build a schedule of ``T`` steps.

    kind: ``"linear"`` (betas evenly spaced), ``"sigmoid"`` (betas follow a
    logistic curve over [-6, 6]) or ``"cosine"`` (``abar`` follows the
    squared-cosine curve with offset ``s``, betas clipped at 0.999).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if kind == "linear":
        b0 = 1e-4 if beta_start is None else beta_start
        b1 = 2e-2 if beta_end is None else beta_end
        betas = np.linspace(b0, b1, T)
    elif kind == "sigmoid":
        b0 = TARGETDIFF_BETA_START if beta_start is None else beta_start
        b1 = TARGETDIFF_BETA_END if beta_end is None else beta_end
        x = np.linspace(-6, 6, T)
        betas = 1.0 / (1.0 + np.exp(-x)) * (b1 - b0) + b0
    elif kind == "cosine":
        steps = np.arange(T + 1, dtype=float) / T
        f = np.cos((steps + s) / (1 + s) * np.pi / 2) ** 2
        abar = f / f[0]
        betas = np.clip(1.0 - abar[1:] / abar[:-1], 0.0, 0.999)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    return schedule_from_alphas(1.0 - betas, kind)


def noise_coordinates(x0, t: int, schedule: VarianceSchedule, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``x_t`` given clean coordinates; returns ``(x_t, eps)``."""
    x0 = np.asarray(x0, dtype=float)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(x0.shape)
    if t == 0:
        return x0.copy(), np.zeros_like(x0)
    ab = schedule.alpha_bar_at(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps, eps


def _check_one_hot(v0: np.ndarray) -> None:
    ok = np.all((v0 == 0) | (v0 == 1), axis=-1) & (v0.sum(axis=-1) == 1)
    if not np.all(ok):
        raise ValueError("v0 must be one-hot along its last axis")


def noise_types(v0, t: int, schedule: VarianceSchedule | None = None, seed=None, alpha_bar: float | None = None):
    """Sample noisy atom types; returns ``(category_index, probabilities)``.

    ``v0`` is one-hot along its last axis (shape ``(K,)`` or ``(N, K)``).
    Pass ``alpha_bar`` directly to bypass the schedule lookup.
    """
    v0 = np.asarray(v0, dtype=float)
    _check_one_hot(v0)
    K = v0.shape[-1]
    ab = alpha_bar if alpha_bar is not None else schedule.alpha_bar_at(t)
    p = ab * v0 + (1.0 - ab) / K
    rng = np.random.default_rng(seed)
    flat = p.reshape(-1, K)
    cdf = np.cumsum(flat, axis=1)
    u = rng.random((len(flat), 1)) * cdf[:, -1:]
    idx = np.minimum((u >= cdf).sum(axis=1), K - 1)
    return idx.reshape(p.shape[:-1]), p


def perturb_protein(x, seed=None, sigma: float = PROTEIN_NOISE_STD) -> np.ndarray:
    """Add i.i.d. ``N(0, sigma^2)`` noise to every coordinate component."""
    x = np.asarray(x, dtype=float)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    return x + sigma * rng.standard_normal(x.shape)


def coordinate_log_density(x_t, x0, t: int, schedule: VarianceSchedule) -> float:
    """``log q_t(x_t | x0)`` of the Gaussian coordinate channel."""
    x_t = np.asarray(x_t, dtype=float)
    ab = schedule.alpha_bar_at(t)
    var = 1.0 - ab
    r = x_t - np.sqrt(ab) * np.asarray(x0, dtype=float)
    return float(-0.5 * np.sum(r * r) / var - 0.5 * r.size * np.log(2 * np.pi * var))


@dataclass(frozen=True)
class ScoreTargets:
    target: np.ndarray
    weight: float
    type_weight: float
    coord_loss: float | None = None
    type_loss: float | None = None


def score_targets(
    x0,
    x_t,
    t: int,
    schedule: VarianceSchedule,
    prediction=None,
    type_logits=None,
    v0=None,
) -> ScoreTargets:
    """Closed-form score ``-(x_t - sqrt(abar) x0) / (1 - abar)`` and its loss weights.

    With ``prediction``, ``coord_loss = lambda_t * ||prediction - target||^2``.
    With ``type_logits`` and one-hot ``v0``, ``type_loss`` is ``gamma_t``
    times the summed cross-entropy.
    """
    schedule._check(t)
    x0 = np.asarray(x0, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    ab = schedule.alpha_bar_at(t)
    target = -(x_t - np.sqrt(ab) * x0) / (1.0 - ab)
    lam = float(schedule.lam[t - 1])
    gam = float(schedule.gamma[t - 1])
    coord_loss = None
    if prediction is not None:
        diff = np.asarray(prediction, dtype=float) - target
        coord_loss = lam * float(np.sum(diff * diff))
    type_loss = None
    if type_logits is not None:
        if v0 is None:
            raise ValueError("type_logits requires v0")
        v0 = np.asarray(v0, dtype=float)
        _check_one_hot(v0)
        logits = np.asarray(type_logits, dtype=float)
        m = logits.max(axis=-1, keepdims=True)
        log_softmax = logits - m - np.log(np.sum(np.exp(logits - m), axis=-1, keepdims=True))
        type_loss = gam * float(-np.sum(v0 * log_softmax))
    return ScoreTargets(target, lam, gam, coord_loss, type_loss)
