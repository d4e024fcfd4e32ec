"""Shared state containers for the attention agent.

The agent's belief vector is a flat concatenation of four blocks
(symbolic cue, camera proprioception, visual encoding, covert focus),
carried in generalized coordinates up to first temporal order
(value + rate).  This module owns that layout, the sensory bundle,
diagonal precision containers, prediction errors, and the scalar
free-energy bookkeeping used for monitoring runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Reserved off-screen cue reading used when no symbolic cue is displayed.
CUE_SENTINEL = (-2.0, -2.0)


class NumericError(RuntimeError):
    """Raised when a computation produces non-finite values."""


@dataclass(frozen=True)
class BeliefLayout:
    """Index map of the flat belief vector.

    Block order: cue (2), proprio (2: pitch, yaw), visual (>=3: target u,
    target v, target presence, then free latents), covert focus
    (3: amplitude, u, v).
    """

    cue_dim: int = 2
    proprio_dim: int = 2
    visual_dim: int = 3
    focus_dim: int = 3

    def __post_init__(self):
        if self.cue_dim != 2 or self.proprio_dim != 2 or self.focus_dim != 3:
            raise ValueError("cue/proprio/focus blocks have fixed sizes 2/2/3")
        if self.visual_dim < 3:
            raise ValueError("visual block needs at least (u, v, presence)")

    @property
    def total_dim(self) -> int:
        return self.cue_dim + self.proprio_dim + self.visual_dim + self.focus_dim

    # slices into the flat vector
    @property
    def cue(self) -> slice:
        return slice(0, 2)

    @property
    def proprio(self) -> slice:
        return slice(2, 4)

    @property
    def visual(self) -> slice:
        return slice(4, 4 + self.visual_dim)

    @property
    def focus(self) -> slice:
        return slice(4 + self.visual_dim, 7 + self.visual_dim)

    # absolute indices of frequently used scalars
    @property
    def visual_u(self) -> int:
        return 4

    @property
    def visual_v(self) -> int:
        return 5

    @property
    def presence(self) -> int:
        return 6

    @property
    def focus_amp(self) -> int:
        return 4 + self.visual_dim

    @property
    def focus_u(self) -> int:
        return 5 + self.visual_dim

    @property
    def focus_v(self) -> int:
        return 6 + self.visual_dim

    def split(self, vec: np.ndarray) -> dict[str, np.ndarray]:
        """Split a flat length-M vector into named blocks (views)."""
        vec = np.asarray(vec)
        if vec.shape != (self.total_dim,):
            raise ValueError(f"expected shape ({self.total_dim},), got {vec.shape}")
        return {
            "cue": vec[self.cue],
            "proprio": vec[self.proprio],
            "visual": vec[self.visual],
            "focus": vec[self.focus],
        }

    def concat(self, blocks: dict[str, np.ndarray]) -> np.ndarray:
        """Inverse of :meth:`split`."""
        return np.concatenate(
            [blocks["cue"], blocks["proprio"], blocks["visual"], blocks["focus"]]
        )


@dataclass
class GeneralizedBelief:
    """Belief vector and its first temporal derivative."""

    mu: np.ndarray
    mu_prime: np.ndarray
    layout: BeliefLayout = field(default_factory=BeliefLayout)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.mu_prime = np.asarray(self.mu_prime, dtype=float)
        m = self.layout.total_dim
        if self.mu.shape != (m,) or self.mu_prime.shape != (m,):
            raise ValueError(f"belief vectors must have shape ({m},)")

    @classmethod
    def zeros(cls, layout: BeliefLayout | None = None) -> "GeneralizedBelief":
        layout = layout or BeliefLayout()
        m = layout.total_dim
        return cls(np.zeros(m), np.zeros(m), layout)

    def copy(self) -> "GeneralizedBelief":
        return GeneralizedBelief(self.mu.copy(), self.mu_prime.copy(), self.layout)

    def enforce_bounds(self) -> None:
        """Clamp presence to [0,1], focus amplitude to >= 0, focus center
        to the image square.  Applied after every update step."""
        lay = self.layout
        self.mu[lay.presence] = min(max(self.mu[lay.presence], 0.0), 1.0)
        self.mu[lay.focus_amp] = max(self.mu[lay.focus_amp], 0.0)
        self.mu[lay.focus_u] = min(max(self.mu[lay.focus_u], -1.0), 1.0)
        self.mu[lay.focus_v] = min(max(self.mu[lay.focus_v], -1.0), 1.0)
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.mu_prime))):
            raise NumericError("belief contains non-finite entries")


@dataclass
class SensoryBundle:
    """One time step of observations.

    proprio: camera (pitch, yaw) in radians.
    cue: symbolic cue in normalized image coordinates, or the off-screen
         sentinel when absent.
    visual: 32x32x3 RGB image with entries in [0, 1].
    """

    proprio: np.ndarray
    cue: np.ndarray
    visual: np.ndarray

    def __post_init__(self):
        self.proprio = np.asarray(self.proprio, dtype=float)
        self.cue = np.asarray(self.cue, dtype=float)
        self.visual = np.asarray(self.visual, dtype=float)
        if self.proprio.shape != (2,) or self.cue.shape != (2,):
            raise ValueError("proprio and cue channels are 2-vectors")
        if self.visual.ndim != 3 or self.visual.shape[2] != 3:
            raise ValueError("visual channel must be HxWx3")

    @property
    def visual_flat(self) -> np.ndarray:
        return self.visual.reshape(-1)

    @property
    def cue_present(self) -> bool:
        return bool(np.max(np.abs(self.cue - np.asarray(CUE_SENTINEL))) > 1e-9)


@dataclass
class DiagonalPrecision:
    """Diagonal precision matrix stored as its diagonal.

    Entries are floored at construction, so the matrix is positive
    definite by construction.
    """

    diag: np.ndarray
    floor: float = 1e-3

    def __post_init__(self):
        if self.floor <= 0:
            raise ValueError("precision floor must be positive")
        self.diag = np.maximum(np.asarray(self.diag, dtype=float), self.floor)

    @classmethod
    def constant(cls, value: float, n: int, floor: float = 1e-3) -> "DiagonalPrecision":
        return cls(np.full(n, float(value)), floor)

    def __len__(self) -> int:
        return len(self.diag)

    def log_det(self) -> float:
        return float(np.sum(np.log(self.diag)))

    def scaled(self, factor: float) -> "DiagonalPrecision":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return replace(self, diag=self.diag * factor, floor=self.floor * factor)


@dataclass
class PredictionError:
    """Per-channel sensory residuals and the dynamics residual.

    Sensory residuals are observation minus prediction per channel;
    the dynamics residual is the belief rate minus the intention flow.
    """

    e_proprio: np.ndarray
    e_cue: np.ndarray
    e_visual: np.ndarray
    e_mu: np.ndarray


def shift(gb: GeneralizedBelief) -> np.ndarray:
    """Temporal shift of the generalized belief: the value slot of the
    shifted state is the current rate; higher orders are truncated."""
    return gb.mu_prime.copy()


def weighted_sq_error(e: np.ndarray, pi: DiagonalPrecision) -> float:
    """Precision-weighted squared error sum(pi_i * e_i^2)."""
    e = np.asarray(e, dtype=float)
    if e.shape != pi.diag.shape:
        raise ValueError(f"dimension mismatch: error {e.shape} vs precision {pi.diag.shape}")
    return float(np.dot(pi.diag, e * e))


def free_energy(
    errors: PredictionError,
    pi_visual: DiagonalPrecision,
    pi_proprio: DiagonalPrecision,
    pi_cue: DiagonalPrecision,
    pi_mu: DiagonalPrecision,
) -> float:
    """Scalar free energy up to an additive constant.

    Sum over channels of 0.5 * (e' Pi e - ln|Pi|) plus the same for the
    dynamics residual.  Used for monitoring runs; the update laws use
    analytic gradients and never differentiate this number.
    """
    total = 0.0
    for e, pi in (
        (errors.e_visual, pi_visual),
        (errors.e_proprio, pi_proprio),
        (errors.e_cue, pi_cue),
        (errors.e_mu, pi_mu),
    ):
        total += 0.5 * (weighted_sq_error(e, pi) - pi.log_det())
    if not np.isfinite(total):
        raise NumericError("free energy is non-finite")
    return total
