"""Generative sensor models mapping beliefs to predicted observations.

Three channels: an analytic Gaussian-blob renderer for the visual
channel (a differentiable stand-in for a learned decoder, with the same
(u, v, presence) leading latents), and identity maps for the
proprioceptive and interoceptive channels.  Every model returns its
prediction together with a closed-form Jacobian so the update engine
never needs numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class BlobRendererConfig:
    """Parameters of the analytic target renderer.

    Coordinates are normalized so the image spans [-1, 1] in u
    (columns, left to right) and v (rows, top to bottom); blob_sigma is
    in those units.
    """

    image_size: int = 32
    blob_sigma: float = 0.12
    background_color: tuple[float, float, float] = (0.5, 0.5, 0.5)
    blob_color: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be positive")
        for c in (*self.background_color, *self.blob_color):
            if not 0.0 <= c <= 1.0:
                raise ValueError("colors must lie in [0, 1]")

    @property
    def n_pixels(self) -> int:
        return self.image_size * self.image_size

    @property
    def n_values(self) -> int:
        return self.n_pixels * 3


@dataclass
class VisualPrediction:
    """Rendered image and its Jacobian w.r.t. the visual belief block."""

    pixels: np.ndarray  # (size, size, 3)
    jacobian: np.ndarray  # (size*size*3, visual_dim); free-latent columns are zero

    @property
    def pixels_flat(self) -> np.ndarray:
        return self.pixels.reshape(-1)


def pixel_grid(image_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized center coordinates of every pixel.

    Returns (U, V) arrays of shape (size, size): U varies along columns,
    V along rows, both in (-1, 1).
    """
    half = image_size / 2.0
    centers = (np.arange(image_size) + 0.5) / half - 1.0
    V, U = np.meshgrid(centers, centers, indexing="ij")
    return U, V


class _GridCache:
    """Per-size cache of coordinate grids (they never change)."""

    def __init__(self):
        self._grids: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def get(self, image_size: int) -> tuple[np.ndarray, np.ndarray]:
        if image_size not in self._grids:
            self._grids[image_size] = pixel_grid(image_size)
        return self._grids[image_size]


_GRIDS = _GridCache()


def render(visual_belief: np.ndarray, cfg: BlobRendererConfig) -> VisualPrediction:
    """Render the believed target as a Gaussian intensity blob.

    pixel(x, y) = background + presence * exp(-((x-u)^2 + (y-v)^2) / (2 sigma^2))
                  * (blob_color - background), per channel.

    Out-of-range (u, v, presence) values are clamped to the valid domain
    before rendering.  The Jacobian columns beyond (u, v, presence) are
    zero (free latents do not reach the image).
    """
    visual_belief = np.asarray(visual_belief, dtype=float)
    if visual_belief.ndim != 1 or visual_belief.size < 3:
        raise ValueError("visual belief needs at least (u, v, presence)")
    u = float(np.clip(visual_belief[0], -1.0, 1.0))
    v = float(np.clip(visual_belief[1], -1.0, 1.0))
    presence = float(np.clip(visual_belief[2], 0.0, 1.0))

    U, V = _GRIDS.get(cfg.image_size)
    bg = np.asarray(cfg.background_color)
    delta = np.asarray(cfg.blob_color) - bg

    du = U - u
    dv = V - v
    g = np.exp(-(du * du + dv * dv) / (2.0 * cfg.blob_sigma**2))

    pixels = bg[None, None, :] + (presence * g)[:, :, None] * delta[None, None, :]

    inv_s2 = 1.0 / cfg.blob_sigma**2
    n = cfg.n_values
    jac = np.zeros((n, visual_belief.size))
    # d pixel / du = presence * g * (x - u) / sigma^2 * delta, same pattern for v
    jac[:, 0] = ((presence * g * du * inv_s2)[:, :, None] * delta).reshape(-1)
    jac[:, 1] = ((presence * g * dv * inv_s2)[:, :, None] * delta).reshape(-1)
    jac[:, 2] = (g[:, :, None] * delta).reshape(-1)
    return VisualPrediction(pixels=pixels, jacobian=jac)


def proprio_predict(proprio_belief: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Identity map from the camera-angle belief to predicted angles."""
    p = np.asarray(proprio_belief, dtype=float)
    return p.copy(), np.eye(p.size)


def intero_predict(cue_belief: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Identity map from the cue belief to the predicted cue signal."""
    c = np.asarray(cue_belief, dtype=float)
    return c.copy(), np.eye(c.size)


class VisualModel(Protocol):
    """Anything that can stand in for the blob renderer.

    The update engine only ever calls predict/jacobian with the visual
    belief block, so alternative exteroceptive models (e.g. a learned
    decoder) plug in without touching the agent.
    """

    def predict(self, visual_belief: np.ndarray) -> np.ndarray:
        """Flat predicted image, shape (n_values,)."""
        ...

    def jacobian(self, visual_belief: np.ndarray) -> np.ndarray:
        """d prediction / d belief, shape (n_values, visual_dim)."""
        ...


class BlobVisualModel:
    """Renderer wrapped in the VisualModel interface."""

    def __init__(self, cfg: BlobRendererConfig | None = None):
        self.cfg = cfg or BlobRendererConfig()

    def predict(self, visual_belief: np.ndarray) -> np.ndarray:
        return render(visual_belief, self.cfg).pixels_flat

    def jacobian(self, visual_belief: np.ndarray) -> np.ndarray:
        return render(visual_belief, self.cfg).jacobian

    def predict_with_jacobian(self, visual_belief: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = render(visual_belief, self.cfg)
        return out.pixels_flat, out.jacobian
