"""Dynamic visual sensory precision: the foveated field and its gradients.

Per-pixel precision is the sum of two log-dome radial profiles, one
centered on the covert focus belief (gain mu_amp) and one on the
centroid of red image content (fixed unit gain):

    pi(x, y) = amp/2 * (ln(1 - d_mu^2 / b^2) + c)
             + 1/2   * (ln(1 - d_r^2  / b^2) + c)

with distances measured in pixels (b is a couple of pixels wide, so the
dome is a tight fovea on the 32x32 image).  The log argument is clamped
and the result floored, which keeps the realized field positive
definite and non-increasing with distance.

Two distinct gradient objects come out of the field:

* ``dpi_dmu`` / ``dpi_dr`` -- exact derivatives of the realized
  (clamped) field.  Zero wherever a clamp or the floor pins the value.
  These back the log-determinant (trace) terms and match central finite
  differences of the field everywhere.

* ``capture_dmu`` / ``capture_dr`` -- the same expressions continued
  through the dome boundary: the log's argument is allowed to go
  negative, where the sign flips, so error mass beyond the dome pulls
  the dome toward itself.  This is the point of the log profile: a
  Gaussian dome's gradient always pushes the focus away from
  unexplained input, the continued log dome pulls it there.  Inside
  the dome and across a guard band around the singularity the kernel
  is zero (its potential is flat there), so captured attention parks
  on its target instead of being kicked around by residual errors
  under the fovea.  The capture kernels back the error-weighted update
  terms only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gencoords import DiagonalPrecision
from .genmodels import pixel_grid


@dataclass(frozen=True)
class AttentionConfig:
    """Parameters of the precision field.

    radius (b) and the coordinate scale are in pixels: a normalized
    image coordinate is multiplied by coord_scale (half the image side)
    before entering the radial profile.
    """

    radius: float = 2.6
    offset: float = 1.0
    coord_scale: float = 16.0
    image_size: int = 32
    log_clamp: float = 1e-3
    floor: float = 0.05
    kernel_q_floor: float = 0.35
    tau_mass: float = 0.5

    def __post_init__(self):
        if self.radius <= 0 or self.coord_scale <= 0:
            raise ValueError("radius and coord_scale must be positive")
        if self.floor <= 0 or self.log_clamp <= 0 or self.kernel_q_floor <= 0:
            raise ValueError("clamps must be positive")


@dataclass
class CovertFocus:
    """Amplitude and center of the focus dome, center in normalized units."""

    amp: float
    u: float
    v: float

    def __post_init__(self):
        if self.amp < 0:
            raise ValueError("focus amplitude must be non-negative")


@dataclass
class RedCentroid:
    """Soft (differentiable) centroid of red image content.

    mass is the summed per-pixel redness weight max(0, R - max(G, B));
    present is False when the mass falls below the configured threshold,
    in which case (u, v) are meaningless and the centroid dome is
    replaced by a uniform offset/2 contribution.
    """

    u: float
    v: float
    mass: float
    present: bool


@dataclass
class PrecisionField:
    """Field values plus every gradient the update laws consume.

    Per-pixel arrays have length image_size**2; the three color
    channels of a pixel share one precision value.  ``pi`` expands to
    full sensory length.  ``dpi_ds`` is the chain product
    dpi_dr @ dr_ds, kept factored (it is rank two).
    """

    pi_pixels: np.ndarray          # (n_pix,)
    dpi_dmu_pix: np.ndarray        # (n_pix, 3) exact, order (amp, u, v)
    capture_dmu_pix: np.ndarray    # (n_pix, 3) continued kernel
    dpi_dr_pix: np.ndarray         # (n_pix, 2) exact, order (r_u, r_v)
    capture_dr_pix: np.ndarray     # (n_pix, 2) continued kernel
    dr_ds: np.ndarray | None       # (2, n_pix*3) soft-centroid Jacobian, None if absent
    centroid: RedCentroid
    cfg: AttentionConfig
    floor_active: np.ndarray       # (n_pix,) bool, value pinned at the floor

    @property
    def n_pixels(self) -> int:
        return self.pi_pixels.size

    def _expand(self, arr: np.ndarray) -> np.ndarray:
        # repeat per-pixel rows across the three color channels
        return np.repeat(arr, 3, axis=0)

    @property
    def pi(self) -> DiagonalPrecision:
        return DiagonalPrecision(self._expand(self.pi_pixels), floor=self.cfg.floor)

    @property
    def dpi_dmu(self) -> np.ndarray:
        return self._expand(self.dpi_dmu_pix)

    @property
    def capture_dmu(self) -> np.ndarray:
        return self._expand(self.capture_dmu_pix)

    @property
    def dpi_dr(self) -> np.ndarray:
        return self._expand(self.dpi_dr_pix)

    @property
    def capture_dr(self) -> np.ndarray:
        return self._expand(self.capture_dr_pix)

    def dpi_ds_column(self, j: int) -> np.ndarray:
        """Column j of the (L x L) pixel-space gradient: d pi / d s_j."""
        if self.dr_ds is None:
            return np.zeros(3 * self.n_pixels)
        return self.dpi_dr @ self.dr_ds[:, j]


def redness(image: np.ndarray) -> np.ndarray:
    """Per-pixel redness weight max(0, R - max(G, B)), shape (H, W)."""
    image = np.asarray(image, dtype=float)
    return np.maximum(0.0, image[..., 0] - np.maximum(image[..., 1], image[..., 2]))


def red_centroid(image: np.ndarray, cfg: AttentionConfig | None = None) -> RedCentroid:
    """Redness-weighted mean position of the image, in normalized units.

    Absence of red (mass below tau_mass) is a valid state, not an error.
    """
    cfg = cfg or AttentionConfig()
    w = redness(image)
    mass = float(w.sum())
    if mass < cfg.tau_mass:
        return RedCentroid(u=0.0, v=0.0, mass=mass, present=False)
    U, V = pixel_grid(image.shape[0])
    return RedCentroid(
        u=float((w * U).sum() / mass),
        v=float((w * V).sum() / mass),
        mass=mass,
        present=True,
    )


def _dome_term(d2_px: np.ndarray, cfg: AttentionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Clamped log-dome profile and its argument q = 1 - d^2/b^2."""
    q = 1.0 - d2_px / cfg.radius**2
    term = 0.5 * (np.log(np.maximum(q, cfg.log_clamp)) + cfg.offset)
    return term, q


def _capture_inverse(q: np.ndarray, cfg: AttentionConfig) -> np.ndarray:
    """1/q on the attracting branch (q < -guard), zero elsewhere.

    The guard band keeps the kernel bounded near the dome boundary and
    flat across the dome interior; the matching potential is
    0.5 * (ln(max(-q, guard)) + c).
    """
    attracting = q < -cfg.kernel_q_floor
    return np.where(attracting, 1.0 / np.where(attracting, q, -1.0), 0.0)


def capture_potential(q: np.ndarray, cfg: AttentionConfig) -> np.ndarray:
    """Scalar potential whose exact gradient is the capture kernel."""
    return 0.5 * (np.log(np.maximum(-q, cfg.kernel_q_floor)) + cfg.offset)


def precision_at(
    x: float,
    y: float,
    focus: CovertFocus,
    centroid: RedCentroid | None,
    cfg: AttentionConfig | None = None,
) -> float:
    """Field value at one normalized point (matches the per-pixel field)."""
    cfg = cfg or AttentionConfig()
    s = cfg.coord_scale
    d2_mu = ((x - focus.u) * s) ** 2 + ((y - focus.v) * s) ** 2
    term_mu, _ = _dome_term(np.asarray(d2_mu), cfg)
    if centroid is not None and centroid.present:
        d2_r = ((x - centroid.u) * s) ** 2 + ((y - centroid.v) * s) ** 2
        term_r, _ = _dome_term(np.asarray(d2_r), cfg)
    else:
        term_r = 0.5 * cfg.offset
    return float(max(focus.amp * term_mu + term_r, cfg.floor))


def precision_field(
    focus: CovertFocus,
    image: np.ndarray,
    cfg: AttentionConfig | None = None,
    centroid: RedCentroid | None = None,
    compute_dr_ds: bool = True,
) -> PrecisionField:
    """Evaluate the field and all gradients over every pixel.

    The centroid may be passed in when the caller has already extracted
    it for this image; otherwise it is computed here.
    """
    cfg = cfg or AttentionConfig()
    if image.shape[0] != cfg.image_size:
        raise ValueError("image size does not match attention config")
    s = cfg.coord_scale
    b2 = cfg.radius**2
    U, V = pixel_grid(cfg.image_size)
    U = U.reshape(-1)
    V = V.reshape(-1)

    if centroid is None:
        centroid = red_centroid(image, cfg)

    # focus dome
    du = (U - focus.u) * s
    dv = (V - focus.v) * s
    q1 = 1.0 - (du * du + dv * dv) / b2
    log_q1 = np.log(np.maximum(q1, cfg.log_clamp))
    term_mu = 0.5 * (log_q1 + cfg.offset)

    # centroid dome (uniform contribution when no red is visible)
    if centroid.present:
        dru = (U - centroid.u) * s
        drv = (V - centroid.v) * s
        q2 = 1.0 - (dru * dru + drv * drv) / b2
        term_r = 0.5 * (np.log(np.maximum(q2, cfg.log_clamp)) + cfg.offset)
    else:
        q2 = None
        term_r = np.full_like(q1, 0.5 * cfg.offset)

    pi_raw = focus.amp * term_mu + term_r
    pi_pixels = np.maximum(pi_raw, cfg.floor)
    floor_active = pi_raw <= cfg.floor

    # exact gradients of the realized field: zero at ln-clamp and floor
    unfloored = ~floor_active
    ln_open = q1 > cfg.log_clamp
    s2_b2 = s * s / b2
    coef = np.where(unfloored & ln_open, focus.amp / q1, 0.0) * s2_b2
    dpi_dmu = np.empty((q1.size, 3))
    dpi_dmu[:, 0] = np.where(unfloored, term_mu, 0.0)
    dpi_dmu[:, 1] = coef * (U - focus.u)
    dpi_dmu[:, 2] = coef * (V - focus.v)

    # capture kernel: analytic continuation beyond the dome
    inv_q1 = _capture_inverse(q1, cfg)
    kcoef = focus.amp * inv_q1 * s2_b2
    capture_dmu = np.empty((q1.size, 3))
    capture_dmu[:, 0] = capture_potential(q1, cfg)
    capture_dmu[:, 1] = kcoef * (U - focus.u)
    capture_dmu[:, 2] = kcoef * (V - focus.v)

    dpi_dr = np.zeros((q1.size, 2))
    capture_dr = np.zeros((q1.size, 2))
    dr_ds = None
    if centroid.present:
        ln_open_r = q2 > cfg.log_clamp
        rcoef = np.where(unfloored & ln_open_r, 1.0 / q2, 0.0) * s2_b2
        dpi_dr[:, 0] = rcoef * (U - centroid.u)
        dpi_dr[:, 1] = rcoef * (V - centroid.v)
        inv_q2 = _capture_inverse(q2, cfg)
        capture_dr[:, 0] = inv_q2 * s2_b2 * (U - centroid.u)
        capture_dr[:, 1] = inv_q2 * s2_b2 * (V - centroid.v)
        if compute_dr_ds:
            dr_ds = _soft_centroid_jacobian(image, centroid, U, V)

    return PrecisionField(
        pi_pixels=pi_pixels,
        dpi_dmu_pix=dpi_dmu,
        capture_dmu_pix=capture_dmu,
        dpi_dr_pix=dpi_dr,
        capture_dr_pix=capture_dr,
        dr_ds=dr_ds,
        centroid=centroid,
        cfg=cfg,
        floor_active=floor_active,
    )


def _soft_centroid_jacobian(
    image: np.ndarray, centroid: RedCentroid, U: np.ndarray, V: np.ndarray
) -> np.ndarray:
    """d (r_u, r_v) / d s for the soft redness centroid, shape (2, n_pix*3).

    The redness weight w = max(0, R - max(G, B)) has subgradient +1 on
    the red channel and -1 on the larger of green/blue wherever w > 0,
    zero elsewhere; the centroid is the w-weighted mean position.
    """
    img = np.asarray(image, dtype=float)
    w = redness(img).reshape(-1)
    active = w > 0.0
    n_pix = w.size
    # dw/d(channel): (n_pix, 3)
    dw = np.zeros((n_pix, 3))
    g_ge_b = (img[..., 1] >= img[..., 2]).reshape(-1)
    dw[active, 0] = 1.0
    dw[active & g_ge_b, 1] = -1.0
    dw[active & ~g_ge_b, 2] = -1.0

    mass = centroid.mass
    # dr/dw_j = (pos_j - r) / mass
    du = (U - centroid.u) / mass
    dv = (V - centroid.v) / mass
    jac = np.empty((2, n_pix, 3))
    jac[0] = du[:, None] * dw
    jac[1] = dv[:, None] * dw
    return jac.reshape(2, n_pix * 3)
