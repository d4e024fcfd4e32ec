"""Simulated pitch/yaw camera looking at a scene with one optional red sphere.

A small-angle pinhole projection maps the angular offset between target
and camera into normalized image coordinates; the same blob renderer
that serves as the agent's generative model draws the observed image,
so perception is exact when beliefs match the world.  The symbolic cue
channel carries normalized coordinates or an off-screen sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .gencoords import CUE_SENTINEL, SensoryBundle
from .genmodels import BlobRendererConfig, render


@dataclass(frozen=True)
class CameraModel:
    """Pinhole pan/tilt camera.

    focal converts radians of angular offset into normalized image
    units; the default makes the half image width (1.0) correspond to
    0.3 rad.  Joint limits are symmetric about zero.
    """

    focal: float = 1.0 / 0.3
    pitch_limit: float = 0.35
    yaw_limit: float = 0.35
    image_size: int = 32

    def __post_init__(self):
        if self.focal <= 0 or self.pitch_limit <= 0 or self.yaw_limit <= 0:
            raise ValueError("focal and joint limits must be positive")

    def clip_angles(self, angles: np.ndarray) -> np.ndarray:
        return np.array([
            np.clip(angles[0], -self.pitch_limit, self.pitch_limit),
            np.clip(angles[1], -self.yaw_limit, self.yaw_limit),
        ])


@dataclass
class SceneState:
    """World state for one trial step.

    target_dir is the (pitch, yaw) direction of the target in the world
    frame; camera holds the current (pitch, yaw) orientation.
    cue_pos is in normalized image coordinates or None when no symbolic
    cue is shown.
    """

    target_dir: np.ndarray
    target_visible: bool
    cue_pos: np.ndarray | None
    camera: np.ndarray

    def __post_init__(self):
        self.target_dir = np.asarray(self.target_dir, dtype=float)
        self.camera = np.asarray(self.camera, dtype=float)
        if self.cue_pos is not None:
            self.cue_pos = np.asarray(self.cue_pos, dtype=float)

    @classmethod
    def empty(cls) -> "SceneState":
        return cls(np.zeros(2), False, None, np.zeros(2))


def target_image_position(state: SceneState, cam: CameraModel) -> np.ndarray:
    """Normalized (u, v) of the target in the current view."""
    u = cam.focal * (state.target_dir[1] - state.camera[1])
    v = cam.focal * (state.target_dir[0] - state.camera[0])
    return np.array([u, v])


def observe(
    state: SceneState, cam: CameraModel, renderer: BlobRendererConfig
) -> SensoryBundle:
    """Project the scene into one sensory bundle.

    The target renders as a blob at its projected position when visible
    and inside the frame; proprioception reads the camera angles
    directly; the cue channel reads cue_pos or the sentinel.
    """
    uv = target_image_position(state, cam)
    in_frame = bool(np.max(np.abs(uv)) <= 1.0)
    presence = 1.0 if (state.target_visible and in_frame) else 0.0
    visual = render(np.array([uv[0], uv[1], presence]), renderer).pixels
    cue = np.asarray(state.cue_pos, dtype=float) if state.cue_pos is not None \
        else np.array(CUE_SENTINEL)
    return SensoryBundle(proprio=state.camera.copy(), cue=cue, visual=visual)


def apply_action(
    state: SceneState, a_dot: np.ndarray, cam: CameraModel, dt: float
) -> tuple[SceneState, bool]:
    """Integrate the action rate into the camera angles.

    Returns the new state and a flag marking whether the joint limits
    clipped the motion.
    """
    raw = state.camera + dt * np.asarray(a_dot, dtype=float)
    clipped = cam.clip_angles(raw)
    hit_limit = bool(np.any(raw != clipped))
    return replace(state, camera=clipped), hit_limit


@dataclass(frozen=True)
class SensoryActionJacobian:
    """How sensory readings respond to the action rate.

    proprio: d(proprio)/d(a) = dt * I, the angles integrate the rate.
    centroid_per_angle: d(r_u, r_v)/d(yaw, pitch) = -focal * I -- image
    content shifts opposite to camera motion.  None when no red is
    visible (signaled, not thrown).
    """

    proprio: np.ndarray
    centroid_per_angle: np.ndarray | None
    dt: float

    @property
    def centroid_per_action(self) -> np.ndarray | None:
        """d(r_u, r_v)/d(a_pitch, a_yaw) over one step: columns follow
        the action order (pitch, yaw)."""
        if self.centroid_per_angle is None:
            return None
        # r_u responds to yaw (column 1), r_v to pitch (column 0)
        scale = self.centroid_per_angle[0, 0] * self.dt
        return np.array([[0.0, scale], [scale, 0.0]])


def sensory_action_jacobian(
    s: SensoryBundle, cam: CameraModel, dt: float = 1.0,
    red_visible: bool | None = None,
) -> SensoryActionJacobian:
    """Inverse mapping pieces from sensory data to actions.

    red_visible may be passed when the caller already extracted the
    centroid; otherwise visibility is read off the image.
    """
    if red_visible is None:
        from .attention import red_centroid

        red_visible = red_centroid(s.visual).present
    centroid_jac = -cam.focal * np.eye(2) if red_visible else None
    return SensoryActionJacobian(
        proprio=dt * np.eye(2), centroid_per_angle=centroid_jac, dt=dt
    )
