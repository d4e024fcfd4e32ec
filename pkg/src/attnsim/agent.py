"""Belief and action update engine.

One step of the agent: read the three sensory channels, form prediction
errors against the generative models, evaluate the attention field, and
integrate the belief (value + rate) and action updates.

The belief rate-of-change sums, per Gaussian free-energy bookkeeping:

* likelihood pull: generative Jacobian transposed, precision-weighted
  sensory error, per channel;
* backward pull from the intention flow f = sum_k l_k (h_k - mu);
* forward coupling that keeps the rate consistent with the flow;
* attention terms on the covert-focus block: a log-determinant (trace)
  part from the realized field and an error-capture part driven by the
  continued kernel (see attention module).

Dynamics precisions are constant, so their gradient terms vanish and
only appear as zeros in the step trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np

from .attention import AttentionConfig, CovertFocus, PrecisionField, precision_field, red_centroid
from .gencoords import (
    CUE_SENTINEL,
    BeliefLayout,
    DiagonalPrecision,
    GeneralizedBelief,
    NumericError,
    PredictionError,
    SensoryBundle,
    free_energy,
)
from .genmodels import BlobRendererConfig, BlobVisualModel, VisualModel

ACTION_MODES = ("disabled", "top_down", "bottom_up", "both")


@dataclass
class Intention:
    """Flexible goal: an attractor over a subset of belief dimensions.

    target_fn maps the current belief to the attractor vector h (length
    M); jac_fn returns dh/dmu (M x M) for targets that read the belief,
    None meaning zero.  active_fn gates the intention on the current
    belief.  The flow it induces is gain * (h - mu) on masked
    dimensions, zero elsewhere.
    """

    id: str
    target_fn: Callable[[np.ndarray], np.ndarray]
    gain: float
    mask: np.ndarray
    jac_fn: Callable[[np.ndarray], np.ndarray] | None = None
    active_fn: Callable[[np.ndarray], bool] | None = None

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("intention gain must be positive")
        self.mask = np.asarray(self.mask, dtype=bool)

    def is_active(self, mu: np.ndarray) -> bool:
        return self.active_fn(mu) if self.active_fn is not None else True

    def flow(self, mu: np.ndarray) -> np.ndarray:
        """f(mu) = gain * (h(mu) - mu) on masked dims."""
        if not self.is_active(mu):
            return np.zeros_like(mu)
        h = self.target_fn(mu)
        return np.where(self.mask, self.gain * (h - mu), 0.0)

    def flow_jacobian(self, mu: np.ndarray) -> np.ndarray:
        """df/dmu, nonzero only on masked rows."""
        m = mu.size
        jac = np.zeros((m, m))
        if not self.is_active(mu):
            return jac
        rows = np.flatnonzero(self.mask)
        if self.jac_fn is not None:
            jac[rows, :] = self.gain * self.jac_fn(mu)[rows, :]
        jac[rows, rows] -= self.gain
        return jac


def total_flow(mu: np.ndarray, intents: Sequence[Intention]) -> np.ndarray:
    f = np.zeros_like(mu)
    for it in intents:
        f += it.flow(mu)
    return f


def total_flow_jacobian(mu: np.ndarray, intents: Sequence[Intention]) -> np.ndarray:
    jac = np.zeros((mu.size, mu.size))
    for it in intents:
        jac += it.flow_jacobian(mu)
    return jac


@dataclass(frozen=True)
class AgentConfig:
    """Gains, precisions and mode switches for one agent.

    All rates are per simulation step (dt multiplies them at
    integration time).  Precision-term gains are split per component
    because the amplitude channel saturates far faster than the center
    channels under the same kernel.
    """

    k_mu: float = 0.1
    k_a: float = 0.05
    dt: float = 1.0
    action_mode: str = "disabled"

    pi_proprio: float = 1.0
    pi_cue_present: float = 2.0
    # absence of a cue says nothing about where one was; the sentinel
    # reading gets (almost) no pull on the cue belief
    pi_cue_absent: float = 1e-3
    # overall gain of the visual channel relative to the attention
    # field's native scale; keeps the renderer's stiff position
    # Jacobian inside the stable integration regime
    pi_visual_scale: float = 0.12

    pi_mu_cue: float = 0.1
    pi_mu_proprio: float = 0.5
    pi_mu_visual: float = 0.3
    pi_mu_focus: float = 0.6

    trace_gain: float = 0.0
    trace_gain_amp: float = 0.01
    capture_gain: float = 0.25
    capture_gain_amp: float = 0.01
    action_trace_gain: float = 0.0
    action_capture_gain: float = 1.0

    amp_min: float = 0.2
    amp_max: float = 2.0
    vis_pos_bound: float = 1.3
    focal: float = 1.0 / 0.3

    layout: BeliefLayout = dc_field(default_factory=BeliefLayout)
    attention: AttentionConfig = dc_field(default_factory=AttentionConfig)
    renderer: BlobRendererConfig = dc_field(default_factory=BlobRendererConfig)

    def __post_init__(self):
        if self.action_mode not in ACTION_MODES:
            raise ValueError(f"action_mode must be one of {ACTION_MODES}")
        if min(self.k_mu, self.k_a, self.dt) <= 0:
            raise ValueError("k_mu, k_a and dt must be positive")
        if min(self.pi_proprio, self.pi_cue_present, self.pi_cue_absent,
               self.pi_mu_cue, self.pi_mu_proprio, self.pi_mu_visual,
               self.pi_mu_focus) <= 0:
            raise ValueError("precisions must be positive")

    def pi_mu_diag(self) -> np.ndarray:
        lay = self.layout
        diag = np.empty(lay.total_dim)
        diag[lay.cue] = self.pi_mu_cue
        diag[lay.proprio] = self.pi_mu_proprio
        diag[lay.visual] = self.pi_mu_visual
        diag[lay.focus] = self.pi_mu_focus
        return diag


@dataclass
class StepTrace:
    """Diagnostics for one belief/action step."""

    free_energy: float
    mu: np.ndarray
    mu_prime: np.ndarray
    action: np.ndarray
    likelihood_mag: float
    backward_mag: float
    forward_mag: float
    sensory_precision_mag: float
    dynamics_precision_mag: float  # identically zero: dynamics precisions are constant


@dataclass
class TermBundle:
    """The named pieces of one belief update, before integration."""

    e_cue: np.ndarray
    e_proprio: np.ndarray
    e_visual: np.ndarray
    e_mu: np.ndarray
    likelihood: np.ndarray        # (M,)
    backward: np.ndarray          # (M,)
    forward: np.ndarray           # (M,) rate update -Pi_mu e_mu
    precision_trace: np.ndarray   # (3,) on (amp, u, v)
    precision_capture: np.ndarray  # (3,)
    field: PrecisionField
    pi_cue_value: float


@dataclass
class StepResult:
    belief: GeneralizedBelief
    a_dot: np.ndarray
    trace: StepTrace | None
    bottom_up_available: bool


class Agent:
    """One trial's inference engine; strictly sequential stepping."""

    def __init__(self, cfg: AgentConfig | None = None,
                 visual_model: VisualModel | None = None):
        self.cfg = cfg or AgentConfig()
        self.visual_model = visual_model or BlobVisualModel(self.cfg.renderer)
        self.layout = self.cfg.layout
        self._pi_mu = self.cfg.pi_mu_diag()

    def initial_belief(self) -> GeneralizedBelief:
        """Neutral starting state: cue at the sentinel, camera-aligned
        proprioception, empty visual scene, focus dome centered."""
        gb = GeneralizedBelief.zeros(self.layout)
        gb.mu[self.layout.cue] = CUE_SENTINEL
        gb.mu[self.layout.focus_amp] = 1.0
        return gb

    # ----- term computation -------------------------------------------------

    def focus_of(self, mu: np.ndarray) -> CovertFocus:
        lay = self.layout
        return CovertFocus(amp=float(mu[lay.focus_amp]),
                           u=float(mu[lay.focus_u]),
                           v=float(mu[lay.focus_v]))

    def attention_field(self, mu: np.ndarray, s: SensoryBundle,
                        compute_dr_ds: bool = False) -> PrecisionField:
        return precision_field(self.focus_of(mu), s.visual, self.cfg.attention,
                               compute_dr_ds=compute_dr_ds)

    def _visual_prediction(self, visual_belief: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        fused = getattr(self.visual_model, "predict_with_jacobian", None)
        if fused is not None:
            return fused(visual_belief)
        return (self.visual_model.predict(visual_belief),
                self.visual_model.jacobian(visual_belief))

    def compute_terms(self, gb: GeneralizedBelief, s: SensoryBundle,
                      intents: Sequence[Intention],
                      field: PrecisionField | None = None) -> TermBundle:
        cfg = self.cfg
        lay = self.layout
        mu, mup = gb.mu, gb.mu_prime

        p_vis, jac_vis = self._visual_prediction(mu[lay.visual])
        e_cue = s.cue - mu[lay.cue]
        e_prop = s.proprio - mu[lay.proprio]
        e_vis = s.visual_flat - p_vis

        if field is None:
            field = self.attention_field(mu, s)
        pi_vis = cfg.pi_visual_scale * np.repeat(field.pi_pixels, 3)
        pi_cue_value = cfg.pi_cue_present if s.cue_present else cfg.pi_cue_absent

        likelihood = np.zeros(lay.total_dim)
        likelihood[lay.cue] = pi_cue_value * e_cue
        likelihood[lay.proprio] = cfg.pi_proprio * e_prop
        likelihood[lay.visual] = jac_vis.T @ (pi_vis * e_vis)

        f = total_flow(mu, intents)
        e_mu = mup - f
        dfdmu = total_flow_jacobian(mu, intents)
        backward = dfdmu.T @ (self._pi_mu * e_mu)
        forward = -self._pi_mu * e_mu

        # attention terms live on the focus block; channels share the
        # per-pixel field, so channel sums reduce to pixel sums
        e2_pix = (e_vis * e_vis).reshape(-1, 3).sum(axis=1)
        precision_trace = 1.5 * (field.dpi_dmu_pix / field.pi_pixels[:, None]).sum(axis=0)
        precision_capture = -0.5 * (e2_pix[:, None] * field.capture_dmu_pix).sum(axis=0)

        return TermBundle(
            e_cue=e_cue, e_proprio=e_prop, e_visual=e_vis, e_mu=e_mu,
            likelihood=likelihood, backward=backward, forward=forward,
            precision_trace=precision_trace, precision_capture=precision_capture,
            field=field, pi_cue_value=pi_cue_value,
        )


    # ----- public step operations -------------------------------------------

    def belief_step(self, gb: GeneralizedBelief, s: SensoryBundle,
                    intents: Sequence[Intention],
                    field: PrecisionField | None = None,
                    terms: TermBundle | None = None) -> GeneralizedBelief:
        """Integrate one belief update; returns a new belief."""
        cfg = self.cfg
        lay = self.layout
        if terms is None:
            terms = self.compute_terms(gb, s, intents, field)

        mu_dot = gb.mu_prime + terms.likelihood + terms.backward
        prec = np.empty(3)
        prec[0] = (cfg.trace_gain_amp * terms.precision_trace[0]
                   + cfg.capture_gain_amp * terms.precision_capture[0])
        prec[1:] = (cfg.trace_gain * terms.precision_trace[1:]
                    + cfg.capture_gain * terms.precision_capture[1:])
        mu_dot[lay.focus] += prec

        if not np.all(np.isfinite(mu_dot)):
            raise NumericError("non-finite belief gradient; aborting step")

        new = GeneralizedBelief(
            gb.mu + cfg.dt * cfg.k_mu * mu_dot,
            gb.mu_prime + cfg.dt * cfg.k_mu * terms.forward,
            lay,
        )
        new.mu[lay.focus_amp] = np.clip(new.mu[lay.focus_amp], cfg.amp_min, cfg.amp_max)
        b = cfg.vis_pos_bound
        new.mu[lay.visual_u] = np.clip(new.mu[lay.visual_u], -b, b)
        new.mu[lay.visual_v] = np.clip(new.mu[lay.visual_v], -b, b)
        new.enforce_bounds()
        return new

    def action_step(self, gb: GeneralizedBelief, s: SensoryBundle,
                    field: PrecisionField | None = None,
                    terms: TermBundle | None = None) -> tuple[np.ndarray, bool]:
        """Action rate (pitch, yaw) for the current state.

        Top-down: proprioceptive error pulled through d(proprio)/da.
        Bottom-up: the centroid half of the field differentiated through
        the centroid's response to camera motion.  Returns the rate and
        whether the bottom-up path had a visible centroid to act on.
        """
        cfg = self.cfg
        if cfg.action_mode == "disabled":
            return np.zeros(2), False
        if terms is None:
            terms = self.compute_terms(gb, s, intents=(), field=field)
        field = terms.field

        a_dot = np.zeros(2)
        if cfg.action_mode in ("top_down", "both"):
            # -(ds/da)^T Pi e on the proprio channel; ds/da = dt * I
            a_dot += -cfg.dt * cfg.pi_proprio * terms.e_proprio

        bottom_up_ok = False
        if cfg.action_mode in ("bottom_up", "both"):
            if field.centroid.present:
                bottom_up_ok = True
                e2_pix = (terms.e_visual ** 2).reshape(-1, 3).sum(axis=1)
                g_tr = 1.5 * (field.dpi_dr_pix / field.pi_pixels[:, None]).sum(axis=0)
                g_cap = -0.5 * (e2_pix[:, None] * field.capture_dr_pix).sum(axis=0)
                g = cfg.action_trace_gain * g_tr + cfg.action_capture_gain * g_cap
                # centroid responds to action: dr_u/da_yaw = dr_v/da_pitch = -focal*dt
                scale = -cfg.focal * cfg.dt
                a_dot += np.array([g[1] * scale, g[0] * scale])

        return cfg.k_a * a_dot, bottom_up_ok

    def step(self, gb: GeneralizedBelief, s: SensoryBundle,
             intents: Sequence[Intention],
             record_trace: bool = False) -> StepResult:
        """One full perception(+action) cycle on the current observation."""
        terms = self.compute_terms(gb, s, intents)
        a_dot, bu_ok = (self.action_step(gb, s, terms=terms)
                        if self.cfg.action_mode != "disabled"
                        else (np.zeros(2), False))
        new_belief = self.belief_step(gb, s, intents, terms=terms)
        trace = self.make_trace(gb, terms, a_dot) if record_trace else None
        return StepResult(belief=new_belief, a_dot=a_dot, trace=trace,
                          bottom_up_available=bu_ok)

    def make_trace(self, gb: GeneralizedBelief, terms: TermBundle,
                   a_dot: np.ndarray) -> StepTrace:
        errors = PredictionError(
            e_proprio=terms.e_proprio, e_cue=terms.e_cue,
            e_visual=terms.e_visual, e_mu=terms.e_mu,
        )
        fe = free_energy(
            errors,
            pi_visual=terms.field.pi.scaled(self.cfg.pi_visual_scale),
            pi_proprio=DiagonalPrecision.constant(self.cfg.pi_proprio, 2),
            pi_cue=DiagonalPrecision.constant(terms.pi_cue_value, 2),
            pi_mu=DiagonalPrecision(self._pi_mu.copy()),
        )
        prec_mag = float(np.linalg.norm(
            self.cfg.trace_gain * terms.precision_trace
            + self.cfg.capture_gain * terms.precision_capture))
        return StepTrace(
            free_energy=fe,
            mu=gb.mu.copy(),
            mu_prime=gb.mu_prime.copy(),
            action=a_dot.copy(),
            likelihood_mag=float(np.linalg.norm(terms.likelihood)),
            backward_mag=float(np.linalg.norm(terms.backward)),
            forward_mag=float(np.linalg.norm(terms.forward)),
            sensory_precision_mag=prec_mag,
            dynamics_precision_mag=0.0,
        )


# ----- intention factories ---------------------------------------------------

CUE_GATE_BOX = 1.1  # cue belief inside this box counts as "cue present"


def cue_believed_present(mu: np.ndarray, layout: BeliefLayout) -> bool:
    cue = mu[layout.cue]
    return bool(np.max(np.abs(cue)) <= CUE_GATE_BOX)


def make_posner_intentions(
    layout: BeliefLayout | None = None,
    cue_gain: float = 0.3,
    home_gain: float = 0.04,
    home_amp: float = 1.0,
    presence_quiet: float = 0.3,
) -> list[Intention]:
    """The two covert-task goals.

    Cue following: while the cue belief sits inside the image box, pull
    both the covert focus center and the believed target position to it.
    Home: with no cue believed and no target believed present, drift the
    focus dome back to the image center at its resting amplitude.
    """
    lay = layout or BeliefLayout()
    m = lay.total_dim

    cue_mask = np.zeros(m, dtype=bool)
    cue_mask[[lay.focus_u, lay.focus_v, lay.visual_u, lay.visual_v]] = True

    def cue_target(mu: np.ndarray) -> np.ndarray:
        h = np.zeros(m)
        h[lay.focus_u] = mu[lay.cue][0]
        h[lay.focus_v] = mu[lay.cue][1]
        h[lay.visual_u] = mu[lay.cue][0]
        h[lay.visual_v] = mu[lay.cue][1]
        return h

    def cue_jac(mu: np.ndarray) -> np.ndarray:
        jac = np.zeros((m, m))
        c0, c1 = lay.cue.start, lay.cue.start + 1
        for row in (lay.focus_u, lay.visual_u):
            jac[row, c0] = 1.0
        for row in (lay.focus_v, lay.visual_v):
            jac[row, c1] = 1.0
        return jac

    cue_follow = Intention(
        id="cue_follow", target_fn=cue_target, gain=cue_gain, mask=cue_mask,
        jac_fn=cue_jac, active_fn=lambda mu: cue_believed_present(mu, lay),
    )

    home_mask = np.zeros(m, dtype=bool)
    home_mask[lay.focus] = True

    def home_target(mu: np.ndarray) -> np.ndarray:
        h = np.zeros(m)
        h[lay.focus_amp] = home_amp
        return h

    home = Intention(
        id="home", target_fn=home_target, gain=home_gain, mask=home_mask,
        active_fn=lambda mu: (not cue_believed_present(mu, lay))
        and mu[lay.presence] < presence_quiet,
    )
    return [cue_follow, home]


def make_cue_fade_intention(
    layout: BeliefLayout | None = None, gain: float = 0.04
) -> Intention:
    """Graceful forgetting of a symbolic cue: while the cue belief holds
    an in-image position, it relaxes toward the neutral center.  The
    cue-following goal keeps reading it along the way, so attention and
    the position belief drift home together instead of chasing the
    off-screen sentinel through the image."""
    lay = layout or BeliefLayout()
    m = lay.total_dim
    mask = np.zeros(m, dtype=bool)
    mask[lay.cue] = True

    return Intention(
        id="cue_fade", target_fn=lambda mu: np.zeros(m), gain=gain, mask=mask,
        active_fn=lambda mu: cue_believed_present(mu, lay),
    )


def make_binding_intention(
    layout: BeliefLayout | None = None, gain: float = 0.04
) -> Intention:
    """Attend-where-you-look coupling: the believed target position is
    weakly attracted to the covert focus center.  This is what lets the
    position belief travel to wherever attention was captured, beyond
    the reach of the renderer's local Jacobian."""
    lay = layout or BeliefLayout()
    m = lay.total_dim
    mask = np.zeros(m, dtype=bool)
    mask[[lay.visual_u, lay.visual_v]] = True

    def target(mu: np.ndarray) -> np.ndarray:
        h = np.zeros(m)
        h[lay.visual_u] = mu[lay.focus_u]
        h[lay.visual_v] = mu[lay.focus_v]
        return h

    def jac(mu: np.ndarray) -> np.ndarray:
        j = np.zeros((m, m))
        j[lay.visual_u, lay.focus_u] = 1.0
        j[lay.visual_v, lay.focus_v] = 1.0
        return j

    return Intention(id="attend_bind", target_fn=target, gain=gain,
                     mask=mask, jac_fn=jac)


def make_reach_intentions(
    mode: str,
    layout: BeliefLayout | None = None,
    focal: float = 1.0 / 0.3,
    proprio_gain: float = 0.3,
    fixation_gain: float = 0.3,
) -> list[Intention]:
    """Goals for the overt target-centering task.

    top_down: desired camera angles are the current ones plus the
    believed angular offset of the target; the proprio belief chases
    them and the resulting proprioceptive error drives action.
    bottom_up: the believed target position is pinned to the image
    center ("I intend to see it centered"), so unexplained input away
    from center feeds the precision-driven action.
    """
    lay = layout or BeliefLayout()
    m = lay.total_dim
    intents: list[Intention] = []

    if mode in ("top_down", "both"):
        mask = np.zeros(m, dtype=bool)
        mask[lay.proprio] = True

        def prop_target(mu: np.ndarray) -> np.ndarray:
            h = np.zeros(m)
            pitch, yaw = mu[lay.proprio]
            h[lay.proprio.start] = pitch + mu[lay.visual_v] / focal
            h[lay.proprio.start + 1] = yaw + mu[lay.visual_u] / focal
            return h

        def prop_jac(mu: np.ndarray) -> np.ndarray:
            j = np.zeros((m, m))
            p0 = lay.proprio.start
            j[p0, p0] = 1.0
            j[p0, lay.visual_v] = 1.0 / focal
            j[p0 + 1, p0 + 1] = 1.0
            j[p0 + 1, lay.visual_u] = 1.0 / focal
            return j

        intents.append(Intention(id="center_target_proprio", target_fn=prop_target,
                                 gain=proprio_gain, mask=mask, jac_fn=prop_jac))

    if mode in ("bottom_up", "both"):
        mask = np.zeros(m, dtype=bool)
        mask[[lay.visual_u, lay.visual_v]] = True

        def fix_target(mu: np.ndarray) -> np.ndarray:
            return np.zeros(m)

        intents.append(Intention(id="fixate_center", target_fn=fix_target,
                                 gain=fixation_gain, mask=mask))

    if not intents:
        raise ValueError(f"unknown reach mode {mode!r}")
    return intents
