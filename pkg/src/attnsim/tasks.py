"""Experiment harnesses: cueing trials, CTOA sweeps, reach trials, stats.

A cueing trial follows the fixed schedule
    10 init steps / 50 cue steps / CTOA empty steps / target until
    detection or 1000 target steps,
with four variants crossing cue type (endogenous: symbolic channel;
exogenous: brief target flash at the cue location) and validity (target
at the cued location, or point-reflected through the image center).
Covert-only: action is disabled and the camera stays put.

The reach task turns action on: after 10 init steps the target appears
and the trial ends once its projected position has stayed within
tolerance of the image center for a dwell window.

Trials are pure functions of their spec (geometry comes from the seed),
so batches parallelize and rerun bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from multiprocessing import Pool

import numpy as np
from scipy import stats as sp_stats

from .agent import (
    Agent,
    AgentConfig,
    Intention,
    StepTrace,
    make_binding_intention,
    make_cue_fade_intention,
    make_posner_intentions,
    make_reach_intentions,
)
from .world import CameraModel, SceneState, observe, apply_action, target_image_position

INIT_STEPS = 10
CUE_STEPS = 50
TARGET_TIMEOUT = 1000

CUE_TYPES = ("endogenous", "exogenous")
VALIDITIES = ("valid", "invalid")
REACH_MODES = ("top_down", "bottom_up")


@dataclass(frozen=True)
class PosnerTrialSpec:
    cue_type: str
    validity: str
    ctoa: int
    target_eccentricity_px: float
    target_angle: float
    seed: int

    def __post_init__(self):
        if self.cue_type not in CUE_TYPES:
            raise ValueError(f"cue_type must be one of {CUE_TYPES}")
        if self.validity not in VALIDITIES:
            raise ValueError(f"validity must be one of {VALIDITIES}")
        if self.ctoa < 0:
            raise ValueError("ctoa must be non-negative")


@dataclass(frozen=True)
class TaskConfig:
    """Everything a trial needs beyond its spec."""

    agent: AgentConfig = dc_field(default_factory=AgentConfig)
    cue_gain: float = 0.3
    home_gain: float = 0.06
    bind_gain: float = 0.04
    cue_fade_gain: float = 0.1
    reach_proprio_gain: float = 0.3
    reach_fixation_gain: float = 0.3
    detect_pos_tol: float = 0.0625
    detect_presence: float = 0.5
    reach_tol: float = 0.0625
    reach_dwell: int = 5
    cross_tol: float = 0.1


@dataclass
class TrialRecord:
    """Outcome of one trial, flat enough to drop straight into a CSV row."""

    experiment: str                 # posner | reach
    cue_type: str | None
    validity: str | None
    mode: str | None
    ctoa: int | None
    eccentricity_px: float
    angle: float
    seed: int
    outcome: str                    # detected | timeout
    rt_steps: int | None
    focus_cross_step: int | None    # first step the focus is near the cued spot
    belief_cross_step: int | None   # first step the position belief is
    trace: list[StepTrace] | None = None

    @property
    def detected(self) -> bool:
        return self.outcome == "detected"


def _camera_for(cfg: TaskConfig) -> CameraModel:
    return CameraModel(focal=cfg.agent.focal,
                       image_size=cfg.agent.renderer.image_size)


def _uv_from_polar(ecc_px: float, angle: float, half_width_px: float) -> np.ndarray:
    r = ecc_px / half_width_px
    return np.array([r * np.cos(angle), r * np.sin(angle)])


def sample_geometry(base_seed: int, index: int,
                    ecc_range: tuple[float, float] = (2.0, 10.0)) -> tuple[float, float]:
    """Eccentricity (px) and angle for trial `index` of a batch."""
    rng = np.random.default_rng([base_seed, index])
    ecc = float(rng.uniform(*ecc_range))
    angle = float(rng.uniform(0.0, 2.0 * np.pi))
    return ecc, angle


def make_posner_batch(
    cue_type: str, validity: str, ctoa: int, n: int, base_seed: int,
    ecc_range: tuple[float, float] = (2.0, 10.0),
) -> list[PosnerTrialSpec]:
    """Matched batches: trial i shares geometry across every condition
    that uses the same base seed."""
    specs = []
    for i in range(n):
        ecc, angle = sample_geometry(base_seed, i, ecc_range)
        specs.append(PosnerTrialSpec(cue_type, validity, ctoa, ecc, angle,
                                     seed=base_seed * 100000 + i))
    return specs


def run_posner_trial(spec: PosnerTrialSpec, cfg: TaskConfig | None = None,
                     record_trace: bool = False) -> TrialRecord:
    """One covert cueing trial; action signals disabled throughout."""
    cfg = cfg or TaskConfig()
    agent_cfg = replace(cfg.agent, action_mode="disabled")
    agent = Agent(agent_cfg)
    cam = _camera_for(cfg)
    lay = agent.layout
    half_px = agent_cfg.renderer.image_size / 2.0

    target_uv = _uv_from_polar(spec.target_eccentricity_px, spec.target_angle, half_px)
    cue_uv = target_uv if spec.validity == "valid" else -target_uv
    target_dir = np.array([target_uv[1] / cam.focal, target_uv[0] / cam.focal])
    cue_dir = np.array([cue_uv[1] / cam.focal, cue_uv[0] / cam.focal])

    intents = make_posner_intentions(lay, cue_gain=cfg.cue_gain,
                                     home_gain=cfg.home_gain)
    intents.append(make_cue_fade_intention(lay, gain=cfg.cue_fade_gain))
    intents.append(make_binding_intention(lay, gain=cfg.bind_gain))

    gb = agent.initial_belief()
    onset = INIT_STEPS + CUE_STEPS + spec.ctoa
    last_step = onset + TARGET_TIMEOUT

    focus_cross = None
    belief_cross = None
    rt = None
    trace: list[StepTrace] | None = [] if record_trace else None

    state = SceneState.empty()
    for t in range(last_step):
        state.cue_pos = None
        state.target_visible = False
        state.target_dir = target_dir
        if INIT_STEPS <= t < INIT_STEPS + CUE_STEPS:
            if spec.cue_type == "endogenous":
                state.cue_pos = cue_uv
            else:
                state.target_visible = True
                state.target_dir = cue_dir
        elif t >= onset:
            state.target_visible = True

        s = observe(state, cam, agent_cfg.renderer)
        res = agent.step(gb, s, intents, record_trace=record_trace)
        gb = res.belief
        if trace is not None:
            trace.append(res.trace)

        mu = gb.mu
        if focus_cross is None and np.hypot(mu[lay.focus_u] - cue_uv[0],
                                            mu[lay.focus_v] - cue_uv[1]) < cfg.cross_tol:
            focus_cross = t
        if belief_cross is None and np.hypot(mu[lay.visual_u] - cue_uv[0],
                                             mu[lay.visual_v] - cue_uv[1]) < cfg.cross_tol:
            belief_cross = t

        if t >= onset:
            pos_err = np.hypot(mu[lay.visual_u] - target_uv[0],
                               mu[lay.visual_v] - target_uv[1])
            if pos_err < cfg.detect_pos_tol and mu[lay.presence] > cfg.detect_presence:
                rt = t - onset + 1
                break

    return TrialRecord(
        experiment="posner", cue_type=spec.cue_type, validity=spec.validity,
        mode=None, ctoa=spec.ctoa, eccentricity_px=spec.target_eccentricity_px,
        angle=spec.target_angle, seed=spec.seed,
        outcome="detected" if rt is not None else "timeout", rt_steps=rt,
        focus_cross_step=focus_cross, belief_cross_step=belief_cross, trace=trace,
    )


def run_reach_trial(mode: str, eccentricity_px: float, angle: float, seed: int,
                    cfg: TaskConfig | None = None,
                    record_trace: bool = False) -> TrialRecord:
    """One overt centering trial with the selected action contribution."""
    if mode not in REACH_MODES + ("both",):
        raise ValueError(f"mode must be one of {REACH_MODES + ('both',)}")
    cfg = cfg or TaskConfig()
    agent_cfg = replace(cfg.agent, action_mode=mode)
    agent = Agent(agent_cfg)
    cam = _camera_for(cfg)
    lay = agent.layout
    half_px = agent_cfg.renderer.image_size / 2.0

    target_uv = _uv_from_polar(eccentricity_px, angle, half_px)
    target_dir = np.array([target_uv[1] / cam.focal, target_uv[0] / cam.focal])

    intents = make_reach_intentions(mode, lay, focal=agent_cfg.focal,
                                    proprio_gain=cfg.reach_proprio_gain,
                                    fixation_gain=cfg.reach_fixation_gain)
    intents.append(make_binding_intention(lay, gain=cfg.bind_gain))

    gb = agent.initial_belief()
    state = SceneState(target_dir=target_dir, target_visible=False,
                       cue_pos=None, camera=np.zeros(2))
    onset = INIT_STEPS
    last_step = onset + TARGET_TIMEOUT
    dwell = 0
    rt = None
    trace: list[StepTrace] | None = [] if record_trace else None

    for t in range(last_step):
        state.target_visible = t >= onset
        s = observe(state, cam, agent_cfg.renderer)
        res = agent.step(gb, s, intents, record_trace=record_trace)
        gb = res.belief
        state, _ = apply_action(state, res.a_dot, cam, agent_cfg.dt)
        if trace is not None:
            trace.append(res.trace)

        if t >= onset:
            err = float(np.linalg.norm(target_image_position(state, cam)))
            dwell = dwell + 1 if err < cfg.reach_tol else 0
            if dwell >= cfg.reach_dwell:
                rt = t - onset + 1
                break

    return TrialRecord(
        experiment="reach", cue_type=None, validity=None, mode=mode,
        ctoa=None, eccentricity_px=eccentricity_px, angle=angle, seed=seed,
        outcome="detected" if rt is not None else "timeout", rt_steps=rt,
        focus_cross_step=None, belief_cross_step=None, trace=trace,
    )


def _run_posner_star(args) -> TrialRecord:
    spec, cfg = args
    return run_posner_trial(spec, cfg)


def run_posner_batch(specs: list[PosnerTrialSpec], cfg: TaskConfig | None = None,
                     jobs: int = 1) -> list[TrialRecord]:
    """Run a batch of cueing trials, optionally across worker processes.

    Results come back in spec order regardless of worker scheduling.
    """
    cfg = cfg or TaskConfig()
    if jobs <= 1 or len(specs) < 2:
        return [run_posner_trial(sp, cfg) for sp in specs]
    with Pool(jobs) as pool:
        return pool.map(_run_posner_star, [(sp, cfg) for sp in specs])


def _run_reach_star(args) -> TrialRecord:
    mode, ecc, angle, seed, cfg = args
    return run_reach_trial(mode, ecc, angle, seed, cfg)


def run_reach_batch(mode: str, n: int, base_seed: int,
                    cfg: TaskConfig | None = None,
                    ecc_range: tuple[float, float] = (2.0, 14.0),
                    jobs: int = 1) -> list[TrialRecord]:
    cfg = cfg or TaskConfig()
    jobs_args = []
    for i in range(n):
        ecc, angle = sample_geometry(base_seed, i, ecc_range)
        jobs_args.append((mode, ecc, angle, base_seed * 100000 + i, cfg))
    if jobs <= 1 or n < 2:
        return [_run_reach_star(a) for a in jobs_args]
    with Pool(jobs) as pool:
        return pool.map(_run_reach_star, jobs_args)


@dataclass
class ConditionSummary:
    n: int
    n_detected: int
    mean_rt: float | None
    median_rt: float | None
    std_rt: float | None
    timeout_rate: float
    spearman_ecc_rt: float | None

    @classmethod
    def from_records(cls, records: list[TrialRecord]) -> "ConditionSummary":
        if not records:
            raise ValueError("cannot summarize an empty batch")
        rts = np.array([r.rt_steps for r in records if r.detected], dtype=float)
        eccs = np.array([r.eccentricity_px for r in records if r.detected])
        spearman = None
        if rts.size >= 3 and np.ptp(rts) > 0 and np.ptp(eccs) > 0:
            spearman = float(sp_stats.spearmanr(eccs, rts).statistic)
        return cls(
            n=len(records),
            n_detected=int(rts.size),
            mean_rt=float(rts.mean()) if rts.size else None,
            median_rt=float(np.median(rts)) if rts.size else None,
            std_rt=float(rts.std()) if rts.size else None,
            timeout_rate=1.0 - rts.size / len(records),
            spearman_ecc_rt=spearman,
        )


def condition_key(r: TrialRecord) -> tuple:
    return (r.experiment, r.cue_type, r.validity, r.mode, r.ctoa)


def summarize(records: list[TrialRecord]) -> dict[tuple, ConditionSummary]:
    """Per-condition statistics; timeouts are reported as a rate and
    never averaged into reaction times."""
    if not records:
        raise ValueError("cannot summarize an empty batch")
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(condition_key(r), []).append(r)
    return {k: ConditionSummary.from_records(v) for k, v in sorted(groups.items(),
            key=lambda kv: tuple(str(x) for x in kv[0]))}


def paired_sign_test(rt_a: list[int | None], rt_b: list[int | None]) -> tuple[int, int, float]:
    """One-sided sign test that condition A is faster than condition B.

    Pairs where either side timed out or the two sides tie are dropped.
    Returns (wins_for_a, n_pairs, p_value).
    """
    wins = 0
    n = 0
    for a, b in zip(rt_a, rt_b):
        if a is None or b is None or a == b:
            continue
        n += 1
        wins += a < b
    if n == 0:
        return 0, 0, 1.0
    p = float(sp_stats.binomtest(wins, n, 0.5, alternative="greater").pvalue)
    return wins, n, p


@dataclass
class SweepCell:
    cue_type: str
    validity: str
    ctoa: int
    summary: ConditionSummary


@dataclass
class SweepResult:
    cells: list[SweepCell]
    crossover_ctoa: dict[str, int | None]
    records: list[TrialRecord]

    def cell(self, cue_type: str, validity: str, ctoa: int) -> ConditionSummary:
        for c in self.cells:
            if (c.cue_type, c.validity, c.ctoa) == (cue_type, validity, ctoa):
                return c.summary
        raise KeyError((cue_type, validity, ctoa))


def run_ctoa_sweep(cue_types: list[str], ctoa_list: list[int], n_per_cell: int,
                   base_seed: int, cfg: TaskConfig | None = None,
                   jobs: int = 1) -> SweepResult:
    """Mean RT per (cue type, validity, CTOA) cell on matched geometry.

    The crossover CTOA per cue type is the smallest CTOA from which the
    invalid mean stays below the valid mean for the rest of the sweep,
    None when that never happens.
    """
    cfg = cfg or TaskConfig()
    cells: list[SweepCell] = []
    all_records: list[TrialRecord] = []
    means: dict[tuple[str, str, int], float | None] = {}
    for cue_type in cue_types:
        for ctoa in ctoa_list:
            for validity in VALIDITIES:
                specs = make_posner_batch(cue_type, validity, ctoa,
                                          n_per_cell, base_seed)
                records = run_posner_batch(specs, cfg, jobs=jobs)
                summary = ConditionSummary.from_records(records)
                cells.append(SweepCell(cue_type, validity, ctoa, summary))
                means[(cue_type, validity, ctoa)] = summary.mean_rt
                all_records.extend(records)

    crossover: dict[str, int | None] = {}
    for cue_type in cue_types:
        found = None
        for i, ctoa in enumerate(sorted(ctoa_list)):
            tail = sorted(ctoa_list)[i:]
            ok = all(
                means[(cue_type, "invalid", c)] is not None
                and means[(cue_type, "valid", c)] is not None
                and means[(cue_type, "invalid", c)] < means[(cue_type, "valid", c)]
                for c in tail
            )
            if ok:
                found = ctoa
                break
        crossover[cue_type] = found
    return SweepResult(cells=cells, crossover_ctoa=crossover, records=all_records)
