"""Active-inference simulator of covert and overt visual attention."""

from .agent import (
    Agent,
    AgentConfig,
    Intention,
    StepTrace,
    make_binding_intention,
    make_posner_intentions,
    make_reach_intentions,
)
from .attention import (
    AttentionConfig,
    CovertFocus,
    PrecisionField,
    RedCentroid,
    precision_at,
    precision_field,
    red_centroid,
)
from .gencoords import (
    CUE_SENTINEL,
    BeliefLayout,
    DiagonalPrecision,
    GeneralizedBelief,
    NumericError,
    PredictionError,
    SensoryBundle,
    free_energy,
    shift,
    weighted_sq_error,
)
from .genmodels import (
    BlobRendererConfig,
    BlobVisualModel,
    VisualPrediction,
    intero_predict,
    proprio_predict,
    render,
)
from .tasks import (
    PosnerTrialSpec,
    TaskConfig,
    TrialRecord,
    make_posner_batch,
    run_ctoa_sweep,
    run_posner_batch,
    run_posner_trial,
    run_reach_batch,
    run_reach_trial,
    summarize,
)
from .world import CameraModel, SceneState, apply_action, observe, sensory_action_jacobian

__version__ = "0.1.0"
