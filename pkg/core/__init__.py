from .experiment_manager import ExperimentManager, RunConfig
from .states import ObjectiveKind, ScheduleKind, MaskPolicyKind, EngineKind, EngineState
from .errors import HogwildError
