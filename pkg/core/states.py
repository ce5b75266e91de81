from enum import Enum


class ObjectiveKind(Enum):
    LOGISTIC_L2 = "logistic_l2"
    LEAST_SQUARES_L2 = "least_squares_l2"
    TOY_QUADRATIC = "toy_quadratic"


class RegularizationMode(Enum):
    SUPPORT_WEIGHTED = "support_weighted"
    DENSE = "dense"


class ScheduleKind(Enum):
    SGD_CONVEX = "sgd_convex"
    SGD_NONCONVEX = "sgd_nonconvex"
    HOGWILD = "hogwild"
    HOGWILD_NONCONVEX = "hogwild_nonconvex"
    EXP_PERIOD = "exp_period"
    CUSTOM_DIMINISHING = "custom_diminishing"
    CONSTANT = "constant"


class MaskPolicyKind(Enum):
    ALL_INCLUDED = "all_included"
    BERNOULLI = "bernoulli"
    NONE_INCLUDED = "none_included"


class CounterMode(Enum):
    SHARED_ATOMIC = "shared_atomic"
    LOCAL_ESTIMATE = "local_estimate"


class EngineKind(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


class EngineState(Enum):
    IDLE = "idle"
    STARTING = "starting"
    RUNNING = "running"
    STOPPING = "stopping"
    FINISHED = "finished"
    ERROR = "error"
