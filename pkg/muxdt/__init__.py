# muxdt - deadtime fraction of multiplexed photon-counting detector arrays

from .analytic import (
    CaseProbabilities,
    CountBreakdown,
    EffectiveDeadtimeTable,
    cw_case_probabilities,
    cw_effective_deadtimes,
    cw_multiplexed_dtf,
    cw_reduced_dtf,
    cw_single_dtf,
    cw_tree_dtf,
    pulsed_case_probabilities,
    pulsed_effective_deadtimes,
    pulsed_multiplexed_dtf,
    pulsed_reduced_dtf,
    pulsed_single_dtf,
    pulsed_tree_dtf,
)
from .core import (
    CwSource,
    DeadPulseCount,
    DetectorPool,
    DtfEstimate,
    PulsedSource,
    RandomStream,
    SwitchPolicy,
    dead_pulse_count,
)
from .errors import BracketError, InvalidArgumentError, ModelError, MuxdtError, SelfCheckError
from .simulate import (
    CwEventStream,
    DetectorArray,
    PulsedEventStream,
    SimulationConfig,
    cascade_cw,
    cascade_pulsed,
    estimate_dtf,
    gen_cw_stream,
    gen_pulsed_stream,
)
from .solve import DtfModel, PolyFit2, RateAtDtfResult, fit_poly2, rate_at_dtf, speedup_curve

__version__ = "0.1.0"
