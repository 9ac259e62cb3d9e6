"""Multiple Schramm-Loewner evolutions built from su(2)_k WZW boundary fields."""

__version__ = "0.1.0"

from .algebra import (
    ArchTopology,
    FusionPath,
    ModelParams,
    central_charge,
    conformal_weight,
    enumerate_arch_topologies,
    enumerate_fusion_paths,
    kostka,
    model_params,
)
from .affine import HighestWeightModule, null_state_residual
from .dynamics import (
    DriverState,
    NoiseIncrement,
    RunHistory,
    TraceSet,
    bessel_reduction,
    detect_arches,
    evolve_loewner,
    extract_traces,
    simulate,
    step_drivers,
    theta_field,
)
from .experiments import (
    ExperimentConfig,
    McEstimate,
    mc_double_arch,
    mc_triple_crossing,
    topology_census,
)
from .partition import Block, Kind, PartitionFunction, crossing_probability, triple_blocks
from .special import HypergeometricSpec, gauss_2f1, hyp2f1
