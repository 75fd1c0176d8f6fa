"""Physics-compliant multiport simulator and optimizer for MIMO systems
aided by microwave linear analog computers."""

__version__ = "0.1.0"

from .coupling import (
    ArrayGeometry,
    CouplingMatrix,
    PhysicalConstants,
    build_coupling_matrix,
    build_geometry,
    mutual_impedance,
    random_coupling,
)
from .beamopt import (
    MilacDesign,
    MisoChannel,
    PowerReport,
    expected_power_digital_nomatching,
    expected_power_milac_mc,
    expected_power_milac_nomc,
    matching_network_impedance,
    optimize_milac_mc,
    optimize_milac_nomc,
    power_digital_matching,
    power_digital_nomatching,
    power_milac_mc,
    power_report,
)
from .matrixkit import (
    IndexRange,
    block,
    hermitian_power,
    is_unitary_symmetric,
    right_singular_frame,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentKind,
    TrialStats,
    pipeline_power,
    run_experiment,
    sample_channel,
    trial_rng,
)
from .netmodels import (
    Architecture,
    MilacPorts,
    ScenarioModel,
    ScenarioSpec,
    build_model,
    channel_digital,
    channel_milac_both,
    channel_milac_rx,
    channel_milac_tx,
    combiner_milac_rx,
    matching_form_rx,
    matching_form_tx,
    precoder_milac_tx,
)

__all__ = [
    "__version__",
    "ArrayGeometry",
    "Architecture",
    "CouplingMatrix",
    "ExperimentConfig",
    "ExperimentKind",
    "IndexRange",
    "MilacDesign",
    "MilacPorts",
    "MisoChannel",
    "PhysicalConstants",
    "PowerReport",
    "ScenarioModel",
    "ScenarioSpec",
    "TrialStats",
    "block",
    "build_coupling_matrix",
    "build_geometry",
    "build_model",
    "channel_digital",
    "channel_milac_both",
    "channel_milac_rx",
    "channel_milac_tx",
    "combiner_milac_rx",
    "expected_power_digital_nomatching",
    "expected_power_milac_mc",
    "expected_power_milac_nomc",
    "hermitian_power",
    "is_unitary_symmetric",
    "matching_form_rx",
    "matching_form_tx",
    "matching_network_impedance",
    "mutual_impedance",
    "optimize_milac_mc",
    "optimize_milac_nomc",
    "pipeline_power",
    "power_digital_matching",
    "power_digital_nomatching",
    "power_milac_mc",
    "power_report",
    "precoder_milac_tx",
    "random_coupling",
    "right_singular_frame",
    "run_experiment",
    "sample_channel",
    "trial_rng",
]
