"""bekbench: a finite-dimensional workbench for operator-algebraic
entropy-energy inequalities.

Builds matrix algebras and their channels, realizes a channel as a two-sided
bimodule, extracts transpose channels, indices and modular/physical
Hamiltonians from it, evaluates entropy, energy and free energy against the
bound S <= beta E, and integrates the geometric modular flows of causal
regions that supply the inverse temperature beta.
"""

from ._backend import backend_name
from .algebras import (
    BlockStructure,
    ConditionalExpectation,
    Functional,
    MatrixAlgebra,
    commutant,
    inclusion_matrix,
    minimal_expectation,
    pimsner_popa_index,
    takesaki_expectation,
    trace_expectation,
)
from .bimodules import (
    ChannelBimodule,
    FullnessResult,
    channel_from_bimodule,
    fullness,
    transpose_from_bimodule,
)
from .channels import (
    QuantumChannel,
    output_state,
    tensor_algebra,
    transpose_channel,
)
from .entropy import (
    DecompositionResult,
    decomposition_entropy,
    kosaki_bound,
    relative_entropy,
    relative_entropy_modular,
)
from .errors import BekbenchError, InvariantViolation, ScenarioError
from .flows import (
    BCFTDoubleCone,
    DoubleCone,
    FlowSample,
    Region,
    SchwarzschildExterior,
    bekenstein_coefficient,
    dilate,
    integrate_flow,
    local_beta,
    max_beta,
    size_normalization,
    velocity,
)
from .modular import CondEntropy, ModularPair, conditional_entropy, modular_pair
from .scenarios import BuiltScenario, Scenario, build_scenario, parse_scenario
from .thermo import ReducedFrame, ThermoReport, reduced_frame, thermo_report

__all__ = [
    "BCFTDoubleCone",
    "BekbenchError",
    "BlockStructure",
    "BuiltScenario",
    "ChannelBimodule",
    "CondEntropy",
    "ConditionalExpectation",
    "DecompositionResult",
    "DoubleCone",
    "FlowSample",
    "FullnessResult",
    "Functional",
    "InvariantViolation",
    "MatrixAlgebra",
    "ModularPair",
    "QuantumChannel",
    "ReducedFrame",
    "Region",
    "Scenario",
    "ScenarioError",
    "SchwarzschildExterior",
    "ThermoReport",
    "backend_name",
    "bekenstein_coefficient",
    "build_scenario",
    "channel_from_bimodule",
    "commutant",
    "conditional_entropy",
    "decomposition_entropy",
    "dilate",
    "fullness",
    "inclusion_matrix",
    "integrate_flow",
    "kosaki_bound",
    "local_beta",
    "max_beta",
    "minimal_expectation",
    "modular_pair",
    "output_state",
    "parse_scenario",
    "pimsner_popa_index",
    "reduced_frame",
    "relative_entropy",
    "relative_entropy_modular",
    "size_normalization",
    "takesaki_expectation",
    "tensor_algebra",
    "thermo_report",
    "trace_expectation",
    "transpose_channel",
    "transpose_from_bimodule",
    "velocity",
]

__version__ = "0.1.0"
