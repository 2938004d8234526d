"""Key-rate bounds for multimode entanglement-based CV-QKD with multimode homodyne detection."""

from .calibration import EffectiveModel, KnowledgeModel, effective_parameters, knowledge_rate_comparison
from .gaussian_core import (
    condition_on_homodyne,
    partial_trace,
    symplectic_eigenvalues,
    tensor,
    tmsv,
    von_neumann_entropy,
)
from .montecarlo import FluctuationSpec, run_fluctuating, summarize
from .network import ChannelSpec, DetectionWeights, apply_beamsplitter, apply_channel, synthesize_loc
from .protocol import AssembledState, Scenario, SourceSpec, assemble, ignorant_matrix
from .security import KeyRateReport, key_rate, scan

__version__ = "0.1.0"

__all__ = [
    "AssembledState",
    "ChannelSpec",
    "DetectionWeights",
    "EffectiveModel",
    "FluctuationSpec",
    "KeyRateReport",
    "KnowledgeModel",
    "Scenario",
    "SourceSpec",
    "apply_beamsplitter",
    "apply_channel",
    "assemble",
    "condition_on_homodyne",
    "effective_parameters",
    "ignorant_matrix",
    "key_rate",
    "knowledge_rate_comparison",
    "partial_trace",
    "run_fluctuating",
    "scan",
    "summarize",
    "symplectic_eigenvalues",
    "synthesize_loc",
    "tensor",
    "tmsv",
    "von_neumann_entropy",
]
