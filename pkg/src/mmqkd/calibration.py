"""Effective parameters inferred by parties with partial knowledge of the mode structure.

A party that resolves the true modes only up to a grouping sees the same
measured two-mode matrix, but explains it with fewer source modes and a
different channel. The effective model is fixed by matching the three
independent moments of the measured x-block: Alice's variance, Bob's
variance and their correlation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .network import ChannelSpec, DetectionWeights
from .protocol import Scenario, SourceSpec, ignorant_matrix
from .security import KeyRateReport, key_rate


@dataclass(frozen=True)
class KnowledgeModel:
    """Partition of the true modes into the modes a party can tell apart."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups or any(not g for g in groups):
            raise ValueError("knowledge model needs nonempty groups")

    def validate(self, n_modes: int) -> None:
        flat = sorted(i for g in self.groups for i in g)
        if flat != list(range(n_modes)):
            raise ValueError(f"groups {self.groups} do not partition {n_modes} modes")

    @classmethod
    def full(cls, n_modes: int) -> "KnowledgeModel":
        return cls(tuple((i,) for i in range(n_modes)))

    @classmethod
    def ignorant(cls, n_modes: int) -> "KnowledgeModel":
        return cls((tuple(range(n_modes)),))

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class EffectiveModel:
    variances: tuple[float, ...]
    weights_squared: tuple[float, ...]
    T: float
    eps: float
    true_T: float

    @property
    def T_ratio(self) -> float:
        return self.T / self.true_T

    def scenario(self, template: Scenario) -> Scenario:
        """The party's model of the setup: known structure trusted, channel untrusted."""
        w = DetectionWeights.from_squared(self.weights_squared)
        return replace(
            template,
            source=SourceSpec(self.variances),
            alice_weights=w,
            bob_weights=w,
            channel=ChannelSpec(self.T, self.eps),
            trust="trusted",
        )


def effective_parameters(true_scenario: Scenario, knowledge: KnowledgeModel | Sequence[Sequence[int]]) -> EffectiveModel:
    if not isinstance(knowledge, KnowledgeModel):
        knowledge = KnowledgeModel(tuple(tuple(g) for g in knowledge))
    n = true_scenario.n_modes
    knowledge.validate(n)
    if true_scenario.alice_weights != true_scenario.bob_weights:
        raise ValueError("effective parameters assume identical detection weights on both sides")

    v = np.asarray(true_scenario.source.variances)
    l2 = true_scenario.alice_weights.squared
    group_l2 = np.array([l2[list(g)].sum() for g in knowledge.groups])
    if np.any(group_l2 == 0):
        raise ValueError("every assumed mode needs nonzero detection weight")
    # within-group renormalized weights; singletons reproduce the true variance exactly
    group_v = np.array([(l2[list(g)] / l2[list(g)].sum()) @ v[list(g)] for g in knowledge.groups])

    if all(len(g) == 1 for g in knowledge.groups):
        t_eff, eps_eff = true_scenario.channel.T, true_scenario.channel.eps
    else:
        gamma = ignorant_matrix(true_scenario)
        va, vb, c = gamma[0, 0], gamma[2, 2], gamma[0, 2]
        model_corr = group_l2 @ np.sqrt(group_v**2 - 1)
        if model_corr == 0:
            raise ValueError("degenerate fit: a vacuum model cannot carry the measured correlation")
        t_eff = float((c / model_corr) ** 2)
        eps_eff = float((vb - 1) / t_eff + 1 - va)
    return EffectiveModel(
        tuple(float(x) for x in group_v),
        tuple(float(x) for x in group_l2),
        t_eff,
        eps_eff,
        true_scenario.channel.T,
    )


def knowledge_rate_comparison(
    true_scenario: Scenario, levels: Mapping[str, KnowledgeModel | Sequence[Sequence[int]]]
) -> dict[str, KeyRateReport]:
    """Collective key rate each knowledge level would certify."""
    out = {}
    for name, knowledge in levels.items():
        model = effective_parameters(true_scenario, knowledge)
        scenario = model.scenario(replace(true_scenario, attack="collective"))
        out[name] = key_rate(scenario)
    return out


def table1_scenario(T: float = 1.0, beta: float = 0.95) -> Scenario:
    """Three-mode reference setup with its 95/2.5/2.5 % detection split."""
    return Scenario.build(
        (5.0, 1.5, 1.1), (0.95, 0.025, 0.025), T, 0.05, trust="trusted", beta=beta, squared=True
    )


TABLE1_LEVELS = {
    "3-mode": KnowledgeModel(((0,), (1,), (2,))),
    "2-mode": KnowledgeModel(((0,), (1, 2))),
    "1-mode": KnowledgeModel(((0, 1, 2),)),
}
