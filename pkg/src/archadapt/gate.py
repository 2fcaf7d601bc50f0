"""Adaptation gate: adapt only when the old architecture degrades.

The trigger is the accuracy drop of the incumbent architecture when the
dataset moves from the previous snapshot to the current one,

    H_t = V(arch, D_{t-1}) - V(arch, D_t)

and adaptation fires iff H_t exceeds epsilon strictly. Negative drops
(the new data helps) therefore never trigger.
"""

from __future__ import annotations

from dataclasses import dataclass

from .datagen import SnapshotMeta
from .errors import InvalidConfig
from .evaluator import Evaluator
from .search_space import Architecture

__all__ = ["GateConfig", "accuracy_drop", "should_adapt"]


@dataclass(frozen=True)
class GateConfig:
    epsilon: float = 0.02

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise InvalidConfig(f"epsilon must be nonnegative, got {self.epsilon}")


def accuracy_drop(
    prev_arch: Architecture,
    prev_meta: SnapshotMeta,
    cur_meta: SnapshotMeta,
    evaluate: Evaluator,
) -> float:
    """H_t, the incumbent's accuracy loss on the newer snapshot."""
    return evaluate(prev_arch, prev_meta) - evaluate(prev_arch, cur_meta)


def should_adapt(drop: float, cfg: GateConfig) -> bool:
    """Strict threshold: a drop equal to epsilon does not trigger."""
    return drop > cfg.epsilon
