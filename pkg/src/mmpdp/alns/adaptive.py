"""Operator weights, acceptance and stopping rules of the search loop."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .params import AlnsParams


@dataclass
class OperatorState:
    weights: list[float]
    last_score: list[float] = field(default_factory=list)

    @classmethod
    def uniform(cls, n: int) -> "OperatorState":
        return cls([1.0] * n, [0.0] * n)

    def probabilities(self) -> list[float]:
        total = sum(self.weights)
        return [w / total for w in self.weights]


def select_operator(state: OperatorState, rng: random.Random) -> int:
    """Roulette wheel: index i with probability w_i / sum(w)."""
    weights = state.weights
    if not weights:
        raise ValueError("no operators registered")
    x = rng.random() * sum(weights)
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if x < acc:
            return i
    return len(weights) - 1


def update_weights(state: OperatorState, index: int, score: float, delta: float) -> OperatorState:
    state.weights[index] = state.weights[index] * delta + (1.0 - delta) * score
    if state.last_score:
        state.last_score[index] = score
    return state


def sa_accept(candidate_cost: float, current_cost: float, temperature: float, rng: random.Random) -> bool:
    diff = candidate_cost - current_cost
    if diff <= 0:
        return True
    return rng.random() < math.exp(-diff / temperature)


def cool(temperature: float, params: AlnsParams) -> float:
    return max(params.t_end, temperature * params.nu)


def should_terminate(iteration: int, history: Sequence[float], params: AlnsParams) -> bool:
    """``history[j]`` is the current objective after iteration j (history[0]: start)."""
    if iteration >= params.lam:
        return True
    if iteration < params.lam_min:
        return False
    w = params.omega
    i = iteration
    if i - 2 * w < 0 or len(history) <= i:
        return False
    older = sum(history[i - 2 * w : i - w + 1])
    newer = sum(history[i - w : i + 1])
    if newer == 0:
        return older == 0
    return older / newer - 1.0 <= params.epsilon


def removal_count(n_served: int, n_r: int, params: AlnsParams, rng: random.Random) -> int:
    upper = min(n_served, int(math.floor(n_r * params.xi)))
    if upper < params.iota:
        return min(n_served, params.iota)
    return rng.randint(params.iota, upper)
