from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidArgumentError, NumericStateError


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    minibatch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.minibatch_size < 1:
            raise InvalidArgumentError("epochs must be >= 0 and minibatch_size >= 1")
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise InvalidArgumentError("Adam betas must lie in [0, 1)")
        if not self.adam_epsilon > 0:
            raise InvalidArgumentError("adam_epsilon must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, config: TrainConfig):
    """One bias-corrected Adam update on flat vectors.

    Returns ``(new_params, new_state)``; inputs are never modified, so a
    refused step leaves the caller's state as it was.
    """
    if state.t < 0:
        raise InvalidArgumentError("Adam timestep must be >= 0")
    if not np.isfinite(grads).all():
        raise NumericStateError(f"non-finite gradient at Adam step {state.t + 1}")
    b1, b2 = config.adam_beta1, config.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * grads
    v = b2 * state.v + (1.0 - b2) * (grads * grads)
    m_hat = m / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)
    new = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    if not np.isfinite(new).all():
        raise NumericStateError(f"Adam step {t} produced non-finite parameters")
    return new, AdamState(m, v, t)
