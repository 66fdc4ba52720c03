from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, NumericStateError
from .model import ModelParams, WindowSet, backward
from .optim import AdamState, TrainConfig, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    params: ModelParams
    history: list[float] = field(default_factory=list)
    opt_state: AdamState | None = None


def train(params: ModelParams, samples: WindowSet, config: TrainConfig,
          opt_state: AdamState | None = None) -> TrainResult:
    """Minibatch Adam over seeded shuffles of ``samples``.

    ``history[k]`` is the mean minibatch loss seen during epoch ``k``. The
    input params are not modified. Passing ``opt_state`` resumes its moments;
    otherwise they start at zero.
    """
    if len(samples) < 1:
        raise InvalidArgumentError("train needs at least one sample")
    state = AdamState.zeros(params.arch.size) if opt_state is None else opt_state.copy()
    flat = params.flat.copy()
    work = ModelParams(params.arch, flat)
    rng = np.random.default_rng(config.seed)
    X, y = samples.x, samples.y
    N, bs = len(y), config.minibatch_size
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(N)
        total = 0.0
        for step, start in enumerate(range(0, N, bs)):
            idx = order[start:start + bs]
            try:
                loss, grads = backward(work, X[idx], y[idx])
                flat, state = adam_step(work.flat, grads.flat, state, config)
            except NumericStateError as e:
                raise NumericStateError(f"epoch {epoch + 1}, step {step + 1}: {e}") from e
            work = ModelParams(params.arch, flat)
            total += loss * len(idx)
        history.append(total / N)
    return TrainResult(work, history, state)
