"""Next-packet-length predictor: windowing, LSTM regressor, Adam training."""

from .kernels import BACKEND
from .model import (
    Architecture,
    ModelParams,
    Normalizer,
    WindowSample,
    WindowSet,
    backward,
    forward,
    init_params,
    make_windows,
    mse_loss,
    predict,
)
from .optim import AdamState, TrainConfig, adam_step
from .regressors import LinearAutoregressor, LSTMRegressor, load_checkpoint, save_checkpoint
from .train import TrainResult, train

__all__ = [
    "BACKEND", "Architecture", "ModelParams", "Normalizer", "WindowSample", "WindowSet",
    "backward", "forward", "init_params", "make_windows", "mse_loss", "predict",
    "AdamState", "TrainConfig", "adam_step", "LinearAutoregressor", "LSTMRegressor",
    "load_checkpoint", "save_checkpoint", "TrainResult", "train",
]
