"""CNN classifier with hand-derived backpropagation and Adam training."""

from .config import AdamConfig, CnnConfig, TrainConfig, default_epochs
from .gradcheck import gradcheck, toy_linear_check
from .model import ShapeMismatch, batch_loss, forward, forward_batch, loss_and_grad, predict
from .params import ParamStore, adam_step, init_params, load_checkpoint, save_checkpoint
from .train import predict_dataset, train, write_history

__all__ = [
    "AdamConfig", "CnnConfig", "TrainConfig", "default_epochs",
    "gradcheck", "toy_linear_check",
    "ShapeMismatch", "batch_loss", "forward", "forward_batch", "loss_and_grad", "predict",
    "ParamStore", "adam_step", "init_params", "load_checkpoint", "save_checkpoint",
    "predict_dataset", "train", "write_history",
]
