"""Configuration records for the classifier and its training."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InputError


@dataclass
class CnnConfig:
    num_classes: int
    input_dim: int
    sentence_len: int = 100
    filter_widths: tuple[int, ...] = (3, 4, 5)
    filters_per_width: int = 150
    hidden_dim: int = 100           # 0 collapses the feedforward layer
    dropout_rate: float = 0.5

    def __post_init__(self):
        self.filter_widths = tuple(self.filter_widths)
        if self.num_classes < 2:
            raise InputError("need at least two classes")
        if not self.filter_widths:
            raise InputError("need at least one filter width")
        for w in self.filter_widths:
            if not 1 <= w <= self.sentence_len:
                raise InputError(f"filter width {w} outside [1, {self.sentence_len}]")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InputError("dropout rate must be in [0, 1)")
        if self.input_dim < 1 or self.hidden_dim < 0:
            raise InputError("bad layer dimensions")

    @property
    def pooled_dim(self) -> int:
        return len(self.filter_widths) * self.filters_per_width

    @property
    def classifier_input(self) -> int:
        return self.hidden_dim if self.hidden_dim > 0 else self.pooled_dim


@dataclass
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InputError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InputError("betas must lie in [0, 1)")


@dataclass
class TrainConfig:
    seed: int = 1
    batch_size: int = 50
    epochs: int | None = None       # None: resolved from the stack's epochs profile
    shuffle_each_epoch: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise InputError("batch size must be at least 1")
        if self.epochs is not None and self.epochs < 1:
            raise InputError("epochs must be at least 1")


def default_epochs(epochs_profile: str) -> int:
    """Contextual stacks train for 70 epochs, everything else for 120."""
    return 70 if epochs_profile == "contextual" else 120
