from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser settings shared by the gradient-trained models.

    ``None`` means "use the model's default" (see ``LOGREG_DEFAULTS`` and
    ``MLP_DEFAULTS``).
    """

    lr: Optional[float] = None
    epochs: Optional[int] = None
    batch_size: Optional[int] = None
    l2: Optional[float] = None
    seed: int = 0
    tol: Optional[float] = None

    def __post_init__(self):
        for name in ("lr", "batch_size", "tol"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        # zero epochs leaves a model at its initialisation
        if self.epochs is not None and self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")
        if self.l2 is not None and self.l2 < 0:
            raise ValueError("l2 must be non-negative")

    def resolved(self, defaults: "TrainConfig") -> "TrainConfig":
        return replace(self, **{k: getattr(defaults, k) for k, v in asdict(self).items()
                                if v is None and k != "seed"})

    def to_dict(self) -> dict:
        return asdict(self)


# lr None for logistic regression means the fixed step 1/L from the data
LOGREG_DEFAULTS = TrainConfig(lr=None, epochs=20000, batch_size=None, l2=1e-2, tol=1e-6)
MLP_DEFAULTS = TrainConfig(lr=0.05, epochs=100, batch_size=64, l2=1e-4, tol=1e-6)
HEAD_DEFAULTS = TrainConfig(lr=0.05, epochs=50, batch_size=64, l2=1e-4, tol=1e-6)
