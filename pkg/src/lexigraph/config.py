"""Run configuration serialised next to every output."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .exceptions import FileFormatError, InvalidInputError

RUN_CONFIG_NAME = "run_config.json"


@dataclass
class RunConfig:
    # defaults mirror the published experimental hyperparameters
    mode: str = "optimistic"
    epochs: int = 1000
    batch_size: int = 4
    sequence_length: int = 4
    prediction_length: int = 1
    optimizer: str = "adam"
    loss: str = "mae"
    metric: str = "mse"
    dropout: Optional[float] = None
    edge_cap: int = 2000
    threshold: float = 0.5

    learning_rate: float = 1e-3
    gcn_units: int = 16
    gru_units: int = 32
    skip_features: bool = True
    margin: float = 0.3
    candidate_threshold: float = 0.5
    split: list = field(default_factory=lambda: [0.8, 0.1, 0.1])
    seed: int = 0
    jobs: int = 1

    baseline_hidden: int = 500
    baseline_learning_rate: float = 0.8
    baseline_momentum: float = 0.9
    baseline_epochs: int = 1000

    norms_dir: Optional[str] = None
    semantic_dir: Optional[str] = None
    observations: Optional[str] = None
    aliases: Optional[str] = None
    homographs: Optional[str] = None

    def validate(self) -> None:
        if self.mode not in ("optimistic", "pessimistic"):
            raise InvalidInputError(f"mode must be optimistic or pessimistic, got {self.mode!r}")
        if self.optimizer != "adam" or self.loss != "mae" or self.metric != "mse":
            raise InvalidInputError("only the adam optimiser, mae loss and mse metric are supported")
        if self.sequence_length < 2 or self.prediction_length != 1:
            raise InvalidInputError("sequence_length must be >= 2 and prediction_length must be 1")
        if self.epochs < 1 or self.baseline_epochs < 1 or self.batch_size < 1 or self.jobs < 1:
            raise InvalidInputError("epochs, batch size and jobs must be positive")

    def tgcn_params(self) -> dict:
        return {
            "sequence_length": self.sequence_length,
            "prediction_length": self.prediction_length,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "gcn_units": self.gcn_units,
            "gru_units": self.gru_units,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
            "skip_features": self.skip_features,
            "seed": self.seed,
        }

    def baseline_params(self) -> dict:
        return {
            "hidden_units": self.baseline_hidden,
            "learning_rate": self.baseline_learning_rate,
            "momentum": self.baseline_momentum,
            "epochs": self.baseline_epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def save(self, directory) -> Path:
        path = Path(directory) / RUN_CONFIG_NAME
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, directory) -> "RunConfig":
        path = Path(directory) / RUN_CONFIG_NAME
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FileFormatError(path, f"cannot read run configuration: {exc}") from exc
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})
