from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the three model families.

    Fields a family does not use are ignored (the forest has no learning
    rate, logistic regression has no dropout).
    """

    seed: int = 0
    learning_rate: float = 1e-3
    max_epochs: int = 200
    batch_size: int = 32
    early_stop_patience: int = 10
    l2_penalty: float = 0.0
    dropout_rate: float = 0.2
    validation_fraction: float = 0.15
    n_trees: int = 100

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.validation_fraction <= 0.5:
            raise ConfigError("validation_fraction must lie in [0, 0.5]")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if self.l2_penalty < 0:
            raise ConfigError("l2_penalty must be >= 0")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None, base: "TrainConfig | None" = None) -> "TrainConfig":
        base = base or cls()
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        try:
            return replace(base, **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


def default_config(kind: str) -> TrainConfig:
    """Per-family defaults."""
    if kind == "logistic":
        # full-batch descent with backtracking; starts from a large step
        return TrainConfig(learning_rate=1.0, max_epochs=2000, l2_penalty=1e-4,
                           dropout_rate=0.0, validation_fraction=0.0)
    if kind == "forest":
        return TrainConfig(dropout_rate=0.0, validation_fraction=0.0)
    if kind == "mlp":
        return TrainConfig()
    raise ConfigError(f"unknown model kind {kind!r}")
