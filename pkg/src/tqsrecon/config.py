from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .basis import WeightingConfig
from .exceptions import ParameterError

ALGORITHMS = ("ljsde", "rljsde")
PRECISIONS = ("single", "double")


@dataclass(frozen=True)
class ReconstructionConfig:
    """Parameters shared by L-JSDE and RL-JSDE.

    Both algorithms must see the same instance for their outputs to agree.
    ``early_stop`` ends a block once the weighted residual energy drops
    below ``1e-14 * L_local``.
    """

    window: int = 32
    block: int = 4
    n_iter: int = 200
    odc: float = 0.5
    weighting: WeightingConfig = field(default_factory=WeightingConfig)
    precision: str = "double"
    clip: bool = True
    algorithm: str = "rljsde"
    early_stop: bool = False

    def __post_init__(self):
        if self.window < 2 or self.window % 2:
            raise ParameterError(f"window must be even, got {self.window}")
        if self.block < 1 or self.window % self.block:
            raise ParameterError(
                f"block size {self.block} must divide window {self.window}")
        if (self.window - self.block) % 2:
            raise ParameterError("window - block must be even to center the block")
        if self.n_iter < 0:
            raise ParameterError("n_iter must be >= 0")
        if not 0.0 < self.odc <= 1.0:
            raise ParameterError("odc must lie in (0, 1]")
        if self.precision not in PRECISIONS:
            raise ParameterError(f"precision must be one of {PRECISIONS}")
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"algorithm must be one of {ALGORITHMS}")

    def check_period(self, period: int) -> None:
        if period % self.block:
            raise ParameterError(
                f"block size {self.block} must divide the pattern period {period}")

    def replace(self, **changes) -> "ReconstructionConfig":
        values = asdict(self)
        values["weighting"] = self.weighting
        values.update(changes)
        return ReconstructionConfig(**values)
