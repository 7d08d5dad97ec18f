from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Union


@dataclass(frozen=True)
class AlnsParams:
    sigma1: float = 7.0  # new global best
    sigma2: float = 2.0  # accepted, better than current
    sigma3: float = 9.0  # accepted, not better
    sigma4: float = 1.0  # rejected
    delta: float = 0.8
    lam: int = 10000
    lam_min: int = 5000
    omega: int = 1000
    epsilon: float = 0.001
    t_start: float = 90.0
    t_end: float = 0.0001
    nu: float = 0.9999
    phi: float = 9.0
    chi: float = 4.0
    psi: float = 9.0
    rho: float = 6.0
    rho_worst: float = 4.0
    xi: float = 0.32
    iota: int = 1
    seed: int = 0
    ensemble_size: int = 10

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.lam < 1 or self.omega < 1:
            raise ValueError("lam and omega must be positive")
        if self.t_start <= 0 or self.t_end <= 0:
            raise ValueError("temperatures must be positive")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "AlnsParams":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValueError(f"unknown ALNS parameters: {unknown}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "AlnsParams":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def override(self, **changes) -> "AlnsParams":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


FULL = AlnsParams()
# CI-sized runs: shorter horizon, look-back scaled with it
DESK = AlnsParams(lam=4000, lam_min=2000, omega=400, ensemble_size=5)
