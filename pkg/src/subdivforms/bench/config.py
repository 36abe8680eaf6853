"""Experiment configuration: flat ``key = value`` files merged with CLI flags."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..geomfit import FitConfig
from ..mesh_io import read_mesh
from ..meshgen import structured_square

SCHEMES = ("loopwang", "whitney")


def parse_levels(text):
    """``"l:L"`` or ``"L"`` (meaning ``0:L``) into a pair of ints."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            l, L = 0, int(parts[0])
        elif len(parts) == 2:
            l, L = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f"levels must look like 'l:L', got {text!r}") from None
    if not 0 <= l <= L:
        raise ValueError(f"levels need 0 <= l <= L, got {l}:{L}")
    return l, L


def parse_pairs(text):
    """Comma-separated ``l:L`` list."""
    return [parse_levels(t) for t in str(text).split(",") if t.strip()]


@dataclass
class ExperimentConfig:
    """Options shared by all experiments.

    ``mesh`` is ``"square"`` (structured ``n x n`` square on ``bounds``) or a
    path to an OFF/OBJ file. ``pairs`` lists the ``(l, L)`` level pairs; an
    empty list means the experiment default.
    """

    scheme: str = "loopwang"
    mesh: str = "square"
    n: int = 8
    bounds: tuple = (0.0, 0.0, math.pi, math.pi)
    alternating: bool = False
    pairs: list = field(default_factory=list)
    k: list = field(default_factory=lambda: [0, 1, 2])
    form: str = "reference"
    n_eigs: int = 10
    shift: float = 0.5
    zero_tol: float = 1e-8
    fit: bool = True
    fit_weights: tuple = (10.0, 1.0, 1.0, 0.01)
    corner_angle_deg: float = 30.0
    out: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.n_eigs < 1:
            raise ValueError("n_eigs must be >= 1")
        for l, L in self.pairs:
            if not 0 <= l <= L:
                raise ValueError("level pairs need 0 <= l <= L")
        if any(k not in (0, 1, 2) for k in self.k):
            raise ValueError("k must be a subset of {0, 1, 2}")

    def initial_mesh(self):
        if self.mesh == "square":
            return structured_square(self.n, bounds=tuple(self.bounds), alternating=self.alternating)
        return read_mesh(self.mesh)

    def fit_config(self, L):
        return FitConfig(tuple(self.fit_weights), math.radians(self.corner_angle_deg), L, 2)

    def updated(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self):
        d = asdict(self)
        d["pairs"] = [f"{l}:{L}" for l, L in self.pairs]
        return d


def _convert(name, text):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ValueError(f"unknown config key {name!r}")
    if name == "pairs":
        return parse_pairs(text)
    if name in ("k",):
        return [int(t) for t in text.replace(",", " ").split()]
    if name in ("bounds", "fit_weights"):
        return tuple(float(t) for t in text.replace(",", " ").split())
    kind = kinds[name]
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{name} expects a boolean, got {text!r}")
        return low in ("true", "1", "yes")
    return text.strip()


def read_config(path, base=None):
    """Read a flat ``key = value`` file (``#`` comments) into a config."""
    values = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"config line without '=': {raw!r}")
        key = key.strip().replace("-", "_")
        values[key] = _convert(key, val.strip())
    return replace(base or ExperimentConfig(), **values)
