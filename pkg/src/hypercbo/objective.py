"""Derivative-free cost functions evaluated pointwise."""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, ParseError

ACKLEY_DEFAULTS = {"A": 20.0, "a": 0.2, "b": 3.0, "B": 20.0}


def ackley(v, v_star, A=20.0, a=0.2, b=3.0, B=20.0):
    """Ackley function centred at ``v_star``; vectorized over leading axes of ``v``.

    With ``A == B`` the value is nonnegative and exactly zero at ``v_star``.
    """
    v = np.asarray(v, dtype=np.float64)
    v_star = np.asarray(v_star, dtype=np.float64)
    if v.shape[-1] != v_star.shape[-1]:
        raise DimensionMismatch(f"point has dimension {v.shape[-1]}, minimizer has {v_star.shape[-1]}")
    diff = v - v_star
    d = diff.shape[-1]
    radial = A * np.exp(-a * np.sqrt(b * b / d * np.sum(diff * diff, axis=-1)))
    oscillatory = np.exp(np.sum(np.cos(2.0 * np.pi * b * diff), axis=-1) / d)
    # grouped so each bracket is >= 0 in floating point when A == B
    return (B - radial) + (np.e - oscillatory)


def rastrigin(v, v_star, A=10.0):
    v = np.asarray(v, dtype=np.float64)
    v_star = np.asarray(v_star, dtype=np.float64)
    if v.shape[-1] != v_star.shape[-1]:
        raise DimensionMismatch(f"point has dimension {v.shape[-1]}, minimizer has {v_star.shape[-1]}")
    diff = v - v_star
    return np.sum(diff * diff - A * np.cos(2.0 * np.pi * diff) + A, axis=-1)


@dataclass
class Objective:
    """A named cost function with optional known minimizer.

    ``func`` must accept an ``(n, d)`` array and return ``n`` values.
    """

    name: str
    func: Callable
    params: dict = field(default_factory=dict)
    known_minimizer: Optional[np.ndarray] = None

    def eval(self, v):
        return float(self.func(np.asarray(v, dtype=np.float64)[None, :])[0])

    def eval_batch(self, positions):
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape[0] == 0:
            return np.zeros(0)
        return np.asarray(self.func(positions), dtype=np.float64)

    def __call__(self, positions):
        return self.eval_batch(positions)

    def spec_string(self):
        if self.known_minimizer is None:
            return self.name
        parts = ["vstar=" + ",".join(repr(float(x)) for x in self.known_minimizer)]
        parts += [f"{k}={v!r}" for k, v in self.params.items() if k != "vstar"]
        return f"{self.name}:" + ",".join(parts)


def make_ackley(v_star, **params):
    p = dict(ACKLEY_DEFAULTS)
    unknown = set(params) - set(p)
    if unknown:
        raise ValueError(f"unknown Ackley parameters {sorted(unknown)}")
    p.update({k: float(v) for k, v in params.items()})
    v_star = np.asarray(v_star, dtype=np.float64)
    return Objective("ackley", lambda x: ackley(x, v_star, **p), p, v_star)


def make_rastrigin(v_star, A=10.0):
    v_star = np.asarray(v_star, dtype=np.float64)
    return Objective("rastrigin", lambda x: rastrigin(x, v_star, A), {"A": float(A)}, v_star)


def parse_objective(text, dim=None):
    """Parse ``"ackley:vstar=0,0,1"`` with optional ``A,a,b,B`` overrides.

    Bare numbers after ``vstar=`` continue the vector, so commas double as
    the item separator.
    """
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    params = {}
    key = None
    for item in filter(None, (s.strip() for s in rest.split(","))):
        k, eq, val = item.partition("=")
        if eq:
            key = k.strip()
            if key in params:
                raise ParseError(f"duplicate parameter {key!r}", field="objective")
            params[key] = [val]
        elif key == "vstar":
            params[key].append(item)
        else:
            raise ParseError(f"expected key=value, got {item!r}", field="objective")
    try:
        values = {k: [float(x) for x in v] for k, v in params.items()}
    except ValueError as exc:
        raise ParseError(str(exc), field="objective") from None
    v_star = values.pop("vstar", None)
    if v_star is None:
        if dim is None:
            raise ParseError("vstar is required", field="objective")
        v_star = [0.0] * dim
    if dim is not None and len(v_star) != dim:
        raise ParseError(f"vstar has {len(v_star)} entries but the manifold has dimension {dim}", field="objective")
    scalars = {}
    for k, v in values.items():
        if len(v) != 1:
            raise ParseError(f"parameter {k!r} must be a scalar", field="objective")
        scalars[k] = v[0]
    try:
        if name == "ackley":
            return make_ackley(v_star, **scalars)
        if name == "rastrigin":
            return make_rastrigin(v_star, **scalars)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="objective") from None
    raise ParseError(f"unknown objective {name!r}", field="objective")
