"""Admissible scalar input nonlinearities.

The controller tolerates any static actuator map psi that vanishes at zero,
is globally Lipschitz, and is monotone non-decreasing. Three instances are
provided: a hard saturation, the identity, and a smooth saturation built
from tanh. The saturation clamp is symmetric.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Nonlinearity",
    "saturation",
    "identity",
    "scaled_sigmoid",
    "from_config",
    "PropertyReport",
    "verify_properties",
]


@dataclass(frozen=True)
class Nonlinearity:
    """A scalar actuator map with a declared Lipschitz constant.

    kind is one of 'sat', 'id', 'tanh'. level is the clamp amplitude for
    the bounded kinds and None for the identity. bounded reports whether
    the range is bounded; it is informational, never enforced.
    """

    kind: str
    level: float | None
    lipschitz: float
    bounded: bool

    def eval(self, s):
        """Evaluate at a scalar or array; rejects non-finite input."""
        arr = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("nonlinearity input must be finite")
        if self.kind == "sat":
            out = np.clip(arr, -self.level, self.level)
        elif self.kind == "id":
            out = arr
        elif self.kind == "tanh":
            out = self.level * np.tanh(arr / self.level)
        else:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if np.isscalar(s) or arr.ndim == 0:
            return float(out)
        return out

    __call__ = eval


def saturation(level):
    if level <= 0:
        raise ValueError("saturation level must be positive")
    return Nonlinearity("sat", float(level), lipschitz=1.0, bounded=True)


def identity():
    return Nonlinearity("id", None, lipschitz=1.0, bounded=False)


def scaled_sigmoid(level):
    if level <= 0:
        raise ValueError("sigmoid level must be positive")
    return Nonlinearity("tanh", float(level), lipschitz=1.0, bounded=True)


_KINDS = {"sat": saturation, "id": identity, "tanh": scaled_sigmoid}


def from_config(kind, level=None):
    """Build an instance from config keys psi.kind / psi.level."""
    if kind not in _KINDS:
        raise ValueError(f"psi.kind must be one of {sorted(_KINDS)}, got {kind!r}")
    if kind == "id":
        return identity()
    if level is None:
        raise ValueError(f"psi.kind={kind} requires psi.level")
    return _KINDS[kind](level)


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of the three defining checks on sampled pairs."""

    vanishes_at_zero: bool
    lipschitz_ok: bool
    monotone_ok: bool
    zero_value: float
    max_ratio: float
    min_product: float

    @property
    def all_pass(self):
        return self.vanishes_at_zero and self.lipschitz_ok and self.monotone_ok


def verify_properties(fn, samples, tol, lipschitz=None):
    """Audit a scalar map against the admissibility conditions.

    samples is a non-empty sequence of (s1, s2) pairs. Checks, over all
    pairs: the difference-quotient bound |fn(s1)-fn(s2)| <= L*|s1-s2| + tol,
    the monotonicity product (fn(s1)-fn(s2))*(s1-s2) >= -tol, and
    |fn(0)| <= tol. The Lipschitz constant defaults to the callable's own
    declared one.
    """
    pairs = [(float(a), float(b)) for a, b in samples]
    if not pairs:
        raise ValueError("need at least one sample pair")
    if not all(np.isfinite(a) and np.isfinite(b) for a, b in pairs):
        raise ValueError("sample pairs must be finite")
    if lipschitz is None:
        lipschitz = getattr(fn, "lipschitz", 1.0)

    zero_value = float(fn(0.0))
    max_ratio = 0.0
    min_product = np.inf
    for s1, s2 in pairs:
        d = s1 - s2
        df = float(fn(s1)) - float(fn(s2))
        if d != 0.0:
            max_ratio = max(max_ratio, abs(df) / abs(d))
        min_product = min(min_product, df * d)
    return PropertyReport(
        vanishes_at_zero=abs(zero_value) <= tol,
        lipschitz_ok=max_ratio <= lipschitz + tol,
        monotone_ok=min_product >= -tol,
        zero_value=zero_value,
        max_ratio=max_ratio,
        min_product=float(min_product),
    )
