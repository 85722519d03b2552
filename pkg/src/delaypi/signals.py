"""Time-signal primitives for references, perturbations and delays.

Every signal is an immutable dataclass callable on scalars or arrays.
Piecewise concatenation composes primitives into the profiles the
experiments need (plateaus joined by smooth transitions, oscillatory
segments, tabulated data).  Signals serialise to plain dicts keyed by
`kind`, which is what the config front end reads and writes.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Union

import numpy as np

__all__ = [
    "Signal",
    "Constant",
    "Sinusoid",
    "Ramp",
    "Smoothstep",
    "Table",
    "Piecewise",
    "SignalRangeError",
    "as_signal",
    "signal_from_dict",
    "delay_signal_eval",
]


class SignalRangeError(ValueError):
    """Evaluation outside the domain a signal is defined on."""


class Signal:
    """Base class; subclasses implement _eval on float arrays."""

    kind = "abstract"

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Signal):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = [x.to_dict() if isinstance(x, Signal) else x for x in v]
            out[f.name] = v
        return out


@dataclass(frozen=True)
class Constant(Signal):
    value: float
    kind = "constant"

    def _eval(self, t):
        return np.full_like(t, float(self.value))


@dataclass(frozen=True)
class Sinusoid(Signal):
    """offset + amplitude * sin(omega * t + phase)."""

    offset: float
    amplitude: float
    omega: float
    phase: float = 0.0
    kind = "sinusoid"

    def _eval(self, t):
        return self.offset + self.amplitude * np.sin(self.omega * t + self.phase)


@dataclass(frozen=True)
class Ramp(Signal):
    """Linear transition v0 -> v1 over [t0, t1], clamped outside."""

    t0: float
    t1: float
    v0: float
    v1: float
    kind = "ramp"

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("ramp needs t1 > t0")

    def _eval(self, t):
        s = np.clip((t - self.t0) / (self.t1 - self.t0), 0.0, 1.0)
        return self.v0 + (self.v1 - self.v0) * s


@dataclass(frozen=True)
class Smoothstep(Signal):
    """C^2 transition v0 -> v1 over [t0, t1] (quintic smootherstep)."""

    t0: float
    t1: float
    v0: float
    v1: float
    kind = "smoothstep"

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("smoothstep needs t1 > t0")

    def _eval(self, t):
        s = np.clip((t - self.t0) / (self.t1 - self.t0), 0.0, 1.0)
        w = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
        return self.v0 + (self.v1 - self.v0) * w


@dataclass(frozen=True)
class Table(Signal):
    """Piecewise-linear interpolation of tabulated samples; strict domain."""

    times: tuple
    values: tuple
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        t = np.asarray(self.times)
        if t.size < 2 or len(self.values) != t.size:
            raise ValueError("table needs matching times/values with >= 2 samples")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("table times must be strictly increasing")

    def _eval(self, t):
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise SignalRangeError(
                f"table defined on [{self.times[0]:g}, {self.times[-1]:g}], "
                f"queried outside"
            )
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class Piecewise(Signal):
    """Concatenation: pieces[i] rules [breaks[i-1], breaks[i]), in absolute time."""

    breaks: tuple
    pieces: tuple

    kind = "piecewise"

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(x) for x in self.breaks))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.pieces) != len(self.breaks) + 1:
            raise ValueError("piecewise needs len(pieces) == len(breaks) + 1")
        if np.any(np.diff(np.asarray(self.breaks)) <= 0.0):
            raise ValueError("piecewise breaks must be strictly increasing")
        if not all(isinstance(p, Signal) for p in self.pieces):
            raise ValueError("piecewise pieces must be signals")

    def _eval(self, t):
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right")
        out = np.empty_like(t)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if mask.any():
                out[mask] = np.atleast_1d(piece(t[mask]))
        return out


_KINDS = {cls.kind: cls for cls in (Constant, Sinusoid, Ramp, Smoothstep, Table, Piecewise)}


def signal_from_dict(d: dict) -> Signal:
    """Rebuild a signal from its dict form; unknown kinds/keys are rejected."""
    if not isinstance(d, dict):
        raise ValueError(f"signal descriptor must be a mapping, got {type(d).__name__}")
    if "kind" not in d:
        raise ValueError("signal descriptor is missing the 'kind' key")
    kind = d["kind"]
    cls = _KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown signal kind {kind!r}; known: {sorted(_KINDS)}")
    names = {f.name for f in fields(cls)}
    extra = set(d) - names - {"kind"}
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)} in {kind!r} signal")
    kwargs = {k: v for k, v in d.items() if k != "kind"}
    if cls is Piecewise:
        kwargs["pieces"] = tuple(signal_from_dict(p) for p in kwargs.get("pieces", ()))
        kwargs["breaks"] = tuple(kwargs.get("breaks", ()))
    if cls is Table:
        kwargs["times"] = tuple(kwargs.get("times", ()))
        kwargs["values"] = tuple(kwargs.get("values", ()))
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad fields for {kind!r} signal: {exc}") from exc


def as_signal(obj: Union[Signal, dict, float, int]) -> Signal:
    """Coerce a signal, a dict descriptor or a bare number into a Signal."""
    if isinstance(obj, Signal):
        return obj
    if isinstance(obj, dict):
        return signal_from_dict(obj)
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Constant(float(obj))
    raise ValueError(f"cannot interpret {obj!r} as a signal")


def delay_signal_eval(descriptor, t):
    """Evaluate a delay descriptor at time(s) t."""
    return as_signal(descriptor)(t)
