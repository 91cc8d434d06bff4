"""Pulse and delay primitives, the named gate library, and sequence compilation.

Sequences are applied left to right in time: the first element acts first.
x/y pulses on a spin are multiplied by that spin's RF scale factor; z
rotations are reference-frame shifts and are never scaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .qcore import I2, SX, SY, SZ, tensor

DEFAULT_J = 195.0

_AXES = {"x": SX, "y": SY, "z": SZ}
_SPINS = ("A", "B")


@dataclass(frozen=True)
class PulseElement:
    kind: str  # "rotation" | "j_delay"
    spin: str = "A"
    axis: str = "x"
    angle: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind == "rotation":
            if self.spin not in _SPINS:
                raise ValueError(f"unknown spin {self.spin!r}")
            if self.axis.lstrip("-") not in _AXES:
                raise ValueError(f"unknown axis {self.axis!r}")
            if not np.isfinite(self.angle):
                raise ValueError("rotation angle must be finite")
        elif self.kind == "j_delay":
            if not (np.isfinite(self.duration) and self.duration >= 0):
                raise ValueError("delay duration must be finite and >= 0")
        else:
            raise ValueError(f"unknown element kind {self.kind!r}")

    @property
    def is_rf(self) -> bool:
        return self.kind == "rotation" and self.axis.lstrip("-") != "z"

    def to_dict(self) -> dict:
        if self.kind == "rotation":
            return {"kind": "rotation", "spin": self.spin, "axis": self.axis,
                    "angle_or_duration": float(self.angle)}
        return {"kind": "j_delay", "spin": "both", "axis": "z",
                "angle_or_duration": float(self.duration)}

    @classmethod
    def from_dict(cls, d: dict) -> "PulseElement":
        value = float(d["angle_or_duration"])
        if d["kind"] == "j_delay":
            return cls("j_delay", duration=value)
        return cls("rotation", spin=d["spin"], axis=d["axis"], angle=value)


def rot(spin: str, axis: str, angle: float) -> PulseElement:
    return PulseElement("rotation", spin=spin, axis=axis, angle=float(angle))


def delay(duration: float) -> PulseElement:
    return PulseElement("j_delay", duration=float(duration))


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple = ()
    name: str = ""

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(tuple(self.elements) + tuple(other.elements),
                             f"{self.name}+{other.name}")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def rf_pulse_count(self) -> int:
        return sum(e.is_rf for e in self.elements)

    def inverse(self, name: str | None = None) -> "PulseSequence":
        """Reverse the sequence and negate every rotation angle.

        Delays cannot be run backwards, so sequences containing them are
        rejected.
        """
        out = []
        for e in reversed(self.elements):
            if e.kind != "rotation":
                raise ValueError("cannot invert a sequence containing J delays")
            out.append(rot(e.spin, e.axis, -e.angle))
        return PulseSequence(tuple(out), name or f"{self.name}_inv")

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.elements]

    @classmethod
    def from_list(cls, items: Iterable[dict], name: str = "") -> "PulseSequence":
        return cls(tuple(PulseElement.from_dict(d) for d in items), name)


def _single_spin_rotation(axis: str, angle) -> np.ndarray:
    sign = -1.0 if axis.startswith("-") else 1.0
    sigma = _AXES[axis.lstrip("-")]
    half = np.asarray(angle, dtype=float)[..., None, None] / 2.0
    return np.cos(half) * I2 - 1j * np.sin(half) * sign * sigma


def rotation_unitary(spin: str, axis: str, angle: float, scale=1.0) -> np.ndarray:
    """exp(-i (scale*angle/2) sigma_axis) on ``spin``, identity on the other.

    ``scale`` may be an array, giving a stack of unitaries. z rotations
    ignore ``scale``.
    """
    scale = np.asarray(scale, dtype=float)
    if np.any(scale <= 0):
        raise ValueError("RF scale factors must be positive")
    if axis.lstrip("-") == "z":
        scale = np.ones_like(scale)
    u = _single_spin_rotation(axis, scale * angle)
    if spin == "A":
        return np.einsum("...ab,cd->...acbd", u, I2).reshape(u.shape[:-2] + (4, 4))
    if spin == "B":
        return np.einsum("ab,...cd->...acbd", I2, u).reshape(u.shape[:-2] + (4, 4))
    raise ValueError(f"unknown spin {spin!r}")


def j_coupling_unitary(t: float, J: float = DEFAULT_J) -> np.ndarray:
    """Free evolution exp(-i (pi J t / 2) sz(x)sz) in the doubly rotating frame."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    phi = np.pi * J * t / 2.0
    return np.diag(np.exp(-1j * phi * np.array([1.0, -1.0, -1.0, 1.0])))


def element_unitary(e: PulseElement, J: float = DEFAULT_J, scales=(1.0, 1.0)) -> np.ndarray:
    if e.kind == "j_delay":
        return j_coupling_unitary(e.duration, J)
    s = scales[0] if e.spin == "A" else scales[1]
    return rotation_unitary(e.spin, e.axis, e.angle, s)


def compile_sequence(seq: PulseSequence | Sequence[PulseElement], J: float = DEFAULT_J,
                     scales=(1.0, 1.0)) -> np.ndarray:
    """Ordered product of element unitaries, first element rightmost.

    With array-valued ``scales`` (same shape for both spins) a stack of
    unitaries is returned.
    """
    sa = np.asarray(scales[0], dtype=float)
    sb = np.asarray(scales[1], dtype=float)
    if sa.ndim == 0 and sb.ndim == 0:
        return _compile_scalar(tuple(seq), float(J), float(sa), float(sb)).copy()
    return _compile(seq, J, sa, sb)


@lru_cache(maxsize=4096)
def _compile_scalar(elements: tuple, J: float, sa: float, sb: float) -> np.ndarray:
    return _compile(elements, J, np.asarray(sa), np.asarray(sb))


def _compile(seq, J, sa, sb):
    shape = np.broadcast_shapes(sa.shape, sb.shape)
    u = np.broadcast_to(np.eye(4, dtype=complex), shape + (4, 4)).copy()
    for e in seq:
        u = element_unitary(e, J, (sa, sb)) @ u
    return u


def tau(J: float = DEFAULT_J) -> PulseElement:
    """Delay of 1/(2J): exp(-i pi/4 sz(x)sz)."""
    return delay(1.0 / (2.0 * J))


_HALF_PI = np.pi / 2


def gate_library(name: str, theta: float | None = None, J: float = DEFAULT_J) -> PulseSequence:
    """Named sequences used by the experiment.

    ``Y_a`` takes an optional ``theta`` (default pi/2). The encoder is
    Y_b, -Y_a, tau, Y_a, -X_a and the decoder Y_a, tau, -Y_a, X_a, -Y_b,
    which compiles to the encoder's adjoint without a backwards delay. Of
    the eight-pulse pairs with that property, this one keeps U_dec U_enc
    closest to identity under correlated RF scale errors.
    """
    if name == "Y_a":
        angle = _HALF_PI if theta is None else float(theta)
        return PulseSequence((rot("A", "y", angle),), "Y_a")
    seqs = _library(float(J))
    if name not in seqs:
        raise KeyError(f"unknown gate {name!r}")
    return PulseSequence(seqs[name], name)


@lru_cache(maxsize=16)
def _library(J: float) -> dict:
    h = _HALF_PI
    return {
        "X_a": (rot("A", "x", h),),
        "X_b": (rot("B", "x", h),),
        "Y_b": (rot("B", "y", h),),
        "CN_tilde": (rot("A", "y", h), tau(J), rot("A", "x", h)),
        "U_enc": (rot("B", "y", h), rot("A", "-y", h), tau(J), rot("A", "y", h), rot("A", "-x", h)),
        "U_dec": (rot("A", "y", h), tau(J), rot("A", "-y", h), rot("A", "x", h), rot("B", "-y", h)),
        "chi": (tau(J), rot("A", "-z", h), rot("B", "-z", h)),
        # H = i exp(-i 3pi/4 sy) exp(i pi/2 sx): the x pulse acts first
        "hadamard_b": (rot("B", "x", -np.pi), rot("B", "y", 1.5 * np.pi)),
        "refocus_b": (rot("B", "y", np.pi),),
        "refocus_b_bar": (rot("B", "-y", np.pi),),
    }


GATE_NAMES = ("X_a", "Y_a", "X_b", "Y_b", "CN_tilde", "U_enc", "U_dec", "chi", "hadamard_b", "refocus_b", "refocus_b_bar")
