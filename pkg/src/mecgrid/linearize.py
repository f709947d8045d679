"""Piecewise-linear curve approximation and the linear gas-flow model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import GasPipe


class ConvexityError(ValueError):
    pass


class DomainError(ValueError):
    pass


class SingularPipeError(ValueError):
    pass


@dataclass(frozen=True)
class PwlCurve:
    """Secant interpolation through ordered breakpoints."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    @property
    def domain(self) -> tuple[float, float]:
        return self.xs[0], self.xs[-1]

    @property
    def segments(self) -> int:
        return len(self.xs) - 1

    @property
    def slopes(self) -> np.ndarray:
        x = np.asarray(self.xs)
        y = np.asarray(self.ys)
        if len(x) == 1:
            return np.zeros(0)
        return np.diff(y) / np.diff(x)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.asarray(self.xs))

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.ys))


def pwl_approximate(curve: Callable[[float], float], domain: tuple[float, float],
                    segments: int) -> PwlCurve:
    """Sample ``curve`` at ``segments + 1`` uniformly spaced points.

    A degenerate domain (lo == hi) yields a single-point curve, which is what
    a device with equal lower and upper limits needs.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if hi < lo:
        raise ValueError(f"empty domain [{lo}, {hi}]")
    if hi == lo:
        return PwlCurve((lo,), (float(curve(lo)),))
    xs = np.linspace(lo, hi, segments + 1)
    xs[0], xs[-1] = lo, hi
    ys = np.array([float(curve(x)) for x in xs])
    if not np.all(np.isfinite(ys)):
        raise ValueError("curve is not finite at every breakpoint")
    out = PwlCurve(tuple(float(x) for x in xs), tuple(float(y) for y in ys))
    s = out.slopes
    if np.any(np.diff(s) < -1e-9 * max(1.0, float(np.max(np.abs(s))))):
        raise ConvexityError(f"secant slopes decrease: {s.tolist()}")
    return out


def pwl_evaluate(curve: PwlCurve, x: float, tol: float = 1e-9) -> float:
    lo, hi = curve.domain
    span = max(1.0, abs(lo), abs(hi))
    if x < lo - tol * span or x > hi + tol * span:
        raise DomainError(f"x={x!r} outside [{lo}, {hi}]")
    if curve.segments == 0:
        return curve.ys[0]
    x = min(max(x, lo), hi)
    k = int(np.searchsorted(curve.xs, x, side="right")) - 1
    k = min(max(k, 0), curve.segments - 1)
    x0, x1 = curve.xs[k], curve.xs[k + 1]
    y0, y1 = curve.ys[k], curve.ys[k + 1]
    if x == x0:
        return y0
    if x == x1:
        return y1
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class LinearFlowModel:
    """``f = a_n * pi_n - a_m * pi_m`` for flow from ``from_hub`` to ``to_hub``.

    ``flipped`` records that the initial pressure at the receiving end was the
    higher one, so the square-root argument was taken with reversed sign.
    """

    pipe_id: str
    a_n: float
    a_m: float
    flipped: bool = False

    def flow(self, pi_n: float, pi_m: float) -> float:
        return self.a_n * pi_n - self.a_m * pi_m


def gas_flow_coefficients(pipe: GasPipe) -> LinearFlowModel:
    pn, pm = pipe.pi0_from, pipe.pi0_to
    if pn <= 0 or pm <= 0:
        raise ValueError(f"pipe {pipe.id!r}: initial pressures must be positive")
    if pn == pm:
        raise SingularPipeError(f"pipe {pipe.id!r}: equal initial pressures {pn}")
    # flow from m to n with the orientation flipped and sign negated gives
    # the same coefficients with |pn^2 - pm^2| under the root
    root = math.sqrt(abs(pn * pn - pm * pm))
    return LinearFlowModel(pipe.id, pipe.c_p * pn / root, pipe.c_p * pm / root,
                           flipped=pm > pn)


def weymouth_flow(c_p: float, pi_n: float, pi_m: float) -> float:
    d = pi_n * pi_n - pi_m * pi_m
    return math.copysign(c_p * math.sqrt(abs(d)), d) if d else 0.0
