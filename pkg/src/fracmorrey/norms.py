"""Grid estimators for L^p, weak L^p, Morrey, BMO/VMO and semigroup BMO norms.

Ball suprema run over every node of the computational torus (the padded box
for compact data) and over a dyadic radius set, by default
``{2h, 4h, ..., L/4}``.  Radii above ``L/4`` and balls beyond the
computational torus are not scanned; every :class:`NormReport` says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .grid import (
    BallMask,
    GridError,
    GridFunction,
    GridSpec,
    ball_max_array,
    ball_mean_array,
    check_radius,
    comp_spec,
    crop,
)
from .semigroup import SemigroupOperator

Mode = Literal["mean-abs", "rms"]

TRUNCATION_NOTE = "balls restricted to dyadic radii <= L/4 centred on computational-grid nodes"


class NormError(ValueError):
    """Invalid norm parameters."""


@dataclass(frozen=True)
class MorreyParams:
    """Morrey indices ``(p, lambda)`` with optional ``alpha`` tied by ``lambda = n - alpha p``."""

    p: float
    lam: float
    n: int = 1
    alpha: float | None = None

    def __post_init__(self):
        if self.p < 1:
            raise NormError(f"p must be >= 1, got {self.p}")
        if not 0 <= self.lam <= self.n:
            raise NormError(f"lambda must lie in [0, {self.n}], got {self.lam}")
        if self.alpha is not None:
            if not math.isclose(self.lam, self.n - self.alpha * self.p, rel_tol=0, abs_tol=1e-12):
                raise NormError(
                    f"limiting relation lambda = n - alpha p fails: {self.lam} != {self.n - self.alpha * self.p}"
                )
            inv_pc = 1 - 1 / self.p
            assert math.isclose(self.lam / (self.p * self.n) + inv_pc, 1 - self.alpha / self.n, abs_tol=1e-12)
            assert math.isclose(self.n / self.p - self.lam / self.p, self.alpha, abs_tol=1e-12)

    @classmethod
    def limiting(cls, p: float, alpha: float, n: int = 1) -> MorreyParams:
        return cls(p, n - alpha * p, n, alpha)

    @property
    def conjugate(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    @property
    def measure_exponent(self) -> float:
        """Exponent of ``m(B)`` in the Morrey functional."""
        return -self.lam / (self.p * self.n)


@dataclass
class NormReport:
    """Value of a ball-supremum norm and the ball that attains it."""

    value: float
    center_index: tuple[int, ...] | None
    center: tuple[float, ...] | None
    radius: float | None
    radii: list[float]
    mode: str
    notes: list[str] = field(default_factory=list)
    per_radius: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "center_index": list(self.center_index) if self.center_index is not None else None,
            "center": list(self.center) if self.center is not None else None,
            "radius": self.radius,
            "radii": list(self.radii),
            "per_radius": list(self.per_radius),
            "mode": self.mode,
            "notes": list(self.notes),
        }


def _radii(f: GridFunction, radii: Sequence[float] | None) -> list[float]:
    rs = f.spec.dyadic_radii() if radii is None else sorted(float(r) for r in radii)
    if not rs:
        raise NormError("radius set is empty")
    for r in rs:
        check_radius(f.spec, r)
    return rs


def _sup_report(f: GridFunction, radii: list[float], fields: list[np.ndarray], mode: str, notes=None) -> NormReport:
    """Sup over radii and centers; ties go to the smallest radius, then smallest index."""
    cspec = f.comp_spec
    best, where, per = -np.inf, None, []
    for r, arr in zip(radii, fields):
        idx = int(np.argmax(arr))
        v = float(arr.flat[idx])
        per.append(v)
        if v > best:
            best, where = v, (r, idx)
    r, idx = where
    ci = tuple(int(i) for i in np.unravel_index(idx, cspec.shape))
    centre = tuple(float((i - cspec.N // 2) * cspec.h) for i in ci)
    return NormReport(max(best, 0.0), ci, centre, r, radii, mode, [TRUNCATION_NOTE] + list(notes or []), per)


# ----------------------------------------------------------------------
# Lebesgue norms


def lp_norm(f: GridFunction, p: float) -> float:
    """``(sum |f|^p h^n)^{1/p}``."""
    if p < 1 or not math.isfinite(p):
        raise NormError(f"p must satisfy 1 <= p < inf, got {p}")
    a = np.abs(f.values)
    top = float(np.max(a))
    if top == 0.0:
        return 0.0
    # factor out the max so tiny or huge data neither underflows nor overflows
    return top * float(np.sum((a / top) ** p) * f.spec.cell_volume) ** (1 / p)


def weak_lp_norm(f: GridFunction, p: float) -> float:
    """``sup_s s m{|f| > s}^{1/p}``, exact on grid data via sorting."""
    if p < 1 or not math.isfinite(p):
        raise NormError(f"p must satisfy 1 <= p < inf, got {p}")
    a = np.sort(np.abs(f.values).ravel())[::-1]
    k = np.arange(1, a.size + 1)
    return float(np.max(a * (k * f.spec.cell_volume) ** (1 / p)))


# ----------------------------------------------------------------------
# Morrey


def _morrey_field(arr: np.ndarray, spec: GridSpec, params: MorreyParams, r: float, method: str) -> np.ndarray:
    mask = BallMask(spec, r)
    measure = mask.measure
    integral = np.maximum(ball_mean_array(np.abs(arr) ** params.p, mask, method), 0.0) * measure
    return measure**params.measure_exponent * integral ** (1 / params.p)


def morrey_modulus_field(f: GridFunction, params: MorreyParams, r: float, method: str = "fft") -> np.ndarray:
    """``m(B)^{-lambda/(pn)} (int_B |f|^p)^{1/p}`` for every center on the computational grid."""
    check_radius(f.spec, r)
    return _morrey_field(f.comp_values(), f.spec, params, r, method)


def morrey_modulus(f: GridFunction, params: MorreyParams, r: float, method: str = "fft") -> float:
    return float(np.max(morrey_modulus_field(f, params, r, method)))


def morrey_norm(
    f: GridFunction, params: MorreyParams, radii: Sequence[float] | None = None, method: str = "fft"
) -> NormReport:
    """Sup of the Morrey functional over scanned balls."""
    if params.n != f.spec.n:
        raise NormError(f"parameters are for n = {params.n}, grid has n = {f.spec.n}")
    rs = _radii(f, radii)
    fields = [morrey_modulus_field(f, params, r, method) for r in rs]
    return _sup_report(f, rs, fields, f"morrey(p={params.p:g}, lambda={params.lam:g})")


# ----------------------------------------------------------------------
# BMO / VMO


def oscillation_field(f: GridFunction, r: float, mode: Mode = "mean-abs") -> np.ndarray:
    """Mean oscillation of ``f`` over the ball of radius ``r`` at each center."""
    check_radius(f.spec, r)
    arr = f.comp_values()
    mask = BallMask(f.spec, r)
    m = ball_mean_array(arr, mask, "fft")
    if mode == "rms":
        m2 = ball_mean_array(arr**2, mask, "fft")
        return np.sqrt(np.maximum(m2 - m**2, 0.0))
    if mode != "mean-abs":
        raise NormError(f"unknown oscillation mode {mode!r}")
    axes = tuple(range(-f.spec.n, 0))
    acc = np.zeros_like(arr)
    for off in mask.offsets:
        acc += np.abs(np.roll(arr, tuple(-int(o) for o in off), axis=axes) - m)
    return acc / mask.card


def bmo_norm(f: GridFunction, mode: Mode = "mean-abs", radii: Sequence[float] | None = None) -> NormReport:
    """``sup_B mean_B |f - f_B|`` (mean-abs) or its root-mean-square surrogate."""
    rs = _radii(f, radii)
    fields = [oscillation_field(f, r, mode) for r in rs]
    notes = [] if mode == "mean-abs" else ["rms oscillation; equivalent to mean-abs up to John-Nirenberg constants"]
    return _sup_report(f, rs, fields, f"bmo({mode})", notes)


def vmo_modulus(f: GridFunction, r: float) -> float:
    """``eta(f; r)``: largest mean-abs oscillation over balls of radius ``r``."""
    return float(np.max(oscillation_field(f, r, "mean-abs")))


# ----------------------------------------------------------------------
# semigroup BMO


def _check_op(f: GridFunction, op: SemigroupOperator) -> None:
    if op.spec != f.spec:
        raise GridError(f"operator grid {op.spec} does not match function grid {f.spec}")


def semigroup_oscillation_field(f: GridFunction, op: SemigroupOperator, r: float) -> np.ndarray:
    """``D_r(x0) = mean over B(x0, r) of |f - e^{-r^2 L} f|`` on the computational grid."""
    _check_op(f, op)
    check_radius(f.spec, r)
    arr = f.comp_values()
    g = np.abs(arr - op.evolve_array(r**2, arr, f.support_tag))
    return ball_mean_array(g, BallMask(f.spec, r), "fft")


def sharp_maximal_L(f: GridFunction, op: SemigroupOperator, radii: Sequence[float] | None = None) -> GridFunction:
    """Sharp maximal function adapted to ``L`` over the scanned balls.

    Each node takes the largest ``D_r(x0)`` over scanned radii and over centers
    within ``r`` of it.  Compact inputs return values on the padded torus,
    tagged periodic, so that the supremum matches :func:`bmoL_norm`.
    """
    rs = _radii(f, radii)
    out = None
    for r in rs:
        D = semigroup_oscillation_field(f, op, r)
        dil = ball_max_array(D, BallMask(f.spec, r))
        out = dil if out is None else np.maximum(out, dil)
    return GridFunction(f.comp_spec, out, "periodic")


def bmoL_norm(f: GridFunction, op: SemigroupOperator, radii: Sequence[float] | None = None) -> NormReport:
    """Ball-supremum form of the semigroup BMO norm."""
    rs = _radii(f, radii)
    fields = [semigroup_oscillation_field(f, op, r) for r in rs]
    notes = [f"t_B = r^2, backend {op.kind}"]
    if not op.conservative:
        notes.append("raw semi-norm; no quotient by the kernel of L")
    return _sup_report(f, rs, fields, "bmoL(mean-abs)", notes)


def vmoL_modulus(f: GridFunction, op: SemigroupOperator, r: float) -> float:
    return float(np.max(semigroup_oscillation_field(f, op, r)))


# ----------------------------------------------------------------------
# gradient Morrey


def gradient_magnitude(f: GridFunction) -> GridFunction:
    """Central-difference ``|grad f|`` on the computational grid (periodic differences)."""
    arr = f.comp_values()
    h = f.spec.h
    sq = np.zeros_like(arr)
    for ax in range(f.spec.n):
        d = (np.roll(arr, -1, axis=ax) - np.roll(arr, 1, axis=ax)) / (2 * h)
        sq += d**2
    g = np.sqrt(sq)
    if f.support_tag == "compact":
        g = crop(g, f.spec)
    return f.with_values(g)


def cis_norm(f: GridFunction, p: float, radii: Sequence[float] | None = None) -> float:
    """``|| |grad f| ||`` in the Morrey space with ``lambda = n - p``."""
    n = f.spec.n
    if not 1 <= p <= n:
        raise NormError(f"p must lie in [1, {n}], got {p}")
    return morrey_norm(gradient_magnitude(f), MorreyParams(p, n - p, n), radii).value


def poincare_ratio_field(f: GridFunction, r: float) -> np.ndarray:
    """Mean oscillation over ``(m(B)/v_n)^{1/n}`` times the ball mean of ``|grad f|``.

    ``(m(B)/v_n)^{1/n}`` is the radius of the continuum ball with the discrete
    ball's measure.  Centers with zero gradient mean give NaN.
    """
    n = f.spec.n
    mask = BallMask(f.spec, r)
    osc = oscillation_field(f, r, "mean-abs")
    grad = ball_mean_array(gradient_magnitude(f).comp_values(), mask, "fft")
    v_n = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    rad = (mask.measure / v_n) ** (1 / n)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(grad > 1e-12 * max(float(np.max(grad)), 1e-300), osc / (rad * grad), np.nan)


def comp_center_coordinates(f: GridFunction) -> list[np.ndarray]:
    return comp_spec(f.spec, f.support_tag).coordinates()
