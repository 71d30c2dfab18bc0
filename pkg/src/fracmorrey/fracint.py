"""Fractional integrals ``L^{-alpha/2}`` by log-time quadrature, and Riesz potentials.

The operator is evaluated as

    L^{-alpha/2} f = 1/Gamma(alpha/2) * int_0^inf e^{-tL} f t^{alpha/2 - 1} dt

with a trapezoid rule in ``u = log t`` on ``[t_min, t_max]``.  The piece below
``t_min`` is added in closed form (``e^{-tL} f ~ f`` there); the piece above
``t_max`` is estimated and reported but not added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import fft as sfft
from scipy import integrate, special

from .grid import GridError, GridFunction, GridSpec, SupportTag, comp_spec, crop, embed
from .semigroup import (
    KernelMatrix,
    OperatorError,
    SemigroupOperator,
    laplacian_symbol,
    operator_columns,
    pair_distances,
)

DcMode = Literal["project", "none"]


@dataclass(frozen=True)
class QuadratureSpec:
    """Log-trapezoid rule on ``[t_min, t_max]``.

    ``None`` endpoints are filled from the grid: ``t_min = h^2/4`` and
    ``t_max = L_comp^2`` where ``L_comp`` is the side of the computational torus.
    """

    t_min: float | None = None
    t_max: float | None = None
    nodes_per_decade: int = 16

    def __post_init__(self):
        if int(self.nodes_per_decade) < 8:
            raise ValueError(f"nodes_per_decade must be >= 8, got {self.nodes_per_decade}")
        if self.t_min is not None and self.t_max is not None and not 0 < self.t_min < self.t_max:
            raise ValueError(f"need 0 < t_min < t_max, got {self.t_min}, {self.t_max}")

    def resolved(self, spec: GridSpec, tag: SupportTag) -> QuadratureSpec:
        cspec = comp_spec(spec, tag)
        tmin = self.t_min if self.t_min is not None else spec.h**2 / 4
        tmax = self.t_max if self.t_max is not None else cspec.L**2
        return QuadratureSpec(tmin, tmax, self.nodes_per_decade)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Times ``t_k`` and trapezoid weights in ``u = log t``."""
        if self.t_min is None or self.t_max is None:
            raise ValueError("quadrature endpoints are unresolved")
        decades = math.log10(self.t_max / self.t_min)
        M = max(1, math.ceil(self.nodes_per_decade * decades - 1e-9))
        u = np.linspace(math.log(self.t_min), math.log(self.t_max), M + 1)
        w = np.full(M + 1, (u[-1] - u[0]) / M)
        w[0] *= 0.5
        w[-1] *= 0.5
        return np.exp(u), w

    def doubled(self) -> QuadratureSpec:
        return replace(self, nodes_per_decade=2 * self.nodes_per_decade)


@dataclass(frozen=True)
class FracOperator:
    """``L^{-alpha/2}`` for a semigroup backend.

    ``dc_mode=None`` picks ``"project"`` for periodic data under a conservative
    backend (heat, divform) and ``"none"`` otherwise.
    """

    semigroup: SemigroupOperator
    alpha: float
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    dc_mode: DcMode | None = None

    def __post_init__(self):
        n = self.semigroup.spec.n
        if not 0 < self.alpha < n:
            raise OperatorError(f"alpha must lie in (0, {n}), got {self.alpha}")
        if self.dc_mode not in (None, "project", "none"):
            raise OperatorError(f"unknown dc_mode {self.dc_mode!r}")

    @property
    def spec(self) -> GridSpec:
        return self.semigroup.spec

    def dc_for(self, tag: SupportTag) -> DcMode:
        if self.dc_mode is not None:
            return self.dc_mode
        return "project" if (tag == "periodic" and self.semigroup.conservative) else "none"

    def padded(self) -> FracOperator:
        """Operator on the padded torus with the quadrature of the compact problem."""
        q = self.quadrature.resolved(self.spec, "compact")
        return FracOperator(self.semigroup.padded(), self.alpha, q, self.dc_mode)


@dataclass
class FracReport:
    alpha: float
    t_min: float
    t_max: float
    nodes: int
    dc_mode: str
    removed_mean: float | None
    lower_tail_max: float
    upper_tail_density: float
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _spectral_weight(symbol: np.ndarray, a: float, ts: np.ndarray, ws: np.ndarray, tmin: float) -> np.ndarray:
    """Quadrature of ``1/Gamma(a) int t^{a-1} exp(-t s) dt`` for each symbol value ``s``."""
    acc = np.zeros_like(symbol, dtype=float)
    for t, w in zip(ts, ws):
        acc += w * t**a * np.exp(-t * symbol)
    return (acc + tmin**a / a) / special.gamma(a)


def _frac_arrays(op: FracOperator, arr: np.ndarray, tag: SupportTag) -> tuple[np.ndarray, FracReport]:
    """Fractional integral of computational-grid samples (batch over leading axes)."""
    sg = op.semigroup
    spec = sg.spec
    cspec = comp_spec(spec, tag)
    n = spec.n
    a = op.alpha / 2
    q = op.quadrature.resolved(spec, tag)
    ts, ws = q.nodes()
    dc = op.dc_for(tag)
    axes = tuple(range(-n, 0))
    notes = []

    removed = None
    mean = arr.mean(axis=axes, keepdims=True)
    if dc == "project":
        removed = float(np.max(np.abs(mean)))
        arr = arr - mean
        if sg.kind == "schrodinger":
            notes.append("mean projection applied to a non-conservative backend")
    elif tag == "periodic" and sg.conservative:
        if np.max(np.abs(mean)) > 1e-12 * max(np.max(np.abs(arr)), 1e-300):
            raise OperatorError(
                "periodic conservative backend with dc_mode 'none' and nonzero mean: the time integral diverges"
            )

    if sg.kind == "heat":
        sym = laplacian_symbol(cspec)
        mult = _spectral_weight(sym, a, ts, ws, q.t_min)
        if dc == "project":
            mult.flat[0] = 0.0
        out = sfft.irfftn(sfft.rfftn(arr, axes=axes) * mult, s=cspec.shape, axes=axes)
        last = sfft.irfftn(sfft.rfftn(arr, axes=axes) * np.exp(-q.t_max * sym), s=cspec.shape, axes=axes)
    elif sg.kind == "divform":
        w, Q = sg._divform_eig(tag)
        mult = _spectral_weight(np.maximum(w, 0.0), a, ts, ws, q.t_min)
        coef = np.tensordot(arr, Q, axes=([-1], [0]))
        if dc == "project":
            mult[np.abs(w) <= 1e-9 * np.max(np.abs(w))] = 0.0
        out = np.tensordot(coef * mult, Q.T, axes=([-1], [0]))
        last = np.tensordot(coef * np.exp(-q.t_max * np.maximum(w, 0.0)), Q.T, axes=([-1], [0]))
    else:
        # each node is evolved from the input: a power of one symmetric Strang
        # step is symmetric, a chain of steps of different sizes is not
        out = np.zeros_like(arr, dtype=float)
        g = arr
        for t, w in zip(ts, ws):
            g = sg.evolve_array(t, arr, tag)
            out += w * t**a * g
        out = (out + q.t_min**a / a * arr) / special.gamma(a)
        last = g

    ga = special.gamma(a)
    report = FracReport(
        alpha=op.alpha,
        t_min=q.t_min,
        t_max=q.t_max,
        nodes=len(ts),
        dc_mode=dc,
        removed_mean=removed,
        lower_tail_max=float(np.max(np.abs(arr)) * q.t_min**a / (a * ga)) if arr.size else 0.0,
        upper_tail_density=float(np.max(np.abs(last)) * q.t_max**a / ga) if arr.size else 0.0,
        notes=notes,
    )
    return out, report


def frac_apply(op: FracOperator, f: GridFunction, extend: bool = False, full_output: bool = False):
    """``L^{-alpha/2} f`` by subordination quadrature.

    Args:
        op: Fractional operator.
        f: Input on the operator's grid.
        extend: For compact ``f``, return the result on the whole padded torus
            (tagged periodic) instead of cropping it to the box.
        full_output: Also return a :class:`FracReport`.
    """
    if f.spec != op.spec:
        raise GridError(f"grid spec mismatch: {f.spec} vs {op.spec}")
    out, rep = _frac_arrays(op, f.comp_values(), f.support_tag)
    if f.support_tag == "compact":
        if extend:
            g = GridFunction(f.spec.padded(), out, "periodic")
        else:
            g = GridFunction(f.spec, crop(out, f.spec), "compact")
    else:
        g = GridFunction(f.spec, out, "periodic")
    return (g, rep) if full_output else g


# ----------------------------------------------------------------------
# Riesz potential


def riesz_constant(alpha: float, n: int) -> float:
    """Normalizing constant ``2^alpha pi^{n/2} Gamma(alpha/2) / Gamma((n - alpha)/2)``."""
    return 2**alpha * math.pi ** (n / 2) * special.gamma(alpha / 2) / special.gamma((n - alpha) / 2)


def origin_cell_average(alpha: float, n: int, h: float) -> float:
    """Exact mean of ``|x|^{alpha-n}`` over the cell ``[-h/2, h/2]^n``."""
    if n == 1:
        return (2 / h) * (h / 2) ** alpha / alpha
    val, _ = integrate.quad(lambda th: (h / (2 * math.cos(th))) ** alpha, 0.0, math.pi / 4, epsabs=0, epsrel=1e-13)
    return 8 * val / (alpha * h**2)


NEAR_FIELD_CELLS = 3


def _cell_average_2d(alpha: float, j1: int, j2: int, h: float) -> float:
    """Mean of ``|x|^{alpha-2}`` over the cell centred at ``(j1 h, j2 h)``, off the origin."""
    val, _ = integrate.dblquad(
        lambda y, x: math.hypot(x, y) ** (alpha - 2),
        (j1 - 0.5) * h,
        (j1 + 0.5) * h,
        (j2 - 0.5) * h,
        (j2 + 0.5) * h,
        epsabs=0,
        epsrel=1e-12,
    )
    return val / h**2


def riesz_kernel(alpha: float, spec: GridSpec, cell_average: str = "all") -> np.ndarray:
    """Riesz kernel on ``spec``, origin-centered, with exact cell averages.

    ``cell_average="origin"`` samples ``|x|^{alpha-n}`` at every node except the
    singular origin cell.  ``"all"`` replaces nodal samples by exact cell means
    (closed form in one dimension, adaptive quadrature for the cells within
    ``NEAR_FIELD_CELLS`` of the origin in two dimensions), which removes the
    O(h^alpha) bias of the neighbouring cells as well.
    """
    if cell_average not in ("all", "origin"):
        raise ValueError(f"unknown cell_average {cell_average!r}")
    n, h = spec.n, spec.h
    r = spec.radius_array()
    with np.errstate(divide="ignore"):
        k = np.where(r > 0, r ** (alpha - n), 0.0)
    centre = (spec.N // 2,) * n
    if cell_average == "all":
        if n == 1:
            j = np.abs(np.arange(spec.N) - spec.N // 2).astype(float)
            jm = np.maximum(j - 0.5, 0.0)
            k = ((j + 0.5) ** alpha - jm**alpha) * h ** (alpha - 1) / alpha
            k = np.where(j > 0, k, 0.0)
        else:
            m = NEAR_FIELD_CELLS
            for j1 in range(0, m + 1):
                for j2 in range(0, j1 + 1):
                    if j1 == 0:
                        continue
                    v = _cell_average_2d(alpha, j1, j2, h)
                    for a_, b_ in {(j1, j2), (j2, j1)}:
                        for sa in (-1, 1):
                            for sb in (-1, 1):
                                k[centre[0] + sa * a_, centre[1] + sb * b_] = v
    k[centre] = origin_cell_average(alpha, n, h)
    return k / riesz_constant(alpha, n)


def riesz_apply(alpha: float, f: GridFunction, cell_average: str = "all") -> GridFunction:
    """Classical Riesz potential ``I_alpha f`` of a compactly supported grid function.

    The kernel is sampled on the padded torus so that every box output sees
    the untruncated kernel over the support of ``f``.
    """
    n = f.spec.n
    if not 0 < alpha < n:
        raise OperatorError(f"alpha must lie in (0, {n}), got {alpha}")
    if f.support_tag != "compact":
        raise OperatorError("riesz_apply needs compact input: the kernel is not summable on the torus")
    pspec = f.spec.padded()
    k = np.fft.ifftshift(riesz_kernel(alpha, pspec, cell_average))
    axes = tuple(range(n))
    out = sfft.irfftn(sfft.rfftn(embed(f.values, f.spec)) * sfft.rfftn(k), s=pspec.shape, axes=axes)
    return GridFunction(f.spec, crop(out * f.spec.cell_volume, f.spec), "compact")


# ----------------------------------------------------------------------
# kernels and fits


def frac_kernel(op: FracOperator, support_tag: SupportTag = "compact") -> KernelMatrix:
    """Dense kernel ``K_alpha(x_i, y_j)`` of ``L^{-alpha/2}`` on the box nodes."""
    entries = operator_columns(lambda b: _frac_arrays(op, b, support_tag)[0], op.spec, support_tag)
    prov = {"backend": op.semigroup.kind, "alpha": op.alpha, "operator": "fractional_integral", "dc_mode": op.dc_for(support_tag)}
    return KernelMatrix(None, entries, prov, op.spec, support_tag)


@dataclass
class KernelBoundFit:
    alpha: float
    constant: float
    r_cut: float
    argmax: dict | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def kernel_bound_fit(K: KernelMatrix, alpha: float, r_cut: float | None = None) -> KernelBoundFit:
    """``max |K(x, y)| |x - y|^{n - alpha}`` over admitted pairs with ``|x - y| >= r_cut``."""
    spec = K.spec
    r_cut = 4 * spec.h if r_cut is None else r_cut
    if r_cut < 4 * spec.h * (1 - 1e-12):
        raise OperatorError(f"exclusion radius must be at least 4h = {4 * spec.h}")
    d, mask = pair_distances(spec, K.support_tag)
    use = mask & (d >= r_cut * (1 - 1e-12))
    if not np.any(use):
        raise OperatorError("exclusion radius leaves no admitted pairs")
    vals = np.where(use, np.abs(K.entries) * d ** (spec.n - alpha), 0.0)
    idx = int(np.argmax(vals))
    i, j = divmod(idx, spec.size)
    return KernelBoundFit(alpha, float(vals.flat[idx]), r_cut, {"i": i, "j": j, "distance": float(d.flat[idx])})


def _domination_floor(ref: np.ndarray) -> float:
    return 1e-14 * float(np.max(np.abs(ref))) if ref.size else 0.0


def domination_check(op: FracOperator, f: GridFunction) -> float:
    """``max |L^{-alpha/2} f| / (I_alpha |f| + floor)`` over box nodes."""
    if f.support_tag != "compact":
        raise OperatorError("domination_check needs compact input")
    num = np.abs(frac_apply(op, f).values)
    den = riesz_apply(op.alpha, abs(f)).values
    if not np.any(num):
        return 0.0
    return float(np.max(num / (den + _domination_floor(den))))


def difference_arrays(op: FracOperator, t: float, arr: np.ndarray, tag: SupportTag) -> np.ndarray:
    g, _ = _frac_arrays(op, arr, tag)
    return g - op.semigroup.evolve_array(t, g, tag)


def difference_apply(op: FracOperator, t: float, f: GridFunction) -> GridFunction:
    """``(I - e^{-tL}) L^{-alpha/2} f`` evaluated on the computational torus."""
    if not t > 0:
        raise OperatorError(f"time must be positive, got {t}")
    if f.spec != op.spec:
        raise GridError(f"grid spec mismatch: {f.spec} vs {op.spec}")
    out = difference_arrays(op, t, f.comp_values(), f.support_tag)
    if f.support_tag == "compact":
        out = crop(out, f.spec)
    return f.with_values(out)


@dataclass
class DifferenceKernelReport:
    """Fitted constant of ``|K_t(x, y)| <= C |x - y|^{alpha - n} t / |x - y|^2``."""

    alpha: float
    t_list: list[float]
    C_diff: float
    r_cut: float
    argmax: dict | None
    per_t: list[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def difference_kernel(op: FracOperator, t: float, support_tag: SupportTag = "periodic") -> KernelMatrix:
    entries = operator_columns(lambda b: difference_arrays(op, t, b, support_tag), op.spec, support_tag)
    prov = {"backend": op.semigroup.kind, "alpha": op.alpha, "operator": "difference"}
    return KernelMatrix(float(t), entries, prov, op.spec, support_tag)


def difference_kernel_bound_fit(
    op: FracOperator,
    t_list: list[float],
    r_cut: float | None = None,
    support_tag: SupportTag = "periodic",
) -> DifferenceKernelReport:
    """Scan ``|K_t| d^{n - alpha + 2} / t`` over ``t`` in ``t_list`` and ``d >= r_cut``."""
    spec = op.spec
    if not t_list:
        raise OperatorError("t_list is empty")
    r_cut = 4 * spec.h if r_cut is None else r_cut
    if r_cut < 4 * spec.h * (1 - 1e-12):
        raise OperatorError(f"exclusion radius must be at least 4h = {4 * spec.h}")
    d, mask = pair_distances(spec, support_tag)
    use = mask & (d >= r_cut * (1 - 1e-12))
    if not np.any(use):
        raise OperatorError("exclusion radius leaves no admitted pairs")
    weight = np.where(use, d ** (spec.n - op.alpha + 2), 0.0)
    best, where, per_t = 0.0, None, []
    for t in t_list:
        K = difference_kernel(op, t, support_tag).entries
        vals = np.abs(K) * weight / t
        idx = int(np.argmax(vals))
        per_t.append(float(vals.flat[idx]))
        if vals.flat[idx] > best:
            best = float(vals.flat[idx])
            i, j = divmod(idx, spec.size)
            where = {"t": float(t), "i": i, "j": j, "distance": float(d.flat[idx])}
    return DifferenceKernelReport(op.alpha, [float(t) for t in t_list], best, r_cut, where, per_t)
