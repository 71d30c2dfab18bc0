"""Heat, Schrödinger and divergence-form semigroups on uniform grids.

Each backend evolves samples on the computational torus of a grid function
(the box for periodic data, the zero-padded box for compact data).  Kernel
matrices are extracted column by column and Gaussian upper bounds
``|P_t(x, y)| <= C t^{-n/2} exp(-A |x - y|^2 / t)`` are fitted for a given
decay rate ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import fft as sfft
from scipy import linalg

from .grid import GridError, GridFunction, GridSpec, SupportTag, comp_spec, crop, embed

Kind = Literal["heat", "schrodinger", "divform"]

DENSE_BUDGET = 4096
# Entries with |P| t^{n/2} below this are ignored by bound fits: the factor
# exp(A d^2 / t) would otherwise amplify roundoff without limit.
FIT_NOISE_FLOOR = 1e-9


class OperatorError(ValueError):
    """Invalid operator construction or application."""


def angular_frequencies(spec: GridSpec) -> list[np.ndarray]:
    """Angular wave numbers of the real FFT layout over ``spec.shape``."""
    k_full = 2 * np.pi * sfft.fftfreq(spec.N, spec.h)
    k_half = 2 * np.pi * sfft.rfftfreq(spec.N, spec.h)
    axes = [k_full] * (spec.n - 1) + [k_half]
    return list(np.meshgrid(*axes, indexing="ij"))


def laplacian_symbol(spec: GridSpec) -> np.ndarray:
    """``|k|^2`` on the real FFT layout."""
    return sum(k**2 for k in angular_frequencies(spec))


def _as_array(field_, spec: GridSpec, name: str) -> np.ndarray:
    if isinstance(field_, GridFunction):
        if field_.spec.shape != spec.shape:
            raise OperatorError(f"{name} grid {field_.spec.shape} does not match {spec.shape}")
        return np.array(field_.values)
    arr = np.broadcast_to(np.asarray(field_, dtype=float), spec.shape).copy()
    return arr


@dataclass(frozen=True, eq=False)
class SemigroupOperator:
    """An evolution backend ``t -> e^{-tL}``.

    Args:
        kind: ``"heat"`` (L = -Laplacian), ``"schrodinger"`` (L = -Laplacian + V)
            or ``"divform"`` (L = -(a u')', one dimension only).
        spec: Grid on which inputs live.
        potential: Nonnegative samples of V (Schrödinger only).
        coefficient: Samples of a (divergence form only).
        substeps: Strang steps per call (Schrödinger only).
        ellipticity: Bounds ``(lower, upper)`` that ``a`` must respect.
    """

    kind: Kind
    spec: GridSpec
    potential: np.ndarray | GridFunction | float | None = None
    coefficient: np.ndarray | GridFunction | float | None = None
    substeps: int = 16
    ellipticity: tuple[float, float] = (0.5, 2.0)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("heat", "schrodinger", "divform"):
            raise OperatorError(f"unknown semigroup kind {self.kind!r}")
        if self.kind == "schrodinger":
            if self.potential is None:
                raise OperatorError("schrodinger backend needs a potential")
            V = _as_array(self.potential, self.spec, "potential")
            if not np.all(np.isfinite(V)):
                raise OperatorError("potential has non-finite entries")
            if np.any(V < 0):
                node = tuple(int(i) for i in np.argwhere(V < 0)[0])
                raise OperatorError(f"potential is negative at node {node} (V = {V[node]:.6g})")
            if int(self.substeps) < 1:
                raise OperatorError("substeps must be a positive integer")
            object.__setattr__(self, "potential", V)
        if self.kind == "divform":
            if self.spec.n != 1:
                raise OperatorError("divergence-form backend requires n = 1")
            if self.coefficient is None:
                raise OperatorError("divform backend needs a coefficient")
            a = _as_array(self.coefficient, self.spec, "coefficient")
            lo, hi = self.ellipticity
            bad = ~np.isfinite(a) | (a < lo) | (a > hi)
            if np.any(bad):
                node = int(np.argwhere(bad)[0][0])
                raise OperatorError(
                    f"coefficient violates ellipticity bounds [{lo}, {hi}] at node {node} (a = {a[node]:.6g})"
                )
            object.__setattr__(self, "coefficient", a)

    # ------------------------------------------------------------------
    @property
    def conservative(self) -> bool:
        """True when ``e^{-tL} 1 = 1`` on the periodic box."""
        return self.kind in ("heat", "divform")

    def padded(self) -> SemigroupOperator:
        """Same operator on the padded torus (V extended by 0, a by 1)."""
        pspec = self.spec.padded()
        V = embed(self.potential, self.spec) if self.potential is not None else None
        a = embed(self.coefficient - 1.0, self.spec) + 1.0 if self.coefficient is not None else None
        return SemigroupOperator(self.kind, pspec, V, a, self.substeps, self.ellipticity)

    def _fields(self, tag: SupportTag):
        """Potential / coefficient samples on the computational grid for ``tag``."""
        if tag == "compact":
            V = embed(self.potential, self.spec) if self.potential is not None else None
            a = embed(self.coefficient - 1.0, self.spec) + 1.0 if self.coefficient is not None else None
            return V, a
        return self.potential, self.coefficient

    def _divform_eig(self, tag: SupportTag):
        key = ("eig", tag)
        if key not in self._cache:
            cspec = comp_spec(self.spec, tag)
            if cspec.N > DENSE_BUDGET:
                raise OperatorError(f"divform needs a dense {cspec.N}x{cspec.N} matrix; budget is {DENSE_BUDGET}")
            _, a = self._fields(tag)
            self._cache[key] = linalg.eigh(divform_matrix(a, cspec.h))
        return self._cache[key]

    # ------------------------------------------------------------------
    def evolve_array(self, t: float, arr: np.ndarray, tag: SupportTag = "periodic") -> np.ndarray:
        """Apply ``e^{-tL}`` to samples on the computational grid.

        Leading axes of ``arr`` beyond the last ``n`` are treated as a batch.
        """
        if t < 0:
            raise OperatorError(f"time must be nonnegative, got {t}")
        arr = np.asarray(arr, dtype=float)
        if t == 0:
            return arr.copy()
        cspec = comp_spec(self.spec, tag)
        if self.kind == "heat":
            return _heat_multiply(t, arr, cspec)
        if self.kind == "schrodinger":
            V, _ = self._fields(tag)
            m = int(self.substeps)
            tau = t / m
            half = np.exp(-0.5 * tau * V)
            out = arr
            for _ in range(m):
                out = half * _heat_multiply(tau, half * out, cspec)
            return out
        w, Q = self._divform_eig(tag)
        coef = np.tensordot(arr, Q, axes=([-1], [0]))
        return np.tensordot(coef * np.exp(-t * w), Q.T, axes=([-1], [0]))

    def apply(self, t: float, f: GridFunction) -> GridFunction:
        """``e^{-tL} f`` with the support semantics of ``f``."""
        if f.spec != self.spec:
            raise GridError(f"grid spec mismatch: {f.spec} vs {self.spec}")
        out = self.evolve_array(t, f.comp_values(), f.support_tag)
        if f.support_tag == "compact":
            out = crop(out, self.spec)
        return GridFunction(self.spec, out, f.support_tag)


def _heat_multiply(t: float, arr: np.ndarray, cspec: GridSpec) -> np.ndarray:
    axes = tuple(range(-cspec.n, 0))
    mult = np.exp(-t * laplacian_symbol(cspec))
    return sfft.irfftn(sfft.rfftn(arr, axes=axes) * mult, s=cspec.shape, axes=axes)


def divform_matrix(a: np.ndarray, h: float) -> np.ndarray:
    """Periodic finite-difference matrix of ``-(a u')'``.

    Interface coefficients are arithmetic means of neighbouring nodes, so the
    matrix is symmetric with zero row sums.
    """
    a = np.asarray(a, dtype=float)
    N = a.size
    a_right = 0.5 * (a + np.roll(a, -1))
    a_left = np.roll(a_right, 1)
    M = np.diag(a_left + a_right)
    idx = np.arange(N)
    M[idx, (idx + 1) % N] -= a_right
    M[idx, (idx - 1) % N] -= a_left
    return M / h**2


def heat_operator(spec: GridSpec) -> SemigroupOperator:
    return SemigroupOperator("heat", spec)


def heat_apply(t: float, f: GridFunction) -> GridFunction:
    """Spectral heat semigroup ``e^{t Laplacian}``."""
    return heat_operator(f.spec).apply(t, f)


def schrodinger_apply(t: float, f: GridFunction, op: SemigroupOperator) -> GridFunction:
    if op.kind != "schrodinger":
        raise OperatorError(f"expected a schrodinger operator, got {op.kind}")
    return op.apply(t, f)


def divform_apply(t: float, f: GridFunction, op: SemigroupOperator) -> GridFunction:
    if op.kind != "divform":
        raise OperatorError(f"expected a divform operator, got {op.kind}")
    return op.apply(t, f)


# ----------------------------------------------------------------------
# kernels


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense kernel ``entries[i, j] = P(x_i, y_j)`` over row-major box nodes.

    ``t`` is ``None`` for time-independent kernels such as fractional integrals.
    """

    t: float | None
    entries: np.ndarray
    provenance: dict
    spec: GridSpec
    support_tag: SupportTag = "periodic"


def check_budget(spec: GridSpec) -> None:
    if spec.size > DENSE_BUDGET:
        raise OperatorError(
            f"dense kernel needs {spec.size}^2 entries; budget is N^n <= {DENSE_BUDGET}, use a smaller N"
        )


def operator_columns(fn, spec: GridSpec, tag: SupportTag, chunk: int = 256) -> np.ndarray:
    """Matrix whose column ``j`` is ``fn(e_j) / h^n`` restricted to box nodes.

    ``fn`` maps a batch of computational-grid arrays to a batch of the same shape.
    """
    check_budget(spec)
    size = spec.size
    out = np.empty((size, size))
    for start in range(0, size, chunk):
        stop = min(start + chunk, size)
        batch = np.zeros((stop - start, size))
        batch[np.arange(stop - start), np.arange(start, stop)] = 1.0
        batch = batch.reshape((stop - start,) + spec.shape)
        if tag == "compact":
            batch = embed(batch, spec)
        res = fn(batch)
        if tag == "compact":
            res = crop(res, spec)
        out[:, start:stop] = res.reshape(stop - start, size).T
    return out / spec.cell_volume


def kernel_matrix(op: SemigroupOperator, t: float, support_tag: SupportTag = "periodic") -> KernelMatrix:
    """Dense kernel of ``e^{-tL}`` on the box nodes.

    Column ``j`` is ``apply(t, e_j) / h^n`` for the unit vector ``e_j``, so that
    ``entries @ f * h^n`` reproduces ``apply(t, f)``.
    """
    if not t > 0:
        raise OperatorError(f"time must be positive, got {t}")
    entries = operator_columns(lambda b: op.evolve_array(t, b, support_tag), op.spec, support_tag)
    prov = {"backend": op.kind, "substeps": int(op.substeps) if op.kind == "schrodinger" else None}
    return KernelMatrix(float(t), entries, prov, op.spec, support_tag)


def node_coordinates(spec: GridSpec) -> np.ndarray:
    """Row-major node coordinates, shape ``(N^n, n)``."""
    return np.stack([c.ravel() for c in spec.coordinates()], axis=1)


def pair_distances(spec: GridSpec, tag: SupportTag) -> tuple[np.ndarray, np.ndarray]:
    """Distances between node pairs and a mask of pairs admitted to bound fits.

    Periodic: torus distance, all pairs.  Compact: Euclidean distance, pairs
    with both nodes in the inner half-box ``[-L/4, L/4)^n``.
    """
    X = node_coordinates(spec)
    diff = X[:, None, :] - X[None, :, :]
    if tag == "periodic":
        diff = diff - spec.L * np.round(diff / spec.L)
        mask = np.ones((spec.size, spec.size), dtype=bool)
    else:
        inner = np.all((X >= -spec.L / 4) & (X < spec.L / 4), axis=1)
        mask = inner[:, None] & inner[None, :]
    return np.sqrt(np.sum(diff**2, axis=-1)), mask


@dataclass
class GaussianBoundFit:
    """Minimal prefactor for the Gaussian bound at a fixed decay rate."""

    A: float
    C_fit: float
    t_list: list[float]
    max_violation_location: dict | None
    noise_floor: float = FIT_NOISE_FLOOR

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "C_fit": self.C_fit,
            "t_list": list(self.t_list),
            "argmax": self.max_violation_location,
            "noise_floor": self.noise_floor,
        }


def gaussian_bound_fit(kernels: list[KernelMatrix], A: float, noise_floor: float = FIT_NOISE_FLOOR) -> GaussianBoundFit:
    """Smallest ``C`` with ``|P_t| <= C t^{-n/2} exp(-A d^2/t)`` on the scanned entries."""
    if not kernels:
        raise OperatorError("at least one kernel matrix is required")
    if not A > 0:
        raise OperatorError(f"decay rate must be positive, got {A}")
    best, where = 0.0, None
    for K in kernels:
        n = K.spec.n
        d, mask = pair_distances(K.spec, K.support_tag)
        scaled = np.abs(K.entries) * K.t ** (n / 2)
        use = mask & (scaled >= noise_floor)
        vals = np.where(use, scaled * np.exp(np.where(use, A * d**2 / K.t, 0.0)), 0.0)
        idx = int(np.argmax(vals))
        if vals.flat[idx] > best:
            best = float(vals.flat[idx])
            i, j = divmod(idx, K.spec.size)
            where = {"t": K.t, "i": i, "j": j, "distance": float(d.flat[idx])}
    return GaussianBoundFit(A, best, [K.t for K in kernels], where, noise_floor)


def gaussian_bound_value(K: KernelMatrix, A: float, i: int, j: int) -> float:
    """Re-evaluate the bound ratio at one entry (argmax witness check)."""
    d, _ = pair_distances(K.spec, K.support_tag)
    n = K.spec.n
    return float(abs(K.entries[i, j]) * K.t ** (n / 2) * math.exp(A * d[i, j] ** 2 / K.t))


def heat_kernel_exact(spec: GridSpec, t: float, tag: SupportTag = "compact") -> np.ndarray:
    """Free-space heat kernel ``(4 pi t)^{-n/2} exp(-d^2/4t)`` between box nodes."""
    X = node_coordinates(spec)
    diff = X[:, None, :] - X[None, :, :]
    if tag == "periodic":
        diff = diff - spec.L * np.round(diff / spec.L)
    d2 = np.sum(diff**2, axis=-1)
    return (4 * np.pi * t) ** (-spec.n / 2) * np.exp(-d2 / (4 * t))
