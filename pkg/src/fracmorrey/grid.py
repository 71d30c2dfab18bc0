"""Uniform grids, grid functions, FFT convolution and discrete ball statistics.

Every operator in the package consumes and produces :class:`GridFunction`
objects.  A grid function is either *periodic* (samples of a torus function)
or *compact* (samples of a function supported in the box and extended by
zero).  Compact functions are processed on the zero-padded computational torus
of side ``padding_factor * L``; periodic ones on the box itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import fft as sfft

SupportTag = Literal["periodic", "compact"]

# Outer fraction of each axis on which compact functions must vanish.
BAND_FRACTION = 1 / 8
BAND_TOLERANCE = 1e-12


class GridError(ValueError):
    """Raised on invalid grid specifications or incompatible grid functions."""


def _is_power_of_two(N: int) -> bool:
    return N >= 1 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box ``[-L/2, L/2)^n`` with ``N`` points per axis.

    Node ``i`` along an axis sits at ``(i - N/2) * h`` so the origin is a node.
    """

    n: int
    N: int
    L: float
    padding_factor: int = 2

    def __post_init__(self):
        if self.n not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {self.n}")
        if not _is_power_of_two(int(self.N)) or self.N < 2:
            raise GridError(f"points per axis must be a power of two, got {self.N}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise GridError(f"side length must be positive, got {self.L}")
        if int(self.padding_factor) != self.padding_factor or self.padding_factor < 1:
            raise GridError(f"padding factor must be an integer >= 1, got {self.padding_factor}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.h

    def coordinates(self) -> list[np.ndarray]:
        """Node coordinates, one array of shape ``self.shape`` per axis."""
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.n), indexing="ij"))

    def radius_array(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coordinates()))

    def padded(self) -> GridSpec:
        """Spec of the computational torus used for compact functions."""
        p = self.padding_factor
        return GridSpec(self.n, self.N * p, self.L * p, 1)

    def refined(self) -> GridSpec:
        return GridSpec(self.n, self.N * 2, self.L, self.padding_factor)

    def dilated(self, delta: float) -> GridSpec:
        """Same node count, side ``L / delta``: realizes ``f(delta x)`` from the same samples."""
        return GridSpec(self.n, self.N, self.L / delta, self.padding_factor)

    def dyadic_radii(self, min_mult: int = 2, max_frac: float = 0.25) -> list[float]:
        """Radii ``min_mult*h, 2*min_mult*h, ...`` up to ``max_frac * L``."""
        radii = []
        r_idx = min_mult
        while r_idx * self.h <= max_frac * self.L * (1 + 1e-12):
            radii.append(r_idx * self.h)
            r_idx *= 2
        return radii


def comp_spec(spec: GridSpec, tag: SupportTag) -> GridSpec:
    """Computational spec: the padded torus for compact data, the box otherwise."""
    if tag == "compact":
        if spec.padding_factor < 2:
            raise GridError("compact support requires padding_factor >= 2")
        return spec.padded()
    return GridSpec(spec.n, spec.N, spec.L, spec.padding_factor)


def _box_slices(spec: GridSpec) -> tuple[slice, ...]:
    off = (spec.padding_factor - 1) * spec.N // 2
    return (slice(off, off + spec.N),) * spec.n


def embed(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Zero-pad box samples into the padded torus (trailing ``n`` axes)."""
    lead = values.shape[: values.ndim - spec.n]
    out = np.zeros(lead + spec.padded().shape, dtype=values.dtype)
    out[(Ellipsis,) + _box_slices(spec)] = values
    return out


def crop(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Inverse of :func:`embed` (trailing ``n`` axes)."""
    return values[(Ellipsis,) + _box_slices(spec)].copy()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on a :class:`GridSpec` with a support tag."""

    spec: GridSpec
    values: np.ndarray
    support_tag: SupportTag = "periodic"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.spec.shape:
            if vals.size == self.spec.size:
                vals = vals.reshape(self.spec.shape)
            else:
                raise GridError(f"values shape {vals.shape} does not match grid {self.spec.shape}")
        if self.support_tag not in ("periodic", "compact"):
            raise GridError(f"unknown support tag {self.support_tag!r}")
        if not np.all(np.isfinite(vals)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
            raise GridError(f"non-finite value at node {bad}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    # arithmetic helpers keep the spec and tag
    def with_values(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.spec, values, self.support_tag)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            _check_same(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            _check_same(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            _check_same(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    @property
    def comp_spec(self) -> GridSpec:
        return comp_spec(self.spec, self.support_tag)

    def comp_values(self) -> np.ndarray:
        """Samples on the computational torus (zero padded when compact)."""
        if self.support_tag == "compact":
            return embed(self.values, self.spec)
        return np.array(self.values)

    def band_violation(self) -> float:
        """Max |value| on the outer band relative to the max |value|."""
        vmax = float(np.max(np.abs(self.values)))
        if vmax == 0.0:
            return 0.0
        band = int(round(self.spec.N * BAND_FRACTION))
        mask = np.zeros(self.spec.shape, dtype=bool)
        for ax in range(self.spec.n):
            idx = [slice(None)] * self.spec.n
            idx[ax] = slice(0, band)
            mask[tuple(idx)] = True
            idx[ax] = slice(self.spec.N - band, None)
            mask[tuple(idx)] = True
        return float(np.max(np.abs(self.values[mask]))) / vmax

    def check_compact(self) -> None:
        if self.support_tag == "compact" and self.band_violation() > BAND_TOLERANCE:
            raise GridError(
                f"compact function does not vanish on the outer band "
                f"(relative value {self.band_violation():.3e})"
            )


def _check_same(f: GridFunction, g: GridFunction) -> None:
    if f.spec != g.spec:
        raise GridError(f"grid spec mismatch: {f.spec} vs {g.spec}")


def sample(
    spec: GridSpec,
    rule: Callable[..., np.ndarray] | float,
    support_tag: SupportTag = "periodic",
) -> GridFunction:
    """Evaluate ``rule(x1[, x2])`` at every node.

    ``rule`` receives one coordinate array per axis and must broadcast.  A
    plain number gives a constant function.
    """
    if callable(rule):
        vals = np.broadcast_to(np.asarray(rule(*spec.coordinates()), dtype=float), spec.shape)
    else:
        vals = np.full(spec.shape, float(rule))
    vals = np.array(vals)
    if not np.all(np.isfinite(vals)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
        x = tuple(float(c[bad]) for c in spec.coordinates())
        raise GridError(f"rule is not finite at node {bad} (x = {x})")
    f = GridFunction(spec, vals, support_tag)
    f.check_compact()
    return f


def delta(spec: GridSpec, support_tag: SupportTag = "periodic") -> GridFunction:
    """Discrete delta at the origin: ``1/h^n`` at the origin node, zero elsewhere."""
    vals = np.zeros(spec.shape)
    vals[(spec.N // 2,) * spec.n] = 1.0 / spec.cell_volume
    return GridFunction(spec, vals, support_tag)


# ----------------------------------------------------------------------------
# convolution


def fft_convolve_periodic(arr: np.ndarray, kernel_centered: np.ndarray, cell: float, n: int) -> np.ndarray:
    """Circular convolution over the trailing ``n`` axes, Riemann weight ``cell``.

    ``kernel_centered`` has its origin at index ``N//2`` on each axis.
    """
    axes = tuple(range(-n, 0))
    k0 = np.fft.ifftshift(kernel_centered, axes=axes)
    shape = arr.shape[-n:]
    khat = sfft.rfftn(k0, s=shape, axes=axes)
    fhat = sfft.rfftn(arr, s=shape, axes=axes)
    return sfft.irfftn(fhat * khat, s=shape, axes=axes) * cell


def convolve(f: GridFunction, kernel: GridFunction) -> GridFunction:
    """Riemann-sum convolution ``sum_j k(x_i - y_j) f(y_j) h^n`` via the DFT.

    Compact inputs are zero padded by the padding factor before the transform
    and cropped afterwards (linear convolution of the box-truncated arrays).
    """
    if f.spec != kernel.spec:
        raise GridError(f"grid spec mismatch: {f.spec} vs {kernel.spec}")
    spec = f.spec
    if f.support_tag == "compact":
        out = fft_convolve_periodic(embed(f.values, spec), embed(kernel.values, spec), spec.cell_volume, spec.n)
        return GridFunction(spec, crop(out, spec), "compact")
    out = fft_convolve_periodic(f.values, kernel.values, spec.cell_volume, spec.n)
    return GridFunction(spec, out, f.support_tag)


# ----------------------------------------------------------------------------
# balls


@dataclass(frozen=True, eq=False)
class BallMask:
    """Integer offsets ``delta`` with ``|delta| h <= r`` (ties included)."""

    spec: GridSpec
    radius: float
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.radius < self.spec.h * (1 - 1e-9):
            raise GridError(f"ball radius {self.radius} is below the spacing {self.spec.h}")
        m = int(math.floor(self.radius / self.spec.h + 1e-9))
        rng = np.arange(-m, m + 1)
        grids = np.meshgrid(*([rng] * self.spec.n), indexing="ij")
        offs = np.stack([g.ravel() for g in grids], axis=1)
        r2 = (self.radius / self.spec.h) ** 2
        keep = np.sum(offs.astype(float) ** 2, axis=1) <= r2 * (1 + 1e-12) + 1e-9
        object.__setattr__(self, "offsets", offs[keep])

    @property
    def card(self) -> int:
        return len(self.offsets)

    @property
    def measure(self) -> float:
        return self.card * self.spec.cell_volume

    def indicator(self, shape: tuple[int, ...]) -> np.ndarray:
        """Origin-centered indicator on a grid of the given shape."""
        ind = np.zeros(shape)
        centre = np.array([s // 2 for s in shape])
        idx = self.offsets + centre
        ind[tuple(idx.T)] = 1.0
        return ind


def check_radius(spec: GridSpec, r: float) -> None:
    if not (spec.h * (1 - 1e-9) <= r <= spec.L / 4 * (1 + 1e-9)):
        raise GridError(f"radius {r} outside [h, L/4] = [{spec.h}, {spec.L / 4}]")


def ball_mean_array(arr: np.ndarray, mask: BallMask, method: str = "fft") -> np.ndarray:
    """Ball means of a periodic array over its trailing ``n`` axes."""
    n = mask.spec.n
    if method == "fft":
        ind = mask.indicator(arr.shape[-n:]) / mask.card
        return fft_convolve_periodic(arr, ind, 1.0, n)
    if method == "direct":
        acc = np.zeros_like(arr, dtype=float)
        axes = tuple(range(-n, 0))
        for off in mask.offsets:
            acc += np.roll(arr, tuple(-int(o) for o in off), axis=axes)
        return acc / mask.card
    raise ValueError(f"unknown method {method!r}")


def ball_max_array(arr: np.ndarray, mask: BallMask) -> np.ndarray:
    """Max of ``arr`` over the ball around each node (periodic)."""
    n = mask.spec.n
    axes = tuple(range(-n, 0))
    out = np.full_like(arr, -np.inf, dtype=float)
    for off in mask.offsets:
        np.maximum(out, np.roll(arr, tuple(-int(o) for o in off), axis=axes), out=out)
    return out


def ball_mean(f: GridFunction, r: float, method: str = "fft") -> GridFunction:
    """Mean of ``f`` over the discrete ball of radius ``r`` around every node."""
    check_radius(f.spec, r)
    mask = BallMask(f.spec, r)
    out = ball_mean_array(f.comp_values(), mask, method)
    if f.support_tag == "compact":
        out = crop(out, f.spec)
    return GridFunction(f.spec, out, f.support_tag)


def torus_offsets(shape: tuple[int, ...]) -> list[np.ndarray]:
    """Signed minimal index offsets on a periodic grid, one array per axis."""
    return [np.where(np.arange(N) > N // 2, np.arange(N) - N, np.arange(N)) for N in shape]


def iter_nodes(shape: tuple[int, ...]):
    return itertools.product(*(range(s) for s in shape))
