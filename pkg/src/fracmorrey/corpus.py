"""Seeded test-function families with declared space memberships.

Every function is a continuous rule on R^n evaluated on the grid, so the same
function is resampled exactly on refined or dilated grids.  Only the
regularization radius of singular families depends on the grid (default
``2h``).  Randomness comes from ``numpy.random.SeedSequence([seed, family,
index])`` so each function is reproducible on its own.

Families:

=========== ================================================================
gaussian    Gaussian bumps (``mean_zero`` option: second-derivative profile)
ball        smoothed ball indicators
power       ``|x - x0|^{-n/p_c}`` clipped inside the regularization radius
log         ``log |P(x)|`` for products of affine factors, clipped
loglog      ``|log |x - x0||^delta`` clipped
trig        random trigonometric polynomials (periodic)
potential   nonnegative bump potentials ``V`` (periodic)
coefficient elliptic coefficients ``a`` with values in ``(1/2, 2)`` (periodic)
=========== ================================================================

Compactly supported families are multiplied by a smooth cutoff of radius
``L/4`` around a center with ``|x0| <= L/8``, so they vanish on the outer
eighth of every axis.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import GridFunction, GridSpec, sample
from .mgf import write_grid

FAMILIES = ("gaussian", "ball", "power", "log", "loglog", "trig", "potential", "coefficient")
COMPACT_FAMILIES = ("gaussian", "ball", "power", "log", "loglog")


class CorpusError(ValueError):
    """Invalid corpus request."""


@dataclass(frozen=True)
class CorpusSpec:
    """What to generate.

    Args:
        seed: Root seed.
        families: Family names, generated in the given order.
        count: Functions per family.
        grid: Sampling grid.
        rho_reg: Regularization radius for singular families; ``None`` means ``2h``.
        options: Family options: ``p_c`` (power exponent, default 2), ``delta``
            (loglog exponent, default 1/2), ``mean_zero`` (gaussian),
            ``floor`` (potential floor, default 0.25), ``roots`` (log factors,
            default 2), ``centered`` (put every singular center at the origin).
    """

    seed: int
    families: tuple[str, ...]
    count: int
    grid: GridSpec
    rho_reg: float | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise CorpusError(f"unknown corpus families {unknown}; known: {list(FAMILIES)}")
        if self.count < 0:
            raise CorpusError("count must be nonnegative")
        object.__setattr__(self, "families", tuple(self.families))

    @property
    def rho(self) -> float:
        return 2 * self.grid.h if self.rho_reg is None else float(self.rho_reg)

    def on_grid(self, grid: GridSpec) -> CorpusSpec:
        return CorpusSpec(self.seed, self.families, self.count, grid, self.rho_reg, dict(self.options))


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A corpus member with its rule, samples and declared memberships."""

    __test__ = False  # not a pytest class

    id: str
    family: str
    function: GridFunction
    params: dict
    memberships: tuple[str, ...]
    singular_points: tuple[tuple[float | None, ...], ...]
    rule: Callable[..., np.ndarray] = field(repr=False)

    def resample(self, grid: GridSpec) -> GridFunction:
        return sample(grid, self.rule, self.function.support_tag)

    def manifest(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "support_tag": self.function.support_tag,
            "params": self.params,
            "memberships": list(self.memberships),
            "singular_points": [list(p) for p in self.singular_points],
        }


# ----------------------------------------------------------------------
# building blocks


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def cutoff(dist: np.ndarray, R: float) -> np.ndarray:
    """1 inside ``0.6 R``, 0 outside ``R``, smooth in between."""
    return 1.0 - smooth_step((dist - 0.6 * R) / (0.4 * R))


def _dist(xs, x0) -> np.ndarray:
    return np.sqrt(sum((x - c) ** 2 for x, c in zip(xs, x0)))


def _center(rng: np.random.Generator, spec: GridSpec, origin: bool) -> tuple[float, ...]:
    """Center on the lattice of spacing L/64 with ``|x0| <= L/8``."""
    if origin:
        return (0.0,) * spec.n
    unit = spec.L / 64
    while True:
        c = rng.integers(-8, 9, size=spec.n)
        if np.sqrt(np.sum(c.astype(float) ** 2)) <= 8:
            return tuple(float(v * unit) for v in c)


def _wrapped(rule_at: Callable, L: float, n: int) -> Callable:
    """Periodize a rapidly decaying rule by summing the nearest images."""

    def rule(*xs):
        total = 0.0
        shifts = np.array(np.meshgrid(*([[-1, 0, 1]] * n), indexing="ij")).reshape(n, -1).T
        for s in shifts:
            total = total + rule_at(*(x - L * k for x, k in zip(xs, s)))
        return total

    return rule


def _trig_rule(rng: np.random.Generator, spec: GridSpec, modes: int = 4) -> tuple[Callable, dict]:
    n, L = spec.n, spec.L
    ms = np.array(np.meshgrid(*([np.arange(-modes, modes + 1)] * n), indexing="ij")).reshape(n, -1).T
    ms = ms[np.any(ms != 0, axis=1)]
    scale = 1.0 / (1.0 + np.sum(ms**2, axis=1))
    ca = rng.standard_normal(len(ms)) * scale
    cb = rng.standard_normal(len(ms)) * scale
    c0 = float(rng.standard_normal())

    def rule(*xs):
        out = c0 + 0.0 * xs[0]
        for m, a, b in zip(ms, ca, cb):
            ph = 2 * np.pi * sum(mi * x for mi, x in zip(m, xs)) / L
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return out

    return rule, {"modes": modes, "constant": c0}


# ----------------------------------------------------------------------
# families


def _make(family: str, k: int, rng: np.random.Generator, cs: CorpusSpec):
    spec, opts = cs.grid, cs.options
    n, L = spec.n, spec.L
    R = L / 4
    rho = cs.rho
    origin = bool(opts.get("centered", False)) or k == 0

    if family == "gaussian":
        x0 = _center(rng, spec, False)
        mean_zero = bool(opts.get("mean_zero", False))
        if mean_zero:
            sigma = float(rng.uniform(L / 64, L / 40))
        else:
            sigma = float(rng.uniform(L / 64, L / 16))
        amp = float(rng.uniform(0.5, 2.0))

        def rule(*xs):
            d2 = _dist(xs, x0) ** 2
            prof = np.exp(-d2 / (2 * sigma**2))
            if mean_zero:
                prof = (1 - d2 / (n * sigma**2)) * prof
            return amp * prof * cutoff(np.sqrt(d2), R)

        mem = ("L^p", "M^{p,lambda}", "VM^{p,lambda}", "BMO", "VMO", "smooth")
        return rule, "compact", {"center": x0, "sigma": sigma, "amplitude": amp, "mean_zero": mean_zero}, mem, ()

    if family == "ball":
        x0 = _center(rng, spec, False)
        radius = float(rng.uniform(L / 32, L / 12))
        width = radius / 8

        def rule(*xs):
            d = _dist(xs, x0)
            return 0.5 * (1 - np.tanh((d - radius) / width)) * cutoff(d, R)

        mem = ("L^p", "M^{p,lambda}", "VM^{p,lambda}", "BMO", "VMO")
        return rule, "compact", {"center": x0, "radius": radius, "width": width}, mem, ()

    if family == "power":
        x0 = _center(rng, spec, origin)
        p_c = float(opts.get("p_c", 2.0))
        expo = n / p_c

        def rule(*xs):
            d = _dist(xs, x0)
            return np.maximum(d, rho) ** (-expo) * cutoff(d, R)

        mem = (f"L^{{{p_c:g},inf}}", f"M^{{q,lambda}} with lambda = n(1 - q/{p_c:g}), q < {p_c:g}", f"not L^{{{p_c:g}}}", "not VM^{p,lambda} at lambda = n - alpha p with alpha = n/p_c")
        return rule, "compact", {"center": x0, "p_c": p_c, "rho_reg": rho}, mem, (x0,)

    if family == "log":
        nroots = int(opts.get("roots", 2))
        unit = L / 64
        if origin:
            roots = [(0, 0.0)] + [(int(rng.integers(n)), float(rng.integers(-8, 9) * unit)) for _ in range(nroots - 1)]
        else:
            roots = [(int(rng.integers(n)), float(rng.integers(-8, 9) * unit)) for _ in range(nroots)]
        centre = (0.0,) * n

        def rule(*xs):
            total = 0.0
            for ax, c in roots:
                total = total + np.log(np.maximum(np.abs(xs[ax] - c), rho))
            return total * cutoff(_dist(xs, centre), R * 1.5)

        # a factor is singular on a hyperplane: free coordinates are None
        sing = tuple(tuple(c if i == ax else None for i in range(n)) for ax, c in roots)
        mem = ("BMO", "not VMO", "VM^{p,lambda} for lambda < n", "L^p")
        return rule, "compact", {"roots": [[ax, c] for ax, c in roots], "rho_reg": rho}, mem, sing

    if family == "loglog":
        x0 = _center(rng, spec, origin)
        delta = float(opts.get("delta", 0.5))

        def rule(*xs):
            d = _dist(xs, x0)
            return np.abs(np.log(np.maximum(d, rho))) ** delta * cutoff(d, R)

        mem = ("VMO", "BMO", "VM^{p,lambda}", "unbounded", "L^p")
        return rule, "compact", {"center": x0, "delta": delta, "rho_reg": rho}, mem, (x0,)

    if family == "trig":
        rule, params = _trig_rule(rng, spec)
        return rule, "periodic", params, ("smooth", "periodic", "BMO", "VMO"), ()

    if family == "potential":
        floor = float(opts.get("floor", 0.25))
        nb = int(rng.integers(1, 4))
        bumps = []
        for _ in range(nb):
            c = tuple(float(v) for v in rng.uniform(-L / 4, L / 4, size=n))
            bumps.append((c, float(rng.uniform(0.5, 3.0)), float(rng.uniform(L / 64, L / 16))))

        def at(*xs):
            out = 0.0
            for c, amp, w in bumps:
                out = out + amp * np.exp(-(_dist(xs, c) ** 2) / (2 * w**2))
            return out

        periodic = _wrapped(at, L, n)

        def rule(*xs):
            return floor + periodic(*xs)

        params = {"floor": floor, "bumps": [[list(c), a, w] for c, a, w in bumps]}
        return rule, "periodic", params, ("nonnegative",), ()

    if family == "coefficient":
        trig, params = _trig_rule(rng, spec, modes=3)

        def rule(*xs):
            return 2.0 ** np.tanh(trig(*xs))

        return rule, "periodic", params, ("elliptic [1/2, 2]",), ()

    raise CorpusError(f"unknown family {family!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def family_rng(seed: int, family: str, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), FAMILIES.index(family), k]))


def generate(cs: CorpusSpec) -> list[TestFunction]:
    """Generate the corpus; identical specs give bit-identical samples."""
    out = []
    for family in cs.families:
        for k in range(cs.count):
            rule, tag, params, mem, sing = _make(family, k, family_rng(cs.seed, family, k), cs)
            f = sample(cs.grid, rule, tag)
            out.append(TestFunction(f"{family}-{k:02d}", family, f, _jsonable(params), mem, sing, rule))
    return out


def write_corpus(functions: list[TestFunction], cs: CorpusSpec, directory: str | os.PathLike) -> Path:
    """Write one MGF1 file per function plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for tf in functions:
        fname = f"{tf.id}.mgf"
        write_grid(tf.function, d / fname)
        entries.append({**tf.manifest(), "file": fname})
    manifest = {
        "seed": cs.seed,
        "families": list(cs.families),
        "count": cs.count,
        "grid": {"n": cs.grid.n, "N": cs.grid.N, "L": cs.grid.L, "padding": cs.grid.padding_factor},
        "rho_reg": cs.rho,
        "options": _jsonable(cs.options),
        "functions": entries,
    }
    path = d / "manifest.json"
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path
