"""Experiment configuration: JSON loading, defaults and parameter-relation checks."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import FAMILIES, CorpusSpec
from ..fracint import QuadratureSpec
from ..grid import GridError, GridSpec
from ..norms import MorreyParams

EXPERIMENTS = ("thm1", "thm2", "cor3", "adams", "kernel-suite", "examples")

DEFAULT_THRESHOLDS = {
    "drift": 1.5,  # max/min of per-level maxima
    "decay": 0.25,  # eta(r_min) <= decay * eta(r_max)
    "dilation": 0.05,  # relative change of ratios under dilation
    "step_slack": 0.10,  # allowed increase per step of a decreasing series
    "vm_filter": 0.4,  # input modulus at r_min over its max, required for VM membership
    "stability": 0.15,  # relative drift of fitted constants
    "embedding_stability": 0.20,
    "bmo_stability": 0.10,
    "vmo_decay": 0.5,
    "gaussian_tolerance": 0.01,
    "skip_rel": 1e-12,
}

REL_TOL = 1e-12


class ConfigError(ValueError):
    """Configuration is malformed or violates a parameter relation."""


@dataclass
class ExperimentConfig:
    """Validated experiment configuration.

    ``raw`` keeps the parsed JSON so reports can echo it verbatim.
    """

    experiment: str
    n: int
    N_list: list[int]
    L: float
    padding: int
    operator: dict
    alpha: float | None
    p: float | None
    lam: float | None
    q: float | None
    quadrature: QuadratureSpec
    radii: dict
    corpus: dict
    thresholds: dict
    extra: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def grid(self, N: int) -> GridSpec:
        return GridSpec(self.n, N, self.L, self.padding)

    def grids(self) -> list[GridSpec]:
        return [self.grid(N) for N in self.N_list]

    def radii_for(self, spec: GridSpec) -> list[float]:
        return spec.dyadic_radii(int(self.radii.get("min_mult", 2)), float(self.radii.get("max_frac", 0.25)))

    def corpus_spec(self, spec: GridSpec, **override) -> CorpusSpec:
        c = {**self.corpus, **override}
        rho = c.get("rho_reg")
        if isinstance(rho, dict):
            rho = rho["mult"] * spec.h if "mult" in rho else rho["absolute"]
        return CorpusSpec(
            int(c.get("seed", 0)),
            tuple(c.get("families", ["gaussian", "ball"])),
            int(c.get("count", 2)),
            spec,
            rho,
            dict(c.get("options", {})),
        )

    def morrey(self) -> MorreyParams:
        return MorreyParams(self.p, self.lam, self.n)

    def threshold(self, name: str) -> float:
        return float(self.thresholds[name])


def _num(d: dict, key: str):
    v = d.get(key)
    if v is None or v == "auto":
        return None
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a finite number or 'auto', got {v!r}")
    return float(v)


def from_dict(raw: dict, experiment: str | None = None) -> ExperimentConfig:
    """Validate a parsed config; ``experiment`` overrides the file's field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    exp = experiment or raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; expected one of {list(EXPERIMENTS)}")
    g = raw.get("grid", {})
    try:
        n = int(g.get("n", 1))
        N_list = [int(N) for N in g.get("N_list", [256, 512])]
        L = float(g.get("L", 16.0))
        padding = int(g.get("padding", 2))
        for N in N_list:
            GridSpec(n, N, L, padding)
    except (GridError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc
    if not N_list or sorted(N_list) != N_list or len(set(N_list)) != len(N_list):
        raise ConfigError("grid.N_list must be a nonempty strictly increasing list")

    op = dict(raw.get("operator", {"kind": "heat"}))
    if op.get("kind", "heat") not in ("heat", "schrodinger", "divform"):
        raise ConfigError(f"unknown operator kind {op.get('kind')!r}")
    op.setdefault("kind", "heat")
    if op["kind"] == "divform" and n != 1:
        raise ConfigError("divform operator requires n = 1")

    alpha, p, lam, q = _num(raw, "alpha"), _num(raw, "p"), _num(raw, "lambda"), _num(raw, "q")
    if alpha is not None and not 0 < alpha < n:
        raise ConfigError(f"alpha must lie in (0, {n}), got {alpha}")
    if p is not None and p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")

    if exp in ("thm1", "thm2"):
        if alpha is None or p is None:
            raise ConfigError(f"{exp} needs alpha and p")
        if p > n / alpha + REL_TOL:
            raise ConfigError(f"{exp} needs p <= n/alpha so that lambda = n - alpha p >= 0")
        limiting = n - alpha * p
        if lam is None:
            lam = max(limiting, 0.0)
        elif not math.isclose(lam, limiting, rel_tol=0, abs_tol=REL_TOL):
            raise ConfigError(f"{exp} requires lambda = n - alpha p = {limiting}, got {lam}")
    elif exp == "cor3":
        if alpha is None:
            raise ConfigError("cor3 needs alpha")
        if p is None:
            p = n / alpha
        elif not math.isclose(p, n / alpha, rel_tol=REL_TOL):
            raise ConfigError(f"cor3 requires p = n/alpha = {n / alpha}, got {p}")
        if q is None:
            q = 1.0
        if not 1 <= q < p:
            raise ConfigError(f"cor3 embedding needs 1 <= q < p, got q = {q}")
        if lam is None:
            lam = n * (1 - q / p)
        elif not math.isclose(lam, n * (1 - q / p), abs_tol=REL_TOL):
            raise ConfigError(f"cor3 embedding requires lambda = n(1 - q/p) = {n * (1 - q / p)}, got {lam}")
    elif exp == "adams":
        if alpha is None or p is None or lam is None:
            raise ConfigError("adams needs alpha, p and lambda")
        if not 0 < lam < n - alpha * p:
            raise ConfigError(f"adams requires 0 < lambda < n - alpha p = {n - alpha * p}, got {lam}")
        q_rel = 1 / (1 / p - alpha / (n - lam))
        if q is None:
            q = q_rel
        elif not math.isclose(q, q_rel, rel_tol=1e-12):
            raise ConfigError(f"adams requires 1/q = 1/p - alpha/(n - lambda), i.e. q = {q_rel}, got {q}")
    if lam is not None and not 0 <= lam <= n:
        raise ConfigError(f"lambda must lie in [0, {n}], got {lam}")

    qd = raw.get("quadrature", {}) or {}
    try:
        quad = QuadratureSpec(qd.get("tmin"), qd.get("tmax"), int(qd.get("nodes_per_decade", 16)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid quadrature: {exc}") from exc

    radii = dict(raw.get("radii", {}) or {})
    radii.setdefault("min_mult", 2)
    radii.setdefault("max_frac", 0.25)
    if float(radii["max_frac"]) > 0.25 or int(radii["min_mult"]) < 1:
        raise ConfigError("radii need min_mult >= 1 and max_frac <= 1/4")

    corpus = dict(raw.get("corpus", {}) or {})
    fams = corpus.get("families", ["gaussian", "ball"])
    bad = [f for f in fams if f not in FAMILIES]
    if bad:
        raise ConfigError(f"unknown corpus families {bad}")

    thresholds = {**DEFAULT_THRESHOLDS, **(raw.get("thresholds", {}) or {})}
    known = {"experiment", "grid", "operator", "alpha", "p", "lambda", "q", "quadrature", "radii", "corpus", "thresholds", "output"}
    extra = {k: v for k, v in raw.items() if k not in known}

    cfg = ExperimentConfig(exp, n, N_list, L, padding, op, alpha, p, lam, q, quad, radii, corpus, thresholds, extra, raw)
    if p is not None and lam is not None:
        try:
            MorreyParams(p, lam, n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | os.PathLike, experiment: str | None = None) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return from_dict(raw, experiment)


__all__ = ["ConfigError", "ExperimentConfig", "from_dict", "load_config", "DEFAULT_THRESHOLDS"]
