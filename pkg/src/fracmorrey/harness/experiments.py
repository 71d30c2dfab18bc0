"""Experiment runners: norm-ratio refinement studies and kernel fits."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .. import __version__
from ..corpus import CorpusSpec, TestFunction, family_rng, generate, _make
from ..fracint import (
    FracOperator,
    difference_kernel_bound_fit,
    domination_check,
    frac_apply,
    frac_kernel,
    kernel_bound_fit,
    riesz_constant,
)
from ..grid import GridFunction, GridSpec, sample
from ..norms import (
    MorreyParams,
    bmo_norm,
    bmoL_norm,
    cis_norm,
    lp_norm,
    morrey_modulus,
    morrey_norm,
    poincare_ratio_field,
    vmo_modulus,
    vmoL_modulus,
    weak_lp_norm,
)
from ..semigroup import SemigroupOperator, gaussian_bound_fit, kernel_matrix
from .config import ExperimentConfig
from .report import ExperimentReport


# ----------------------------------------------------------------------
# shared pieces


def build_semigroup(cfg: ExperimentConfig, spec: GridSpec, kind: str | None = None) -> SemigroupOperator:
    """Semigroup from the ``operator`` block.

    ``potential`` / ``coefficient`` are ``{"constant": c}`` or
    ``{"seed": s, ...options}``, the latter drawing member 0 of the matching
    corpus family on ``spec``.
    """
    op = cfg.operator
    kind = kind or op.get("kind", "heat")
    if kind == "heat":
        return SemigroupOperator("heat", spec)
    if kind == "schrodinger":
        V = _field(op.get("potential", {"seed": 0}), "potential", spec)
        return SemigroupOperator("schrodinger", spec, potential=V, substeps=int(op.get("substeps", 16)))
    a = _field(op.get("coefficient", {"seed": 0}), "coefficient", spec)
    return SemigroupOperator("divform", spec, coefficient=a)


def _field(desc: dict, family: str, spec: GridSpec) -> np.ndarray:
    if "constant" in desc:
        return np.full(spec.shape, float(desc["constant"]))
    seed = int(desc.get("seed", 0))
    opts = {k: v for k, v in desc.items() if k != "seed"}
    cs = CorpusSpec(seed, (family,), 1, spec, None, opts)
    rule, tag, *_ = _make(family, 0, family_rng(seed, family, 0), cs)
    return sample(spec, rule, tag).values


def frac_output(frac: FracOperator, f: GridFunction) -> tuple[GridFunction, SemigroupOperator]:
    """Fractional integral and the semigroup on whose grid it lives.

    Compact inputs give an output on the whole padded torus, since the
    fractional integral of a compactly supported function is not compact.
    """
    if f.support_tag == "compact":
        return frac_apply(frac, f, extend=True), frac.semigroup.padded()
    return frac_apply(frac, f), frac.semigroup


def _frac_op(cfg: ExperimentConfig, spec: GridSpec, alpha: float | None = None) -> FracOperator:
    return FracOperator(build_semigroup(cfg, spec), cfg.alpha if alpha is None else alpha, cfg.quadrature)


def _corpus(cfg: ExperimentConfig, spec: GridSpec) -> list[TestFunction]:
    return generate(cfg.corpus_spec(spec))


def _environment(cfg: ExperimentConfig) -> dict:
    return {"seed": int(cfg.corpus.get("seed", 0)), "version": __version__, "numpy": np.__version__}


def _ratio_rows(cfg, spec, items, num_fn, den_fn, num_mode, den_mode):
    """Rows ``{id, numerator, denominator, ratio}``; degenerate denominators are skipped."""
    raw = []
    for tf in items:
        den = den_fn(tf)
        raw.append((tf, den))
    scale = max([abs(d.value if hasattr(d, "value") else d) for _, d in raw] + [0.0])
    rows, notes = [], []
    for tf, den in raw:
        dval = den.value if hasattr(den, "value") else den
        if not dval > cfg.threshold("skip_rel") * scale or scale == 0:
            notes.append(f"N={spec.N} {tf.id}: denominator {dval:.3e} below {cfg.threshold('skip_rel'):g} x scale; row skipped")
            rows.append({"N": spec.N, "id": tf.id, "family": tf.family, "skipped": True})
            continue
        num = num_fn(tf)
        nval = num.value if hasattr(num, "value") else num
        row = {
            "N": spec.N,
            "id": tf.id,
            "family": tf.family,
            "numerator": nval,
            "denominator": dval,
            "ratio": nval / dval,
            "numerator_mode": num_mode,
            "denominator_mode": den_mode,
            "skipped": False,
        }
        if hasattr(num, "to_dict"):
            row["numerator_ball"] = {"center": num.center, "radius": num.radius, "notes": num.notes}
        if hasattr(den, "to_dict"):
            row["denominator_ball"] = {"center": den.center, "radius": den.radius, "notes": den.notes}
        rows.append(row)
    return rows, notes


def _level_max(rows: list[dict], N: int) -> tuple[float, str | None]:
    live = [r for r in rows if r["N"] == N and not r["skipped"]]
    if not live:
        return math.nan, None
    best = max(live, key=lambda r: (r["ratio"], r["id"]))
    return best["ratio"], best["id"]


def _drift(values: list[float]) -> float:
    vals = [v for v in values if np.isfinite(v) and v > 0]
    if len(vals) < 2:
        return math.nan
    return max(vals) / min(vals)


def _refinement_fit(name: str, rows: list[dict], Ns: list[int], limit: float) -> tuple[dict, dict, bool]:
    maxes, witnesses = [], []
    for N in Ns:
        v, who = _level_max(rows, N)
        maxes.append(v)
        witnesses.append(who)
    drift = _drift(maxes)
    ok = bool(np.isfinite(drift) and drift <= limit)
    fit = {"name": name, "values": maxes, "N": Ns, "witness_ids": witnesses, "drift": drift, "limit": limit, "pass": ok}
    series = {"name": f"{name}_refinement", "columns": ["N", "value"], "rows": [[N, v] for N, v in zip(Ns, maxes)]}
    return fit, series, ok


def bmoL_of_frac(frac: FracOperator, f: GridFunction, radii):
    g, sg = frac_output(frac, f)
    return bmoL_norm(g, sg, radii)


# ----------------------------------------------------------------------
# Ratio experiments


def run_thm1(cfg: ExperimentConfig) -> ExperimentReport:
    """``||L^{-alpha/2} f||_{BMO_L} / ||f||_{M^{p,lambda}}`` with ``lambda = n - alpha p``."""
    params = MorreyParams(cfg.p, cfg.lam, cfg.n)
    rows, notes, fits, series = [], [], [], []
    for spec in cfg.grids():
        radii = cfg.radii_for(spec)
        frac = _frac_op(cfg, spec)
        items = _corpus(cfg, spec)
        r, nt = _ratio_rows(
            cfg,
            spec,
            items,
            lambda tf: bmoL_of_frac(frac, tf.function, radii),
            lambda tf: morrey_norm(tf.function, params, radii),
            "bmoL(mean-abs)",
            f"morrey(p={cfg.p:g}, lambda={cfg.lam:g})",
        )
        rows += r
        notes += nt
    fit, s, ok = _refinement_fit("max_ratio", rows, cfg.N_list, cfg.threshold("drift"))
    fits.append(fit)
    series.append(s)
    passed = ok

    delta = float(cfg.extra.get("dilation", 2.0))
    if build_semigroup(cfg, cfg.grid(cfg.N_list[0])).kind == "heat":
        probe, ok_d = _dilation_probe(cfg, params, delta)
        fits.append(probe)
        passed = passed and ok_d
    else:
        notes.append("dilation probe skipped: only the heat semigroup commutes with dilations")
    return ExperimentReport("thm1", cfg.raw, rows, fits, series, passed, notes, _environment(cfg))


def _dilation_probe(cfg: ExperimentConfig, params: MorreyParams, delta: float) -> tuple[dict, bool]:
    """Same samples on a grid of side ``L / delta`` realize ``f(delta x)``."""
    spec = cfg.grid(cfg.N_list[0])
    dspec = spec.dilated(delta)
    q = cfg.quadrature
    dq = replace(
        q,
        t_min=None if q.t_min is None else q.t_min / delta**2,
        t_max=None if q.t_max is None else q.t_max / delta**2,
    )
    frac = FracOperator(SemigroupOperator("heat", spec), cfg.alpha, q)
    dfrac = FracOperator(SemigroupOperator("heat", dspec), cfg.alpha, dq)
    radii, dradii = cfg.radii_for(spec), cfg.radii_for(dspec)
    changes = []
    for tf in _corpus(cfg, spec):
        f = tf.function
        fd = GridFunction(dspec, f.values, f.support_tag)
        den, dden = morrey_norm(f, params, radii).value, morrey_norm(fd, params, dradii).value
        if den <= 0:
            continue
        r0 = bmoL_of_frac(frac, f, radii).value / den
        r1 = bmoL_of_frac(dfrac, fd, dradii).value / dden
        changes.append({"id": tf.id, "ratio": r0, "dilated_ratio": r1, "rel_change": abs(r1 - r0) / max(abs(r0), 1e-300)})
    worst = max((c["rel_change"] for c in changes), default=0.0)
    ok = worst <= cfg.threshold("dilation")
    return {"name": "dilation_probe", "delta": delta, "N": spec.N, "rows": changes, "max_rel_change": worst, "limit": cfg.threshold("dilation"), "pass": ok}, ok


def _declares_vm(tf: TestFunction) -> bool:
    return any(m.startswith("VM^{p,lambda}") for m in tf.memberships)


def run_thm2(cfg: ExperimentConfig) -> ExperimentReport:
    """Small-ball decay of ``eta_L(L^{-alpha/2} f; r)`` for verified ``VM^{p,lambda}`` inputs."""
    params = MorreyParams(cfg.p, cfg.lam, cfg.n)
    rows, notes, series = [], [], []
    admitted_any, all_ok = False, True
    slack, decay, vmf = cfg.threshold("step_slack"), cfg.threshold("decay"), cfg.threshold("vm_filter")
    for spec in cfg.grids():
        radii = cfg.radii_for(spec)
        frac = _frac_op(cfg, spec)
        for tf in _corpus(cfg, spec):
            f = tf.function
            # membership is judged over the full dyadic range, independent of the eta window
            mod = [morrey_modulus(f, params, r) for r in spec.dyadic_radii()]
            vm_ratio = mod[0] / max(mod) if max(mod) > 0 else 0.0
            row = {"N": spec.N, "id": tf.id, "family": tf.family, "input_modulus": mod, "vm_check_ratio": vm_ratio}
            reasons = []
            if not _declares_vm(tf):
                reasons.append("family does not declare VM^{p,lambda} membership")
            if vm_ratio > vmf:
                reasons.append(f"input Morrey modulus at r_min is {vm_ratio:.3g} of its maximum (> {vmf:g}): VM check failed")
            if reasons:
                row.update(admitted=False, reasons=reasons)
                notes.append(f"N={spec.N} {tf.id} excluded: {'; '.join(reasons)}")
                rows.append(row)
                continue
            admitted_any = True
            g, sg = frac_output(frac, f)
            eta = [vmoL_modulus(g, sg, r) for r in radii]
            steps_ok = all(eta[i] <= (1 + slack) * eta[i + 1] + 1e-300 for i in range(len(eta) - 1))
            decay_ok = eta[0] <= decay * eta[-1] or eta[-1] == 0.0
            ok = bool(steps_ok and decay_ok)
            all_ok = all_ok and ok
            row.update(admitted=True, radii=radii, eta_L=eta, monotone=steps_ok, decay_ratio=(eta[0] / eta[-1] if eta[-1] else 0.0), pass_=ok)
            rows.append(row)
            series.append({"name": f"eta_L_{tf.id}_N{spec.N}", "columns": ["radius", "value"], "rows": [[r, v] for r, v in zip(radii, eta)]})
    if not admitted_any:
        notes.append("no corpus function passed the VM^{p,lambda} filter; nothing to verify")
    passed = bool(admitted_any and all_ok)
    return ExperimentReport("thm2", cfg.raw, _fix_pass_key(rows), [], series, passed, notes, _environment(cfg))


def _fix_pass_key(rows):
    for r in rows:
        if "pass_" in r:
            r["pass"] = r.pop("pass_")
    return rows


def run_cor3(cfg: ExperimentConfig) -> ExperimentReport:
    """``||L^{-alpha/2} f||_{BMO_L} / ||f||_{L^{p,inf}}`` with ``p = n/alpha``, plus the weak-to-Morrey embedding."""
    p = cfg.p
    emb = MorreyParams(cfg.q, cfg.lam, cfg.n)
    rows, notes, fits, series = [], [], [], []
    weak_series, lp_series, emb_vals = [], [], []
    for spec in cfg.grids():
        radii = cfg.radii_for(spec)
        frac = _frac_op(cfg, spec)
        items = _corpus(cfg, spec)
        r, nt = _ratio_rows(
            cfg,
            spec,
            items,
            lambda tf: bmoL_of_frac(frac, tf.function, radii),
            lambda tf: weak_lp_norm(tf.function, p),
            "bmoL(mean-abs)",
            f"weak L^{p:g}",
        )
        rows += r
        notes += nt
        emb_best = 0.0
        for tf in items:
            w = weak_lp_norm(tf.function, p)
            if w > 0:
                emb_best = max(emb_best, morrey_norm(tf.function, emb, radii).value / w)
        emb_vals.append(emb_best)
        probe = next((tf for tf in items if tf.family == "power" and not any(tf.params["center"])), None)
        if probe is not None:
            weak_series.append(weak_lp_norm(probe.function, p))
            lp_series.append(lp_norm(probe.function, p))
    fit, s, ok = _refinement_fit("max_ratio", rows, cfg.N_list, cfg.threshold("drift"))
    fits.append(fit)
    series.append(s)
    passed = ok

    emb_drift = _drift(emb_vals) - 1
    emb_ok = bool(np.isfinite(emb_drift) and emb_drift <= cfg.threshold("embedding_stability"))
    fits.append({"name": "embedding_constant", "q": cfg.q, "lambda": cfg.lam, "values": emb_vals, "N": cfg.N_list, "drift": emb_drift, "limit": cfg.threshold("embedding_stability"), "pass": emb_ok})
    passed = passed and emb_ok

    if weak_series:
        n = cfg.n
        v_n = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        target = v_n ** (1 / p)
        err = abs(weak_series[-1] - target) / target
        growth = [lp_series[i + 1] / lp_series[i] - 1 for i in range(len(lp_series) - 1)]
        fits.append({"name": "power_weak_norm", "values": weak_series, "target": target, "final_rel_error": err, "pass": err <= 0.05})
        fits.append({"name": "power_lp_growth", "values": lp_series, "growth_per_refinement": growth, "required": 0.20, "pass": bool(growth) and min(growth) >= 0.20})
        lp_ok = bool(growth) and min(growth) >= 0.20
        passed = passed and err <= 0.05 and lp_ok
        if not lp_ok:
            notes.append("L^p norm of the clipped power grows only logarithmically in 1/rho_reg, below the required 20% per refinement")
        series.append({"name": "power_weak_and_lp", "columns": ["N", "weak", "lp"], "rows": [[N, w, l] for N, w, l in zip(cfg.N_list, weak_series, lp_series)]})
    else:
        notes.append("no origin-centred power function in the corpus; weak-norm probe skipped")
    return ExperimentReport("cor3", cfg.raw, rows, fits, series, passed, notes, _environment(cfg))


def run_adams(cfg: ExperimentConfig) -> ExperimentReport:
    """``||L^{-alpha/2} f||_{M^{q,lambda}} / ||f||_{M^{p,lambda}}`` in the Adams regime."""
    src = MorreyParams(cfg.p, cfg.lam, cfg.n)
    dst = MorreyParams(cfg.q, cfg.lam, cfg.n)
    rows, notes = [], []
    for spec in cfg.grids():
        radii = cfg.radii_for(spec)
        frac = _frac_op(cfg, spec)
        items = _corpus(cfg, spec)
        r, nt = _ratio_rows(
            cfg,
            spec,
            items,
            lambda tf: morrey_norm(frac_output(frac, tf.function)[0], dst, radii),
            lambda tf: morrey_norm(tf.function, src, radii),
            f"morrey(q={cfg.q:g}, lambda={cfg.lam:g})",
            f"morrey(p={cfg.p:g}, lambda={cfg.lam:g})",
        )
        rows += r
        notes += nt
    fit, s, ok = _refinement_fit("max_ratio", rows, cfg.N_list, cfg.threshold("drift"))
    fit["q"] = cfg.q
    return ExperimentReport("adams", cfg.raw, rows, [fit], [s], ok, notes, _environment(cfg))


# ----------------------------------------------------------------------
# kernels


def _rel_drift(values: list[float]) -> float:
    return _drift(values) - 1


def run_kernel_suite(cfg: ExperimentConfig) -> ExperimentReport:
    """Gaussian, fractional-kernel and difference-kernel fits across backends and levels."""
    ex = cfg.extra
    backends = ex.get("backends", ["heat", "schrodinger", "divform"])
    t_list = [float(t) for t in ex.get("t_list", [0.01, 0.1, 1.0])]
    alphas = [float(a) for a in ex.get("alphas", [0.25, 0.5])]
    A_heat, A_other = float(ex.get("A_heat", 0.25)), float(ex.get("A_other", 0.125))
    stab = cfg.threshold("stability")
    h0 = cfg.grid(cfg.N_list[0]).h
    div_t = [t for t in t_list if t >= 10 * h0**2]
    diff_t = [float(t) for t in ex.get("difference_t_list", [h0**2 * 4**k for k in range(12) if h0**2 * 4**k <= cfg.L**2 / 16])]
    notes = []
    if "divform" in backends and len(div_t) < len(t_list):
        notes.append(f"divform scanned only at t >= 10 h^2 = {10 * h0**2:g} (finite-difference kernel unresolved below)")

    gauss = {b: [] for b in backends}
    gauss_quarter = {b: [] for b in backends}
    kbound = {(b, a): [] for b in backends if b != "divform" for a in alphas}
    cdiff = {(b, a): [] for b in backends if b != "divform" for a in alphas}
    dom = {b: [] for b in backends if b != "divform"}
    rows = []
    for spec in cfg.grids():
        ops = {b: build_semigroup(cfg, spec, b) for b in backends}
        for b, op in ops.items():
            ts = div_t if b == "divform" else t_list
            kernels = [kernel_matrix(op, t, "compact") for t in ts]
            A = A_heat if b == "heat" else A_other
            fit = gaussian_bound_fit(kernels, A)
            gauss[b].append(fit.C_fit)
            rows.append({"N": spec.N, "kind": "gaussian_bound", "backend": b, **fit.to_dict()})
            if b != "divform":
                fq = gaussian_bound_fit(kernels, A_heat)
                gauss_quarter[b].append(fq.C_fit)
                rows.append({"N": spec.N, "kind": "gaussian_bound_quarter", "backend": b, **fq.to_dict()})
        for b in kbound_backends(backends):
            op = ops[b]
            for a in alphas:
                frac = FracOperator(op, a, cfg.quadrature)
                kb = kernel_bound_fit(frac_kernel(frac, "compact"), a)
                kbound[(b, a)].append(kb.constant)
                rows.append({"N": spec.N, "kind": "kernel_bound", "backend": b, **kb.to_dict(), "riesz_constant": 1 / riesz_constant(a, cfg.n)})
                dk = difference_kernel_bound_fit(frac, diff_t, support_tag="periodic")
                cdiff[(b, a)].append(dk.C_diff)
                rows.append({"N": spec.N, "kind": "difference_kernel", "backend": b, **dk.to_dict()})
            frac = FracOperator(op, ex.get("domination_alpha", 0.5), cfg.quadrature)
            worst = 0.0
            for tf in _corpus(cfg, spec):
                if tf.function.support_tag == "compact":
                    worst = max(worst, domination_check(frac, tf.function))
            dom[b].append(worst)
            rows.append({"N": spec.N, "kind": "domination", "backend": b, "alpha": frac.alpha, "max_ratio": worst})

    fits, passed = [], True
    n = cfg.n
    if "heat" in backends:
        target = (4 * math.pi) ** (-n / 2)
        err = [abs(c - target) / target for c in gauss["heat"]]
        ok = max(err) <= cfg.threshold("gaussian_tolerance")
        fits.append({"name": "heat_gaussian_C", "A": A_heat, "values": gauss["heat"], "target": target, "rel_error": err, "pass": ok})
        passed &= ok
    for b in backends:
        if b == "heat":
            continue
        d = _rel_drift(gauss[b])
        ok = bool(np.isfinite(d) and d <= stab)
        fits.append({"name": f"{b}_gaussian_C", "A": A_other, "values": gauss[b], "drift": d, "limit": stab, "pass": ok})
        passed &= ok
        if b == "schrodinger" and "heat" in backends:
            ok = all(s <= h + 1e-8 for s, h in zip(gauss_quarter[b], gauss_quarter["heat"]))
            fits.append({"name": "schrodinger_vs_heat_gaussian", "A": A_heat, "schrodinger": gauss_quarter[b], "heat": gauss_quarter["heat"], "pass": ok})
            passed &= ok
    for (b, a), vals in kbound.items():
        d = _rel_drift(vals)
        # the refinement-stability requirement applies to the heat constant; other backends report drift
        ok = bool(np.isfinite(d) and (b != "heat" or d <= float(ex.get("kernel_bound_stability", 0.10))))
        entry = {"name": f"{b}_kernel_bound_alpha{a:g}", "values": vals, "drift": d, "pass": ok}
        if b == "heat" and a == 0.5:
            target = 1 / riesz_constant(a, n)
            err = [abs(v - target) / target for v in vals]
            # the target is judged on levels fine enough to resolve the kernel singularity
            min_N = int(ex.get("riesz_target_min_N", 256))
            judged = [e for e, N in zip(err, cfg.N_list) if N >= min_N]
            entry.update(target=target, rel_error=err, judged_from_N=min_N)
            ok = ok and (not judged or max(judged) <= float(ex.get("riesz_tolerance", 0.02)))
            entry["pass"] = ok
        if b == "schrodinger" and ("heat", a) in kbound:
            dominated = all(s <= h + 1e-8 for s, h in zip(vals, kbound[("heat", a)]))
            entry["dominated_by_heat"] = dominated
            ok = ok and dominated
            entry["pass"] = ok
        fits.append(entry)
        passed &= ok
    for (b, a), vals in cdiff.items():
        d = _rel_drift(vals)
        ok = bool(np.isfinite(d) and d <= stab)
        fits.append({"name": f"{b}_difference_C_alpha{a:g}", "values": vals, "t_list": diff_t, "drift": d, "limit": stab, "pass": ok})
        passed &= ok
    for b, vals in dom.items():
        fits.append({"name": f"{b}_domination_ratio", "values": vals, "bounded": bool(np.all(np.isfinite(vals)))})
    series = [{"name": f"{b}_gaussian_C", "columns": ["N", "value"], "rows": [[N, v] for N, v in zip(cfg.N_list, gauss[b])]} for b in backends]
    return ExperimentReport("kernel-suite", cfg.raw, rows, fits, series, bool(passed), notes, _environment(cfg))


def kbound_backends(backends: list[str]) -> list[str]:
    return [b for b in backends if b != "divform"]


# ----------------------------------------------------------------------
# examples


def seam_free_mask(spec: GridSpec, r: float, margin: int = 2) -> np.ndarray:
    """Centers whose ball of radius ``r`` stays ``margin`` nodes away from the wrap seam."""
    x = spec.coordinates()
    ok = np.ones(spec.shape, dtype=bool)
    for c in x:
        ok &= np.abs(c) + r <= spec.L / 2 - margin * spec.h
    return ok


def poincare_identity_ratio(j: int) -> float:
    """Closed form of the ratio for ``f(x) = x`` on a discrete ball of ``2j + 1`` nodes."""
    return 0.5 * (1 - 1 / (2 * j + 1) ** 2)


def run_examples(cfg: ExperimentConfig) -> ExperimentReport:
    """Poincare ratios, log BMO stability, loglog VMO decay and the BMO_L / BMO constant."""
    rows, fits, series, notes = [], [], [], []
    passed = True
    n = cfg.n

    # (i) Poincare for the identity, n = 1
    spec = cfg.grids()[-1]
    if n == 1:
        f = sample(spec, lambda x: x, "periodic")
        worst_dev, sup_ratio = 0.0, 0.0
        for r in cfg.radii_for(spec):
            mask = seam_free_mask(spec, r)
            vals = poincare_ratio_field(f, r)[mask]
            j = int(round(r / spec.h))
            closed = poincare_identity_ratio(j)
            worst_dev = max(worst_dev, float(np.max(np.abs(vals - closed))))
            sup_ratio = max(sup_ratio, float(np.max(vals)))
            rows.append({"kind": "poincare_identity", "N": spec.N, "radius": r, "ratio_min": float(vals.min()), "ratio_max": float(vals.max()), "closed_form": closed})
        j_max = int(round(cfg.radii_for(spec)[-1] / spec.h))
        ok = worst_dev <= 1e-12 and abs(sup_ratio - 0.5) <= 0.5 / (2 * j_max + 1) ** 2 + 1e-12
        fits.append({"name": "poincare_identity", "sup_ratio": sup_ratio, "limit_value": 0.5, "max_deviation_from_closed_form": worst_dev, "pass": ok})
        passed &= ok

    # corpus-level fits per grid level
    poinc, cis_c, bmoL_c, log_bmo = [], [], [], []
    loglog_series = None
    for spec in cfg.grids():
        radii = cfg.radii_for(spec)
        op = SemigroupOperator("heat", spec)
        best_p, best_cis, best_l = 0.0, 0.0, 0.0
        for tf in _corpus(cfg, spec):
            f = tf.function
            b = bmo_norm(f, "mean-abs", radii)
            if b.value <= 0:
                rows.append({"kind": "skipped", "N": spec.N, "id": tf.id, "reason": "zero oscillation"})
                continue
            bl = bmoL_norm(f, op, radii)
            best_l = max(best_l, bl.value / b.value)
            row = {"kind": "corpus", "N": spec.N, "id": tf.id, "family": tf.family, "bmo": b.value, "bmoL": bl.value, "bmoL_over_bmo": bl.value / b.value}
            if tf.family in ("gaussian", "ball", "trig"):
                pr = max(float(np.nanmax(poincare_ratio_field(f, r))) for r in radii)
                best_p = max(best_p, pr)
                c1 = cis_norm(f, 1, radii)
                if c1 > 0:
                    best_cis = max(best_cis, b.value / c1)
                    row.update(poincare_ratio=pr, cis1=c1, bmo_over_cis1=b.value / c1)
            rows.append(row)
            if tf.id == "log-00":
                log_bmo.append(b.value)
            if tf.id == "loglog-00" and spec.N == cfg.N_list[-1]:
                loglog_series = (radii, [vmo_modulus(f, r) for r in radii])
        poinc.append(best_p)
        cis_c.append(best_cis)
        bmoL_c.append(best_l)

    stab = cfg.threshold("embedding_stability")
    for name, vals in (("poincare_corpus", poinc), ("bmo_over_cis1", cis_c), ("bmoL_over_bmo", bmoL_c)):
        d = _rel_drift(vals)
        ok = bool(np.isfinite(d) and d <= stab)
        fits.append({"name": name, "values": vals, "N": cfg.N_list, "drift": d, "limit": stab, "pass": ok})
        passed &= ok
    if log_bmo:
        d = _rel_drift(log_bmo)
        ok = bool(np.isfinite(d) and d <= cfg.threshold("bmo_stability"))
        fits.append({"name": "log_bmo_stability", "values": log_bmo, "drift": d, "limit": cfg.threshold("bmo_stability"), "pass": ok})
        passed &= ok
    else:
        notes.append("no log-00 function in the corpus")
    if loglog_series is not None:
        radii, eta = loglog_series
        ratio = eta[0] / eta[-1]
        ok = ratio <= cfg.threshold("vmo_decay")
        fits.append({"name": "loglog_vmo_decay", "N": cfg.N_list[-1], "ratio": ratio, "limit": cfg.threshold("vmo_decay"), "pass": ok})
        series.append({"name": "loglog_vmo_modulus", "columns": ["radius", "value"], "rows": [[r, v] for r, v in zip(radii, eta)]})
        passed &= ok
    else:
        notes.append("no loglog-00 function in the corpus")
    return ExperimentReport("examples", cfg.raw, rows, fits, series, bool(passed), notes, _environment(cfg))


RUNNERS = {
    "thm1": run_thm1,
    "thm2": run_thm2,
    "cor3": run_cor3,
    "adams": run_adams,
    "kernel-suite": run_kernel_suite,
    "examples": run_examples,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.experiment](cfg)
