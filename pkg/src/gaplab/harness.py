"""Experiment configuration, orchestration and result files.

A run is a pure function of its configuration: the same file and seed
give byte-identical CSV and JSON outputs.
"""
from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np
import yaml

from . import asymptotics as asy
from . import operators as ops
from . import spectrum as spec
from .seqspace import (
    ExplicitProfile, FourierSeq, PotentialSpec, RandomDecayProfile, h_norm, make_potential,
)

DEFAULT_TOLERANCES = {
    "eig_backward": 1e-12,
    "tau_abs": 1e-7,
    "gamma_rel": 1e-6,
    "projector_trace": 1e-8,
    "slope_slack": 0.3,
    "reality_rel": 1e-8,
    "op_norm": 1e-8,
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["m", "alpha", "potential"],
    "properties": {
        "name": {"type": "string"},
        "m": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "K": {"type": "integer", "minimum": 1},
        "n_max": {"type": "integer", "minimum": 1},
        "window": {"type": "array", "items": {"type": "integer", "minimum": 1},
                   "minItems": 2, "maxItems": 2},
        "quad_nodes": {"type": "integer", "minimum": 16, "multipleOf": 2},
        "C": {"type": "number", "exclusiveMinimum": 2},
        "contour": {"enum": ["full", "lowrank"]},
        "outputs": {"type": "string"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "checks": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "boolean"} for k in ("bounds", "decay", "localization")},
        },
        "convergence": {
            "type": "object", "additionalProperties": False,
            "properties": {"K_list": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                      "minItems": 2}},
        },
        "potential": {
            "type": "object", "additionalProperties": False,
            "required": ["profile"],
            "properties": {
                "profile": {"enum": ["random-decay", "explicit", "even-power", "zero"]},
                "exponent": {"type": ["number", "null"]},
                "power": {"type": "number"},
                "coeffs": {"type": "array",
                           "items": {"type": "array", "minItems": 3, "maxItems": 3,
                                     "items": {"type": "number"}}},
                "real_symmetric": {"type": "boolean"},
                "one_periodic": {"type": "boolean"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Configuration file failed validation."""


class ExperimentError(RuntimeError):
    """Numerical failure during a run, with the location where it happened."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    Fields not given in the file are filled from defaults when loaded, and
    the materialized values are what gets written back and embedded in the
    report.
    """

    m: int
    alpha: float
    potential: dict
    K: int
    n_max: int
    window: tuple[int, int]
    quad_nodes: int = 64
    C: float = 4.0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    outputs: str = "gaplab-out"
    name: str = "experiment"
    contour: str = "full"
    checks: dict = field(default_factory=lambda: {"bounds": True, "decay": True, "localization": True})
    convergence: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {path}: {exc.message}") from exc
        d = copy.deepcopy(raw)
        n_max = d.get("n_max", 32)
        K = d.get("K", 4 * n_max + 8)
        window = tuple(d.get("window", [min(8, n_max), n_max]))
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(d.get("tolerances", {}))
        checks = {"bounds": True, "decay": True, "localization": True}
        checks.update(d.get("checks", {}))
        pot = {"real_symmetric": False, "one_periodic": False}
        pot.update(d["potential"])
        if pot["profile"] == "random-decay":
            pot.setdefault("exponent", None)
        cfg = cls(m=d["m"], alpha=float(d["alpha"]), potential=pot, K=K, n_max=n_max,
                  window=window, quad_nodes=d.get("quad_nodes", 64), C=float(d.get("C", 4.0)),
                  tolerances=tol, seed=d.get("seed", 0), outputs=d.get("outputs", "gaplab-out"),
                  name=d.get("name", "experiment"), contour=d.get("contour", "full"),
                  checks=checks, convergence=d.get("convergence", {}))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Re-check the preconditions of every module the run will call."""
        if not 1 <= self.window[0] <= self.window[1] <= self.n_max:
            raise ConfigError(f"window {list(self.window)} must lie inside 1..n_max={self.n_max}")
        if self.K < self.n_max:
            raise ConfigError(f"K={self.K} must be at least n_max={self.n_max}")
        K_list = self.convergence.get("K_list")
        if K_list is not None and list(K_list) != sorted(set(K_list)):
            raise ConfigError("convergence.K_list must be strictly ascending")
        if K_list is not None and min(K_list) < self.n_max:
            raise ConfigError("every K in convergence.K_list must be at least n_max")
        try:
            self.potential_spec()
            self.build_potential(self.K)
        except ValueError as exc:
            raise ConfigError(f"invalid potential: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name, "m": self.m, "alpha": self.alpha, "seed": self.seed,
            "K": self.K, "n_max": self.n_max, "window": list(self.window),
            "quad_nodes": self.quad_nodes, "C": self.C, "contour": self.contour,
            "outputs": self.outputs, "tolerances": dict(self.tolerances),
            "checks": dict(self.checks), "convergence": copy.deepcopy(self.convergence),
            "potential": copy.deepcopy(self.potential),
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        raw = yaml.safe_load(text)
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a mapping")
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)

    # -- derived ------------------------------------------------------------
    def potential_spec(self) -> PotentialSpec:
        p = self.potential
        kind = p["profile"]
        if kind == "random-decay":
            profile = RandomDecayProfile(seed=self.seed, exponent=p.get("exponent"))
        elif kind == "explicit":
            profile = ExplicitProfile({int(k): complex(re, im) for k, re, im in p.get("coeffs", [])})
        elif kind == "zero":
            profile = ExplicitProfile({})
        elif kind == "even-power":
            power = float(p.get("power", 1.5))
            coeffs = {}
            for j in range(1, self.K // 2 + 1):
                coeffs[2 * j] = coeffs[-2 * j] = j ** -power
            profile = ExplicitProfile(coeffs)
        else:  # pragma: no cover - schema rejects this
            raise ConfigError(f"unknown profile {kind}")
        return PotentialSpec(self.m, self.alpha, profile, p["real_symmetric"], p["one_periodic"])

    def build_potential(self, K: int | None = None) -> FourierSeq:
        K = self.K if K is None else K
        spec_ = self.potential_spec()
        if isinstance(spec_.profile, ExplicitProfile):
            # explicit coefficients beyond the truncation radius are dropped
            kept = {k: c for k, c in spec_.profile.coeffs.items() if abs(k) <= K}
            spec_ = PotentialSpec(spec_.m, spec_.alpha, ExplicitProfile(kept),
                                  spec_.real_symmetric, spec_.one_periodic)
        return make_potential(spec_, K)

    @property
    def R(self) -> float:
        """Norm bound ``||v||_{h^{-m alpha}}`` of the configured potential."""
        return h_norm(self.build_potential(), -self.m * self.alpha)


def bundled_config_names() -> list[str]:
    root = resources.files("gaplab") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_bundled(name: str) -> ExperimentConfig:
    path = resources.files("gaplab") / "configs" / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}; have {bundled_config_names()}")
    return ExperimentConfig.from_yaml(path.read_text())


def resolve_config(ref: str) -> ExperimentConfig:
    """Load from a file path, else from the bundled configs by name."""
    if os.path.exists(ref):
        return ExperimentConfig.load(ref)
    return load_bundled(ref)


# ---------------------------------------------------------------------------
# report


@dataclass
class Check:
    id: str
    description: str
    fatal: bool
    passed: bool
    values: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"id": self.id, "description": self.description, "fatal": self.fatal,
                "passed": bool(self.passed), "values": _jsonable(self.values)}


@dataclass
class RunReport:
    config: ExperimentConfig
    thresholds: ops.ThresholdSet
    pairs: dict[str, spec.PairTable]
    residuals: dict[str, asy.ResidualSeries]
    fits: dict[str, asy.DecayFit | None]
    checks: list[Check]
    localization: spec.LocalizationCounts | None
    convergence: list[dict] = field(default_factory=list)

    @property
    def fatal_ok(self) -> bool:
        return all(c.passed for c in self.checks if c.fatal)

    def check(self, check_id: str) -> Check:
        for c in self.checks:
            if c.id == check_id:
                return c
        raise KeyError(check_id)

    def bounds_ledger(self) -> list[dict]:
        return [c.to_json_dict() for c in self.checks if c.id.startswith("bound:")]

    def to_json_dict(self) -> dict:
        th = self.thresholds
        loc = None
        if self.localization is not None:
            loc = {"disc_counts": {str(k): v for k, v in self.localization.disc_counts.items()},
                   "cone_count": self.localization.cone_count,
                   "cone_expected": self.localization.cone_expected,
                   "n0": self.localization.n0, "M": self.localization.M}
        return _jsonable({
            "config": self.config.to_dict(),
            "thresholds": {"m": th.m, "alpha": th.alpha, "R": th.R, "C": th.C, "M0": th.M0,
                           "n0": th.n0, "n_star": th.n_star},
            "fits": {k: (f.to_json_dict() if f else None) for k, f in self.fits.items()},
            "checks": [c.to_json_dict() for c in self.checks],
            "localization": loc,
            "convergence": self.convergence,
            "fatal_ok": self.fatal_ok,
        })


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# orchestration


def _guard(where: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise ExperimentError(f"{where}: {type(exc).__name__}: {exc}") from exc


def _slope_check(cid: str, desc: str, series: asy.ResidualSeries, bound: float) -> tuple[Check, asy.DecayFit | None]:
    try:
        fit = asy.decay_fit(series)
    except asy.DegenerateSeriesError as exc:
        return Check(cid, desc, False, True, {"note": f"vacuous: {exc}"}), None
    return Check(cid, desc, False, fit.slope <= bound,
                 {"slope": fit.slope, "bound": bound, "r_squared": fit.r_squared}), fit


def _bound_checks(cfg: ExperimentConfig, v: FourierSeq, th: ops.ThresholdSet) -> list[Check]:
    m, a, K = cfg.m, cfg.alpha, cfg.K
    R = th.R
    checks = []
    worst = 0.0
    for lam in ops.sample_ext(th.M0):
        hs = ops.hs_norm(ops.build_S(lam, m, v, K))
        worst = max(worst, hs / ops.lemma1_bound(th.M0, a, m, R))
    checks.append(Check("bound:ext_cone_hs", "HS norm of S below the cone-exterior bound on Ext_M0",
                        True, worst <= 1.0, {"max_ratio": worst, "M": th.M0, "samples": 64}))
    lo = max(th.n0, ops.min_vert_n(m))
    ns = [n for n in range(lo, cfg.n_max + 1) if float(th.r_n(n)) < n ** m * math.pi ** (2 * m)]
    w_op, w_l2, w_e3, w_e6 = 0.0, 0.0, 0.0, 0.0
    for n in ns:
        r = float(th.r_n(n))
        reg = ops.Vert(n, r, m)
        b2, b6 = ops.lemma2_bound(n, r, a, m, v), ops.eq6_bound(n, r, m)
        for z in ops.sample_vert(reg):
            S = ops.build_S(z, m, v, K, center_n=n)
            hs = ops.hs_norm(S)
            op = ops.op_norm(S, tol=cfg.tolerances["op_norm"])
            w_op = max(w_op, op / hs if hs else 0.0)
            w_l2 = max(w_l2, hs / b2)
            w_e3 = max(w_e3, float(np.nanmax(ops.eq3_ratio(z, n, m, K))))
            w_e6 = max(w_e6, float(np.max(np.abs(ops.lam_minus_d(z, m, K, n)) ** -0.5)) / b6)
    vals = {"n_range": [ns[0], ns[-1]] if ns else None, "samples_per_n": 96,
            "vacuous": not ns}
    checks.append(Check("bound:strip_norm", "op_norm <= hs_norm <= strip bound on Vert(n, r_n)", True,
                        w_op <= 1.0 and w_l2 <= 1.0, {**vals, "max_op_over_hs": w_op, "max_hs_over_bound": w_l2}))
    checks.append(Check("bound:strip_entry", "entrywise 1/|lam - d_k| bound on Vert(n, r_n)", True,
                        w_e3 <= 1.0, {**vals, "max_ratio": w_e3}))
    checks.append(Check("bound:strip_diag", "max |lam - d_k|^{-1/2} bound on Vert(n, r_n)", True,
                        w_e6 <= 1.0, {**vals, "max_ratio": w_e6}))
    fails = {"a": [], "b": [], "c": []}
    for n in range(m, 101):
        res = ops.lemma3_checks(m, a, n)
        for key, ok in zip("abc", res.holds):
            if not ok:
                fails[key].append(n)
    c_fatal = m >= 2
    checks.append(Check("bound:elementary", "elementary sup/sum estimates, n in [m, 100]", True,
                        not fails["a"] and not fails["b"] and (not c_fatal or not fails["c"]),
                        {"failures": fails, "sum_estimate_asserted": c_fatal}))
    return checks


def _decay_checks(cfg: ExperimentConfig, v: FourierSeq, contour: dict) -> tuple[list[Check], dict]:
    m, a, K = cfg.m, cfg.alpha, cfg.K
    lo, hi = cfg.window
    slack = cfg.tolerances["slope_slack"]
    ns = [n for n in range(max(lo, ops.min_vert_n(m)), hi + 1) if n in contour]
    sup_s, pdist, pnorm, q1 = [], [], [], []
    for n in ns:
        d = contour[n]
        reg = ops.Vert(n, float(n ** m), m)
        sup_s.append(max(ops.op_norm(ops.build_S(z, m, v, K, center_n=n), tol=1e-8)
                         for z in ops.sample_vert(reg)))
        pdist.append(spec.projector_distance(n, m, v, K, data=d, tol=1e-10))
        pnorm.append(ops.op_norm(d.P, tol=1e-10))
        q1.append(spec.q1_norm(n, m, v, K, data=d, tol=1e-10) if d.Q_mat is not None else math.nan)
    checks, fits = [], {}
    if len(ns) < 5:
        return [Check("decay:skipped", "decay surrogates need >= 5 window points", False, True,
                      {"points": len(ns)})], fits
    for cid, desc, vals, bound in [
        ("decay:strip_sup_norm", "slope of sup ||S|| over Vert(n, n^m)", sup_s, -m * (1 - a) + slack),
        ("decay:projector_distance", "slope of ||P_n - P0_n||", pdist, -m * (1 - a) + slack),
        ("decay:second_order_trace_op", "slope of ||Q_n - Q0_n||", q1, -m * (1 - 2 * a) + slack),
    ]:
        if any(not math.isfinite(x) for x in vals):
            continue
        c, f = _slope_check(cid, desc, asy.ResidualSeries.from_arrays(ns, vals, cid), bound)
        checks.append(c)
        fits[cid] = f
    half = max(1, len(pnorm) // 2)
    checks.append(Check("decay:projector_bounded", "max ||P_n|| <= 2 x max over first half of window", False,
                        max(pnorm) <= 2 * max(pnorm[:half]), {"max": max(pnorm), "first_half_max": max(pnorm[:half])}))
    return checks, fits


def run_experiment(config: ExperimentConfig, out_dir: str | os.PathLike | None = None,
                   write: bool = True) -> RunReport:
    """Run every spectrum path and check for one configuration.

    Non-fatal check failures are recorded; numerical errors abort with an
    :class:`ExperimentError` naming where they occurred.
    """
    cfg = config
    cfg.validate()
    m, a, K, Q = cfg.m, cfg.alpha, cfg.K, cfg.quad_nodes
    tol = cfg.tolerances
    v = _guard("seqspace.make_potential", cfg.build_potential)
    R = h_norm(v, -m * a)
    R_eff = R if R > 0 else 1.0      # v = 0: thresholds need R > 0; any R is valid
    th = _guard("operator.lemma4_thresholds", ops.lemma4_thresholds, m, a, R_eff, cfg.C)
    n_star = _guard("spectrum.empirical_n_star", spec.empirical_n_star, m, v, K, cfg.n_max)
    th = th.with_n_star(n_star)
    checks: list[Check] = []

    A = spec.truncated_matrix(m, v, K)
    eigs = _guard("spectrum.eigs_truncated", spec.eigs_truncated, m, v, K, tol["eig_backward"])
    tr_err = abs(np.trace(A) - np.sum(eigs.values)) / max(1.0, np.abs(eigs.values).max())
    checks.append(Check("eig:trace", "sum of eigenvalues equals matrix trace", True,
                        tr_err <= 1e-10, {"relative_error": tr_err}))
    if cfg.potential["real_symmetric"] or v.is_real_symmetric():
        im = float(np.max(np.abs(eigs.values.imag)) / np.max(np.abs(eigs.values))) if np.any(eigs.values) else 0.0
        checks.append(Check("eig:reality", "real symmetric potential gives real spectrum", True,
                            im <= tol["reality_rel"], {"max_rel_imag": im}))
    pairs_eig = spec.pair_eigs(eigs, m, th, cfg.n_max)

    contour: dict[int, spec.ContourData] = {}
    proj_rows = []
    lo_w, hi_w = cfg.window
    for n in range(n_star, cfg.n_max + 1):
        in_window = lo_w <= n <= hi_w and cfg.checks["decay"]
        if cfg.contour == "lowrank" and not in_window:
            d = _guard(f"spectrum.contour_pass_lowrank(n={n})", spec.contour_pass_lowrank, n, m, v, K, Q)
        else:
            d = _guard(f"spectrum.contour_pass(n={n})", spec.contour_pass, n, m, v, K, Q, want_Q_mat=in_window)
        if in_window:
            contour[n] = d
        c = spec.center(n, m)
        try:
            red = spec.gap_via_reduction(n, m, v, K, Q, data=d)
            s, g = red.tau_shift, red.gamma
            proj_rows.append(spec.PairRow(n, c + s - g / 2, c + s + g / 2, c + s, g, "projector", "", s))
        except (spec.ContourError, ops.ConvergenceError) as exc:
            nan = complex("nan")
            proj_rows.append(spec.PairRow(n, nan, nan, nan, nan, "projector", f"error:{type(exc).__name__}"))
        tr = abs(np.trace(d.P) - 2)
        if tr > tol["projector_trace"]:
            checks.append(Check(f"projector:trace:n={n}", "trace of Riesz projector equals 2", True, False,
                                {"n": n, "error": tr}))
    checks.append(Check("projector:trace", "trace of every Riesz projector equals 2", True,
                        not any(c.id.startswith("projector:trace:") for c in checks),
                        {"n_range": [n_star, cfg.n_max]}))
    pairs_proj = spec.PairTable(m, tuple(proj_rows))

    # cross-method agreement; the dense path resolves eigenvalues only to ~eps*||A||
    eig_floor = 10 * np.finfo(float).eps * np.linalg.norm(A, 2)
    dtau, dgam = 0.0, 0.0
    compared = 0
    for r in pairs_proj:
        try:
            e = pairs_eig.row(r.n)
        except KeyError:
            continue
        if not (r.ok and e.ok):
            continue
        compared += 1
        dtau = max(dtau, abs(r.tau_shift - e.tau_shift))
        dgam = max(dgam, min(abs(r.gamma - e.gamma), abs(r.gamma + e.gamma)) / max(1.0, abs(e.gamma)))
    tau_tol = max(tol["tau_abs"], eig_floor)
    gam_tol = max(tol["gamma_rel"], eig_floor)
    checks.append(Check("cross:tau", "pair mean: trace formula vs dense eigenvalues", True,
                        dtau <= tau_tol, {"max_abs_diff": dtau, "tolerance": tau_tol, "rows": compared}))
    checks.append(Check("cross:gamma", "gap: 2x2 reduction vs dense eigenvalues", True,
                        dgam <= gam_tol, {"max_rel_diff": dgam, "tolerance": gam_tol, "rows": compared}))

    # residuals over the window, from the projector path
    residuals, fits = {}, {}
    window_rows = [r for r in pairs_proj if lo_w <= r.n <= hi_w]
    if window_rows and all(r.ok for r in window_rows):
        wtab = spec.PairTable(m, tuple(window_rows))
        slack = tol["slope_slack"]
        preds = [("tau", -m * (1 - 2 * a) + slack)]
        preds.append(("gap_first", -m * (0.5 - a) + slack if a < 0.5 else -m * (1 - 2 * a) + slack))
        preds.append(("gap_refined", None))
        for name, bound in preds:
            series = asy.residual_series(wtab, name, m, v)
            residuals[name] = series
            if bound is None:
                try:
                    fits[name] = asy.decay_fit(series)
                except asy.DegenerateSeriesError:
                    fits[name] = None
                continue
            c, f = _slope_check(f"residual:{name}", f"decay slope of {name} residuals", series, bound)
            checks.append(c)
            fits[name] = f
    else:
        checks.append(Check("residual:window", "projector rows available on the whole window", False, False,
                            {"window": [lo_w, hi_w], "first_projector_n": n_star}))

    loc = None
    if cfg.checks["localization"] and th.n0 <= cfg.n_max:
        loc = spec.localization_counts(eigs, m, th, cfg.n_max)
        checks.append(Check("localization", "two eigenvalues per disc, 2 n0 - 1 in the bounded cone", True,
                            loc.ok, {"cone_count": loc.cone_count, "cone_expected": loc.cone_expected,
                                     "bad_discs": {n: c for n, c in loc.disc_counts.items() if c != 2}}))
    if cfg.checks["bounds"]:
        checks.extend(_guard("operator bounds", _bound_checks, cfg, v, th))
    if cfg.checks["decay"]:
        dc, dfits = _guard("decay surrogates", _decay_checks, cfg, v, contour)
        checks.extend(dc)
        fits.update(dfits)

    report = RunReport(cfg, th, {"eig": pairs_eig, "projector": pairs_proj}, residuals, fits, checks, loc)
    if cfg.convergence.get("K_list"):
        report.convergence = convergence_study(cfg, cfg.convergence["K_list"])
    if write:
        write_outputs(report, out_dir if out_dir is not None else cfg.outputs)
    return report


def write_outputs(report: RunReport, out_dir: str | os.PathLike) -> list[Path]:
    """Write pair tables, residual series, the bounds ledger and the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for method, table in sorted(report.pairs.items()):
        p = out / f"pairs_{method}.csv"
        p.write_text(table.to_csv())
        written.append(p)
    for name, series in sorted(report.residuals.items()):
        p = out / f"residuals_{name}.csv"
        p.write_text(series.to_csv())
        fit = report.fits.get(name)
        fp = out / f"residuals_{name}.csv.fit.json"
        fp.write_text(fit.to_json() + "\n" if fit else "null\n")
        written += [p, fp]
    p = out / "bounds_ledger.json"
    p.write_text(_dumps(report.bounds_ledger()))
    written.append(p)
    p = out / "report.json"
    p.write_text(_dumps(report.to_json_dict()))
    written.append(p)
    written += emit_plots_data(report, out)
    return written


def emit_plots_data(report: RunReport, out_dir: str | os.PathLike) -> list[Path]:
    """Per-series CSV of ``log n`` against ``log residual`` with the fitted line."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name in ("tau", "gap_first", "gap_refined"):
        series = report.residuals.get(name)
        fit = report.fits.get(name)
        lines = ["n,log_n,value,log_value,fit_log_value"]
        if series is not None:
            for n, x in series.entries.items():
                ln = math.log(n)
                lx = repr(math.log(x)) if x > 0 else ""
                fl = repr(fit.intercept + fit.slope * ln) if fit else ""
                lines.append(f"{n},{ln!r},{x!r},{lx},{fl}")
        p = out / f"plot_{name}.csv"
        p.write_text("\n".join(lines) + "\n")
        files.append(p)
        fp = out / f"plot_{name}.fit.json"
        fp.write_text(fit.to_json() + "\n" if fit else "null\n")
        files.append(fp)
    return files


# ---------------------------------------------------------------------------
# truncation study


def convergence_study(config: ExperimentConfig, K_list: Sequence[int],
                      ns: Sequence[int] | None = None) -> list[dict]:
    """Movement of tracked quantities between consecutive truncation radii.

    For each adjacent pair ``(K, K')`` the table records the largest change
    of the dense eigenvalue pairs and of the projector-path quantities
    ``tau_n - (n pi)^{2m}`` and ``gamma_n`` over the tracked ``n``. The
    projector quantities use the low-rank contour pass.
    """
    K_list = list(K_list)
    if len(K_list) < 2 or K_list != sorted(K_list):
        raise ValueError("K_list must be ascending with at least two entries")
    m, Q = config.m, config.quad_nodes
    per_K = {}
    for K in K_list:
        v = config.build_potential(K)
        R = h_norm(v, -m * config.alpha) or 1.0
        th = ops.lemma4_thresholds(m, config.alpha, R, config.C)
        eig_tab = spec.pair_eigs(spec.eigs_truncated(m, v, K), m, th, min(config.n_max, K))
        track = list(ns) if ns is not None else list(range(max(1, spec.empirical_n_star(m, v, K, config.n_max)),
                                                          config.n_max + 1))
        proj = {}
        for n in track:
            try:
                d = spec.contour_pass_lowrank(n, m, v, K, Q)
                red = spec.gap_via_reduction(n, m, v, K, Q, data=d)
                proj[n] = (red.tau_shift, red.gamma)
            except (spec.ContourError, ops.ConvergenceError, ValueError):
                proj[n] = None
        per_K[K] = (eig_tab, proj)
    rows = []
    for Ka, Kb in zip(K_list, K_list[1:]):
        ea, pa = per_K[Ka]
        eb, pb = per_K[Kb]
        d_eig, failures = 0.0, []
        for r in ea:
            rb = eb.row(r.n)
            if not (r.ok and rb.ok):
                failures.append(r.n)
                continue
            d_eig = max(d_eig, abs(r.lambda_minus - rb.lambda_minus), abs(r.lambda_plus - rb.lambda_plus))
        d_tau, d_gam = 0.0, 0.0
        for n in sorted(set(pa) & set(pb)):
            if pa[n] is None or pb[n] is None:
                failures.append(n)
                continue
            d_tau = max(d_tau, abs(pa[n][0] - pb[n][0]))
            d_gam = max(d_gam, min(abs(pa[n][1] - pb[n][1]), abs(pa[n][1] + pb[n][1])))
        rows.append({"K_a": Ka, "K_b": Kb, "eig_delta": d_eig, "tau_shift_delta": d_tau,
                     "gamma_delta": d_gam, "failures": sorted(set(failures))})
    for prev, cur in zip(rows, rows[1:]):
        cur["non_increasing"] = (cur["tau_shift_delta"] <= prev["tau_shift_delta"]
                                 and cur["gamma_delta"] <= prev["gamma_delta"])
    return rows


def convergence_csv(rows: list[dict]) -> str:
    lines = ["K_a,K_b,eig_delta,tau_shift_delta,gamma_delta,failures"]
    for r in rows:
        fails = " ".join(str(n) for n in r["failures"])
        lines.append(f"{r['K_a']},{r['K_b']},{r['eig_delta']!r},{r['tau_shift_delta']!r},{r['gamma_delta']!r},{fails}")
    return "\n".join(lines) + "\n"
