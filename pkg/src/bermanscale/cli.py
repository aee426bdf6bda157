"""Batch front door: config-driven runs producing CSV reports and SVG plots.

One JSON config per run; the config hash, effective seed and package
version are recorded in a trailing comment block of every CSV so a report
is reproducible from its own metadata.  Numeric cells use the shortest
round-trip decimal representation, and all engines consume chunked
counter-based streams, so outputs are byte-identical for a fixed
(config, seed) regardless of worker count.

Exit codes: 0 success, 2 config/usage error, 3 mathematical-domain error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, evt, probability, scaling
from .errors import BermanScaleError, ConfigError, MathDomainError
from .gaussian import (
    CorrelationModel,
    hr_array_correlation,
    identity_correlation,
    stationary_correlation,
    validate_correlation,
)

ENV_WORKERS = "BERMAN_SCALE_WORKERS"

_ENGINE_DEFAULTS = {
    "reps": 100_000,
    "seed": 0,
    "workers": 1,
    "tol": 1e-6,
    "eps": bounds.DEFAULT_EPS,
    "w_min": bounds.W_MIN,
}


# ---------------------------------------------------------------------------
# config parsing


def _expect_keys(block: dict, where: str, allowed: set, required: set = frozenset()):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(block)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")


def _number(block, key, where, default=None, required=False):
    if key not in block:
        if required:
            raise ConfigError(f"{where}: missing {key!r}")
        return default
    v = block[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return v


def build_correlation(block: dict, where: str = "correlation") -> CorrelationModel:
    _expect_keys(block, where, {"kind", "entries", "dim", "n", "kernel", "delta", "cutoff"}, {"kind"})
    kind = block["kind"]
    if kind == "matrix":
        if "entries" not in block:
            raise ConfigError(f"{where}: matrix kind needs 'entries'")
        return validate_correlation(block["entries"])
    if kind == "identity":
        dim = int(_number(block, "dim", where, required=True))
        return identity_correlation(dim)
    if kind == "stationary":
        n = int(_number(block, "n", where, required=True))
        kernel = block.get("kernel")
        _expect_keys(kernel, f"{where}.kernel", {"name", "rho", "values", "m"}, {"name"})
        name = kernel["name"]
        if name == "ar1":
            rho = _number(kernel, "rho", f"{where}.kernel", required=True)
            return stationary_correlation(lambda j: rho**j, n)
        if name == "bartlett":
            m = _number(kernel, "m", f"{where}.kernel", required=True)
            return stationary_correlation(lambda j: max(0.0, 1.0 - j / m), n)
        if name == "values":
            vals = kernel.get("values")
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{where}.kernel: 'values' must be a non-empty list")
            return stationary_correlation(
                lambda j: float(vals[j]) if j < len(vals) else 0.0, n
            )
        raise ConfigError(f"{where}.kernel: unknown kernel {name!r}")
    if kind == "hr-array":
        n = int(_number(block, "n", where, required=True))
        delta = block.get("delta")
        if not isinstance(delta, list):
            raise ConfigError(f"{where}: hr-array needs a 'delta' list")
        cutoff = int(_number(block, "cutoff", where, default=len(delta)))
        return hr_array_correlation(delta, n, cutoff)
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def build_scaling(block: dict, where: str = "scaling") -> scaling.ScalingModel | None:
    _expect_keys(
        block, where,
        {"law", "a", "b", "lam", "mass_at_one", "rate", "shape", "big_l", "value"},
        {"law"},
    )
    law = block["law"]
    if law == "none":
        return None
    if law == "uniform":
        return scaling.uniform_scaling()
    if law == "beta":
        return scaling.beta_scaling(
            _number(block, "a", where, required=True), _number(block, "b", where, required=True)
        )
    if law == "two-point":
        return scaling.two_point_scaling(
            _number(block, "lam", where, required=True),
            _number(block, "mass_at_one", where, required=True),
        )
    if law == "exponential":
        return scaling.exponential_scaling(_number(block, "rate", where, default=1.0))
    if law == "weibull":
        return scaling.weibull_scaling(
            _number(block, "shape", where, required=True),
            _number(block, "big_l", where, default=1.0),
        )
    if law == "gamma":
        return scaling.gamma_scaling(
            _number(block, "shape", where, required=True),
            _number(block, "rate", where, default=1.0),
        )
    if law == "constant":
        return scaling.degenerate_scaling(_number(block, "value", where, default=1.0))
    raise ConfigError(f"{where}: unknown law {law!r}")


def _threshold_vector(raw, dim, where, side):
    fill = math.inf if side == "upper" else -math.inf
    if raw is None:
        return np.full(dim, fill)
    if not isinstance(raw, list) or len(raw) != dim:
        raise ConfigError(f"{where}.{side}: expected a list of length {dim}")
    out = []
    for v in raw:
        if v is None:
            out.append(fill)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(float(v))
        else:
            raise ConfigError(f"{where}.{side}: entries must be numbers or null")
    return np.array(out)


def build_thresholds(block: dict, dim: int, coupling: str, where: str = "thresholds"):
    _expect_keys(block, where, {"upper", "lower", "symmetric"})
    if "symmetric" in block:
        w = _number(block, "symmetric", where, required=True)
        return probability.RectangleSpec.symmetric(float(w), dim, coupling)
    upper = _threshold_vector(block.get("upper"), dim, where, "upper")
    lower = _threshold_vector(block.get("lower"), dim, where, "lower")
    return probability.RectangleSpec(lower, upper, coupling)


def build_engine(block: dict | None) -> dict:
    block = block or {}
    _expect_keys(block, "engine", set(_ENGINE_DEFAULTS))
    out = dict(_ENGINE_DEFAULTS)
    for k in _ENGINE_DEFAULTS:
        if k in block:
            out[k] = _number(block, k, "engine", required=True)
    out["reps"] = int(out["reps"])
    out["seed"] = int(out["seed"])
    out["workers"] = int(out["workers"])
    return out


def config_hash(config: dict, effective_seed: int) -> str:
    """Hash of the canonical config with volatile fields normalized out.

    Worker count and output paths never change the numbers, so they do not
    enter the hash; the effective seed replaces any inline seed.
    """
    canon = json.loads(json.dumps(config))
    canon.pop("output", None)
    engine = canon.setdefault("engine", {})
    engine.pop("workers", None)
    engine["seed"] = effective_seed
    blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# CSV writing


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows: list[tuple], meta: dict) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    lines.extend(f"# {k}={v}" for k, v in meta.items())
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands


_FAMILY_CHOICES = {
    "classical", "intro-uniform", "intro-exponential",
    "theorem-independent", "theorem-comonotone",
    "corollary-independent", "corollary-comonotone",
    "A-independent", "A-comonotone", "B-independent", "B-comonotone",
}


def _bound_for_family(family, terms, w, model1, scal, eng):
    eps, w_min = eng["eps"], eng["w_min"]
    if family == "classical":
        return bounds.berman_bound_classical(terms, w)
    if family == "intro-uniform":
        return bounds.bound_uniform_scaling(terms, w)
    if family == "intro-exponential":
        return bounds.bound_exponential_scaling(terms, w)
    if scal is None:
        raise MathDomainError(f"family {family!r} needs a scaling law, config has 'none'")
    if family in ("theorem-independent", "theorem-comonotone"):
        coupling = family.split("-")[1]
        return bounds.theorem_bound(terms, w, scal, coupling, eps, w_min)
    if family in ("corollary-independent", "corollary-comonotone"):
        coupling = family.split("-")[1]
        return bounds.corollary_identity_bound(model1, w, scal, coupling, eps, w_min)
    regime, coupling = family.split("-")
    if scal.regime != regime:
        raise MathDomainError(f"family {family!r} requires regime {regime}, scaling is {scal.regime}")
    return bounds.theorem_bound(terms, w, scal, coupling, eps, w_min)


def cmd_bound(config: dict, ns) -> int:
    _expect_keys(
        config, "config",
        {"command", "correlation", "correlation2", "scaling", "w_grid", "families", "engine", "output"},
        {"command", "correlation", "scaling", "w_grid"},
    )
    eng = build_engine(config.get("engine"))
    model1 = build_correlation(config["correlation"])
    model2 = (
        build_correlation(config["correlation2"], "correlation2")
        if "correlation2" in config
        else identity_correlation(model1.dim)
    )
    scal = build_scaling(config["scaling"])
    terms = bounds.pairwise_terms(model1, model2)

    wg = config["w_grid"]
    _expect_keys(wg, "w_grid", {"start", "stop", "count", "values"})
    if "values" in wg:
        ws = [float(v) for v in wg["values"]]
    else:
        ws = list(
            np.linspace(
                _number(wg, "start", "w_grid", required=True),
                _number(wg, "stop", "w_grid", required=True),
                int(_number(wg, "count", "w_grid", default=10)),
            )
        )

    families = config.get("families")
    if families is None:
        intro = "intro-exponential" if (scal is not None and scal.regime == "B") else "intro-uniform"
        families = ["classical", intro, "theorem-independent", "theorem-comonotone", "corollary-comonotone"]
    for fam in families:
        if fam not in _FAMILY_CHOICES:
            raise ConfigError(f"families: unknown family {fam!r}")

    rows = []
    for fam in families:
        for w in ws:
            rep = _bound_for_family(fam, terms, w, model1, scal, eng)
            rows.append((fam, rep.coupling, w, rep.eps, rep.advisory, rep.value, rep.corollary_value))

    out = _outdir(config, ns)
    meta = _meta(config, ns)
    write_csv(out / "bound.csv",
              ["family", "coupling", "w", "eps", "advisory", "value", "corollary_value"],
              rows, meta)
    if ns.plot:
        _plot_bounds(out / "bound.svg", rows, families)
    return 0


def cmd_delta(config: dict, ns) -> int:
    _expect_keys(
        config, "config",
        {"command", "correlation", "correlation2", "scaling", "coupling", "thresholds", "engine", "output"},
        {"command", "correlation", "correlation2", "scaling", "thresholds"},
    )
    eng = build_engine(config.get("engine"))
    model1 = build_correlation(config["correlation"])
    model2 = build_correlation(config["correlation2"], "correlation2")
    scal = build_scaling(config["scaling"])
    coupling = config.get("coupling", "independent")
    if coupling not in ("independent", "comonotone"):
        raise ConfigError(f"coupling: expected independent|comonotone, got {coupling!r}")
    spec = build_thresholds(config["thresholds"], model1.dim, coupling)

    est = probability.mc_delta(
        model1, model2, scal, spec, eng["reps"], _seed(config, ns), workers=_workers(config, ns)
    )
    oracle = None
    if model1.dim <= 3:
        q1, _ = probability.quad_rectangle_prob(model1, scal, spec, eng["tol"])
        q2, _ = probability.quad_rectangle_prob(model2, scal, spec, eng["tol"])
        oracle = q1 - q2

    w = spec.w
    terms = bounds.pairwise_terms(model1, model2)
    b_classical = bounds.berman_bound_classical(terms, w).value
    b_scaled = None
    if scal is not None and scal.regime in ("A", "B"):
        b_scaled = bounds.theorem_bound(terms, w, scal, coupling, eng["eps"], eng["w_min"]).value
    applicable = b_classical if b_scaled is None else min(b_classical, b_scaled)
    violation = est.estimate - 3.0 * est.stderr > applicable

    out = _outdir(config, ns)
    write_csv(
        out / "delta.csv",
        ["estimate", "stderr", "oracle", "bound_classical", "bound_scaled", "violation"],
        [(est.estimate, est.stderr, oracle, b_classical, b_scaled, violation)],
        _meta(config, ns),
    )
    return 0


def cmd_limit(config: dict, ns) -> int:
    _expect_keys(
        config, "config",
        {"command", "kind", "delta", "cutoff", "scaling", "n", "reps", "theta",
         "lambda", "eta", "mask", "engine", "output"},
        {"command", "kind", "scaling", "n", "reps"},
    )
    eng = build_engine(config.get("engine"))
    scal = build_scaling(config["scaling"])
    if scal is None:
        raise ConfigError("limit runs need a scaling law")
    n = int(_number(config, "n", "config", required=True))
    reps = int(_number(config, "reps", "config", required=True))
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    seed = _seed(config, ns)
    workers = _workers(config, ns)
    kind = config["kind"]
    out = _outdir(config, ns)
    meta = _meta(config, ns)

    if kind == "array-maxima":
        delta = config.get("delta", [])
        cutoff = int(_number(config, "cutoff", "config", default=len(delta)))
        result = evt.simulate_array_maxima(delta, cutoff, scal, n, reps, seed, workers=workers)
        theta = 1.0
        theta_cfg = config.get("theta")
        if cutoff > 0:
            k_max = int(_number(theta_cfg or {}, "k_max", "theta", default=25))
            t_reps = int(_number(theta_cfg or {}, "reps", "theta", default=200_000))
            spec = evt.ExtremalIndexSpec(_theta_delta(delta, k_max), k_max)
            theta = evt.extremal_index(spec, "mc", t_reps, seed, stream=7, workers=workers).value
        target = evt.tilted_gumbel(theta)
        ks = probability.ks_distance(result.sample, target)
        rows = [("draw", i, float(v)) for i, v in enumerate(result.sample)]
        rows.append(("ks", None, ks))
        meta = {**meta, "theta": repr(theta), "a_n": repr(result.norming.a), "b_n": repr(result.norming.b)}
        write_csv(out / "limit.csv", ["record", "index", "value"], rows, meta)
        if ns.plot:
            _plot_pp(out / "limit.svg", result.sample, target, "theta-tilted Gumbel")
        return 0

    if kind == "bivariate-missing":
        lam = config.get("lambda", 1.0)
        lam = math.inf if lam in ("inf", None) else float(lam)
        mask_kind = config.get("mask", "full")
        eta = float(_number(config, "eta", "config", default=1.0))
        hr = evt.HRSpec(lam=lam)
        miss = evt.MissingDataSpec(kind=mask_kind, eta=eta)
        result = evt.simulate_bivariate_missing(hr, scal, miss, n, reps, seed, workers=workers)
        target = (lambda x, y: evt.husler_reiss(x, y, lam))
        grid = [evt_quantile(q) for q in (0.1, 0.3, 0.5, 0.7, 0.9)]
        sup = 0.0
        for x in grid:
            for y in grid:
                emp = float(np.mean((result.max_full[:, 0] <= x) & (result.max_full[:, 1] <= y)))
                sup = max(sup, abs(emp - target(x, y)))
        rows = [
            ("draw", i, *[float(v) for v in np.concatenate([result.max_obs[i], result.min_obs[i],
                                                            result.max_full[i], result.min_full[i]])])
            for i in range(reps)
        ]
        rows.append(("sup_cdf_distance", None, sup, *[None] * 7))
        header = ["record", "index",
                  "max_obs_1", "max_obs_2", "min_obs_1", "min_obs_2",
                  "max_full_1", "max_full_2", "min_full_1", "min_full_2"]
        meta = {**meta, "lambda0": repr(result.lambda0), "a_n": repr(result.norming.a),
                "b_n": repr(result.norming.b)}
        write_csv(out / "limit.csv", header, rows, meta)
        if ns.plot:
            marginal = lambda x: evt.husler_reiss(x, math.inf, lam)
            _plot_pp(out / "limit.svg", result.max_full[:, 0], marginal, "first-component maxima")
        return 0

    raise ConfigError(f"kind: expected array-maxima|bivariate-missing, got {kind!r}")


def _theta_delta(delta, k_max):
    """Rates for the clustering index: lags beyond the cutoff never bind."""
    d = [float(x) for x in delta]
    if len(d) < k_max - 1:
        # uncorrelated beyond the cutoff means delta = +inf there; use a
        # rate large enough that the constraint is never active
        d = d + [1e6] * (k_max - 1 - len(d))
    return tuple(d)


def evt_quantile(q: float) -> float:
    return -math.log(-math.log(q))


def cmd_theta(config: dict, ns) -> int:
    _expect_keys(config, "config",
                 {"command", "delta", "k_max_grid", "engine", "output"},
                 {"command", "delta"})
    eng = build_engine(config.get("engine"))
    delta = [float(x) for x in config.get("delta", [])]
    grid = config.get("k_max_grid") or [2, 5, 10, 25]
    seed = _seed(config, ns)
    workers = _workers(config, ns)

    rows = []
    if not delta:
        rows.append((1, 1.0, 0.0, "exact"))
    else:
        for k_max in grid:
            k_max = int(k_max)
            spec = evt.ExtremalIndexSpec(_theta_delta(delta, k_max), k_max)
            est = evt.extremal_index(spec, "mc", eng["reps"], seed, workers=workers)
            rows.append((k_max, est.value, est.stderr, "mc"))
            if k_max == 2:
                q = evt.extremal_index(spec, "quad1d", tol=1e-10)
                rows.append((k_max, q.value, None, "quad1d"))

    write_csv(_outdir(config, ns) / "theta.csv",
              ["k_max", "estimate", "stderr", "method"], rows, _meta(config, ns))
    return 0


def cmd_check_conditions(config: dict, ns) -> int:
    _expect_keys(config, "config",
                 {"command", "delta", "cutoff", "tau", "n_grid", "rho_l", "rho_r", "m",
                  "engine", "output"},
                 {"command", "delta", "tau", "n_grid", "rho_l", "rho_r"})
    delta = [float(x) for x in config.get("delta", [])]
    cutoff = int(_number(config, "cutoff", "config", default=len(delta)))
    diag = evt.check_array_conditions(
        delta, cutoff,
        float(_number(config, "tau", "config", required=True)),
        [int(n) for n in config["n_grid"]],
        float(_number(config, "rho_l", "config", required=True)),
        float(_number(config, "rho_r", "config", required=True)),
        int(_number(config, "m", "config", default=2)),
    )
    rows = [
        (r["n"], r["r_n"], r["l_n"], r["c_n"], r["l_over_r"], r["r_over_n"],
         r["expr_separation"], r["expr_local"])
        for r in diag.rows()
    ]
    meta = _meta(config, ns)
    for k, v in diag.slopes.items():
        meta[f"slope_{k}"] = "" if v is None else repr(v)
    write_csv(_outdir(config, ns) / "check_conditions.csv",
              ["n", "r_n", "l_n", "c_n", "l_over_r", "r_over_n",
               "expr_separation", "expr_local"],
              rows, meta)
    return 0


# ---------------------------------------------------------------------------
# plumbing


def _seed(config: dict, ns) -> int:
    if ns.seed is not None:
        return ns.seed
    return build_engine(config.get("engine"))["seed"]


def _workers(config: dict, ns) -> int:
    if ns.workers is not None:
        return ns.workers
    env = os.environ.get(ENV_WORKERS)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {env!r}") from exc
    return build_engine(config.get("engine"))["workers"]


def _outdir(config: dict, ns) -> Path:
    out = ns.out or (config.get("output") or {}).get("dir") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _meta(config: dict, ns) -> dict:
    return {
        "config_hash": config_hash(config, _seed(config, ns)),
        "seed": _seed(config, ns),
        "version": __version__,
    }


def _plot_bounds(path: Path, rows, families):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for fam in families:
        pts = [(w, v) for f, _, w, _, _, v, _ in rows if f == fam and v > 0]
        if pts:
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=fam)
    ax.set_xlabel("w")
    ax.set_ylabel("bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_pp(path: Path, sample, target_cdf, label: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = np.sort(np.asarray(sample, dtype=float))
    emp = (np.arange(1, len(xs) + 1) - 0.5) / len(xs)
    theo = np.array([target_cdf(x) for x in xs])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(theo, emp, lw=0.8)
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel(f"target CDF ({label})")
    ax.set_ylabel("empirical CDF")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


_COMMANDS = {
    "bound": cmd_bound,
    "delta": cmd_delta,
    "limit": cmd_limit,
    "theta": cmd_theta,
    "check-conditions": cmd_check_conditions,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="berman-scale",
        description="Comparison bounds and extreme-value limit checks for scaled Gaussian vectors",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (fallback: ${ENV_WORKERS}, then config)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--plot", action="store_true", help="emit SVG diagnostics next to the CSV")
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        raw = Path(ns.config).read_text()
    except OSError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 2
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"config: invalid JSON: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("config: expected a JSON object", file=sys.stderr)
        return 2
    declared = config.get("command")
    if declared is not None and declared != ns.command:
        print(f"config: declares command {declared!r}, invoked as {ns.command!r}", file=sys.stderr)
        return 2
    config.setdefault("command", ns.command)

    try:
        return _COMMANDS[ns.command](config, ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MathDomainError as exc:
        print(f"math-domain error: {exc}", file=sys.stderr)
        return 3
    except BermanScaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
