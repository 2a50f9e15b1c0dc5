"""Batch driver.

    slnorm run <config.json> [--suite NAME]... [--output PATH] [--quick]
    slnorm sweep <config.json> --param NAME --values v1,v2,...

A config is a JSON object, for example

    {
      "potential": {"kind": "expression", "body": "sin(x)"},
      "alpha": "pi/3", "beta": "pi/2",
      "N_eigen": 400, "N_modes": 400, "M": 200, "K": 399,
      "suites": ["spectrum", "norming", "traces"],
      "tolerances": {"glk.diagonal": 0.05},
      "output": {"path": "report.json", "format": "json"},
      "seed": 0
    }

Suites run in dependency order spectrum -> norming -> traces, glk, charfn;
prerequisites are computed even when not selected, but only selected
suites decide the exit status. Exit codes: 0 all selected suites within
tolerance, 1 some suite failed, 2 bad config or usage.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import charfn, glk, norming, spectrum, traces
from .errors import ConfigError, DomainError, SLNormError
from .potential import Potential, parse_constant

log = logging.getLogger("slnorm")

PI = math.pi
SUITES = ("spectrum", "norming", "traces", "glk", "charfn")
NEEDS = {
    "spectrum": (),
    "norming": ("spectrum",),
    "traces": ("spectrum", "norming"),
    "glk": ("spectrum", "norming"),
    "charfn": ("spectrum", "norming"),
}
DEFAULT_TOLERANCES = {
    "spectrum.char_residual": 1e-10,
    "norming.closure": 1e-8,
    "norming.multiplier_identity": 1e-7,
    "glk.diagonal": 2e-2,
    "glk.transmutation": 2e-2,
    "charfn.product": 2e-3,
    "charfn.recovery": 1e-2,
    "charfn.remark": 2e-2,
}
PROBES = (1.0, 4.0, 7.3)
QUICK_N = 100
SWEEP_PARAMS = ("alpha", "beta", "N_eigen", "N_modes", "K")
# multiplier identity is checked on the low indices, product tests on n <= 5
LOW_INDEX = 20
PRODUCT_INDEX = 5


@dataclass(frozen=True)
class RunConfig:
    potential: dict
    alpha: float
    beta: float
    N_eigen: int = 400
    N_modes: int = None
    M: int = None
    K: int = None
    suites: tuple = SUITES
    tolerances: dict = field(default_factory=dict)
    output_path: str = None
    output_format: str = "json"
    seed: int = 0

    def resolved(self):
        """Fill the defaulted truncations: N_modes = N_eigen, M = N_modes // 2, K = N_eigen - 1."""
        n_modes = self.N_modes if self.N_modes is not None else self.N_eigen
        m = self.M if self.M is not None else max(1, n_modes // 2)
        k = self.K if self.K is not None else self.N_eigen - 1
        return replace(self, N_modes=n_modes, M=m, K=k)

    def quick(self):
        n = min(self.N_eigen, QUICK_N)
        n_modes = min(self.N_modes if self.N_modes is not None else n, n)
        k = min(self.K if self.K is not None else n - 1, n - 1)
        return replace(self, N_eigen=n, N_modes=n_modes, M=max(1, n_modes // 2), K=k)

    def tolerance(self, key):
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def echo(self):
        d = asdict(self)
        d["suites"] = list(self.suites)
        return d


def _angle(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config.{key}", "missing required field")
    try:
        val = parse_constant(cfg[key])
    except DomainError as exc:
        raise ConfigError(f"config.{key}", str(exc)) from None
    if not 0.0 < val < PI:
        raise ConfigError(f"config.{key}", f"{key} must lie in open interval (0, pi), got {cfg[key]!r}")
    return val


def _count(cfg, key, minimum, default=None):
    if cfg.get(key) is None:
        return default
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"config.{key}", f"expected an integer, got {val!r}")
    if val < minimum:
        raise ConfigError(f"config.{key}", f"must be >= {minimum}, got {val}")
    return val


def parse_config(cfg):
    """Validate a decoded JSON object into a :class:`RunConfig`."""
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    known = {"potential", "alpha", "beta", "N_eigen", "N_modes", "M", "K", "suites", "tolerances", "output", "seed"}
    extra = sorted(set(cfg) - known)
    if extra:
        raise ConfigError(f"config.{extra[0]}", "unknown field")
    pot = cfg.get("potential", {"kind": "zero"})
    try:
        Potential.from_config(pot)
    except (DomainError, KeyError, TypeError) as exc:
        raise ConfigError("config.potential", str(exc)) from None
    alpha = _angle(cfg, "alpha")
    beta = _angle(cfg, "beta")
    n_eigen = _count(cfg, "N_eigen", 1, 400)
    n_modes = _count(cfg, "N_modes", 1)
    if n_modes is not None and n_modes > n_eigen:
        raise ConfigError("config.N_modes", f"N_modes={n_modes} exceeds N_eigen={n_eigen}")
    m = _count(cfg, "M", 1)
    k = _count(cfg, "K", 1)
    if k is not None and k + 1 > n_eigen:
        raise ConfigError("config.K", f"K={k} needs K+1 <= N_eigen={n_eigen}")

    suites = cfg.get("suites", list(SUITES))
    if isinstance(suites, str):
        suites = [suites]
    if not isinstance(suites, list) or not suites:
        raise ConfigError("config.suites", "must be a nonempty list")
    for i, s in enumerate(suites):
        if s not in SUITES:
            raise ConfigError(f"config.suites[{i}]", f"unknown suite {s!r}; choose from {', '.join(SUITES)}")

    tols = cfg.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("config.tolerances", "must be an object")
    for key, val in tols.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"config.tolerances.{key}", "unknown tolerance")
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            raise ConfigError(f"config.tolerances.{key}", f"must be a positive number, got {val!r}")

    out = cfg.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("config.output", "must be an object")
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError("config.output.format", f"expected 'json' or 'csv', got {fmt!r}")
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("config.seed", f"expected an integer, got {seed!r}")

    return RunConfig(
        potential=pot, alpha=alpha, beta=beta, N_eigen=n_eigen, N_modes=n_modes, M=m, K=k,
        suites=tuple(s for s in SUITES if s in suites), tolerances={k_: float(v) for k_, v in tols.items()},
        output_path=out.get("path"), output_format=fmt, seed=seed,
    )


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(cfg)


# -- suites -------------------------------------------------------------

def _check(name, value, tol):
    ok = bool(np.isfinite(value) and value <= tol)
    return {"name": name, "value": float(value), "tolerance": float(tol), "passed": ok}


def _series_row(rep):
    return {
        "n_terms": rep.n_terms, "partial_sum": rep.partial_sum, "half_sum": rep.half_sum,
        "quarter_sum": rep.quarter_sum, "extrapolated": rep.extrapolated_value, "method": rep.method,
        "decay_exponent": rep.decay_exponent, "target": rep.target, "residual": rep.residual,
        "tolerance": rep.tolerance, "passed": rep.passed,
    }


def suite_spectrum(cfg, ctx):
    pot = Potential.from_config(cfg.potential)
    sp = spectrum.find_eigenvalues(pot, cfg.alpha, cfg.beta, cfg.N_eigen)
    ctx["potential"], ctx["spectral"] = pot, sp
    resid = float(np.max(spectrum.root_residual(np.array([r.char_value for r in sp.records]), sp.phi_dots, sp.mus)))
    return {"checks": [_check("char_residual", resid, cfg.tolerance("spectrum.char_residual"))]}


def suite_norming(cfg, ctx):
    sp = ctx["spectral"]
    nm = norming.compute_norming(sp)
    ctx["norms"] = nm
    low = min(LOW_INDEX + 1, nm.count)
    return {
        "checks": [
            _check("closure", float(np.max(nm.closure_residual())), cfg.tolerance("norming.closure")),
            _check("multiplier_identity", norming.verify_multiplier_identity(sp, nm, low), cfg.tolerance("norming.multiplier_identity")),
        ],
        "proportionality_max": float(np.max(nm.proportionality)),
    }


def suite_traces(cfg, ctx):
    sp, nm = ctx["spectral"], ctx["norms"]
    if nm.count < 4:
        raise ValueError("series checks need at least 4 eigenvalues")
    ra = traces.series_identity_a(sp, nm, cfg.alpha)
    rb = traces.series_identity_b(sp, nm, cfg.beta)
    checks = []
    for name, rep in (("left", ra), ("right", rb)):
        c = _check(name, rep.residual, rep.tolerance)
        checks.append(c)
    return {"checks": checks, "series": {"left": _series_row(ra), "right": _series_row(rb)}}


def suite_glk(cfg, ctx):
    sp, nm, pot = ctx["spectral"], ctx["norms"], ctx["potential"]
    grid = glk.solve_G(glk.build_F(sp, nm, M=cfg.M, n_modes=cfg.N_modes))
    probes = list(PROBES)
    rng = np.random.default_rng(cfg.seed)
    probes.append(float(rng.uniform(0.0, 10.0)))
    trans = [glk.verify_transmutation(grid, pot, cfg.alpha, mu) for mu in probes]
    diag = glk.verify_diagonal(grid, pot, cfg.alpha)
    return {
        "checks": [
            _check("diagonal", diag, cfg.tolerance("glk.diagonal")),
            _check("transmutation", max(trans), cfg.tolerance("glk.transmutation")),
        ],
        "G00": float(grid.G[0, 0]),
        "F00": float(grid.F[0, 0]),
        "corner_error": float(glk.diagonal_error(grid, pot, cfg.alpha)[-1]),
        "probes": [{"mu": mu, "residual": r} for mu, r in zip(probes, trans)],
        "ill_conditioned_rows": list(grid.ill_conditioned),
    }


def suite_charfn(cfg, ctx):
    sp, nm = ctx["spectral"], ctx["norms"]
    top = min(PRODUCT_INDEX, cfg.K // 2, sp.count - 1)
    rows = []
    for n in range(top + 1):
        rep = charfn.product_phi_dot(sp, cfg.alpha, cfg.beta, n, cfg.K)
        inv = charfn.recover_b_tilde(sp, nm, n, cfg.K)
        rows.append({
            "n": n, "product": rep.product_value, "corrected": rep.corrected_value, "direct": rep.direct_value,
            "relative_error": rep.relative_error, "corrected_relative_error": rep.corrected_relative_error,
            "recovery_error": abs(inv * nm.b_tilde[n] - 1.0),
        })
    n_series = max(4, min(cfg.K // 2, sp.count))
    remark = charfn.verify_remark_identity(sp, nm, cfg.alpha, cfg.beta, n_series, cfg.K)
    return {
        "checks": [
            _check("product", max(r["corrected_relative_error"] for r in rows), cfg.tolerance("charfn.product")),
            _check("recovery", max(r["recovery_error"] for r in rows), cfg.tolerance("charfn.recovery")),
            _check("remark", remark.residual, cfg.tolerance("charfn.remark")),
        ],
        "rows": rows,
        "remark": _series_row(remark),
    }


RUNNERS = {
    "spectrum": suite_spectrum,
    "norming": suite_norming,
    "traces": suite_traces,
    "glk": suite_glk,
    "charfn": suite_charfn,
}


def _eigen_table(ctx):
    sp, nm = ctx.get("spectral"), ctx.get("norms")
    if sp is None:
        return []
    rows = []
    for k, r in enumerate(sp.records):
        row = {"n": r.n, "mu": r.mu, "phi_dot": r.phi_deriv_char}
        if nm is not None:
            row.update(a_tilde=float(nm.a_tilde[k]), b_tilde=float(nm.b_tilde[k]), c=float(nm.c[k]))
        rows.append(row)
    return rows


def run(cfg):
    """Execute the selected suites and their prerequisites; returns the report dict.

    Wall-clock times are kept under ``timing``, apart from the results, so
    that everything else is a deterministic function of the config.
    """
    cfg = cfg.resolved()
    wanted = set(cfg.suites)
    for s in cfg.suites:
        wanted.update(NEEDS[s])
    ctx = {}
    results, timing = {}, {}
    for name in SUITES:
        if name not in wanted:
            continue
        missing = [dep for dep in NEEDS[name] if results.get(dep, {}).get("status") == "error"]
        entry = {"selected": name in cfg.suites}
        t0 = time.perf_counter()
        if missing:
            entry.update(status="error", error=f"prerequisite {missing[0]} failed")
        else:
            try:
                entry.update(RUNNERS[name](cfg, ctx))
                entry["status"] = "passed" if all(c["passed"] for c in entry["checks"]) else "failed"
            except (SLNormError, ValueError, np.linalg.LinAlgError) as exc:
                log.error("suite %s: %s", name, exc)
                entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
        timing[name] = time.perf_counter() - t0
        results[name] = entry
    passed = all(results[s]["status"] == "passed" for s in cfg.suites)
    return {
        "config": cfg.echo(),
        "passed": passed,
        "suites": results,
        "eigen_table": _eigen_table(ctx),
        "timing": timing,
    }


# -- serialisation ------------------------------------------------------

def _fmt_float(x):
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(report, timing=True):
    """JSON text with floats at 17 significant digits; ``timing=False`` drops wall-clock data."""
    if not timing:
        report = {k: v for k, v in report.items() if k != "timing"}
    return _encode(report, 2, 0) + "\n"


def to_csv(report):
    """Two tables: eigen data, then one row per check."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write("# eigen_table\n")
    table = report["eigen_table"]
    if table:
        cols = list(table[0])
        w.writerow(cols)
        for row in table:
            w.writerow([f"{row[c]:.17g}" if isinstance(row[c], float) else row[c] for c in cols])
    buf.write("# checks\n")
    w.writerow(["suite", "check", "value", "tolerance", "passed"])
    for name, entry in report["suites"].items():
        for c in entry.get("checks", []):
            w.writerow([name, c["name"], f"{c['value']:.17g}", f"{c['tolerance']:.17g}", c["passed"]])
        if entry["status"] == "error":
            w.writerow([name, "error", entry["error"], "", False])
    return buf.getvalue()


def _emit(text, path):
    if path in (None, "-"):
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the exit-time flush too
            sys.stdout = open(os.devnull, "w")
    else:
        with open(path, "w") as fh:
            fh.write(text)


# -- sweep --------------------------------------------------------------

def _metric(report, suite, check):
    entry = report.get("suites", {}).get(suite, {})
    for c in entry.get("checks", []):
        if c["name"] == check:
            return c["value"]
    return None


def _non_increasing(values, noise=0.2):
    vals = [v for v in values if v is not None]
    return all(b <= a * (1.0 + noise) for a, b in zip(vals, vals[1:]))


def _run_isolated(cfg):
    try:
        return run(cfg)
    except Exception as exc:  # a broken run must not stop the sweep
        return {"config": cfg.echo(), "passed": False, "error": f"{type(exc).__name__}: {exc}", "suites": {}}


def workers():
    raw = os.environ.get("SLNORM_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError("SLNORM_WORKERS", f"expected an integer, got {raw!r}") from None


def sweep(base, param, values, n_workers=1):
    """One independent run per value plus a summary of the convergence ladders."""
    if param not in SWEEP_PARAMS:
        raise ConfigError("sweep.param", f"expected one of {', '.join(SWEEP_PARAMS)}, got {param!r}")
    cfgs = []
    for i, v in enumerate(values):
        if param in ("alpha", "beta") and not 0.0 < v < PI:
            raise ConfigError(f"sweep.values[{i}]", f"{param} must lie in open interval (0, pi), got {v!r}")
        cfgs.append(replace(base, **{param: v}))
    if n_workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            reports = list(ex.map(_run_isolated, cfgs))
    else:
        reports = [_run_isolated(c) for c in cfgs]
    return reports, summarize(param, values, reports)


def summarize(param, values, reports):
    rows = {
        "param": param,
        "values": list(values),
        "passed": [r.get("passed", False) for r in reports],
        "left_extrapolated": [],
        "glk_diagonal": [_metric(r, "glk", "diagonal") for r in reports],
        "traces_left_residual": [_metric(r, "traces", "left") for r in reports],
    }
    for r in reports:
        series = r.get("suites", {}).get("traces", {}).get("series", {})
        rows["left_extrapolated"].append(series.get("left", {}).get("extrapolated"))
    checks = {}
    if param == "alpha":
        ext = [v for v in rows["left_extrapolated"] if v is not None]
        order = np.argsort(values)
        ext_sorted = [rows["left_extrapolated"][i] for i in order]
        checks["left_extrapolated_decreasing"] = (
            len(ext) == len(values) and all(b < a for a, b in zip(ext_sorted, ext_sorted[1:]))
        )
    if param in ("N_modes", "N_eigen"):
        checks["glk_diagonal_non_increasing"] = _non_increasing(rows["glk_diagonal"])
    if param == "N_eigen":
        checks["traces_residual_non_increasing"] = _non_increasing(rows["traces_left_residual"])
    rows["ladder_checks"] = checks
    return rows


def _parse_values(param, text):
    out = []
    for i, tok in enumerate(t for t in text.split(",") if t.strip()):
        try:
            if param in ("alpha", "beta"):
                out.append(parse_constant(tok.strip()))
            else:
                out.append(int(tok))
        except (DomainError, ValueError):
            raise ConfigError(f"sweep.values[{i}]", f"cannot parse {tok!r}") from None
    return out


# -- entry point --------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="slnorm", description="Sturm-Liouville spectra, norming constants and identity checks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the configured suites")
    r.add_argument("config")
    r.add_argument("--suite", action="append", choices=SUITES, help="override the suite list (repeatable)")
    r.add_argument("--output", help="report path ('-' for stdout); .csv selects CSV")
    r.add_argument("--quick", action="store_true", help=f"cap N_eigen and N_modes at {QUICK_N}")
    r.add_argument("--no-timing", action="store_true", help="omit wall-clock data (byte-stable output)")

    s = sub.add_parser("sweep", help="rerun a config over a list of parameter values")
    s.add_argument("config")
    s.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    s.add_argument("--values", required=True, help="comma separated, e.g. pi/6,pi/4 or 100,200,400")
    s.add_argument("--output", help="report path (default stdout)")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--no-timing", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            if args.suite:
                cfg = replace(cfg, suites=tuple(s for s in SUITES if s in args.suite))
            if args.quick:
                cfg = cfg.quick()
            path = args.output or cfg.output_path
            fmt = "csv" if (path and path.endswith(".csv")) else cfg.output_format
            report = run(cfg)
            _emit(to_csv(report) if fmt == "csv" else to_json(report, timing=not args.no_timing), path)
            for name, entry in report["suites"].items():
                log.info("%s: %s (%.2fs)", name, entry["status"], report["timing"][name])
            return 0 if report["passed"] else 1

        values = _parse_values(args.param, args.values)
        if args.quick:
            cfg = cfg.quick()
        reports, summary = sweep(cfg, args.param, values, workers())
        if args.no_timing:
            reports = [{k: v for k, v in r.items() if k != "timing"} for r in reports]
        _emit(to_json({"runs": reports, "summary": summary}), args.output)
        return 0 if all(summary["passed"]) and all(summary["ladder_checks"].values()) else 1
    except ConfigError as exc:
        print(f"slnorm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
