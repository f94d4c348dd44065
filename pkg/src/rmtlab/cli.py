"""Command-line experiments: each subcommand prints or writes a report of
prediction/measurement rows.

Exit codes: 0 all rows pass, 1 some row fails its acceptance rule,
2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import enum
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable

from . import analytic, zetalab
from .contour import eval_coincident
from .ensemble import (EnsembleConfig, MCMCSettings, Quartic, draw_spectra, empirical_density,
                       estimate_log_moments, estimate_normalized_moment, estimate_resolvent_mean,
                       estimate_resolvent_pair, estimate_two_point, log_char_poly_sample,
                       normality_diagnostics)
from .errors import DomainError, RMTLabError
from .specialfn import EvalAccuracy

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
_MASK64 = (1 << 64) - 1


class Command(enum.Enum):
    GAMMA = "gamma"
    MOMENTS = "moments"
    LOG_MOMENTS = "log-moments"
    TWO_POINT = "two-point"
    UNIVERSALITY = "universality"
    ZETA_MOMENTS = "zeta-moments"
    AK = "ak"
    REPORT = "report"


class Format(enum.Enum):
    CSV = "csv"
    JSON = "json"


class UsageError(DomainError):
    """Command line or config file violates a constraint."""


# -- parameter schema --------------------------------------------------------

@dataclass(frozen=True)
class _Param:
    kind: Callable
    check: Callable[[object], bool] | None = None
    rule: str = ""


def _int(s):
    try:
        return int(str(s).replace("_", ""))
    except ValueError:
        pass
    # accept forms such as 1e4
    v = float(s)
    if not math.isfinite(v) or v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _method(s):
    if s not in ("auto", "plain", "smc", "ti"):
        raise ValueError("method must be one of auto, plain, smc, ti")
    return s


_P = {
    "k": _Param(float, lambda v: v > 0, "k > 0"),
    "n": _Param(_int, lambda v: v >= 2, "n >= 2"),
    "lambda": _Param(float, lambda v: -2 < v < 2, "-2 < lambda < 2"),
    "samples": _Param(_int, lambda v: v >= 2, "samples >= 2"),
    "t0": _Param(float, lambda v: v >= 0, "t0 >= 0"),
    "t1": _Param(float, lambda v: v > 0, "t1 > 0"),
    "step": _Param(float, lambda v: v > 0, "step > 0"),
    "prime_cutoff": _Param(_int, lambda v: v >= 100, "prime-cutoff >= 100"),
    "g": _Param(float, lambda v: v >= 0, "g >= 0"),
    "x": _Param(float, lambda v: v > 0, "x > 0"),
    "method": _Param(_method),
}

DEFAULTS: dict[Command, dict[str, object]] = {
    Command.GAMMA: {"k": 0.5},
    Command.MOMENTS: {"n": 100, "k": 1.0, "lambda": 0.0, "samples": 10_000, "method": "auto"},
    Command.LOG_MOMENTS: {"n": 200, "lambda": 0.0, "samples": 10_000},
    Command.TWO_POINT: {"n": 200, "lambda": 0.0, "x": 8.0, "samples": 10_000},
    Command.UNIVERSALITY: {"n": 60, "g": 0.1, "lambda": 0.0, "k": 1.0, "samples": 16_000},
    Command.ZETA_MOMENTS: {"t0": 0.0, "t1": 1e4, "step": None, "k": 1.0},
    Command.AK: {"k": 2.0, "prime_cutoff": 1_000_000},
    Command.REPORT: {},
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: Command
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    seed: int = 0
    output_path: str | None = None
    format: Format = Format.CSV
    workers: int = 1


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    predicted: float
    measured: float
    std_err: float
    ratio: float
    passed: bool

    @classmethod
    def make(cls, quantity: str, predicted: float, measured: float, std_err: float,
             passed: bool) -> "ReportRow":
        ratio = measured / predicted if predicted not in (0, 0.0) and math.isfinite(predicted) else math.nan
        return cls(quantity, float(predicted), float(measured), float(std_err), float(ratio), bool(passed))


# -- parsing -----------------------------------------------------------------

def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    for cmd in Command:
        p = sub.add_parser(cmd.value)
        for key in (*DEFAULTS[cmd], "seed", "output", "format", "workers", "config"):
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_and_validate(argv: list[str]) -> ExperimentConfig:
    """Flags override the config file, which overrides defaults.

    Every violated constraint is collected into one UsageError.
    """
    parser = _build_parser()
    if not argv or argv[0] not in {c.value for c in Command}:
        raise UsageError(f"unknown or missing command; choose from {', '.join(c.value for c in Command)}")
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("invalid arguments: " + " ".join(argv)) from exc
    cmd = Command(ns.command)
    given = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "verbose")}
    merged: dict[str, str] = {}
    errors = []
    if "config" in given:
        for key, value in _read_config_file(given.pop("config")).items():
            if key not in DEFAULTS[cmd] and key not in ("seed", "output", "format", "workers"):
                errors.append(f"unknown key {key!r} for {cmd.value}")
            merged[key] = value
    merged.update(given)

    params = dict(DEFAULTS[cmd])
    for key in DEFAULTS[cmd]:
        if key not in merged:
            continue
        spec = _P[key]
        try:
            val = spec.kind(merged[key])
        except (TypeError, ValueError):
            errors.append(f"--{key.replace('_', '-')}: cannot parse {merged[key]!r}")
            continue
        if spec.check and not spec.check(val):
            errors.append(f"--{key.replace('_', '-')}: violates {spec.rule}")
        params[key] = val

    seed, workers, fmt = 0, 1, Format.CSV
    try:
        seed = _int(merged.get("seed", 0))
        if not 0 <= seed <= _MASK64:
            errors.append("--seed: must be a 64-bit unsigned integer")
    except ValueError:
        errors.append("--seed: not an integer")
    try:
        workers = _int(merged.get("workers", 1))
        if workers < 1:
            errors.append("--workers: must be >= 1")
    except ValueError:
        errors.append("--workers: not an integer")
    try:
        fmt = Format(str(merged.get("format", "csv")).lower())
    except ValueError:
        errors.append("--format: must be csv or json")

    if cmd is Command.ZETA_MOMENTS and not errors:
        if params["t1"] <= params["t0"]:
            errors.append("--t1: must exceed t0")
        elif params["t1"] > 1e5:
            errors.append("--t1: heights above 1e5 are out of scope")
    if errors:
        raise UsageError("; ".join(errors))
    if cmd is Command.ZETA_MOMENTS and params["step"] is None:
        params["step"] = _adaptive_step(params["t0"], params["t1"])
    return ExperimentConfig(cmd, MappingProxyType(params), seed, merged.get("output"), fmt, workers)


def _adaptive_step(t0: float, t1: float) -> float:
    """About 100 nodes per mean zero spacing at the top of the range, capped at 0.01."""
    spacing = 2 * math.pi / math.log(max(t1, 100.0) / (2 * math.pi))
    target = min(0.01, spacing / 100)
    return (t1 - t0) / math.ceil((t1 - t0) / target)


# -- experiments ------------------------------------------------------------

def _within(meas: float, pred: float, se: float, rel: float) -> bool:
    return abs(meas / pred - 1) <= rel and abs(meas - pred) <= 3 * se


def _run_gamma(p, seed, workers):
    k = p["k"]
    integral = analytic.log_gamma_k_integral(k)
    g_int = math.exp(integral.log_value)
    rows = []
    hur = analytic.log_gamma_k_hurwitz(k)
    g_h = math.exp(hur.log_value)
    rows.append(ReportRow.make("gamma_k.hurwitz_vs_integral", g_int, g_h, hur.err_estimate * g_h,
                               abs(g_h - g_int) < 1e-6))
    if float(k).is_integer():
        exact = analytic.gamma_k_integer(int(k)).value
        rows.append(ReportRow.make("gamma_k.integral_vs_product", exact, g_int,
                                   integral.err_estimate * g_int, abs(g_int / exact - 1) < 1e-6))
        if k <= 3:
            cv = eval_coincident(int(k))
            rows.append(ReportRow.make("gamma_k.contour_vs_product", exact, cv.value, cv.quadrature_err,
                                       abs(cv.value - exact) < 1e-6))
    if k == 0.5:
        rows.append(ReportRow.make("gamma_half.quoted_value", 1.1432, g_int, 0.0, 1.1427 <= g_int <= 1.1437))
    if k <= 1:
        lo, hi = analytic.gamma_k_bounds(k)
        rows.append(ReportRow.make("gamma_k.lower_bound", lo, g_int, 0.0, g_int >= lo))
        rows.append(ReportRow.make("gamma_k.upper_bound", hi, g_int, 0.0, g_int <= hi))
    return rows


def _resolve_method(method: str, k: float) -> str:
    if method != "auto":
        return method
    return "smc" if k == int(k) else "plain"


def _run_moments(p, seed, workers):
    cfg = EnsembleConfig(p["n"], seed=seed, samples=p["samples"])
    method = _resolve_method(p["method"], p["k"])
    est = estimate_normalized_moment(cfg, p["lambda"], p["k"], method=method, workers=workers)
    pred = analytic.predict_normalized_moment(p["n"], p["lambda"], p["k"]).value
    return [ReportRow.make(f"normalized_moment.k={p['k']:g}.{method}", pred, est.mean, est.std_err,
                           _within(est.mean, pred, est.std_err, 0.1))]


def _run_log_moments(p, seed, workers):
    n, lam = p["n"], p["lambda"]
    cfg = EnsembleConfig(n, seed=seed, samples=p["samples"])
    ests = estimate_log_moments(cfg, lam, 4, workers=workers)
    scale = analytic.predict_log_moment(n, lam, 2).value
    rows = []
    m1 = ests[0]
    rows.append(ReportRow.make("log_moment.p=1", 0.0, m1.mean, m1.std_err,
                               abs(m1.mean) <= 3 * m1.std_err + 0.1 * 2 * scale))
    vals = log_char_poly_sample(cfg, lam, workers=workers)
    var = float(vals.var(ddof=1))
    rows.append(ReportRow.make("log_moment.variance", scale, var, ests[1].std_err, 0.8 <= var / scale <= 1.2))
    kurt = ests[3].mean / ests[1].mean ** 2
    rows.append(ReportRow.make("log_moment.kurtosis_ratio", 3.0, kurt, math.nan, 2.7 <= kurt <= 3.3))
    rep = normality_diagnostics(vals)
    rows.append(ReportRow.make("log_moment.skewness", 0.0, rep.skewness, math.nan, abs(rep.skewness) <= 0.15))
    rows.append(ReportRow.make("log_moment.ks_statistic", 0.0, rep.ks_statistic, math.nan, rep.ks_statistic <= 0.02))
    return rows


def _run_two_point(p, seed, workers):
    n, lam, x = p["n"], p["lambda"], p["x"]
    cfg = EnsembleConfig(n, seed=seed, samples=p["samples"])
    lam2 = lam + x / (2 * math.pi * n * float(analytic.semicircle_density(lam)))
    rows = []
    est = estimate_two_point(cfg, lam, lam2, 1, 1, workers=workers)
    pred = analytic.predict_two_point_log_moment(1, 1, x, n, lam).value
    rows.append(ReportRow.make(f"two_point_log_moment.x={x:g}", pred, est.mean, est.std_err,
                               _within(est.mean, pred, est.std_err, 0.2)))
    odd = estimate_two_point(cfg, lam, lam2, 2, 1, workers=workers)
    rows.append(ReportRow.make("two_point_log_moment.odd_2_1", 0.0, odd.mean, odd.std_err,
                               abs(odd.mean) <= 3 * odd.std_err + 0.15 * abs(pred) ** 1.5))
    g2 = analytic.g2_connected(3.0, -3.0).real
    pair = estimate_resolvent_pair(cfg, 3.0, -3.0, workers=workers)
    rows.append(ReportRow.make("resolvent_connected.z=(3,-3)", g2, pair.mean.real, pair.std_err,
                               _within(pair.mean.real, g2, pair.std_err, 0.1)))
    g1 = analytic.green_function(3.0).real
    mean = estimate_resolvent_mean(cfg, 3.0, workers=workers)
    rows.append(ReportRow.make("resolvent_mean.z=3", g1, mean.mean.real, mean.std_err,
                               abs(mean.mean.real - g1) <= 3 * mean.std_err + 1e-3))
    return rows


def _run_universality(p, seed, workers):
    n, g, lam, k = p["n"], p["g"], p["lambda"], p["k"]
    cfg = EnsembleConfig(n, potential=Quartic(g), seed=seed, samples=p["samples"])
    mcmc = MCMCSettings(burn_in=1000, thin=2)
    est = estimate_normalized_moment(cfg, lam, k, method="ti", workers=workers, mcmc=mcmc)
    rho = empirical_density(draw_spectra(cfg, workers=workers, mcmc=mcmc), lam)
    gk = math.exp(analytic.log_gamma_k(k))
    pred = (2 * math.pi * n * rho) ** (k * k) * gk
    rows = [ReportRow.make(f"universality.quartic_g={g:g}", pred, est.mean, est.std_err,
                           0.85 <= est.mean / pred <= 1.15)]
    # the O(1) factor (b/2)^(k^2), b the band edge, is informational only
    corrected = pred * (analytic.quartic_band_edge(g) / 2) ** (k * k)
    rows.append(ReportRow.make("universality.band_edge_corrected", corrected, est.mean, est.std_err,
                               0.85 <= est.mean / corrected <= 1.15))
    return rows


def _abs_moment_band(k: float) -> tuple[float, float]:
    return {1.0: (0.9, 1.35), 2.0: (0.5, 1.6)}.get(float(k), (0.5, 2.0))


def _run_zeta_moments(p, seed, workers):
    t0, t1, step, k = p["t0"], p["t1"], p["step"], p["k"]
    grid = zetalab.cached_zeta_grid(t0, t1, step, EvalAccuracy(), workers=workers)
    rows = []
    m = zetalab.zeta_abs_moment(grid, k)
    ak = zetalab.ak_coefficient(k, 1_000_000).value
    pred = math.exp(analytic.log_gamma_k(k)) * ak * math.log(t1) ** (k * k)
    lo, hi = _abs_moment_band(k)
    rows.append(ReportRow.make(f"zeta_abs_moment.k={k:g}", pred, m.mean, m.std_err, lo <= m.mean / pred <= hi))
    scale = zetalab.selberg_scale(t1)
    lm = zetalab.zeta_log_moment(grid, 1)
    rows.append(ReportRow.make("zeta_log_abs.second_moment", scale, lm.mean, lm.std_err, 0.4 <= lm.mean / scale <= 2.0))
    am = zetalab.zeta_arg_moment(grid, 1)
    rows.append(ReportRow.make("zeta_arg.second_moment", scale, am.mean, am.std_err, 0.4 <= am.mean / scale <= 2.0))
    rep = normality_diagnostics(zetalab.log_abs_samples(grid))
    rows.append(ReportRow.make("zeta_log_abs.skewness", 0.0, rep.skewness, math.nan, abs(rep.skewness) <= 0.5))
    frac = lm.excluded / grid.abs_zeta.size
    rows.append(ReportRow.make("zeta_log_abs.excluded_fraction", 0.0, frac, math.nan, frac <= 0.01))
    return rows


def _run_ak(p, seed, workers):
    k, cutoff = p["k"], p["prime_cutoff"]
    res = zetalab.ak_coefficient(k, cutoff)
    closed = {1.0: 1.0, 2.0: 6 / math.pi ** 2}.get(float(k))
    if closed is None:
        return [ReportRow.make(f"a_k.k={k:g}", math.nan, res.value, res.tail_bound, res.tail_bound < 1e-6)]
    tol = 1e-12 if k == 1 else 1e-6
    return [ReportRow.make(f"a_k.k={k:g}", closed, res.value, res.tail_bound, abs(res.value - closed) <= tol)]


_RUNNERS = {
    Command.GAMMA: _run_gamma,
    Command.MOMENTS: _run_moments,
    Command.LOG_MOMENTS: _run_log_moments,
    Command.TWO_POINT: _run_two_point,
    Command.UNIVERSALITY: _run_universality,
    Command.ZETA_MOMENTS: _run_zeta_moments,
    Command.AK: _run_ak,
}


def run_experiment(cfg: ExperimentConfig) -> list[ReportRow]:
    """All rows for ``cfg``; the report command runs every experiment at defaults."""
    if cfg.command is Command.REPORT:
        rows = []
        for cmd, fn in _RUNNERS.items():
            params = dict(DEFAULTS[cmd])
            if cmd is Command.ZETA_MOMENTS:
                params["step"] = _adaptive_step(params["t0"], params["t1"])
            rows.extend(_named(cmd, fn, params, cfg))
        return rows
    return _named(cfg.command, _RUNNERS[cfg.command], dict(cfg.params), cfg)


def _named(cmd, fn, params, cfg):
    try:
        return fn(params, cfg.seed, cfg.workers)
    except RMTLabError as exc:
        raise type(exc)(f"{cmd.value}: {exc}") from exc


# -- output -------------------------------------------------------------------

FIELDS = ("quantity", "predicted", "measured", "std_err", "ratio", "pass")


def _num(x: float, json_style: bool) -> str:
    if math.isnan(x):
        return "null" if json_style else "nan"
    if math.isinf(x):
        if json_style:
            return "null"
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def format_report(rows: list[ReportRow], fmt: Format) -> str:
    if not rows:
        raise DomainError("report needs at least one row")
    if fmt is Format.CSV:
        lines = [",".join(FIELDS)]
        for r in rows:
            q = r.quantity if "," not in r.quantity else '"' + r.quantity.replace('"', '""') + '"'
            lines.append(",".join([q, _num(r.predicted, False), _num(r.measured, False),
                                   _num(r.std_err, False), _num(r.ratio, False),
                                   "true" if r.passed else "false"]))
        return "\n".join(lines) + "\n"
    import json
    objs = []
    for r in rows:
        objs.append("{" + ", ".join([
            f'"quantity": {json.dumps(r.quantity)}',
            f'"predicted": {_num(r.predicted, True)}',
            f'"measured": {_num(r.measured, True)}',
            f'"std_err": {_num(r.std_err, True)}',
            f'"ratio": {_num(r.ratio, True)}',
            f'"pass": {"true" if r.passed else "false"}',
        ]) + "}")
    return "[\n  " + ",\n  ".join(objs) + "\n]\n"


def emit_report(rows: list[ReportRow], fmt: Format, path: str | None) -> None:
    """Write to ``path``, or stdout when path is None or '-'."""
    text = format_report(rows, fmt)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("-h", "--help"):
        _build_parser().print_help()
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_and_validate(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows = run_experiment(cfg)
    except RMTLabError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        emit_report(rows, cfg.format, cfg.output_path)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL
