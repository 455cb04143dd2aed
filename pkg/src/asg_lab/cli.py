"""Batch command-line entry point.

``asg-lab <command> --config <path> [--out <path>] [--seed <u64>]`` reads a
flat JSON experiment config, dispatches to the simulation and verification
modules, and writes a CSV result table plus a JSON metadata sidecar echoing
the effective config (so the sidecar alone reproduces the run).  Exit codes:
0 success, 2 config validation failure, 3 a declared tolerance was violated.

Column schemas per command are documented in the README.  Floats are printed
with 17 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import ndtr

from . import __version__
from .ctmc import simulate_ctmc, simulate_marginals
from .line_counting import (
    MoranParams,
    moves_B,
    mu_sigma_B,
    jump_map_B,
    rescale_B,
    sample_stationary_B,
    stationary_B,
    stationary_oracle_B,
    drift_embedded_B,
    drift_sign_change_B,
)
from .logistic import (
    LogisticParams,
    OffspringDistribution,
    constant_h,
    jump_map_X,
    moran_h,
    moves_X,
    mu_sigma_X,
    rescale_X,
)
from .moran import build_graphical, line_counts, trace_asg
from .ou import OUParams, ou_autocov, ou_sample_at, ou_stationary
from .rng import RngStream
from .verify import (
    GridSpec,
    duality_cells,
    function_by_name,
    ks_statistic,
    paired_covariance,
    sup_generator_gap,
    function_library,
)

COMMANDS = (
    "simulate-b",
    "simulate-x",
    "simulate-ou",
    "simulate-asg",
    "stationary",
    "gen-gap",
    "duality",
    "drift-scan",
    "fluct-test",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


class ConfigError(ValueError):
    """Invalid experiment config; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: command, effective seed, flat options, and the
    output path for the CSV table."""

    command: str
    seed: int
    out: str
    options: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict[str, Any]:
        doc = {"command": self.command, "seed": self.seed, "out": self.out}
        doc.update(self.options)
        return doc


@dataclass
class ResultTable:
    """Rectangular result rows plus the metadata block written alongside."""

    header: tuple[str, ...]
    rows: list[tuple]
    metadata: dict[str, Any]

    def csv_text(self) -> str:
        lines = [",".join(self.header)]
        for row in self.rows:
            if len(row) != len(self.header):
                raise ValueError("ragged result row")
            lines.append(",".join(_format_cell(cell) for cell in row))
        return "\n".join(lines) + "\n"

    def write(self, out_path: str | Path) -> None:
        out_path = Path(out_path)
        out_path.write_text(self.csv_text())
        sidecar = out_path.with_suffix(out_path.suffix + ".meta.json")
        sidecar.write_text(json.dumps(self.metadata, sort_keys=True, indent=2) + "\n")


def _format_cell(cell) -> str:
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, (float, np.floating)):
        return format(float(cell), ".17g")
    return str(cell)


class _Options:
    """Typed, validated access to the flat config keys."""

    _MISSING = object()

    def __init__(self, command: str, options: dict[str, Any]):
        self.command = command
        self.options = options
        self.seen: set[str] = set()

    def _fetch(self, key: str, default):
        self.seen.add(key)
        value = self.options.get(key, self._MISSING)
        if value is self._MISSING:
            if default is self._MISSING:
                raise ConfigError(key, "required key is missing")
            return default
        return value

    def number(self, key, default=_MISSING, *, positive=False, nonneg=False) -> float:
        value = self._fetch(key, default)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(key, "expected a number")
        value = float(value)
        if positive and not value > 0:
            raise ConfigError(key, "must be positive")
        if nonneg and value < 0:
            raise ConfigError(key, "must be nonnegative")
        return value

    def integer(self, key, default=_MISSING, *, minimum=None) -> int:
        value = self._fetch(key, default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(key, "expected an integer")
        if minimum is not None and value < minimum:
            raise ConfigError(key, f"must be >= {minimum}")
        return value

    def text(self, key, default=_MISSING, *, choices=None) -> str:
        value = self._fetch(key, default)
        if not isinstance(value, str):
            raise ConfigError(key, "expected a string")
        if choices is not None and value not in choices:
            raise ConfigError(key, f"must be one of {sorted(choices)}")
        return value

    def flag(self, key, default=False) -> bool:
        value = self._fetch(key, default)
        if not isinstance(value, bool):
            raise ConfigError(key, "expected true/false")
        return value

    def listing(self, key, default=_MISSING) -> list:
        value = self._fetch(key, default)
        if not isinstance(value, list) or not value:
            raise ConfigError(key, "expected a nonempty list")
        return value

    def raw(self, key, default=_MISSING):
        return self._fetch(key, default)

    def reject_unknown(self) -> None:
        unknown = set(self.options) - self.seen
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key for this command")


def _optional_int(opt: _Options, key, *, minimum=1) -> int | None:
    value = opt.raw(key, None)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(key, f"expected an integer >= {minimum}")
    return value


def _optional_number(opt: _Options, key) -> float | None:
    value = opt.raw(key, None)
    if value is None:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(key, "expected a number")
    return float(value)


def _int_or_list(opt: _Options, key) -> list[int]:
    value = opt.raw(key)
    values = value if isinstance(value, list) else [value]
    out = []
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(key, "expected an integer or list of integers")
        out.append(v)
    return out


def _float_or_list(opt: _Options, key) -> list[float]:
    value = opt.raw(key)
    values = value if isinstance(value, list) else [value]
    out = []
    for v in values:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(key, "expected a number or list of numbers")
        out.append(float(v))
    return out


def _offspring(opt: _Options, key="pi") -> OffspringDistribution:
    pairs = opt.listing(key)
    try:
        return OffspringDistribution.from_pairs(
            (int(j), float(pj)) for j, pj in pairs
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"invalid offspring pairs: {exc}") from exc


def _h_spec(opt: _Options, key="h"):
    """Birth modifier from config: constant value or the Moran 1 - k/N form."""
    spec = opt.raw(key, {"kind": "constant", "value": 1.0})
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(key, "expected {'kind': 'constant'|'moran', ...}")
    if spec["kind"] == "constant":
        value = float(spec.get("value", 1.0))
        if value < 0:
            raise ConfigError(key, "constant h must be nonnegative")
        return constant_h(value), max(value, 1e-300)
    if spec["kind"] == "moran":
        if "N" not in spec:
            raise ConfigError(key, "moran h needs N")
        return moran_h(int(spec["N"])), 1.0
    raise ConfigError(key, f"unknown h kind {spec['kind']!r}")


def _per_N_values(opt: _Options, Ns: list[int], base: str) -> list[float]:
    """Resolve '<base>', '<base>_list' or '<base>_exponent' into one value
    per N (the exponent form gives N**e)."""
    keys = [k for k in (base, f"{base}_list", f"{base}_exponent") if k in opt.options]
    if len(keys) != 1:
        raise ConfigError(base, f"give exactly one of {base}, {base}_list, {base}_exponent")
    key = keys[0]
    if key == base:
        v = opt.number(base, positive=True)
        return [v] * len(Ns)
    if key == f"{base}_list":
        vals = [float(v) for v in opt.listing(key)]
        if len(vals) != len(Ns):
            raise ConfigError(key, "length must match N_list")
        return vals
    e = opt.number(f"{base}_exponent")
    return [float(N) ** e for N in Ns]


# ---------------------------------------------------------------------------
# command implementations


def _run_simulate_b(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    N = opt.integer("N", minimum=1)
    s = opt.number("s", positive=True)
    gamma = opt.number("gamma", positive=True)
    init = opt.integer("init", minimum=1)
    horizon = opt.number("horizon", positive=True)
    replicates = opt.integer("replicates", 1, minimum=1)
    max_jumps = _optional_int(opt, "max_jumps")
    rescaled = opt.flag("rescaled", False)
    opt.reject_unknown()
    p = MoranParams(N, gamma, s)
    if init > N:
        raise ConfigError("init", "must lie in [1, N]")

    header = ("replicate", "time", "value" if rescaled else "state")
    rows: list[tuple] = []
    for rep in range(replicates):
        path = simulate_ctmc(jump_map_B(p), init, horizon,
                             RngStream(cfg.seed, rep), max_jumps=max_jumps)
        if rescaled:
            rp = rescale_B(path, p)
            rows.extend((rep, float(t), float(v)) for t, v in zip(rp.times, rp.values))
        else:
            rows.extend((rep, float(t), int(k)) for t, k in zip(path.times, path.states))
    return ResultTable(header, rows, _metadata(cfg)), EXIT_OK


def _logistic_params(opt: _Options) -> LogisticParams:
    rho = opt.number("rho", positive=True)
    d = opt.number("d", 0.0, nonneg=True)
    c = opt.number("c", nonneg=True)
    pi = _offspring(opt)
    h, h_bound = _h_spec(opt)
    h_bound = opt.number("h_bound", h_bound, positive=True)
    return LogisticParams(rho=rho, h=h, h_bound=h_bound, d=d, c=c, pi=pi)


def _run_simulate_x(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    p = _logistic_params(opt)
    init = opt.integer("init", minimum=0)
    horizon = opt.number("horizon", positive=True)
    replicates = opt.integer("replicates", 1, minimum=1)
    max_jumps = _optional_int(opt, "max_jumps")
    rescaled = opt.flag("rescaled", False)
    opt.reject_unknown()

    header = ("replicate", "time", "value" if rescaled else "state")
    rows: list[tuple] = []
    for rep in range(replicates):
        path = simulate_ctmc(jump_map_X(p), init, horizon,
                             RngStream(cfg.seed, rep), max_jumps=max_jumps)
        if rescaled:
            rp = rescale_X(path, p)
            rows.extend((rep, float(t), float(v)) for t, v in zip(rp.times, rp.values))
        else:
            rows.extend((rep, float(t), int(k)) for t, k in zip(path.times, path.states))
    return ResultTable(header, rows, _metadata(cfg)), EXIT_OK


def _run_simulate_ou(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    theta = opt.number("theta", positive=True)
    sigma2 = opt.number("sigma2", positive=True)
    y0 = opt.raw("y0", "stationary")
    dt = opt.number("dt", positive=True)
    steps = opt.integer("steps", minimum=1)
    replicates = opt.integer("replicates", 1, minimum=1)
    opt.reject_unknown()
    if y0 == "stationary":
        init = None
    elif isinstance(y0, (int, float)) and not isinstance(y0, bool):
        init = float(y0)
    else:
        raise ConfigError("y0", "expected a number or 'stationary'")
    p = OUParams(theta, sigma2, init)

    obs = dt * np.arange(0, steps + 1)
    obs[0] = 0.0
    rows: list[tuple] = []
    for rep in range(replicates):
        vals = ou_sample_at(obs, p, 1, RngStream(cfg.seed, rep))[:, 0]
        rows.extend((rep, float(t), float(v)) for t, v in zip(obs, vals))
    return ResultTable(("replicate", "time", "value"), rows, _metadata(cfg)), EXIT_OK


def _run_simulate_asg(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    N = opt.integer("N", minimum=1)
    gamma = opt.number("gamma", positive=True)
    s = opt.number("s", positive=True)
    horizon = opt.number("horizon", positive=True)
    sample_spec = opt.raw("sample")
    from_time = opt.number("from_time", horizon, nonneg=True)
    replicates = opt.integer("replicates", 1, minimum=1)
    emit = opt.text("emit", "line-counts", choices={"line-counts", "events"})
    opt.reject_unknown()
    if isinstance(sample_spec, int) and not isinstance(sample_spec, bool):
        sample = list(range(1, sample_spec + 1))
    elif isinstance(sample_spec, list):
        sample = [int(v) for v in sample_spec]
    else:
        raise ConfigError("sample", "expected a size or a list of labels")
    if from_time > horizon:
        raise ConfigError("from_time", "must not exceed horizon")

    rows: list[tuple] = []
    if emit == "events":
        header = ("replicate", "time", "source", "target", "kind")
        for rep in range(replicates):
            graph = build_graphical(N, gamma, s, horizon, RngStream(cfg.seed, rep))
            rows.extend(
                (rep, ev.time, ev.source, ev.target, ev.kind) for ev in graph.events()
            )
    else:
        header = ("replicate", "time", "line_count")
        for rep in range(replicates):
            graph = build_graphical(N, gamma, s, horizon, RngStream(cfg.seed, rep))
            snaps = trace_asg(graph, sample, from_time)
            for snap, count in zip(snaps, line_counts(snaps)):
                rows.append((rep, snap.time, int(count)))
    return ResultTable(header, rows, _metadata(cfg)), EXIT_OK


def _run_stationary(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    N = opt.integer("N", minimum=1)
    s = opt.number("s", positive=True)
    gamma = opt.number("gamma", positive=True)
    opt.reject_unknown()
    p = MoranParams(N, gamma, s)
    pi = stationary_B(p)
    if N <= 10_000:
        oracle = stationary_oracle_B(p)
        header = ("k", "probability", "oracle_probability")
        rows = [(k + 1, float(pi[k]), float(oracle[k])) for k in range(N)]
    else:
        header = ("k", "probability")
        rows = [(k + 1, float(pi[k])) for k in range(N)]
    return ResultTable(header, rows, _metadata(cfg)), EXIT_OK


def _run_gen_gap(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    mode = opt.text("mode", choices={"b", "x"})
    half_width = opt.number("half_width", 3.0, positive=True)
    Ns = _int_or_list(opt, "N_list")
    names = opt.raw("functions", "all")
    if names == "all":
        functions = list(function_library())
    elif isinstance(names, list):
        functions = [function_by_name(str(n)) for n in names]
    else:
        raise ConfigError("functions", "expected 'all' or a list of names")
    grid = GridSpec(half_width=half_width)

    if mode == "b":
        gamma = opt.number("gamma", positive=True)
        s_values = _per_N_values(opt, Ns, "s")
        params = [MoranParams(N, gamma, sv) for N, sv in zip(Ns, s_values)]
        ou = OUParams(theta=1.0, sigma2=2.0)
    else:
        pi = _offspring(opt)
        h, h_bound = _h_spec(opt)
        rho_values = _per_N_values(opt, Ns, "rho")
        c_values = _per_N_values(opt, Ns, "c")
        d = opt.number("d", 0.0, nonneg=True)
        params = [
            LogisticParams(rho=rv, h=h, h_bound=h_bound, d=d, c=cv, pi=pi)
            for rv, cv in zip(rho_values, c_values)
        ]
        ou = OUParams(theta=pi.pi_bar, sigma2=pi.v2 + pi.pi_bar)
    max_final = _optional_number(opt, "max_final_gap")
    require_dec = opt.flag("require_decreasing", False)
    opt.reject_unknown()

    rows: list[tuple] = []
    violated = False
    for f in functions:
        gaps = [sup_generator_gap(f, grid, pv, ou) for pv in params]
        rows.extend((N, f.name, g) for N, g in zip(Ns, gaps))
        if require_dec and any(b >= a for a, b in zip(gaps, gaps[1:])):
            violated = True
        if max_final is not None and gaps[-1] > float(max_final):
            violated = True
    code = EXIT_TOLERANCE if violated else EXIT_OK
    return ResultTable(("N", "function", "gap"), rows, _metadata(cfg)), code


def _run_duality(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    gamma = opt.number("gamma", positive=True)
    s = opt.number("s", positive=True)
    replicates = opt.integer("replicates", minimum=1)
    Ns = _int_or_list(opt, "N")
    ks = _int_or_list(opt, "k")
    ns = _int_or_list(opt, "n")
    ts = _float_or_list(opt, "t")
    opt.reject_unknown()

    rows: list[tuple] = []
    failed = False
    for i, N in enumerate(Ns):
        p = MoranParams(N, gamma, s)
        valid_k = [k for k in ks if 1 <= k <= N]
        valid_n = [n for n in ns if 1 <= n <= N]
        if not valid_k or not valid_n:
            raise ConfigError("k", f"no valid k/n for N={N}")
        cells = duality_cells(p, valid_k, valid_n, ts, replicates, RngStream(cfg.seed, i))
        for (k, n, t), est in sorted(cells.items()):
            rows.append(
                (N, k, n, t, est.lhs_mean, est.lhs_se, est.rhs_mean, est.rhs_se,
                 est.gap, est.tolerance, est.consistent)
            )
            failed |= not est.consistent
    header = ("N", "k", "n", "t", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se",
              "abs_diff", "tolerance", "consistent")
    return ResultTable(header, rows, _metadata(cfg)), EXIT_TOLERANCE if failed else EXIT_OK


def _run_drift_scan(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    opt = _Options(cfg.command, cfg.options)
    gamma = opt.number("gamma", positive=True)
    Ns = _int_or_list(opt, "N")
    s_values = _per_N_values(opt, Ns, "s")
    emit = opt.text("emit", "summary", choices={"summary", "full"})
    opt.reject_unknown()

    rows: list[tuple] = []
    if emit == "full":
        for N, sv in zip(Ns, s_values):
            p = MoranParams(N, gamma, sv)
            for k in range(1, N + 1):
                rows.append((N, k, drift_embedded_B(k, p)))
        return ResultTable(("N", "k", "drift"), rows, _metadata(cfg)), EXIT_OK

    for N, sv in zip(Ns, s_values):
        p = MoranParams(N, gamma, sv)
        mu, sigma = mu_sigma_B(p)
        changes, first_neg = drift_sign_change_B(p)
        hi = int(np.ceil(mu + sigma))
        lo = int(np.floor(mu - sigma))
        neg_above = all(drift_embedded_B(k, p) < 0 for k in range(max(hi, 1), N + 1))
        pos_below = all(drift_embedded_B(k, p) > 0 for k in range(1, min(lo, N) + 1))
        rows.append((N, mu, sigma, first_neg, changes, neg_above, pos_below))
    header = ("N", "mu", "sigma", "first_negative_k", "sign_changes",
              "negative_at_mu_plus_sigma", "positive_at_mu_minus_sigma")
    return ResultTable(header, rows, _metadata(cfg)), EXIT_OK


def fluct_test(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    """Fluctuation-limit test: simulate rescaled replicates, compare the
    marginal law at a fixed time against the limiting stationary normal (KS
    distance) and the autocovariances against the limit prediction.

    Modes: 'b' (line counting chain, stationary start), 'x' (logistic chain,
    started at round(mu) with a burn-in), 'ou' (the limit process itself, a
    null calibration of the pipeline).
    """
    opt = _Options(cfg.command, cfg.options)
    mode = opt.text("mode", choices={"b", "x", "ou"})
    replicates = opt.integer("replicates", minimum=1000)
    marginal_time = opt.number("marginal_time", 1.0, positive=True)
    lags = [float(v) for v in opt.listing("lags", [0.5, 1.0])]
    if any(lag <= 0 for lag in lags):
        raise ConfigError("lags", "lags must be positive")
    ks_tol = _optional_number(opt, "ks_tol")
    autocov_tol = _optional_number(opt, "autocov_tol")
    gen = RngStream(cfg.seed).generator()

    # rescaled observation times: the marginal time plus each lagged time
    obs_rescaled = sorted({marginal_time} | {marginal_time + lag for lag in lags})
    needed = max(obs_rescaled)

    if mode == "b":
        N = opt.integer("N", minimum=2)
        gamma = opt.number("gamma", positive=True)
        s = _per_N_values(opt, [N], "s")[0]
        horizon = opt.number("horizon", needed, positive=True)
        opt.reject_unknown()
        if horizon < needed:
            raise ConfigError("horizon", "shorter than the requested observation times")
        p = MoranParams(N, gamma, s)
        mu, sigma = mu_sigma_B(p)
        init = sample_stationary_B(p, replicates, gen)
        obs_original = np.asarray(obs_rescaled) / s
        marg = simulate_marginals(moves_B(p), init, obs_original, gen)
        values = (marg.astype(np.float64) - mu) / sigma
        ou = OUParams(theta=1.0, sigma2=2.0)
    elif mode == "x":
        opt_p = _logistic_params(opt)
        burn_in = opt.number("burn_in", 5.0, nonneg=True)
        horizon = opt.number("horizon", burn_in + needed, positive=True)
        opt.reject_unknown()
        if horizon < burn_in + needed:
            raise ConfigError("horizon", "shorter than the requested observation times")
        mu, sigma = mu_sigma_X(opt_p)
        init = np.full(replicates, int(round(mu)), dtype=np.int64)
        obs_original = (burn_in + np.asarray(obs_rescaled)) / opt_p.rho
        marg = simulate_marginals(moves_X(opt_p), init, obs_original, gen)
        values = (marg.astype(np.float64) - mu) / sigma
        ou = OUParams(theta=opt_p.pi.pi_bar, sigma2=opt_p.pi.v2 + opt_p.pi.pi_bar)
    else:
        theta = opt.number("theta", positive=True)
        sigma2 = opt.number("sigma2", positive=True)
        opt.reject_unknown()
        ou = OUParams(theta=theta, sigma2=sigma2)
        values = ou_sample_at(np.asarray(obs_rescaled), ou, replicates, gen)

    _, var_limit = ou_stationary(ou)
    sd_limit = float(np.sqrt(var_limit))
    idx = {t: i for i, t in enumerate(obs_rescaled)}
    base = values[idx[marginal_time]]

    rows: list[tuple] = [
        ("marginal_mean", float(base.mean()), 0.0, abs(float(base.mean()))),
        ("marginal_var", float(base.var(ddof=1)), var_limit,
         abs(float(base.var(ddof=1)) - var_limit)),
    ]
    ks = ks_statistic(base, lambda v: ndtr(v / sd_limit))
    rows.append(("ks_marginal", ks, 0.0, ks))
    violated = ks_tol is not None and ks > float(ks_tol)
    for lag in lags:
        ac = paired_covariance(base, values[idx[marginal_time + lag]])
        ref = ou_autocov(ou, lag)
        rows.append((f"autocov_lag_{lag:g}", ac, ref, abs(ac - ref)))
        if autocov_tol is not None and abs(ac - ref) > float(autocov_tol):
            violated = True
    header = ("metric", "value", "reference", "abs_error")
    code = EXIT_TOLERANCE if violated else EXIT_OK
    return ResultTable(header, rows, _metadata(cfg)), code


_RUNNERS: dict[str, Callable[[ExperimentConfig], tuple[ResultTable, int]]] = {
    "simulate-b": _run_simulate_b,
    "simulate-x": _run_simulate_x,
    "simulate-ou": _run_simulate_ou,
    "simulate-asg": _run_simulate_asg,
    "stationary": _run_stationary,
    "gen-gap": _run_gen_gap,
    "duality": _run_duality,
    "drift-scan": _run_drift_scan,
    "fluct-test": fluct_test,
}


def _metadata(cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "command": cfg.command,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "tool_version": __version__,
    }


def load_config(
    path: str | Path,
    command: str | None = None,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> ExperimentConfig:
    """Read and validate a JSON experiment config.  CLI-provided command,
    seed and output path take precedence over the document."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")

    doc_command = doc.pop("command", None)
    if command is None:
        command = doc_command
    elif doc_command is not None and doc_command != command:
        raise ConfigError("command", f"config says {doc_command!r}, CLI says {command!r}")
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {COMMANDS}")

    seed = doc.pop("seed", None) if seed_override is None else seed_override
    if seed is None:
        raise ConfigError("seed", "required (no wall-clock default)")
    if seed_override is not None:
        doc.pop("seed", None)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    out = doc.pop("out", None) if out_override is None else out_override
    if out_override is not None:
        doc.pop("out", None)
    if not isinstance(out, str) or not out:
        raise ConfigError("out", "required output path")

    return ExperimentConfig(command=command, seed=seed, out=out, options=doc)


def run(cfg: ExperimentConfig) -> tuple[ResultTable, int]:
    """Dispatch a validated config, write the CSV and sidecar, and return the
    table with the exit code."""
    table, code = _RUNNERS[cfg.command](cfg)
    table.write(cfg.out)
    return table, code


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asg-lab",
        description="Simulation and limit-verification experiments for "
                    "ancestry line counting and logistic branching chains.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", help="output CSV path (overrides the config)")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.command, args.seed, args.out)
        _, code = run(cfg)
    except ConfigError as exc:
        print(f"asg-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"asg-lab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_TOLERANCE:
        print("asg-lab: declared tolerance violated (see output table)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
