"""Command-line harness.

Subcommands:

* ``test``              run the aggregated test on two data files
* ``bench``             power study over a synthetic model
* ``null-calibration``  level study with both samples from the null side
* ``bm-rate``           Brownian-motion divergence-rate table
* ``generate``          dump synthetic samples to a file

Every config key can live in a flat ``key = value`` config file (``--config``)
and is overridden by the flag of the same name.  Exit codes: 0 completed,
2 input error, 3 config error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .brownian import BMConfig, bm_hs_sq, bm_rate_approx, fit_rate_slope
from .calibration import DEFAULT_RIDGES, TestConfig, run_test
from .datafiles import load_matrix, save_matrix
from .errors import ConfigError, InputError, NumericalError
from .kernels import BANDWIDTH_MULTIPLIERS
from .synthetic import ModelSpec, paper_scenario, sample

THREADS_ENV_VAR = "KLRTEST_THREADS"


@dataclass
class ExperimentConfig:
    """Resolved options for one CLI invocation (defaults follow the benchmark protocol)."""

    stats: tuple[str, ...] = ("KLR",)
    kernel: str = "auto"
    ridges: tuple[float, ...] = DEFAULT_RIDGES
    bandwidth_multipliers: tuple[float, ...] = BANDWIDTH_MULTIPLIERS
    permutations: int = 300
    alpha: float = 0.05
    replications: int = 250
    seed: int = 0
    threads: int = 1
    model: int = 1
    side: str = "q"
    n: int = 100
    m: int = 0            # 0 means "same as n"
    dimensions: tuple[int, ...] = (50,)
    delta: float | None = None
    p: int | None = None
    lam: float | None = None
    model_alpha: float | None = None
    eps: float | None = None
    v1: float = 1.0
    v2: float = 2.0
    gammas: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    terms: int = 10_000_000
    out: str = ""
    table: str = ""

    def validate(self) -> None:
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if any(r <= 0 for r in self.ridges):
            raise ConfigError("all ridge values must be positive")
        if any(c <= 0 for c in self.bandwidth_multipliers):
            raise ConfigError("all bandwidth multipliers must be positive")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.n < 1 or self.m < 0:
            raise ConfigError("sample sizes must be positive")
        if self.kernel not in ("auto", "gaussian", "laplacian"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")


_TUPLE_FLOAT_KEYS = {"ridges", "bandwidth_multipliers", "gammas"}
_TUPLE_INT_KEYS = {"dimensions"}
_TUPLE_STR_KEYS = {"stats"}
_INT_KEYS = {"permutations", "replications", "seed", "threads", "model", "n", "m", "p", "terms"}
_FLOAT_KEYS = {"alpha", "delta", "lam", "model_alpha", "eps", "v1", "v2"}
_STR_KEYS = {"kernel", "side", "out", "table"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _TUPLE_FLOAT_KEYS:
            return tuple(float(t) for t in raw.split(",") if t.strip())
        if key in _TUPLE_INT_KEYS:
            return tuple(int(t) for t in raw.split(",") if t.strip())
        if key in _TUPLE_STR_KEYS:
            return tuple(t.strip() for t in raw.split(",") if t.strip())
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` config file ('#' starts a comment)."""
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = _parse_value(key, raw)
    return values


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then config file, then explicit command-line flags."""
    cfg = ExperimentConfig()
    if os.environ.get(THREADS_ENV_VAR):
        cfg.threads = _parse_value("threads", os.environ[THREADS_ENV_VAR])
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    known = {f.name for f in fields(ExperimentConfig)}
    for key, value in file_values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    for key in known:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            setattr(cfg, key, _parse_value(key, flag_value) if isinstance(flag_value, str) and key not in _STR_KEYS else flag_value)
    cfg.validate()
    return cfg


def _model_spec(cfg: ExperimentConfig, side: str, d: int) -> tuple[ModelSpec, str]:
    """Scenario spec for one side, with caption parameters overridable from the config."""
    spec_p, spec_q, _, _, kernel = paper_scenario(cfg.model, d=d, eps=cfg.eps)
    base = spec_p if side == "p" else spec_q
    overrides = {}
    if cfg.delta is not None:
        overrides["delta"] = cfg.delta
    if cfg.p is not None:
        overrides["p"] = cfg.p
    if cfg.lam is not None:
        overrides["lam"] = cfg.lam
    if cfg.model_alpha is not None:
        overrides["alpha"] = cfg.model_alpha
    if overrides:
        base = ModelSpec(model=base.model, side=base.side, d=base.d,
                         delta=overrides.get("delta", base.delta),
                         p=overrides.get("p", base.p),
                         lam=overrides.get("lam", base.lam),
                         alpha=overrides.get("alpha", base.alpha),
                         eps=base.eps)
    return base, kernel


def _test_config(cfg: ExperimentConfig, kernel: str, seed: int, threads: int) -> TestConfig:
    return TestConfig(stats=tuple(cfg.stats), kernel_family=kernel,
                      ridges=tuple(cfg.ridges),
                      bandwidth_multipliers=tuple(cfg.bandwidth_multipliers),
                      permutations=cfg.permutations, alpha=cfg.alpha,
                      seed=seed, threads=threads)


def _derive_seed(*parts: int) -> int:
    mask = (1 << 64) - 1
    entropy = tuple(int(p) & mask for p in parts)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _write_text(path: str, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_table(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_test(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    x = load_matrix(args.file_x)
    y = load_matrix(args.file_y)
    if x.shape[1] != y.shape[1]:
        raise InputError(f"column counts differ: {args.file_x} has {x.shape[1]}, "
                         f"{args.file_y} has {y.shape[1]}")
    kernel = cfg.kernel if cfg.kernel != "auto" else "gaussian"
    t0 = time.perf_counter()
    report = run_test(x, y, _test_config(cfg, kernel, cfg.seed, cfg.threads))
    elapsed = time.perf_counter() - t0
    _write_text(cfg.out, report.to_json())
    if cfg.table:
        rows = [[kind, c.bandwidth, "" if c.ridge is None else c.ridge,
                 c.observed, c.quantile, c.p_value]
                for kind, rep in report.per_statistic.items() for c in rep.cells]
        _write_table(cfg.table, ["statistic", "bandwidth", "ridge", "observed",
                                 "quantile", "p_value"], rows)
    decisions = ", ".join(f"{k}: {'reject' if r.reject else 'accept'}"
                          for k, r in report.per_statistic.items())
    print(f"completed in {elapsed:.2f}s | {decisions}", file=sys.stderr)
    return 0


def _study_rep(payload) -> dict[str, bool]:
    """One replication of a power/level study (runs in a worker process)."""
    (cfg, d, rep, null_vs_null) = payload
    spec_p, kernel_p = _model_spec(cfg, "p", d)
    spec_q, _ = _model_spec(cfg, "p" if null_vs_null else "q", d)
    kernel = cfg.kernel if cfg.kernel != "auto" else kernel_p
    m = cfg.m or cfg.n
    x = sample(spec_p, cfg.n, _derive_seed(cfg.seed, cfg.model, d, rep, 0))
    y = sample(spec_q, m, _derive_seed(cfg.seed, cfg.model, d, rep, 1))
    test_seed = _derive_seed(cfg.seed, cfg.model, d, rep, 2)
    report = run_test(x, y, _test_config(cfg, kernel, test_seed, threads=1))
    return {kind: rep_.reject for kind, rep_ in report.per_statistic.items()}


def _run_study(cfg: ExperimentConfig, null_vs_null: bool) -> list[dict]:
    rows = []
    for d in cfg.dimensions:
        payloads = [(cfg, d, rep, null_vs_null) for rep in range(cfg.replications)]
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                decisions = list(pool.map(_study_rep, payloads, chunksize=1))
        else:
            decisions = [_study_rep(p) for p in payloads]
        for kind in cfg.stats:
            rejections = sum(dec[kind] for dec in decisions)
            rate = rejections / cfg.replications
            rows.append({
                "model": cfg.model, "dimension": d, "statistic": kind,
                "n": cfg.n, "m": cfg.m or cfg.n,
                "replications": cfg.replications, "rejections": rejections,
                "rate": rate,
                "std_error": float(np.sqrt(rate * (1.0 - rate) / cfg.replications)),
            })
    return rows


def _emit_study(cfg: ExperimentConfig, rows: list[dict], label: str, elapsed: float) -> None:
    payload = {
        "study": label,
        "config": {
            "model": cfg.model, "dimensions": list(cfg.dimensions),
            "n": cfg.n, "m": cfg.m or cfg.n, "stats": list(cfg.stats),
            "kernel": cfg.kernel, "alpha": cfg.alpha,
            "permutations": cfg.permutations, "replications": cfg.replications,
            "ridges": list(cfg.ridges),
            "bandwidth_multipliers": list(cfg.bandwidth_multipliers),
            "seed": cfg.seed,
        },
        "rows": rows,
    }
    _write_text(cfg.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if cfg.table:
        header = list(rows[0].keys())
        _write_table(cfg.table, header, [[r[k] for k in header] for r in rows])
    for r in rows:
        print(f"model {r['model']} d={r['dimension']} {r['statistic']}: "
              f"rate={r['rate']:.3f} (se={r['std_error']:.3f})", file=sys.stderr)
    print(f"completed in {elapsed:.2f}s", file=sys.stderr)


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    t0 = time.perf_counter()
    rows = _run_study(cfg, null_vs_null=False)
    _emit_study(cfg, rows, "power", time.perf_counter() - t0)
    return 0


def cmd_null_calibration(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    t0 = time.perf_counter()
    rows = _run_study(cfg, null_vs_null=True)
    _emit_study(cfg, rows, "level", time.perf_counter() - t0)
    return 0


def cmd_bm_rate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if cfg.v1 == cfg.v2:
        rows = [{"gamma": g, "series": 0.0, "approximation": 0.0, "ratio": 1.0}
                for g in cfg.gammas]
        slope = 0.0
    else:
        rows = []
        for g in cfg.gammas:
            series = bm_hs_sq(BMConfig(v1=cfg.v1, v2=cfg.v2, gamma=g, n_terms=cfg.terms))
            approx = bm_rate_approx(cfg.v1, cfg.v2, g)
            rows.append({"gamma": g, "series": series, "approximation": approx,
                         "ratio": series / approx})
        slope = fit_rate_slope(cfg.v1, cfg.v2, cfg.gammas)
    payload = {"v1": cfg.v1, "v2": cfg.v2, "n_terms": cfg.terms,
               "rows": rows, "fitted_slope": slope}
    _write_text(cfg.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if cfg.table:
        header = ["gamma", "series", "approximation", "ratio"]
        _write_table(cfg.table, header + ["fitted_slope"],
                     [[r[k] for k in header] + [slope] for r in rows])
    for r in rows:
        print(f"gamma={r['gamma']:.3g} series={r['series']:.6g} "
              f"approx={r['approximation']:.6g} ratio={r['ratio']:.4f}", file=sys.stderr)
    print(f"fitted log-log slope: {slope:.4f}", file=sys.stderr)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    d = cfg.dimensions[0]
    spec, _ = _model_spec(cfg, cfg.side, d)
    rows = sample(spec, cfg.n, cfg.seed)
    if not cfg.out:
        raise ConfigError("generate requires --out")
    save_matrix(cfg.out, rows)
    print(f"wrote {rows.shape[0]} x {rows.shape[1]} sample to {cfg.out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--threads", type=int, help=f"worker count (default ${THREADS_ENV_VAR} or 1)")
    parser.add_argument("--alpha", type=float, help="significance level")
    parser.add_argument("--permutations", type=int, help="permutation count B")
    parser.add_argument("--stats", help="comma list from KLR,KLR0,HSR,MMD,SRMMD")
    parser.add_argument("--ridges", help="comma list of ridge values")
    parser.add_argument("--bandwidth-multipliers", dest="bandwidth_multipliers",
                        help="comma list of median-bandwidth multipliers")
    parser.add_argument("--kernel", choices=["auto", "gaussian", "laplacian"])
    parser.add_argument("--out", help="report output path (default: stdout)")
    parser.add_argument("--table", help="optional flat CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="klrtest",
                                     description="Kernel likelihood-ratio two-sample testing")
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test two data files for equal distribution")
    p_test.add_argument("file_x")
    p_test.add_argument("file_y")
    _add_common(p_test)
    p_test.set_defaults(func=cmd_test)

    for name, func, help_text in (
        ("bench", cmd_bench, "power study over a synthetic model"),
        ("null-calibration", cmd_null_calibration, "level study under the null"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--model", type=int, help="model id 1..8")
        p.add_argument("--replications", type=int, help="Monte Carlo replications R")
        p.add_argument("--n", type=int, help="first-sample size")
        p.add_argument("--m", type=int, help="second-sample size (default n)")
        p.add_argument("--dimensions", help="comma list of dimensions")
        p.add_argument("--delta", type=float, help="mean-shift size (models 1-3)")
        p.add_argument("--p", type=int, help="perturbed-coordinate count")
        p.add_argument("--lam", type=float, help="variance scale (model 4)")
        p.add_argument("--model-alpha", dest="model_alpha", type=float,
                       help="correlation level (models 5-6)")
        p.add_argument("--eps", type=float, help="perturbation size (models 5-8)")
        p.set_defaults(func=func)

    p_bm = sub.add_parser("bm-rate", help="Brownian-motion divergence-rate table")
    _add_common(p_bm)
    p_bm.add_argument("--v1", type=float, help="first variance scale")
    p_bm.add_argument("--v2", type=float, help="second variance scale")
    p_bm.add_argument("--gammas", help="comma list of ridge values")
    p_bm.add_argument("--terms", type=int, help="series truncation length")
    p_bm.set_defaults(func=cmd_bm_rate)

    p_gen = sub.add_parser("generate", help="dump synthetic samples to a file")
    _add_common(p_gen)
    p_gen.add_argument("--model", type=int, help="model id 1..8")
    p_gen.add_argument("--side", choices=["p", "q"], help="which side to sample")
    p_gen.add_argument("--n", type=int, help="sample size")
    p_gen.add_argument("--dimensions", help="dimension (single value)")
    p_gen.add_argument("--delta", type=float)
    p_gen.add_argument("--p", type=int)
    p_gen.add_argument("--lam", type=float)
    p_gen.add_argument("--model-alpha", dest="model_alpha", type=float)
    p_gen.add_argument("--eps", type=float)
    p_gen.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
