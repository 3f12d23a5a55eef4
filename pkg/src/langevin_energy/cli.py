"""Command-line front end (``langevin-energy``).

Subcommands: ``simulate``, ``mfpt``, ``spurious``, ``specfun`` and ``validate``.

Settings come from four layers, later ones winning: built-in defaults, the
``LANGEVIN_SEED`` environment variable (seed only), a flat ``key = value``
config file given with ``--config`` (or ``--spec`` for ``spurious``), and
command-line flags.

Exit codes: 0 success, 1 runtime or criterion failure, 2 usage or validation
error.  Every command is a deterministic function of its inputs; the thread
count only changes speed, never output.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, acceptance, specfun
from .estimators import _Accumulator, auto_block_size, empirical_mfpt, run_ensemble
from .exact import InitialCondition, mean_energy_closed_form
from .mfpt import mfpt_energy, mfpt_velocity
from .model import DomainError, LangevinParams, RangeError, TimeGrid, noise_block
from .spurious import SpuriousSpec, spurious_paths

SEED_ENV = "LANGEVIN_SEED"
FORMATS = ("csv", "json")
SIM_SCHEMES = ("exact", "ito-em", "strat-heun")


class UsageError(Exception):
    """Bad flags, config keys or values; maps to exit code 2."""


# ---------------------------------------------------------------- config layer


def _positive(text):
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise ValueError("must be a finite positive number")
    return value


def _finite(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _nonnegative(text):
    value = _finite(text)
    if value < 0:
        raise ValueError("must be nonnegative")
    return value


def _count(text):
    number = float(text)
    if not number.is_integer():
        raise ValueError("must be a positive integer")
    value = int(number)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError("must be an integer in [0, 2^64)")
    return value


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return conv


def _lambdas(text):
    text = text.strip()
    if not text:
        return ()
    values = tuple(float(part) for part in text.split(","))
    if any(not (math.isfinite(w) and w >= 0) for w in values):
        raise ValueError("every entry must be finite and nonnegative")
    return values


RUN_KEYS = {
    "m": _positive,
    "gamma": _positive,
    "sigma": _positive,
    "scheme": _choice(SIM_SCHEMES),
    "dt": _positive,
    "horizon": _positive,
    "paths": _count,
    "seed": _seed,
    "v0": _finite,
    "k0": _nonnegative,
    "v0_mean": _finite,
    "v0_std": _nonnegative,
    "output": str,
    "format": _choice(FORMATS),
    "threads": _count,
}
SPURIOUS_KEYS = {
    **{k: v for k, v in RUN_KEYS.items() if k != "scheme"},
    "mode": _choice(("restart", "truncate")),
    "lambdas": _lambdas,
    "eps_hit": _positive,
    "initial_wait": _nonnegative,
    "gap": _positive,
    "segments": str,
}
INITIAL_KEYS = ("v0", "k0", "v0_mean", "v0_std")
RUN_DEFAULTS = {
    "m": 1.0,
    "gamma": 1.0,
    "sigma": 1.0,
    "scheme": "exact",
    "dt": 1e-3,
    "horizon": 1.0,
    "paths": 1000,
    "seed": 0,
    "format": "csv",
    "threads": 1,
}


def read_config(path: str, allowed: dict) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    raw = {}
    for number, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in allowed:
            raise UsageError(f"{path}:{number}: unknown key '{key}'")
        raw[key] = value
    return raw


def _convert(raw: dict, allowed: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if value is None:
            continue
        if not isinstance(value, str):
            value = str(value)
        try:
            out[key] = allowed[key](value)
        except ValueError as exc:
            raise UsageError(f"invalid value for '{key}': {value!r} ({exc})") from exc
    return out


def merge_settings(args: argparse.Namespace, allowed: dict, config_path: str | None) -> dict:
    """Defaults < environment seed < config file < flags."""
    settings = {k: v for k, v in RUN_DEFAULTS.items() if k in allowed}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        settings.update(_convert({"seed": env_seed}, allowed))
    if config_path:
        settings.update(_convert(read_config(config_path, allowed), allowed))
    flags = _convert({k: getattr(args, k) for k in allowed if getattr(args, k, None) is not None}, allowed)
    if any(k in flags for k in INITIAL_KEYS):
        # an initial condition given on the command line replaces the file's one as a whole
        for k in INITIAL_KEYS:
            settings.pop(k, None)
    settings.update(flags)
    return settings


@dataclass(frozen=True)
class RunConfig:
    params: LangevinParams
    scheme: str
    grid: TimeGrid
    n_paths: int
    seed: int
    initial: InitialCondition
    output: str | None
    fmt: str
    threads: int

    @classmethod
    def from_settings(cls, s: dict) -> "RunConfig":
        try:
            params = LangevinParams(s["m"], s["gamma"], s["sigma"])
            grid = TimeGrid.from_horizon(s["dt"], s["horizon"])
            initial = _initial_condition(s, params)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
        return cls(
            params, s.get("scheme", "exact"), grid, s["paths"], s["seed"], initial, s.get("output"), s["format"],
            s["threads"],
        )


def _initial_condition(s: dict, params: LangevinParams) -> InitialCondition:
    given = [k for k in ("v0", "k0", "v0_mean") if k in s]
    if len(given) > 1:
        raise UsageError(f"give only one of v0, k0, v0_mean (got {', '.join(given)})")
    if "v0_std" in s and "v0_mean" not in s:
        raise UsageError("v0_std needs v0_mean")
    if "k0" in s:
        return InitialCondition.from_energy(s["k0"], params.m)
    if "v0_mean" in s:
        return InitialCondition.gaussian(s["v0_mean"], s.get("v0_std", 0.0))
    return InitialCondition.deterministic(s.get("v0", 0.0))


# ---------------------------------------------------------------- output helpers


def _g(x) -> str:
    return "" if x is None else "%.17g" % x


def _csv(header, columns) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(_g(x) for x in row) + "\n")
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    """Single writer: the whole document is written at once."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _params_dict(p: LangevinParams) -> dict:
    return {"m": p.m, "gamma": p.gamma, "sigma": p.sigma}


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_settings(merge_settings(args, RUN_KEYS, args.config))
    stats = run_ensemble(cfg.scheme, cfg.params, cfg.initial, cfg.grid, cfg.n_paths, cfg.seed, threads=cfg.threads)
    times = cfg.grid.times
    closed = None
    if cfg.scheme != "strat-heun":
        closed = mean_energy_closed_form(times, cfg.params, cfg.initial.ev0_sq)
    if cfg.fmt == "csv":
        closed_col = closed if closed is not None else [None] * times.size
        text = _csv(
            ("time", "mean", "variance", "se", "closed_form"),
            (times, stats.mean, stats.variance, stats.standard_error, closed_col),
        )
    else:
        doc = {
            "metadata": {
                "version": __version__,
                "scheme": cfg.scheme,
                "seed": cfg.seed,
                "params": _params_dict(cfg.params),
                "dt": cfg.grid.dt,
                "n_steps": cfg.grid.n_steps,
                "n_paths": cfg.n_paths,
                "initial_condition": {
                    "kind": cfg.initial.kind,
                    "v0": cfg.initial.v0,
                    "v0_mean": cfg.initial.v0_mean,
                    "v0_std": cfg.initial.v0_std,
                },
            },
            "time": times.tolist(),
            "mean": stats.mean.tolist(),
            "variance": stats.variance.tolist(),
            "se": stats.standard_error.tolist(),
            "closed_form": None if closed is None else np.asarray(closed).tolist(),
        }
        text = json.dumps(doc) + "\n"
    _emit(text, cfg.output)
    return 0


def cmd_mfpt(args) -> int:
    s = merge_settings(args, {k: RUN_KEYS[k] for k in ("m", "gamma", "sigma", "seed", "paths")}, args.config)
    try:
        params = LangevinParams(s["m"], s["gamma"], s["sigma"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    if args.k is not None:
        if not (math.isfinite(args.k) and args.k >= 0):
            raise UsageError(f"invalid value for 'k': {args.k!r} (must be finite and nonnegative)")
        v = math.sqrt(2 * args.k / params.m)
        out = {"input": {"k": args.k}}
        formula = lambda: mfpt_energy(args.k, params)  # noqa: E731
    else:
        if not math.isfinite(args.v):
            raise UsageError(f"invalid value for 'v': {args.v!r} (must be finite)")
        v = args.v
        out = {"input": {"v": args.v}}
        formula = lambda: mfpt_velocity(args.v, params)  # noqa: E731
    out["input"]["params"] = _params_dict(params)
    if args.mode in ("formula", "both"):
        out["formula_value"] = formula()
    if args.mode in ("monte-carlo", "both"):
        dt = 1e-3 if args.dt is None else args.dt
        if not dt > 0 or (args.eps is not None and not args.eps > 0) or (args.t_max is not None and not args.t_max > 0):
            raise UsageError("dt, eps and t-max must be positive")
        est = empirical_mfpt(v, params, dt, s["paths"], eps=args.eps, t_max=args.t_max, seed=s["seed"])
        out.update(mc_mean=est.mean, mc_se=est.standard_error, censored=est.censored, n_paths=est.n_paths, dt=dt)
        if args.mode == "both":
            diff = est.mean - out["formula_value"]
            out["discrepancy_se"] = diff / est.standard_error if est.standard_error > 0 else (0.0 if diff == 0 else math.inf)
    sys.stdout.write(json.dumps(out) + "\n")
    return 0


def _spurious_block(ids, seed, grid, params, initial, spec):
    dW, z0 = noise_block(seed, ids, grid)
    return spurious_paths(initial.sample(z0), dW, grid.dt, params, spec)


def cmd_spurious(args) -> int:
    s = merge_settings(args, SPURIOUS_KEYS, args.spec)
    cfg = RunConfig.from_settings(s)
    try:
        spec = SpuriousSpec(
            mode=s.get("mode", "truncate"),
            waits=s.get("lambdas", ()),
            initial_wait=s.get("initial_wait", 0.0),
            eps_hit=s.get("eps_hit", SpuriousSpec.default_eps(cfg.params)),
            gap=s.get("gap"),
        )
    except DomainError as exc:
        raise UsageError(str(exc)) from exc

    size = auto_block_size(cfg.grid)
    blocks = [range(a, min(a + size, cfg.n_paths)) for a in range(0, cfg.n_paths, size)]
    acc = _Accumulator()
    segments = io.StringIO()
    segments.write("path_id,n,hit_time,restart_time\n")

    def work(ids):
        return _spurious_block(ids, cfg.seed, cfg.grid, cfg.params, cfg.initial, spec)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for ids, (values, times) in zip(blocks, pool.map(work, blocks)):
            acc.add(values)
            for pid, st in zip(ids, times):
                hit_t, restart_t = st.hit_times, st.restart_times
                for n, t in enumerate(hit_t, 1):
                    r = restart_t[n - 1] if n - 1 < restart_t.size else None
                    segments.write(f"{pid},{n},{_g(t)},{_g(r)}\n")
    stats = acc.stats(cfg.grid)
    _emit(
        _csv(("time", "mean", "variance", "se"), (cfg.grid.times, stats.mean, stats.variance, stats.standard_error)),
        cfg.output,
    )
    seg_path = s.get("segments")
    if seg_path is None and cfg.output not in (None, "-"):
        seg_path = cfg.output + ".segments.csv"
    if seg_path is not None:
        _emit(segments.getvalue(), seg_path)
    return 0


SPECIAL_FUNCTIONS = {
    "dawson-plus": specfun.dawson_plus,
    "dawson-minus": specfun.dawson_minus,
    "int-dawson-minus": specfun.integral_dawson_minus,
    "normal-cdf": specfun.normal_cdf,
    "hyp2f2": specfun.hyp2f2,
}


def cmd_specfun(args) -> int:
    fn = SPECIAL_FUNCTIONS[args.function]
    lines = ["x,value"]
    for x in args.x:
        try:
            lines.append(f"{_g(x)},{_g(float(fn(x)))}")
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, acceptance.DEFAULT_SEED))

    def report(line):
        print(line, flush=True)

    results = acceptance.run_suite("full" if args.full else "quick", seed, report=report)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


# ---------------------------------------------------------------- parser


def _run_flags(p: argparse.ArgumentParser, scheme: bool = True) -> None:
    p.add_argument("--m", type=str, help="particle mass")
    p.add_argument("--gamma", type=str, help="friction coefficient")
    p.add_argument("--sigma", type=str, help="noise amplitude")
    if scheme:
        p.add_argument("--scheme", type=str, help=f"one of {', '.join(SIM_SCHEMES)}")
    p.add_argument("--dt", type=str, help="time step")
    p.add_argument("--horizon", type=str, help="final time")
    p.add_argument("--paths", type=str, help="number of paths")
    p.add_argument("--seed", type=str, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--v0", type=str, help="deterministic initial velocity")
    p.add_argument("--k0", type=str, help="initial energy (velocity taken positive)")
    p.add_argument("--v0-mean", dest="v0_mean", type=str, help="Gaussian initial velocity mean")
    p.add_argument("--v0-std", dest="v0_std", type=str, help="Gaussian initial velocity std")
    p.add_argument("--threads", type=str, help="worker threads (output does not depend on it)")
    p.add_argument("--output", "-o", type=str, help="output file (default stdout)")
    p.add_argument("--format", type=str, help="csv or json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="langevin-energy", description="Kinetic energy of a Langevin particle.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="ensemble statistics of the kinetic energy")
    _run_flags(p)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mfpt", help="mean first passage time to zero energy")
    start = p.add_mutually_exclusive_group(required=True)
    start.add_argument("--v", type=float, help="initial velocity")
    start.add_argument("--k", type=float, help="initial kinetic energy")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--formula", dest="mode", action="store_const", const="formula")
    mode.add_argument("--monte-carlo", dest="mode", action="store_const", const="monte-carlo")
    mode.add_argument("--both", dest="mode", action="store_const", const="both")
    p.set_defaults(mode="formula")
    p.add_argument("--m", type=str)
    p.add_argument("--gamma", type=str)
    p.add_argument("--sigma", type=str)
    p.add_argument("--dt", type=float, help="Monte Carlo time step (default 1e-3)")
    p.add_argument("--paths", type=str, help="Monte Carlo paths")
    p.add_argument("--eps", type=float, help="energy hit threshold (default: discrete-monitoring correction)")
    p.add_argument("--t-max", dest="t_max", type=float, help="censoring time (default 50 m/gamma)")
    p.add_argument("--seed", type=str)
    p.add_argument("--config", help="flat key = value file for m, gamma, sigma, seed, paths")
    p.set_defaults(func=cmd_mfpt)

    p = sub.add_parser("spurious", help="ensemble of constructed spurious Stratonovich solutions")
    p.add_argument("--spec", required=True, help="key = value file: mode, lambdas, eps_hit, ... and run keys")
    _run_flags(p, scheme=False)
    p.add_argument("--mode", type=str, help="restart or truncate")
    p.add_argument("--lambdas", type=str, help="comma-separated waiting times")
    p.add_argument("--eps-hit", dest="eps_hit", type=str)
    p.add_argument("--initial-wait", dest="initial_wait", type=str)
    p.add_argument("--gap", type=str)
    p.add_argument("--segments", type=str, help="segment log file (default OUTPUT.segments.csv)")
    p.set_defaults(func=cmd_spurious)

    p = sub.add_parser("specfun", help="evaluate a special function")
    p.add_argument("function", choices=sorted(SPECIAL_FUNCTIONS))
    p.add_argument("x", type=float, nargs="+")
    p.set_defaults(func=cmd_specfun)

    p = sub.add_parser("validate", help="run the acceptance suite")
    level = p.add_mutually_exclusive_group()
    level.add_argument("--quick", action="store_true", help="10^4 paths (default)")
    level.add_argument("--full", action="store_true", help="10^5 paths")
    p.add_argument("--seed", type=_seed)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"langevin-energy {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (RangeError, DomainError, OSError) as exc:
        print(f"langevin-energy {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
