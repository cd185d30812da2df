"""Command-line entry point: ``icdyn predict | sweep | reproduce | lyapunov``.

Configuration is a flat ``key = value`` file (``--config``) plus ``--set
key=value`` overrides; dedicated flags win over both. Unknown keys are an
error (exit 2). All floats are written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import scipy

from . import __version__, _backend
from .errors import NoRoot, NoWindow
from .montecarlo import Scenario, SweepResult, sweep
from .reproduce import FIGURES, run
from .signal_models import (
    ChaosScale,
    DecayParams,
    LorenzParams,
    NoiseParams,
    SHOParams,
    estimate_lyapunov,
)
from .theory import (
    DimensionScenario,
    dimension_predictions,
    fc1,
    fc2,
    mc_critical,
    sho_noise_crit,
)

EXIT_USAGE = 2
EXIT_INVALID = 3

SWEEP_HEADER = ("axis_name", "axis_value", "model", "mean_aic", "selection_proportion",
                "n_trials", "n_invalid")
CROSSOVER_HEADER = ("kind", "empirical_value", "theory_value", "variant", "relative_gap")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Every knob the CLI understands, with its default.

    Defaults reproduce the single-decay setup (x0=1, lam=0.1, sigma=2.5,
    M=2000). ``values`` is a comma-separated axis grid; otherwise ``points``
    log-spaced values over ``[axis_min, axis_max]`` are used.
    """

    motif: str = "decay"
    axis: str = "f"
    values: str = ""
    axis_min: float | None = None
    axis_max: float | None = None
    points: int = 30
    policy: str = "fixed-M"
    f: float | None = None
    M: int | None = 2000
    t_max: float | None = None
    x0: float = 1.0
    lam: float = 0.1
    mu: float = 0.0
    sigma: float = 2.5
    A: float = 1.0
    omega: float = 2 * math.pi
    phi: float = 0.0
    lorenz_sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    h: float = 1e-3
    amplitude: float = 38.0
    duration: float = 500.0
    case: str | None = None
    C: float | None = None
    x0_known: bool = False
    fit_start: str = "truth"
    chaos_k: int = 5
    trials: int = 1000
    seed: int = 42
    out: str = "results"
    variant: str = "appendix"
    threads: str = "1"


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_PARSERS = {"float": float, "int": int, "str": str, "bool": _parse_bool}


def _field_parser(f):
    base = str(f.type).split("|")[0].strip()
    return _PARSERS[base]


_FIELDS = {f.name: f for f in fields(RunConfig)}


def apply_overrides(cfg: RunConfig, pairs: dict) -> RunConfig:
    """Return ``cfg`` with string-valued ``pairs`` parsed into typed fields."""
    upd = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        raw = raw.strip()
        if raw.lower() in ("", "none") and "None" in str(_FIELDS[key].type):
            upd[key] = None
            continue
        try:
            upd[key] = _field_parser(_FIELDS[key])(raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {e}") from None
    return replace(cfg, **upd)


def read_config_file(path: str) -> dict:
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'")
            k, v = line.split("=", 1)
            pairs[k.strip()] = v
    return pairs


def default_seed() -> int:
    env = os.environ.get("ICDYN_SEED")
    if env is None:
        return 42
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"ICDYN_SEED is not an integer: {env!r}") from None


def build_config(args) -> RunConfig:
    cfg = RunConfig(seed=default_seed())
    if args.config:
        cfg = apply_overrides(cfg, read_config_file(args.config))
    pairs = {}
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v
    cfg = apply_overrides(cfg, pairs)
    flags = {k: getattr(args, k) for k in ("seed", "trials", "out", "variant", "threads")
             if getattr(args, k, None) is not None}
    cfg = replace(cfg, **flags)
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    workers(cfg)
    return cfg


def workers(cfg: RunConfig) -> int:
    if cfg.threads == "auto":
        return os.cpu_count() or 1
    try:
        n = int(cfg.threads)
    except ValueError:
        raise ConfigError(f"threads must be a positive integer or 'auto', got {cfg.threads!r}") from None
    if n < 1:
        raise ConfigError("threads must be >= 1")
    return n


def _require(cfg: RunConfig, *names: str) -> None:
    for n in names:
        if getattr(cfg, n) is None:
            raise ConfigError(f"missing required parameter {n!r}")


# --- output -------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def sweep_csv(r: SweepResult) -> str:
    rows = []
    for i, v in enumerate(r.values):
        for k, m in enumerate(r.models):
            rows.append((r.axis, float(v), m, float(r.mean_aic[i, k]),
                         float(r.proportion[i, k]), int(r.n_trials[i]), int(r.n_invalid[i])))
    return _csv(SWEEP_HEADER, rows)


def crossover_csv(rows) -> str:
    return _csv(CROSSOVER_HEADER, [(x.kind, float(x.empirical), float(x.theory), x.variant,
                                    float(x.relative_gap)) for x in rows])


def write_manifest(out: str, command: str, cfg: RunConfig, files: list[str], extra=None,
                   name: str = "manifest.json") -> None:
    doc = {"command": command, "version": __version__, "seed": cfg.seed,
           "config": asdict(cfg), "files": sorted(files), "backend": _backend.current(),
           "numpy": np.__version__, "scipy": scipy.__version__}
    if extra:
        doc.update(extra)
    write_atomic(os.path.join(out, name),
                 json.dumps(doc, indent=2, sort_keys=True, default=fmt) + "\n")


def too_many_invalid(r: SweepResult) -> bool:
    return bool(np.any(r.n_invalid * 2 > r.n_trials))


# --- subcommands --------------------------------------------------------------

def _try(rows, label, fn):
    try:
        p = fn()
        rows.append((p.kind, p.variant, fmt(p.value), ",".join(p.flags)))
    except (ValueError, NoWindow, NoRoot) as e:
        rows.append((label, "-", "n/a", str(e)))


def predictions(cfg: RunConfig) -> list[tuple]:
    rows: list[tuple] = []
    if cfg.motif == "decay":
        x0, lam, sig = cfg.x0, cfg.lam, cfg.sigma
        _try(rows, "lower-frequency", lambda: fc1(lam, sig, x0))
        if cfg.M is not None:
            _try(rows, "lower-frequency", lambda: fc1(lam, sig, x0, "exact-numeric", M=cfg.M))
            for v in ("appendix", "main-text", "exact-numeric"):
                _try(rows, "upper-frequency", lambda v=v: fc2(cfg.M, lam, x0, sig, v))
        if cfg.f is not None:
            for v in ("appendix", "main-text"):
                _try(rows, "critical-M", lambda v=v: mc_critical(sig, cfg.f, lam, x0, v))
    elif cfg.motif == "sho":
        _require(cfg, "f", "t_max")
        _try(rows, "sho-noise", lambda: sho_noise_crit(cfg.f, cfg.t_max))
    elif cfg.motif == "dimension":
        _require(cfg, "case", "C", "f")
        s = DimensionScenario(cfg.case, cfg.C, 1.0 / cfg.f, cfg.lam, cfg.x0, cfg.sigma)
        try:
            for p in dimension_predictions(s):
                rows.append((p.kind, p.variant, fmt(p.value), ",".join(p.flags)))
        except (NoWindow, NoRoot) as e:
            rows.append((f"dimension-{cfg.case}", "-", "n/a", str(e)))
    else:
        raise ConfigError(f"no closed-form predictor for motif {cfg.motif!r}")
    return rows


def cmd_predict(cfg: RunConfig) -> int:
    rows = predictions(cfg)
    print(f"{'kind':<22} {'variant':<14} {'value':<24} flags")
    for kind, variant, value, flags in rows:
        print(f"{kind:<22} {variant:<14} {value:<24} {flags}")
    return 0


def _axis_values(cfg: RunConfig) -> tuple:
    if cfg.values.strip():
        vals = [float(v) for v in cfg.values.split(",") if v.strip()]
    else:
        _require(cfg, "axis_min", "axis_max")
        if not 0 < cfg.axis_min <= cfg.axis_max or cfg.points < 1:
            raise ConfigError("need 0 < axis_min <= axis_max and points >= 1")
        vals = list(np.geomspace(cfg.axis_min, cfg.axis_max, cfg.points))
    if cfg.axis in ("N", "M"):
        return tuple(sorted({int(round(v)) for v in vals}))
    return tuple(float(v) for v in vals)


def scenario_from(cfg: RunConfig) -> Scenario:
    motif = cfg.motif
    kw = dict(policy=cfg.policy, f=cfg.f, M=cfg.M, t_max=cfg.t_max,
              noise=NoiseParams(cfg.mu, cfg.sigma), trials=cfg.trials, seed=cfg.seed,
              fit_start=cfg.fit_start, x0_known=cfg.x0_known, chaos_k=cfg.chaos_k,
              case=cfg.case, C=cfg.C)
    if motif in ("decay", "dimension"):
        kw["decay"] = DecayParams(cfg.x0, cfg.lam)
    elif motif == "sho":
        kw["sho"] = SHOParams(cfg.A, cfg.omega, cfg.phi)
    elif motif == "chaos":
        kw["lorenz"] = LorenzParams(cfg.lorenz_sigma, cfg.rho, cfg.beta, h=cfg.h)
        kw["chaos_scale"] = ChaosScale(amplitude=cfg.amplitude)
    try:
        return Scenario(motif, cfg.axis, _axis_values(cfg), **kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def cmd_sweep(cfg: RunConfig) -> int:
    s = scenario_from(cfg)
    r = sweep(s, workers=workers(cfg))
    name = f"sweep_{s.motif}_{s.axis}.csv"
    write_atomic(os.path.join(cfg.out, name), sweep_csv(r))
    write_manifest(cfg.out, "sweep", cfg, [name])
    print(os.path.join(cfg.out, name))
    if too_many_invalid(r):
        print("more than half of the trials at some grid point are invalid", file=sys.stderr)
        return EXIT_INVALID
    return 0


def cmd_reproduce(cfg: RunConfig, figure: str, trials: int | None) -> int:
    rep = run(figure, seed=cfg.seed, trials=trials, workers=workers(cfg), variant=cfg.variant)
    files = []
    for key, r in rep.sweeps.items():
        name = f"{figure}_{key}.csv"
        write_atomic(os.path.join(cfg.out, name), sweep_csv(r))
        files.append(name)
    if rep.rows:
        name = f"{figure}_crossovers.csv"
        write_atomic(os.path.join(cfg.out, name), crossover_csv(rep.rows))
        files.append(name)
    write_manifest(cfg.out, f"reproduce {figure}", cfg, files,
                   {"checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                               for c in rep.checks]},
                   name=f"{figure}_manifest.json")
    for c in rep.checks:
        print(c.line())
    bad = any(too_many_invalid(r) for r in rep.sweeps.values())
    if bad:
        print("more than half of the trials at some grid point are invalid", file=sys.stderr)
        return EXIT_INVALID
    return 0 if rep.passed else 1


def cmd_lyapunov(cfg: RunConfig) -> int:
    p = LorenzParams(cfg.lorenz_sigma, cfg.rho, cfg.beta, h=cfg.h)
    print(fmt(estimate_lyapunov(p, duration=cfg.duration)))
    return 0


def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed (default $ICDYN_SEED or 42)")
    common.add_argument("--trials", type=int, help="trials per grid point")
    common.add_argument("--out", help="output directory (default ./results)")
    common.add_argument("--variant", choices=("main-text", "appendix"),
                        help="formula variant reported as theory (default appendix)")
    common.add_argument("--threads", help="worker processes, integer or 'auto'")

    p = argparse.ArgumentParser(prog="icdyn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"icdyn {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("predict", parents=[common], help="print analytic crossover predictions")
    sub.add_parser("sweep", parents=[common], help="run a Monte Carlo sweep and write CSV")
    rp = sub.add_parser("reproduce", parents=[common], help="run a canned figure preset")
    rp.add_argument("figure", choices=FIGURES)
    sub.add_parser("lyapunov", parents=[common], help="estimate the largest Lyapunov exponent")
    return p


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "predict":
            return cmd_predict(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.figure, args.trials)
        return cmd_lyapunov(cfg)
    except (ConfigError, OSError) as e:
        print(f"icdyn: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
