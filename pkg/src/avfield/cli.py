"""Configuration parsing, experiment orchestration, and result serialization.

Config files are flat INI documents with sections [run], [grid], [model],
[solver]. Every default is echoed into the output metadata so a result file
fully describes the run that produced it. Exit codes: 0 success, 1 config
error, 2 numerical failure, 3 property failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fields import Grid2D, save_field
from .manybody import assemble_H2, ground_energy_2body, product_state_energy
from .meanfield import ModelParams, SolverConfig, minimize_af
from .potentials import GaugeSpec, TrapSpec
from .spectral import build_spectrum
from .verify import run_battery

COMMANDS = ("minimize", "sweep-radius", "sweep-beta", "manybody", "spectrum", "verify")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_PROPERTY = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    L: float = 16.0
    n: int = 128
    beta: float = 0.0
    R: float = 0.1
    s: float = 2.0
    c: float = 1.0
    C0: float = 0.0
    b0: float = 0.0
    step: float = 0.1
    tol: float = 1e-10
    max_iter: int = 50_000
    backtracking: float = 0.5
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    radii: list[float] = field(default_factory=lambda: [2.0**-k for k in range(1, 7)])
    betas: list[float] = field(default_factory=lambda: [0.5, 1.0])
    modes: int = 30
    dump_state: bool = False

    def model_params(self) -> ModelParams:
        return ModelParams(
            beta=self.beta,
            R=self.R,
            trap=TrapSpec(exponent=self.s, scale=self.c, offset=self.C0),
            gauge=GaugeSpec(b0=self.b0),
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            step=self.step,
            tol=self.tol,
            max_iter=self.max_iter,
            backtracking=self.backtracking,
            seed=self.seed,
        )

    def grid(self) -> Grid2D:
        return Grid2D(self.L, self.n)

    def resolved_items(self) -> list[tuple[str, str]]:
        items = []
        for key in (
            "command L n beta R s c C0 b0 step tol max_iter backtracking "
            "seed workers output_dir modes dump_state"
        ).split():
            items.append((key, repr(getattr(self, key))))
        items.append(("radii", " ".join(repr(r) for r in self.radii)))
        items.append(("betas", " ".join(repr(b) for b in self.betas)))
        return items


# key -> (section, parser, validator, range description)
def _float_range(lo, hi, lo_open=False, hi_open=False):
    def check(v):
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = v < hi if hi_open else v <= hi
        return ok_lo and ok_hi

    lo_b = "(" if lo_open else "["
    hi_b = ")" if hi_open else "]"
    return check, f"{lo_b}{lo}, {hi}{hi_b}"


_INF = float("inf")

_SCHEMA = {
    ("run", "command"): (str, lambda v: v in COMMANDS, f"one of {COMMANDS}"),
    ("run", "seed"): (int, lambda v: True, "integer"),
    ("run", "workers"): (int, lambda v: v >= 1, ">= 1"),
    ("run", "output_dir"): (str, lambda v: len(v) > 0, "non-empty path"),
    ("run", "radii"): ("floats", None, "positive decreasing dyadic list"),
    ("run", "betas"): ("floats", None, "finite list"),
    ("run", "modes"): (int, lambda v: 1 <= v <= 400, "[1, 400]"),
    ("run", "dump_state"): ("bool", None, "true/false"),
    ("grid", "L"): (float, *_float_range(0, _INF, lo_open=True)),
    ("grid", "n"): (int, lambda v: 8 <= v <= 1024 and v % 2 == 0, "even, [8, 1024]"),
    ("model", "beta"): (float, np.isfinite, "finite"),
    ("model", "R"): (float, *_float_range(0, _INF)),
    ("model", "s"): (float, *_float_range(0, _INF, lo_open=True)),
    ("model", "c"): (float, *_float_range(0, _INF, lo_open=True)),
    ("model", "C0"): (float, *_float_range(0, _INF)),
    ("model", "b0"): (float, np.isfinite, "finite"),
    ("solver", "step"): (float, *_float_range(0, _INF, lo_open=True)),
    ("solver", "tol"): (float, *_float_range(0, _INF, lo_open=True)),
    ("solver", "max_iter"): (int, lambda v: v >= 1, ">= 1"),
    ("solver", "backtracking"): (float, *_float_range(0, 1, lo_open=True, hi_open=True)),
}


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse and fully validate a config document.

    Unknown keys are rejected; errors name the offending key and the accepted
    range. A command passed by the caller (the CLI argument) overrides a
    command given in [run] only if the two agree or [run] omits it.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig(command=command or "")
    seen_command = None
    for section in parser.sections():
        if section not in ("run", "grid", "model", "solver"):
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if (section, key) not in _SCHEMA:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            kind, check, desc = _SCHEMA[(section, key)]
            try:
                if kind is float:
                    value = float(raw)
                elif kind is int:
                    value = int(raw)
                elif kind == "floats":
                    value = [float(tok) for tok in raw.replace(",", " ").split()]
                elif kind == "bool":
                    if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                        raise ValueError(raw)
                    value = raw.lower() in ("true", "1", "yes")
                else:
                    value = raw
            except ValueError as exc:
                raise ConfigError(
                    f"key '{key}': cannot parse {raw!r} (accepted: {desc})"
                ) from exc
            if check is not None and not check(value):
                raise ConfigError(f"key '{key}': value {value!r} outside {desc}")
            if key == "command":
                seen_command = value
            else:
                setattr(cfg, key, value)

    if seen_command is not None:
        if command is not None and command != seen_command:
            raise ConfigError(
                f"key 'command': config says {seen_command!r} but the command "
                f"line requested {command!r}"
            )
        cfg.command = seen_command
    if not cfg.command:
        raise ConfigError(f"missing required key 'command' (accepted: one of {COMMANDS})")

    _validate_cross(cfg)
    return cfg


def _validate_cross(cfg: RunConfig):
    if cfg.R > 0 and cfg.R >= cfg.L / 4:
        raise ConfigError(f"key 'R': value {cfg.R} must be < L/4 = {cfg.L / 4}")
    if cfg.command == "manybody":
        if cfg.R == 0:
            raise ConfigError(
                "key 'R': value 0 rejected for manybody (singular pair term)"
            )
        if cfg.modes > 64:
            raise ConfigError("key 'modes': manybody assembly supports at most 64")
    if cfg.command == "sweep-radius":
        if not cfg.radii:
            raise ConfigError("key 'radii': empty list")
        for r in cfg.radii:
            if not 0 < r <= cfg.L / 8:
                raise ConfigError(f"key 'radii': {r} outside (0, L/8]")
        for a, b in zip(cfg.radii, cfg.radii[1:]):
            if not np.isclose(b, a / 2):
                raise ConfigError("key 'radii': list must be dyadic (each half the last)")
    if cfg.command == "sweep-beta" and not cfg.betas:
        raise ConfigError("key 'betas': empty list")


# --- output helpers ---


def _write_csv(path: Path, cfg: RunConfig, header: list[str], rows: list[list]):
    lines = [f"# avfield {__version__}"]
    for key, val in cfg.resolved_items():
        lines.append(f"# {key} = {val}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# --- command implementations ---


def run_minimize(cfg: RunConfig, out: Path) -> int:
    res = minimize_af(cfg.model_params(), cfg.solver_config(), grid=cfg.grid())
    rows = [[cfg.beta, cfg.R, res.energy, res.iterations, res.converged]]
    _write_csv(out / "minimize.csv", cfg, ["beta", "R", "energy", "iterations", "converged"], rows)
    if cfg.dump_state:
        save_field(out / "u_star", res.u_star)
    print(f"energy = {res.energy!r} after {res.iterations} iterations "
          f"(converged={res.converged})")
    return EXIT_OK if res.converged else EXIT_NUMERICAL


def run_sweep_radius(cfg: RunConfig, out: Path) -> int:
    """One minimization per radius, warm-starting each run from the previous
    minimizer; rows carry the Cauchy differences |e_R - e_{R/2}|."""
    rows = []
    energies = []
    u_prev = None
    any_failed = False
    for r in cfg.radii:
        params = ModelParams(
            beta=cfg.beta,
            R=r,
            trap=TrapSpec(exponent=cfg.s, scale=cfg.c, offset=cfg.C0),
            gauge=GaugeSpec(b0=cfg.b0),
        )
        res = minimize_af(params, cfg.solver_config(), u0=u_prev, grid=cfg.grid())
        u_prev = res.u_star
        energies.append(res.energy)
        any_failed = any_failed or not res.converged
        cauchy = abs(energies[-2] - energies[-1]) if len(energies) > 1 else float("nan")
        rows.append([r, res.energy, res.iterations, res.converged, cauchy])
        print(f"R={r!r}: energy={res.energy!r} iters={res.iterations} "
              f"converged={res.converged}")
    _write_csv(
        out / "sweep_radius.csv",
        cfg,
        ["R", "energy", "iterations", "converged", "cauchy_diff"],
        rows,
    )
    return EXIT_NUMERICAL if any_failed else EXIT_OK


def _minimize_one_beta(args):
    cfg_dict, beta = args
    cfg = RunConfig(**cfg_dict)
    params = ModelParams(
        beta=beta,
        R=cfg.R,
        trap=TrapSpec(exponent=cfg.s, scale=cfg.c, offset=cfg.C0),
        gauge=GaugeSpec(b0=cfg.b0),
    )
    res = minimize_af(params, cfg.solver_config(), grid=cfg.grid())
    return beta, res.energy, res.iterations, res.converged


def run_sweep_beta(cfg: RunConfig, out: Path) -> int:
    from dataclasses import asdict

    jobs = [(asdict(cfg), b) for b in cfg.betas]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_minimize_one_beta, jobs))
    else:
        results = [_minimize_one_beta(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    rows = [list(r) for r in results]
    any_failed = any(not r[3] for r in results)
    for beta, energy, iters, conv in results:
        print(f"beta={beta!r}: energy={energy!r} iters={iters} converged={conv}")
    _write_csv(out / "sweep_beta.csv", cfg, ["beta", "energy", "iterations", "converged"], rows)
    return EXIT_NUMERICAL if any_failed else EXIT_OK


def run_manybody(cfg: RunConfig, out: Path) -> int:
    params = cfg.model_params()
    grid = cfg.grid()
    basis = build_spectrum(params, grid, cfg.modes)
    H2 = assemble_H2(basis, params)
    e2 = ground_energy_2body(H2)
    res = minimize_af(params, cfg.solver_config(), grid=grid)
    pe = product_state_energy(res.u_star, 2, params)
    rows = [[
        2, cfg.R, cfg.beta, cfg.modes, e2,
        pe.kinetic, pe.mixed, pe.three_body, pe.self_pair, pe.total_per_particle,
    ]]
    _write_csv(
        out / "manybody.csv",
        cfg,
        ["N", "R", "beta", "m", "e2", "kinetic", "mixed", "three_body",
         "self_pair", "product_total_per_particle"],
        rows,
    )
    print(f"e2 = {e2!r} (pair ground energy per particle), "
          f"product state per particle = {pe.total_per_particle!r}")
    return EXIT_OK


def run_spectrum(cfg: RunConfig, out: Path) -> int:
    basis = build_spectrum(cfg.model_params(), cfg.grid(), cfg.modes)
    rows = [[a, float(basis.eigenvalues[a])] for a in range(basis.size)]
    _write_csv(out / "spectrum.csv", cfg, ["index", "eigenvalue"], rows)
    print(f"computed {basis.size} eigenvalues; lowest = {basis.eigenvalues[0]!r}")
    return EXIT_OK


def run_verify(cfg: RunConfig, out: Path) -> int:
    results = run_battery(cfg.L, cfg.n)
    rows = []
    failed = []
    for r in results:
        print(f"{r.status.upper():12s} {r.name}: {r.detail}")
        rows.append([r.name, r.status, r.margin, r.detail.replace(",", ";")])
        if r.status == "fail":
            failed.append(r.name)
    _write_csv(out / "verify.csv", cfg, ["property", "status", "margin", "detail"], rows)
    if failed:
        print(f"FAILED properties: {', '.join(failed)}")
        return EXIT_PROPERTY
    return EXIT_OK


_RUNNERS = {
    "minimize": run_minimize,
    "sweep-radius": run_sweep_radius,
    "sweep-beta": run_sweep_beta,
    "manybody": run_manybody,
    "spectrum": run_spectrum,
    "verify": run_verify,
}


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="avfield",
        description="Self-consistent average-field gauge solver and verification "
        "harness. Defaults: L=16, n=128, beta=0, R=0.1, trap |x|^2, "
        "solver step 0.1 / tol 1e-10 / max_iter 50000 / backtracking 0.5.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, default=None, help="INI config file")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--workers", type=int, default=None, help="override [run] workers")
    return p


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, command=args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("key 'workers': must be >= 1")
            cfg.workers = args.workers
        if args.out is not None:
            cfg.output_dir = str(args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _RUNNERS[cfg.command](cfg, out)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
