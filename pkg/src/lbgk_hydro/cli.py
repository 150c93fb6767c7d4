"""Command-line front end.

Every option can also come from a ``key = value`` file given with
``--config``; flags on the command line win.  Exit codes: 0 success,
1 runtime or integration failure (including a lattice that fails
validation), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import experiments, ns2d, serialization
from .lattice import BUILTIN_LATTICES, LatticeError, builtin, validate_isotropy
from .lbgk import LbgkError
from .ns2d import NsError
from .spectral import SpectralError
from .timestepping import IntegrationBlowup

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

COMMANDS = ("validate-lattice", "run-ns", "run-lbgk", "converge", "tg-validate")


class UsageError(ValueError):
    """Bad option value or config entry; maps to exit code 2."""


def _positive_float(text: str) -> float:
    x = float(text)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError("must be a positive number")
    return x


def _positive_int(text: str) -> int:
    x = int(text)
    if x <= 0:
        raise ValueError("must be a positive integer")
    return x


def _float_list(text: str) -> tuple:
    items = [s for s in str(text).replace(" ", "").split(",") if s]
    if not items:
        raise ValueError("needs at least one value")
    return tuple(float(s) for s in items)


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be true or false")


def _choice(*options: str) -> Callable[[str], str]:
    def conv(text: str) -> str:
        t = str(text).strip().lower()
        if t not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return t

    return conv


@dataclass(frozen=True)
class Option:
    convert: Callable[[str], Any]
    default: Any
    help: str


_IC = Option(_choice("tg", "perturbed-tg"), "tg", "initial vorticity: tg or perturbed-tg")
_COMMON = {
    "n": Option(_positive_int, 64, "grid points per axis"),
    "nu": Option(_positive_float, 1e-4, "relaxation time nu (NS viscosity is c_s^2 nu)"),
    "t_final": Option(_positive_float, 1.0, "final time"),
    "amplitude": Option(float, 10.0, "Taylor-Green amplitude"),
    "a": Option(int, 2, "Taylor-Green wavenumber along x1"),
    "b": Option(int, 2, "Taylor-Green wavenumber along x2"),
}
_LBGK = {
    "lattice": Option(_choice("d2q9", "d2q7"), "d2q9", "velocity lattice"),
    "initial_density": Option(
        _choice(*experiments.INITIAL_DENSITIES), "uniform", "uniform or pressure-balanced"
    ),
    "nonlinear": Option(_bool, True, "keep the quadratic equilibrium term"),
    "literal_cutoff": Option(_bool, False, "apply the |k| < 1/eps cutoff every step"),
}
_OUTPUT = {
    "out": Option(str, None, "run directory"),
    "output_every": Option(_positive_float, None, "series output interval"),
    "snapshot_every": Option(_positive_float, None, "snapshot interval (default: end only)"),
}

OPTIONS: Dict[str, Dict[str, Option]] = {
    "validate-lattice": {
        "tol": Option(_positive_float, 1e-12, "isotropy tolerance"),
    },
    "run-ns": {
        "ic": Option(_IC.convert, "perturbed-tg", _IC.help),
        **_COMMON,
        "t_final": Option(_positive_float, 4.0, "final time"),
        "dt": Option(_positive_float, None, "time step (default: stability rule)"),
        "sound_speed": Option(_positive_float, ns2d.DEFAULT_SOUND_SPEED, "speed of sound c_s"),
        **_OUTPUT,
        "output_every": Option(_positive_float, 0.1, "series output interval"),
    },
    "run-lbgk": {
        "ic": _IC,
        **_COMMON,
        "eps": Option(_positive_float, 0.2, "Knudsen number epsilon"),
        "dt": Option(_positive_float, None, "time step (default: stability rule)"),
        **_LBGK,
        **_OUTPUT,
    },
    "converge": {
        "preset": Option(_choice("desk", "large"), "desk", "desk (N=64, T=1, TG) or large (N=128, perturbed TG, T=32)"),
        "ic": _IC,
        **_COMMON,
        "eps": Option(_float_list, (0.4, 0.2, 0.1), "comma-separated decreasing epsilons"),
        "dt": Option(_positive_float, None, "LBGK time step for every epsilon"),
        "ns_dt": Option(_positive_float, None, "time step of the NS reference"),
        **_LBGK,
        "out": Option(str, None, "run directory"),
    },
    "tg-validate": {
        **{k: _COMMON[k] for k in ("n", "nu", "t_final", "amplitude", "a", "b")},
        "dt": Option(_positive_float, 1e-4, "time step"),
    },
}

_LARGE_PRESET = {
    "n": 128, "ic": "perturbed-tg", "t_final": 32.0, "ns_dt": 2e-6, "eps": (0.4, 0.2, 0.1),
}


@dataclass
class RunConfig:
    """Parsed command: effective option values after file and flag merging."""

    command: str
    values: Dict[str, Any]
    target: Optional[str] = None
    config_path: Optional[Path] = None
    verbose: bool = False

    def __getitem__(self, key):
        return self.values[key]

    def convergence_config(self) -> experiments.ConvergenceConfig:
        v = self.values
        ic = experiments.InitialCondition.parse(v["ic"], v["amplitude"], v["a"], v["b"])
        eps = v["eps"] if isinstance(v["eps"], tuple) else (v["eps"],)
        return experiments.ConvergenceConfig(
            grid_n=v["n"], nu=v["nu"], epsilons=eps, t_final=v["t_final"],
            initial_condition=ic, dt_override=v.get("dt"), ns_dt=v.get("ns_dt"),
            lattice=v["lattice"], initial_density=v["initial_density"],
            nonlinear=v["nonlinear"], literal_cutoff=v["literal_cutoff"],
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lbgk-hydro",
        description="Continuous lattice-BGK hydrodynamic-limit experiments on the 2D torus.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=name.replace("-", " "))
        if name == "validate-lattice":
            p.add_argument("target", help=f"lattice file or builtin ({', '.join(BUILTIN_LATTICES)})")
        else:
            p.add_argument("--config", type=Path, help="key = value file; flags override it")
        for key, opt in OPTIONS[name].items():
            flag = "--" + key.replace("_", "-")
            if opt.convert is _bool:
                p.add_argument(flag, dest=key, default=None, metavar="BOOL", help=opt.help)
            else:
                p.add_argument(flag, dest=key, default=None, help=opt.help)
        if name in ("run-lbgk", "converge"):
            p.add_argument("--linear", dest="nonlinear", action="store_const", const="false",
                           help="same as --nonlinear false")
    return parser


def _convert(key: str, raw: Any, opt: Option) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        return opt.convert(raw)
    except ValueError as exc:
        raise UsageError(f"invalid value for {key}: {raw!r} ({exc})") from None


def parse_cli(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse ``argv`` into a :class:`RunConfig`; raises :class:`UsageError` on bad values.

    argparse itself exits with status 2 on unknown commands or flags.
    """
    args = build_parser().parse_args(argv)
    specs = OPTIONS[args.command]
    values = {k: o.default for k, o in specs.items()}
    file_values: Dict[str, str] = {}
    config_path = getattr(args, "config", None)
    if config_path is not None:
        try:
            file_values = serialization.read_config(config_path)
        except (OSError, serialization.FormatError) as exc:
            raise UsageError(str(exc)) from None
        unknown = sorted(set(file_values) - set(specs))
        if unknown:
            raise UsageError(f"unknown key(s) in {config_path}: {', '.join(unknown)}")
    flags = {k: getattr(args, k) for k in specs if getattr(args, k, None) is not None}
    if args.command == "converge":
        preset = _convert("preset", flags.get("preset", file_values.get("preset", "desk")),
                          specs["preset"])
        if preset == "large":
            values.update(_LARGE_PRESET)
    for source in (file_values, flags):
        for key, raw in source.items():
            values[key] = _convert(key, raw, specs[key])
    return RunConfig(args.command, values, getattr(args, "target", None), config_path,
                     args.verbose)


def _run_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.values.get("out") or f"runs/{cfg.command}")
    out.mkdir(parents=True, exist_ok=True)
    record = {k: v for k, v in cfg.values.items() if k != "out" and v is not None}
    serialization.write_config(out / "config.txt", record)
    return out


def _validate_lattice(cfg: RunConfig) -> int:
    target = cfg.target
    if target.lower() in BUILTIN_LATTICES:
        lat = builtin(target)
    else:
        try:
            lat = serialization.read_lattice(target)
        except (OSError, serialization.FormatError) as exc:
            raise UsageError(str(exc)) from None
    report = validate_isotropy(lat, cfg["tol"])
    print(f"{lat!r}: {lat.q} velocities in {lat.dim}D")
    print(report.format_table())
    return EXIT_OK if report.satisfied else EXIT_FAILURE


def _tg_validate(cfg: RunConfig) -> int:
    v = cfg.values
    err = experiments.run_tg_validation(v["n"], v["nu"], v["t_final"], v["dt"],
                                        v["amplitude"], v["a"], v["b"])
    print(f"relative L2 error vs exact Taylor-Green decay: {err:.6e}")
    return EXIT_OK


def _run_ns(cfg: RunConfig) -> int:
    v = cfg.values
    ic = experiments.InitialCondition.parse(v["ic"], v["amplitude"], v["a"], v["b"])
    out = _run_dir(cfg)
    series = experiments.run_vortex_evolution(
        v["n"], v["nu"], v["t_final"], v["output_every"], dt=v["dt"], out_dir=out,
        snapshot_every=v["snapshot_every"], initial_condition=ic, sound_speed=v["sound_speed"],
    )
    params = ns2d.NsParams(v["nu"], v["sound_speed"])
    worst = worst_nu = 0.0
    for d0, d1 in zip(series, series[1:]):
        scale = params.nu_eff * (d0.palinstrophy + d1.palinstrophy)
        if scale > 0:
            worst = max(worst, abs(ns2d.enstrophy_law_residual(d0, d1, params.nu_eff)) / scale)
            alt = params.nu * (d0.palinstrophy + d1.palinstrophy)
            worst_nu = max(worst_nu, abs(ns2d.enstrophy_law_residual(d0, d1, params.nu)) / alt)
    last = series[-1]
    print(f"t={last.time:g} enstrophy={last.enstrophy:.10g} palinstrophy={last.palinstrophy:.10g}")
    print(f"max relative enstrophy-law residual: {worst:.3e} with c_s^2 nu, "
          f"{worst_nu:.3e} with nu")
    print(f"wrote {out}")
    return EXIT_OK


def _run_lbgk(cfg: RunConfig) -> int:
    v = cfg.values
    conv = cfg.convergence_config()
    out = _run_dir(cfg)
    final, rows = experiments.run_lbgk(conv, v["eps"], v["output_every"], out, v["snapshot_every"])
    t, mass, l2_rho, l2_u, gnorm = rows[-1]
    print(f"t={t:g} mass={mass:.15g} l2_rho={l2_rho:.10g} l2_u={l2_u:.10g} "
          f"weighted_g_norm={gnorm:.10g}")
    print(f"wrote {out}")
    return EXIT_OK


def _converge(cfg: RunConfig) -> int:
    conv = cfg.convergence_config()
    out = _run_dir(cfg)

    def show(row):
        print(f"eps={row.epsilon:g} rel_error={row.rel_error:.6e} steps={row.steps} "
              f"({row.seconds:.1f}s)", flush=True)

    result = experiments.run_convergence(conv, progress=show)
    experiments.write_convergence_csv(out / "convergence.csv", result)
    if result.reference_error is not None:
        print(f"NS reference vs exact Taylor-Green: {result.reference_error:.3e}")
    if result.fit is not None:
        f = result.fit
        print(f"fit: {f.prefactor:.6e} * eps^{f.exponent:.4f} (r2 = {f.r2:.6f})")
    for fail in result.failures:
        print(f"eps={fail.epsilon:g} failed: {fail.message}", file=sys.stderr)
    print(f"wrote {out}")
    return EXIT_FAILURE if result.failures else EXIT_OK


_HANDLERS = {
    "validate-lattice": _validate_lattice,
    "run-ns": _run_ns,
    "run-lbgk": _run_lbgk,
    "converge": _converge,
    "tg-validate": _tg_validate,
}

_VALIDATION_ERRORS = (
    UsageError, experiments.ExperimentError, LbgkError, NsError, SpectralError, LatticeError,
)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = parse_cli(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if cfg.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _HANDLERS[cfg.command](cfg)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationBlowup as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
