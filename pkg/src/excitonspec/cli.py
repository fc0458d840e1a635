"""Command-line pipeline from a TOML job file to emitted data files.

Subcommands::

    excitonspec synth    --config job.toml     write OU trajectory file(s)
    excitonspec tcf      --config job.toml     per-component + isotropic TCFs
    excitonspec spectrum --config job.toml     damped transform of a TCF file
    excitonspec static   --config job.toml     frozen-frame ensemble spectrum
    excitonspec run      --config job.toml     full pipeline
    excitonspec compare  A.csv B.csv           peak tables + pointwise diff

Flags (``--seed``, ``--out``, ``--engine``, ``--basis``, ``--tau-fs``,
``--lambda``) override the corresponding config values, so each acceptance
scenario is one command away from a stored base config.  Every run starts
by echoing the effective configuration to ``config_echo.toml`` in the
output directory; all emitted files are deterministic functions of that
echo, so identical configs yield byte-identical outputs.

With ``engine = "vqa"`` the pipeline first computes and writes an exact
reference (``tcf_*_reference.csv``), then the variational TCFs, then a
``delta_tcf.csv`` with the pointwise deviation of the isotropic TCF from
the reference.  The reference files are flushed to disk before any
variational propagation begins, so a mid-run ansatz failure never leaves
them missing or truncated.

Ensemble members are independent jobs; ``--jobs N`` fans them out over a
process pool.  Member ``i`` always draws from seed ``seed + i`` and results
are reduced in member order, so the output bytes do not depend on the pool
size.  Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 file/format error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager

import numpy as np

from .config import JobConfig, apply_overrides, format_config, parse_config
from .correlation import (
    TcfSeries,
    EvolutionCache,
    ensemble_average,
    isotropic_average,
    load_tcf,
    save_tcf,
    tcf_direct,
    tcf_small_lambda,
)
from .exceptions import ConfigError, ExcitonSpecError, FileFormatError, NumericError
from .grids import PropagationGrid
from .spectrum import (
    damped_fourier,
    load_spectrum,
    peak_analysis,
    save_spectrum,
    static_spectrum,
)
from .trajectory import (
    Trajectory,
    dipole_series,
    hamiltonian_series,
    load_trajectory,
    save_trajectory,
    synthesize_ou,
)

__all__ = ["main", "run_job", "compare_report"]

COMPONENTS = ("x", "y", "z")


@contextmanager
def _stage(name: str):
    """Tag any failure inside a pipeline stage with the stage name."""
    try:
        yield
    except ExcitonSpecError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except OSError as exc:
        raise FileFormatError(f"[{name}] {exc}") from exc
    except ValueError as exc:
        raise NumericError(f"[{name}] {exc}") from exc


def _member_trajectory(cfg: JobConfig, index: int) -> Trajectory:
    if cfg.source_ou is not None:
        return synthesize_ou(cfg.source_ou, cfg.seed + index)
    return load_trajectory(cfg.source_path)


def _check_coverage(cfg: JobConfig, traj: Trajectory) -> None:
    span = traj.times_fs[-1] - traj.times_fs[0]
    if span + 1e-9 < cfg.t_max_fs:
        raise ConfigError(
            f"trajectory covers {span:g} fs but grid.t_max_fs = {cfg.t_max_fs:g}"
        )


def _member_tcfs(cfg: JobConfig, index: int, engine: str) -> list[TcfSeries]:
    """One ensemble member's x/y/z TCFs, sharing one evolution cache."""
    traj = _member_trajectory(cfg, index)
    _check_coverage(cfg, traj)
    h = hamiltonian_series(traj, cfg.basis)
    grid = PropagationGrid.window(cfg.t_max_fs, cfg.record_every_fs, cfg.substep_fs)
    cache = EvolutionCache(
        h, grid, engine, rotating_frame_ev=cfg.rotating_frame_ev
    )
    series = []
    for axis, component in enumerate(COMPONENTS):
        mu = dipole_series(traj, cfg.basis, axis)
        if cfg.tcf_method == "direct":
            series.append(
                tcf_direct(h, mu, engine, grid, component=component, cache=cache)
            )
        else:
            series.append(
                tcf_small_lambda(
                    h, mu, engine, grid, cfg.lambda_,
                    component=component, cache=cache,
                )
            )
    return series


def _ensemble_tcfs(cfg: JobConfig, engine: str, jobs: int) -> dict[str, TcfSeries]:
    """Ensemble-averaged x/y/z TCFs plus their isotropic average."""
    indices = range(cfg.n_trajectories)
    if jobs > 1 and cfg.n_trajectories > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_member_tcfs, cfg, i, engine) for i in indices
            ]
            members = [f.result() for f in futures]  # member order, not finish order
    else:
        members = [_member_tcfs(cfg, i, engine) for i in indices]
    averaged = {
        component: ensemble_average([m[k] for m in members])
        for k, component in enumerate(COMPONENTS)
    }
    averaged["iso"] = isotropic_average(*(averaged[c] for c in COMPONENTS))
    return averaged


def _write_tcfs(tcfs: dict[str, TcfSeries], out_dir: str, suffix: str = "") -> list[str]:
    paths = []
    for component in (*COMPONENTS, "iso"):
        path = os.path.join(out_dir, f"tcf_{component}{suffix}.csv")
        save_tcf(tcfs[component], path)
        paths.append(path)
    return paths


def _write_delta(a: TcfSeries, b: TcfSeries, path: str) -> float:
    delta = np.abs(a.values - b.values)
    worst = float(np.max(delta))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# max_abs_delta = {worst:.17g}\n")
        handle.write("t_fs,abs_delta\n")
        for t, d in zip(a.times_fs, delta):
            handle.write(f"{t:.17g},{d:.17g}\n")
    return worst


def _ensemble_frames(cfg: JobConfig):
    frames = []
    for index in range(cfg.n_trajectories):
        frames.extend(_member_trajectory(cfg, index).frames)
    return frames


def run_job(cfg: JobConfig, jobs: int = 1) -> list[str]:
    """Run the full pipeline; returns the emitted file paths in write order."""
    written: list[str] = []
    with _stage("config"):
        os.makedirs(cfg.output_dir, exist_ok=True)
        echo_path = os.path.join(cfg.output_dir, "config_echo.toml")
        with open(echo_path, "w", encoding="utf-8") as handle:
            handle.write(format_config(cfg))
        written.append(echo_path)

    reference = None
    if cfg.engine == "vqa":
        with _stage("reference"):
            reference = _ensemble_tcfs(cfg, "exact", jobs)
            written += _write_tcfs(reference, cfg.output_dir, "_reference")

    with _stage("tcf"):
        tcfs = _ensemble_tcfs(cfg, cfg.engine, jobs)
        written += _write_tcfs(tcfs, cfg.output_dir)

    if reference is not None:
        with _stage("delta"):
            delta_path = os.path.join(cfg.output_dir, "delta_tcf.csv")
            _write_delta(tcfs["iso"], reference["iso"], delta_path)
            written.append(delta_path)

    with _stage("spectrum"):
        dynamic = damped_fourier(
            tcfs["iso"], cfg.tau_fs, cfg.omega_grid(), engine=cfg.engine
        )
        dynamic_path = os.path.join(cfg.output_dir, "spectrum_dynamic.csv")
        save_spectrum(dynamic, dynamic_path)
        written.append(dynamic_path)

    with _stage("static"):
        static = static_spectrum(
            _ensemble_frames(cfg), cfg.basis, cfg.tau_fs, cfg.omega_grid()
        )
        static_path = os.path.join(cfg.output_dir, "spectrum_static.csv")
        save_spectrum(static, static_path)
        written.append(static_path)
    return written


def compare_report(path_a, path_b) -> str:
    """Peak tables for two spectrum files plus their max pointwise difference."""
    spec_a = load_spectrum(path_a)
    spec_b = load_spectrum(path_b)
    if spec_a.omega_ev.shape != spec_b.omega_ev.shape or not np.allclose(
        spec_a.omega_ev, spec_b.omega_ev, rtol=0.0, atol=1e-12
    ):
        raise ConfigError(
            f"omega grids of {path_a} and {path_b} do not match"
        )
    lines = []
    for path, spec in ((path_a, spec_a), (path_b, spec_b)):
        lines.append(f"{path} (route={spec.route}, engine={spec.engine}, "
                     f"tau_fs={spec.tau_fs:g}, ensemble={spec.ensemble_size})")
        peaks = peak_analysis(spec)
        if not peaks:
            lines.append("  no peaks above threshold")
        for peak in peaks:
            lines.append(
                f"  peak at {peak.position_ev:.6g} eV  height {peak.height:.6g}"
                f"  fwhm {peak.fwhm_ev:.6g} eV"
            )
        lines.append("")
    diff = np.abs(spec_a.intensity - spec_b.intensity)
    worst = int(np.argmax(diff))
    lines.append(
        f"max pointwise |dI| = {diff[worst]:.6g} "
        f"at {spec_a.omega_ev[worst]:.6g} eV"
    )
    return "\n".join(lines) + "\n"


# --- subcommands -------------------------------------------------------------

def _effective_config(args) -> JobConfig:
    if args.config is None:
        raise ConfigError("--config is required for this subcommand")
    cfg = parse_config(args.config)
    overrides = {
        "seed": args.seed,
        "output_dir": args.out,
        "engine": args.engine,
        "basis": args.basis,
        "tau_fs": args.tau_fs,
        "lambda_": args.lam,
    }
    return apply_overrides(cfg, **overrides)


def _write_echo(cfg: JobConfig) -> None:
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(
        os.path.join(cfg.output_dir, "config_echo.toml"), "w", encoding="utf-8"
    ) as handle:
        handle.write(format_config(cfg))


def _cmd_synth(args) -> int:
    cfg = _effective_config(args)
    if cfg.source_ou is None:
        raise ConfigError("synth requires an 'ou' trajectory source")
    with _stage("synth"):
        _write_echo(cfg)
        for index in range(cfg.n_trajectories):
            traj = synthesize_ou(cfg.source_ou, cfg.seed + index)
            path = os.path.join(cfg.output_dir, f"trajectory_{index:03d}.csv")
            save_trajectory(traj, path)
            print(path)
    return 0


def _cmd_tcf(args) -> int:
    cfg = _effective_config(args)
    with _stage("config"):
        _write_echo(cfg)
    with _stage("tcf"):
        tcfs = _ensemble_tcfs(cfg, cfg.engine, args.jobs)
        for path in _write_tcfs(tcfs, cfg.output_dir):
            print(path)
    return 0


def _cmd_spectrum(args) -> int:
    cfg = _effective_config(args)
    tcf_path = args.tcf or os.path.join(cfg.output_dir, "tcf_iso.csv")
    with _stage("spectrum"):
        _write_echo(cfg)
        series = load_tcf(tcf_path)
        spec = damped_fourier(series, cfg.tau_fs, cfg.omega_grid(), engine=cfg.engine)
        path = os.path.join(cfg.output_dir, "spectrum_dynamic.csv")
        save_spectrum(spec, path)
        print(path)
    return 0


def _cmd_static(args) -> int:
    cfg = _effective_config(args)
    with _stage("static"):
        _write_echo(cfg)
        spec = static_spectrum(
            _ensemble_frames(cfg), cfg.basis, cfg.tau_fs, cfg.omega_grid()
        )
        path = os.path.join(cfg.output_dir, "spectrum_static.csv")
        save_spectrum(spec, path)
        print(path)
    return 0


def _cmd_compare(args) -> int:
    print(compare_report(args.spectrum_a, args.spectrum_b), end="")
    return 0


def _cmd_run(args) -> int:
    cfg = _effective_config(args)
    for path in run_job(cfg, jobs=args.jobs):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excitonspec",
        description="Exciton TCFs and absorption spectra from fluctuating "
        "Hamiltonians (exact or variational statevector dynamics).",
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="TOML job file")
    shared.add_argument("--seed", type=int, help="override ensemble.seed")
    shared.add_argument("--out", help="override output_dir")
    shared.add_argument("--engine", choices=("exact", "vqa"))
    shared.add_argument("--basis", choices=("full", "frenkel"))
    shared.add_argument("--tau-fs", type=float, dest="tau_fs")
    shared.add_argument("--lambda", type=float, dest="lam")
    shared.add_argument(
        "--jobs", type=int, default=1, help="worker processes for ensemble members"
    )

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "synth", parents=[shared], help="write synthetic OU trajectory files"
    ).set_defaults(func=_cmd_synth)
    commands.add_parser(
        "tcf", parents=[shared], help="compute per-component and isotropic TCFs"
    ).set_defaults(func=_cmd_tcf)
    spectrum = commands.add_parser(
        "spectrum", parents=[shared], help="transform a stored TCF to a spectrum"
    )
    spectrum.add_argument("--tcf", help="TCF file (default: <out>/tcf_iso.csv)")
    spectrum.set_defaults(func=_cmd_spectrum)
    commands.add_parser(
        "static", parents=[shared], help="frozen-frame ensemble spectrum"
    ).set_defaults(func=_cmd_static)
    compare = commands.add_parser(
        "compare", help="compare two spectrum files on a shared grid"
    )
    compare.add_argument("spectrum_a")
    compare.add_argument("spectrum_b")
    compare.set_defaults(func=_cmd_compare)
    commands.add_parser(
        "run", parents=[shared], help="full pipeline: TCFs, spectra, references"
    ).set_defaults(func=_cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; fold the
        # latter into the config-error exit code.
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except (FileFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
