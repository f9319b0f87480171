"""Command line front end: configuration parsing and run orchestration.

Subcommands: ``run3d``, ``run2d``, ``verify``, ``advect``, ``diagnose``.
Exit codes: 0 success, 1 usage or configuration error, 2 blow-up detected
(partial outputs are flushed before exiting).

Config files are TOML with sections [grid], [time], [output], [initial],
optional [dissipation], and a ``multiplier`` table (either the top-level
inline form shown here -- which must precede the first section header --
or an equivalent [multiplier] section), e.g.::

    multiplier = { kind = "power", a = 1.5 }

    [grid]
    n = [32, 32, 32]

    [time]
    dt = 1e-3
    t_end = 0.5

    [output]
    every = 10
    snapshot_every = 0
    hs = [2.5]
    prefix = "run"

    [initial]
    preset = "random"     # abc | single_mode | random | snapshot
    seed = 1
    amplitude = 0.5

Unknown keys are rejected by name.  ``--seed`` overrides the initial-data
seed, ``--threads`` (or AVECTOR_THREADS) sets the transform worker count,
``--out`` sets the output directory.  Every run writes a JSON manifest
listing the exact config, seed, versions, wall time, and emitted files.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .diagnostics import csv_header, csv_row, make_record_2d, make_record_3d
from .dynamics2d import ReducedState, run_reduced
from .dynamics3d import BlowUpError, Dissipation, SimConfig, run
from .estimates import verify_comm1, verify_comm3, verify_comm4, verify_embedding
from .lagrangian import advect
from .multipliers import MultiplierSpec
from .presets import abc_field, random_divfree_field, random_scalar_field, single_mode_field
from .spectral import (
    Grid,
    SpectralScalarField,
    load_snapshot_2d,
    load_snapshot_3d,
    save_snapshot_2d,
    save_snapshot_3d,
    set_fft_workers,
    snapshot_magic,
)


class ConfigError(ValueError):
    pass


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


def parse_multiplier(table) -> MultiplierSpec:
    if isinstance(table, str):
        return parse_multiplier_label(table)
    _check_keys(table, {"kind", "a", "alpha1", "alpha2", "radii", "values"}, "[multiplier]")
    kind = table.get("kind")
    try:
        if kind == "power":
            return MultiplierSpec.power(float(table["a"]))
        if kind == "power_log":
            return MultiplierSpec.power_log(float(table["a"]), float(table["alpha1"]))
        if kind == "power_loglog":
            return MultiplierSpec.power_loglog(
                float(table["a"]), float(table["alpha1"]), float(table["alpha2"])
            )
        if kind == "tabulated":
            return MultiplierSpec.tabulated(table["radii"], table["values"])
    except KeyError as err:
        raise ConfigError(f"multiplier kind {kind!r} is missing key {err}") from None
    except ValueError as err:
        raise ConfigError(str(err)) from None
    raise ConfigError(f"unknown multiplier kind {kind!r}")


def parse_multiplier_label(label: str) -> MultiplierSpec:
    """Parse compact labels like ``power:1.5`` or ``power_log:1.5:1``."""
    parts = label.split(":")
    kind, args = parts[0], [float(p) for p in parts[1:]]
    try:
        if kind == "power":
            return MultiplierSpec.power(*args)
        if kind == "power_log":
            return MultiplierSpec.power_log(*args)
        if kind == "power_loglog":
            return MultiplierSpec.power_loglog(*args)
    except TypeError as err:
        raise ConfigError(f"bad multiplier label {label!r}: {err}") from None
    raise ConfigError(f"unknown multiplier label {label!r}")


@dataclass
class RunSetup:
    kind: str  # "3d" | "2d"
    sim: SimConfig
    initial: dict
    out_prefix: str


_TOP_KEYS = {"grid", "multiplier", "time", "dissipation", "output", "initial"}
_GRID_KEYS = {"n"}
_TIME_KEYS = {"dt", "t_end"}
_DISS_KEYS = {"nu", "b"}
_OUTPUT_KEYS = {"every", "snapshot_every", "hs", "prefix", "y1_ceiling"}
_INITIAL_KEYS = {
    "preset", "seed", "decay", "amplitude", "A", "B", "C",
    "component", "axis", "wavenumber", "path", "j_seed", "j_amplitude",
}


def parse_config(path) -> RunSetup:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"malformed config {path}: {err}") from None
    _check_keys(raw, _TOP_KEYS, "config")
    for sect in ("grid", "multiplier", "time", "initial"):
        if sect not in raw:
            raise ConfigError(f"config is missing the [{sect}] section")

    _check_keys(raw["grid"], _GRID_KEYS, "[grid]")
    dims = tuple(int(n) for n in raw["grid"]["n"])
    try:
        grid = Grid(dims)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    kind = "3d" if grid.ndim == 3 else "2d"

    spec = parse_multiplier(raw["multiplier"])

    _check_keys(raw["time"], _TIME_KEYS, "[time]")
    dt = float(raw["time"]["dt"])
    t_end = float(raw["time"]["t_end"])

    diss = None
    if "dissipation" in raw:
        _check_keys(raw["dissipation"], _DISS_KEYS, "[dissipation]")
        try:
            diss = Dissipation(float(raw["dissipation"]["nu"]), float(raw["dissipation"]["b"]))
        except ValueError as err:
            raise ConfigError(str(err)) from None

    out = raw.get("output", {})
    _check_keys(out, _OUTPUT_KEYS, "[output]")

    _check_keys(raw["initial"], _INITIAL_KEYS, "[initial]")

    try:
        sim = SimConfig(
            grid=grid,
            multiplier=spec,
            dt=dt,
            t_end=t_end,
            output_every=int(out.get("every", 1)),
            dissipation=diss,
            snapshot_every=int(out.get("snapshot_every", 0)),
            hs_norms=tuple(float(s) for s in out.get("hs", [2.5])),
            y1_ceiling=float(out.get("y1_ceiling", 1e6)),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return RunSetup(kind=kind, sim=sim, initial=dict(raw["initial"]),
                    out_prefix=str(out.get("prefix", "run")))


def _build_initial_3d(grid: Grid, initial: dict, seed_override: int | None):
    preset = initial.get("preset", "random")
    if preset == "abc":
        return abc_field(grid, float(initial.get("A", 1.0)),
                         float(initial.get("B", 1.0)), float(initial.get("C", 1.0)))
    if preset == "single_mode":
        return single_mode_field(
            grid,
            component=int(initial.get("component", 2)),
            axis=int(initial.get("axis", 0)),
            wavenumber=int(initial.get("wavenumber", 1)),
            amplitude=float(initial.get("amplitude", 1.0)),
        )
    if preset == "random":
        seed = int(initial.get("seed", 0)) if seed_override is None else seed_override
        return random_divfree_field(
            grid, seed,
            decay=float(initial.get("decay", 3.0)),
            amplitude=float(initial.get("amplitude", 0.5)),
        )
    if preset == "snapshot":
        B = load_snapshot_3d(initial["path"])
        if B.grid != grid:
            raise ConfigError(
                f"snapshot grid {B.grid.dims} does not match config grid {grid.dims}"
            )
        return B
    raise ConfigError(f"unknown 3-D initial preset {preset!r}")


def _build_initial_2d(grid: Grid, initial: dict, seed_override: int | None) -> ReducedState:
    preset = initial.get("preset", "random")
    if preset == "single_mode":
        x, _ = grid.axes()
        wn = int(initial.get("wavenumber", 1))
        amp = float(initial.get("amplitude", 1.0))
        bz = SpectralScalarField.from_physical(grid, np.broadcast_to(amp * np.cos(wn * x), grid.dims).copy())
        return ReducedState(0.0, bz, SpectralScalarField.zeros(grid))
    if preset == "random":
        seed = int(initial.get("seed", 0)) if seed_override is None else seed_override
        bz = random_scalar_field(grid, seed,
                                 decay=float(initial.get("decay", 3.0)),
                                 amplitude=float(initial.get("amplitude", 0.5)))
        j_amp = float(initial.get("j_amplitude", 0.0))
        if j_amp > 0:
            j = random_scalar_field(grid, int(initial.get("j_seed", seed + 1)),
                                    decay=float(initial.get("decay", 3.0)), amplitude=j_amp)
        else:
            j = SpectralScalarField.zeros(grid)
        return ReducedState(0.0, bz, j)
    if preset == "snapshot":
        bz, j = load_snapshot_2d(initial["path"])
        if bz.grid != grid:
            raise ConfigError(
                f"snapshot grid {bz.grid.dims} does not match config grid {grid.dims}"
            )
        return ReducedState(0.0, bz, j)
    raise ConfigError(f"unknown 2-D initial preset {preset!r}")


class _Manifest:
    def __init__(self, path: Path, payload: dict):
        self.path = path
        self.payload = dict(payload)
        self.payload["version"] = __version__
        self.payload["start_time"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.payload["outputs"] = []

    def add(self, p: Path):
        self.payload["outputs"].append(str(p))

    def finish(self, status: str):
        self.payload["end_time"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.payload["status"] = status
        self.path.write_text(json.dumps(self.payload, indent=2, default=str) + "\n")


def _cmd_run(args, kind: str) -> int:
    setup = parse_config(args.config)
    if setup.kind != kind:
        raise ConfigError(
            f"config grid is {setup.kind} but the {kind} runner was invoked"
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = setup.out_prefix
    csv_path = out_dir / f"{prefix}_diagnostics.csv"
    manifest = _Manifest(out_dir / f"{prefix}_manifest.json", {
        "command": kind,
        "config_file": str(args.config),
        "config": _config_dict(setup),
        "seed": args.seed,
        "threads": args.threads,
    })
    manifest.add(csv_path)

    cfg = setup.sim
    status = "ok"
    code = 0
    with open(csv_path, "w") as fh:
        fh.write(csv_header(cfg.hs_norms) + "\n")

        def sink(rec):
            fh.write(csv_row(rec, cfg.hs_norms) + "\n")

        def snap_sink(idx, state):
            p = out_dir / f"{prefix}_snap_{idx:06d}.bin"
            if kind == "3d":
                save_snapshot_3d(p, state.B)
            else:
                save_snapshot_2d(p, state.bz, state.j)
            manifest.add(p)

        try:
            if kind == "3d":
                B0 = _build_initial_3d(cfg.grid, setup.initial, args.seed)
                run(cfg, B0, sink=sink, snapshot_sink=snap_sink)
            else:
                state0 = _build_initial_2d(cfg.grid, setup.initial, args.seed)
                run_reduced(cfg, state0, sink=sink, snapshot_sink=snap_sink)
        except BlowUpError as err:
            print(f"blow-up detected at t={err.t:g}: {err}", file=sys.stderr)
            status = "blow-up"
            code = 2
    manifest.finish(status)
    return code


def _config_dict(setup: RunSetup) -> dict:
    cfg = setup.sim
    d = {
        "grid": list(cfg.grid.dims),
        "multiplier": cfg.multiplier.label(),
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "output_every": cfg.output_every,
        "snapshot_every": cfg.snapshot_every,
        "hs": list(cfg.hs_norms),
        "y1_ceiling": cfg.y1_ceiling,
        "initial": setup.initial,
    }
    if cfg.dissipation is not None:
        d["dissipation"] = {"nu": cfg.dissipation.nu, "b": cfg.dissipation.b}
    return d


def _cmd_verify(args) -> int:
    resolutions = tuple(int(r) for r in args.resolutions.split(","))
    if args.estimate == "comm1":
        spec = parse_multiplier_label(args.spec)
        report = verify_comm1(spec, args.samples, resolutions, seed=args.seed or 0)
    elif args.estimate == "comm3":
        if args.a is None:
            raise ConfigError("comm3 requires --a")
        report = verify_comm3(args.a, args.samples, resolutions, seed=args.seed or 0)
    elif args.estimate == "comm4":
        if args.s is None:
            raise ConfigError("comm4 requires --s")
        report = verify_comm4(args.samples, args.s, resolutions, seed=args.seed or 0)
    elif args.estimate == "embedding":
        if args.s is None:
            raise ConfigError("embedding requires --s")
        report = verify_embedding(args.samples, args.s, resolutions[-1], seed=args.seed or 0)
    else:
        raise ConfigError(f"unknown estimate {args.estimate!r}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"verify_{args.estimate}.csv"
    with open(path, "w") as fh:
        fh.write("name,resolution,sample,ratio\n")
        for n in report.resolutions:
            for i, r in enumerate(report.sample_ratios[n]):
                fh.write(f"{report.name},{n},{i},{r!r}\n")
    summary = (
        f"{report.name}: samples={report.samples} max_ratio={report.max_ratio:.6g} "
        f"by_resolution={[f'{r:.6g}' for r in report.ratio_by_resolution]} "
        f"degenerate={report.degenerate} violations={report.violations}"
    )
    print(summary)
    print(f"wrote {path}")
    return 0


def _cmd_advect(args) -> int:
    B = load_snapshot_3d(args.snapshot)
    spec = parse_multiplier_label(args.spec)
    raw = np.loadtxt(args.seeds, delimiter=",", skiprows=1, ndmin=2)
    seeds = raw[:, 1:4]  # columns s,x,y,z
    flow = advect(spec, B, seeds, args.dt, args.t_end,
                  upsample=args.upsample, exact=args.exact)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "flowmap.csv"
    det = flow.volume_determinants()
    with open(path, "w") as fh:
        fh.write("s,x,y,z,det_gradX\n")
        for i in range(seeds.shape[0]):
            vals = [raw[i, 0], *flow.positions[i], det[i]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    print(f"wrote {path} (t={flow.t:g}, max |det-1| = {np.max(np.abs(det - 1)):.3e})")
    return 0


def _cmd_diagnose(args) -> int:
    spec = parse_multiplier_label(args.spec)
    hs = tuple(float(s) for s in args.hs.split(","))
    print(csv_header(hs))
    for p in args.snapshots:
        magic = snapshot_magic(p)
        if magic == "AVEC1":
            B = load_snapshot_3d(p)
            rec = make_record_3d(spec, args.t, B, hs, 0.0)
        elif magic == "AVEC2":
            bz, j = load_snapshot_2d(p)
            rec = make_record_2d(spec, args.t, bz, j, hs, 0.0)
        else:
            raise ConfigError(f"{p}: unrecognized snapshot magic {magic!r}")
        print(csv_row(rec, hs))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="avector", description=__doc__.split("\n")[0])
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get("AVECTOR_THREADS", "1")),
                    help="FFT worker count (env AVECTOR_THREADS)")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("run3d", "run2d"):
        p = sub.add_parser(name, help=f"integrate the {name[3:]} system from a config file")
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".")

    p = sub.add_parser("verify", help="run one estimate of the inequality lab")
    p.add_argument("--estimate", required=True,
                   choices=["comm1", "comm3", "comm4", "embedding"])
    p.add_argument("--spec", default="power:2", help="multiplier label, e.g. power:1.5")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--resolutions", default="8,16")
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")

    p = sub.add_parser("advect", help="advect seeds through a steady snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--seeds", required=True, help="CSV with columns s,x,y,z")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", dest="t_end", type=float, default=0.1)
    p.add_argument("--upsample", type=int, default=4)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--out", default=".")

    p = sub.add_parser("diagnose", help="recompute diagnostics from snapshots")
    p.add_argument("snapshots", nargs="+")
    p.add_argument("--spec", required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--hs", default="2.5")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    set_fft_workers(max(1, args.threads))
    try:
        if args.command == "run3d":
            return _cmd_run(args, "3d")
        if args.command == "run2d":
            return _cmd_run(args, "2d")
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "advect":
            return _cmd_advect(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
    except (ConfigError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
