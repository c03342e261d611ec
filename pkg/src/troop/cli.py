"""
Command-line entry point: ``troop <subcommand> [--config PATH] ...``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
Outputs are written atomically to the configured or ``--out`` paths, or to
stdout when no path is given.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings

import numpy as np

from .angular import line_strengths
from .config import RunConfig, parse_config
from .dynamics import run_ensemble
from .errors import NumericalError, ValidationError
from .force import TrapModel
from .optics import aggregate_field
from .trapchar import SCAN_COLUMNS, characterize, scan

# experimentally inferred trap efficiency and spring constant, echoed next to model values
REFERENCE_MU = 0.1
REFERENCE_KAPPA = 5e-21  # J/m^2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_output(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename; stdout if ``path`` is empty."""
    if not path or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".troop-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _vector(text: str, name: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ValidationError(f"--{name}: expected x,y,z") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValidationError(f"--{name}: expected three finite numbers")
    return v


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- subcommands -------------------------------------------------------------

def cmd_field(cfg: RunConfig, args) -> None:
    spec = cfg.transition_spec()
    beams = cfg.beamset()
    model = TrapModel(beams, spec, pumping=cfg.operating.pumping)
    n = args.n
    if n < 1 or not args.extent > 0:
        raise ValidationError("--n must be >= 1 and --extent positive")
    axis = np.linspace(-args.extent, args.extent, n) if n > 1 else np.zeros(1)
    grid = np.array(np.meshgrid(axis, axis, axis, indexing="ij")).reshape(3, -1).T
    if args.force:
        ev = model.evaluate(grid)
        rows = [(*p, *f, s) for p, f, s in zip(grid, ev.force, ev.scatter_total)]
        text = _csv_text(("x", "y", "z", "Fx", "Fy", "Fz", "scatter_rate"), rows)
    else:
        ev = model.evaluate(grid)
        rows = []
        for p, ax in zip(grid, ev.axes):
            lf = aggregate_field(beams, p, ax)
            rows.append((*p, lf.I_sigma_plus, lf.I_sigma_minus, lf.I_pi, *ax))
        text = _csv_text(("x", "y", "z", "I_sigma_plus", "I_sigma_minus", "I_pi", "axis_x", "axis_y", "axis_z"),
                         rows)
    write_output(args.out or cfg.output.field_csv, text)


def cmd_pump(cfg: RunConfig, args) -> None:
    spec = cfg.transition_spec()
    lines = line_strengths(spec)
    if args.dump_lines:
        text = _csv_text(("m", "q", "numerator", "denominator"), lines.rows())
    else:
        model = TrapModel(cfg.beamset(), spec, lines, pumping=cfg.operating.pumping)
        r = _vector(args.at, "at")
        v = _vector(args.v, "v")
        pops = model.evaluate(r[None, :], v[None, :]).populations[0]
        text = _csv_text(("m", "pi_m"), zip(lines.jg.projections(), pops))
    write_output(args.out or cfg.output.pump_csv, text)


def cmd_characterize(cfg: RunConfig, args) -> None:
    model = TrapModel(cfg.beamset(), cfg.transition_spec(), pumping=cfg.operating.pumping)
    ch = characterize(model)
    out = ch.to_dict()
    out["mu_reference"] = REFERENCE_MU
    out["kappa_reference"] = REFERENCE_KAPPA
    write_output(args.out or cfg.output.characterize_json, _json(out))


def cmd_scan(cfg: RunConfig, args) -> None:
    if args.detunings:
        try:
            lo, hi, n = args.detunings.split(":")
            dets = list(np.linspace(float(lo), float(hi), int(n)) * cfg.transition.gamma)
        except ValueError:
            raise ValidationError("--detunings: expected start:stop:count in units of Gamma") from None
    else:
        dets = None
    rabis = None
    if args.rabis is not None:
        try:
            rabis = [float(x) * cfg.transition.gamma for x in args.rabis.split(",") if x.strip()]
        except ValueError:
            raise ValidationError("--rabis: expected comma-separated values in units of Gamma") from None
    if dets is None or rabis is None:
        d0, r0 = cfg.scan_grid()
        dets = d0 if dets is None else dets
        rabis = r0 if rabis is None else rabis
    if not dets or not rabis:
        raise ValidationError("scan: range is empty")
    rows = scan(cfg.beamset(), cfg.transition_spec(), dets, rabis, temperature=cfg.scan_temperature(),
                diffusion_factor=cfg.simulate.diffusion_factor)
    text = _csv_text(SCAN_COLUMNS, ([row[c] for c in SCAN_COLUMNS] for row in rows))
    write_output(args.out or cfg.output.scan_csv, text)


def cmd_simulate(cfg: RunConfig, args) -> None:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n_atoms is not None:
        overrides["n_atoms"] = args.n_atoms
    if args.n_steps is not None:
        overrides["n_steps"] = args.n_steps
    traj_path = args.trajectory or cfg.output.trajectory_csv
    if traj_path and cfg.simulate.record_stride == 0 and "record_stride" not in overrides:
        overrides["record_stride"] = max(1, cfg.simulate.n_steps // 100)
    params = cfg.sim_params(**overrides)
    model = TrapModel(cfg.beamset(), cfg.transition_spec(), pumping=cfg.operating.pumping)
    ch = characterize(model)
    damping = float(np.max(np.abs(np.linalg.eigvals(ch.friction)))) / params.mass
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = run_ensemble(params, model, damping_rate=damping)
    stats = res.stats.to_dict()
    out = dict(stats=stats, stiffness_diagonal=np.diag(ch.stiffness).tolist(),
               mu_xi=ch.mu_xi, mu_z=ch.mu_z, mu_reference=REFERENCE_MU, kappa_reference=REFERENCE_KAPPA,
               escape_fraction=float(((np.linalg.norm(res.r, axis=1) > cfg.simulate.boundary) | res.lost).mean()),
               seed=params.seed, n_atoms=params.n_atoms, n_steps=params.n_steps, dt=params.dt,
               warnings=[str(w.message) for w in caught])
    write_output(args.out or cfg.output.stats_json, _json(out))
    if traj_path:
        write_output(traj_path, _csv_text(res.TRAJECTORY_COLUMNS, res.trajectory))


COMMANDS = {"field": cmd_field, "pump": cmd_pump, "characterize": cmd_characterize,
            "scan": cmd_scan, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="configuration file (INI sections, see troop.config)")
    common.add_argument("--out", help="output path (default: config [output] entry or stdout)")
    parser = _Parser(prog="troop", description="Optical-pumping radiation-pressure trap simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("field", parents=[common], help="light field or force on a cubic grid (CSV)")
    p.add_argument("--extent", type=float, default=1e-3, help="grid half-width, m")
    p.add_argument("--n", type=int, default=5, help="points per axis")
    p.add_argument("--force", action="store_true", help="emit forces instead of intensities")

    p = sub.add_parser("pump", parents=[common], help="steady-state populations at a point (CSV)")
    p.add_argument("--at", default="0,0,0", help="position x,y,z in m")
    p.add_argument("--v", default="0,0,0", help="velocity vx,vy,vz in m/s")
    p.add_argument("--dump-lines", action="store_true", help="dump the line-strength table instead")

    sub.add_parser("characterize", parents=[common], help="stiffness, friction and mu (JSON)")

    p = sub.add_parser("scan", parents=[common], help="stiffness and radius over detuning x Rabi (CSV)")
    p.add_argument("--detunings", help="start:stop:count in units of Gamma (write --detunings=-1:-3:12 for negative values)")
    p.add_argument("--rabis", help="comma-separated Rabi frequencies in units of Gamma")

    p = sub.add_parser("simulate", parents=[common], help="Langevin ensemble (JSON stats)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-atoms", type=int)
    p.add_argument("--n-steps", type=int)
    p.add_argument("--trajectory", help="trajectory CSV path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = parse_config("")
        COMMANDS[args.command](cfg, args)
    except (ValidationError, OSError) as exc:
        print(f"troop: error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"troop: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
