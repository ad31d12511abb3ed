"""Command-line entry point.

    mesop run    --scenario <file|preset:name[?k=v&...]> --steps N --every M --out DIR
    mesop render --frames DIR --out DIR --size WxH
    mesop sweep  --spec FILE --out DIR
    mesop serve  --scenario ... --port P

Exit codes: 0 ok, 1 usage, 2 divergence (last good frame kept), 3 I/O.
MESOP_THREADS caps worker pools.  All outputs are deterministic given
(inputs, seed).
"""

from __future__ import annotations

import argparse
import os
import sys
from urllib.parse import parse_qsl

from . import frames, metrics, render
from .config import ConfigError, load_scenario, save_scenario
from .engine import DivergenceError
from .scenarios import PRESETS, Scenario, ScenarioRun, apply_param, preset
from .sweep import SweepSpec, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def resolve_scenario(spec: str, dim: int | None = None) -> Scenario:
    """'preset:name[?key=val&...]' or a path to a scenario JSON file."""
    if spec.startswith("preset:"):
        name, _, query = spec[len("preset:"):].partition("?")
        kwargs = {}
        for key, val in parse_qsl(query):
            kwargs[key] = float(val)
        if dim is not None:
            kwargs["dim"] = dim
        if name not in PRESETS:
            raise UsageError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        return preset(name, **kwargs)
    if not os.path.exists(spec):
        raise UsageError(f"scenario file not found: {spec}")
    return load_scenario(spec)


def cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario, args.dim)
    for setting in args.set or []:
        path, _, value = setting.partition("=")
        if not value:
            raise UsageError(f"--set wants path=value, got {setting!r}")
        apply_param(scenario, path, float(value))
    if args.seed is not None:
        scenario.rng_seed = args.seed
    steps = args.steps if args.steps is not None else scenario.duration
    os.makedirs(args.out, exist_ok=True)

    run = ScenarioRun(scenario)
    hints = scenario.analysis
    gh = hints.ground_height if hints.ground_height is not None else 0.0
    metrics_rows = []
    prev_sample = None  # (step, above_ground_count) for the ooze rate

    def save_frame(state):
        nonlocal prev_sample
        rec = frames.FrameRecord.from_state(state)
        path = os.path.join(args.out, frames.frame_filename(state.step_count, args.format))
        frames.write_frame(path, rec, args.format)
        if args.metrics:
            n_above = metrics.above_ground_count(state, gh)
            ooze = None
            if prev_sample is not None and state.step_count > prev_sample[0]:
                elapsed = (state.step_count - prev_sample[0]) * state.dt
                ooze = (prev_sample[1] - n_above) / elapsed
            prev_sample = (state.step_count, n_above)
            report = metrics.compute_report(
                state, hints.ground_height, hints.flow_axis,
                hints.contact_radius, ooze_rate=ooze)
            metrics_rows.append(report.csv_row())

    save_frame(run.state)
    exit_code = EXIT_OK
    try:
        done = 0
        while done < steps:
            chunk = min(args.every, steps - done)
            run.run(chunk, parallel=args.parallel)
            done += chunk
            save_frame(run.state)
    except DivergenceError as err:
        print(f"diverged: {err}", file=sys.stderr)
        exit_code = EXIT_DIVERGED
    if args.metrics:
        with open(os.path.join(args.out, "metrics.csv"), "w", newline="") as fh:
            fh.write(metrics.RegimeReport.csv_header() + "\n")
            fh.write("\n".join(metrics_rows) + "\n")
    return exit_code


def cmd_render(args) -> int:
    try:
        width, height = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise UsageError(f"--size wants WxH, got {args.size!r}") from None
    bounds = None
    if args.bounds:
        parts = [float(v) for v in args.bounds.split(",")]
        if len(parts) != 4:
            raise UsageError("--bounds wants x0,y0,x1,y1")
        bounds = tuple(parts)
    names = sorted(
        n for n in os.listdir(args.frames) if n.endswith((".mpf", ".csv")))
    if not names:
        raise UsageError(f"no frames in {args.frames}")
    os.makedirs(args.out, exist_ok=True)
    for name in names:
        rec = frames.read_frame(os.path.join(args.frames, name))
        img = render.render_frame(rec, (width, height), bounds, args.radius)
        stem = os.path.splitext(name)[0]
        render.write_pgm(img, os.path.join(args.out, stem + ".pgm"))
    return EXIT_OK


def cmd_sweep(args) -> int:
    with open(args.spec) as fh:
        spec = SweepSpec.from_json(fh.read())
    os.makedirs(args.out, exist_ok=True)

    def progress(cell):
        status = "failed" if cell.failed else cell.label
        print(f"cell ({cell.i},{cell.j}) {spec.axis1.path}={cell.value1:g}"
              + (f" {spec.axis2.path}={cell.value2:g}" if cell.value2 is not None else "")
              + f" -> {status}")

    bmap = run_sweep(spec, workers=args.workers, out_dir=args.out,
                     resume=args.resume, progress=progress)
    with open(os.path.join(args.out, "map.csv"), "w", newline="") as fh:
        fh.write(bmap.to_csv())
    with open(os.path.join(args.out, "map.ppm"), "wb") as fh:
        fh.write(bmap.to_ppm())
    import json as _json
    with open(os.path.join(args.out, "provenance.json"), "w") as fh:
        _json.dump(bmap.provenance, fh, indent=2)
    return EXIT_OK


def cmd_serve(args) -> int:
    scenario = resolve_scenario(args.scenario, args.dim)
    if not 0 < args.port < 65536:
        raise UsageError(f"bad port {args.port}")
    from .server import serve
    serve(scenario, port=args.port, cadence_fps=args.fps)
    return EXIT_OK


def cmd_export(args) -> int:
    scenario = resolve_scenario(args.scenario, args.dim)
    save_scenario(scenario, args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="mesop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario, write frames")
    run.add_argument("--scenario", required=True)
    run.add_argument("--steps", type=int, default=None)
    run.add_argument("--every", type=int, default=500)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--format", choices=("bin", "csv"), default="bin")
    run.add_argument("--metrics", action="store_true")
    run.add_argument("--parallel", action="store_true")
    run.add_argument("--dim", type=int, choices=(2, 3), default=None)
    run.add_argument("--set", action="append", metavar="PATH=VALUE")
    run.set_defaults(func=cmd_run)

    rnd = sub.add_parser("render", help="rasterize frames to PGM")
    rnd.add_argument("--frames", required=True)
    rnd.add_argument("--out", required=True)
    rnd.add_argument("--size", default="640x480")
    rnd.add_argument("--bounds", default=None)
    rnd.add_argument("--radius", type=float, default=0.5)
    rnd.set_defaults(func=cmd_render)

    swp = sub.add_parser("sweep", help="run a parameter sweep")
    swp.add_argument("--spec", required=True)
    swp.add_argument("--out", required=True)
    swp.add_argument("--workers", type=int, default=None)
    swp.add_argument("--resume", action="store_true")
    swp.set_defaults(func=cmd_sweep)

    srv = sub.add_parser("serve", help="stream a live simulation over WebSocket")
    srv.add_argument("--scenario", required=True)
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--fps", type=float, default=25.0)
    srv.add_argument("--dim", type=int, choices=(2, 3), default=None)
    srv.set_defaults(func=cmd_serve)

    exp = sub.add_parser("export", help="write a scenario as a JSON config")
    exp.add_argument("--scenario", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--dim", type=int, choices=(2, 3), default=None)
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
