"""Command line front end for the harness."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import MeasurePair, load_pair, tanh_pair
from .harness import (
    SUITES,
    ExperimentConfig,
    HarnessError,
    load_config,
    run_approximation_study,
    run_reversal_study,
    run_simulate,
    run_suite,
    write_table,
)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.paths is not None:
        cfg.paths = args.paths
    if args.out is not None:
        cfg.out = args.out
    if args.dt is not None:
        cfg.dt = args.dt
    return cfg


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--paths", type=int, help="ensemble size")
    p.add_argument("--out", help="output directory or file")
    p.add_argument("--dt", type=float, help="output grid spacing")


def cmd_simulate(args) -> int:
    files = run_simulate(_config(args))
    print(f"wrote {len(files)} files")
    return 0


def cmd_curve(args) -> int:
    from .loewner import extract_curve, read_path_csv, write_curve_csv

    path = read_path_csv(args.path)
    out = args.out or str(Path(args.path).with_name(Path(args.path).name.replace("path", "curve", 1)))
    write_curve_csv(out, extract_curve(path))
    print(out)
    return 0


def cmd_observable(args) -> int:
    """eta and U of a point along a saved driving path; the force point
    columns of the path file pair up with the masses of the config's
    measure pair."""
    from .loewner import forward_flow, read_path_csv
    from .observable import eta_bv, u_process

    cfg = _config(args)
    pair = cfg.atomic_pair()
    path = read_path_csv(args.path)
    z = complex(*(float(v) for v in args.point.split(",")))
    tp = forward_flow(path, z)
    _, ms, sides = pair.force_points()
    V = path.force if path.force is not None else np.zeros((path.n + 1, 0))
    if V.shape[1] != len(ms):
        raise HarnessError("force point columns do not match the measure pair")
    eta = eta_bv(tp.g, path.W, V[:, sides < 0], ms[sides < 0], V[:, sides > 0], ms[sides > 0])
    f = tp.g - path.W
    C = np.log(z.imag) - np.log(tp.g.imag) + tp.logd.real
    out = args.out or "observable.csv"
    write_table(out, ["t", "eta", "U", "C", "re_f", "im_f"], np.column_stack([path.t, eta, u_process(eta, f), C, f.real, f.imag]))
    print(out)
    return 0


def cmd_study(args) -> int:
    cfg = _config(args)
    pair = cfg.pair() if cfg.boundary is not None else (tanh_pair() if args.kind == "approx" else MeasurePair())
    if args.pair:
        pair = load_pair(args.pair)
    if args.kind == "approx":
        rep = run_approximation_study(pair, tuple(args.resolutions), paths=cfg.paths, T=cfg.T, dt=cfg.dt, seed=cfg.seed, out=cfg.out)
    else:
        rep = run_reversal_study(pair, paths=cfg.paths, T=cfg.T, dt=cfg.dt, seed=cfg.seed, out=cfg.out)
    _print_report(rep)
    return 0 if rep.passed else 1


def cmd_suite(args) -> int:
    params = {}
    if args.seed is not None:
        params["seed"] = args.seed
    if args.paths is not None:
        key = {"dgff": "samples", "mono": "samples", "loewner-oracle": None}.get(args.name, "paths")
        if key:
            params[key] = args.paths
    if args.dt is not None and args.name in ("qv", "bm", "bessel", "approx", "reversal", "loewner-oracle"):
        params["dt"] = args.dt
    rep = run_suite(args.name, out=args.out, **params)
    _print_report(rep)
    return 0 if rep.passed else 1


def cmd_dgff(args) -> int:
    from . import dgff

    seed = args.seed or 0
    lat = dgff.Lattice(args.size, args.size, boundary=dgff.chordal_function())
    out = Path(args.out or "dgff_out")
    out.mkdir(parents=True, exist_ok=True)
    if args.action == "sample":
        f = dgff.sample(lat, seed)
        np.savetxt(out / "field.csv", f.values, delimiter=",", fmt="%.17g")
        it = dgff.extract_interface(f)
        rows = [[a[0], a[1], b[0], b[1]] for a, b in it.crossed]
        write_table(out / "interface_edges.csv", ["j_neg", "i_neg", "j_pos", "i_pos"], rows)
        print(f"interface with {len(rows)} edges written to {out}")
        return 0
    from .harness import mono_report

    r = mono_report(args.size, args.paths or 200, seed + 1)
    (out / "mono.json").write_text(json.dumps(r, indent=2) + "\n")
    print(json.dumps(r))
    return 0 if r["ordering_frequency"] >= 0.95 else 1


def _print_report(rep) -> None:
    d = rep.to_dict()
    print(f"{d['scenario']}: {'PASS' if d['passed'] else 'FAIL'}")
    for k, v in d["flags"].items():
        print(f"  {k}: {'pass' if v else 'fail'}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levelline", description="Level-line simulator and verification suites")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an ensemble and write CSV files")
    _common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("curve", help="rebuild the curve of a saved driving path")
    p.add_argument("path", help="driving path CSV (t,W,V1..)")
    p.add_argument("--out", help="curve CSV to write")
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("observable", help="observable of a point along a saved driving path")
    p.add_argument("path", help="driving path CSV")
    p.add_argument("--point", default="0,1", help="point as re,im")
    _common(p)
    p.set_defaults(fn=cmd_observable)

    p = sub.add_parser("study", help="approximation or reversal study")
    p.add_argument("kind", choices=("approx", "reversal"))
    p.add_argument("--pair", help="measure pair JSON (overrides the config)")
    p.add_argument("--resolutions", type=int, nargs="+", default=[4, 8, 16, 32])
    _common(p)
    p.set_defaults(fn=cmd_study)

    p = sub.add_parser("suite", help="run a named verification suite")
    p.add_argument("name", choices=SUITES)
    _common(p)
    p.set_defaults(fn=cmd_suite)

    p = sub.add_parser("dgff", help="lattice field sample or monotonicity check")
    p.add_argument("action", choices=("sample", "mono"))
    p.add_argument("--size", type=int, default=64)
    _common(p)
    p.set_defaults(fn=cmd_dgff)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (HarnessError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
