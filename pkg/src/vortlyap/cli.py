"""Command-line interface.

Exit codes: 0 success, 1 validation or input error, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, config_hash, git_blob_hash, load_config
from .fieldio import read_field, read_trajectory, write_field
from .functionals import BesovParams, besov_norm, lp_norm, q_p
from .littlewood_paley import build_partition, decompose, write_partition_csv
from .monitor import monitor_besov, monitor_lp, write_rows_csv
from .solver import NumericalAbort
from .spectral import SpectralField, dft_forward, make_grid, random_divfree_field, shell_field
from .svgplot import plot_csv

log = logging.getLogger("vortlyap")

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2


def _spectral(f) -> SpectralField:
    return f if isinstance(f, SpectralField) else dft_forward(f)


def _input_hashes(cfg_path: Path, extra: list[Path] = ()) -> dict:
    hashes = {"config": git_blob_hash(cfg_path.read_bytes())}
    if extra:
        hashes["trajectory"] = git_blob_hash(b"".join(p.read_bytes() for p in extra))
    return hashes


def _dump(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _trajectory(cfg: ExperimentConfig):
    tdir = cfg.output_dir() / "trajectory"
    snaps = read_trajectory(tdir)
    return snaps, sorted(tdir.glob("snap_*"))


# --- commands -------------------------------------------------------------------------


def cmd_field(args) -> int:
    grid = make_grid(args.dim, args.n, args.box_length)
    if args.kind == "shell":
        f = shell_field(grid, args.radius, seed=args.seed, amplitude=args.amplitude, ncomp=args.ncomp)
    elif args.kind == "random":
        f = random_divfree_field(grid, args.seed, args.slope, args.amplitude, args.peak_band)
    else:
        from .solver import taylor_green_vorticity

        f = taylor_green_vorticity(grid, args.amplitude)
    write_field(f, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    fh = _spectral(read_field(args.field))
    part = build_partition(fh.grid)
    dec = decompose(fh, part)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for j, band in dec.bands:
        write_field(band, out / f"band_{j:+d}.vlf")
    write_field(dec.residual_low, out / "low.vlf")
    rows = [{"j": j, "band_l2_sq": e} for j, e in dec.band_energies().items()]
    rows.append({"j": "low", "band_l2_sq": dec.residual_low.l2_norm() ** 2})
    write_rows_csv(rows, ["j", "band_l2_sq"], out / "band_energies.csv")
    write_partition_csv(part, out / "partition.csv")
    print(f"wrote {len(dec.bands)} bands to {out}")
    return EXIT_OK


def cmd_norm(args) -> int:
    fh = _spectral(read_field(args.field))
    if args.besov:
        params = BesovParams.parse(args.besov)
        value = besov_norm(fh, params, build_partition(fh.grid))
        print(f"{params.label()} {value!r}")
    elif args.lp is not None:
        print(f"L{args.lp:g} {lp_norm(fh, args.lp)!r}")
    else:
        print(f"Q{args.qp:g} {q_p(fh, args.qp)!r}")
    return EXIT_OK


def cmd_solve(args) -> int:
    from .experiments import solve

    cfg = load_config(args.config)
    traj = solve(cfg)
    print(f"{len(traj.snapshots)} records written to {cfg.output_dir() / 'trajectory'}")
    if traj.aborted:
        print(f"numerical abort: {traj.aborted}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_monitor_lp(args) -> int:
    cfg = load_config(args.config)
    if args.p < 2 or args.m < 3:
        raise ConfigError("--p/--m", "need p >= 2 and m >= 3")
    snaps, files = _trajectory(cfg)
    rep = monitor_lp(snaps, args.p, args.m, cfg.solver.nu)
    out = cfg.output_dir()
    stem = f"monitor_lp_p{args.p:g}_m{args.m}"
    write_rows_csv(rep.rows, rep.columns, out / f"{stem}.csv")
    summary = dict(rep.summary, config_hash=config_hash(cfg), input_hashes=_input_hashes(Path(args.config), files))
    _dump(summary, out / f"{stem}.json")
    print(json.dumps(rep.summary, sort_keys=True))
    return EXIT_OK


def cmd_monitor_besov(args) -> int:
    from .config import check_besov_hypotheses

    cfg = load_config(args.config)
    params = BesovParams(args.s, args.p, args.q)
    check_besov_hypotheses(params, "--s/--p/--q")
    snaps, files = _trajectory(cfg)
    part = build_partition(snaps[0].omega_hat.grid)
    rep = monitor_besov(snaps, params, part, cfg.solver.nu)
    out = cfg.output_dir()
    stem = f"monitor_besov_s{args.s:g}_p{args.p:g}_q{args.q:g}"
    write_rows_csv(rep.rows, rep.columns, out / f"{stem}.csv")
    write_rows_csv(rep.band_rows, rep.band_columns, out / f"{stem}_bands.csv")
    summary = dict(rep.summary, config_hash=config_hash(cfg), input_hashes=_input_hashes(Path(args.config), files))
    _dump(summary, out / f"{stem}.json")
    print(json.dumps(rep.summary, sort_keys=True))
    return EXIT_OK


def cmd_dissipativity(args) -> int:
    from .experiments import DissipativityReport, dissipativity_experiment

    cfg = load_config(args.config)
    rep = dissipativity_experiment(cfg)
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(rep.rows, DissipativityReport.columns, out / "dissipativity.csv")
    _dump(dict(rep.summary, input_hashes=_input_hashes(Path(args.config))), out / "dissipativity.json")
    for e in rep.summary["scales"]:
        fr = ", ".join(f"{k} {e[k]['violation_fraction']:.3f}" for k in e if k.startswith("p="))
        print(f"amplitude {e['amplitude']:g}: violation fraction {fr}")
    return EXIT_OK


def cmd_lemmas(args) -> int:
    from .experiments import lemma_suite, write_lemma_report

    cfg = load_config(args.config)
    rep = lemma_suite(cfg)
    out = cfg.output_dir()
    write_lemma_report(rep, out)
    failed = sum(r["failed"] for r in rep.summary)
    _dump({"config_hash": config_hash(cfg), "input_hashes": _input_hashes(Path(args.config)),
           "checks": len(rep.summary), "failed": failed}, out / "lemmas.json")
    print(f"{len(rep.summary)} checks, {failed} exact-identity failures")
    return EXIT_OK


def cmd_plot(args) -> int:
    cols = args.columns.split(",") if args.columns else None
    names = plot_csv(args.csv, args.out, columns=cols, x=args.x, log_y=args.log)
    print(f"plotted {len(names)} series to {args.out}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


def _pvalue(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vortlyap", description="Lyapunov-functional monitors for 3-D vorticity")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="write a synthetic field")
    p.add_argument("kind", choices=["shell", "random", "taylor-green"])
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--box-length", type=float, default=2 * math.pi)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=2.0, help="shell radius |k|")
    p.add_argument("--ncomp", type=int, default=None, help="shell components (default: vector)")
    p.add_argument("--peak-band", type=int, default=None)
    p.add_argument("--slope", type=float, default=-1.0)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("decompose", help="split a field into dyadic bands")
    p.add_argument("field")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("norm", help="evaluate a norm of a stored field")
    p.add_argument("field")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--besov", metavar="S,P,Q")
    g.add_argument("--lp", type=_pvalue, metavar="P")
    g.add_argument("--qp", type=float, metavar="P")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("solve", help="integrate the configured trajectory")
    p.add_argument("config")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("monitor-lp", help="L^p Lyapunov monitor over a solved trajectory")
    p.add_argument("config")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--m", type=int, default=3)
    p.set_defaults(func=cmd_monitor_lp)

    p = sub.add_parser("monitor-besov", help="Besov Lyapunov monitor over a solved trajectory")
    p.add_argument("config")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=_pvalue, default=2.0)
    p.set_defaults(func=cmd_monitor_besov)

    p = sub.add_parser("dissipativity", help="Monte-Carlo sign study of the dissipativity pairing")
    p.add_argument("config")
    p.set_defaults(func=cmd_dissipativity)

    p = sub.add_parser("lemmas", help="run the inequality checkers over a seed corpus")
    p.add_argument("config")
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("plot", help="SVG line plot of a CSV")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--x", default=None, help="x column (default: first)")
    p.add_argument("--columns", default=None, help="comma-separated y columns")
    p.add_argument("--log", action="store_true", help="log10 y axis")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, ValueError, KeyError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
