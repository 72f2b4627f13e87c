"""Command-line orchestration: simulate, extract, evaluate, plot.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.
Every command echoes its resolved configuration to ``run.json`` in the output
directory (no timestamps, so reruns are reproducible).
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (DatasetConfig, DEFAULT_LOCATIONS, DEFAULT_NOISE_STD,
                      DEFAULT_REDUCTIONS, generate_dataset, iter_records,
                      load_index, load_record)
from .diagnose import RecordFeatures, SplitSpec, evaluate
from .errors import DataError, IbhmError, NumericalError, ValidationError
from .feature import (METHODS, ExtractionConfig, FeatureSeries, extract_method)
from .fem import SimConfig, simulate_vbi
from .model import (DamageSpec, ScenarioSpec, paper_bridges, paper_vehicle)
from .tfr import Band, cwt, inst_freq, magnitude_to_csv, synchrosqueeze
from . import viz


def _write_run_config(out_dir: Path, command: str, args: argparse.Namespace) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    echo = {k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items()) if k != "func"}
    echo["command"] = command
    echo["version"] = __version__
    (out_dir / "run.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _dataset_config(args: argparse.Namespace) -> DatasetConfig:
    bridges = paper_bridges()
    if args.bridges != "all":
        wanted = set(args.bridges.split(","))
        bridges = tuple(b for b in bridges if b.id in wanted)
        if not bridges:
            raise ValidationError(f"no bridges match {args.bridges!r}")
    return DatasetConfig(
        bridges=bridges,
        vehicle=paper_vehicle(),
        reductions=_parse_floats(args.reductions),
        locations=_parse_floats(args.locations),
        trials=args.trials,
        noise_std=args.noise_std,
        dt=args.dt,
        base_seed=args.seed,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _dataset_config(args)
    out = Path(args.out)
    _write_run_config(out, "simulate", args)
    stems = generate_dataset(config, out_dir=out, overwrite=args.overwrite,
                             jobs=args.jobs)
    print(f"wrote {len(stems)} records under {out}")
    return 0


def _extract_one(task) -> tuple[str, str]:
    data_root, out_root, stem, methods, band_text, fs_a = task
    try:
        record = load_record(Path(data_root) / f"{stem}.csv")
    except DataError as exc:
        return stem, f"missing: {exc}"
    band = Band.parse(band_text) if band_text else None
    config = ExtractionConfig(analysis_fs=fs_a)
    for method in methods:
        series = extract_method(record, method, band=band, config=config)
        target = Path(out_root) / method / f"{stem}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        series.save(target)
    return stem, ""


def cmd_extract(args: argparse.Namespace) -> int:
    data_root = Path(args.data)
    out = Path(args.out)
    entries = load_index(data_root)
    methods = list(METHODS) if args.feature == "all" else args.feature.split(",")
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown feature method {m!r}; options: {METHODS}")
    if args.band:
        Band.parse(args.band)
    _write_run_config(out, "extract", args)
    tasks = [(str(data_root), str(out), e["stem"], methods, args.band, args.analysis_fs)
             for e in entries]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_extract_one, tasks, chunksize=8))
    else:
        results = [_extract_one(t) for t in tasks]
    missing = [(stem, msg) for stem, msg in results if msg]
    (out / "index.json").write_text((data_root / "index.json").read_text())
    done = len(results) - len(missing)
    print(f"extracted {done}/{len(results)} records -> {out} (methods: {','.join(methods)})")
    for stem, msg in missing:
        print(f"  skipped {stem}: {msg}", file=sys.stderr)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    froot = Path(args.features)
    entries = load_index(froot)
    methods = list(METHODS) if args.methods == "all" else args.methods.split(",")
    records = []
    for e in entries:
        feats = {}
        for m in methods:
            path = froot / m / f"{e['stem']}.csv"
            if not path.exists():
                raise DataError(f"missing feature {path}; run extract first")
            feats[m] = FeatureSeries.load(path)
        records.append(RecordFeatures(stem=e["stem"], bridge_id=e["bridge"],
                                      r_true=e["R_s"], loc_frac=e["loc_frac"],
                                      trial=e["trial"], features=feats))
    split = SplitSpec(name=args.split, holdout=args.holdout, seed=args.seed)
    result = evaluate(records, split, methods=methods)
    out = Path(args.out)
    _write_run_config(out, "evaluate", args)
    result.table_csv(out / f"rmse_{args.split}.csv")
    result.diagnostics_csv(out / f"diagnostics_{args.split}.csv")
    for row in result.rows:
        print(f"{row.method:10s} {row.split:10s} DLE={row.dle:.4f} SRE={row.sre:.4f} "
              f"n={row.n_records}")
    return 0


def _noise_free_record(bridge, loc_frac, r_s, dt: float):
    damage = (DamageSpec.undamaged() if r_s == 0 else
              DamageSpec(x_s=loc_frac * bridge.L, l_s=0.6, R_s=r_s))
    scenario = ScenarioSpec(bridge=bridge, vehicle=paper_vehicle(), damage=damage,
                            noise_std=0.0, dt=dt, seed=0)
    return simulate_vbi(scenario, SimConfig())


def cmd_plot(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _write_run_config(out, "plot", args)
    band = Band.parse(args.band) if args.band else None
    config = ExtractionConfig()
    bridges = {b.id: b for b in paper_bridges()}

    if args.overlay == "bridges":
        rs_text, loc_text = args.damage.split(":")
        r_s, loc = float(rs_text), float(loc_text)
        raw, normed = {}, {}
        for bid, bridge in bridges.items():
            record = _noise_free_record(bridge, loc, r_s, args.dt)
            series = extract_method(record, "ours", band=band, config=config)
            pos, val = series.valid()
            normed[bid] = (pos, val)
            raw[bid] = (pos, val * series.c51)
        viz.overlay_plot(raw, out / "overlay_bridges_raw.svg", "x/L",
                         "band-limited reconstruction (m/s$^2$)", marks=[loc],
                         title=f"reduction {r_s:.0%} at x/L={loc}")
        viz.overlay_plot(normed, out / "overlay_bridges_normalized.svg", "x/L",
                         "normalised feature", marks=[loc],
                         title="after dividing by the per-bridge gain")
    elif args.overlay == "locations":
        bridge = bridges[args.bridge]
        signals, feats = {}, {}
        for loc in _parse_floats(args.locations):
            record = _noise_free_record(bridge, loc, args.rs, args.dt)
            series = extract_method(record, "ours", band=band, config=config)
            feats[f"x/L={loc:g}"] = series.valid()
            signals[f"x/L={loc:g}"] = (record.t * record.scenario.vehicle.v / bridge.L,
                                       record.a)
        viz.overlay_plot(signals, out / "accelerations_locations.svg", "x/L",
                         "chassis acceleration (m/s$^2$)")
        viz.overlay_plot(feats, out / "feature_locations.svg", "x/L",
                         "normalised feature", title=f"{args.bridge}, {args.rs:.0%} reduction")
    elif args.overlay == "reductions":
        bridge = bridges[args.bridge]
        feats = {}
        for r_s in _parse_floats(args.reductions):
            record = _noise_free_record(bridge, args.loc, r_s, args.dt)
            series = extract_method(record, "ours", band=band, config=config)
            feats[f"{r_s:.0%}"] = series.valid()
        viz.overlay_plot(feats, out / "feature_reductions.svg", "x/L",
                         "normalised feature", marks=[args.loc],
                         title=f"{args.bridge}, damage at x/L={args.loc}")
    elif args.tfr:
        record = load_record(Path(args.tfr))
        sc = record.scenario
        from .feature import _decimate
        xd, dt_a = _decimate(record.a, sc.dt, args.analysis_fs)
        f_d1 = sc.vehicle.v / (2 * sc.bridge.L)
        cw = cwt(xd, dt_a, freq_range=Band(0.6 * f_d1, 2.5))
        swt = synchrosqueeze(cw, inst_freq(cw))
        viz.heatmap_plot(cw.center_freqs, cw.W, dt_a, out / "cwt_magnitude.svg",
                         title="wavelet coefficient magnitude")
        viz.heatmap_plot(swt.freq_bins, swt.T, dt_a, out / "swt_magnitude.svg",
                         title="synchrosqueezed magnitude")
        magnitude_to_csv(cw.W, cw.center_freqs, out / "cwt_magnitude.csv")
        magnitude_to_csv(swt.T, swt.freq_bins, out / "swt_magnitude.csv")
    else:
        raise ValidationError("nothing to plot: pass --overlay or --tfr")
    print(f"figures written under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ibhm",
        description="Vehicle-crossing bridge-health pipeline: simulate, extract, "
                    "evaluate, plot.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a traverse dataset")
    sim.add_argument("--preset", choices=["paper"], default="paper")
    sim.add_argument("--out", required=True, type=Path)
    sim.add_argument("--bridges", default="all", help="comma list of bridge ids")
    sim.add_argument("--reductions", default=",".join(str(r) for r in DEFAULT_REDUCTIONS))
    sim.add_argument("--locations", default=",".join(str(l) for l in DEFAULT_LOCATIONS))
    sim.add_argument("--trials", type=int, default=10)
    sim.add_argument("--noise-std", type=float, default=DEFAULT_NOISE_STD)
    sim.add_argument("--dt", type=float, default=1e-3)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--overwrite", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    ext = sub.add_parser("extract", help="extract features from a dataset")
    ext.add_argument("--data", required=True, type=Path)
    ext.add_argument("--out", required=True, type=Path)
    ext.add_argument("--feature", default="ours",
                     help="comma list from {%s} or 'all'" % ",".join(METHODS))
    ext.add_argument("--band", default=None, help="LO:HI in Hz (default [f_d1, 1])")
    ext.add_argument("--analysis-fs", type=float, default=10.0)
    ext.add_argument("--jobs", type=int, default=1)
    ext.set_defaults(func=cmd_extract)

    ev = sub.add_parser("evaluate", help="RMSE table over extracted features")
    ev.add_argument("--features", required=True, type=Path)
    ev.add_argument("--out", required=True, type=Path)
    ev.add_argument("--split", choices=["supervised", "diffL", "diffOmega"],
                    default="supervised")
    ev.add_argument("--holdout", type=float, default=0.3)
    ev.add_argument("--seed", type=int, default=7)
    ev.add_argument("--methods", default="all")
    ev.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("plot", help="emit SVG figures")
    pl.add_argument("--out", required=True, type=Path)
    pl.add_argument("--overlay", choices=["bridges", "locations", "reductions"])
    pl.add_argument("--damage", default="0.5:0.5", help="RS:LOC for --overlay bridges")
    pl.add_argument("--bridge", default="B1")
    pl.add_argument("--rs", type=float, default=0.5)
    pl.add_argument("--loc", type=float, default=0.5)
    pl.add_argument("--locations", default="0.25,0.375,0.5,0.625,0.75")
    pl.add_argument("--reductions", default="0.3,0.4,0.5,0.6,0.7")
    pl.add_argument("--band", default=None)
    pl.add_argument("--dt", type=float, default=1e-3)
    pl.add_argument("--analysis-fs", type=float, default=10.0)
    pl.add_argument("--tfr", default=None, help="record CSV to render |W| and |T| for")
    pl.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except IbhmError as exc:  # pragma: no cover - catch-all for new subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
