"""Command-line entry points.

    oow serve    --scenario F --latency S --tp --port P
    oow headless --pilot F --out F [--scenario F --latency S --tp]
    oow replay   --in F [--out F]
    oow analyze preprocess --in F --method M --channels NAME --out F
    oow analyze cv    --data DIR --paradigm P --method M --channels NAME --out F
    oow analyze stats --measures F.jsonl --factor latency|tp --out F
    oow synth gen --spec F --subjects N --seed S --out DIR

The gateway port defaults to $OOW_PORT when set.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _load_scenario(path: str | None):
    from .scenario import default_scenario, load_scenario
    return load_scenario(path) if path else default_scenario()


def _trial_config(args) -> "TrialConfig":
    from .mission import TrialConfig
    return TrialConfig(latency=args.latency, time_pressure=args.tp,
                       obstacles=not args.no_obstacles, seed=args.seed)


def _session_base(out: str) -> str:
    for suffix in (".session.jsonl", ".jsonl"):
        if out.endswith(suffix):
            return out[: -len(suffix)]
    return out


def _write_session(session, scenario, out: str) -> None:
    from .engine import dump_inputs
    from .telemetry import export_log
    base = _session_base(out)
    Path(f"{base}.session.jsonl").write_text(export_log(session.log))
    Path(f"{base}.inputs.jsonl").write_text(dump_inputs(session, scenario))


def cmd_serve(args) -> int:
    from .gateway import serve
    scenario = _load_scenario(args.scenario)
    session = serve(scenario, _trial_config(args), host=args.host,
                    port=args.port, out_dir=args.out, session_name=args.name)
    end = session.log.events[-1]
    print(f"trial ended: {end.payload['reason']} at {end.time:.2f}s "
          f"score {end.payload['final_score']:.2f}")
    return 0


def cmd_headless(args) -> int:
    from .engine import PilotScript, run_headless
    scenario = _load_scenario(args.scenario)
    pilot = PilotScript.load(args.pilot)
    session = run_headless(scenario, _trial_config(args), pilot,
                           horizon=args.horizon)
    _write_session(session, scenario, args.out)
    end = session.log.events[-1]
    print(f"{end.payload['reason']} at {end.time:.2f}s "
          f"score {end.payload['final_score']:.2f} -> {_session_base(args.out)}.session.jsonl")
    return 0


def cmd_replay(args) -> int:
    from .engine import ReplayMismatch, replay
    from .telemetry import export_log
    try:
        session = replay(Path(args.infile).read_text())
    except ReplayMismatch as exc:
        print(f"replay refused: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(export_log(session.log))
    end = session.log.events[-1]
    print(f"replayed: {end.payload['reason']} at {end.time:.2f}s "
          f"score {end.payload['final_score']:.2f}")
    return 0


def _load_recording(path: str):
    from . import dsp
    if path.endswith(".csv"):
        return dsp.load_recording_csv(path)
    return dsp.load_recording_bin(path)


def _save_recording(rec, path: str) -> None:
    from . import dsp
    if path.endswith(".csv"):
        dsp.save_recording_csv(rec, path)
    else:
        dsp.save_recording_bin(rec, path)


def cmd_analyze_preprocess(args) -> int:
    from . import dsp
    rec = _load_recording(args.infile)
    out = dsp.preprocess(rec, args.method, seed=args.seed)
    if args.channels:
        cfg = dsp.get_channel_config(args.channels, presets_path=args.channels_file)
        out = dsp.select_channels(out, cfg)
    _save_recording(out, args.out)
    print(f"{args.method} -> {args.out} ({out.n_channels} channels, "
          f"{out.n_samples} samples)")
    return 0


def cmd_analyze_cv(args) -> int:
    from . import dsp, riemann
    paths = sorted(Path(args.data).glob("**/*.eeg"))
    if not paths:
        print(f"no .eeg recordings under {args.data}", file=sys.stderr)
        return 2
    recordings = [dsp.load_recording_bin(p) for p in paths]
    cfg = dsp.get_channel_config(args.channels, presets_path=args.channels_file)
    epochs = riemann.build_epochs(recordings, args.method, cfg, args.paradigm,
                                  seed=args.seed)
    report = riemann.loso_cv(epochs)
    payload = {"paradigm": args.paradigm, "method": args.method,
               "channels": args.channels, **report.to_dict()}
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"LOSO over {len(epochs)} subjects: accuracy "
          f"{report.mean_accuracy:.3f}, macro F1 {report.mean_macro_f1:.3f} "
          f"-> {args.out}")
    return 0


def _read_measures(path: str):
    from .stats import MeasureRow, MeasureTable
    table = MeasureTable()
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        rec = json.loads(raw)
        table.add(MeasureRow(
            subject=rec["subject"], trial_index=int(rec["trial_index"]),
            measure=rec["measure"], value=float(rec["value"]),
            latency=float(rec.get("latency", 0.0)),
            time_pressure=bool(rec.get("time_pressure", False)),
            label=rec.get("label")))
    return table


def cmd_analyze_stats(args) -> int:
    from .stats import oneway_anova, znorm_per_subject
    table = _read_measures(args.measures)
    measures = sorted({r.measure for r in table.rows})
    report = {"factor": args.factor, "measures": {}}
    for measure in measures:
        try:
            normed = znorm_per_subject(table, measure)
        except ValueError as exc:
            report["measures"][measure] = {"error": str(exc)}
            continue
        with_f, without_f = [], []
        for row in normed.rows:
            in_group = (row.latency > 0.0 if args.factor == "latency"
                        else row.time_pressure)
            (with_f if in_group else without_f).append(row.value)
        if len(with_f) < 2 or len(without_f) < 2:
            report["measures"][measure] = {"error": "a group has fewer than 2 values"}
            continue
        f, p = oneway_anova([np.array(without_f), np.array(with_f)])
        direction = "up" if np.mean(with_f) > np.mean(without_f) else "down"
        report["measures"][measure] = {
            "F": f, "p": p, "direction_with_factor": direction,
            "n_without": len(without_f), "n_with": len(with_f)}
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    arrow = {"up": "^", "down": "v"}
    for m, row in report["measures"].items():
        if "p" in row:
            print(f"{m:16s} p={row['p']:.3f} {arrow[row['direction_with_factor']]}")
        else:
            print(f"{m:16s} {row['error']}")
    return 0


def cmd_protocol(args) -> int:
    from .mission import generate_protocol
    trials = generate_protocol(args.seed, familiarisation_runs=args.familiarisation)
    lines = "\n".join(json.dumps(t.to_dict()) for t in trials) + "\n"
    if args.out:
        Path(args.out).write_text(lines)
        print(f"{len(trials)} trials -> {args.out}")
    else:
        print(lines, end="")
    return 0


def cmd_synth_gen(args) -> int:
    from . import dsp, synthgen
    spec_doc = json.loads(Path(args.spec).read_text())
    channels = tuple(spec_doc.get("channels", dsp.CHANNELS_32))
    specs = []
    for cls in spec_doc["classes"]:
        target = (np.diag(cls["diag"]) if "diag" in cls
                  else np.array(cls["target"], dtype=float))
        tones = [tuple(t) for t in cls.get("tones", [])]
        specs.append(synthgen.ClassSpec(cls["label"], target, tones))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for s in range(args.subjects):
        subject = f"S{s}"
        recs = synthgen.gen_subject(
            specs, spec_doc.get("trials_per_class", 1),
            spec_doc.get("trial_seconds", 20.0),
            fs=spec_doc.get("fs", dsp.FS_DEFAULT),
            seed=args.seed + s, subject=subject, channel_names=channels)
        sub_dir = out_dir / subject
        sub_dir.mkdir(exist_ok=True)
        for rec in recs:
            dsp.save_recording_bin(
                rec, sub_dir / f"trial{rec.trial.trial_index:03d}.eeg")
            count += 1
    print(f"wrote {count} recordings for {args.subjects} subjects -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    from .gateway import DEFAULT_PORT

    parser = argparse.ArgumentParser(
        prog="oow", description="On-orbit teleoperation trainer and "
        "EEG workload analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_trial_flags(p):
        p.add_argument("--scenario", help="scenario JSON (default: shipped)")
        p.add_argument("--latency", type=float, default=0.0,
                       help="round-trip latency seconds")
        p.add_argument("--tp", action="store_true", help="enable time pressure")
        p.add_argument("--no-obstacles", action="store_true")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run a live WebSocket session")
    add_trial_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--out", help="directory for session/input logs")
    p.add_argument("--name", default="live", help="session log basename")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("headless", help="run a scripted pilot on the sim clock")
    add_trial_flags(p)
    p.add_argument("--pilot", required=True, help="pilot script JSON")
    p.add_argument("--out", required=True, help="output session log path")
    p.add_argument("--horizon", type=float, default=600.0,
                   help="max simulated seconds")
    p.set_defaults(func=cmd_headless)

    p = sub.add_parser("replay", help="re-execute a recorded input log")
    p.add_argument("--in", dest="infile", required=True,
                   help="*.inputs.jsonl from a previous run")
    p.add_argument("--out", help="write the replayed session log here")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("protocol", help="emit the three-block trial protocol")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--familiarisation", type=int, default=2,
                   help="no-obstacle familiarisation runs before the +1 obstacle run")
    p.add_argument("--out", help="write JSONL here instead of stdout")
    p.set_defaults(func=cmd_protocol)

    analyze = sub.add_parser("analyze", help="EEG and statistics toolkit")
    asub = analyze.add_subparsers(dest="analyze_command", required=True)

    p = asub.add_parser("preprocess", help="filter/clean a recording")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--method", required=True,
                   choices=["ICA", "BP", "WT", "ICA+BP", "ICA+WT", "BP+WT",
                            "ICA+BP+WT"])
    p.add_argument("--channels", help="named preset or 'custom'")
    p.add_argument("--channels-file", help="override the shipped presets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_preprocess)

    p = asub.add_parser("cv", help="LOSO cross-validation over a dataset")
    p.add_argument("--data", required=True, help="directory of .eeg recordings")
    p.add_argument("--paradigm", required=True,
                   choices=["five_class", "latency", "time_pressure"])
    p.add_argument("--method", required=True,
                   choices=["ICA", "BP", "WT", "ICA+BP", "ICA+WT", "BP+WT",
                            "ICA+BP+WT"])
    p.add_argument("--channels", required=True)
    p.add_argument("--channels-file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_cv)

    p = asub.add_parser("stats", help="one-way ANOVA per measure vs a factor")
    p.add_argument("--measures", required=True, help="measures JSONL file")
    p.add_argument("--factor", required=True, choices=["latency", "tp"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_stats)

    synth = sub.add_parser("synth", help="synthetic signal generation")
    ssub = synth.add_subparsers(dest="synth_command", required=True)
    p = ssub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--spec", required=True, help="class spec JSON")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
