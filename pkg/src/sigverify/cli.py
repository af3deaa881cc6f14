"""Command line interface.

Subcommands: inspect (file statistics), features (feature matrix as CSV),
train / score (single-model workflows), synth (generate a dataset), eval
(full protocol with EER/DET reports), serve (HTTP verification service).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .evaluation import ProtocolConfig, report, run_protocol
from .hmm import TrainConfig, deserialize_model, fit_model, score, serialize_model
from .io import parse_svc, scan_dataset, summarize
from .signal import PipelineConfig, pipeline
from .synth import GenerationConfig, generate_dataset


def _read_signature(path: str):
    return parse_svc(Path(path).read_bytes(), source=path)


def cmd_inspect(args) -> int:
    sig = _read_signature(args.file)
    stats = summarize(sig)
    print(f"file: {args.file}")
    print(f"samples: {stats['n_samples']}")
    print(f"duration_ms: {stats['duration_ms']:.4f}")
    print(f"mean_period_ms: {stats['mean_period_ms']:.4f}")
    print(f"mean_rate_hz: {stats['mean_rate_hz']:.2f}")
    print(f"pressure_min: {stats['pressure_min']}")
    print(f"pressure_max: {stats['pressure_max']}")
    print(f"pressure_band_90: {stats['pressure_band_90']}")
    print(f"pen_down_fraction: {stats['pen_down_fraction']:.3f}")
    return 0


def cmd_features(args) -> int:
    sig = _read_signature(args.file)
    config = PipelineConfig(rate=args.rate, use_pressure=not args.no_pressure)
    fs = pipeline(sig, config)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(fs.names)
    for row in fs.channels:
        writer.writerow([repr(v) for v in row])
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(max_iterations=args.em_iterations, seed=args.seed)


def cmd_train(args) -> int:
    config = PipelineConfig(rate=args.rate, use_pressure=not args.no_pressure)
    sequences = [pipeline(_read_signature(f), config) for f in args.enroll]
    model, trace = fit_model(
        sequences, n_states=args.states, n_mixtures=args.mixtures, config=_train_config(args)
    )
    Path(args.out).write_text(serialize_model(model))
    print(f"model: {args.out}")
    print(f"dim: {model.dim}")
    print(f"mixtures: {model.n_mixtures}")
    print(f"iterations: {model.metadata['iterations']}")
    print(f"final_loglik: {trace[-1]!r}")
    return 0


def cmd_score(args) -> int:
    model = deserialize_model(Path(args.model).read_bytes())
    use_pressure = model.dim == 14
    if args.no_pressure and use_pressure:
        print("error: model was trained with pressure; --no-pressure mismatch", file=sys.stderr)
        return 2
    config = PipelineConfig(rate=args.rate, use_pressure=use_pressure)
    features = pipeline(_read_signature(args.input), config)
    print(repr(score(model, features)))
    return 0


def cmd_synth(args) -> int:
    config = GenerationConfig(n_users=args.users, seed=args.seed)
    index = generate_dataset(config, args.out)
    print(f"root: {args.out}")
    print(f"users: {len(index.users)}")
    print(f"genuine: {index.n_genuine}")
    print(f"forgeries: {index.n_forgeries}")
    for w in index.warnings:
        print(f"warning: {w}")
    return 0


def cmd_eval(args) -> int:
    index = scan_dataset(args.dataset)
    for w in index.warnings:
        print(f"warning: {w}", file=sys.stderr)
    settings = [False] if args.no_pressure else [True, False]
    score_sets = []
    for use_pressure in settings:
        config = ProtocolConfig(
            use_pressure=use_pressure,
            seed=args.seed,
            train=TrainConfig(max_iterations=args.em_iterations, seed=args.seed),
        )
        score_sets.append(run_protocol(index, config))
    written = report(score_sets, args.out)
    print((Path(args.out) / "eer.txt").read_text(), end="")
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.store,
        threshold=args.threshold,
        use_pressure=not args.no_pressure,
        static_dir=args.static,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sigverify", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print capture statistics for a signature file")
    p.add_argument("file")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("features", help="emit the preprocessed feature matrix as CSV")
    p.add_argument("file")
    p.add_argument("--no-pressure", action="store_true")
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a model from enrollment signature files")
    p.add_argument("--enroll", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out", required=True)
    p.add_argument("--no-pressure", action="store_true")
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--states", type=int, default=2)
    p.add_argument("--mixtures", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--em-iterations", type=int, default=20)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a signature file against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--no-pressure", action="store_true")
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--users", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="run the full enrollment/trial protocol on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-pressure", action="store_true",
                   help="only run the pressure-off setting (default runs both)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--em-iterations", type=int, default=20)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP verification service")
    env = os.environ
    p.add_argument("--store", default=env.get("SIGVERIFY_STORE"),
                   required="SIGVERIFY_STORE" not in env)
    p.add_argument("--host", default=env.get("SIGVERIFY_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(env.get("SIGVERIFY_PORT", "8000")))
    p.add_argument("--threshold", type=float,
                   default=float(env["SIGVERIFY_THRESHOLD"]) if "SIGVERIFY_THRESHOLD" in env else None)
    p.add_argument("--no-pressure", action="store_true")
    p.add_argument("--static", default=env.get("SIGVERIFY_STATIC"),
                   help="directory of frontend assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
