"""Command line entry point: ``flair-lab {calibrate,solve,sweep,validate} CONFIG``.

Exit codes: 0 success, 1 invalid config, 2 runtime failure (including any
failed run inside a solve or sweep).
"""
import argparse
import sys

from flair_lab import harness


def build_parser():
    parser = argparse.ArgumentParser(prog="flair-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("calibrate", "measure the field's error per timestep and write calibration.csv"),
        ("solve", "solve the configured task once per seed"),
        ("sweep", "solve every seed under all eight HDC/DTA/CRW on-off combinations"),
        ("validate", "check the config and print it with defaults filled in"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="run this single seed instead of the configured list")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        p.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else print
    try:
        cfg = harness.load_config(args.config)
        cfg = cfg.with_overrides(seeds=None if args.seed is None else [args.seed], output_dir=args.out)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        say(cfg.canonical_json())
        return 0
    try:
        if args.command == "calibrate":
            record = harness.run_calibration(cfg)
        else:
            record = harness.run_experiment(cfg, mode=args.command)
        manifest = harness.emit_artifacts(record, cfg["output_dir"])
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except harness.RUNTIME_ERRORS as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    say(f"{args.command}: {manifest['runs']} run(s), {manifest['failed_runs']} failed, "
        f"{len(manifest['files'])} file(s) in {cfg['output_dir']}")
    for row in record.failures:
        print(f"  {row['run']}: {row['status']}", file=sys.stderr)
    return 2 if record.failures else 0


if __name__ == "__main__":
    sys.exit(main())
