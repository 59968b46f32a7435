"""Batch command line: simulate / stationary / tunnel / analyze / replay.

Exit codes: 0 success, 2 configuration error, 3 consistency-gate failure,
4 I/O failure.  --seed overrides the config seed, --out overrides the output
directory (which otherwise falls back to the config, then the
STOCHMECH_OUTDIR environment variable, then the working directory).
--threads is accepted but results never depend on it.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, StochmechError
from .runner import analyze_binary, replay, run_scenario
from .trajio import read_ensemble_binary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_IO = 4

_KINDS_BY_COMMAND = {
    "simulate": ("coherent_oscillator",),
    "stationary": ("stationary_ground", "custom_potential"),
    "tunnel": ("barrier_tunneling",),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochmech",
        description="Quantum trajectory simulation and analysis scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="scenario config file")
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker hint; never changes numeric results")

    add_common(sub.add_parser("simulate", help="run a coherent-oscillator scenario"))
    add_common(sub.add_parser("stationary",
                              help="solve a stationary ground state and verify by sampling"))
    add_common(sub.add_parser("tunnel", help="run a barrier-tunneling scenario"))
    p_an = sub.add_parser("analyze", help="re-run analyses on a stored trajectory binary")
    p_an.add_argument("--ensemble", required=True, help="trajectory .bin file")
    add_common(p_an)
    p_rp = sub.add_parser("replay",
                          help="re-run a manifest and verify byte-identical outputs")
    p_rp.add_argument("--manifest", required=True, help="manifest.json to replay")
    p_rp.add_argument("--threads", type=int, default=None,
                      help="worker hint; never changes numeric results")
    return parser


def _load_config(path: str, seed):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return None
    config = parse_config(text)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def _report(result) -> int:
    for gate in result.gates:
        status = "PASS" if gate.passed else "FAIL"
        print(f"[gate] {status} {gate.name}: {gate.detail}")
    print(f"wrote {len(result.outputs)} artifacts + manifest to {result.outdir}")
    return EXIT_OK if result.passed else EXIT_GATE


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command in _KINDS_BY_COMMAND:
            config = _load_config(args.config, args.seed)
            if config is None:
                return EXIT_IO
            allowed = _KINDS_BY_COMMAND[args.command]
            if config.kind not in allowed:
                print(f"config kind {config.kind!r} does not match "
                      f"'{args.command}' (expects {' or '.join(allowed)})",
                      file=sys.stderr)
                return EXIT_CONFIG
            result = run_scenario(config, outdir=args.out, threads=args.threads)
            return _report(result)
        if args.command == "analyze":
            config = _load_config(args.config, args.seed)
            if config is None:
                return EXIT_IO
            try:
                binary = read_ensemble_binary(args.ensemble)
            except OSError as exc:
                print(f"cannot read ensemble: {exc}", file=sys.stderr)
                return EXIT_IO
            except ValueError as exc:
                print(f"bad ensemble file: {exc}", file=sys.stderr)
                return EXIT_IO
            result = analyze_binary(binary, config, outdir=args.out)
            return _report(result)
        if args.command == "replay":
            try:
                report = replay(args.manifest)
            except OSError as exc:
                print(f"cannot read manifest: {exc}", file=sys.stderr)
                return EXIT_IO
            except (KeyError, ValueError) as exc:
                print(f"bad manifest: {exc}", file=sys.stderr)
                return EXIT_IO
            if report.ok:
                print("replay ok: all outputs byte-identical")
                return EXIT_OK
            for name in report.missing:
                print(f"[replay] missing output: {name}")
            for name in report.mismatched:
                print(f"[replay] hash mismatch: {name}")
            return EXIT_GATE
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StochmechError as exc:
        print(f"consistency gate tripped: {exc}", file=sys.stderr)
        return EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
