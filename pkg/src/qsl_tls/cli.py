"""Command-line front end: ``simulate``, ``sweep`` and ``verify``.

Exit codes: 0 success, 1 verification failure, 2 I/O or usage error,
3 solver failure, 4 more than 10% of sweep points failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import fields

from .bounds import evaluate
from .dynamics import TRAJECTORY_COLUMNS, trajectory_records
from .errors import QSLError
from .io import read_config, render_csv, render_json, write_text_atomic
from .protocols import ProtocolKind
from .sweep import SWEEP_COLUMNS, SweepConfig, run_sweep, success_fraction
from .verify import VerifyOptions, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_IO = 2
EXIT_SOLVER = 3
EXIT_PARTIAL = 4

MIN_SUCCESS = 0.9

log = logging.getLogger("qsl_tls")

_FLOAT_KEYS = {"omega", "gamma", "gamma_min", "gamma_max", "lambda0", "c_factor", "step"}
_INT_KEYS = {"gamma_steps", "seed"}
_BOOL_KEYS = {"log_gamma"}


def _coerce(key: str, value: str):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key in _BOOL_KEYS:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags override it")
    common.add_argument("--omega", type=float)
    common.add_argument("--protocol", choices=[k.value for k in ProtocolKind])
    common.add_argument("--lambda0", type=float, help="composite kick amplitude (default 10 omega)")
    common.add_argument("--c-factor", dest="c_factor", type=float, help="c in units of omega^2/gamma")
    common.add_argument("--step", type=float, help="RK4 step (default: 1e-3/max(omega,|lambda|) per segment)")
    common.add_argument("--output", help="output path, '-' for stdout")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="qsl-tls",
        description="Speed-limit bounds for time-optimal control of a driven two-level system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="integrate one protocol and export its trajectory")
    sim.add_argument("--gamma", type=float)

    sweep = sub.add_parser("sweep", parents=[common], help="times and bounds over a gamma grid")
    sweep.add_argument("--gamma-min", dest="gamma_min", type=float)
    sweep.add_argument("--gamma-max", dest="gamma_max", type=float)
    sweep.add_argument("--gamma-steps", dest="gamma_steps", type=int)
    sweep.add_argument("--log-gamma", dest="log_gamma", action="store_true", default=None)

    ver = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    ver.add_argument("--seed", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> tuple[SweepConfig, dict]:
    """Merge defaults, the optional config file and explicit flags (in that order).

    Returns the config and every key that was set explicitly (with its value).
    """
    values: dict = {}
    if args.config:
        for key, raw in read_config(args.config).items():
            values[key] = _coerce(key, raw)
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose") or value is None:
            continue
        values[key] = value
    known = {f.name for f in fields(SweepConfig)}
    config = SweepConfig(**{k: v for k, v in values.items() if k in known})
    return config, values


def cmd_simulate(config: SweepConfig) -> int:
    config.validate()
    spec = config.spec_for(config.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        protocol, traj, report = evaluate(spec, h=config.step)
    columns = TRAJECTORY_COLUMNS
    records = [dict(zip(columns, row)) for row in trajectory_records(traj).tolist()]
    if config.format == "json":
        text = render_json({"metadata": _simulate_metadata(protocol, report), "records": records})
    else:
        text = render_csv(columns, records)
    write_text_atomic(config.output, text)

    out = sys.stderr if config.output == "-" else sys.stdout
    print(f"protocol    {report.kind}", file=out)
    print(f"segments    {[(s.lambda_value, s.duration) for s in protocol.schedule.segments]}", file=out)
    if "first_bang_sign" in protocol.metadata:
        print(f"first bang  {protocol.metadata['first_bang_sign']}", file=out)
    print(f"T           {report.T:.12g}", file=out)
    print(f"duration    {report.duration:.12g}", file=out)
    print(f"fidelity    {report.fidelity:.12g}", file=out)
    print(f"s           {report.s:.12g}", file=out)
    print(f"s_path      {report.s_path:.12g}", file=out)
    return EXIT_OK


def _simulate_metadata(protocol, report) -> dict:
    return {
        "protocol": report.kind,
        "omega": report.omega,
        "gamma": report.gamma,
        "segments": [[s.lambda_value, s.duration] for s in protocol.schedule.segments],
        "T": report.T,
        "duration": report.duration,
        "fidelity": report.fidelity,
        "s": report.s,
        "s_path": report.s_path,
        **{k: v for k, v in protocol.metadata.items() if isinstance(v, (str, float, int, bool))},
    }


def cmd_sweep(config: SweepConfig) -> int:
    config.validate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = run_sweep(config)
    if config.format == "json":
        meta = {
            "protocol": config.protocol.value,
            "omega": config.omega,
            "lambda0": config.effective_lambda0 if config.protocol is ProtocolKind.COMPOSITE else None,
            "c_factor": config.effective_c_factor,
            "columns": list(SWEEP_COLUMNS),
        }
        text = render_json({"metadata": meta, "rows": rows})
    else:
        text = render_csv(SWEEP_COLUMNS, rows)
    write_text_atomic(config.output, text)
    frac = success_fraction(rows)
    if frac < 1.0:
        log.warning("%d of %d sweep points failed", sum(r["status"] != "ok" for r in rows), len(rows))
    return EXIT_OK if frac >= MIN_SUCCESS else EXIT_PARTIAL


def cmd_verify(config: SweepConfig, given: dict) -> int:
    """Without --protocol every protocol is checked; lambda0 defaults to 1e4 omega here."""
    opts = VerifyOptions(
        step=config.step,
        protocol=config.protocol if "protocol" in given else None,
        lambda0=config.lambda0 if config.lambda0 is not None else 1e4 * config.omega,
        omega=config.omega,
    )
    if "seed" in given:
        opts.seed = int(given["seed"])
    results = run_suite(opts)
    for check in results:
        print(check.line())
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config, given = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        return cmd_verify(config, given)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QSLError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
