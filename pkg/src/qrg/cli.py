"""``qrg`` command line.

Exit codes: 0 certified, 1 usage/parse/numerical error, 2 infinite robustness.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from . import linalg as la
from .certify import InstanceSpec, TARGETS, load_campaign, random_instance, run_campaign, specs_from_flags
from .errors import ArgumentError, QRGError
from .freesets import freeset_from_json
from .games import ChannelEnsemble, optimal_success
from .solvers import DEFAULT_TOL, InfiniteRobustness, robustness

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFINITE = 2

TOL_RANGE = (1e-10, 1e-4)
N_MAX_LIMIT = 256

log = logging.getLogger("qrg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _tol(raw: str) -> float:
    v = float(raw)
    if not TOL_RANGE[0] <= v <= TOL_RANGE[1]:
        raise argparse.ArgumentTypeError(f"tol must lie in [{TOL_RANGE[0]:g}, {TOL_RANGE[1]:g}]")
    return v


def _n_max(raw: str) -> int:
    v = int(raw)
    if not 2 <= v <= N_MAX_LIMIT:
        raise argparse.ArgumentTypeError(f"n-max must lie in [2, {N_MAX_LIMIT}]")
    return v


def _nonneg_float(raw: str) -> float:
    v = float(raw)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _common(p):
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    p.add_argument("--tol", type=_tol, default=DEFAULT_TOL)
    p.add_argument("--n-max", type=_n_max, help="game-size cap (overrides QRG_NMAX)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrg", description="Robustness certificates and discrimination games.")
    parser.add_argument("--version", action="version", version=f"qrg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("robustness", help="solve the robustness program for one instance")
    p.add_argument("--input", "-i", required=True,
                   help='JSON with "state" and "free_set" (matrix and free-set documents)')
    _common(p)

    p = sub.add_parser("discriminate", help="optimal success probability of a game")
    p.add_argument("--input", "-i", required=True, help="game JSON")
    p.add_argument("--state", "-s", required=True, help="state JSON")
    _common(p)

    p = sub.add_parser("certify", help="run a certification campaign")
    p.add_argument("target", choices=TARGETS)
    p.add_argument("--spec", help="campaign JSON; replaces the generator flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dim-a", type=int)
    p.add_argument("--dim-c", type=int)
    p.add_argument("--generators", type=int)
    p.add_argument("--state-kind", choices=("random-pure", "random-mixed", "hull-mixture"))
    p.add_argument("--epsilon", type=_nonneg_float)
    p.add_argument("--n", type=int, nargs="+", help="flag counts for divergence games")
    p.add_argument("--games", type=int, help="random games per cor1 instance")
    p.add_argument("--samples", type=int, help="random POVMs per appc instance")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="also write the CSV summary here")
    p.add_argument("--timing", action="store_true", help="include wall-clock stats in JSON")
    _common(p)

    p = sub.add_parser("random", help="emit a seeded instance as robustness input JSON")
    p.add_argument("target", choices=TARGETS, nargs="?", default="thm1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim-a", type=int)
    p.add_argument("--dim-c", type=int)
    p.add_argument("--generators", type=int)
    p.add_argument("--state-kind", choices=("random-pure", "random-mixed", "hull-mixture"))
    _common(p)
    return parser


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ArgumentError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(obj, name: str, path: str):
    if not isinstance(obj, dict) or name not in obj:
        raise ArgumentError(f"{path}: missing field '{name}'")
    return obj[name]


def _parse(what: str, path: str, fn, payload):
    try:
        return fn(payload)
    except QRGError as exc:
        raise ArgumentError(f"{path}: field '{what}': {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError(f"{path}: field '{what}': malformed ({exc})") from exc


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _kv_pretty(obj: dict, keys) -> str:
    lines = []
    for k in keys:
        v = obj.get(k)
        lines.append(f"{k}: {v:.10e}" if isinstance(v, float) else f"{k}: {v}")
    return "\n".join(lines) + "\n"


def _kv_csv(obj: dict, keys) -> str:
    return ",".join(keys) + "\n" + ",".join(str(obj.get(k, "")) for k in keys) + "\n"


def cmd_robustness(args) -> int:
    doc = _read_json(args.input)
    rho = _parse("state", args.input, la.matrix_from_json, _field(doc, "state", args.input))
    rho = _parse("state", args.input, la.as_density, rho)
    f = _parse("free_set", args.input, freeset_from_json, _field(doc, "free_set", args.input))
    if rho.shape[0] != f.dim:
        raise ArgumentError(f"{args.input}: state dimension {rho.shape[0]} != free-set dimension {f.dim}")
    res = robustness(rho, f, args.tol)
    payload = res.to_json()
    if isinstance(res, InfiniteRobustness):
        keys = ["kind", "overlap"]
        code = EXIT_INFINITE
    else:
        keys = ["kind", "lambda_star", "lower", "gap"]
        code = EXIT_OK
    if args.format == "json":
        _emit(_dumps(payload), args.output)
    elif args.format == "csv":
        _emit(_kv_csv(payload, keys), args.output)
    else:
        _emit(_kv_pretty(payload, keys), args.output)
    return code


def cmd_discriminate(args) -> int:
    game = _parse("game", args.input, ChannelEnsemble.from_json, _read_json(args.input))
    doc = _read_json(args.state)
    if isinstance(doc, dict) and "state" in doc:
        doc = doc["state"]
    rho = _parse("state", args.state, la.matrix_from_json, doc)
    rho = _parse("state", args.state, la.as_density, rho)
    if rho.shape[0] != game.state_dim:
        raise ArgumentError(f"state dimension {rho.shape[0]} != game input dimension {game.state_dim}")
    cert = optimal_success(rho, game, args.tol)
    payload = cert.to_json()
    if args.format == "json":
        _emit(_dumps(payload), args.output)
    elif args.format == "csv":
        _emit(_kv_csv(payload, ["value", "upper", "gap"]), args.output)
    else:
        _emit(_kv_pretty(payload, ["value", "upper", "gap"]), args.output)
    if args.verbose:
        print(f"value {cert.value:.12g}  gap {cert.gap:.3e}", file=sys.stderr)
    return EXIT_OK


def _campaign_specs(args) -> list[InstanceSpec]:
    if args.spec:
        specs = load_campaign(_read_json(args.spec))
        bad = [s.seed for s in specs if s.target != args.target]
        if bad:
            raise ArgumentError(f"{args.spec}: instances with seeds {bad} are not {args.target} targets")
        return specs
    return specs_from_flags(
        args.target, seed=args.seed, count=args.count, dim_a=args.dim_a, dim_c=args.dim_c,
        generators=args.generators, state_kind=args.state_kind, epsilon=args.epsilon,
        tol=args.tol, n_values=tuple(args.n) if args.n else None, games=args.games,
        samples=args.samples,
    )


def cmd_certify(args) -> int:
    if args.workers < 1:
        raise ArgumentError("workers must be at least 1")
    report = run_campaign(_campaign_specs(args), workers=args.workers)
    if args.format == "json":
        _emit(report.dumps(include_timing=args.timing), args.output)
    elif args.format == "csv":
        _emit(report.to_csv(), args.output)
    else:
        _emit(report.pretty(), args.output)
    if args.csv:
        _emit(report.to_csv(), args.csv)
    return EXIT_OK if report.all_passed else EXIT_ERROR


def cmd_random(args) -> int:
    kw = {k: v for k, v in dict(dim_a=args.dim_a, dim_c=args.dim_c, generators=args.generators,
                                 state_kind=args.state_kind).items() if v is not None}
    spec = InstanceSpec(seed=args.seed, target=args.target, **kw)
    rho, f = random_instance(spec)
    _emit(_dumps({"state": la.matrix_to_json(rho), "free_set": f.to_json(),
                  "instance": spec.to_json()}), args.output)
    return EXIT_OK


COMMANDS = {
    "robustness": cmd_robustness,
    "discriminate": cmd_discriminate,
    "certify": cmd_certify,
    "random": cmd_random,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.n_max is not None:
        os.environ["QRG_NMAX"] = str(args.n_max)
    try:
        return COMMANDS[args.command](args)
    except QRGError as exc:
        print(f"qrg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"qrg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
