"""``propopt`` command line.

Exit codes: 0 success, 1 validation or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .. import _kernels
from ..errors import ConfigError, PropoptError, ValidationError
from .config import load_config
from .io import emit_csv, format_csv, read_csv
from .plot import emit_svg_scatter
from .sweep import Context, explain, pareto_front, run_sweep

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="propopt", description="Optimize and evaluate feature-attribution explanations.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("explain", help="compute one method's explanation matrix and print or save it")
    e.add_argument("--config", required=True, help="sweep config (JSON)")
    e.add_argument("--method", help="method label to run (default: the first method)")
    e.add_argument("--out", help="CSV file for the N x D matrix (default: stdout)")
    e.add_argument("--seed", type=int)

    s = sub.add_parser("sweep", help="run a sweep config and write the result CSV")
    s.add_argument("--config", required=True, help="sweep config (JSON)")
    s.add_argument("--out", help="result CSV (default: config output.csv, else stdout)")
    s.add_argument("--workers", type=int, help="worker threads (default: PROPOPT_WORKERS or 1)")
    s.add_argument("--seed", type=int, help="override the config seed")

    for name, helptext in (("pareto", "keep the Pareto-optimal rows of a result CSV"),
                           ("plot", "draw an SVG scatter of two losses from a result CSV")):
        q = sub.add_parser(name, help=helptext)
        q.add_argument("csv", help="result CSV written by 'sweep'")
        q.add_argument("--x", required=True, help="loss on the x axis, e.g. loss_faithful_grad")
        q.add_argument("--y", required=True, help="loss on the y axis, e.g. loss_robust_pair")
        q.add_argument("--out", required=(name == "plot"), help="output file")
        if name == "plot":
            q.add_argument("--log", action="store_true", help="log-scale both axes")

    sub.add_parser("check", help="run gradient checks and solver oracle self-tests")
    return p


def _explain(args):
    cfg = load_config(args.config).with_overrides(seed=args.seed)
    methods = cfg.methods
    if args.method is not None:
        methods = [m for m in methods if m.label == args.method]
        if not methods:
            raise ConfigError(f"no method labelled {args.method!r} in {args.config}")
    method = methods[0]
    assignment = method.assignments()[0]
    W = explain(Context.build(cfg), method, assignment)
    header = ",".join(f"e{d}" for d in range(W.shape[1]))
    if args.out:
        np.savetxt(args.out, W, delimiter=",", fmt="%.12g", header=header, comments="")
    else:
        np.savetxt(sys.stdout, W, delimiter=",", fmt="%.12g", header=header, comments="")
    print(f"# {method.label} {assignment}", file=sys.stderr)
    return 0


def _sweep(args):
    cfg = load_config(args.config).with_overrides(seed=args.seed, workers=args.workers)
    result = run_sweep(cfg)
    out = args.out or cfg.output.get("csv")
    if out:
        out_path = cfg._path(out) if not args.out else out
        emit_csv(result, out_path)
        errors = sum(r.status != "ok" for r in result.rows)
        print(f"wrote {len(result)} rows to {out_path} ({errors} error rows)", file=sys.stderr)
    else:
        sys.stdout.write(format_csv(result))
    return 0


def _pareto(args):
    front = pareto_front(read_csv(args.csv), args.x, args.y)
    if args.out:
        emit_csv(front, args.out)
    else:
        sys.stdout.write(format_csv(front))
    return 0


def _plot(args):
    emit_svg_scatter(read_csv(args.csv), args.x, args.y, args.out, log_axes=args.log)
    return 0


def _check(args):
    from .selfcheck import run_checks

    print(f"kernel backend: {_kernels.BACKEND}")
    ok = True
    for res in run_checks():
        flag = "PASS" if res.passed else "FAIL"
        ok &= res.passed
        print(f"{flag}  {res.name}: max residual {res.residual:.3e} (tol {res.tolerance:.0e})")
    return 0 if ok else 2


_COMMANDS = {"explain": _explain, "sweep": _sweep, "pareto": _pareto, "plot": _plot, "check": _check}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"propopt: error: {exc}", file=sys.stderr)
        return 1
    except PropoptError as exc:
        print(f"propopt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"propopt: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
