"""Command-line interface.

``wdl-plots`` renders one figure per invocation from results or sweep CSV
files.  Output is deterministic for identical inputs.  Exit codes: 0 on
success, 1 on usage or input errors, 2 on unexpected failures.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotJob, render


class _UsageError(ValueError):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); route through exit code 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="wdl-plots",
        description="Render figures from wdl results and sweep CSV files.",
    )
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, metavar="CSV",
        help="input CSV file(s); rows from multiple files are concatenated",
    )
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure kind")
    parser.add_argument(
        "--band-std", type=float, default=1.0,
        help="half-width of the shaded band in standard deviations (default 1, 0 disables)",
    )
    parser.add_argument("--title", default=None, help="override the figure title")
    return parser


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        job = PlotJob(
            inputs=tuple(args.inputs),
            kind=args.kind,
            out=args.out,
            band_std=args.band_std,
            title=args.title,
        )
        render(job)
        print(f"wrote {job.out}")
        return 0
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except (_UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {exc!r}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
