"""`plot <kind> --in DIR --out DIR` with kind one of timeseries,
scaled-rates, latency-cdf, max-transit, or all."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, SchemaError, render


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="plot", description="render simulator CSVs as figures")
    p.add_argument("kind", choices=sorted(KINDS) + ["all"])
    p.add_argument("--in", dest="in_dir", required=True,
                   help="scenario cell directory with the CSV files")
    p.add_argument("--out", dest="out_dir", required=True,
                   help="directory for the rendered images")
    args = p.parse_args(argv)
    try:
        paths = render(args.kind, args.in_dir, args.out_dir)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
