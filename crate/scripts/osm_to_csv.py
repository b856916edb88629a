#!/usr/bin/env python3
"""Convert an OpenStreetMap extract to the CSV layout `ifx` reads.

Usage:
    osm_to_csv.py INPUT.osm.pbf OUTPUT.csv [--timestamps] [--limit N]

Needs the `osmium` Python bindings (pip install osmium). Writes one node per
line as `lat,lon` or `lat,lon,timestamp`.
"""

import argparse
import csv
import sys


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--timestamps", action="store_true", help="add the node timestamp as a third column")
    ap.add_argument("--limit", type=int, default=None, help="stop after this many nodes")
    args = ap.parse_args()

    try:
        import osmium
    except ImportError:
        print("the osmium package is required: pip install osmium", file=sys.stderr)
        return 2

    with open(args.output, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["lat", "lon", "timestamp"] if args.timestamps else ["lat", "lon"])
        written = 0
        for obj in osmium.FileProcessor(args.input, osmium.osm.NODE):
            loc = obj.location
            if not loc.valid():
                continue
            row = [f"{loc.lat:.7f}", f"{loc.lon:.7f}"]
            if args.timestamps:
                row.append(int(obj.timestamp.timestamp()))
            out.writerow(row)
            written += 1
            if args.limit is not None and written >= args.limit:
                break
    print(f"wrote {written} nodes to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
