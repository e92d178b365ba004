"""Materialize the shipped fixture curves as CSV files.

Usage: python -m olle.fixtures OUTDIR [--planted]
"""
import argparse
import json
import os
import sys

from ..lexicon.curves import write_curve_csv
from . import fixture_curve, load_curve_params, load_planted_curves, planted_fixture_curve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m olle.fixtures",
        description="write the shipped fixture curves to CSV files",
    )
    parser.add_argument("outdir", help="destination directory")
    parser.add_argument(
        "--planted",
        action="store_true",
        help="also write the 200 elbow-recovery curves (slow, large)",
    )
    args = parser.parse_args(argv)
    os.makedirs(args.outdir, exist_ok=True)

    targets = {}
    for language in sorted(load_curve_params()):
        curve, params = fixture_curve(language)
        path = os.path.join(args.outdir, f"fixture_curve_{language}.csv")
        write_curve_csv(curve, path, header_lines=("shipped fixture curve",))
        targets[language] = {"k0": params["k0"], "k1": params["k1"]}
        print(f"wrote {path}")
    with open(os.path.join(args.outdir, "fixture_targets.json"), "w", encoding="utf-8") as fh:
        json.dump(targets, fh, indent=1, sort_keys=True)
        fh.write("\n")

    if args.planted:
        for entry in load_planted_curves():
            curve = planted_fixture_curve(entry)
            path = os.path.join(args.outdir, f"planted_{entry['id']:03d}.csv")
            write_curve_csv(curve, path)
        print(f"wrote {len(load_planted_curves())} planted curves")
    return 0


if __name__ == "__main__":
    sys.exit(main())
