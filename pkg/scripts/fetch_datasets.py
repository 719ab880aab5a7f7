#!/usr/bin/env python3
"""Download the benchmark datasets into ./data (or $PNNSMOOTH_DATA).

Files are saved as <name>.txt, with ground-truth centroids as <name>-gt.txt,
which is the layout tests/test_acceptance.py expects. The remote file names
below follow the public UEF clustering-datasets page; pass --base to use a
mirror. Anything that fails to download is reported and skipped.
"""

import argparse
import os
import sys
import urllib.request
from pathlib import Path

BASE = "https://cs.uef.fi/sipu/datasets/"

# local name -> (remote points file, remote ground-truth file or None)
FILES = {
    "a3": ("a3.txt", "a3-ga-cb.txt"),
    "birch1": ("birch1.txt", "b1-gt.txt"),
    "birch2": ("birch2.txt", "b2-gt.txt"),
    "unbalance": ("unbalance.txt", "unbalance-gt.txt"),
    "dim1024": ("dim1024.txt", "dim1024-cb.txt"),
    "bridge": ("bridge.txt", None),
    "house": ("house.txt", None),
    "missa": ("missa1.txt", None),
}


def fetch(url, dest, timeout):
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        dest.write_bytes(resp.read())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=sorted(FILES), help="subset of datasets")
    ap.add_argument("--dest", default=os.environ.get("PNNSMOOTH_DATA", "data"))
    ap.add_argument("--base", default=BASE)
    ap.add_argument("--timeout", type=float, default=60.0)
    args = ap.parse_args(argv)

    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name in args.names:
        points, gt = FILES[name]
        for remote, local in ((points, f"{name}.txt"), (gt, f"{name}-gt.txt")):
            if remote is None:
                continue
            target = dest / local
            if target.exists():
                print(f"have  {target}")
                continue
            try:
                fetch(args.base + remote, target, args.timeout)
                print(f"got   {target}")
            except Exception as exc:  # noqa: BLE001
                failed += 1
                print(f"FAILED {args.base + remote}: {exc}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
