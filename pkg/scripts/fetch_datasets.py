"""Download the size datasets read by ``mte fit``.

    python scripts/fetch_datasets.py debian --out data/Packages.gz
    python scripts/fetch_datasets.py pypi --top 750 --out data/pypi/

The Debian index is fetched as-is.  For the package index, the list of most
downloaded projects comes from a public monthly ranking and each project's
JSON document is saved as ``<name>.json``.  Snapshots drift, so record the
date alongside any numbers derived from them.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import urllib.request
from pathlib import Path

DEBIAN_URL = "https://deb.debian.org/debian/dists/stable/main/binary-amd64/Packages.gz"
TOP_PYPI_URL = "https://hugovk.github.io/top-pypi-packages/top-pypi-packages-30-days.min.json"
PYPI_JSON_URL = "https://pypi.org/pypi/{name}/json"


def _get(url: str) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": "mte-fetch/0.1"})
    with urllib.request.urlopen(req, timeout=60) as resp:
        return resp.read()


def fetch_debian(out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(_get(DEBIAN_URL))
    print(f"wrote {out}")


def fetch_pypi(out: Path, top: int, pause: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ranking = json.loads(_get(TOP_PYPI_URL))
    names = [row["project"] for row in ranking["rows"][:top]]
    for i, name in enumerate(names, start=1):
        target = out / f"{name}.json"
        if target.exists():
            continue
        try:
            target.write_bytes(_get(PYPI_JSON_URL.format(name=name)))
        except OSError as exc:
            print(f"skip {name}: {exc}", file=sys.stderr)
        if i % 50 == 0:
            print(f"{i}/{len(names)}")
        time.sleep(pause)
    print(f"wrote {len(list(out.glob('*.json')))} documents to {out}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="source", required=True)
    d = sub.add_parser("debian")
    d.add_argument("--out", type=Path, default=Path("data/Packages.gz"))
    p = sub.add_parser("pypi")
    p.add_argument("--out", type=Path, default=Path("data/pypi"))
    p.add_argument("--top", type=int, default=750)
    p.add_argument("--pause", type=float, default=0.1, help="seconds between requests")
    args = parser.parse_args(argv)
    if args.source == "debian":
        fetch_debian(args.out)
    else:
        fetch_pypi(args.out, args.top, args.pause)
    return 0


if __name__ == "__main__":
    sys.exit(main())
