"""Download LIBSVM benchmark files into ./data (not part of the library).

    python scripts/fetch_datasets.py            # a9a (UCI adult)
    python scripts/fetch_datasets.py a9a w8a    # several
"""

import argparse
import bz2
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"
COMPRESSED = {"covtype": "covtype.libsvm.binary.bz2", "real-sim": "real-sim.bz2", "news20": "news20.binary.bz2"}


def fetch(name: str, dest: Path) -> Path:
    remote = COMPRESSED.get(name, name)
    target = dest / name
    if target.exists():
        print(f"{target} already present")
        return target
    print(f"downloading {BASE + remote}")
    with urllib.request.urlopen(BASE + remote, timeout=60) as resp:
        payload = resp.read()
    if remote.endswith(".bz2"):
        payload = bz2.decompress(payload)
    target.write_bytes(payload)
    print(f"wrote {target} ({len(payload)} bytes)")
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", default=["a9a"])
    parser.add_argument("--dest", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    args = parser.parse_args(argv)
    args.dest.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        try:
            fetch(name, args.dest)
        except OSError as exc:
            print(f"{name}: download failed: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
