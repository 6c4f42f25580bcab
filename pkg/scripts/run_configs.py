"""Run every config in configs/ (or the ones given) and print where the artifacts went."""
import argparse
import sys
from pathlib import Path

from lrlab.config import parse_config
from lrlab.runner import run

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    paths = args.configs or sorted((ROOT / "configs").glob("*.yaml"))
    for path in paths:
        cfg = parse_config(path.read_text())
        outcome = run(cfg, out_dir=args.out / path.stem, threads=args.threads)
        print(f"{path.name}: {outcome.manifest['wall_time_s']:.2f}s -> {outcome.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
