"""Regenerate the bundled Q-relief height map (src/noonscope/data/q_relief.txt).

    python scripts/make_q_relief.py [--size 64] [--pitch 5.0] [--height 17.3]
"""

import argparse
from pathlib import Path

import numpy as np

from noonscope.scan import make_q_relief

TARGET = Path(__file__).resolve().parents[1] / "src" / "noonscope" / "data" / "q_relief.txt"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--pitch", type=float, default=5.0, help="pixel pitch in um (metadata only)")
    ap.add_argument("--height", type=float, default=17.3, help="relief height in nm")
    ap.add_argument("--out", type=Path, default=TARGET)
    args = ap.parse_args()
    heights = make_q_relief(args.size, args.pitch, args.height)
    header = (f"synthetic Q relief, {args.size}x{args.size} pixels, pitch {args.pitch} um, "
              f"height {args.height} nm; rows are y, columns are x")
    np.savetxt(args.out, heights, fmt="%.4f", header=header)
    print(f"wrote {args.out} ({int((heights > 0).sum())} raised pixels)")


if __name__ == "__main__":
    main()
