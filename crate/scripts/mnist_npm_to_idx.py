#!/usr/bin/env python3
"""Convert the digit JSON files shipped in the npm `mnist` package into IDX files.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_npm_to_idx.py package/src/digits data/mnist

Writes `images-idx3-ubyte` and `labels-idx1-ubyte` (10,000 digits, grouped by
label) into the output directory.
"""
import json
import struct
import sys
from pathlib import Path

SIDE = 28


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    pixels = bytearray()
    labels = bytearray()
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        count = len(data) // (SIDE * SIDE)
        pixels.extend(min(255, max(0, round(v * 255))) for v in data[: count * SIDE * SIDE])
        labels.extend([digit] * count)
    n = len(labels)
    with open(out / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, SIDE, SIDE))
        f.write(pixels)
    with open(out / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels)
    print(f"wrote {n} digits to {out}")


if __name__ == "__main__":
    main()
