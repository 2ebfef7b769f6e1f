#!/usr/bin/env python3
"""Convert the 10,000 digits bundled in the npm `mnist` package to IDX files.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist10k_from_npm.py package/src/digits data/mnist10k

The package stores each digit as 784 floats rounded to three decimals of
pixel/255; the original byte is recovered with round(v * 255). Samples are
interleaved with a fixed permutation so prefixes stay class-balanced.
"""
import json
import random
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    samples = []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(data) % 784 == 0
        for i in range(len(data) // 784):
            row = data[i * 784:(i + 1) * 784]
            samples.append((bytes(round(v * 255) for v in row), digit))
    random.Random(20190628).shuffle(samples)

    dst.mkdir(parents=True, exist_ok=True)
    with open(dst / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with open(dst / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for _, label in samples))
    print(f"wrote {len(samples)} samples to {dst}")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
