#!/usr/bin/env python3
"""Build a 10,000-digit MNIST subset in idx format.

The `mnist` npm package (v1.1.0) bundles 10,000 MNIST digits as JSON with
pixels stored as byte/255 rounded to three decimals, which is enough to
recover the original bytes exactly. This script fetches the package with
`npm pack`, decodes the digits and writes

    <out>/images-idx3-ubyte   (magic 0x00000803, N x 28 x 28)
    <out>/labels-idx1-ubyte   (magic 0x00000801, N)

Usage: scripts/fetch_mnist_10k.py [out_dir]   (default: data/mnist10k)
"""
import json
import os
import struct
import subprocess
import sys
import tarfile
import tempfile

PACKAGE = "mnist@1.1.0"


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "mnist10k")
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", PACKAGE, "--silent"], cwd=tmp, check=True,
                       stdout=subprocess.DEVNULL)
        tgz = [f for f in os.listdir(tmp) if f.endswith(".tgz")][0]
        with tarfile.open(os.path.join(tmp, tgz)) as tar:
            tar.extractall(tmp)
        images = bytearray()
        labels = bytearray()
        for digit in range(10):
            with open(os.path.join(tmp, "package", "src", "digits", f"{digit}.json")) as fh:
                data = json.load(fh)["data"]
            assert len(data) % 784 == 0
            for v in data:
                b = round(v * 255)
                assert 0 <= b <= 255 and abs(b / 255 - v) < 6e-4, v
                images.append(b)
            labels.extend([digit] * (len(data) // 784))
    n = len(labels)
    with open(os.path.join(out, "images-idx3-ubyte"), "wb") as fh:
        fh.write(struct.pack(">IIII", 0x803, n, 28, 28))
        fh.write(images)
    with open(os.path.join(out, "labels-idx1-ubyte"), "wb") as fh:
        fh.write(struct.pack(">II", 0x801, n))
        fh.write(labels)
    print(f"wrote {n} digits to {out}")


if __name__ == "__main__":
    main()
