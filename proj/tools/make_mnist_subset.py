#!/usr/bin/env python3
"""Write a balanced MNIST subset as IDX files.

The source is the 5000-image MNIST sample (500 digits per class) that ships
inside the mlxtend wheel as mlxtend/data/data/mnist_5k.csv.gz. The first
`--per-class` images of every digit go to the training split and the next
`--per-class` images go to the test split, both ordered by original index.

    pip install mlxtend          # or: pip download --no-deps mlxtend
    python3 tools/make_mnist_subset.py --out data/mnist-subset
"""

import argparse
import gzip
import importlib.util
import pathlib
import struct
import sys
import zipfile


def read_csv_bytes(wheel):
    member = "mlxtend/data/data/mnist_5k.csv.gz"
    if wheel:
        with zipfile.ZipFile(wheel) as zf:
            return gzip.decompress(zf.read(member)).decode()
    spec = importlib.util.find_spec("mlxtend")
    if spec is None or spec.origin is None:
        sys.exit("mlxtend is not installed; pass --wheel PATH")
    path = pathlib.Path(spec.origin).parent / "data" / "data" / "mnist_5k.csv.gz"
    return gzip.decompress(path.read_bytes()).decode()


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/mnist-subset")
    ap.add_argument("--per-class", type=int, default=100)
    ap.add_argument("--wheel", default=None, help="path to an mlxtend wheel")
    args = ap.parse_args()

    rows = [list(map(int, line.split(","))) for line in read_csv_bytes(args.wheel).splitlines()]
    buckets = {d: [] for d in range(10)}
    for row in rows:
        buckets[row[-1]].append(row[:-1])

    train, test = [], []
    for digit in range(10):
        imgs = buckets[digit]
        if len(imgs) < 2 * args.per_class:
            sys.exit(f"digit {digit}: only {len(imgs)} images")
        train += [(img, digit) for img in imgs[: args.per_class]]
        test += [(img, digit) for img in imgs[args.per_class : 2 * args.per_class]]

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, split in (("train", train), ("test", test)):
        write_images(out / f"{name}-images-idx3-ubyte", [img for img, _ in split])
        write_labels(out / f"{name}-labels-idx1-ubyte", [lbl for _, lbl in split])
    print(f"wrote {len(train)} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
