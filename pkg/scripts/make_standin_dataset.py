"""Write a 16-feature handwritten-digit dataset in UCI pendigits format.

The UCI pendigits files are not bundled. This builds a stand-in from
scikit-learn's bundled 8x8 digit images: each image is average-pooled to 4x4
and rescaled to integers in [0, 100]. A seeded shuffle splits off 500 test
samples. A real pendigits.tra/.tes pair can be used instead through the
``--train`` / ``--test`` flags of ``bsa train`` and ``bsa nn-eval``.
"""

import argparse
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

from bsa.nn import DATA_DIR, Dataset, save_pendigits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DATA_DIR)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--test-size", type=int, default=500)
    args = ap.parse_args()

    d = load_digits()
    pooled = d.data.reshape(-1, 4, 2, 4, 2).mean(axis=(2, 4)).reshape(-1, 16)
    feats = np.rint(pooled / 16.0 * 100).astype(np.int64)
    order = np.random.default_rng(args.seed).permutation(len(d.target))
    feats, labels = feats[order], d.target[order]
    cut = len(labels) - args.test_size
    args.out.mkdir(parents=True, exist_ok=True)
    save_pendigits(Dataset(feats[:cut], labels[:cut]), args.out / "digits16.tra")
    save_pendigits(Dataset(feats[cut:], labels[cut:]), args.out / "digits16.tes")
    print(f"wrote {cut} train / {args.test_size} test samples to {args.out}")


if __name__ == "__main__":
    main()
