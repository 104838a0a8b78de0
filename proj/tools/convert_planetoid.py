#!/usr/bin/env python3
"""Convert a Planetoid dataset (ind.<name>.* pickles) into the text dataset
directory format read by `sdss`: graph.txt, features.txt, labels.txt and
split.txt with the public split (train: labeled x rows, val: the next 500
nodes, test: test.index).

usage: convert_planetoid.py <raw_dir> <name> <out_dir>
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_raw(raw_dir, name):
    parts = {}
    for key in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        with open(raw_dir / f"ind.{name}.{key}", "rb") as fh:
            parts[key] = pickle.load(fh, encoding="latin1")
    test_index = [int(line) for line in (raw_dir / f"ind.{name}.test.index").read_text().split()]
    return parts, test_index


def assemble(parts, test_index):
    tx, ty = parts["tx"], parts["ty"]
    test_range = np.sort(test_index)
    lo, hi = test_range[0], test_range[-1]
    if hi - lo + 1 > tx.shape[0]:
        # Citeseer: some test ids have no row; pad them with zeros.
        full = hi - lo + 1
        tx_ext = sp.lil_matrix((full, tx.shape[1]))
        tx_ext[test_range - lo, :] = tx
        tx = tx_ext
        ty_ext = np.zeros((full, ty.shape[1]))
        ty_ext[test_range - lo, :] = ty
        ty = ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    features[test_index, :] = features[test_range, :]
    onehot = np.vstack((parts["ally"], ty))
    onehot[test_index, :] = onehot[test_range, :]

    n = features.shape[0]
    edges = set()
    for u, nbrs in parts["graph"].items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    labels = onehot.argmax(axis=1)
    train = list(range(parts["y"].shape[0]))
    val = list(range(len(train), len(train) + 500))
    return features.toarray(), labels, onehot.shape[1], sorted(edges), (train, val, sorted(test_index))


def fmt(x):
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write(out_dir, features, labels, m, edges, split):
    out_dir.mkdir(parents=True, exist_ok=True)
    n, f = features.shape
    with open(out_dir / "graph.txt", "w") as fh:
        fh.write(f"{n} {len(edges)}\n")
        fh.writelines(f"{u} {v}\n" for u, v in edges)
    with open(out_dir / "features.txt", "w") as fh:
        fh.write(f"{n} {f}\n")
        fh.writelines(" ".join(fmt(x) for x in row) + "\n" for row in features)
    with open(out_dir / "labels.txt", "w") as fh:
        fh.write(f"{n} {m}\n")
        fh.writelines(f"{c}\n" for c in labels)
    with open(out_dir / "split.txt", "w") as fh:
        for name, ids in zip(("train", "val", "test"), split):
            fh.write(f"{name}: " + " ".join(map(str, ids)) + "\n")


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("name")
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args(argv)
    parts, test_index = load_raw(args.raw_dir, args.name)
    features, labels, m, edges, split = assemble(parts, test_index)
    write(args.out_dir, features, labels, m, edges, split)
    print(f"{args.name}: n={features.shape[0]} e={len(edges)} f={features.shape[1]} m={m} "
          f"train={len(split[0])} val={len(split[1])} test={len(split[2])}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
