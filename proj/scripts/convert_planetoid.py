#!/usr/bin/env python3
"""Unpack a Planetoid release (ind.<name>.* pickles) into the raw text layout.

The output directory can then be fed to `scatter convert <raw-dir> <out-dir>`,
which quantizes features, expands the train split to every node outside
valid/test, and stamps the checksum.

Expected inputs, as distributed at
https://github.com/kimiyoung/planetoid/tree/master/data:
  ind.<name>.x        csr_matrix, features of the seed-train instances
  ind.<name>.y        one-hot labels of the seed-train instances
  ind.<name>.tx       csr_matrix, features of the test instances
  ind.<name>.ty       one-hot labels of the test instances
  ind.<name>.allx     csr_matrix, features of instances 0..len(ally)-1
  ind.<name>.ally     one-hot labels for allx
  ind.<name>.graph    dict node -> neighbor list over the full graph
  ind.<name>.test.index  test node ids, one per line
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_pickle(path: Path):
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def assemble(input_dir: Path, name: str):
    parts = {}
    for suffix in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        parts[suffix] = load_pickle(input_dir / f"ind.{name}.{suffix}")
    test_idx = np.loadtxt(input_dir / f"ind.{name}.test.index", dtype=np.int64)
    test_sorted = np.sort(test_idx)

    tx, ty = parts["tx"], parts["ty"]
    if test_sorted[-1] - test_sorted[0] + 1 != len(test_idx):
        # Citeseer ships with isolated test nodes missing from tx/ty. Pad the
        # gaps with zero rows, matching how every published pipeline loads it;
        # the padded nodes belong to no split so their label is never read.
        full = test_sorted[-1] - test_sorted[0] + 1
        tx_ext = sp.lil_matrix((full, tx.shape[1]), dtype=tx.dtype)
        tx_ext[test_sorted - test_sorted[0], :] = tx
        tx = tx_ext.tocsr()
        ty_ext = np.zeros((full, ty.shape[1]), dtype=ty.dtype)
        ty_ext[test_sorted - test_sorted[0], :] = ty
        ty = ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    features[test_idx, :] = features[test_sorted, :]
    features = np.asarray(features.todense(), dtype=np.float64)

    onehot = np.vstack((parts["ally"], ty))
    onehot[test_idx, :] = onehot[test_sorted, :]
    labels = np.argmax(onehot, axis=1).astype(np.int64)

    n = features.shape[0]
    edges = set()
    for u, nbrs in parts["graph"].items():
        for v in nbrs:
            if u == v or u >= n or v >= n:
                continue
            edges.add((min(u, v), max(u, v)))

    n_seed = parts["y"].shape[0]
    in_test = set(int(i) for i in test_sorted)
    splits = {
        "train": list(range(n_seed)),
        "valid": [i for i in range(n_seed, min(n_seed + 500, n))
                  if i not in in_test],
        "test": sorted(in_test),
    }
    return features, labels, sorted(edges), splits


def write_raw(out_dir: Path, name: str, features, labels, edges, splits):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "edges.tsv", "w") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")
    with open(out_dir / "features.csv", "w") as f:
        f.write(f"{features.shape[0]},{features.shape[1]}\n")
        for row in features:
            f.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(out_dir / "labels.txt", "w") as f:
        for y in labels:
            f.write(f"{y}\n")
    with open(out_dir / "splits.json", "w") as f:
        json.dump(splits, f)
    meta = {
        "name": name,
        "source": "planetoid release (github.com/kimiyoung/planetoid)",
        "num_classes": int(labels.max()) + 1,
    }
    with open(out_dir / "meta.json", "w") as f:
        json.dump(meta, f)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True, type=Path,
                    help="directory holding the ind.<name>.* files")
    ap.add_argument("--name", required=True,
                    choices=["cora", "citeseer", "pubmed"])
    ap.add_argument("--output", required=True, type=Path,
                    help="raw text directory to write")
    args = ap.parse_args()

    features, labels, edges, splits = assemble(args.input, args.name)
    write_raw(args.output, args.name, features, labels, edges, splits)
    print(f"{args.name}: {features.shape[0]} nodes, {features.shape[1]} features, "
          f"{len(edges)} edges, {int(labels.max()) + 1} classes")
    print(f"next: scatter convert {args.output} data/{args.name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
