#!/usr/bin/env python3
"""Convert the Planetoid pickles (ind.<name>.{x,tx,allx,y,ty,ally,graph,test.index})
into the dataset directory layout read by rgae:

    edges.tsv  features.tsv  labels.tsv  meta.json

usage: planetoid_to_tsv.py RAW_DIR NAME OUT_DIR
"""

import argparse
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str):
    parts = {}
    for key in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        with open(raw / f"ind.{name}.{key}", "rb") as f:
            parts[key] = pickle.load(f, encoding="latin1")
    test_index = [int(line) for line in open(raw / f"ind.{name}.test.index")]
    test_sorted = np.sort(test_index)

    tx, ty = parts["tx"], parts["ty"]
    if name == "citeseer":
        # isolated test nodes have no feature row; pad with zeros
        full = range(test_sorted.min(), test_sorted.max() + 1)
        tx_ext = sp.lil_matrix((len(full), parts["x"].shape[1]))
        tx_ext[test_sorted - test_sorted.min(), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), parts["y"].shape[1]))
        ty_ext[test_sorted - test_sorted.min(), :] = ty
        ty = ty_ext

    features = sp.vstack((parts["allx"], tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((parts["ally"], ty))
    labels[test_index, :] = labels[test_sorted, :]
    return features.tocsr(), labels, parts["graph"]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("raw_dir", type=Path)
    ap.add_argument("name", choices=["cora", "citeseer", "pubmed"])
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()

    features, onehot, graph = load(args.raw_dir, args.name)
    n = features.shape[0]
    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    # rows without a label (citeseer padding) get the most common class
    labels = onehot.argmax(axis=1)
    unlabelled = onehot.sum(axis=1) == 0
    if unlabelled.any():
        labels[unlabelled] = np.bincount(labels[~unlabelled]).argmax()
        print(f"warning: {unlabelled.sum()} nodes had no label", file=sys.stderr)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    dense = features.toarray()
    with open(out / "features.tsv", "w") as f:
        for row in dense:
            f.write(" ".join(f"{x:.17g}" for x in row) + "\n")
    with open(out / "labels.tsv", "w") as f:
        f.writelines(f"{int(l)}\n" for l in labels)
    with open(out / "meta.json", "w") as f:
        json.dump({"n_nodes": int(n), "k_clusters": int(onehot.shape[1]), "dataset_name": args.name}, f)
    print(f"{args.name}: {n} nodes, {len(edges)} edges, {dense.shape[1]} features, {onehot.shape[1]} classes")
    return 0


if __name__ == "__main__":
    sys.exit(main())
