#!/usr/bin/env python3
"""Generate the committed test fixtures: tiny synthetic source datasets in
the eight-file layout, plus expected conversion results computed here with
numpy as an independent oracle for the TypeScript tests.

Run from converter/: python3 scripts/make_fixtures.py
"""

import json
import pickle
from collections import defaultdict
from pathlib import Path

import numpy as np
import scipy.sparse as sp

ROOT = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def one_hot(labels, classes, dtype):
    out = np.zeros((len(labels), classes), dtype=dtype)
    out[np.arange(len(labels)), labels] = 1
    return out


def build_mini(rng):
    """13 nodes: 6 train + 3 extra labeled + 4 test (contiguous ids 9..12)."""
    classes, f = 3, 4
    ally_labels = rng.integers(0, classes, 9)
    ty_labels = rng.integers(0, classes, 4)
    allx = np.round(rng.random((9, f)) * (rng.random((9, f)) < 0.6), 3)
    tx = np.round(rng.random((4, f)) * (rng.random((4, f)) < 0.6), 3)
    test_index = [11, 9, 12, 10]
    graph = defaultdict(list)

    def add(u, v):
        graph[u].append(v)
        graph[v].append(u)

    for u, v in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7),
                 (7, 8), (8, 9), (9, 10), (10, 11), (11, 12), (0, 5),
                 (2, 9), (4, 12)]:
        add(u, v)
    graph[3].append(3)          # self-loop, must be removed
    add(0, 1)                   # duplicate pair, must be deduplicated
    return dict(
        x=sp.csr_matrix(allx[:6].astype(np.float32)),
        y=one_hot(ally_labels[:6], classes, np.int32),
        allx=sp.csr_matrix(allx.astype(np.float32)),
        ally=one_hot(ally_labels, classes, np.int32),
        tx=sp.csr_matrix(tx.astype(np.float32)),
        ty=one_hot(ty_labels, classes, np.int32),
        graph=graph,
        test_index=test_index,
    )


def build_gap(rng):
    """12 nodes with gaps in the test range (ids 8 and 10 missing)."""
    classes, f = 2, 3
    ally_labels = rng.integers(0, classes, 7)
    ty_labels = rng.integers(0, classes, 3)
    allx = np.round(rng.random((7, f)), 3)
    tx = np.round(rng.random((3, f)), 3)
    test_index = [9, 11, 7]     # present ids; full span is 7..11
    graph = defaultdict(list)

    def add(u, v):
        graph[u].append(v)
        graph[v].append(u)

    for u, v in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7),
                 (1, 9), (2, 11), (0, 7)]:
        add(u, v)
    return dict(
        x=sp.csr_matrix(allx[:4].astype(np.float32)),
        y=one_hot(ally_labels[:4], classes, np.int32),
        allx=sp.csr_matrix(allx.astype(np.float32)),
        ally=one_hot(ally_labels, classes, np.float64),  # dtype variety
        tx=sp.csr_matrix(tx.astype(np.float32)),
        ty=one_hot(ty_labels, classes, np.float64),
        graph=graph,
        test_index=test_index,
    )


def expected_conversion(d):
    """The standard assembly, written independently of the converter."""
    x, y = d["x"].toarray(), d["y"]
    allx, ally = d["allx"].toarray(), np.asarray(d["ally"], dtype=float)
    tx, ty = d["tx"].toarray(), np.asarray(d["ty"], dtype=float)
    test_idx = np.array(d["test_index"])
    test_range = np.sort(test_idx)
    full = np.arange(test_range.min(), test_range.max() + 1)

    tx_ext = np.zeros((len(full), allx.shape[1]), dtype=np.float32)
    tx_ext[test_range - full.min()] = tx
    ty_ext = np.zeros((len(full), ally.shape[1]))
    ty_ext[test_range - full.min()] = ty

    features = np.vstack([allx, tx_ext]).astype(np.float32)
    labels_1hot = np.vstack([ally, ty_ext])
    features[test_idx] = features[test_range]
    labels_1hot[test_idx] = labels_1hot[test_range]
    labels = labels_1hot.argmax(axis=1)

    n = len(features)
    pairs = set()
    for u, neighbors in d["graph"].items():
        for v in neighbors:
            if u != v:
                pairs.add((min(u, v), max(u, v)))
    edges = sorted(pairs)

    tags = ["none"] * n
    for i in range(len(y)):
        tags[i] = "train"
    for i in range(len(y), min(len(y) + 500, len(allx))):
        tags[i] = "val"
    for i in test_idx:
        tags[i] = "test"

    return {
        "n": n,
        "m": len(edges),
        "f_in": features.shape[1],
        "classes": labels_1hot.shape[1],
        "features": [[float(v) for v in row] for row in features],
        "labels": [int(v) for v in labels],
        "edges": [[int(t), int(h)] for t, h in edges],
        "masks": tags,
    }


def write_fixture(name, d, protocol):
    out = ROOT / name
    out.mkdir(parents=True, exist_ok=True)
    short = name.split("_")[0]
    for piece in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        with open(out / f"ind.{short}.{piece}", "wb") as f:
            pickle.dump(d[piece], f, protocol=protocol)
    (out / f"ind.{short}.test.index").write_text(
        "".join(f"{i}\n" for i in d["test_index"]))
    (out / "expected.json").write_text(
        json.dumps(expected_conversion(d), indent=1) + "\n")


def main():
    rng = np.random.default_rng(20240511)
    mini = build_mini(rng)
    write_fixture("mini_p2", mini, protocol=2)
    write_fixture("mini_p4", mini, protocol=4)
    write_fixture("gap_p2", build_gap(rng), protocol=2)
    print(f"fixtures written under {ROOT}")


if __name__ == "__main__":
    main()
