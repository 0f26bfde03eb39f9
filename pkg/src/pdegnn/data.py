"""Dataset bundles, split generation, and synthetic verification graphs.

Bundle directory layout (bit-exact, shared with the offline converter):

    meta.json    -- {"name","n","m","f_in","classes","feature_dtype":"f32",
                     "has_masks","payload_sha256"}
    edges.csv    -- one "tail,head" per line, 0-based, tail < head, sorted
    features.bin -- little-endian float32, row-major, n*f_in values
    labels.csv   -- one class index per line, n lines
    masks.csv    -- optional, one of train|val|test|none per line, n lines

payload_sha256 is the hex digest over the byte concatenation of edges.csv,
features.bin, labels.csv and (when present) masks.csv, in that order.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sparse import Graph

# Published statistics for the citation benchmarks; bundles carrying these
# names must match exactly or refuse to load.
BENCHMARK_STATS = {
    "cora": {"n": 2708, "m": 5429, "f_in": 1433, "classes": 7},
    "citeseer": {"n": 3327, "m": 4732, "f_in": 3703, "classes": 6},
    "pubmed": {"n": 19717, "m": 44338, "f_in": 500, "classes": 3},
    "chameleon": {"n": 2277, "m": 36101, "f_in": 2325, "classes": 5},
}

_MASK_NAMES = ("train", "val", "test", "none")


class BundleError(ValueError):
    """Bundle failed validation; ``code`` identifies the exact failure."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class SplitSpec:
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    seed: int

    def __post_init__(self):
        overlap = (self.train_mask & self.val_mask) | \
                  (self.train_mask & self.test_mask) | \
                  (self.val_mask & self.test_mask)
        if overlap.any():
            raise ValueError("split masks overlap")
        for name in ("train_mask", "val_mask", "test_mask"):
            if not getattr(self, name).any():
                raise ValueError(f"{name} is empty")


@dataclass
class DatasetBundle:
    name: str
    n: int
    m: int
    f_in: int
    classes: int
    features: np.ndarray     # n x f_in float32
    labels: np.ndarray       # length n int64
    edges: np.ndarray        # m x 2 int64, tail < head, sorted
    masks: SplitSpec | None = None

    def graph(self) -> Graph:
        return Graph(self.n, self.edges)


# ---------------------------------------------------------------------------
# bundle IO


def _payload_sha256(bundle_dir: Path, has_masks: bool) -> str:
    digest = hashlib.sha256()
    names = ["edges.csv", "features.bin", "labels.csv"]
    if has_masks:
        names.append("masks.csv")
    for name in names:
        digest.update((bundle_dir / name).read_bytes())
    return digest.hexdigest()


def load_bundle(path) -> DatasetBundle:
    """Load and fully validate a bundle directory."""
    bundle_dir = Path(path)
    meta_path = bundle_dir / "meta.json"
    if not meta_path.is_file():
        raise BundleError("missing-file", f"no meta.json in {bundle_dir}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    for key in ("name", "n", "m", "f_in", "classes", "feature_dtype",
                "has_masks", "payload_sha256"):
        if key not in meta:
            raise BundleError("meta-field", f"meta.json missing {key!r}")
    if meta["feature_dtype"] != "f32":
        raise BundleError("meta-field",
                          f"unsupported feature_dtype {meta['feature_dtype']!r}")
    n, m, f_in, classes = (int(meta[k]) for k in ("n", "m", "f_in", "classes"))

    for name in ("edges.csv", "features.bin", "labels.csv"):
        if not (bundle_dir / name).is_file():
            raise BundleError("missing-file", f"no {name} in {bundle_dir}")
    if meta["has_masks"] and not (bundle_dir / "masks.csv").is_file():
        raise BundleError("missing-file", f"no masks.csv in {bundle_dir}")

    actual_sha = _payload_sha256(bundle_dir, meta["has_masks"])
    if actual_sha != meta["payload_sha256"]:
        raise BundleError("checksum-mismatch",
                          f"payload sha256 {actual_sha} != meta "
                          f"{meta['payload_sha256']}")

    raw = (bundle_dir / "edges.csv").read_text(encoding="utf-8").split()
    if len(raw) != m:
        raise BundleError("edge-count-mismatch",
                          f"edge count mismatch: {len(raw)} lines, meta says {m}")
    edges = np.zeros((m, 2), dtype=np.int64)
    for i, line in enumerate(raw):
        t, h = line.split(",")
        edges[i] = (int(t), int(h))
    if m:
        if edges.min() < 0 or edges.max() >= n:
            raise BundleError("edge-range", "edge endpoint out of range")
        if np.any(edges[:, 0] >= edges[:, 1]):
            raise BundleError("edge-orientation",
                              "edges must satisfy tail < head")
        keys = edges[:, 0] * n + edges[:, 1]
        if np.any(np.diff(keys) <= 0):
            raise BundleError("edge-order", "edges must be sorted and unique")

    feat_bytes = (bundle_dir / "features.bin").read_bytes()
    expected = n * f_in * 4
    if len(feat_bytes) != expected:
        raise BundleError("feature-row-mismatch",
                          f"feature row count mismatch: file holds "
                          f"{len(feat_bytes) // max(f_in * 4, 1)} rows, "
                          f"meta says {n}")
    features = np.frombuffer(feat_bytes, dtype="<f4").reshape(n, f_in).copy()
    if not np.all(np.isfinite(features)):
        raise BundleError("nan-features", "features contain NaN or inf")

    label_lines = (bundle_dir / "labels.csv").read_text(encoding="utf-8").split()
    if len(label_lines) != n:
        raise BundleError("label-count-mismatch",
                          f"labels: {len(label_lines)} != {n}")
    labels = np.array([int(x) for x in label_lines], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= classes:
        raise BundleError("label-range", "label out of range")

    masks = None
    if meta["has_masks"]:
        mask_lines = (bundle_dir / "masks.csv").read_text(encoding="utf-8").split()
        if len(mask_lines) != n:
            raise BundleError("mask-count-mismatch",
                              f"masks: {len(mask_lines)} != {n}")
        bad = set(mask_lines) - set(_MASK_NAMES)
        if bad:
            raise BundleError("mask-value", f"unknown mask values {bad}")
        arr = np.array(mask_lines)
        masks = SplitSpec(train_mask=arr == "train", val_mask=arr == "val",
                          test_mask=arr == "test", seed=-1)

    name = str(meta["name"])
    if name in BENCHMARK_STATS:
        stats = BENCHMARK_STATS[name]
        got = {"n": n, "m": m, "f_in": f_in, "classes": classes}
        if got != stats:
            raise BundleError("benchmark-stats",
                              f"{name} bundle statistics {got} do not match "
                              f"the published values {stats}")

    return DatasetBundle(name=name, n=n, m=m, f_in=f_in, classes=classes,
                         features=features, labels=labels, edges=edges,
                         masks=masks)


def save_bundle(bundle: DatasetBundle, path) -> None:
    """Write the bundle layout; inverse of load_bundle."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    edges = bundle.edges
    if edges.size:
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
    lines = "".join(f"{t},{h}\n" for t, h in edges.tolist())
    (out / "edges.csv").write_text(lines, encoding="utf-8")
    feats = np.ascontiguousarray(bundle.features, dtype="<f4")
    (out / "features.bin").write_bytes(feats.tobytes())
    (out / "labels.csv").write_text(
        "".join(f"{v}\n" for v in bundle.labels.tolist()), encoding="utf-8")
    has_masks = bundle.masks is not None
    if has_masks:
        tags = np.full(bundle.n, "none", dtype=object)
        tags[bundle.masks.train_mask] = "train"
        tags[bundle.masks.val_mask] = "val"
        tags[bundle.masks.test_mask] = "test"
        (out / "masks.csv").write_text(
            "".join(f"{t}\n" for t in tags), encoding="utf-8")
    meta = {
        "name": bundle.name, "n": bundle.n, "m": bundle.m,
        "f_in": bundle.f_in, "classes": bundle.classes,
        "feature_dtype": "f32", "has_masks": has_masks,
        "payload_sha256": _payload_sha256(out, has_masks),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n",
                                   encoding="utf-8")


def row_normalize(features: np.ndarray) -> np.ndarray:
    """Divide each row by its sum; zero rows stay zero.

    Conventional preprocessing for bag-of-words citation features; whether
    it was applied is recorded in run metadata.
    """
    sums = features.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return (features / sums).astype(features.dtype)


# ---------------------------------------------------------------------------
# splits


def semi_split(bundle: DatasetBundle, seed: int) -> SplitSpec:
    """20 training nodes per class, 500 validation, 1000 test.

    When the bundle ships precomputed masks (the community-standard split),
    those win over seeded generation.
    """
    if bundle.masks is not None:
        return bundle.masks
    per_class = 20
    needed = per_class * bundle.classes + 1500
    if bundle.n < needed:
        raise ValueError(f"need at least {needed} nodes for the "
                         f"semi-supervised protocol, have {bundle.n}")
    rng = np.random.default_rng(seed)
    train = np.zeros(bundle.n, dtype=bool)
    for c in range(bundle.classes):
        members = np.flatnonzero(bundle.labels == c)
        if len(members) < per_class:
            raise ValueError(f"class {c} has only {len(members)} nodes, "
                             f"need {per_class}")
        train[rng.choice(members, size=per_class, replace=False)] = True
    rest = np.flatnonzero(~train)
    picked = rng.choice(rest, size=1500, replace=False)
    val = np.zeros(bundle.n, dtype=bool)
    test = np.zeros(bundle.n, dtype=bool)
    val[picked[:500]] = True
    test[picked[500:]] = True
    return SplitSpec(train_mask=train, val_mask=val, test_mask=test, seed=seed)


def full_split(bundle: DatasetBundle, seed: int) -> SplitSpec:
    """Stratified 60/20/20 partition; per-class rounding remainders go to train.

    Classes with fewer than 3 members force an unstratified fallback (with a
    warning), since they cannot contribute to all three masks.
    """
    if bundle.n < 10:
        raise ValueError("full split needs at least 10 nodes")
    rng = np.random.default_rng(seed)
    counts = np.bincount(bundle.labels, minlength=bundle.classes)
    train = np.zeros(bundle.n, dtype=bool)
    val = np.zeros(bundle.n, dtype=bool)
    test = np.zeros(bundle.n, dtype=bool)
    if counts.min() < 3:
        warnings.warn("class with fewer than 3 members; falling back to an "
                      "unstratified 60/20/20 split", stacklevel=2)
        order = rng.permutation(bundle.n)
        n_val = bundle.n // 5
        n_test = bundle.n // 5
        n_train = bundle.n - n_val - n_test
        train[order[:n_train]] = True
        val[order[n_train:n_train + n_val]] = True
        test[order[n_train + n_val:]] = True
    else:
        for c in range(bundle.classes):
            members = rng.permutation(np.flatnonzero(bundle.labels == c))
            n_c = len(members)
            n_val = n_c // 5
            n_test = n_c // 5
            n_train = n_c - n_val - n_test
            train[members[:n_train]] = True
            val[members[n_train:n_train + n_val]] = True
            test[members[n_train + n_val:]] = True
    return SplitSpec(train_mask=train, val_mask=val, test_mask=test, seed=seed)


# ---------------------------------------------------------------------------
# synthetic graphs


def _canonical(pairs) -> list[tuple[int, int]]:
    return sorted({(min(t, h), max(t, h)) for t, h in pairs})


def make_grid_graph(rows: int, cols: int) -> Graph:
    """Regular 2D grid: rows*cols nodes, 4-neighborhood edges."""
    def node(r, c):
        return r * cols + c
    pairs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                pairs.append((node(r, c), node(r, c + 1)))
            if r + 1 < rows:
                pairs.append((node(r, c), node(r + 1, c)))
    return Graph(rows * cols, _canonical(pairs))


def make_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs at least 3 nodes")
    pairs = [(i, (i + 1) % n) for i in range(n)]
    return Graph(n, _canonical(pairs))


def make_random(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) with canonical edge orientation."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    pairs = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    return Graph(n, pairs)


def make_random_regular(n: int, degree: int, seed: int) -> Graph:
    """Random d-regular graph via the pairing model (rejection sampled).

    Regularity matters for the over-smoothing diagnostics: on a regular
    graph the dominant eigenvector of the GCN propagation operator is
    constant, so deep smoothing genuinely collapses node variance instead
    of converging to the square-root-degree profile.
    """
    if n * degree % 2 != 0:
        raise ValueError("n * degree must be even")
    if degree >= n:
        raise ValueError("degree must be < n")
    rng = np.random.default_rng(seed)
    for _ in range(200):
        stubs = list(np.repeat(np.arange(n), degree))
        edges: set[tuple[int, int]] = set()
        stuck = False
        while stubs and not stuck:
            # draw stub pairs until one is legal; restart if none can be
            for _ in range(500):
                i = int(rng.integers(len(stubs)))
                j = int(rng.integers(len(stubs)))
                a, b = int(stubs[i]), int(stubs[j])
                if i == j or a == b:
                    continue
                key = (min(a, b), max(a, b))
                if key in edges:
                    continue
                edges.add(key)
                for k in sorted((i, j), reverse=True):
                    stubs.pop(k)
                break
            else:
                stuck = True
        if not stuck:
            return Graph(n, sorted(edges))
    raise RuntimeError("failed to sample a simple regular graph")


def is_connected(g: Graph) -> bool:
    if g.n == 1:
        return True
    adj = [[] for _ in range(g.n)]
    for t, h in g.edges.tolist():
        adj[t].append(h)
        adj[h].append(t)
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def dedup_edges(pairs, n: int) -> np.ndarray:
    """Canonicalize raw edge pairs: drop self-loops, dedup, warn on duplicates."""
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    arr = arr[arr[:, 0] != arr[:, 1]]
    canon = np.sort(arr, axis=1)
    uniq = np.unique(canon, axis=0)
    if len(uniq) != len(canon):
        warnings.warn(f"removed {len(canon) - len(uniq)} duplicate edges",
                      stacklevel=2)
    return uniq


def make_toy_bundle(name: str = "toy-blobs", n_per_class: int = 40,
                    classes: int = 2, f_in: int = 4, seed: int = 7,
                    separation: float = 3.0) -> DatasetBundle:
    """Small separable dataset on a class-clustered random graph.

    Gaussian feature blobs, one centroid per class, with intra-class edges
    much more likely than inter-class ones.  Used by trainer tests and the
    always-runnable acceptance criteria.
    """
    rng = np.random.default_rng(seed)
    n = n_per_class * classes
    labels = np.repeat(np.arange(classes), n_per_class)
    centers = rng.normal(0.0, 1.0, size=(classes, f_in))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    features = centers[labels] + rng.normal(0.0, 0.6, size=(n, f_in))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            p = 0.15 if labels[i] == labels[j] else 0.01
            if rng.random() < p:
                pairs.append((i, j))
    # keep the graph connected: chain any stranded node to its predecessor
    present = np.zeros(n, dtype=bool)
    for t, h in pairs:
        present[t] = present[h] = True
    for i in range(1, n):
        if not present[i]:
            pairs.append((i - 1, i))
            present[i] = True
    edges = dedup_edges(pairs, n)
    return DatasetBundle(name=name, n=n, m=len(edges), f_in=f_in,
                         classes=classes,
                         features=features.astype(np.float32),
                         labels=labels.astype(np.int64), edges=edges)
