"""Bundle IO, split protocols, and synthetic graph generators."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdegnn.data import (BundleError, DatasetBundle, SplitSpec, full_split,
                         is_connected, load_bundle, make_cycle,
                         make_grid_graph, make_random, make_random_regular,
                         make_toy_bundle, row_normalize, save_bundle,
                         semi_split)


@pytest.fixture
def toy(tmp_path):
    bundle = make_toy_bundle(n_per_class=30, classes=3, f_in=5, seed=1)
    out = tmp_path / "toy"
    save_bundle(bundle, out)
    return bundle, out


class TestBundleIO:
    def test_round_trip_identity(self, toy):
        bundle, out = toy
        loaded = load_bundle(out)
        assert loaded.name == bundle.name
        assert (loaded.n, loaded.m, loaded.f_in, loaded.classes) == \
            (bundle.n, bundle.m, bundle.f_in, bundle.classes)
        assert np.array_equal(loaded.features, bundle.features)
        assert np.array_equal(loaded.labels, bundle.labels)
        assert np.array_equal(loaded.edges, bundle.edges)

    def test_round_trip_with_masks(self, tmp_path):
        bundle = make_toy_bundle(seed=2)
        bundle.masks = semi_split_or_simple(bundle)
        out = tmp_path / "masked"
        save_bundle(bundle, out)
        loaded = load_bundle(out)
        assert np.array_equal(loaded.masks.train_mask, bundle.masks.train_mask)
        assert np.array_equal(loaded.masks.val_mask, bundle.masks.val_mask)
        assert np.array_equal(loaded.masks.test_mask, bundle.masks.test_mask)

    def test_truncated_features(self, toy):
        _, out = toy
        raw = (out / "features.bin").read_bytes()
        (out / "features.bin").write_bytes(raw[:-20])
        # checksum guard trips first; bypass it to reach the row check
        meta = json.loads((out / "meta.json").read_text())
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code == "checksum-mismatch"
        from pdegnn.data import _payload_sha256
        meta["payload_sha256"] = _payload_sha256(out, meta["has_masks"])
        (out / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(BundleError, match="feature row count mismatch") as err:
            load_bundle(out)
        assert err.value.code == "feature-row-mismatch"

    def test_label_out_of_range(self, toy):
        _, out = toy
        lines = (out / "labels.csv").read_text().splitlines()
        lines[0] = "99"
        (out / "labels.csv").write_text("\n".join(lines) + "\n")
        _refresh_sha(out)
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code == "label-range"

    def test_nan_features(self, toy):
        _, out = toy
        bundle = load_bundle(out)
        bundle.features[0, 0] = np.nan
        save_bundle(bundle, out)
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code == "nan-features"

    def test_missing_file(self, toy):
        _, out = toy
        (out / "labels.csv").unlink()
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code == "missing-file"

    def test_benchmark_name_enforces_published_stats(self, tmp_path):
        bundle = make_toy_bundle(seed=3)
        bundle.name = "cora"
        out = tmp_path / "fake-cora"
        save_bundle(bundle, out)
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code == "benchmark-stats"

    def test_edge_orientation_enforced(self, toy):
        _, out = toy
        text = (out / "edges.csv").read_text().splitlines()
        t, h = text[0].split(",")
        text[0] = f"{h},{t}"
        (out / "edges.csv").write_text("\n".join(text) + "\n")
        _refresh_sha(out)
        with pytest.raises(BundleError) as err:
            load_bundle(out)
        assert err.value.code in ("edge-orientation", "edge-order")


def _refresh_sha(out):
    from pdegnn.data import _payload_sha256
    meta = json.loads((out / "meta.json").read_text())
    meta["payload_sha256"] = _payload_sha256(out, meta["has_masks"])
    (out / "meta.json").write_text(json.dumps(meta))


def semi_split_or_simple(bundle):
    n = bundle.n
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    train[: n // 3] = True
    val[n // 3: 2 * n // 3] = True
    test[2 * n // 3:] = True
    return SplitSpec(train, val, test, seed=0)


class TestSemiSplit:
    def make_big(self, classes=4, seed=0):
        rng = np.random.default_rng(seed)
        n = 20 * classes + 1600
        labels = rng.integers(0, classes, n)
        labels[:20 * classes] = np.repeat(np.arange(classes), 20)
        return DatasetBundle(
            name="big", n=n, m=1, f_in=2, classes=classes,
            features=rng.standard_normal((n, 2)).astype(np.float32),
            labels=labels.astype(np.int64),
            edges=np.array([[0, 1]], dtype=np.int64))

    def test_cardinalities(self):
        bundle = self.make_big(classes=4)
        split = semi_split(bundle, seed=0)
        assert split.train_mask.sum() == 80
        assert split.val_mask.sum() == 500
        assert split.test_mask.sum() == 1000
        for c in range(4):
            assert (bundle.labels[split.train_mask] == c).sum() == 20

    def test_three_classes_sixty_train(self):
        bundle = self.make_big(classes=3)
        assert semi_split(bundle, 0).train_mask.sum() == 60

    def test_deterministic(self):
        bundle = self.make_big()
        a, b = semi_split(bundle, 5), semi_split(bundle, 5)
        assert np.array_equal(a.train_mask, b.train_mask)
        assert np.array_equal(a.val_mask, b.val_mask)
        c = semi_split(bundle, 6)
        assert not np.array_equal(a.val_mask, c.val_mask)

    def test_precomputed_masks_win(self):
        bundle = self.make_big()
        bundle.masks = semi_split_or_simple(bundle)
        split = semi_split(bundle, seed=123)
        assert split is bundle.masks

    def test_too_small_rejected(self):
        bundle = make_toy_bundle(n_per_class=30, classes=2)
        with pytest.raises(ValueError, match="at least"):
            semi_split(bundle, 0)


class TestFullSplit:
    def test_single_class_ten_nodes(self):
        rng = np.random.default_rng(1)
        bundle = DatasetBundle(
            name="ten", n=10, m=1, f_in=1, classes=1,
            features=rng.standard_normal((10, 1)).astype(np.float32),
            labels=np.zeros(10, dtype=np.int64),
            edges=np.array([[0, 1]], dtype=np.int64))
        split = full_split(bundle, 0)
        assert (split.train_mask.sum(), split.val_mask.sum(),
                split.test_mask.sum()) == (6, 2, 2)

    def test_stratified_counts_match_per_class_rule(self):
        bundle = make_toy_bundle(n_per_class=37, classes=3, seed=4)
        split = full_split(bundle, 0)
        # per class of 37: val 7, test 7, train 23
        assert split.train_mask.sum() == 23 * 3
        assert split.val_mask.sum() == 7 * 3
        assert split.test_mask.sum() == 7 * 3
        for c in range(3):
            assert (bundle.labels[split.train_mask] == c).sum() == 23

    def test_ten_seeds_distinct(self):
        bundle = make_toy_bundle(n_per_class=50, classes=2, seed=5)
        masks = {full_split(bundle, s).train_mask.tobytes()
                 for s in range(10)}
        assert len(masks) == 10

    def test_tiny_class_falls_back_with_warning(self):
        rng = np.random.default_rng(2)
        labels = np.zeros(20, dtype=np.int64)
        labels[0] = 1  # class 1 has a single member
        bundle = DatasetBundle(
            name="skew", n=20, m=1, f_in=1, classes=2,
            features=rng.standard_normal((20, 1)).astype(np.float32),
            labels=labels, edges=np.array([[0, 1]], dtype=np.int64))
        with pytest.warns(UserWarning, match="unstratified"):
            split = full_split(bundle, 0)
        assert split.train_mask.sum() == 12

    def test_masks_always_disjoint(self):
        bundle = make_toy_bundle(n_per_class=25, classes=4, seed=6)
        for seed in range(5):
            split = full_split(bundle, seed)
            total = (split.train_mask.astype(int) + split.val_mask
                     + split.test_mask)
            assert total.max() == 1 and total.min() == 1


class TestGenerators:
    def test_grid(self):
        g = make_grid_graph(2, 2)
        assert (g.n, g.m) == (4, 4)

    def test_cycle(self):
        g = make_cycle(5)
        assert (g.n, g.m) == (5, 5)
        assert is_connected(g)

    def test_random_edge_count_within_3_sigma(self):
        n, p = 100, 0.05
        pairs = n * (n - 1) // 2
        mean = pairs * p
        sigma = np.sqrt(pairs * p * (1 - p))
        counts = [make_random(n, p, s).m for s in range(10)]
        for c in counts:
            assert abs(c - mean) <= 3 * sigma
        assert len(set(counts)) > 1

    def test_regular_graph_degrees(self):
        g = make_random_regular(40, 6, 0)
        deg = np.zeros(40, dtype=int)
        for t, h in g.edges.tolist():
            deg[t] += 1
            deg[h] += 1
        assert np.all(deg == 6)
        assert is_connected(g)


def test_row_normalize():
    x = np.array([[1.0, 3.0], [0.0, 0.0]], dtype=np.float32)
    out = row_normalize(x)
    assert np.allclose(out, [[0.25, 0.75], [0.0, 0.0]])


def test_toy_bundle_is_trainable_shape():
    bundle = make_toy_bundle()
    assert bundle.n == bundle.features.shape[0] == len(bundle.labels)
    assert is_connected(bundle.graph())
    assert bundle.m == len(bundle.edges)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), classes=st.integers(2, 5))
def test_full_split_cardinalities_property(seed, classes):
    bundle = make_toy_bundle(n_per_class=23, classes=classes, seed=seed)
    split = full_split(bundle, seed)
    assert split.train_mask.sum() == 15 * classes  # 23 - 4 - 4
    assert split.val_mask.sum() == 4 * classes
    assert split.test_mask.sum() == 4 * classes
    assert not (split.train_mask & split.val_mask).any()
    assert not (split.train_mask & split.test_mask).any()
