"""Fixed graph operators: gradient/incidence, edge averaging, GCN propagation.

All three operators are built once from an immutable edge list and never
change during training.  The gradient operator G (m x n) maps node fields to
signed edge differences; its transpose is the graph divergence, and every
row of G sums to zero by construction, which is what makes the divergence
form of the propagation blocks mass-conserving.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as _sp


class GraphError(ValueError):
    """Invalid graph structure (bad indices, self-loop, duplicate edge)."""


class Graph:
    """Immutable oriented edge list over ``n`` nodes.

    The orientation of each edge is preserved exactly as given; callers that
    need a canonical form (loaders, generators) orient edges as
    (min index -> max index) before constructing the Graph.  Self-loops and
    duplicate undirected edges are rejected here, not repaired.
    """

    __slots__ = ("n", "edges")

    def __init__(self, n: int, edges) -> None:
        if n < 1:
            raise GraphError(f"node count must be >= 1, got {n}")
        arr = np.asarray(list(edges), dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise GraphError("edges must be (tail, head) pairs")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise GraphError("self-loops are not allowed in the edge list")
        undirected = np.sort(arr, axis=1)
        if len(np.unique(undirected, axis=0)) != len(arr):
            raise GraphError("duplicate undirected edge")
        arr.setflags(write=False)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def tails(self) -> np.ndarray:
        return self.edges[:, 0]

    @property
    def heads(self) -> np.ndarray:
        return self.edges[:, 1]

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


class SparseOperator:
    """Sparse matrix as row-sorted triplets with compiled offset indexes.

    Application is delegated to compiled CSR kernels (one per float width,
    plus a transposed copy), so products are fast, single-threaded, and
    accumulate each row's entries in storage order: results are bitwise
    reproducible for a given input, and rows whose entries cancel exactly
    (the gradient rows) produce exact zeros.
    """

    __slots__ = ("rows", "cols", "_row", "_col", "_val", "_mats")

    def __init__(self, rows: int, cols: int, entries) -> None:
        entries = list(entries)
        self.rows = int(rows)
        self.cols = int(cols)
        if entries:
            r = np.array([e[0] for e in entries], dtype=np.int64)
            c = np.array([e[1] for e in entries], dtype=np.int64)
            v = np.array([e[2] for e in entries], dtype=np.float64)
        else:
            r = np.zeros(0, dtype=np.int64)
            c = np.zeros(0, dtype=np.int64)
            v = np.zeros(0, dtype=np.float64)
        if r.size:
            if r.min() < 0 or r.max() >= self.rows:
                raise ValueError("row index out of range")
            if c.min() < 0 or c.max() >= self.cols:
                raise ValueError("col index out of range")
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        if r.size > 1:
            same = (np.diff(r) == 0) & (np.diff(c) == 0)
            if np.any(same):
                raise ValueError("duplicate (row, col) entry")
        self._row, self._col, self._val = r, c, v
        fwd = _sp.csr_matrix((v, (r, c)), shape=(self.rows, self.cols))
        bwd = _sp.csr_matrix((v, (c, r)), shape=(self.cols, self.rows))
        self._mats = {
            (False, np.dtype(np.float64)): fwd,
            (True, np.dtype(np.float64)): bwd,
            (False, np.dtype(np.float32)): fwd.astype(np.float32),
            (True, np.dtype(np.float32)): bwd.astype(np.float32),
        }

    @property
    def nnz(self) -> int:
        return len(self._val)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def entries(self):
        """Triplets in (row, col) order."""
        return zip(self._row.tolist(), self._col.tolist(), self._val.tolist())

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self._row, self._col] = self._val
        return out

    def _mat(self, transposed: bool, dtype):
        key = (transposed, np.dtype(dtype))
        if key not in self._mats:
            key = (transposed, np.dtype(np.float64))
        return self._mats[key]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Product op @ x for dense x of shape (cols, d)."""
        x = np.asarray(x)
        if x.shape[0] != self.cols:
            raise ValueError(
                f"dimension mismatch: operator is {self.rows}x{self.cols}, "
                f"input has {x.shape[0]} rows")
        return self._mat(False, x.dtype) @ x

    def apply_transposed(self, x: np.ndarray) -> np.ndarray:
        """Product op.T @ x for dense x of shape (rows, d)."""
        x = np.asarray(x)
        if x.shape[0] != self.rows:
            raise ValueError(
                f"dimension mismatch: transposed operator is "
                f"{self.cols}x{self.rows}, input has {x.shape[0]} rows")
        return self._mat(True, x.dtype) @ x


def build_gradient(g: Graph) -> SparseOperator:
    """Edge-by-node difference operator: row e of edge (i -> j) is -1 at i, +1 at j.

    Maps node space to edge space; the transposed application is the graph
    divergence.  Each row holds exactly one -1/+1 pair, so G @ 1 vanishes by
    entry cancellation, not merely to rounding.
    """
    entries = []
    for e, (t, h) in enumerate(g.edges.tolist()):
        entries.append((e, t, -1.0))
        entries.append((e, h, 1.0))
    return SparseOperator(g.m, g.n, entries)


def build_averaging(g: Graph) -> SparseOperator:
    """Edge-by-node averaging: row e of edge (i, j) holds 0.5 at i and at j."""
    entries = []
    for e, (t, h) in enumerate(g.edges.tolist()):
        entries.append((e, t, 0.5))
        entries.append((e, h, 0.5))
    return SparseOperator(g.m, g.n, entries)


def build_gcn_propagation(g: Graph) -> SparseOperator:
    """Symmetric-normalized adjacency with self-loops.

    Adds the identity to the 0/1 undirected adjacency and normalizes both
    sides by the inverse square root of the self-loop-augmented degree.
    Isolated nodes are legal: the self-loop makes their degree 1.
    """
    deg = np.ones(g.n)  # self-loop counts 1 for every node
    np.add.at(deg, g.tails, 1.0)
    np.add.at(deg, g.heads, 1.0)
    dinv = 1.0 / np.sqrt(deg)
    entries = [(i, i, dinv[i] * dinv[i]) for i in range(g.n)]
    for t, h in g.edges.tolist():
        w = dinv[t] * dinv[h]
        entries.append((t, h, w))
        entries.append((h, t, w))
    return SparseOperator(g.n, g.n, entries)


def spmm(op: SparseOperator, x: np.ndarray) -> np.ndarray:
    """Sparse times dense: op @ x."""
    return op.apply(x)


def spmm_transposed(op: SparseOperator, x: np.ndarray) -> np.ndarray:
    """Transposed sparse times dense: op.T @ x."""
    return op.apply_transposed(x)
