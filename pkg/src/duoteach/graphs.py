"""Graph data model, dataset ingestion, masking and split generation.

Graphs are undirected, weight-1 on load, with a boolean per-entry feature
observation mask. Masked feature entries hold a 0 placeholder and must never
be read as data; models consult ``feature_observed`` instead.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, FormatError, ParseError
from .sparsemat import SparseRowMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, Split):
            return NotImplemented
        return (
            np.array_equal(self.train, other.train)
            and np.array_equal(self.val, other.val)
            and np.array_equal(self.test, other.test)
        )


@dataclass(frozen=True)
class MaskSpec:
    """How much to hide, and how. feature_mode: 'entrywise' or 'nodewise'."""

    feature_missing_rate: float = 0.0
    edge_missing_rate: float = 0.0
    feature_mode: str = "entrywise"
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.feature_missing_rate <= 1.0:
            raise ConfigError(f"feature_missing_rate out of [0,1]: {self.feature_missing_rate}")
        if not 0.0 <= self.edge_missing_rate <= 1.0:
            raise ConfigError(f"edge_missing_rate out of [0,1]: {self.edge_missing_rate}")
        if self.feature_mode not in ("entrywise", "nodewise"):
            raise ConfigError(f"unknown feature_mode: {self.feature_mode!r}")


@dataclass
class LoadStats:
    skipped_edges: int = 0  # references to ids absent from the node table


@dataclass
class IncompleteGraph:
    n: int
    adjacency: SparseRowMatrix
    features: np.ndarray
    feature_observed: np.ndarray
    labels: np.ndarray
    split: Split | None = None
    stats: LoadStats = field(default_factory=LoadStats)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.feature_observed = np.asarray(self.feature_observed, dtype=bool)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.adjacency.rows != self.n or self.adjacency.cols != self.n:
            raise FormatError("adjacency shape does not match node count")
        if self.features.shape[0] != self.n or self.feature_observed.shape != self.features.shape:
            raise FormatError("feature/mask shape does not match node count")
        if self.labels.shape != (self.n,):
            raise FormatError("labels shape does not match node count")

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.n else 0

    def undirected_edges(self) -> np.ndarray:
        """(E, 2) array of u < v endpoint pairs, lexicographically sorted."""
        counts = np.diff(self.adjacency.indptr)
        rows = np.repeat(np.arange(self.n), counts)
        cols = self.adjacency.indices
        upper = rows < cols
        return np.stack([rows[upper], cols[upper]], axis=1)

    def with_split(self, split: Split) -> "IncompleteGraph":
        return replace(self, split=split)


def edges_to_adjacency(n: int, pairs: np.ndarray, weights=None) -> SparseRowMatrix:
    """Symmetric weight-w adjacency from u<v pairs (no duplicates, no loops)."""
    if len(pairs) == 0:
        return SparseRowMatrix.empty(n, n)
    pairs = np.asarray(pairs, dtype=np.int64)
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, dtype=np.float64)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return SparseRowMatrix.from_coo(n, n, rows, cols, np.concatenate([w, w]))


def _dedupe_pairs(us, vs, n) -> tuple[np.ndarray, int]:
    """Drop self-loops and duplicate/mirrored edges; returns sorted u<v pairs."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    keep = us != vs
    lo = np.minimum(us[keep], vs[keep])
    hi = np.maximum(us[keep], vs[keep])
    if len(lo) == 0:
        return np.empty((0, 2), dtype=np.int64), 0
    keys = lo * n + hi
    uniq = np.unique(keys)
    return np.stack([uniq // n, uniq % n], axis=1), len(keys) - len(uniq)


# ---------------------------------------------------------------------------
# loaders


def load_planetoid(content_path, cites_path) -> IncompleteGraph:
    """Citation-network text format: `<id> <feat>*d <label>` plus `<citing> <cited>` lines."""
    ids, rows, label_names = [], [], []
    width = None
    with open(content_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            tok = line.split()
            if len(tok) < 3:
                raise ParseError(content_path, line_no, "expected `id features... label`")
            if width is None:
                width = len(tok) - 2
            elif len(tok) - 2 != width:
                raise FormatError(
                    f"{content_path}:{line_no}: feature width {len(tok) - 2} != {width}"
                )
            try:
                rows.append(np.array(tok[1:-1], dtype=np.float64))
            except ValueError as e:
                raise ParseError(content_path, line_no, f"bad feature value ({e})") from None
            ids.append(tok[0])
            label_names.append(tok[-1])
    if not ids:
        raise FormatError(f"{content_path}: no nodes")
    if len(set(ids)) != len(ids):
        raise FormatError(f"{content_path}: duplicate node ids")

    order = sorted(range(len(ids)), key=lambda i: ids[i])  # stable node ordering
    id_to_idx = {ids[i]: pos for pos, i in enumerate(order)}
    features = np.stack([rows[i] for i in order])
    classes = {name: c for c, name in enumerate(sorted(set(label_names)))}
    labels = np.array([classes[label_names[i]] for i in order], dtype=np.int64)
    n = len(ids)

    us, vs, skipped = [], [], 0
    with open(cites_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            tok = line.split()
            if len(tok) != 2:
                raise ParseError(cites_path, line_no, "expected `citing cited`")
            a, b = id_to_idx.get(tok[0]), id_to_idx.get(tok[1])
            if a is None or b is None:
                skipped += 1
                continue
            us.append(a)
            vs.append(b)
    if skipped:
        log.warning("%s: skipped %d citation(s) with unknown endpoints", cites_path, skipped)
    pairs, _ = _dedupe_pairs(us, vs, n)
    return IncompleteGraph(
        n=n,
        adjacency=edges_to_adjacency(n, pairs),
        features=features,
        feature_observed=np.ones_like(features, dtype=bool),
        labels=labels,
        stats=LoadStats(skipped_edges=skipped),
    )


def load_edgelist(edges_path, features_path, labels_path) -> IncompleteGraph:
    """Generic format: `u v` edge pairs, plain CSV features, `node,label` lines."""
    features = []
    with open(features_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = np.array(line.strip().split(","), dtype=np.float64)
            except ValueError as e:
                raise ParseError(features_path, line_no, f"bad feature value ({e})") from None
            if features and len(row) != len(features[0]):
                raise FormatError(
                    f"{features_path}:{line_no}: feature width {len(row)} != {len(features[0])}"
                )
            features.append(row)
    if not features:
        raise FormatError(f"{features_path}: no rows")
    features = np.stack(features)
    n = features.shape[0]

    raw_labels: dict[int, str] = {}
    with open(labels_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            tok = line.strip().split(",")
            if len(tok) != 2:
                raise ParseError(labels_path, line_no, "expected `node,label`")
            try:
                node = int(tok[0])
            except ValueError:
                raise ParseError(labels_path, line_no, f"bad node index {tok[0]!r}") from None
            if not 0 <= node < n:
                raise FormatError(f"{labels_path}:{line_no}: node {node} out of range [0,{n})")
            if node in raw_labels:
                raise FormatError(f"{labels_path}:{line_no}: duplicate label for node {node}")
            raw_labels[node] = tok[1]
    if len(raw_labels) != n:
        raise FormatError(f"{labels_path}: {len(raw_labels)} labels for {n} nodes")
    classes = {name: c for c, name in enumerate(sorted(set(raw_labels.values())))}
    labels = np.array([classes[raw_labels[i]] for i in range(n)], dtype=np.int64)

    us, vs = [], []
    with open(edges_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            tok = line.split()
            if len(tok) != 2:
                raise ParseError(edges_path, line_no, "expected `u v`")
            try:
                a, b = int(tok[0]), int(tok[1])
            except ValueError:
                raise ParseError(edges_path, line_no, "endpoints must be integers") from None
            if not (0 <= a < n and 0 <= b < n):
                raise FormatError(f"{edges_path}:{line_no}: endpoint out of range [0,{n})")
            us.append(a)
            vs.append(b)
    pairs, _ = _dedupe_pairs(us, vs, n)
    return IncompleteGraph(
        n=n,
        adjacency=edges_to_adjacency(n, pairs),
        features=features,
        feature_observed=np.ones_like(features, dtype=bool),
        labels=labels,
    )


# ---------------------------------------------------------------------------
# masking


def apply_masks(g: IncompleteGraph, spec: MaskSpec) -> IncompleteGraph:
    """Hide exactly floor(rate * total) feature entries (or node rows) and
    undirected edges, chosen by a seeded shuffle. Returns a new graph."""
    spec.validate()
    observed = g.feature_observed.copy()
    features = g.features.copy()

    feat_rng = np.random.default_rng([spec.seed, 0xFEA7])
    if spec.feature_mode == "entrywise":
        total = g.n * g.feature_dim
        hide = int(spec.feature_missing_rate * total)
        if hide:
            flat = feat_rng.permutation(total)[:hide]
            observed[np.unravel_index(flat, observed.shape)] = False
    else:
        hide = int(spec.feature_missing_rate * g.n)
        if hide:
            observed[feat_rng.permutation(g.n)[:hide], :] = False
    features[~observed] = 0.0

    edge_rng = np.random.default_rng([spec.seed, 0xED6E])
    pairs = g.undirected_edges()
    drop = int(spec.edge_missing_rate * len(pairs))
    if drop:
        kept = np.ones(len(pairs), dtype=bool)
        kept[edge_rng.permutation(len(pairs))[:drop]] = False
        adjacency = edges_to_adjacency(g.n, pairs[kept])
    else:
        adjacency = g.adjacency

    return IncompleteGraph(
        n=g.n,
        adjacency=adjacency,
        features=features,
        feature_observed=observed,
        labels=g.labels.copy(),
        split=g.split,
    )


# ---------------------------------------------------------------------------
# splits


def make_splits(g: IncompleteGraph, seed: int, n_splits: int = 10,
                fractions: tuple[float, float] = (0.6, 0.2)) -> list[Split]:
    """Per-class stratified train/val/test partitions (floor rounding, rest to test)."""
    train_frac, val_frac = fractions
    class_members = [np.flatnonzero(g.labels == c) for c in range(g.num_classes)]
    for c, members in enumerate(class_members):
        if len(members) < 5:
            raise ConfigError(f"class {c} has {len(members)} nodes; need at least 5")
    splits = []
    for s in range(n_splits):
        rng = np.random.default_rng([seed, s])
        train, val, test = [], [], []
        for members in class_members:
            perm = members[rng.permutation(len(members))]
            n_train = int(train_frac * len(members))
            n_val = int(val_frac * len(members))
            train.append(perm[:n_train])
            val.append(perm[n_train:n_train + n_val])
            test.append(perm[n_train + n_val:])
        splits.append(Split(
            train=np.sort(np.concatenate(train)),
            val=np.sort(np.concatenate(val)),
            test=np.sort(np.concatenate(test)),
        ))
    return splits


# ---------------------------------------------------------------------------
# JSON bundle (masked graph + splits, for exact reuse across processes)


def graph_to_bundle(g: IncompleteGraph, splits: list[Split] | None = None,
                    mask_spec: MaskSpec | None = None) -> dict:
    adj = g.adjacency
    counts = np.diff(adj.indptr)
    rows = np.repeat(np.arange(g.n), counts)
    upper = rows < adj.indices
    bundle = {
        "n": g.n,
        "features": g.features.tolist(),
        "feature_observed": g.feature_observed.astype(int).tolist(),
        "labels": g.labels.tolist(),
        "edges": [
            [int(u), int(v), float(w)]
            for u, v, w in zip(rows[upper], adj.indices[upper], adj.data[upper])
        ],
    }
    if splits is not None:
        bundle["splits"] = [
            {"train": s.train.tolist(), "val": s.val.tolist(), "test": s.test.tolist()}
            for s in splits
        ]
    if mask_spec is not None:
        bundle["mask_spec"] = {
            "feature_missing_rate": mask_spec.feature_missing_rate,
            "edge_missing_rate": mask_spec.edge_missing_rate,
            "feature_mode": mask_spec.feature_mode,
            "seed": mask_spec.seed,
        }
    return bundle


def graph_from_bundle(bundle: dict) -> tuple[IncompleteGraph, list[Split]]:
    n = bundle["n"]
    edges = np.array([e[:2] for e in bundle["edges"]], dtype=np.int64).reshape(-1, 2)
    weights = np.array([e[2] for e in bundle["edges"]])
    g = IncompleteGraph(
        n=n,
        adjacency=edges_to_adjacency(n, edges, weights),
        features=np.array(bundle["features"], dtype=np.float64).reshape(n, -1),
        feature_observed=np.array(bundle["feature_observed"], dtype=bool).reshape(n, -1),
        labels=np.array(bundle["labels"], dtype=np.int64),
    )
    splits = [
        Split(train=s["train"], val=s["val"], test=s["test"])
        for s in bundle.get("splits", [])
    ]
    return g, splits


def save_bundle(path, g: IncompleteGraph, splits=None, mask_spec=None) -> None:
    with open(path, "w") as f:
        json.dump(graph_to_bundle(g, splits, mask_spec), f)


def load_bundle(path) -> tuple[IncompleteGraph, list[Split]]:
    with open(path) as f:
        return graph_from_bundle(json.load(f))
