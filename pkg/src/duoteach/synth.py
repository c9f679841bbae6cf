"""Built-in deterministic dataset generator.

Each named dataset reproduces the shape of a familiar benchmark (node count,
undirected edge count, feature width, class count) and is tuned so the
relative difficulty matches: webpage-style graphs are heterophilic with
informative features, citation-style graphs are homophilic with weaker
features. Generation is a pure function of the registry entry, so every
process sees byte-identical graphs.

Edges are drawn by the Gumbel-top-E trick: per-pair scores log(weight) plus
standard Gumbel noise, keeping the E best, which samples E distinct pairs
without replacement proportional to the weights. Pair weight factorises into
a class-mixing term (same- vs cross-class) and per-node popularity, giving
controlled homophily and heavy-tailed degrees.

Features are class-keyword Bernoulli draws: every class owns a keyword pool;
pool entries switch on with probability p_in, all others with p_out. Rows
that come out empty get one pool keyword forced on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graphs import IncompleteGraph, edges_to_adjacency


@dataclass(frozen=True)
class SynthSpec:
    n: int
    edges: int
    d: int
    classes: int
    class_probs: tuple
    w_same: float       # same-class pair weight (cross-class weight is 1)
    pop_sigma: float    # lognormal popularity spread -> degree heavy tail
    pool_size: int
    p_in: float
    p_out: float
    seed: int


SYNTHETIC_DATASETS: dict[str, SynthSpec] = {
    "texas": SynthSpec(
        n=183, edges=295, d=1703, classes=5,
        class_probs=(0.50, 0.20, 0.15, 0.10, 0.05),
        w_same=0.30, pop_sigma=1.2,
        pool_size=60, p_in=0.60, p_out=0.008, seed=9101,
    ),
    "cornell": SynthSpec(
        n=183, edges=295, d=1703, classes=5,
        class_probs=(0.48, 0.22, 0.15, 0.10, 0.05),
        w_same=0.30, pop_sigma=1.2,
        pool_size=60, p_in=0.58, p_out=0.008, seed=9102,
    ),
    "wisconsin": SynthSpec(
        n=251, edges=499, d=1703, classes=5,
        class_probs=(0.48, 0.21, 0.16, 0.10, 0.05),
        w_same=0.30, pop_sigma=1.2,
        pool_size=60, p_in=0.60, p_out=0.008, seed=9103,
    ),
    "chameleon": SynthSpec(
        n=2277, edges=31421, d=2325, classes=5,
        class_probs=(0.22, 0.21, 0.20, 0.19, 0.18),
        w_same=0.60, pop_sigma=1.0,
        pool_size=120, p_in=0.15, p_out=0.010, seed=9104,
    ),
    "cora": SynthSpec(
        n=2708, edges=5278, d=1433, classes=7,
        class_probs=(0.13, 0.08, 0.155, 0.30, 0.155, 0.11, 0.07),
        w_same=12.0, pop_sigma=0.6,
        pool_size=30, p_in=0.12, p_out=0.008, seed=9105,
    ),
    "citeseer": SynthSpec(
        n=3327, edges=4676, d=3703, classes=6,
        class_probs=(0.18, 0.17, 0.17, 0.16, 0.16, 0.16),
        w_same=40.0, pop_sigma=0.6,
        pool_size=80, p_in=0.18, p_out=0.002, seed=9106,
    ),
    "squirrel": SynthSpec(
        n=5201, edges=198493, d=2089, classes=5,
        class_probs=(0.22, 0.21, 0.20, 0.19, 0.18),
        w_same=0.60, pop_sigma=1.0,
        pool_size=100, p_in=0.12, p_out=0.012, seed=9107,
    ),
    "pubmed": SynthSpec(
        n=19717, edges=44327, d=500, classes=3,
        class_probs=(0.21, 0.40, 0.39),
        w_same=25.0, pop_sigma=0.5,
        pool_size=50, p_in=0.30, p_out=0.020, seed=9108,
    ),
}


def _draw_labels(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    counts = np.floor(np.asarray(spec.class_probs) * spec.n).astype(np.int64)
    counts[int(np.argmax(counts))] += spec.n - counts.sum()
    labels = np.repeat(np.arange(spec.classes), counts)
    return labels[rng.permutation(spec.n)]


def _candidate_pairs(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """All u<v pairs when that fits comfortably, otherwise an oversampled
    random subset (large-n graphs are far from complete anyway)."""
    total = spec.n * (spec.n - 1) // 2
    if total <= 20_000_000:
        u, v = np.triu_indices(spec.n, k=1)
        return np.stack([u, v], axis=1).astype(np.int64)
    draws = rng.integers(0, spec.n, size=(30 * spec.edges, 2))
    draws = draws[draws[:, 0] != draws[:, 1]]
    lo = draws.min(axis=1)
    hi = draws.max(axis=1)
    keys = np.unique(lo.astype(np.int64) * spec.n + hi)
    return np.stack([keys // spec.n, keys % spec.n], axis=1)


def _draw_edges(spec: SynthSpec, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pairs = _candidate_pairs(spec, rng)
    if len(pairs) < spec.edges:
        raise ConfigError(f"cannot place {spec.edges} edges among {len(pairs)} candidate pairs")
    pop = rng.normal(0.0, spec.pop_sigma, size=spec.n)
    same = labels[pairs[:, 0]] == labels[pairs[:, 1]]
    score = np.where(same, np.log(spec.w_same), 0.0)
    score += pop[pairs[:, 0]] + pop[pairs[:, 1]]
    score += rng.gumbel(0.0, 1.0, size=len(pairs))
    keep_mask = np.zeros(len(pairs), dtype=bool)
    keep_mask[np.argpartition(-score, spec.edges - 1)[: spec.edges]] = True
    _repair_isolated(spec, pairs, score, keep_mask)
    return pairs[np.flatnonzero(keep_mask)]


def _repair_isolated(spec: SynthSpec, pairs: np.ndarray, score: np.ndarray,
                     keep_mask: np.ndarray) -> None:
    """Link graphs have no isolated nodes: every node keeps at least one
    incident edge. Swaps each isolated node's best unused pair in and drops
    equally many weakest edges whose endpoints stay connected, so the total
    edge count is unchanged."""
    deg = np.bincount(pairs[keep_mask].ravel(), minlength=spec.n)
    iso = deg == 0
    if not iso.any():
        return
    cand = np.flatnonzero(~keep_mask & (iso[pairs[:, 0]] | iso[pairs[:, 1]]))
    cand = cand[np.argsort(-score[cand])]
    satisfied = ~iso
    adds = []
    for j in cand:
        u, v = pairs[j]
        if satisfied[u] and satisfied[v]:
            continue
        adds.append(j)
        satisfied[u] = satisfied[v] = True
        if satisfied.all():
            break
    for j in adds:
        keep_mask[j] = True
        deg[pairs[j, 0]] += 1
        deg[pairs[j, 1]] += 1
    kept = np.flatnonzero(keep_mask)
    kept = kept[np.argsort(score[kept])]
    dropped = 0
    for j in kept:
        if dropped == len(adds):
            break
        u, v = pairs[j]
        if deg[u] >= 2 and deg[v] >= 2 and j not in adds:
            keep_mask[j] = False
            deg[u] -= 1
            deg[v] -= 1
            dropped += 1
    if dropped != len(adds):
        raise ConfigError(
            f"cannot keep {spec.edges} edges with every node connected "
            f"({len(adds) - dropped} isolated nodes unresolved)"
        )


def _draw_features(spec: SynthSpec, labels: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    pools = np.stack([
        rng.choice(spec.d, size=spec.pool_size, replace=False)
        for _ in range(spec.classes)
    ])
    prob = np.full((spec.classes, spec.d), spec.p_out)
    for c in range(spec.classes):
        prob[c, pools[c]] = spec.p_in
    x = (rng.random((spec.n, spec.d)) < prob[labels]).astype(np.float64)
    empty = np.flatnonzero(x.sum(axis=1) == 0)
    for i in empty:
        x[i, rng.choice(pools[labels[i]])] = 1.0
    return x


def make_synthetic(name: str) -> IncompleteGraph:
    try:
        spec = SYNTHETIC_DATASETS[name]
    except KeyError:
        raise ConfigError(
            f"dataset: unknown built-in {name!r}; available: {sorted(SYNTHETIC_DATASETS)}"
        ) from None
    rng = np.random.default_rng(spec.seed)
    labels = _draw_labels(spec, rng)
    edges = _draw_edges(spec, labels, rng)
    features = _draw_features(spec, labels, rng)
    return IncompleteGraph(
        n=spec.n,
        adjacency=edges_to_adjacency(spec.n, edges),
        features=features,
        feature_observed=np.ones_like(features, dtype=bool),
        labels=labels,
    )


def edge_homophily(g: IncompleteGraph) -> float:
    """Fraction of undirected edges joining same-label endpoints."""
    pairs = g.undirected_edges()
    if len(pairs) == 0:
        return 0.0
    return float((g.labels[pairs[:, 0]] == g.labels[pairs[:, 1]]).mean())


# ---------------------------------------------------------------------------
# writers (round-trip fixtures for the text loaders)


def write_planetoid(directory, g: IncompleteGraph, name: str) -> tuple[str, str]:
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    content = directory / f"{name}.content"
    cites = directory / f"{name}.cites"
    width = len(str(g.n - 1))
    with open(content, "w") as f:
        for i in range(g.n):
            feats = " ".join("%g" % v for v in g.features[i])
            f.write(f"node{i:0{width}d} {feats} class{g.labels[i]}\n")
    with open(cites, "w") as f:
        for u, v in g.undirected_edges():
            f.write(f"node{u:0{width}d} node{v:0{width}d}\n")
    return str(content), str(cites)


def write_edgelist_files(directory, g: IncompleteGraph) -> tuple[str, str, str]:
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    edges = directory / "edges.txt"
    feats = directory / "features.csv"
    labels = directory / "labels.csv"
    with open(edges, "w") as f:
        for u, v in g.undirected_edges():
            f.write(f"{u} {v}\n")
    with open(feats, "w") as f:
        for row in g.features:
            f.write(",".join("%g" % v for v in row) + "\n")
    with open(labels, "w") as f:
        for i, c in enumerate(g.labels):
            f.write(f"{i},class{c}\n")
    return str(edges), str(feats), str(labels)
