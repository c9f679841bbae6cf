"""Shared helpers: finite-difference gradient checking and tiny graphs."""

import numpy as np

from duoteach import autodiff as ad
from duoteach.graphs import IncompleteGraph, Split, edges_to_adjacency


def numeric_grad(f, arr, eps=1e-6):
    """Central finite differences of scalar-valued f() wrt arr (perturbed in
    place, restored afterwards)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        old = arr[ix]
        arr[ix] = old + eps
        hi = f()
        arr[ix] = old - eps
        lo = f()
        arr[ix] = old
        g[ix] = (hi - lo) / (2.0 * eps)
    return g


def rel_error(got, want):
    scale = max(np.abs(got).max(), np.abs(want).max(), 1e-8)
    return float(np.abs(got - want).max() / scale)


def check_gradients(make_loss, params, tol=1e-4, eps=1e-6):
    """make_loss(tape) rebuilds the same scalar loss from current parameter
    values; analytic gradients must match central differences within tol."""
    tape = ad.Tape()
    loss = make_loss(tape)
    ad.backward(loss)
    analytic = [p.grad.copy() for p in params]
    ad.zero_grads(params)
    worst = 0.0
    for p, got in zip(params, analytic):
        approx = numeric_grad(lambda: make_loss(ad.Tape()).item(), p.value, eps)
        worst = max(worst, rel_error(got, approx))
    assert worst < tol, f"gradient mismatch: rel error {worst:.3e} >= {tol}"
    return worst


def toy_graph(n=6, seed=0, classes=2, d=5, edges=None):
    """Small connected-ish labeled graph for model tests."""
    rng = np.random.default_rng(seed)
    if edges is None:
        pairs = [(i, i + 1) for i in range(n - 1)]
        extra = [(i, (i + 2) % n) for i in range(0, n - 2, 2)]
        edges = np.array(sorted(set(tuple(sorted(p)) for p in pairs + extra if p[0] != p[1])))
    else:
        edges = np.asarray(edges)
    features = rng.random((n, d))
    observed = rng.random((n, d)) < 0.7
    labels = rng.integers(0, classes, size=n)
    labels[:classes] = np.arange(classes)  # every class present
    return IncompleteGraph(
        n=n,
        adjacency=edges_to_adjacency(n, edges),
        features=features,
        feature_observed=observed,
        labels=labels,
    )


def dense_ppr(adjacency, alpha):
    """Exact personalized PageRank by dense solve; row s is the score vector
    of source s over the self-looped, row-normalized transition matrix."""
    a = adjacency.to_dense() + np.eye(adjacency.rows)
    t = a / a.sum(axis=1, keepdims=True)
    return alpha * np.linalg.inv(np.eye(adjacency.rows) - (1.0 - alpha) * t)


def random_graph(n, p, rng, weighted=False):
    """Symmetric Bernoulli(p) adjacency, optionally with uniform weights."""
    upper = np.triu(rng.random((n, n)) < p, k=1)
    us, vs = np.nonzero(upper)
    pairs = np.stack([us, vs], axis=1)
    weights = rng.uniform(0.5, 2.0, size=len(pairs)) if weighted else None
    return edges_to_adjacency(n, pairs, weights)


def toy_split(n, rng=None):
    rng = rng or np.random.default_rng(3)
    perm = rng.permutation(n)
    a, b = max(1, int(0.6 * n)), max(1, int(0.2 * n))
    return Split(train=np.sort(perm[:a]), val=np.sort(perm[a:a + b]),
                 test=np.sort(perm[a + b:]))
