"""Teacher and student network definitions.

Every model exposes ``forward(tape, ctx, training, rng) -> ModelOutput`` where
the tape may be None for pure inference, plus ``params()`` for the optimizer.
The intermediate representation handed to distillation is always the last
hidden activation, taken before dropout and before the output layer.

The feature teacher sees only (imputed) node features; the structure teacher
sees only the enhanced adjacency and its learned positional encodings. Student
backbones consume the masked graph exactly as loaded: zero placeholders for
unobserved features, incomplete adjacency, nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor, constant
from .errors import ConfigError, FormatError
from .graphs import IncompleteGraph
from .sparsemat import SparseRowMatrix


@dataclass
class ModelOutput:
    logits: Tensor
    intermediate: Tensor


def leaf(tape, param: Parameter) -> Tensor:
    """Watched leaf when training under a tape, frozen constant otherwise."""
    return tape.watch(param) if tape is not None else constant(param.value)


# ---------------------------------------------------------------------------
# initialization


def fanin_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def small_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.uniform(-0.01, 0.01, size=shape)


# ---------------------------------------------------------------------------
# graph preprocessing


def gcn_normalize(adj: SparseRowMatrix) -> SparseRowMatrix:
    """Renormalization-trick propagation matrix D^-1/2 (A + I) D^-1/2."""
    looped = adj.add(SparseRowMatrix.identity(adj.rows))
    inv_sqrt = 1.0 / np.sqrt(looped.row_sums())
    counts = np.diff(looped.indptr)
    rows = np.repeat(np.arange(looped.rows), counts)
    data = looped.data * inv_sqrt[rows] * inv_sqrt[looped.indices]
    return SparseRowMatrix(looped.rows, looped.cols, looped.indptr, looped.indices, data)


def mean_normalize(adj: SparseRowMatrix) -> SparseRowMatrix:
    """Row-stochastic D^-1 A; rows of isolated nodes stay empty (mean over
    no neighbours is the zero vector)."""
    deg = adj.row_sums()
    counts = np.diff(adj.indptr)
    rows = np.repeat(np.arange(adj.rows), counts)
    safe = np.where(deg > 0, deg, 1.0)
    return SparseRowMatrix(
        adj.rows, adj.cols, adj.indptr, adj.indices, adj.data / safe[rows]
    )


class GraphContext:
    """One masked graph plus lazily-built propagation structures."""

    def __init__(self, graph: IncompleteGraph):
        self.graph = graph
        self._gcn_norm = None
        self._mean_adj = None
        self._gat_edges = None

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def features(self) -> np.ndarray:
        return self.graph.features

    def gcn_norm(self) -> SparseRowMatrix:
        if self._gcn_norm is None:
            self._gcn_norm = gcn_normalize(self.graph.adjacency)
        return self._gcn_norm

    def mean_adj(self) -> SparseRowMatrix:
        if self._mean_adj is None:
            self._mean_adj = mean_normalize(self.graph.adjacency)
        return self._mean_adj

    def gat_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) directed message edges including self-loops, sorted by
        (dst, src) so attention segments are contiguous and deterministic."""
        if self._gat_edges is None:
            adj = self.graph.adjacency
            counts = np.diff(adj.indptr)
            dst = np.repeat(np.arange(self.n), counts)
            src = adj.indices.copy()
            loops = np.arange(self.n)
            dst = np.concatenate([dst, loops])
            src = np.concatenate([src, loops])
            order = np.lexsort((src, dst))
            self._gat_edges = (src[order], dst[order])
        return self._gat_edges


# ---------------------------------------------------------------------------
# shared building blocks


def impute_features(x: np.ndarray, observed: np.ndarray, theta: Tensor) -> Tensor:
    """Observed entries come from x, the rest from theta; gradient reaches
    theta only through the unobserved positions."""
    if x.shape != observed.shape or theta.value.shape != x.shape:
        raise FormatError(
            f"impute shapes differ: x {x.shape}, observed {observed.shape}, "
            f"theta {theta.value.shape}"
        )
    out = np.where(observed, x, theta.value)

    def bwd(g):
        return (np.where(observed, 0.0, g),)

    return ad.emit(out, (theta,), bwd)


def positional_encoding(w: Tensor, b: Tensor, n: int) -> Tensor:
    """Row v is column v of w plus the bias row (one-hot selection)."""
    if w.value.shape[1] != n:
        raise FormatError(f"encoding table has {w.value.shape[1]} columns, graph has {n} nodes")
    return ad.add_bias(ad.transpose(w), b)


def gcn_layer(adj_norm: SparseRowMatrix, h: Tensor, w: Tensor, activate: bool = True) -> Tensor:
    out = ad.sparse_matmul(adj_norm, ad.matmul(h, w))
    return ad.relu(out) if activate else out


def _linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return ad.add_bias(ad.matmul(x, w), b)


# ---------------------------------------------------------------------------
# teachers


class FeatureTeacher:
    """Imputation matrix plus a two-layer MLP; ignores the adjacency entirely."""

    def __init__(self, n: int, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 512, dropout: float = 0.5):
        self.hidden = hidden
        self.dropout = dropout
        self.theta = Parameter(small_uniform(rng, (n, d)), "fea.theta")
        self.w1 = Parameter(fanin_uniform(rng, d, (d, hidden)), "fea.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "fea.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "fea.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "fea.b2")

    def params(self) -> list[Parameter]:
        return [self.theta, self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, ctx: GraphContext, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        g = ctx.graph
        xbar = impute_features(g.features, g.feature_observed, leaf(tape, self.theta))
        hidden = ad.relu(_linear(xbar, leaf(tape, self.w1), leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        logits = _linear(dropped, leaf(tape, self.w2), leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


class StructureTeacher:
    """Two-layer GCN over the enhanced adjacency, fed by learned positional
    encodings instead of node features."""

    def __init__(self, n: int, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5):
        self.hidden = hidden
        self.dropout = dropout
        self.pe_w = Parameter(fanin_uniform(rng, n, (d, n)), "str.pe_w")
        self.pe_b = Parameter(small_uniform(rng, (1, d)), "str.pe_b")
        self.w1 = Parameter(fanin_uniform(rng, d, (d, hidden)), "str.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "str.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "str.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "str.b2")

    def params(self) -> list[Parameter]:
        return [self.pe_w, self.pe_b, self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, enhanced_norm: SparseRowMatrix, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        n = enhanced_norm.rows
        pe = positional_encoding(leaf(tape, self.pe_w), leaf(tape, self.pe_b), n)
        hidden = ad.relu(ad.add_bias(
            ad.sparse_matmul(enhanced_norm, ad.matmul(pe, leaf(tape, self.w1))),
            leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        logits = ad.add_bias(
            ad.sparse_matmul(enhanced_norm, ad.matmul(dropped, leaf(tape, self.w2))),
            leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


class CombinedTeacher:
    """Single-teacher baseline: imputed features pushed through a two-layer
    GCN over the enhanced adjacency (completion and enhancement in one model)."""

    def __init__(self, n: int, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5):
        self.hidden = hidden
        self.dropout = dropout
        self.theta = Parameter(small_uniform(rng, (n, d)), "cmb.theta")
        self.w1 = Parameter(fanin_uniform(rng, d, (d, hidden)), "cmb.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "cmb.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "cmb.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "cmb.b2")

    def params(self) -> list[Parameter]:
        return [self.theta, self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, ctx: GraphContext, enhanced_norm: SparseRowMatrix,
                training: bool = False, rng: np.random.Generator | None = None) -> ModelOutput:
        g = ctx.graph
        xbar = impute_features(g.features, g.feature_observed, leaf(tape, self.theta))
        hidden = ad.relu(ad.add_bias(
            ad.sparse_matmul(enhanced_norm, ad.matmul(xbar, leaf(tape, self.w1))),
            leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        logits = ad.add_bias(
            ad.sparse_matmul(enhanced_norm, ad.matmul(dropped, leaf(tape, self.w2))),
            leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


# ---------------------------------------------------------------------------
# student backbones


class GcnStudent:
    def __init__(self, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5):
        self.hidden = hidden
        self.dropout = dropout
        self.w1 = Parameter(fanin_uniform(rng, d, (d, hidden)), "stu.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "stu.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "stu.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "stu.b2")

    def params(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, ctx: GraphContext, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        adj = ctx.gcn_norm()
        x = ad.dropout(constant(ctx.features), self.dropout, training, rng)
        hidden = ad.relu(ad.add_bias(
            gcn_layer(adj, x, leaf(tape, self.w1), activate=False), leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        logits = ad.add_bias(
            gcn_layer(adj, dropped, leaf(tape, self.w2), activate=False), leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


class GatStudent:
    """Two attention layers: 8 concatenated heads of width hidden//8, then a
    single-head output layer. LeakyReLU(0.2) scoring, ELU between layers."""

    def __init__(self, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, heads: int = 8, dropout: float = 0.5):
        if hidden % heads:
            raise ConfigError(f"attention width {hidden} not divisible by {heads} heads")
        self.hidden = hidden
        self.heads = heads
        self.head_dim = hidden // heads
        self.dropout = dropout
        self.w1 = [Parameter(fanin_uniform(rng, d, (d, self.head_dim)), f"stu.w1.h{i}")
                   for i in range(heads)]
        self.att_src = [Parameter(fanin_uniform(rng, self.head_dim, (self.head_dim, 1)),
                                  f"stu.asrc.h{i}") for i in range(heads)]
        self.att_dst = [Parameter(fanin_uniform(rng, self.head_dim, (self.head_dim, 1)),
                                  f"stu.adst.h{i}") for i in range(heads)]
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "stu.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "stu.w2")
        self.att2_src = Parameter(fanin_uniform(rng, num_classes, (num_classes, 1)), "stu.asrc2")
        self.att2_dst = Parameter(fanin_uniform(rng, num_classes, (num_classes, 1)), "stu.adst2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "stu.b2")

    def params(self) -> list[Parameter]:
        return [*self.w1, *self.att_src, *self.att_dst, self.b1,
                self.w2, self.att2_src, self.att2_dst, self.b2]

    @staticmethod
    def _attend(wh: Tensor, a_src: Tensor, a_dst: Tensor, src, dst, n,
                p: float, training: bool, rng) -> Tensor:
        scores = ad.leaky_relu(ad.add(
            ad.gather_rows(ad.matmul(wh, a_dst), dst),
            ad.gather_rows(ad.matmul(wh, a_src), src)), slope=0.2)
        alpha = ad.segment_softmax(scores, dst, n)
        alpha = ad.dropout(alpha, p, training, rng)
        return ad.segment_sum(ad.scale_rows(ad.gather_rows(wh, src), alpha), dst, n)

    def forward(self, tape, ctx: GraphContext, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        src, dst = ctx.gat_edges()
        n = ctx.n
        x = ad.dropout(constant(ctx.features), self.dropout, training, rng)
        head_outs = []
        for i in range(self.heads):
            wh = ad.matmul(x, leaf(tape, self.w1[i]))
            head_outs.append(self._attend(
                wh, leaf(tape, self.att_src[i]), leaf(tape, self.att_dst[i]),
                src, dst, n, self.dropout, training, rng))
        hidden = ad.elu(ad.add_bias(ad.concat_cols(head_outs), leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        wh2 = ad.matmul(dropped, leaf(tape, self.w2))
        out = self._attend(wh2, leaf(tape, self.att2_src), leaf(tape, self.att2_dst),
                           src, dst, n, self.dropout, training, rng)
        logits = ad.add_bias(out, leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


class SageStudent:
    """Mean aggregator: each layer applies a weight to [self ‖ neighbour mean]."""

    def __init__(self, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5):
        self.hidden = hidden
        self.dropout = dropout
        self.w1 = Parameter(fanin_uniform(rng, 2 * d, (2 * d, hidden)), "stu.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "stu.b1")
        self.w2 = Parameter(fanin_uniform(rng, 2 * hidden, (2 * hidden, num_classes)), "stu.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "stu.b2")

    def params(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, ctx: GraphContext, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        mean_adj = ctx.mean_adj()
        x = ad.dropout(constant(ctx.features), self.dropout, training, rng)
        agg1 = ad.concat_cols([x, ad.sparse_matmul(mean_adj, x)])
        hidden = ad.relu(_linear(agg1, leaf(tape, self.w1), leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        agg2 = ad.concat_cols([dropped, ad.sparse_matmul(mean_adj, dropped)])
        logits = _linear(agg2, leaf(tape, self.w2), leaf(tape, self.b2))
        return ModelOutput(logits=logits, intermediate=hidden)


class AppnpStudent:
    """MLP predictor followed by K personalized-propagation steps."""

    def __init__(self, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5,
                 steps: int = 10, restart: float = 0.1):
        self.hidden = hidden
        self.dropout = dropout
        self.steps = steps
        self.restart = restart
        self.w1 = Parameter(fanin_uniform(rng, d, (d, hidden)), "stu.w1")
        self.b1 = Parameter(small_uniform(rng, (1, hidden)), "stu.b1")
        self.w2 = Parameter(fanin_uniform(rng, hidden, (hidden, num_classes)), "stu.w2")
        self.b2 = Parameter(small_uniform(rng, (1, num_classes)), "stu.b2")

    def params(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, tape, ctx: GraphContext, training: bool = False,
                rng: np.random.Generator | None = None) -> ModelOutput:
        adj = ctx.gcn_norm()
        x = ad.dropout(constant(ctx.features), self.dropout, training, rng)
        hidden = ad.relu(_linear(x, leaf(tape, self.w1), leaf(tape, self.b1)))
        dropped = ad.dropout(hidden, self.dropout, training, rng)
        h0 = _linear(dropped, leaf(tape, self.w2), leaf(tape, self.b2))
        h = h0
        for _ in range(self.steps):
            h = ad.add(ad.scale(ad.sparse_matmul(adj, h), 1.0 - self.restart),
                       ad.scale(h0, self.restart))
        return ModelOutput(logits=h, intermediate=hidden)


STUDENT_BACKBONES = {
    "gcn": GcnStudent,
    "gat": GatStudent,
    "sage": SageStudent,
    "appnp": AppnpStudent,
}


def make_student(backbone: str, d: int, num_classes: int, rng: np.random.Generator,
                 hidden: int = 64, dropout: float = 0.5):
    try:
        cls = STUDENT_BACKBONES[backbone.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown backbone {backbone!r}; expected one of {sorted(STUDENT_BACKBONES)}"
        ) from None
    return cls(d, num_classes, rng, hidden=hidden, dropout=dropout)


# ---------------------------------------------------------------------------
# checkpoints


def save_params(path, params: list[Parameter]) -> None:
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise ConfigError("checkpoint requires unique parameter names")
    np.savez(path, **{p.name: p.value for p in params})


def load_params(path, params: list[Parameter]) -> None:
    with np.load(path) as blob:
        for p in params:
            if p.name not in blob:
                raise FormatError(f"checkpoint missing parameter {p.name!r}")
            stored = blob[p.name]
            if stored.shape != p.value.shape:
                raise FormatError(
                    f"checkpoint shape {stored.shape} != live shape {p.value.shape} "
                    f"for {p.name!r}"
                )
            p.value[...] = stored
