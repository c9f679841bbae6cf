"""Distillation objectives: softened-logit KL, contrastive and L2 alignment
of intermediate representations, and their combinations.

All three losses are fused ops with hand-derived adjoints that flow to *both*
arguments. Freezing a teacher is the caller's job: pass its outputs as
constants and no gradient reaches it; pass live tensors (joint training) and
it trains through the loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .errors import ConfigError, DegenerateInputError, DimensionError
from .models import fanin_uniform, leaf, small_uniform

# cap on gathered (rows, negatives, width) scratch blocks, in elements
_CHUNK_BUDGET = 1 << 25


@dataclass(frozen=True)
class DistillConfig:
    rho: float = 2.0          # logit-softening temperature
    rho_prime: float = 0.5    # contrastive temperature
    lam: float = 0.5          # feature-teacher weight; structure gets 1 - lam
    negatives: str | int = "auto"
    l2_mode: bool = False

    def validate(self) -> None:
        if self.rho < 1.0:
            raise ConfigError(f"rho must be >= 1, got {self.rho}")
        if self.rho_prime <= 0.0:
            raise ConfigError(f"rho_prime must be positive, got {self.rho_prime}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0,1], got {self.lam}")
        if isinstance(self.negatives, str):
            if self.negatives not in ("all", "auto"):
                raise ConfigError(f"negatives must be 'all', 'auto' or a count: {self.negatives!r}")
        elif int(self.negatives) < 1:
            raise ConfigError(f"negative count must be >= 1, got {self.negatives}")

    def negative_count(self, n: int) -> int | None:
        """Per-node sample size, or None for the full j != i set."""
        if self.negatives == "all":
            return None
        if self.negatives == "auto":
            # full O(n^2) similarity is fine up to mid-size graphs
            return None if n <= 5000 else 256
        return int(self.negatives)


def sample_negatives(n: int, count: int, rng: np.random.Generator) -> np.ndarray | None:
    """(n, count) uniform draws from {0..n-1} minus the row's own index, with
    replacement. Returns None when count covers every other node, which makes
    sampling pointless and keeps the full-set equality exact."""
    if count >= n - 1:
        return None
    draws = rng.integers(0, n - 1, size=(n, count))
    draws += draws >= np.arange(n)[:, None]
    return draws


def _log_softmax(a: np.ndarray) -> np.ndarray:
    shifted = a - a.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def logit_distill(z_s: Tensor, z_t: Tensor, rho: float) -> Tensor:
    """Mean over nodes of KL(softmax(z_s/rho) || softmax(z_t/rho))."""
    if z_s.value.shape != z_t.value.shape:
        raise DimensionError(f"logit shapes differ: {z_s.value.shape} vs {z_t.value.shape}")
    if rho <= 0.0:
        raise ConfigError(f"temperature must be positive, got {rho}")
    rho = float(rho)
    n = z_s.value.shape[0]
    ls_s = _log_softmax(z_s.value / rho)
    ls_t = _log_softmax(z_t.value / rho)
    p_s = np.exp(ls_s)
    gap = ls_s - ls_t
    kl_rows = (p_s * gap).sum(axis=1, keepdims=True)
    value = kl_rows.mean()
    # adjoints for constant args would be discarded; skip computing them
    track_s, track_t = z_s.tape is not None, z_t.tape is not None

    def bwd(g):
        g0 = g[0, 0] / (rho * n)
        return (g0 * p_s * (gap - kl_rows) if track_s else None,
                g0 * (np.exp(ls_t) - p_s) if track_t else None)

    return ad.emit([[value]], (z_s, z_t), bwd)


def _unit_rows(r: np.ndarray, who: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.sqrt(np.square(r).sum(axis=1, keepdims=True))
    bad = np.flatnonzero(norms[:, 0] == 0.0)
    if bad.size:
        raise DegenerateInputError(
            f"{who} row {bad[0]} has zero norm; cosine similarity undefined"
        )
    return r / norms, norms


def _through_unit(g_hat: np.ndarray, unit: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Adjoint of r -> r/|r|: project out the radial component, divide by |r|."""
    return (g_hat - unit * (unit * g_hat).sum(axis=1, keepdims=True)) / norms


def contrastive_mid_distill(r_s: Tensor, r_t: Tensor, rho_prime: float,
                            neg_indices: np.ndarray | None = None) -> Tensor:
    """InfoNCE over cosine similarities at temperature rho_prime: the positive
    pair is the same node in both representations, negatives are other nodes'
    teacher rows (all of them, or the provided sampled index array)."""
    if r_s.value.shape != r_t.value.shape:
        raise DimensionError(f"mid shapes differ: {r_s.value.shape} vs {r_t.value.shape}")
    if rho_prime <= 0.0:
        raise ConfigError(f"rho_prime must be positive, got {rho_prime}")
    rho_prime = float(rho_prime)
    n = r_s.value.shape[0]
    u_hat, u_norms = _unit_rows(r_s.value, "student representation")
    v_hat, v_norms = _unit_rows(r_t.value, "teacher representation")
    track_s, track_t = r_s.tape is not None, r_t.tape is not None

    if neg_indices is None:
        # single n*n buffer, reworked in place: sims -> shifted -> exp
        sims = u_hat @ v_hat.T
        sims /= rho_prime
        pos = np.diagonal(sims).copy()
        row_max = sims.max(axis=1)
        sims -= row_max[:, None]
        np.exp(sims, out=sims)
        row_sum = sims.sum(axis=1)
        value = (np.log(row_sum) + row_max - pos).mean()

        def bwd(g):
            coeff = sims / (row_sum[:, None] * n)
            step = coeff.shape[0] + 1
            coeff.reshape(-1)[::step] -= 1.0 / n  # subtract the positive's indicator
            factor = g[0, 0] / rho_prime
            g_u = _through_unit(factor * (coeff @ v_hat), u_hat, u_norms) if track_s else None
            g_v = _through_unit(factor * (coeff.T @ u_hat), v_hat, v_norms) if track_t else None
            return g_u, g_v

        return ad.emit([[value]], (r_s, r_t), bwd)

    neg = np.asarray(neg_indices, dtype=np.int64)
    if neg.ndim != 2 or neg.shape[0] != n:
        raise DimensionError(f"negative index array must be (n, m), got {neg.shape}")
    m = neg.shape[1]
    d = r_s.value.shape[1]
    chunk = max(1, _CHUNK_BUDGET // max(1, m * d))

    sims = np.empty((n, m + 1))
    sims[:, 0] = (u_hat * v_hat).sum(axis=1)
    for a in range(0, n, chunk):
        b = min(n, a + chunk)
        # batched (rows, m, d) @ (rows, d, 1); BLAS-backed, unlike plain einsum
        sims[a:b, 1:] = np.matmul(v_hat[neg[a:b]], u_hat[a:b, :, None])[:, :, 0]
    sims /= rho_prime
    shifted = sims - sims.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    weights = exp / exp.sum(axis=1, keepdims=True)
    log_denom = np.log(exp.sum(axis=1)) + sims.max(axis=1)
    value = (log_denom - sims[:, 0]).mean()

    def bwd(g):
        coeff = weights / n
        coeff[:, 0] -= 1.0 / n
        factor = g[0, 0] / rho_prime
        g_u = np.empty((n, d)) if track_s else None
        g_v = coeff[:, :1] * u_hat if track_t else None  # positive term, diagonal
        for a in range(0, n, chunk):
            b = min(n, a + chunk)
            gathered = v_hat[neg[a:b]]
            if track_s:
                g_u[a:b] = coeff[a:b, :1] * v_hat[a:b]
                g_u[a:b] += np.matmul(coeff[a:b, None, 1:], gathered)[:, 0, :]
            if track_t:
                np.add.at(g_v, neg[a:b].ravel(),
                          (coeff[a:b, 1:, None] * u_hat[a:b, None, :]).reshape(-1, d))
        if track_s:
            g_u = _through_unit(factor * g_u, u_hat, u_norms)
        if track_t:
            g_v = _through_unit(factor * g_v, v_hat, v_norms)
        return g_u, g_v

    return ad.emit([[value]], (r_s, r_t), bwd)


def l2_mid_distill(r_s: Tensor, r_t: Tensor) -> Tensor:
    """Squared Frobenius distance between representations, divided by n."""
    if r_s.value.shape != r_t.value.shape:
        raise DimensionError(f"mid shapes differ: {r_s.value.shape} vs {r_t.value.shape}")
    n = r_s.value.shape[0]
    diff = r_s.value - r_t.value
    value = np.square(diff).sum() / n
    track_s, track_t = r_s.tape is not None, r_t.tape is not None

    def bwd(g):
        gd = g[0, 0] * 2.0 / n * diff
        return gd if track_s else None, -gd if track_t else None

    return ad.emit([[value]], (r_s, r_t), bwd)


class Projection:
    """Student-side linear bridge applied to its intermediate representation
    when teacher and student hidden widths differ; lives only inside the
    distillation loss."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "proj"):
        self.w = Parameter(fanin_uniform(rng, in_dim, (in_dim, out_dim)), f"{name}.w")
        self.b = Parameter(small_uniform(rng, (1, out_dim)), f"{name}.b")

    def params(self) -> list[Parameter]:
        return [self.w, self.b]

    def apply(self, tape, r: Tensor) -> Tensor:
        return ad.add_bias(ad.matmul(r, leaf(tape, self.w)), leaf(tape, self.b))


def dual_loss(z_s: Tensor, r_s: Tensor, teacher_logits: Tensor, teacher_mid: Tensor,
              cfg: DistillConfig, neg_indices: np.ndarray | None = None,
              log_scale: float = 1.0, mid_scale: float = 1.0) -> Tensor:
    """Logit plus intermediate distillation against one teacher. The scale
    arguments implement ablations as exact multiply-by-zero so an ablated run
    follows the identical parameter trajectory."""
    log_term = ad.scale(logit_distill(z_s, teacher_logits, cfg.rho), log_scale)
    if cfg.l2_mode:
        mid = l2_mid_distill(r_s, teacher_mid)
    else:
        mid = contrastive_mid_distill(r_s, teacher_mid, cfg.rho_prime, neg_indices)
    return ad.add(log_term, ad.scale(mid, mid_scale))


def student_loss(ce: Tensor, dual_fea: Tensor | None, dual_str: Tensor | None,
                 lam: float) -> Tensor:
    """Classification loss plus lam-weighted feature dual and (1-lam)-weighted
    structure dual; a missing teacher contributes nothing."""
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lam must lie in [0,1], got {lam}")
    total = ce
    if dual_fea is not None:
        total = ad.add(total, ad.scale(dual_fea, lam))
    if dual_str is not None:
        total = ad.add(total, ad.scale(dual_str, 1.0 - lam))
    return total
