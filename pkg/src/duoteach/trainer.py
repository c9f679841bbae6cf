"""Training loops and the experiment runner.

Offline flow per split: mask the graph, pretrain both teachers to their best
validation snapshot, freeze those outputs, then train the student under
classification plus the weighted dual-distillation losses. Variant modes
either drop a teacher entirely, multiply one loss term by exactly zero (so an
ablated run follows the same parameter trajectory as a zeroed full run), or
switch to joint (online) or single-teacher training.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, adam_step, constant, cross_entropy, log_softmax_rows, zero_grads
from .config import (ExperimentConfig, TrainConfig, config_from_dict, config_to_dict,
                     derive_seed, resolve_dataset)
from .distill import DistillConfig, Projection, dual_loss, sample_negatives, student_loss
from .errors import ConfigError, TrainingDivergedError
from .graphs import IncompleteGraph, MaskSpec, Split, apply_masks, make_splits
from .models import (CombinedTeacher, FeatureTeacher, GraphContext, ModelOutput,
                     StructureTeacher, gcn_normalize, make_student)
from .ppr import build_enhanced_adjacency

# students keep the reference settings of their own backbones
STUDENT_LR_DEFAULTS = {"gcn": 0.01, "gat": 0.005, "sage": 0.01, "appnp": 0.01}

MODES_WITH_FEATURE_TEACHER = {"full", "online", "no_teacher_str", "no_distill_log",
                              "no_distill_mid"}
MODES_WITH_STRUCTURE_TEACHER = {"full", "online", "no_teacher_fea", "no_distill_log",
                                "no_distill_mid"}


@dataclass
class RunResult:
    accuracies: list[float]
    val_accuracies: list[float]
    chosen_epochs: list[int]
    mean: float
    std: float
    config: dict
    wall_clock: float = 0.0

    @classmethod
    def build(cls, accuracies, val_accuracies, chosen_epochs, config, wall_clock=0.0):
        accs = [float(a) for a in accuracies]
        return cls(
            accuracies=accs,
            val_accuracies=[float(v) for v in val_accuracies],
            chosen_epochs=[int(e) for e in chosen_epochs],
            mean=float(np.mean(accs)),
            std=float(np.std(accs)),
            config=config,
            wall_clock=wall_clock,
        )

    def to_dict(self) -> dict:
        return {
            "accuracies": self.accuracies,
            "val_accuracies": self.val_accuracies,
            "chosen_epochs": self.chosen_epochs,
            "mean": self.mean,
            "std": self.std,
            "config": self.config,
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "RunResult":
        return cls(**blob)


def evaluate(model_output, labels, index_set) -> float:
    """Fraction of argmax-correct predictions; argmax ties resolve to the
    lowest class index."""
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ConfigError("evaluate: empty index set")
    logits = model_output
    if isinstance(logits, ModelOutput):
        logits = logits.logits
    if hasattr(logits, "value"):
        logits = logits.value
    predictions = np.argmax(logits[idx], axis=1)
    return float((predictions == np.asarray(labels)[idx]).mean())


def _check_finite(loss, epoch: int) -> None:
    if not np.isfinite(loss.value[0, 0]):
        raise TrainingDivergedError(epoch)


def _snapshot(params) -> list[np.ndarray]:
    return [p.value.copy() for p in params]


def _restore(params, snap) -> None:
    for p, v in zip(params, snap):
        p.value[...] = v


def _freeze(out: ModelOutput) -> ModelOutput:
    return ModelOutput(logits=constant(out.logits.value.copy()),
                       intermediate=constant(out.intermediate.value.copy()))


def train_teacher(model, data, cfg: TrainConfig, *, split: Split, labels: np.ndarray,
                  dropout_rng: np.random.Generator):
    """Full-batch Adam on training-node cross-entropy; keeps the parameter
    snapshot and eval-mode outputs of the best-validation epoch. ``data`` is
    whatever the model's forward consumes (a GraphContext, a normalized
    enhanced adjacency, or a tuple of both)."""
    args = data if isinstance(data, tuple) else (data,)
    params = model.params()

    def eval_forward() -> ModelOutput:
        return model.forward(None, *args, training=False, rng=None)

    best_out = eval_forward()
    best_val = evaluate(best_out, labels, split.val)
    best_epoch = 0
    best_params = _snapshot(params)

    tape = Tape()
    for epoch in range(1, cfg.max_epochs + 1):
        tape.reset()
        out = model.forward(tape, *args, training=True, rng=dropout_rng)
        loss = cross_entropy(log_softmax_rows(out.logits), labels, split.train)
        _check_finite(loss, epoch)
        ad.backward(loss)
        adam_step(params, cfg.lr, cfg.weight_decay)
        zero_grads(params)

        val_acc = evaluate(eval_forward(), labels, split.val)
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = _snapshot(params)
        elif epoch - best_epoch >= cfg.patience:
            break

    _restore(params, best_params)
    best_out = _freeze(eval_forward())
    return model, best_out, {"best_epoch": best_epoch, "best_val": best_val}


@dataclass
class TeacherSet:
    """Frozen best-epoch outputs available to the student."""

    feature: ModelOutput | None = None
    structure: ModelOutput | None = None
    combined: ModelOutput | None = None


@dataclass
class _LossPlan:
    use_fea: bool
    use_str: bool
    use_combined: bool
    log_scale: float
    mid_scale: float
    lam: float


def _plan_for(mode: str, lam: float) -> _LossPlan:
    if mode == "student_only":
        return _LossPlan(False, False, False, 1.0, 1.0, lam)
    if mode == "singleT":
        # the single teacher carries the whole dual-loss weight
        return _LossPlan(False, False, True, 1.0, 1.0, 1.0)
    if mode == "no_teacher_fea":
        return _LossPlan(False, True, False, 1.0, 1.0, lam)
    if mode == "no_teacher_str":
        return _LossPlan(True, False, False, 1.0, 1.0, lam)
    if mode == "no_distill_log":
        return _LossPlan(True, True, False, 0.0, 1.0, lam)
    if mode == "no_distill_mid":
        return _LossPlan(True, True, False, 1.0, 0.0, lam)
    if mode in ("full", "online"):
        return _LossPlan(True, True, False, 1.0, 1.0, lam)
    raise ConfigError(f"mode: unknown value {mode!r}")


class _StudentLossBuilder:
    """Shared between offline and online training: distillation terms for one
    student forward, with per-teacher width-bridging projections."""

    def __init__(self, plan: _LossPlan, dcfg: DistillConfig, student_hidden: int,
                 teachers_width: dict, proj_rng: np.random.Generator,
                 neg_rng: np.random.Generator, n: int):
        self.plan = plan
        self.dcfg = dcfg
        self.n = n
        self.neg_rng = neg_rng
        self.neg_count = dcfg.negative_count(n)
        self.projections: dict[str, Projection | None] = {}
        for role in sorted(teachers_width):
            width = teachers_width[role]
            if width != student_hidden:
                self.projections[role] = Projection(
                    student_hidden, width, proj_rng, f"proj.{role}")
            else:
                self.projections[role] = None

    def proj_params(self):
        out = []
        for proj in self.projections.values():
            if proj is not None:
                out.extend(proj.params())
        return out

    def _mid_rep(self, tape, role: str, r_s):
        proj = self.projections.get(role)
        return r_s if proj is None else proj.apply(tape, r_s)

    def _negatives(self):
        if self.dcfg.l2_mode or self.neg_count is None:
            return None
        return sample_negatives(self.n, self.neg_count, self.neg_rng)

    def build(self, tape, stu_out: ModelOutput, ce, teacher_outs: dict):
        plan = self.plan
        dual_fea = dual_str = dual_single = None
        if plan.use_fea:
            t = teacher_outs.get("fea")
            if t is None:
                raise ConfigError("feature-teacher output required for this mode")
            dual_fea = dual_loss(
                stu_out.logits, self._mid_rep(tape, "fea", stu_out.intermediate),
                t.logits, t.intermediate, self.dcfg, self._negatives(),
                log_scale=plan.log_scale, mid_scale=plan.mid_scale)
        if plan.use_str:
            t = teacher_outs.get("str")
            if t is None:
                raise ConfigError("structure-teacher output required for this mode")
            dual_str = dual_loss(
                stu_out.logits, self._mid_rep(tape, "str", stu_out.intermediate),
                t.logits, t.intermediate, self.dcfg, self._negatives(),
                log_scale=plan.log_scale, mid_scale=plan.mid_scale)
        if plan.use_combined:
            t = teacher_outs.get("combined")
            if t is None:
                raise ConfigError("combined-teacher output required for singleT mode")
            dual_single = dual_loss(
                stu_out.logits, self._mid_rep(tape, "combined", stu_out.intermediate),
                t.logits, t.intermediate, self.dcfg, self._negatives(),
                log_scale=plan.log_scale, mid_scale=plan.mid_scale)
        if plan.use_combined:
            return student_loss(ce, dual_single, None, plan.lam)
        return student_loss(ce, dual_fea, dual_str, plan.lam)


def train_student(student, ctx: GraphContext, teachers: TeacherSet, dcfg: DistillConfig,
                  cfg: TrainConfig, mode: str, *, split: Split,
                  dropout_rng: np.random.Generator, neg_rng: np.random.Generator,
                  proj_rng: np.random.Generator, lr: float):
    """Offline student training against frozen teacher outputs."""
    labels = ctx.graph.labels
    plan = _plan_for(mode, dcfg.lam)
    teacher_outs = {}
    widths = {}
    if plan.use_fea:
        if teachers.feature is None:
            raise ConfigError("feature-teacher output required for this mode")
        teacher_outs["fea"] = teachers.feature
        widths["fea"] = teachers.feature.intermediate.value.shape[1]
    if plan.use_str:
        if teachers.structure is None:
            raise ConfigError("structure-teacher output required for this mode")
        teacher_outs["str"] = teachers.structure
        widths["str"] = teachers.structure.intermediate.value.shape[1]
    if plan.use_combined:
        if teachers.combined is None:
            raise ConfigError("combined-teacher output required for singleT mode")
        teacher_outs["combined"] = teachers.combined
        widths["combined"] = teachers.combined.intermediate.value.shape[1]

    builder = _StudentLossBuilder(plan, dcfg, student.hidden, widths, proj_rng, neg_rng, ctx.n)
    params = student.params() + builder.proj_params()

    def eval_forward() -> ModelOutput:
        return student.forward(None, ctx, training=False, rng=None)

    best_out = eval_forward()
    best_val = evaluate(best_out, labels, split.val)
    best_epoch = 0
    best_params = _snapshot(params)

    tape = Tape()
    for epoch in range(1, cfg.max_epochs + 1):
        tape.reset()
        out = student.forward(tape, ctx, training=True, rng=dropout_rng)
        ce = cross_entropy(log_softmax_rows(out.logits), labels, split.train)
        loss = builder.build(tape, out, ce, teacher_outs)
        _check_finite(loss, epoch)
        ad.backward(loss)
        adam_step(params, lr, cfg.weight_decay)
        zero_grads(params)

        val_acc = evaluate(eval_forward(), labels, split.val)
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = _snapshot(params)
        elif epoch - best_epoch >= cfg.patience:
            break

    _restore(params, best_params)
    test_acc = evaluate(eval_forward(), labels, split.test)
    return student, {"test_acc": test_acc, "best_val": best_val, "best_epoch": best_epoch}


def train_online(ft: FeatureTeacher, st: StructureTeacher, student, ctx: GraphContext,
                 enhanced_norm, dcfg: DistillConfig, cfg: TrainConfig, *, split: Split,
                 dropout_rngs: dict, neg_rng: np.random.Generator,
                 proj_rng: np.random.Generator, student_lr: float):
    """Joint end-to-end training: teacher classification losses plus the
    student objective with live (gradient-carrying) teacher outputs."""
    labels = ctx.graph.labels
    plan = _plan_for("online", dcfg.lam)
    widths = {"fea": ft.hidden, "str": st.hidden}
    builder = _StudentLossBuilder(plan, dcfg, student.hidden, widths, proj_rng, neg_rng, ctx.n)

    teacher_params = ft.params() + st.params()
    student_params = student.params() + builder.proj_params()

    def eval_forward() -> ModelOutput:
        return student.forward(None, ctx, training=False, rng=None)

    best_val = evaluate(eval_forward(), labels, split.val)
    best_epoch = 0
    all_params = teacher_params + student_params
    best_params = _snapshot(all_params)

    tape = Tape()
    for epoch in range(1, cfg.max_epochs + 1):
        tape.reset()
        fea_out = ft.forward(tape, ctx, training=True, rng=dropout_rngs["fea"])
        str_out = st.forward(tape, enhanced_norm, training=True, rng=dropout_rngs["str"])
        stu_out = student.forward(tape, ctx, training=True, rng=dropout_rngs["stu"])

        loss = ad.add(
            cross_entropy(log_softmax_rows(fea_out.logits), labels, split.train),
            cross_entropy(log_softmax_rows(str_out.logits), labels, split.train))
        ce_stu = cross_entropy(log_softmax_rows(stu_out.logits), labels, split.train)
        loss = ad.add(loss, builder.build(
            tape, stu_out, ce_stu, {"fea": fea_out, "str": str_out}))
        _check_finite(loss, epoch)
        ad.backward(loss)
        adam_step(teacher_params, cfg.lr, cfg.weight_decay)
        adam_step(student_params, student_lr, cfg.weight_decay)
        zero_grads(all_params)

        val_acc = evaluate(eval_forward(), labels, split.val)
        if val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_params = _snapshot(all_params)
        elif epoch - best_epoch >= cfg.patience:
            break

    _restore(all_params, best_params)
    test_acc = evaluate(eval_forward(), labels, split.test)
    return student, {"test_acc": test_acc, "best_val": best_val, "best_epoch": best_epoch}


def train_singleT(graph: IncompleteGraph, dcfg: DistillConfig, cfg: TrainConfig, *,
                  backbone: str, enhanced_norm, hidden: int, dropout: float,
                  seeds: dict, student_lr: float):
    """Single-teacher baseline: one model does imputation and enhanced-graph
    convolution; the student distills from it alone."""
    ctx = GraphContext(graph)
    teacher = CombinedTeacher(
        graph.n, graph.feature_dim, graph.num_classes,
        np.random.default_rng(seeds["init_combined"]), hidden=hidden, dropout=dropout)
    _, best_out, _ = train_teacher(
        teacher, (ctx, enhanced_norm), cfg.teacher_budget(), split=graph.split,
        labels=graph.labels,
        dropout_rng=np.random.default_rng(seeds["dropout_combined"]))
    student = make_student(backbone, graph.feature_dim, graph.num_classes,
                           np.random.default_rng(seeds["init_student"]),
                           hidden=hidden, dropout=dropout)
    return train_student(
        student, ctx, TeacherSet(combined=best_out), dcfg, cfg, "singleT",
        split=graph.split,
        dropout_rng=np.random.default_rng(seeds["dropout_student"]),
        neg_rng=np.random.default_rng(seeds["negatives"]),
        proj_rng=np.random.default_rng(seeds["init_projection"]),
        lr=student_lr)


# ---------------------------------------------------------------------------
# experiment runner


def _split_seeds(seed: int, split_idx: int) -> dict:
    labels = {
        "init_feature": ("init", split_idx, "fea"),
        "init_structure": ("init", split_idx, "str"),
        "init_combined": ("init", split_idx, "cmb"),
        "init_student": ("init", split_idx, "stu"),
        "init_projection": ("init", split_idx, "proj"),
        "dropout_feature": ("dropout", split_idx, "fea"),
        "dropout_structure": ("dropout", split_idx, "str"),
        "dropout_combined": ("dropout", split_idx, "cmb"),
        "dropout_student": ("dropout", split_idx, "stu"),
        "negatives": ("negatives", split_idx),
    }
    return {k: derive_seed(seed, *path) for k, path in labels.items()}


def _mask_spec_for(cfg: ExperimentConfig, split_idx: int) -> MaskSpec:
    label = "fixed" if cfg.fixed_mask else split_idx
    return MaskSpec(
        feature_missing_rate=cfg.mask.feature_missing_rate,
        edge_missing_rate=cfg.mask.edge_missing_rate,
        feature_mode=cfg.mask.feature_mode,
        seed=derive_seed(cfg.seed, "mask", label),
    )


def _teacher_cache_key(cfg: ExperimentConfig, split_idx: int, role: str) -> str:
    relevant = {
        "dataset": cfg.dataset,
        "data_root": cfg.data_root,
        "mask": config_to_dict(cfg)["mask"],
        "ppr": config_to_dict(cfg)["ppr"] if role in ("str", "cmb") else None,
        "train": config_to_dict(cfg)["train"],
        "seed": cfg.seed,
        "split": split_idx,
        "fixed_mask": cfg.fixed_mask,
        "hidden": cfg.hidden,
        "feature_hidden": cfg.feature_hidden,
        "dropout": cfg.dropout,
        "role": role,
    }
    return json.dumps(relevant, sort_keys=True)


def run_split(cfg: ExperimentConfig, raw: IncompleteGraph, split: Split, split_idx: int,
              teacher_cache: dict | None = None) -> dict:
    """Mask, pretrain (or fetch) teachers, train the student; one split."""
    masked = apply_masks(raw, _mask_spec_for(cfg, split_idx)).with_split(split)
    ctx = GraphContext(masked)
    seeds = _split_seeds(cfg.seed, split_idx)
    mode = cfg.mode
    student_lr = cfg.train.student_lr or STUDENT_LR_DEFAULTS[cfg.backbone.lower()]

    need_str = mode in MODES_WITH_STRUCTURE_TEACHER
    need_enhanced = need_str or mode == "singleT"
    enhanced_norm = None
    if need_enhanced:
        enhanced_norm = gcn_normalize(build_enhanced_adjacency(masked.adjacency, cfg.ppr))

    if mode == "online":
        ft = FeatureTeacher(masked.n, masked.feature_dim, masked.num_classes,
                            np.random.default_rng(seeds["init_feature"]),
                            hidden=cfg.feature_hidden, dropout=cfg.dropout)
        st = StructureTeacher(masked.n, masked.feature_dim, masked.num_classes,
                              np.random.default_rng(seeds["init_structure"]),
                              hidden=cfg.hidden, dropout=cfg.dropout)
        student = make_student(cfg.backbone, masked.feature_dim, masked.num_classes,
                               np.random.default_rng(seeds["init_student"]),
                               hidden=cfg.hidden, dropout=cfg.dropout)
        _, record = train_online(
            ft, st, student, ctx, enhanced_norm, cfg.distill, cfg.train,
            split=split,
            dropout_rngs={
                "fea": np.random.default_rng(seeds["dropout_feature"]),
                "str": np.random.default_rng(seeds["dropout_structure"]),
                "stu": np.random.default_rng(seeds["dropout_student"]),
            },
            neg_rng=np.random.default_rng(seeds["negatives"]),
            proj_rng=np.random.default_rng(seeds["init_projection"]),
            student_lr=student_lr)
        return record

    if mode == "singleT":
        _, record = train_singleT(
            masked, cfg.distill, cfg.train, backbone=cfg.backbone,
            enhanced_norm=enhanced_norm, hidden=cfg.hidden, dropout=cfg.dropout,
            seeds=seeds, student_lr=student_lr)
        return record

    teachers = TeacherSet()
    cache = teacher_cache if teacher_cache is not None else {}
    if mode in MODES_WITH_FEATURE_TEACHER:
        key = _teacher_cache_key(cfg, split_idx, "fea")
        if key not in cache:
            ft = FeatureTeacher(masked.n, masked.feature_dim, masked.num_classes,
                                np.random.default_rng(seeds["init_feature"]),
                                hidden=cfg.feature_hidden, dropout=cfg.dropout)
            _, best_out, _ = train_teacher(
                ft, ctx, cfg.train.teacher_budget(), split=split, labels=masked.labels,
                dropout_rng=np.random.default_rng(seeds["dropout_feature"]))
            cache[key] = best_out
        teachers.feature = cache[key]
    if need_str:
        key = _teacher_cache_key(cfg, split_idx, "str")
        if key not in cache:
            st = StructureTeacher(masked.n, masked.feature_dim, masked.num_classes,
                                  np.random.default_rng(seeds["init_structure"]),
                                  hidden=cfg.hidden, dropout=cfg.dropout)
            _, best_out, _ = train_teacher(
                st, enhanced_norm, cfg.train.teacher_budget(), split=split, labels=masked.labels,
                dropout_rng=np.random.default_rng(seeds["dropout_structure"]))
            cache[key] = best_out
        teachers.structure = cache[key]

    student = make_student(cfg.backbone, masked.feature_dim, masked.num_classes,
                           np.random.default_rng(seeds["init_student"]),
                           hidden=cfg.hidden, dropout=cfg.dropout)
    _, record = train_student(
        student, ctx, teachers, cfg.distill, cfg.train, mode, split=split,
        dropout_rng=np.random.default_rng(seeds["dropout_student"]),
        neg_rng=np.random.default_rng(seeds["negatives"]),
        proj_rng=np.random.default_rng(seeds["init_projection"]),
        lr=student_lr)
    return record


def _split_worker(cfg_blob: dict, split_idx: int) -> dict:
    cfg = config_from_dict(cfg_blob)
    raw = resolve_dataset(cfg)
    splits = make_splits(raw, derive_seed(cfg.seed, "splits"), cfg.n_splits)
    return run_split(cfg, raw, splits[split_idx], split_idx)


def _annotate(e: Exception, note: str) -> None:
    """Fold context into the exception message (add_note needs 3.11)."""
    e.args = (f"{e.args[0]} [{note}]",) + e.args[1:] if e.args else (note,)


def run_experiment(cfg: ExperimentConfig, teacher_cache: dict | None = None) -> RunResult:
    cfg.validate()
    started = time.monotonic()
    raw = resolve_dataset(cfg)
    splits = make_splits(raw, derive_seed(cfg.seed, "splits"), cfg.n_splits)

    records: list[dict | None] = [None] * cfg.n_splits
    if cfg.jobs > 1:
        blob = config_to_dict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {pool.submit(_split_worker, blob, s): s for s in range(cfg.n_splits)}
            for fut, s in futures.items():
                try:
                    records[s] = fut.result()
                except Exception as e:
                    _annotate(e, f"while training split {s}")
                    raise
    else:
        for s, split in enumerate(splits):
            try:
                records[s] = run_split(cfg, raw, split, s, teacher_cache)
            except Exception as e:
                _annotate(e, f"while training split {s}")
                raise

    return RunResult.build(
        accuracies=[r["test_acc"] for r in records],
        val_accuracies=[r["best_val"] for r in records],
        chosen_epochs=[r["best_epoch"] for r in records],
        config=config_to_dict(cfg),
        wall_clock=time.monotonic() - started,
    )


# ---------------------------------------------------------------------------
# grid sweep


def expand_grid(grid: dict) -> list[dict]:
    """{'distill.lam': [...], 'ppr.top_k': [...]} -> list of point dicts,
    deterministic order (sorted keys, itertools.product)."""
    if not grid:
        raise ConfigError("sweep grid is empty")
    keys = sorted(grid)
    for k in keys:
        if not isinstance(grid[k], (list, tuple)) or len(grid[k]) == 0:
            raise ConfigError(f"grid entry {k!r} must be a non-empty array")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def run_sweep(base_blob: dict, grid: dict,
              teacher_cache: dict | None = None) -> list[tuple[dict, RunResult]]:
    """One run_experiment per grid point over a shared teacher cache; teachers
    do not depend on the distillation grid, so they train once per split."""
    from .config import apply_override

    cache = teacher_cache if teacher_cache is not None else {}
    out = []
    for point in expand_grid(grid):
        blob = json.loads(json.dumps(base_blob))
        for key, value in point.items():
            apply_override(blob, f"{key}={json.dumps(value)}")
        cfg = config_from_dict(blob)
        cfg.validate()
        out.append((point, run_experiment(cfg, cache)))
    return out


def best_by_validation(results: list[tuple[dict, RunResult]]) -> tuple[dict, RunResult]:
    """Highest mean validation accuracy wins; earlier grid point on ties."""
    if not results:
        raise ConfigError("no sweep results to rank")
    best = results[0]
    best_val = float(np.mean(best[1].val_accuracies))
    for point, result in results[1:]:
        val = float(np.mean(result.val_accuracies))
        if val > best_val:
            best = (point, result)
            best_val = val
    return best
