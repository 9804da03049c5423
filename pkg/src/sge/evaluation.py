"""Node classification protocol: repeated stratified splits over train fractions."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import LabelSet
from .logreg import train_logreg
from .mining import SGEWarning

log = logging.getLogger(__name__)

__all__ = [
    "EvalConfig",
    "EvalReport",
    "f1_scores",
    "stratified_split",
    "stratified_folds",
    "evaluate",
]

DEFAULT_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class EvalConfig:
    train_fractions: tuple = DEFAULT_FRACTIONS
    repetitions: int = 10
    l2: float = 1.0
    max_iter: int = 500
    seed: int = 0
    mode: str = "split"  # or "cv"
    folds: int = 10
    multinomial: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "train_fractions", tuple(float(f) for f in self.train_fractions))
        if not self.train_fractions:
            raise ValidationError("need at least one train fraction")
        if any(not 0.0 < f < 1.0 for f in self.train_fractions):
            raise ValidationError("train fractions must lie strictly between 0 and 1")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        if self.mode not in ("split", "cv"):
            raise ValidationError(f"unknown evaluation mode {self.mode!r}")
        if self.mode == "cv" and self.folds < 2:
            raise ValidationError("cross-validation needs at least 2 folds")


def f1_scores(y_true, y_pred) -> tuple:
    """Micro and macro F1 over the classes present in ``y_true``."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    labels = np.unique(y_true)
    tp = np.array([np.sum((y_pred == c) & (y_true == c)) for c in labels], dtype=float)
    fp = np.array([np.sum((y_pred == c) & (y_true != c)) for c in labels], dtype=float)
    fn = np.array([np.sum((y_pred != c) & (y_true == c)) for c in labels], dtype=float)
    denom = 2 * tp.sum() + fp.sum() + fn.sum()
    micro = 2 * tp.sum() / denom if denom else 0.0
    per_class = np.divide(2 * tp, 2 * tp + fp + fn, out=np.zeros_like(tp),
                          where=(2 * tp + fp + fn) > 0)
    return float(micro), float(per_class.mean()) if len(labels) else 0.0


def stratified_split(y, fraction: float, rng: np.random.Generator):
    """Train/test indices with ``round(fraction * n_c)`` train members per class.

    Every class keeps at least one training member and, when it has two or
    more, at least one test member.
    """
    y = np.asarray(y)
    train = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        n_c = len(members)
        n_tr = int(math.floor(fraction * n_c + 0.5))
        if n_tr < 1:
            warnings.warn(f"class {c!r} has {n_c} member(s); forcing one training example "
                          f"at fraction {fraction}", SGEWarning, stacklevel=2)
            n_tr = 1
        if n_c >= 2:
            n_tr = min(n_tr, n_c - 1)
        train.append(rng.permutation(members)[:n_tr])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(len(y)), train)
    return train, test


def stratified_folds(y, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per sample, dealing each class's shuffled members round-robin."""
    y = np.asarray(y)
    fold = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == c))
        fold[members] = (np.arange(len(members)) + offset) % folds
        offset += len(members)
    return fold


@dataclass
class EvalReport:
    records: list  # dicts: fraction, repetition, micro_f1, macro_f1
    params: dict = field(default_factory=dict)

    def aggregate(self) -> list:
        """Mean and standard deviation of both scores per train fraction."""
        out = []
        for f in sorted({r["fraction"] for r in self.records}):
            micro = np.array([r["micro_f1"] for r in self.records if r["fraction"] == f])
            macro = np.array([r["macro_f1"] for r in self.records if r["fraction"] == f])
            out.append({"fraction": f, "micro_mean": float(micro.mean()),
                        "micro_std": float(micro.std()), "macro_mean": float(macro.mean()),
                        "macro_std": float(macro.std()), "n": len(micro)})
        return out

    def mean_micro(self, fraction: float) -> float:
        return next(a["micro_mean"] for a in self.aggregate()
                    if math.isclose(a["fraction"], fraction))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["fraction", "repetition", "micro_f1", "macro_f1"])
            for r in self.records:
                writer.writerow([f"{r['fraction']:g}", r["repetition"],
                                 f"{r['micro_f1']:.6f}", f"{r['macro_f1']:.6f}"])

    def to_markdown(self) -> str:
        agg = self.aggregate()
        head = "| Metric / Percentage | " + " | ".join(
            f"{a['fraction'] * 100:g}%" for a in agg) + " |"
        rule = "|---" * (len(agg) + 1) + "|"
        lines = [head, rule]
        for label, key in (("Macro-F1", "macro"), ("Micro-F1", "micro")):
            lines.append(f"| {label} | " + " | ".join(
                f"{a[key + '_mean']:.3f}" for a in agg) + " |")
            lines.append(f"| {label} (std) | " + " | ".join(
                f"{a[key + '_std']:.3f}" for a in agg) + " |")
        return "\n".join(lines) + "\n"


def _fit_score(X, y, train, test, cfg):
    model = train_logreg(X[train], y[train], l2=cfg.l2, max_iter=cfg.max_iter,
                         multinomial=cfg.multinomial)
    return f1_scores(y[test], model.predict(X[test]))


def _split_cell(X, y, cfg, fi, rep):
    rng = np.random.default_rng([cfg.seed, fi, rep])
    train, test = stratified_split(y, cfg.train_fractions[fi], rng)
    micro, macro = _fit_score(X, y, train, test, cfg)
    return {"fraction": cfg.train_fractions[fi], "repetition": rep,
            "micro_f1": micro, "macro_f1": macro}


def _cv_cell(X, y, cfg, rep):
    rng = np.random.default_rng([cfg.seed, 0, rep])
    fold = stratified_folds(y, cfg.folds, rng)
    scores = [_fit_score(X, y, np.flatnonzero(fold != k), np.flatnonzero(fold == k), cfg)
              for k in range(cfg.folds) if np.any(fold == k)]
    micro, macro = np.mean(scores, axis=0)
    return {"fraction": round(1 - 1 / cfg.folds, 6), "repetition": rep,
            "micro_f1": float(micro), "macro_f1": float(macro)}


def labelled_rows(row_nodes, labels: LabelSet) -> np.ndarray:
    """Embedding row of every labelled node (in label order)."""
    pos = {int(n): i for i, n in enumerate(np.asarray(row_nodes).tolist())}
    missing = [int(n) for n in labels.nodes if int(n) not in pos]
    if missing:
        raise ValidationError(f"{len(missing)} labelled node(s) have no embedding row "
                              f"(first node index {missing[0]})")
    return np.array([pos[int(n)] for n in labels.nodes], dtype=np.int64)


def evaluate(embedding, labels: LabelSet, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Score a logistic-regression classifier on the labelled rows of ``embedding``.

    ``embedding`` is a :class:`~sge.vectorize.SymbolicEmbedding` or a
    ``(matrix, row_nodes)`` pair.
    """
    if isinstance(embedding, tuple):
        matrix, row_nodes = embedding
    else:
        matrix, row_nodes = embedding.matrix, embedding.row_nodes
    rows = labelled_rows(row_nodes, labels)
    X = matrix[rows]
    y = np.asarray(labels.classes)
    if cfg.mode == "split":
        cells = [(fi, rep) for fi in range(len(cfg.train_fractions))
                 for rep in range(cfg.repetitions)]
        run = lambda cell: _split_cell(X, y, cfg, *cell)  # noqa: E731
    else:
        cells = list(range(cfg.repetitions))
        run = lambda rep: _cv_cell(X, y, cfg, rep)  # noqa: E731
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(run, cells))
    else:
        records = [run(c) for c in cells]
    params = asdict(cfg)
    params["train_fractions"] = list(cfg.train_fractions)
    params["labelled_nodes"] = len(y)
    params["classes"] = list(labels.class_names)
    return EvalReport(records, params)
