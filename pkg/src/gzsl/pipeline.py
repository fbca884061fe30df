"""Label prediction and GZSL evaluation.

A sample is first checked against the prototype gate. If its projection is
within the threshold of its nearest prototype it receives that seen class;
otherwise it is handed to the autoencoder, which can only emit unseen
classes. In batch mode all unseen-gated samples are solved together so the
instance graph can couple them; the per-sample mode drops the graph term and
makes every prediction independent of the rest of the batch.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import SkeletonSequence
from .errors import EmptySubset, ModelNotLoaded
from .model import GzslModel
from .pbd import gate_batch, project
from .stae import stae_infer

CHUNK = 64


def harmonic_mean(acc_s: float | None, acc_u: float | None) -> float:
    """``2 a b / (a + b)``; zero when either side is zero or undefined."""
    if acc_s is None or acc_u is None or acc_s + acc_u == 0.0:
        return 0.0
    return 2.0 * acc_s * acc_u / (acc_s + acc_u)


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    delta_d: float
    nearest: int  # gesture id of the nearest prototype
    gesture: int
    emotion: int

    @property
    def seen(self) -> bool:
        return self.delta_d <= 0.0

    @property
    def verdict(self) -> str:
        return "seen" if self.seen else "unseen"


@dataclass
class PredictionBatch:
    """Predictions plus the intermediate arrays they were derived from."""

    predictions: list[Prediction]
    projections: np.ndarray  # 20 x N
    h_stae: np.ndarray  # d_f x N
    unseen_index: np.ndarray  # columns routed to the autoencoder
    stae_scores: np.ndarray  # C_u x len(unseen_index)


def _frames(x) -> np.ndarray:
    return x.frames if isinstance(x, SkeletonSequence) else np.asarray(x, dtype=np.float64)


def _branch_arrays(model: GzslModel, frames: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    feats = model.branches(frames)
    return project(feats.pbd, model.pbd).data, feats.stae.data


def predict_batch(
    samples: Sequence[SkeletonSequence | np.ndarray],
    model: GzslModel | None,
    transductive: bool = True,
    threads: int = 1,
) -> PredictionBatch:
    if model is None:
        raise ModelNotLoaded("no trained model")
    if len(samples) == 0:
        raise EmptySubset("nothing to predict")
    frames = [_frames(s) for s in samples]
    chunks = [frames[i : i + CHUNK] for i in range(0, len(frames), CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _branch_arrays(model, c), chunks))
    else:
        parts = [_branch_arrays(model, c) for c in chunks]
    P = np.concatenate([p for p, _ in parts], axis=1)
    H = np.concatenate([h for _, h in parts], axis=1)

    nearest, delta = gate_batch(P, model.pbd.prototypes.data, model.pbd.thresholds.data)
    gestures = np.array([model.seen[k] for k in nearest], dtype=np.int64)
    unseen_idx = np.flatnonzero(delta > 0.0)
    scores = np.zeros((len(model.unseen), 0))
    if unseen_idx.size:
        result = stae_infer(H[:, unseen_idx], model.stae, transductive=transductive)
        scores = result.scores
        gestures[unseen_idx] = [model.unseen[j] for j in result.labels]

    ids = [s.sample_id if isinstance(s, SkeletonSequence) else str(i) for i, s in enumerate(samples)]
    preds = [
        Prediction(ids[i], float(delta[i]), model.seen[nearest[i]], int(g), model.em_map[int(g)])
        for i, g in enumerate(gestures)
    ]
    return PredictionBatch(preds, P, H, unseen_idx, scores)


def predict(x: SkeletonSequence | np.ndarray, model: GzslModel | None) -> tuple[int, int]:
    """``(gesture, emotion)`` for a single sequence."""
    pred = predict_batch([x], model, transductive=False).predictions[0]
    return pred.gesture, pred.emotion


def _accuracy(confusion: np.ndarray, rows: Sequence[int]) -> float | None:
    total = int(confusion[rows].sum())
    if total == 0:
        return None
    return int(confusion[rows, rows].sum()) / total


@dataclass
class EvaluationReport:
    acc_s: float | None
    acc_u: float | None
    h: float
    acc_s_em: float | None
    acc_u_em: float | None
    h_em: float
    classes: list[int]
    confusion: np.ndarray  # true gesture x predicted gesture, rows/cols in ``classes`` order
    seen_classes: list[int]
    emotion_confusion_seen: np.ndarray  # true emotion x predicted emotion, seen-class samples
    emotion_confusion_unseen: np.ndarray
    gate: dict = field(default_factory=dict)

    def accuracies_from_confusion(self) -> dict[str, float | None]:
        seen_rows = [i for i, c in enumerate(self.classes) if c in self.seen_classes]
        unseen_rows = [i for i, c in enumerate(self.classes) if c not in self.seen_classes]
        em_rows = list(range(self.emotion_confusion_seen.shape[0]))

        def em_acc(m):
            return _accuracy(m, em_rows)

        return {
            "acc_s": _accuracy(self.confusion, seen_rows),
            "acc_u": _accuracy(self.confusion, unseen_rows),
            "acc_s_em": em_acc(self.emotion_confusion_seen),
            "acc_u_em": em_acc(self.emotion_confusion_unseen),
        }

    def to_dict(self) -> dict:
        return {
            "acc_s": self.acc_s,
            "acc_u": self.acc_u,
            "h": self.h,
            "acc_s_em": self.acc_s_em,
            "acc_u_em": self.acc_u_em,
            "h_em": self.h_em,
            "gate": self.gate,
            "classes": self.classes,
            "seen_classes": self.seen_classes,
            "confusion": self.confusion.tolist(),
            "emotion_confusion_seen": self.emotion_confusion_seen.tolist(),
            "emotion_confusion_unseen": self.emotion_confusion_unseen.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        def pct(v):
            return "undefined" if v is None else f"{100.0 * v:.2f}%"

        return (
            f"gesture  Acc_s {pct(self.acc_s)}  Acc_u {pct(self.acc_u)}  H {pct(self.h)}\n"
            f"emotion  Acc_s {pct(self.acc_s_em)}  Acc_u {pct(self.acc_u_em)}  H {pct(self.h_em)}"
        )


def evaluate(
    test: Sequence[SkeletonSequence],
    model: GzslModel | None,
    transductive: bool = True,
    threads: int = 1,
    batch: PredictionBatch | None = None,
) -> EvaluationReport:
    """Seen/unseen accuracies at gesture and emotion level.

    A subset with no test samples is reported as ``None`` and forces the
    corresponding harmonic mean to zero.
    """
    if model is None:
        raise ModelNotLoaded("no trained model")
    if len(test) == 0:
        raise EmptySubset("empty test set")
    if batch is None:
        batch = predict_batch(test, model, transductive, threads)
    classes = sorted((*model.seen, *model.unseen))
    col = {c: i for i, c in enumerate(classes)}
    n_em = model.emotion.n_emotions
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    em_conf = {True: np.zeros((n_em, n_em), dtype=np.int64), False: np.zeros((n_em, n_em), dtype=np.int64)}
    seen_set = set(model.seen)
    gate_counts = {"seen_as_seen": 0, "seen_as_unseen": 0, "unseen_as_seen": 0, "unseen_as_unseen": 0}
    for sample, pred in zip(test, batch.predictions):
        is_seen = sample.gesture in seen_set
        confusion[col[sample.gesture], col[pred.gesture]] += 1
        em_conf[is_seen][sample.emotion, pred.emotion] += 1
        key = ("seen" if is_seen else "unseen") + "_as_" + pred.verdict
        gate_counts[key] += 1

    n_seen = gate_counts["seen_as_seen"] + gate_counts["seen_as_unseen"]
    n_unseen = gate_counts["unseen_as_seen"] + gate_counts["unseen_as_unseen"]
    gate = dict(gate_counts)
    gate["seen_gate_rate"] = gate_counts["seen_as_seen"] / n_seen if n_seen else None
    gate["unseen_gate_rate"] = gate_counts["unseen_as_unseen"] / n_unseen if n_unseen else None

    report = EvaluationReport(
        None, None, 0.0, None, None, 0.0, classes, confusion, sorted(seen_set),
        em_conf[True], em_conf[False], gate,
    )
    accs = report.accuracies_from_confusion()
    report.acc_s, report.acc_u = accs["acc_s"], accs["acc_u"]
    report.acc_s_em, report.acc_u_em = accs["acc_s_em"], accs["acc_u_em"]
    report.h = harmonic_mean(report.acc_s, report.acc_u)
    report.h_em = harmonic_mean(report.acc_s_em, report.acc_u_em)
    return report


def prediction_dump(batch: PredictionBatch) -> str:
    """Tab-separated per-sample lines: id, delta_d, verdict, gesture, emotion."""
    lines = ["sample_id\tdelta_d\tverdict\tgesture\temotion"]
    for p in batch.predictions:
        lines.append(f"{p.sample_id}\t{p.delta_d:.17g}\t{p.verdict}\t{p.gesture}\t{p.emotion}")
    return "\n".join(lines) + "\n"
