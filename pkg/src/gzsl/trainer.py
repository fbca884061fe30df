"""Joint training of the three branches.

Each step draws a batch of seen-class samples, computes the branch losses
on their branch-attended features and minimises

    L = L_pbd + lambda1 * L_stae + lambda2 * L_em

with Adam, using one learning rate per parameter group. The threshold terms
of ``L_pbd`` are switched off until ``threshold_warmup_epoch``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .data import AttributeMatrix, PartitionSpec, SkeletonSequence
from .errors import EmptyTrainingSet, InvalidSpec, NonFiniteLoss
from .model import GzslModel, emotion_loss
from .nn import Adam
from .pbd import pbd_total_loss, project
from .stae import onehot, ridge_init, stae_train_loss


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 1.0
    lambda2: float = 4.0
    beta1: float = 4.0
    beta2: float = 0.1
    beta3: float = 1.0
    gamma: float = 0.5
    gamma1: float = 1e-3
    gamma2: float = 1e-4
    gamma3: float = 0.1
    lr_shared: float = 1e-4
    lr_pbd: float = 1e-4
    lr_stae: float = 2e-5
    lr_emotion: float = 2e-5
    batch_size: int = 8
    epochs: int = 200
    threshold_warmup_epoch: int | None = None  # None: 60% of epochs
    seed: int = 0
    pooling: str = "last"
    ridge_init: bool = True
    standardize: bool = True  # per-channel input scaling fitted on the training frames
    eval_every: int = 0  # evaluate on the held-out split every k epochs (0: never)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise InvalidSpec(f"{f.name} must be finite")
        for name in ("lambda1", "lambda2", "beta1", "beta2", "beta3", "gamma1", "gamma2", "gamma3",
                     "lr_shared", "lr_pbd", "lr_stae", "lr_emotion"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be non-negative")
        if self.gamma <= 0:
            raise InvalidSpec("gamma must be positive")
        if self.batch_size < 1 or self.epochs < 0 or self.eval_every < 0:
            raise InvalidSpec("batch_size must be >= 1, epochs and eval_every >= 0")
        if self.threshold_warmup_epoch is not None and self.threshold_warmup_epoch < 0:
            raise InvalidSpec("threshold_warmup_epoch must be >= 0")
        if self.pooling not in ("last", "mean"):
            raise InvalidSpec(f"unknown pooling {self.pooling!r}")

    @property
    def warmup_epoch(self) -> int:
        """First (0-based) epoch in which the threshold losses are active."""
        if self.threshold_warmup_epoch is not None:
            return self.threshold_warmup_epoch
        return int(0.6 * self.epochs)

    @property
    def learning_rates(self) -> dict[str, float]:
        return {
            "shared": self.lr_shared,
            "pbd": self.lr_pbd,
            "stae": self.lr_stae,
            "emotion": self.lr_emotion,
        }

    def with_overrides(self, **overrides) -> TrainConfig:
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InvalidSpec(f"unknown config keys {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "partition1": TrainConfig(),
    "partition2": TrainConfig(
        lambda1=1.0, lambda2=2.0, beta1=2.0, beta2=0.05, beta3=1.0,
        gamma1=1e-4, gamma2=1e-4, gamma3=0.1,
        lr_shared=1e-4, lr_pbd=5e-5, lr_stae=2e-5, lr_emotion=5e-5,
    ),
}


@dataclass(frozen=True)
class StepLosses:
    pbd: Tensor
    stae: Tensor
    em: Tensor
    total: Tensor


def total_loss(l_pbd, l_stae, l_em, lambda1: float, lambda2: float) -> Tensor:
    return ad.as_tensor(l_pbd) + ad.as_tensor(l_stae) * lambda1 + ad.as_tensor(l_em) * lambda2


def batch_losses(
    model: GzslModel,
    batch: Sequence[SkeletonSequence],
    config: TrainConfig,
    thresholds_active: bool = True,
) -> StepLosses:
    """Branch losses and their weighted sum on one batch of seen samples."""
    seen_index = {g: k for k, g in enumerate(model.seen)}
    labels = np.array([seen_index[s.gesture] for s in batch], dtype=np.intp)
    emotions = np.array([s.emotion for s in batch], dtype=np.intp)
    feats = model.branches([s.frames for s in batch])
    beta2, beta3 = (config.beta2, config.beta3) if thresholds_active else (0.0, 0.0)
    l_pbd = pbd_total_loss(project(feats.pbd, model.pbd), labels, model.pbd, config.beta1, beta2, beta3).total
    l_stae = stae_train_loss(feats.stae, onehot(labels, len(model.seen)), model.stae, reduction="mean")
    l_em = emotion_loss(feats.em, emotions, model.emotion)
    return StepLosses(l_pbd, l_stae, l_em, total_loss(l_pbd, l_stae, l_em, config.lambda1, config.lambda2))


@dataclass
class TrainResult:
    model: GzslModel
    log: list[dict] = field(default_factory=list)
    best_epoch: int | None = None

    def log_text(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.log)


def build_model(
    train_set: Sequence[SkeletonSequence],
    partition: PartitionSpec,
    attributes: AttributeMatrix,
    config: TrainConfig,
) -> GzslModel:
    if len(train_set) == 0:
        raise EmptyTrainingSet("no training samples")
    rng = np.random.default_rng(config.seed)
    return GzslModel.create(
        rng,
        train_set[0].frames.shape[1],
        partition.seen,
        partition.unseen,
        partition.em_map,
        attributes.matrix_for(partition.seen),
        attributes.matrix_for(partition.unseen),
        (config.gamma1, config.gamma2, config.gamma3),
        pooling=config.pooling,
        gamma=config.gamma,
    )


def _stae_features(model: GzslModel, samples: Sequence[SkeletonSequence], chunk: int = 64) -> np.ndarray:
    cols = [model.branches([s.frames for s in samples[i : i + chunk]]).stae.data
            for i in range(0, len(samples), chunk)]
    return np.concatenate(cols, axis=1)


def train(
    train_set: Sequence[SkeletonSequence],
    partition: PartitionSpec,
    attributes: AttributeMatrix,
    config: TrainConfig,
    validation: Sequence[SkeletonSequence] | None = None,
    on_epoch: Callable[[dict], None] | None = None,
    model: GzslModel | None = None,
) -> TrainResult:
    """Train from scratch (or continue ``model``) and return the final or,
    with a validation split and ``eval_every``, the best-H model."""
    if len(train_set) == 0:
        raise EmptyTrainingSet("no training samples")
    unseen = set(partition.unseen)
    if any(s.gesture in unseen for s in train_set):
        raise InvalidSpec("training set contains unseen-class samples")
    if model is None:
        model = build_model(train_set, partition, attributes, config)
        if config.standardize:
            model.fit_input_scaling([s.frames for s in train_set])
        if config.ridge_init:
            seen_index = {g: k for k, g in enumerate(model.seen)}
            labels = [seen_index[s.gesture] for s in train_set]
            model.stae.u.data[...] = ridge_init(
                _stae_features(model, train_set), labels, model.stae.a_seen
            )
    optimizer = Adam(model.param_groups(config.learning_rates))
    order_rng = np.random.default_rng([config.seed, 1])
    result = TrainResult(model)
    best_h, best_state = -1.0, None

    for epoch in range(config.epochs):
        active = epoch >= config.warmup_epoch
        order = order_rng.permutation(len(train_set))
        sums = np.zeros(4)
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start : start + config.batch_size]]
            losses = batch_losses(model, batch, config, thresholds_active=active)
            values = np.array([losses.pbd.data, losses.stae.data, losses.em.data, losses.total.data], float)
            if not np.all(np.isfinite(values)):
                raise NonFiniteLoss(
                    f"epoch {epoch + 1}, batch {n_batches + 1}: "
                    f"L_pbd={values[0]}, L_stae={values[1]}, L_em={values[2]}"
                )
            optimizer.zero_grad()
            ad.backward(losses.total)
            optimizer.step()
            sums += values
            n_batches += 1
        mean = sums / n_batches
        record = {
            "epoch": epoch + 1,
            "L_pbd": float(mean[0]),
            "L_stae": float(mean[1]),
            "L_em": float(mean[2]),
            "total": float(mean[3]),
            "thresholds_active": active,
        }
        if validation and config.eval_every and (epoch + 1) % config.eval_every == 0:
            from .pipeline import evaluate

            report = evaluate(validation, model)
            record.update(acc_s=report.acc_s, acc_u=report.acc_u, h=report.h)
            if report.h >= best_h:  # ties go to the later epoch
                best_h, best_state = report.h, model.state_dict()
                result.best_epoch = epoch + 1
        result.log.append(record)
        if on_epoch is not None:
            on_epoch(record)

    if best_state is not None:
        model.load_state(best_state)
    return result
