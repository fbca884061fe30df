"""The full network: shared extractor, three branch attentions and the three
branch heads, with parameter grouping and checkpoint (de)serialisation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionMismatch, ModelNotLoaded
from .features import FEATURE_DIM, N_HEADS, BranchAttentionParams, FeatureExtractor, branch_attention
from .nn import Linear, ParamGroup, load_checkpoint, save_checkpoint, softmax_cross_entropy
from .pbd import PROJ_HIDDEN, PrototypeModel
from .stae import StaeModel

GROUPS = ("shared", "pbd", "stae", "emotion")


@dataclass
class EmotionHead:
    fc1: Linear
    fc2: Linear

    @classmethod
    def create(cls, rng: np.random.Generator, n_emotions: int, d_f: int = FEATURE_DIM):
        return cls(
            Linear.create(rng, d_f, PROJ_HIDDEN, "em.fc1"),
            Linear.create(rng, PROJ_HIDDEN, n_emotions, "em.fc2"),
        )

    @property
    def n_emotions(self) -> int:
        return self.fc2.weight.shape[0]

    def __call__(self, h: Tensor) -> Tensor:
        return self.fc2(ad.relu(self.fc1(h)))

    def parameters(self) -> list[Tensor]:
        return self.fc1.parameters() + self.fc2.parameters()


def emotion_loss(h_em, emotion_labels, head: EmotionHead) -> Tensor:
    """Mean cross entropy of the emotion classifier on ``d_f x n`` features."""
    return softmax_cross_entropy(head(ad.as_tensor(h_em)), emotion_labels)


@dataclass(frozen=True)
class BranchFeatures:
    pbd: Tensor
    stae: Tensor
    em: Tensor


@dataclass
class GzslModel:
    """All trainable state plus the class bookkeeping needed at inference.

    Prototype ``k`` belongs to gesture ``seen[k]``; StAE score row ``j``
    belongs to gesture ``unseen[j]``; emotion logits are indexed by
    emotion id.
    """

    extractor: FeatureExtractor
    attn_pbd: BranchAttentionParams
    attn_stae: BranchAttentionParams
    attn_em: BranchAttentionParams
    pbd: PrototypeModel
    stae: StaeModel
    emotion: EmotionHead
    seen: tuple[int, ...]
    unseen: tuple[int, ...]
    em_map: dict[int, int]
    input_mean: np.ndarray | None = None  # per-channel standardisation, fixed before training
    input_std: np.ndarray | None = None

    @classmethod
    def create(
        cls,
        rng: np.random.Generator,
        d_x: int,
        seen: Sequence[int],
        unseen: Sequence[int],
        em_map: dict[int, int],
        a_seen: np.ndarray,
        a_unseen: np.ndarray,
        gammas: tuple[float, float, float],
        pooling: str = "last",
        gamma: float = 0.5,
        heads: int = N_HEADS,
    ) -> GzslModel:
        seen, unseen = tuple(seen), tuple(unseen)
        if a_seen.shape[1] != len(seen) or a_unseen.shape[1] != len(unseen):
            raise DimensionMismatch("attribute matrices do not match the class lists")
        n_emotions = max(em_map.values()) + 1
        return cls(
            extractor=FeatureExtractor.create(rng, d_x, pooling, heads),
            attn_pbd=BranchAttentionParams.create(rng, name="pbd.attn"),
            attn_stae=BranchAttentionParams.create(rng, name="stae.attn"),
            attn_em=BranchAttentionParams.create(rng, name="em.attn"),
            pbd=PrototypeModel.create(rng, len(seen), gamma=gamma),
            stae=StaeModel.create(a_seen, a_unseen, *gammas, d_h=FEATURE_DIM),
            emotion=EmotionHead.create(rng, n_emotions),
            seen=seen,
            unseen=unseen,
            em_map=dict(em_map),
        )

    def fit_input_scaling(self, sequences: Sequence[np.ndarray]) -> None:
        """Standardise each input channel with statistics pooled over all frames."""
        frames = np.concatenate([np.asarray(s, dtype=np.float64) for s in sequences])
        self.input_mean = frames.mean(axis=0)
        std = frames.std(axis=0)
        self.input_std = np.where(std > 1e-8, std, 1.0)

    def standardize(self, frames: np.ndarray) -> np.ndarray:
        if self.input_mean is None:
            return frames
        return (np.asarray(frames, dtype=np.float64) - self.input_mean) / self.input_std

    def branches(self, sequences: Sequence[np.ndarray]) -> BranchFeatures:
        f = self.extractor([self.standardize(s) for s in sequences])
        return BranchFeatures(
            branch_attention(f, self.attn_pbd),
            branch_attention(f, self.attn_stae),
            branch_attention(f, self.attn_em),
        )

    def param_groups(self, learning_rates: dict[str, float]) -> list[ParamGroup]:
        members = {
            "shared": self.extractor.parameters(),
            "pbd": self.attn_pbd.parameters() + self.pbd.parameters(),
            "stae": self.attn_stae.parameters() + self.stae.parameters(),
            "emotion": self.attn_em.parameters() + self.emotion.parameters(),
        }
        return [ParamGroup(g, members[g], float(learning_rates[g])) for g in GROUPS]

    def parameters(self) -> list[Tensor]:
        return [p for g in self.param_groups(dict.fromkeys(GROUPS, 0.0)) for p in g.params]

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {p.name: p.data.copy() for p in self.parameters()}
        state["const.a_seen"] = self.stae.a_seen.copy()
        state["const.a_unseen"] = self.stae.a_unseen.copy()
        if self.input_mean is not None:
            state["const.input_mean"] = self.input_mean.copy()
            state["const.input_std"] = self.input_std.copy()
        return state

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise ModelNotLoaded(f"checkpoint lacks parameter {p.name}")
            if state[p.name].shape != p.data.shape:
                raise ModelNotLoaded(
                    f"parameter {p.name} has shape {state[p.name].shape}, expected {p.data.shape}"
                )
            p.data[...] = state[p.name]
        if "const.input_mean" in state:
            self.input_mean = state["const.input_mean"].copy()
            self.input_std = state["const.input_std"].copy()

    def meta(self, extra: dict | None = None) -> dict:
        meta = {
            "d_x": self.extractor.input_dim,
            "seen": list(self.seen),
            "unseen": list(self.unseen),
            "em_map": {str(g): e for g, e in sorted(self.em_map.items())},
            "gammas": [self.stae.gamma1, self.stae.gamma2, self.stae.gamma3],
            "gamma": self.pbd.gamma,
            "pooling": self.extractor.pooling,
            "heads": self.extractor.attention.heads,
        }
        if extra:
            meta.update(extra)
        return meta

    def save(self, path, extra_meta: dict | None = None) -> None:
        save_checkpoint(path, self.state_dict(), self.meta(extra_meta))

    @classmethod
    def load(cls, path) -> tuple[GzslModel, dict]:
        """Rebuild a model from a checkpoint; returns ``(model, meta)``."""
        if not Path(path).is_file():
            raise ModelNotLoaded(f"no checkpoint at {path}")
        state, meta = load_checkpoint(path)
        try:
            em_map = {int(g): int(e) for g, e in meta["em_map"].items()}
            model = cls.create(
                np.random.default_rng(0),
                int(meta["d_x"]),
                meta["seen"],
                meta["unseen"],
                em_map,
                state["const.a_seen"],
                state["const.a_unseen"],
                tuple(meta["gammas"]),
                pooling=meta.get("pooling", "last"),
                gamma=meta.get("gamma", 0.5),
                heads=int(meta.get("heads", N_HEADS)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelNotLoaded(f"{path}: incomplete checkpoint ({exc})") from exc
        model.load_state(state)
        return model, meta
