"""Datasets, attribute tables, partitions and the synthetic gesture generator.

All three file types are line-oriented text starting with a magic line.
Numbers are written with 17 significant digits so that a write/read round
trip is exact and files are byte-identical across runs.

Dataset (``gzsl-data-v1``)::

    gzsl-data-v1
    descriptor {"frame_dim": 75, "classes": {"0": 0, ...}, "emotions": [...], ...}
    sample <id> split=<train|test> gesture=<g> emotion=<e> subject=<s|-> frames=<l> dims=<d>
    <l lines with d values each>
    ...
    end

Attributes (``gzsl-attr-v1``)::

    gzsl-attr-v1
    names <name_1> ... <name_d>
    kinds <c|b> ... <c|b>
    class <id> <v_1> ... <v_d>

Partition (``gzsl-partition-v1``)::

    gzsl-partition-v1
    name <name>
    seen <id> <id> ...
    unseen <id> <id> ...
    em <gesture>:<emotion> ...
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidSpec,
    MalformedFile,
    MissingClass,
    OutOfRangeAttribute,
    UnknownClassId,
    UnseenInTrain,
)

DATA_MAGIC = "gzsl-data-v1"
ATTR_MAGIC = "gzsl-attr-v1"
PARTITION_MAGIC = "gzsl-partition-v1"

N_JOINTS = 25
FRAME_DIM = 3 * N_JOINTS


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    sample_id: str
    frames: np.ndarray  # l x d_x
    gesture: int
    emotion: int
    subject: int | None = None
    split: str = "train"

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValueError(f"{self.sample_id}: frames must be a non-empty l x d_x matrix")
        if not np.all(np.isfinite(frames)):
            raise ValueError(f"{self.sample_id}: frames contain non-finite values")
        object.__setattr__(self, "frames", frames)

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return (
            (self.sample_id, self.gesture, self.emotion, self.subject, self.split)
            == (other.sample_id, other.gesture, other.emotion, other.subject, other.split)
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True)
class PartitionSpec:
    name: str
    seen: tuple[int, ...]
    unseen: tuple[int, ...]
    em_map: dict[int, int] = field(hash=False)

    def __post_init__(self):
        overlap = set(self.seen) & set(self.unseen)
        if overlap:
            raise InvalidSpec(f"classes {sorted(overlap)} are both seen and unseen")
        missing = [g for g in (*self.seen, *self.unseen) if g not in self.em_map]
        if missing:
            raise InvalidSpec(f"no emotion given for gesture classes {missing}")

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(sorted((*self.seen, *self.unseen)))

    def emotion_of(self, gesture: int) -> int:
        return self.em_map[gesture]

    @property
    def n_emotions(self) -> int:
        return max(self.em_map.values()) + 1


# the MASR gesture table: five emotions with their gesture ids
MASR_EMOTIONS = ("happy", "sad", "surprise", "fear", "anger")
_MASR_GESTURES = {0: range(0, 6), 1: range(6, 10), 2: range(10, 17), 3: range(17, 24), 4: range(24, 30)}
MASR_EM_MAP = {g: e for e, gs in _MASR_GESTURES.items() for g in gs}
MASR_UNSEEN = {
    1: (1, 3, 8, 9, 13, 14, 19, 21, 26, 29),
    2: (24, 25, 26, 27, 28, 29),
}


def masr_partition(which: int) -> PartitionSpec:
    """Seen/unseen split of the 30 MASR gesture classes (settings 1 and 2)."""
    if which not in MASR_UNSEEN:
        raise InvalidSpec(f"unknown partition setting {which!r}; choose 1 or 2")
    unseen = MASR_UNSEEN[which]
    seen = tuple(g for g in range(30) if g not in unseen)
    return PartitionSpec(f"partition{which}", seen, unseen, dict(MASR_EM_MAP))


@dataclass(frozen=True)
class AttributeMatrix:
    class_ids: tuple[int, ...]
    values: np.ndarray  # n_classes x d_s
    names: tuple[str, ...]
    kinds: tuple[str, ...]  # "c" continuous in [0, 1], "b" binary

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.class_ids), len(self.names)) or len(self.kinds) != len(self.names):
            raise InvalidSpec("attribute table shape does not match ids/names/kinds")
        for j, kind in enumerate(self.kinds):
            col = values[:, j]
            if kind == "c":
                bad = (col < 0.0) | (col > 1.0) | ~np.isfinite(col)
            elif kind == "b":
                bad = (col != 0.0) & (col != 1.0)
            else:
                raise InvalidSpec(f"unknown attribute kind {kind!r}")
            if np.any(bad):
                row = int(np.flatnonzero(bad)[0])
                raise OutOfRangeAttribute(
                    f"attribute {self.names[j]!r} of class {self.class_ids[row]} "
                    f"= {col[row]!r} is out of range for kind {kind!r}"
                )

    @property
    def dim(self) -> int:
        return len(self.names)

    def vector(self, class_id: int) -> np.ndarray:
        try:
            return self.values[self.class_ids.index(class_id)]
        except ValueError:
            raise MissingClass(f"no attributes for class {class_id}") from None

    def matrix_for(self, class_ids: Iterable[int], normalize: bool = True) -> np.ndarray:
        """``d_s x len(class_ids)`` with one (optionally unit-norm) column per class."""
        cols = np.stack([self.vector(c) for c in class_ids], axis=1)
        if normalize:
            norms = np.linalg.norm(cols, axis=0, keepdims=True)
            cols = cols / np.where(norms == 0.0, 1.0, norms)
        return cols


# writers

def write_dataset(path, samples: Sequence[SkeletonSequence], descriptor: dict) -> None:
    lines = [DATA_MAGIC, "descriptor " + json.dumps(descriptor, sort_keys=True)]
    for s in samples:
        if any(ch.isspace() for ch in s.sample_id):
            raise ValueError(f"sample id {s.sample_id!r} contains whitespace")
        subject = "-" if s.subject is None else str(s.subject)
        lines.append(
            f"sample {s.sample_id} split={s.split} gesture={s.gesture} emotion={s.emotion} "
            f"subject={subject} frames={s.frames.shape[0]} dims={s.frames.shape[1]}"
        )
        lines.extend(" ".join(_fmt(v) for v in row) for row in s.frames)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_attributes(path, attrs: AttributeMatrix) -> None:
    lines = [ATTR_MAGIC, "names " + " ".join(attrs.names), "kinds " + " ".join(attrs.kinds)]
    for cid, row in zip(attrs.class_ids, attrs.values):
        lines.append(f"class {cid} " + " ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_partition(path, partition: PartitionSpec) -> None:
    em = " ".join(f"{g}:{partition.em_map[g]}" for g in sorted(partition.em_map))
    lines = [
        PARTITION_MAGIC,
        f"name {partition.name}",
        "seen " + " ".join(map(str, partition.seen)),
        "unseen " + " ".join(map(str, partition.unseen)),
        "em " + em,
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# readers

def _read_lines(path, magic: str) -> list[str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedFile(path, 0, f"cannot read file: {exc}") from exc
    if not lines or lines[0].strip() != magic:
        raise MalformedFile(path, 1, f"expected header {magic!r}")
    return lines


def _keyvals(tokens: Sequence[str], path, lineno: int) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep:
            raise MalformedFile(path, lineno, f"expected key=value, got {tok!r}")
        out[key] = value
    return out


def read_dataset(path) -> tuple[list[SkeletonSequence], dict]:
    lines = _read_lines(path, DATA_MAGIC)
    if len(lines) < 2 or not lines[1].startswith("descriptor "):
        raise MalformedFile(path, 2, "missing descriptor line")
    try:
        descriptor = json.loads(lines[1][len("descriptor "):])
    except json.JSONDecodeError as exc:
        raise MalformedFile(path, 2, f"bad descriptor JSON: {exc}") from exc
    samples: list[SkeletonSequence] = []
    ids: set[str] = set()
    i = 2
    while True:
        if i >= len(lines):
            raise MalformedFile(path, i, "missing 'end' marker")
        head = lines[i].split()
        if head == ["end"]:
            break
        lineno = i + 1
        if len(head) < 2 or head[0] != "sample":
            raise MalformedFile(path, lineno, f"expected a sample header, got {lines[i][:40]!r}")
        kv = _keyvals(head[2:], path, lineno)
        try:
            n_frames, dims = int(kv["frames"]), int(kv["dims"])
            gesture, emotion = int(kv["gesture"]), int(kv["emotion"])
            subject = None if kv.get("subject", "-") == "-" else int(kv["subject"])
            split = kv["split"]
        except (KeyError, ValueError) as exc:
            raise MalformedFile(path, lineno, f"bad sample header: {exc}") from exc
        if split not in ("train", "test"):
            raise MalformedFile(path, lineno, f"split must be train or test, got {split!r}")
        if n_frames < 1:
            raise MalformedFile(path, lineno, "a sample needs at least one frame")
        if head[1] in ids:
            raise MalformedFile(path, lineno, f"duplicate sample id {head[1]!r}")
        ids.add(head[1])
        rows = []
        for k in range(n_frames):
            j = i + 1 + k
            if j >= len(lines):
                raise MalformedFile(path, j, "file ends inside a sample")
            try:
                row = [float(v) for v in lines[j].split()]
            except ValueError as exc:
                raise MalformedFile(path, j + 1, f"bad number: {exc}") from exc
            if len(row) != dims:
                raise MalformedFile(path, j + 1, f"expected {dims} values, got {len(row)}")
            if not all(np.isfinite(row)):
                raise MalformedFile(path, j + 1, "non-finite frame value")
            rows.append(row)
        samples.append(
            SkeletonSequence(head[1], np.array(rows), gesture, emotion, subject, split)
        )
        i += 1 + n_frames
    return samples, descriptor


def load_attributes(path, required: Iterable[int] | None = None) -> AttributeMatrix:
    lines = _read_lines(path, ATTR_MAGIC)
    if len(lines) < 3 or not lines[1].startswith("names ") or not lines[2].startswith("kinds "):
        raise MalformedFile(path, 2, "expected 'names' and 'kinds' lines")
    names = tuple(lines[1].split()[1:])
    kinds = tuple(lines[2].split()[1:])
    if len(kinds) != len(names):
        raise MalformedFile(path, 3, f"{len(kinds)} kinds for {len(names)} names")
    ids, rows = [], []
    for i, line in enumerate(lines[3:], start=4):
        if not line.strip():
            continue
        tok = line.split()
        try:
            if tok[0] != "class":
                raise ValueError("expected 'class'")
            cid = int(tok[1])
            row = [float(v) for v in tok[2:]]
        except (IndexError, ValueError) as exc:
            raise MalformedFile(path, i, f"bad class row: {exc}") from exc
        if len(row) != len(names):
            raise MalformedFile(path, i, f"expected {len(names)} values, got {len(row)}")
        if cid in ids:
            raise MalformedFile(path, i, f"duplicate class id {cid}")
        ids.append(cid)
        rows.append(row)
    attrs = AttributeMatrix(tuple(ids), np.array(rows).reshape(len(ids), len(names)), names, kinds)
    if required is not None:
        missing = sorted(set(required) - set(ids))
        if missing:
            raise MissingClass(f"{path}: no attributes for classes {missing}")
    return attrs


def load_partition(path) -> PartitionSpec:
    lines = _read_lines(path, PARTITION_MAGIC)
    fields: dict[str, list[str]] = {}
    for i, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if not tok:
            continue
        if tok[0] not in ("name", "seen", "unseen", "em") or tok[0] in fields:
            raise MalformedFile(path, i, f"unexpected line {line[:40]!r}")
        fields[tok[0]] = tok[1:]
    try:
        em_map = {}
        for pair in fields["em"]:
            g, e = pair.split(":")
            em_map[int(g)] = int(e)
        return PartitionSpec(
            " ".join(fields.get("name", ["unnamed"])),
            tuple(int(v) for v in fields["seen"]),
            tuple(int(v) for v in fields["unseen"]),
            em_map,
        )
    except KeyError as exc:
        raise MalformedFile(path, len(lines), f"missing field {exc}") from exc
    except ValueError as exc:
        raise MalformedFile(path, len(lines), str(exc)) from exc


def load_dataset(path, partition_path):
    """Read a dataset and split it by its partition.

    Returns ``(train, test, partition)``. Every training sample must belong
    to a seen class; test samples may come from either side.
    """
    partition = load_partition(partition_path)
    samples, descriptor = read_dataset(path)
    known = {int(k) for k in descriptor.get("classes", {})} or set(partition.classes)
    unknown_partition = sorted(set(partition.classes) - known)
    if unknown_partition:
        raise UnknownClassId(f"partition refers to classes {unknown_partition} absent from {path}")
    unseen = set(partition.unseen)
    train, test = [], []
    for s in samples:
        if s.gesture not in partition.em_map or s.gesture not in known:
            raise UnknownClassId(f"sample {s.sample_id}: unknown gesture class {s.gesture}")
        if partition.em_map[s.gesture] != s.emotion:
            raise UnknownClassId(
                f"sample {s.sample_id}: emotion {s.emotion} disagrees with em({s.gesture})"
                f" = {partition.em_map[s.gesture]}"
            )
        if s.split == "train":
            if s.gesture in unseen:
                raise UnseenInTrain(f"sample {s.sample_id} of unseen class {s.gesture} is in training")
            train.append(s)
        else:
            test.append(s)
    return train, test, partition


# synthetic data

# Kinect v2 joint order; coordinates in metres, x right, y up, z toward the camera
_REST_POSE = np.array([
    [0.00, 0.00, 0.00], [0.00, 0.30, 0.00], [0.00, 0.62, 0.00], [0.00, 0.78, 0.00],
    [-0.18, 0.55, 0.00], [-0.22, 0.30, 0.00], [-0.24, 0.06, 0.00], [-0.24, -0.02, 0.00],
    [0.18, 0.55, 0.00], [0.22, 0.30, 0.00], [0.24, 0.06, 0.00], [0.24, -0.02, 0.00],
    [-0.10, -0.02, 0.00], [-0.11, -0.45, 0.00], [-0.11, -0.85, 0.00], [-0.11, -0.90, 0.08],
    [0.10, -0.02, 0.00], [0.11, -0.45, 0.00], [0.11, -0.85, 0.00], [0.11, -0.90, 0.08],
    [0.00, 0.55, 0.00], [-0.24, -0.08, 0.00], [-0.21, 0.00, 0.03], [0.24, -0.08, 0.00],
    [0.21, 0.00, 0.03],
])
LEFT_ARM = (4, 5, 6, 7, 21, 22)
RIGHT_ARM = (8, 9, 10, 11, 23, 24)
HANDS = (6, 7, 21, 22, 10, 11, 23, 24)
UPPER_BODY = (1, 2, 3, 20)
HEAD = (2, 3)
_MIRROR = np.array([0, 1, 2, 3, 8, 9, 10, 11, 4, 5, 6, 7, 16, 17, 18, 19, 12, 13, 14, 15,
                    20, 23, 24, 21, 22])

CONTINUOUS_ATTRIBUTES = (
    ("left_arm_raise", LEFT_ARM),
    ("right_arm_raise", RIGHT_ARM),
    ("arm_spread", LEFT_ARM + RIGHT_ARM),
    ("hands_to_face", HANDS),
    ("elbow_bend", (5, 9, 6, 10)),
    ("swing", LEFT_ARM + RIGHT_ARM),
    ("forward_reach", HANDS),
)
BINARY_ATTRIBUTES = ("torso_lean", "head_motion", "symmetric", "fast", "repeated")


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a synthetic GZSL problem.

    Each emotion owns ``gestures_per_emotion`` gesture classes, of which
    ``unseen_per_emotion`` are held out. Class attribute vectors are drawn
    around a per-emotion centre; motion is a fixed function of the
    attributes, so classes with similar attributes move alike.
    """

    n_emotions: int = 5
    gestures_per_emotion: int = 3
    unseen_per_emotion: int = 2
    train_per_class: int = 40
    test_per_seen_class: int = 10
    test_per_unseen_class: int = 10
    length_range: tuple[int, int] = (16, 16)
    noise: float = 0.01
    n_subjects: int = 5
    latent_dim: int = 4
    attribute_spread: float = 1.2
    binary_flip: float = 0.0
    binary_mode: str = "latent"
    attribute_gain: float = 0.25
    motion_gain: float = 0.25
    seed: int = 0

    def validate(self) -> None:
        if self.n_emotions < 2 or self.gestures_per_emotion < 2:
            raise InvalidSpec("need at least 2 emotions and 2 gesture classes per emotion")
        if not 1 <= self.unseen_per_emotion < self.gestures_per_emotion:
            raise InvalidSpec("each emotion needs at least one seen and one unseen gesture")
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise InvalidSpec(f"bad length range {self.length_range}")
        if self.train_per_class < 1 or self.test_per_seen_class < 0 or self.test_per_unseen_class < 1:
            raise InvalidSpec("sample counts must be positive")
        if self.binary_mode not in ("latent", "emotion"):
            raise InvalidSpec(f"unknown binary_mode {self.binary_mode!r}")
        if self.latent_dim < 1:
            raise InvalidSpec("latent_dim must be >= 1")
        if self.noise < 0 or self.n_subjects < 1:
            raise InvalidSpec("noise must be >= 0 and n_subjects >= 1")


def emotion_names(n: int) -> list[str]:
    return [MASR_EMOTIONS[e] if e < len(MASR_EMOTIONS) else f"emotion{e}" for e in range(n)]


def attribute_schema() -> tuple[tuple[str, ...], tuple[str, ...]]:
    names = tuple(n for n, _ in CONTINUOUS_ATTRIBUTES) + BINARY_ATTRIBUTES
    kinds = ("c",) * len(CONTINUOUS_ATTRIBUTES) + ("b",) * len(BINARY_ATTRIBUTES)
    return names, kinds


def synthetic_attributes(spec: SynthSpec) -> AttributeMatrix:
    """Class attributes driven by a low-dimensional latent code.

    Each emotion has a latent centre and each of its gestures a perturbed
    copy. Continuous attributes are a clipped affine map of the code and
    binary flags are signs of another linear map of it, so both vary in a
    ``latent_dim``-dimensional family as correlated real descriptors do.
    With ``binary_mode="emotion"`` the flags are shared by all gestures of
    an emotion instead. Either way a flag flips with probability
    ``binary_flip``.
    """
    rng = np.random.default_rng([spec.seed, 11])
    n_c, n_b = len(CONTINUOUS_ATTRIBUTES), len(BINARY_ATTRIBUTES)
    mixing = rng.normal(0.0, spec.attribute_gain / np.sqrt(spec.latent_dim), (n_c, spec.latent_dim))
    flag_map = rng.normal(0.0, 1.0, (n_b, spec.latent_dim))
    rows: list[np.ndarray] = []
    for _e in range(spec.n_emotions):
        centre = rng.normal(0.0, 1.0, spec.latent_dim)
        for _g in range(spec.gestures_per_emotion):
            for _attempt in range(100):
                z = centre + rng.normal(0.0, spec.attribute_spread, spec.latent_dim)
                c = np.clip(0.5 + mixing @ z, 0.0, 1.0)
                flags = (flag_map @ (centre if spec.binary_mode == "emotion" else z)) > 0
                b = np.where(rng.random(n_b) < spec.binary_flip, ~flags, flags)
                row = np.concatenate([np.round(c, 3), b.astype(float)])
                if all(np.abs(row - r).sum() > 0.1 for r in rows):
                    break
            rows.append(row)
    names, kinds = attribute_schema()
    return AttributeMatrix(tuple(range(len(rows))), np.array(rows), names, kinds)


@dataclass(frozen=True)
class MotionParams:
    offset: np.ndarray  # 25 x 3 displacement reached at the end of the onset
    amplitude: np.ndarray  # 25 x 3 oscillation amplitude
    phase: np.ndarray  # 25 x 3
    cycles: float
    lean: float
    nod: float
    symmetric: bool


@dataclass(frozen=True)
class MotionRig:
    """Fixed linear maps from attributes to displacement fields."""

    offsets: np.ndarray  # n_c x 25 x 3
    swings: np.ndarray  # n_c x 25 x 3
    phases: np.ndarray  # n_c x 25 x 3

    @classmethod
    def create(cls, seed: int, gain: float = 0.25) -> MotionRig:
        rng = np.random.default_rng([seed, 23])
        n_c = len(CONTINUOUS_ATTRIBUTES)
        offsets = np.zeros((n_c, N_JOINTS, 3))
        swings = np.zeros((n_c, N_JOINTS, 3))
        for j, (_, joints) in enumerate(CONTINUOUS_ATTRIBUTES):
            idx = list(joints)
            offsets[j, idx] = rng.normal(0.0, gain, (len(idx), 3))
            swings[j, idx] = np.abs(rng.normal(0.0, 0.12, (len(idx), 3)))
        phases = rng.uniform(0.0, 2.0 * np.pi, (n_c, N_JOINTS, 3))
        return cls(offsets, swings, phases)

    def motion(self, attributes: np.ndarray) -> MotionParams:
        n_c = len(CONTINUOUS_ATTRIBUTES)
        a = np.asarray(attributes, dtype=np.float64)
        cont, flags = a[:n_c], a[n_c:] > 0.5
        lean, nod, symmetric, fast, repeated = (bool(f) for f in flags[:5])
        offset = np.tensordot(cont, self.offsets, axes=1)
        amplitude = np.tensordot(cont, self.swings, axes=1)
        weights = cont / max(cont.sum(), 1e-9)
        phase = np.tensordot(weights, self.phases, axes=1)
        if symmetric:
            left = list(LEFT_ARM)
            right = list(_MIRROR[left])
            mirror = np.array([-1.0, 1.0, 1.0])
            offset[right] = offset[left] * mirror
            amplitude[right] = amplitude[left]
            phase[right] = phase[left]
        cycles = (1.0 + repeated) * (2.0 if fast else 1.0)
        return MotionParams(offset, amplitude, phase, cycles, 0.15 * lean, 0.05 * nod, symmetric)


def render_sequence(
    motion: MotionParams, length: int, rng: np.random.Generator, noise: float, subject_scale: float
) -> np.ndarray:
    """``length x 75`` joint positions: onset toward a target pose plus oscillation."""
    t = np.linspace(0.0, 1.0, length)[:, None, None]
    warp = rng.uniform(-0.05, 0.05)
    onset = 0.5 * (1.0 - np.cos(np.pi * np.clip(t * 1.6 + warp, 0.0, 1.0)))
    jitter = 1.0 + rng.normal(0.0, 0.08)
    wave = np.sin(2.0 * np.pi * motion.cycles * t + motion.phase + rng.uniform(-0.2, 0.2))
    pose = _REST_POSE * subject_scale + onset * motion.offset + jitter * motion.amplitude * wave
    if motion.lean:
        pose[:, list(UPPER_BODY + LEFT_ARM + RIGHT_ARM), 2] += motion.lean * onset[:, :, 0]
    if motion.nod:
        pose[:, list(HEAD), 1] += motion.nod * np.sin(4.0 * np.pi * t[:, :, 0])
    pose = pose + rng.normal(0.0, noise, pose.shape)
    return pose.reshape(length, FRAME_DIM)


def generate_synthetic(spec: SynthSpec):
    """Build ``(samples, descriptor, attributes, partition)`` for ``spec``.

    Gesture ids run emotion by emotion; within each emotion the last
    ``unseen_per_emotion`` gestures are unseen. Training samples come from
    seen classes only; the test split mixes both.
    """
    spec.validate()
    attributes = synthetic_attributes(spec)
    rig = MotionRig.create(spec.seed, spec.motion_gain)
    gpe = spec.gestures_per_emotion
    em_map = {e * gpe + k: e for e in range(spec.n_emotions) for k in range(gpe)}
    unseen = tuple(
        e * gpe + k for e in range(spec.n_emotions) for k in range(gpe - spec.unseen_per_emotion, gpe)
    )
    seen = tuple(g for g in sorted(em_map) if g not in unseen)
    partition = PartitionSpec("synthetic", seen, unseen, em_map)
    scales = 1.0 + np.random.default_rng([spec.seed, 31]).normal(0.0, 0.05, spec.n_subjects)

    samples: list[SkeletonSequence] = []
    for g in sorted(em_map):
        motion = rig.motion(attributes.vector(g))
        rng = np.random.default_rng([spec.seed, 47, g])
        if g in unseen:
            counts = (("test", spec.test_per_unseen_class),)
        else:
            counts = (("train", spec.train_per_class), ("test", spec.test_per_seen_class))
        for split, count in counts:
            for i in range(count):
                subject = int(rng.integers(spec.n_subjects))
                length = int(rng.integers(spec.length_range[0], spec.length_range[1] + 1))
                frames = render_sequence(motion, length, rng, spec.noise, scales[subject])
                samples.append(
                    SkeletonSequence(f"g{g:02d}-{split}-{i:03d}", frames, g, em_map[g], subject, split)
                )
    descriptor = {
        "frame_dim": FRAME_DIM,
        "classes": {str(g): e for g, e in em_map.items()},
        "emotions": emotion_names(spec.n_emotions),
        "attribute_dim": attributes.dim,
        "generator": {k: (list(v) if isinstance(v, tuple) else v) for k, v in spec.__dict__.items()},
    }
    return samples, descriptor, attributes, partition


def write_synthetic(spec: SynthSpec, out_dir) -> dict[str, Path]:
    """Generate and write ``dataset.txt``, ``attributes.txt`` and ``partition.txt``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples, descriptor, attributes, partition = generate_synthetic(spec)
    paths = {
        "dataset": out / "dataset.txt",
        "attributes": out / "attributes.txt",
        "partition": out / "partition.txt",
    }
    write_dataset(paths["dataset"], samples, descriptor)
    write_attributes(paths["attributes"], attributes)
    write_partition(paths["partition"], partition)
    return paths
