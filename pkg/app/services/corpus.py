"""
Corpus service: synthetic generation with planted label coupling, occurrence
and co-occurrence statistics, the binary corpus container and splitting.

Container layout (all integers little-endian):

    magic           8 bytes   b"RGCORPUS"
    version         u16
    feature_kind    u8        0 raw inputs for the stub backbone, 1 face representations
    has_structure   u8        1 if a planted structure matrix follows the header
    n_samples       u32
    n_aus           u32
    spatial         u32       D
    width           u32       F (feature width per position)
    [structure]     n_aus x n_aus float64, row-major, only if has_structure
    n_samples x record:
        id_len      u16
        id          id_len bytes UTF-8
        features    D x F float64
        labels      ceil(n_aus / 8) bytes, bits packed little-endian
    crc32           u32 over every preceding byte
"""
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import ValidationError

from app.autodiff.serialization import FLOAT_LE, ByteReader, check_magic, verify_checksum, with_checksum
from app.core.errors import (
    ConfigurationError,
    ContractError,
    DimensionError,
    EmptyInputError,
    FileFormatError,
    FileMissingError,
)
from app.schemas.corpus import Coupling, CorrelationSpec
from app.services.losses import N_EDGE_CLASSES, OccurrenceStats

logger = structlog.get_logger(__name__)

CORPUS_MAGIC = b"RGCORPUS"
CORPUS_VERSION = 1
FEATURE_KINDS = ("raw", "face")
FEATURE_BLOCK = 2


@dataclass(frozen=True, eq=False)
class SampleRecord:
    input: np.ndarray
    labels: np.ndarray
    id: str


@dataclass(frozen=True, eq=False)
class Corpus:
    """
    Immutable labelled corpus.

    Attributes:
        features: [n, D, F] inputs, raw features or face representations
        labels: [n, N] binary labels
        ids: One identifier per record
        feature_kind: "raw" (goes through the stub backbone) or "face"
        planted_structure: N x N coupling strengths used by the generator
    """

    features: np.ndarray
    labels: np.ndarray
    ids: Tuple[str, ...]
    feature_kind: str = "raw"
    planted_structure: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.features.ndim != 3 or self.labels.ndim != 2:
            raise DimensionError(
                f"need features [n, D, F] and labels [n, N], got {self.features.shape}, {self.labels.shape}"
            )
        if not len(self.features) == len(self.labels) == len(self.ids):
            raise DimensionError(
                f"{len(self.features)} feature rows, {len(self.labels)} label rows and {len(self.ids)} ids"
            )
        if self.feature_kind not in FEATURE_KINDS:
            raise ConfigurationError(f"feature kind must be one of {FEATURE_KINDS}, got {self.feature_kind!r}")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise ContractError("labels must be binary")
        if not np.all(np.isfinite(self.features)):
            raise ContractError("features must be finite")
        if len(set(self.ids)) != len(self.ids):
            raise ContractError("record ids must be unique")

    @classmethod
    def from_arrays(
        cls,
        features: np.ndarray,
        labels: np.ndarray,
        ids: Optional[Sequence[str]] = None,
        feature_kind: str = "raw",
    ) -> "Corpus":
        """Wrap externally produced features; ids default to s000000, s000001, ..."""
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels).astype(np.uint8)
        ids = tuple(ids) if ids is not None else tuple(f"s{i:06d}" for i in range(len(features)))
        return cls(features, labels, ids, feature_kind)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_samples(self) -> int:
        return len(self.ids)

    @property
    def n_aus(self) -> int:
        return self.labels.shape[1]

    @property
    def spatial(self) -> int:
        return self.features.shape[1]

    @property
    def width(self) -> int:
        return self.features.shape[2]

    @property
    def records(self) -> List[SampleRecord]:
        return [SampleRecord(self.features[i], self.labels[i], self.ids[i]) for i in range(len(self))]

    @cached_property
    def occurrence(self) -> OccurrenceStats:
        return compute_occurrence(self)

    def subset(self, indices: Sequence[int]) -> "Corpus":
        indices = np.asarray(indices, dtype=np.intp)
        return Corpus(
            self.features[indices],
            self.labels[indices],
            tuple(self.ids[i] for i in indices),
            self.feature_kind,
            self.planted_structure,
        )


def default_correlation_spec(n_aus: int, coupling: float = 0.9) -> CorrelationSpec:
    """Chain couplings 0->1, 2->3, ... of equal strength over a spread of base rates."""
    rates = [0.5, 0.35, 0.45, 0.3, 0.4, 0.25]
    try:
        couplings = [Coupling(parent=i, child=i + 1, strength=coupling) for i in range(0, n_aus - 1, 2)]
        return CorrelationSpec(base_rates=[rates[i % len(rates)] for i in range(n_aus)], couplings=couplings)
    except ValidationError as e:
        raise ConfigurationError(f"invalid correlation spec: {e}") from e


def conditional_rates(r_parent: float, r_child: float, strength: float) -> Tuple[float, float]:
    """
    P(child = 1 | parent = 1) and P(child = 1 | parent = 0) for a coupling.

    The first branch moves from r_child towards its largest (strength > 0) or
    smallest (strength < 0) feasible value; the second is solved so that the
    child's marginal stays exactly r_child.
    """
    if strength >= 0:
        bound = min(1.0, r_child / r_parent)
    else:
        bound = max(0.0, (r_child - (1.0 - r_parent)) / r_parent)
    given_on = r_child + abs(strength) * (bound - r_child)
    given_off = (r_child - r_parent * given_on) / (1.0 - r_parent)
    return float(np.clip(given_on, 0.0, 1.0)), float(np.clip(given_off, 0.0, 1.0))


def au_region(au: int, n_aus: int, spatial: int) -> np.ndarray:
    """Spatial positions where an AU's signal is planted: half the map, offset per AU."""
    start = au * spatial // n_aus
    return (start + np.arange(max(1, spatial // 2))) % spatial


def _sample_labels(spec: CorrelationSpec, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    parents = {c.child: c for c in spec.couplings}
    labels = np.zeros((n_samples, spec.n_aus), dtype=np.uint8)
    for j, rate in enumerate(spec.base_rates):
        draw = rng.random(n_samples)
        if j in parents:
            c = parents[j]
            on, off = conditional_rates(spec.base_rates[c.parent], rate, c.strength)
            threshold = np.where(labels[:, c.parent] == 1, on, off)
        else:
            threshold = np.full(n_samples, rate)
        labels[:, j] = draw < threshold
    return labels


def generate_synthetic(
    n_samples: int,
    n_aus: int,
    correlation_spec: Union[CorrelationSpec, Mapping],
    seed: int,
    spatial: int = 16,
) -> Corpus:
    """
    Draw a corpus from a planted joint label distribution.

    Labels are sampled in AU order; a coupled child is drawn conditionally on
    its parent. Each AU owns a disjoint block of FEATURE_BLOCK channels that
    carries +signal over the AU's spatial region when it is active, and each
    coupling owns one interaction channel that fires only when both of its
    AUs are active. Everything else is Gaussian noise.

    Args:
        n_samples: Number of records
        n_aus: Number of AUs (must match the spec)
        correlation_spec: Base rates and couplings
        seed: Seed for labels and features
        spatial: D, number of spatial positions

    Returns:
        Corpus with raw features [n, D, N * FEATURE_BLOCK + n_couplings]

    Raises:
        ConfigurationError: If the spec is invalid or disagrees with n_aus
    """
    if not isinstance(correlation_spec, CorrelationSpec):
        try:
            correlation_spec = CorrelationSpec.model_validate(correlation_spec)
        except ValidationError as e:
            raise ConfigurationError(f"invalid correlation spec: {e}") from e
    spec = correlation_spec
    if spec.n_aus != n_aus:
        raise ConfigurationError(f"correlation spec has {spec.n_aus} AUs, expected {n_aus}")
    if n_samples < 1 or spatial < 1:
        raise ConfigurationError(f"need n_samples >= 1 and spatial >= 1, got {n_samples}, {spatial}")

    rng = np.random.default_rng(seed)
    labels = _sample_labels(spec, n_samples, rng)

    width = n_aus * FEATURE_BLOCK + len(spec.couplings)
    features = spec.noise * rng.standard_normal((n_samples, spatial, width))
    active = labels.astype(bool)
    for i in range(n_aus):
        channels = np.arange(i * FEATURE_BLOCK, (i + 1) * FEATURE_BLOCK)
        features[np.ix_(active[:, i], au_region(i, n_aus, spatial), channels)] += spec.signal
    for k, c in enumerate(spec.couplings):
        both = active[:, c.parent] & active[:, c.child]
        features[both, :, n_aus * FEATURE_BLOCK + k] += spec.signal

    structure = np.zeros((n_aus, n_aus))
    for c in spec.couplings:
        structure[c.parent, c.child] = structure[c.child, c.parent] = c.strength

    logger.info("corpus.generated", n_samples=n_samples, n_aus=n_aus, couplings=len(spec.couplings), seed=seed)
    return Corpus(features, labels, tuple(f"s{i:06d}" for i in range(n_samples)), "raw", structure)


def compute_occurrence(corpus: Corpus) -> OccurrenceStats:
    """
    r_i = fraction of records with AU i active, with the matching loss weights.

    Raises:
        EmptyInputError: If the corpus has no records
        ConfigurationError: If some AU never occurs, listing those AUs
    """
    if len(corpus) == 0:
        raise EmptyInputError("occurrence rates of an empty corpus")
    rates = corpus.labels.astype(np.float64).mean(axis=0)
    missing = np.flatnonzero(rates == 0)
    if missing.size:
        raise ConfigurationError(
            f"AUs never occur in the training data: {missing.tolist()}",
            {"aus": missing.tolist()},
        )
    return OccurrenceStats.from_rates(rates)


def cooccurrence_matrix(corpus: Corpus) -> np.ndarray:
    """counts[i, j, c]: records whose (y_i, y_j) pattern has class c = 2 y_i + y_j."""
    y = corpus.labels.astype(np.int64)
    classes = 2 * y[:, :, None] + y[:, None, :]
    return np.stack([(classes == c).sum(axis=0) for c in range(N_EDGE_CLASSES)], axis=-1)


def encode_corpus(corpus: Corpus) -> bytes:
    n, d, f = corpus.features.shape
    has_structure = corpus.planted_structure is not None
    parts = [
        CORPUS_MAGIC,
        struct.pack(
            "<HBBIIII",
            CORPUS_VERSION,
            FEATURE_KINDS.index(corpus.feature_kind),
            int(has_structure),
            n,
            corpus.n_aus,
            d,
            f,
        ),
    ]
    if has_structure:
        parts.append(np.ascontiguousarray(corpus.planted_structure, dtype=FLOAT_LE).tobytes())
    bits = np.packbits(corpus.labels.astype(np.uint8), axis=1, bitorder="little")
    for i, record_id in enumerate(corpus.ids):
        encoded = record_id.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(np.ascontiguousarray(corpus.features[i], dtype=FLOAT_LE).tobytes())
        parts.append(bits[i].tobytes())
    return with_checksum(b"".join(parts))


def decode_corpus(buffer: bytes) -> Corpus:
    """
    Raises:
        FileFormatError, FileVersionError, FileTruncatedError, FileChecksumError
    """
    reader = ByteReader(buffer, "corpus file")
    check_magic(reader, CORPUS_MAGIC, (CORPUS_VERSION,))
    kind, has_structure, n, n_aus, d, f = reader.unpack("<BBIIII")
    if kind >= len(FEATURE_KINDS):
        raise FileFormatError(f"corpus file has unknown feature kind {kind}")
    structure = reader.floats(n_aus * n_aus).reshape(n_aus, n_aus) if has_structure else None

    label_bytes = (n_aus + 7) // 8
    reader.expect(n * (2 + d * f * FLOAT_LE.itemsize + label_bytes), f"{n} records")
    features = np.empty((n, d, f))
    labels = np.empty((n, n_aus), dtype=np.uint8)
    ids = []
    for i in range(n):
        (id_len,) = reader.unpack("<H")
        ids.append(reader.take(id_len).decode("utf-8"))
        features[i] = reader.floats(d * f).reshape(d, f)
        packed = np.frombuffer(reader.take(label_bytes), dtype=np.uint8)
        labels[i] = np.unpackbits(packed, count=n_aus, bitorder="little")
    verify_checksum(reader)
    return Corpus(features, labels, tuple(ids), FEATURE_KINDS[kind], structure)


def save_corpus(corpus: Corpus, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_corpus(corpus))
    logger.info("corpus.saved", path=str(path), n_samples=len(corpus))


def load_corpus(path: Union[str, Path]) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise FileMissingError(f"corpus file not found: {path}")
    corpus = decode_corpus(path.read_bytes())
    logger.info("corpus.loaded", path=str(path), n_samples=len(corpus), kind=corpus.feature_kind)
    return corpus


def split(corpus: Corpus, fraction: float, seed: int) -> Tuple[Corpus, Corpus]:
    """
    Shuffle-split into (train, eval); each part keeps the original record order.

    Args:
        corpus: Corpus to split
        fraction: Share of records in the training part, 0 < fraction < 1
        seed: Shuffle seed

    Raises:
        ConfigurationError: If the fraction leaves a part empty or an AU never
            occurs in the training part
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"split fraction must lie in (0, 1), got {fraction}")
    n_train = int(round(fraction * len(corpus)))
    if not 0 < n_train < len(corpus):
        raise ConfigurationError(f"fraction {fraction} of {len(corpus)} records leaves an empty part")

    order = np.random.default_rng(seed).permutation(len(corpus))
    train = corpus.subset(np.sort(order[:n_train]))
    held_out = corpus.subset(np.sort(order[n_train:]))
    compute_occurrence(train)
    return train, held_out
