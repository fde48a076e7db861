"""Antigen encoding and affinity measures.

Raw feature records (mappings of column name to string or number) are
turned into antigens living in the unit hypercube: continuous columns are
min-max scaled against the training self-set and clamped, categorical
columns are one-hot expanded in lexicographic vocabulary order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import AffinityError, EncodeError, SchemaError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RESERVED_COLUMNS = ("id", "label")
CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    min: float = 0.0
    max: float = 0.0
    vocabulary: tuple[str, ...] = ()

    @property
    def constant(self) -> bool:
        return self.kind == CONTINUOUS and self.min == self.max

    @property
    def width(self) -> int:
        return len(self.vocabulary) if self.kind == CATEGORICAL else 1


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if not names:
            raise SchemaError("schema has no features")
        if any(not n for n in names):
            raise SchemaError("feature names must be non-empty")
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        for f in self.features:
            if f.kind == CONTINUOUS:
                if not f.min <= f.max:
                    raise SchemaError(f"feature {f.name!r}: min > max")
            elif f.kind == CATEGORICAL:
                if not f.vocabulary:
                    raise SchemaError(f"feature {f.name!r}: empty vocabulary")
            else:
                raise SchemaError(f"feature {f.name!r}: unknown kind {f.kind!r}")

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def dim(self) -> int:
        """Post-encoding dimensionality."""
        return sum(f.width for f in self.features)

    @property
    def constant_features(self) -> list[str]:
        return [f.name for f in self.features if f.constant]

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            if f.kind == CONTINUOUS:
                feats.append({"name": f.name, "kind": f.kind, "min": f.min,
                              "max": f.max, "constant": f.constant})
            else:
                feats.append({"name": f.name, "kind": f.kind,
                              "vocabulary": list(f.vocabulary)})
        return {"schema_version": SCHEMA_VERSION, "features": feats}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "FeatureSchema":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {doc.get('schema_version')!r}")
        feats = []
        for f in doc["features"]:
            if f["kind"] == CONTINUOUS:
                feats.append(Feature(f["name"], CONTINUOUS, float(f["min"]), float(f["max"])))
            else:
                feats.append(Feature(f["name"], f["kind"], vocabulary=tuple(f["vocabulary"])))
        return cls(tuple(feats))

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Antigen:
    id: str
    vector: np.ndarray
    bits: str | None = None


def _as_float(value) -> float | None:
    try:
        x = float(value)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def fit_schema(records: Sequence[Mapping[str, Any]]) -> FeatureSchema:
    """Fit normalization bounds and vocabularies on a training self-set.

    A column whose every value parses as a finite float is continuous,
    anything else is categorical. ``id`` and ``label`` columns are ignored.
    """
    if not records:
        raise SchemaError("cannot fit a schema on zero records")
    fields = set(records[0])
    for i, rec in enumerate(records):
        if set(rec) != fields:
            raise SchemaError(f"record {i} has field set {sorted(rec)}, expected {sorted(fields)}")
    names = [k for k in records[0] if k not in RESERVED_COLUMNS]

    features = []
    for name in names:
        values = [rec[name] for rec in records]
        nums = [_as_float(v) for v in values]
        if all(x is not None for x in nums):
            features.append(Feature(name, CONTINUOUS, min(nums), max(nums)))
        else:
            vocab = tuple(sorted({str(v) for v in values}))
            features.append(Feature(name, CATEGORICAL, vocabulary=vocab))
    schema = FeatureSchema(tuple(features))
    if schema.constant_features:
        logger.info("constant features encode to 0.0: %s", schema.constant_features)
    return schema


def encode_vector(record: Mapping[str, Any], schema: FeatureSchema, lenient: bool = False) -> np.ndarray:
    out = np.zeros(schema.dim)
    pos = 0
    for f in schema.features:
        if f.name not in record:
            raise SchemaError(f"record is missing feature {f.name!r}")
        raw = record[f.name]
        if f.kind == CONTINUOUS:
            x = _as_float(raw)
            if x is None:
                raise SchemaError(f"feature {f.name!r}: {raw!r} is not a finite number")
            if not f.constant:
                out[pos] = min(1.0, max(0.0, (x - f.min) / (f.max - f.min)))
        else:
            try:
                out[pos + f.vocabulary.index(str(raw))] = 1.0
            except ValueError:
                if not lenient:
                    raise EncodeError(f.name, str(raw)) from None
                logger.warning("unknown category %r for %r, encoded as all zeros", raw, f.name)
        pos += f.width
    return out


def encode(record: Mapping[str, Any], schema: FeatureSchema, *, id: str | None = None,
           bits_per_feature: int | None = None, lenient: bool = False) -> Antigen:
    vec = encode_vector(record, schema, lenient=lenient)
    if id is None:
        id = str(record.get("id", ""))
    bits = to_bits(vec, bits_per_feature) if bits_per_feature else None
    return Antigen(id, vec, bits)


def decode(vector: Sequence[float], schema: FeatureSchema) -> dict[str, Any]:
    """Map a normalized vector back into raw feature space (inverse of encode)."""
    rec: dict[str, Any] = {}
    pos = 0
    for f in schema.features:
        if f.kind == CONTINUOUS:
            rec[f.name] = f.min + float(vector[pos]) * (f.max - f.min)
        else:
            block = np.asarray(vector[pos:pos + f.width])
            rec[f.name] = f.vocabulary[int(np.argmax(block))]
        pos += f.width
    return rec


def to_bits(vector: Antigen | Iterable[float], bits_per_feature: int = 8) -> str:
    """Quantize each component to ``bits_per_feature`` big-endian bits (round half up)."""
    if isinstance(vector, Antigen):
        vector = vector.vector
    if bits_per_feature < 1:
        raise ValueError("bits_per_feature must be positive")
    levels = (1 << bits_per_feature) - 1
    return "".join(format(_level(float(v), levels), f"0{bits_per_feature}b") for v in vector)


def _level(v: float, levels: int) -> int:
    p = v * levels
    k = math.floor(p + 0.5)
    if abs(p - math.floor(p) - 0.5) < 1e-6:
        # the float product may have rounded onto or off a tie; decide exactly
        x = Fraction(v) * levels
        k = math.floor(x + Fraction(1, 2))
    return k


# -- affinity -------------------------------------------------------------

EUCLIDEAN = "euclidean"
HAMMING = "hamming"
R_CONTIGUOUS = "r-contiguous"


@dataclass(frozen=True)
class AffinityMeasure:
    kind: str = EUCLIDEAN
    r: int | None = None

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, HAMMING, R_CONTIGUOUS):
            raise AffinityError(f"unknown affinity kind {self.kind!r}")
        if self.kind == R_CONTIGUOUS and (self.r is None or self.r < 1):
            raise AffinityError("r-contiguous matching needs a positive r")


def sq_dists(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared distances from each row of ``points`` to ``x``.

    Every distance test in the package goes through here (or ``dists``) so
    that index-accelerated and linear-scan paths agree bit for bit.
    """
    diff = points - x
    return (diff * diff).sum(axis=-1)


def dists(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sqrt(sq_dists(points, x))


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise AffinityError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(dists(a, b))


def _check_bits(a: str, b: str):
    if len(a) != len(b):
        raise AffinityError(f"bit-string length mismatch: {len(a)} vs {len(b)}")


def hamming(a: str, b: str) -> int:
    _check_bits(a, b)
    return sum(x != y for x, y in zip(a, b))


def r_contiguous(a: str, b: str, r: int) -> bool:
    """True iff ``a`` and ``b`` agree on at least ``r`` consecutive positions."""
    _check_bits(a, b)
    if not 1 <= r <= len(a):
        raise AffinityError(f"r={r} outside [1, {len(a)}]")
    run = 0
    for x, y in zip(a, b):
        run = run + 1 if x == y else 0
        if run >= r:
            return True
    return False


def _operand(x, want_bits: bool):
    if isinstance(x, Antigen):
        if want_bits:
            if x.bits is None:
                raise AffinityError("antigen has no bit-string encoding")
            return x.bits
        return x.vector
    if not isinstance(x, str) and hasattr(x, "center"):
        x = x.center
    if want_bits != isinstance(x, str):
        raise AffinityError("representation does not fit the affinity measure")
    return x


def affinity(a, b, measure: AffinityMeasure = AffinityMeasure()):
    """Affinity between a detector center/antigen and an antigen.

    Euclidean returns a distance (smaller is closer), hamming a count of
    differing bits, r-contiguous a boolean match.
    """
    if measure.kind == EUCLIDEAN:
        return euclidean(_operand(a, False), _operand(b, False))
    a, b = _operand(a, True), _operand(b, True)
    if measure.kind == HAMMING:
        return hamming(a, b)
    return r_contiguous(a, b, measure.r)
