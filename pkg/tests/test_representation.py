from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aisids.errors import AffinityError, EncodeError, SchemaError
from aisids.representation import (AffinityMeasure, Antigen, FeatureSchema, affinity, decode,
                                   encode, encode_vector, euclidean, fit_schema, hamming,
                                   r_contiguous, to_bits)


# -- oracles ---------------------------------------------------------------

def quantize_oracle(v, b):
    """Nearest level k/(2^b-1), ties resolved upward, using exact rationals."""
    levels = 2 ** b - 1
    x = Fraction(v) * levels
    k = int(x)  # floor for x >= 0
    if x - k >= Fraction(1, 2):
        k += 1
    return "".join("1" if k >> (b - 1 - i) & 1 else "0" for i in range(b))


def r_contiguous_oracle(a, b, r):
    return any(a[i:i + r] == b[i:i + r] for i in range(len(a) - r + 1))


# -- fit_schema -----------------------------------------------------------

def test_fit_schema_min_max():
    s = fit_schema([{"x": 2.0}, {"x": 4.0}])
    (f,) = s.features
    assert (f.min, f.max) == (2.0, 4.0)


def test_fit_schema_singleton_vocabulary():
    s = fit_schema([{"proto": "tcp"}])
    assert s.features[0].vocabulary == ("tcp",)
    assert s.dim == 1


def test_fit_schema_lexicographic_one_hot():
    s = fit_schema([{"p": "udp"}, {"p": "tcp"}])
    assert s.features[0].vocabulary == ("tcp", "udp")
    assert list(encode_vector({"p": "udp"}, s)) == [0.0, 1.0]


def test_fit_schema_errors():
    with pytest.raises(SchemaError):
        fit_schema([])
    with pytest.raises(SchemaError, match="record 2"):
        fit_schema([{"x": 1}, {"x": 2}, {"y": 3}])


def test_fit_schema_skips_reserved_columns_and_flags_constants():
    s = fit_schema([{"id": "a", "x": 1, "c": 5, "label": "normal"},
                    {"id": "b", "x": 3, "c": 5, "label": "normal"}])
    assert s.feature_names == ["x", "c"]
    assert s.constant_features == ["c"]


def test_schema_round_trip_and_fingerprint():
    s = fit_schema([{"x": 1, "p": "tcp"}, {"x": 3, "p": "udp"}])
    again = FeatureSchema.from_dict(s.to_dict())
    assert again == s
    assert again.fingerprint() == s.fingerprint()
    other = fit_schema([{"x": 1, "p": "tcp"}, {"x": 4, "p": "udp"}])
    assert other.fingerprint() != s.fingerprint()


# -- encode ---------------------------------------------------------------

@pytest.mark.parametrize("x, expected", [(3.0, 0.5), (2.0, 0.0), (9.0, 1.0), (-5.0, 0.0)])
def test_encode_min_max_with_clamp(x, expected):
    s = fit_schema([{"x": 2.0}, {"x": 4.0}])
    assert encode({"x": x}, s).vector[0] == expected


def test_constant_feature_encodes_to_zero():
    s = fit_schema([{"x": 7.0}, {"x": 7.0}])
    assert encode({"x": 100.0}, s).vector[0] == 0.0


def test_unknown_category():
    s = fit_schema([{"p": "tcp"}, {"p": "udp"}])
    with pytest.raises(EncodeError) as err:
        encode({"p": "icmp"}, s)
    assert (err.value.feature, err.value.value) == ("p", "icmp")
    assert list(encode({"p": "icmp"}, s, lenient=True).vector) == [0.0, 0.0]


def test_encode_carries_id_and_bits():
    s = fit_schema([{"id": "r0", "x": 0}, {"id": "r1", "x": 1}])
    a = encode({"id": "r1", "x": 1}, s, bits_per_feature=3)
    assert a.id == "r1" and a.bits == "111"
    assert len(a.bits) == s.dim * 3


def test_encode_identity_bounds_is_bit_exact():
    rng = np.random.default_rng(0)
    rows = rng.random((50, 3))
    rows[0] = 0.0
    rows[1] = 1.0
    recs = [{f"f{j}": float(v) for j, v in enumerate(r)} for r in rows]
    s = fit_schema(recs)
    for rec, r in zip(recs, rows):
        vec = encode_vector(rec, s)
        assert np.array_equal(vec, r)
        assert np.array_equal(encode_vector(decode(vec, s), s), vec)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_encoded_training_data_in_unit_range(values):
    recs = [{"x": v} for v in values]
    s = fit_schema(recs)
    for r in recs:
        v = encode_vector(r, s)[0]
        assert 0.0 <= v <= 1.0
        assert decode([v], s)["x"] == pytest.approx(r["x"], rel=1e-9, abs=1e-6)


# -- to_bits --------------------------------------------------------------

@pytest.mark.parametrize("v, b, expected", [([1.0], 3, "111"), ([0.0], 3, "000")])
def test_to_bits_trivial(v, b, expected):
    assert to_bits(v, b) == expected


def test_to_bits_midpoint_matches_oracle():
    assert quantize_oracle(0.5, 3) == "100"
    assert to_bits([0.5], 3) == "100"


def test_to_bits_near_tie_uses_exact_value():
    # 0.3 * 15 rounds to 4.5 in floating point, but the stored 0.3 is just below 3/10
    assert 0.3 * 15 == 4.5
    assert to_bits([0.3], 4) == quantize_oracle(0.3, 4) == "0100"


@settings(max_examples=500, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.integers(1, 12))
def test_to_bits_against_oracle(vec, b):
    assert to_bits(vec, b) == "".join(quantize_oracle(v, b) for v in vec)


# -- affinity -------------------------------------------------------------

def test_affinity_examples():
    assert affinity(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0
    assert affinity("1010", "1010", AffinityMeasure("hamming")) == 0
    assert r_contiguous_oracle("10110", "00111", 3)
    assert affinity("10110", "00111", AffinityMeasure("r-contiguous", 3)) is True
    assert r_contiguous("10110", "00111", 4) is False


def test_affinity_on_antigens():
    a = Antigen("a", np.array([0.0, 0.0]), "0000")
    b = Antigen("b", np.array([0.0, 1.0]), "0011")
    assert affinity(a, b) == 1.0
    assert affinity(a, b, AffinityMeasure("hamming")) == 2


def test_affinity_errors():
    with pytest.raises(AffinityError):
        euclidean([0, 0], [1, 2, 3])
    with pytest.raises(AffinityError):
        hamming("101", "10")
    with pytest.raises(AffinityError):
        r_contiguous("101", "101", 4)
    with pytest.raises(AffinityError):
        AffinityMeasure("r-contiguous")
    with pytest.raises(AffinityError):
        affinity("101", "101")  # euclidean on bit-strings


# feature values at 1e-6 resolution, so squared differences never underflow
vectors = st.lists(st.integers(0, 10**6), min_size=3, max_size=3).map(lambda v: np.array(v) / 1e6)


@settings(max_examples=100, deadline=None)
@given(vectors, vectors, vectors)
def test_euclidean_is_a_metric(a, b, c):
    assert euclidean(a, b) == euclidean(b, a)
    assert euclidean(a, a) == 0.0
    if not np.array_equal(a, b):
        assert euclidean(a, b) > 0
    assert euclidean(a, c) <= euclidean(a, b) + euclidean(b, c) + 1e-12


bit_pairs = st.integers(1, 24).flatmap(
    lambda n: st.tuples(st.text("01", min_size=n, max_size=n), st.text("01", min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(bit_pairs, st.integers(1, 24))
def test_r_contiguous_properties(pair, r):
    a, b = pair
    r = min(r, len(a))
    assert r_contiguous(a, b, r) == r_contiguous_oracle(a, b, r)
    assert r_contiguous(a, b, 1) == (hamming(a, b) < len(a))
    if r_contiguous(a, b, r):
        assert all(r_contiguous(a, b, q) for q in range(1, r))
