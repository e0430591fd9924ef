import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diwe.core import (
    DimensionMismatchError,
    LabeledInstance,
    LabelOutOfRangeError,
    Stream,
    StreamSchema,
    euclidean_distance,
    stack_instances,
    validate_instance,
)

vec3 = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3)


def test_distance_examples():
    assert euclidean_distance([0, 0], [3, 4]) == 5.0
    v = [0.3, 0.1, 0.9]
    assert euclidean_distance(v, v) == 0.0
    assert math.isclose(euclidean_distance([0.2, 0.7, 0.1], [0.5, 0.3, 0.1]), 0.5, rel_tol=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        euclidean_distance([0, 0], [1, 2, 3])


@given(vec3, vec3, vec3)
def test_triangle_inequality(a, b, c):
    ab = euclidean_distance(a, b)
    bc = euclidean_distance(b, c)
    ac = euclidean_distance(a, c)
    assert ac <= ab + bc + 1e-9 * (1 + ab + bc)


@given(vec3, vec3)
def test_distance_symmetric_bitwise(a, b):
    assert euclidean_distance(a, b) == euclidean_distance(b, a)


@given(vec3)
def test_distance_zero_iff_equal(a):
    assert euclidean_distance(a, a) == 0.0
    b = list(a)
    b[0] += 1.0
    assert euclidean_distance(a, b) > 0.0


def test_validate_instance():
    schema = StreamSchema(3, 2)
    assert validate_instance(LabeledInstance(np.zeros(3), 1, 1), schema) is None
    with pytest.raises(DimensionMismatchError):
        validate_instance(LabeledInstance(np.zeros(2), 0, 1), schema)
    with pytest.raises(LabelOutOfRangeError):
        validate_instance(LabeledInstance(np.zeros(3), 7, 1), schema)


def test_schema_bounds():
    with pytest.raises(ValueError):
        StreamSchema(0, 2)
    with pytest.raises(ValueError):
        StreamSchema(2, 1)


def test_instance_is_immutable_copy():
    x = np.array([1.0, 2.0])
    inst = LabeledInstance(x, 0, 1)
    x[0] = 99.0
    assert inst.features[0] == 1.0
    with pytest.raises(ValueError):
        inst.features[0] = 5.0


def test_stream_iterates_with_one_based_time():
    s = Stream(np.arange(6.0).reshape(3, 2), np.array([0, 1, 0]), StreamSchema(2, 2))
    ts = [inst.t for inst in s]
    assert ts == [1, 2, 3]
    assert s[-1].t == 3 and s[-1].label == 0
    X, y, t = stack_instances(list(s))
    assert np.array_equal(X, s.X) and np.array_equal(t, [1, 2, 3])


def test_stream_rejects_bad_labels():
    with pytest.raises(LabelOutOfRangeError):
        Stream(np.zeros((2, 1)), np.array([0, 2]), StreamSchema(1, 2))
