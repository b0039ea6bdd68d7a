import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qudit_memory.beam_optics import BeamSpec, pov_field_analytic, render_grid
from qudit_memory.exceptions import DegenerateInputError, ParameterError
from qudit_memory.metrics import (
    CrosstalkMatrix,
    crosstalk_contrast,
    crosstalk_csv,
    mode_overlap_matrix,
    read_crosstalk_csv,
    similarity,
)

seeds = st.integers(0, 2**32 - 1)
scales = st.floats(1e-200, 1e200)


def image(seed: int, shape=(16, 16), sparse: bool = False) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.exponential(size=shape)
    if sparse:
        a[rng.random(shape) < 0.8] = 0.0
    a.flat[0] = 1.0
    return a


@pytest.fixture(scope="module")
def ideal_modes():
    labels = tuple(range(-12, 13))
    grid = render_grid(BeamSpec(ell=12), "medium", 256)
    fields = [pov_field_analytic(BeamSpec(ell=l), grid, "medium") for l in labels]
    return labels, fields


# ------------------------------------------------------------ similarity


@given(seeds, st.booleans())
def test_self_similarity_is_one(seed, sparse):
    a = image(seed, sparse=sparse)
    assert similarity(a, a) == pytest.approx(1.0, abs=1e-14)


@given(seeds, seeds, scales, scales)
def test_similarity_symmetric_scale_invariant_bounded(s1, s2, ca, cb):
    a, b = image(s1, sparse=True), image(s2)
    s = similarity(a, b)
    assert 0 <= s <= 1
    assert similarity(b, a) == pytest.approx(s, rel=1e-12)
    assert similarity(ca * a, cb * b) == pytest.approx(s, rel=1e-12)


def test_disjoint_images_have_zero_similarity():
    a = np.zeros((4, 4))
    b = np.zeros((4, 4))
    a[0, 0] = b[3, 3] = 1.0
    assert similarity(a, b) == 0.0


def test_similarity_validation():
    with pytest.raises(ParameterError):
        similarity(np.ones((3, 3)), np.ones((3, 4)))
    with pytest.raises(ParameterError):
        similarity(-np.ones((3, 3)), np.ones((3, 3)))
    with pytest.raises(ParameterError):
        similarity(np.ones(3), np.ones(3))
    with pytest.raises(DegenerateInputError):
        similarity(np.zeros((3, 3)), np.ones((3, 3)))


# ------------------------------------------------------------ contrast


def test_contrast_of_diagonal_matrix_is_one():
    res = crosstalk_contrast(CrosstalkMatrix((0, 1, 2), np.diag([1.0, 2.0, 3.0])))
    assert res.per_mode == (1.0, 1.0, 1.0) and res.average == 1.0


def test_contrast_definition_check():
    d = 25
    e = np.full((d, d), 0.076)
    np.fill_diagonal(e, 1.0)
    res = crosstalk_contrast(CrosstalkMatrix(tuple(range(d)), e))
    assert res.average == pytest.approx(0.924, abs=1e-15)


@given(seeds, st.integers(1, 12))
def test_contrast_average_and_row_scaling(seed, d):
    rng = np.random.default_rng(seed)
    e = rng.random((d, d)) * 0.2
    np.fill_diagonal(e, 1.0)
    res = crosstalk_contrast(CrosstalkMatrix(tuple(range(d)), e))
    assert res.average == float(np.mean(res.per_mode))
    scaled = crosstalk_contrast(CrosstalkMatrix(tuple(range(d)), e * rng.uniform(0.1, 10, size=(d, 1))))
    np.testing.assert_allclose(scaled.per_mode, res.per_mode, rtol=1e-12, atol=1e-15)


def test_background_lowers_contrast():
    m = CrosstalkMatrix((0, 1), np.eye(2))
    assert crosstalk_contrast(m.with_background(0.1)).average == pytest.approx(1 - 0.1 / 1.1)
    with pytest.raises(ParameterError):
        m.with_background(-0.1)


def test_contrast_validation():
    with pytest.raises(ParameterError):
        crosstalk_contrast(CrosstalkMatrix((0, 1), [[1.0, 0.1], [0.1, 0.0]]))
    with pytest.raises(ParameterError):
        CrosstalkMatrix((0, 1), [[1.0, -0.1], [0.1, 1.0]])
    with pytest.raises(ParameterError):
        CrosstalkMatrix((0, 1, 2), np.eye(2))


# ------------------------------------------------------------ overlap matrices


def test_ideal_mode_overlaps(ideal_modes):
    labels, fields = ideal_modes
    m = mode_overlap_matrix(fields, labels)
    e = m.entries
    assert np.max(np.abs(e - e.T)) <= 1e-12
    np.testing.assert_allclose(np.diag(e), 1.0, rtol=1e-12)
    off = e - np.diag(np.diag(e))
    assert off.max() < 1e-6
    assert crosstalk_contrast(m).average >= 0.99


def test_overlap_matrix_needs_common_grid():
    a, b = BeamSpec(ell=0), BeamSpec(ell=1, k_r_index=6)
    a = pov_field_analytic(a, render_grid(a, "medium"), "medium")
    b = pov_field_analytic(b, render_grid(b, "medium"), "medium")
    with pytest.raises(ParameterError):
        mode_overlap_matrix([a, b])
    with pytest.raises(ParameterError):
        mode_overlap_matrix([])


def test_crosstalk_csv_round_trip(ideal_modes):
    labels, fields = ideal_modes
    m = mode_overlap_matrix(fields[:5], labels[:5])
    text = crosstalk_csv(m)
    assert text.splitlines()[0] == "ell,-12,-11,-10,-9,-8"
    back = read_crosstalk_csv(text)
    assert back.labels == m.labels
    np.testing.assert_allclose(back.entries, m.entries, rtol=1e-8, atol=0)
    with pytest.raises(ParameterError):
        read_crosstalk_csv("x,0\n0,1\n")
