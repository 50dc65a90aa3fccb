import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmqsd.errors import DimensionMismatch, TruncationTooSmall, ZeroNorm
from nmqsd.hilbert import (cat_norm_factor, cat_state, coherent_fidelity,
                           coherent_state, dag, destroy, expectation, fock,
                           normalize, number, partial_trace, projector, purity,
                           q_function, q_grid, q_mass, sigma_minus, sigma_z,
                           spin_down, spin_up, tensor_product, trace_distance)


def random_density(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ dag(m)
    return rho / np.trace(rho)


def test_normalize_examples():
    np.testing.assert_allclose(normalize(np.array([1, 0])), [1, 0])
    np.testing.assert_allclose(normalize(np.array([3, 2])), np.array([3, 2]) / math.sqrt(13))
    with pytest.raises(ZeroNorm):
        normalize(np.array([0, 0]))


def test_expectation_examples():
    assert expectation(spin_up(), sigma_z()) == pytest.approx(1)
    psi = normalize(np.array([3, 2], dtype=complex))
    assert expectation(psi, sigma_z()).real == pytest.approx(5 / 13)
    beta = 1.2 - 0.7j
    assert expectation(coherent_state(beta, 40), destroy(40)) == pytest.approx(beta, abs=1e-8)


def test_expectation_unnormalized_state():
    # normalized=True trusts the caller; False divides by <psi|psi>
    psi = 2 * spin_up()
    assert expectation(psi, sigma_z()) == pytest.approx(4)
    assert expectation(psi, sigma_z(), normalized=False) == pytest.approx(1)


def test_tensor_product_examples():
    joint = tensor_product(spin_up(), fock(3, 0))
    np.testing.assert_array_equal(joint, np.eye(6)[0])
    np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
    state = tensor_product(spin_down(), fock(3, 1))
    op = tensor_product(sigma_z(), np.eye(3))
    np.testing.assert_allclose(op @ state, -state)


def test_partial_trace_examples():
    rng = np.random.default_rng(1)
    r1, r2 = random_density(rng, 2), random_density(rng, 3)
    np.testing.assert_allclose(partial_trace(np.kron(r1, r2), (2, 3), keep=1), r1, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(r1, r2), (2, 3), keep=2), r2, atol=1e-14)
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    np.testing.assert_allclose(partial_trace(projector(bell), (2, 2), keep=1), np.eye(2) / 2)


def test_partial_trace_matches_double_loop():
    rng = np.random.default_rng(7)
    rho = random_density(rng, 4)
    brute = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                brute[i, j] += rho[2 * i + k, 2 * j + k]
    np.testing.assert_allclose(partial_trace(rho, (2, 2), keep=1), brute, atol=1e-15)


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(5), (2, 3), keep=1)


def test_coherent_and_cat():
    np.testing.assert_allclose(coherent_state(0, 10), fock(10, 0), atol=1e-15)
    psi = coherent_state(2.0, 30)
    assert expectation(psi, number(30)).real == pytest.approx(4, abs=1e-8)
    assert cat_norm_factor(2.0) == pytest.approx((2 * (1 + math.exp(-8))) ** -0.5)
    cat = cat_state(2.0, 30)
    assert np.linalg.norm(cat) == pytest.approx(1)
    # the even cat has no odd Fock components
    assert np.abs(cat[1::2]).max() < 1e-12


def test_coherent_truncation_checked():
    with pytest.raises(TruncationTooSmall):
        coherent_state(2.0, 8)


def test_coherent_fidelity():
    assert coherent_fidelity(coherent_state(1.5j, 30)) == pytest.approx(1, abs=1e-9)
    assert coherent_fidelity(cat_state(2.0, 30)) < 0.6


def test_q_function_vacuum_and_coherent():
    re, im = q_grid()
    q = q_function(fock(30, 0), re, im)
    i0 = np.argmin(np.abs(re))
    assert q[i0, i0] == pytest.approx(1 / math.pi)
    b = re[:, None] + 1j * im[None, :]
    np.testing.assert_allclose(q, np.exp(-np.abs(b) ** 2) / math.pi, atol=1e-14)
    qc = q_function(coherent_state(2.0, 30), re, im)
    i, j = np.unravel_index(np.argmax(qc), qc.shape)
    step = re[1] - re[0]
    assert abs(re[i] - 2.0) <= step / 2 and abs(im[j]) <= step / 2
    assert 0.99 <= q_mass(qc, re, im) <= 1.01


def test_q_function_cat_is_double_gaussian():
    re, im = q_grid()
    q = q_function(cat_state(2.0, 30), re, im)
    b = re[:, None] + 1j * im[None, :]
    # |<b|a> + <b|-a>|^2 / pi, with overlaps exp(-|b-a|^2/2 + i Im(conj(b) a))
    ov = lambda a: np.exp(-0.5 * np.abs(b) ** 2 - 0.5 * abs(a) ** 2 + np.conj(b) * a)
    brute = cat_norm_factor(2.0) ** 2 * np.abs(ov(2.0) + ov(-2.0)) ** 2 / math.pi
    np.testing.assert_allclose(q, brute, atol=1e-9)
    gauss = 0.5 * (np.exp(-np.abs(b - 2) ** 2) + np.exp(-np.abs(b + 2) ** 2)) / math.pi
    # the cross term peaks at the origin with height 2 e^{-|a|^2} / pi (times norm^2)
    assert np.abs(q - gauss).max() < 2 * math.exp(-4) / math.pi
    assert 0.99 <= q_mass(q, re, im) <= 1.01


def test_trace_distance_and_purity():
    assert trace_distance(projector(spin_up()), projector(spin_down())) == pytest.approx(1)
    assert purity(np.eye(2) / 2) == pytest.approx(0.5)
    rho = 0.5 * (projector(spin_up()) + projector(spin_down()))
    np.testing.assert_allclose(rho, np.eye(2) / 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                   allow_infinity=False), min_size=2, max_size=6))
def test_normalize_property(amps):
    psi = np.array(amps)
    if np.linalg.norm(psi) < 1e-6:
        return
    assert np.linalg.norm(normalize(psi)) == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([(2, 2), (2, 3), (3, 4)]))
def test_partial_trace_preserves_trace_and_positivity(seed, dims):
    rho = random_density(np.random.default_rng(seed), dims[0] * dims[1])
    for keep in (1, 2):
        red = partial_trace(rho, dims, keep)
        assert np.trace(red).real == pytest.approx(1)
        assert np.linalg.eigvalsh(red).min() > -1e-12


def test_lowering_relations():
    assert np.allclose(sigma_minus() @ spin_up(), spin_down())
    a = destroy(6)
    np.testing.assert_allclose(dag(a) @ a, number(6))
