import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogfft import core
from analogfft.errors import InvalidSizeError

from conftest import INVARIANT_EXAMPLES


def brute_dft(x):
    # scalar double loop, independent of core.dft_matrix
    n = len(x)
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        for m in range(n):
            out[k] += x[m] * np.exp(-2j * np.pi * k * m / n)
    return out


def brute_dft_2d(img):
    rows = np.array([brute_dft(r) for r in img])
    return np.array([brute_dft(c) for c in rows.T]).T


def test_dft_matrix_n1_is_one():
    assert core.dft_matrix(1).tolist() == [[1]]


def test_dft_matrix_n2():
    assert np.allclose(core.dft_matrix(2), [[1, 1], [1, -1]], atol=0)


def test_dft_matrix_n4_exact_entries():
    w = core.dft_matrix(4)
    expect = np.array([[1, 1, 1, 1], [1, -1j, -1, 1j], [1, -1, 1, -1], [1, 1j, -1, -1j]])
    assert np.array_equal(w, expect)


def test_dft_matrix_symmetric_and_unitary_up_to_n():
    w = core.dft_matrix(64)
    assert np.array_equal(w, w.T)
    assert np.allclose(w @ w.conj().T, 64 * np.eye(64), atol=1e-9)


def test_invalid_sizes():
    for bad in (0, -3):
        with pytest.raises(InvalidSizeError):
            core.dft_matrix(bad)
    with pytest.raises(InvalidSizeError):
        core.reference_dft(np.zeros(0))
    with pytest.raises(InvalidSizeError):
        core.reference_dft_2d(np.zeros(4))
    with pytest.raises(ValueError):
        core.reference_dft([1.0, np.nan])


def test_twiddle_matrix_edges():
    t = core.twiddle_matrix(4, 8)
    assert t.shape == (4, 8)
    assert np.all(t[0] == 1) and np.all(t[:, 0] == 1)
    m, n = np.mgrid[0:4, 0:8]
    assert np.allclose(t, np.exp(-2j * np.pi * m * n / 32), atol=1e-15)


def test_reference_dft_matches_brute_force(rng):
    for n in (1, 2, 3, 5, 8, 12, 17, 64):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert np.allclose(core.reference_dft(x), brute_dft(x), atol=1e-9 * n)


def test_reference_dft_impulse_and_constant():
    x = np.zeros(16)
    x[0] = 1
    assert np.allclose(core.reference_dft(x), np.ones(16))
    X = core.reference_dft(np.ones(16))
    assert np.isclose(X[0], 16) and np.allclose(X[1:], 0, atol=1e-12)


def test_reference_dft_large_agrees_with_numpy(rng):
    x = rng.normal(size=4096)
    assert np.allclose(core.reference_dft(x), np.fft.fft(x), atol=1e-8)


def test_inverse_round_trip(rng):
    x = rng.normal(size=48) + 1j * rng.normal(size=48)
    assert np.allclose(core.inverse_dft(core.reference_dft(x)), x, atol=1e-12)


def test_ct_n4_2x2_exact():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.allclose(core.ct_fft_exact(x, 2, 2), brute_dft(x), atol=1e-12)


def test_ct_reshape_index_examples():
    assert core.ct_reshape_input(np.arange(4), 2, 2).real.tolist() == [[0, 2], [1, 3]]
    assert core.ct_reshape_output(np.array([[0, 1], [2, 3]])).real.tolist() == [0, 1, 2, 3]


def test_reference_dft_matches_recursive_radix2(rng):
    def radix2(x):
        if len(x) == 1:
            return x.astype(complex)
        even, odd = radix2(x[0::2]), radix2(x[1::2])
        t = np.exp(-2j * np.pi * np.arange(len(x) // 2) / len(x)) * odd
        return np.concatenate([even + t, even - t])

    x = rng.normal(size=64) + 1j * rng.normal(size=64)
    ref = radix2(x)
    assert np.linalg.norm(core.reference_dft(x) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_twiddle_full_period():
    assert core.twiddle_matrix(2, 2)[1, 1] == -1j
    assert np.all(core.twiddle_matrix(1, 7) == 1)


def test_inverse_2d_round_trip(rng):
    img = rng.normal(size=(16, 16))
    assert np.allclose(core.inverse_dft(core.reference_dft_2d(img)), img, atol=1e-12)
    assert np.allclose(core.inverse_dft([4, 0, 0, 0]), [1, 1, 1, 1])


def test_ct_reshape_round_trip_shapes(rng):
    x = rng.normal(size=24)
    xt = core.ct_reshape_input(x, 4, 6)
    assert xt.shape == (4, 6)
    assert xt[1, 2] == x[1 + 4 * 2]


def test_vr_trivial_identity():
    img = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(core.vr_fft_exact(img, 2, 2, 1, 1), brute_dft_2d(img), atol=1e-12)
    assert np.allclose(core.vr_fft_exact(img, 1, 1, 2, 2), brute_dft_2d(img), atol=1e-12)


def test_vr_4x4_matches_brute_force(rng):
    img = rng.normal(size=(4, 4))
    assert np.allclose(core.vr_fft_exact(img, 2, 2, 2, 2), brute_dft_2d(img), atol=1e-10)


def test_vr_256_matches_reference(rng):
    img = rng.uniform(0, 255, size=(256, 256))
    X = core.vr_fft_exact(img, 16, 16, 16, 16)
    assert np.max(np.abs(X - np.fft.fft2(img))) / np.max(np.abs(X)) < 1e-8


def test_reference_dft_2d(rng):
    img = rng.normal(size=(6, 10))
    assert np.allclose(core.reference_dft_2d(img), brute_dft_2d(img), atol=1e-9)


# -- invariants -------------------------------------------------------------------

signal_lengths = st.integers(1, 512)


@settings(max_examples=INVARIANT_EXAMPLES)
@given(n=signal_lengths, seed=st.integers(0, 2 ** 32 - 1))
def test_parseval(n, seed):
    r = np.random.default_rng(seed)
    x = r.normal(size=n) + 1j * r.normal(size=n)
    X = core.reference_dft(x)
    e_time = np.sum(np.abs(x) ** 2)
    e_freq = np.sum(np.abs(X) ** 2) / n
    assert abs(e_freq - e_time) <= 1e-9 * e_time


@settings(max_examples=200)
@given(e1=st.integers(0, 6), e2=st.integers(0, 6), odd1=st.sampled_from([1, 3, 5]),
       seed=st.integers(0, 2 ** 32 - 1))
def test_cooley_tukey_identity(e1, e2, odd1, seed):
    n1, n2 = odd1 * 2 ** e1, 2 ** e2
    if n1 * n2 > 4096:
        n1 = 2 ** e1
    r = np.random.default_rng(seed)
    x = r.normal(size=n1 * n2) + 1j * r.normal(size=n1 * n2)
    ref = core.reference_dft(x)
    out = core.ct_fft_exact(x, n1, n2)
    assert np.linalg.norm(out - ref) <= 1e-9 * np.linalg.norm(ref)


@settings(max_examples=200)
@given(p=st.integers(1, 8), q=st.integers(1, 8), r=st.integers(1, 8), s=st.integers(1, 8),
       seed=st.integers(0, 2 ** 32 - 1))
def test_vector_radix_identity(p, q, r, s, seed):
    g = np.random.default_rng(seed)
    img = g.normal(size=(p * r, q * s))
    ref = core.reference_dft_2d(img)
    out = core.vr_fft_exact(img, p, q, r, s)
    assert np.linalg.norm(out - ref) <= 1e-9 * max(np.linalg.norm(ref), 1e-300)


@settings(max_examples=300)
@given(n1=st.integers(1, 64), n2=st.integers(1, 64))
def test_unit_magnitude_entries(n1, n2):
    for m in (core.dft_matrix(n1), core.twiddle_matrix(n1, n2)):
        mag = np.abs(m)
        assert np.all(mag >= 1 - 1e-12) and np.all(mag <= 1 + 1e-12)
