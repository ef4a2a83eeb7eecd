import mpmath
import numpy as np
import pytest

from walsh_prep.datasets import (
    DatasetError,
    linear_state,
    load_amplitudes,
    make_target,
    random_state,
    save_amplitudes,
    sine_state,
)
from walsh_prep.statevec import SizeError

mpmath.mp.dps = 50


def test_linear_small():
    np.testing.assert_allclose(linear_state(2).amps.real, [0, 0.26726124, 0.53452248, 0.80178373], atol=1e-8)


def test_sine_small():
    np.testing.assert_allclose(sine_state(2).amps.real, [0.27059805, 0.65328148, 0.65328148, 0.27059805], atol=1e-8)


@pytest.mark.parametrize("n", range(1, 21))
def test_structured_norms(n):
    for s in (linear_state(n), sine_state(n)):
        assert abs(s.norm() - 1) < 1e-14
        assert np.all(s.amps.imag == 0)
    assert linear_state(n).amps[0] == 0


@pytest.mark.parametrize("n", range(1, 13))
def test_sine_symmetric_and_positive(n):
    a = sine_state(n).amps.real
    np.testing.assert_array_equal(a, a[::-1])
    assert np.all(a > 0)


@pytest.mark.parametrize("n", range(1, 11))
def test_high_precision_reference(n):
    dim = 2 ** n
    scale = mpmath.sqrt(mpmath.mpf(6) / (dim * (dim - 1) * (2 * dim - 1)))
    lin = np.array([float(j * scale) for j in range(dim)])
    sin = np.array([float(mpmath.sqrt(mpmath.mpf(2) / dim) * mpmath.sin(mpmath.pi * (j + mpmath.mpf(1) / 2) / dim))
                    for j in range(dim)])
    np.testing.assert_allclose(linear_state(n).amps.real, lin, atol=1e-14, rtol=0)
    np.testing.assert_allclose(sine_state(n).amps.real, sin, atol=1e-14, rtol=0)


@pytest.mark.parametrize("kind", ["uniform", "normal"])
def test_random_state_deterministic_and_normalized(kind):
    a = random_state(kind, 6, 42)
    b = random_state(kind, 6, 42)
    assert a.amps.tobytes() == b.amps.tobytes()
    assert abs(a.norm() - 1) < 1e-14
    assert np.all(a.amps.real >= 0)
    assert not np.array_equal(a.amps, random_state(kind, 6, 43).amps)


def test_uniform_mean_amplitude():
    # E[U] / sqrt(E[U^2]) = 0.5 / sqrt(1/3); Monte Carlo check of the moment ratio first
    u = np.random.default_rng(123).uniform(size=2_000_000)
    ratio = 0.5 / np.sqrt(1 / 3)
    assert u.mean() / np.sqrt((u ** 2).mean()) == pytest.approx(ratio, rel=1e-3)
    n = 12
    means = [random_state("uniform", n, s).amps.real.mean() for s in range(10)]
    assert np.mean(means) == pytest.approx(ratio / np.sqrt(2 ** n), rel=0.05)


def test_unknown_distribution():
    with pytest.raises(DatasetError):
        random_state("cauchy", 3, 0)


def test_load_amplitudes(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("1\n1\n1\n1\n")
    np.testing.assert_allclose(load_amplitudes(f).amps, 0.5)
    f.write_text("# header\n1\n\n2  # inline\n3\n4\n")
    assert load_amplitudes(f).dim == 4


@pytest.mark.parametrize("body, err", [
    ("1\n2\n3\n", SizeError),
    ("1\n-0.5\n1\n1\n", DatasetError),
    ("1\nabc\n1\n1\n", DatasetError),
    ("0\n0\n", DatasetError),
])
def test_load_amplitudes_errors(tmp_path, body, err):
    f = tmp_path / "a.txt"
    f.write_text(body)
    with pytest.raises(err):
        load_amplitudes(f)


def test_negative_value_message_mentions_moduli(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("1\n-0.5\n")
    with pytest.raises(DatasetError, match="moduli"):
        load_amplitudes(f)


def test_text_roundtrip(tmp_path):
    s = random_state("normal", 7, 9)
    save_amplitudes(s, tmp_path / "s.txt")
    back = load_amplitudes(tmp_path / "s.txt")
    assert np.max(np.abs(back.amps - s.amps)) <= 1e-15


def test_make_target(tmp_path):
    assert make_target("linear", 3).dim == 8
    assert make_target("sine", 3).dim == 8
    f = tmp_path / "t.txt"
    f.write_text("1\n2\n")
    assert make_target(f"file:{f}", 99).dim == 2
    with pytest.raises(DatasetError):
        make_target("spiky", 3)
