import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_expand, random_state, walsh_matrix_int
from walsh_prep.statevec import DiagonalHamiltonian, StateVector, evolve_diagonal, fidelity
from walsh_prep.walsh import (
    TermSet,
    TopologyError,
    TopologyGraph,
    WalshSpectrum,
    expand_coefficients,
    expand_diagonal,
    hardware_efficient,
    ladder_graph,
    popcount,
    quantize_hamiltonian,
    select_terms,
    walsh_coefficients,
    walsh_signs,
)


def test_constant_diagonal_has_only_identity_term():
    spec = walsh_coefficients(DiagonalHamiltonian(np.full(8, 0.7)))
    assert spec.terms[0] == pytest.approx(0.7, abs=1e-15)
    assert max(abs(c) for r, c in spec.terms.items() if r) < 1e-15


def test_two_qubit_coefficients():
    spec = walsh_coefficients(DiagonalHamiltonian([0, np.pi, np.pi, 0]))
    assert spec.terms[0] == pytest.approx(np.pi / 2)
    assert spec.terms[3] == pytest.approx(-np.pi / 2)
    assert abs(spec.terms[1]) < 1e-15 and abs(spec.terms[2]) < 1e-15


def test_single_walsh_function():
    h = walsh_signs(5, 3)
    np.testing.assert_array_equal(h, [1, -1, 1, -1, -1, 1, -1, 1])
    spec = walsh_coefficients(DiagonalHamiltonian(h))
    assert spec.terms[5] == pytest.approx(1.0)
    assert max(abs(c) for r, c in spec.terms.items() if r != 5) < 1e-15


def test_expand_examples():
    np.testing.assert_allclose(expand_diagonal(WalshSpectrum(3, {0: 1.3})).coeffs, 1.3)
    np.testing.assert_array_equal(expand_diagonal(WalshSpectrum(2, {3: 1.0})).coeffs, [1, -1, -1, 1])


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 10_000))
def test_walsh_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=1 << n)
    spec = WalshSpectrum(n, dict(enumerate(c)))
    back = walsh_coefficients(expand_diagonal(spec))
    np.testing.assert_allclose([back.terms[r] for r in range(1 << n)], c, atol=1e-12)


@pytest.mark.parametrize("n", [2, 5, 9])
def test_parseval(n):
    h = np.random.default_rng(n).normal(size=1 << n)
    c = np.array(list(walsh_coefficients(DiagonalHamiltonian(h)).terms.values()))
    assert np.sum(h ** 2) == pytest.approx((1 << n) * np.sum(c ** 2), rel=1e-10)


@pytest.mark.parametrize("n", range(1, 7))
def test_walsh_orthogonality_integer(n):
    m = walsh_matrix_int(n)
    np.testing.assert_array_equal(m @ m.T, (1 << n) * np.eye(1 << n, dtype=np.int64))


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("kind", ["two", "full", "sparse"])
def test_expand_matches_double_loop(n, kind):
    rng = np.random.default_rng(n)
    if kind == "two":
        idx = select_terms(n, "k_local", k=2).indices
    elif kind == "full":
        idx = select_terms(n, "full").indices
    else:
        idx = tuple(sorted(rng.choice(np.arange(1, 1 << n), size=3, replace=False).tolist()))
    c = rng.normal(size=len(idx))
    got = expand_coefficients(n, idx, c)
    np.testing.assert_allclose(got, brute_expand(dict(zip(idx, c)), n), atol=1e-12)


def test_spectrum_json_roundtrip(tmp_path):
    spec = WalshSpectrum(3, {1: 0.25, 6: -1.5})
    spec.save(tmp_path / "s.json")
    data = json.loads((tmp_path / "s.json").read_text())
    assert data == {"n_qubits": 3, "terms": [{"r": 1, "c": 0.25}, {"r": 6, "c": -1.5}]}
    assert WalshSpectrum.load(tmp_path / "s.json") == spec
    with pytest.raises(ValueError):
        WalshSpectrum(2, {4: 1.0})


def test_select_terms_examples():
    assert len(select_terms(8, "k_local", k=2)) == 36
    assert len(hardware_efficient(8)) == 18
    assert select_terms(2, "k_local", k=1).indices == (1, 2)
    assert select_terms(3, "full").indices == tuple(range(1, 8))


@pytest.mark.parametrize("n", range(2, 13))
def test_two_local_cardinality(n):
    ts = select_terms(n, "k_local", k=2)
    assert len(ts) == n + n * (n - 1) // 2
    assert list(ts.indices) == sorted(set(ts.indices))
    assert all(1 <= popcount(r) <= 2 for r in ts.indices)


def test_topology_term_set_invariants():
    g = ladder_graph(8)
    ts = select_terms(8, "topology", graph=g)
    singles = {r for r in ts.indices if popcount(r) == 1}
    assert singles == {1 << q for q in range(8)}
    edges = set(g.edges)
    for r in ts.indices:
        if popcount(r) == 2:
            a, b = [q for q in range(8) if r >> q & 1]
            assert (a, b) in edges
    assert 0 not in ts.indices


@pytest.mark.parametrize("n, count", [(4, 4), (6, 7), (8, 10)])
def test_ladder_edges(n, count):
    assert len(ladder_graph(n).edges) == count


def test_ladder_layout():
    g = ladder_graph(8)
    assert set(g.edges) == {(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7), (0, 4), (1, 5), (2, 6), (3, 7)}


@pytest.mark.parametrize("n", [3, 5, 2])
def test_ladder_rejects_odd_or_small(n):
    with pytest.raises(TopologyError):
        ladder_graph(n)


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 4),)])
def test_bad_graphs(edges):
    with pytest.raises(TopologyError):
        TopologyGraph(4, edges)


def test_topology_qubit_mismatch():
    with pytest.raises(TopologyError):
        select_terms(6, "topology", graph=ladder_graph(8))


def test_term_set_json_roundtrip():
    for ts in (hardware_efficient(6), select_terms(5, "k_local", k=2), select_terms(3, "full")):
        assert TermSet.from_json(json.loads(json.dumps(ts.to_json()))) == ts


def test_quantize_examples():
    q = quantize_hamiltonian(DiagonalHamiltonian([np.pi, 0.0]), 10)
    assert q.coeffs[0] == 3.1416015625 == 3217 * 2 ** -10
    rng = np.random.default_rng(0)
    h = DiagonalHamiltonian(rng.uniform(-20, 20, 64))
    q0 = quantize_hamiltonian(h, 0).coeffs
    assert set(np.unique(q0)) <= set(range(7))
    top = quantize_hamiltonian(DiagonalHamiltonian([2 * np.pi - 1e-6, 0.0]), 4).coeffs
    assert top[0] == 0.0


@settings(max_examples=30, deadline=None)
@given(m=st.integers(0, 20), seed=st.integers(0, 10_000))
def test_quantize_idempotent_and_range(m, seed):
    h = DiagonalHamiltonian(np.random.default_rng(seed).uniform(-50, 50, 16))
    q = quantize_hamiltonian(h, m)
    assert np.array_equal(quantize_hamiltonian(q, m).coeffs, q.coeffs)
    assert np.all((q.coeffs >= 0) & (q.coeffs < 2 * np.pi))
    k = q.coeffs * 2 ** m
    assert np.array_equal(k, np.round(k)) and np.all(k < 8 * 2 ** m)


def _phase_error(h, q):
    d = np.mod(h - q + np.pi, 2 * np.pi) - np.pi
    return np.max(np.abs(d))


@pytest.mark.parametrize("m", [0, 3, 8, 12])
def test_quantize_phase_error_bound(m):
    h = np.random.default_rng(m).uniform(-30, 30, 512)
    q = quantize_hamiltonian(DiagonalHamiltonian(h), m).coeffs
    assert _phase_error(h, q) <= 2.0 ** (-m - 1) + 1e-12


@pytest.mark.parametrize("n", [2, 5, 8])
@pytest.mark.parametrize("m", [8, 12, 16])
def test_quantized_evolution_fidelity_bound(n, m):
    rng = np.random.default_rng(100 * n + m)
    v = random_state(n, rng)
    h = DiagonalHamiltonian(rng.uniform(0, 2 * np.pi, 1 << n))
    exact = evolve_diagonal(StateVector(v.copy()), h)
    quant = evolve_diagonal(StateVector(v.copy()), quantize_hamiltonian(h, m))
    assert fidelity(exact, quant) >= 1 - (1 << n) * 2.0 ** (-2 * m)
