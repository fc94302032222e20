import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlocc import tensor as T
from netlocc.errors import DimensionMismatch, UnknownLabel

import oracles


def test_kron_basics():
    assert np.allclose(T.kron(T.I2, T.I2), np.eye(4))
    assert np.allclose(np.diag(T.kron(T.SZ, T.SZ)), [1, -1, -1, 1])
    # sigma_y (x) sigma_y flips the sign of Phi+
    assert np.allclose(T.kron(T.SY, T.SY) @ T.PHI_PLUS, -T.PHI_PLUS)


def test_kron_matches_loops(rng):
    a = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2))
    assert np.allclose(T.kron(a, b), oracles.kron_loops(a, b))


def test_embed_examples():
    reg2 = T.QubitRegister(("e1^1", "e1^2"))
    assert np.allclose(T.embed(T.SX, ["e1^1"], reg2), np.kron(T.SX, T.I2))
    assert np.allclose(
        T.embed(np.kron(T.SX, T.SY), ["e1^2", "e1^1"], reg2),
        T.embed(np.kron(T.SY, T.SX), ["e1^1", "e1^2"], reg2),
    )


def test_embed_errors():
    reg = T.QubitRegister(("a", "b"))
    with pytest.raises(UnknownLabel):
        T.embed(T.SX, ["c"], reg)
    with pytest.raises(DimensionMismatch):
        T.embed(np.eye(4), ["a"], reg)


def test_embed_against_loops(rng):
    labels = tuple(f"q{i}" for i in range(4))
    reg = T.QubitRegister(labels)
    op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    for pos in ([0, 2], [3, 1], [2, 0]):
        got = T.embed(op, [labels[p] for p in pos], reg)
        assert np.allclose(got, oracles.embed_loops(op, pos, 4))


def test_disjoint_embeddings_commute(rng):
    reg = T.QubitRegister(("a", "b", "c"))
    x = T.embed(rng.normal(size=(2, 2)), ["a"], reg)
    y = T.embed(rng.normal(size=(4, 4)), ["c", "b"], reg)
    assert np.allclose(x @ y, y @ x)


def test_apply_operator_matches_embed(rng):
    reg = T.QubitRegister(tuple("abcde"))
    vec = rng.normal(size=32) + 1j * rng.normal(size=32)
    op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    got = T.apply_operator(vec, op, reg.positions(["d", "a"]), 5)
    assert np.allclose(got, T.embed(op, ["d", "a"], reg) @ vec)


def test_partial_trace_against_loops(rng):
    reg = T.QubitRegister(("a", "b", "c"))
    op = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    for over in (["b"], ["a", "c"], ["c"]):
        got = T.partial_trace(op, over, reg)
        assert np.allclose(got, oracles.partial_trace_loops(op, reg.positions(over), 3))


def test_partial_trace_example():
    # tr_2 (1 + 0.3 zz) = 2 * 1
    reg = T.QubitRegister(("a", "b"))
    assert np.allclose(T.partial_trace(np.eye(4) + 0.3 * T.kron(T.SZ, T.SZ), ["b"], reg), 2 * np.eye(2))


def test_partial_transpose_of_phi_plus_projector():
    reg = T.QubitRegister(("a", "b"))
    rho = np.outer(T.PHI_PLUS, T.PHI_PLUS.conj())
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert np.allclose(T.partial_transpose(rho, ["b"], reg), swap / 2)


def test_magic_basis_is_unitary_and_ordered():
    m = T.MAGIC
    assert np.allclose(m.conj().T @ m, np.eye(4))
    assert np.allclose(m[:, 0], T.PHI_PLUS)
    assert np.allclose(m[:, 2], T.PSI_MINUS)


def test_pauli_coefficients_round_trip(rng):
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    c = T.pauli_coefficients(h)
    assert np.allclose(c, oracles.pauli_expansion(h))
    assert np.allclose(T.from_pauli_coefficients(c), h)


def test_predicates():
    assert T.is_unitary(T.SY)
    assert not T.is_unitary(2 * T.SY)
    assert T.is_positive_definite(np.eye(4) + 0.3 * T.kron(T.SZ, T.SZ))
    assert not T.is_positive_definite(np.eye(4) + 1.3 * T.kron(T.SZ, T.SZ))
    assert not T.is_hermitian(np.array([[0, 1], [0, 0]]))


def test_pure_state_normalization(rng):
    reg = T.QubitRegister(("a", "b", "c"))
    s = T.PureState(reg, rng.normal(size=8) + 1j * rng.normal(size=8)).normalized()
    assert abs(s.norm - 1) < 1e-12
    with pytest.raises(DimensionMismatch):
        T.PureState(reg, np.ones(4))


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_det_normalize_property(a, b, c, d):
    x = np.array([[a + 1j, b], [c, d - 1j]])
    if abs(np.linalg.det(x)) < 1e-6:
        return
    y, s = T.det_normalize(x)
    assert abs(np.linalg.det(y) - 1) < 1e-9
    assert np.allclose(y * s, x)


def test_partial_transpose_spec_examples(rng):
    reg = T.QubitRegister(("a", "b"))
    op = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(T.partial_transpose(T.partial_transpose(op, ["a"], reg), ["a"], reg), op)
    assert np.allclose(T.partial_transpose(np.kron(T.SY, T.SX), ["a"], reg), -np.kron(T.SY, T.SX))
    rho = np.outer(T.PHI_PLUS, T.PHI_PLUS.conj())
    assert np.isclose(np.linalg.eigvalsh(T.partial_transpose(rho, ["a"], reg)).min(), -0.5)


def test_partial_trace_spec_examples():
    reg = T.QubitRegister(("a", "b"))
    rho = np.outer(T.PHI_PLUS, T.PHI_PLUS.conj())
    assert np.allclose(T.partial_trace(np.eye(4), ["a"], reg), 2 * np.eye(2))
    assert np.allclose(T.partial_trace(rho, ["a"], reg), np.eye(2) / 2)
    assert np.allclose(T.partial_trace(rho, ["b"], reg), np.eye(2) / 2)
    assert np.allclose(T.partial_trace(np.eye(4) + 0.4 * T.kron(T.SZ, T.SZ), ["a"], reg), 2 * np.eye(2))


def test_partial_trace_covariance(rng):
    reg = T.QubitRegister(("a", "b", "c"))
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = g @ g.conj().T
    v, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    big = T.embed(v, ["a", "b"], reg)
    lhs = T.partial_trace(big @ rho @ big.conj().T, ["c"], reg)
    rhs = v @ T.partial_trace(rho, ["c"], reg) @ v.conj().T
    assert np.linalg.norm(lhs - rhs) < 1e-10


def test_magic_basis_spec_examples(rng):
    u = T.MAGIC
    assert np.linalg.norm(u.conj().T @ u - np.eye(4)) < 1e-14
    assert np.allclose(u.conj().T @ T.kron(T.SZ, T.SZ) @ u, np.diag([1, 1, -1, -1]))
    for _ in range(10):
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        y = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        x, _ = T.det_normalize(x)
        y, _ = T.det_normalize(y)
        o = u.conj().T @ np.kron(x, y) @ u
        assert np.allclose(o.T @ o, np.eye(4))


def test_magic_basis_diagonalizes_bell_diagonal(rng):
    for _ in range(10):
        c = rng.normal(size=4)
        h = sum(ci * T.kron(p, p) for ci, p in zip(c, T.PAULIS))
        d = T.MAGIC.conj().T @ h @ T.MAGIC
        assert np.linalg.norm(d - np.diag(np.diag(d))) < 1e-12


def test_kron_associativity_and_relabeling(rng):
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert np.linalg.norm(T.kron(T.kron(a, b), c) - T.kron(a, T.kron(b, c))) < 1e-12
    reg = T.QubitRegister(("x", "y", "z"))
    lhs = T.embed(T.kron(a, b, c), ["x", "y", "z"], reg)
    rhs = T.embed(T.kron(c, a, b), ["z", "x", "y"], reg)
    assert np.linalg.norm(lhs - rhs) < 1e-12
