"""Dense linear algebra on labeled qubit registers.

Operators are plain ``numpy`` complex arrays stored in register order. The
register carries the qubit labels (``"e{edge}^{node}"``) and all embedding,
partial traces and transposes go through it, so no other module has to do
index bookkeeping by hand.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, UnknownLabel

DEFAULT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class QubitRegister:
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate qubit labels in {self.labels}")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(label) from None

    def positions(self, labels: Iterable[str]) -> list[int]:
        return [self.index(lab) for lab in labels]


@dataclass(frozen=True)
class PureState:
    register: QubitRegister
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.register.dim:
            raise DimensionMismatch(
                f"{amps.size} amplitudes for {len(self.register)} qubits"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        n = self.norm
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return PureState(self.register, self.amplitudes / n)

    def apply(self, op: np.ndarray, on: Sequence[str]) -> "PureState":
        return PureState(
            self.register, apply_operator(self.amplitudes, op, self.register.positions(on), len(self.register))
        )


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def _check_square(op: np.ndarray, nqubits: int) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    d = 2**nqubits
    if op.shape != (d, d):
        raise DimensionMismatch(f"operator shape {op.shape}, expected {(d, d)}")
    return op


def apply_operator(vec: np.ndarray, op: np.ndarray, positions: Sequence[int], n: int) -> np.ndarray:
    """Apply ``op`` to the qubits at ``positions`` of an ``n``-qubit vector."""
    k = len(positions)
    op = _check_square(op, k)
    psi = np.asarray(vec, dtype=complex).reshape((2,) * n)
    t = op.reshape((2,) * (2 * k))
    psi = np.tensordot(t, psi, axes=(list(range(k, 2 * k)), list(positions)))
    # tensordot puts the new axes first; move them back into place
    psi = np.moveaxis(psi, list(range(k)), list(positions))
    return psi.reshape(-1)


def embed(op: np.ndarray, on: Sequence[str], register: QubitRegister) -> np.ndarray:
    """Operator acting as ``op`` on the labels ``on`` and as identity elsewhere."""
    on = list(on)
    pos = register.positions(on)
    if len(set(pos)) != len(pos):
        raise ValueError("repeated target label")
    op = _check_square(op, len(on))
    n = len(register)
    rest = [i for i in range(n) if i not in pos]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    order = pos + rest
    return _permute(full, order, n)


def _permute(op: np.ndarray, order: Sequence[int], n: int) -> np.ndarray:
    # op is written in qubit order `order`; return it in natural order
    t = op.reshape((2,) * (2 * n))
    inv = np.argsort(order)
    axes = list(inv) + [n + i for i in inv]
    return t.transpose(axes).reshape(2**n, 2**n)


def partial_trace(op: np.ndarray, over: Sequence[str], register: QubitRegister) -> np.ndarray:
    """Trace out ``over``; the result is on the remaining labels in register order."""
    n = len(register)
    op = _check_square(op, n)
    pos = register.positions(over)
    keep = [i for i in range(n) if i not in pos]
    t = op.reshape((2,) * (2 * n))
    # bring traced axes to the end on both sides
    t = t.transpose(keep + pos + [n + i for i in keep] + [n + i for i in pos])
    dk, dt = 2 ** len(keep), 2 ** len(pos)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def partial_transpose(op: np.ndarray, on: Sequence[str], register: QubitRegister) -> np.ndarray:
    n = len(register)
    op = _check_square(op, n)
    pos = register.positions(on)
    t = op.reshape((2,) * (2 * n))
    axes = list(range(2 * n))
    for p in pos:
        axes[p], axes[n + p] = axes[n + p], axes[p]
    return t.transpose(axes).reshape(2**n, 2**n)


def magic_basis() -> np.ndarray:
    """Columns Phi+, -i Phi-, Psi-, -i Psi+ (images of 00, 01, 10, 11)."""
    return np.column_stack([PHI_PLUS, -1j * PHI_MINUS, PSI_MINUS, -1j * PSI_PLUS])


MAGIC = magic_basis()


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.linalg.norm(a - dagger(a)) <= tol * max(1.0, np.linalg.norm(a)))


def is_unitary(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.linalg.norm(dagger(a) @ a - np.eye(a.shape[0])) <= tol)


def is_positive_definite(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    if not is_hermitian(a, tol):
        return False
    return bool(np.linalg.eigvalsh((a + dagger(a)) / 2).min() > tol)


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix."""
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)


def inv_sqrtm_pd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    return (v / np.sqrt(w)) @ dagger(v)


def det_normalize(x: np.ndarray) -> tuple[np.ndarray, complex]:
    """Rescale a 2x2 matrix to unit determinant; returns (x / s, s)."""
    d = np.linalg.det(x)
    if abs(d) < 1e-300:
        raise np.linalg.LinAlgError("singular matrix")
    s = np.sqrt(complex(d))
    return x / s, s


def projective_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min_c ||a - c b|| / ||a||, i.e. how far ``a`` is from being proportional to ``b``."""
    na = np.linalg.norm(a)
    if na == 0:
        return 0.0
    bb = np.vdot(b, b)
    if bb == 0:
        return 1.0
    c = np.vdot(b, a) / bb
    return float(np.linalg.norm(a - c * b) / na)


def proportionality(h: np.ndarray, m: np.ndarray) -> tuple[complex, float]:
    """Least-squares constant lam with m ~ lam h, and the residual ||m - lam h|| / ||h||."""
    lam = np.vdot(h, m) / np.vdot(h, h)
    return lam, float(np.linalg.norm(m - lam * h) / np.linalg.norm(h))


PAULI_PAIRS = np.array([np.kron(pa, pb) for pa in PAULIS for pb in PAULIS])


def pauli_coefficients(op: np.ndarray) -> np.ndarray:
    """Real 4x4 array c[a, b] = tr(op (s_a x s_b)) / 4 for a two-qubit Hermitian op."""
    return (np.einsum("kij,ji->k", PAULI_PAIRS, op).real / 4).reshape(4, 4)


def from_pauli_coefficients(c: np.ndarray) -> np.ndarray:
    return np.tensordot(np.asarray(c, dtype=float).reshape(16), PAULI_PAIRS, axes=1)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| for normalized vectors (global phase ignored)."""
    return float(abs(np.vdot(a / np.linalg.norm(a), b / np.linalg.norm(b))))
