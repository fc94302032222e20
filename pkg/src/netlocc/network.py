"""Networks of two-qubit sources and their local symmetries.

Every edge ``j = (i, k)`` carries two qubits, ``e{j}^{i}`` and ``e{j}^{k}``,
prepared in either ``|Phi+>`` or ``|Psi->``. A local symmetry of the network
state is a product over edges of single-qubit pairs: ``X (x) X^{-T}`` for
``Phi+`` sources and ``X (x) X`` with ``det X = 1`` for ``Psi-`` sources.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import tensor as T
from .errors import InputError, NotACycle, NotInvertible, PremiseViolated

PHI_PLUS = "phi+"
PSI_MINUS = "psi-"
SOURCES = {PHI_PLUS: T.PHI_PLUS, PSI_MINUS: T.PSI_MINUS}


def label(edge: int, node: int) -> str:
    return f"e{edge}^{node}"


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[int, ...]
    edges: tuple[tuple[int, tuple[int, int]], ...]
    source: str = PSI_MINUS

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple((int(e), (int(a), int(b))) for e, (a, b) in self.edges))
        if self.source not in SOURCES:
            raise InputError(f"unknown source kind {self.source!r}")
        ids = [e for e, _ in self.edges]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate edge id")
        for e, (a, b) in self.edges:
            if a == b:
                raise InputError(f"edge {e} is a self-loop")
            if a not in self.nodes or b not in self.nodes:
                raise InputError(f"edge {e} has an endpoint outside the node set")

    @classmethod
    def cycle(cls, n: int, source: str = PSI_MINUS) -> "NetworkGraph":
        if n < 3:
            raise InputError("cycles need at least three parties")
        edges = [(j, (j, j + 1)) for j in range(1, n)] + [(n, (n, 1))]
        return cls(tuple(range(1, n + 1)), tuple(edges), source)

    @classmethod
    def path(cls, n: int, source: str = PSI_MINUS) -> "NetworkGraph":
        return cls(tuple(range(1, n + 1)), tuple((j, (j, j + 1)) for j in range(1, n)), source)

    @classmethod
    def double_triangle(cls, source: str = PSI_MINUS) -> "NetworkGraph":
        # two triangles sharing the edge (2, 3)
        edges = [(1, (1, 2)), (2, (2, 3)), (3, (3, 1)), (4, (3, 4)), (5, (4, 2))]
        return cls((1, 2, 3, 4), tuple(edges), source)

    @property
    def edge_map(self) -> dict[int, tuple[int, int]]:
        return dict(self.edges)

    @property
    def register(self) -> T.QubitRegister:
        labs = []
        for e, (a, b) in self.edges:
            labs += [label(e, a), label(e, b)]
        return T.QubitRegister(tuple(labs))

    def node_qubits(self, node: int) -> list[str]:
        return [lab for lab in self.register.labels if lab.endswith(f"^{node}")]

    @property
    def has_cycle(self) -> bool:
        # union-find over the multigraph
        parent = {n: n for n in self.nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for _, (a, b) in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                return True
            parent[ra] = rb
        return False

    @property
    def is_canonical_cycle(self) -> bool:
        n = len(self.nodes)
        return n >= 3 and self == NetworkGraph.cycle(n, self.source)

    def require_cycle(self) -> int:
        if not self.is_canonical_cycle:
            raise NotACycle("expected nodes 1..N with edges j=(j, j+1) and N=(N, 1)")
        return len(self.nodes)

    def party_slots(self, j: int) -> tuple[str, str]:
        """Qubits of cycle party ``j`` in operator order (towards j+1, towards j-1)."""
        n = self.require_cycle()
        prev = n if j == 1 else j - 1
        return label(j, j), label(prev, j)

    def party_qubits(self, j: int) -> list[str]:
        if self.is_canonical_cycle:
            return list(self.party_slots(j))
        return self.node_qubits(j)

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"id": e, "ends": [a, b]} for e, (a, b) in self.edges],
            "source": self.source,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "NetworkGraph":
        try:
            edges = tuple((int(d["id"]), tuple(d["ends"])) for d in data["edges"])
            return cls(tuple(data["nodes"]), edges, data.get("source", PSI_MINUS))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed graph: {exc}") from None


def build_network_state(graph: NetworkGraph) -> T.PureState:
    if not graph.edges:
        raise InputError("network has no edges")
    pair = SOURCES[graph.source]
    amps = np.array([1.0 + 0j])
    for _ in graph.edges:
        amps = np.kron(amps, pair)
    return T.PureState(graph.register, amps)


def partner(x: np.ndarray, source: str) -> np.ndarray:
    """Operator the second endpoint must apply when the first applies ``x``."""
    if source == PHI_PLUS:
        return np.linalg.inv(x).T
    return x


def transport(y: np.ndarray, source: str) -> np.ndarray:
    """``y`` on one end of a source acts like ``transport(y)`` on the other end."""
    if source == PHI_PLUS:
        return y.T
    # adjugate: (y x 1)|Psi-> = (1 x adj(y))|Psi->
    return np.array([[y[1, 1], -y[0, 1]], [-y[1, 0], y[0, 0]]])


@dataclass(frozen=True)
class EdgeSymmetry:
    """Per-edge assignment X_e; the partner factor follows from the source kind.

    For ``Psi-`` edges the input is rescaled to unit determinant and the
    scalars are kept in ``scalars``.
    """

    assignment: Mapping[int, np.ndarray]
    source: str = PSI_MINUS
    scalars: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        fixed, scal = {}, dict(self.scalars)
        for e, x in self.assignment.items():
            x = np.asarray(x, dtype=complex)
            if x.shape != (2, 2):
                raise InputError(f"edge {e}: expected a 2x2 matrix")
            if abs(np.linalg.det(x)) < 1e-12 * max(1.0, np.linalg.norm(x) ** 2):
                raise NotInvertible(f"edge {e}: singular symmetry candidate")
            if self.source == PSI_MINUS:
                x, s = T.det_normalize(x)
                scal[e] = scal.get(e, 1.0) * s
            fixed[int(e)] = x
        object.__setattr__(self, "assignment", fixed)
        object.__setattr__(self, "scalars", scal)

    def factors(self, graph: NetworkGraph) -> dict[str, np.ndarray]:
        """Single-qubit factor on every qubit label."""
        out = {}
        for e, (a, b) in graph.edges:
            if e not in self.assignment:
                raise InputError(f"symmetry does not cover edge {e}")
            x = self.assignment[e]
            out[label(e, a)] = x
            out[label(e, b)] = partner(x, self.source)
        return out

    def on_party(self, graph: NetworkGraph, j: int) -> np.ndarray:
        f = self.factors(graph)
        return T.kron(*(f[q] for q in graph.party_qubits(j)))


def symmetry_matrix(sym: EdgeSymmetry, graph: NetworkGraph) -> np.ndarray:
    f = sym.factors(graph)
    return T.kron(*(f[q] for q in graph.register.labels))


def phase_residual(vec: np.ndarray, ref: np.ndarray) -> tuple[float, complex]:
    """min over theta of ||vec - e^{i theta} ref|| for a normalized ``ref``."""
    ov = np.vdot(ref, vec)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(vec - phase * ref)), phase


def apply_local(state: T.PureState, ops: Mapping[Sequence[str] | str, np.ndarray]) -> np.ndarray:
    vec = state.amplitudes
    reg = state.register
    for on, op in ops.items():
        on = [on] if isinstance(on, str) else list(on)
        vec = T.apply_operator(vec, op, reg.positions(on), len(reg))
    return vec


def verify_symmetry(sym: EdgeSymmetry, graph: NetworkGraph, tol: float = 1e-10) -> tuple[bool, float]:
    psi = build_network_state(graph)
    out = apply_local(psi, sym.factors(graph))
    res, _ = phase_residual(out, psi.amplitudes)
    return res < tol, res


def verify_node_operators(ops: Mapping[int, np.ndarray], graph: NetworkGraph, tol: float = 1e-10) -> tuple[bool, float]:
    """Same check for arbitrary per-node operators (one matrix on all qubits of a node)."""
    psi = build_network_state(graph)
    out = apply_local(psi, {tuple(graph.party_qubits(j)): op for j, op in ops.items()})
    res, _ = phase_residual(out, psi.amplitudes)
    return res < tol, res


def realign(op: np.ndarray, left: Sequence[int], n: int) -> np.ndarray:
    """Reshape an n-qubit operator into the matrix whose SVD is its operator Schmidt decomposition."""
    right = [i for i in range(n) if i not in left]
    t = np.asarray(op).reshape((2,) * (2 * n))
    axes = list(left) + [n + i for i in left] + right + [n + i for i in right]
    return t.transpose(axes).reshape(4 ** len(left), 4 ** len(right))


def operator_schmidt_rank(op: np.ndarray, cut: Sequence[str], register: T.QubitRegister, tol: float = 1e-9) -> int:
    s = np.linalg.svd(realign(op, register.positions(cut), len(register)), compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))


def _split(op: np.ndarray, da: int, db: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = op.reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)
    u, s, vh = np.linalg.svd(t)
    return u, s, vh


def _gauge_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # ||b||_F = sqrt(2), largest entry of b real positive
    scale = np.sqrt(2) / np.linalg.norm(b)
    b = b * scale
    a = a / scale
    k = np.argmax(np.abs(b))
    ph = b.flat[k] / abs(b.flat[k])
    return a * ph, b / ph


def factorize_bipartite(x: np.ndarray, z: np.ndarray, dims: tuple[int, int], tol: float = 1e-9):
    """Factor X_AB and Z_BC given X_AB Z_BC = Y_AC (x) 1_B with B a qubit.

    ``dims = (dA, dC)``. Returns ``(xbar_A, x_B, zbar_B, z_C)`` with
    ``x = xbar_A (x) x_B`` and ``z = zbar_B (x) z_C``.
    """
    da, dc = dims
    x = np.asarray(x, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if x.shape != (2 * da, 2 * da) or z.shape != (2 * dc, 2 * dc):
        raise InputError("operator shapes do not match dims")
    for name, m in (("X", x), ("Z", z)):
        if np.linalg.matrix_rank(m, tol=1e-12 * np.linalg.norm(m)) < m.shape[0]:
            raise NotInvertible(f"{name} is singular")
    prod = np.kron(x, np.eye(dc)) @ np.kron(np.eye(da), z)
    # product on A,B,C; compare with Y_AC (x) 1_B
    t = prod.reshape(da, 2, dc, da, 2, dc)
    y = np.einsum("abcdbf->acdf", t).reshape(da * dc, da * dc) / 2
    y_full = np.einsum("acdf,be->abcdef", y.reshape(da, dc, da, dc), np.eye(2)).reshape(prod.shape)
    res = float(np.linalg.norm(prod - y_full) / np.linalg.norm(prod))
    if res > tol:
        raise PremiseViolated("X Z is not of the form Y_AC (x) 1_B", res)

    u, s, vh = _split(x, da, 2)
    xa = (u[:, 0] * s[0]).reshape(da, da)
    xb = vh[0].reshape(2, 2)
    xa, xb = _gauge_pair(xa, xb)
    u, s, vh = _split(z, 2, dc)
    zb = (u[:, 0] * s[0]).reshape(2, 2)
    zc = vh[0].reshape(dc, dc)
    zc_, zb_ = _gauge_pair(zc, zb)
    for name, m, f in (("X", x, np.kron(xa, xb)), ("Z", z, np.kron(zb_, zc_))):
        r = np.linalg.norm(m - f) / np.linalg.norm(m)
        if r > max(tol, 1e-8):
            # cannot happen once the premise holds
            raise PremiseViolated(f"{name} does not factorize", float(r))
    return xa, xb, zb_, zc_
