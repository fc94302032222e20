"""LOCC protocols on networks: data model, validation, simulation and builders.

A protocol is a list of rounds. In each round one party applies a
generalized measurement given by Kraus operators on its own qubits. Every
outcome is broadcast and may trigger single-party correction unitaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import tensor as T
from .errors import (
    CorrectionNotUnitary,
    DimensionMismatch,
    GaugeFailure,
    InputError,
    ParameterConstraintViolated,
    PovmInvalid,
)
from .network import PHI_PLUS, NetworkGraph, partner, transport
from .reachability import MixingSolution, TargetSpec, nxt

PRUNE = 1e-14
MAX_BRANCHES = 10**6
POVM_TOL = 1e-10


@dataclass
class Round:
    party: int
    kraus: list[np.ndarray]
    # outcome index -> {party: unitary on that party's qubits}
    corrections: list[dict[int, np.ndarray]] = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
        if not self.corrections:
            self.corrections = [{} for _ in self.kraus]
        if len(self.corrections) != len(self.kraus):
            raise InputError("one correction map per outcome is required")


@dataclass
class LoccProtocol:
    graph: NetworkGraph
    rounds: list[Round] = field(default_factory=list)

    def check_supports(self):
        for rd in self.rounds:
            d = 2 ** len(self.graph.party_qubits(rd.party))
            for k in rd.kraus:
                if k.shape != (d, d):
                    raise DimensionMismatch(f"round at party {rd.party}: Kraus shape {k.shape}")
            for corr in rd.corrections:
                for j, u in corr.items():
                    dj = 2 ** len(self.graph.party_qubits(j))
                    if np.shape(u) != (dj, dj):
                        raise DimensionMismatch(f"correction for party {j} has shape {np.shape(u)}")

    def validate(self, tol: float = POVM_TOL) -> tuple[bool, float]:
        """POVM completeness of every round and unitarity of every correction."""
        self.check_supports()
        worst = 0.0
        for rd in self.rounds:
            worst = max(worst, validate_povm(rd, tol)[1])
            for corr in rd.corrections:
                for u in corr.values():
                    worst = max(worst, float(np.linalg.norm(T.dagger(u) @ u - np.eye(u.shape[0]))))
        return worst < tol, worst

    def to_json(self) -> dict:
        from .io import encode_matrix

        return {
            "graph": self.graph.to_json(),
            "rounds": [
                {
                    "party": rd.party,
                    "label": rd.label,
                    "kraus": [encode_matrix(k) for k in rd.kraus],
                    "corrections": {
                        str(i): {str(j): encode_matrix(u) for j, u in corr.items()}
                        for i, corr in enumerate(rd.corrections)
                        if corr
                    },
                }
                for rd in self.rounds
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, graph: NetworkGraph | None = None) -> "LoccProtocol":
        from .io import decode_matrix

        try:
            graph = graph or NetworkGraph.from_json(data["graph"])
            rounds = []
            for rd in data["rounds"]:
                j = int(rd["party"])
                d = 2 ** len(graph.party_qubits(j))
                kraus = [decode_matrix(k, (d, d)) for k in rd["kraus"]]
                corr = [{} for _ in kraus]
                for i, m in rd.get("corrections", {}).items():
                    for p, u in m.items():
                        dp = 2 ** len(graph.party_qubits(int(p)))
                        corr[int(i)][int(p)] = decode_matrix(u, (dp, dp))
                rounds.append(Round(j, kraus, corr, rd.get("label", "")))
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed protocol: {exc}") from None
        return cls(graph, rounds)


def validate_povm(rd: Round, tol: float = POVM_TOL) -> tuple[bool, float]:
    ks = rd.kraus
    total = sum(T.dagger(k) @ k for k in ks)
    res = float(np.linalg.norm(total - np.eye(total.shape[0])))
    return res < tol, res


@dataclass
class BranchResult:
    outcomes: tuple[int, ...]
    probability: float
    state: T.PureState
    fidelity: float | None = None
    phase: complex = 1.0

    def to_json(self) -> dict:
        return {
            "outcomes": list(self.outcomes),
            "probability": self.probability,
            "fidelity": self.fidelity,
            "phase": [float(np.real(self.phase)), float(np.imag(self.phase))],
        }


def _apply_party(vec, op, graph: NetworkGraph, j: int, reg: T.QubitRegister):
    return T.apply_operator(vec, op, reg.positions(graph.party_qubits(j)), len(reg))


def simulate(
    protocol: LoccProtocol,
    initial: T.PureState,
    mode: str = "exhaustive",
    seed: int | None = None,
    samples: int = 64,
    target: np.ndarray | None = None,
    validate: bool = True,
    tol: float = POVM_TOL,
) -> list[BranchResult]:
    """Run every outcome path (``exhaustive``) or Born-sampled paths (``sampled``).

    States are renormalized after each Kraus operator. Sibling probabilities
    are checked to sum to the parent's within 1e-10 when ``validate`` is set.
    """
    if validate:
        ok, res = protocol.validate(tol)
        if not ok:
            raise PovmInvalid("protocol does not validate", res)
    graph = protocol.graph
    reg = initial.register
    if reg != graph.register:
        raise DimensionMismatch("initial state register does not match the protocol graph")
    if mode == "exhaustive":
        count = 1
        for rd in protocol.rounds:
            count *= len(rd.kraus)
        if count > MAX_BRANCHES:
            raise InputError(f"{count} branches exceed the exhaustive cap; use sampled mode")
        branches = [((), 1.0, initial.normalized().amplitudes)]
        for rd in protocol.rounds:
            nxt_br = []
            for outs, p, vec in branches:
                kids = _children(rd, vec, graph, reg)
                tot = sum(q for _, q, _ in kids)
                if validate and abs(tot - 1) > 1e-10:
                    raise PovmInvalid("branch probabilities do not sum to one", abs(tot - 1))
                for i, q, v in kids:
                    if q * p > PRUNE:
                        nxt_br.append((outs + (i,), p * q, v))
            branches = nxt_br
        runs = branches
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        runs = []
        for _ in range(samples):
            outs, p, vec = (), 1.0, initial.normalized().amplitudes
            for rd in protocol.rounds:
                kids = _children(rd, vec, graph, reg)
                qs = np.array([q for _, q, _ in kids])
                pick = rng.choice(len(kids), p=qs / qs.sum())
                i, q, vec = kids[pick]
                outs, p = outs + (i,), p * q
            runs.append((outs, p, vec))
    else:
        raise InputError(f"unknown mode {mode!r}")
    out = []
    for outs, p, vec in runs:
        fid, ph = None, 1.0
        if target is not None:
            ov = np.vdot(target / np.linalg.norm(target), vec)
            fid = float(abs(ov))
            ph = ov / abs(ov) if abs(ov) > 0 else 1.0
        out.append(BranchResult(outs, float(p), T.PureState(reg, vec), fid, ph))
    return out


def _children(rd: Round, vec, graph, reg):
    kids = []
    for i, k in enumerate(rd.kraus):
        v = _apply_party(vec, k, graph, rd.party, reg)
        q = float(np.vdot(v, v).real)
        if q <= 0:
            continue
        v = v / math.sqrt(q)
        for j, u in rd.corrections[i].items():
            v = _apply_party(v, u, graph, j, reg)
        kids.append((i, q, v))
    return kids


def determinism(branches: Sequence[BranchResult]) -> float:
    """Largest pairwise infidelity 1 - |<a|b>| among final branch states (vs the first)."""
    if not branches:
        return 0.0
    ref = branches[0].state.amplitudes
    # equal-up-to-phase is transitive within tolerance, comparing to one reference suffices
    return max(1 - T.fidelity(b.state.amplitudes, ref) for b in branches)


def states_equal_up_to_phase(s1: T.PureState, s2: T.PureState, tol: float = 1e-8) -> tuple[bool, float]:
    if s1.register != s2.register:
        raise DimensionMismatch("states live on different registers")
    f = T.fidelity(s1.amplitudes, s2.amplitudes)
    return f >= 1 - tol, f


# --- gauge and simple protocol ---------------------------------------------


def role_party(k: int, r: int, n: int) -> int:
    """Party playing role ``r`` when ``k`` plays role 1."""
    return (k - 1 + r - 1) % n + 1


def _slot_op(op: np.ndarray, slot: int) -> np.ndarray:
    return np.kron(op, T.I2) if slot == 0 else np.kron(T.I2, op)


def _tr2(h: np.ndarray) -> np.ndarray:
    return np.einsum("ajbj->ab", h.reshape(2, 2, 2, 2))


def gauge_normalize(spec: TargetSpec, k: int = 1, transport_a: np.ndarray | None = None, tol: float = 1e-9):
    """Use edge symmetries to make the Pauli-broadcast rounds complete.

    Parties in roles 2..N-1 (role 1 is ``k``) get a unit-determinant gauge
    ``Y`` on the edge towards the next role with ``tr_2 H_j' ~ 1``; for role 2
    the slot facing ``k`` is first dressed with ``transport(a)``. The partner
    of each gauge is absorbed by the next party. Party ``k`` is untouched.

    Returns ``(gauged_spec, gauges)`` with ``gauges`` mapping edge -> Y.
    """
    n = spec.graph.require_cycle()
    src = spec.graph.source
    roots = dict(spec.roots)
    q = np.eye(2, dtype=complex) if transport_a is None else transport(transport_a, src)
    gauges = {}
    for r in range(2, n):
        j = role_party(k, r, n)
        h = roots[j]
        hh = T.dagger(h) @ h
        if r == 2:
            dq = _slot_op(q, 1)
            hh = T.dagger(dq) @ hh @ dq
        m = _tr2(hh)
        if not T.is_positive_definite(m, 1e-14):
            raise GaugeFailure("reduced operator is not positive definite", j)
        y, _ = T.det_normalize(T.inv_sqrtm_pd(m))
        gauges[j] = y
        roots[j] = h @ _slot_op(y, 0)
        nj = nxt(j, n)
        roots[nj] = roots[nj] @ _slot_op(partner(y, src), 1)
        # verify the condition that makes the round complete
        chk = T.dagger(roots[j]) @ roots[j]
        if r == 2:
            chk = T.dagger(dq) @ chk @ dq
        red = _tr2(chk)
        res = T.projective_distance(red, T.I2)
        if res > tol:
            raise GaugeFailure(f"partial trace condition left residual {res:.2e}", j)
    return spec.with_roots(roots), gauges


def gauge_residuals(spec: TargetSpec, k: int, transport_a: np.ndarray | None = None) -> dict[int, float]:
    """Distance of each relevant partial trace from a multiple of the identity."""
    n = spec.graph.require_cycle()
    q = np.eye(2, dtype=complex) if transport_a is None else transport(transport_a, spec.graph.source)
    out = {}
    for r in range(2, n):
        j = role_party(k, r, n)
        hh = spec.H(j)
        if r == 2:
            dq = _slot_op(q, 1)
            hh = T.dagger(dq) @ hh @ dq
        out[j] = T.projective_distance(_tr2(hh), T.I2)
    return out


def _normalize_round(kraus: list[np.ndarray], party: int, tol: float = 1e-9) -> list[np.ndarray]:
    total = sum(T.dagger(k) @ k for k in kraus)
    s = np.trace(total).real / total.shape[0]
    res = float(np.linalg.norm(total / s - np.eye(total.shape[0])))
    if res > tol:
        raise PovmInvalid(f"round at party {party} is not proportional to a complete POVM", res)
    return [k / math.sqrt(s) for k in kraus]


def _correction(h: np.ndarray, s: np.ndarray, party: int, tol: float = 1e-8) -> np.ndarray:
    v = h @ s @ np.linalg.inv(h)
    lam = np.trace(T.dagger(v) @ v).real / v.shape[0]
    v = v / math.sqrt(lam)
    res = float(np.linalg.norm(T.dagger(v) @ v - np.eye(v.shape[0])))
    if res > tol:
        raise CorrectionNotUnitary(party, res)
    return v


def build_simple_protocol(
    spec: TargetSpec,
    k: int,
    a: np.ndarray,
    b: np.ndarray,
    mixing: MixingSolution,
    original: TargetSpec | None = None,
) -> LoccProtocol:
    """Protocol in which every party measures once, ending with party ``k``.

    ``spec`` must be gauge normalized for ``(k, a)``; ``original`` is the
    target before gauging and is used for the final corrections, which do not
    depend on the gauge. ``mixing`` solves the final-round condition for
    ``G_k = a^dag a (x) b^dag b``.
    """
    graph = spec.graph
    n = graph.require_cycle()
    src = graph.source
    base = original or spec
    paulis = T.PAULIS
    rounds: list[Round] = []

    def undo(op):
        return np.linalg.inv(transport(op, src))

    # role N: full two-qubit twirl dressed with transport(b) on the edge towards k
    jn = role_party(k, n, n)
    rop = transport(b, src)
    hn = spec.roots[jn]
    kraus, corr = [], []
    for i in range(4):
        for l in range(4):
            kraus.append(hn @ np.kron(rop @ paulis[i], paulis[l]))
            c = {}
            c[k] = _slot_op(undo(paulis[i]), 1)
            jm = role_party(k, n - 1, n)
            u = _slot_op(undo(paulis[l]), 0)
            c[jm] = c[jm] @ u if jm in c else u
            corr.append(c)
    rounds.append(Round(jn, _normalize_round(kraus, jn), corr, "twirl"))

    # roles N-1 .. 3: Pauli broadcast towards the previous role
    for r in range(n - 1, 2, -1):
        j = role_party(k, r, n)
        jm = role_party(k, r - 1, n)
        h = spec.roots[j]
        kraus = [h @ _slot_op(p, 1) for p in paulis]
        corr = [{jm: _slot_op(undo(p), 0)} for p in paulis]
        rounds.append(Round(j, _normalize_round(kraus, j), corr, "broadcast"))

    # role 2: broadcast dressed with transport(a)
    j2 = role_party(k, 2, n)
    q = transport(a, src)
    h = spec.roots[j2]
    kraus = [h @ _slot_op(q @ p, 1) for p in paulis]
    corr = [{k: _slot_op(undo(p), 0)} for p in paulis]
    rounds.append(Round(j2, _normalize_round(kraus, j2), corr, "dressed broadcast"))

    # final round at k
    hk = spec.roots[k]
    ab_inv = np.linalg.inv(np.kron(a, b))
    kraus, corr = [], []
    for p_i, (x1, x2), sym in zip(mixing.p, mixing.pairs, mixing.symmetries):
        kraus.append(math.sqrt(p_i) * hk @ np.kron(x1, x2) @ ab_inv)
        c = {}
        for j in graph.nodes:
            if j == k:
                continue
            c[j] = _correction(base.roots[j], sym.on_party(graph, j), j)
        corr.append(c)
    rounds.append(Round(k, _normalize_round(kraus, k), corr, "final"))
    return LoccProtocol(graph, rounds)


# --- two-measurement example on the triangle --------------------------------


def _check_appendix_d(a_pairs, c, alpha1):
    for j, (x, y) in enumerate(a_pairs, start=1):
        if x == 0 or y == 0:
            raise ParameterConstraintViolated(f"party {j}: coefficients must be nonzero")
        if abs(abs(x) - abs(y)) < 1e-12:
            raise ParameterConstraintViolated(f"party {j}: need a1 != +-a2")
        if min(1 + x - y, 1 - x + y, 1 - x - y, 1 + x + y) <= 0:
            raise ParameterConstraintViolated(f"party {j}: H is not positive definite")
    if c == 0:
        raise ParameterConstraintViolated("c must be nonzero")
    if abs(c) >= 1:
        raise ParameterConstraintViolated("H_3 is not positive definite")
    m = alpha1 / (math.pi / 4)
    if abs(m - round(m)) < 1e-12:
        raise ParameterConstraintViolated("alpha1 must not be a multiple of pi/4")


def appendix_d_spec(a_pairs=((0.2, 0.4), (0.2, 0.4)), c: float = 0.5, alpha1: float = math.pi / 8) -> TargetSpec:
    _check_appendix_d(a_pairs, c, alpha1)
    graph = NetworkGraph.cycle(3, PHI_PLUS)
    xx, yy, zz = (np.kron(s, s) for s in (T.SX, T.SY, T.SZ))
    ops = {j: np.eye(4) + x * xx + y * yy for j, (x, y) in enumerate(a_pairs, start=1)}
    u1 = math.cos(alpha1) * T.I2 + 1j * math.sin(alpha1) * T.SX
    uu = np.kron(u1, u1)
    ops[3] = T.dagger(uu) @ (np.eye(4) + c * zz) @ uu
    return TargetSpec.from_operators(graph, ops)


def build_appendix_d_protocol(a_pairs=((0.2, 0.4), (0.2, 0.4)), c: float = 0.5, alpha1: float = math.pi / 8):
    """Triangle target and the protocol in which party 3 measures twice.

    Rounds: party 3 with ``{h~, h~ (1 x sigma_y)} / sqrt(2)`` where
    ``h~ = sqrt(1 + c~ zz)``, then parties 1 and 2 with a sigma_z flip on the
    qubit facing party 3, then party 3 with ``h_3 (s_i x s_i) h~^{-1} / sqrt(2)``
    for ``i = 0, 3``. The last measurement is left unscaled so that
    :func:`validate_povm` reports its true completeness residual; it is
    nonzero whenever ``H_3`` has a ``yy`` component (``c_yy`` in the returned
    info), i.e. for every admissible ``alpha1``.
    """
    spec = appendix_d_spec(a_pairs, c, alpha1)
    graph = spec.graph
    src = graph.source
    yy, zz = np.kron(T.SY, T.SY), np.kron(T.SZ, T.SZ)
    ct = np.trace(spec.H(3) @ zz).real / 4
    cy = np.trace(spec.H(3) @ yy).real / 4
    ht = T.sqrtm_psd(np.eye(4) + ct * zz)
    s = 1 / math.sqrt(2)

    def undo(op):
        return np.linalg.inv(transport(op, src))

    rounds = [
        Round(3, [s * ht, s * ht @ _slot_op(T.SY, 1)], [{}, {2: _slot_op(undo(T.SY), 0)}], "party 3, first"),
        # party 1 faces party 3 through slot 2, party 2 through slot 1
        Round(1, [s * spec.roots[1], s * spec.roots[1] @ _slot_op(T.SZ, 1)], [{}, {3: _slot_op(undo(T.SZ), 0)}], "party 1"),
        Round(2, [s * spec.roots[2], s * spec.roots[2] @ _slot_op(T.SZ, 0)], [{}, {3: _slot_op(undo(T.SZ), 1)}], "party 2"),
    ]
    ht_inv = np.linalg.inv(ht)
    kraus, corr = [], []
    for p in (T.I2, T.SZ):
        pp = np.kron(p, p)
        kraus.append(s * spec.roots[3] @ pp @ ht_inv)
        corr.append({j: _correction(spec.roots[j], pp, j) for j in (1, 2)})
    rounds.append(Round(3, kraus, corr, "party 3, final"))
    return spec, LoccProtocol(graph, rounds), {"c_tilde": float(ct), "c_yy": float(cy)}
