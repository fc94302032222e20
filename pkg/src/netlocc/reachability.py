"""Decision procedures for deterministic LOCC reachability on cycle networks.

A target is described by one positive operator ``H_j = h_j^dag h_j`` per party
(on the party's two cycle qubits, in slot order). The procedures here

* test the separable-mixing condition ``sum_i p_i S_i^dag H S_i = r 1`` on a
  finite candidate set of network symmetries,
* certify unreachability for ``H_j = 1/4 + alpha_j zz`` when
  ``prod alpha_j > 0``,
* propagate the local stabilizers of the parties ``j != k`` around the cycle
  to get the symmetries usable in a final measurement by party ``k``, and
* decide whether a protocol in which every party measures only once exists.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from . import tensor as T
from .errors import (
    DetNotOne,
    EmptyCandidateSet,
    InputError,
    NetLoccError,
    NotPositiveDefinite,
)
from .network import (
    PHI_PLUS,
    EdgeSymmetry,
    NetworkGraph,
    build_network_state,
    partner,
    verify_symmetry,
)
from .standard_form import (
    DEGENERACY_TOL,
    StabilizerGroup,
    bell_diagonalize,
    stabilizer,
)

MEMBERSHIP_TOL = 1e-9
MAX_SOLUTIONS = 8
MAX_BRANCHES = 64
DESIGN_CAP = 4096


class Status(str, enum.Enum):
    UNREACHABLE = "Unreachable"
    SIMPLE_REACHABLE = "SimpleReachable"
    NOT_SIMPLE_REACHABLE = "NotSimpleReachable"
    INCONCLUSIVE = "Inconclusive"


# --- target -------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSpec:
    """Per-party roots ``h_j`` on a network; ``H_j = h_j^dag h_j``."""

    graph: NetworkGraph
    roots: Mapping[int, np.ndarray]
    target_state: np.ndarray | None = None

    def __post_init__(self):
        roots = {}
        for j in self.graph.nodes:
            if j not in self.roots:
                raise InputError(f"no operator for party {j}")
            h = np.asarray(self.roots[j], dtype=complex)
            d = 2 ** len(self.graph.party_qubits(j))
            if h.shape != (d, d):
                raise InputError(f"party {j}: operator shape {h.shape}, expected {(d, d)}")
            if abs(np.linalg.det(h)) < 1e-12:
                raise NotPositiveDefinite(f"party {j}: operator is singular")
            roots[int(j)] = h
        object.__setattr__(self, "roots", roots)
        if self.target_state is not None:
            want = self.state().amplitudes
            got = np.asarray(self.target_state, dtype=complex)
            if got.shape != want.shape or T.fidelity(got, want) < 1 - 1e-9:
                raise InputError("explicit target state disagrees with the party operators")

    @classmethod
    def from_operators(cls, graph: NetworkGraph, ops: Mapping[int, np.ndarray], tol: float = T.DEFAULT_TOL):
        roots = {}
        for j, h in ops.items():
            h = np.asarray(h, dtype=complex)
            if not T.is_positive_definite(h, tol):
                raise NotPositiveDefinite(f"party {j}: H is not positive definite")
            roots[j] = T.sqrtm_psd(h)
        return cls(graph, roots)

    def H(self, j: int) -> np.ndarray:
        h = self.roots[j]
        return T.dagger(h) @ h

    @property
    def n(self) -> int:
        return len(self.graph.nodes)

    def state(self) -> T.PureState:
        psi = build_network_state(self.graph)
        for j, h in self.roots.items():
            psi = psi.apply(h, self.graph.party_qubits(j))
        return psi.normalized()

    def with_roots(self, roots: Mapping[int, np.ndarray]) -> "TargetSpec":
        return TargetSpec(self.graph, {**self.roots, **roots})

    def to_json(self) -> dict:
        from .io import encode_matrix

        return {
            "graph": self.graph.to_json(),
            "parties": {str(j): {"h": encode_matrix(h)} for j, h in sorted(self.roots.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "TargetSpec":
        from .io import decode_matrix

        try:
            graph = NetworkGraph.from_json(data["graph"])
            parties = data["parties"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed target: missing {exc}") from None
        roots = {}
        for key, entry in parties.items():
            j = int(key)
            if j not in graph.nodes:
                raise InputError(f"party {j} is not a node of the graph")
            d = 2 ** len(graph.party_qubits(j))
            if "h" in entry:
                roots[j] = decode_matrix(entry["h"], (d, d))
            elif "H" in entry:
                h = decode_matrix(entry["H"], (d, d))
                if not T.is_hermitian(h, 1e-9):
                    raise InputError(f"party {j}: H is not Hermitian")
                if not T.is_positive_definite(h, 1e-12):
                    raise NotPositiveDefinite(f"party {j}: H is not positive definite")
                roots[j] = T.sqrtm_psd(h)
            else:
                raise InputError(f"party {j}: expected 'h' or 'H'")
        state = None
        if "target_state" in data:
            state = decode_matrix(data["target_state"])
        return cls(graph, roots, state)


def nxt(j: int, n: int) -> int:
    return j % n + 1


def prv(j: int, n: int) -> int:
    return (j - 2) % n + 1


# --- mixing solution / verdict -------------------------------------------------


@dataclass
class MixingSolution:
    """Weights ``p`` over network symmetries with ``sum p_i S_i^dag H_k S_i = r G_k``.

    ``pairs`` holds the restriction of each symmetry to party ``k`` in slot
    order (towards k+1, towards k-1).
    """

    k: int
    symmetries: list[EdgeSymmetry]
    pairs: list[tuple[np.ndarray, np.ndarray]]
    p: np.ndarray
    r: float
    g: np.ndarray
    residual: float

    def to_json(self) -> dict:
        from .io import encode_matrix

        return {
            "k": self.k,
            "p": [float(x) for x in self.p],
            "r": float(self.r),
            "G": encode_matrix(self.g),
            "pairs": [[encode_matrix(a), encode_matrix(b)] for a, b in self.pairs],
            "symmetries": [
                {str(e): encode_matrix(x) for e, x in s.assignment.items()} for s in self.symmetries
            ],
            "residual": float(self.residual),
        }


@dataclass
class Verdict:
    status: Status
    party_k: int | None = None
    mixing: MixingSolution | None = None
    obstruction: dict | None = None
    protocol: object | None = None
    residuals: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    exactness: dict = field(default_factory=dict)
    factors: tuple[np.ndarray, np.ndarray] | None = None

    def to_json(self) -> dict:
        from .io import encode_matrix

        out = {
            "status": self.status.value,
            "party_k": self.party_k,
            "mixing": self.mixing.to_json() if self.mixing else None,
            "obstruction": self.obstruction,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "notes": list(self.notes),
            "exactness": {str(k): v for k, v in self.exactness.items()},
        }
        if self.factors is not None:
            out["A"] = encode_matrix(self.factors[0])
            out["B"] = encode_matrix(self.factors[1])
        return out


# --- small LP helpers --------------------------------------------------------


def _simplex_feasible(cols: np.ndarray, rhs: np.ndarray | None = None, free_scale: np.ndarray | None = None):
    """Find w >= 0, sum w = 1 with cols @ w = s * free_scale (s free) or = rhs.

    Returns ``(w, s)`` or ``None``.
    """
    m, n = cols.shape
    a_eq = [cols]
    extra = 0
    if free_scale is not None:
        a_eq = [np.hstack([cols, -free_scale[:, None]])]
        extra = 1
    a_eq = np.vstack(a_eq + [np.hstack([np.ones(n), np.zeros(extra)])])
    b = np.zeros(m) if rhs is None else np.asarray(rhs, dtype=float)
    b_eq = np.concatenate([b, [1.0]])
    bounds = [(0, None)] * n + [(None, None)] * extra
    res = linprog(np.zeros(n + extra), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    x = res.x
    return _polish(cols, x[:n], free_scale, rhs)


def _polish(cols, w, free_scale, rhs):
    """Re-solve on the support by least squares to push residuals to round-off."""
    supp = np.flatnonzero(w > 1e-11)
    if supp.size == 0:
        return None
    a = cols[:, supp]
    m = a.shape[0]
    if free_scale is not None:
        a = np.hstack([a, -free_scale[:, None]])
    a = np.vstack([a, np.concatenate([np.ones(supp.size), np.zeros(a.shape[1] - supp.size)])])
    b = np.concatenate([np.zeros(m) if rhs is None else rhs, [1.0]])
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    ws = x[: supp.size]
    if ws.min() < -1e-12:
        ws = w[supp]
        x = np.concatenate([ws, x[supp.size :]])
    out = np.zeros_like(w)
    out[supp] = np.clip(ws, 0, None)
    out /= out.sum()
    s = float(x[-1]) if free_scale is not None else 0.0
    return out, s


def _separator(cols: np.ndarray):
    """L, t maximizing t with <L, col_i> >= t for all i and |L|_inf <= 1."""
    m, n = cols.shape
    # variables (L, t); minimize -t; -cols^T L + t <= 0
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-cols.T, np.ones((n, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), bounds=[(-1, 1)] * m + [(None, 1)], method="highs")
    if res.status != 0:
        return None, 0.0
    return res.x[:m], float(res.x[-1])


def _herm_vec(op: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix (Pauli coefficients, flattened)."""
    n = int(round(math.log2(op.shape[0])))
    if n == 2:
        return T.pauli_coefficients(op).reshape(-1)
    return np.concatenate([op.real.reshape(-1), op.imag.reshape(-1)])


# --- SEP condition and the zz-cycle certificate ---------------------------


def _party_pauli_vectors(spec: TargetSpec, sym: EdgeSymmetry) -> list[np.ndarray]:
    out = []
    for j in spec.graph.nodes:
        s = sym.on_party(spec.graph, j)
        m = T.dagger(s) @ spec.H(j) @ s
        if m.shape == (4, 4):
            out.append(T.pauli_coefficients(m).reshape(-1))
        else:
            out.append(np.concatenate([m.real.reshape(-1), m.imag.reshape(-1)]))
    return out


def check_sep_condition(spec: TargetSpec, symmetries: Sequence[EdgeSymmetry], tol: float = T.DEFAULT_TOL, verify: bool = True):
    """LP for ``sum_i p_i S_i^dag H S_i = r 1`` over a finite list of symmetries.

    Returns ``(feasible, p, r, residual)``; ``p`` and ``r`` are ``None`` when
    infeasible.
    """
    if not symmetries:
        raise EmptyCandidateSet("no symmetries given")
    if verify:
        for s in symmetries:
            ok, res = verify_symmetry(s, spec.graph)
            if not ok:
                raise InputError(f"candidate is not a symmetry (residual {res:.2e})")
    id_vecs = []
    for j in spec.graph.nodes:
        d = 2 ** len(spec.graph.party_qubits(j))
        id_vecs.append(_herm_vec(np.eye(d, dtype=complex)))
    per_cand = [_party_pauli_vectors(spec, s) for s in symmetries]
    # keep, per party, only coordinates that are ever nonzero; the tensor
    # product of the restricted vectors drops exactly the all-zero rows
    supports = []
    for j in range(len(id_vecs)):
        stack = np.array([vecs[j] for vecs in per_cand] + [id_vecs[j]])
        supports.append(np.flatnonzero(np.abs(stack).max(axis=0) > 1e-14))
    target = T.kron(*[v[sup][None, :] for v, sup in zip(id_vecs, supports)]).reshape(-1).real
    cols = np.array(
        [T.kron(*[v[sup][None, :] for v, sup in zip(vecs, supports)]).reshape(-1).real for vecs in per_cand]
    ).T
    keep = np.flatnonzero((np.abs(cols).max(axis=1) > 1e-14) | (np.abs(target) > 0))
    cols, target = cols[keep], target[keep]
    scale = np.abs(cols).max()
    sol = _simplex_feasible(cols / scale, free_scale=target)
    if sol is None:
        return False, None, None, float("inf")
    w, s = sol
    r = s * scale
    res = float(np.linalg.norm(cols @ w - r * target) / np.linalg.norm(cols, axis=0).max())
    if r <= 0 or res > max(tol, 1e-9):
        return False, None, None, res
    return True, w, r, res


def pauli_grid_symmetries(graph: NetworkGraph) -> list[EdgeSymmetry]:
    """All assignments of a Pauli (or identity) to every edge."""
    edges = [e for e, _ in graph.edges]
    ps = [T.I2, 1j * T.SX, 1j * T.SY, 1j * T.SZ]
    return [EdgeSymmetry(dict(zip(edges, combo)), graph.source) for combo in itertools.product(ps, repeat=len(edges))]


def observation2_certificate(alphas: Sequence[float], tol: float = T.DEFAULT_TOL) -> Verdict:
    """Unreachability certificate for ``H_j = 1/4 + alpha_j zz`` on a singlet cycle."""
    alphas = [float(a) for a in alphas]
    if any(abs(a) >= 0.25 for a in alphas):
        raise NotPositiveDefinite("need |alpha_j| < 1/4")
    prod = float(np.prod(alphas))
    obs = {"alphas": alphas, "product": prod, "N": len(alphas)}
    if prod > tol:
        return Verdict(Status.UNREACHABLE, obstruction=obs, notes=["product of alphas is positive"])
    return Verdict(Status.INCONCLUSIVE, obstruction=obs, notes=["certificate does not apply"])


def obstruction_value(x: np.ndarray, alphas: Sequence[float], tol: float = T.DEFAULT_TOL) -> float:
    x = np.asarray(x, dtype=complex)
    if abs(np.linalg.det(x) - 1) > tol:
        raise DetNotOne(f"det(x) = {np.linalg.det(x):.6g}")
    a, b, c, d = (abs(v) ** 2 for v in x.reshape(-1))
    n = len(alphas)
    return float(((a + b + c + d) ** 2 - 4) / 4**n + (((a + c) - (b + d)) ** 2 + 4) * np.prod(alphas))


def observation2_alphas(spec: TargetSpec, tol: float = T.DEFAULT_TOL) -> list[float] | None:
    """``alpha_j`` in the singlet frame if every ``H_j`` is ``c (1/4 + alpha_j zz)``, else ``None``."""
    spec.graph.require_cycle()
    out = []
    for j in spec.graph.nodes:
        c = T.pauli_coefficients(spec.H(j))
        zz = c[3, 3]
        rest = c.copy()
        rest[0, 0] = rest[3, 3] = 0
        if np.abs(rest).max() > tol * c[0, 0]:
            return None
        a = zz / (4 * c[0, 0])
        if spec.graph.source == PHI_PLUS:
            # moving to singlets puts a sigma_y on one end of every edge
            a = -a
        out.append(float(a))
    return out


# --- final-round symmetry families ------------------------------------------


@dataclass
class Branch:
    """One parametrized component: theta -> {edge: X_e}."""

    nparams: int
    fn: Callable[[np.ndarray], dict[int, np.ndarray]]
    tags: tuple[str, ...] = ()

    def __call__(self, theta: Sequence[float] = ()) -> dict[int, np.ndarray]:
        return self.fn(np.asarray(theta, dtype=float))


@dataclass
class Family:
    k: int
    spec: TargetSpec
    branches: list[Branch]
    exact: bool = True
    notes: list[str] = field(default_factory=list)

    def assignment(self, b: Branch, theta=()) -> dict[int, np.ndarray]:
        return b(theta)

    def symmetry(self, b: Branch, theta=()) -> EdgeSymmetry:
        return EdgeSymmetry(b(theta), self.spec.graph.source)

    def induced(self, b: Branch, theta=()) -> tuple[np.ndarray, np.ndarray]:
        """Restriction to party k in slot order."""
        n = self.spec.n
        x = b(theta)
        return x[self.k], partner(x[prv(self.k, n)], self.spec.graph.source)

    def induced_op(self, b: Branch, theta=()) -> np.ndarray:
        a, c = self.induced(b, theta)
        return np.kron(a, c)

    @property
    def max_dim(self) -> int:
        return max((b.nparams for b in self.branches), default=0)

    def samples(self, rng: np.random.Generator, per_branch: int = 4):
        for b in self.branches:
            for _ in range(per_branch if b.nparams else 1):
                yield b, rng.uniform(-np.pi, np.pi, b.nparams)


def _dnorm(x: np.ndarray) -> np.ndarray:
    return T.det_normalize(x)[0]


def _dependence(f: Callable[[np.ndarray], np.ndarray], d: int, rng: np.random.Generator) -> list[int]:
    """Coordinates on which ``f`` actually depends (projectively)."""
    base = rng.uniform(-np.pi, np.pi, d)
    f0 = f(base)
    dep = []
    for i in range(d):
        for step in (0.7, 2.1):
            t = base.copy()
            t[i] += step
            if T.projective_distance(f(t), f0) > 1e-9:
                dep.append(i)
                break
    return dep


def _grid(d: int) -> np.ndarray:
    per = {1: 16, 2: 8, 3: 4}.get(d, 4)
    axis = np.arange(per) * (2 * np.pi / per)
    return np.array(list(itertools.product(axis, repeat=d))).reshape(-1, d)


def _local_minima(vals: np.ndarray, d: int) -> list[int]:
    """Indices of grid points not larger than any axis neighbour (periodic grid)."""
    per = round(len(vals) ** (1 / d))
    v = vals.reshape((per,) * d)
    mask = np.ones_like(v, dtype=bool)
    for ax in range(d):
        mask &= (v <= np.roll(v, 1, ax)) & (v <= np.roll(v, -1, ax))
    idx = np.flatnonzero(mask.reshape(-1))
    return sorted(idx, key=lambda i: vals[i])[:16]


def _special_points(res: Callable[[np.ndarray], float], d: int, tol: float):
    """Zeros of a nonnegative residual on the d-torus (d <= 2) by grid + Nelder-Mead.

    Returns ``(points, isolated)``.
    """
    grid = _grid(d)
    vals = np.array([res(g) for g in grid])
    order = _local_minima(vals, d)
    pts = []
    isolated = True
    for i in order:
        r = minimize(res, grid[i], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
        if r.fun > tol:
            continue
        p = np.mod(r.x + np.pi, 2 * np.pi) - np.pi
        if any(np.linalg.norm(np.angle(np.exp(1j * (p - q)))) < 1e-5 for q in pts):
            continue
        pts.append(p)
        # a zero set that extends along some direction is not a finite point set
        for direction in np.eye(d):
            if res(p + 1e-3 * direction) < tol:
                isolated = False
    return pts, isolated


def final_round_candidates(spec: TargetSpec, k: int, tol: float = MEMBERSHIP_TOL, seed: int = 7,
                           degeneracy_tol: float = DEGENERACY_TOL) -> Family:
    """Edge assignments whose restriction to every party ``j != k`` stabilizes ``H_j``."""
    n = spec.graph.require_cycle()
    src = spec.graph.source
    rng = np.random.default_rng(seed)
    groups: dict[int, StabilizerGroup] = {}
    for j in spec.graph.nodes:
        if j != k:
            groups[j] = stabilizer(bell_diagonalize(spec.H(j), degeneracy_tol=degeneracy_tol))
    fam = Family(k, spec, [])

    s = nxt(k, n)
    g = groups[s]
    for comp in g.components:
        def start(theta, comp=comp, g=g, s=s):
            x, y = g.element(comp, theta[: comp.nparams])
            return {s: _dnorm(x), prv(s, n): _dnorm(partner(y, src))}

        fam.branches.append(Branch(comp.nparams, start, (f"{s}:{comp.name}",)))

    j = nxt(s, n)
    while j != k:
        g = groups[j]
        new: list[Branch] = []
        for b in fam.branches:
            new.extend(_extend(b, g, j, n, src, tol, rng, fam))
        fam.branches = new
        if len(new) > MAX_BRANCHES:
            fam.exact = False
            fam.notes.append(f"branch cap reached at party {j}")
            fam.branches = new[:MAX_BRANCHES]
        j = nxt(j, n)
    return fam


def _extend(b: Branch, g: StabilizerGroup, j: int, n: int, src: str, tol: float, rng, fam: Family) -> list[Branch]:
    e_in = prv(j, n)

    def y_of(theta):
        return partner(b(theta)[e_in], src)

    def member(theta):
        return g.membership(y_of(theta))

    def make(fixed_idx=(), fixed_val=()):
        fixed_idx = list(fixed_idx)
        free = [i for i in range(b.nparams) if i not in fixed_idx]

        def full(theta):
            t = np.zeros(b.nparams)
            t[free] = theta[: len(free)]
            t[fixed_idx] = fixed_val
            return t

        m0 = member(full(np.zeros(b.nparams)))
        extra = m0.nparams

        def fn(theta, full=full):
            t = full(theta)
            x = b(t)
            m = member(t)
            xt = m.component(theta[len(free) : len(free) + extra])
            out = dict(x)
            out[j] = _dnorm(g.m_filter @ xt @ np.linalg.inv(g.m_filter))
            return out

        return Branch(len(free) + extra, fn, b.tags + (f"{j}:{m0.component.name}",))

    if b.nparams == 0:
        return [make()] if member(np.zeros(0)).residual < tol else []
    thetas = [rng.uniform(-np.pi, np.pi, b.nparams) for _ in range(4)]
    res = [member(t).residual for t in thetas]
    if max(res) < tol:
        return [make()]
    dep = _dependence(y_of, b.nparams, rng)
    if not dep:
        return []
    if len(dep) > 2:
        fam.exact = False
        fam.notes.append(f"party {j}: constraint depends on {len(dep)} parameters")
        return []
    rest = thetas[0]

    def r_sub(v):
        t = rest.copy()
        t[dep] = v
        return member(t).residual

    pts, isolated = _special_points(r_sub, len(dep), tol)
    if not isolated or len(pts) > MAX_SOLUTIONS:
        fam.exact = False
        fam.notes.append(f"party {j}: special set is not a small finite set")
    return [make(dep, p) for p in pts[:MAX_SOLUTIONS]]


def verify_family(fam: Family, rng: np.random.Generator, per_branch: int = 4) -> float:
    """Largest stabilizer residual over sampled members, for every party ``j != k``."""
    worst = 0.0
    graph = fam.spec.graph
    for b, theta in fam.samples(rng, per_branch):
        sym = fam.symmetry(b, theta)
        for j in graph.nodes:
            if j == fam.k:
                continue
            s = sym.on_party(graph, j)
            worst = max(worst, _prop_res(fam.spec.H(j), s))
    return worst


def _prop_res(h: np.ndarray, s: np.ndarray) -> float:
    _, res = T.proportionality(h, T.dagger(s) @ h @ s)
    return res


def check_not_proportional(spec: TargetSpec, k: int, family: Family, tol: float = T.DEFAULT_TOL, seed: int = 11) -> bool:
    h = spec.H(k)
    rng = np.random.default_rng(seed)
    for b, theta in itertools.chain(_design_points(family), family.samples(rng, 8)):
        if _prop_res(h, family.induced_op(b, theta)) > tol:
            return True
    return False


# --- mixing -------------------------------------------------------------------


def _design_points(fam: Family, cap: int = DESIGN_CAP, seed: int = 5):
    """Grid {0, pi/2} on the coordinates that move the induced pair on ``k``.

    For the Euler and Z(phi) parametrizations these grids are Pauli (or
    {1, sigma_z}) designs, so averaging over them reproduces the group twirl.
    Coordinates the induced pair does not depend on are held at zero.
    """
    rng = np.random.default_rng(seed)
    pts = []
    for b in fam.branches:
        d = b.nparams
        if d == 0:
            pts.append((b, np.zeros(0)))
            continue
        dep = _dependence(lambda t, b=b: fam.induced_op(b, t), d, rng)
        if not dep:
            pts.append((b, np.zeros(d)))
            continue
        if 2 ** len(dep) <= cap:
            combos = itertools.product((0, 1), repeat=len(dep))
        else:
            combos = (rng.integers(0, 2, len(dep)) for _ in range(512))
        for c in combos:
            t = np.zeros(d)
            t[dep] = np.array(c) * np.pi / 2
            pts.append((b, t))
    return pts


def _images(h: np.ndarray, fam: Family, pts) -> np.ndarray:
    out = []
    for b, theta in pts:
        p = fam.induced_op(b, theta)
        out.append(T.pauli_coefficients(T.dagger(p) @ h @ p))
    return np.array(out)


def _mixing_from(fam: Family, pts, w: np.ndarray, r: float, g: np.ndarray, h: np.ndarray) -> MixingSolution:
    keep = np.flatnonzero(w > 1e-12)
    syms, pairs, ps = [], [], []
    for i in keep:
        b, theta = pts[i]
        syms.append(fam.symmetry(b, theta))
        pairs.append(fam.induced(b, theta))
        ps.append(w[i])
    ps = np.array(ps)
    ps /= ps.sum()
    mix = sum(pi * T.dagger(np.kron(*pr)) @ h @ np.kron(*pr) for pi, pr in zip(ps, pairs))
    res = float(np.linalg.norm(mix - r * g) / np.linalg.norm(h))
    return MixingSolution(fam.k, syms, pairs, ps, float(r), g, res)


def solve_mixing(h_k: np.ndarray, family: Family, g_k: np.ndarray, tol: float = T.DEFAULT_TOL, pts=None):
    """LP over the family's design points for ``sum p_i S_i^dag H_k S_i = r G_k``.

    Returns a :class:`MixingSolution` or ``None`` (infeasible on this candidate set).
    """
    if not T.is_positive_definite(g_k, 1e-12):
        raise NotPositiveDefinite("G must be positive definite")
    pts = _design_points(family) if pts is None else pts
    if not pts:
        return None
    imgs = _images(h_k, family, pts).reshape(len(pts), 16).T
    gv = T.pauli_coefficients(g_k).reshape(-1)
    scale = np.abs(imgs).max()
    sol = _simplex_feasible(imgs / scale, free_scale=gv / scale)
    if sol is None:
        return None
    w, r = sol
    if r <= 0:
        return None
    ms = _mixing_from(family, pts, w, r, g_k, h_k)
    return ms if ms.residual < max(tol, 1e-9) else None


def product_factors(g: np.ndarray, tol: float = 1e-9):
    """(A, B) with G ~ A^dag A (x) B^dag B if G is a positive product, else ``None``."""
    c = T.pauli_coefficients(g)
    u, s, vh = np.linalg.svd(c)
    if s[1] > tol * s[0]:
        return None
    ga = sum(u[a, 0] * T.PAULIS[a] for a in range(4)) * np.sqrt(s[0])
    gb = sum(vh[0, b] * T.PAULIS[b] for b in range(4)) * np.sqrt(s[0])
    if np.trace(ga).real < 0:
        ga, gb = -ga, -gb
    if not (T.is_positive_definite(ga, 1e-12) and T.is_positive_definite(gb, 1e-12)):
        return None
    return T.sqrtm_psd(ga), T.sqrtm_psd(gb)


def _rank1_defect(cm: np.ndarray) -> float:
    """Distance of a normalized (c00 = 1) coefficient matrix from a t-u-v product."""
    c = cm / cm[0, 0]
    return float(np.linalg.norm(c[1:, 1:] - np.outer(c[1:, 0], c[0, 1:])))


def _linear_case(imgs: np.ndarray):
    """'u' if the slot-2 local part is constant over images, 'v' for slot 1, else None."""
    c = imgs / imgs[:, :1, :1]
    if np.ptp(c[:, 0, 1:], axis=0).max() < 1e-10:
        return "u"
    if np.ptp(c[:, 1:, 0], axis=0).max() < 1e-10:
        return "v"
    return None


def _lin_vec(cm: np.ndarray, case: str, fixed: np.ndarray) -> np.ndarray:
    c = cm / cm[0, 0]
    if case == "u":
        return (c[1:, 1:] - np.outer(c[1:, 0], fixed)).reshape(-1)
    return (c[1:, 1:] - np.outer(fixed, c[0, 1:])).reshape(-1)


def _exact_linear(h: np.ndarray, fam: Family, pts, case: str, tol: float, rng):
    """Cutting-plane decision of the linear product condition over the whole family.

    Returns ``("feasible", pts, w)``, ``("infeasible", L, min_value)`` or
    ``("unknown", note)``.
    """
    pts = list(pts)
    imgs = _images(h, fam, pts)
    c0 = imgs[0] / imgs[0, 0, 0]
    fixed = c0[0, 1:] if case == "u" else c0[1:, 0]

    def fvec(b, theta):
        p = fam.induced_op(b, theta)
        return _lin_vec(T.pauli_coefficients(T.dagger(p) @ h @ p), case, fixed)

    for _ in range(40):
        cols = np.array([fvec(b, t) for b, t in pts]).T
        sol = _simplex_feasible(cols)
        if sol is not None:
            w, _ = sol
            if np.linalg.norm(cols @ w) < 1e-10:
                return ("feasible", pts, w)
        lvec, t = _separator(cols)
        if lvec is None or t <= 1e-12:
            return ("unknown", "separator LP degenerate")
        # global minimum of <L, f> over every branch
        worst, added = math.inf, []
        for b in fam.branches:
            d = b.nparams
            if d == 0:
                v = float(lvec @ fvec(b, np.zeros(0)))
                worst = min(worst, v)
                continue
            obj = lambda th, b=b: float(lvec @ fvec(b, th))
            if d <= 3:
                grid = _grid(d)
                grid = np.vstack([grid, _grid(d) + np.pi / len(np.unique(grid[:, 0]))])
            else:
                grid = rng.uniform(-np.pi, np.pi, (512, d))
            vals = np.array([obj(g) for g in grid])
            for i in np.argsort(vals)[:3]:
                r = minimize(obj, grid[i], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 3000})
                if r.fun < worst:
                    worst = r.fun
                if r.fun < 0.5 * t:
                    added.append((b, r.x))
        if not added and worst > 0.5 * t:
            return ("infeasible", lvec, worst)
        pts.extend(added)
    return ("unknown", "cutting planes did not settle")


def _heuristic_mixing(h: np.ndarray, fam: Family, pts, tol: float, rng) -> MixingSolution | None:
    imgs = _images(h, fam, pts)
    cands = [imgs.mean(axis=0)] + list(imgs)
    for cm in cands:
        if _rank1_defect(cm) < 1e-10:
            g = T.from_pauli_coefficients(_rank1_project(cm))
            ms = solve_mixing(h, fam, g, tol, pts)
            if ms is not None:
                return ms
    c = imgs / imgs[:, :1, :1]
    n = len(c)

    def obj(w):
        m = np.tensordot(w, c, axes=1)
        return float(np.sum((m[1:, 1:] - np.outer(m[1:, 0], m[0, 1:])) ** 2))

    cons = [{"type": "eq", "fun": lambda w: np.sum(w) - 1}]
    starts = [np.full(n, 1 / n)] + [rng.dirichlet(np.ones(n)) for _ in range(4)]
    for w0 in starts:
        r = minimize(obj, w0, method="SLSQP", bounds=[(0, 1)] * n, constraints=cons, options={"ftol": 1e-20, "maxiter": 500})
        if r.fun < 1e-16:
            m = np.tensordot(np.clip(r.x, 0, None), imgs, axes=1)
            g = T.from_pauli_coefficients(_rank1_project(m))
            if T.is_positive_definite(g, 1e-12):
                ms = solve_mixing(h, fam, g, tol, pts)
                if ms is not None:
                    return ms
    return None


def _rank1_project(cm: np.ndarray) -> np.ndarray:
    c = cm / cm[0, 0]
    return cm[0, 0] * np.outer(c[:, 0], c[0, :])


def _trivial_mixing(spec: TargetSpec, k: int) -> MixingSolution:
    h = spec.H(k)
    ident = EdgeSymmetry({e: T.I2 for e, _ in spec.graph.edges}, spec.graph.source)
    return MixingSolution(k, [ident], [(T.I2, T.I2)], np.array([1.0]), 1.0, h, 0.0)


@dataclass
class PartyAnalysis:
    k: int
    outcome: str  # "success", "excluded", "unknown"
    mixing: MixingSolution | None = None
    note: str = ""
    exact: bool = True


def analyze_party(spec: TargetSpec, k: int, tol: float = T.DEFAULT_TOL, seed: int = 3,
                  degeneracy_tol: float = DEGENERACY_TOL) -> PartyAnalysis:
    """Search for a final-round mixing at party ``k`` with a product ``G_k``."""
    rng = np.random.default_rng(seed)
    h = spec.H(k)
    if product_factors(h) is not None:
        return PartyAnalysis(k, "success", _trivial_mixing(spec, k), "H_k is already a product")
    fam = final_round_candidates(spec, k, seed=seed, degeneracy_tol=degeneracy_tol)
    if not fam.branches:
        note = "no final-round symmetries"
        return PartyAnalysis(k, "excluded" if fam.exact else "unknown", None, note, fam.exact)
    pts = _design_points(fam)
    imgs = _images(h, fam, pts)
    for b, theta in fam.samples(rng, 6):
        p = fam.induced_op(b, theta)
        imgs = np.concatenate([imgs, T.pauli_coefficients(T.dagger(p) @ h @ p)[None]])
    case = _linear_case(imgs)
    if case is not None:
        outcome = _exact_linear(h, fam, pts, case, tol, rng)
        if outcome[0] == "feasible":
            _, fpts, w = outcome
            fimgs = _images(h, fam, fpts)
            g = T.from_pauli_coefficients(_rank1_project(np.tensordot(w, fimgs, axes=1)))
            ms = solve_mixing(h, fam, g, tol, fpts)
            if ms is not None:
                return PartyAnalysis(k, "success", ms, f"linear case '{case}'", fam.exact)
        elif outcome[0] == "infeasible":
            exact = fam.exact and fam.max_dim <= 2
            note = f"linear case '{case}': separating functional with minimum {outcome[2]:.3e}"
            return PartyAnalysis(k, "excluded" if exact else "unknown", None, note, exact)
    ms = _heuristic_mixing(h, fam, pts, tol, rng)
    if ms is not None:
        return PartyAnalysis(k, "success", ms, "heuristic product search", fam.exact)
    return PartyAnalysis(k, "unknown", None, "no product target found by bounded search", False)


def check_simple_reachable(spec: TargetSpec, tol: float = T.DEFAULT_TOL, degeneracy_tol: float = DEGENERACY_TOL,
                           simulate_check: bool = True) -> Verdict:
    """Sweep k = 1..N; the first party admitting a validated protocol wins."""
    n = spec.graph.require_cycle()
    from .protocol import build_simple_protocol, simulate, gauge_normalize

    alphas = observation2_alphas(spec)
    notes, exactness = [], {}
    if alphas is not None:
        v = observation2_certificate(alphas)
        if v.status is Status.UNREACHABLE:
            return v
    excluded = 0
    for k in range(1, n + 1):
        pa = analyze_party(spec, k, tol, degeneracy_tol=degeneracy_tol)
        exactness[k] = pa.outcome if pa.outcome != "success" else "success"
        notes.append(f"party {k}: {pa.note}")
        if pa.outcome == "excluded":
            excluded += 1
            continue
        if pa.outcome != "success":
            continue
        factors = product_factors(pa.mixing.g)
        a, b = factors
        try:
            gauged, _ = gauge_normalize(spec, k, transport_a=a)
            proto = build_simple_protocol(gauged, k, a, b, pa.mixing, original=spec)
            fid = 1.0
            if simulate_check:
                branches = simulate(proto, build_network_state(spec.graph))
                target = spec.state().amplitudes
                fid = min(T.fidelity(br.state.amplitudes, target) for br in branches)
            if fid < 1 - 1e-8:
                notes.append(f"party {k}: protocol fidelity {fid:.3e}")
                exactness[k] = "unknown"
                continue
        except NetLoccError as exc:
            notes.append(f"party {k}: protocol construction failed ({exc})")
            exactness[k] = "unknown"
            continue
        return Verdict(
            Status.SIMPLE_REACHABLE, k, pa.mixing, None, proto,
            {"mixing": pa.mixing.residual, "min_fidelity": fid}, notes, exactness, (a, b),
        )
    status = Status.NOT_SIMPLE_REACHABLE if excluded == n else Status.INCONCLUSIVE
    return Verdict(status, notes=notes, exactness=exactness)
