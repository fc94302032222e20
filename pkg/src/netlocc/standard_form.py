"""Bell-diagonal standard form of positive two-qubit operators and their local stabilizers.

For a positive definite ``H`` on two qubits we find filters ``M``, ``Mbar``
(unit determinant) such that ``(M (x) Mbar)^dag H (M (x) Mbar)`` is Bell
diagonal. In the magic basis that operator is a positive diagonal matrix
whose degeneracy pattern fixes the group of local pairs ``X (x) Y`` with
``(X (x) Y)^dag H (X (x) Y) ~ H``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .errors import ConvergenceFailure, NotBellDiagonal, NotOrthogonal, NotPositiveDefinite

DEGENERACY_TOL = 1e-6
MAX_FILTER_ITER = 500


class DegeneracyClass(str, enum.Enum):
    NON_DEGENERATE = "NonDegenerate"
    DOUBLE_PLUS_TWO = "DoublePlusTwo"
    TWO_DOUBLE = "TwoDouble"
    TRIPLE = "Triple"
    FULLY_DEGENERATE = "FullyDegenerate"


_PATTERNS = {
    (1, 1, 1, 1): DegeneracyClass.NON_DEGENERATE,
    (2, 1, 1): DegeneracyClass.DOUBLE_PLUS_TWO,
    (2, 2): DegeneracyClass.TWO_DOUBLE,
    (3, 1): DegeneracyClass.TRIPLE,
    (4,): DegeneracyClass.FULLY_DEGENERATE,
}


def Zrot(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)])


def Xrot(alpha: float) -> np.ndarray:
    return np.cos(alpha) * T.I2 + 1j * np.sin(alpha) * T.SX


def euler_unitary(a: float, b: float, c: float) -> np.ndarray:
    """Z(a) X(b) Z(c); covers SU(2)."""
    return Zrot(a) @ Xrot(b) @ Zrot(c)


@dataclass(frozen=True)
class StandardForm:
    eigs: np.ndarray
    m_filter: np.ndarray
    mbar_filter: np.ndarray
    perm_unitary: np.ndarray
    cls: DegeneracyClass
    h: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def bell_diagonal(self) -> np.ndarray:
        """H^B = (M (x) Mbar)^dag H (M (x) Mbar)."""
        f = np.kron(self.m_filter, self.mbar_filter)
        return T.dagger(f) @ self.h @ f

    def reconstruct(self) -> np.ndarray:
        g = np.linalg.inv(np.kron(self.m_filter, self.mbar_filter))
        hb = T.MAGIC @ np.diag(self.eigs) @ T.dagger(T.MAGIC)
        return T.dagger(g) @ hb @ g

    def to_json(self) -> dict:
        from .io import encode_matrix

        return {
            "eigs": [float(x) for x in self.eigs],
            "class": self.cls.value,
            "M": encode_matrix(self.m_filter),
            "Mbar": encode_matrix(self.mbar_filter),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


def to_magic(hb: np.ndarray, tol: float = T.DEFAULT_TOL) -> np.ndarray:
    """Diagonal of a Bell-diagonal operator in magic order (Phi+, Phi-, Psi-, Psi+)."""
    d = T.dagger(T.MAGIC) @ np.asarray(hb, dtype=complex) @ T.MAGIC
    off = np.linalg.norm(d - np.diag(np.diag(d)))
    if off > tol * max(1.0, np.linalg.norm(d)) or np.abs(np.diag(d).imag).max() > tol * max(1.0, np.linalg.norm(d)):
        raise NotBellDiagonal(f"off-diagonal weight {off:.3e} in the magic basis")
    return np.diag(d).real.copy()


def _groups(eigs: np.ndarray, tol: float) -> list[list[int]]:
    order = sorted(range(4), key=lambda i: -eigs[i])
    scale = max(abs(eigs).max(), 1e-300)
    groups = [[order[0]]]
    for i in order[1:]:
        if abs(eigs[groups[-1][-1]] - eigs[i]) <= tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def classify(eigs: Sequence[float], tol: float = DEGENERACY_TOL) -> tuple[DegeneracyClass, list[int]]:
    """Degeneracy class and the index order putting ``eigs`` into canonical pattern.

    Canonical patterns: (a,b,c,d) descending, (a,a,b,c), (a,a,b,b), (a,a,a,b),
    (a,a,a,a); larger blocks first, ties broken by value.
    """
    eigs = np.asarray(eigs, dtype=float)
    groups = _groups(eigs, tol)
    groups.sort(key=lambda g: (-len(g), -eigs[g[0]]))
    pattern = tuple(len(g) for g in groups)
    return _PATTERNS[pattern], [i for g in groups for i in g]


def local_from_orthogonal(o: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SU(2) pair (u1, u2) with u1 (x) u2 = U O U^dag for real O in SO(4)."""
    lu = T.MAGIC @ o @ T.dagger(T.MAGIC)
    t = lu.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    if s[1] > 1e-8 * s[0]:
        raise NotOrthogonal("matrix does not correspond to a local unitary")
    a = (u[:, 0] * np.sqrt(s[0])).reshape(2, 2)
    b = (vh[0] * np.sqrt(s[0])).reshape(2, 2)
    a, sa = T.det_normalize(a)
    b = b * sa
    b, sb = T.det_normalize(b)
    # a (x) b = sb * lu; sb is a sign for special orthogonal input
    return a, b * sb


def _filter_stage(h: np.ndarray, tol: float):
    reg = T.QubitRegister(("A", "B"))
    ma = np.eye(2, dtype=complex)
    mb = np.eye(2, dtype=complex)
    trace = []
    for _ in range(MAX_FILTER_ITER):
        ra = T.partial_trace(h, ["B"], reg)
        rb = T.partial_trace(h, ["A"], reg)
        tr = np.trace(h).real
        dev = max(np.linalg.norm(2 * ra / tr - T.I2), np.linalg.norm(2 * rb / tr - T.I2))
        trace.append(float(dev))
        if dev < tol:
            return h, ma, mb, trace
        fa, _ = T.det_normalize(T.inv_sqrtm_pd(ra))
        h = np.kron(T.dagger(fa), T.I2) @ h @ np.kron(fa, T.I2)
        ma = ma @ fa
        rb = T.partial_trace(h, ["A"], reg)
        fb, _ = T.det_normalize(T.inv_sqrtm_pd(rb))
        h = np.kron(T.I2, T.dagger(fb)) @ h @ np.kron(T.I2, fb)
        mb = mb @ fb
        h = (h + T.dagger(h)) / 2
    raise ConvergenceFailure("local filtering did not converge", trace)


def bell_diagonalize(h: np.ndarray, tol: float = T.DEFAULT_TOL, degeneracy_tol: float = DEGENERACY_TOL) -> StandardForm:
    h = np.asarray(h, dtype=complex)
    if h.shape != (4, 4) or not T.is_positive_definite(h, tol=1e-12):
        raise NotPositiveDefinite("expected a positive definite 4x4 operator")
    h = (h + T.dagger(h)) / 2
    hf, ma, mb, trace = _filter_stage(h, 1e-14)

    hm = T.dagger(T.MAGIC) @ hf @ T.MAGIC
    imag = np.linalg.norm(hm.imag) / np.linalg.norm(hm)
    w, o = np.linalg.eigh(hm.real)
    if np.linalg.det(o) < 0:
        o[:, 0] *= -1
    cls, perm = classify(w, degeneracy_tol)
    p = np.zeros((4, 4))
    for i, src in enumerate(perm):
        p[src, i] = 1.0
    if np.linalg.det(p) < 0:
        p[:, 0] *= -1
    o = o @ p
    u1, u2 = local_from_orthogonal(o)
    m = ma @ u1
    mbar = mb @ u2
    # the split of a scalar between M and Mbar is free; make tr M real positive
    tr = np.trace(m)
    if abs(tr) > 1e-12:
        ph = tr / abs(tr)
        m, mbar = m / ph, mbar * ph
    f = np.kron(m, mbar)
    hb = T.dagger(f) @ h @ f
    d = T.dagger(T.MAGIC) @ hb @ T.MAGIC
    eigs = np.diag(d).real.copy()
    hn = np.linalg.norm(d)
    form = StandardForm(
        eigs=eigs,
        m_filter=m,
        mbar_filter=mbar,
        perm_unitary=np.kron(u1, u2),
        cls=cls,
        h=h,
        residuals={
            "filter_iterations": len(trace),
            "filter_deviation": trace[-1],
            "magic_imag": imag,
            "off_diagonal": np.linalg.norm(d - np.diag(np.diag(d))) / hn,
        },
    )
    form.residuals["reconstruction"] = np.linalg.norm(form.reconstruct() - h) / np.linalg.norm(h)
    if form.residuals["off_diagonal"] > max(tol, 1e-8):
        raise ConvergenceFailure(
            f"Bell diagonalization left off-diagonal weight {form.residuals['off_diagonal']:.3e}", trace
        )
    return form


# --- stabilizers -----------------------------------------------------------

FrameFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Component:
    """Parametrized family of standard-frame pairs (Xt, Yt)."""

    name: str
    nparams: int
    fn: FrameFn

    def __call__(self, params: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        return self.fn(np.asarray(params, dtype=float))


def _components(cls: DegeneracyClass) -> list[Component]:
    s = T.PAULIS
    if cls is DegeneracyClass.NON_DEGENERATE:
        return [Component(f"sigma{i}", 0, lambda p, i=i: (s[i], s[i])) for i in range(4)]
    if cls is DegeneracyClass.DOUBLE_PLUS_TWO:
        return [
            Component(f"ZZ(phi)X^{k}", 1, lambda p, k=k: (Zrot(p[0]) @ np.linalg.matrix_power(T.SX, k),) * 2)
            for k in (0, 1)
        ]
    if cls is DegeneracyClass.TWO_DOUBLE:
        return [
            Component(
                f"Z(phi1)Z(phi2)X^{k}",
                2,
                lambda p, k=k: (
                    Zrot(p[0]) @ np.linalg.matrix_power(T.SX, k),
                    Zrot(p[1]) @ np.linalg.matrix_power(T.SX, k),
                ),
            )
            for k in (0, 1)
        ]
    if cls is DegeneracyClass.TRIPLE:
        return [
            Component(
                "ZXZ(alpha)|ZXZ(-alpha)",
                3,
                lambda p: (euler_unitary(p[0], p[1], p[2]), euler_unitary(p[0], -p[1], p[2])),
            )
        ]
    return [
        Component(
            "U(2)xU(2)",
            6,
            lambda p: (euler_unitary(p[0], p[1], p[2]), euler_unitary(p[3], p[4], p[5])),
        )
    ]


def _unitarity_defect(y: np.ndarray) -> float:
    y, _ = T.det_normalize(y)
    return float(np.linalg.norm(T.dagger(y) @ y - T.I2))


def _pattern(y: np.ndarray) -> tuple[int, float]:
    """0 for diagonal, 1 for antidiagonal, with the weight off that pattern."""
    n = np.linalg.norm(y)
    off_diag = math.hypot(abs(y[0, 1]), abs(y[1, 0])) / n
    off_anti = math.hypot(abs(y[0, 0]), abs(y[1, 1])) / n
    return (0, off_diag) if off_diag <= off_anti else (1, off_anti)


@dataclass(frozen=True)
class Membership:
    """Result of asking which slot-1 operators pair with a given slot-2 operator."""

    residual: float
    component: Component | None

    @property
    def nparams(self) -> int:
        return self.component.nparams if self.component else 0


@dataclass(frozen=True)
class StabilizerGroup:
    cls: DegeneracyClass
    m_filter: np.ndarray
    mbar_filter: np.ndarray
    components: tuple[Component, ...]
    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_m_inv", np.linalg.inv(self.m_filter))
        object.__setattr__(self, "_mbar_inv", np.linalg.inv(self.mbar_filter))

    def pullback(self, xt: np.ndarray, yt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.m_filter @ xt @ self._m_inv, self.mbar_filter @ yt @ self._mbar_inv

    def element(self, component: Component, params: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        return self.pullback(*component(params))

    def sample(self, rng: np.random.Generator, count: int) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        for _ in range(count):
            c = self.components[rng.integers(len(self.components))]
            out.append(self.element(c, rng.uniform(-np.pi, np.pi, c.nparams)))
        return out

    @property
    def is_finite(self) -> bool:
        return all(c.nparams == 0 for c in self.components)

    def membership(self, y: np.ndarray) -> Membership:
        """Slot-1 family compatible with slot-2 operator ``y`` (original frame).

        The returned component yields standard-frame ``Xt``; pull it back with
        ``m_filter``. ``residual`` measures how far ``y`` is from the projection
        of the group onto slot 2.
        """
        yt = self._mbar_inv @ y @ self.mbar_filter
        yt, _ = T.det_normalize(yt)
        cls = self.cls
        if cls is DegeneracyClass.NON_DEGENERATE:
            dists = [T.projective_distance(yt, s) for s in T.PAULIS]
            i = int(np.argmin(dists))
            return Membership(dists[i], Component(f"sigma{i}", 0, lambda p, i=i: T.PAULIS[i]))
        defect = _unitarity_defect(yt)
        if cls in (DegeneracyClass.DOUBLE_PLUS_TWO, DegeneracyClass.TWO_DOUBLE):
            k, off = _pattern(yt)
            res = defect + off
            if cls is DegeneracyClass.DOUBLE_PLUS_TWO:
                return Membership(res, Component("=Y", 0, lambda p, yt=yt: yt))
            xk = np.linalg.matrix_power(T.SX, k)
            return Membership(res, Component(f"Z(psi)X^{k}", 1, lambda p, xk=xk: Zrot(p[0]) @ xk))
        if cls is DegeneracyClass.TRIPLE:
            return Membership(defect, Component("sz Y sz", 0, lambda p, yt=yt: T.SZ @ yt @ T.SZ))
        return Membership(defect, Component("U(2)", 3, lambda p: euler_unitary(p[0], p[1], p[2])))

    def to_json(self) -> dict:
        return {"class": self.cls.value, "components": [c.name for c in self.components]}


def stabilizer(form: StandardForm) -> StabilizerGroup:
    return StabilizerGroup(form.cls, form.m_filter, form.mbar_filter, tuple(_components(form.cls)), form.h)


def stabilizer_residual(h: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """Relative distance of (X (x) Y)^dag H (X (x) Y) from lam H, lam by least squares."""
    s = np.kron(x, y)
    _, res = T.proportionality(h, T.dagger(s) @ h @ s)
    return res


def commutant_probe(h_mb: Sequence[float], o: np.ndarray, tol: float = T.DEFAULT_TOL) -> bool:
    """Whether ``o`` commutes with (H^mb)^T H^mb and maps H^mb to a multiple of itself."""
    o = np.asarray(o, dtype=complex)
    if np.linalg.norm(o.T @ o - np.eye(4)) > tol:
        raise NotOrthogonal("probe matrix is not complex orthogonal")
    d = np.diag(np.asarray(h_mb, dtype=float)).astype(complex)
    sq = d.T @ d
    if np.linalg.norm(sq @ o - o @ sq) > tol * np.linalg.norm(sq):
        return False
    _, res = T.proportionality(d, T.dagger(o) @ d @ o)
    return res < tol


def single_qubit_cliffords() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords modulo phase, each with unit determinant."""
    hdm = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    found = [T.I2]
    frontier = [T.I2]
    while frontier:
        new = []
        for c in frontier:
            for g in (hdm, s):
                x, _ = T.det_normalize(g @ c)
                if all(T.projective_distance(x, y) > 1e-9 for y in found):
                    found.append(x)
                    new.append(x)
        frontier = new
    return found


def clifford_stabilizers(form: StandardForm, tol: float = 1e-9) -> list[tuple[np.ndarray, np.ndarray]]:
    """Clifford pairs (in the standard frame) that stabilize the Bell-diagonal form."""
    hb = T.MAGIC @ np.diag(form.eigs).astype(complex) @ T.dagger(T.MAGIC)
    cl = single_qubit_cliffords()
    return [(a, b) for a in cl for b in cl if stabilizer_residual(hb, a, b) < tol]
