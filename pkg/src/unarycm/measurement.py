"""Measurement calculus on finite-dimensional matrix models.

Spectral projections with eigenvalue clustering, the Lüders transformer on
states and on observables, the joint-measurability check, Heaviside
discretization, repeat-measurement correlations and a pointer-based
instrument simulation.

The two-outcome stochastic reduction map is deliberately not modeled; the
instrument report carries ``stochastic_reduction="unsupported"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

__all__ = [
    "Observable",
    "SpectralProjection",
    "DensityMatrix",
    "InstrumentSetup",
    "InstrumentReport",
    "AmbiguityError",
    "spectral",
    "luders_state",
    "luders_observable",
    "jm_check",
    "discretize",
    "repeat_correlation",
    "instrument_joint",
    "luders_of_PiA",
    "random_hermitian",
    "random_density",
    "random_unitary",
    "parse_matrix",
    "matrix_to_json",
]

HERMITIAN_TOL = 1e-12


class AmbiguityError(ValueError):
    """Discretization threshold sits on an eigenvalue."""


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, (Observable, DensityMatrix)):
        return x.matrix
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _herm_residual(m: np.ndarray) -> float:
    return float(np.abs(m - m.conj().T).max()) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian matrix with an optional label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
        if _herm_residual(m) > HERMITIAN_TOL * scale:
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray
    tol: float = 1e-10

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if _herm_residual(m) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-12:
            raise ValueError(f"density matrix trace is {np.trace(m).real:.15g}")
        if np.linalg.eigvalsh(m).min() < -self.tol:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def expect(self, A) -> complex:
        return complex(np.trace(_as_matrix(A) @ self.matrix))


@dataclass(frozen=True, eq=False)
class SpectralProjection:
    """Distinct eigenvalues ``alpha_i`` with orthogonal projectors ``P_i``."""

    eigenvalues: np.ndarray
    projectors: tuple

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self):
        return len(self.projectors)

    def reconstruct(self) -> np.ndarray:
        return sum(a * P for a, P in zip(self.eigenvalues, self.projectors))

    def residuals(self) -> dict:
        """Orthogonality, completeness and idempotence residuals."""
        d = self.dim
        orth = 0.0
        for i, Pi in enumerate(self.projectors):
            for j, Pj in enumerate(self.projectors):
                target = Pi if i == j else 0
                orth = max(orth, float(np.abs(Pi @ Pj - target).max()))
        complete = float(np.abs(sum(self.projectors) - np.eye(d)).max())
        return {"orthogonality": orth, "completeness": complete}


def spectral(A, cluster_tol: float | None = None) -> SpectralProjection:
    """Spectral decomposition with eigenvalues closer than ``cluster_tol`` merged.

    ``cluster_tol`` defaults to ``1e-8 * ||A||``.  Clusters are formed by
    chaining sorted eigenvalues whose consecutive gap is within tolerance;
    the cluster value is the mean.
    """
    m = _as_matrix(A)
    m = (m + m.conj().T) / 2
    w, V = np.linalg.eigh(m)
    if cluster_tol is None:
        cluster_tol = 1e-8 * float(np.linalg.norm(m, 2))
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] <= cluster_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    vals, projs = [], []
    for g in groups:
        Vg = V[:, g]
        vals.append(float(w[g].mean()))
        projs.append(Vg @ Vg.conj().T)
    return SpectralProjection(np.array(vals), tuple(projs))


def _sp(A_or_sp) -> SpectralProjection:
    return A_or_sp if isinstance(A_or_sp, SpectralProjection) else spectral(A_or_sp)


def luders_state(rho, sp) -> DensityMatrix:
    """``rho_A = sum_i P_i rho P_i``."""
    sp = _sp(sp)
    r = _as_matrix(rho)
    out = sum(P @ r @ P for P in sp.projectors)
    return DensityMatrix((out + out.conj().T) / 2)


def luders_observable(X, sp) -> Observable:
    """``X_A = sum_i P_i X P_i``: projection onto the commutant of ``A``."""
    sp = _sp(sp)
    x = _as_matrix(X)
    out = sum(P @ x @ P for P in sp.projectors)
    label = X.label + "_A" if isinstance(X, Observable) else ""
    return Observable((out + out.conj().T) / 2, label)


def luders_of_PiA(X, P) -> Observable:
    """Lüders transformer of the two-outcome measurement ``{P, 1 - P}``."""
    x = _as_matrix(X)
    p = _as_matrix(P)
    if np.abs(p @ p - p).max() > 1e-12 or _herm_residual(p) > 1e-12:
        raise ValueError("P is not an orthogonal projector")
    q = np.eye(p.shape[0]) - p
    out = p @ x @ p + q @ x @ q
    return Observable((out + out.conj().T) / 2)


@dataclass
class JMReport:
    """Pairwise commutator spectral norms; ``passed`` iff all are within ``tol``."""

    norms: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.norms.values())

    @property
    def worst(self) -> float:
        return max(self.norms.values(), default=0.0)


def jm_check(observables: Sequence, tol: float = 1e-10) -> JMReport:
    """Joint measurability: every pair of observables must commute."""
    mats = [_as_matrix(o) for o in observables]
    norms = {}
    for i, j in combinations(range(len(mats)), 2):
        c = mats[i] @ mats[j] - mats[j] @ mats[i]
        norms[(i, j)] = float(np.linalg.norm(c, 2))
    return JMReport(norms, tol)


def discretize(A, c: float, tol: float = 1e-9) -> Observable:
    """``theta(A - c)``: projector onto eigenvalues above ``c``.

    Raises
    ------
    AmbiguityError
        If ``c`` is within ``tol`` of an eigenvalue of ``A``.
    """
    sp = spectral(A)
    near = np.abs(sp.eigenvalues - c) <= tol
    if np.any(near):
        raise AmbiguityError(f"threshold {c} coincides with eigenvalue {sp.eigenvalues[near][0]}")
    d = sp.dim
    out = np.zeros((d, d), dtype=complex)
    for a, P in zip(sp.eigenvalues, sp.projectors):
        if a > c:
            out += P
    return Observable((out + out.conj().T) / 2, f"theta(A-{c})")


@dataclass
class RepeatReport:
    """Joint distribution of two successive identical measurements."""

    values: np.ndarray
    joint: np.ndarray
    single: np.ndarray

    @property
    def offdiag_mass(self) -> float:
        return float(np.abs(self.joint - np.diag(np.diag(self.joint))).sum())

    @property
    def marginal_residual(self) -> float:
        return float(max(np.abs(self.joint.sum(1) - self.single).max(), np.abs(self.joint.sum(0) - self.single).max()))


def repeat_correlation(A, rho) -> RepeatReport:
    """``joint[u, v] = Tr[P_u P_v rho]`` over the distinct eigenvalues of ``A``."""
    sp = _sp(A)
    r = _as_matrix(rho)
    n = len(sp)
    joint = np.zeros((n, n))
    for u, Pu in enumerate(sp.projectors):
        for v, Pv in enumerate(sp.projectors):
            joint[u, v] = np.trace(Pu @ Pv @ r).real
    single = np.array([np.trace(P @ r).real for P in sp.projectors])
    return RepeatReport(sp.eigenvalues, joint, single)


# -- instrument ---------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class InstrumentSetup:
    """Two successive pointer measurements on a ``d``-level system.

    Parameters
    ----------
    a_basis, b_basis : (d, d) arrays
        Orthonormal eigenbases as columns.
    a_labels, b_labels : sequences of int, optional
        Outcome index of each basis vector; equal labels form a degenerate
        eigenspace.  Defaults to one outcome per vector.
    """

    a_basis: np.ndarray
    b_basis: np.ndarray
    a_labels: tuple | None = None
    b_labels: tuple | None = None

    def __post_init__(self):
        for name in ("a_basis", "b_basis"):
            B = np.asarray(getattr(self, name), dtype=complex)
            if B.ndim != 2 or B.shape[0] != B.shape[1]:
                raise ValueError(f"{name} must be square")
            if np.abs(B.conj().T @ B - np.eye(B.shape[0])).max() > 1e-12:
                raise ValueError(f"{name} is not orthonormal")
            object.__setattr__(self, name, B)
        if self.a_basis.shape != self.b_basis.shape:
            raise ValueError("bases must have the same dimension")
        for name in ("a_labels", "b_labels"):
            lab = getattr(self, name)
            lab = tuple(range(self.dim)) if lab is None else tuple(int(x) for x in lab)
            if len(lab) != self.dim:
                raise ValueError(f"{name} needs {self.dim} entries")
            object.__setattr__(self, name, lab)

    @property
    def dim(self) -> int:
        return self.a_basis.shape[0]

    def _projectors(self, basis, labels):
        outs = sorted(set(labels))
        projs = []
        for o in outs:
            cols = basis[:, [k for k, l in enumerate(labels) if l == o]]
            projs.append(cols @ cols.conj().T)
        return projs

    @property
    def a_projectors(self):
        return self._projectors(self.a_basis, self.a_labels)

    @property
    def b_projectors(self):
        return self._projectors(self.b_basis, self.b_labels)


def _controlled_shift(projs, k_pointer: int, slot: int, dims) -> np.ndarray:
    """``sum_i P_i (x) S^i`` acting on pointer ``slot`` of ``(system, A, B)``."""
    d = projs[0].shape[0]
    S = np.roll(np.eye(k_pointer), 1, axis=0)  # |k> -> |k+1 mod n>
    out = np.zeros((d * dims[1] * dims[2],) * 2, dtype=complex)
    for i, P in enumerate(projs):
        shift = np.linalg.matrix_power(S, i)
        ia = shift if slot == 1 else np.eye(dims[1])
        ib = shift if slot == 2 else np.eye(dims[2])
        out += np.kron(np.kron(P, ia), ib)
    return out


@dataclass
class InstrumentReport:
    """Outcome probabilities of the two-pointer instrument."""

    p_A: np.ndarray
    p_AB: np.ndarray
    p_B_unmeasured: np.ndarray
    routes: dict
    stochastic_reduction: str = "unsupported"

    @property
    def p_B_measured(self) -> np.ndarray:
        return self.routes["tensor"]

    @property
    def route_residual(self) -> float:
        vals = list(self.routes.values())
        return float(max(np.abs(v - vals[0]).max() for v in vals))

    @property
    def normalization_residual(self) -> float:
        return float(max(abs(self.p_A.sum() - 1), abs(self.p_AB.sum() - 1), abs(self.p_B_unmeasured.sum() - 1)))


def instrument_joint(setup: InstrumentSetup, psi) -> InstrumentReport:
    """Simulate ``U_B U_A |psi>|A_0>|B_0>`` and compare routes to ``P(B | A measured)``.

    Pointers have one level per distinct outcome and start in level 0; the
    couplings are controlled cyclic shifts.  Three routes to the B
    distribution after measuring A are reported: the tensor simulation,
    ``Tr[(Q_j)_A rho]`` (Lüders on the measurement) and ``Tr[Q_j rho_A]``
    (Lüders on the state).  For nondegenerate A the sum
    ``sum_i |<b_j|a_i><a_i|psi>|^2`` is added as a fourth route.
    """
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("psi must be normalized")
    PA, PB = setup.a_projectors, setup.b_projectors
    kA, kB = len(PA), len(PB)
    dims = (setup.dim, kA, kB)
    pointerA = np.zeros(kA)
    pointerA[0] = 1
    pointerB = np.zeros(kB)
    pointerB[0] = 1
    state = np.kron(np.kron(psi, pointerA), pointerB)
    UA = _controlled_shift(PA, kA, 1, dims)
    UB = _controlled_shift(PB, kB, 2, dims)

    after = UB @ (UA @ state)
    probs = (np.abs(after) ** 2).reshape(dims).sum(axis=0)  # (kA, kB)
    only_b = (np.abs(UB @ state) ** 2).reshape(dims).sum(axis=(0, 1))

    rho = np.outer(psi, psi.conj())
    sp = SpectralProjection(np.arange(kA, dtype=float), tuple(PA))
    rho_A = luders_state(rho, sp).matrix
    routes = {
        "tensor": probs.sum(axis=0),
        "luders_measurement": np.array([np.trace(luders_observable(Q, sp).matrix @ rho).real for Q in PB]),
        "luders_state": np.array([np.trace(Q @ rho_A).real for Q in PB]),
    }
    if kA == setup.dim and kB == setup.dim:
        amp = setup.b_basis.conj().T @ setup.a_basis  # <b_j|a_i>
        coef = setup.a_basis.conj().T @ psi  # <a_i|psi>
        order_a = np.argsort(setup.a_labels)
        order_b = np.argsort(setup.b_labels)
        terms = np.abs(amp[np.ix_(order_b, order_a)] * coef[order_a][None, :]) ** 2
        routes["amplitude_sum"] = terms.sum(axis=1)
    return InstrumentReport(probs.sum(axis=1), probs, only_b, routes)


# -- random ensembles and I/O ------------------------------------------------------
def random_unitary(rng, d: int) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, d: int, degenerate: bool = False) -> np.ndarray:
    """Random Hermitian matrix; ``degenerate`` draws eigenvalues from a small integer set."""
    U = random_unitary(rng, d)
    w = rng.integers(-2, 3, size=d).astype(float) if degenerate else rng.standard_normal(d)
    return (U * w) @ U.conj().T


def random_density(rng, d: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def parse_matrix(obj) -> np.ndarray:
    """Matrix from nested JSON lists; entries are numbers or ``[re, im]`` pairs."""
    rows = []
    for row in obj:
        out = []
        for x in row:
            if isinstance(x, (list, tuple)):
                if len(x) != 2:
                    raise ValueError("complex entries must be [re, im] pairs")
                out.append(complex(float(x[0]), float(x[1])))
            else:
                out.append(complex(float(x)))
        rows.append(out)
    m = np.array(rows, dtype=complex)
    if m.ndim != 2:
        raise ValueError("ragged matrix")
    return m


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]
