"""Truncated two-mode Fock representation of the GNS Hilbert space.

Mode ``a`` carries ``q, Q``; mode ``b`` carries ``p, P``.  The Fock vacuum
plays the role of the Gibbs vector ``|1>``.  Truncation at ``N`` levels per
mode corrupts the top of the ladder, so identities are asserted only on a
window of low levels (``safe_window``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import factorial, sqrt

import numpy as np
from scipy.linalg import expm

from .gibbs_state import GibbsState
from .weyl_algebra import AlgebraElement, adjoint, multiply

__all__ = [
    "FockRep",
    "HermiteBasis",
    "TruncationError",
    "build",
    "ladder_matrix",
    "gns_vector",
    "gns_inner",
    "hermite_basis",
    "lowering_q",
    "modulated_density_check",
    "translate_check",
    "gibbs_projection_check",
    "polarization_check",
    "commutator_window_residual",
    "liouvillian_spectrum",
    "lowering_residuals",
    "mixture_mean",
]

MAX_DIM = 4096


class TruncationError(RuntimeError):
    """A construction left the region where the truncation is faithful."""


def ladder_matrix(n: int) -> np.ndarray:
    """Lowering operator on ``n`` Fock levels: ``a|k> = sqrt(k)|k-1>``."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


@dataclass(frozen=True, eq=False)
class FockRep:
    """Dense matrices for the generators at truncation ``N`` and temperature ``kT``.

    Single-mode matrices are ``N x N``; two-mode operators (``q2``, ``p2``,
    ...) are built lazily on the ``N^2`` space.
    """

    N: int
    kT: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    # -- single mode -------------------------------------------------------
    @cached_property
    def a(self) -> np.ndarray:
        return ladder_matrix(self.N)

    @cached_property
    def ad(self) -> np.ndarray:
        return self.a.conj().T

    @cached_property
    def q(self) -> np.ndarray:
        return (self.a + self.ad) * np.sqrt(self.kT)

    @cached_property
    def Q(self) -> np.ndarray:
        return (self.a - self.ad) / (2 * np.sqrt(self.kT))

    @cached_property
    def vacuum(self) -> np.ndarray:
        e = np.zeros(self.N, dtype=complex)
        e[0] = 1
        return e

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.N, dtype=complex)

    # -- two mode ----------------------------------------------------------
    def _kron_a(self, X):
        return np.kron(X, self.identity)

    def _kron_b(self, X):
        return np.kron(self.identity, X)

    @cached_property
    def a2(self):
        return self._kron_a(self.a)

    @cached_property
    def b2(self):
        return self._kron_b(self.a)

    @cached_property
    def q2(self):
        return self._kron_a(self.q)

    @cached_property
    def p2(self):
        return self._kron_b(self.q)

    @cached_property
    def Q2(self):
        return self._kron_a(self.Q)

    @cached_property
    def P2(self):
        return self._kron_b(self.Q)

    @cached_property
    def gibbs_vector(self) -> np.ndarray:
        """``|1>`` on the two-mode space."""
        return np.kron(self.vacuum, self.vacuum)

    @cached_property
    def liouvillian(self) -> np.ndarray:
        """``L = p Q - q P`` on the two-mode space."""
        return self.p2 @ self.Q2 - self.q2 @ self.P2

    def safe_levels(self, degree: int = 1) -> int:
        """Number of low levels where a degree-``degree`` identity is untouched by truncation."""
        return max(self.N - 2 * degree, 0)

    # -- algebra elements --------------------------------------------------
    def _mode_powers(self):
        if "powers" not in self._cache:
            self._cache["powers"] = {"a": [self.identity], "ad": [self.identity]}
        return self._cache["powers"]

    def _power(self, name: str, k: int) -> np.ndarray:
        pw = self._mode_powers()[name]
        base = self.a if name == "a" else self.ad
        while len(pw) <= k:
            pw.append(pw[-1] @ base)
        return pw[k]

    def mode_matrix(self, m: int, n: int) -> np.ndarray:
        """Single-mode ``ad^m a^n``."""
        return self._power("ad", m) @ self._power("a", n)

    def matrix(self, A: AlgebraElement) -> np.ndarray:
        """Two-mode matrix of a normal-ordered element."""
        out = np.zeros((self.N**2, self.N**2), dtype=complex)
        for (m, n, r, s), c in A.terms.items():
            out += complex(c) * np.kron(self.mode_matrix(m, n), self.mode_matrix(r, s))
        return out


def build(N: int, kT: float = 1.0) -> FockRep:
    """Construct a :class:`FockRep`.

    Raises
    ------
    ValueError
        If ``N < 2`` or ``kT <= 0``.
    MemoryError
        If ``N`` exceeds the configured limit for dense matrices.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if N > MAX_DIM:
        raise MemoryError(f"N={N} exceeds dense limit {MAX_DIM}")
    if not kT > 0:
        raise ValueError("kT must be positive")
    return FockRep(int(N), float(kT))


def gns_vector(rep: FockRep, A: AlgebraElement) -> np.ndarray:
    """``A|1>`` on the two-mode space, built mode by mode (no ``N^2`` matrix)."""
    va = {}
    out = np.zeros(rep.N**2, dtype=complex)
    for (m, n, r, s), c in A.terms.items():
        if n or s:
            # lowering before raising in normal order annihilates |1> exactly
            ka = rep.mode_matrix(m, n) @ rep.vacuum
            kb = rep.mode_matrix(r, s) @ rep.vacuum
        else:
            if m >= rep.N or r >= rep.N:
                raise TruncationError(f"word {(m, n, r, s)} leaves the {rep.N}-level space")
            ka = va.setdefault(("a", m), rep.mode_matrix(m, 0) @ rep.vacuum)
            kb = va.setdefault(("b", r), rep.mode_matrix(r, 0) @ rep.vacuum)
        out += complex(c) * np.kron(ka, kb)
    return out


def gns_inner(rep: FockRep, A: AlgebraElement, B: AlgebraElement) -> complex:
    """``<A|B> = rho(A+ B)`` computed as ``vdot(A|1>, B|1>)``."""
    return complex(np.vdot(gns_vector(rep, A), gns_vector(rep, B)))


def word_vector(rep: FockRep, word: str) -> np.ndarray:
    """Apply a product of ``q, p, Q, P`` (string like ``"qQp"``, leftmost acts last) to ``|1>``."""
    mats = {"q": rep.q2, "p": rep.p2, "Q": rep.Q2, "P": rep.P2}
    v = rep.gibbs_vector
    for ch in reversed(word):
        v = mats[ch] @ v
    return v


# -- Hermite basis ------------------------------------------------------------
@dataclass(frozen=True)
class HermiteBasis:
    """Orthonormal polynomials ``H_0..H_M`` in ``q`` and their vectors.

    ``coeffs[m, k]`` is the coefficient of ``q^k`` in ``H_m``; ``vectors[:, m]``
    is ``|H_m(q)>`` on the single ``a``-mode.
    """

    coeffs: np.ndarray
    vectors: np.ndarray

    @property
    def M(self) -> int:
        return self.coeffs.shape[0] - 1

    def gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors


def hermite_basis(rep: FockRep, M: int, tol: float = 1e-10) -> HermiteBasis:
    """Gram-Schmidt on ``|1>, q|1>, q^2|1>, ...`` (modified, with one re-orthogonalization pass).

    Raises
    ------
    TruncationError
        If ``M > N/2`` or orthonormality degrades beyond ``tol``.
    """
    if M > rep.N // 2:
        raise TruncationError(f"M={M} exceeds N/2={rep.N // 2}")
    vecs = np.zeros((rep.N, M + 1), dtype=complex)
    coeffs = np.zeros((M + 1, M + 1))
    v = rep.vacuum.copy()
    mono = np.zeros(M + 1)
    mono[0] = 1.0
    for m in range(M + 1):
        w, c = v.copy(), mono.copy()
        for _ in range(2):
            for k in range(m):
                proj = np.vdot(vecs[:, k], w)
                w = w - proj * vecs[:, k]
                c = c - proj.real * coeffs[k]
        norm = np.linalg.norm(w)
        vecs[:, m] = w / norm
        coeffs[m] = c / norm
        v = rep.q @ v
        mono = np.roll(mono, 1)
        mono[0] = 0.0
    basis = HermiteBasis(coeffs, vecs)
    err = np.abs(basis.gram() - np.eye(M + 1)).max()
    if err > tol:
        raise TruncationError(f"Hermite basis lost orthonormality: {err:.3g}")
    return basis


def lowering_q(rep: FockRep, M: int, basis: HermiteBasis | None = None) -> np.ndarray:
    """``a_q = sum_{m<M} sqrt(m+1) |H_m><H_{m+1}|`` on the single ``a``-mode."""
    if basis is None or basis.M < M:
        basis = hermite_basis(rep, M)
    V = basis.vectors
    out = np.zeros((rep.N, rep.N), dtype=complex)
    for m in range(M):
        out += sqrt(m + 1) * np.outer(V[:, m], V[:, m + 1].conj())
    return out


def lowering_residuals(rep: FockRep, M: int) -> dict:
    """``||a_q|1>||`` and ``[a_q, a_q+] - 1`` on ``span(H_0..H_{M-1})``."""
    basis = hermite_basis(rep, M)
    aq = lowering_q(rep, M, basis)
    V = basis.vectors[:, :M]
    comm = aq @ aq.conj().T - aq.conj().T @ aq
    on_span = V.conj().T @ comm @ V
    return {
        "annihilates_unit": float(np.linalg.norm(aq @ rep.vacuum)),
        "commutator": float(np.abs(on_span - np.eye(M)).max()),
        "matches_ladder": float(np.abs(V.conj().T @ (aq - rep.a) @ V).max()),
    }


# -- modulation and translation ---------------------------------------------
def modulated_moment_closed_form(n: int, k: int, kT: float) -> float:
    """``2k``-th moment of ``c_n q^(2n)/kT^n * exp(-q^2/2kT)/sqrt(2 pi kT)``."""
    num = factorial(2 * (n + k)) / (2 ** (n + k) * factorial(n + k))
    den = factorial(2 * n) / (2**n * factorial(n))
    return kT**k * num / den


def modulated_density(n: int, x, kT: float):
    """Density of ``q`` in the state ``q^n|1>/||q^n|1>||``."""
    x = np.asarray(x, dtype=float)
    c = 2**n * factorial(n) / factorial(2 * n)
    return c * x ** (2 * n) / kT**n * np.exp(-x * x / (2 * kT)) / np.sqrt(2 * np.pi * kT)


def modulated_density_check(rep: FockRep, n: int, grid=None, max_k: int = 3) -> list[dict]:
    """Compare moments of ``q^n|1>`` (normalized) against the modulated density.

    Rows carry the matrix moment, the closed form, and a trapezoid quadrature
    of the density on ``grid``.
    """
    if n + max_k >= rep.N:
        raise TruncationError(f"n + k = {n + max_k} reaches the truncation N={rep.N}")
    if grid is None:
        s = np.sqrt(rep.kT)
        grid = np.linspace(-14 * s, 14 * s, 8001)
    grid = np.asarray(grid, dtype=float)
    v = np.linalg.matrix_power(rep.q, n) @ rep.vacuum
    v = v / np.linalg.norm(v)
    dens = modulated_density(n, grid, rep.kT)
    rows = []
    for k in range(max_k + 1):
        w = np.linalg.matrix_power(rep.q, k) @ v
        matrix_moment = float(np.vdot(w, w).real)
        odd = np.linalg.matrix_power(rep.q, 2 * k + 1) @ v
        rows.append(
            {
                "k": k,
                "matrix_moment": matrix_moment,
                "closed_form": modulated_moment_closed_form(n, k, rep.kT),
                "grid_moment": float(np.trapezoid(grid ** (2 * k) * dens, grid)),
                "odd_moment": float(np.vdot(v, odd).real),
            }
        )
    for r in rows:
        r["abs_error"] = abs(r["matrix_moment"] - r["closed_form"])
    return rows


def translate_state(rep: FockRep, kappa: float) -> np.ndarray:
    """``U|1>`` with ``U = exp(kappa Q)`` (single ``a``-mode)."""
    return expm(kappa * rep.Q) @ rep.vacuum


def translate_check(rep: FockRep, kappa: float, check_bound: bool = True) -> dict:
    """Mean and variance of ``q`` in ``exp(kappa Q)|1>``.

    ``sign`` records the realized displacement direction: with ``Q`` acting as
    ``d/dq``, ``exp(-kappa Q) q exp(kappa Q) = q - kappa`` so the mean moves
    to ``-kappa``.
    """
    if check_bound and abs(kappa) > np.sqrt(rep.N * rep.kT) / 4:
        raise TruncationError(f"|kappa|={abs(kappa)} exceeds sqrt(N kT)/4")
    v = translate_state(rep, kappa)
    mean = float(np.vdot(v, rep.q @ v).real)
    second = float(np.vdot(v, rep.q @ rep.q @ v).real)
    top = float(np.abs(v[-4:]).max())
    return {
        "kappa": kappa,
        "mean": mean,
        "variance": second - mean * mean,
        "norm": float(np.linalg.norm(v)),
        "sign": 0 if kappa == 0 else int(np.sign(mean) * np.sign(kappa)),
        "top_level_amplitude": top,
    }


def mixture_mean(rep: FockRep, kappas, weights) -> float:
    """``sum_i w_i <U_i 1| q |U_i 1>`` for a convex mixture of translations."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
        raise ValueError("weights must be a probability vector")
    return float(sum(w * translate_check(rep, k)["mean"] for k, w in zip(kappas, weights)))


# -- projection and polarization ------------------------------------------------
def gibbs_projection_check(rep: FockRep, A1: AlgebraElement, A2: AlgebraElement) -> dict:
    """``<1|A1 V A2|1>`` with ``V = |1><1|`` against ``rho(A1) rho(A2)``."""
    e = rep.gibbs_vector
    V = np.outer(e, e.conj())
    lhs = complex(e.conj() @ rep.matrix(A1) @ V @ rep.matrix(A2) @ e)
    state = GibbsState(rep.kT)
    rhs = complex(state.eval(A1)) * complex(state.eval(A2))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}


def polarization_check(v1, v2) -> dict:
    """``|v1><v2| + |v2><v1|`` against ``(|v1+v2><v1+v2| - |v1-v2><v1-v2|)/2``."""
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    lhs = np.outer(v1, v2.conj()) + np.outer(v2, v1.conj())
    s, d = v1 + v2, v1 - v2
    rhs = 0.5 * (np.outer(s, s.conj()) - np.outer(d, d.conj()))
    return {
        "residual": float(np.abs(lhs - rhs).max()),
        "rank": int(np.linalg.matrix_rank(lhs, tol=1e-10)),
        "lhs": lhs,
    }


def liouvillian_spectrum(rep: FockRep) -> np.ndarray:
    """Eigenvalues of ``jL`` on the levels with ``n_a + n_b < N`` (exact there)."""
    na, nb = np.divmod(np.arange(rep.N**2), rep.N)
    keep = (na + nb) < rep.N
    jL = 1j * rep.liouvillian[np.ix_(keep, keep)]
    return np.linalg.eigvalsh(jL)


def inner_symbolic(kT, A: AlgebraElement, B: AlgebraElement) -> complex:
    """Symbolic counterpart of :func:`gns_inner`."""
    return complex(GibbsState(kT).eval(multiply(adjoint(A), B)))


def commutator_window_residual(rep: FockRep, window: int | None = None) -> float:
    """``max |[Q,q] - 1|`` on single-mode levels below ``window`` (default ``N - 2``)."""
    w = rep.N - 2 if window is None else window
    C = rep.Q @ rep.q - rep.q @ rep.Q
    return float(np.abs(C[:w, :w] - np.eye(w)).max())
