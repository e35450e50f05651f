"""Gibbs equilibrium state of the oscillator as a functional on the algebra.

The state annihilates every normal-ordered word containing a generator, so
evaluation reads off the scalar coefficient.  Closed forms for moments and
the Gaussian generating function are provided alongside, together with
quadrature moments of ``exp(-H/kT)`` for a general polynomial ``H``.

``beta`` is read as ``1/kT`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

import numpy as np

from .phase_space import PhasePolynomial
from .weyl_algebra import AlgebraElement, CanonicalGenerators, FVector, adjoint, multiply

__all__ = [
    "GibbsState",
    "GeneralGibbsDensity",
    "DivergenceError",
    "double_factorial_odd",
    "moment_qp",
    "raw_moment",
    "char_function",
    "generating_function",
    "general_hamiltonian_moment",
    "symbolic_moment",
    "taylor_closed_form",
    "taylor_symbolic",
    "generating_function_truncated",
]


class DivergenceError(ValueError):
    """The Gibbs weight is not normalizable on the quadrature grid."""


@dataclass(frozen=True)
class GibbsState:
    """Linear, positive, normalized functional ``rho`` at temperature ``kT``."""

    kT: float = 1

    def __post_init__(self):
        if not self.kT > 0:
            raise ValueError("kT must be positive")

    def generators(self) -> CanonicalGenerators:
        return CanonicalGenerators(self.kT)

    def eval(self, A: AlgebraElement):
        """``rho(A)``: the coefficient of the unit word."""
        return A.coefficient((0, 0, 0, 0))

    __call__ = eval

    def inner(self, A: AlgebraElement, B: AlgebraElement):
        """GNS scalar product ``<A|B> = rho(A+ B)``."""
        return self.eval(multiply(adjoint(A), B))


def double_factorial_odd(k: int) -> int:
    """``(2k)! / (2^k k!) = (2k-1)!!``."""
    return factorial(2 * k) // (2**k * factorial(k))


def moment_qp(m: int, n: int, kT=1):
    """``rho(q^(2m) p^(2n)) = kT^(m+n) (2m)!/(2^m m!) (2n)!/(2^n n!)``.

    Exact when ``kT`` is an int or Fraction.
    """
    if m < 0 or n < 0:
        raise ValueError("m, n must be non-negative")
    kt = Fraction(kT) if isinstance(kT, (int, Fraction)) else kT
    return kt ** (m + n) * double_factorial_odd(m) * double_factorial_odd(n)


def raw_moment(m: int, n: int, kT=1):
    """``rho(q^m p^n)``: zero when either power is odd."""
    if m % 2 or n % 2:
        return Fraction(0) if isinstance(kT, (int, Fraction)) else 0.0
    return moment_qp(m // 2, n // 2, kT)


def char_function(lam: float, mu: float, kT: float = 1) -> complex:
    """``rho(exp(j lam q + j mu p)) = exp(-kT (lam^2 + mu^2) / 2)``."""
    return complex(np.exp(-kT * (lam * lam + mu * mu) / 2))


def generating_function(pairs: Sequence[tuple[float, FVector]], kT: float = 1) -> complex:
    """``rho(exp(j l1 F_f1) ... exp(j ln F_fn))``.

    Equal to ``exp[-kT (S, S)/2 - kT sum_{i<j} l_i l_j omega(f_i, f_j) / 2]``
    with ``S = sum_i l_i f_i``.  The pairwise weights ``l_i l_j`` come from
    the Baker-Campbell-Hausdorff merge of neighbouring exponentials.
    """
    pairs = list(pairs)
    if not pairs:
        return 1.0 + 0j
    total = FVector()
    for lam, f in pairs:
        total = total + f * lam
    exponent = -kT * total.inner(total) / 2
    for i in range(len(pairs)):
        li, fi = pairs[i]
        for j in range(i + 1, len(pairs)):
            lj, fj = pairs[j]
            exponent = exponent - kT * li * lj * fi.omega(fj) / 2
    return complex(np.exp(exponent))


def generating_quadratic_form(fs: Sequence[FVector], kT: float = 1) -> np.ndarray:
    """Matrix ``M`` with ``log G(l) = l^T M l`` (upper-triangular pair terms folded in)."""
    n = len(fs)
    M = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            M[i, j] += -kT * fs[i].inner(fs[j]) / 2
            if i < j:
                M[i, j] += -kT * fs[i].omega(fs[j]) / 2
    return M


@dataclass(frozen=True)
class GeneralGibbsDensity:
    """``P(q, p) = exp(-H(q, p)/kT) / N`` on a square Gauss-Legendre grid.

    Parameters
    ----------
    H : PhasePolynomial
        Real Hamiltonian, bounded below on the grid.
    kT : float
    half_width : float, optional
        Half side of the square; defaults to ``8 sqrt(kT) * scale``.
    nodes : int
        Gauss-Legendre nodes per axis.
    scale : float
        Length scale of ``H`` used by the default ``half_width``.
    """

    H: PhasePolynomial
    kT: float = 1.0
    half_width: float | None = None
    nodes: int = 201
    scale: float = 1.0
    boundary_tol: float = 1e-12
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.kT > 0:
            raise ValueError("kT must be positive")
        if not self.H.is_real():
            raise ValueError("H must have real coefficients")

    @property
    def L(self) -> float:
        if self.half_width is not None:
            return float(self.half_width)
        return 8.0 * np.sqrt(self.kT) * self.scale

    def grid(self):
        """Nodes ``x`` and weights ``w`` for one axis."""
        if "grid" not in self._cache:
            x, w = np.polynomial.legendre.leggauss(self.nodes)
            self._cache["grid"] = (x * self.L, w * self.L)
        return self._cache["grid"]

    def weights(self):
        """Unnormalized ``exp(-(H - Hmin)/kT)`` times quadrature weights, and ``log N``."""
        if "weights" in self._cache:
            return self._cache["weights"]
        x, w = self.grid()
        Q, P = np.meshgrid(x, x, indexing="ij")
        h = self.H.evaluate(Q, P).real
        if not np.all(np.isfinite(h)):
            raise DivergenceError("H is not finite on the grid")
        hmin = h.min()
        expo = -(h - hmin) / self.kT
        dens = np.exp(expo)
        edge = np.concatenate([dens[0], dens[-1], dens[:, 0], dens[:, -1]])
        # Gauss nodes stop short of the boundary; check the outermost ring.
        if edge.max() > self.boundary_tol * dens.max():
            raise DivergenceError(
                f"Gibbs weight at grid edge is {edge.max() / dens.max():.3g} of its peak; "
                "H is not confining on this range"
            )
        ww = dens * np.outer(w, w)
        norm = ww.sum()
        if not np.isfinite(norm) or norm <= 0:
            raise DivergenceError("normalization failed")
        log_N = np.log(norm) - hmin / self.kT
        self._cache["weights"] = (Q, P, ww / norm, log_N)
        return self._cache["weights"]

    def normalization(self) -> float:
        return float(np.exp(self.weights()[3]))

    def density(self, q, p):
        """Normalized density at arbitrary points."""
        log_N = self.weights()[3]
        return np.exp(-self.H.evaluate(q, p).real / self.kT - log_N)


def general_hamiltonian_moment(gd: GeneralGibbsDensity, m: int, n: int) -> float:
    """``int q^m p^n exp(-H/kT)/N dq dp`` by tensor Gauss-Legendre quadrature."""
    Q, P, W, _ = gd.weights()
    return float(np.sum(W * Q**m * P**n))


def symbolic_moment(m: int, n: int, kT=1):
    """``rho`` of normal-ordered ``q^m p^n`` through the algebra."""
    g = CanonicalGenerators(kT)
    return GibbsState(kT).eval(g.monomial(m, n))


def _multi_indices(n: int, order: int):
    """All ``k`` in ``N^n`` with ``|k| <= order``, by total degree."""
    if n == 0:
        yield ()
        return
    for total in range(order + 1):
        yield from _compositions(total, n)


def _compositions(total: int, n: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


def taylor_closed_form(fs: Sequence[FVector], kT: float = 1, order: int = 6) -> dict:
    """Taylor coefficients in ``l`` of the closed-form generating function.

    Expands ``exp(l^T M l)`` as a truncated power series; independent of the
    operator algebra.
    """
    n = len(fs)
    M = generating_quadratic_form(fs, kT)
    quad = {}
    for i in range(n):
        for j in range(i, n):
            k = [0] * n
            k[i] += 1
            k[j] += 1
            c = M[i, j] + (M[j, i] if i != j else 0)
            if c != 0:
                quad[tuple(k)] = quad.get(tuple(k), 0) + c

    def mul(x, y):
        out = {}
        for kx, cx in x.items():
            for ky, cy in y.items():
                k = tuple(a + b for a, b in zip(kx, ky))
                if sum(k) <= order:
                    out[k] = out.get(k, 0) + cx * cy
        return out

    series = {(0,) * n: 1.0 + 0j}
    power = {(0,) * n: 1.0 + 0j}
    for r in range(1, order // 2 + 1):
        power = mul(power, quad)
        for k, c in power.items():
            series[k] = series.get(k, 0) + c / factorial(r)
    return {k: complex(series.get(k, 0)) for k in _multi_indices(n, order)}


def taylor_symbolic(fs: Sequence[FVector], kT=1, order: int = 6) -> dict:
    """Taylor coefficients from the algebra: ``rho(prod_i (j F_i)^k_i / k_i!)``."""
    g = CanonicalGenerators(kT)
    state = GibbsState(kT)
    jF = [g.F(f) * 1j for f in fs]
    powers = [[AlgebraElement.one()] for _ in fs]
    for i in range(len(fs)):
        for _ in range(order):
            powers[i].append(multiply(powers[i][-1], jF[i]))
    out = {}
    for k in _multi_indices(len(fs), order):
        prod = AlgebraElement.one()
        denom = 1
        for i, ki in enumerate(k):
            prod = multiply(prod, powers[i][ki])
            denom *= factorial(ki)
        out[k] = complex(state.eval(prod)) / denom
    return out


def generating_function_truncated(pairs, kT=1, order: int = 6) -> complex:
    """``rho(prod_i exp_order(j l_i F_i))`` with each exponential truncated at ``order``."""
    from .weyl_algebra import exp_truncated

    g = CanonicalGenerators(kT)
    prod = AlgebraElement.one()
    for lam, f in pairs:
        prod = multiply(prod, exp_truncated(g.F(f) * (1j * lam), order))
    return complex(GibbsState(kT).eval(prod))
