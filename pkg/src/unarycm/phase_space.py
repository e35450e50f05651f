"""Commutative polynomial phase-space functions and their unary operators.

The Poisson bracket follows the sign convention

    {u, v} = du/dp * dv/dq - du/dq * dv/dp

which is the negative of the common textbook form ``u_q v_p - u_p v_q``.
With it ``{p, q} = 1`` and the derivation ``Z_p`` acts as ``d/dq``.  To
convert a textbook result, swap the arguments of every bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable

import numpy as np

from ._numbers import ONE, is_zero, to_coeff
from ._parse import format_terms, parse_terms

__all__ = [
    "PhasePolynomial",
    "UnaryPhaseOperator",
    "poisson_bracket",
    "apply_Y",
    "apply_Z",
    "Y",
    "Z",
    "check_semidirect_relations",
    "SemidirectReport",
]


class PhasePolynomial:
    """Polynomial ``u(q, p)`` with exact (or complex-float) coefficients.

    Parameters
    ----------
    terms : mapping
        ``{(i, j): coeff}`` for the monomial ``q**i p**j``.  Zero coefficients
        are dropped, so equal polynomials have equal term maps.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        for key, c in (terms or {}).items():
            i, j = key
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in {key}")
            c = to_coeff(c)
            if not is_zero(c):
                clean[(int(i), int(j))] = c
        self._terms = clean
        self._hash = None

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "PhasePolynomial":
        return cls({(0, 0): c})

    @classmethod
    def q(cls) -> "PhasePolynomial":
        return cls({(1, 0): 1})

    @classmethod
    def p(cls) -> "PhasePolynomial":
        return cls({(0, 1): 1})

    @classmethod
    def parse(cls, text: str) -> "PhasePolynomial":
        """Parse e.g. ``"3/2 q^2 p - j p^3"``."""
        out = {}
        for coeff, factors in parse_terms(text, {"q", "p"}):
            i = sum(k for s, k in factors if s == "q")
            j = sum(k for s, k in factors if s == "p")
            out[(i, j)] = out.get((i, j), 0) + coeff
        return cls(out)

    # -- inspection --------------------------------------------------------
    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, PhasePolynomial):
            return self._terms == other._terms
        try:
            return self == PhasePolynomial.constant(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"PhasePolynomial({self})"

    def __str__(self):
        items = sorted(self._terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0]))
        return format_terms(
            (c, " ".join(s if k == 1 else f"{s}^{k}" for s, k in (("q", i), ("p", j)) if k))
            for (i, j), c in items
        )

    # -- arithmetic --------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, PhasePolynomial):
            return other
        return PhasePolynomial.constant(other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out[k] + c if k in out else c
        return PhasePolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return PhasePolynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, PhasePolynomial):
            c = to_coeff(other)
            return PhasePolynomial({k: v * c for k, v in self._terms.items()})
        out = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out[key] + c1 * c2 if key in out else c1 * c2
        return PhasePolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = PhasePolynomial.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def dq(self) -> "PhasePolynomial":
        return PhasePolynomial({(i - 1, j): c * i for (i, j), c in self._terms.items() if i})

    def dp(self) -> "PhasePolynomial":
        return PhasePolynomial({(i, j - 1): c * j for (i, j), c in self._terms.items() if j})

    def evaluate(self, q, p):
        """Complex-float evaluation at arrays ``q``, ``p`` (broadcast)."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        out = np.zeros(np.broadcast(q, p).shape, dtype=complex)
        for (i, j), c in self._terms.items():
            out = out + complex(c) * q**i * p**j
        return out

    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self._terms.values())


def poisson_bracket(u: PhasePolynomial, v: PhasePolynomial) -> PhasePolynomial:
    """``{u, v} = u_p v_q - u_q v_p``."""
    return u.dp() * v.dq() - u.dq() * v.dp()


def apply_Y(u: PhasePolynomial, v: PhasePolynomial) -> PhasePolynomial:
    """Multiplication operator: ``Y_u(v) = u v``."""
    return u * v


def apply_Z(u: PhasePolynomial, v: PhasePolynomial) -> PhasePolynomial:
    """Hamiltonian vector field of ``u``: ``Z_u(v) = {u, v}``."""
    return poisson_bracket(u, v)


@dataclass(frozen=True)
class UnaryPhaseOperator:
    """A linear map on phase polynomials built from ``Y_u``, ``Z_u`` and composition.

    ``kind`` is ``"Y"`` or ``"Z"`` (with ``poly`` set) or ``"compose"`` (with
    ``factors`` applied right to left, as in operator products).
    """

    kind: str
    poly: PhasePolynomial | None = None
    factors: tuple = ()

    def __post_init__(self):
        if self.kind in ("Y", "Z"):
            if not isinstance(self.poly, PhasePolynomial):
                raise TypeError(f"{self.kind} operator needs a PhasePolynomial")
        elif self.kind == "compose":
            if not all(isinstance(f, UnaryPhaseOperator) for f in self.factors):
                raise TypeError("compose factors must be UnaryPhaseOperator")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")

    def apply(self, v: PhasePolynomial) -> PhasePolynomial:
        if self.kind == "Y":
            return apply_Y(self.poly, v)
        if self.kind == "Z":
            return apply_Z(self.poly, v)
        for f in reversed(self.factors):
            v = f.apply(v)
        return v

    __call__ = apply

    def __matmul__(self, other: "UnaryPhaseOperator") -> "UnaryPhaseOperator":
        left = self.factors if self.kind == "compose" else (self,)
        right = other.factors if other.kind == "compose" else (other,)
        return UnaryPhaseOperator("compose", factors=left + right)


def Y(u) -> UnaryPhaseOperator:
    return UnaryPhaseOperator("Y", poly=_as_poly(u))


def Z(u) -> UnaryPhaseOperator:
    return UnaryPhaseOperator("Z", poly=_as_poly(u))


def _as_poly(u) -> PhasePolynomial:
    if isinstance(u, PhasePolynomial):
        return u
    if isinstance(u, str):
        return PhasePolynomial.parse(u)
    return PhasePolynomial.constant(u)


def commutator_action(x: Callable, y: Callable, w: PhasePolynomial) -> PhasePolynomial:
    """``[X, Y] w = X(Y(w)) - Y(X(w))``."""
    return x(y(w)) - y(x(w))


@dataclass(frozen=True)
class SemidirectReport:
    """Residual polynomials of the three Y/Z commutation relations."""

    yy: PhasePolynomial
    zy: PhasePolynomial
    zz: PhasePolynomial

    @property
    def residuals(self) -> dict:
        return {"[Y_u,Y_v]": self.yy, "[Z_u,Y_v]-Y_{u,v}": self.zy, "[Z_u,Z_v]-Z_{u,v}": self.zz}

    @property
    def ok(self) -> bool:
        return all(r.is_zero() for r in self.residuals.values())


def check_semidirect_relations(u, v, w) -> SemidirectReport:
    """Apply ``[Y_u,Y_v]``, ``[Z_u,Y_v] - Y_{u,v}`` and ``[Z_u,Z_v] - Z_{u,v}`` to ``w``."""
    u, v, w = _as_poly(u), _as_poly(v), _as_poly(w)
    uv = poisson_bracket(u, v)
    yy = commutator_action(Y(u), Y(v), w)
    zy = commutator_action(Z(u), Y(v), w) - Y(uv)(w)
    zz = commutator_action(Z(u), Z(v), w) - Z(uv)(w)
    return SemidirectReport(yy, zy, zz)


def standard_operators():
    """The four generators acting on phase polynomials.

    ``q_hat``, ``p_hat`` multiply; ``Q_hat = Z_p`` differentiates in ``q`` and
    ``P_hat = Z_{-q}`` differentiates in ``p``.
    """
    q, p = PhasePolynomial.q(), PhasePolynomial.p()
    return {"q": Y(q), "p": Y(p), "Q": Z(p), "P": Z(-q)}


def liouvillian(hamiltonian) -> UnaryPhaseOperator:
    """``L u = {H, u}``."""
    return Z(hamiltonian)


def random_polynomial(rng, max_degree: int, max_terms: int = 6, denom: int = 7) -> PhasePolynomial:
    """Random polynomial with small rational coefficients (test helper)."""
    from fractions import Fraction

    n = int(rng.integers(1, max_terms + 1))
    terms = {}
    for _ in range(n):
        d = int(rng.integers(0, max_degree + 1))
        i = int(rng.integers(0, d + 1))
        num = int(rng.integers(-9, 10))
        terms[(i, d - i)] = Fraction(num, int(rng.integers(1, denom + 1)))
    return PhasePolynomial(terms)


def sum_polys(polys: Iterable[PhasePolynomial]) -> PhasePolynomial:
    out = PhasePolynomial()
    for p in polys:
        out = out + p
    return out


# Unit element, handy for Y_1.
UNIT = PhasePolynomial.constant(ONE)
