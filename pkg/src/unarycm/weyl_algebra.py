"""The *-algebra generated by two ladder pairs ``a, a+`` and ``b, b+``.

Elements are kept in normal order.  A word ``(m, n, r, s)`` stands for
``ad^m a^n bd^r b^s``: a-mode before b-mode, daggered before undaggered.
The imaginary unit is central with ``j+ = -j`` and is folded into complex
coefficients; the adjoint conjugates them.

Canonical generators, for ``kT > 0``::

    q = (a + ad) sqrt(kT)        p = (b + bd) sqrt(kT)
    Q = (a - ad) / (2 sqrt(kT))  P = (b - bd) / (2 sqrt(kT))

so that ``[Q, q] = [P, p] = 1`` and ``q, p`` commute.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, sqrt
from types import MappingProxyType

from ._numbers import J, CRational, exact_sqrt, is_zero, to_coeff
from ._parse import format_terms, parse_terms

__all__ = [
    "AlgebraElement",
    "CanonicalGenerators",
    "FVector",
    "ResourceLimitError",
    "multiply",
    "adjoint",
    "commutator",
    "exp_truncated",
    "MAX_EXP_ORDER",
]

MAX_EXP_ORDER = 8


class ResourceLimitError(RuntimeError):
    """A requested expansion exceeds the configured size limit."""


def _mode_product(w1, w2):
    """Normal-order ``(ad^m a^n)(ad^k a^l)`` for one mode.

    Returns ``[((power_ad, power_a), integer_weight), ...]`` using
    ``a^n ad^k = sum_i C(n,i) C(k,i) i! ad^(k-i) a^(n-i)``.
    """
    m, n = w1
    k, l = w2
    return [
        ((m + k - i, n + l - i), comb(n, i) * comb(k, i) * factorial(i))
        for i in range(min(n, k) + 1)
    ]


class AlgebraElement:
    """Normal-ordered polynomial in ``a, ad, b, bd``.

    Parameters
    ----------
    terms : mapping
        ``{(m, n, r, s): coeff}`` meaning ``coeff * ad^m a^n bd^r b^s``.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        for word, c in (terms or {}).items():
            if len(word) != 4 or min(word) < 0:
                raise ValueError(f"bad word {word!r}")
            c = to_coeff(c)
            if not is_zero(c):
                clean[tuple(int(x) for x in word)] = c
        self._terms = clean
        self._hash = None

    # -- constructors --------------------------------------------------------
    @classmethod
    def scalar(cls, c) -> "AlgebraElement":
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def one(cls) -> "AlgebraElement":
        return cls.scalar(1)

    @classmethod
    def a(cls):
        return cls({(0, 1, 0, 0): 1})

    @classmethod
    def ad(cls):
        return cls({(1, 0, 0, 0): 1})

    @classmethod
    def b(cls):
        return cls({(0, 0, 0, 1): 1})

    @classmethod
    def bd(cls):
        return cls({(0, 0, 1, 0): 1})

    @classmethod
    def parse(cls, text: str, kT=1) -> "AlgebraElement":
        """Parse e.g. ``"2 ad^2 a + j b"``.

        Factors multiply left to right in the order written.  ``q, p, Q, P``
        expand through :class:`CanonicalGenerators` at ``kT``.
        """
        gens = None
        base = {"a": cls.a(), "ad": cls.ad(), "b": cls.b(), "bd": cls.bd()}
        out = cls()
        for coeff, factors in parse_terms(text, {"a", "ad", "b", "bd", "q", "p", "Q", "P"}):
            term = cls.scalar(coeff)
            for sym, k in factors:
                if sym in base:
                    g = base[sym]
                else:
                    if gens is None:
                        gens = CanonicalGenerators(kT)
                    g = getattr(gens, sym)
                term = term * g**k
            out = out + term
        return out

    # -- inspection ----------------------------------------------------------
    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def coefficient(self, word) -> complex:
        """Coefficient of ``word``; an absent word gives an exact zero when the element is exact."""
        word = tuple(word)
        if word in self._terms:
            return self._terms[word]
        return CRational(0) if self.is_exact() else 0j

    def degree(self) -> int:
        return max((sum(w) for w in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def is_exact(self) -> bool:
        from ._numbers import is_exact

        return all(is_exact(c) for c in self._terms.values())

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, AlgebraElement):
            return self._terms == other._terms
        try:
            return self == AlgebraElement.scalar(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        return f"AlgebraElement({self})"

    def __str__(self):
        def mono(word):
            names = ("ad", "a", "bd", "b")
            return " ".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, word) if k)

        items = sorted(self._terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-x for x in kv[0])))
        return format_terms((c, mono(w)) for w, c in items)

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self._terms.values()), default=0.0)

    def isclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        return (self - other).max_abs_coeff() <= atol

    # -- arithmetic ----------------------------------------------------------
    @staticmethod
    def _lift(other) -> "AlgebraElement":
        if isinstance(other, AlgebraElement):
            return other
        return AlgebraElement.scalar(other)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out[w] + c if w in out else c
        return AlgebraElement(out)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, AlgebraElement):
            c = to_coeff(other)
            return AlgebraElement({w: v * c for w, v in self._terms.items()})
        return multiply(self, other)

    def __rmul__(self, other):
        c = to_coeff(other)
        return AlgebraElement({w: c * v for w, v in self._terms.items()})

    def __truediv__(self, other):
        c = to_coeff(other)
        return AlgebraElement({w: v / c for w, v in self._terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = AlgebraElement.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def dagger(self) -> "AlgebraElement":
        return adjoint(self)


def multiply(A: AlgebraElement, B: AlgebraElement) -> AlgebraElement:
    """Normal-ordered product ``A B``."""
    out = {}
    for (m1, n1, r1, s1), c1 in A._terms.items():
        for (m2, n2, r2, s2), c2 in B._terms.items():
            c12 = c1 * c2
            for (pa, qa), wa in _mode_product((m1, n1), (m2, n2)):
                for (pb, qb), wb in _mode_product((r1, s1), (r2, s2)):
                    word = (pa, qa, pb, qb)
                    val = c12 * (wa * wb)
                    out[word] = out[word] + val if word in out else val
    return AlgebraElement(out)


def adjoint(A: AlgebraElement) -> AlgebraElement:
    """``(c ad^m a^n bd^r b^s)+ = c* ad^n a^m bd^s b^r``."""
    return AlgebraElement({(n, m, s, r): c.conjugate() for (m, n, r, s), c in A._terms.items()})


def commutator(A: AlgebraElement, B: AlgebraElement) -> AlgebraElement:
    return multiply(A, B) - multiply(B, A)


def exp_truncated(A: AlgebraElement, order: int, max_order: int = MAX_EXP_ORDER) -> AlgebraElement:
    """Taylor polynomial ``sum_{k<=order} A^k / k!``.

    Raises
    ------
    ResourceLimitError
        If ``order`` exceeds ``max_order``.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if order > max_order:
        raise ResourceLimitError(f"order {order} exceeds limit {max_order}")
    out = AlgebraElement.one()
    power = AlgebraElement.one()
    for k in range(1, order + 1):
        power = multiply(power, A)
        out = out + power * Fraction(1, factorial(k))
    return out


def _exact_or_float(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float) and x.is_integer():
        return Fraction(int(x))
    return float(x)


def _sqrt_coeff(kT):
    """``sqrt(kT)`` exactly when ``kT`` is a rational square, else a float."""
    x = _exact_or_float(kT)
    if isinstance(x, Fraction):
        r = exact_sqrt(x)
        if r is not None:
            return r
    return sqrt(float(kT))


class CanonicalGenerators:
    """``q, p, Q, P`` and derived operators at temperature ``kT``.

    Coefficients stay exact when ``sqrt(kT)`` is rational (e.g. ``kT=1``,
    ``kT=Fraction(9, 4)``); otherwise they are complex floats.
    """

    def __init__(self, kT=1):
        if not kT > 0:
            raise ValueError("kT must be positive")
        self.kT = kT
        rt = _sqrt_coeff(kT)
        self.sqrt_kT = rt
        self._kT_coeff = _exact_or_float(kT)
        a, ad, b, bd = AlgebraElement.a(), AlgebraElement.ad(), AlgebraElement.b(), AlgebraElement.bd()
        half_inv = Fraction(1, 2) / rt if isinstance(rt, Fraction) else 0.5 / rt
        self.q = (a + ad) * rt
        self.p = (b + bd) * rt
        self.Q = (a - ad) * half_inv
        self.P = (b - bd) * half_inv

    @property
    def one(self):
        return AlgebraElement.one()

    def hamiltonian(self) -> AlgebraElement:
        """``H = (q^2 + p^2) / 2``."""
        return (self.q * self.q + self.p * self.p) * Fraction(1, 2)

    def liouvillian(self) -> AlgebraElement:
        """``L = p Q - q P``; anti-self-adjoint."""
        return self.p * self.Q - self.q * self.P

    def F(self, f: "FVector") -> AlgebraElement:
        """``F_f = f1 q + f2 p + 2 kT (f3 j Q + f4 j P)``."""
        f1, f2, f3, f4 = (to_coeff(x) for x in f.components)
        two_kT_j = to_coeff(self._kT_coeff) * 2 * J
        return self.q * f1 + self.p * f2 + self.Q * (two_kT_j * f3) + self.P * (two_kT_j * f4)

    def monomial(self, m: int, n: int) -> AlgebraElement:
        """Normal-ordered ``q^m p^n``."""
        return self.q**m * self.p**n


@dataclass(frozen=True)
class FVector:
    """Real 4-vector ``(f1, f2, f3, f4)`` labelling ``F_f``."""

    f1: float = 0
    f2: float = 0
    f3: float = 0
    f4: float = 0

    @property
    def components(self):
        return (self.f1, self.f2, self.f3, self.f4)

    def __add__(self, other: "FVector") -> "FVector":
        return FVector(*(x + y for x, y in zip(self.components, other.components)))

    def __mul__(self, lam) -> "FVector":
        return FVector(*(lam * x for x in self.components))

    __rmul__ = __mul__

    def inner(self, other: "FVector"):
        """Symmetric form ``(f, g) = f1 g1 + f2 g2 + f3 g3 + f4 g4``."""
        return sum(x * y for x, y in zip(self.components, other.components))

    def omega(self, other: "FVector"):
        """Antisymmetric form ``2j [f3 g1 - f1 g3 + f4 g2 - f2 g4]`` (purely imaginary)."""
        f1, f2, f3, f4 = self.components
        g1, g2, g3, g4 = other.components
        return 2j * (f3 * g1 - f1 * g3 + f4 * g2 - f2 * g4)


def scalar_part(A: AlgebraElement):
    """Coefficient of the empty word."""
    return A._terms.get((0, 0, 0, 0), 0)

