"""CHSH analysis: count tables, the Landau operator identity, an extremal
4x4 matrix model and two-level cat-state discrimination.

Count convention
----------------
``counts[B][b][A][a]`` with settings ``A, B in {0, 1}`` and detector
outcomes ``a, b in {1, 2}`` stored at indices 0 and 1.  Outcome 1 is read as
``+1`` and outcome 2 as ``-1``, so per setting pair

    E_AB = (n(a1,b1) - n(a2,b1) - n(a1,b2) + n(a2,b2)) / total

and the default CHSH combination is ``S = |E00 + E01 + E11 - E10|`` where
``E_AB`` lists Alice's setting first.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "CountTable",
    "CorrelationResult",
    "InsufficientDataError",
    "ChshOperators",
    "LandauReport",
    "CatReport",
    "correlations_from_counts",
    "landau_C",
    "extremal_model",
    "extremal_model_report",
    "cat_state",
    "cat_discriminate",
    "random_chsh_ops",
    "DEFAULT_SIGNS",
]

SQRT2 = np.sqrt(2.0)
# signs applied to (E00, E10, E01, E11)
DEFAULT_SIGNS = (1, -1, 1, 1)
SETTING_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))

COLUMNS = ("A0a1", "A0a2", "A1a1", "A1a2")
ROWS = ("B0b1", "B0b2", "B1b1", "B1b2")


class InsufficientDataError(ValueError):
    """A setting block has no counts."""


@dataclass(frozen=True, eq=False)
class CountTable:
    """Sixteen coincidence counts indexed ``[B][b][A][a]``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (2, 2, 2, 2):
            raise ValueError(f"counts must have shape (2,2,2,2), got {c.shape}")
        if not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValueError("counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_rows(cls, rows) -> "CountTable":
        """4x4 layout: rows ``B0b1, B0b2, B1b1, B1b2``; columns ``A0a1, A0a2, A1a1, A1a2``."""
        m = np.asarray(rows)
        if m.shape != (4, 4):
            raise ValueError(f"expected 4x4 counts, got {m.shape}")
        return cls(m.reshape(2, 2, 2, 2))

    def rows(self) -> np.ndarray:
        return self.counts.reshape(4, 4)

    def block(self, A: int, B: int) -> np.ndarray:
        """``n[a, b]`` for one setting pair."""
        return self.counts[B, :, A, :].T

    def total(self, A: int, B: int) -> int:
        return int(self.block(A, B).sum())

    def scaled_block(self, A: int, B: int, k: int) -> "CountTable":
        c = self.counts.copy()
        c[B, :, A, :] *= k
        return CountTable(c)

    @classmethod
    def read_csv(cls, source) -> "CountTable":
        """Read the 4x4 table; ``#`` lines are skipped and a leading label column is optional."""
        text = _read_text(source)
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = list(csv.reader(lines))
        if len(reader) != 5:
            raise ValueError(f"expected a header and 4 rows, got {len(reader)} lines")
        header = [h.strip() for h in reader[0]]
        labelled = len(header) == 5
        if len(header) not in (4, 5) or tuple(header[-4:]) != COLUMNS:
            raise ValueError(f"header must end with {','.join(COLUMNS)}")
        rows = []
        for k, row in enumerate(reader[1:], start=2):
            vals = row[1:] if labelled else row
            if len(vals) != 4:
                raise ValueError(f"row {k}: expected 4 counts")
            try:
                rows.append([int(v) for v in vals])
            except ValueError as exc:
                raise ValueError(f"row {k}: {exc}") from None
        return cls.from_rows(rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("label",) + COLUMNS)
        for name, row in zip(ROWS, self.rows()):
            w.writerow([name] + [int(x) for x in row])
        return buf.getvalue()

    @classmethod
    def read_json(cls, source) -> "CountTable":
        """``{"counts": [[...4...] x4]}`` in the row layout, or a bare 4x4 list."""
        obj = json.loads(_read_text(source))
        if isinstance(obj, dict):
            obj = obj["counts"]
        return cls.from_rows(obj)

    @classmethod
    def bundled(cls) -> "CountTable":
        """The reference count table shipped with the package."""
        ref = resources.files("unarycm") / "data" / "table1_counts.csv"
        return cls.read_csv(ref.read_text())


def _read_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str) and "\n" not in source and Path(source).exists():
        return Path(source).read_text()
    return str(source)


@dataclass(frozen=True)
class CorrelationResult:
    """Four setting-pair correlations, the CHSH value and binomial standard errors."""

    E00: float
    E10: float
    E01: float
    E11: float
    S: float
    se: dict
    se_S: float
    signs: tuple = DEFAULT_SIGNS

    def as_dict(self) -> dict:
        return {"E00": self.E00, "E10": self.E10, "E01": self.E01, "E11": self.E11, "S": self.S, "se_S": self.se_S}


def correlations_from_counts(table: CountTable, signs=DEFAULT_SIGNS) -> CorrelationResult:
    """Correlations ``E_AB`` and ``S = |sum_k sign_k E_k|`` over ``(E00, E10, E01, E11)``.

    The standard error of each ``E`` is ``sqrt((1 - E^2) / n)`` with ``n`` the
    block total; ``se_S`` adds the four in quadrature.

    Raises
    ------
    InsufficientDataError
        If any setting block is empty.
    """
    if len(signs) != 4 or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be four entries of +1 or -1")
    E, se = {}, {}
    for A, B in SETTING_ORDER:
        n = table.block(A, B)
        tot = n.sum()
        if tot <= 0:
            raise InsufficientDataError(f"setting block A={A}, B={B} is empty")
        e = (n[0, 0] - n[1, 0] - n[0, 1] + n[1, 1]) / tot
        E[(A, B)] = float(e)
        se[(A, B)] = float(np.sqrt(max(1 - e * e, 0.0) / tot))
    S = abs(sum(s * E[k] for s, k in zip(signs, SETTING_ORDER)))
    se_S = float(np.sqrt(sum(v * v for v in se.values())))
    return CorrelationResult(E[(0, 0)], E[(1, 0)], E[(0, 1)], E[(1, 1)], float(S), se, se_S, tuple(signs))


# -- operators ----------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ChshOperators:
    """Four +-1-valued observables with Alice's pair commuting with Bob's."""

    a: np.ndarray
    ap: np.ndarray
    b: np.ndarray
    bp: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        d = np.asarray(self.a).shape[0]
        for name in ("a", "ap", "b", "bp"):
            m = np.asarray(getattr(self, name))
            if m.shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}")
            if np.abs(m - m.conj().T).max() > self.tol:
                raise ValueError(f"{name} is not Hermitian")
            if np.abs(m @ m - np.eye(d)).max() > self.tol:
                raise ValueError(f"{name} does not square to 1")
            object.__setattr__(self, name, m)
        for x in ("a", "ap"):
            for y in ("b", "bp"):
                X, Y = getattr(self, x), getattr(self, y)
                if np.abs(X @ Y - Y @ X).max() > self.tol:
                    raise ValueError(f"[{x},{y}] != 0")

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def C(self) -> np.ndarray:
        a, ap, b, bp = self.a, self.ap, self.b, self.bp
        return a @ b + a @ bp + ap @ bp - ap @ b

    def expectations(self, rho) -> dict:
        """``rho(ab), rho(ab'), rho(a'b'), rho(a'b)``."""
        rho = np.asarray(rho)
        tr = lambda X: float(np.trace(X @ rho).real)  # noqa: E731
        return {
            "ab": tr(self.a @ self.b),
            "abp": tr(self.a @ self.bp),
            "apbp": tr(self.ap @ self.bp),
            "apb": tr(self.ap @ self.b),
        }


@dataclass(frozen=True)
class LandauReport:
    C: np.ndarray
    C2: np.ndarray
    residual: float
    norm_C2: float
    commuting: bool


def landau_C(ops: ChshOperators) -> LandauReport:
    """``C`` and the residual of ``C^2 = 4 + [a, a'][b, b']``."""
    C = ops.C()
    C2 = C @ C
    ca = ops.a @ ops.ap - ops.ap @ ops.a
    cb = ops.b @ ops.bp - ops.bp @ ops.b
    res = float(np.abs(C2 - 4 * np.eye(ops.dim) - ca @ cb).max())
    commuting = bool(np.abs(ca).max() <= 1e-12 or np.abs(cb).max() <= 1e-12)
    return LandauReport(C, C2, res, float(np.linalg.norm(C2, 2)), commuting)


# Reference matrices of the extremal model, integer entries.
A_MAT = np.diag([1, -1, 1, -1])
AP_MAT = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
B_MAT = np.diag([1, 1, -1, -1])
BP_MAT = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
C_REFERENCE = np.array([[1, -1, 1, 1], [-1, -1, 1, -1], [1, 1, -1, 1], [1, -1, 1, 1]])
C2_REFERENCE = np.array([[4, 0, 0, 4], [0, 4, -4, 0], [0, -4, 4, 0], [4, 0, 0, 4]])


def extremal_model():
    """Extremal 4x4 model: operators, the unit eigenvector ``psi`` and ``rho = psi psi+``.

    Returns ``(ops, psi, rho, rho_plus)`` with ``rho = (C^2 - 2 sqrt2 C)/16``
    and ``rho_plus = (C^2 + 2 sqrt2 C)/16``.
    """
    ops = ChshOperators(*(m.astype(float) for m in (A_MAT, AP_MAT, B_MAT, BP_MAT)))
    C = ops.C()
    C2 = C @ C
    rho = (C2 - 2 * SQRT2 * C) / 16
    rho_plus = (C2 + 2 * SQRT2 * C) / 16
    lo, hi = np.sqrt(SQRT2 - 1), np.sqrt(SQRT2 + 1)
    psi = np.array([lo, hi, -hi, lo]) / np.sqrt(4 * SQRT2)
    return ops, psi, rho, rho_plus


def extremal_model_report() -> dict:
    """Named identity checks of the extremal model, each ``{"value", "target", "pass"}``."""
    mats = {"a": A_MAT, "a'": AP_MAT, "b": B_MAT, "b'": BP_MAT}
    I4 = np.eye(4, dtype=int)
    C = A_MAT @ B_MAT + A_MAT @ BP_MAT + AP_MAT @ BP_MAT - AP_MAT @ B_MAT
    C2 = C @ C
    out = {}

    def exact(name, ok, value="", target=""):
        out[name] = {"value": value, "target": target, "pass": bool(ok)}

    def close(name, value, target, tol):
        out[name] = {"value": value, "target": target, "pass": bool(abs(value - target) <= tol)}

    for k, m in mats.items():
        exact(f"{k}^2 = 1", np.array_equal(m @ m, I4))
    exact("C matches reference", np.array_equal(C, C_REFERENCE))
    exact("C^2 matches reference", np.array_equal(C2, C2_REFERENCE))
    exact("C^3 = 8C", np.array_equal(C2 @ C, 8 * C))
    exact("Tr C = 0", np.trace(C) == 0, int(np.trace(C)), 0)
    exact("Tr C^2 = 16", np.trace(C2) == 16, int(np.trace(C2)), 16)

    ops, psi, rho, rho_plus = extremal_model()
    Cf = ops.C()
    close("Tr[C rho]", float(np.trace(Cf @ rho).real), -2 * SQRT2, 1e-12)
    close("Tr[C rho_plus]", float(np.trace(Cf @ rho_plus).real), 2 * SQRT2, 1e-12)
    close("rho = psi psi+", float(np.abs(rho - np.outer(psi, psi)).max()), 0.0, 1e-12)
    close("|psi| = 1", float(np.linalg.norm(psi)), 1.0, 1e-12)
    for name, m in (("a", ops.a), ("a'", ops.ap), ("b", ops.b), ("b'", ops.bp)):
        close(f"rho({name})", float(np.trace(m @ rho).real), 0.0, 1e-12)
    ex = ops.expectations(rho)
    targets = {"ab": -SQRT2 / 2, "abp": -SQRT2 / 2, "apbp": -SQRT2 / 2, "apb": SQRT2 / 2}
    for k, t in targets.items():
        close(f"rho({k})", ex[k], t, 1e-12)
    S = abs(ex["ab"] + ex["abp"] + ex["apbp"] - ex["apb"])
    close("S", S, 2 * SQRT2, 1e-12)
    close("Landau identity", landau_C(ops).residual, 0.0, 1e-11)
    return out


# -- cat states ---------------------------------------------------------------
C1 = np.array([[0, 1], [1, 0]], dtype=complex)
C2 = np.array([[0, 1j], [-1j, 0]], dtype=complex)
A_DIAG = np.diag([1.0, 0.0])


def cat_state(alpha: float, beta: complex = 0.0) -> np.ndarray:
    """``[[alpha, beta], [beta*, 1 - alpha]]``; requires ``|beta|^2 <= alpha (1 - alpha)``."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if abs(beta) ** 2 > alpha * (1 - alpha) + 1e-15:
        raise ValueError("|beta|^2 exceeds alpha(1 - alpha)")
    return np.array([[alpha, beta], [np.conj(beta), 1 - alpha]], dtype=complex)


def mixture_state(alpha: float) -> np.ndarray:
    """Diagonal mixture ``M_alpha``."""
    return cat_state(alpha, 0.0)


def superposition_state(alpha: float) -> np.ndarray:
    """Pure ``S_alpha`` with real positive off-diagonal ``sqrt(alpha (1 - alpha))``."""
    return cat_state(alpha, np.sqrt(alpha * (1 - alpha)))


@dataclass(frozen=True)
class CatReport:
    alpha: float
    beta: complex
    c1: float
    c2: float
    kind: str


def cat_discriminate(rho, tol: float = 1e-10) -> CatReport:
    """Recover ``beta`` from ``<C1> = 2 Re beta`` and ``<C2> = 2 Im beta``.

    ``kind`` is ``"pure"`` when ``|beta|^2 = alpha (1 - alpha)``, ``"mixed"``
    when ``beta = 0`` and ``"intermediate"`` otherwise, all within ``tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("cat state must be 2x2")
    c1 = float(np.trace(C1 @ rho).real)
    c2 = float(np.trace(C2 @ rho).real)
    beta = (c1 + 1j * c2) / 2
    alpha = float(np.trace(A_DIAG @ rho).real)
    bound = alpha * (1 - alpha)
    if abs(abs(beta) ** 2 - bound) <= tol:
        kind = "pure"
    elif abs(beta) <= tol:
        kind = "mixed"
    else:
        kind = "intermediate"
    return CatReport(alpha, complex(beta), c1, c2, kind)


# -- random models ------------------------------------------------------------
def _reflection(rng, d: int, U=None) -> np.ndarray:
    """Random Hermitian involution ``U diag(+-1) U+`` with both signs present when ``d > 1``."""
    from .measurement import random_unitary

    if U is None:
        U = random_unitary(rng, d)
    s = rng.choice([-1.0, 1.0], size=d)
    if d > 1 and abs(s.sum()) == d:
        s[0] = -s[0]
    return (U * s) @ U.conj().T


def random_chsh_ops(rng, dA: int, dB: int, commuting: bool = False) -> ChshOperators:
    """Random model on ``C^dA (x) C^dB``.

    With ``commuting=True`` Alice's two observables share an eigenbasis, so
    ``[a, a'] = 0``.
    """
    from .measurement import random_unitary

    if commuting:
        U = random_unitary(rng, dA)
        a, ap = _reflection(rng, dA, U), _reflection(rng, dA, U)
    else:
        a, ap = _reflection(rng, dA), _reflection(rng, dA)
    b, bp = _reflection(rng, dB), _reflection(rng, dB)
    IA, IB = np.eye(dA), np.eye(dB)
    return ChshOperators(np.kron(a, IB), np.kron(ap, IB), np.kron(IA, b), np.kron(IA, bp), tol=1e-10)


def max_abs_expectation(C: np.ndarray) -> float:
    """``max_rho |Tr[C rho]|``: the largest absolute eigenvalue of Hermitian ``C``."""
    return float(np.abs(np.linalg.eigvalsh((C + C.conj().T) / 2)).max())
