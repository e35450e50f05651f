"""Acceptance checks shared by ``unarycm verify-all`` and the test suite.

Each check returns a :class:`CheckResult`; a check passes only when every
numerical condition holds and it finishes inside its runtime budget.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

SQRT2 = np.sqrt(2.0)


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    runtime: float
    budget: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.key} {self.title} ({self.runtime:.2f}s / {self.budget:g}s): {self.detail}"


def _fmt(d: dict) -> str:
    return ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items())


# 1 ------------------------------------------------------------------------------
def check_table1(seed: int = 0):
    from .bell import CountTable, correlations_from_counts

    r = correlations_from_counts(CountTable.bundled())
    target = {"E00": -0.694, "E10": 0.708, "E01": -0.614, "E11": -0.698}
    ok = all(abs(getattr(r, k) - v) <= 0.0005 for k, v in target.items()) and abs(r.S - 2.714) <= 0.001
    return ok, _fmt({k: round(getattr(r, k), 5) for k in target} | {"S": round(r.S, 5)})


# 2 ------------------------------------------------------------------------------
def check_extremal_model(seed: int = 0):
    from .bell import extremal_model_report

    rep = extremal_model_report()
    failed = [k for k, v in rep.items() if not v["pass"]]
    return not failed, f"{len(rep) - len(failed)}/{len(rep)} identities hold" + (f"; failed: {failed}" if failed else "")


# 3 ------------------------------------------------------------------------------
def check_moments(seed: int = 0):
    from ._numbers import is_exact
    from .gibbs_state import raw_moment, symbolic_moment, taylor_closed_form, taylor_symbolic
    from .weyl_algebra import FVector

    bad = []
    for m in range(9):
        for n in range(9 - m):
            s = symbolic_moment(m, n, 1)
            if not is_exact(s) or s != raw_moment(m, n, 1):
                bad.append((m, n))
    rng = np.random.default_rng(seed)
    worst, ncoef = 0.0, 0
    configs = 20
    for k in range(configs):
        nf = 2 + k % 2
        fs = [FVector(*rng.uniform(-1, 1, 4)) for _ in range(nf)]
        a = taylor_symbolic(fs, 1, order=6)
        b = taylor_closed_form(fs, 1, order=6)
        for key in a:
            worst = max(worst, abs(a[key] - b[key]))
            ncoef += 1
    ok = not bad and worst <= 1e-12
    return ok, _fmt({"moment_mismatches": len(bad), "configs": configs, "coefficients": ncoef, "max_taylor_err": worst})


# 4 ------------------------------------------------------------------------------
def check_luders(seed: int = 0, trials: int = 500):
    from .measurement import luders_observable, luders_state, random_density, random_hermitian, spectral

    rng = np.random.default_rng(seed)
    w_id = w_fix = w_comm = 0.0
    for t in range(trials):
        d = int(rng.integers(2, 9))
        A = random_hermitian(rng, d, degenerate=(t % 3 == 0))
        X = random_hermitian(rng, d)
        rho = random_density(rng, d)
        sp = spectral(A)
        rA = luders_state(rho, sp).matrix
        XA = luders_observable(X, sp).matrix
        w_id = max(w_id, abs(np.trace(A @ X @ rA) - np.trace(A @ XA @ rho)))
        w_fix = max(w_fix, float(np.abs(luders_observable(XA, sp).matrix - XA).max()))
        w_comm = max(w_comm, float(np.abs(A @ XA - XA @ A).max()))
    ok = max(w_id, w_fix, w_comm) <= 1e-11
    return ok, _fmt({"trials": trials, "trace_identity": w_id, "idempotence": w_fix, "commutator": w_comm})


# 5 ------------------------------------------------------------------------------
def check_repeat(seed: int = 0, trials: int = 100):
    from .measurement import random_density, random_hermitian, repeat_correlation

    rng = np.random.default_rng(seed)
    worst = marg = 0.0
    for t in range(trials):
        d = int(rng.integers(2, 9))
        rep = repeat_correlation(random_hermitian(rng, d, degenerate=(t % 2 == 0)), random_density(rng, d))
        worst = max(worst, rep.offdiag_mass)
        marg = max(marg, rep.marginal_residual)
    return worst <= 1e-12, _fmt({"trials": trials, "max_offdiag_mass": worst, "marginal_residual": marg})


# 6 ------------------------------------------------------------------------------
def check_instrument(seed: int = 0, trials: int = 100):
    from .measurement import InstrumentSetup, instrument_joint, random_unitary

    s = 1 / np.sqrt(2)
    ex = instrument_joint(InstrumentSetup(np.eye(2), np.array([[s, s], [s, -s]])), np.array([s, s]))
    ex_err = max(
        abs(ex.p_B_unmeasured[0] - 1),
        float(np.abs(ex.p_B_measured - 0.5).max()),
        ex.route_residual,
    )
    rng = np.random.default_rng(seed)
    worst = norm = 0.0
    for t in range(trials):
        d = int(rng.integers(2, 7))
        a_lab = b_lab = None
        if t % 4 == 3 and d > 2:
            a_lab = tuple(int(x) for x in rng.integers(0, d - 1, size=d))
        setup = InstrumentSetup(random_unitary(rng, d), random_unitary(rng, d), a_lab, b_lab)
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi /= np.linalg.norm(psi)
        rep = instrument_joint(setup, psi)
        worst = max(worst, rep.route_residual)
        norm = max(norm, rep.normalization_residual)
    ok = ex_err <= 1e-12 and worst <= 1e-12 and norm <= 1e-12
    return ok, _fmt({"example_err": ex_err, "trials": trials, "route_residual": worst, "normalization": norm})


# 7 ------------------------------------------------------------------------------
def check_chsh_bounds(seed: int = 0, models: int = 200):
    from .bell import landau_C, max_abs_expectation, random_chsh_ops
    from .measurement import random_density

    rng = np.random.default_rng(seed)
    shapes = [(2, 2), (2, 3), (3, 2), (2, 4), (4, 2)]
    w_comm = w_free = w_landau = 0.0
    for k in range(models):
        dA, dB = shapes[k % len(shapes)]
        for commuting in (True, False):
            ops = random_chsh_ops(rng, dA, dB, commuting=commuting)
            if commuting and k % 2:
                # put the commuting pair on Bob's side instead
                ops = type(ops)(ops.b, ops.bp, ops.a, ops.ap, tol=1e-10)
            rep = landau_C(ops)
            rho = random_density(rng, ops.dim)
            val = max(max_abs_expectation(rep.C), abs(np.trace(rep.C @ rho)))
            w_landau = max(w_landau, rep.residual)
            if commuting:
                w_comm = max(w_comm, val)
            else:
                w_free = max(w_free, val)
    ok = w_comm <= 2 + 1e-10 and w_free <= 2 * SQRT2 + 1e-10 and w_landau <= 1e-11
    return ok, _fmt({"models": models, "max_commuting": w_comm, "max_unrestricted": w_free, "landau_residual": w_landau})


# 8 ------------------------------------------------------------------------------
def _words(max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product("qpQP", repeat=n)


def check_gns(seed: int = 0):
    from .fock_rep import (
        build,
        gibbs_projection_check,
        gns_vector,
        hermite_basis,
        lowering_residuals,
        translate_check,
    )
    from .gibbs_state import GibbsState
    from .weyl_algebra import AlgebraElement, CanonicalGenerators, adjoint, multiply

    kT = 1
    rep = build(32, kT)
    g = CanonicalGenerators(kT)
    gen = {"q": g.q, "p": g.p, "Q": g.Q, "P": g.P}
    elems = []
    for w in _words(3):
        e = AlgebraElement.one()
        for ch in w:
            e = multiply(e, gen[ch])
        elems.append(e)
    vecs = np.array([gns_vector(rep, e) for e in elems])
    gram = vecs.conj() @ vecs.T
    state = GibbsState(kT)
    adj = [adjoint(e) for e in elems]
    inner_err = 0.0
    for i, ei in enumerate(adj):
        for j, ej in enumerate(elems):
            inner_err = max(inner_err, abs(gram[i, j] - complex(state.eval(multiply(ei, ej)))))

    basis = hermite_basis(rep, 16)
    herm_err = float(np.abs(basis.gram() - np.eye(17)).max())
    low = lowering_residuals(rep, 15)
    proj_err = 0.0
    small = build(12, kT)
    for A1, A2 in [(g.q, g.q), (g.q * g.q, g.q * g.q), (g.one, g.p * g.p), (g.q * g.p, g.Q * g.q), (g.P * g.p, g.q)]:
        proj_err = max(proj_err, gibbs_projection_check(small, A1, A2)["residual"])
    tr = translate_check(build(64, kT), 1.0)
    tr_err = max(abs(abs(tr["mean"]) - 1.0), abs(tr["variance"] - kT))
    ok = (
        inner_err <= 1e-9
        and herm_err <= 1e-10
        and low["annihilates_unit"] <= 1e-12
        and low["commutator"] <= 1e-8
        and proj_err <= 1e-9
        and tr_err <= 1e-6
    )
    return ok, _fmt(
        {
            "pairs": len(elems) ** 2,
            "inner_err": inner_err,
            "hermite_err": herm_err,
            "a_q|1>": low["annihilates_unit"],
            "commutator": low["commutator"],
            "projection": proj_err,
            "translate_err": tr_err,
            "shift_sign": tr["sign"],
        }
    )


# 9 ------------------------------------------------------------------------------
def check_simulation(seed: int = 0):
    from .bell import correlations_from_counts
    from .coincidence_sim import SimConfig, match, simulate, time_resolved

    cq = SimConfig(n_pairs=1_000_000, model="quantum", seed=seed + 11)
    rq = correlations_from_counts(match(*simulate(cq), cq.window_ns))
    cl = SimConfig(n_pairs=1_000_000, model="lhv", seed=seed + 12)
    rl = correlations_from_counts(match(*simulate(cl), cl.window_ns))
    ct = SimConfig(pair_rate=2e5, ramp_tau_ns=1e5, seed=seed + 13)
    tr = time_resolved(ct, n_cycles=100, slice_ns=1e5, cycle_ns=1e6)
    S, se = tr.S()
    gap = (S[-1] - S[0]) / np.hypot(se[0], se[-1])
    ok_q = abs(rq.S - 2 * SQRT2) <= 3 * rq.se_S
    ok_l = rl.S <= 2 + 3 * rl.se_S
    ok_t = bool(gap > 3) and tr.consistent()
    return ok_q and ok_l and ok_t, _fmt(
        {
            "S_quantum": rq.S,
            "se_quantum": rq.se_S,
            "S_lhv": rl.S,
            "se_lhv": rl.se_S,
            "S_first": float(S[0]),
            "S_last": float(S[-1]),
            "gap_sigma": float(gap),
        }
    )


# 10 -----------------------------------------------------------------------------
def check_cat(seed: int = 0):
    from .bell import A_DIAG, cat_discriminate, cat_state, mixture_state, superposition_state

    worst = 0.0
    exact = True
    alphas = [k / 10 for k in range(11)]
    for a in alphas:
        bmax = np.sqrt(a * (1 - a))
        for frac in (0.0, 0.3, 0.7, 1.0):
            for phase in (0.0, 0.9, 2.5, -1.2):
                beta = frac * bmax * np.exp(1j * phase)
                rep = cat_discriminate(cat_state(a, beta))
                worst = max(worst, abs(rep.beta - beta))
        exact &= float(np.trace(A_DIAG @ mixture_state(a)).real) == a
        exact &= float(np.trace(A_DIAG @ superposition_state(a)).real) == a
    c1 = cat_discriminate(superposition_state(0.5)).c1
    ok = worst <= 1e-12 and exact and abs(c1 - 1) <= 1e-12
    return ok, _fmt({"max_beta_err": worst, "A_only_exact": exact, "<C1> on S_1/2": c1})


CHECKS: list[tuple[str, str, Callable, float]] = [
    ("AC1", "count-table reproduction", check_table1, 1.0),
    ("AC2", "extremal 4x4 model identities", check_extremal_model, 1.0),
    ("AC3", "moment and generating-function oracle", check_moments, 30.0),
    ("AC4", "Luders equivalence", check_luders, 30.0),
    ("AC5", "repeat-measurement correlation", check_repeat, 10.0),
    ("AC6", "instrument routes", check_instrument, 30.0),
    ("AC7", "CHSH bounds and Landau identity", check_chsh_bounds, 60.0),
    ("AC8", "GNS/Fock cross-validation", check_gns, 120.0),
    ("AC9", "end-to-end coincidence simulation", check_simulation, 300.0),
    ("AC10", "cat-state discrimination", check_cat, 1.0),
]


def run_check(key: str, seed: int = 0) -> CheckResult:
    for k, title, fn, budget in CHECKS:
        if k == key:
            t0 = time.perf_counter()
            try:
                ok, detail = fn(seed)
            except Exception as exc:  # a crash is a failure, reported not raised
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            dt = time.perf_counter() - t0
            if dt > budget:
                ok, detail = False, detail + f"; exceeded budget {budget:g}s"
            return CheckResult(k, title, bool(ok), detail, dt, budget)
    raise KeyError(key)


def run_all(seed: int = 0, keys=None) -> list[CheckResult]:
    return [run_check(k, seed) for k, *_ in CHECKS if keys is None or k in keys]
