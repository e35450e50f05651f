"""Command-line entry point: ``unarycm <subcommand> [options]``.

Results go to ``--out`` (or stdout) as CSV or JSON.  Failures print a JSON
error object on stderr and exit with

* 2 usage error (unknown subcommand, bad flag syntax)
* 3 invalid value
* 4 file I/O failure
* 5 a check ran and failed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

EXIT_USAGE, EXIT_VALUE, EXIT_IO, EXIT_CHECK = 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class CheckFailed(Exception):
    """Raised after output is written when a check did not pass."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message, EXIT_USAGE)


# -- output -----------------------------------------------------------------------
def _plain(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return x.real if x.imag == 0 else [x.real, x.imag]
    return x


def _flatten(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        v = _plain(v)
        if isinstance(v, list) and len(v) == 2 and all(isinstance(t, float) for t in v):
            out[f"{k}_re"], out[f"{k}_im"] = v
        else:
            out[k] = v
    return out


def emit(args, rows: list[dict], **meta) -> None:
    """Write ``rows`` in the requested format; ``meta`` goes into the JSON envelope only."""
    if args.format == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": args.command}
        doc.update({k: _plain(v) for k, v in meta.items()})
        doc["rows"] = [{k: _plain(v) for k, v in r.items()} for r in rows]
        text = json.dumps(doc, indent=2, default=_plain) + "\n"
    else:
        flat = [_flatten(r) for r in rows]
        keys = list(dict.fromkeys(k for r in flat for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
        text = buf.getvalue()
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    else:
        sys.stdout.write(text)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}", EXIT_VALUE) from None


# -- subcommands --------------------------------------------------------------------
def cmd_moments(args):
    from .gibbs_state import moment_qp, symbolic_moment

    # integer kT keeps the arithmetic exact
    kT = int(args.kt) if args.kt.is_integer() else args.kt
    rows = []
    for total in range(args.max_degree // 2 + 1):
        for m in range(total, -1, -1):
            n = total - m
            closed = moment_qp(m, n, kT)
            sym = symbolic_moment(2 * m, 2 * n, kT)
            rows.append(
                {
                    "m": m,
                    "n": n,
                    "operator": f"q^{2 * m} p^{2 * n}",
                    "value": float(closed),
                    "exact": str(closed),
                    "symbolic": float(complex(sym).real),
                    "match": bool(abs(complex(sym) - float(closed)) <= 1e-12 * max(1.0, float(closed))),
                }
            )
    emit(args, rows, kT=float(args.kt), convention="row (m, n) is rho(q^(2m) p^(2n))")
    if not all(r["match"] for r in rows):
        raise CheckFailed("symbolic moments disagree with the closed form")


def cmd_genfun_check(args):
    from .gibbs_state import taylor_closed_form, taylor_symbolic
    from .weyl_algebra import FVector

    rng = np.random.default_rng(args.seed)
    rows = []
    for k in range(args.configs):
        fs = [FVector(*rng.uniform(-1, 1, 4)) for _ in range(args.n_f)]
        a = taylor_symbolic(fs, args.kt, order=args.order)
        b = taylor_closed_form(fs, args.kt, order=args.order)
        err = max(abs(a[key] - b[key]) for key in a)
        rows.append({"config": k, "n_f": args.n_f, "order": args.order, "coefficients": len(a), "max_abs_err": err, "pass": err <= 1e-12})
    emit(args, rows, kT=args.kt)
    if not all(r["pass"] for r in rows):
        raise CheckFailed("generating-function Taylor coefficients disagree")


def cmd_gns(args):
    from . import fock_rep as fr
    from .gibbs_state import GibbsState
    from .weyl_algebra import CanonicalGenerators, adjoint, multiply

    rep = fr.build(args.N, args.kt)
    g = CanonicalGenerators(args.kt)
    rows, ok = [], True
    check = args.check
    if check == "inner":
        names = {"1": g.one, "q": g.q, "p": g.p, "Q": g.Q, "P": g.P, "q^2": g.q * g.q, "qp": g.q * g.p, "Qq": g.Q * g.q}
        state = GibbsState(args.kt)
        for (na, A), (nb, B) in ((x, y) for x in names.items() for y in names.items()):
            num = fr.gns_inner(rep, A, B)
            sym = complex(state.eval(multiply(adjoint(A), B)))
            rows.append({"A": na, "B": nb, "numeric": num, "symbolic": sym, "residual": abs(num - sym)})
        ok = max(r["residual"] for r in rows) <= 1e-9
    elif check == "hermite":
        b = fr.hermite_basis(rep, args.M)
        gram = b.gram()
        for m in range(b.M + 1):
            row = {"m": m, "norm_residual": abs(gram[m, m] - 1), "max_overlap": float(np.abs(np.delete(gram[m], m)).max()) if b.M else 0.0}
            for k in range(min(b.M + 1, 6)):
                row[f"c_q{k}"] = float(b.coeffs[m, k])
            rows.append(row)
        ok = float(np.abs(gram - np.eye(b.M + 1)).max()) <= 1e-10
    elif check == "lowering":
        res = fr.lowering_residuals(rep, args.M)
        rows = [{"quantity": k, "residual": v} for k, v in res.items()]
        ok = res["annihilates_unit"] <= 1e-12 and res["commutator"] <= 1e-8
    elif check == "translate":
        r = fr.translate_check(rep, args.kappa)
        rows = [r]
        ok = abs(abs(r["mean"]) - abs(args.kappa)) <= 1e-6 and abs(r["variance"] - args.kt) <= 1e-6
    elif check == "projection":
        pairs = {"q,q": (g.q, g.q), "q^2,q^2": (g.q * g.q, g.q * g.q), "1,p^2": (g.one, g.p * g.p), "qp,Qq": (g.q * g.p, g.Q * g.q)}
        small = fr.build(min(args.N, 12), args.kt)
        for name, (A1, A2) in pairs.items():
            r = fr.gibbs_projection_check(small, A1, A2)
            rows.append({"pair": name, "lhs": r["lhs"], "rhs": r["rhs"], "residual": r["residual"]})
        ok = max(r["residual"] for r in rows) <= 1e-9
    elif check == "polarization":
        rng = np.random.default_rng(args.seed)
        v1 = rng.standard_normal(args.N) + 1j * rng.standard_normal(args.N)
        v2 = rng.standard_normal(args.N) + 1j * rng.standard_normal(args.N)
        r = fr.polarization_check(v1, v2)
        rows = [{"dim": args.N, "residual": r["residual"], "rank": r["rank"]}]
        ok = r["residual"] <= 1e-12
    elif check == "modulation":
        rows = fr.modulated_density_check(rep, args.n)
        ok = max(r["abs_error"] / max(1.0, r["closed_form"]) for r in rows) <= 1e-6
    emit(args, rows, check=check, N=args.N, kT=args.kt)
    if not ok:
        raise CheckFailed(f"gns check {check} failed")


def cmd_luders_demo(args):
    from .measurement import jm_check, luders_observable, luders_state, random_density, random_hermitian, spectral

    rng = np.random.default_rng(args.seed)
    d = args.dim
    A, X, rho = random_hermitian(rng, d, degenerate=True), random_hermitian(rng, d), random_density(rng, d)
    sp = spectral(A)
    rA = luders_state(rho, sp).matrix
    XA = luders_observable(X, sp).matrix
    rows = [
        {"quantity": "Tr[A X rho_A] - Tr[A X_A rho]", "value": abs(np.trace(A @ X @ rA) - np.trace(A @ XA @ rho))},
        {"quantity": "||[A, X_A]||", "value": float(np.abs(A @ XA - XA @ A).max())},
        {"quantity": "||(X_A)_A - X_A||", "value": float(np.abs(luders_observable(XA, sp).matrix - XA).max())},
        {"quantity": "||[A, X]|| (before)", "value": jm_check([A, X]).worst},
        {"quantity": "Tr rho_A - 1", "value": abs(np.trace(rA) - 1)},
        {"quantity": "min eig rho_A", "value": float(np.linalg.eigvalsh(rA).min())},
        {"quantity": "distinct eigenvalues of A", "value": len(sp)},
    ]
    emit(args, rows, dim=d, seed=args.seed)


def cmd_instrument(args):
    from .measurement import InstrumentSetup, instrument_joint, parse_matrix

    cfg = _read_json(args.config)
    try:
        setup = InstrumentSetup(
            parse_matrix(cfg["a_basis"]),
            parse_matrix(cfg["b_basis"]),
            cfg.get("a_labels"),
            cfg.get("b_labels"),
        )
        psi = parse_matrix([cfg["psi"]])[0]
    except KeyError as exc:
        raise CliError(f"instrument config missing key {exc}", EXIT_VALUE) from None
    rep = instrument_joint(setup, psi)
    rows = []
    for j in range(len(rep.p_B_unmeasured)):
        row = {"b": j, "P(B) unmeasured": rep.p_B_unmeasured[j]}
        for name, v in rep.routes.items():
            row[f"P(B|A measured) {name}"] = v[j]
        rows.append(row)
    emit(args, rows, p_A=rep.p_A.tolist(), route_residual=rep.route_residual, stochastic_reduction=rep.stochastic_reduction)
    if rep.route_residual > 1e-12:
        raise CheckFailed("instrument routes disagree")


def cmd_bell_counts(args):
    from .bell import CountTable, correlations_from_counts

    try:
        if args.file is None:
            table = CountTable.bundled()
        elif str(args.file).endswith(".json"):
            table = CountTable.read_json(Path(args.file))
        else:
            table = CountTable.read_csv(Path(args.file))
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc}", EXIT_IO) from None
    signs = tuple(int(s) for s in args.signs.split(","))
    r = correlations_from_counts(table, signs)
    rows = [{"quantity": k, "value": v} for k, v in r.as_dict().items()]
    emit(args, rows, source=str(args.file or "bundled"), signs=list(signs))


def cmd_bell_appendix(args):
    from .bell import extremal_model_report

    rep = extremal_model_report()
    rows = [{"identity": k, "value": v["value"], "target": v["target"], "status": "PASS" if v["pass"] else "FAIL"} for k, v in rep.items()]
    emit(args, rows, S=rep["S"]["value"])
    if not all(v["pass"] for v in rep.values()):
        raise CheckFailed("extremal-model identity failed")


def cmd_cat(args):
    from .bell import cat_discriminate, cat_state

    beta = complex(args.beta_re, args.beta_im)
    r = cat_discriminate(cat_state(args.alpha, beta))
    emit(
        args,
        [{"alpha": r.alpha, "C1": r.c1, "C2": r.c2, "beta_hat_re": r.beta.real, "beta_hat_im": r.beta.imag, "kind": r.kind}],
    )


def _sim_config(args):
    from .coincidence_sim import SimConfig

    d = _read_json(args.config) if args.config else {}
    if args.seed_given:
        d["seed"] = args.seed
    return SimConfig.from_dict(d)


def cmd_sim_events(args):
    from .coincidence_sim import simulate, write_events

    cfg = _sim_config(args)
    a, b = simulate(cfg)
    try:
        write_events(args.events_out, [a, b])
    except OSError as exc:
        raise CliError(f"cannot write {args.events_out}: {exc}", EXIT_IO) from None
    rows = [{"station": s.station, "events": len(s), "valid": int(s.valid.sum())} for s in (a, b)]
    emit(args, rows, config=cfg.to_dict(), path=str(args.events_out))


def cmd_coincide(args):
    from .bell import correlations_from_counts
    from .coincidence_sim import ingest, match

    try:
        alice = ingest(args.alice)["A"]
        bob = ingest(args.bob)["B"]
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    table = match(alice, bob, args.window_ns)
    rows = []
    for B in (0, 1):
        for b in (1, 2):
            row = {"row": f"B{B}b{b}"}
            for A in (0, 1):
                for a in (1, 2):
                    row[f"A{A}a{a}"] = int(table.counts[B, b - 1, A, a - 1])
            rows.append(row)
    meta = {"window_ns": args.window_ns}
    try:
        meta.update(correlations_from_counts(table).as_dict())
    except ValueError:
        meta["S"] = None
    emit(args, rows, **meta)


def cmd_time_resolved(args):
    from .coincidence_sim import time_resolved

    cfg = _sim_config(args)
    rep = time_resolved(cfg, args.cycles, slice_ns=args.slice_ns, cycle_ns=args.cycle_ns)
    emit(args, rep.rows(), n_cycles=rep.n_cycles, slice_width_ns=rep.slice_width_ns, **rep.meta)


def cmd_verify_all(args):
    from .acceptance import run_all

    results = run_all(seed=args.seed, keys=set(args.only) if args.only else None)
    width = max(len(r.title) for r in results)
    table = "\n".join(
        f"{r.key:<5} {r.title:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.runtime:7.2f}s  {r.detail}" for r in results
    )
    print(table, file=sys.stderr if not args.out else sys.stdout)
    rows = [{"key": r.key, "title": r.title, "status": "PASS" if r.passed else "FAIL", "runtime_s": r.runtime, "budget_s": r.budget, "detail": r.detail} for r in results]
    if args.out:
        emit(args, rows)
    if not all(r.passed for r in results):
        raise CheckFailed(f"{sum(not r.passed for r in results)} acceptance check(s) failed")


# -- parser --------------------------------------------------------------------------
def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _add_globals(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    p.add_argument("--out", default=d(None), help="output file (default stdout)")
    p.add_argument("--seed", type=int, default=d(None))
    p.add_argument("--kt", type=_positive, default=d(1.0), help="temperature kT (default 1)")
    p.add_argument("-N", type=int, default=d(32), help="Fock truncation per mode (default 32)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unarycm", description=__doc__.splitlines()[0])
    _add_globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="subcommand")
    sub.required = True

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        _add_globals(sp, suppress=True)
        sp.set_defaults(func=fn)
        return sp

    sp = add("moments", cmd_moments, "Gibbs moments rho(q^2m p^2n), closed form vs algebra")
    sp.add_argument("--max-degree", type=int, default=8)

    sp = add("genfun-check", cmd_genfun_check, "Taylor coefficients of the generating function vs the algebra")
    sp.add_argument("--n-f", type=int, default=3)
    sp.add_argument("--order", type=int, default=6)
    sp.add_argument("--configs", type=int, default=5)

    sp = add("gns", cmd_gns, "truncated Fock representation checks")
    sp.add_argument("--check", required=True, choices=("inner", "hermite", "lowering", "translate", "projection", "polarization", "modulation"))
    sp.add_argument("--M", type=int, default=8, help="Hermite basis size")
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=1, help="modulation power")

    sp = add("luders-demo", cmd_luders_demo, "Luders transformer identities on a random model")
    sp.add_argument("--dim", type=int, default=4)

    sp = add("instrument", cmd_instrument, "two-pointer instrument simulation from a JSON setup")
    sp.add_argument("--config", required=True)

    sp = add("bell-counts", cmd_bell_counts, "correlations and S from a count table")
    sp.add_argument("--file", default=None, help="CSV or JSON table (default: bundled reference table)")
    sp.add_argument("--signs", default="1,-1,1,1", help="signs for E00,E10,E01,E11")

    add("bell-appendix", cmd_bell_appendix, "identities of the extremal 4x4 model")

    sp = add("cat", cmd_cat, "estimate beta of a two-level state")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta-re", type=float, default=0.0)
    sp.add_argument("--beta-im", type=float, default=0.0)

    sp = add("sim-events", cmd_sim_events, "simulate event streams and write them to a file")
    sp.add_argument("--config", default=None, help="JSON SimConfig")
    sp.add_argument("--events-out", required=True, help="event file (.csv or .bin)")

    sp = add("coincide", cmd_coincide, "match two event files into a count table")
    sp.add_argument("--alice", required=True)
    sp.add_argument("--bob", required=True)
    sp.add_argument("--window-ns", type=_positive, default=4.0)

    sp = add("time-resolved", cmd_time_resolved, "power-cycled time-resolved CHSH statistics")
    sp.add_argument("--config", default=None)
    sp.add_argument("--cycles", type=int, default=10)
    sp.add_argument("--slice-ns", type=_positive, default=100.0)
    sp.add_argument("--cycle-ns", type=_positive, default=1e6)

    sp = add("verify-all", cmd_verify_all, "run the acceptance suite")
    sp.add_argument("--only", nargs="*", help="subset of check keys, e.g. AC1 AC9")
    return p


def _error(message: str, code: int, kind: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    from .coincidence_sim import IngestError
    from .fock_rep import TruncationError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.seed_given = args.seed is not None
        if args.seed is None:
            args.seed = 0
        if args.N < 4:
            raise CliError("-N must be at least 4", EXIT_VALUE)
        args.func(args)
    except CliError as exc:
        return _error(str(exc), exc.code, "usage" if exc.code == EXIT_USAGE else "invalid_value" if exc.code == EXIT_VALUE else "io")
    except CheckFailed as exc:
        return _error(str(exc), EXIT_CHECK, "check_failed")
    except (IngestError, TruncationError) as exc:
        return _error(str(exc), EXIT_VALUE, "invalid_value")
    except OSError as exc:
        return _error(str(exc), EXIT_IO, "io")
    except (ValueError, KeyError, TypeError) as exc:
        return _error(str(exc), EXIT_VALUE, "invalid_value")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
