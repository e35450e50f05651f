"""Discrete-event simulation of a two-station coincidence experiment.

A source emits photon pairs as a Poisson process.  Each station records a
timestamp (ns, with Gaussian jitter), the detector that fired (1 or 2), and
the setting of its electro-optic modulator (EOM).  Detectors are
non-paralyzable with a fixed dead time.  Events close to an EOM setting
switch are flagged invalid by :func:`compress`, and :func:`match` pairs the
remaining events greedily into a :class:`~unarycm.bell.CountTable`.

Outcome model
-------------
For settings ``(A, B)`` the joint outcome distribution is
``P(a, b) = (1 + a b E_AB) / 4`` with ``a, b = +-1`` (detector 1 is ``+1``).
The default ``E_AB`` are the expectations of the extremal 4x4 model, so the
ideal CHSH value is ``2 sqrt 2``.  The ``lhv`` model draws a hidden variable
uniformly and reads deterministic outcomes from a table.

EOM settings are a fresh fair bit per switch period, computed from a
counter-based hash of ``(seed, station, period index)`` so that the setting
at any time is available without materializing a trace.  A switch happens at
a period boundary only when the bit changes, i.e. with probability 1/2.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .bell import CountTable, CorrelationResult, InsufficientDataError, correlations_from_counts

__all__ = [
    "SimConfig",
    "EventStream",
    "HashedEomTrace",
    "SwitchList",
    "TimeResolvedReport",
    "IngestError",
    "generate",
    "compress",
    "simulate",
    "match",
    "match_pairs",
    "time_resolved",
    "ingest",
    "write_events",
    "expected_singles_rate",
    "default_correlations",
    "DEFAULT_LHV_TABLE",
]

STATIONS = ("A", "B")
SQRT1_2 = np.sqrt(0.5)


def default_correlations() -> dict:
    """``E_AB`` of the extremal 4x4 model: ``E10 = +1/sqrt2``, the rest ``-1/sqrt2``."""
    return {"00": -SQRT1_2, "10": SQRT1_2, "01": -SQRT1_2, "11": -SQRT1_2}


# [lambda][station][setting] -> outcome; reaches |S| = 2 with the default signs
DEFAULT_LHV_TABLE = (((1, 1), (-1, -1)), ((-1, -1), (1, 1)))


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulated run.

    Parameters
    ----------
    pair_rate : float
        Mean pair emission rate in pairs per second.
    dead_time_ns : int
        Non-paralyzable detector dead time.
    eom_switch_period_ns : int
        Period at which each EOM draws a fresh setting bit.
    eom_blanking_ns : float
        Events within this distance of a setting switch are invalid.
    timing_jitter_ns : float
        Standard deviation of the Gaussian timestamp jitter.
    window_ns : float
        Coincidence window.
    model : {"quantum", "lhv"}
    n_pairs : int, optional
        Exact number of emitted pairs.  Otherwise ``duration_ns`` sets the
        run length and the count is Poisson.
    duration_ns : float
    correlations : dict, optional
        ``{"AB": E_AB}`` for the quantum model; defaults to
        :func:`default_correlations`.
    lhv_table : nested sequence, optional
        ``[lambda][station][setting]`` outcomes in ``{+1, -1}``.
    ramp_tau_ns : float
        Correlation strength ramps as ``1 - exp(-t/tau)`` from power-on at
        ``t = 0``; ``0`` disables the ramp.  A simulator hypothesis knob.
    seed : int
        64-bit seed.
    """

    pair_rate: float = 1e4
    dead_time_ns: int = 1000
    eom_switch_period_ns: int = 100
    eom_blanking_ns: float = 2.0
    timing_jitter_ns: float = 0.5
    window_ns: float = 4.0
    model: str = "quantum"
    n_pairs: int | None = None
    duration_ns: float = 1e8
    correlations: dict | None = None
    lhv_table: tuple | None = None
    ramp_tau_ns: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.pair_rate < 0:
            raise ValueError("pair_rate must be non-negative")
        if self.dead_time_ns < 0:
            raise ValueError("dead_time_ns must be non-negative")
        if self.eom_switch_period_ns <= 0:
            raise ValueError("eom_switch_period_ns must be positive")
        if self.window_ns <= 0:
            raise ValueError("window_ns must be positive")
        if self.timing_jitter_ns < 0 or self.eom_blanking_ns < self.timing_jitter_ns:
            raise ValueError("need 0 <= timing_jitter_ns <= eom_blanking_ns")
        if 2 * self.eom_blanking_ns >= self.eom_switch_period_ns:
            raise ValueError("blanking windows of neighbouring switches overlap")
        if self.model not in ("quantum", "lhv"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.n_pairs is not None and self.n_pairs < 0:
            raise ValueError("n_pairs must be non-negative")
        if self.duration_ns < 0 or self.ramp_tau_ns < 0:
            raise ValueError("durations must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        for v in self.corr_matrix().ravel():
            if not -1 <= v <= 1:
                raise ValueError("correlations must lie in [-1, 1]")
        tab = self.lhv_array()
        if tab.ndim != 3 or tab.shape[1:] != (2, 2) or not np.all(np.abs(tab) == 1):
            raise ValueError("lhv_table must be [lambda][station][setting] of +-1")

    def corr_matrix(self) -> np.ndarray:
        """``E[A, B]`` as a 2x2 array."""
        c = self.correlations or default_correlations()
        try:
            return np.array([[float(c[f"{A}{B}"]) for B in (0, 1)] for A in (0, 1)])
        except KeyError as exc:
            raise ValueError(f"correlations missing key {exc}") from None

    def lhv_array(self) -> np.ndarray:
        return np.asarray(self.lhv_table if self.lhv_table is not None else DEFAULT_LHV_TABLE, dtype=np.int8)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("lhv_table") is not None:
            d["lhv_table"] = tuple(tuple(tuple(int(x) for x in s) for s in lam) for lam in d["lhv_table"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class EventStream:
    """Time-ordered detector events of one station."""

    station: str
    t_ns: np.ndarray
    detector: np.ndarray
    eom: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.station not in STATIONS:
            raise ValueError(f"station must be one of {STATIONS}")
        self.t_ns = np.asarray(self.t_ns, dtype=np.uint64)
        self.detector = np.asarray(self.detector, dtype=np.uint8)
        self.eom = np.asarray(self.eom, dtype=np.uint8)
        self.valid = np.asarray(self.valid, dtype=bool)
        n = len(self.t_ns)
        if not (len(self.detector) == len(self.eom) == len(self.valid) == n):
            raise ValueError("column lengths differ")

    def __len__(self):
        return len(self.t_ns)

    @classmethod
    def empty(cls, station: str) -> "EventStream":
        z = np.zeros(0)
        return cls(station, z, z, z, z)

    def take(self, mask) -> "EventStream":
        return EventStream(self.station, self.t_ns[mask], self.detector[mask], self.eom[mask], self.valid[mask])

    def outcome(self) -> np.ndarray:
        """``+1`` for detector 1, ``-1`` for detector 2."""
        return np.where(self.detector == 1, 1, -1).astype(np.int8)

    def check(self, dead_time_ns: int | None = None) -> list[str]:
        """Invariant violations as messages (empty when the stream is well formed)."""
        problems = []
        t = self.t_ns.astype(np.int64)
        bad = np.flatnonzero(np.diff(t) <= 0)
        if len(bad):
            problems.append(f"timestamps not strictly increasing at index {bad[0] + 1}")
        if not np.all(np.isin(self.detector, (1, 2))):
            problems.append("detector must be 1 or 2")
        if not np.all(np.isin(self.eom, (0, 1))):
            problems.append("eom must be 0 or 1")
        if dead_time_ns is not None:
            for d in (1, 2):
                td = t[self.detector == d]
                gaps = np.diff(td)
                if len(gaps) and gaps.min() < dead_time_ns:
                    problems.append(f"detector {d} gap {gaps.min()} ns below dead time {dead_time_ns}")
        return problems

    def equals(self, other: "EventStream") -> bool:
        return (
            self.station == other.station
            and np.array_equal(self.t_ns, other.t_ns)
            and np.array_equal(self.detector, other.detector)
            and np.array_equal(self.eom, other.eom)
            and np.array_equal(self.valid, other.valid)
        )


# -- EOM traces -------------------------------------------------------------------
@dataclass(frozen=True)
class HashedEomTrace:
    """Setting bit per period from ``splitmix64(seed, station, period)``."""

    seed: int
    station: int
    period_ns: int

    def _bits(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        key = (k.astype(np.uint64) << np.uint64(1)) | np.uint64(self.station)
        mixed = _kernels.splitmix64(_kernels.splitmix64_np(np.array([self.seed], dtype=np.uint64))[0] ^ key)
        return (mixed >> np.uint64(63)).astype(np.uint8)

    def setting_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        return self._bits(t // self.period_ns)

    def distance_to_switch(self, t) -> np.ndarray:
        """Distance (ns) to the nearest boundary where the setting changes; ``inf`` if none nearby."""
        t = np.asarray(t, dtype=np.int64)
        k = t // self.period_ns
        here, prev, nxt = self._bits(k), self._bits(k - 1), self._bits(k + 1)
        d = np.full(t.shape, np.inf)
        d_lo = (t - k * self.period_ns).astype(float)
        d_hi = ((k + 1) * self.period_ns - t).astype(float)
        d = np.where(here != prev, d_lo, d)
        d = np.minimum(d, np.where(here != nxt, d_hi, np.inf))
        return d


@dataclass(frozen=True)
class SwitchList:
    """Explicit switch times (sorted) with an initial setting."""

    switches: tuple = ()
    initial: int = 0

    def setting_at(self, t) -> np.ndarray:
        s = np.asarray(self.switches, dtype=np.int64)
        n = np.searchsorted(s, np.asarray(t, dtype=np.int64), side="right")
        return ((self.initial + n) % 2).astype(np.uint8)

    def distance_to_switch(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        s = np.asarray(self.switches, dtype=np.int64)
        if len(s) == 0:
            return np.full(t.shape, np.inf)
        k = np.searchsorted(s, t)
        left = np.where(k > 0, t - s[np.maximum(k - 1, 0)], np.iinfo(np.int64).max).astype(float)
        right = np.where(k < len(s), s[np.minimum(k, len(s) - 1)] - t, np.iinfo(np.int64).max).astype(float)
        return np.abs(np.minimum(left, right))


def eom_trace(config: SimConfig, station: str) -> HashedEomTrace:
    return HashedEomTrace(int(config.seed), STATIONS.index(station), int(config.eom_switch_period_ns))


# -- generation -------------------------------------------------------------------
def _emission_times(config: SimConfig, rng) -> np.ndarray:
    if config.pair_rate == 0:
        return np.zeros(0)
    mean_gap = 1e9 / config.pair_rate
    if config.n_pairs is not None:
        return np.cumsum(rng.exponential(mean_gap, size=int(config.n_pairs)))
    n = rng.poisson(config.duration_ns / mean_gap)
    return np.sort(rng.uniform(0.0, config.duration_ns, size=n))


def _station_stream(station, t, outcome, trace, config) -> EventStream:
    order = np.argsort(t, kind="stable")
    t, outcome = t[order], outcome[order]
    det = np.where(outcome > 0, 1, 2).astype(np.uint8)
    keep = _kernels.dead_time_mask(t, det, int(config.dead_time_ns))
    t, det = t[keep], det[keep]
    eom = trace.setting_at(t)
    return EventStream(station, t.astype(np.uint64), det, eom, np.ones(len(t), dtype=bool))


def generate(config: SimConfig) -> tuple[EventStream, EventStream]:
    """Simulate raw Alice and Bob streams (all events flagged valid).

    Events within a station are strictly time-ordered; same-nanosecond
    collisions keep the first event and dead time is applied per detector.
    """
    rng = np.random.Generator(np.random.Philox(int(config.seed)))
    t_emit = _emission_times(config, rng)
    n = len(t_emit)
    if n == 0:
        return EventStream.empty("A"), EventStream.empty("B")
    jit = config.timing_jitter_ns
    ta = np.maximum(np.rint(t_emit + rng.normal(0.0, jit, n) if jit else t_emit), 0).astype(np.int64)
    tb = np.maximum(np.rint(t_emit + rng.normal(0.0, jit, n) if jit else t_emit), 0).astype(np.int64)
    tr_a, tr_b = eom_trace(config, "A"), eom_trace(config, "B")
    sa, sb = tr_a.setting_at(ta), tr_b.setting_at(tb)
    if config.model == "quantum":
        E = config.corr_matrix()[sa, sb]
        if config.ramp_tau_ns > 0:
            E = E * -np.expm1(-t_emit / config.ramp_tau_ns)
        a = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
        same = rng.random(n) < (1 + E) / 2
        b = np.where(same, a, -a).astype(np.int8)
    else:
        tab = config.lhv_array()
        lam = rng.integers(0, tab.shape[0], size=n)
        a = tab[lam, 0, sa]
        b = tab[lam, 1, sb]
    return (
        _station_stream("A", ta, a, tr_a, config),
        _station_stream("B", tb, b, tr_b, config),
    )


def compress(stream: EventStream, trace, blanking_ns: float) -> EventStream:
    """Flag events within ``blanking_ns`` (inclusive) of a setting switch as invalid."""
    if len(stream) == 0:
        return stream
    dist = trace.distance_to_switch(stream.t_ns.astype(np.int64))
    return EventStream(stream.station, stream.t_ns, stream.detector, stream.eom, stream.valid & (dist > blanking_ns))


def simulate(config: SimConfig) -> tuple[EventStream, EventStream]:
    """:func:`generate` followed by :func:`compress` on both stations."""
    a, b = generate(config)
    return (
        compress(a, eom_trace(config, "A"), config.eom_blanking_ns),
        compress(b, eom_trace(config, "B"), config.eom_blanking_ns),
    )


def expected_singles_rate(config: SimConfig) -> float:
    """Detected singles per second per station: two detectors at ``r/2`` each, thinned by dead time."""
    rd = config.pair_rate / 2
    tau = config.dead_time_ns * 1e-9
    return 2 * rd / (1 + rd * tau)


# -- matching ---------------------------------------------------------------------
def match_pairs(alice: EventStream, bob: EventStream, window_ns: float):
    """Greedy coincidence pairing of valid events.

    Candidate pairs within ``window_ns`` are accepted in order of increasing
    ``|ta - tb|``, ties broken by the earlier of the two timestamps; an event
    joins at most one pair.  Returns index arrays into ``alice`` and ``bob``.
    """
    ia = np.flatnonzero(alice.valid)
    ib = np.flatnonzero(bob.valid)
    ta = alice.t_ns[ia].astype(np.int64)
    tb = bob.t_ns[ib].astype(np.int64)
    ci, cj = _kernels.candidate_pairs(ta, tb, window_ns)
    if len(ci) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    dt = np.abs(ta[ci] - tb[cj])
    first = np.minimum(ta[ci], tb[cj])
    order = np.lexsort((cj, ci, first, dt))
    ci, cj = ci[order], cj[order]
    acc = _kernels.greedy_accept(ci, cj, len(ta), len(tb))
    pa, pb = ia[ci[acc]], ib[cj[acc]]
    srt = np.argsort(pa, kind="stable")
    return pa[srt], pb[srt]


def _tabulate(alice, bob, pa, pb) -> np.ndarray:
    counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    if len(pa):
        idx = (bob.eom[pb].astype(np.int64), bob.detector[pb] - 1, alice.eom[pa].astype(np.int64), alice.detector[pa] - 1)
        np.add.at(counts, idx, 1)
    return counts


def match(alice: EventStream, bob: EventStream, window_ns: float) -> CountTable:
    """Coincidence counts ``[B][b][A][a]`` from :func:`match_pairs`."""
    pa, pb = match_pairs(alice, bob, window_ns)
    return CountTable(_tabulate(alice, bob, pa, pb))


# -- time-resolved protocol ---------------------------------------------------------
@dataclass
class TimeResolvedReport:
    """Per-slice statistics accumulated over power cycles aligned to power-on."""

    slice_width_ns: float
    n_cycles: int
    counts: np.ndarray  # (n_slices, 2, 2, 2, 2)
    singles: np.ndarray  # (n_slices, 2 stations, 2 detectors)
    total_counts: np.ndarray
    total_singles: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_slices(self) -> int:
        return self.counts.shape[0]

    def slice_start_ns(self) -> np.ndarray:
        return np.arange(self.n_slices) * self.slice_width_ns

    def singles_rate(self) -> np.ndarray:
        """Per-slice singles rate (per second) for each station and detector."""
        return self.singles / (self.n_cycles * self.slice_width_ns * 1e-9)

    def slice_stats(self, k: int) -> CorrelationResult | None:
        try:
            return correlations_from_counts(CountTable(self.counts[k]))
        except InsufficientDataError:
            return None

    def S(self) -> tuple[np.ndarray, np.ndarray]:
        """``S`` and its standard error per slice (``nan`` where a setting block is empty)."""
        s, e = np.full(self.n_slices, np.nan), np.full(self.n_slices, np.nan)
        for k in range(self.n_slices):
            r = self.slice_stats(k)
            if r is not None:
                s[k], e[k] = r.S, r.se_S
        return s, e

    def rebin(self, factor: int) -> "TimeResolvedReport":
        """Merge ``factor`` consecutive slices (a trailing partial group is dropped)."""
        m = self.n_slices // factor
        c = self.counts[: m * factor].reshape(m, factor, 2, 2, 2, 2).sum(1)
        s = self.singles[: m * factor].reshape(m, factor, 2, 2).sum(1)
        return TimeResolvedReport(self.slice_width_ns * factor, self.n_cycles, c, s, self.total_counts, self.total_singles, dict(self.meta))

    def consistent(self) -> bool:
        """Slice sums reproduce the whole-run totals."""
        return bool(np.array_equal(self.counts.sum(0), self.total_counts) and np.array_equal(self.singles.sum(0), self.total_singles))

    def rows(self) -> list[dict]:
        S, se = self.S()
        rates = self.singles_rate()
        out = []
        for k in range(self.n_slices):
            r = self.slice_stats(k)
            row = {"slice": k, "t_start_ns": float(k * self.slice_width_ns), "coincidences": int(self.counts[k].sum())}
            for st, name in enumerate(STATIONS):
                for d in (1, 2):
                    row[f"singles_rate_{name}{d}"] = float(rates[k, st, d - 1])
            for key in ("E00", "E10", "E01", "E11"):
                row[key] = getattr(r, key) if r is not None else float("nan")
            row["S"], row["se_S"] = float(S[k]), float(se[k])
            out.append(row)
        return out


def _thread_count() -> int:
    env = os.environ.get("KOOPMAN_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("KOOPMAN_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _one_cycle(config: SimConfig, cycle_ns: float, slice_ns: float, n_slices: int):
    a, b = simulate(config)
    pa, pb = match_pairs(a, b, config.window_ns)
    counts = np.zeros((n_slices, 2, 2, 2, 2), dtype=np.int64)
    singles = np.zeros((n_slices, 2, 2), dtype=np.int64)
    if len(pa):
        sl = (a.t_ns[pa].astype(np.int64) // int(slice_ns)).clip(0, n_slices - 1)
        idx = (sl, b.eom[pb].astype(np.int64), b.detector[pb] - 1, a.eom[pa].astype(np.int64), a.detector[pa] - 1)
        np.add.at(counts, idx, 1)
    for st, s in enumerate((a, b)):
        t = s.t_ns.astype(np.int64)
        inside = t < cycle_ns
        sl = t[inside] // int(slice_ns)
        np.add.at(singles, (sl, st, s.detector[inside] - 1), 1)
    return counts, singles


def time_resolved(
    config: SimConfig,
    n_cycles: int,
    slice_ns: float = 100.0,
    cycle_ns: float = 1e6,
    threads: int | None = None,
) -> TimeResolvedReport:
    """Repeat power-on runs of length ``cycle_ns`` and accumulate per-slice statistics.

    Each cycle gets an independent seed spawned from ``config.seed``; the
    correlation ramp (``config.ramp_tau_ns``) restarts at every power-on.
    Cycles run concurrently (``KOOPMAN_THREADS`` or ``threads`` workers) and
    are merged in cycle order.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if slice_ns <= 0 or cycle_ns < slice_ns:
        raise ValueError("need 0 < slice_ns <= cycle_ns")
    n_slices = int(np.ceil(cycle_ns / slice_ns))
    seeds = np.random.SeedSequence(int(config.seed)).spawn(n_cycles)
    cfgs = [
        replace(config, n_pairs=None, duration_ns=float(cycle_ns), seed=int(s.generate_state(1, np.uint64)[0]))
        for s in seeds
    ]
    width = threads or _thread_count()
    if width > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(lambda c: _one_cycle(c, cycle_ns, slice_ns, n_slices), cfgs))
    else:
        results = [_one_cycle(c, cycle_ns, slice_ns, n_slices) for c in cfgs]
    counts = sum(r[0] for r in results)
    singles = sum(r[1] for r in results)
    return TimeResolvedReport(
        float(slice_ns),
        n_cycles,
        counts,
        singles,
        counts.sum(0),
        singles.sum(0),
        {"cycle_ns": float(cycle_ns), "ramp_tau_ns": config.ramp_tau_ns, "backend": _kernels.backend()},
    )


# -- event files --------------------------------------------------------------------
class IngestError(ValueError):
    """Malformed event record or broken stream invariant."""


CSV_HEADER = "t_ns,station,detector,eom,valid"
_BIN_DTYPE = np.dtype([("t", "<u8"), ("flags", "u1")])


def write_events(path, streams, fmt: str | None = None) -> None:
    """Write streams as CSV (header ``t_ns,station,detector,eom,valid``) or packed binary."""
    path = Path(path)
    fmt = fmt or ("bin" if path.suffix == ".bin" else "csv")
    streams = list(streams)
    if fmt == "csv":
        with path.open("w") as fh:
            fh.write(CSV_HEADER + "\n")
            for s in streams:
                for t, d, e, v in zip(s.t_ns, s.detector, s.eom, s.valid):
                    fh.write(f"{int(t)},{s.station},{int(d)},{int(e)},{int(v)}\n")
    elif fmt == "bin":
        parts = []
        for s in streams:
            rec = np.zeros(len(s), dtype=_BIN_DTYPE)
            rec["t"] = s.t_ns
            rec["flags"] = (
                (1 if s.station == "B" else 0)
                | ((s.detector == 2).astype(np.uint8) << 1)
                | (s.eom.astype(np.uint8) << 2)
                | (s.valid.astype(np.uint8) << 3)
            )
            parts.append(rec)
        (np.concatenate(parts) if parts else np.zeros(0, _BIN_DTYPE)).tofile(path)
    else:
        raise ValueError(f"unknown event format {fmt!r}")


def _finish(cols: dict, lines: dict, dead_time_ns) -> dict:
    out = {}
    for st in STATIONS:
        t, d, e, v = (np.array(x) for x in zip(*cols[st])) if cols[st] else (np.zeros(0),) * 4
        s = EventStream(st, t, d, e, v)
        t64 = s.t_ns.astype(np.int64)
        bad = np.flatnonzero(np.diff(t64) <= 0)
        if len(bad):
            raise IngestError(f"{lines[st][bad[0] + 1]}: station {st} timestamp not strictly increasing")
        if dead_time_ns is not None:
            for det in (1, 2):
                sel = np.flatnonzero(s.detector == det)
                gaps = np.diff(t64[sel])
                viol = np.flatnonzero(gaps < dead_time_ns)
                if len(viol):
                    raise IngestError(f"{lines[st][sel[viol[0] + 1]]}: detector {st}{det} fires within dead time")
        out[st] = s
    return out


def ingest(path, dead_time_ns: int | None = None) -> dict:
    """Read an event file into ``{"A": EventStream, "B": EventStream}``.

    Format is chosen by suffix (``.bin`` packed binary, anything else CSV).
    Errors carry the offending line (CSV) or record index (binary).

    Raises
    ------
    IngestError
        Malformed record, non-monotone timestamps or dead-time violation.
    """
    path = Path(path)
    cols = {"A": [], "B": []}
    lines = {"A": [], "B": []}
    if path.suffix == ".bin":
        raw = path.read_bytes()
        if len(raw) % _BIN_DTYPE.itemsize:
            raise IngestError(f"{path}: size {len(raw)} is not a multiple of {_BIN_DTYPE.itemsize}")
        rec = np.frombuffer(raw, dtype=_BIN_DTYPE)
        bad = np.flatnonzero(rec["flags"] & 0xF0)
        if len(bad):
            raise IngestError(f"record {bad[0]}: reserved flag bits set")
        for k, (t, f) in enumerate(zip(rec["t"].tolist(), rec["flags"].tolist())):
            st = "B" if f & 1 else "A"
            cols[st].append((t, 2 if f & 2 else 1, (f >> 2) & 1, (f >> 3) & 1))
            lines[st].append(f"record {k}")
        return _finish(cols, lines, dead_time_ns)

    with path.open() as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise IngestError(f"line 1: expected header {CSV_HEADER!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise IngestError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            t, st, d, e, v = (p.strip() for p in parts)
            if not t.isdigit() or int(t) >= 2**64:
                raise IngestError(f"line {lineno}: t_ns must be an unsigned 64-bit integer")
            if st not in STATIONS:
                raise IngestError(f"line {lineno}: station must be A or B")
            if d not in ("1", "2") or e not in ("0", "1") or v not in ("0", "1"):
                raise IngestError(f"line {lineno}: detector/eom/valid out of range")
            cols[st].append((int(t), int(d), int(e), int(v)))
            lines[st].append(f"line {lineno}")
    return _finish(cols, lines, dead_time_ns)
