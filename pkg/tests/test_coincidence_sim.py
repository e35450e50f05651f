import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unarycm import _kernels
from unarycm.bell import correlations_from_counts
from unarycm.coincidence_sim import (
    EventStream,
    HashedEomTrace,
    IngestError,
    SimConfig,
    SwitchList,
    compress,
    eom_trace,
    expected_singles_rate,
    generate,
    ingest,
    match,
    match_pairs,
    simulate,
    time_resolved,
    write_events,
)

SQ2 = np.sqrt(2)


def stream(t, station="A", det=None, eom=None, valid=None):
    n = len(t)
    return EventStream(
        station,
        np.asarray(t),
        np.ones(n) if det is None else det,
        np.zeros(n) if eom is None else eom,
        np.ones(n, dtype=bool) if valid is None else valid,
    )


# -- config -----------------------------------------------------------------------
def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(eom_blanking_ns=0.1, timing_jitter_ns=0.5)
    with pytest.raises(ValueError):
        SimConfig(model="bohm")
    with pytest.raises(ValueError):
        SimConfig(window_ns=0)
    with pytest.raises(ValueError):
        SimConfig(correlations={"00": 2, "01": 0, "10": 0, "11": 0})
    with pytest.raises(ValueError):
        SimConfig.from_dict({"pair_rate": 1, "colour": "red"})
    c = SimConfig.from_dict({"lhv_table": [[[1, -1], [1, 1]]], "seed": 3})
    assert c.lhv_array().shape == (1, 2, 2)
    assert SimConfig.from_dict(SimConfig(seed=9).to_dict()) == SimConfig(seed=9)


# -- generation -------------------------------------------------------------------
def test_zero_rate_gives_empty_streams():
    a, b = generate(SimConfig(pair_rate=0, duration_ns=1e6))
    assert len(a) == len(b) == 0


def test_determinism():
    cfg = SimConfig(pair_rate=1e5, n_pairs=5000, seed=11)
    a1, b1 = simulate(cfg)
    a2, b2 = simulate(cfg)
    assert a1.equals(a2) and b1.equals(b2)
    a3, _ = simulate(SimConfig(pair_rate=1e5, n_pairs=5000, seed=12))
    assert not a1.equals(a3)


@settings(max_examples=20)
@given(
    st.floats(1e4, 5e6),
    st.integers(0, 3000),
    st.integers(0, 2**64 - 1),
    st.sampled_from(["quantum", "lhv"]),
)
def test_stream_invariants(rate, dead, seed, model):
    cfg = SimConfig(pair_rate=rate, dead_time_ns=dead, n_pairs=2000, seed=seed, model=model)
    for s in generate(cfg):
        assert s.check(dead) == []


def test_singles_rate_matches_dead_time_thinning():
    cfg = SimConfig(pair_rate=1e5, n_pairs=200_000, seed=5)
    for s in generate(cfg):
        assert len(s) >= 100_000
        rate = len(s) / (float(s.t_ns[-1]) * 1e-9)
        assert rate == pytest.approx(expected_singles_rate(cfg), rel=0.05)


def test_end_to_end_quantum_and_lhv():
    q = correlations_from_counts(match(*simulate(SimConfig(pair_rate=1e5, n_pairs=200_000, seed=1)), 4))
    assert abs(q.S - 2 * SQ2) <= 3 * q.se_S
    lhv = correlations_from_counts(match(*simulate(SimConfig(pair_rate=1e5, n_pairs=200_000, seed=1, model="lhv")), 4))
    assert lhv.S <= 2 + 3 * lhv.se_S


# -- EOM traces and compression ----------------------------------------------------
def test_hashed_trace_distance_matches_brute_force():
    tr = HashedEomTrace(seed=42, station=1, period_ns=10)
    t = np.arange(10, 2000)
    bits = tr.setting_at(np.arange(0, 2100))
    switches = np.flatnonzero(np.diff(bits)) + 1
    brute = np.array([np.abs(switches - x).min() for x in t], dtype=float)
    d = tr.distance_to_switch(t)
    near = brute < 10
    np.testing.assert_array_equal(d[near], brute[near])
    assert np.all(d[~near] >= 10)


def test_hashed_trace_switch_probability_half():
    bits = HashedEomTrace(seed=7, station=0, period_ns=100).setting_at(np.arange(200_000) * 100)
    p = np.mean(bits[1:] != bits[:-1])
    assert abs(p - 0.5) <= 3 * np.sqrt(0.25 / len(bits))


def test_compress_without_switches_is_identity():
    s = stream([5, 100, 2000])
    out = compress(s, SwitchList(()), 2)
    assert out.equals(s)


def test_event_at_switch_is_invalid():
    s = stream([100, 498, 500, 503, 900])
    out = compress(s, SwitchList((500,)), 2)
    np.testing.assert_array_equal(out.valid, [True, False, False, True, True])


def test_blanking_fraction_switch_every_period():
    # half-integer blanking makes the integer-time count equal 2b/T exactly
    T, b = 100, 2.5
    cfg = SimConfig(pair_rate=1e7, dead_time_ns=0, n_pairs=100_000, eom_blanking_ns=b, seed=3)
    a, _ = generate(cfg)
    sw = SwitchList(tuple(range(T, int(a.t_ns[-1]) + 2 * T, T)))
    frac = 1 - compress(a, sw, b).valid.mean()
    p = 2 * b / T
    assert abs(frac - p) <= 3 * np.sqrt(p * (1 - p) / len(a))


def test_blanking_fraction_hashed_switches():
    # a boundary switches with probability 1/2; distance <= b covers 2b+1 integer offsets
    cfg = SimConfig(pair_rate=1e5, n_pairs=200_000, seed=8)
    a, _ = simulate(cfg)
    frac = 1 - a.valid.mean()
    p = 0.5 * (2 * cfg.eom_blanking_ns + 1) / cfg.eom_switch_period_ns
    assert abs(frac - p) <= 3 * np.sqrt(p * (1 - p) / len(a))


def test_no_valid_event_near_a_switch():
    cfg = SimConfig(pair_rate=1e6, n_pairs=20_000, dead_time_ns=100, seed=4)
    for s in simulate(cfg):
        d = eom_trace(cfg, s.station).distance_to_switch(s.t_ns[s.valid].astype(np.int64))
        assert np.all(d > cfg.eom_blanking_ns)


# -- matching ---------------------------------------------------------------------
def test_match_identical_timestamps():
    t = np.arange(1, 51) * 1000
    pa, pb = match_pairs(stream(t), stream(t, "B"), 4)
    np.testing.assert_array_equal(pa, np.arange(50))
    np.testing.assert_array_equal(pb, np.arange(50))


def test_match_gaps_beyond_window():
    t = np.arange(1, 51) * 1000
    assert match(stream(t), stream(t + 5, "B"), 4).counts.sum() == 0


def test_match_planted_offsets():
    offsets = np.array([0, 1, -3, 4, -4, 5, 7, -10, 2, -5])
    ta = np.arange(1, 11) * 1000
    order = np.argsort(ta + offsets)
    tb = (ta + offsets)[order]
    pa, pb = match_pairs(stream(ta), stream(tb, "B"), 4)
    assert set(pa.tolist()) == {k for k, o in enumerate(offsets) if abs(o) <= 4}
    np.testing.assert_array_equal(tb[pb] - ta[pa], offsets[np.abs(offsets) <= 4])


def test_match_nearest_and_earliest_tie_break():
    pa, pb = match_pairs(stream([100]), stream([97, 102], "B"), 4)
    assert pb.tolist() == [1]
    pa, pb = match_pairs(stream([100]), stream([98, 102], "B"), 4)
    assert pb.tolist() == [0]


def test_match_skips_invalid_and_tabulates():
    a = stream([100, 200], det=np.array([1, 2]), eom=np.array([0, 1]))
    b = stream([100, 200], "B", det=np.array([2, 2]), eom=np.array([1, 1]), valid=np.array([True, False]))
    t = match(a, b, 4)
    assert t.counts.sum() == 1
    assert t.counts[1, 1, 0, 0] == 1


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_match_symmetric(seed):
    rng = np.random.default_rng(seed)
    ta = np.unique(rng.integers(0, 400, size=60))
    tb = np.unique(rng.integers(0, 400, size=60))
    a, b = stream(ta), stream(tb, "B")
    pa, pb = match_pairs(a, b, 3)
    qb, qa = match_pairs(b, a, 3)
    assert sorted(zip(pa.tolist(), pb.tolist())) == sorted(zip(qa.tolist(), qb.tolist()))


# -- time-resolved ----------------------------------------------------------------
def test_time_resolved_flat_without_ramp():
    cfg = SimConfig(pair_rate=2e5, seed=2)
    rep = time_resolved(cfg, n_cycles=20, slice_ns=1e5, cycle_ns=1e6)
    assert rep.consistent()
    S, se = rep.S()
    assert np.all(np.abs(S - 2 * SQ2) <= 4 * se)
    per_station = rep.singles_rate().sum(axis=2)
    assert per_station.mean() == pytest.approx(expected_singles_rate(cfg), rel=0.05)


def test_time_resolved_ramp_rises():
    cfg = SimConfig(pair_rate=2e5, ramp_tau_ns=1e5, seed=6)
    rep = time_resolved(cfg, n_cycles=30, slice_ns=1e5, cycle_ns=1e6)
    S, se = rep.S()
    assert S[-1] - S[0] > 3 * np.hypot(se[0], se[-1])
    assert S[0] <= 2 + 3 * se[0]


def test_time_resolved_thread_count_does_not_change_result():
    cfg = SimConfig(pair_rate=1e5, seed=9)
    r1 = time_resolved(cfg, n_cycles=4, slice_ns=1e5, cycle_ns=1e6, threads=1)
    r2 = time_resolved(cfg, n_cycles=4, slice_ns=1e5, cycle_ns=1e6, threads=3)
    np.testing.assert_array_equal(r1.counts, r2.counts)
    np.testing.assert_array_equal(r1.singles, r2.singles)


def test_time_resolved_rebin_and_rows():
    rep = time_resolved(SimConfig(pair_rate=1e5, seed=1), n_cycles=2, slice_ns=1e5, cycle_ns=1e6)
    coarse = rep.rebin(5)
    assert coarse.n_slices == 2 and coarse.consistent()
    rows = rep.rows()
    assert len(rows) == 10 and {"S", "se_S", "singles_rate_A1"} <= rows[0].keys()
    with pytest.raises(ValueError):
        time_resolved(SimConfig(), n_cycles=0)


# -- event files ------------------------------------------------------------------
@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_event_roundtrip(tmp_path, suffix):
    a, b = simulate(SimConfig(pair_rate=1e5, n_pairs=3000, seed=2))
    p = tmp_path / f"ev{suffix}"
    write_events(p, [a, b])
    got = ingest(p, dead_time_ns=1000)
    assert got["A"].equals(a) and got["B"].equals(b)


def _csv(tmp_path, body):
    p = tmp_path / "e.csv"
    p.write_text("t_ns,station,detector,eom,valid\n" + body)
    return p


@pytest.mark.parametrize(
    "body,where",
    [
        ("10,A,1,0,1\n5,A,1,0,1\n", "line 3"),
        ("10,A,1,0,1\n20,A,3,0,1\n", "line 3"),
        ("10,A,1,0\n", "line 2"),
        ("-1,A,1,0,1\n", "line 2"),
        ("10,C,1,0,1\n", "line 2"),
        ("10,A,1,0,1\n11,B,1,0,1\n12,A,1,0,1\n", "line 4"),
    ],
)
def test_ingest_errors_carry_line_numbers(tmp_path, body, where):
    with pytest.raises(IngestError, match=where):
        ingest(_csv(tmp_path, body), dead_time_ns=100)


def test_ingest_bad_header_and_binary(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("time,station\n")
    with pytest.raises(IngestError, match="line 1"):
        ingest(p)
    b = tmp_path / "x.bin"
    b.write_bytes(b"\x00" * 10)
    with pytest.raises(IngestError):
        ingest(b)
    rec = np.zeros(2, dtype=[("t", "<u8"), ("flags", "u1")])
    rec["t"] = [1, 2]
    rec["flags"] = [0, 0x10]
    rec.tofile(b)
    with pytest.raises(IngestError, match="record 1"):
        ingest(b)


def test_backend_reported():
    assert _kernels.backend() in ("numba", "numpy")
