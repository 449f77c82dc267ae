import numpy as np
import pytest

from percolab.grid import Box
from percolab.models import (
    CoalescenceError,
    MajorityCapError,
    ModelSpec,
    SpinWindow,
    bernoulli_model,
    bernoulli_sample_window,
    determinedness_schedule,
    ising_model,
    ising_sample_window,
    ising_y_values,
    majority_model,
    majority_sample_window,
    parallel_step,
    q_conditional,
    sample_spins_batch,
    sample_window,
    _sandwich_pair,
)
from percolab.randomfield import FieldKey, bernoulli_family, keyed_uniform


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(kind="potts")
    with pytest.raises(ValueError):
        ModelSpec(kind="ising")  # beta missing
    with pytest.raises(ValueError):
        ModelSpec(kind="ising", beta=-0.1)
    with pytest.raises(ValueError):
        ModelSpec(kind="majority_box", majority_threshold=0)
    with pytest.raises(ValueError):
        ModelSpec(kind="bernoulli", alpha=0.0)
    assert ising_model(0.3).beta == 0.3
    assert majority_model().majority_threshold == 5


def test_q_conditional_values():
    assert q_conditional(0.7, 0.0, 2, +1) == 0.5
    want = 1.0 / (1.0 + np.exp(-2 * 0.3 * (0.2 + 2)))
    assert q_conditional(0.3, 0.2, 3, +1) == pytest.approx(want, rel=1e-12)
    assert want == pytest.approx(0.78918, abs=5e-6)


def test_q_conditional_normalization_and_flip():
    grid = [(b, h, m) for b in (0.0, 0.3, 1.1) for h in (-0.7, 0.0, 0.4)
            for m in range(5)]
    for b, h, m in grid:
        assert q_conditional(b, h, m, +1) + q_conditional(b, h, m, -1) == \
            pytest.approx(1.0, abs=1e-14)
        # spin-flip identity behind the h <-> -h symmetry
        assert q_conditional(b, h, m, +1) == \
            pytest.approx(q_conditional(b, -h, 4 - m, -1), abs=1e-14)


def test_q_conditional_rejects():
    with pytest.raises(ValueError):
        q_conditional(0.3, 0.0, 5, +1)
    with pytest.raises(ValueError):
        q_conditional(0.3, 0.0, -1, +1)
    with pytest.raises(ValueError):
        q_conditional(0.3, 0.0, 2, 0)


# ---------------------------------------------------------------- dynamics


def region_window(box, fill=1):
    spins = np.full(box.shape, fill, dtype=np.int8)
    return SpinWindow(box=box, spins=spins)


def test_parallel_step_updates_parity_only():
    box = Box.centered(3)
    w = region_window(box, fill=1)
    t = -2
    out = parallel_step(w, t, seed=5, beta=0.3, h=0.1)
    target = box.expand(-1)
    y = ising_y_values(0.3, 0.1, 5, target, t, [0])[0]
    for v in box.vertices():
        parity_match = (v[0] + v[1]) % 2 == t % 2
        if not target.contains(v) or not parity_match:
            assert out.spin_at(v) == 1  # copied
        else:
            # all-plus input: zero minus neighbours, so +1 iff Y >= 0
            r, c = target.index(v)
            assert out.spin_at(v) == (1 if y[r, c] >= 0 else -1)


def test_parallel_step_all_minus_rule():
    box = Box.centered(3)
    w = region_window(box, fill=-1)
    t = -1
    out = parallel_step(w, t, seed=9, beta=0.3, h=0.0)
    target = box.expand(-1)
    y = ising_y_values(0.3, 0.0, 9, target, t, [0])[0]
    for v in target.vertices():
        if (v[0] + v[1]) % 2 != t % 2:
            continue
        r, c = target.index(v)
        # four minus neighbours: updated to +1 iff 4 <= Y, i.e. Y = 4
        assert out.spin_at(v) == (1 if y[r, c] == 4 else -1)


def test_parallel_step_beta_zero_ignores_neighbors():
    box = Box.centered(3)
    t = -4
    target = box.expand(-1)
    y = ising_y_values(0.0, 1.7, 3, target, t, [0])[0]
    a = parallel_step(region_window(box, 1), t, seed=3, beta=0.0, h=1.7)
    b = parallel_step(region_window(box, -1), t, seed=3, beta=0.0, h=1.7)
    for v in target.vertices():
        if (v[0] + v[1]) % 2 != t % 2:
            continue
        r, c = target.index(v)
        want = 1 if y[r, c] == 4 else -1  # beta=0: Y is -1 or 4
        assert a.spin_at(v) == want == b.spin_at(v)


def test_parallel_step_monotone_in_input():
    rng = np.random.default_rng(0)
    box = Box(0, 6, 0, 5)
    for trial in range(20):
        lo = rng.choice([-1, 1], size=box.shape).astype(np.int8)
        hi = lo.copy()
        flips = rng.random(box.shape) < 0.3
        hi[flips] = 1
        wa = SpinWindow(box=box, spins=lo)
        wb = SpinWindow(box=box, spins=hi)
        t = int(rng.integers(-6, 0))
        oa = parallel_step(wa, t, seed=trial, beta=0.5, h=-0.2)
        ob = parallel_step(wb, t, seed=trial, beta=0.5, h=-0.2)
        assert np.all(oa.spins <= ob.spins)


def test_parallel_step_margin_errors():
    with pytest.raises(ValueError):
        parallel_step(region_window(Box(0, 4, 0, 0)), -1, 0, 0.3, 0.0)
    w = region_window(Box.centered(2))
    with pytest.raises(ValueError):
        parallel_step(w, -1, 0, 0.3, 0.0, target=Box.centered(2))
    out = parallel_step(w, -1, 0, 0.3, 0.0, target=Box.centered(1))
    assert out.box == Box.centered(2)


def test_cftp_agrees_with_manual_stepping():
    """The engine is the parallel dynamics run on a shrinking window."""
    box = Box(-1, 1, 0, 2)
    depth = 6
    seed = 13
    plus, _ = _sandwich_pair(0.4, 0.3, seed, [2], box, depth)
    w = region_window(box.expand(depth), 1)
    for k in range(1, depth + 1):
        t = -depth + k - 1
        w = parallel_step(w, t, seed=seed, beta=0.4, h=0.3, replica=2,
                          target=box.expand(depth - k))
    r0 = box.expand(depth).index((box.x0, box.y0))
    got = w.spins[r0[0]:r0[0] + box.ny, r0[1]:r0[1] + box.nx]
    assert np.array_equal(got, plus[0])


def reference_pair(beta, h, seed, replicas, box, depth, forced=None):
    """Straightforward engine: pad by depth, update every interior cell of
    the step's parity via ising_y_values, no light-cone or integer-compare
    shortcuts. Oracle for _sandwich_pair."""
    pad = depth
    region = box.expand(pad)
    nb = len(replicas)
    plus = np.ones((nb, region.ny, region.nx), dtype=np.int8)
    minus = -np.ones_like(plus)
    xs = np.arange(region.x0, region.x1 + 1)
    ys = np.arange(region.y0, region.y1 + 1)
    pm = ((xs[None, :] + ys[:, None]) & 1)
    for k in range(1, depth + 1):
        t = -depth + k - 1
        y = ising_y_values(beta, h, seed, region, t, replicas)
        if forced is not None and forced.time == t:
            fx, fy = forced.vertex
            if region.contains((fx, fy)) and ((fx + fy) & 1) == (t & 1):
                y[:, fy - region.y0, fx - region.x0] = -1
        upd = (pm == (t & 1))[1:-1, 1:-1]
        for chain in (plus, minus):
            s = (chain[:, :-2, 1:-1].astype(np.int64) + chain[:, 2:, 1:-1]
                 + chain[:, 1:-1, :-2] + chain[:, 1:-1, 2:])
            new = np.where((4 - s) >> 1 <= y[:, 1:-1, 1:-1],
                           np.int8(1), np.int8(-1))
            chain[:, 1:-1, 1:-1] = np.where(upd, new, chain[:, 1:-1, 1:-1])
    sl = (slice(None), slice(pad, pad + box.ny), slice(pad, pad + box.nx))
    return plus[sl], minus[sl]


ENGINE_CASES = [
    (0.0, 0.3, Box.centered(2), 3),
    (0.3, 0.2, Box.centered(2), 8),
    (0.3, -0.5, Box(1, 4, -2, 0), 7),
    (0.45, 0.0, Box.centered(1), 16),
    (0.3, 0.2, Box(0, 0, 0, 0), 12),
]


@pytest.mark.parametrize("beta,h,box,depth", ENGINE_CASES)
@pytest.mark.parametrize("seed", [1, 77])
def test_engine_matches_reference(beta, h, box, depth, seed):
    reps = [0, 3]
    plus, minus = _sandwich_pair(beta, h, seed, reps, box, depth)
    rplus, rminus = reference_pair(beta, h, seed, reps, box, depth)
    assert np.array_equal(plus, rplus)
    assert np.array_equal(minus, rminus)
    assert np.all(plus >= minus)  # sandwich order is preserved


def test_engine_matches_reference_forced():
    box = Box.centered(2)
    key = FieldKey((1, 0), -3, 0)
    plus, minus = _sandwich_pair(0.3, 0.2, 5, [0, 1], box, 8, forced_zero=key)
    rplus, rminus = reference_pair(0.3, 0.2, 5, [0, 1], box, 8, forced=key)
    assert np.array_equal(plus, rplus)
    assert np.array_equal(minus, rminus)


# ---------------------------------------------------------------- samplers


def test_bernoulli_window_matches_field():
    box = Box(-2, 3, 1, 4)
    spec = bernoulli_model()
    w = bernoulli_sample_window(spec, 0.37, box, seed=21, replica=5)
    p = bernoulli_family(0.37)
    for v in box.vertices():
        u = keyed_uniform(21, FieldKey(v, 0, 5))
        assert w.spin_at(v) == (1 if u < p else -1)
    assert np.all(w.meta == 1)


def test_bernoulli_limits_and_mean():
    spec = bernoulli_model()
    w = bernoulli_sample_window(spec, -50.0, Box.centered(4), seed=1)
    assert np.all(w.spins == -1)
    w2 = bernoulli_sample_window(spec, 0.0, Box.rect(63, 63), seed=2)
    frac = (w2.spins == 1).mean()
    assert abs(frac - 0.5) <= 3 * 0.5 / 64  # 3 sigma for 4096 sites


def test_majority_all_ones_stops_at_two():
    spec = majority_model()
    w = majority_sample_window(spec, 50.0, Box.centered(2), seed=3)
    assert np.all(w.spins == 1) and np.all(w.meta == 2)
    w2 = majority_sample_window(spec, -50.0, Box.centered(2), seed=3)
    assert np.all(w2.spins == -1) and np.all(w2.meta == 2)


def test_majority_lower_threshold_stops_at_one():
    spec = majority_model(threshold=3)
    w = majority_sample_window(spec, 50.0, Box.centered(1), seed=4)
    assert np.all(w.meta == 1)


def test_majority_symmetric_at_h_zero():
    spec = majority_model()
    spins = sample_spins_batch(spec, 0.0, Box(0, 0, 0, 0), 17,
                               np.arange(10 ** 4))
    frac = (spins == 1).mean()
    assert abs(frac - 0.5) <= 3 * 0.5 / 100


def test_majority_deterministic_and_consistent():
    spec = majority_model()
    a = majority_sample_window(spec, 0.1, Box.centered(3), seed=8, replica=2)
    b = majority_sample_window(spec, 0.1, Box.centered(3), seed=8, replica=2)
    assert np.array_equal(a.spins, b.spins) and np.array_equal(a.meta, b.meta)
    # batch path gives the same spins
    batch = sample_spins_batch(spec, 0.1, Box.centered(3), 8, [0, 1, 2])
    assert np.array_equal(batch[2], a.spins)


def test_majority_cap_error():
    spec = majority_model(threshold=4000)
    with pytest.raises(MajorityCapError):
        majority_sample_window(spec, 0.0, Box(0, 0, 0, 0), seed=1, n_cap=16)


def test_ising_beta_zero_parity_meta():
    spec = ising_model(0.0)
    w = ising_sample_window(spec, 0.9, Box.centered(3), seed=11)
    for v in w.box.vertices():
        want = 1 if (v[0] + v[1]) % 2 == 1 else 2
        assert w.meta_at(v) == want


def test_ising_beta_zero_is_fair_coins():
    spec = ising_model(0.0)
    spins = sample_spins_batch(spec, -2.5, Box.centered(1), 23,
                               np.arange(4000))
    frac = (spins == 1).mean()
    n = spins.size
    assert abs(frac - 0.5) <= 3 * 0.5 / np.sqrt(n)


def test_ising_restart_invariance():
    spec = ising_model(0.3)
    a = ising_sample_window(spec, 0.1, Box.centered(2), seed=5, replica=3,
                            initial_depth=2)
    b = ising_sample_window(spec, 0.1, Box.centered(2), seed=5, replica=3,
                            initial_depth=32)
    assert np.array_equal(a.spins, b.spins)
    assert np.array_equal(a.meta, b.meta)


def test_ising_strong_field():
    spec = ising_model(0.3)
    w = ising_sample_window(spec, 50.0, Box.centered(2), seed=1)
    assert np.all(w.spins == 1)


def test_ising_monotone_in_h():
    spec = ising_model(0.3)
    reps = np.arange(100)
    prev = None
    for h in [-1.5, -0.5, 0.0, 0.5, 1.5]:
        s = sample_spins_batch(spec, h, Box.centered(2), 7, reps)
        if prev is not None:
            assert np.all(s >= prev)
        prev = s


def test_ising_batch_matches_single():
    spec = ising_model(0.35)
    batch = sample_spins_batch(spec, -0.2, Box.centered(1), 31, [0, 5, 9])
    for i, rep in enumerate([0, 5, 9]):
        w = ising_sample_window(spec, -0.2, Box.centered(1), 31, replica=rep)
        assert np.array_equal(batch[i], w.spins)


def test_ising_coalescence_cap():
    spec = ising_model(2.0)  # strongly supercritical: no coalescence
    with pytest.raises(CoalescenceError):
        ising_sample_window(spec, 0.0, Box.centered(1), seed=1, depth_cap=8)


def test_ising_gibbs_conditional_small():
    spec = ising_model(0.3)
    h = 0.2
    spins = sample_spins_batch(spec, h, Box.centered(2), 42, np.arange(6000))
    center = spins[:, 2, 2]
    mplus = ((spins[:, 1, 2] == 1).astype(int) + (spins[:, 3, 2] == 1)
             + (spins[:, 2, 1] == 1) + (spins[:, 2, 3] == 1))
    for m in range(5):
        sel = mplus == m
        n = int(sel.sum())
        assert n > 30
        emp = (center[sel] == 1).mean()
        q = q_conditional(0.3, h, m, +1)
        assert abs(emp - q) <= 3 * np.sqrt(q * (1 - q) / n)


def test_ising_spin_flip_symmetry():
    spec = ising_model(0.3)
    a = sample_spins_batch(spec, 0.4, Box.centered(1), 3, np.arange(3000))
    b = sample_spins_batch(spec, -0.4, Box.centered(1), 4, np.arange(3000))
    ma, mb = a.mean(), b.mean()
    # each window mean has std <= 1/sqrt(9 * trials) up to correlations;
    # use a conservative per-site bound
    se = 2.0 / np.sqrt(3000)
    assert abs(ma + mb) <= 3 * se


def test_ising_translation_invariance():
    spec = ising_model(0.3)
    fracs = []
    n = 1500
    for i, v in enumerate([(0, 0), (3, 1), (-5, 2), (10, -7), (1, 1)]):
        box = Box(v[0], v[0], v[1], v[1])
        s = sample_spins_batch(spec, 0.2, box, 100 + i, np.arange(n))
        fracs.append((s == 1).mean())
    se = np.sqrt(0.25 / n)
    for f in fracs[1:]:
        assert abs(f - fracs[0]) <= 3 * np.sqrt(2) * se


def test_sample_window_dispatch():
    assert sample_window(bernoulli_model(), 0.0, Box.centered(1), 1).model.kind \
        == "bernoulli"
    assert sample_window(majority_model(), 0.0, Box.centered(1), 1).meta.min() >= 1
    assert sample_window(ising_model(0.2), 0.0, Box.centered(1), 1).meta is not None


def test_forced_zero_bernoulli():
    spec = bernoulli_model()
    box = Box.centered(1)
    base = sample_spins_batch(spec, 2.0, box, 9, np.arange(50))
    forced = sample_spins_batch(spec, 2.0, box, 9, np.arange(50),
                                forced_zero=FieldKey((0, 0), 0, 0))
    assert np.all(forced[:, 1, 1] == -1)
    mask = np.ones(box.shape, dtype=bool)
    mask[1, 1] = False
    assert np.array_equal(base[:, mask], forced[:, mask])


def test_forced_zero_ising_outside_cone_is_noop():
    spec = ising_model(0.3)
    box = Box.centered(1)
    base = sample_spins_batch(spec, 0.1, box, 9, np.arange(40))
    far = sample_spins_batch(spec, 0.1, box, 9, np.arange(40),
                             forced_zero=FieldKey((500, 500), -1, 0))
    assert np.array_equal(base, far)


def test_forced_zero_ising_at_vertex():
    spec = ising_model(0.3)
    box = Box.centered(1)
    # forcing Y_v(-1) = -1 at an odd-parity vertex makes sigma_v = -1
    forced = sample_spins_batch(spec, 3.0, box, 9, np.arange(40),
                                forced_zero=FieldKey((1, 0), -1, 0))
    assert np.all(forced[:, 1, 2] == -1)


# ---------------------------------------------------------- determinedness


def test_schedule_bernoulli():
    spec = bernoulli_model()
    assert determinedness_schedule(spec, (3, 4), 1) == [FieldKey((3, 4), 0, 0)]
    assert determinedness_schedule(spec, (3, 4), 10) == [FieldKey((3, 4), 0, 0)]


def test_schedule_ising_prefix():
    spec = ising_model(0.3)
    v = (2, -1)
    sched = determinedness_schedule(spec, v, 1)
    assert sched == [FieldKey(v, -1, 0)]
    sched2 = determinedness_schedule(spec, v, 2)
    assert sched2[1] == FieldKey((1, -1), -2, 0)  # lex-first of the L1 ball
    sched7 = determinedness_schedule(spec, v, 7)
    # times -1 then five keys at -2 (radius-1 ball), then first of -3
    assert [k.time for k in sched7] == [-1, -2, -2, -2, -2, -2, -3]
    assert len(set(sched7)) == 7


def test_schedule_majority_prefix():
    spec = majority_model()
    v = (0, 0)
    sched = determinedness_schedule(spec, v, 4)
    assert [k.vertex for k in sched] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    sched5 = determinedness_schedule(spec, v, 5)
    assert sched5[4].vertex == (-1, -1)  # first cell of the n=2 ring
    assert all(k.time == 0 for k in sched5)


def test_schedule_disjointness_property():
    rng = np.random.default_rng(42)
    for spec in (bernoulli_model(), majority_model(), ising_model(0.3)):
        for _ in range(100):
            v = tuple(rng.integers(-30, 30, 2))
            w = tuple(rng.integers(-30, 30, 2))
            d = abs(v[0] - w[0]) + abs(v[1] - w[1])
            m = int(np.ceil(spec.alpha * d)) - 1
            if m < 1:
                continue
            a = set(determinedness_schedule(spec, v, m))
            b = set(determinedness_schedule(spec, w, m))
            assert not (a & b), (spec.kind, v, w, m)


def test_schedule_rejects_bad_m():
    with pytest.raises(ValueError):
        determinedness_schedule(bernoulli_model(), (0, 0), 0)


# ------------------------------------------------------------ spin window


def test_spin_window_validation():
    with pytest.raises(ValueError):
        SpinWindow(box=Box.centered(1), spins=np.zeros((3, 3)))
    with pytest.raises(ValueError):
        SpinWindow(box=Box.centered(1), spins=np.ones((3, 3)),
                   meta=np.zeros((3, 3)))


def test_spin_window_json_roundtrip():
    spec = ising_model(0.3)
    w = ising_sample_window(spec, 0.1, Box(-1, 2, 0, 1), seed=7, replica=4)
    w2 = SpinWindow.from_json(w.to_json())
    assert w2.box == w.box
    assert np.array_equal(w2.spins, w.spins)
    assert np.array_equal(w2.meta, w.meta)
    assert w2.model.kind == "ising" and w2.model.beta == 0.3
    assert w2.h == 0.1 and w2.seed == 7 and w2.replica == 4


def test_spin_window_accessors():
    w = bernoulli_sample_window(bernoulli_model(), 0.0, Box.centered(1), 1)
    v = (1, 1)
    r, c = w.box.index(v)
    assert w.spin_at(v) == w.spins[r, c]
    with pytest.raises(ValueError):
        w.spin_at((5, 5))
