"""Metropolis samplers: schedules, sample sets, annealing, tempering."""

import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from oracles import ising_energy, spearman
from quip.anneal import (
    AnnealSchedule,
    SampleSet,
    chain_break_stats,
    exchange_probability,
    mhmc_sweep,
    model_digest,
    parallel_tempering,
    simulated_anneal,
    tts,
)
from quip.errors import FormatError
from quip.models import (
    IsingModel,
    QuboModel,
    brute_force,
    chain_duplicate,
    qubo_to_ising,
)
from quip.reformulate import PenaltyWeights, compile_qubo, cost_magnitude_penalty
from test_reformulate import PARTITION_C, partition_system


def random_dyadic_ising(rng, n, density=0.8):
    # quarter-integer weights keep float64 local-field arithmetic exact,
    # so the vectorized engine and rational oracles must agree bit for bit
    J = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                J[(i, j)] = Fraction(rng.randint(-8, 8), 4)
    h = [Fraction(rng.randint(-8, 8), 4) for _ in range(n)]
    return IsingModel(n, J, h, Fraction(rng.randint(-2, 2)))


def grid_ferromagnet(side):
    J = {}
    for r in range(side):
        for c in range(side):
            i = r * side + c
            if c + 1 < side:
                J[(i, i + 1)] = -1
            if r + 1 < side:
                J[(i, i + side)] = -1
    return IsingModel(side * side, J, [0] * (side * side))


def double_well():
    """Two ferromagnetic rings joined by three strong bonds.

    The stiff ring wants to align with the soft ring through the links but
    its own field pulls the other way, leaving a deep local minimum 1.2
    above the ground state behind a barrier that single flips cross only
    while the ladder is still hot.
    """
    J = {}
    for k in range(9):
        J[(k, (k + 1) % 9)] = Fraction(-1, 2)
        J[(9 + k, 9 + (k + 1) % 9)] = -2
    J[(0, 9)] = J[(3, 12)] = J[(6, 15)] = -2
    h = [-1] * 9 + [Fraction(3, 5)] * 9
    return IsingModel(18, J, h)


def exhaustive_flip_extremes(ising):
    # largest and smallest nonzero |dE| over every state and every spin
    n = ising.n
    J = np.zeros((n, n))
    for (i, j), v in ising.J.items():
        J[i, j] = J[j, i] = float(v)
    h = np.array([float(v) for v in ising.h])
    states = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    gaps = 2.0 * np.abs(states @ J + h)
    top = float(gaps.max())
    nonzero = gaps[gaps > 1e-9 * top]
    return float(nonzero.min()), top


# ---------------------------------------------------------------------------
# schedules


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(0, 1)
    with pytest.raises(ValueError):
        AnnealSchedule(2, 1)
    with pytest.raises(ValueError):
        AnnealSchedule(0.1, 1, sweeps=0)
    with pytest.raises(ValueError):
        AnnealSchedule(0.1, 1, shape="cubic")
    with pytest.raises(ValueError):
        AnnealSchedule(0.1, 1, replicas=0)
    with pytest.raises(ValueError):
        AnnealSchedule(0.1, 1, exchange_interval=0)


def test_ladder_shapes():
    lin = AnnealSchedule(0.5, 2.5, sweeps=5, shape="linear").ladder()
    assert lin == (0.5, 1.0, 1.5, 2.0, 2.5)
    geo = AnnealSchedule(0.1, 10.0, sweeps=5).ladder()
    assert len(geo) == 5
    assert math.isclose(geo[0], 0.1) and math.isclose(geo[-1], 10.0)
    ratios = [geo[i + 1] / geo[i] for i in range(4)]
    for r in ratios:
        assert math.isclose(r, ratios[0], rel_tol=1e-9)
    assert AnnealSchedule(0.3, 2.0, sweeps=7).ladder(1) == (0.3,)
    replica_betas = AnnealSchedule(0.3, 2.0, sweeps=7).ladder(3)
    assert len(replica_betas) == 3
    assert replica_betas[0] < replica_betas[1] < replica_betas[2]


def test_default_schedule_single_spin():
    s = AnnealSchedule.default(IsingModel(1, {}, (1,)))
    # the only flip costs |2 h| = 2 in either direction
    assert math.isclose(s.beta_min, math.log(2) / 2)
    assert math.isclose(s.beta_max, math.log(100) / 2)


def test_default_schedule_uses_exact_flip_quantum():
    # per-spin magnitude bounds are 10 and 4, but opposing terms make the
    # smallest real step |2 (3 - 2)| = 2; the cold end must see that one
    s = AnnealSchedule.default(IsingModel(2, {(0, 1): 2}, (3, 0)))
    assert math.isclose(s.beta_min, math.log(2) / 10)
    assert math.isclose(s.beta_max, math.log(100) / 2)


def test_default_schedule_matches_exhaustive_extremes():
    rng = random.Random(20)
    for trial in range(8):
        model = random_dyadic_ising(rng, rng.randint(2, 6))
        lo, hi = exhaustive_flip_extremes(model)
        s = AnnealSchedule.default(model)
        assert math.isclose(s.beta_min, math.log(2) / hi)
        assert math.isclose(s.beta_max, math.log(100) / lo)


def test_default_schedule_degenerate_model():
    s = AnnealSchedule.default(IsingModel(2, {}, (0, 0)))
    assert math.isclose(s.beta_min, math.log(2))
    assert math.isclose(s.beta_max, math.log(100))


def test_default_schedule_partition_qubo():
    ip = partition_system()
    rho = cost_magnitude_penalty(PARTITION_C)
    model, enc, report = compile_qubo(ip, weights=PenaltyWeights(rho, rho))
    lo, hi = exhaustive_flip_extremes(qubo_to_ising(model))
    assert lo == 4.0 and hi == 1590.0
    s = AnnealSchedule.default(model)
    assert math.isclose(s.beta_min, math.log(2) / 1590)
    assert math.isclose(s.beta_max, math.log(100) / 4)
    # converting first changes nothing
    t = AnnealSchedule.default(qubo_to_ising(model))
    assert (t.beta_min, t.beta_max) == (s.beta_min, s.beta_max)


def test_default_schedule_passthrough_arguments():
    s = AnnealSchedule.default(IsingModel(1, {}, (1,)), sweeps=500,
                              shape="linear", replicas=4, exchange_interval=2)
    assert (s.sweeps, s.shape, s.replicas, s.exchange_interval) == \
        (500, "linear", 4, 2)


# ---------------------------------------------------------------------------
# sample sets


def test_sampleset_aggregation_and_order():
    ss = SampleSet.from_samples(
        [((1, 0), 3.0), ((0, 1), -1.0), ((1, 0), 3.0), ((1, 1), 3.0)],
        seed=5, model_digest="d")
    assert ss.records == (((0, 1), -1.0, 1), ((1, 0), 3.0, 2),
                          ((1, 1), 3.0, 1))
    assert ss.total_shots == 4
    assert len(ss) == 3
    assert list(ss)[0] == ((0, 1), -1.0, 1)
    assert ss.best() == ((0, 1), -1.0)
    assert ss.seed == 5 and ss.model_digest == "d"


def test_sampleset_validation():
    with pytest.raises(ValueError):
        SampleSet((((0,), 1.0, 0),), 0, "")
    with pytest.raises(ValueError):
        SampleSet((((0,), 2.0, 1), ((1,), 1.0, 1)), 0, "")
    with pytest.raises(ValueError):
        SampleSet((((1,), 1.0, 1), ((0,), 1.0, 1)), 0, "")
    with pytest.raises(ValueError):
        SampleSet((), 0, "").best()


def test_success_fraction_band():
    ss = SampleSet.from_samples([((1,), 5.0), ((0,), 7.0)], 0, "")
    assert ss.success_fraction(5.0) == 0.5
    assert ss.success_fraction(5.0 - 1e-12) == 0.5  # inside the band
    assert ss.success_fraction(4.99) == 0.0
    assert ss.success_fraction(7.5) == 1.0


def test_sampleset_verify():
    q = QuboModel.from_upper(2, {(0, 0): 1, (0, 1): -2, (1, 1): 1})
    ss = simulated_anneal(q, shots=25, seed=1)
    ss.verify(q)
    other = QuboModel.from_upper(2, {(0, 0): 1, (0, 1): -2, (1, 1): 2})
    with pytest.raises(FormatError):
        ss.verify(other)
    forged = SampleSet((((0, 0), 123.0, 1),), 1, model_digest(q))
    with pytest.raises(FormatError):
        forged.verify(q)


def test_model_digest_separates_models():
    q = QuboModel.from_upper(2, {(0, 1): 1})
    assert model_digest(q) == model_digest(QuboModel.from_upper(2, {(0, 1): 1}))
    assert model_digest(q) != model_digest(QuboModel.from_upper(2, {(0, 1): 2}))
    assert model_digest(q) != model_digest(
        QuboModel.from_upper(2, {(0, 1): 1}, offset=1))
    m = IsingModel(2, {(0, 1): 1}, (0, 0))
    assert model_digest(m) != model_digest(q)
    assert model_digest(m) != model_digest(IsingModel(2, {(0, 1): 1}, (0, 1)))
    with pytest.raises(ValueError):
        model_digest([[1, 0], [0, 1]])


# ---------------------------------------------------------------------------
# the single-chain kernel


def recompute_sweep(model, state, beta, rng):
    # same 2n-uniform tape as mhmc_sweep, but every energy difference comes
    # from two full rational evaluations instead of a local field
    n = model.n
    order_u = rng.random(n)
    accept_u = rng.random(n)
    order = sorted(range(n), key=lambda i: order_u[i])
    s = list(state)
    for pos, i in enumerate(order):
        before = ising_energy(model.J, model.h, model.offset, s)
        s[i] = -s[i]
        dE = float(ising_energy(model.J, model.h, model.offset, s) - before)
        if not (dE <= 0 or accept_u[pos] <= math.exp(-beta * dE)):
            s[i] = -s[i]
    return tuple(s)


def test_sweep_matches_full_recompute_oracle():
    rng = random.Random(41)
    for trial in range(25):
        n = rng.randint(2, 6)
        model = random_dyadic_ising(rng, n)
        beta = rng.choice([0.2, 0.7, 1.5])
        state = tuple(rng.choice((-1, 1)) for _ in range(n))
        oracle_state = state
        gen_a = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(trial)))
        gen_b = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(trial)))
        for _ in range(5):
            state = mhmc_sweep(model, state, beta, gen_a)
            oracle_state = recompute_sweep(model, oracle_state, beta, gen_b)
            assert state == oracle_state


def test_sweep_validation():
    model = IsingModel(2, {(0, 1): 1}, (0, 0))
    gen = np.random.default_rng(0)
    with pytest.raises(ValueError):
        mhmc_sweep(QuboModel.from_upper(1, {(0, 0): 1}), (1,), 1.0, gen)
    with pytest.raises(ValueError):
        mhmc_sweep(model, (1,), 1.0, gen)
    with pytest.raises(ValueError):
        mhmc_sweep(model, (1, 2), 1.0, gen)


def test_sweep_zero_temperature_never_climbs():
    rng = random.Random(8)
    for trial in range(10):
        model = random_dyadic_ising(rng, rng.randint(2, 6))
        state = tuple(rng.choice((-1, 1)) for _ in range(model.n))
        gen = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(trial)))
        energy = model.energy(state)
        for _ in range(30):
            state = mhmc_sweep(model, state, 1e6, gen)
            nxt = model.energy(state)
            assert nxt <= energy
            energy = nxt


def test_sweep_infinite_temperature_flips_everything():
    # at beta = 0 every proposal is accepted and each spin is proposed
    # exactly once, so one sweep negates the state
    rng = random.Random(9)
    for trial in range(10):
        model = random_dyadic_ising(rng, rng.randint(2, 5))
        state = tuple(rng.choice((-1, 1)) for _ in range(model.n))
        gen = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(trial)))
        out = mhmc_sweep(model, state, 0.0, gen)
        assert out == tuple(-v for v in state)


def test_single_spin_marginal_matches_boltzmann():
    model = IsingModel(1, {}, (1,))
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(42)))
    state = (1,)
    for _ in range(1000):
        state = mhmc_sweep(model, state, 1.0, gen)
    hits = 0
    sweeps = 100_000
    for _ in range(sweeps):
        state = mhmc_sweep(model, state, 1.0, gen)
        hits += state[0] == -1
    p = math.e / (math.e + 1 / math.e)
    sigma = math.sqrt(p * (1 - p) / sweeps)
    assert abs(hits / sweeps - p) <= 3 * sigma


def test_two_spin_distribution_total_variation():
    model = IsingModel(2, {(0, 1): Fraction(3, 4)},
                       (Fraction(1, 2), Fraction(-1, 3)))
    beta = 0.7
    weights = {}
    for s in itertools.product((-1, 1), repeat=2):
        weights[s] = math.exp(-beta * float(model.energy(s)))
    z = sum(weights.values())
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(7)))
    state = (1, 1)
    counts = {s: 0 for s in weights}
    sweeps = 200_000
    for _ in range(sweeps):
        state = mhmc_sweep(model, state, beta, gen)
        counts[state] += 1
    tv = 0.5 * sum(abs(counts[s] / sweeps - weights[s] / z) for s in weights)
    assert tv <= 0.02


# ---------------------------------------------------------------------------
# simulated annealing


def test_anneal_argument_validation():
    model = IsingModel(1, {}, (1,))
    with pytest.raises(ValueError):
        simulated_anneal("nope")
    with pytest.raises(ValueError):
        simulated_anneal(model, shots=0)
    with pytest.raises(ValueError):
        simulated_anneal(model, seed=-1)
    with pytest.raises(ValueError):
        simulated_anneal(model, seed=True)
    with pytest.raises(ValueError):
        simulated_anneal(model, threads=0)


def test_anneal_single_spin_finds_ground():
    ss = simulated_anneal(IsingModel(1, {}, (1,)), shots=100, seed=0)
    ss.verify(IsingModel(1, {}, (1,)))
    assert ss.best() == ((-1,), -1.0)
    assert ss.success_fraction(-1.0) >= 0.99


def test_anneal_matches_reference_kernel_per_shot():
    # one shot of the batched engine replays the documented tape: n init
    # uniforms from the (seed, shot) stream, then one reference sweep per
    # ladder rung on the same generator
    model = random_dyadic_ising(random.Random(14), 5)
    sched = AnnealSchedule(0.2, 2.0, sweeps=40)
    ss = simulated_anneal(model, sched, shots=1, seed=123)
    gen = np.random.Generator(np.random.Philox(
        np.random.SeedSequence((123, 0))))
    state = tuple(1 if u < 0.5 else -1 for u in gen.random(5))
    for beta in sched.ladder():
        state = mhmc_sweep(model, state, beta, gen)
    assert ss.records == ((state, float(model.energy(state)), 1),)


def test_anneal_thread_count_is_invisible():
    model = random_dyadic_ising(random.Random(3), 8)
    sched = AnnealSchedule.default(model, sweeps=120)
    one = simulated_anneal(model, sched, shots=64, seed=11, threads=1)
    four = simulated_anneal(model, sched, shots=64, seed=11, threads=4)
    assert one == four
    five = simulated_anneal(model, sched, shots=64, seed=11, threads=5)
    assert one == five


def test_anneal_qubo_and_ising_images_agree():
    rng = random.Random(77)
    upper = {}
    for i in range(6):
        for j in range(i, 6):
            if rng.random() < 0.7:
                upper[(i, j)] = Fraction(rng.randint(-8, 8), 4)
    q = QuboModel.from_upper(6, upper, Fraction(1, 2))
    m = qubo_to_ising(q)
    a = simulated_anneal(q, shots=60, seed=21)
    b = simulated_anneal(m, shots=60, seed=21)
    translated = tuple((tuple((v + 1) // 2 for v in cfg), e, c)
                       for cfg, e, c in b.records)
    assert a.records == translated
    a.verify(q)
    b.verify(m)


def test_anneal_grid_ferromagnet_hits_both_grounds():
    model = grid_ferromagnet(4)
    ss = simulated_anneal(model, shots=400, seed=5)
    assert ss.success_fraction(-24.0) >= 0.95
    counts = {cfg: c for cfg, e, c in ss.records}
    up = counts.get((1,) * 16, 0)
    down = counts.get((-1,) * 16, 0)
    # a fair sampler splits the two symmetric grounds near 50/50; 150 is
    # five binomial sigmas below an even split of 400
    assert up >= 150 and down >= 150


def test_anneal_partition_qubo_defaults():
    ip = partition_system()
    rho = cost_magnitude_penalty(PARTITION_C)
    model, enc, report = compile_qubo(ip, weights=PenaltyWeights(rho, rho))
    ss = simulated_anneal(model, shots=1000, seed=7)
    ss.verify(model)
    assert ss.best()[1] == 5.0
    feasible = sum(c for cfg, _, c in ss
                   if ip.is_feasible(enc.decode(cfg)))
    assert feasible / ss.total_shots >= 0.95
    assert ss.success_fraction(5.0) >= 0.10


# ---------------------------------------------------------------------------
# parallel tempering


def test_exchange_probability_values():
    assert exchange_probability(1.0, 5.0, 2.0, 3.0) == math.exp(-2.0)
    assert exchange_probability(2.0, 3.0, 1.0, 5.0) == math.exp(-2.0)
    assert exchange_probability(1.0, 2.0, 3.0, 7.0) == 1.0
    assert exchange_probability(1.5, 9.0, 1.5, 2.0) == 1.0


def test_tempering_needs_two_replicas():
    model = IsingModel(1, {}, (1,))
    with pytest.raises(ValueError):
        parallel_tempering(model, AnnealSchedule(0.1, 1.0, replicas=1))


def test_tempering_single_spin_cold_replica():
    model = IsingModel(1, {}, (1,))
    sched = AnnealSchedule.default(model, sweeps=200, replicas=4)
    ss = parallel_tempering(model, sched, shots=100, seed=3)
    ss.verify(model)
    assert ss.success_fraction(-1.0) >= 0.95


def test_tempering_thread_count_is_invisible():
    model = random_dyadic_ising(random.Random(6), 7)
    sched = AnnealSchedule.default(model, sweeps=80, replicas=4,
                                   exchange_interval=3)
    one = parallel_tempering(model, sched, shots=16, seed=9, threads=1)
    three = parallel_tempering(model, sched, shots=16, seed=9, threads=3)
    assert one == three


def test_tempering_crosses_barrier_that_stops_annealing():
    model = double_well()
    res = brute_force(model)
    assert res.energy == Fraction(-321, 10)
    assert res.configurations == ((1,) * 18,)
    ground = float(res.energy)
    for seed in (1, 2):
        sa = simulated_anneal(model, AnnealSchedule.default(model, sweeps=6000),
                              shots=200, seed=seed)
        pt = parallel_tempering(
            model,
            AnnealSchedule.default(model, sweeps=750, replicas=8,
                                   exchange_interval=5),
            shots=200, seed=seed)
        # equal sweep budgets (6000 spin updates per shot either way), but
        # only the tempered walker escapes the false well reliably
        assert sa.success_fraction(ground) < 0.5
        assert pt.success_fraction(ground) > 0.8


# ---------------------------------------------------------------------------
# time to solution


def test_tts_formula():
    ss = SampleSet.from_samples([((0,), -1.0), ((1,), 1.0)], 0, "")
    expected = 2 * 1.0 * math.log(0.01) / math.log(0.5)
    assert math.isclose(tts(ss, 1.0, -1.0, 0.99), expected)
    assert tts(ss, 1.0, -5.0, 0.99) == math.inf
    assert tts(ss, 0.25, 1.0, 0.99) == 0.5  # every shot already succeeds
    with pytest.raises(ValueError):
        tts(ss, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        tts(ss, 1.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        tts(ss, 0.0, -1.0, 0.5)


# ---------------------------------------------------------------------------
# chains


def test_chain_break_stats_fractions_and_votes():
    samples = [((1, 1, -1), -2.0)] * 3 + [((1, -1, 1), 4.0)] + \
        [((-1, -1, 1), 0.0)] * 2
    ss = SampleSet.from_samples(samples, 0, "")
    fractions, collapsed = chain_break_stats(ss, [(0, 1)])
    assert fractions == (1 / 6,)
    assert collapsed.chain_break_fraction == 1 / 6
    # ties vote up, intact chains keep their value, spin 2 passes through
    assert collapsed.records == (((1, -1), -2.0, 3), ((-1, 1), 0.0, 2),
                                 ((1, 1), 4.0, 1))
    assert collapsed.seed == ss.seed
    assert collapsed.model_digest == ""


def test_chain_break_stats_with_model_reevaluates():
    inner = IsingModel(2, {(0, 1): 1}, (0, 0))
    samples = [((1, 1, 1), 99.0)] * 2 + [((1, -1, 1), 99.0)]
    ss = SampleSet.from_samples(samples, 4, "x")
    fractions, collapsed = chain_break_stats(ss, [(0, 1)], model=inner)
    assert fractions == (1 / 3,)
    # both samples collapse to (1, 1) and the count merges
    assert collapsed.records == (((1, 1), 1.0, 3),)
    assert collapsed.model_digest == model_digest(inner)
    collapsed.verify(inner)


def test_chain_break_stats_bit_configurations():
    samples = [((1, 0, 1), 0.0), ((0, 0, 1), 0.0)]
    ss = SampleSet.from_samples(samples, 0, "")
    fractions, collapsed = chain_break_stats(ss, [(0, 1)])
    assert fractions == (0.5,)
    # the broken bit chain ties and votes 1; the intact one stays 0
    assert collapsed.records == (((0, 1), 0.0, 1), ((1, 1), 0.0, 1))


def test_chain_break_stats_validation():
    ss = SampleSet.from_samples([((1, 1, 1, 1), 0.0)], 0, "")
    for bad in ([(0, 1), (1, 2)], [()], [(0, 0)], [(0, 9)]):
        with pytest.raises(ValueError):
            chain_break_stats(ss, bad)
    with pytest.raises(ValueError):
        chain_break_stats(SampleSet((), 0, ""), [(0,)])


def test_chain_breaks_fall_as_strength_grows():
    # a frustrated triangle with vertex 0 split into a two-spin chain:
    # weak chains tear to satisfy the frustration, strong chains hold
    tri = IsingModel(3, {(0, 1): 1, (1, 2): 1, (0, 2): 1}, (0, 0, 0))
    sched = AnnealSchedule(0.05, 0.7, sweeps=1000)
    strengths = [Fraction(1, 2), 1, 2, 4, 8]
    rates = []
    for p in strengths:
        emb = chain_duplicate(tri, 0, 2, p, {2: 1})
        ss = simulated_anneal(emb, sched, shots=1000, seed=13)
        fractions, collapsed = chain_break_stats(ss, [(0, 3)], model=tri)
        rates.append(fractions[0])
        if p == 8:
            assert collapsed.best()[1] == -1.0
            assert collapsed.chain_break_fraction == fractions[0]
    assert spearman([float(p) for p in strengths], rates) < -0.9
