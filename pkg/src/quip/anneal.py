"""Metropolis sampling: simulated annealing, tempering, and sample statistics.

The sampler core is batched over shots with numpy, but every shot draws from
its own counter-based random stream keyed by (seed, shot index), so results
are identical no matter how shots are grouped into batches or threads.  Spin
dynamics run in float64 with incrementally-updated energies that are audited
against direct evaluation; recorded sample energies are re-evaluated through
the exact rational model once per distinct configuration.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .models import IsingModel, QuboModel, qubo_to_ising

AUDIT_INTERVAL = 1024
_AUDIT_TOL = 1e-9


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class AnnealSchedule:
    """Inverse-temperature ladder plus tempering layout.

    The ladder runs from beta_min to beta_max over `sweeps` rungs, spaced
    geometrically or linearly in beta.  For tempering the same endpoints and
    shape lay out `replicas` fixed temperatures instead, with swap attempts
    every `exchange_interval` sweeps.
    """

    beta_min: float
    beta_max: float
    sweeps: int = 1000
    shape: str = "geometric"
    replicas: int = 8
    exchange_interval: int = 10

    def __post_init__(self):
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("need 0 < beta_min < beta_max")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        if self.shape not in ("geometric", "linear"):
            raise ValueError(f"unknown ladder shape {self.shape!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.exchange_interval < 1:
            raise ValueError("exchange_interval must be at least 1")

    @classmethod
    def default(cls, model, sweeps: int = 1000, shape: str = "geometric",
                replicas: int = 8, exchange_interval: int = 10
                ) -> "AnnealSchedule":
        """Endpoints from single-flip energy extremes.

        beta_min = ln 2 / max dE with max dE the largest per-spin bound
        2(|h_i| + sum_j |J_ij|), so the hottest rung accepts even the worst
        flip half the time.  beta_max = ln 100 / min dE with min dE the
        smallest nonzero flip magnitude |2(h_i + sum_j J_ij s_j)|, found by
        enumerating neighbor sign patterns while that stays cheap and
        otherwise estimated as twice the smallest nonzero coupling, so the
        coldest rung accepts even the gentlest uphill step once in a
        hundred proposals.  A model with no couplings at all falls back to
        a unit energy scale.
        """
        ising = qubo_to_ising(model) if isinstance(model, QuboModel) else model
        if not isinstance(ising, IsingModel):
            raise ValueError("schedule needs a QUBO or Ising model")
        n = ising.n
        h = [float(v) for v in ising.h]
        neighbors: list[list[float]] = [[] for _ in range(n)]
        for (i, j), v in ising.J.items():
            if v:
                neighbors[i].append(float(v))
                neighbors[j].append(float(v))
        bounds = [2 * (abs(h[i]) + sum(abs(w) for w in neighbors[i]))
                  for i in range(n)]
        max_de = max(bounds, default=0.0)
        if max_de == 0:
            return cls(math.log(2), math.log(100), sweeps, shape, replicas,
                       exchange_interval)
        floor = 1e-9 * max_de
        cost = sum(1 << min(len(neighbors[i]), 62) for i in range(n)
                   if bounds[i] > 0)
        if cost <= 1 << 20:
            min_de = math.inf
            for i in range(n):
                if bounds[i] == 0:
                    continue
                w = np.array(neighbors[i])
                d = len(w)
                signs = 2.0 * (np.arange(1 << d)[:, None] >> np.arange(d)
                               & 1) - 1.0
                steps = np.abs(2.0 * (h[i] + signs @ w))
                steps = steps[steps > floor]
                if steps.size:
                    min_de = min(min_de, float(steps.min()))
        else:
            min_de = math.inf
        if not math.isfinite(min_de):
            quanta = [abs(v) for v in ising.h if v]
            quanta += [abs(v) for v in ising.J.values() if v]
            min_de = 2 * float(min(quanta))
        beta_min = math.log(2) / max_de
        beta_max = math.log(100) / min_de
        return cls(beta_min, beta_max, sweeps, shape, replicas,
                   exchange_interval)

    def ladder(self, rungs: int | None = None) -> tuple[float, ...]:
        """The beta sequence; pass `rungs` to lay out replicas instead."""
        count = self.sweeps if rungs is None else rungs
        if count == 1:
            return (self.beta_min,)
        if self.shape == "linear":
            pts = np.linspace(self.beta_min, self.beta_max, count)
        else:
            pts = np.geomspace(self.beta_min, self.beta_max, count)
        return tuple(float(b) for b in pts)


# ---------------------------------------------------------------------------
# sample sets


@dataclass(frozen=True)
class SampleSet:
    """Aggregated sampler output: (configuration, energy, count) records.

    Records are sorted by energy then configuration; energies are the exact
    model energies rounded once to float, so they re-evaluate reproducibly.
    """

    records: tuple[tuple[tuple[int, ...], float, int], ...]
    seed: int
    model_digest: str
    chain_break_fraction: float | None = None

    def __post_init__(self):
        last = None
        for config, energy, count in self.records:
            if count < 1:
                raise ValueError("record counts must be positive")
            key = (energy, config)
            if last is not None and key < last:
                raise ValueError("records must be sorted by energy then "
                                 "configuration")
            last = key

    @classmethod
    def from_samples(cls, samples: Iterable[tuple[tuple[int, ...], float]],
                     seed: int, model_digest: str,
                     chain_break_fraction: float | None = None) -> "SampleSet":
        merged: dict[tuple[int, ...], list] = {}
        for config, energy in samples:
            slot = merged.get(config)
            if slot is None:
                merged[config] = [float(energy), 1]
            else:
                slot[1] += 1
        records = tuple(sorted(((cfg, e, c) for cfg, (e, c) in merged.items()),
                               key=lambda r: (r[1], r[0])))
        return cls(records, seed, model_digest, chain_break_fraction)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def total_shots(self) -> int:
        return sum(c for _, _, c in self.records)

    def best(self) -> tuple[tuple[int, ...], float]:
        if not self.records:
            raise ValueError("empty sample set")
        config, energy, _ = self.records[0]
        return config, energy

    def success_fraction(self, target: float) -> float:
        band = 1e-9 * (1.0 + abs(target))
        hits = sum(c for _, e, c in self.records if e <= target + band)
        return hits / self.total_shots

    def verify(self, model) -> None:
        """Check records against the model; energies must match exactly
        (they were produced by rounding the exact energy once)."""
        if model_digest(model) != self.model_digest:
            raise FormatError("sample set does not belong to this model")
        for config, energy, _ in self.records:
            if float(model.energy(config)) != energy:
                raise FormatError(f"recorded energy {energy} disagrees with "
                                  f"the model on {config}")


def model_digest(model) -> str:
    """Content hash of a model, used to pair sample sets with their source."""
    parts = []
    if isinstance(model, QuboModel):
        parts.append(f"qubo {model.n} {model.offset}")
        for i, j, v in model.iter_upper():
            parts.append(f"{i} {j} {v}")
    elif isinstance(model, IsingModel):
        parts.append(f"ising {model.n} {model.offset}")
        for (i, j) in sorted(model.J):
            parts.append(f"J {i} {j} {model.J[(i, j)]}")
        for i, v in enumerate(model.h):
            parts.append(f"h {i} {v}")
    else:
        raise ValueError("digest needs a QUBO or Ising model")
    return hashlib.sha256("\n".join(parts).encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# the reference single-chain kernel


def _ising_arrays(ising: IsingModel):
    n = ising.n
    J = np.zeros((n, n), dtype=np.float64)
    for (i, j), v in ising.J.items():
        J[i, j] = J[j, i] = float(v)
    h = np.array([float(v) for v in ising.h], dtype=np.float64)
    return J, h, float(ising.offset)


def mhmc_sweep(model: IsingModel, state: Sequence[int], beta: float,
               rng: np.random.Generator) -> tuple[int, ...]:
    """One Metropolis sweep: propose each spin once in random order.

    Downhill flips always land; uphill flips land with probability
    exp(-beta dE), where dE comes from the local field in O(degree) time.
    Consumes exactly 2n uniforms: n to shuffle the visit order, n to decide
    acceptance.
    """
    if not isinstance(model, IsingModel):
        raise ValueError("mhmc_sweep works on Ising models")
    n = model.n
    if len(state) != n:
        raise ValueError("state length mismatch")
    s = [int(v) for v in state]
    if any(v not in (-1, 1) for v in s):
        raise ValueError("state must be -1/+1")
    order = np.argsort(rng.random(n))
    accept_u = rng.random(n)
    neighbors: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), v in model.J.items():
        w = float(v)
        neighbors[i].append((j, w))
        neighbors[j].append((i, w))
    h = [float(v) for v in model.h]
    for pos in range(n):
        i = int(order[pos])
        field = h[i]
        for j, w in neighbors[i]:
            field += w * s[j]
        dE = -2.0 * s[i] * field
        if dE <= 0 or accept_u[pos] <= math.exp(-beta * dE):
            s[i] = -s[i]
    return tuple(s)


# ---------------------------------------------------------------------------
# the batched engine


def _shot_generator(seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence((seed,) + path)))


def _batch_sweep(J, h, offset, states, fields, energies, beta, order_u,
                 accept_u, counters, rows) -> None:
    """Advance every row one sweep; beta may be a scalar or per-row.

    `fields` carries the running local fields h + J s per row; a flip of
    spin j only has to subtract twice its old value times row j of J.
    """
    n = states.shape[1]
    perm = np.argsort(order_u, axis=1)
    for pos in range(n):
        idx = perm[:, pos]
        sigma = states[rows, idx]
        dE = -2.0 * sigma * fields[rows, idx]
        accept = accept_u[:, pos] <= np.exp(-beta * np.maximum(dE, 0.0))
        if not accept.any():
            continue
        rows_a = rows[accept]
        idx_a = idx[accept]
        sigma_a = sigma[accept]
        counters[accept] += 1
        states[rows_a, idx_a] = -sigma_a
        fields[rows_a] -= (2.0 * sigma_a)[:, None] * J[idx_a]
        energies[accept] += dE[accept]
        audit = accept & (counters % AUDIT_INTERVAL == 1)
        if audit.any():
            sub = states[audit]
            direct = (0.5 * np.einsum("bi,ij,bj->b", sub, J, sub)
                      + sub @ h + offset)
            err = np.abs(direct - energies[audit])
            if not np.all(err <= _AUDIT_TOL * (1.0 + np.abs(direct))):
                raise RuntimeError("incremental energy drifted from direct "
                                   "evaluation")


def _initial_states(gens, n):
    init = np.stack([g.random(n) for g in gens])
    return np.where(init < 0.5, 1.0, -1.0)


def _window(budget: int, lanes: int, n: int) -> int:
    return max(1, budget // max(1, lanes * 2 * n))


def _run_sa_chunk(J, h, offset, ladder, seed, shot_ids):
    n = J.shape[0]
    B = len(shot_ids)
    gens = [_shot_generator(seed, s) for s in shot_ids]
    if n == 0:
        return [((), offset)] * B
    states = _initial_states(gens, n)
    fields = states @ J + h
    energies = 0.5 * np.einsum("bi,bi->b", states, fields + h) + offset
    counters = np.zeros(B, dtype=np.int64)
    rows = np.arange(B)
    sweeps = len(ladder)
    window = _window(4_000_000, B, n)
    done = 0
    while done < sweeps:
        w = min(window, sweeps - done)
        tape = np.stack([g.random(2 * n * w) for g in gens])
        tape = tape.reshape(B, w, 2 * n)
        for k in range(w):
            _batch_sweep(J, h, offset, states, fields, energies,
                         ladder[done + k], tape[:, k, :n], tape[:, k, n:],
                         counters, rows)
        done += w
    return [(tuple(int(v) for v in states[b]), float(energies[b]))
            for b in range(B)]


def _run_pt_chunk(J, h, offset, betas, sweeps, interval, seed, shot_ids):
    n = J.shape[0]
    B = len(shot_ids)
    R = len(betas)
    gens = [[_shot_generator(seed, s, r) for r in range(R)] for s in shot_ids]
    swap_gens = [_shot_generator(seed, s, R) for s in shot_ids]
    if n == 0:
        return [((), offset)] * B
    states = np.empty((B, R, n), dtype=np.float64)
    for r in range(R):
        states[:, r, :] = _initial_states([row[r] for row in gens], n)
    fields = np.empty((B, R, n), dtype=np.float64)
    energies = np.empty((B, R), dtype=np.float64)
    for r in range(R):
        sub = states[:, r, :]
        fields[:, r, :] = sub @ J + h
        energies[:, r] = (0.5 * np.einsum("bi,bi->b", sub,
                                          fields[:, r, :] + h) + offset)
    counters = np.zeros((B, R), dtype=np.int64)
    rows = np.arange(B)
    window = _window(4_000_000, B * R, n)
    done = 0
    while done < sweeps:
        w = min(window, sweeps - done)
        tapes = []
        for r in range(R):
            block = np.stack([row[r].random(2 * n * w) for row in gens])
            tapes.append(block.reshape(B, w, 2 * n))
        n_attempts = sum(1 for k in range(done, done + w)
                         if (k + 1) % interval == 0)
        swaps = np.stack([g.random((R - 1) * n_attempts) for g in swap_gens]) \
            .reshape(B, n_attempts, R - 1) if n_attempts else None
        attempt = 0
        for k in range(w):
            for r in range(R):
                _batch_sweep(J, h, offset, states[:, r, :], fields[:, r, :],
                             energies[:, r], betas[r], tapes[r][:, k, :n],
                             tapes[r][:, k, n:], counters[:, r], rows)
            if (done + k + 1) % interval == 0:
                for r in range(R - 1):
                    delta = ((betas[r] - betas[r + 1])
                             * (energies[:, r] - energies[:, r + 1]))
                    take = swaps[:, attempt, r] <= np.exp(
                        np.minimum(delta, 0.0))
                    if take.any():
                        for arr in (states, fields):
                            tmp = arr[take, r, :].copy()
                            arr[take, r, :] = arr[take, r + 1, :]
                            arr[take, r + 1, :] = tmp
                        te = energies[take, r].copy()
                        energies[take, r] = energies[take, r + 1]
                        energies[take, r + 1] = te
                attempt += 1
        done += w
    cold = R - 1
    return [(tuple(int(v) for v in states[b, cold]),
             float(energies[b, cold])) for b in range(B)]


def exchange_probability(beta1: float, energy1: float, beta2: float,
                         energy2: float) -> float:
    """min{1, exp[(beta1 - beta2)(H1 - H2)]}: certain when the hotter
    replica already holds the lower energy."""
    return float(np.exp(min((beta1 - beta2) * (energy1 - energy2), 0.0)))


# ---------------------------------------------------------------------------
# drivers


def _check_run_args(model, shots, seed, threads):
    if not isinstance(model, (IsingModel, QuboModel)):
        raise ValueError("sampler needs a QUBO or Ising model")
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValueError("seed must be a non-negative integer")
    if threads < 1:
        raise ValueError("threads must be at least 1")


def _chunks(shots: int, threads: int) -> list[range]:
    per = -(-shots // threads)
    return [range(lo, min(lo + per, shots)) for lo in range(0, shots, per)]


def _run_chunked(worker, shots, threads):
    parts = _chunks(shots, threads)
    if len(parts) == 1:
        return worker(list(parts[0]))
    out = []
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        for result in pool.map(worker, [list(p) for p in parts]):
            out.extend(result)
    return out


def _finalize(model, raw, seed, qubo_in) -> SampleSet:
    exact: dict[tuple[int, ...], float] = {}
    samples = []
    for spins, _energy in raw:
        config = tuple((v + 1) // 2 for v in spins) if qubo_in else spins
        if config not in exact:
            exact[config] = float(model.energy(config))
        samples.append((config, exact[config]))
    return SampleSet.from_samples(samples, seed, model_digest(model))


def simulated_anneal(model, schedule: AnnealSchedule | None = None,
                     shots: int = 100, seed: int = 0,
                     threads: int = 1) -> SampleSet:
    """Independent annealing shots down the schedule's beta ladder.

    Each shot starts from its own random state, performs one sweep per rung
    from beta_min to beta_max, and reports its final configuration.  Shot
    results depend only on (model, schedule, seed), never on threads.
    """
    _check_run_args(model, shots, seed, threads)
    qubo_in = isinstance(model, QuboModel)
    ising = qubo_to_ising(model) if qubo_in else model
    if schedule is None:
        schedule = AnnealSchedule.default(ising)
    J, h, offset = _ising_arrays(ising)
    ladder = schedule.ladder()

    def worker(ids):
        return _run_sa_chunk(J, h, offset, ladder, seed, ids)

    raw = _run_chunked(worker, shots, threads)
    return _finalize(model, raw, seed, qubo_in)


def parallel_tempering(model, schedule: AnnealSchedule | None = None,
                       shots: int = 100, seed: int = 0,
                       threads: int = 1) -> SampleSet:
    """Replica-exchange sampling; reports the coldest replica per shot.

    Each shot maintains `replicas` chains at fixed temperatures laid out by
    the schedule shape between beta_min and beta_max.  Every
    exchange_interval sweeps, adjacent pairs swap configurations with
    probability min{1, exp[(b1 - b2)(H1 - H2)]}.
    """
    _check_run_args(model, shots, seed, threads)
    qubo_in = isinstance(model, QuboModel)
    ising = qubo_to_ising(model) if qubo_in else model
    if schedule is None:
        schedule = AnnealSchedule.default(ising)
    if schedule.replicas < 2:
        raise ValueError("tempering needs at least two replicas")
    J, h, offset = _ising_arrays(ising)
    betas = schedule.ladder(schedule.replicas)

    def worker(ids):
        return _run_pt_chunk(J, h, offset, betas, schedule.sweeps,
                             schedule.exchange_interval, seed, ids)

    raw = _run_chunked(worker, shots, threads)
    return _finalize(model, raw, seed, qubo_in)


# ---------------------------------------------------------------------------
# statistics


def tts(sampleset: SampleSet, tau: float, target_energy: float,
        confidence: float) -> float:
    """m tau log(1-s) / log(1-p) with p the fraction of shots at or below
    the target; never-hit targets report +inf, always-hit m tau."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie strictly between 0 and 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    m = sampleset.total_shots
    p = sampleset.success_fraction(target_energy)
    if p == 0:
        return float("inf")
    if p == 1:
        return m * tau
    return m * tau * math.log(1 - confidence) / math.log(1 - p)


def _majority(values) -> int:
    score = sum(1 if v > 0 else -1 for v in values)
    return 1 if score >= 0 else -1


def chain_break_stats(sampleset: SampleSet, chains: Sequence[Sequence[int]],
                      model=None) -> tuple[tuple[float, ...], SampleSet]:
    """Per-chain break fractions plus the majority-vote-collapsed samples.

    A chain breaks in a sample when its spins disagree; the collapse keeps
    the lowest index of each chain, voting ties toward up.  Works on both
    spin and bit configurations.  When `model` is given, collapsed energies
    are re-evaluated against it; otherwise each collapsed record keeps the
    energy of its first contributing sample.
    """
    if not sampleset.records:
        raise ValueError("empty sample set")
    n = len(sampleset.records[0][0])
    groups = []
    seen: set[int] = set()
    for chain in chains:
        group = tuple(int(i) for i in chain)
        if not group:
            raise ValueError("empty chain")
        if len(set(group)) != len(group):
            raise ValueError("repeated index inside a chain")
        if any(not 0 <= i < n for i in group):
            raise ValueError("chain index out of range")
        if seen & set(group):
            raise ValueError("chains must not overlap")
        seen |= set(group)
        groups.append(group)
    drop = {i for g in groups for i in g if i != min(g)}
    keep = [i for i in range(n) if i not in drop]
    rep_of = {min(g): g for g in groups}
    broken_weight = [0] * len(groups)
    any_broken = 0
    total = sampleset.total_shots
    collapsed = []
    for config, energy, count in sampleset.records:
        bits = all(v in (0, 1) for v in config)
        sample_broken = False
        votes = {}
        for gi, g in enumerate(groups):
            vals = [config[i] for i in g]
            if len(set(vals)) > 1:
                broken_weight[gi] += count
                sample_broken = True
            vote = _majority(vals)
            votes[min(g)] = (vote + 1) // 2 if bits else vote
        if sample_broken:
            any_broken += count
        out = tuple(votes[i] if i in rep_of else config[i] for i in keep)
        if model is not None:
            energy = float(model.energy(out))
        for _ in range(count):
            collapsed.append((out, energy))
    result = SampleSet.from_samples(
        collapsed, sampleset.seed,
        model_digest(model) if model is not None else "",
        chain_break_fraction=any_broken / total)
    fractions = tuple(w / total for w in broken_weight)
    return fractions, result
