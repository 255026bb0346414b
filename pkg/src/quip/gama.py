"""Hybrid solver: sampled kernel bases plus Graver descent from sampled seeds.

The pipeline never encodes the objective into a QUBO.  Sampling only serves
two feasibility questions: which encoded integer vectors sit in the kernel
of the constraint matrix, and which satisfy A x = b inside the box.  The
objective is consulted purely as an oracle during the augmentation walks.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from .anneal import SampleSet, simulated_anneal
from .errors import InfeasibleError, UnboundedError
from .lattices import GraverBasis, graver_augment, minimal_filter, pottier
from .models import QuboModel
from .reformulate import ConstraintSystem, EncodingMap, inequality_to_equality

_POTTIER_WIDTH_CAP = 12


def _int_rows(A) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in A)


def _bit_layout(encoding: EncodingMap):
    # flat bit index -> (owning variable, weight)
    owners = []
    for i, k in enumerate(encoding.weights):
        for w in k:
            owners.append((i, w))
    return owners


def _residual_qubo(A, b, encoding: EncodingMap) -> QuboModel:
    A = _int_rows(A)
    b = tuple(int(v) for v in b)
    n = encoding.n_variables
    if any(len(row) != n for row in A):
        raise ValueError("matrix width must match the encoding")
    m = len(A)
    gram = [[sum(A[r][i] * A[r][j] for r in range(m)) for j in range(n)]
            for i in range(n)]
    L = encoding.L
    # row vector (L^T Q_I - b^T A), one entry per variable
    lin = [sum(L[j] * gram[j][i] for j in range(n))
           - sum(b[r] * A[r][i] for r in range(m)) for i in range(n)]
    bits = _bit_layout(encoding)
    T = len(bits)
    Q = [[0] * T for _ in range(T)]
    for s in range(T):
        vs, ws = bits[s]
        Q[s][s] = ws * ws * gram[vs][vs] + 2 * ws * lin[vs]
        for t in range(s + 1, T):
            vt, wt = bits[t]
            Q[s][t] = Q[t][s] = ws * wt * gram[vs][vt]
    offset = sum((sum(A[r][j] * L[j] for j in range(n)) - b[r]) ** 2
                 for r in range(m))
    return QuboModel(T, Q, offset)


def kernel_qubo(A, encoding: EncodingMap) -> QuboModel:
    """Bit-space QUBO whose energy is the exact residual norm ||A(L+EX)||^2.

    Zero-energy patterns decode to kernel vectors of A.  The encoded box
    must contain the origin, otherwise even the trivial kernel vector has
    no pattern and the minimum loses its meaning.
    """
    for lo, span in zip(encoding.shifts, encoding.ranges):
        if not lo <= 0 <= lo + span:
            raise ValueError("kernel encoding must cover 0 in every "
                             "coordinate")
    return _residual_qubo(A, [0] * len(tuple(A)), encoding)


def seed_qubo(ip: ConstraintSystem, encoding: EncodingMap) -> QuboModel:
    """Bit-space QUBO whose energy is the exact residual ||A(L+EX) - b||^2.

    Zero-energy patterns decode to solutions of the equality rows inside
    the encoded window, which must sit inside the instance box.
    """
    if not isinstance(ip, ConstraintSystem):
        raise ValueError("seed_qubo needs a ConstraintSystem")
    if ip.inequalities:
        raise ValueError("convert inequality rows to equalities first")
    if encoding.n_variables != ip.n:
        raise ValueError("encoding width must match the variable count")
    for lo, span, bound_lo, bound_hi in zip(encoding.shifts, encoding.ranges,
                                            ip.lower, ip.upper):
        if bound_lo is not None and lo < bound_lo:
            raise ValueError("encoding window leaks below a lower bound")
        if bound_hi is not None and lo + span > bound_hi:
            raise ValueError("encoding window leaks above an upper bound")
    return _residual_qubo(ip.A, ip.b, encoding)


def _residual_l1(A, v, b=None) -> int:
    total = 0
    for r, row in enumerate(A):
        acc = sum(a * x for a, x in zip(row, v))
        if b is not None:
            acc -= b[r]
        total += abs(acc)
    return total


def extract_partial_graver(samples: SampleSet, encoding: EncodingMap, A, *,
                           near_residual: int = 2,
                           pair_cap: int = 10_000) -> GraverBasis:
    """Distill sampled kernel-QUBO patterns into a (possibly partial) basis.

    Decodes every distinct sample, keeps exact kernel members, then runs one
    combination round: pairwise sums and differences of decoded vectors with
    small residual (1-norm at most `near_residual`, at most `pair_cap`
    pairs) that land exactly in the kernel join the pool.  The pool is
    sign-closed and conformally-minimal-filtered.  The result is flagged
    complete only when it provably equals the full basis, which is checked
    against the Pottier construction on matrices narrow enough to afford it.
    """
    A = _int_rows(A)
    decoded = sorted({encoding.decode(cfg) for cfg, _, _ in samples.records})
    zero = (0,) * encoding.n_variables
    pool = set()
    near = []
    for v in decoded:
        r1 = _residual_l1(A, v)
        if r1 == 0 and v != zero:
            pool.add(v)
        if r1 <= near_residual:
            near.append((r1, sum(abs(x) for x in v), v))
    # spend the pair budget on exact and short vectors first; those are the
    # ones whose sums can still be conformally minimal
    near = [v for _, _, v in sorted(near)]
    pairs = 0
    for i in range(len(near)):
        if pairs >= pair_cap:
            break
        for j in range(i + 1, len(near)):
            if pairs >= pair_cap:
                break
            pairs += 1
            u, w = near[i], near[j]
            for cand in (tuple(a + c for a, c in zip(u, w)),
                         tuple(a - c for a, c in zip(u, w))):
                if cand != zero and _residual_l1(A, cand) == 0:
                    pool.add(cand)
    minimal = minimal_filter(pool, sign_close=True) if pool else []
    partial = True
    width = len(A[0]) if A else encoding.n_variables
    if not A:
        # no rows: the kernel is everything and the true basis is the
        # signed unit vectors
        units = {tuple(int(i == j) for j in range(width))
                 for i in range(width)}
        reference = units | {tuple(-x for x in u) for u in units}
        partial = set(minimal) != reference
    elif width <= _POTTIER_WIDTH_CAP:
        partial = set(minimal) != pottier(A).as_set()
    return GraverBasis.from_vectors(minimal, partial=partial, A=A)


# ---------------------------------------------------------------------------
# the solver loop


@dataclass(frozen=True)
class GamaConfig:
    """Run parameters for the hybrid loop.

    `width` is the kernel-encoding width in bits, one value for all
    variables or a per-variable sequence; seed sampling reuses it as the
    starting window width before the adaptive doubling kicks in.
    `fraction` caps how much of the extracted basis the augmentation may
    use, drawn uniformly under a recorded sub-seed.  `max_seeds` limits how
    many feasible seeds are walked (best initial objective first); None
    walks them all.
    """

    scheme: str = "binary"
    width: int | Sequence[int] = 2
    kernel_shots: int = 2000
    seed_shots: int = 1000
    fraction: float = 1.0
    strategy: str = "bisection"
    seed: int = 0
    max_seeds: int | None = None

    def __post_init__(self):
        if self.scheme not in ("binary", "unary"):
            raise ValueError(f"unsupported encoding scheme {self.scheme!r}")
        widths = self.width if isinstance(self.width, Sequence) \
            else (self.width,)
        if not widths or any(not isinstance(w, int) or w < 1 for w in widths):
            raise ValueError("width must be a positive integer or a "
                             "sequence of them")
        if self.kernel_shots < 1 or self.seed_shots < 1:
            raise ValueError("shot budgets must be at least 1")
        if not 0 < self.fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        if self.strategy not in ("greedy", "bisection"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) \
                or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.max_seeds is not None and self.max_seeds < 1:
            raise ValueError("max_seeds must be at least 1 when given")


@dataclass
class GamaReport:
    """Everything a run produced, stage by stage.

    `basis` is the full extracted set before the fraction cap;
    `directions_used` counts what augmentation actually walked with.
    Trajectories hold the strictly improving objective values of each
    walked seed, best first by starting objective.
    """

    basis: GraverBasis
    directions_used: int
    fraction_subseed: int | None
    seeds_attempted: int
    seeds_found: int
    trajectories: tuple[tuple, ...]
    best_solution: tuple[int, ...]
    best_objective: object
    stage_seconds: dict

    def __post_init__(self):
        for path in self.trajectories:
            if any(b >= a for a, b in zip(path, path[1:])):
                raise ValueError("trajectories must strictly decrease")

    @property
    def basis_size(self) -> int:
        return len(self.basis)

    @property
    def basis_complete(self) -> bool:
        return not self.basis.partial


def _normalize_widths(width, n_original: int, n_total: int) -> tuple[int, ...]:
    if isinstance(width, int):
        return (width,) * n_total
    widths = tuple(int(w) for w in width)
    if len(widths) != n_original:
        raise ValueError("per-variable widths must cover every variable")
    # slack columns appended by the inequality rewrite get the widest width
    return widths + (max(widths),) * (n_total - n_original)


def _seed_window(lower, upper, centers, widths):
    los, his = [], []
    for lo, hi, c, w in zip(lower, upper, centers, widths):
        c = min(max(c, lo), hi)
        half = 1 << (w - 1)
        los.append(max(lo, c - half))
        his.append(min(hi, c + half - 1))
    return los, his


def gama_solve(ip: ConstraintSystem, f: Callable[[Sequence[int]], object],
               config: GamaConfig | None = None) -> GamaReport:
    """Sample a partial Graver basis and feasible seeds, then walk downhill.

    Stages: kernel-QUBO sampling and basis extraction; seed-QUBO sampling
    over an adaptive window (re-centered on the best residual and doubled
    in width whenever a round finds nothing); Graver descent from every
    retained seed.  Inequality rows are rewritten with slack variables
    first; the objective oracle only ever sees the original variables.
    Raises InfeasibleError when no seed turns up within the budget, with
    the best residual seen in the diagnostics.
    """
    config = config or GamaConfig()
    if not isinstance(ip, ConstraintSystem):
        raise ValueError("gama_solve needs a ConstraintSystem")
    if not callable(f):
        raise ValueError("objective must be callable")
    if any(v is None for v in ip.lower + ip.upper):
        raise UnboundedError("the augmentation walk needs finite bounds")
    n_original = ip.n
    eq = inequality_to_equality(ip) if ip.inequalities else ip
    widths = _normalize_widths(config.width, n_original, eq.n)

    def oracle(z):
        return f(tuple(z[:n_original]))

    stage_seconds = {}

    # kernel sampling
    t0 = time.perf_counter()
    kern_lo = [-(1 << (w - 1)) for w in widths]
    kern_hi = [(1 << (w - 1)) - 1 for w in widths]
    kernel_encoding = EncodingMap.boxes(kern_lo, kern_hi, config.scheme)
    kernel_samples = simulated_anneal(kernel_qubo(eq.A, kernel_encoding),
                                      shots=config.kernel_shots,
                                      seed=config.seed)
    stage_seconds["kernel_sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    basis = extract_partial_graver(kernel_samples, kernel_encoding, eq.A)
    directions = list(basis.elements)
    subseed = None
    if config.fraction < 1 and directions:
        keep = max(1, math.ceil(config.fraction * len(directions)))
        subseed = config.seed + 1
        directions = sorted(random.Random(subseed).sample(directions, keep))
    stage_seconds["basis_extraction"] = time.perf_counter() - t0

    # seed sampling over an adaptive window
    t0 = time.perf_counter()
    centers = [(lo + hi) // 2 for lo, hi in zip(eq.lower, eq.upper)]
    window_widths = list(widths)
    seeds = set()
    attempted = set()
    best_residual = None  # (l1 residual, point)
    for round_index in range(8):
        los, his = _seed_window(eq.lower, eq.upper, centers, window_widths)
        window = EncodingMap.boxes(los, his, config.scheme)
        if window.total_bits == 0:
            candidates = {window.L}
        else:
            model = seed_qubo(eq, window)
            shots = simulated_anneal(model, shots=config.seed_shots,
                                     seed=config.seed + 2 + round_index)
            candidates = {window.decode(cfg) for cfg, _, _ in shots.records}
        for v in sorted(candidates):
            attempted.add(v)
            r1 = _residual_l1(eq.A, v, eq.b)
            if r1 == 0:
                seeds.add(v)
            elif best_residual is None or (r1, v) < best_residual:
                best_residual = (r1, v)
        if seeds:
            break
        covered = all(lo == blo and hi == bhi for lo, hi, blo, bhi in
                      zip(los, his, eq.lower, eq.upper))
        if covered:
            break
        if best_residual is not None:
            centers = list(best_residual[1])
        window_widths = [w + 1 for w in window_widths]
    stage_seconds["seed_sampling"] = time.perf_counter() - t0
    if not seeds:
        detail = {"seeds_attempted": len(attempted)}
        if best_residual is not None:
            detail["best_residual"] = best_residual[0]
            detail["best_point"] = list(best_residual[1])
        raise InfeasibleError("no feasible seeds found within the sampling "
                              "budget", detail)

    # augmentation
    t0 = time.perf_counter()
    ordered = sorted(seeds, key=lambda s: (oracle(s), s))
    if config.max_seeds is not None:
        ordered = ordered[:config.max_seeds]
    trajectories = []
    best = None  # (value, order index, full point)
    for index, start in enumerate(ordered):
        result = graver_augment(oracle, eq.lower, eq.upper, start, directions,
                                strategy=config.strategy)
        trajectories.append(tuple(result.trajectory))
        key = (result.value, index)
        if best is None or key < best[:2]:
            best = (result.value, index, result.x)
    stage_seconds["augmentation"] = time.perf_counter() - t0

    best_solution = tuple(best[2][:n_original])
    if not ip.is_feasible(best_solution):
        raise RuntimeError("augmentation left the feasible region")
    return GamaReport(basis=basis, directions_used=len(directions),
                      fraction_subseed=subseed,
                      seeds_attempted=len(attempted), seeds_found=len(seeds),
                      trajectories=tuple(trajectories),
                      best_solution=best_solution, best_objective=best[0],
                      stage_seconds=stage_seconds)


def portfolio_objective(mu: Sequence, sigma: Sequence,
                        epsilon: float) -> Callable[[Sequence[int]], float]:
    """Mean-risk oracle -sum mu_i x_i + sqrt((1-eps)/eps sum sigma_i^2 x_i^2).

    Convex along rays, so the bisection step search stays exact on it.
    """
    if len(mu) != len(sigma):
        raise ValueError("mu and sigma must have the same length")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    means = [float(v) for v in mu]
    spreads = [float(v) for v in sigma]
    scale = (1 - epsilon) / epsilon

    def objective(x):
        risk = scale * sum((s * v) ** 2 for s, v in zip(spreads, x))
        return -sum(m * v for m, v in zip(means, x)) + math.sqrt(risk)

    return objective
