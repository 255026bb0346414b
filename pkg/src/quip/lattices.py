"""Graver bases: conformal order, kernel lattice bases, Pottier completion,
the Lawrence-lifting route, and Graver-best augmentation.

Vectors are plain int tuples throughout; all arithmetic is exact.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .errors import ResourceLimitError
from .toric import toric_kernel_binomials

Vector = tuple[int, ...]


# ---------------------------------------------------------------------------
# conformal (orthant) partial order


def sign_compatible(u: Sequence[int], v: Sequence[int]) -> bool:
    """True when u and v live in a common closed orthant."""
    return all(a * b >= 0 for a, b in zip(u, v))


def conformal_leq(u: Sequence[int], v: Sequence[int]) -> bool:
    """u is conformally below v: same closed orthant, |u_i| <= |v_i|."""
    return all(a * b >= 0 and abs(a) <= abs(b) for a, b in zip(u, v))


# ---------------------------------------------------------------------------
# integer kernel basis (Hermite-style column reduction)


def integer_kernel_basis(A: Sequence[Sequence[int]]) -> list[Vector]:
    """Lattice basis of {v integer : A v = 0}.

    Column-reduces A with unimodular operations while mirroring them on an
    identity matrix; the mirror columns over the zeroed-out part of A span the
    kernel lattice exactly (saturation comes free from unimodularity).
    Output vectors are size-reduced, sign-normalized, and sorted.
    """
    rows = [list(map(int, r)) for r in A]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(len(r) != n for r in rows):
        raise ValueError("ragged matrix")
    M = [r[:] for r in rows]
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def col_addmul(dst: int, src: int, q: int):
        if q == 0:
            return
        for i in range(m):
            M[i][dst] -= q * M[i][src]
        for i in range(n):
            U[i][dst] -= q * U[i][src]

    def col_swap(a: int, b: int):
        if a == b:
            return
        for i in range(m):
            M[i][a], M[i][b] = M[i][b], M[i][a]
        for i in range(n):
            U[i][a], U[i][b] = U[i][b], U[i][a]

    def col_negate(a: int):
        for i in range(m):
            M[i][a] = -M[i][a]
        for i in range(n):
            U[i][a] = -U[i][a]

    ptr = 0
    for row in range(m):
        while True:
            active = [j for j in range(ptr, n) if M[row][j] != 0]
            if not active:
                break
            if len(active) == 1:
                j = active[0]
                if M[row][j] < 0:
                    col_negate(j)
                col_swap(ptr, j)
                ptr += 1
                break
            piv = min(active, key=lambda j: (abs(M[row][j]), j))
            for j in active:
                if j != piv:
                    col_addmul(j, piv, M[row][j] // M[row][piv])

    kernel = [tuple(U[i][j] for i in range(n)) for j in range(ptr, n)]
    kernel = _size_reduce(kernel)
    return sorted(_normalize_sign(v) for v in kernel)


def _normalize_sign(v: Vector) -> Vector:
    for x in v:
        if x > 0:
            return v
        if x < 0:
            return tuple(-a for a in v)
    return v


def _size_reduce(vs: list[Vector]) -> list[Vector]:
    """Pairwise integer size reduction (weak LLL); deterministic."""
    vs = [tuple(v) for v in vs]
    for _ in range(64):
        changed = False
        for i in range(len(vs)):
            for j in range(len(vs)):
                if i == j:
                    continue
                den = sum(x * x for x in vs[j])
                if den == 0:
                    continue
                num = sum(x * y for x, y in zip(vs[i], vs[j]))
                q = round(Fraction(num, den))
                if q:
                    cand = tuple(x - q * y for x, y in zip(vs[i], vs[j]))
                    if sum(x * x for x in cand) < sum(x * x for x in vs[i]):
                        vs[i] = cand
                        changed = True
        if not changed:
            break
    return [v for v in vs if any(v)]


# ---------------------------------------------------------------------------
# normal form and the completion


def vector_normal_form(v: Sequence[int], basis: Sequence[Vector]) -> Vector:
    """Subtract conformally-dominated basis vectors until none applies.

    Deterministic: scans `basis` in list order and restarts after every
    subtraction.  Each subtraction strictly shrinks the 1-norm, so this
    terminates.
    """
    r = tuple(int(x) for x in v)
    while any(r):
        hit = False
        for g in basis:
            if any(g) and conformal_leq(g, r):
                # largest multiple that stays conformal
                t = min(abs(ri) // abs(gi) for ri, gi in zip(r, g) if gi)
                r = tuple(ri - t * gi for ri, gi in zip(r, g))
                hit = True
                break
        if not hit:
            break
    return r


@dataclass(frozen=True)
class GraverBasis:
    """Sign-closed set of conformally-minimal kernel vectors.

    `partial` marks bases that only cover a slice of the kernel (pairwise
    sums of seed vectors, say); minimality within the set still holds, but
    augmentation with a partial basis may stall short of the optimum.
    """

    elements: tuple[Vector, ...]
    partial: bool = False
    A: tuple[tuple[int, ...], ...] | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Vector]:
        return iter(self.elements)

    def __contains__(self, v) -> bool:
        return tuple(v) in set(self.elements)

    def as_set(self) -> set[Vector]:
        return set(self.elements)

    @staticmethod
    def from_vectors(vectors: Iterable[Sequence[int]], *, partial: bool = False,
                     A: Sequence[Sequence[int]] | None = None) -> "GraverBasis":
        frozen = None if A is None else tuple(tuple(int(x) for x in row) for row in A)
        return GraverBasis(tuple(sorted({tuple(int(x) for x in v) for v in vectors})),
                           partial, frozen)


def minimal_filter(vectors: Iterable[Sequence[int]], *, sign_close: bool = True) -> list[Vector]:
    """Drop every vector conformally dominated by a distinct one.

    With sign_close=True the negation of every vector joins the pool first,
    keeping the result symmetric under v -> -v.
    """
    pool = {tuple(int(x) for x in v) for v in vectors}
    if sign_close:
        pool |= {tuple(-x for x in v) for v in pool}
    pool = {v for v in pool if any(v)}
    # strict conformal domination strictly lowers the 1-norm, so scanning in
    # ascending norm order only ever needs to test against survivors
    out: list[Vector] = []
    for v in sorted(pool, key=lambda u: (sum(abs(x) for x in u), u)):
        if not any(conformal_leq(u, v) for u in out):
            out.append(v)
    return sorted(out)


def pottier(A: Sequence[Sequence[int]], *, sign_restrict: bool = True,
            max_elements: int = 200_000) -> GraverBasis:
    """Pottier completion: start from a kernel lattice basis and its
    negations, keep normal-forming pairwise sums until closure, then filter
    to the conformally minimal elements.

    sign_restrict skips sums of sign-compatible pairs; such sums always admit
    a conformal representation by their own two summands, so they can never
    contribute new minimal elements.  Tests pin equivalence with the
    unrestricted run.
    """
    F = integer_kernel_basis(A)
    if not F:
        return GraverBasis((), A=tuple(tuple(int(x) for x in row) for row in A))

    G: list[Vector] = []
    seen: set[Vector] = set()

    def add(v: Vector):
        if len(G) >= max_elements:
            raise ResourceLimitError(
                f"completion exceeded {max_elements} elements",
                limit="max_elements", value=max_elements)
        G.append(v)
        seen.add(v)

    for f in F:
        for s in (f, tuple(-x for x in f)):
            if s not in seen:
                add(s)

    queue: deque[Vector] = deque()
    queued: set[Vector] = set()

    def enqueue_sum(a: Vector, b: Vector):
        if sign_restrict and sign_compatible(a, b):
            return
        s = tuple(x + y for x, y in zip(a, b))
        if not any(s) or s in queued:
            return
        queued.add(s)
        queue.append(s)

    base = len(G)
    for i in range(base):
        for j in range(i, base):
            enqueue_sum(G[i], G[j])

    while queue:
        s = queue.popleft()
        r = vector_normal_form(s, G)
        if not any(r):
            continue
        snapshot = len(G)
        add(r)
        for k in range(snapshot + 1):
            enqueue_sum(G[k], r)

    return GraverBasis.from_vectors(minimal_filter(G, sign_close=True), A=A)


def lawrence_graver(A: Sequence[Sequence[int]], *,
                    max_pairs: int = 1_000_000, max_degree: int = 60) -> GraverBasis:
    """Graver basis through the Lawrence lifting.

    Every reduced Groebner basis of the toric ideal of [[A, 0], [I, I]] is the
    Graver basis of A; the y-block exponents are dropped (set to one) and the
    x-block differences are read off directly, without any minimality filter.
    """
    rows = [list(map(int, r)) for r in A]
    m = len(rows)
    n = len(rows[0]) if m else 0
    big = []
    for i in range(m):
        big.append(rows[i] + [0] * n)
    for i in range(n):
        unit = [0] * n
        unit[i] = 1
        big.append(unit + unit)
    binomials = toric_kernel_binomials(big, max_pairs=max_pairs, max_degree=max_degree)
    out: set[Vector] = set()
    for u in binomials:
        g = tuple(u[:n])
        if any(g):
            out.add(g)
            out.add(tuple(-x for x in g))
    return GraverBasis.from_vectors(out, A=rows)


# ---------------------------------------------------------------------------
# augmentation


@dataclass
class AugmentResult:
    x: Vector
    value: object  # Fraction or float, whatever the objective returns
    trajectory: list = field(default_factory=list)
    rounds: int = 0
    moves: list = field(default_factory=list)  # (direction, alpha) per round


def _alpha_max(z: Sequence[int], t: Vector, lower: Sequence[int],
               upper: Sequence[int]) -> int:
    amax = None
    for zi, ti, lo, hi in zip(z, t, lower, upper):
        if ti > 0:
            room = (hi - zi) // ti
        elif ti < 0:
            room = (zi - lo) // (-ti)
        else:
            continue
        amax = room if amax is None else min(amax, room)
    return 0 if amax is None else amax


def graver_augment(objective: Callable[[Vector], object],
                   lower: Sequence[int], upper: Sequence[int],
                   start: Sequence[int], basis: GraverBasis | Sequence[Vector], *,
                   strategy: str = "bisection",
                   max_rounds: int = 100_000) -> AugmentResult:
    """Greedy Graver-best descent inside box bounds.

    Per round, every direction gets a step search over its feasible alpha
    interval (computed in closed form from the bounds): 'bisection' probes the
    endpoints plus a ternary search (exact for objectives convex along rays),
    'greedy' scans the whole interval (capped at 512 steps).  The best strict
    improvement over all (direction, alpha) is taken; ties keep the earliest.
    Stops when no feasible step improves the objective.
    """
    if strategy not in ("bisection", "greedy"):
        raise ValueError(f"unknown strategy {strategy!r}")
    dirs = list(basis.elements if isinstance(basis, GraverBasis) else basis)
    z = tuple(int(v) for v in start)
    lower = tuple(int(v) for v in lower)
    upper = tuple(int(v) for v in upper)
    if not all(lo <= zi <= hi for zi, lo, hi in zip(z, lower, upper)):
        raise ValueError("start violates bounds")

    current = objective(z)
    trajectory = [current]
    moves: list[tuple[Vector, int]] = []
    rounds = 0

    while rounds < max_rounds:
        rounds += 1
        best = None  # (value, dir_index, alpha, point)
        for idx, t in enumerate(dirs):
            amax = _alpha_max(z, t, lower, upper)
            if amax < 1:
                continue
            cache: dict[int, object] = {}

            def probe(a: int):
                if a not in cache:
                    pt = tuple(zi + a * ti for zi, ti in zip(z, t))
                    cache[a] = objective(pt)
                return cache[a]

            if strategy == "greedy":
                for a in range(1, min(amax, 512) + 1):
                    probe(a)
                probe(amax)
            else:
                probe(1)
                probe(amax)
                lo, hi = 1, amax
                while hi - lo >= 3:
                    m1 = lo + (hi - lo) // 3
                    m2 = hi - (hi - lo) // 3
                    if probe(m1) <= probe(m2):
                        hi = m2
                    else:
                        lo = m1
                for a in range(lo, hi + 1):
                    probe(a)
            for a in sorted(cache):
                v = cache[a]
                if v < current and (best is None or v < best[0]):
                    best = (v, idx, a, tuple(zi + a * ti for zi, ti in zip(z, dirs[idx])))
        if best is None:
            break
        current, idx, alpha, z = best
        trajectory.append(current)
        moves.append((dirs[idx], alpha))

    return AugmentResult(x=z, value=current, trajectory=trajectory,
                         rounds=rounds, moves=moves)
