"""Buchberger's algorithm and reduced Groebner bases.

Pair selection follows the normal strategy (smallest lcm degree first, then
the monomial order on the lcm, then pair indices).  The queue is pruned by
the coprime leading-monomial criterion and by lcm dominance (a pair whose
lcm strictly contains another pair's lcm with the same newcomer, or an old
pair strictly refined by a newcomer, reduces to zero through the finer
pairs).  Pruning only skips provably redundant work; the reduced basis is
the unique one for the order either way.  Output bases are monic and listed
in descending leading-monomial order, which makes them canonical.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import ResourceLimitError
from .polys import (
    Monomial,
    MonomialOrder,
    SparsePolynomial,
    divide_terms,
    grevlex,
    monomial_coprime,
    monomial_div,
    monomial_divides,
    monomial_lcm,
    normal_form,
)

DEFAULT_MAX_PAIRS = 1_000_000
DEFAULT_MAX_DEGREE = 60


@dataclass(frozen=True)
class Ideal:
    """A finite generating set in a ring of `arity` variables."""

    arity: int
    generators: tuple[SparsePolynomial, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.names is not None and len(self.names) != self.arity:
            raise ValueError("need one name per variable")
        for g in self.generators:
            if g.arity != self.arity:
                raise ValueError("generator arity mismatch")


@dataclass
class BuchbergerStats:
    pairs_processed: int = 0
    pairs_skipped_coprime: int = 0
    pairs_skipped_lcm: int = 0
    reductions_to_zero: int = 0
    basis_additions: int = 0
    max_degree_seen: int = 0
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return {
            "pairs_processed": self.pairs_processed,
            "pairs_skipped_coprime": self.pairs_skipped_coprime,
            "pairs_skipped_lcm": self.pairs_skipped_lcm,
            "reductions_to_zero": self.reductions_to_zero,
            "basis_additions": self.basis_additions,
            "max_degree_seen": self.max_degree_seen,
            "elapsed_seconds": round(self.elapsed, 6),
        }


class GroebnerBasis:
    """A reduced Groebner basis with the order it was computed under."""

    def __init__(self, polys: Sequence[SparsePolynomial], order: MonomialOrder,
                 stats: BuchbergerStats | None = None):
        self.polys = list(polys)
        self.order = order
        self.stats = stats or BuchbergerStats()

    def __len__(self) -> int:
        return len(self.polys)

    def __iter__(self) -> Iterator[SparsePolynomial]:
        return iter(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def is_trivial(self) -> bool:
        """True when the basis is {1}: the ideal is the whole ring."""
        return len(self.polys) == 1 and self.polys[0].is_constant() \
            and not self.polys[0].is_zero()

    def leading_monomials(self) -> list:
        return [p.leading_monomial(self.order) for p in self.polys]

    def __repr__(self) -> str:
        return f"GroebnerBasis({len(self.polys)} polynomials)"


def _interreduce(polys: list[SparsePolynomial], order: MonomialOrder) -> list[SparsePolynomial]:
    """Minimalize then tail-reduce; returns the canonical reduced basis."""
    monic = [p.monic(order) for p in polys if not p.is_zero()]
    if not monic:
        return []
    # minimalize: drop any element whose lm is divisible by another kept lm
    monic.sort(key=lambda p: order.key(p.leading_monomial(order)))
    kept: list[SparsePolynomial] = []
    kept_lms: list = []
    for p in monic:
        lm = p.leading_monomial(order)
        if any(monomial_divides(other, lm) for other in kept_lms):
            continue
        kept.append(p)
        kept_lms.append(lm)
    # tail-reduce to a fixpoint (leading monomials cannot change)
    changed = True
    while changed:
        changed = False
        for i in range(len(kept)):
            others = kept[:i] + kept[i + 1:]
            if not others:
                continue
            r = normal_form(kept[i], others, order).monic(order)
            if r.terms != kept[i].terms:
                kept[i] = r
                changed = True
    kept.sort(key=lambda p: order.key(p.leading_monomial(order)), reverse=True)
    return kept


def buchberger(generators: Sequence[SparsePolynomial] | Ideal, order: MonomialOrder, *,
               max_pairs: int = DEFAULT_MAX_PAIRS,
               max_degree: int = DEFAULT_MAX_DEGREE) -> GroebnerBasis:
    """Compute the reduced Groebner basis of the generated ideal.

    Raises ResourceLimitError when the S-pair budget or the intermediate
    total-degree cap is exceeded.
    """
    if isinstance(generators, Ideal):
        generators = generators.generators
    arities = {g.arity for g in generators}
    if len(arities) > 1:
        raise ValueError(f"generators live in different rings (arities {sorted(arities)})")
    if arities and next(iter(arities)) != order.arity:
        raise ValueError(f"order arity {order.arity} does not match ring arity {arities.pop()}")
    t0 = time.perf_counter()
    stats = BuchbergerStats()

    G: list[SparsePolynomial] = []
    seen_terms = set()
    for g in generators:
        if g.is_zero():
            continue
        g = g.monic(order)
        fs = frozenset(g.terms.items())
        if fs in seen_terms:
            continue
        seen_terms.add(fs)
        G.append(g)
        stats.max_degree_seen = max(stats.max_degree_seen, g.total_degree())

    if not G:
        stats.elapsed = time.perf_counter() - t0
        return GroebnerBasis([], order, stats)

    members = G
    G = []
    lms: list = []
    heap: list = []
    alive: set[tuple[int, int]] = set()
    divisors: list = []

    def install(h) -> None:
        # Pair-queue update with the two classical soundness-preserving
        # prunings: pairs whose lcm is dominated by another new pair's lcm
        # reduce to zero via that pair, and coprime-LM pairs always reduce
        # to zero.  Old pairs strictly refined by the newcomer are dropped.
        t = len(G)
        lt = h.leading_monomial(order)
        cand = [(i, monomial_lcm(lms[i], lt)) for i in range(t)]
        survivors: list[tuple[int, Monomial]] = []
        for pos, (i, big) in enumerate(cand):
            if monomial_coprime(lms[i], lt):
                survivors.append((i, big))
                continue
            dominated = False
            for pos2, (j, small) in enumerate(cand):
                if pos2 == pos:
                    continue
                if small != big and monomial_divides(small, big):
                    dominated = True
                    break
                if small == big and (pos2 > pos or (j, small) in survivors):
                    # equal-lcm class: keep only the last representative
                    dominated = True
                    break
            if dominated:
                stats.pairs_skipped_lcm += 1
            else:
                survivors.append((i, big))
        for i, big in survivors:
            if monomial_coprime(lms[i], lt):
                stats.pairs_skipped_coprime += 1
                continue
            alive.add((i, t))
            heapq.heappush(heap, (sum(big), order.key(big), i, t))
        for (i, j) in list(alive):
            if j == t:
                continue
            big = monomial_lcm(lms[i], lms[j])
            if (monomial_divides(lt, big)
                    and monomial_lcm(lms[i], lt) != big
                    and monomial_lcm(lms[j], lt) != big):
                alive.discard((i, j))
                stats.pairs_skipped_lcm += 1
        G.append(h)
        lms.append(lt)
        divisors.append((t, lt, sum(lt), Fraction(1),
                         [(m, c) for m, c in h.terms.items() if m != lt]))

    for g in members:
        install(g)

    while heap:
        _, _, i, j = heapq.heappop(heap)
        if (i, j) not in alive:
            continue
        alive.discard((i, j))
        stats.pairs_processed += 1
        if stats.pairs_processed > max_pairs:
            raise ResourceLimitError(
                f"S-pair budget {max_pairs} exhausted", limit="max_pairs", value=max_pairs)
        s = _spoly(G[i], lms[i], G[j], lms[j], order)
        rterms = divide_terms(s.terms, divisors, order.key)
        if not rterms:
            stats.reductions_to_zero += 1
            continue
        r = SparsePolynomial(s.arity, rterms)
        deg = r.total_degree()
        stats.max_degree_seen = max(stats.max_degree_seen, deg)
        if deg > max_degree:
            raise ResourceLimitError(
                f"intermediate degree {deg} exceeds cap {max_degree}",
                limit="max_degree", value=max_degree)
        stats.basis_additions += 1
        install(r.monic(order))

    reduced = _interreduce(G, order)
    stats.elapsed = time.perf_counter() - t0
    return GroebnerBasis(reduced, order, stats)


def _spoly(f: SparsePolynomial, lmf, g: SparsePolynomial, lmg,
           order: MonomialOrder) -> SparsePolynomial:
    # both inputs are monic here, so no coefficient division is needed
    big = monomial_lcm(lmf, lmg)
    left = f.mul_term(monomial_div(big, lmf), 1)
    right = g.mul_term(monomial_div(big, lmg), 1)
    return left - right


def is_infeasible(generators: Sequence[SparsePolynomial] | Ideal,
                  order: MonomialOrder | None = None, *,
                  max_pairs: int = DEFAULT_MAX_PAIRS,
                  max_degree: int = DEFAULT_MAX_DEGREE) -> bool:
    """True when the ideal is the whole ring (no common zero anywhere).

    For the binary/root-of-unity systems built by this package this is exactly
    "the combinatorial instance has no solution".
    """
    if isinstance(generators, Ideal):
        gens = generators.generators
        arity = generators.arity
    else:
        gens = list(generators)
        if not gens:
            raise ValueError("need at least one generator")
        arity = gens[0].arity
    if order is None:
        order = grevlex(arity)
    basis = buchberger(gens, order, max_pairs=max_pairs, max_degree=max_degree)
    return basis.is_trivial()
