"""Integer programming through Groebner bases.

Two solver families live here:

* the toric / binomial route: encode A x = b, x >= 0 as a binomial ideal,
  compute its basis under a cost-weighted elimination order, and read the
  optimum off a normal form (works for any integer matrix; negative entries
  go through the auxiliary product variable);
* the binary route: adjoin an objective tracking variable z to a 0/1 system,
  eliminate the x variables under lex, and pick the smallest root of the
  univariate polynomial in z.

Graph k-coloring is the stock combinatorial encoding: k-th roots of unity per
vertex plus one edge polynomial per edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, Sequence

from .errors import InfeasibleError, QuipError
from .groebner import (
    DEFAULT_MAX_DEGREE,
    DEFAULT_MAX_PAIRS,
    GroebnerBasis,
    Ideal,
    buchberger,
)
from .polys import (
    MonomialOrder,
    SparsePolynomial,
    cost_order,
    grevlex,
    lex,
    normal_form,
)


# ---------------------------------------------------------------------------
# toric ideals and the Conti-Traverso solver


@dataclass(frozen=True)
class ToricIP:
    """min c.x  subject to  A x = b, x >= 0 integer."""

    A: tuple[tuple[int, ...], ...]
    b: tuple[int, ...]
    c: tuple[int, ...]

    def __post_init__(self):
        m = len(self.A)
        if m == 0:
            raise ValueError("A needs at least one row")
        n = len(self.A[0])
        if any(len(row) != n for row in self.A):
            raise ValueError("ragged matrix")
        if len(self.b) != m:
            raise ValueError("b length must match row count")
        if len(self.c) != n:
            raise ValueError("c length must match column count")
        if any(ci < 0 for ci in self.c):
            raise ValueError("cost vector must be non-negative")

    @classmethod
    def make(cls, A, b, c) -> "ToricIP":
        return cls(tuple(tuple(int(v) for v in row) for row in A),
                   tuple(int(v) for v in b), tuple(int(v) for v in c))

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.A[0])


@dataclass(frozen=True)
class CtLayout:
    """Ring layout for the toric encoding: z block, optional t, then w block."""

    m: int
    n: int
    with_t: bool

    @property
    def arity(self) -> int:
        return self.m + self.n + (1 if self.with_t else 0)

    @property
    def t_index(self) -> int | None:
        return self.m if self.with_t else None

    @property
    def w_start(self) -> int:
        return self.m + (1 if self.with_t else 0)

    def names(self) -> list[str]:
        out = [f"z{i}" for i in range(self.m)]
        if self.with_t:
            out.append("t")
        out += [f"w{j}" for j in range(self.n)]
        return out


def ct_toric_ideal(A: Sequence[Sequence[int]]) -> tuple[Ideal, CtLayout]:
    """Binomial encoding of ker(A): one generator per column.

    Columns with negative entries put their negative part on the w side
    (z^neg * w_j - z^pos); when any negative entry exists the product trick
    variable t with generator t*z_0*...*z_{m-1} - 1 makes the z's invertible.
    """
    rows = [tuple(int(v) for v in row) for row in A]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(len(r) != n for r in rows):
        raise ValueError("ragged matrix")
    with_t = any(v < 0 for row in rows for v in row)
    layout = CtLayout(m, n, with_t)
    arity = layout.arity
    gens: list[SparsePolynomial] = []
    for j in range(n):
        col = [rows[i][j] for i in range(m)]
        left = [0] * arity   # z^{a^-} w_j
        right = [0] * arity  # z^{a^+}
        for i, v in enumerate(col):
            if v >= 0:
                right[i] = v
            else:
                left[i] = -v
        left[layout.w_start + j] = 1
        gens.append(SparsePolynomial.from_terms(
            arity, [(tuple(left), 1), (tuple(right), -1)]))
    if with_t:
        prod = [0] * arity
        for i in range(m):
            prod[i] = 1
        prod[layout.t_index] = 1
        gens.append(SparsePolynomial.from_terms(
            arity, [(tuple(prod), 1), (tuple([0] * arity), -1)]))
    return Ideal(arity, tuple(gens), tuple(layout.names())), layout


def ct_order(layout: CtLayout, cost: Sequence[int]) -> MonomialOrder:
    """Cost-weighted elimination order: z (and t) first, then cost on w,
    then grevlex to break remaining ties."""
    arity = layout.arity
    elim = [0] * arity
    for i in range(layout.w_start):
        elim[i] = 1
    wcost = [0] * arity
    for j, cj in enumerate(cost):
        if cj < 0:
            raise ValueError("cost must be non-negative")
        wcost[layout.w_start + j] = int(cj)
    return cost_order(elim, tie=cost_order(wcost, tie=grevlex(arity)))


@dataclass
class CtResult:
    x: tuple[int, ...]
    value: Fraction
    basis_size: int
    stats: dict


def ct_solve(ip: ToricIP, *, x0: Sequence[int] | None = None,
             max_pairs: int = DEFAULT_MAX_PAIRS,
             max_degree: int = DEFAULT_MAX_DEGREE) -> CtResult:
    """Solve the toric IP by normal-form reduction.

    The target monomial is z^b (shifted through t when b or A has negative
    entries), or w^{x0} when a feasible start is supplied.  A normal form that
    still contains z or t variables certifies infeasibility.
    """
    ideal, layout = ct_toric_ideal(ip.A)
    order = ct_order(layout, ip.c)
    basis = buchberger(ideal, order, max_pairs=max_pairs, max_degree=max_degree)

    arity = layout.arity
    target = [0] * arity
    if x0 is not None:
        if len(x0) != ip.n or any(v < 0 for v in x0):
            raise ValueError("x0 must be a non-negative n-vector")
        residual = [sum(ip.A[i][j] * x0[j] for j in range(ip.n)) - ip.b[i]
                    for i in range(ip.m)]
        if any(residual):
            raise ValueError(f"x0 is not feasible: A x0 - b = {residual}")
        for j, v in enumerate(x0):
            target[layout.w_start + j] = int(v)
    else:
        shift = max([0] + [-bi for bi in ip.b])
        if shift and not layout.with_t:
            # A >= 0 and some b_i < 0: nothing non-negative can reach it
            raise InfeasibleError(
                "negative right-hand side with non-negative matrix",
                {"reason": "negative-rhs", "b": list(ip.b)})
        for i, bi in enumerate(ip.b):
            target[i] = bi + shift
        if shift:
            target[layout.t_index] = shift

    nf = normal_form(
        SparsePolynomial.from_terms(arity, [(tuple(target), 1)]),
        basis.polys, order)

    if len(nf.terms) != 1:
        raise QuipError("normal form of a monomial is not a monomial; "
                        "toric reduction invariant broken")
    mono, coeff = next(iter(nf.terms.items()))
    if coeff != 1 or any(mono[i] for i in range(layout.w_start)):
        raise InfeasibleError(
            "no lattice point satisfies A x = b with x >= 0",
            {"reason": "infeasible", "normal_form": str(nf)})
    x = tuple(mono[layout.w_start + j] for j in range(ip.n))
    value = sum(Fraction(cj) * xj for cj, xj in zip(ip.c, x))
    return CtResult(x=x, value=value, basis_size=len(basis),
                    stats=basis.stats.as_dict())


def toric_kernel_binomials(A: Sequence[Sequence[int]], *,
                           max_pairs: int = DEFAULT_MAX_PAIRS,
                           max_degree: int = DEFAULT_MAX_DEGREE) -> list[tuple[int, ...]]:
    """Exponent-difference vectors of the pure-w basis of the toric ideal.

    Computes the basis of the encoding ideal under the z-elimination order
    (uniform zero cost, grevlex tie) and reads u = alpha - beta from every
    binomial w^alpha - w^beta that survived elimination.
    """
    ideal, layout = ct_toric_ideal(A)
    order = ct_order(layout, [0] * layout.n)
    basis = buchberger(ideal, order, max_pairs=max_pairs, max_degree=max_degree)
    out = []
    for p in basis:
        if any(m[i] for m, _ in p for i in range(layout.w_start)):
            continue
        terms = p.sorted_terms(order)
        if len(terms) != 2 or terms[0][1] != 1 or terms[1][1] != -1:
            raise QuipError("toric elimination produced a non-binomial element")
        alpha = terms[0][0]
        beta = terms[1][0]
        u = tuple(alpha[layout.w_start + j] - beta[layout.w_start + j]
                  for j in range(layout.n))
        if any(u):
            out.append(u)
    return out


# ---------------------------------------------------------------------------
# binary polynomial solver (objective variable + lex elimination)


@dataclass
class BptResult:
    value: Fraction
    x: tuple[int, ...]
    objective_polynomial: SparsePolynomial  # univariate in the tracking variable


def bpt_solve(objective: SparsePolynomial,
              constraints: Sequence[SparsePolynomial] = (), *,
              max_pairs: int = DEFAULT_MAX_PAIRS,
              max_degree: int = DEFAULT_MAX_DEGREE) -> BptResult:
    """Minimize a polynomial over binary x with polynomial equality constraints.

    Builds the ideal <z - f(x), g_1..g_r, x_i^2 - x_i> in Q[x_0..x_{n-1}, z],
    computes the lex basis with every x ahead of z, extracts the univariate
    polynomial in z, and returns its smallest attained root with one witness.
    """
    n = objective.arity
    arity = n + 1
    z = SparsePolynomial.variable(arity, n)
    gens: list[SparsePolynomial] = [z - objective.pad(arity)]
    for g in constraints:
        if g.arity != n:
            raise ValueError("constraint arity mismatch")
        gens.append(g.pad(arity))
    for i in range(n):
        xi = SparsePolynomial.variable(arity, i)
        gens.append(xi * xi - xi)

    order = lex(arity)  # identity perm: x_0 > ... > x_{n-1} > z
    basis = buchberger(gens, order, max_pairs=max_pairs, max_degree=max_degree)
    if basis.is_trivial():
        raise InfeasibleError("binary system has no solution",
                              {"reason": "infeasible"})

    univariate = [p for p in basis if all(i >= n or e == 0
                                          for m, _ in p for i, e in enumerate(m))]
    if len(univariate) != 1:
        raise QuipError(
            f"expected exactly one z-univariate basis element, found {len(univariate)}")
    gz = univariate[0]

    coeffs = _univariate_coeffs(gz, n)
    roots = sorted(rational_roots(coeffs))
    if len(roots) < len(coeffs) - 1:
        # Defensive fallback; with a rational objective on binary points every
        # attained value is rational, so this path should stay cold.
        lo, hi = isolate_smallest_real_root(coeffs)
        witness = _cheapest_feasible(objective, constraints)
        if witness is None:
            raise InfeasibleError("binary system has no solution",
                                  {"reason": "infeasible"})
        value, x = witness
        if not (lo <= value <= hi):
            raise QuipError("isolated root does not match enumerated optimum")
        return BptResult(value=value, x=x, objective_polynomial=gz)

    for z_opt in roots:
        x = _back_substitute(basis, n, z_opt)
        if x is not None:
            return BptResult(value=z_opt, x=x, objective_polynomial=gz)
    raise QuipError("no root of the objective polynomial is attained; "
                    "elimination invariant broken")


def _univariate_coeffs(p: SparsePolynomial, zvar: int) -> list[Fraction]:
    deg = p.degree_in(zvar)
    coeffs = [Fraction(0)] * (deg + 1)
    for m, c in p:
        coeffs[m[zvar]] += c
    return coeffs


def _back_substitute(basis: GroebnerBasis, n: int, z_val: Fraction) -> tuple[int, ...] | None:
    """Find one binary x with every basis element vanishing at (x, z_val)."""
    specialized: list[SparsePolynomial] = []
    arity = n + 1
    zpoly = SparsePolynomial.constant(arity, z_val)
    for p in basis:
        q = p.substitute({n: zpoly})
        if q.is_constant():
            if q.constant_value() != 0:
                return None
            continue
        specialized.append(q)

    assignment = [0] * n

    def value_if_determined(p: SparsePolynomial, upto: int):
        # evaluate if p only involves x_0..x_{upto-1}
        total = Fraction(0)
        for m, c in p:
            v = c
            for i, e in enumerate(m):
                if not e:
                    continue
                if i >= upto:
                    return None
                v *= assignment[i] ** e
            total += v
        return total

    def go(i: int) -> bool:
        if i == n:
            return all((value_if_determined(p, n) or Fraction(0)) == 0 for p in specialized)
        for v in (0, 1):
            assignment[i] = v
            ok = True
            for p in specialized:
                val = value_if_determined(p, i + 1)
                if val is not None and val != 0:
                    ok = False
                    break
            if ok and go(i + 1):
                return True
        assignment[i] = 0
        return False

    if go(0):
        return tuple(assignment)
    return None


def _cheapest_feasible(objective: SparsePolynomial,
                       constraints: Sequence[SparsePolynomial]):
    n = objective.arity
    if n > 24:
        raise QuipError("fallback enumeration capped at 24 binaries")
    best = None
    for mask in range(1 << n):
        x = tuple((mask >> i) & 1 for i in range(n))
        if all(g.evaluate(x) == 0 for g in constraints):
            v = objective.evaluate(x)
            if best is None or v < best[0]:
                best = (v, x)
    return best


# ---------------------------------------------------------------------------
# univariate root utilities (exact)


def rational_roots(coeffs: Sequence[Fraction]) -> list[Fraction]:
    """All rational roots of sum coeffs[i] z^i (no multiplicity)."""
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial has every root")
    roots: list[Fraction] = []
    # strip z^k
    k = 0
    while cs[k] == 0:
        k += 1
    if k:
        roots.append(Fraction(0))
        cs = cs[k:]
    if len(cs) == 1:
        return roots
    # integer form
    den = 1
    for c in cs:
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = [int(c * den) for c in cs]
    a0, ad = abs(ints[0]), abs(ints[-1])
    for p in _divisors(a0):
        for q in _divisors(ad):
            for cand in (Fraction(p, q), Fraction(-p, q)):
                if cand in roots:
                    continue
                if _poly_eval(ints, cand) == 0:
                    roots.append(cand)
    return roots


def _poly_eval(ints: Sequence[int], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(ints):
        acc = acc * x + c
    return acc


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _divisors(n: int) -> list[int]:
    if n == 0:
        return [1]
    out = set()
    for d in range(1, isqrt(n) + 1):
        if n % d == 0:
            out.add(d)
            out.add(n // d)
    return sorted(out)


def _sturm_chain(coeffs: list[Fraction]) -> list[list[Fraction]]:
    def deriv(p):
        return [p[i] * i for i in range(1, len(p))]

    def rem(a, b):
        a = a[:]
        while len(a) >= len(b) and any(a):
            if a[-1] == 0:
                a.pop()
                continue
            q = a[-1] / b[-1]
            shift = len(a) - len(b)
            for i, bc in enumerate(b):
                a[i + shift] -= q * bc
            a.pop()
        while a and a[-1] == 0:
            a.pop()
        return a

    chain = [coeffs[:], deriv(coeffs)]
    while chain[-1]:
        r = rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return [c for c in chain if c]


def _sign_changes(chain, x: Fraction) -> int:
    signs = []
    for p in chain:
        v = _poly_eval_frac(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _poly_eval_frac(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def isolate_smallest_real_root(coeffs: Sequence[Fraction],
                               precision: Fraction = Fraction(1, 2 ** 40)) -> tuple[Fraction, Fraction]:
    """Sturm-sequence isolation of the least real root, to +-precision."""
    cs = [Fraction(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if len(cs) < 2:
        raise ValueError("polynomial has no roots to isolate")
    chain = _sturm_chain(cs)
    # Cauchy bound on root magnitude
    bound = 1 + max(abs(c) for c in cs[:-1]) / abs(cs[-1])
    lo, hi = -bound, bound
    total = _sign_changes(chain, lo) - _sign_changes(chain, hi)
    if total == 0:
        raise ValueError("polynomial has no real roots")
    # shrink [lo, hi] while keeping at least the smallest root inside
    while hi - lo > precision:
        mid = (lo + hi) / 2
        left = _sign_changes(chain, lo) - _sign_changes(chain, mid)
        if left > 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


# ---------------------------------------------------------------------------
# graph coloring


def coloring_ideal(n_vertices: int, edges: Sequence[tuple[int, int]], k: int) -> Ideal:
    """Vertex polynomials x_i^k - 1 plus one edge polynomial per edge.

    The edge polynomial is sum_{d=0}^{k-1} x_u^d x_v^{k-1-d}; it vanishes
    exactly when the two k-th roots of unity differ.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if n_vertices < 1:
        raise ValueError("need at least one vertex")
    gens: list[SparsePolynomial] = []
    for i in range(n_vertices):
        m = [0] * n_vertices
        m[i] = k
        gens.append(SparsePolynomial.from_terms(
            n_vertices, [(tuple(m), 1), ((0,) * n_vertices, -1)]))
    for u, v in edges:
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise ValueError(f"edge ({u},{v}) out of range")
        terms = []
        for d in range(k):
            m = [0] * n_vertices
            m[u] += d
            m[v] += k - 1 - d
            terms.append((tuple(m), 1))
        gens.append(SparsePolynomial.from_terms(n_vertices, terms))
    return Ideal(n_vertices, tuple(gens))


def is_k_colorable(n_vertices: int, edges: Sequence[tuple[int, int]], k: int, *,
                   max_pairs: int = DEFAULT_MAX_PAIRS,
                   max_degree: int = DEFAULT_MAX_DEGREE) -> bool:
    """Groebner decision: colorable iff the coloring ideal's basis is not {1}."""
    ideal = coloring_ideal(n_vertices, edges, k)
    basis = buchberger(ideal, grevlex(n_vertices),
                       max_pairs=max_pairs, max_degree=max_degree)
    return not basis.is_trivial()
