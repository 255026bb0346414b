"""Exact multivariate polynomial arithmetic over the rationals.

Monomials are dense exponent tuples (one slot per ring variable), coefficients
are `fractions.Fraction`.  Everything here is exact; nothing ever touches
floating point.  Monomial orders are explicit values passed to every operation
that needs one -- there is no ambient "current order".

The text format round-trips exactly: `parse_poly(poly_to_text(p)) == p`.
Example: ``3/2*x0^2*x1 - x2 + 1``.
"""

from __future__ import annotations

import heapq
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import FormatError

Monomial = tuple[int, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# monomial helpers


def monomial_one(arity: int) -> Monomial:
    return (0,) * arity

def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))

def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True when a | b componentwise."""
    return all(x <= y for x, y in zip(a, b))

def monomial_div(a: Monomial, b: Monomial) -> Monomial:
    """a / b; requires b | a."""
    q = tuple(x - y for x, y in zip(a, b))
    if any(e < 0 for e in q):
        raise ValueError(f"monomial {b} does not divide {a}")
    return q

def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))

def monomial_degree(a: Monomial) -> int:
    return sum(a)

def monomial_coprime(a: Monomial, b: Monomial) -> bool:
    """True when the supports are disjoint (lcm == product)."""
    return all(x == 0 or y == 0 for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# monomial orders


class MonomialOrder:
    """A total order on monomials of one arity.

    kind is one of 'lex', 'grlex', 'grevlex', 'cost'.  `perm` lists variable
    indices from most to least significant (identity when omitted).  A 'cost'
    order compares weight-vector dot products first and delegates ties to
    `tie`, which must itself be a MonomialOrder; chaining cost orders builds
    block/elimination orders.  All orders here are term orders provided the
    weights are non-negative and the innermost tie is lex/grlex/grevlex.
    """

    __slots__ = ("kind", "perm", "weights", "tie", "_revperm")

    def __init__(self, kind: str, arity: int, *, perm: Sequence[int] | None = None,
                 weights: Sequence[int] | None = None, tie: "MonomialOrder | None" = None):
        if kind not in ("lex", "grlex", "grevlex", "cost"):
            raise ValueError(f"unknown order kind {kind!r}")
        self.kind = kind
        if perm is None:
            perm = tuple(range(arity))
        else:
            perm = tuple(perm)
            if sorted(perm) != list(range(arity)):
                raise ValueError("perm must be a permutation of range(arity)")
        self.perm = perm
        if kind == "cost":
            if weights is None:
                raise ValueError("cost order needs a weight vector")
            weights = tuple(int(w) for w in weights)
            if len(weights) != arity:
                raise ValueError("weight vector length must equal arity")
            if any(w < 0 for w in weights):
                raise ValueError("cost order weights must be non-negative")
            if tie is None:
                tie = MonomialOrder("grevlex", arity)
        else:
            if weights is not None or tie is not None:
                raise ValueError("weights/tie only apply to cost orders")
        self.weights = weights
        self.tie = tie
        # grevlex scans from the least significant variable backwards
        self._revperm = tuple(reversed(self.perm))

    @property
    def arity(self) -> int:
        return len(self.perm)

    def key(self, m: Monomial):
        """Sort key: key(a) > key(b) iff a comes after b in the order."""
        if self.kind == "lex":
            return tuple(m[i] for i in self.perm)
        if self.kind == "grlex":
            return (sum(m), tuple(m[i] for i in self.perm))
        if self.kind == "grevlex":
            return (sum(m), tuple(-m[i] for i in self._revperm))
        acc = 0
        for w, e in zip(self.weights, m):
            acc += w * e
        return (acc, self.tie.key(m))

    def compare(self, a: Monomial, b: Monomial) -> int:
        ka, kb = self.key(a), self.key(b)
        if ka < kb:
            return -1
        if ka > kb:
            return 1
        return 0

    def __repr__(self) -> str:
        if self.kind == "cost":
            return f"MonomialOrder('cost', {self.arity}, weights={self.weights}, tie={self.tie!r})"
        return f"MonomialOrder({self.kind!r}, {self.arity})"


def lex(arity: int, perm: Sequence[int] | None = None) -> MonomialOrder:
    return MonomialOrder("lex", arity, perm=perm)

def grlex(arity: int, perm: Sequence[int] | None = None) -> MonomialOrder:
    return MonomialOrder("grlex", arity, perm=perm)

def grevlex(arity: int, perm: Sequence[int] | None = None) -> MonomialOrder:
    return MonomialOrder("grevlex", arity, perm=perm)

def cost_order(weights: Sequence[int], tie: MonomialOrder | None = None) -> MonomialOrder:
    return MonomialOrder("cost", len(tuple(weights)), weights=weights, tie=tie)


# ---------------------------------------------------------------------------
# polynomials


def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficient must be exact (int/Fraction), got {type(c).__name__}")


class SparsePolynomial:
    """Polynomial as a map monomial -> nonzero Fraction, fixed arity."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms: Mapping[Monomial, Fraction] | None = None):
        self.arity = arity
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                if len(m) != arity:
                    raise ValueError(f"monomial {m} has wrong arity (want {arity})")
                if any(e < 0 for e in m):
                    raise ValueError(f"negative exponent in {m}")
                c = _coerce(c)
                if c != 0:
                    acc = clean.get(m)
                    clean[m] = c if acc is None else acc + c
                    if clean[m] == 0:
                        del clean[m]
        self.terms = clean

    # -- constructors

    @classmethod
    def zero(cls, arity: int) -> "SparsePolynomial":
        return cls(arity)

    @classmethod
    def constant(cls, arity: int, c) -> "SparsePolynomial":
        return cls(arity, {monomial_one(arity): _coerce(c)})

    @classmethod
    def variable(cls, arity: int, i: int, power: int = 1) -> "SparsePolynomial":
        if not 0 <= i < arity:
            raise ValueError(f"variable index {i} out of range")
        m = [0] * arity
        m[i] = power
        return cls(arity, {tuple(m): ONE})

    @classmethod
    def from_terms(cls, arity: int, items: Iterable[tuple[Monomial, object]]) -> "SparsePolynomial":
        return cls(arity, {tuple(m): _coerce(c) for m, c in items})

    # -- predicates / views

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(monomial_degree(m) == 0 for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(monomial_one(self.arity), ZERO)

    def total_degree(self) -> int:
        """Total degree; zero polynomial reports -1."""
        if not self.terms:
            return -1
        return max(monomial_degree(m) for m in self.terms)

    def degree_in(self, i: int) -> int:
        if not self.terms:
            return -1
        return max(m[i] for m in self.terms)

    def variables_used(self) -> set[int]:
        used: set[int] = set()
        for m in self.terms:
            for i, e in enumerate(m):
                if e:
                    used.add(i)
        return used

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(self.terms.items())

    # -- leading data

    def leading_monomial(self, order: MonomialOrder) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms, key=order.key)

    def leading_coefficient(self, order: MonomialOrder) -> Fraction:
        return self.terms[self.leading_monomial(order)]

    def leading_term(self, order: MonomialOrder) -> tuple[Monomial, Fraction]:
        m = self.leading_monomial(order)
        return m, self.terms[m]

    # -- arithmetic

    def _check_arity(self, other: "SparsePolynomial"):
        if self.arity != other.arity:
            raise ValueError("arity mismatch")

    def __add__(self, other) -> "SparsePolynomial":
        if not isinstance(other, SparsePolynomial):
            other = SparsePolynomial.constant(self.arity, other)
        self._check_arity(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            acc = out.get(m)
            s = c if acc is None else acc + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = self.arity
        p.terms = out
        return p

    __radd__ = __add__

    def __neg__(self) -> "SparsePolynomial":
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = self.arity
        p.terms = {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, other) -> "SparsePolynomial":
        if not isinstance(other, SparsePolynomial):
            other = SparsePolynomial.constant(self.arity, other)
        return self + (-other)

    def __rsub__(self, other) -> "SparsePolynomial":
        return (-self) + other

    def __mul__(self, other) -> "SparsePolynomial":
        if not isinstance(other, SparsePolynomial):
            c = _coerce(other)
            if c == 0:
                return SparsePolynomial.zero(self.arity)
            p = SparsePolynomial.__new__(SparsePolynomial)
            p.arity = self.arity
            p.terms = {m: cc * c for m, cc in self.terms.items()}
            return p
        self._check_arity(other)
        out: dict[Monomial, Fraction] = {}
        # convolve the smaller factor over the larger one
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                acc = out.get(m)
                s = ca * cb if acc is None else acc + ca * cb
                if s == 0:
                    out.pop(m, None)
                else:
                    out[m] = s
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = self.arity
        p.terms = out
        return p

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "SparsePolynomial":
        if n < 0:
            raise ValueError("negative power")
        out = SparsePolynomial.constant(self.arity, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def scale(self, c) -> "SparsePolynomial":
        return self * _coerce(c)

    def pad(self, arity: int) -> "SparsePolynomial":
        """Reinterpret in a ring with more variables (appended at the end)."""
        if arity < self.arity:
            raise ValueError("pad cannot shrink arity")
        if arity == self.arity:
            return self
        extra = (0,) * (arity - self.arity)
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = arity
        p.terms = {m + extra: c for m, c in self.terms.items()}
        return p

    def monic(self, order: MonomialOrder) -> "SparsePolynomial":
        if not self.terms:
            return self
        lc = self.leading_coefficient(order)
        if lc == 1:
            return self
        inv = 1 / lc
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = self.arity
        p.terms = {m: c * inv for m, c in self.terms.items()}
        return p

    def mul_term(self, m: Monomial, c: Fraction) -> "SparsePolynomial":
        c = _coerce(c)
        if c == 0:
            return SparsePolynomial.zero(self.arity)
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = self.arity
        p.terms = {monomial_mul(mm, m): cc * c for mm, cc in self.terms.items()}
        return p

    # -- evaluation and substitution

    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.arity:
            raise ValueError("point has wrong length")
        vals = [_coerce(v) for v in point]
        total = ZERO
        for m, c in self.terms.items():
            term = c
            for i, e in enumerate(m):
                if e:
                    term *= vals[i] ** e
            total += term
        return total

    def substitute(self, mapping: Mapping[int, "SparsePolynomial"]) -> "SparsePolynomial":
        """Replace variables by polynomials (all of the same target arity).

        Variables not in the mapping must exist in the target ring at the same
        index (the target arity comes from the mapping's values).
        """
        if not mapping:
            return self
        target_arity = next(iter(mapping.values())).arity
        out = SparsePolynomial.zero(target_arity)
        for m, c in self.terms.items():
            term = SparsePolynomial.constant(target_arity, c)
            for i, e in enumerate(m):
                if not e:
                    continue
                if i in mapping:
                    term = term * (mapping[i] ** e)
                else:
                    if i >= target_arity:
                        raise ValueError(f"variable {i} missing from substitution")
                    term = term * (SparsePolynomial.variable(target_arity, i) ** e)
            out = out + term
        return out

    # -- comparison / misc

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = SparsePolynomial.constant(self.arity, other)
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        return self.arity == other.arity and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def sorted_terms(self, order: MonomialOrder) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda mc: order.key(mc[0]), reverse=True)

    def __repr__(self) -> str:
        return f"SparsePolynomial({poly_to_text(self)!r})"

    def __str__(self) -> str:
        return poly_to_text(self)


# ---------------------------------------------------------------------------
# S-polynomials and division


def s_polynomial(f: SparsePolynomial, g: SparsePolynomial, order: MonomialOrder) -> SparsePolynomial:
    """S(f, g) = (L/lt(f)) f - (L/lt(g)) g  with L = lcm(lm(f), lm(g))."""
    if f.is_zero() or g.is_zero():
        raise ValueError("S-polynomial of a zero polynomial")
    if f.arity != g.arity:
        raise ValueError("arity mismatch")
    mf, cf = f.leading_term(order)
    mg, cg = g.leading_term(order)
    big = monomial_lcm(mf, mg)
    left = f.mul_term(monomial_div(big, mf), 1 / cf)
    right = g.mul_term(monomial_div(big, mg), 1 / cg)
    return left - right


class _Head:
    """Max-heap adapter: heapq pops the order-largest monomial first."""

    __slots__ = ("key", "monomial")

    def __init__(self, key, monomial):
        self.key = key
        self.monomial = monomial

    def __lt__(self, other):
        return self.key > other.key


def prepare_divisors(gs: Sequence[SparsePolynomial], order: MonomialOrder,
                     arity: int) -> list[tuple]:
    """Precompute (index, lm, deg lm, lc, tail) rows for `divide_terms`."""
    rows = []
    for i, g in enumerate(gs):
        if g.arity != arity:
            raise ValueError("arity mismatch in divisor list")
        if g.is_zero():
            continue
        lm, lc = g.leading_term(order)
        tail = [(m, c) for m, c in g.terms.items() if m != lm]
        rows.append((i, lm, sum(lm), lc, tail))
    return rows


def divide_terms(terms: dict, divisors: list[tuple], key,
                 quotients: list[dict] | None = None) -> dict:
    """Core division loop over raw term dicts; returns the remainder dict.

    Processes monomials in descending order via a heap; each reduction step
    only creates strictly smaller monomials, so settled heads never reappear.
    Divisor choice is first-in-list-order, making the result deterministic.
    """
    work = dict(terms)
    remainder: dict[Monomial, Fraction] = {}
    heap = [_Head(key(m), m) for m in work]
    heapq.heapify(heap)

    while heap:
        m = heapq.heappop(heap).monomial
        c = work.pop(m, None)
        if c is None:
            continue  # stale entry for a monomial that cancelled out
        mdeg = sum(m)
        hit = None
        for row in divisors:
            lm = row[1]
            if row[2] > mdeg:
                continue
            for a, b in zip(lm, m):
                if a > b:
                    break
            else:
                hit = row
                break
        if hit is None:
            remainder[m] = c
            continue
        i, lm, _, lc, tail = hit
        qm = monomial_div(m, lm)
        qc = c / lc
        if quotients is not None:
            qacc = quotients[i].get(qm)
            quotients[i][qm] = qc if qacc is None else qacc + qc
        for tm, tc in tail:
            nm = monomial_mul(qm, tm)
            acc = work.get(nm)
            if acc is None:
                s = -qc * tc
                if s:
                    work[nm] = s
                    heapq.heappush(heap, _Head(key(nm), nm))
            else:
                s = acc - qc * tc
                if s:
                    work[nm] = s
                else:
                    del work[nm]
    return remainder


def reduce(f: SparsePolynomial, gs: Sequence[SparsePolynomial],
           order: MonomialOrder) -> tuple[list[SparsePolynomial], SparsePolynomial]:
    """Multivariate division: f = sum q_i g_i + r.

    Deterministic: always attack the order-largest reducible term of the
    running polynomial, dividing by the first g in list order whose leading
    monomial divides it.  No monomial of r is divisible by any lm(g_i).
    """
    arity = f.arity
    divisors = prepare_divisors(gs, order, arity)
    quotients: list[dict[Monomial, Fraction]] = [{} for _ in gs]
    remainder = divide_terms(f.terms, divisors, order.key, quotients)

    qpolys = []
    for q in quotients:
        p = SparsePolynomial.__new__(SparsePolynomial)
        p.arity = arity
        p.terms = q
        qpolys.append(p)
    r = SparsePolynomial.__new__(SparsePolynomial)
    r.arity = arity
    r.terms = remainder
    return qpolys, r


def normal_form(f: SparsePolynomial, gs: Sequence[SparsePolynomial],
                order: MonomialOrder) -> SparsePolynomial:
    """Just the remainder of `reduce`."""
    _, r = reduce(f, gs, order)
    return r


# ---------------------------------------------------------------------------
# text format


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[-+*^()]))")


def default_names(arity: int) -> list[str]:
    return [f"x{i}" for i in range(arity)]


def poly_to_text(p: SparsePolynomial, names: Sequence[str] | None = None,
                 order: MonomialOrder | None = None, *, clear_denominators: bool = False) -> str:
    """Canonical text form; terms descend under `order` (grevlex default).

    With clear_denominators=True the polynomial is scaled to primitive integer
    content before printing (display form only, not the round-trip form).
    """
    if p.is_zero():
        return "0"
    if names is None:
        names = default_names(p.arity)
    if len(names) != p.arity:
        raise ValueError("need one name per variable")
    if order is None:
        order = grevlex(p.arity)

    if clear_denominators and p.terms:
        coeffs = list(p.terms.values())
        from math import gcd, lcm
        den = 1
        for c in coeffs:
            den = lcm(den, c.denominator)
        num = 0
        for c in coeffs:
            num = gcd(num, abs(c.numerator * (den // c.denominator)))
        scale = Fraction(den, num if num else 1)
        if p.leading_coefficient(order) < 0:
            scale = -scale
        p = p * scale

    pieces: list[str] = []
    for m, c in p.sorted_terms(order):
        var_part = "*".join(
            f"{names[i]}^{e}" if e > 1 else names[i]
            for i, e in enumerate(m) if e
        )
        mag = abs(c)
        if var_part:
            body = var_part if mag == 1 else f"{mag}*{var_part}"
        else:
            body = str(mag)
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(f"{'+' if c > 0 else '-'} {body}")
    return " ".join(pieces)


def parse_poly(text: str, arity: int | None = None,
               names: Sequence[str] | None = None) -> SparsePolynomial:
    """Parse the text format.

    With explicit `names`, only those variables are allowed.  Otherwise
    variables must be x0, x1, ... and the arity is max index + 1 (or the
    explicit `arity` when given).
    """
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            if text[pos:].strip() == "":
                break
            raise FormatError(f"bad character at offset {pos}: {text[pos:pos+10]!r}")
        pos = mt.end()
        for kind in ("num", "name", "op"):
            if mt.group(kind) is not None:
                tokens.append((kind, mt.group(kind)))
                break

    name_index: dict[str, int] | None = None
    if names is not None:
        name_index = {nm: i for i, nm in enumerate(names)}
        if arity is None:
            arity = len(names)

    implicit = name_index is None
    seen_max = -1

    def var_index(nm: str) -> int:
        nonlocal seen_max
        if name_index is not None:
            if nm not in name_index:
                raise FormatError(f"unknown variable {nm!r}")
            return name_index[nm]
        m = re.fullmatch(r"x(\d+)", nm)
        if not m:
            raise FormatError(f"unknown variable {nm!r} (implicit naming wants x<i>)")
        i = int(m.group(1))
        seen_max = max(seen_max, i)
        return i

    # recursive descent: expr := term (('+'|'-') term)* ; term := factor ('*' factor)*
    # factor := num | var ('^' num)? | '-' factor | '(' expr ')'
    raw_terms: list[tuple[dict[int, int], Fraction]] = []
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else (None, None)

    def take():
        nonlocal idx
        t = tokens[idx]
        idx += 1
        return t

    def parse_expr():
        kind, val = peek()
        sign = ONE
        while kind == "op" and val in "+-":
            take()
            if val == "-":
                sign = -sign
            kind, val = peek()
        acc = parse_term()
        acc = [(m, c * sign) for m, c in acc]
        while True:
            kind, val = peek()
            if kind == "op" and val in "+-":
                take()
                s = ONE if val == "+" else -ONE
                # allow runs of signs after the operator
                kind, val = peek()
                while kind == "op" and val in "+-":
                    take()
                    if val == "-":
                        s = -s
                    kind, val = peek()
                nxt = parse_term()
                acc.extend((m, c * s) for m, c in nxt)
            else:
                return acc

    def parse_term():
        factors = [parse_factor()]
        while True:
            kind, val = peek()
            if kind == "op" and val == "*":
                take()
                factors.append(parse_factor())
            else:
                break
        # multiply out the factor list (each factor is a term list)
        acc = factors[0]
        for f in factors[1:]:
            new = []
            for (m1, c1) in acc:
                for (m2, c2) in f:
                    mm = dict(m1)
                    for i, e in m2.items():
                        mm[i] = mm.get(i, 0) + e
                    new.append((mm, c1 * c2))
            acc = new
        return acc

    def parse_factor():
        kind, val = take() if idx < len(tokens) else (None, None)
        if kind is None:
            raise FormatError("unexpected end of input")
        if kind == "op" and val == "-":
            inner = parse_factor()
            return [(m, -c) for m, c in inner]
        if kind == "op" and val == "(":
            inner = parse_expr()
            k2, v2 = take() if idx < len(tokens) else (None, None)
            if (k2, v2) != ("op", ")"):
                raise FormatError("missing closing parenthesis")
            return maybe_power(inner)
        if kind == "num":
            return maybe_power([({}, Fraction(val))])
        if kind == "name":
            i = var_index(val)
            return maybe_power([({i: 1}, ONE)])
        raise FormatError(f"unexpected token {val!r}")

    def maybe_power(base):
        kind, val = peek()
        if kind == "op" and val == "^":
            take()
            k2, v2 = take() if idx < len(tokens) else (None, None)
            if k2 != "num" or "/" in (v2 or ""):
                raise FormatError("exponent must be a non-negative integer")
            e = int(v2)
            acc = [({}, ONE)]
            for _ in range(e):
                new = []
                for (m1, c1) in acc:
                    for (m2, c2) in base:
                        mm = dict(m1)
                        for i, ee in m2.items():
                            mm[i] = mm.get(i, 0) + ee
                        new.append((mm, c1 * c2))
                acc = new
            return acc
        return base

    if not tokens:
        raise FormatError("empty polynomial text")
    raw = parse_expr()
    if idx != len(tokens):
        raise FormatError(f"trailing tokens at {tokens[idx]}")

    if arity is None:
        arity = seen_max + 1 if implicit else 0
    final_arity = max(arity, (seen_max + 1) if implicit else arity)
    out: dict[Monomial, Fraction] = {}
    for mdict, c in raw:
        if mdict and max(mdict) >= final_arity:
            raise FormatError(f"variable index {max(mdict)} out of range for arity {final_arity}")
        m = tuple(mdict.get(i, 0) for i in range(final_arity))
        acc = out.get(m)
        s = c if acc is None else acc + c
        if s == 0:
            out.pop(m, None)
        else:
            out[m] = s
    return SparsePolynomial(final_arity, out)
