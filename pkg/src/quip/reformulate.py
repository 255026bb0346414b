"""Compile bounded integer programs into QUBO form.

The pipeline has four independent stages that compose into `compile_qubo`:
replace inequality rows by equality rows with bounded integer slacks, encode
each integer variable over its box as a weighted sum of bits, reduce the
objective to a quadratic form by substituting ancilla bits for products, and
fold the equality system into the objective as a squared penalty.  Everything
is exact rational arithmetic, so the compiled energy identity can be checked
term by term.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .errors import UnboundedError
from .models import QuboModel
from .polys import SparsePolynomial


def _int(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"{what} must be an integer, got {v!r}")
    return v


def _frac(v) -> Fraction:
    if isinstance(v, float):
        raise ValueError("rational coefficients required, got a float")
    return Fraction(v)


# ---------------------------------------------------------------------------
# constraint systems


@dataclass(frozen=True)
class ConstraintSystem:
    """A x (=|<=) b over an integer box, with a cost to minimize.

    Rows listed in `inequalities` are <=; all other rows are equalities.
    Bounds may be None (unbounded on that side); the compilation stages that
    need finite bounds raise UnboundedError when they meet one.  The
    objective is either a vector of per-variable costs, a SparsePolynomial in
    the same variables, or None for pure feasibility; `offset` is a constant
    added to every objective value.
    """

    A: tuple[tuple[int, ...], ...]
    b: tuple[int, ...]
    lower: tuple
    upper: tuple
    inequalities: frozenset = frozenset()
    objective: object = None
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        n = len(self.lower)
        if len(self.upper) != n:
            raise ValueError("lower and upper must have the same length")
        if any(len(row) != n for row in self.A):
            raise ValueError("matrix width must match the bound vectors")
        if len(self.b) != len(self.A):
            raise ValueError("b length must match the row count")
        for lo, hi in zip(self.lower, self.upper):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"empty bound interval [{lo}, {hi}]")
        if not all(0 <= r < len(self.A) for r in self.inequalities):
            raise ValueError("inequality row index out of range")
        obj = self.objective
        if obj is not None and not isinstance(obj, (tuple, SparsePolynomial)):
            raise ValueError("objective must be a cost tuple or a polynomial")
        if isinstance(obj, tuple) and len(obj) != n:
            raise ValueError("cost vector length must match variable count")
        if isinstance(obj, SparsePolynomial) and obj.arity != n:
            raise ValueError("objective polynomial arity must match variables")

    @classmethod
    def make(cls, A, b, lower, upper, inequalities=(), objective=None,
             offset=0) -> "ConstraintSystem":
        A = tuple(tuple(_int(v, "matrix entry") for v in row) for row in A)
        b = tuple(_int(v, "right-hand side") for v in b)
        lower = tuple(None if v is None else _int(v, "lower bound") for v in lower)
        upper = tuple(None if v is None else _int(v, "upper bound") for v in upper)
        if objective is not None and not isinstance(objective, SparsePolynomial):
            objective = tuple(_frac(v) for v in objective)
        return cls(A, b, lower, upper, frozenset(inequalities), objective,
                   _frac(offset))

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.lower)

    def row_activity(self, r: int, x: Sequence[int]) -> Fraction:
        return sum((a * v for a, v in zip(self.A[r], x)), Fraction(0))

    def is_feasible(self, x: Sequence[int]) -> bool:
        if len(x) != self.n:
            raise ValueError("point has wrong length")
        for v, lo, hi in zip(x, self.lower, self.upper):
            if lo is not None and v < lo:
                return False
            if hi is not None and v > hi:
                return False
        for r in range(self.m):
            lhs = self.row_activity(r, x)
            if r in self.inequalities:
                if lhs > self.b[r]:
                    return False
            elif lhs != self.b[r]:
                return False
        return True

    def objective_value(self, x: Sequence[int]) -> Fraction:
        if self.objective is None:
            return self.offset
        if isinstance(self.objective, SparsePolynomial):
            return self.objective.evaluate(x) + self.offset
        return sum((c * v for c, v in zip(self.objective, x)),
                   Fraction(0)) + self.offset


# ---------------------------------------------------------------------------
# integer-to-binary encodings


def _clipped_binary(span: int) -> tuple[int, ...]:
    """Powers of two with the last coefficient clipped so the sum is exact."""
    d = span.bit_length() - 1
    return tuple(1 << i for i in range(d)) + (span - ((1 << d) - 1),)


def make_encoding(lower: int, upper: int, scheme: str = "binary",
                  mu: int | None = None) -> tuple[int, ...]:
    """Weight vector k with sum(k) = upper - lower; value = lower + k.bits.

    binary: powers of two, final coefficient clipped to land exactly on the
    range, so no bit pattern decodes outside [lower, upper].  unary: all
    ones.  bounded: binary prefix up to mu's magnitude, a run of mu-sized
    coefficients, then a remainder; every coefficient stays <= mu.
    """
    lower = _int(lower, "lower")
    upper = _int(upper, "upper")
    if upper < lower:
        raise ValueError(f"empty range [{lower}, {upper}]")
    span = upper - lower
    if span == 0:
        return ()
    if scheme == "unary":
        return (1,) * span
    if scheme == "binary":
        return _clipped_binary(span)
    if scheme == "bounded":
        if mu is None or _int(mu, "mu") < 1:
            raise ValueError("bounded scheme needs mu >= 1")
        width = mu.bit_length()
        full = (1 << width) - 1
        if span < full:
            # small ranges fall back to the clipped binary form, whose
            # largest coefficient is already below mu
            return _clipped_binary(span)
        rest = span - full
        runs, tail = divmod(rest, mu)
        k = [1 << i for i in range(width)] + [mu] * runs
        if tail:
            k.append(tail)
        return tuple(k)
    raise ValueError(f"unknown encoding scheme {scheme!r}")


@dataclass(frozen=True)
class EncodingMap:
    """Per-variable bit weights and shifts: x_i = shift_i + weights_i . bits_i.

    Variable i owns the contiguous bit block starting at starts[i].  The E
    matrix stacks the weight vectors block-diagonally, so the whole decode is
    x = L + E X for the flat bit vector X.
    """

    weights: tuple[tuple[int, ...], ...]
    shifts: tuple[int, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.shifts):
            raise ValueError("weights and shifts must align")
        for k in self.weights:
            if any(not isinstance(w, int) or w < 1 for w in k):
                raise ValueError("encoding weights must be positive integers")

    @classmethod
    def boxes(cls, lower: Sequence[int], upper: Sequence[int],
              scheme: str = "binary", mu: int | None = None) -> "EncodingMap":
        ks = tuple(make_encoding(lo, hi, scheme, mu)
                   for lo, hi in zip(lower, upper))
        return cls(ks, tuple(int(v) for v in lower))

    @property
    def n_variables(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(len(k) for k in self.weights)

    @property
    def total_bits(self) -> int:
        return sum(len(k) for k in self.weights)

    @property
    def starts(self) -> tuple[int, ...]:
        out = []
        pos = 0
        for k in self.weights:
            out.append(pos)
            pos += len(k)
        return tuple(out)

    @property
    def ranges(self) -> tuple[int, ...]:
        return tuple(sum(k) for k in self.weights)

    def variable_bits(self, i: int) -> tuple[int, ...]:
        start = self.starts[i]
        return tuple(range(start, start + len(self.weights[i])))

    @property
    def E(self) -> tuple[tuple[int, ...], ...]:
        total = self.total_bits
        rows = []
        pos = 0
        for k in self.weights:
            row = [0] * total
            for j, w in enumerate(k):
                row[pos + j] = w
            rows.append(tuple(row))
            pos += len(k)
        return tuple(rows)

    @property
    def L(self) -> tuple[int, ...]:
        return self.shifts

    def decode(self, bits: Sequence[int]) -> tuple[int, ...]:
        if len(bits) < self.total_bits:
            raise ValueError("bit vector too short for this encoding")
        if any(b not in (0, 1) for b in bits[:self.total_bits]):
            raise ValueError("bits must be 0/1")
        out = []
        pos = 0
        for k, shift in zip(self.weights, self.shifts):
            out.append(shift + sum(w * bits[pos + j] for j, w in enumerate(k)))
            pos += len(k)
        return tuple(out)

    def encode(self, values: Sequence[int]) -> tuple[int, ...]:
        if len(values) != self.n_variables:
            raise ValueError("value vector has wrong length")
        bits: list[int] = []
        for k, shift, v in zip(self.weights, self.shifts, values):
            bits.extend(_represent(k, _int(v, "value") - shift))
        return tuple(bits)


def _represent(weights: Sequence[int], v: int) -> tuple[int, ...]:
    """Bits with weights . bits = v; greedy first, exact search as fallback."""
    if not 0 <= v <= sum(weights):
        raise ValueError(f"value {v} outside the encoded range")
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    bits = [0] * len(weights)
    rem = v
    for i in order:
        if weights[i] <= rem:
            bits[i] = 1
            rem -= weights[i]
    if rem == 0:
        return tuple(bits)
    suffix = [0] * (len(order) + 1)
    for pos in range(len(order) - 1, -1, -1):
        suffix[pos] = suffix[pos + 1] + weights[order[pos]]
    bits = [0] * len(weights)

    def settle(pos: int, rem: int) -> bool:
        if rem == 0:
            return True
        if pos == len(order) or rem > suffix[pos]:
            return False
        i = order[pos]
        if weights[i] <= rem:
            bits[i] = 1
            if settle(pos + 1, rem - weights[i]):
                return True
            bits[i] = 0
        return settle(pos + 1, rem)

    if not settle(0, v):
        raise ValueError(f"value {v} not representable by weights {weights}")
    return tuple(bits)


# ---------------------------------------------------------------------------
# binarization


def binarize(ip: ConstraintSystem, scheme: str = "binary",
             mu: int | None = None) -> tuple[ConstraintSystem, EncodingMap]:
    """Substitute x_i = shift_i + weights_i . bits_i throughout the system.

    The result has only 0/1 variables; fixed variables (lower == upper) get
    width zero and fold into the right-hand side.  Feasible bit patterns
    decode exactly onto the feasible box points of the input.
    """
    for i, (lo, hi) in enumerate(zip(ip.lower, ip.upper)):
        if lo is None or hi is None:
            raise UnboundedError(f"variable {i} has no finite bounds")
    enc = EncodingMap.boxes(ip.lower, ip.upper, scheme, mu)
    total = enc.total_bits
    starts = enc.starts
    new_rows = []
    new_b = []
    for r in range(ip.m):
        row = []
        shiftsum = 0
        for i, a in enumerate(ip.A[r]):
            shiftsum += a * ip.lower[i]
            row.extend(a * w for w in enc.weights[i])
        new_rows.append(tuple(row))
        new_b.append(ip.b[r] - shiftsum)
    obj = ip.objective
    offset = ip.offset
    if isinstance(obj, tuple):
        flat = []
        for c, k in zip(obj, enc.weights):
            flat.extend(c * w for w in k)
        offset = offset + sum((c * lo for c, lo in zip(obj, ip.lower)),
                              Fraction(0))
        obj = tuple(flat)
    elif isinstance(obj, SparsePolynomial):
        mapping = {}
        for i in range(ip.n):
            p = SparsePolynomial.constant(total, ip.lower[i])
            for j, w in enumerate(enc.weights[i]):
                p = p + SparsePolynomial.variable(total, starts[i] + j).scale(w)
            mapping[i] = p
        obj = multilinear(obj.substitute(mapping)) if mapping else obj
    out = ConstraintSystem(tuple(new_rows), tuple(new_b), (0,) * total,
                           (1,) * total, ip.inequalities, obj, offset)
    return out, enc


# ---------------------------------------------------------------------------
# quadratization


def multilinear(f: SparsePolynomial) -> SparsePolynomial:
    """Clamp exponents to one; the identity x^2 = x holds on 0/1 points."""
    terms: dict = {}
    for mono, c in f.terms.items():
        key = tuple(1 if e else 0 for e in mono)
        terms[key] = terms.get(key, Fraction(0)) + c
    return SparsePolynomial(f.arity, terms)


@dataclass(frozen=True)
class QuadratizeResult:
    """Degree <= 2 rewrite of a multilinear polynomial.

    ancillas holds (bit index, i, j) triples meaning the new bit stands for
    the product x_i * x_j; penalties holds one polynomial per ancilla that is
    nonnegative on 0/1 points and zero exactly when the ancilla agrees with
    its product.
    """

    polynomial: SparsePolynomial
    ancillas: tuple[tuple[int, int, int], ...]
    penalties: tuple[SparsePolynomial, ...]


def _product_penalty(arity: int, y: int, i: int, j: int) -> SparsePolynomial:
    """3y + x_i x_j - 2 y x_i - 2 y x_j: zero iff y = x_i x_j on 0/1 points."""
    def mono(*idx):
        m = [0] * arity
        for v in idx:
            m[v] = 1
        return tuple(m)

    return SparsePolynomial(arity, {
        mono(y): Fraction(3),
        mono(i, j): Fraction(1),
        mono(y, i): Fraction(-2),
        mono(y, j): Fraction(-2),
    })


def quadratize(f: SparsePolynomial) -> QuadratizeResult:
    """Substitute ancilla bits for products until the degree drops to two.

    Each round replaces the product pair occurring in the most terms of
    degree three or higher (ties broken by lowest variable indices) and
    records the matching consistency penalty.  On assignments where every
    ancilla equals its product, the rewritten polynomial takes the original
    value.
    """
    work = multilinear(f)
    ancillas: list[tuple[int, int, int]] = []
    while True:
        counts: dict[tuple[int, int], int] = {}
        for mono in work.terms:
            support = [i for i, e in enumerate(mono) if e]
            if len(support) <= 2:
                continue
            for a in range(len(support)):
                for b in range(a + 1, len(support)):
                    pair = (support[a], support[b])
                    counts[pair] = counts.get(pair, 0) + 1
        if not counts:
            break
        i, j = min(counts, key=lambda p: (-counts[p], p))
        y = work.arity
        terms: dict = {}
        for mono, c in work.terms.items():
            if sum(mono) >= 3 and mono[i] and mono[j]:
                m = list(mono) + [1]
                m[i] = 0
                m[j] = 0
                key = tuple(m)
            else:
                key = mono + (0,)
            terms[key] = terms.get(key, Fraction(0)) + c
        work = SparsePolynomial(y + 1, terms)
        ancillas.append((y, i, j))
    pens = tuple(_product_penalty(work.arity, y, i, j) for y, i, j in ancillas)
    return QuadratizeResult(work, tuple(ancillas), pens)


# ---------------------------------------------------------------------------
# slack variables


def inequality_to_equality(ip: ConstraintSystem) -> ConstraintSystem:
    """Give each <= row an integer slack bounded by the row's largest gap."""
    if not ip.inequalities:
        return ip
    slack_rows = sorted(ip.inequalities)
    gaps = []
    for r in slack_rows:
        low = 0
        for a, lo, hi in zip(ip.A[r], ip.lower, ip.upper):
            if a > 0:
                if lo is None:
                    raise UnboundedError(f"row {r} has an unbounded gap")
                low += a * lo
            elif a < 0:
                if hi is None:
                    raise UnboundedError(f"row {r} has an unbounded gap")
                low += a * hi
        gaps.append(max(ip.b[r] - low, 0))
    s = len(slack_rows)
    rows = []
    for r in range(ip.m):
        extra = [0] * s
        if r in ip.inequalities:
            extra[slack_rows.index(r)] = 1
        rows.append(ip.A[r] + tuple(extra))
    obj = ip.objective
    if isinstance(obj, tuple):
        obj = obj + (Fraction(0),) * s
    elif isinstance(obj, SparsePolynomial):
        obj = obj.pad(ip.n + s)
    return ConstraintSystem(tuple(rows), ip.b, ip.lower + (0,) * s,
                            ip.upper + tuple(gaps), frozenset(), obj,
                            ip.offset)


# ---------------------------------------------------------------------------
# penalty weights


@dataclass(frozen=True)
class PenaltyWeights:
    """Positive multipliers: rho for equality rows, lam for inequality rows."""

    rho: Fraction
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rho", _frac(self.rho))
        object.__setattr__(self, "lam", _frac(self.lam))
        if self.rho <= 0 or self.lam <= 0:
            raise ValueError("penalty weights must be positive")


def _linear_costs(ip: ConstraintSystem) -> tuple:
    obj = ip.objective
    if isinstance(obj, SparsePolynomial):
        raise ValueError("automatic penalty weights need linear costs; "
                         "supply PenaltyWeights explicitly")
    return obj if obj is not None else (Fraction(0),) * ip.n


def objective_gain(ip: ConstraintSystem) -> Fraction:
    """Largest possible objective decrease per variable moved to its floor.

    Sum of max(c_i, 0) scaled by each variable's range; on 0/1 boxes this is
    the plain positive-part sum.  The smallest penalty increment of a unit
    violation is 1 (for any row some sign pattern drives the half-sum
    nonpositive, so the inner max bottoms out at its floor), which makes this
    the whole weight ratio.
    """
    total = Fraction(0)
    for c, lo, hi in zip(_linear_costs(ip), ip.lower, ip.upper):
        if c > 0:
            if lo is None or hi is None:
                raise UnboundedError("objective gain needs finite bounds")
            total += c * (hi - lo)
    return total


def penalty_bound(ip: ConstraintSystem) -> PenaltyWeights:
    """Weight that makes every infeasible point strictly lose.

    An infeasible integer point pays at least one squared-residual unit, so
    any weight exceeding the objective's full range over the box suffices;
    this returns that range plus one.  Matching the gain ratio exactly would
    allow infeasible points to tie the optimum, and positive parts alone
    undercount when costs carry mixed signs.  A feasibility-only system gets
    weight 1.
    """
    swing = Fraction(0)
    for c, lo, hi in zip(_linear_costs(ip), ip.lower, ip.upper):
        if c:
            if lo is None or hi is None:
                raise UnboundedError("penalty weights need finite bounds")
            swing += abs(c) * (hi - lo)
    rho = swing + 1
    return PenaltyWeights(rho, rho)


def cost_magnitude_penalty(costs: Sequence[Rational]) -> Fraction:
    """Sum of absolute costs plus one; a coarser but simple safe weight."""
    return sum((abs(_frac(c)) for c in costs), Fraction(0)) + 1


# ---------------------------------------------------------------------------
# the full pipeline


@dataclass(frozen=True)
class CompileReport:
    """What compile_qubo did: bit layout, ancillas, weights, exact constant.

    variable_bits lists the bit indices owned by each encoded variable, the
    first n_original of which are the input variables and the rest slacks;
    slack_rows names the constraint row each slack serves, in variable order.
    equality_system is the integer system (input plus slacks) whose squared
    residual the QUBO penalizes.
    """

    n_bits: int
    n_original: int
    variable_bits: tuple[tuple[int, ...], ...]
    slack_rows: tuple[int, ...]
    ancillas: tuple[tuple[int, int, int], ...]
    weights: PenaltyWeights
    ancilla_scale: Fraction
    offset: Fraction
    equality_system: ConstraintSystem


def compile_qubo(ip: ConstraintSystem, scheme: str = "binary",
                 mu: int | None = None,
                 weights: PenaltyWeights | None = None
                 ) -> tuple[QuboModel, EncodingMap, CompileReport]:
    """Slacks, then bits, then ancillas, then squared penalties.

    For every bit assignment the model's energy equals the quadratized
    objective plus rho times the squared equality residual plus the scaled
    ancilla penalties, all in exact rationals.  Zero-penalty minimizers
    decode (through the returned EncodingMap) to optimal feasible points.
    """
    eq = inequality_to_equality(ip)
    slack_rows = tuple(sorted(ip.inequalities))
    if weights is None:
        weights = penalty_bound(eq)
    rho = weights.rho
    bits_sys, enc = binarize(eq, scheme, mu)
    total = enc.total_bits

    obj = bits_sys.objective
    if obj is None:
        obj_poly = SparsePolynomial.constant(total, bits_sys.offset)
    elif isinstance(obj, tuple):
        terms: dict = {}
        one = (0,) * total
        for i, c in enumerate(obj):
            if c:
                m = list(one)
                m[i] = 1
                terms[tuple(m)] = c
        terms[one] = terms.get(one, Fraction(0)) + bits_sys.offset
        obj_poly = SparsePolynomial(total, terms)
    else:
        obj_poly = obj + SparsePolynomial.constant(total, bits_sys.offset)
    quad = quadratize(obj_poly)
    n_bits = quad.polynomial.arity

    # flipping ancilla bits moves the objective by at most the sum of the
    # magnitudes below, while each inconsistent ancilla costs at least one
    # penalty unit, so this scale makes inconsistency never profitable
    swing = sum((abs(c) for mono, c in quad.polynomial.terms.items()
                 if any(mono)), Fraction(0))
    scale = 1 + swing

    upper: dict[tuple[int, int], Fraction] = {}
    offset = Fraction(0)

    def add_poly(p: SparsePolynomial, factor: Fraction) -> None:
        nonlocal offset
        for mono, c in p.terms.items():
            support = [i for i, e in enumerate(mono) if e]
            c = c * factor
            if not support:
                offset += c
            elif len(support) == 1:
                i = support[0]
                upper[(i, i)] = upper.get((i, i), Fraction(0)) + c
            else:
                i, j = support
                upper[(i, j)] = upper.get((i, j), Fraction(0)) + c

    add_poly(quad.polynomial, Fraction(1))
    for pen in quad.penalties:
        add_poly(pen, scale)
    for r in range(bits_sys.m):
        row = bits_sys.A[r]
        target = bits_sys.b[r]
        nz = [i for i, a in enumerate(row) if a]
        for i in nz:
            a = row[i]
            upper[(i, i)] = upper.get((i, i), Fraction(0)) \
                + rho * (a * a - 2 * target * a)
        for p in range(len(nz)):
            for q in range(p + 1, len(nz)):
                i, j = nz[p], nz[q]
                key = (i, j)
                upper[key] = upper.get(key, Fraction(0)) \
                    + 2 * rho * row[i] * row[j]
        offset += rho * target * target

    model = QuboModel.from_upper(n_bits, upper, offset)
    report = CompileReport(
        n_bits=n_bits,
        n_original=ip.n,
        variable_bits=tuple(enc.variable_bits(i)
                            for i in range(enc.n_variables)),
        slack_rows=slack_rows,
        ancillas=quad.ancillas,
        weights=weights,
        ancilla_scale=scale,
        offset=model.offset,
        equality_system=eq,
    )
    return model, enc, report
