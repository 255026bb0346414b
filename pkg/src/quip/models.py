"""QUBO and Ising models, exact conversions, reformulations, brute force.

Both model classes store the function being minimized, with exact Fraction
coefficients.  The sampler layer works in floats; everything here that
asserts equality works in rationals.

Conventions:
  * QuboModel: energy(x) = x^T Q x + offset over x in {0,1}^n with Q
    symmetric, so an off-diagonal pair {i,j} contributes 2*Q[i][j]*x_i*x_j.
    Upper-triangle input is symmetrized by halving.
  * IsingModel: energy(s) = sum_{i<j} J[i,j] s_i s_j + sum_i h[i] s_i
    + offset over s in {-1,+1}^n, J keyed by ordered index pairs i < j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ResourceLimitError

DENSE_LIMIT = 64
BRUTE_FORCE_MAX_N = 24
_CHUNK_BITS = 16

Rational = Fraction | int


def _frac(x) -> Fraction:
    # Fraction(float) is the exact binary value; decimal-looking inputs
    # should be parsed as strings upstream if 0.1 is meant as 1/10
    return Fraction(x)


class QuboModel:
    """Symmetric rational QUBO; dense rows up to DENSE_LIMIT, sparse beyond."""

    __slots__ = ("n", "offset", "_dense", "_pairs")

    def __init__(self, n: int, entries, offset: Rational = 0):
        if n < 0:
            raise ValueError("negative variable count")
        self.n = n
        self.offset = _frac(offset)
        self._dense: list[list[Fraction]] | None = None
        self._pairs: dict[tuple[int, int], Fraction] | None = None
        if isinstance(entries, Mapping):
            pairs: dict[tuple[int, int], Fraction] = {}
            for (i, j), v in entries.items():
                self._check_index(i)
                self._check_index(j)
                key = (i, j) if i <= j else (j, i)
                v = _frac(v)
                if key in pairs:
                    if pairs[key] != v:
                        raise ValueError(f"conflicting entries for Q[{i}][{j}]")
                else:
                    pairs[key] = v
            pairs = {k: v for k, v in pairs.items() if v}
            if n <= DENSE_LIMIT:
                rows = [[Fraction(0)] * n for _ in range(n)]
                for (i, j), v in pairs.items():
                    rows[i][j] = v
                    if i != j:
                        rows[j][i] = v
                self._dense = rows
            else:
                self._pairs = pairs
        else:
            rows = [[_frac(v) for v in row] for row in entries]
            if len(rows) != n or any(len(r) != n for r in rows):
                raise ValueError(f"Q must be {n}x{n}")
            for i in range(n):
                for j in range(i + 1, n):
                    if rows[i][j] != rows[j][i]:
                        raise ValueError(f"Q not symmetric at ({i},{j})")
            if n <= DENSE_LIMIT:
                self._dense = rows
            else:
                pairs = {}
                for i in range(n):
                    for j in range(i, n):
                        if rows[i][j]:
                            pairs[(i, j)] = rows[i][j]
                self._pairs = pairs

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"index {i} out of range for n={self.n}")

    @classmethod
    def from_upper(cls, n: int, upper: Mapping[tuple[int, int], Rational],
                   offset: Rational = 0) -> "QuboModel":
        """Build from upper-triangle coefficients: the value on (i, j), i < j,
        is the full coefficient of x_i x_j and gets split across Q_ij = Q_ji."""
        sym: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in upper.items():
            if i == j:
                sym[(i, i)] = sym.get((i, i), Fraction(0)) + _frac(v)
            else:
                key = (i, j) if i < j else (j, i)
                sym[key] = sym.get(key, Fraction(0)) + _frac(v) / 2
        return cls(n, sym, offset)

    @property
    def Q(self):
        """Dense row list at small n, {(i<=j): value} mapping beyond."""
        if self._dense is not None:
            return [row[:] for row in self._dense]
        return dict(self._pairs)

    def entry(self, i: int, j: int) -> Fraction:
        self._check_index(i)
        self._check_index(j)
        if self._dense is not None:
            return self._dense[i][j]
        key = (i, j) if i <= j else (j, i)
        return self._pairs.get(key, Fraction(0))

    def iter_upper(self) -> Iterator[tuple[int, int, Fraction]]:
        """Nonzero symmetric entries with i <= j, sorted."""
        if self._dense is not None:
            for i in range(self.n):
                for j in range(i, self.n):
                    if self._dense[i][j]:
                        yield i, j, self._dense[i][j]
        else:
            for (i, j) in sorted(self._pairs):
                yield i, j, self._pairs[(i, j)]

    def pair_coefficient(self, i: int, j: int) -> Fraction:
        """Full coefficient of x_i x_j (i != j) in the energy: 2*Q_ij."""
        if i == j:
            raise ValueError("use entry(i, i) for the linear coefficient")
        return 2 * self.entry(i, j)

    def energy(self, x: Sequence[int]) -> Fraction:
        if len(x) != self.n:
            raise ValueError("assignment length mismatch")
        if any(b not in (0, 1) for b in x):
            raise ValueError("assignment must be 0/1")
        total = self.offset
        for i, j, v in self.iter_upper():
            if i == j:
                if x[i]:
                    total += v
            elif x[i] and x[j]:
                total += 2 * v
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuboModel):
            return NotImplemented
        return (self.n == other.n and self.offset == other.offset
                and list(self.iter_upper()) == list(other.iter_upper()))

    def __repr__(self) -> str:
        nnz = sum(1 for _ in self.iter_upper())
        return f"QuboModel(n={self.n}, nnz={nnz}, offset={self.offset})"


class IsingModel:
    """Pairwise spin model over {-1,+1}^n, exact coefficients."""

    __slots__ = ("n", "J", "h", "offset")

    def __init__(self, n: int, J: Mapping[tuple[int, int], Rational],
                 h: Sequence[Rational], offset: Rational = 0):
        if n < 0:
            raise ValueError("negative spin count")
        if len(h) != n:
            raise ValueError(f"h must have length {n}")
        self.n = n
        self.h = tuple(_frac(v) for v in h)
        self.offset = _frac(offset)
        couplings: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in J.items():
            if i == j:
                raise ValueError(f"self-coupling on spin {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"coupling ({i},{j}) out of range")
            key = (i, j) if i < j else (j, i)
            v = _frac(v)
            if v:
                couplings[key] = couplings.get(key, Fraction(0)) + v
        self.J = {k: v for k, v in sorted(couplings.items()) if v}

    def energy(self, sigma: Sequence[int]) -> Fraction:
        if len(sigma) != self.n:
            raise ValueError("spin vector length mismatch")
        if any(s not in (-1, 1) for s in sigma):
            raise ValueError("spins must be -1/+1")
        total = self.offset
        for (i, j), v in self.J.items():
            total += v * sigma[i] * sigma[j]
        for i, hi in enumerate(self.h):
            if hi:
                total += hi * sigma[i]
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, IsingModel):
            return NotImplemented
        return (self.n == other.n and self.J == other.J
                and self.h == other.h and self.offset == other.offset)

    def __repr__(self) -> str:
        return f"IsingModel(n={self.n}, couplings={len(self.J)}, offset={self.offset})"


# ---------------------------------------------------------------------------
# conversions


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Exact change of variables x = (s + 1)/2; energies match pointwise."""
    n = q.n
    h = [Fraction(0)] * n
    J: dict[tuple[int, int], Fraction] = {}
    offset = q.offset
    for i, j, v in q.iter_upper():
        if i == j:
            h[i] += v / 2
            offset += v / 2
        else:
            J[(i, j)] = v / 2
            h[i] += v / 2
            h[j] += v / 2
            offset += v / 2
    return IsingModel(n, J, h, offset)


def ising_to_qubo(m: IsingModel) -> QuboModel:
    """Exact change of variables s = 2x - 1; inverse of qubo_to_ising."""
    n = m.n
    diag = [2 * hi for hi in m.h]
    offset = m.offset - sum(m.h, Fraction(0))
    sym: dict[tuple[int, int], Fraction] = {}
    for (i, j), v in m.J.items():
        # J*s_i*s_j = 4J*x_i*x_j - 2J*x_i - 2J*x_j + J, and the symmetric
        # pair term is 2*Q_ij, so Q_ij = 2J
        sym[(i, j)] = 2 * v
        diag[i] -= 2 * v
        diag[j] -= 2 * v
        offset += v
    for i, d in enumerate(diag):
        if d:
            sym[(i, i)] = d
    return QuboModel(n, sym, offset)


def maxcut_to_ising(n_vertices: int, edges: Iterable[tuple]) -> IsingModel:
    """Spin model whose energy is the negated cut value.

    Edges are (u, v) or (u, v, weight).  Each edge contributes +w/2 to the
    coupling and -w/2 to the offset, so energy(s) = -cut(s) exactly and
    ground states are maximum cuts.
    """
    J: dict[tuple[int, int], Fraction] = {}
    offset = Fraction(0)
    for e in edges:
        if len(e) == 2:
            u, v = e
            w = Fraction(1)
        else:
            u, v, w = e
            w = _frac(w)
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        key = (u, v) if u < v else (v, u)
        J[key] = J.get(key, Fraction(0)) + w / 2
        offset -= w / 2
    return IsingModel(n_vertices, J, [0] * n_vertices, offset)


# ---------------------------------------------------------------------------
# QUBO as a linear integer program


@dataclass(frozen=True)
class IlpDescription:
    """Linearization of a QUBO: product variables and linking constraints.

    Variables 0..n-1 are the original binaries; variable n+k is the product
    variable for `products[k]`.  Constraints are (coeffs, "<=", rhs) rows
    over all variables.  For assignments satisfying every constraint the
    objective (plus offset) equals the QUBO energy.
    """

    n: int
    products: tuple[tuple[int, int], ...]
    objective: dict[int, Fraction]
    constraints: tuple[tuple[dict[int, int], str, int], ...]
    offset: Fraction

    @property
    def total_variables(self) -> int:
        return self.n + len(self.products)

    def is_feasible(self, bits: Sequence[int]) -> bool:
        if len(bits) != self.total_variables:
            raise ValueError("assignment length mismatch")
        for coeffs, op, rhs in self.constraints:
            lhs = sum(c * bits[v] for v, c in coeffs.items())
            if op == "<=" and lhs > rhs:
                return False
        return True

    def objective_value(self, bits: Sequence[int]) -> Fraction:
        return sum(c * bits[v] for v, c in self.objective.items()) + self.offset


def qubo_to_ilp(q: QuboModel) -> IlpDescription:
    """One product variable and three linking rows per off-diagonal pair."""
    products = []
    objective: dict[int, Fraction] = {}
    constraints = []
    for i, j, v in q.iter_upper():
        if i == j:
            objective[i] = objective.get(i, Fraction(0)) + v
        else:
            k = q.n + len(products)
            products.append((i, j))
            objective[k] = 2 * v
            # x_ij <= x_i, x_ij <= x_j, x_i + x_j - x_ij <= 1
            constraints.append(({k: 1, i: -1}, "<=", 0))
            constraints.append(({k: 1, j: -1}, "<=", 0))
            constraints.append(({i: 1, j: 1, k: -1}, "<=", 1))
    return IlpDescription(q.n, tuple(products), objective,
                          tuple(constraints), q.offset)


# ---------------------------------------------------------------------------
# chain duplication for incomplete coupling graphs


def chain_indices(n_before: int, variable: int, copies: int) -> tuple[int, ...]:
    """Spin indices forming the chain after `chain_duplicate`."""
    return (variable,) + tuple(range(n_before, n_before + copies - 1))


def chain_duplicate(m: IsingModel, variable: int, copies: int, p,
                    move_couplings: Mapping[int, int] | None = None) -> IsingModel:
    """Split a spin into `copies` chained replicas with ferromagnetic ties.

    New spins are appended at the end (see `chain_indices`); consecutive
    replicas are coupled with -p.  move_couplings reroutes existing
    couplings {partner: copy_number} onto a chosen replica (copy 0 is the
    original position), which is how a long interaction reaches a partner
    the original spin cannot touch.  The offset grows by p*(copies-1), so
    chain-consistent assignments keep their original energy exactly.
    """
    p = _frac(p)
    if p <= 0:
        raise ValueError("chain strength p must be positive")
    if copies < 1:
        raise ValueError("need at least one copy")
    if not 0 <= variable < m.n:
        raise ValueError(f"no spin {variable}")
    if copies == 1:
        if move_couplings:
            raise ValueError("cannot move couplings with a single copy")
        return m

    chain = chain_indices(m.n, variable, copies)
    n = m.n + copies - 1
    J: dict[tuple[int, int], Fraction] = {}
    move = dict(move_couplings or {})
    for partner, copy in move.items():
        if not 0 <= copy < copies:
            raise ValueError(f"copy {copy} out of range")
        key = (min(variable, partner), max(variable, partner))
        if key not in m.J:
            raise ValueError(f"no coupling between {variable} and {partner}")
    for (i, j), v in m.J.items():
        if variable in (i, j):
            partner = j if i == variable else i
            target = chain[move.get(partner, 0)]
            key = (min(target, partner), max(target, partner))
            J[key] = J.get(key, Fraction(0)) + v
        else:
            J[(i, j)] = J.get((i, j), Fraction(0)) + v
    for a, b in zip(chain, chain[1:]):
        key = (min(a, b), max(a, b))
        J[key] = J.get(key, Fraction(0)) - p
    h = list(m.h) + [Fraction(0)] * (copies - 1)
    return IsingModel(n, J, h, m.offset + p * (copies - 1))


# ---------------------------------------------------------------------------
# exhaustive enumeration


@dataclass(frozen=True)
class BruteForceResult:
    energy: Fraction
    configurations: tuple[tuple[int, ...], ...]  # lexicographically sorted
    partition: float | None = None


def _float_tables(model) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Dense float (matrix, linear, constant, magnitude) for fast scans."""
    n = model.n
    M = np.zeros((n, n))
    lin = np.zeros(n)
    if isinstance(model, QuboModel):
        for i, j, v in model.iter_upper():
            if i == j:
                lin[i] += float(v)
            else:
                M[i, j] += 2 * float(v)
    else:
        for (i, j), v in model.J.items():
            M[i, j] += float(v)
        for i, hi in enumerate(model.h):
            lin[i] += float(hi)
    const = float(model.offset)
    magnitude = float(np.abs(M).sum() + np.abs(lin).sum() + abs(const))
    return M, lin, const, magnitude


def _config_bits(index_array: np.ndarray, n: int) -> np.ndarray:
    bits = np.empty((index_array.size, n), dtype=np.float64)
    for j in range(n):
        bits[:, j] = (index_array >> j) & 1
    return bits


def brute_force(model: QuboModel | IsingModel, *, beta: float | None = None,
                max_n: int = BRUTE_FORCE_MAX_N) -> BruteForceResult:
    """Exact optimum by full enumeration; float Z(beta) on request.

    The scan runs in chunked float matrix arithmetic; candidates within a
    rigorous error band of the float minimum are re-evaluated exactly, so
    the reported optimum and argmin set are exact.  The partition function
    uses compensated summation of chunk totals.
    """
    n = model.n
    if n > max_n:
        raise ResourceLimitError(f"{n} variables exceed the enumeration cap {max_n}",
                                 limit="max_n", value=max_n)
    is_qubo = isinstance(model, QuboModel)
    if n == 0:
        z = None if beta is None else math.exp(-beta * float(model.offset))
        return BruteForceResult(model.offset, ((),), z)

    M, lin, const, magnitude = _float_tables(model)
    # per-point float error is far below magnitude * n * 2^-50; double it
    band = magnitude * n * 2.0 ** -49 + 2.0 ** -60
    total = 1 << n
    chunk = 1 << min(n, _CHUNK_BITS)

    best_float = math.inf
    z_parts: list[float] = []
    for base in range(0, total, chunk):
        idx = np.arange(base, min(base + chunk, total), dtype=np.int64)
        X = _config_bits(idx, n)
        if not is_qubo:
            X = 2.0 * X - 1.0
        E = ((X @ M) * X).sum(axis=1) + X @ lin + const
        best_float = min(best_float, float(E.min()))
        if beta is not None:
            z_parts.append(float(np.exp(-beta * E).sum()))

    candidates: list[int] = []
    for base in range(0, total, chunk):
        idx = np.arange(base, min(base + chunk, total), dtype=np.int64)
        X = _config_bits(idx, n)
        if not is_qubo:
            X = 2.0 * X - 1.0
        E = ((X @ M) * X).sum(axis=1) + X @ lin + const
        hit = idx[E <= best_float + band]
        candidates.extend(int(v) for v in hit)

    best_exact: Fraction | None = None
    argmins: list[tuple[int, ...]] = []
    for code in candidates:
        bits = tuple((code >> j) & 1 for j in range(n))
        config = bits if is_qubo else tuple(2 * b - 1 for b in bits)
        e = model.energy(config)
        if best_exact is None or e < best_exact:
            best_exact = e
            argmins = [config]
        elif e == best_exact:
            argmins.append(config)

    z = math.fsum(z_parts) if beta is not None else None
    return BruteForceResult(best_exact, tuple(sorted(argmins)), z)
