"""Problem documents, model text formats, sample archives, run manifests.

Every parser here raises FormatError with a location (file, line, or a
JSON path like $.A[2][1]) and rejects unknown fields, dimension
mismatches (naming both sizes), and trailing garbage.  The printers emit
canonical text, so printing and re-parsing is the identity on anything
these functions produced.  Numbers travel as exact rationals "p/q"
whenever they are rational; floats use the shortest representation that
round-trips (at most 17 significant digits).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

from .anneal import AnnealSchedule, SampleSet
from .errors import FormatError
from .gama import portfolio_objective
from .models import IsingModel, QuboModel
from .polys import SparsePolynomial, parse_poly, poly_to_text
from .reformulate import ConstraintSystem
from .toric import ToricIP

ARTIFACT_VERSION = "0.1.0"

SAMPLES_KIND = "quip-samples"
MANIFEST_KIND = "quip-manifest"


# ---------------------------------------------------------------------------
# numbers


def format_rational(value) -> str:
    """Exact text for an int or Fraction: "5", "-3/4"."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_rational(text: str) -> Fraction:
    """Inverse of format_rational; also accepts plain decimal strings."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"not a rational number: {text!r}") from None


def format_float(value: float) -> str:
    """Shortest decimal that parses back to the same float."""
    return repr(float(value))


def file_digest(path) -> str:
    """Hex sha256 of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# problem documents (JSON)


def _fail(source: str, loc: str, msg: str) -> None:
    raise FormatError(f"{source}: {loc}: {msg}")


def _want_int(value, source, loc) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(source, loc, f"expected an integer, got {value!r}")
    return value


def _want_rational(value, source, loc) -> Fraction:
    if isinstance(value, bool):
        _fail(source, loc, f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return parse_rational(value)
        except FormatError:
            _fail(source, loc, f"expected a rational, got {value!r}")
    _fail(source, loc, f"expected an integer or a 'p/q' string, got {value!r}")


def _want_list(value, source, loc) -> list:
    if not isinstance(value, list):
        _fail(source, loc, f"expected a list, got {type(value).__name__}")
    return value


def _want_dict(value, source, loc, allowed: set) -> dict:
    if not isinstance(value, dict):
        _fail(source, loc, f"expected an object, got {type(value).__name__}")
    for key in sorted(set(value) - allowed):
        _fail(source, f"{loc}.{key}", "unknown field")
    return value


def _json_value(value):
    """Problem-document form of a stored number: int, or "p/q" for the rest."""
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else format_rational(value)
    return value


def pretty_json(value, indent: int = 0) -> str:
    """JSON with scalar lists kept on one line; plain json otherwise."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = [f"{inner}{json.dumps(str(k))}: {pretty_json(v, indent + 2)}"
                 for k, v in sorted(value.items())]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(value, list):
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(json.dumps(v) for v in value) + "]"
        parts = [f"{inner}{pretty_json(v, indent + 2)}" for v in value]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    return json.dumps(value)


@dataclass(frozen=True)
class OracleSpec:
    """A named built-in objective plus its parameters.

    The one built-in is "capital-budgeting": maximize expected return
    minus a risk term, expressed here as the minimization oracle
    -mu.x + sqrt((1-epsilon)/epsilon * sum sigma_i^2 x_i^2).
    """

    name: str
    mu: tuple
    sigma: tuple
    epsilon: Fraction

    def __post_init__(self):
        if self.name != "capital-budgeting":
            raise ValueError(f"unknown oracle {self.name!r}")
        object.__setattr__(self, "mu", tuple(Fraction(v) for v in self.mu))
        object.__setattr__(self, "sigma", tuple(Fraction(v) for v in self.sigma))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if len(self.mu) != len(self.sigma):
            raise ValueError("mu and sigma must have the same length")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie strictly between 0 and 1")

    def build(self) -> Callable:
        return portfolio_objective([float(v) for v in self.mu],
                                   [float(v) for v in self.sigma],
                                   float(self.epsilon))


@dataclass(frozen=True)
class GraphSpec:
    """An undirected graph as a vertex count and an edge list."""

    vertices: int
    edges: tuple

    def __post_init__(self):
        if self.vertices < 0:
            raise ValueError("negative vertex count")
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True)
class ProblemFile:
    """A validated problem document.

    All sections are optional; whichever are present must agree on the
    variable count.  The objective is a cost tuple (the document's "c"
    field), a SparsePolynomial, an OracleSpec, or None.
    """

    A: tuple | None = None
    b: tuple | None = None
    lower: tuple | None = None
    upper: tuple | None = None
    inequalities: tuple = ()
    objective: object = None
    graph: GraphSpec | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.A is None) != (self.b is None):
            raise ValueError("A and b must be given together")
        if (self.lower is None) != (self.upper is None):
            raise ValueError("lower and upper bounds must be given together")
        if self.A is not None:
            A = tuple(tuple(int(v) for v in row) for row in self.A)
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", tuple(int(v) for v in self.b))
            if len(self.b) != len(A):
                raise ValueError(f"b has {len(self.b)} entries for "
                                 f"{len(A)} rows in A")
        if self.lower is not None:
            low = tuple(None if v is None else int(v) for v in self.lower)
            high = tuple(None if v is None else int(v) for v in self.upper)
            object.__setattr__(self, "lower", low)
            object.__setattr__(self, "upper", high)
            if len(low) != len(high):
                raise ValueError("bound vectors must have the same length")
        object.__setattr__(self, "inequalities",
                           tuple(sorted(int(r) for r in self.inequalities)))
        rows = 0 if self.A is None else len(self.A)
        for r in self.inequalities:
            if not 0 <= r < rows:
                raise ValueError(f"inequality row {r} out of range")
        obj = self.objective
        if obj is not None and not isinstance(
                obj, (tuple, list, SparsePolynomial, OracleSpec)):
            raise ValueError("objective must be costs, a polynomial, "
                             "or an OracleSpec")
        if isinstance(obj, list):
            obj = tuple(obj)
        if isinstance(obj, tuple):
            object.__setattr__(self, "objective",
                               tuple(Fraction(v) for v in obj))
        widths = {}
        if self.A is not None and self.A:
            widths["A"] = len(self.A[0])
        if self.lower is not None:
            widths["bounds"] = len(self.lower)
        obj = self.objective
        if isinstance(obj, tuple):
            widths["c"] = len(obj)
        elif isinstance(obj, SparsePolynomial):
            widths["objective"] = obj.arity
        elif isinstance(obj, OracleSpec):
            widths["objective"] = len(obj.mu)
        if len(set(widths.values())) > 1:
            parts = ", ".join(f"{k}: {v}" for k, v in sorted(widths.items()))
            raise ValueError(f"sections disagree on variable count ({parts})")

    @property
    def n(self) -> int | None:
        if self.A is not None and self.A:
            return len(self.A[0])
        if self.lower is not None:
            return len(self.lower)
        obj = self.objective
        if isinstance(obj, tuple):
            return len(obj)
        if isinstance(obj, SparsePolynomial):
            return obj.arity
        if isinstance(obj, OracleSpec):
            return len(obj.mu)
        return None

    def system(self) -> ConstraintSystem:
        """The document as a bounded linear system, when it has one."""
        if self.A is None:
            raise ValueError("problem has no constraint matrix")
        if self.lower is None:
            raise ValueError("problem has no variable bounds")
        obj = self.objective
        if isinstance(obj, OracleSpec):
            obj = None
        return ConstraintSystem.make(self.A, self.b, self.lower, self.upper,
                                     self.inequalities, obj)

    def toric(self) -> ToricIP:
        """The document as a nonnegative lattice program for ct_solve."""
        if self.A is None:
            raise ValueError("problem has no constraint matrix")
        obj = self.objective
        if not isinstance(obj, tuple):
            raise ValueError("toric solving needs a linear cost vector")
        costs = []
        for i, c in enumerate(obj):
            if c.denominator != 1:
                raise ValueError(f"toric cost c[{i}] = {c} is not an integer")
            costs.append(c.numerator)
        if self.inequalities:
            raise ValueError("toric solving handles equality rows only")
        return ToricIP.make(self.A, self.b, costs)

    def objective_oracle(self) -> Callable | None:
        """A callable x -> value for whatever objective is present."""
        obj = self.objective
        if obj is None:
            return None
        if isinstance(obj, OracleSpec):
            return obj.build()
        if isinstance(obj, SparsePolynomial):
            return obj.evaluate
        costs = obj

        def linear(x: Sequence[int]) -> Fraction:
            return sum((c * v for c, v in zip(costs, x)), Fraction(0))

        return linear


_PROBLEM_KEYS = {"A", "b", "bounds", "c", "objective", "inequalities",
                 "graph", "metadata"}


def parse_problem_text(text: str, source: str = "<problem>") -> ProblemFile:
    """Validate a problem document given as JSON text."""
    if not text.strip():
        raise FormatError(f"{source}: empty document")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    _want_dict(doc, source, "$", _PROBLEM_KEYS)

    A = b = None
    if "A" in doc:
        rows = _want_list(doc["A"], source, "$.A")
        A = []
        for r, row in enumerate(rows):
            entries = _want_list(row, source, f"$.A[{r}]")
            if A and len(entries) != len(A[0]):
                _fail(source, f"$.A[{r}]",
                      f"row has {len(entries)} entries but row 0 has "
                      f"{len(A[0])}")
            A.append(tuple(_want_int(v, source, f"$.A[{r}][{k}]")
                           for k, v in enumerate(entries)))
        A = tuple(A)
    if "b" in doc:
        if A is None:
            _fail(source, "$.b", "b given without A")
        vals = _want_list(doc["b"], source, "$.b")
        b = tuple(_want_int(v, source, f"$.b[{k}]")
                  for k, v in enumerate(vals))
        if len(b) != len(A):
            _fail(source, "$.b",
                  f"{len(b)} entries does not match {len(A)} rows in A")
    elif A is not None:
        _fail(source, "$.A", "A given without b")

    n = len(A[0]) if A else None

    lower = upper = None
    if "bounds" in doc:
        box = _want_dict(doc["bounds"], source, "$.bounds",
                         {"lower", "upper"})
        for side in ("lower", "upper"):
            if side not in box:
                _fail(source, "$.bounds", f"missing field '{side}'")
        sides = {}
        for side in ("lower", "upper"):
            vals = _want_list(box[side], source, f"$.bounds.{side}")
            out = []
            for k, v in enumerate(vals):
                if v is None:
                    out.append(None)
                else:
                    out.append(_want_int(v, source, f"$.bounds.{side}[{k}]"))
            sides[side] = tuple(out)
        lower, upper = sides["lower"], sides["upper"]
        if len(lower) != len(upper):
            _fail(source, "$.bounds",
                  f"lower has {len(lower)} entries but upper has "
                  f"{len(upper)}")
        if n is not None and len(lower) != n:
            _fail(source, "$.bounds",
                  f"{len(lower)} entries for {n} variables in A")
        n = n if n is not None else len(lower)

    objective = None
    if "c" in doc and "objective" in doc:
        _fail(source, "$.objective", "both c and objective given")
    if "c" in doc:
        vals = _want_list(doc["c"], source, "$.c")
        objective = tuple(_want_rational(v, source, f"$.c[{k}]")
                          for k, v in enumerate(vals))
        if n is not None and len(objective) != n:
            _fail(source, "$.c",
                  f"{len(objective)} entries for {n} variables")
        n = n if n is not None else len(objective)
    if "objective" in doc:
        spec = _want_dict(doc["objective"], source, "$.objective",
                          {"polynomial", "names", "oracle", "mu", "sigma",
                           "epsilon"})
        if "polynomial" in spec and "oracle" in spec:
            _fail(source, "$.objective",
                  "give either a polynomial or an oracle, not both")
        if "polynomial" in spec:
            for key in ("mu", "sigma", "epsilon"):
                if key in spec:
                    _fail(source, f"$.objective.{key}",
                          "only valid with an oracle objective")
            body = spec["polynomial"]
            if not isinstance(body, str):
                _fail(source, "$.objective.polynomial", "expected a string")
            names = None
            if "names" in spec:
                names = _want_list(spec["names"], source, "$.objective.names")
                if not all(isinstance(s, str) for s in names):
                    _fail(source, "$.objective.names",
                          "expected a list of strings")
            try:
                objective = parse_poly(body, arity=n, names=names)
            except (FormatError, ValueError) as exc:
                _fail(source, "$.objective.polynomial", str(exc))
            if n is not None and objective.arity != n:
                _fail(source, "$.objective.polynomial",
                      f"uses {objective.arity} variables but the problem "
                      f"has {n}")
            n = n if n is not None else objective.arity
        elif "oracle" in spec:
            if "names" in spec:
                _fail(source, "$.objective.names",
                      "only valid with a polynomial objective")
            name = spec["oracle"]
            if not isinstance(name, str):
                _fail(source, "$.objective.oracle", "expected a string")
            for key in ("mu", "sigma", "epsilon"):
                if key not in spec:
                    _fail(source, "$.objective", f"missing field '{key}'")
            mu = [_want_rational(v, source, f"$.objective.mu[{k}]")
                  for k, v in enumerate(_want_list(spec["mu"], source,
                                                   "$.objective.mu"))]
            sigma = [_want_rational(v, source, f"$.objective.sigma[{k}]")
                     for k, v in enumerate(_want_list(spec["sigma"], source,
                                                      "$.objective.sigma"))]
            eps = _want_rational(spec["epsilon"], source,
                                 "$.objective.epsilon")
            try:
                objective = OracleSpec(name, tuple(mu), tuple(sigma), eps)
            except ValueError as exc:
                _fail(source, "$.objective", str(exc))
            if n is not None and len(mu) != n:
                _fail(source, "$.objective.mu",
                      f"{len(mu)} entries for {n} variables")
            n = n if n is not None else len(mu)
        else:
            _fail(source, "$.objective",
                  "expected a polynomial or oracle objective")

    inequalities = ()
    if "inequalities" in doc:
        vals = _want_list(doc["inequalities"], source, "$.inequalities")
        seen = set()
        rows = len(A) if A is not None else 0
        out = []
        for k, v in enumerate(vals):
            r = _want_int(v, source, f"$.inequalities[{k}]")
            if not 0 <= r < rows:
                _fail(source, f"$.inequalities[{k}]",
                      f"row {r} out of range for {rows} rows")
            if r in seen:
                _fail(source, f"$.inequalities[{k}]", f"row {r} repeated")
            seen.add(r)
            out.append(r)
        inequalities = tuple(out)

    graph = None
    if "graph" in doc:
        g = _want_dict(doc["graph"], source, "$.graph",
                       {"vertices", "edges"})
        for key in ("vertices", "edges"):
            if key not in g:
                _fail(source, "$.graph", f"missing field '{key}'")
        vertices = _want_int(g["vertices"], source, "$.graph.vertices")
        if vertices < 0:
            _fail(source, "$.graph.vertices", "negative vertex count")
        edges = []
        for k, pair in enumerate(_want_list(g["edges"], source,
                                            "$.graph.edges")):
            pair = _want_list(pair, source, f"$.graph.edges[{k}]")
            if len(pair) != 2:
                _fail(source, f"$.graph.edges[{k}]",
                      f"expected two endpoints, got {len(pair)}")
            u = _want_int(pair[0], source, f"$.graph.edges[{k}][0]")
            v = _want_int(pair[1], source, f"$.graph.edges[{k}][1]")
            if not (0 <= u < vertices and 0 <= v < vertices):
                _fail(source, f"$.graph.edges[{k}]",
                      f"edge ({u},{v}) out of range for {vertices} vertices")
            if u == v:
                _fail(source, f"$.graph.edges[{k}]", f"self-loop on {u}")
            edges.append((u, v))
        graph = GraphSpec(vertices, tuple(edges))

    metadata = {}
    if "metadata" in doc:
        if not isinstance(doc["metadata"], dict):
            _fail(source, "$.metadata", "expected an object")
        metadata = doc["metadata"]

    try:
        return ProblemFile(A, b, lower, upper, inequalities, objective,
                           graph, metadata)
    except ValueError as exc:
        raise FormatError(f"{source}: $: {exc}") from None


def parse_problem(path) -> ProblemFile:
    """Load and validate a problem document from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_text(fh.read(), source=str(path))


def parse_matrix_text(text: str, source: str = "<matrix>") -> tuple:
    """A JSON array of equal-length integer rows."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    rows = _want_list(doc, source, "$")
    out = []
    for r, row in enumerate(rows):
        entries = _want_list(row, source, f"$[{r}]")
        if out and len(entries) != len(out[0]):
            _fail(source, f"$[{r}]",
                  f"row has {len(entries)} entries but row 0 has "
                  f"{len(out[0])}")
        out.append(tuple(_want_int(v, source, f"$[{r}][{k}]")
                         for k, v in enumerate(entries)))
    return tuple(out)


def read_matrix(path) -> tuple:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_matrix_text(fh.read(), source=str(path))


def print_problem(pf: ProblemFile) -> str:
    """Canonical JSON for a problem document; parses back to `pf`."""
    doc: dict = {}
    if pf.A is not None:
        doc["A"] = [list(row) for row in pf.A]
        doc["b"] = list(pf.b)
    if pf.lower is not None:
        doc["bounds"] = {"lower": list(pf.lower), "upper": list(pf.upper)}
    obj = pf.objective
    if isinstance(obj, tuple):
        doc["c"] = [_json_value(v) for v in obj]
    elif isinstance(obj, SparsePolynomial):
        doc["objective"] = {"polynomial": poly_to_text(obj)}
    elif isinstance(obj, OracleSpec):
        doc["objective"] = {
            "oracle": obj.name,
            "mu": [_json_value(v) for v in obj.mu],
            "sigma": [_json_value(v) for v in obj.sigma],
            "epsilon": _json_value(obj.epsilon),
        }
    if pf.inequalities:
        doc["inequalities"] = list(pf.inequalities)
    if pf.graph is not None:
        doc["graph"] = {"vertices": pf.graph.vertices,
                        "edges": [list(e) for e in pf.graph.edges]}
    if pf.metadata:
        doc["metadata"] = pf.metadata
    return pretty_json(doc) + "\n"


def write_problem(path, pf: ProblemFile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(print_problem(pf))


# ---------------------------------------------------------------------------
# QUBO / Ising text formats


def _data_lines(text: str, source: str):
    """Yield (line_number, tokens) for non-comment lines; handle offsets.

    Returns a list of (lineno, tokens) plus the parsed `c offset` value
    (or None).  Plain comment lines start with `c` and are skipped.
    """
    rows = []
    offset = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if tokens[0] == "c":
            if len(tokens) >= 2 and tokens[1] == "offset":
                if offset is not None:
                    raise FormatError(
                        f"{source}: line {lineno}: repeated offset")
                if len(tokens) != 3:
                    raise FormatError(
                        f"{source}: line {lineno}: offset needs one value")
                try:
                    offset = parse_rational(tokens[2])
                except FormatError as exc:
                    raise FormatError(
                        f"{source}: line {lineno}: {exc}") from None
            continue
        rows.append((lineno, tokens))
    return rows, offset


def _parse_header(rows, source, kind):
    if not rows:
        raise FormatError(f"{source}: missing 'p {kind}' header")
    lineno, tokens = rows[0]
    if tokens[0] != "p":
        raise FormatError(
            f"{source}: line {lineno}: expected 'p {kind} n nnz' before data")
    if len(tokens) != 4 or tokens[1] != kind:
        raise FormatError(
            f"{source}: line {lineno}: malformed header "
            f"{' '.join(tokens)!r}")
    try:
        n, nnz = int(tokens[2]), int(tokens[3])
    except ValueError:
        raise FormatError(
            f"{source}: line {lineno}: header sizes must be integers"
        ) from None
    if n < 0 or nnz < 0:
        raise FormatError(f"{source}: line {lineno}: negative header sizes")
    return n, nnz, rows[1:]


def _entry_index(token, n, source, lineno) -> int:
    try:
        i = int(token)
    except ValueError:
        raise FormatError(
            f"{source}: line {lineno}: index {token!r} is not an integer"
        ) from None
    if not 0 <= i < n:
        raise FormatError(
            f"{source}: line {lineno}: index {i} out of range for n={n}")
    return i


def format_qubo(model: QuboModel) -> str:
    """Header `p qubo n nnz`, then `i j value` triplets, i <= j, sorted.

    Diagonal lines carry the linear coefficient; off-diagonal lines carry
    the full coefficient of x_i x_j.  A nonzero constant rides on a
    `c offset` comment line.
    """
    triples = [(i, j, v if i == j else 2 * v)
               for i, j, v in model.iter_upper()]
    lines = [f"p qubo {model.n} {len(triples)}"]
    if model.offset:
        lines.append(f"c offset {format_rational(model.offset)}")
    lines.extend(f"{i} {j} {format_rational(v)}" for i, j, v in triples)
    return "\n".join(lines) + "\n"


def parse_qubo(text: str, source: str = "<qubo>") -> QuboModel:
    rows, offset = _data_lines(text, source)
    n, nnz, rows = _parse_header(rows, source, "qubo")
    entries: dict = {}
    for lineno, tokens in rows:
        if len(tokens) != 3:
            raise FormatError(
                f"{source}: line {lineno}: expected 'i j value'")
        i = _entry_index(tokens[0], n, source, lineno)
        j = _entry_index(tokens[1], n, source, lineno)
        key = (i, j) if i <= j else (j, i)
        if key in entries:
            raise FormatError(
                f"{source}: line {lineno}: repeated entry ({i},{j})")
        try:
            entries[key] = parse_rational(tokens[2])
        except FormatError as exc:
            raise FormatError(f"{source}: line {lineno}: {exc}") from None
    if len(entries) != nnz:
        raise FormatError(
            f"{source}: header declares {nnz} entries, found {len(entries)}")
    return QuboModel.from_upper(n, entries, offset or 0)


def read_qubo(path) -> QuboModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_qubo(fh.read(), source=str(path))


def write_qubo(path, model: QuboModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_qubo(model))


def format_ising(model: IsingModel) -> str:
    """Header `p ising n nnz`, then `h i value` and `J i j value` lines."""
    fields = [(i, v) for i, v in enumerate(model.h) if v]
    pairs = sorted(model.J.items())
    lines = [f"p ising {model.n} {len(fields) + len(pairs)}"]
    if model.offset:
        lines.append(f"c offset {format_rational(model.offset)}")
    lines.extend(f"h {i} {format_rational(v)}" for i, v in fields)
    lines.extend(f"J {i} {j} {format_rational(v)}"
                 for (i, j), v in pairs)
    return "\n".join(lines) + "\n"


def parse_ising(text: str, source: str = "<ising>") -> IsingModel:
    rows, offset = _data_lines(text, source)
    n, nnz, rows = _parse_header(rows, source, "ising")
    h = [Fraction(0)] * n
    h_seen: set = set()
    J: dict = {}
    count = 0
    for lineno, tokens in rows:
        kind = tokens[0]
        if kind == "h":
            if len(tokens) != 3:
                raise FormatError(
                    f"{source}: line {lineno}: expected 'h i value'")
            i = _entry_index(tokens[1], n, source, lineno)
            if i in h_seen:
                raise FormatError(
                    f"{source}: line {lineno}: repeated field h[{i}]")
            h_seen.add(i)
            try:
                h[i] = parse_rational(tokens[2])
            except FormatError as exc:
                raise FormatError(f"{source}: line {lineno}: {exc}") from None
        elif kind == "J":
            if len(tokens) != 4:
                raise FormatError(
                    f"{source}: line {lineno}: expected 'J i j value'")
            i = _entry_index(tokens[1], n, source, lineno)
            j = _entry_index(tokens[2], n, source, lineno)
            if i == j:
                raise FormatError(
                    f"{source}: line {lineno}: self-coupling on spin {i}")
            key = (i, j) if i < j else (j, i)
            if key in J:
                raise FormatError(
                    f"{source}: line {lineno}: repeated coupling "
                    f"({key[0]},{key[1]})")
            try:
                J[key] = parse_rational(tokens[3])
            except FormatError as exc:
                raise FormatError(f"{source}: line {lineno}: {exc}") from None
        else:
            raise FormatError(
                f"{source}: line {lineno}: expected an 'h' or 'J' line, "
                f"got {kind!r}")
        count += 1
    if count != nnz:
        raise FormatError(
            f"{source}: header declares {nnz} entries, found {count}")
    return IsingModel(n, J, h, offset or 0)


def read_ising(path) -> IsingModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_ising(fh.read(), source=str(path))


def write_ising(path, model: IsingModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_ising(model))


# ---------------------------------------------------------------------------
# DIMACS graphs


def format_dimacs(n_vertices: int, edges) -> str:
    """DIMACS edge format, 1-based, edges sorted and deduplicated."""
    canon = sorted({(min(u, v), max(u, v)) for u, v in edges})
    lines = [f"p edge {n_vertices} {len(canon)}"]
    lines.extend(f"e {u + 1} {v + 1}" for u, v in canon)
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str, source: str = "<dimacs>"
                 ) -> tuple[int, tuple]:
    """Read a DIMACS edge file into (vertex count, 0-based edge tuple)."""
    rows, _ = _data_lines(text, source)
    if not rows:
        raise FormatError(f"{source}: missing 'p edge' header")
    lineno, tokens = rows[0]
    if tokens[0] != "p" or len(tokens) != 4 or tokens[1] != "edge":
        raise FormatError(
            f"{source}: line {lineno}: expected 'p edge n m' header")
    try:
        n, m = int(tokens[2]), int(tokens[3])
    except ValueError:
        raise FormatError(
            f"{source}: line {lineno}: header sizes must be integers"
        ) from None
    if n < 0 or m < 0:
        raise FormatError(f"{source}: line {lineno}: negative header sizes")
    edges = []
    seen = set()
    for lineno, tokens in rows[1:]:
        if tokens[0] != "e" or len(tokens) != 3:
            raise FormatError(
                f"{source}: line {lineno}: expected 'e u v'")
        try:
            u, v = int(tokens[1]), int(tokens[2])
        except ValueError:
            raise FormatError(
                f"{source}: line {lineno}: endpoints must be integers"
            ) from None
        if not (1 <= u <= n and 1 <= v <= n):
            raise FormatError(
                f"{source}: line {lineno}: edge ({u},{v}) out of range for "
                f"{n} vertices")
        if u == v:
            raise FormatError(f"{source}: line {lineno}: self-loop on {u}")
        key = (min(u, v) - 1, max(u, v) - 1)
        if key in seen:
            raise FormatError(
                f"{source}: line {lineno}: repeated edge ({u},{v})")
        seen.add(key)
        edges.append(key)
    if len(edges) != m:
        raise FormatError(
            f"{source}: header declares {m} edges, found {len(edges)}")
    return n, tuple(edges)


def read_dimacs(path) -> tuple[int, tuple]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dimacs(fh.read(), source=str(path))


def write_dimacs(path, n_vertices: int, edges) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_dimacs(n_vertices, edges))


# ---------------------------------------------------------------------------
# sample archives (JSON lines)


def format_samples(ss: SampleSet, schedule: AnnealSchedule | None = None
                   ) -> str:
    """One header line of metadata, then one line per distinct config."""
    header = {
        "kind": SAMPLES_KIND,
        "version": 1,
        "seed": ss.seed,
        "model_digest": ss.model_digest,
        "chain_break_fraction": ss.chain_break_fraction,
        "schedule": None if schedule is None else {
            "beta_min": schedule.beta_min,
            "beta_max": schedule.beta_max,
            "sweeps": schedule.sweeps,
            "shape": schedule.shape,
            "replicas": schedule.replicas,
            "exchange_interval": schedule.exchange_interval,
        },
    }
    lines = [json.dumps(header, sort_keys=True)]
    for config, energy, count in ss.records:
        lines.append(json.dumps({"config": list(config), "energy": energy,
                                 "count": count}, sort_keys=True))
    return "\n".join(lines) + "\n"


_HEADER_KEYS = {"kind", "version", "seed", "model_digest",
                "chain_break_fraction", "schedule"}
_SCHEDULE_KEYS = {"beta_min", "beta_max", "sweeps", "shape", "replicas",
                  "exchange_interval"}
_RECORD_KEYS = {"config", "energy", "count"}


def parse_samples(text: str, model=None, source: str = "<samples>"
                  ) -> tuple[SampleSet, AnnealSchedule | None]:
    """Load a sample archive; with `model` given, verify digest and energies."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FormatError(f"{source}: empty archive")

    def load_line(k: int) -> dict:
        try:
            obj = json.loads(lines[k])
        except json.JSONDecodeError as exc:
            raise FormatError(
                f"{source}: line {k + 1}: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise FormatError(f"{source}: line {k + 1}: expected an object")
        return obj

    header = load_line(0)
    for key in sorted(set(header) - _HEADER_KEYS):
        raise FormatError(f"{source}: line 1: unknown header field {key!r}")
    for key in sorted(_HEADER_KEYS - set(header)):
        raise FormatError(f"{source}: line 1: missing header field {key!r}")
    if header["kind"] != SAMPLES_KIND:
        raise FormatError(
            f"{source}: line 1: not a sample archive "
            f"(kind={header['kind']!r})")
    if header["version"] != 1:
        raise FormatError(
            f"{source}: line 1: unsupported version {header['version']!r}")
    seed = header["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise FormatError(f"{source}: line 1: seed must be an integer")
    if not isinstance(header["model_digest"], str):
        raise FormatError(f"{source}: line 1: model_digest must be a string")
    broken = header["chain_break_fraction"]
    if broken is not None and (isinstance(broken, bool)
                               or not isinstance(broken, (int, float))):
        raise FormatError(
            f"{source}: line 1: chain_break_fraction must be a number")

    schedule = None
    if header["schedule"] is not None:
        raw = header["schedule"]
        if not isinstance(raw, dict) or set(raw) != _SCHEDULE_KEYS:
            raise FormatError(f"{source}: line 1: malformed schedule")
        try:
            schedule = AnnealSchedule(**raw)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{source}: line 1: {exc}") from None

    records = []
    for k in range(1, len(lines)):
        rec = load_line(k)
        if set(rec) != _RECORD_KEYS:
            raise FormatError(
                f"{source}: line {k + 1}: expected config/energy/count")
        config = rec["config"]
        if (not isinstance(config, list)
                or any(isinstance(v, bool) or not isinstance(v, int)
                       for v in config)):
            raise FormatError(
                f"{source}: line {k + 1}: config must be an integer list")
        energy = rec["energy"]
        if isinstance(energy, bool) or not isinstance(energy, (int, float)):
            raise FormatError(
                f"{source}: line {k + 1}: energy must be a number")
        count = rec["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise FormatError(
                f"{source}: line {k + 1}: count must be a positive integer")
        records.append((tuple(config), float(energy), count))

    try:
        ss = SampleSet(tuple(records), seed, header["model_digest"],
                       chain_break_fraction=broken)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{source}: invalid sample records: {exc}") from None
    if model is not None:
        ss.verify(model)
    return ss, schedule


def read_samples(path, model=None) -> tuple[SampleSet, AnnealSchedule | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_samples(fh.read(), model, source=str(path))


def write_samples(path, ss: SampleSet,
                  schedule: AnnealSchedule | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_samples(ss, schedule))


# ---------------------------------------------------------------------------
# run manifests


@dataclass(frozen=True)
class RunManifest:
    """What produced an artifact: command, config, seed, inputs, timings.

    Two runs of the same command on the same inputs agree on everything
    except `timings`, so `fingerprint()` hashes the manifest with the
    timings stripped.
    """

    command: tuple
    config: dict
    seed: int | None
    version: str
    input_digests: dict
    timings: dict

    def __post_init__(self):
        object.__setattr__(self, "command",
                           tuple(str(t) for t in self.command))
        for name, value in self.timings.items():
            if not isinstance(value, (int, float)) or value < 0:
                raise ValueError(f"timing {name!r} must be nonnegative")

    def fingerprint(self) -> str:
        stable = manifest_to_json(replace(self, timings={}))
        return hashlib.sha256(stable.encode("utf-8")).hexdigest()


def make_manifest(command, *, config: dict, seed: int | None = None,
                  inputs=(), timings: dict | None = None) -> RunManifest:
    digests = {str(p): file_digest(p) for p in inputs}
    return RunManifest(tuple(command), dict(config), seed, ARTIFACT_VERSION,
                       digests, dict(timings or {}))


def json_ready(value):
    """Recursively convert tuples to lists and Fractions to int or "p/q"."""
    if isinstance(value, Fraction):
        return _json_value(value)
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, dict):
        return {k: json_ready(v) for k, v in value.items()}
    return value


def manifest_to_json(m: RunManifest) -> str:
    doc = {
        "kind": MANIFEST_KIND,
        "version": m.version,
        "command": list(m.command),
        "config": json_ready(m.config),
        "seed": m.seed,
        "input_digests": dict(m.input_digests),
        "timings": {k: float(v) for k, v in m.timings.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


_MANIFEST_KEYS = {"kind", "version", "command", "config", "seed",
                  "input_digests", "timings"}


def parse_manifest(text: str, source: str = "<manifest>") -> RunManifest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    _want_dict(doc, source, "$", _MANIFEST_KEYS)
    for key in sorted(_MANIFEST_KEYS - set(doc)):
        _fail(source, "$", f"missing field {key!r}")
    if doc["kind"] != MANIFEST_KIND:
        _fail(source, "$.kind", f"not a manifest (kind={doc['kind']!r})")
    command = _want_list(doc["command"], source, "$.command")
    if not all(isinstance(t, str) for t in command):
        _fail(source, "$.command", "expected a list of strings")
    if not isinstance(doc["config"], dict):
        _fail(source, "$.config", "expected an object")
    seed = doc["seed"]
    if seed is not None:
        seed = _want_int(seed, source, "$.seed")
    if not isinstance(doc["version"], str):
        _fail(source, "$.version", "expected a string")
    digests = doc["input_digests"]
    if (not isinstance(digests, dict)
            or not all(isinstance(v, str) for v in digests.values())):
        _fail(source, "$.input_digests", "expected string values")
    timings = doc["timings"]
    if not isinstance(timings, dict):
        _fail(source, "$.timings", "expected an object")
    try:
        return RunManifest(tuple(command), doc["config"], seed,
                           doc["version"], dict(digests), dict(timings))
    except ValueError as exc:
        raise FormatError(f"{source}: $: {exc}") from None


def read_manifest(path) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest(fh.read(), source=str(path))


def write_manifest(path, m: RunManifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_to_json(m))
