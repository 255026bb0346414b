"""Integer kernels, conformally minimal vectors, and augmentation."""

import itertools
import random

import pytest

from oracles import certified_graver, feasible_points, rational_rank, solve_rational
from quip.errors import ResourceLimitError
from quip.lattices import (
    GraverBasis,
    conformal_leq,
    graver_augment,
    integer_kernel_basis,
    lawrence_graver,
    minimal_filter,
    pottier,
    sign_compatible,
    vector_normal_form,
)


def test_sign_and_conformal_order():
    assert sign_compatible((1, -2, 0), (2, -1, 3))
    assert not sign_compatible((1, 1), (1, -1))
    assert conformal_leq((1, -2, 0), (2, -2, 0))
    assert not conformal_leq((2, -2, 0), (1, -2, 0))
    assert not conformal_leq((1, 0), (-2, 0))
    assert conformal_leq((0, 0), (5, -7))


def test_kernel_basis_spans_the_integer_kernel():
    rng = random.Random(31)
    for trial in range(25):
        m = rng.randint(1, 3)
        n = rng.randint(m, m + 3)
        A = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(m)]
        basis = integer_kernel_basis(A)
        for v in basis:
            assert any(v)
            for row in A:
                assert sum(a * x for a, x in zip(row, v)) == 0
        assert len(basis) == n - rational_rank(A)
        # saturation: small integer kernel vectors have integer coordinates
        # in the basis, not just rational ones
        for v in itertools.product(range(-2, 3), repeat=n):
            if not any(v):
                continue
            if any(sum(a * x for a, x in zip(row, v)) for row in A):
                continue
            y = solve_rational(basis, v)
            assert y is not None
            assert all(c.denominator == 1 for c in y)


def test_kernel_basis_simple_cases():
    assert integer_kernel_basis([[1, 1]]) == [(1, -1)]
    assert integer_kernel_basis([[1, 0], [0, 1]]) == []
    assert integer_kernel_basis([[2, 4]]) == [(2, -1)]


def test_one_row_graver_frozen():
    G = pottier([[1, 2, 1]])
    assert not G.partial
    assert G.A == ((1, 2, 1),)
    expected = {(1, 0, -1), (0, 1, -2), (2, -1, 0), (1, -1, 1)}
    expected |= {tuple(-x for x in v) for v in expected}
    assert G.as_set() == expected


def test_trivial_and_single_kernel_cases():
    assert pottier([[1, 0], [0, 1]]).as_set() == set()
    assert pottier([[1, 0]]).as_set() == {(0, 1), (0, -1)}


def test_pottier_matches_enumeration():
    rng = random.Random(88)
    checked = 0
    while checked < 12:
        m = rng.randint(1, 2)
        n = rng.randint(3, 4)
        A = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(m)]
        if not any(any(row) for row in A):
            continue
        assert pottier(A).as_set() == certified_graver(A), f"A={A}"
        checked += 1


def test_lawrence_lifting_agrees_with_completion():
    rng = random.Random(99)
    cases = [[[1, 2, 1]], [[1, 1, 1], [0, 1, 2]]]
    while len(cases) < 8:
        m = rng.randint(1, 2)
        n = 3
        A = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(m)]
        if any(any(row) for row in A):
            cases.append(A)
    for A in cases:
        assert lawrence_graver(A).as_set() == pottier(A).as_set(), f"A={A}"


def test_sign_restriction_is_only_an_optimization():
    rng = random.Random(17)
    for trial in range(8):
        m = rng.randint(1, 2)
        n = rng.randint(3, 4)
        A = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(m)]
        fast = pottier(A, sign_restrict=True)
        slow = pottier(A, sign_restrict=False)
        assert fast.as_set() == slow.as_set()


def test_normal_form_reduces_lattice_vectors_to_zero():
    rng = random.Random(55)
    A = [[1, 1, 1, 1], [0, 1, 2, 3]]
    G = pottier(A)
    basis = integer_kernel_basis(A)
    for trial in range(40):
        coeffs = [rng.randint(-5, 5) for _ in basis]
        v = tuple(sum(c * g[i] for c, g in zip(coeffs, basis))
                  for i in range(4))
        assert vector_normal_form(v, G.elements) == (0, 0, 0, 0)


def test_normal_form_residual_stays_in_coset():
    rng = random.Random(56)
    A = [[1, 2, 1]]
    G = pottier(A)
    basis = integer_kernel_basis(A)
    for trial in range(30):
        v = tuple(rng.randint(-6, 6) for _ in range(3))
        r = vector_normal_form(v, G.elements)
        diff = tuple(a - b for a, b in zip(v, r))
        y = solve_rational(basis, diff)
        assert y is not None
        assert all(c.denominator == 1 for c in y)
        # nothing in the basis can shrink the residual further
        for g in G.elements:
            assert not conformal_leq(g, r)


def test_normal_form_fixed_point_when_nothing_applies():
    assert vector_normal_form((1, 1), [(1, -1), (-1, 1)]) == (1, 1)
    assert vector_normal_form((3, -3), [(1, -1)]) == (0, 0)


def test_minimal_filter():
    out = minimal_filter([(2, 0), (1, 0), (4, 0), (1, 1)])
    assert out == [(-1, 0), (1, 0)]
    out = minimal_filter([(2, 0), (1, 0), (4, 0), (1, 1)], sign_close=False)
    assert out == [(1, 0)]
    # multiples collapse onto the primitive vector
    assert minimal_filter([(3, -3), (1, -1)], sign_close=False) == [(1, -1)]


def test_pottier_cap():
    with pytest.raises(ResourceLimitError) as ei:
        pottier([[1, 2, 1]], max_elements=2)
    assert ei.value.limit == "max_elements"


def test_augmentation_reaches_enumerated_optimum():
    A = [[1, 1, 1, 1], [0, 1, 2, 3]]
    b = (10, 15)
    G = pottier(A)
    start = (1, 5, 2, 2)
    assert all(sum(A[i][j] * start[j] for j in range(4)) == b[i] for i in range(2))

    def separable(x):
        return sum((xi - 2) ** 2 for xi in x)

    res = graver_augment(separable, (0,) * 4, (10,) * 4, start, G)
    points = feasible_points(A, b, [(0, 10)] * 4)
    best = min(separable(p) for p in points)
    assert res.value == separable(res.x) == best
    assert all(sum(A[i][j] * res.x[j] for j in range(4)) == b[i] for i in range(2))
    # trajectory strictly decreases and matches the move count
    assert all(u > v for u, v in zip(res.trajectory, res.trajectory[1:]))
    assert len(res.moves) == len(res.trajectory) - 1

    greedy = graver_augment(separable, (0,) * 4, (10,) * 4, start, G,
                            strategy="greedy")
    assert greedy.value == best


def test_augmentation_linear_objective():
    A = [[1, 1, 1, 1], [0, 1, 2, 3]]
    b = (10, 15)
    G = pottier(A)
    c = (1, 2, 3, 4)

    def cost(x):
        return sum(ci * xi for ci, xi in zip(c, x))

    res = graver_augment(cost, (0,) * 4, (10,) * 4, (1, 5, 2, 2), G)
    best = min(cost(p) for p in feasible_points(A, b, [(0, 10)] * 4))
    assert res.value == best


def test_augmentation_respects_bounds_and_validates():
    G = GraverBasis.from_vectors([(1, -1), (-1, 1)])

    def cost(x):
        return x[0]

    res = graver_augment(cost, (0, 0), (3, 3), (2, 1), G)
    assert res.x == (0, 3)
    assert res.value == 0
    with pytest.raises(ValueError):
        graver_augment(cost, (0, 0), (3, 3), (4, 0), G)
    with pytest.raises(ValueError):
        graver_augment(cost, (0, 0), (3, 3), (2, 1), G, strategy="sideways")
    # a plain list of directions is accepted too
    res2 = graver_augment(cost, (0, 0), (3, 3), (2, 1), [(1, -1), (-1, 1)])
    assert res2.x == (0, 3)
