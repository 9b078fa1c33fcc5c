import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartankit import (
    BergmannPower,
    DomainError,
    Element,
    MobiusMap,
    SingularityError,
    TripleSpace,
    ValidationError,
    bergmann,
    bergmann_power,
    gab_ratio,
    jb_norm,
    jb_operator_norm,
    kobayashi_ball_contains,
    kobayashi_distance,
    mobius_apply,
    mobius_inverse_apply,
    random_element,
    spectral_decompose,
)
from cartankit.bergmann import bergmann_apply, gab_operator, kobayashi_ball_point, resolvent_apply
from cartankit.linop import LinearOp

from conftest import SPACES, bidisc, disc, mat

# frozen at 30 digits with mpmath
ATANH_HALF = 0.549306144334054845697622618461


def _psd_power(h, t):
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    return (vecs * vals ** t) @ vecs.conj().T


def harris_bergmann(a, b, x):
    """B(a, b) x = (1 - a b*) x (1 - b* a) for rectangular matrices."""
    s, r = a.shape
    return (np.eye(s) - a @ b.conj().T) @ x @ (np.eye(r) - b.conj().T @ a)


def harris_mobius(a, z):
    """(1 - a a*)^{-1/2} (z + a) (1 + a* z)^{-1} (1 - a* a)^{1/2}."""
    s, r = a.shape
    left = _psd_power(np.eye(s) - a @ a.conj().T, -0.5)
    right = _psd_power(np.eye(r) - a.conj().T @ a, 0.5)
    return left @ (z + a) @ np.linalg.inv(np.eye(r) + a.conj().T @ z) @ right


def _rand_contraction(rng, shape, radius=0.9):
    m = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return radius * rng.uniform(0.1, 1) * m / np.linalg.norm(m, 2)


# -- Bergmann operators ------------------------------------------------------


def test_disc_values():
    assert bergmann(disc(0.5), disc(0.5)).matrix[0, 0] == pytest.approx(0.5625, abs=1e-15)
    assert bergmann_power(disc(0.6), -0.5).matrix[0, 0] == pytest.approx(1.5625, abs=1e-14)
    # B(a, b) on the disc is multiplication by (1 - a conj(b))^2
    a, b = 0.3 + 0.2j, -0.1 + 0.5j
    assert bergmann(disc(a), disc(b)).matrix[0, 0] == pytest.approx((1 - a * np.conj(b)) ** 2, abs=1e-15)


@pytest.mark.parametrize("shape", [(2, 2), (3, 2), (2, 4), (4, 4)])
def test_bergmann_matches_harris_form(shape, rng):
    sp = TripleSpace.parse(f"rect:{shape[0]}x{shape[1]}")
    for _ in range(5):
        a, b, x = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape) for _ in range(3))
        got = bergmann_apply(mat(sp, a), mat(sp, b), mat(sp, x)).blocks[0]
        assert np.allclose(got, harris_bergmann(a, b, x), atol=1e-12)


def test_bergmann_power_methods_agree(space):
    for seed in range(4):
        a = random_element(space, seed, 0.9)
        for t in (1, -1, 0.5, -0.5):
            ref = bergmann_power(a, t, "dense").matrix
            for method in ("spectral", "closed"):
                assert np.abs(bergmann_power(a, t, method).matrix - ref).max() <= 1e-10, (method, t)
        assert np.allclose(bergmann_power(a, 1).matrix, bergmann(a, a).matrix, atol=1e-12)


def test_bergmann_power_at_zero_is_identity(space):
    for t in (1, -0.5):
        assert np.allclose(bergmann_power(space.zero(), t).matrix, np.eye(space.dim))


def test_bergmann_power_guards():
    sp = TripleSpace.parse("rect:2x2")
    u = mat(sp, np.diag([1.0, 0.3]))
    with pytest.raises(SingularityError):
        bergmann_power(u, -0.5)
    with pytest.raises(SingularityError):
        BergmannPower(u, -1)
    with pytest.raises(ValidationError):
        bergmann_power(0.5 * u, 2)
    with pytest.raises(ValueError):
        bergmann_power(0.5 * u, 0.5, method="taylor")
    # B(u, u)^{1/2} is fine on the boundary and kills the Peirce-2 part of e_1
    root = bergmann_power(u, 0.5)
    assert abs(root.matrix[0, 0]) < 1e-12


def test_bergmann_power_positive_definite(space):
    a = random_element(space, 5, 0.95)
    m = bergmann_power(a, -0.5).matrix
    assert np.allclose(m, m.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(m).min() >= 1.0 - 1e-12


# -- Moebius maps ------------------------------------------------------------


def test_disc_mobius():
    assert mobius_apply(disc(0.5), disc(0.5)).coords[0] == pytest.approx(0.8, abs=1e-15)
    a, z = 0.3 - 0.4j, 0.2 + 0.7j
    want = (z + a) / (1 + np.conj(a) * z)
    assert mobius_apply(disc(a), disc(z)).coords[0] == pytest.approx(want, abs=1e-15)


def test_disc_iterates_frozen():
    # g_{1/2}^n(0) = (3^n - 1) / (3^n + 1)
    want = [0.0, 0.5, 0.8, 0.928571428571428571, 0.975609756097560976, 0.991803278688524590]
    z = disc(0.0)
    for w in want:
        assert z.coords[0].real == pytest.approx(w, abs=1e-15)
        z = mobius_apply(disc(0.5), z)


@pytest.mark.parametrize("shape", [(2, 2), (3, 2), (2, 3), (4, 4)])
def test_mobius_matches_harris_form(shape, rng):
    sp = TripleSpace.parse(f"rect:{shape[0]}x{shape[1]}")
    for _ in range(5):
        a, z = _rand_contraction(rng, shape), _rand_contraction(rng, shape)
        got = mobius_apply(mat(sp, a), mat(sp, z)).blocks[0]
        assert np.allclose(got, harris_mobius(a, z), atol=1e-12)


def test_mobius_sends_zero_to_a(space):
    a = random_element(space, 1, 0.9)
    assert mobius_apply(a, space.zero()).allclose(a, 1e-14)
    assert mobius_apply(a, -a).allclose(space.zero(), 1e-12)


def test_mobius_extends_to_boundary(space):
    a = random_element(space, 1, 0.9)
    e = spectral_decompose(random_element(space, 2)).frame().sum()
    assert jb_norm(mobius_apply(a, e)) == pytest.approx(1.0, abs=1e-10)


def test_mobius_guards():
    with pytest.raises(DomainError):
        MobiusMap(disc(1.0))
    with pytest.raises(DomainError):
        mobius_apply(disc(0.5), disc(1.5))


def test_resolvent():
    assert resolvent_apply(disc(0.5), disc(0.5)).coords[0] == pytest.approx(0.4)
    with pytest.raises(SingularityError):
        resolvent_apply(disc(1.0), disc(-1.0))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SPACES), st.integers(0, 2**32 - 1))
def test_mobius_round_trip_and_isometry(text, seed):
    sp = TripleSpace.parse(text)
    rng = np.random.default_rng(seed)
    a, x, y = (random_element(sp, rng, 0.9) for _ in range(3))
    assert mobius_inverse_apply(a, mobius_apply(a, x)).allclose(x, 1e-9)
    d0 = kobayashi_distance(x, y)
    d1 = kobayashi_distance(mobius_apply(a, x), mobius_apply(a, y))
    assert d1 == pytest.approx(d0, abs=1e-8)


# -- Kobayashi distance ------------------------------------------------------


def test_kobayashi_disc_frozen():
    assert kobayashi_distance(disc(0), disc(0.5)) == pytest.approx(ATANH_HALF, abs=1e-15)
    x, y = 0.3 + 0.1j, -0.2 + 0.5j
    r = abs((y - x) / (1 - np.conj(x) * y))
    assert kobayashi_distance(disc(x), disc(y)) == pytest.approx(math.atanh(r), abs=1e-14)


def test_kobayashi_bidisc_is_max():
    d = kobayashi_distance(bidisc(0, 0), bidisc(0.5, 0.2))
    assert d == pytest.approx(ATANH_HALF, abs=1e-15)


def test_kobayashi_from_origin_is_atanh_norm(space):
    for seed in range(5):
        x = random_element(space, seed, 0.95)
        assert kobayashi_distance(space.zero(), x) == pytest.approx(math.atanh(jb_norm(x)), abs=1e-12)


def test_kobayashi_metric_properties(space):
    rng = np.random.default_rng(3)
    for _ in range(5):
        x, y, z = (random_element(space, rng, 0.9) for _ in range(3))
        assert kobayashi_distance(x, x) == pytest.approx(0.0, abs=1e-7)
        assert kobayashi_distance(x, y) == pytest.approx(kobayashi_distance(y, x), abs=1e-9)
        assert kobayashi_distance(x, z) <= kobayashi_distance(x, y) + kobayashi_distance(y, z) + 1e-9


def test_kobayashi_guards():
    with pytest.raises(DomainError):
        kobayashi_distance(disc(1.0), disc(0))
    with pytest.raises(DomainError):
        kobayashi_ball_contains(disc(0), 1.0, disc(0))


def test_kobayashi_ball():
    assert kobayashi_ball_contains(disc(0), 0.5, disc(0.49))
    assert not kobayashi_ball_contains(disc(0), 0.5, disc(0.51))


def test_kobayashi_ball_point_covers_ball(space):
    rng = np.random.default_rng(0)
    z = random_element(space, rng, 0.8)
    r = 0.6
    for _ in range(5):
        w = random_element(space, rng, 0.99)
        p = kobayashi_ball_point(z, r, w)
        assert kobayashi_ball_contains(z, r, p)


# -- JB*-operator norms ------------------------------------------------------


def test_operator_norm_of_identity_and_scalars(space):
    assert jb_operator_norm(LinearOp.identity(space)) == pytest.approx(1.0, abs=1e-15)
    assert jb_operator_norm(LinearOp(space, 0.3j * np.eye(space.dim))) == pytest.approx(0.3, abs=1e-15)


def test_operator_norm_transpose_on_matrices():
    # transpose is isometric for the operator norm although it is not a triple map
    sp = TripleSpace.parse("rect:3x3")
    op = LinearOp.from_function(sp, lambda x: Element(sp, [x.blocks[0].T]))
    assert jb_operator_norm(op) == pytest.approx(1.0, abs=1e-12)


def test_operator_norm_lower_bound_vs_samples(space):
    rng = np.random.default_rng(2)
    m = rng.standard_normal((space.dim, space.dim)) + 1j * rng.standard_normal((space.dim, space.dim))
    op = LinearOp(space, m)
    est = jb_operator_norm(op)
    for _ in range(200):
        x = random_element(space, rng, 1.0, exact_norm=True)
        assert jb_norm(op(x)) <= est * (1 + 1e-9)


def test_baa_identity(space):
    for seed in range(3):
        a = random_element(space, seed, 0.9)
        n = jb_norm(a)
        est = jb_operator_norm(BergmannPower(a, -0.5).as_linop())
        assert est == pytest.approx(1 / (1 - n * n), abs=1e-6)


def test_gab_identity(space):
    rng = np.random.default_rng(4)
    for _ in range(3):
        a, z = random_element(space, rng, 0.9), random_element(space, rng, 0.9)
        m = jb_norm(mobius_inverse_apply(z, a))
        assert gab_ratio(a, z) == pytest.approx(1 / (1 - m * m), rel=1e-6)


def test_gab_disc_closed_form():
    a, z = 0.4 + 0.3j, -0.5j
    op = gab_operator(disc(a), disc(z))
    want = abs(1 - a * np.conj(z)) ** 2 / ((1 - abs(a) ** 2) * (1 - abs(z) ** 2))
    assert abs(op.matrix[0, 0]) == pytest.approx(want, rel=1e-14)


def test_resolvent_matches_dense_solve(space):
    from cartankit import box_operator

    rng = np.random.default_rng(9)
    for _ in range(5):
        z, a = random_element(space, rng, 1.0), random_element(space, rng, 0.95)
        m = np.eye(space.dim) + box_operator(z, a).matrix
        want = np.linalg.solve(m, z.coords)
        assert np.allclose(resolvent_apply(z, a).coords, want, atol=1e-12)
