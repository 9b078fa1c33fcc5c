import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartankit import (
    Element,
    Frame,
    SpectralDecomp,
    TripleSpace,
    ValidationError,
    are_orthogonal,
    is_tripotent,
    jb_norm,
    joint_peirce_projection,
    peirce_projection,
    random_element,
    refine_to_minimal_frame,
    spectral_decompose,
    triple_product,
)
from cartankit.peirce import (
    coarse_spectral_decompose,
    is_minimal,
    joint_peirce_projections,
    peirce_projections,
    quadratic_rank,
    spin_frame,
)

from conftest import SPACES, mat


def test_rect_decomposition_matches_svd(rng):
    sp = TripleSpace.parse("rect:3x2")
    m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    d = spectral_decompose(mat(sp, m))
    assert np.allclose(d.coefficients, np.linalg.svd(m, compute_uv=False), atol=1e-13)


def test_decomposition_invariants(space):
    for seed in range(5):
        z = random_element(space, seed)
        d = spectral_decompose(z)
        assert d.validate() == []
        assert len(d) <= space.rank
        assert all(is_minimal(e) for e in d.tripotents)
        assert list(d.coefficients) == sorted(d.coefficients, reverse=True)


def test_factor_order_groups_summands():
    sp = TripleSpace.parse("disc+rect:2x2")
    z = Element(sp, [np.array([[0.1]]), np.diag([0.9, 0.5])])
    d = spectral_decompose(z, order="factor")
    assert np.allclose(d.coefficients, [0.1, 0.9, 0.5])
    assert np.allclose(spectral_decompose(z).coefficients, [0.9, 0.5, 0.1])
    with pytest.raises(ValueError):
        spectral_decompose(z, order="nope")


def test_zero_has_empty_decomposition(space):
    assert len(spectral_decompose(space.zero())) == 0


def test_sym_takagi_and_antisym_pairs(rng):
    sp = TripleSpace.parse("sym:3")
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    d = spectral_decompose(Element(sp, [m]))
    assert np.allclose(d.coefficients, np.linalg.svd((m + m.T) / 2, compute_uv=False), atol=1e-12)
    sp = TripleSpace.parse("antisym:4")
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = (a - a.T) / 2
    d = spectral_decompose(Element(sp, [a]))
    # singular values of an antisymmetric matrix come in pairs
    s = np.linalg.svd(a, compute_uv=False)
    assert np.allclose(d.coefficients, s[::2], atol=1e-12)


def test_spin_frame_and_coefficients(rng):
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    e1, e2, a1, a2 = spin_frame(z)
    assert np.allclose(a1 * e1 + a2 * e2, z, atol=1e-13)
    s = np.vdot(z, z).real
    q = abs(z @ z)
    assert a1 == pytest.approx(math.sqrt((s + math.sqrt(s * s - q * q)) / 2))
    assert a2 == pytest.approx(math.sqrt(max(0.0, (s - math.sqrt(s * s - q * q)) / 2)), abs=1e-12)


def test_coarse_decomposition_clusters_equal_coefficients():
    sp = TripleSpace.parse("rect:3x3")
    z = mat(sp, np.diag([0.5, 0.5, 0.2]))
    d = coarse_spectral_decompose(z)
    assert np.allclose(d.coefficients, [0.5, 0.2])
    assert quadratic_rank(d.tripotents[0]) > 1
    fine = refine_to_minimal_frame(d)
    assert np.allclose(fine.coefficients, [0.5, 0.5, 0.2])
    assert fine.validate() == []


def test_quadratic_rank_values():
    sp = TripleSpace.parse("rect:3x3")
    assert quadratic_rank(mat(sp, np.diag([1, 0, 0]))) == 1
    assert quadratic_rank(mat(sp, np.diag([1, 1, 0]))) == 4
    assert quadratic_rank(sp.zero()) == 0
    sp = TripleSpace.parse("spin:4")
    e = Element(sp, [np.array([1, 1j, 0, 0]) / math.sqrt(2)])
    assert is_tripotent(e) and quadratic_rank(e) == 1
    u = Element(sp, [np.array([math.sqrt(2), 0, 0, 0])])
    # a real unit vector is a maximal (rank two) tripotent
    assert is_tripotent(u) and quadratic_rank(u) == sp.dim


def test_peirce_projection_eigenvalues(space):
    d = spectral_decompose(random_element(space, 3))
    e = d.tripotents[0]
    p0, p1, p2 = peirce_projections(e)
    ee = triple_product  # box action of e□e on a vector
    x = random_element(space, 4)
    for p, lam in ((p0, 0.0), (p1, 0.5), (p2, 1.0)):
        y = p(x)
        assert jb_norm(ee(e, e, y) - lam * y) <= 1e-12
        assert np.allclose((p @ p).matrix, p.matrix, atol=1e-12)
    assert np.allclose((p0 + p1 + p2).matrix, np.eye(space.dim), atol=1e-12)
    with pytest.raises(ValueError):
        peirce_projection(e, 3)
    with pytest.raises(ValidationError):
        peirce_projections(0.5 * e)


def test_peirce_of_maximal_disc_tripotent():
    sp = TripleSpace.parse("disc")
    one = Element.from_coords(sp, [1.0])
    p0, p1, p2 = peirce_projections(one)
    assert p2.matrix[0, 0] == pytest.approx(1.0)
    assert abs(p0.matrix[0, 0]) < 1e-15 and abs(p1.matrix[0, 0]) < 1e-15


def test_joint_projections_are_a_resolution_of_identity(space):
    fr = spectral_decompose(random_element(space, 8, 1.0, exact_norm=True)).frame()
    ps = joint_peirce_projections(fr)
    total = sum(p.matrix for p in ps.values())
    assert np.allclose(total, np.eye(space.dim), atol=1e-10)
    keys = list(ps)
    for k1, k2 in itertools.combinations(keys, 2):
        assert np.abs(ps[k1].matrix @ ps[k2].matrix).max() < 1e-10
    for i, e in enumerate(fr.tripotents, start=1):
        assert joint_peirce_projection(fr, i, i)(e).allclose(e, 1e-12)
    with pytest.raises(ValidationError):
        joint_peirce_projection(fr, 0, len(fr) + 1)


def test_rect_joint_spaces_are_matrix_blocks():
    # frame E_11, E_22 in 3x3 matrices: V_12 holds the (1,2),(2,1) entries
    sp = TripleSpace.parse("rect:3x3")
    e1 = mat(sp, np.diag([1, 0, 0]))
    e2 = mat(sp, np.diag([0, 1, 0]))
    fr = Frame((e1, e2))
    x = mat(sp, np.arange(9).reshape(3, 3))
    p12 = joint_peirce_projection(fr, 1, 2)(x).blocks[0]
    assert np.allclose(p12, [[0, 1, 0], [3, 0, 0], [0, 0, 0]])
    p00 = joint_peirce_projection(fr, 0, 0)(x).blocks[0]
    assert np.allclose(p00, [[0, 0, 0], [0, 0, 0], [0, 0, 8]])
    p01 = joint_peirce_projection(fr, 0, 1)(x).blocks[0]
    assert np.allclose(p01, [[0, 0, 2], [0, 0, 0], [6, 0, 0]])


def test_frame_validation():
    sp = TripleSpace.parse("rect:2x2")
    e = mat(sp, np.diag([1, 0]))
    Frame((e, mat(sp, np.diag([0, 1])))).validate()
    with pytest.raises(ValidationError):
        Frame((e, mat(sp, [[0, 1], [0, 0]]))).validate()
    with pytest.raises(ValidationError):
        Frame((mat(sp, np.eye(2)),)).validate()
    with pytest.raises(ValidationError):
        joint_peirce_projections([e, e])


def test_decomposition_serialisation(space):
    d = spectral_decompose(random_element(space, 2))
    back = SpectralDecomp.from_dict(d.to_dict())
    assert np.allclose(back.coefficients, d.coefficients)
    assert back.reconstruct().allclose(d.source, 1e-12)


def test_non_finite_input_rejected():
    from cartankit import DecompositionError

    sp = TripleSpace.parse("rect:2x2")
    with pytest.raises(DecompositionError):
        spectral_decompose(mat(sp, [[np.nan, 0], [0, 0]]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SPACES), st.integers(0, 2**32 - 1), st.floats(0.01, 1.0))
def test_decomposition_reconstructs(text, seed, radius):
    sp = TripleSpace.parse(text)
    z = random_element(sp, seed, radius)
    d = spectral_decompose(z)
    assert d.reconstruct().allclose(z, 1e-12 * max(1.0, jb_norm(z)))
    assert d.coefficients[0] == pytest.approx(jb_norm(z), abs=1e-12)
    for i, j in itertools.combinations(range(len(d)), 2):
        assert are_orthogonal(d.tripotents[i], d.tripotents[j])
