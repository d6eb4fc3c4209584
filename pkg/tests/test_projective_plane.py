"""Tests for points, lines and conics of P^2(F_q)."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.helpers.FiniteField import field_new
from src.helpers.ProjectivePlane import (
    Conic,
    GeometryError,
    PLine,
    PPoint,
    conic_points,
    congruence_transform,
    hessian,
    line_conic_intersect,
    line_points,
    line_through,
    meet,
    on_conic,
    param_point,
    parametrization,
    plane_points,
    polar_line,
    second_intersection,
)
from src.helpers.Pencil import c_alpha

F13 = field_new(13)


@st.composite
def points_f13(draw):
    coords = draw(st.tuples(*(st.integers(0, 12),) * 3).filter(any))
    return PPoint.of(F13, *coords)


@st.composite
def nonsingular_conics_f13(draw):
    upper = draw(st.tuples(*(st.integers(0, 12),) * 6).filter(any))
    conic = Conic.from_upper(F13, upper)
    if not conic.nonsingular:
        conic = Conic.from_form(F13, xx=1, yy=1, zz=-1)
    return conic


class TestPointsAndLines:
    """Test normalisation, incidence and duality."""

    def test_normalisation(self, f7):
        """Triples are scaled so the first nonzero entry is 1."""
        assert PPoint.of(f7, 0, 3, 6) == PPoint.of(f7, 0, 1, 2)
        assert str(PPoint.of(f7, 2, 4, 6)) == "[1,2,3]"

    def test_zero_triple_raises(self, f7):
        """The all-zero triple is not a projective point."""
        with pytest.raises(GeometryError):
            PPoint.of(f7, 0, 0, 0)

    def test_plane_point_count(self, f7):
        """P^2(F_q) has q² + q + 1 points, listed once each."""
        pts = list(plane_points(f7))
        assert len(pts) == 57
        assert len(set(pts)) == 57

    def test_line_through_and_meet(self, f13):
        """line_through is incident to both points; meet recovers them."""
        P, Q, R = PPoint.of(f13, 1, 2, 3), PPoint.of(f13, 0, 1, 5), PPoint.of(f13, 1, 0, 0)
        L, M = line_through(P, Q), line_through(P, R)
        assert L.contains(P) and L.contains(Q)
        assert meet(L, M) == P

    def test_degenerate_inputs_raise(self, f13):
        """A line through one point or the meet of a line with itself is undefined."""
        P = PPoint.of(f13, 1, 2, 3)
        with pytest.raises(GeometryError):
            line_through(P, P)
        L = PLine.of(f13, 1, 1, 1)
        with pytest.raises(GeometryError):
            meet(L, L)

    def test_line_points(self, f13):
        """A line carries q + 1 points, all incident."""
        L = PLine.of(f13, 0, 0, 1)
        pts = line_points(L)
        assert len(pts) == 14
        assert all(L.contains(P) for P in pts)

    @settings(max_examples=60, deadline=None)
    @given(nonsingular_conics_f13(), points_f13(), points_f13())
    def test_polarity_is_symmetric(self, C, P, Q):
        """Q lies on the polar of P exactly when P lies on the polar of Q."""
        assert polar_line(P, C).contains(Q) == polar_line(Q, C).contains(P)


class TestConics:
    """Test conic construction, points and intersections."""

    def test_hessian_convention(self, f7):
        """Squares carry a factor 2 on the diagonal; cross terms sit off it unchanged."""
        m = hessian(f7, xx=1, yz=3)
        assert m[0][0] == 2 and m[1][2] == 3 and m[2][1] == 3 and m[0][1] == 0

    def test_normalised_upper(self, f7):
        """Scalar multiples give the same conic."""
        A = Conic.from_form(f7, xx=1, yy=1, zz=1)
        B = Conic.from_form(f7, xx=3, yy=3, zz=3)
        assert A == B
        assert A.upper[0] == 1

    def test_asymmetric_matrix_raises(self, f7):
        """Conic matrices must be symmetric."""
        with pytest.raises(GeometryError):
            Conic.from_matrix(f7, [[1, 1, 0], [0, 1, 0], [0, 0, 1]])

    def test_singular_conic(self, f7):
        """xy is a line pair."""
        assert not Conic.from_form(f7, xy=1).nonsingular

    @pytest.mark.parametrize("p, r", [(7, 1), (13, 1), (43, 1), (3, 2), (5, 2)])
    def test_conic_has_q_plus_one_points(self, p, r):
        """Every nonsingular conic has exactly q + 1 rational points."""
        ctx = field_new(p, r)
        for C in (
            Conic.from_form(ctx, xx=1, yy=1, zz=-1),
            Conic.from_form(ctx, xy=1, zz=1),
            Conic.from_form(ctx, xx=1, yy=ctx.nonresidue, zz=1),
        ):
            pts = conic_points(C)
            assert len(pts) == ctx.q + 1
            assert all(on_conic(P, C) for P in pts)

    def test_singular_conic_points_raise(self, f7):
        """Point enumeration needs a nonsingular conic."""
        with pytest.raises(GeometryError):
            conic_points(Conic.from_form(f7, xy=1))

    def test_polar_of_point_on_conic_is_tangent(self, f13):
        """The polar at a point of C meets C only there."""
        C = Conic.from_form(f13, xx=1, yy=1, zz=-1)
        for P in conic_points(C):
            assert line_conic_intersect(polar_line(P, C), C) == [P]

    def test_line_conic_intersection_sizes(self, f13):
        """Every line meets a nonsingular conic in 0, 1 or 2 rational points."""
        C = Conic.from_form(f13, xx=1, yy=1, zz=-1)
        sizes = {len(line_conic_intersect(PLine.of(f13, 1, v, w), C)) for v in range(13) for w in range(13)}
        assert sizes <= {0, 1, 2}
        assert sizes == {0, 1, 2}

    def test_line_on_degenerate_conic(self, f7):
        """A line contained in a line pair returns all of its points."""
        C = Conic.from_form(f7, xy=1)
        assert len(line_conic_intersect(PLine.of(f7, 1, 0, 0), C)) == 8

    def test_second_intersection(self, f43, example_conics):
        """Through a chord the second intersection is the other endpoint."""
        A, _ = example_conics
        P = PPoint.of(f43, 1, 17, 34)
        Q = PPoint.of(f43, 1, 36, 3)
        L = line_through(P, Q)
        assert second_intersection(P, L, A) == Q
        assert second_intersection(Q, L, A) == P

    def test_second_intersection_on_tangent(self, f43, example_conics):
        """On the tangent at P the second intersection is P itself."""
        A, _ = example_conics
        P = PPoint.of(f43, 1, 17, 34)
        assert second_intersection(P, polar_line(P, A), A) == P

    def test_second_intersection_needs_incidence(self, f43, example_conics):
        """P must lie on both the line and the conic."""
        A, _ = example_conics
        with pytest.raises(GeometryError):
            second_intersection(PPoint.of(f43, 1, 1, 1), PLine.of(f43, 1, 0, 0), A)

    def test_congruence_preserves_point_count(self, f13):
        """MᵀCM maps the points of C onto the points of the image via M⁻¹."""
        C = c_alpha(f13, 5)
        M = [[1, 2, 0], [0, 1, 3], [1, 0, 1]]
        image = congruence_transform(C, M)
        assert image.nonsingular
        assert len(conic_points(image)) == 14

    @pytest.mark.parametrize("alpha", [2, 5, 11])
    def test_swapping_y_and_z_reflects_the_pencil(self, alpha):
        """Exchanging y and z maps C_α onto C_{1−α}."""
        swap = [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
        assert congruence_transform(c_alpha(F13, alpha), swap) == c_alpha(F13, 1 - alpha)

    def test_c_alpha_example_points(self, f43, example_conics):
        """[1,17,34], [1,36,3] and [1,24,28] lie on C_11."""
        A, _ = example_conics
        for coords in ((1, 17, 34), (1, 36, 3), (1, 24, 28), (0, 1, 0)):
            assert on_conic(PPoint.of(f43, *coords), A)

    @pytest.mark.parametrize("alpha", [2, 5, 11])
    def test_parametrization_is_bijective(self, alpha):
        """Lines through the base point meet C once more, covering every point exactly once."""
        C = c_alpha(F13, alpha)
        P0, U, V = parametrization(C)
        assert on_conic(P0, C)
        assert not line_through(U, V).contains(P0)
        images = [PPoint(param_point(C, P0, U.coords))]
        for t in range(13):
            X = tuple(v + u * F13(t) for u, v in zip(U.coords, V.coords))
            images.append(PPoint(param_point(C, P0, X)))
        assert len(set(images)) == 14
        assert set(images) == set(conic_points(C))
