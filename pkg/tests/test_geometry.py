import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steklov_trace.errors import InvalidArgument
from steklov_trace.geometry import (BoundarySamples, DiskDomain, Mesh2D, build_disk,
                                    build_polygon_disk_mesh, build_rect_mesh, node_angles,
                                    polygon_param)


def _param_invariants(p):
    assert np.all(np.diff(p.node_arclengths) > 0)
    assert np.all(p.node_arclengths >= 0) and np.all(p.node_arclengths < p.total_length)
    np.testing.assert_allclose(np.einsum("ij,ij->i", p.tangents, p.normals), 0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(p.tangents, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(p.normals, axis=1), 1, atol=1e-12)


def _mesh_invariants(mesh):
    # each boundary edge in exactly one cell, closed positively oriented cycle
    E = mesh.boundary_edges
    assert np.array_equal(E[1:, 0], E[:-1, 1]) and E[-1, 1] == E[0, 0]
    np.testing.assert_allclose(np.linalg.norm(mesh.boundary_normals, axis=1), 1, atol=1e-12)
    V = mesh.vertices
    shoelace = 0.5 * np.sum(V[E[:, 0], 0] * V[E[:, 1], 1] - V[E[:, 1], 0] * V[E[:, 0], 1])
    assert shoelace > 0
    assert np.all(mesh.signed_areas() > 0)
    # outward: the normal points away from the owning cell's centroid
    mid = 0.5 * (V[E[:, 0]] + V[E[:, 1]])
    centroid = V[mesh.cells[mesh.boundary_cells]].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", mid - centroid, mesh.boundary_normals) > 0)
    weighted = (mesh.boundary_normals * mesh.boundary_lengths[:, None]).sum(axis=0)
    np.testing.assert_allclose(weighted, 0, atol=1e-10)


class TestDisk:
    def test_unit_circumference(self):
        _, p = build_disk(1.0, 16)
        assert abs(p.total_length - 2 * np.pi) <= 1e-12

    def test_scaled_circumference(self):
        _, p = build_disk(2.0, 64)
        assert abs(p.total_length - 4 * np.pi) <= 1e-12

    def test_radial_normals(self):
        _, p = build_disk(1.0, 16)
        th = 2 * np.pi * np.arange(16) / 16
        np.testing.assert_allclose(p.normals, np.column_stack([np.cos(th), np.sin(th)]), atol=1e-15)
        np.testing.assert_allclose(node_angles(p), th, atol=1e-14)
        _param_invariants(p)

    @pytest.mark.parametrize("R, n", [(0.0, 16), (-1.0, 16), (1.0, 7)])
    def test_rejects_bad_input(self, R, n):
        with pytest.raises(InvalidArgument):
            build_disk(R, n)

    def test_domain_rejects_nonpositive_radius(self):
        with pytest.raises(InvalidArgument):
            DiskDomain(0.0)


class TestRectMesh:
    def test_single_square(self):
        mesh, p = build_rect_mesh(1, 1, 1, 1, "P1")
        assert mesh.n_cells == 2 and len(mesh.boundary_edges) == 4
        assert abs(p.total_length - 4) <= 1e-15
        assert len(p.vertex_positions) == 4

    def test_hermite_counting(self):
        mesh, _ = build_rect_mesh(1, 1, 2, 2, "C1-rect")
        assert mesh.n_cells == 4 and len(mesh.boundary_edges) == 8

    def test_normals_close_up(self):
        mesh, p = build_rect_mesh(2, 1, 4, 2, "P1")
        _mesh_invariants(mesh)
        _param_invariants(p)
        np.testing.assert_allclose(p.vertex_positions, [0, 2, 3, 5])

    def test_side_ranges_sum_to_perimeter(self):
        _, p = build_rect_mesh(3, 2, 6, 4, "c1rect")
        assert sum(b - a for a, b in p.side_ranges) == 10.0

    def test_zero_subdivisions_rejected(self):
        with pytest.raises(InvalidArgument):
            build_rect_mesh(1, 1, 0, 1, "P1")

    def test_unknown_element(self):
        with pytest.raises(InvalidArgument):
            build_rect_mesh(1, 1, 1, 1, "Q2")

    def test_gauss_rule_integrates_polynomials(self):
        _, p = build_rect_mesh(1, 1, 3, 3, "P1")
        x, y = p.points.T
        # ∮ x^6 ds over the unit square: bottom/top 1/7 each, right side 1
        assert abs(p.integrate(x**6) - (2 / 7 + 1)) <= 1e-13

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.5, 3), st.floats(0.5, 3), st.integers(1, 4))
    def test_refinement_keeps_perimeter(self, lx, ly, n):
        L = [build_rect_mesh(lx, ly, n * f, n * f, "P1")[1].total_length for f in (1, 2, 4)]
        np.testing.assert_allclose(L, 2 * (lx + ly), rtol=1e-14)


class TestPolygonDisk:
    def test_inscribed(self):
        mesh, p = build_polygon_disk_mesh(1.0, 1)
        assert p.total_length < 2 * np.pi

    def test_perimeter_increases_to_circle(self):
        L = [build_polygon_disk_mesh(1.0, r)[1].total_length for r in (1, 2, 3, 4)]
        assert np.all(np.diff(L) > 0) and L[-1] < 2 * np.pi
        assert 2 * np.pi - L[-1] < 2e-3

    def test_valid_mesh(self):
        mesh, p = build_polygon_disk_mesh(1.0, 3)
        _mesh_invariants(mesh)
        _param_invariants(p)


class TestMeshIO:
    def test_round_trip(self, tmp_path):
        mesh, _ = build_rect_mesh(1, 2, 2, 3, "c1rect")
        f = tmp_path / "m.json"
        mesh.to_json(f)
        back = Mesh2D.from_json(f)
        assert back.element_type == mesh.element_type
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.boundary_edges, mesh.boundary_edges)

    def test_corrupted_file(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        with pytest.raises(InvalidArgument):
            Mesh2D.from_json(f)

    def test_missing_key(self):
        with pytest.raises(InvalidArgument):
            Mesh2D.from_dict({"vertices": [[0, 0]]})

    def test_degenerate_triangle(self):
        with pytest.raises(InvalidArgument):
            Mesh2D([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], "p1")


class TestPolygonParam:
    def test_nodes_avoid_corners(self):
        p = polygon_param([[0, 0], [1, 0], [1, 1], [0, 1]], 8)
        _param_invariants(p)
        assert not np.any(np.isin(p.node_arclengths, p.vertex_positions))
        np.testing.assert_allclose(p.normals[p.node_side == 0], [[0, -1]] * 8)

    def test_clockwise_rejected(self):
        with pytest.raises(InvalidArgument):
            polygon_param([[0, 0], [0, 1], [1, 1], [1, 0]], 4)


class TestSamples:
    def test_length_checked(self):
        _, p = build_disk(1.0, 16)
        with pytest.raises(InvalidArgument):
            BoundarySamples(p, np.zeros(15))

    def test_arithmetic(self):
        _, p = build_disk(1.0, 16)
        a = BoundarySamples.from_function(p, lambda x, y: x)
        b = BoundarySamples.from_function(p, lambda x, y: y)
        np.testing.assert_allclose((2 * a - b).values, 2 * p.points[:, 0] - p.points[:, 1])

    def test_decimate_and_reverse_preserve_length(self):
        _, p = build_disk(1.0, 64)
        for q in (p.decimate(4), p.reversed()):
            assert abs(q.total_length - p.total_length) <= 1e-14
            assert abs(q.weights.sum() - p.total_length) <= 1e-12
