import numpy as np
import pytest

from rdsplit import (
    Field,
    FaceField,
    Grid,
    InvalidInput,
    average_to_faces,
    divergence,
    face_inner_product,
    gradient,
    inner_product,
    laplacian,
    read_field_csv,
    weighted_divgrad,
    write_field_csv,
)


def test_grid_basics():
    g = Grid(dim=2, n0=8, lower=(-1.0, -1.0), upper=(1.0, 1.0))
    assert g.h == 0.25
    assert g.shape == (8, 8)
    assert g.n_cells == 64
    assert g.cell_volume == 0.0625
    x = g.axis_centers(0)
    assert x[0] == -1.0 + 0.125
    assert x[-1] == 1.0 - 0.125
    X, Y = g.centers()
    assert X.shape == (8, 8)
    # ij indexing: first index walks x
    assert np.all(X[:, 0] == x)
    assert np.all(Y[0, :] == g.axis_centers(1))


def test_grid_scalar_bounds_broadcast():
    g = Grid(dim=2, n0=4, lower=0.0, upper=2.0)
    assert g.lower == (0.0, 0.0)
    assert g.upper == (2.0, 2.0)


def test_grid_rejects_bad_input():
    with pytest.raises(InvalidInput):
        Grid(dim=3, n0=4)
    with pytest.raises(InvalidInput):
        Grid(dim=1, n0=0)
    with pytest.raises(InvalidInput):
        Grid(dim=1, n0=4, lower=1.0, upper=0.0)
    with pytest.raises(InvalidInput):
        Grid(dim=2, n0=4, lower=(0.0, 0.0), upper=(1.0, 2.0))  # unequal spacing
    with pytest.raises(InvalidInput):
        Grid(dim=2, n0=4, lower=(0.0,), upper=(1.0,))


def test_field_validation():
    g = Grid(dim=1, n0=4)
    f = Field(g, [1.0, 2.0, 3.0, 4.0])
    assert f.values.shape == (4,)
    with pytest.raises(InvalidInput):
        Field(g, [1.0, 2.0])
    with pytest.raises(InvalidInput):
        Field(g, [1.0, 2.0, np.nan, 4.0])
    f2 = Field(Grid(dim=2, n0=2), np.arange(4.0))  # flat input reshapes
    assert f2.values.shape == (2, 2)


def test_laplacian_1d_hand_computed():
    # unit box, n0=4, h=1/4: lap(e_0) = 16*(-2, 1, 0, 1)
    g = Grid(dim=1, n0=4)
    f = Field(g, [1.0, 0.0, 0.0, 0.0])
    np.testing.assert_array_equal(laplacian(f).values, [-32.0, 16.0, 0.0, 16.0])


def test_gradient_divergence_adjoint():
    """Summation by parts: <div q, f> == -sum_ax <q_ax, grad_ax f>, exactly."""
    rng = np.random.default_rng(3)
    for dim in (1, 2):
        g = Grid(dim=dim, n0=9, lower=-0.5, upper=1.7)
        f = Field(g, rng.standard_normal(g.shape))
        qs = [FaceField(g, ax, rng.standard_normal(g.shape)) for ax in range(dim)]
        lhs = inner_product(divergence(qs), f)
        rhs = -sum(face_inner_product(q, gradient(f, q.axis)) for q in qs)
        assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(lhs))


def test_divergence_checks_flux_set():
    g = Grid(dim=2, n0=3)
    q0 = FaceField(g, 0, np.ones(g.shape))
    with pytest.raises(InvalidInput):
        divergence([q0])
    with pytest.raises(InvalidInput):
        divergence([q0, q0])
    with pytest.raises(InvalidInput):
        divergence([])


def test_laplacian_annihilates_constants_and_conserves_mass():
    rng = np.random.default_rng(11)
    g = Grid(dim=2, n0=16, lower=(-1.0, -1.0), upper=(1.0, 1.0))
    assert np.all(laplacian(Field.constant(g, 3.7)).values == 0.0)
    f = Field(g, rng.uniform(0.1, 2.0, g.shape))
    assert abs(np.sum(laplacian(f).values)) <= 1e-12 * np.sum(np.abs(f.values)) / g.h ** 2


def test_laplacian_second_order_on_smooth_data():
    errs = []
    for n0 in (32, 64):
        g = Grid(dim=1, n0=n0)
        f = Field.from_function(g, lambda x: np.sin(2 * np.pi * x))
        exact = -(2 * np.pi) ** 2 * f.values
        errs.append(np.max(np.abs(laplacian(f).values - exact)))
    order = np.log2(errs[0] / errs[1])
    assert 1.9 <= order <= 2.1


def test_average_to_faces_midpoint():
    g = Grid(dim=1, n0=4)
    f = Field(g, [1.0, 3.0, 5.0, 7.0])
    faces = average_to_faces(f, 0)
    np.testing.assert_array_equal(faces.values, [2.0, 4.0, 6.0, 4.0])  # wraps at the end


def test_weighted_divgrad_quadratic_form_nonpositive():
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = Grid(dim=2, n0=7)
        f = Field(g, rng.standard_normal(g.shape))
        ws = [FaceField(g, ax, rng.uniform(0.0, 2.0, g.shape)) for ax in range(2)]
        form = inner_product(weighted_divgrad(ws, f), f)
        assert form <= 1e-12


def test_weighted_divgrad_unit_weights_is_laplacian():
    rng = np.random.default_rng(6)
    g = Grid(dim=2, n0=6)
    f = Field(g, rng.standard_normal(g.shape))
    ws = [FaceField(g, ax, np.ones(g.shape)) for ax in range(2)]
    np.testing.assert_allclose(weighted_divgrad(ws, f).values, laplacian(f).values,
                               rtol=0, atol=1e-14)


def test_field_csv_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(9)
    for dim in (1, 2):
        g = Grid(dim=dim, n0=5, lower=-1.25, upper=0.75)
        f = Field(g, rng.uniform(1e-8, 1e3, g.shape))
        p = tmp_path / f"f{dim}.csv"
        write_field_csv(f, p)
        back = read_field_csv(p)
        assert back.grid == g
        np.testing.assert_array_equal(back.values, f.values)


def test_read_field_csv_rejects_missing_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,0.5,1.0\n")
    with pytest.raises(InvalidInput):
        read_field_csv(p)


def test_inner_product_requires_same_grid():
    f = Field.constant(Grid(dim=1, n0=4), 1.0)
    g = Field.constant(Grid(dim=1, n0=8), 1.0)
    with pytest.raises(InvalidInput):
        inner_product(f, g)
