import numpy as np
import pytest

from singforms.errors import InvalidArgumentError, SupportOverflowError
from singforms.field import (
    ExponentTuple,
    Grid,
    SampledField,
    bump_field,
    convolve,
    dilate,
    field_from_closure,
    indicator_field,
    load_field_csv,
    lp_norm,
    save_field_csv,
    segment_mean,
    translate,
)


@pytest.fixture
def grid1d():
    return Grid(1, 4.0, 256)


@pytest.fixture
def grid2d():
    return Grid(2, 2.0, 64)


def test_grid_validation():
    with pytest.raises(InvalidArgumentError):
        Grid(1, 4.0, 5)  # odd
    with pytest.raises(InvalidArgumentError):
        Grid(1, 4.0, 2)  # too few
    with pytest.raises(InvalidArgumentError):
        Grid(1, -1.0, 64)
    g = Grid(2, 2.0, 8)
    assert g.spacing == pytest.approx(0.5)
    assert 0.0 in g.axis_nodes()  # node at the origin for even N


def test_dilate_identity_is_node_exact(grid1d):
    f = bump_field(grid1d, radius=1.0)
    g = dilate(f, 1.0)
    np.testing.assert_array_equal(g.values, f.values)


def test_dilate_preserves_l1_mass(grid1d):
    # change of variables forces equality; discrepancy is quadrature error
    f = bump_field(grid1d, radius=grid1d.half_extent / 4)
    g = dilate(f, 2.0)
    h = grid1d.spacing
    assert lp_norm(g, 1) == pytest.approx(lp_norm(f, 1), rel=2 * h)
    assert g.support_radius == pytest.approx(f.support_radius / 2)


def test_dilate_gaussian_closed_form():
    grid = Grid(1, 6.0, 512)
    f = field_from_closure(grid, lambda p: np.exp(-(p[..., 0] ** 2)), support_radius=6.0)
    g = dilate(f, 2.0)
    xs = np.linspace(-1.0, 1.0, 10)[:, None]
    want = 2.0 * np.exp(-4.0 * xs[:, 0] ** 2)
    np.testing.assert_allclose(g.interp(xs), want, atol=4 * grid.spacing ** 2)


def test_dilate_rejects_bad_factor(grid1d):
    f = bump_field(grid1d, radius=1.0)
    for t in (0.0, -1.0, np.nan, np.inf):
        with pytest.raises(InvalidArgumentError):
            dilate(f, t)


def test_translate_identity_and_norms(grid2d):
    f = bump_field(grid2d, radius=0.8)
    g = translate(f, (0.0, 0.0))
    np.testing.assert_array_equal(g.values, f.values)
    t = translate(f, (0.5, 0.25))
    for p in (1, 2):
        assert lp_norm(t, p) == pytest.approx(lp_norm(f, p), rel=2 * grid2d.spacing)


def test_translate_moves_peak(grid2d):
    f = bump_field(grid2d, radius=0.5)
    t = translate(f, (0.5, 0.0))
    idx = np.unravel_index(np.argmax(t.values), t.values.shape)
    peak = np.stack(grid2d.meshgrid(), axis=-1)[idx]
    np.testing.assert_allclose(peak, [0.5, 0.0], atol=grid2d.spacing)


def test_translate_roundtrip_and_lattice_exactness(grid1d):
    f = bump_field(grid1d, radius=1.0)
    h = grid1d.spacing
    # lattice shift: exact roundtrip
    g = translate(translate(f, 8 * h), -8 * h)
    np.testing.assert_array_equal(g.values, f.values)
    # off-lattice shift: second-order interpolation tolerance
    a = 0.3 * h
    g = translate(translate(f, a), -a)
    assert np.abs(g.values - f.values).max() < 20 * h ** 2 * np.abs(f.values).max()


def test_translate_support_gate(grid1d):
    f = bump_field(grid1d, radius=2.0)
    with pytest.raises(SupportOverflowError):
        translate(f, 3.0)


def test_lp_norm_basics(grid1d):
    z = SampledField(grid1d, np.zeros(grid1d.shape()), 1.0)
    assert lp_norm(z, 2) == 0.0
    ind = indicator_field(grid1d, 0.0, 1.0)
    assert lp_norm(ind, 2) == pytest.approx(1.0, abs=grid1d.spacing)
    c = ind.with_values(-2.5 * ind.values)
    assert lp_norm(c, np.inf) == pytest.approx(2.5)
    with pytest.raises(InvalidArgumentError):
        lp_norm(ind, 0.5)


def test_lp_norm_dilation_scaling(grid1d):
    # |dilate(f,t)|_p = t^{d(1-1/p)} |f|_p
    f = bump_field(grid1d, radius=grid1d.half_extent / 4)
    h = grid1d.spacing
    for t in (0.5, 2.0):
        for p in (1.0, 2.0, 3.0):
            want = t ** (grid1d.dim * (1 - 1 / p)) * lp_norm(f, p)
            assert lp_norm(dilate(f, t), p) == pytest.approx(want, rel=4 * h)


def test_segment_mean(grid1d):
    const = SampledField(grid1d, np.full(grid1d.shape(), 3.0), np.inf)
    assert segment_mean(const, -1.0, 2.0, 16) == pytest.approx(3.0)
    lin = field_from_closure(grid1d, lambda p: p[..., 0])
    assert segment_mean(lin, 0.0, 1.0, 8) == pytest.approx(0.5, abs=1e-6)
    f = bump_field(grid1d, radius=1.0)
    assert segment_mean(f, 0.25, 0.25) == pytest.approx(float(f.interp([[0.25]])[0]))


def test_convolve_delta_identity(grid1d):
    f = bump_field(grid1d, radius=1.0)
    vals = np.zeros(grid1d.shape())
    vals[grid1d.points_per_axis // 2] = 1.0 / grid1d.cell_volume()  # unit mass at 0
    delta = SampledField(grid1d, vals, grid1d.spacing)
    g = convolve(f, delta)
    np.testing.assert_allclose(g.values, f.values, atol=1e-12)


def test_convolve_triangle_closed_form():
    grid = Grid(1, 4.0, 512)
    ind = indicator_field(grid, -1.0, 1.0)
    tri = convolve(ind, ind)
    assert float(tri.interp([[0.0]])[0]) == pytest.approx(2.0, abs=2 * grid.spacing)


def test_convolve_young_and_commutativity(grid1d):
    f = bump_field(grid1d, center=[0.5], radius=0.7)
    g = bump_field(grid1d, center=[-0.3], radius=0.9)
    fg = convolve(f, g)
    assert lp_norm(fg, 1) <= lp_norm(f, 1) * lp_norm(g, 1) * (1 + 1e-10)
    gf = convolve(g, f)
    assert np.abs(fg.values - gf.values).max() < 1e-10 * max(1.0, np.abs(fg.values).max())


def test_convolve_methods_agree(grid1d):
    f = bump_field(grid1d, radius=1.0)
    g = bump_field(grid1d, radius=0.5)
    a = convolve(f, g, method="fft")
    b = convolve(f, g, method="direct")
    scale = np.abs(a.values).max()
    assert np.abs(a.values - b.values).max() < 1e-8 * scale


def test_convolve_support_gate():
    grid = Grid(1, 2.0, 64)
    f = bump_field(grid, radius=1.5)
    g = bump_field(grid, radius=1.0)
    with pytest.raises(SupportOverflowError):
        convolve(f, g)


def test_exponent_tuple_validation():
    ExponentTuple((2.0, 2.0))
    ExponentTuple((np.inf, 2.0, 2.0))
    with pytest.raises(InvalidArgumentError):
        ExponentTuple((2.0, 3.0))
    with pytest.raises(InvalidArgumentError):
        ExponentTuple((1.0, np.inf))


def test_csv_roundtrip(tmp_path, grid2d):
    f = bump_field(grid2d, radius=0.8)
    path = tmp_path / "f.csv"
    save_field_csv(f, path)
    g = load_field_csv(path)
    assert g.grid == grid2d
    np.testing.assert_allclose(g.values, f.values)
