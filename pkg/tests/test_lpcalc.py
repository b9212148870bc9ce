import numpy as np
import pytest

from singforms.errors import CancellationError, ResolutionError
from singforms.field import Grid, SampledField, bump_field, field_from_closure, lp_norm
from singforms.lpcalc import (
    BandCutoffSpec,
    MollifierSpec,
    UKernel,
    band_Q,
    decompose_U,
    default_mollifier,
    fourier_Q,
    project_P,
    reconstruct_U,
    u_norm,
)


@pytest.fixture
def grid():
    return Grid(1, 4.0, 512)


@pytest.fixture
def moll(grid):
    return default_mollifier(grid)


def test_mollifier_invariants(moll):
    phi = moll.phi
    vals = phi.values
    assert np.all(vals >= 0)
    # mirror node of x_k is x_{N-k}: evenness is node-exact up to that pairing
    np.testing.assert_array_equal(vals, np.roll(vals[::-1], 1))
    assert phi.integral() == pytest.approx(1.0, abs=1e-8)
    r = phi.grid.node_radii()
    assert np.all(vals[r >= 1.0] == 0.0)
    psi = moll.psi
    assert abs(psi.integral()) < 1e-12


def test_project_constant_core(grid, moll):
    ind = field_from_closure(grid, lambda p: (np.abs(p[..., 0]) <= 2.0).astype(float),
                             support_radius=2.0)
    j = 3
    pf = project_P(ind, j, moll)
    core = np.abs(grid.axis_nodes()) <= 2.0 - 2.0 ** (-j) - grid.spacing
    np.testing.assert_allclose(pf.values[core], 1.0, atol=1e-10)


def test_project_contraction_and_positivity(grid, moll):
    rng = np.random.default_rng(5)
    vals = rng.uniform(0, 3, grid.shape())
    vals[np.abs(grid.axis_nodes()) > 2.0] = 0.0
    f = SampledField(grid, vals, 2.0)
    for j in (-3, 0, 2, 5):
        pf = project_P(f, j, moll)
        assert np.abs(pf.values).max() <= np.abs(f.values).max() * (1 + 1e-12)
        assert pf.values.min() >= -1e-14


def test_project_approximation_order(grid, moll):
    f = bump_field(grid, radius=1.0)
    e2 = lp_norm(f.with_values(project_P(f, 2, moll).values - f.values), 2)
    e4 = lp_norm(f.with_values(project_P(f, 4, moll).values - f.values), 2)
    # second-order mollifier approximation: error ratio ~ 2^{-2*dj} = 1/16
    assert e4 < e2 / 8


def test_band_telescoping_node_exact(grid, moll):
    f = bump_field(grid, radius=1.0)
    J = 4
    total = np.zeros(grid.shape())
    for j in range(-J, J + 1):
        total += band_Q(f, j, moll).values
    direct = project_P(f, J, moll).values - project_P(f, -J - 1, moll).values
    assert np.abs(total - direct).max() < 1e-12 * max(1.0, np.abs(direct).max())


def test_band_zero_mean(grid, moll):
    # output support 2^{1-j} + r_f must fit the box for the box integral to vanish
    f = bump_field(grid, radius=1.0)
    for j in (0, 1, 3):
        qf = band_Q(f, j, moll)
        assert abs(qf.integral()) < 1e-6


def test_band_reconstruction_interior(grid, moll):
    f = bump_field(grid, radius=1.0)
    J = 8
    total = np.zeros(grid.shape())
    for j in range(-J, J + 1):
        total += band_Q(f, j, moll).values
    interior = np.abs(grid.axis_nodes()) <= 2.0
    num = np.sqrt(((total - f.values)[interior] ** 2).sum() * grid.cell_volume())
    den = lp_norm(f, 2)
    assert num / den <= 1e-2


def test_fourier_reproducing_identity(grid):
    f = bump_field(grid, radius=1.0)
    for j in (2, 4):
        qf = fourier_Q(f, j)
        qqf = fourier_Q(fourier_Q(f, j, tilde=True), j)
        scale = np.abs(qf.values).max() + 1e-300
        assert np.abs(qf.values - qqf.values).max() / scale < 1e-8


def test_fourier_passband_identity():
    # L = pi so integer angular frequencies are exactly periodic
    grid = Grid(1, np.pi, 256)
    j = 4
    freq = 2 ** (j - 1)  # the multiplier equals 1 exactly at |xi| = 2^{j-1}
    vals = np.sin(freq * grid.axis_nodes())
    f = SampledField(grid, vals, np.inf)
    qf = fourier_Q(f, j)
    assert np.abs(qf.values - vals).max() < 1e-6


def test_fourier_square_function_ratio():
    grid = Grid(1, np.pi, 512)
    x = grid.axis_nodes()
    vals = np.sin(8 * x) + 0.5 * np.sin(23 * x) + 0.25 * np.cos(40 * x)
    f = SampledField(grid, vals, np.inf)
    total = sum(lp_norm(fourier_Q(f, j), 2) ** 2 for j in range(1, 8))
    ratio = lp_norm(f, 2) ** 2 / total
    assert 0.25 <= ratio <= 4.0


def test_fourier_nyquist_gate(grid):
    f = bump_field(grid, radius=1.0)
    with pytest.raises(ResolutionError):
        fourier_Q(f, 12)


def test_u_norm_zero_and_stability():
    g1 = Grid(1, 4.0, 256)
    z = SampledField(g1, np.zeros(g1.shape()), 1.0)
    assert u_norm(z) == 0.0
    v1 = u_norm(default_mollifier(g1).psi)
    g2 = Grid(1, 4.0, 512)
    v2 = u_norm(default_mollifier(g2).psi)
    assert v1 > 0
    assert abs(v1 - v2) / v2 < 0.05


def test_ukernel_cancellation_gate(grid, moll):
    with pytest.raises(CancellationError):
        UKernel.gate(bump_field(grid, radius=1.0))  # positive mass
    uk = UKernel.gate(moll.psi)
    assert uk.u_norm > 0


def test_atoms_support_cancellation_supnorm(grid, moll):
    uk = UKernel.gate(moll.psi)
    atoms = decompose_U(uk, depth=8)
    for j, atom in atoms:
        r = atom.grid.node_radii()
        assert np.all(atom.values[r > 0.25 + atom.grid.spacing] == 0.0)
        assert abs(atom.integral()) < 1e-6
        assert np.abs(atom.values).max() <= 20 * uk.u_norm


def test_atoms_zero_input(grid):
    z = SampledField(grid, np.zeros(grid.shape()), 1.0)
    atoms = decompose_U(UKernel.gate(z), depth=4)
    for _, atom in atoms:
        assert np.all(atom.values == 0.0)


def test_atom_reconstruction_residual(grid, moll):
    uk = UKernel.gate(moll.psi)
    depth = 8
    atoms = decompose_U(uk, depth=depth)
    rec = reconstruct_U(atoms, grid)
    resid = lp_norm(SampledField(grid, rec.values - uk.u.values, np.inf), 1)
    assert resid / lp_norm(uk.u, 1) <= 2.0 ** (-depth / 4)
