"""Littlewood-Paley machinery on sampled fields.

Mollifier projections P_j (convolution with a dilated even bump of unit
mass), dyadic differences Q_j = P_j - P_{j-1}, Fourier-side annular cutoffs,
the decay class of mean-zero C^1 kernels with (1+|x|^{d+1/2}) weight, and the
constructive atom decomposition for that class.

The default mollifier is the normalized radial bump c*exp(-1/(1-|x|^2)) on
|x|<1.  Sampled dilates with support inside the box are renormalized to unit
grid mass, which makes the L^inf contraction of P_j exact; wider dilates
(2^{-j} > L) are kept as raw box restrictions, which is exact for fields
supported inside the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CancellationError, InvalidArgumentError, ResolutionError
from .field import Grid, SampledField, convolve_values, dilate

Array = np.ndarray


def bump_profile(r2: Array) -> Array:
    """Unnormalized radial bump exp(-1/(1-r^2)) as a function of r^2."""
    inside = r2 < 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(inside, np.exp(-1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0)


def smoothstep(u: Array) -> Array:
    """Quintic smoothstep: 0 for u<=0, 1 for u>=1, C^2 monotone bridge."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


_BUMP_MASS: dict[int, float] = {}


def _bump_mass(d: int) -> float:
    """Full-space mass of the unnormalized bump in d dimensions."""
    if d not in _BUMP_MASS:
        r = (np.arange(200000) + 0.5) / 200000.0
        surface = 2.0 * np.pi ** (d / 2.0) / math.gamma(d / 2.0)
        _BUMP_MASS[d] = float(surface * (bump_profile(r * r) * r ** (d - 1)).mean())
    return _BUMP_MASS[d]


def _sampled_bump(grid: Grid, scale: float) -> Array:
    """Values of the dilated unit-mass bump scale^d * c * bump(scale * x).

    Renormalized to exactly 1 on the grid when the support 1/scale fits in
    the box (killing quadrature error); wider dilates keep the analytic
    normalization, so their values are the box restriction of the true
    mollifier.
    """
    r2 = (grid.node_radii() * scale) ** 2
    vals = (scale ** grid.dim) / _bump_mass(grid.dim) * bump_profile(r2)
    if 1.0 / scale <= grid.half_extent:
        vals = vals / (vals.sum() * grid.cell_volume())
    return vals


@dataclass(frozen=True)
class MollifierSpec:
    """Even nonnegative bump phi with unit mass, and psi = phi - 2^{-d} phi(./2)."""

    grid: Grid

    @property
    def phi(self) -> SampledField:
        return SampledField(self.grid, _sampled_bump(self.grid, 1.0), 1.0)

    @property
    def psi(self) -> SampledField:
        # both pieces carry exact unit grid mass, so psi has exact zero mass
        vals = _sampled_bump(self.grid, 1.0) - _sampled_bump(self.grid, 0.5)
        return SampledField(self.grid, vals, 2.0)

    def phi_values(self, j: int) -> Array:
        """Sampled dilated mollifier phi^{(2^j)} on the grid."""
        return _sampled_bump(self.grid, 2.0 ** j)


def default_mollifier(grid: Grid) -> MollifierSpec:
    if grid.half_extent < 2.0:
        raise InvalidArgumentError("mollifier grid must have half_extent >= 2 to hold psi")
    return MollifierSpec(grid)


def project_P(f: SampledField, j: int, m: MollifierSpec | None = None) -> SampledField:
    """P_j f = f * phi^{(2^j)}."""
    m = m if m is not None else MollifierSpec(f.grid)
    if m.grid != f.grid:
        raise InvalidArgumentError("mollifier and field grids differ")
    vals = convolve_values(f, m.phi_values(j))
    radius = min(f.support_radius + 2.0 ** (-j), f.grid.half_extent)
    return SampledField(f.grid, vals, radius)


def band_Q(f: SampledField, j: int, m: MollifierSpec | None = None) -> SampledField:
    """Q_j f = P_j f - P_{j-1} f."""
    m = m if m is not None else MollifierSpec(f.grid)
    pj = project_P(f, j, m)
    pjm1 = project_P(f, j - 1, m)
    return SampledField(f.grid, pj.values - pjm1.values,
                        min(f.support_radius + 2.0 ** (1 - j), f.grid.half_extent))


@dataclass(frozen=True)
class BandCutoffSpec:
    """Radial Fourier profile chi0: 1 on |xi|<=1/2, 0 on |xi|>=1, smooth bridge."""

    bridge: str = "smoothstep5"

    def chi0(self, xi_abs: Array) -> Array:
        if self.bridge != "smoothstep5":
            raise InvalidArgumentError(f"unknown bridge {self.bridge!r}")
        return 1.0 - smoothstep(2.0 * (np.asarray(xi_abs) - 0.5))


def _freq_radii(grid: Grid) -> Array:
    axes = [2.0 * np.pi * np.fft.fftfreq(grid.points_per_axis, d=grid.spacing)
            for _ in range(grid.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.sqrt(sum(m * m for m in mesh))


def fourier_Q(f: SampledField, j: int, c: BandCutoffSpec | None = None,
              tilde: bool = False) -> SampledField:
    """Fourier-side band cutoff: multiplier chi0(2^{-j} xi) - chi0(2^{1-j} xi).

    With tilde=True uses the wider profile, equal to 1 on the narrow one's
    support (chi0(2^{-j-1} xi) - chi0(2^{2-j} xi)).
    """
    c = c if c is not None else BandCutoffSpec()
    nyq = np.pi / f.grid.spacing
    if 2.0 ** j > 0.5 * nyq:
        raise ResolutionError(
            f"band 2^{j} exceeds half-Nyquist {0.5 * nyq:.4g}; refine the grid")
    xi = _freq_radii(f.grid)
    if tilde:
        mult = c.chi0(xi / 2.0 ** (j + 1)) - c.chi0(xi * 2.0 ** (2 - j))
    else:
        mult = c.chi0(xi / 2.0 ** j) - c.chi0(xi * 2.0 ** (1 - j))
    vals = np.fft.ifftn(np.fft.fftn(f.values) * mult).real
    return SampledField(f.grid, vals, f.grid.half_extent)


def gradient_fields(u: SampledField) -> list[Array]:
    """Centered second-order differences (one-sided at the boundary)."""
    return list(np.gradient(u.values, u.grid.spacing, edge_order=2)) \
        if u.grid.dim > 1 else [np.gradient(u.values, u.grid.spacing, edge_order=2)]


def u_norm(u: SampledField) -> float:
    """max over nodes of (1+|x|^{d+1/2}) (|u| + |grad u|)."""
    d = u.grid.dim
    grads = gradient_fields(u)
    gmag = np.sqrt(sum(g * g for g in grads))
    weight = 1.0 + u.grid.node_radii() ** (d + 0.5)
    return float((weight * (np.abs(u.values) + gmag)).max())


@dataclass(frozen=True)
class UKernel:
    """Mean-zero C^1 kernel with finite (1+|x|^{d+1/2})-weighted norm."""

    u: SampledField
    u_norm: float

    @classmethod
    def gate(cls, u: SampledField, tol: float = 1e-6) -> "UKernel":
        mass = abs(u.integral())
        scale = float(np.abs(u.values).sum() * u.grid.cell_volume()) + 1e-12
        if mass > tol * scale:
            raise CancellationError(
                f"kernel integral {mass:.3g} exceeds cancellation gate {tol:.1g} * {scale:.3g}")
        return cls(u, u_norm(u))


def _chi_profile(r: Array) -> Array:
    """C^2 radial cutoff: 1 on |x|<=1/8, 0 on |x|>=1/4."""
    return 1.0 - smoothstep(8.0 * (np.asarray(r) - 0.125))


def _chi_j(r: Array, j: int) -> Array:
    if j == 0:
        return _chi_profile(r)
    return _chi_profile(r / 2.0 ** j) - _chi_profile(r / 2.0 ** (j - 1))


def decompose_U(uk: UKernel, depth: int, atom_grid: Grid | None = None) -> list[tuple[int, SampledField]]:
    """Constructive atom decomposition u = sum_{j<=0} 2^{j/2} (atom_j)^{(2^j)}.

    Returns [(j, atom_j)] for j = 0, -1, ..., -depth.  Each atom is supported
    in |x| <= 1/4, has zero integral (to rounding; every cutoff is normalized
    under the atom-grid quadrature itself), and sup-norm controlled by the
    weighted norm of u.
    """
    if depth < 1:
        raise InvalidArgumentError("depth must be positive")
    u = uk.u
    d = u.grid.dim
    if atom_grid is None:
        atom_grid = Grid(d, 0.5, u.grid.points_per_axis)
    vol = atom_grid.cell_volume()
    apts = np.stack(atom_grid.meshgrid(), axis=-1)
    ar = atom_grid.node_radii()

    # ring profiles in rescaled coordinates: chi_j(2^j x) = chi0(x) - chi0(2x)
    # for j >= 1, independent of j
    ring = [_chi_profile(ar)] + [_chi_profile(ar) - _chi_profile(2.0 * ar)] * depth
    ring_mass = [rg.sum() * vol for rg in ring]
    if min(ring_mass) <= 0:
        raise ResolutionError("atom grid too coarse to resolve the cutoff rings")

    # ring moments a_j = int u chi_j, computed as 2^{jd} * atom-grid quadrature
    u_on_ring = [u.interp(apts * 2.0 ** j) for j in range(depth + 1)]
    alpha = [float((uj * rg).sum() * vol) for uj, rg in zip(u_on_ring, ring)]
    a = [2.0 ** (j * d) * alpha[j] for j in range(depth + 1)]
    A = np.concatenate([[0.0], -np.cumsum(a)])  # A_j = -sum_{k<j} a_k, A_0 = 0

    atoms = []
    for j in range(depth + 1):
        bj = u_on_ring[j] * ring[j] - alpha[j] * ring[j] / ring_mass[j]
        if j >= 1:
            # previous ring seen at scale 2^j, mass-normalized under this quadrature
            prev = _chi_j(ar * 2.0 ** j, j - 1)
            prev_mass = prev.sum() * vol
            if prev_mass <= 0:
                raise ResolutionError("atom grid too coarse for the inner cutoff ring")
            bj = bj + A[j] * 2.0 ** (-j * d) * (ring[j] / ring_mass[j] - prev / prev_mass)
        vals = 2.0 ** (j * d) * 2.0 ** (j / 2.0) * bj
        atoms.append((-j, SampledField(atom_grid, vals, 0.25)))
    return atoms


def reconstruct_U(atoms: list[tuple[int, SampledField]], grid: Grid) -> SampledField:
    """sum_j 2^{j/2} (atom_j)^{(2^j)} sampled on the target grid."""
    pts = np.stack(grid.meshgrid(), axis=-1)
    total = np.zeros(grid.shape())
    for j, atom in atoms:
        scale = 2.0 ** j
        total += 2.0 ** (j / 2.0) * scale ** grid.dim * atom.interp(pts * scale)
    return SampledField(grid, total, grid.half_extent)
