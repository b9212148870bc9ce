"""Kernel representations and norm scales for two-variable kernels k(alpha, v).

Two kernel families live here:

* weighted-Besov-type kernels: integrable kernels with weighted L^1 mass and
  first-order L^1 difference quotients in alpha and v (four seminorm
  components), represented by KernelB (closure + evaluation box + quadrature
  resolution);
* dilation-invariant singular kernels K(alpha, x): the five-seminorm scale
  combining convolved L^2 profiles, annular L^1 masses, alpha-regularity, and
  a far-field smoothness term, represented by closures or by DyadicKernel
  sums K = sum_j 2^{jd} s_j(alpha, 2^j x).

All quadratures use midpoint lattices (cell centers), which never contain
the singular point x = 0 and integrate lattice-aligned indicators exactly.
Sups over continuous parameters (shift h, dilation t, radius R) are taken
over recorded dyadic grids; reported values are lower bounds for the true
sups and the grids are stored in NormReport.discretization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy import ndimage, signal

from .errors import (
    CancellationError,
    InvalidArgumentError,
    ResolutionError,
    UndefinedRatioError,
)
from .field import Grid, SampledField
from .lpcalc import _bump_mass, bump_profile, smoothstep

Array = np.ndarray


# ---------------------------------------------------------------------------
# lattices

def midpoint_nodes(half_extent: float, res: int) -> Array:
    """Cell centers of [-A, A] split into res cells; never contains 0."""
    h = 2.0 * half_extent / res
    return -half_extent + (np.arange(res) + 0.5) * h


def integer_nodes(radius: float, spacing: float) -> Array:
    """Symmetric lattice k*spacing, |k*spacing| <= radius (contains 0)."""
    k = int(np.floor(radius / spacing + 1e-12))
    return spacing * np.arange(-k, k + 1)


# ---------------------------------------------------------------------------
# kernel types

@dataclass(frozen=True)
class KernelB:
    """Kernel s(alpha, v) on R^n x R^d: closure + evaluation box + resolution.

    eval takes arrays alpha (..., n) and v (..., d) and returns values (...).
    The closure must vanish outside [-alpha_box, alpha_box]^n x
    [-v_box, v_box]^d.  alpha1_margin declares support away from the
    alpha_1 = 0 hyperplane (needed by the adjoint transforms).
    """

    n: int
    d: int
    eval: Callable[[Array, Array], Array]
    alpha_box: float
    v_box: float
    alpha_res: int = 64
    v_res: int = 64
    cancels_in_v: bool = False
    alpha1_margin: float = 0.0

    def __post_init__(self):
        if self.n < 0 or self.d < 1:
            raise InvalidArgumentError(f"need n >= 0 and d >= 1, got n={self.n}, d={self.d}")
        if self.alpha_res < 2 or self.v_res < 2:
            raise InvalidArgumentError("kernel quadrature needs at least 2 cells per axis")

    def alpha_nodes(self, pad: float = 0.0) -> Array:
        h = 2.0 * self.alpha_box / self.alpha_res
        extra = int(np.ceil(pad / h - 1e-12)) if pad > 0 else 0
        res = self.alpha_res + 2 * extra
        return -self.alpha_box - extra * h + (np.arange(res) + 0.5) * h

    def v_nodes(self, pad: float = 0.0) -> Array:
        h = 2.0 * self.v_box / self.v_res
        extra = int(np.ceil(pad / h - 1e-12)) if pad > 0 else 0
        res = self.v_res + 2 * extra
        return -self.v_box - extra * h + (np.arange(res) + 0.5) * h

    @property
    def alpha_spacing(self) -> float:
        return 2.0 * self.alpha_box / self.alpha_res

    @property
    def v_spacing(self) -> float:
        return 2.0 * self.v_box / self.v_res

    def sample(self, alpha_pad: float = 0.0, v_pad: float = 0.0) -> Array:
        """Values on the (padded) midpoint lattice, alpha axes first."""
        an = self.alpha_nodes(alpha_pad)
        vn = self.v_nodes(v_pad)
        axes = [an] * self.n + [vn] * self.d
        mesh = np.meshgrid(*axes, indexing="ij") if axes else []
        if self.n:
            alpha = np.stack(mesh[: self.n], axis=-1)
        else:
            alpha = np.zeros(tuple(m.shape[0] for m in mesh[: 0]) or
                             tuple(len(vn) for _ in range(self.d)) + (0,))
        v = np.stack(mesh[self.n:], axis=-1)
        if self.n == 0:
            alpha = np.zeros(v.shape[:-1] + (0,))
        vals = np.asarray(self.eval(alpha, v), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("kernel closure produced non-finite samples")
        return vals

    def cell_volume(self) -> float:
        return self.alpha_spacing ** self.n * self.v_spacing ** self.d

    def l1_norm(self) -> float:
        return float(np.abs(self.sample()).sum() * self.cell_volume())

    def check_cancellation(self, tol: float = 1e-6) -> None:
        """Gate: per-alpha-node integral in v at most tol * per-alpha L^1 mass.

        An absolute floor tied to the kernel's overall mass keeps rounding
        noise on near-zero alpha slices from tripping the gate.
        """
        vals = self.sample()
        v_axes = tuple(range(self.n, self.n + self.d))
        hv = self.v_spacing ** self.d
        per_alpha_int = np.abs(vals.sum(axis=v_axes)) * hv
        per_alpha_mass = np.abs(vals).sum(axis=v_axes) * hv
        floor = 1e-12 * (float(per_alpha_mass.max()) if per_alpha_mass.size else 0.0)
        bad = per_alpha_int > tol * per_alpha_mass + floor
        if np.any(bad):
            worst = float(per_alpha_int.max())
            raise CancellationError(
                f"v-integral up to {worst:.3g} violates the cancellation gate at "
                f"{int(bad.sum())} alpha nodes")

    def dilated(self, t: float) -> "KernelB":
        """x-dilation s^{(t)}(alpha, v) = t^d s(alpha, t v)."""
        if not (np.isfinite(t) and t > 0):
            raise InvalidArgumentError("dilation factor must be positive")
        parent = self.eval
        d = self.d

        def ev(alpha, v):
            return t ** d * parent(alpha, t * np.asarray(v))

        return KernelB(self.n, d, ev, self.alpha_box, self.v_box / t,
                       self.alpha_res, self.v_res, self.cancels_in_v, self.alpha1_margin)


def kernel_from_samples(n: int, d: int, alpha_box: float, v_box: float,
                        values: Array, cancels_in_v: bool = False) -> KernelB:
    """Array-backed KernelB interpolating midpoint-lattice samples (0 outside)."""
    values = np.asarray(values, dtype=float)
    a_res = values.shape[0] if n else None
    v_res = values.shape[-1]
    ha = 2.0 * alpha_box / a_res if n else 1.0
    hv = 2.0 * v_box / v_res

    def ev(alpha, v):
        alpha = np.asarray(alpha, dtype=float)
        v = np.asarray(v, dtype=float)
        coords = []
        for i in range(n):
            coords.append((alpha[..., i] + alpha_box) / ha - 0.5)
        for a in range(d):
            coords.append((v[..., a] + v_box) / hv - 0.5)
        flat = []
        for c in coords:
            c = c.reshape(-1)
            # snap float-rounded lattice hits so self-resampling is exact
            snapped = np.round(c)
            flat.append(np.where(np.abs(c - snapped) < 1e-9, snapped, c))
        out = ndimage.map_coordinates(values, np.stack(flat), order=1,
                                      mode="constant", cval=0.0)
        return out.reshape(v.shape[:-1])

    return KernelB(n, d, ev, alpha_box, v_box, a_res or 2, v_res, cancels_in_v)


@dataclass(frozen=True)
class CZKernelSpec:
    """Convolution kernel kappa on R^d minus the origin."""

    kappa: Callable[[Array], Array]
    d: int
    homogeneity: float | None = None
    odd: bool = False
    cz_constant: float | None = None
    support: float = np.inf

    def __call__(self, x: Array) -> Array:
        return self.kappa(np.asarray(x, dtype=float))

    def check_homogeneity(self, rng=None, atol: float = 1e-8) -> None:
        if self.homogeneity is None:
            return
        rng = rng or np.random.default_rng(0)
        x = rng.uniform(0.3, 1.5, size=(32, self.d)) * rng.choice([-1.0, 1.0], size=(32, self.d))
        for t in (0.5, 2.0, 3.0):
            lhs = self.kappa(t * x)
            rhs = t ** self.homogeneity * self.kappa(x)
            if np.abs(lhs - rhs).max() > atol * (np.abs(rhs).max() + 1.0):
                raise InvalidArgumentError(
                    f"kernel is not homogeneous of degree {self.homogeneity}")


@dataclass(frozen=True)
class ClosureKernel:
    """Kernel K(alpha, x) on R^n x (R^d minus 0), given as a closure.

    x_support, when finite, declares the radius outside which K vanishes;
    the dyadic decomposition uses it to size the per-scale sampling boxes.
    """

    n: int
    d: int
    eval: Callable[[Array, Array], Array]
    alpha_box: float = 1.0
    x_support: float = np.inf

    def __call__(self, alpha: Array, x: Array) -> Array:
        return self.eval(np.asarray(alpha, dtype=float), np.asarray(x, dtype=float))


@dataclass(frozen=True)
class DyadicKernel:
    """K = sum_j 2^{jd} s_j(alpha, 2^j x) from finitely many scales."""

    pieces: tuple[tuple[int, KernelB], ...]

    def __post_init__(self):
        if not self.pieces:
            raise InvalidArgumentError("DyadicKernel needs at least one piece")
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @property
    def scale_range(self) -> tuple[int, int]:
        js = [j for j, _ in self.pieces]
        return (min(js), max(js))

    @property
    def n(self) -> int:
        return self.pieces[0][1].n

    @property
    def d(self) -> int:
        return self.pieces[0][1].d

    def check_cancellation(self, tol: float = 1e-6) -> None:
        for _, s in self.pieces:
            s.check_cancellation(tol)

    def as_closure(self) -> ClosureKernel:
        pieces = self.pieces
        d = self.d

        def ev(alpha, x):
            x = np.asarray(x, dtype=float)
            total = np.zeros(x.shape[:-1])
            for j, s in pieces:
                total = total + 2.0 ** (j * d) * s.eval(alpha, 2.0 ** j * x)
            return total

        return ClosureKernel(self.n, d, ev, max(s.alpha_box for _, s in pieces))


@dataclass
class NormReport:
    """Computed seminorm components plus the discretization that produced them."""

    components: dict[str, float]
    epsilon: float
    discretization: dict
    extras: dict[str, float] = dc_field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.components.values()))

    def to_dict(self) -> dict:
        return {
            "components": {k: float(v) for k, v in self.components.items()},
            "total": self.total,
            "epsilon": self.epsilon,
            "extras": {k: float(v) for k, v in self.extras.items()},
            "discretization": self.discretization,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


# ---------------------------------------------------------------------------
# weighted-Besov seminorms

def _lattice_dyadic_shifts(spacing: float, m_max: int) -> list[tuple[int, float, int]]:
    """Dyadic shifts h = 2^{-m} <= 1 that are integer multiples of spacing.

    Returns (m, h, cells).  Restricting to lattice multiples makes the shifted
    evaluation an exact index roll.
    """
    out = []
    for m in range(m_max + 1):
        h = 2.0 ** (-m)
        cells = h / spacing
        if cells < 1.0 - 1e-9:
            break
        r = round(cells)
        if abs(cells - r) < 1e-9:
            out.append((m, h, r))
    return out


def _rolled_diff(vals: Array, axis: int, cells: int) -> Array:
    """vals(. + cells*e_axis) - vals with zero fill (support lives inside)."""
    shifted = np.roll(vals, -cells, axis=axis)
    sl = [slice(None)] * vals.ndim
    sl[axis] = slice(vals.shape[axis] - cells, None)
    shifted[tuple(sl)] = 0.0
    return shifted - vals


def besov_norm(s: KernelB, eps: float, m_max: int = 12) -> NormReport:
    """Four-component weighted seminorm of an integrable kernel s(alpha, v).

    Components: weighted alpha-mass, alpha-difference quotient (sup over
    dyadic h and coordinates), v-difference quotient (dyadic magnitudes along
    each v axis, both signs), weighted v-mass.
    """
    if not (0.0 <= eps <= 1.0):
        raise InvalidArgumentError(f"eps must lie in [0, 1], got {eps}")
    pad = 1.0
    vals = s.sample(alpha_pad=pad, v_pad=pad)
    an = s.alpha_nodes(pad)
    vn = s.v_nodes(pad)
    vol = s.cell_volume()
    absvals = np.abs(vals)

    # weighted masses
    b1 = 0.0
    if s.n:
        for i in range(s.n):
            w = (1.0 + np.abs(an)) ** eps
            shape = [1] * vals.ndim
            shape[i] = len(an)
            b1 = max(b1, float((absvals * w.reshape(shape)).sum() * vol))
    else:
        b1 = float(absvals.sum() * vol)

    vmesh = np.meshgrid(*([vn] * s.d), indexing="ij")
    vr = np.sqrt(sum(m * m for m in vmesh))
    w4 = (1.0 + vr) ** eps
    b4 = float((absvals * w4.reshape((1,) * s.n + vr.shape)).sum() * vol)

    # difference quotients via exact lattice rolls
    a_shifts = _lattice_dyadic_shifts(s.alpha_spacing, m_max)
    b2 = 0.0
    for i in range(s.n):
        for m, h, cells in a_shifts:
            diff = _rolled_diff(vals, i, cells)
            b2 = max(b2, float(np.abs(diff).sum() * vol) / h ** eps)

    v_shifts = _lattice_dyadic_shifts(s.v_spacing, m_max)
    b3 = 0.0
    for a in range(s.d):
        for m, h, cells in v_shifts:
            for sign in (1, -1):
                diff = _rolled_diff(vals, s.n + a, sign * cells)
                b3 = max(b3, float(np.abs(diff).sum() * vol) / h ** eps)

    disc = {
        "alpha_res": s.alpha_res, "v_res": s.v_res,
        "alpha_box": s.alpha_box, "v_box": s.v_box,
        "alpha_spacing": s.alpha_spacing, "v_spacing": s.v_spacing,
        "pad": pad,
        "alpha_shift_set": [h for _, h, _ in a_shifts],
        "v_shift_set": [h for _, h, _ in v_shifts],
        "m_max": m_max,
        "lower_bound": True,
    }
    comps = {"alpha_mass": b1, "alpha_diff": b2, "v_diff": b3, "v_mass": b4}
    return NormReport(comps, eps, disc)


def besov_total(s: KernelB, eps: float, m_max: int = 12) -> float:
    return besov_norm(s, eps, m_max=m_max).total


# ---------------------------------------------------------------------------
# built-in kernels

def cj_kernel(kappa: CZKernelSpec | Callable[[Array], Array], n: int,
              d: int | None = None) -> ClosureKernel:
    """K(alpha, x) = 1_{[0,1]^n}(alpha) kappa(x)."""
    if isinstance(kappa, CZKernelSpec):
        d = kappa.d
        kfun = kappa.kappa
        support = kappa.support
    else:
        if d is None:
            raise InvalidArgumentError("d is required when kappa is a bare closure")
        kfun = kappa
        support = np.inf

    def ev(alpha, x):
        alpha = np.asarray(alpha, dtype=float)
        x = np.asarray(x, dtype=float)
        box = np.ones(x.shape[:-1], dtype=bool)
        for i in range(n):
            box &= (alpha[..., i] >= 0.0) & (alpha[..., i] <= 1.0)
        return np.where(box, kfun(x), 0.0)

    return ClosureKernel(n, d, ev, alpha_box=1.0, x_support=support)


def riesz_kernels(d: int) -> list[CZKernelSpec]:
    """Even degree -d kernels x_i x_j / |x|^{d+2} (i<j) and (x_i^2 - x_d^2)/|x|^{d+2}."""
    if d < 2:
        raise InvalidArgumentError(f"these kernels need d >= 2, got {d}")
    specs = []

    def make_ij(i, j):
        def ev(x):
            r2 = (np.asarray(x, dtype=float) ** 2).sum(axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = x[..., i] * x[..., j] / r2 ** ((d + 2) / 2.0)
            return np.where(r2 > 0, out, 0.0)
        return ev

    def make_i(i):
        def ev(x):
            r2 = (np.asarray(x, dtype=float) ** 2).sum(axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = (x[..., i] ** 2 - x[..., d - 1] ** 2) / r2 ** ((d + 2) / 2.0)
            return np.where(r2 > 0, out, 0.0)
        return ev

    for i in range(d):
        for j in range(i + 1, d):
            specs.append(CZKernelSpec(make_ij(i, j), d, homogeneity=-d, odd=False))
    for i in range(d - 1):
        specs.append(CZKernelSpec(make_i(i), d, homogeneity=-d, odd=False))
    return specs


def smooth_mean_zero_kernel(d: int) -> CZKernelSpec:
    """Smooth compactly supported mean-zero radial kernel (testing workhorse)."""
    c = _bump_mass(d)

    def ev(x):
        r2 = (np.asarray(x, dtype=float) ** 2).sum(axis=-1)
        return (bump_profile(r2) - 2.0 ** (-d) * bump_profile(r2 / 4.0)) / c

    return CZKernelSpec(ev, d, homogeneity=None, odd=False, support=2.0)


# ---------------------------------------------------------------------------
# dyadic decomposition and reconstruction

def psi_closure(d: int) -> Callable[[Array], Array]:
    """Analytic difference mollifier phi - 2^{-d} phi(./2), zero total mass."""
    c = _bump_mass(d)

    def psi(x):
        r2 = (np.asarray(x, dtype=float) ** 2).sum(axis=-1)
        return (bump_profile(r2) - 2.0 ** (-d) * bump_profile(r2 / 4.0)) / c

    return psi


def decompose_kernel(K: ClosureKernel | DyadicKernel, j_range: tuple[int, int],
                     alpha_box: float = 1.0, alpha_res: int = 32,
                     v_box: float = 4.0, v_res: int = 64,
                     max_nodes: int = 2 ** 23) -> DyadicKernel:
    """Dyadic kernel decomposition: piece_j = (Q_j K)^{(2^{-j})}.

    Q_j is x-convolution with the dilated difference mollifier; undoing the
    dilation gives piece_j(alpha, v) = int psi(v - 2^j u) K(alpha, u) du,
    computed by direct quadrature over the kernel's own lattice (which never
    contains the singular point u = 0) with the mollifier evaluated
    analytically.  Piece j lives on its true support 2^j * x_support + 2, so
    no mass is truncated and the per-alpha cancellation gate holds at every
    scale; v_box/v_res set the reference spacing 2*v_box/v_res carried to all
    scales.
    """
    if isinstance(K, DyadicKernel):
        K = K.as_closure()
    n, d = K.n, K.d
    j_min, j_max = j_range
    if j_min > j_max:
        raise InvalidArgumentError("empty scale range")
    psi_radius = 2.0
    hv_target = 2.0 * v_box / v_res
    if hv_target > psi_radius / 8:
        raise ResolutionError(
            f"v spacing {hv_target:.3g} cannot resolve the difference mollifier; "
            f"raise v_res above {int(16 * v_box / psi_radius)}")
    u_box = K.x_support if np.isfinite(K.x_support) else v_box
    psi = psi_closure(d)

    an = midpoint_nodes(alpha_box, alpha_res) if n else np.zeros(1)
    un_1d = midpoint_nodes(u_box, v_res)
    umesh = np.meshgrid(*([un_1d] * d), indexing="ij")
    u_flat = np.stack(umesh, axis=-1).reshape(-1, d)
    hu = (2.0 * u_box / v_res) ** d

    amesh = np.meshgrid(*([an] * n), indexing="ij") if n else []
    a_flat = (np.stack(amesh, axis=-1).reshape(-1, n) if n else np.zeros((1, 0)))
    A = np.broadcast_to(a_flat[:, None, :], (a_flat.shape[0], u_flat.shape[0], n))
    U = np.broadcast_to(u_flat[None], (a_flat.shape[0],) + u_flat.shape)
    K_au = np.asarray(K.eval(A, U), dtype=float)
    if not np.all(np.isfinite(K_au)):
        raise ResolutionError("kernel evaluation not finite on the quadrature lattice")

    arrays = []
    for j in range(j_min, j_max + 1):
        box_j = 2.0 ** j * u_box + psi_radius
        res_j = int(np.ceil(2.0 * box_j / hv_target / 2.0)) * 2
        if a_flat.shape[0] * res_j ** d > max_nodes:
            raise ResolutionError(
                f"scale {j} needs {res_j}^{d} v-nodes; over the node budget")
        vn_1d = midpoint_nodes(box_j, res_j)
        vmesh = np.meshgrid(*([vn_1d] * d), indexing="ij")
        v_flat = np.stack(vmesh, axis=-1).reshape(-1, d)
        scaled_u = 2.0 ** j * u_flat
        out = np.empty((v_flat.shape[0], a_flat.shape[0]))
        chunk = max(1, max_nodes // (8 * u_flat.shape[0]))
        for lo in range(0, v_flat.shape[0], chunk):
            blk = v_flat[lo:lo + chunk]
            M = psi(blk[:, None, :] - scaled_u[None, :, :])
            out[lo:lo + chunk] = M @ K_au.T * hu
        vals = out.T.reshape(tuple(len(an) for _ in range(n)) + (res_j,) * d)
        # enforce the exact discrete cancellation (removes quadrature rounding
        # of the analytic zero-mass mollifier)
        v_axes = tuple(range(n, n + d))
        vals = vals - vals.mean(axis=v_axes, keepdims=True)
        arrays.append((j, box_j, vals))

    peak = max(np.abs(c).max() for _, _, c in arrays) or 1.0
    pieces = []
    for j, box_j, vals in arrays:
        if np.abs(vals).max() < 1e-14 * peak:
            vals = np.zeros_like(vals)
        piece = kernel_from_samples(n, d, alpha_box, box_j, vals, cancels_in_v=True)
        pieces.append((j, piece))
    dk = DyadicKernel(tuple(pieces))
    dk.check_cancellation()
    return dk


def reconstruct(DK: DyadicKernel, test_annulus: tuple[float, float]):
    """Pointwise sum of the dilated pieces, plus a tail-truncation report.

    Returns (closure kernel, report).  The closure is exact for kernels whose
    true decomposition is supported in the held scale range; the report bounds
    the discarded tail by the boundary pieces' masses.
    """
    r_in, r_out = test_annulus
    if not (0 < r_in < r_out):
        raise InvalidArgumentError("annulus must satisfy 0 < r_in < r_out")
    j_min, j_max = DK.scale_range
    finest = 2.0 ** (-j_max)
    coarsest = 2.0 ** (-j_min)
    if r_in < finest / 4 or r_out > coarsest * 4:
        raise ResolutionError(
            f"annulus [{r_in}, {r_out}] outside resolvable scales "
            f"[{finest / 4:.3g}, {coarsest * 4:.3g}]")
    masses = {j: s.l1_norm() for j, s in DK.pieces}
    report = {
        "scale_range": [j_min, j_max],
        "annulus": [r_in, r_out],
        "edge_masses": {str(j): masses[j] for j in (j_min, j_max)},
        "tail_bound_proxy": masses[j_min] + masses[j_max],
    }
    return DK.as_closure(), report


def dyadic_split(s: KernelB, eps: float, depth: int) -> list[tuple[int, KernelB]]:
    """Split s into pieces supported in |v| <= 1/4: s = sum_m piece_m^{(2^{-m})}.

    piece_0 = eta0(v) s(alpha, v); piece_m = eta1(v) 2^{md} s(alpha, 2^m v),
    with eta0 a radial cutoff (1 on |v|<=1/8, 0 on |v|>=1/4) and
    eta1(v) = eta0(v) - eta0(2v).  The partition telescopes exactly, so the
    truncation error is the tail sum over m > depth.
    """
    if depth < 0:
        raise InvalidArgumentError("depth must be nonnegative")

    def eta0(r):
        return 1.0 - smoothstep(8.0 * (np.asarray(r) - 0.125))

    parent = s.eval
    d = s.d
    out = []
    for m in range(depth + 1):
        if m == 0:
            def ev0(alpha, v):
                v = np.asarray(v, dtype=float)
                r = np.sqrt((v ** 2).sum(axis=-1))
                return eta0(r) * parent(alpha, v)
            ev = ev0
        else:
            def ev_m(alpha, v, m=m):
                v = np.asarray(v, dtype=float)
                r = np.sqrt((v ** 2).sum(axis=-1))
                ring = eta0(r) - eta0(2.0 * r)
                return ring * 2.0 ** (m * d) * parent(alpha, 2.0 ** m * v)
            ev = ev_m
        # piece m sees parent detail compressed by 2^m: match the parent
        # spacing on [-1/4, 1/4], geometrically capped
        res_cap = 4096 if d == 1 else 512
        base = int(np.ceil(0.5 / s.v_spacing))
        v_res = int(np.clip(base * 2 ** min(m, 6), 32, res_cap) // 2 * 2)
        out.append((m, KernelB(s.n, d, ev, s.alpha_box, 0.25, s.alpha_res, v_res,
                               s.cancels_in_v, s.alpha1_margin)))
    return out


# ---------------------------------------------------------------------------
# family quantities

def gamma_eps(family: list[KernelB], eps: float, m_max: int = 10) -> float:
    """(sup_j total weighted seminorm) / (sup_j L^1 mass) of a kernel family."""
    if not family:
        raise InvalidArgumentError("family must be nonempty")
    l1 = max(s.l1_norm() for s in family)
    if l1 == 0.0:
        raise UndefinedRatioError("all-zero family has no normalizable ratio")
    top = max(besov_total(s, eps, m_max=m_max) for s in family)
    return top / l1


def m_quantity(family: list[KernelB], n: int, eps: float, nu: float,
               m_max: int = 10) -> float:
    """sup_j L^1 mass times log^nu(1 + n * gamma_eps)."""
    if nu < 0:
        raise InvalidArgumentError("nu must be nonnegative")
    l1 = max(s.l1_norm() for s in family)
    if l1 == 0.0:
        raise UndefinedRatioError("all-zero family has no normalizable ratio")
    g = gamma_eps(family, eps, m_max=m_max)
    return l1 * math.log(1.0 + n * g) ** nu


# ---------------------------------------------------------------------------
# eta profiles and the five-seminorm singular scale

@dataclass(frozen=True)
class EtaSpec:
    """Schwartz-type test profile with directionally nonvanishing transform."""

    eta: SampledField

    def validate(self, n_dirs: int = 8, tau_powers: range = range(-3, 4),
                 floor: float = 1e-3) -> float:
        d = self.eta.grid.dim
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            angles = 2 * np.pi * np.arange(n_dirs) / n_dirs
            dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
            if d > 2:
                raise InvalidArgumentError("eta validation implemented for d <= 2")
        pts = np.stack(self.eta.grid.meshgrid(), axis=-1).reshape(-1, d)
        vals = self.eta.values.reshape(-1)
        vol = self.eta.grid.cell_volume()
        worst = np.inf
        for th in dirs:
            best = 0.0
            for k in tau_powers:
                xi = 2.0 ** k * th
                ft = np.abs((vals * np.exp(-1j * pts @ xi)).sum() * vol)
                best = max(best, float(ft))
            worst = min(worst, best)
        if worst < floor:
            raise InvalidArgumentError(
                f"eta transform drops to {worst:.2g} on a sampled direction (< {floor})")
        return worst


def default_eta(d: int, half_extent: float = 2.0, res: int = 64) -> EtaSpec:
    """Unit-mass radial bump as the convolved-profile test function."""
    grid = Grid(d, half_extent, res)
    r2 = grid.node_radii() ** 2
    vals = bump_profile(r2)
    vals = vals / (vals.sum() * grid.cell_volume())
    spec = EtaSpec(SampledField(grid, vals, 1.0))
    spec.validate()
    return spec


def _same_slice(n: int) -> tuple[slice, ...]:
    return tuple(slice(n // 2, n // 2 + n) for _ in range(1))


def k_norm(K: ClosureKernel | DyadicKernel, eps: float,
           eta: EtaSpec | None = None, x_grid: Grid | None = None,
           alpha_box: float = 2.0, alpha_res: int = 32,
           t_max_pow: int = 3, m_max: int = 8, y_dirs: int = 8) -> NormReport:
    """Five-component dilation-invariant seminorm suite of K(alpha, x).

    Components (sups over recorded dyadic grids; lower bounds of the true
    sups): convolved-L^2 alpha-mass, its alpha-difference quotient, annular
    L^1 mass, annular alpha-difference quotient, and the far-field
    translation-difference term.
    """
    if not (0.0 < eps <= 1.0):
        raise InvalidArgumentError(f"eps must lie in (0, 1], got {eps}")
    if isinstance(K, DyadicKernel):
        K = K.as_closure()
    n, d = K.n, K.d
    eta = eta if eta is not None else default_eta(d)
    x_grid = x_grid if x_grid is not None else Grid(d, 4.0, 128 if d == 1 else 64)
    if eta.eta.grid != x_grid:
        eta = EtaSpec(_resample_field(eta.eta, x_grid))
    N = x_grid.points_per_axis
    hx = x_grid.spacing
    vol_x = x_grid.cell_volume()

    an = midpoint_nodes(alpha_box, alpha_res) if n else np.zeros(1)
    ha = (an[1] - an[0]) if n else 1.0
    vol_a = ha ** n
    amesh = np.meshgrid(*([an] * n), indexing="ij") if n else []
    ashape = tuple(len(an) for _ in range(n))
    alpha_pts = (np.stack(amesh, axis=-1).reshape(-1, n)
                 if n else np.zeros((1, 0)))

    xmesh = np.stack(x_grid.meshgrid(), axis=-1)
    xr = x_grid.node_radii()
    origin_mask = xr < hx / 2

    def sample_K(alpha_flat: Array, x_pts: Array) -> Array:
        """K on the product of flat alpha rows and an x block; origin zeroed."""
        A = alpha_flat[:, None, :] * np.ones(x_pts.shape[:-1])[None, ..., None] \
            if n else np.zeros((1,) + x_pts.shape[:-1] + (0,))
        X = np.broadcast_to(x_pts[None], (alpha_flat.shape[0],) + x_pts.shape)
        vals = K.eval(A, X)
        return np.nan_to_num(vals, nan=0.0, posinf=0.0, neginf=0.0)

    t_list = [2.0 ** k for k in range(-t_max_pow, t_max_pow + 1)]
    eta_vals = eta.eta.values

    def conv_eta(block: Array) -> Array:
        full = signal.fftconvolve(block, eta_vals[None], mode="full",
                                  axes=tuple(range(1, 1 + d)))
        sl = (slice(None),) + tuple(slice(N // 2, N // 2 + N) for _ in range(d))
        return full[sl] * vol_x

    # components 1 and 2: convolved L^2 profiles over dilations
    k1 = 0.0
    k2 = 0.0
    a_shifts = _lattice_dyadic_shifts(ha, m_max) if n else []
    for t in t_list:
        Kt = sample_K(alpha_pts, xmesh * t) * t ** d     # t^d K(alpha, t x)
        Kt[:, origin_mask] = 0.0
        prof = conv_eta(Kt)
        l2 = np.sqrt((prof ** 2).sum(axis=tuple(range(1, 1 + d))) * vol_x)
        l2 = l2.reshape(ashape) if n else l2
        if n:
            for i in range(n):
                w = (1.0 + np.abs(an)) ** eps
                shape = [1] * n
                shape[i] = len(an)
                k1 = max(k1, float((l2 * w.reshape(shape)).sum() * vol_a))
            for i in range(n):
                for m, h, cells in a_shifts:
                    diff = _rolled_diff(l2, i, cells)
                    k2 = max(k2, float(np.abs(diff).sum() * vol_a) / h ** eps)
        else:
            k1 = max(k1, float(l2.sum()))

    # components 3 and 4: annular masses
    r_lo = int(np.ceil(np.log2(2 * hx)))
    r_hi = int(np.floor(np.log2(x_grid.half_extent))) - 1
    R_list = [2.0 ** r for r in range(r_lo, r_hi + 1)]
    if not R_list:
        raise ResolutionError("x grid cannot resolve any dyadic annulus")
    Kbase = sample_K(alpha_pts, xmesh)
    Kbase[:, origin_mask] = 0.0
    k3 = 0.0
    k4 = 0.0
    for R in R_list:
        mask = (xr >= R) & (xr <= 2 * R)
        ann = (np.abs(Kbase[:, mask]).sum(axis=1) * vol_x).reshape(ashape or (1,))
        if n:
            for i in range(n):
                w = (1.0 + np.abs(an)) ** eps
                shape = [1] * n
                shape[i] = len(an)
                k3 = max(k3, float((ann * w.reshape(shape)).sum() * vol_a))
            signed = Kbase[:, mask].reshape(ashape + (-1,))
            for i in range(n):
                for m, h, cells in a_shifts:
                    diff = _rolled_diff(signed, i, cells)
                    k4 = max(k4, float(np.abs(diff).sum() * vol_x * vol_a) / h ** eps)
        else:
            k3 = max(k3, float(ann.sum()))

    # component 5: far-field translation differences over sampled y
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        angles = 2 * np.pi * np.arange(y_dirs) / y_dirs
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    k5 = 0.0
    R5_list = [2.0 ** r for r in range(1, max(2, r_hi - r_lo) + 1)]
    y_mags = [2.0 ** (-m) for m in range(0, m_max + 1) if 2.0 ** (-m) >= 2 * hx]
    for R in R5_list:
        for mag in y_mags:
            if R * mag > x_grid.half_extent:
                continue
            for th in dirs:
                y = mag * th
                mask = xr >= R * mag
                pts = xmesh[mask]
                shifted = sample_K(alpha_pts, pts - y)
                base = sample_K(alpha_pts, pts)
                near = (np.sqrt(((pts - y) ** 2).sum(axis=-1)) < hx / 2)
                shifted[:, near] = 0.0
                val = float(np.abs(shifted - base).sum() * vol_x * vol_a) * R ** eps
                k5 = max(k5, val)

    disc = {
        "alpha_res": alpha_res, "alpha_box": alpha_box,
        "x_points": N, "x_extent": x_grid.half_extent,
        "t_set": t_list, "R_set": R_list, "R5_set": R5_list,
        "y_magnitudes": y_mags, "y_directions": len(dirs),
        "alpha_shift_set": [h for _, h, _ in a_shifts],
        "eta": "radial bump, unit mass",
        "lower_bound": True,
    }
    comps = {"conv_l2_mass": k1, "conv_l2_diff": k2,
             "annular_mass": k3, "annular_diff": k4, "far_translation": k5}
    return NormReport(comps, eps, disc)


def _resample_field(f: SampledField, grid: Grid) -> SampledField:
    pts = np.stack(grid.meshgrid(), axis=-1)
    return SampledField(grid, f.interp(pts), min(f.support_radius, grid.half_extent))
