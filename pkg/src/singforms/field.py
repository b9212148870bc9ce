"""Sampled scalar fields on uniform tensor grids over a box [-L, L]^d.

Grid nodes sit at x_k = -L + k*h, k = 0..N-1, with h = 2L/N (the node 0 is
present for even N).  All integrals are plain Riemann sums h^d * sum(values),
i.e. the midpoint rule for the half-cell-shifted box; node differences stay
on the lattice, so discrete convolution and integer-multiple-of-h shifts are
exact operations.

Fields carry a declared support radius; operations that would push support
outside the box raise SupportOverflowError instead of silently truncating.
Everything here is pure: fields are never mutated after construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage, signal

from .errors import InvalidArgumentError, SupportOverflowError

Array = np.ndarray


@dataclass(frozen=True)
class Grid:
    """Uniform grid over [-L, L]^d with N points per axis."""

    dim: int
    half_extent: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {self.dim}")
        if not (self.half_extent > 0 and np.isfinite(self.half_extent)):
            raise InvalidArgumentError(f"half_extent must be positive, got {self.half_extent}")
        n = self.points_per_axis
        if n < 4 or n % 2 != 0:
            raise InvalidArgumentError(f"points_per_axis must be even and >= 4, got {n}")
        if n ** self.dim > 2 ** 28:
            raise InvalidArgumentError(f"grid with {n}^{self.dim} nodes is too large")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    def axis_nodes(self) -> Array:
        """1-D node coordinates -L + k*h, k = 0..N-1."""
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis)

    def meshgrid(self) -> list[Array]:
        ax = self.axis_nodes()
        return list(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def node_radii(self) -> Array:
        """|x| at every node, shaped like the value array."""
        mesh = self.meshgrid()
        return np.sqrt(sum(m * m for m in mesh))

    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    def cell_volume(self) -> float:
        return self.spacing ** self.dim


@dataclass(frozen=True)
class SampledField:
    """Scalar field sampled on a Grid, with declared compact support."""

    grid: Grid
    values: Array
    support_radius: float = dc_field(default=np.inf)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape():
            raise InvalidArgumentError(
                f"values shape {vals.shape} does not match grid shape {self.grid.shape()}")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("field values must be finite")
        object.__setattr__(self, "values", vals)
        r = min(float(self.support_radius), self.grid.half_extent)
        object.__setattr__(self, "support_radius", r)

    @property
    def h(self) -> float:
        return self.grid.spacing

    def __call__(self, points: Array) -> Array:
        """Multilinear interpolation at points of shape (..., d); 0 outside the box."""
        return self.interp(points)

    def interp(self, points: Array) -> Array:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.grid.dim:
            raise InvalidArgumentError(
                f"points have dim {pts.shape[-1]}, field has dim {self.grid.dim}")
        coords = (pts + self.grid.half_extent) / self.h
        coords = coords.reshape(-1, self.grid.dim).T
        # snap float-rounded lattice hits so node queries are exact
        snapped = np.round(coords)
        coords = np.where(np.abs(coords - snapped) < 1e-9, snapped, coords)
        out = ndimage.map_coordinates(
            self.values, coords, order=1, mode="constant", cval=0.0)
        return out.reshape(pts.shape[:-1])

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume())

    def with_values(self, values: Array, support_radius: float | None = None) -> "SampledField":
        r = self.support_radius if support_radius is None else support_radius
        return SampledField(self.grid, values, r)


@dataclass(frozen=True)
class ExponentTuple:
    """Hölder exponents p_1..p_{n+2} in (1, inf] with sum of reciprocals 1."""

    exponents: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(p) for p in self.exponents)
        for p in exps:
            if not (p > 1):
                raise InvalidArgumentError(f"exponents must lie in (1, inf], got {p}")
        recip = sum(0.0 if np.isinf(p) else 1.0 / p for p in exps)
        if abs(recip - 1.0) > 1e-12:
            raise InvalidArgumentError(f"sum of reciprocals is {recip}, must be 1")
        object.__setattr__(self, "exponents", exps)

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)


def field_from_closure(grid: Grid, fn, support_radius: float = np.inf) -> SampledField:
    """Sample a closure fn(x) (x of shape (..., d)) on the grid."""
    mesh = grid.meshgrid()
    pts = np.stack(mesh, axis=-1)
    vals = np.asarray(fn(pts), dtype=float)
    if support_radius < grid.half_extent:
        vals = np.where(grid.node_radii() <= support_radius, vals, 0.0)
    return SampledField(grid, vals, support_radius)


def bump_field(grid: Grid, center=None, radius: float = 1.0, height: float = 1.0) -> SampledField:
    """Smooth compactly supported bump height*exp(-r^2/(radius^2-r^2)) around center."""
    center = np.zeros(grid.dim) if center is None else np.asarray(center, dtype=float)
    if np.linalg.norm(center) + radius > grid.half_extent:
        raise SupportOverflowError("bump support escapes the grid box")

    def fn(pts):
        r2 = ((pts - center) ** 2).sum(axis=-1)
        inside = r2 < radius ** 2
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vals = np.where(inside, np.exp(-r2 / np.maximum(radius ** 2 - r2, 1e-300)), 0.0)
        return height * vals

    return field_from_closure(grid, fn, support_radius=float(np.linalg.norm(center) + radius))


def indicator_field(grid: Grid, lo, hi) -> SampledField:
    """Indicator of the axis-aligned box [lo, hi]^d (lo, hi per-axis or scalars)."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (grid.dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (grid.dim,))

    def fn(pts):
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for a in range(grid.dim):
            inside &= (pts[..., a] >= lo[a]) & (pts[..., a] <= hi[a])
        return inside.astype(float)

    return field_from_closure(grid, fn, support_radius=float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))))


def dilate(f: SampledField, t: float) -> SampledField:
    """L^1-normalized dilation x -> t^d f(t x), resampled on f's grid."""
    if not (np.isfinite(t) and t > 0):
        raise InvalidArgumentError(f"dilation factor must be positive and finite, got {t}")
    if t == 1.0:
        return f
    pts = np.stack(f.grid.meshgrid(), axis=-1) * t
    vals = (t ** f.grid.dim) * f.interp(pts)
    return SampledField(f.grid, vals, min(f.support_radius / t, f.grid.half_extent))


def translate(f: SampledField, a) -> SampledField:
    """Shift x -> f(x - a); exact index roll for shifts on the h-lattice."""
    a = np.broadcast_to(np.asarray(a, dtype=float), (f.grid.dim,))
    if float(np.linalg.norm(a)) + f.support_radius > f.grid.half_extent * (1 + 1e-12):
        raise SupportOverflowError(
            f"translated support radius {np.linalg.norm(a) + f.support_radius:.4g} "
            f"exceeds box extent {f.grid.half_extent:.4g}")
    steps = a / f.h
    new_r = min(float(np.linalg.norm(a)) + f.support_radius, f.grid.half_extent)
    if np.allclose(steps, np.round(steps), atol=1e-12):
        k = np.round(steps).astype(int)
        vals = f.values
        for axis, ka in enumerate(k):
            if ka == 0:
                continue
            vals = np.roll(vals, ka, axis=axis)
            sl = [slice(None)] * f.grid.dim
            sl[axis] = slice(0, ka) if ka > 0 else slice(ka, None)
            vals = vals.copy()
            vals[tuple(sl)] = 0.0
        return SampledField(f.grid, vals, new_r)
    pts = np.stack(f.grid.meshgrid(), axis=-1) - a
    return SampledField(f.grid, f.interp(pts), new_r)


def lp_norm(f: SampledField, p: float) -> float:
    """Riemann-sum L^p norm; p = inf gives the max of |values|."""
    if np.isinf(p):
        return float(np.abs(f.values).max())
    if p < 1:
        raise InvalidArgumentError(f"p must be >= 1 or inf, got {p}")
    return float((np.abs(f.values) ** p).sum() * f.grid.cell_volume()) ** (1.0 / p)


def segment_mean(a: SampledField, x, y, s_nodes: int = 8) -> float:
    """Mean of a along the segment from x to y (midpoint rule in the parameter)."""
    x = np.broadcast_to(np.asarray(x, dtype=float), (a.grid.dim,))
    y = np.broadcast_to(np.asarray(y, dtype=float), (a.grid.dim,))
    L = a.grid.half_extent
    if np.abs(x).max() > L or np.abs(y).max() > L:
        raise InvalidArgumentError("segment endpoints must lie inside the grid box")
    if s_nodes < 1:
        raise InvalidArgumentError("s_nodes must be positive")
    if np.array_equal(x, y):
        return float(a.interp(x[None, :])[0])
    s = (np.arange(s_nodes) + 0.5) / s_nodes
    pts = s[:, None] * x[None, :] + (1.0 - s)[:, None] * y[None, :]
    return float(a.interp(pts).mean())


def segment_means_batch(a: SampledField, x, ys: Array, s_nodes: int = 8) -> Array:
    """segment_mean of a from a single x to many y's (vectorized)."""
    x = np.broadcast_to(np.asarray(x, dtype=float), (a.grid.dim,))
    ys = np.asarray(ys, dtype=float)
    s = (np.arange(s_nodes) + 0.5) / s_nodes
    pts = s[:, None, None] * x[None, None, :] + (1.0 - s)[:, None, None] * ys[None, :, :]
    return a.interp(pts).mean(axis=0)


def convolve(f: SampledField, g: SampledField, method: str = "fft") -> SampledField:
    """(f*g)(x) = h^d sum_y f(y) g(x-y) on the shared grid.

    Node differences are lattice points, so the discrete convolution is exact
    and the fft/direct paths agree to rounding.
    """
    if f.grid != g.grid:
        raise InvalidArgumentError("convolve requires fields on the same grid")
    if f.support_radius + g.support_radius > f.grid.half_extent * (1 + 1e-12):
        raise SupportOverflowError(
            f"combined support {f.support_radius + g.support_radius:.4g} exceeds "
            f"box extent {f.grid.half_extent:.4g}")
    if method not in ("fft", "direct"):
        raise InvalidArgumentError(f"unknown convolution method {method!r}")
    full = signal.convolve(f.values, g.values, mode="full", method=method)
    n = f.grid.points_per_axis
    sl = tuple(slice(n // 2, n // 2 + n) for _ in range(f.grid.dim))
    vals = full[sl] * f.grid.cell_volume()
    return SampledField(f.grid, vals, min(f.support_radius + g.support_radius, f.grid.half_extent))


def convolve_values(f: SampledField, kernel_values: Array) -> Array:
    """Convolution of f with raw kernel samples on the same grid (no support gate).

    Used for mollifier projections whose kernels may exceed the box; the input
    field's support is inside the box, so box values of the result are exact.
    """
    full = signal.fftconvolve(f.values, np.asarray(kernel_values, dtype=float), mode="full")
    n = f.grid.points_per_axis
    sl = tuple(slice(n // 2, n // 2 + n) for _ in range(f.grid.dim))
    return full[sl] * f.grid.cell_volume()


def save_field_csv(f: SampledField, path) -> None:
    """CSV schema: header `dim,extent,points_per_axis`, then row-major values."""
    buf = io.StringIO()
    buf.write(f"{f.grid.dim},{f.grid.half_extent!r},{f.grid.points_per_axis}\n")
    np.savetxt(buf, f.values.reshape(-1), fmt="%.17g")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_field_csv(path) -> SampledField:
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        dim, extent, n = int(head[0]), float(head[1]), int(head[2])
        vals = np.loadtxt(fh).reshape((n,) * dim)
    return SampledField(Grid(dim, extent, n), vals)
