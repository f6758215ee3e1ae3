"""Elevation raster, terrain clearance and the terrain-following wind field.

Grid nodes are stored south-to-north: ``elevations[r, c]`` is the height at
``(origin_x + c * cellsize, origin_y + r * cellsize)``.  ESRI ASCII files list
the northern row first, so :func:`read_esri_ascii` flips on load.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

_DEGENERATE_AXIS = 1e-12


@dataclass(frozen=True)
class DemGrid:
    ncols: int
    nrows: int
    cellsize: float
    origin: tuple[float, float]
    elevations: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.ncols < 2 or self.nrows < 2:
            raise ValueError("a DEM needs at least 2x2 nodes")
        if not self.cellsize > 0:
            raise ValueError("cellsize must be positive")
        z = np.asarray(self.elevations, dtype=float)
        if z.shape != (self.nrows, self.ncols):
            raise ValueError(f"elevations shape {z.shape} != ({self.nrows}, {self.ncols})")
        if not np.all(np.isfinite(z)):
            raise ValueError("elevations must be finite")
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "elevations", z)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def from_array(cls, elevations, cellsize: float, origin=(0.0, 0.0)) -> "DemGrid":
        z = np.asarray(elevations, dtype=float)
        return cls(ncols=z.shape[1], nrows=z.shape[0], cellsize=float(cellsize), origin=origin, elevations=z)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the node lattice."""
        x0, y0 = self.origin
        return (x0, x0 + (self.ncols - 1) * self.cellsize, y0, y0 + (self.nrows - 1) * self.cellsize)

    @property
    def center(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.extent
        return (0.5 * (xmin + xmax), 0.5 * (ymin + ymax))

    def contains(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.extent
        return xmin <= x <= xmax and ymin <= y <= ymax

    def node_xy(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin[0] + col * self.cellsize, self.origin[1] + row * self.cellsize)

    def nearest_node(self, x: float, y: float) -> tuple[int, int]:
        col = int(round((x - self.origin[0]) / self.cellsize))
        row = int(round((y - self.origin[1]) / self.cellsize))
        return (min(max(row, 0), self.nrows - 1), min(max(col, 0), self.ncols - 1))

    def clamp_xy(self, x: float, y: float) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.extent
        return (min(max(x, xmin), xmax), min(max(y, ymin), ymax))


def interpolate_elevation(grid: DemGrid, x: float, y: float) -> float:
    """Bilinear elevation at ``(x, y)``; raises DomainError outside the lattice."""
    if not grid.contains(x, y):
        raise DomainError(f"point ({x}, {y}) outside DEM extent {grid.extent}")
    fc = (x - grid.origin[0]) / grid.cellsize
    fr = (y - grid.origin[1]) / grid.cellsize
    c0 = min(int(math.floor(fc)), grid.ncols - 2)
    r0 = min(int(math.floor(fr)), grid.nrows - 2)
    tx = fc - c0
    ty = fr - r0
    z = grid.elevations
    bottom = z[r0, c0] * (1.0 - tx) + z[r0, c0 + 1] * tx
    top = z[r0 + 1, c0] * (1.0 - tx) + z[r0 + 1, c0 + 1] * tx
    return float(bottom * (1.0 - ty) + top * ty)


def clearance(grid: DemGrid, p, delta: float) -> bool:
    """True when every sampled DEM point is at least ``delta`` from ``p``.

    Samples are the lattice nodes within horizontal radius ``2 * delta`` and the
    interpolated foot point below ``p`` (clamped into the lattice when ``p`` lies
    outside it).
    """
    if not delta > 0:
        raise DomainError("buffer radius must be positive")
    return min_terrain_distance(grid, p, 2.0 * delta) >= delta


def min_terrain_distance(grid: DemGrid, p, radius: float) -> float:
    px, py, pz = (float(v) for v in p)
    fx, fy = grid.clamp_xy(px, py)
    best = math.dist((px, py, pz), (fx, fy, interpolate_elevation(grid, fx, fy)))
    x0, y0 = grid.origin
    cs = grid.cellsize
    c_lo = max(int(math.ceil((px - radius - x0) / cs)), 0)
    c_hi = min(int(math.floor((px + radius - x0) / cs)), grid.ncols - 1)
    r_lo = max(int(math.ceil((py - radius - y0) / cs)), 0)
    r_hi = min(int(math.floor((py + radius - y0) / cs)), grid.nrows - 1)
    if c_lo <= c_hi and r_lo <= r_hi:
        cols = np.arange(c_lo, c_hi + 1)
        rows = np.arange(r_lo, r_hi + 1)
        gx = x0 + cols * cs
        gy = y0 + rows * cs
        dx2 = (gx - px) ** 2
        dy2 = (gy - py) ** 2
        horiz2 = dy2[:, None] + dx2[None, :]
        inside = horiz2 <= radius * radius
        if inside.any():
            dz2 = (grid.elevations[r_lo:r_hi + 1, c_lo:c_hi + 1] - pz) ** 2
            best = min(best, float(np.sqrt((horiz2 + dz2)[inside].min())))
    return best


def min_clear_altitude(grid: DemGrid, x: float, y: float, delta: float, floor: float,
                       ceiling: float | None = None, tol: float = 1e-3) -> float | None:
    """Lowest absolute altitude >= ``floor`` over ``(x, y)`` that passes :func:`clearance`.

    Returns None when no altitude up to ``ceiling`` is clear.
    """
    if clearance(grid, (x, y, floor), delta):
        return floor
    top = float(np.max(grid.elevations)) + delta + 1.0
    if ceiling is not None:
        if not clearance(grid, (x, y, ceiling), delta):
            return None
        top = min(top, ceiling)
    top = max(top, floor)
    while not clearance(grid, (x, y, top), delta):
        top += delta
    lo, hi = floor, top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if clearance(grid, (x, y, mid), delta):
            hi = mid
        else:
            lo = mid
    return hi


def synthetic_dem(seed: int, size=(3000.0, 3000.0), cellsize: float = 30.0, n_hills: int = 6,
                  max_height: float = 60.0, base: float = 20.0, centered: bool = True) -> DemGrid:
    """Seeded sum-of-Gaussians relief, for runs without a real DEM file."""
    rng = np.random.default_rng(seed)
    width, depth = size
    ncols = int(round(width / cellsize)) + 1
    nrows = int(round(depth / cellsize)) + 1
    origin = (-width / 2.0, -depth / 2.0) if centered else (0.0, 0.0)
    xs = origin[0] + np.arange(ncols) * cellsize
    ys = origin[1] + np.arange(nrows) * cellsize
    gx, gy = np.meshgrid(xs, ys)
    z = np.full(gx.shape, float(base))
    for _ in range(n_hills):
        cx = rng.uniform(xs[0], xs[-1])
        cy = rng.uniform(ys[0], ys[-1])
        amp = rng.uniform(0.3, 1.0) * max_height
        spread = rng.uniform(0.08, 0.2) * min(width, depth)
        z += amp * np.exp(-((gx - cx) ** 2 + (gy - cy) ** 2) / (2.0 * spread ** 2))
    return DemGrid.from_array(z, cellsize, origin)


def read_esri_ascii(path) -> DemGrid:
    header: dict[str, float] = {}
    values: list[float] = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not values and key in {"ncols", "nrows", "xllcorner", "yllcorner", "xllcenter",
                                      "yllcenter", "cellsize", "nodata_value"}:
                header[key] = float(parts[1])
            else:
                values.extend(float(v) for v in parts)
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if len(values) != ncols * nrows:
        raise ValueError(f"expected {ncols * nrows} elevations, found {len(values)}")
    x0 = header.get("xllcorner", header.get("xllcenter"))
    y0 = header.get("yllcorner", header.get("yllcenter"))
    if x0 is None or y0 is None:
        raise ValueError("DEM header lacks xll/yll origin")
    z = np.asarray(values, dtype=float).reshape(nrows, ncols)[::-1]
    if "nodata_value" in header and np.any(z == header["nodata_value"]):
        raise ValueError("DEM contains NODATA cells")
    return DemGrid(ncols, nrows, header["cellsize"], (x0, y0), z)


def write_esri_ascii(grid: DemGrid, path) -> None:
    lines = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {grid.origin[0]!r}",
        f"yllcorner {grid.origin[1]!r}",
        f"cellsize {grid.cellsize!r}",
    ]
    for row in grid.elevations[::-1]:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# -- wind -------------------------------------------------------------------

def rotation_matrix(axis, theta: float) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis`` by ``theta`` radians."""
    o = np.asarray(axis, dtype=float)
    o = o / np.linalg.norm(o)
    skew = np.array([[0.0, -o[2], o[1]], [o[2], 0.0, -o[0]], [-o[1], o[0], 0.0]])
    return math.cos(theta) * np.eye(3) + (1.0 - math.cos(theta)) * np.outer(o, o) + math.sin(theta) * skew


def rotate_wind(f, f_next, theta_r: float, axis=None) -> tuple[np.ndarray, bool]:
    """Rotate ``f`` so it follows the terrain toward its neighbour ``f_next``.

    The axis is ``(f x f_next) x z`` unless given explicitly.  Returns the rotated
    vector and a flag that is True when the axis degenerates (``f`` is then
    returned unchanged).
    """
    f = np.asarray(f, dtype=float)
    if axis is None:
        axis = np.cross(np.cross(f, np.asarray(f_next, dtype=float)), (0.0, 0.0, 1.0))
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n < _DEGENERATE_AXIS * max(1.0, float(np.dot(f, f))):
        return f.copy(), True
    return rotation_matrix(axis / n, theta_r) @ f, False


@dataclass(frozen=True)
class WindField:
    base_vectors: np.ndarray = field(repr=False)
    rotated: np.ndarray = field(repr=False)
    direction_angle: float
    rotation_angle: float
    degenerate: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, grid: DemGrid, direction_angle: float, rotation_angle: float, speed: float) -> "WindField":
        """Per-node wind from the terrain-following construction.

        The raw vector at each node is ``[d, d/tan(theta_f), h/tan(theta_f)]`` with
        ``d`` the cell spacing and ``h`` the rise to the downwind neighbour; it is
        rescaled to ``speed`` m/s and rotated toward the neighbour's vector.
        """
        t = math.tan(direction_angle)
        if abs(t) < 1e-12:
            raise ValueError("wind direction angle makes tan() vanish")
        d = grid.cellsize
        bearing = math.atan2(1.0 / t, 1.0)
        step_c = int(np.rint(math.cos(bearing)))
        step_r = int(np.rint(math.sin(bearing)))
        z = grid.elevations
        rows = np.clip(np.arange(grid.nrows) + step_r, 0, grid.nrows - 1)
        cols = np.clip(np.arange(grid.ncols) + step_c, 0, grid.ncols - 1)
        dz = z[np.ix_(rows, cols)] - z
        raw = np.empty(z.shape + (3,))
        raw[..., 0] = d
        raw[..., 1] = d / t
        raw[..., 2] = dz / t
        norms = np.linalg.norm(raw, axis=-1, keepdims=True)
        base = raw * (speed / norms) if speed > 0 else np.zeros_like(raw)
        nxt = base[np.ix_(rows, cols)]
        rotated = np.empty_like(base)
        degenerate = np.zeros(z.shape, dtype=bool)
        for r in range(grid.nrows):
            for c in range(grid.ncols):
                if speed <= 0:
                    rotated[r, c] = 0.0
                    continue
                rotated[r, c], degenerate[r, c] = rotate_wind(base[r, c], nxt[r, c], rotation_angle)
        for arr in (base, rotated, degenerate):
            arr.setflags(write=False)
        return cls(base, rotated, float(direction_angle), float(rotation_angle), degenerate)

    @classmethod
    def uniform(cls, grid: DemGrid, vector) -> "WindField":
        v = np.broadcast_to(np.asarray(vector, dtype=float), (grid.nrows, grid.ncols, 3)).copy()
        v.setflags(write=False)
        flags = np.zeros((grid.nrows, grid.ncols), dtype=bool)
        return cls(v, v, 0.0, 0.0, flags)

    @classmethod
    def calm(cls, grid: DemGrid) -> "WindField":
        return cls.uniform(grid, (0.0, 0.0, 0.0))


def drag_force(v, drag_coefficient: float) -> np.ndarray:
    """Quadratic drag ``c_d * v * |v|`` (N) for a wind velocity ``v`` (m/s)."""
    v = np.asarray(v, dtype=float)
    return drag_coefficient * v * float(np.linalg.norm(v))


def wind_velocity_at(field: WindField, grid: DemGrid, p) -> np.ndarray:
    row, col = grid.nearest_node(float(p[0]), float(p[1]))
    return np.array(field.rotated[row, col])


def wind_at(field: WindField, grid: DemGrid, p, drag_coefficient: float = 0.117) -> np.ndarray:
    """Wind force (N) on the airframe at ``p`` from the nearest node's rotated vector."""
    return drag_force(wind_velocity_at(field, grid, p), drag_coefficient)
