"""Desk-scale tactile sensor simulator.

Stands in for both sides of a sim2real pair: ``render_depth`` produces the
gel-penetration heightmap a contact simulator would output, and
``oracle_render`` produces a deterministic "real" tactile image by shading
that heightmap with three colored directional lights.

Geometry is metric (mm). Depth maps are H×W arrays of penetration depth
(0 = no contact); tactile images are 3×H×W floats in [0, 1].

The contact model is quasi-static and rigid: an indenter is described by its
downward-facing surface height S(x, y) above its lowest point, and pressing
it to penetration p leaves the gel indented by max(0, p - S). Shading is a
Phong diffuse+specular model evaluated as a *difference from the flat-gel
response*, so zero contact reproduces the calibrated background exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Light",
    "SensorSpec",
    "ContactPose",
    "Sphere",
    "Edge",
    "BrailleCell",
    "PoseGrid",
    "BRAILLE_DOTS",
    "braille_pattern",
    "braille_cell",
    "render_depth",
    "oracle_render",
    "pose_grid",
    "sample_poses",
    "primitive_shapes",
    "default_sensor",
    "make_default_background",
]


@dataclass(frozen=True)
class Light:
    """Directional light: unit vector pointing from the surface toward the
    light, and an RGB color."""

    direction: tuple[float, float, float]
    color: tuple[float, float, float]

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if not math.isclose(float(np.linalg.norm(d)), 1.0, abs_tol=1e-6):
            raise ValueError(f"light direction must be unit-norm, got {self.direction}")


@dataclass(frozen=True)
class SensorSpec:
    gel_size_mm: tuple[float, float]  # (width, height)
    resolution: tuple[int, int]  # (H, W)
    max_penetration_mm: float
    lights: tuple[Light, Light, Light]
    ambient: tuple[float, float, float]
    background: np.ndarray  # 3×H×W in [0, 1]
    k_diffuse: float = 0.55
    k_specular: float = 0.20
    shininess: float = 16.0

    def __post_init__(self):
        h, w = self.resolution
        if h <= 0 or w <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.max_penetration_mm <= 0:
            raise ValueError("max_penetration_mm must be positive")
        if self.background.shape != (3, h, w):
            raise ValueError(
                f"background shape {self.background.shape} != (3, {h}, {w})"
            )

    @property
    def pixel_pitch_mm(self) -> tuple[float, float]:
        """(row pitch, column pitch) in mm/pixel."""
        h, w = self.resolution
        gw, gh = self.gel_size_mm
        return gh / h, gw / w

    def pixel_grid_mm(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates (yy, xx) in mm, origin at the gel center.

        x grows with column index, y with row index.
        """
        h, w = self.resolution
        gw, gh = self.gel_size_mm
        xs = (np.arange(w) + 0.5) * (gw / w) - gw / 2
        ys = (np.arange(h) + 0.5) * (gh / h) - gh / 2
        return np.meshgrid(ys, xs, indexing="ij")


@dataclass(frozen=True)
class ContactPose:
    """In-plane offset, penetration command (negative dz = deeper) and yaw."""

    dx_mm: float = 0.0
    dy_mm: float = 0.0
    dz_mm: float = 0.0
    yaw_deg: float = 0.0

    def __post_init__(self):
        if not -180.0 <= self.yaw_deg < 180.0:
            raise ValueError(f"yaw must be in [-180, 180), got {self.yaw_deg}")

    @property
    def penetration_mm(self) -> float:
        return max(0.0, -self.dz_mm)


# --------------------------------------------------------------------------
# Indenter shapes. Each exposes surface_height(x, y) -> height of the
# indenter surface above its lowest point, in shape-local coordinates;
# np.inf where the indenter cannot touch at any depth.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Sphere:
    radius_mm: float

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise ValueError("sphere radius must be positive")

    def surface_height(self, x, y):
        r2 = x * x + y * y
        inside = r2 < self.radius_mm**2
        h = np.full_like(x, np.inf)
        h[inside] = self.radius_mm - np.sqrt(self.radius_mm**2 - r2[inside])
        return h


@dataclass(frozen=True)
class Edge:
    """Rounded ridge (half-cylinder) running along the local y axis."""

    width_mm: float

    def __post_init__(self):
        if self.width_mm <= 0:
            raise ValueError("edge width must be positive")

    def surface_height(self, x, y):
        r = self.width_mm / 2
        inside = np.abs(x) < r
        h = np.full_like(x, np.inf)
        h[inside] = r - np.sqrt(r**2 - x[inside] ** 2)
        return h


# Standard 6-dot assignments: dots 1-3 top-to-bottom in the left column,
# 4-6 in the right column; '#' is the number sign.
BRAILLE_DOTS: dict[str, frozenset[int]] = {
    "A": frozenset({1}),
    "B": frozenset({1, 2}),
    "C": frozenset({1, 4}),
    "D": frozenset({1, 4, 5}),
    "E": frozenset({1, 5}),
    "F": frozenset({1, 2, 4}),
    "G": frozenset({1, 2, 4, 5}),
    "H": frozenset({1, 2, 5}),
    "I": frozenset({2, 4}),
    "J": frozenset({2, 4, 5}),
    "K": frozenset({1, 3}),
    "L": frozenset({1, 2, 3}),
    "M": frozenset({1, 3, 4}),
    "N": frozenset({1, 3, 4, 5}),
    "O": frozenset({1, 3, 5}),
    "P": frozenset({1, 2, 3, 4}),
    "Q": frozenset({1, 2, 3, 4, 5}),
    "R": frozenset({1, 2, 3, 5}),
    "S": frozenset({2, 3, 4}),
    "T": frozenset({2, 3, 4, 5}),
    "U": frozenset({1, 3, 6}),
    "V": frozenset({1, 2, 3, 6}),
    "W": frozenset({2, 4, 5, 6}),
    "X": frozenset({1, 3, 4, 6}),
    "Y": frozenset({1, 3, 4, 5, 6}),
    "Z": frozenset({1, 3, 5, 6}),
    "#": frozenset({3, 4, 5, 6}),
}

BRAILLE_CHARACTERS = "".join(sorted(BRAILLE_DOTS))  # '#' then A..Z


def braille_pattern(ch: str) -> frozenset[int]:
    """Dot mask for one of the 27 supported characters (A-Z and '#')."""
    try:
        return BRAILLE_DOTS[ch]
    except KeyError:
        raise ValueError(f"unsupported braille character {ch!r}") from None


@dataclass(frozen=True)
class BrailleCell:
    """One braille cell: spherical-cap dots on a flat plate.

    Dot positions follow the standard 2×3 layout; dimensions default to
    standard braille scaled up 2× to match palm-sized printed characters on
    a desk sensor.
    """

    pattern: frozenset[int]
    dot_radius_mm: float = 1.5
    dot_pitch_mm: float = 5.0
    dot_height_mm: float = 1.0

    def __post_init__(self):
        if not self.pattern or not self.pattern <= {1, 2, 3, 4, 5, 6}:
            raise ValueError("braille pattern must be a non-empty subset of 1..6")
        if min(self.dot_radius_mm, self.dot_pitch_mm, self.dot_height_mm) <= 0:
            raise ValueError("braille cell dimensions must be positive")

    def dot_centers(self) -> list[tuple[float, float]]:
        p = self.dot_pitch_mm
        pos = {
            1: (-p / 2, -p), 2: (-p / 2, 0.0), 3: (-p / 2, p),
            4: (p / 2, -p), 5: (p / 2, 0.0), 6: (p / 2, p),
        }
        return [pos[d] for d in sorted(self.pattern)]

    def surface_height(self, x, y):
        # Spherical cap of base radius r and height h; the carrier plate sits
        # at height h (it touches the gel once the dots are fully pressed in).
        r, hd = self.dot_radius_mm, self.dot_height_mm
        cap_r = (r * r + hd * hd) / (2 * hd)  # sphere radius of the cap
        profile = np.zeros_like(x)
        for cx, cy in self.dot_centers():
            d2 = (x - cx) ** 2 + (y - cy) ** 2
            inside = d2 < r * r
            cap = np.sqrt(cap_r**2 - d2[inside]) - (cap_r - hd)
            profile[inside] = np.maximum(profile[inside], cap)
        return self.dot_height_mm - profile


def braille_cell(ch: str, **dims) -> BrailleCell:
    """Braille cell shape for a character, with optional dimension overrides."""
    return BrailleCell(pattern=braille_pattern(ch), **dims)


IndenterShape = Sphere | Edge | BrailleCell


def render_depth(shape: IndenterShape, pose: ContactPose, sensor: SensorSpec) -> np.ndarray:
    """Gel-penetration depth map (mm) for one contact.

    The shape is rotated by the pose yaw and translated by (dx, dy); commanded
    penetration beyond the gel limit saturates at max_penetration_mm.
    """
    gw, gh = sensor.gel_size_mm
    if abs(pose.dx_mm) > gw / 2 or abs(pose.dy_mm) > gh / 2:
        raise ValueError(
            f"pose offset ({pose.dx_mm}, {pose.dy_mm}) outside gel bounds "
            f"±({gw / 2}, {gh / 2})"
        )
    yy, xx = sensor.pixel_grid_mm()
    # world -> shape-local: translate then rotate by -yaw
    c = math.cos(math.radians(pose.yaw_deg))
    s = math.sin(math.radians(pose.yaw_deg))
    tx = xx - pose.dx_mm
    ty = yy - pose.dy_mm
    lx = c * tx + s * ty
    ly = -s * tx + c * ty
    surface = shape.surface_height(lx, ly)
    pen = np.maximum(0.0, pose.penetration_mm - surface)
    return np.minimum(pen, sensor.max_penetration_mm)


def _shading(normals: np.ndarray, sensor: SensorSpec) -> np.ndarray:
    """Phong response (3×H×W) for a field of unit normals (3×H×W)."""
    out = np.zeros((3,) + normals.shape[1:], dtype=np.float64)
    out += np.asarray(sensor.ambient, dtype=np.float64)[:, None, None]
    for light in sensor.lights:
        ldir = np.asarray(light.direction, dtype=np.float64)
        color = np.asarray(light.color, dtype=np.float64)
        ndotl = np.einsum("chw,c->hw", normals, ldir)
        diffuse = np.maximum(0.0, ndotl)
        # z component of the light's mirror reflection about the normal;
        # equals R.V for the straight-down view direction V = (0, 0, 1)
        refl_z = 2.0 * ndotl * normals[2] - ldir[2]
        spec = np.where(ndotl > 0, np.maximum(0.0, refl_z), 0.0) ** sensor.shininess
        term = sensor.k_diffuse * diffuse + sensor.k_specular * spec
        out += color[:, None, None] * term[None, :, :]
    return out


def oracle_render(depth: np.ndarray, sensor: SensorSpec) -> np.ndarray:
    """Deterministic "real" tactile image for a depth map.

    Surface normals come from central differences of the gel height
    (-depth); each pixel gets background + (Phong(normal) - Phong(flat)),
    clamped to [0, 1]. Flat regions therefore reproduce the background
    exactly, and the constant flat-gel response is treated as already folded
    into the calibrated background.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != sensor.resolution:
        raise ValueError(f"depth shape {depth.shape} != resolution {sensor.resolution}")
    if np.any(depth < 0) or not np.all(np.isfinite(depth)):
        raise ValueError("depth must be finite and non-negative")
    pitch_y, pitch_x = sensor.pixel_pitch_mm
    height = -depth
    dh_dy, dh_dx = np.gradient(height, pitch_y, pitch_x)
    normals = np.stack([-dh_dx, -dh_dy, np.ones_like(height)])
    normals /= np.linalg.norm(normals, axis=0, keepdims=True)
    flat = np.zeros_like(normals)
    flat[2] = 1.0
    delta = _shading(normals, sensor) - _shading(flat, sensor)
    return np.clip(sensor.background + delta, 0.0, 1.0)


@dataclass(frozen=True)
class PoseGrid:
    """Cartesian grid of contact poses (explicit value lists per axis)."""

    dx_mm: tuple[float, ...]
    dy_mm: tuple[float, ...]
    dz_mm: tuple[float, ...]
    yaw_deg: tuple[float, ...]


def pose_grid(grid: PoseGrid) -> list[ContactPose]:
    """All grid poses, in deterministic dx-major / yaw-minor order."""
    if not (grid.dx_mm and grid.dy_mm and grid.dz_mm and grid.yaw_deg):
        raise ValueError("pose grid has an empty axis")
    return [
        ContactPose(dx_mm=dx, dy_mm=dy, dz_mm=dz, yaw_deg=yaw)
        for dx in grid.dx_mm
        for dy in grid.dy_mm
        for dz in grid.dz_mm
        for yaw in grid.yaw_deg
    ]


def sample_poses(
    n: int,
    seed,
    dx_range: tuple[float, float],
    dy_range: tuple[float, float],
    dz_range: tuple[float, float],
    yaw_range: tuple[float, float] = (-180.0, 180.0),
) -> list[ContactPose]:
    """n poses drawn uniformly from the given ranges (deterministic per seed)."""
    if n < 1:
        raise ValueError("need at least one pose")
    rng = np.random.default_rng(seed)
    return [
        ContactPose(
            dx_mm=float(rng.uniform(*dx_range)),
            dy_mm=float(rng.uniform(*dy_range)),
            dz_mm=float(rng.uniform(*dz_range)),
            yaw_deg=float(rng.uniform(*yaw_range)),
        )
        for _ in range(n)
    ]


def primitive_shapes() -> list[IndenterShape]:
    """Ten primitive indenters for pretraining corpora."""
    spheres = [Sphere(radius_mm=r) for r in (1.0, 1.5, 2.0, 3.0, 4.5, 6.0, 9.0)]
    edges = [Edge(width_mm=w) for w in (1.0, 2.0, 4.0)]
    return spheres + edges


def make_default_background(resolution: tuple[int, int]) -> np.ndarray:
    """Synthetic no-contact gel image: cool gray with a soft vignette."""
    h, w = resolution
    ys = np.linspace(-1.0, 1.0, h)
    xs = np.linspace(-1.0, 1.0, w)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    vignette = 1.0 - 0.10 * (xx**2 + yy**2)
    tilt = 1.0 + 0.03 * yy
    base = np.array([0.36, 0.40, 0.46])
    img = base[:, None, None] * (vignette * tilt)[None, :, :]
    return np.clip(img, 0.0, 1.0)


def default_sensor(resolution: tuple[int, int] = (64, 64)) -> SensorSpec:
    """Desk-scale sensor: 20×20 mm gel, three colored side lights."""
    elev = math.radians(30.0)
    z = math.sin(elev)
    r = math.cos(elev)

    def direction(azimuth_deg):
        a = math.radians(azimuth_deg)
        return (r * math.cos(a), r * math.sin(a), z)

    lights = (
        Light(direction=direction(90.0), color=(0.9, 0.12, 0.10)),
        Light(direction=direction(210.0), color=(0.10, 0.85, 0.15)),
        Light(direction=direction(330.0), color=(0.12, 0.15, 0.95)),
    )
    return SensorSpec(
        gel_size_mm=(20.0, 20.0),
        resolution=resolution,
        max_penetration_mm=2.0,
        lights=lights,
        ambient=(0.05, 0.05, 0.05),
        background=make_default_background(resolution),
    )
