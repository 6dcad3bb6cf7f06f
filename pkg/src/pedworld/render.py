"""First-person semantic rendering by column raycasting.

Per column, a ray from the eye hits the nearest building wall; wall pixels
fill from the projected wall top down to the wall's ground line, sky above.
Rows below the horizon are floor-cast onto the ground plane and classified
crosswalk > road > sidewalk by point-in-rectangle.  Agents are splatted as
depth-tested billboards.  Distances are measured perpendicular to the image
plane, so a row maps to one ground distance and occlusion tests are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from pedworld.sim.map import MapGeometry
from pedworld.sim.world import WorldState

VOID, BUILDING, ROAD, SIDEWALK, CROSSWALK, PEDESTRIAN, VEHICLE, POLE = range(8)

DEFAULT_CATEGORIES = ("void", "building", "road", "sidewalk", "crosswalk",
                      "pedestrian", "vehicle", "pole")

_RGB = np.array([
    (135, 206, 235),   # void / sky
    (70, 70, 70),      # building
    (128, 64, 128),    # road
    (244, 164, 96),    # sidewalk
    (250, 250, 250),   # crosswalk
    (220, 20, 60),     # pedestrian
    (0, 0, 142),       # vehicle
    (153, 153, 153),   # pole
], dtype=np.uint8)


@dataclass(frozen=True)
class SemanticPalette:
    names: tuple[str, ...] = DEFAULT_CATEGORIES

    @property
    def count(self) -> int:
        return len(self.names)

    def rgb_table(self) -> np.ndarray:
        table = np.zeros((self.count, 3), np.uint8)
        n = min(self.count, len(_RGB))
        table[:n] = _RGB[:n]
        return table


@dataclass
class CameraModel:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    width: int = 85
    height: int = 45
    fov_deg: float = 90.0
    eye_height: float = 1.6
    max_draw: float = 60.0
    near: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.fov_deg < 180.0):
            raise ValueError(f"fov {self.fov_deg} outside (0, 180)")

    @property
    def plane_distance(self) -> float:
        """Projection-plane distance in pixel units, from FOV and width."""
        return (self.width / 2.0) / math.tan(math.radians(self.fov_deg) / 2.0)

    @property
    def horizon_row(self) -> int:
        return self.height // 2

    def posed_at(self, x: float, y: float, yaw: float) -> "CameraModel":
        return replace(self, x=x, y=y, yaw=yaw)


def camera_for(world: WorldState, base: CameraModel) -> CameraModel:
    pose = world.ego.pose
    return base.posed_at(pose.x, pose.y, pose.body_yaw + pose.head_yaw)


def floor_cast(row: int, cam: CameraModel, col: float | None = None) -> tuple[float, float]:
    """Ground point seen by ``row`` (and optionally ``col``) below the horizon."""
    drop = row - cam.horizon_row
    if drop <= 0:
        raise ValueError(f"row {row} is at or above the horizon row {cam.horizon_row}")
    dist = min(cam.eye_height * cam.plane_distance / drop, cam.max_draw)
    u = 0.0 if col is None else (col - (cam.width - 1) / 2.0) / cam.plane_distance
    fx, fy = math.cos(cam.yaw), math.sin(cam.yaw)
    rx, ry = fy, -fx
    return cam.x + dist * (fx + u * rx), cam.y + dist * (fy + u * ry)


def _column_wall_hits(cam: CameraModel, geometry: MapGeometry, dirs: np.ndarray):
    """Nearest wall hit per column: (distance, wall height); inf where none."""
    w = cam.width
    hit_t = np.full(w, np.inf)
    hit_h = np.zeros(w)
    edges = geometry.wall_edges()
    if edges.size == 0:
        return hit_t, hit_h
    ax, ay, bx, by, hgt = (edges[:, i][:, None] for i in range(5))
    ex, ey = bx - ax, by - ay
    dx, dy = dirs[:, 0][None, :], dirs[:, 1][None, :]
    rel_x, rel_y = ax - cam.x, ay - cam.y
    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel_x * ey - rel_y * ex) / denom
        s = (rel_x * dy - rel_y * dx) / denom
    valid = (np.abs(denom) > 1e-12) & (s >= 0.0) & (s <= 1.0) & (t >= cam.near) & (t <= cam.max_draw)
    t = np.where(valid, t, np.inf)
    best = t.argmin(axis=0)
    cols = np.arange(w)
    hit_t = t[best, cols]
    hit_h = np.where(np.isfinite(hit_t), hgt[best, 0], 0.0)
    return hit_t, hit_h


def render_ego_frame(world: WorldState, palette: SemanticPalette, cam: CameraModel,
                     default_ground: int = VOID) -> np.ndarray:
    """Ground-truth frame of category indices, uint8 [H, W]."""
    h, w = cam.height, cam.width
    dp = cam.plane_distance
    horizon = cam.horizon_row
    frame = np.full((h, w), VOID, np.uint8)
    depth = np.full((h, w), np.inf)

    fx, fy = math.cos(cam.yaw), math.sin(cam.yaw)
    rx, ry = fy, -fx
    u = (np.arange(w) - (w - 1) / 2.0) / dp
    dirs = np.stack([fx + u * rx, fy + u * ry], axis=1)

    # building walls, one nearest hit per column
    wall_t, wall_h = _column_wall_hits(cam, world.geometry, dirs)

    rows_below = np.arange(horizon + 1, h)
    ground_dist = cam.eye_height * dp / (rows_below - horizon)
    ground_clamped = np.minimum(ground_dist, cam.max_draw)

    # ground classification at the floor-cast points
    px = cam.x + ground_clamped[:, None] * dirs[None, :, 0]
    py = cam.y + ground_clamped[:, None] * dirs[None, :, 1]
    cross, road, side = world.geometry.ground_category_masks(px, py)
    ground_cat = np.full(px.shape, default_ground, np.uint8)
    ground_cat[side] = SIDEWALK
    ground_cat[road] = ROAD
    ground_cat[cross] = CROSSWALK
    frame[horizon + 1:, :] = ground_cat
    depth[horizon + 1:, :] = ground_clamped[:, None]

    # walls: above-horizon span by projected height, below-horizon where the
    # ground point would lie behind the wall
    finite = np.isfinite(wall_t)
    for j in np.nonzero(finite)[0]:
        t = wall_t[j]
        top = horizon - (wall_h[j] - cam.eye_height) * dp / t
        r0 = max(0, math.ceil(top))
        if r0 <= horizon:
            frame[r0:horizon + 1, j] = BUILDING
            depth[r0:horizon + 1, j] = t
        behind = ground_clamped > t
        frame[horizon + 1:, j][behind] = BUILDING
        depth[horizon + 1:, j][behind] = t

    # billboards: background pedestrians, vehicles, poles (ego is the camera)
    billboards = []
    for p in world.pedestrians:
        billboards.append((p.x, p.y, 2.0 * p.radius, p.height, PEDESTRIAN))
    for v in world.vehicles:
        lane_y = world.geometry.lanes[v.lane].y
        bearing = math.atan2(lane_y - cam.y, v.x - cam.x)
        rel_yaw = bearing  # lanes run along x, vehicle yaw is 0 or pi
        w_eff = abs(v.length * math.sin(rel_yaw)) + abs(v.width * math.cos(rel_yaw))
        billboards.append((v.x, lane_y, w_eff, v.height, VEHICLE))
    for pole in world.geometry.poles:
        billboards.append((pole.x, pole.y, 2.0 * pole.radius, pole.height, POLE))

    cx = (w - 1) / 2.0
    for (bx, by, bw, bh, cat) in billboards:
        relx, rely = bx - cam.x, by - cam.y
        d = relx * fx + rely * fy
        if d <= cam.near or d > cam.max_draw:
            continue
        lateral = relx * rx + rely * ry
        col_center = cx + lateral / d * dp
        half_cols = (bw / 2.0) / d * dp
        c0 = max(0, math.ceil(col_center - half_cols))
        c1 = min(w - 1, math.floor(col_center + half_cols))
        if c1 < c0:
            continue
        top = horizon - (bh - cam.eye_height) * dp / d
        bottom = horizon + cam.eye_height * dp / d
        r0 = max(0, math.ceil(top))
        r1 = min(h - 1, math.floor(bottom))
        if r1 < r0:
            continue
        window = depth[r0:r1 + 1, c0:c1 + 1]
        mask = d < window
        frame[r0:r1 + 1, c0:c1 + 1][mask] = cat
        window[mask] = d

    return frame


def onehot(frame: np.ndarray, categories: int) -> np.ndarray:
    """[H, W] indices -> [H, W, C] float32 with exactly one 1.0 per pixel."""
    if frame.max(initial=0) >= categories:
        raise ValueError(f"category index {int(frame.max())} >= channel count {categories}")
    return np.eye(categories, dtype=np.float32)[frame]


# ---------------------------------------------------------------------------
# PPM inspection dumps


def frame_to_rgb(frame: np.ndarray, palette: SemanticPalette) -> np.ndarray:
    """Categories [H,W] or probabilities [H,W,C] -> RGB image."""
    table = palette.rgb_table()
    if frame.ndim == 3:
        frame = frame.argmax(axis=-1)
    return table[frame]


def write_ppm(path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    parts = blob.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError(f"{path}: not a P6 PPM")
    w, h = (int(v) for v in parts[1].split())
    data = np.frombuffer(parts[3], dtype=np.uint8, count=h * w * 3)
    return data.reshape(h, w, 3)
