"""Axis-aligned map geometry for the crossing scenario.

The default map is a straight two-lane road along the x axis with sidewalks
on both sides, one crosswalk at x = 0, building rows behind the sidewalks,
and one vehicle detector per lane immediately upstream of the crosswalk.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x, y):
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def intersects(self, other: "Rect") -> bool:
        return not (other.x0 >= self.x1 or other.x1 <= self.x0
                    or other.y0 >= self.y1 or other.y1 <= self.y0)

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def edges(self) -> list[tuple[float, float, float, float]]:
        x0, y0, x1, y1 = self.x0, self.y0, self.x1, self.y1
        return [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)]


@dataclass(frozen=True)
class Building:
    rect: Rect
    height: float


@dataclass(frozen=True)
class Lane:
    y: float
    direction: int  # +1 toward +x, -1 toward -x


@dataclass(frozen=True)
class Pole:
    x: float
    y: float
    height: float = 3.0
    radius: float = 0.12


@dataclass
class MapGeometry:
    road: Rect
    lanes: list[Lane]
    crosswalk: Rect
    sidewalks: list[Rect]
    buildings: list[Building]
    detectors: list[Rect]
    poles: list[Pole] = field(default_factory=list)

    def validate(self, detector_length: float = 21.0) -> None:
        if not self.crosswalk.intersects(self.road):
            raise ValueError("crosswalk does not intersect the road")
        touching = sum(1 for s in self.sidewalks
                       if s.y1 >= self.crosswalk.y0 - 1e-9 and s.y0 <= self.crosswalk.y1 + 1e-9
                       and s.x0 <= self.crosswalk.x1 and s.x1 >= self.crosswalk.x0)
        if touching < 2:
            raise ValueError("crosswalk must connect two sidewalks")
        for det in self.detectors:
            if abs(det.width - detector_length) > 1e-9:
                raise ValueError(f"detector spans {det.width} m along its lane, expected {detector_length}")
        for b in self.buildings:
            if b.rect.intersects(self.road) or any(b.rect.intersects(s) for s in self.sidewalks):
                raise ValueError("building footprint overlaps road or sidewalk")

    def wall_edges(self) -> np.ndarray:
        """[E, 5] rows of (ax, ay, bx, by, height) for every building wall."""
        rows = []
        for b in self.buildings:
            for ax, ay, bx, by in b.rect.edges():
                rows.append((ax, ay, bx, by, b.height))
        return np.array(rows, dtype=np.float64).reshape(-1, 5)

    def ground_category_masks(self, x, y):
        """Boolean masks (crosswalk, road, sidewalk) for ground points."""
        cross = self.crosswalk.contains(x, y)
        road = self.road.contains(x, y)
        side = np.zeros_like(cross)
        for s in self.sidewalks:
            side = side | s.contains(x, y)
        return cross, road, side


# building rows behind each sidewalk: (x0, x1, height); the north row spans
# the crossing exit so the resting pedestrian faces a wall
_SOUTH_BUILDINGS = ((-58.0, -32.0, 8.0), (-28.0, -8.0, 6.0), (-4.0, 18.0, 9.0), (24.0, 58.0, 7.0))
_NORTH_BUILDINGS = ((-58.0, -24.0, 7.0), (-20.0, 20.0, 8.5), (26.0, 58.0, 9.0))
_BUILDING_DEPTH = 6.0


def default_map(cfg: ScenarioConfig) -> MapGeometry:
    hl = cfg.road_half_length
    lw = cfg.lane_width
    sw = cfg.sidewalk_width
    cw = cfg.crosswalk_half_width
    det = cfg.detector_length

    road = Rect(-hl, -lw, hl, lw)
    lanes = [Lane(y=-lw / 2.0, direction=+1), Lane(y=+lw / 2.0, direction=-1)]
    crosswalk = Rect(-cw, -lw, cw, lw)
    sidewalks = [Rect(-hl, -lw - sw, hl, -lw), Rect(-hl, lw, hl, lw + sw)]
    detectors = [
        Rect(-cw - det, -lw, -cw, 0.0),   # eastbound approach (south lane)
        Rect(cw, 0.0, cw + det, lw),      # westbound approach (north lane)
    ]

    buildings = []
    for (x0, x1, h) in _SOUTH_BUILDINGS:
        x0, x1 = max(x0, -hl), min(x1, hl)
        if x1 > x0:
            buildings.append(Building(Rect(x0, -lw - sw - _BUILDING_DEPTH, x1, -lw - sw), h))
    for (x0, x1, h) in _NORTH_BUILDINGS:
        x0, x1 = max(x0, -hl), min(x1, hl)
        if x1 > x0:
            buildings.append(Building(Rect(x0, lw + sw, x1, lw + sw + _BUILDING_DEPTH), h))

    poles = [Pole(cw + 0.7, -lw - 0.5), Pole(-cw - 0.7, lw + 0.5)]

    geometry = MapGeometry(road=road, lanes=lanes, crosswalk=crosswalk,
                           sidewalks=sidewalks, buildings=buildings,
                           detectors=detectors, poles=poles)
    geometry.validate(det)
    return geometry
