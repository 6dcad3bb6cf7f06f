"""World state and the fixed-step update rule.

One step advances the clock by exactly 60 ms.  The ego follows its two FSMs,
background pedestrians do random-waypoint walking on the sidewalks (crossing
at the crosswalk), and vehicles cruise along their lane centerline, holding
kinematically when a pedestrian occupies the crosswalk within braking
distance.  Everything is deterministic given (config, seed): randomness
comes only from named PRNG streams, so adding agents of one kind never
perturbs the draws of another.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from pedworld import DT
from pedworld.rng import stream

from .config import ScenarioConfig
from .fsm import BodyFsm, BodyState, HeadFsm, build_body_fsm, build_head_fsm
from .map import MapGeometry, Rect, default_map

PED_RADIUS = 0.3
VEHICLE_LENGTH = 4.2
VEHICLE_WIDTH = 1.8
VEHICLE_HEIGHT = 1.5
EGO_HEIGHT = 1.75
_SPAWN_RETRIES = 100
_DESPAWN_MARGIN = 10.0
_MIN_HEADWAY = 7.0


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def rotate_toward(current: float, target: float, max_delta: float) -> float:
    diff = wrap_angle(target - current)
    if abs(diff) <= max_delta:
        return wrap_angle(target)
    return wrap_angle(current + math.copysign(max_delta, diff))


@dataclass
class AgentPose:
    x: float
    y: float
    body_yaw: float
    head_yaw: float = 0.0
    speed: float = 0.0
    kind: str = "pedestrian"   # ego-pedestrian | pedestrian | vehicle
    radius: float = PED_RADIUS
    height: float = EGO_HEIGHT


@dataclass
class Pedestrian:
    pid: int
    x: float
    y: float
    yaw: float
    speed: float
    height: float
    route: list[tuple[float, float]]
    rng: np.random.Generator
    radius: float = PED_RADIUS


@dataclass
class Vehicle:
    vid: int
    lane: int
    x: float
    cruise: float
    moving: bool = True
    length: float = VEHICLE_LENGTH
    width: float = VEHICLE_WIDTH
    height: float = VEHICLE_HEIGHT

    def footprint(self, lane_y: float) -> Rect:
        return Rect(self.x - self.length / 2.0, lane_y - self.width / 2.0,
                    self.x + self.length / 2.0, lane_y + self.width / 2.0)


@dataclass
class DetectorState:
    clear: bool = True
    vehicle_ids: list[int] = field(default_factory=list)


@dataclass
class EgoState:
    pose: AgentPose
    head_fsm: HeadFsm
    body_fsm: BodyFsm
    waypoints: dict[BodyState, tuple[float, float]]
    yaw_targets: dict[BodyState, float]


@dataclass
class WorldState:
    step: int
    config: ScenarioConfig
    geometry: MapGeometry
    ego: EgoState
    pedestrians: list[Pedestrian]
    vehicles: list[Vehicle]
    detector: DetectorState
    seed: int

    @property
    def clock(self) -> float:
        return self.step * DT

    def serialize(self) -> str:
        """Canonical JSON snapshot of the dynamic state (for determinism checks)."""
        doc = {
            "step": self.step,
            "seed": self.seed,
            "ego": [self.ego.pose.x, self.ego.pose.y, self.ego.pose.body_yaw,
                    self.ego.pose.head_yaw, self.ego.body_fsm.state.value,
                    self.ego.body_fsm.entry_step],
            "pedestrians": [[p.pid, p.x, p.y, p.yaw, p.speed, p.height,
                             [list(w) for w in p.route]] for p in self.pedestrians],
            "vehicles": [[v.vid, v.lane, v.x, v.cruise, v.moving] for v in self.vehicles],
            "detector": [self.detector.clear, list(self.detector.vehicle_ids)],
        }
        return json.dumps(doc, sort_keys=True)


# ---------------------------------------------------------------------------
# scenario construction


def _ego_waypoints(cfg: ScenarioConfig) -> tuple[dict, dict]:
    y_walk = cfg.sidewalk_lane_y
    entry = (0.0, -y_walk)
    exit_ = (0.0, +y_walk)
    depart = (-cfg.depart_walk_s * cfg.walk_speed, +y_walk)
    waypoints = {BodyState.WALK1: entry, BodyState.WALK2: exit_, BodyState.WALK3: depart}
    yaw_targets = {
        BodyState.WALK1: math.pi,            # westward approach, road on the right
        BodyState.TURN_R: math.pi / 2.0,     # face the crossing
        BodyState.LOOK: math.pi / 2.0,
        BodyState.WALK2: math.pi / 2.0,
        BodyState.REST: math.pi / 2.0,
        BodyState.TURN_L: math.pi,           # resume westward on the far side
        BodyState.WALK3: math.pi,
        BodyState.END: math.pi,
    }
    return waypoints, yaw_targets


def _sidewalk_point(rng: np.random.Generator, sidewalk: Rect, margin: float = 0.4) -> tuple[float, float]:
    x = float(rng.uniform(sidewalk.x0 + margin, sidewalk.x1 - margin))
    y = float(rng.uniform(sidewalk.y0 + margin, sidewalk.y1 - margin))
    return x, y


def _crosswalk_ports(geometry: MapGeometry) -> tuple[tuple[float, float], tuple[float, float]]:
    cx = (geometry.crosswalk.x0 + geometry.crosswalk.x1) / 2.0
    return (cx, geometry.crosswalk.y0 - 0.5), (cx, geometry.crosswalk.y1 + 0.5)


def _new_route(ped: Pedestrian, geometry: MapGeometry, cfg: ScenarioConfig) -> list[tuple[float, float]]:
    south, north = geometry.sidewalks[0], geometry.sidewalks[1]
    on_south = ped.y < 0.0
    cross = float(ped.rng.uniform()) < cfg.crossing_prob
    if cross:
        src_port, dst_port = _crosswalk_ports(geometry)
        if not on_south:
            src_port, dst_port = dst_port, src_port
        dest = _sidewalk_point(ped.rng, north if on_south else south)
        return [src_port, dst_port, dest]
    dest = _sidewalk_point(ped.rng, south if on_south else north)
    return [dest]


def build_scenario(cfg: ScenarioConfig, seed: int) -> WorldState:
    """Seeded world: agent counts ~ unif{0,50} / unif{0,20}, no spawn overlap."""
    geometry = default_map(cfg)
    spawn_rng = stream(seed, "spawn")
    vehicle_rng = stream(seed, "vehicle")

    waypoints, yaw_targets = _ego_waypoints(cfg)
    ego_pose = AgentPose(x=cfg.approach_distance, y=-cfg.sidewalk_lane_y,
                         body_yaw=math.pi, head_yaw=0.0, speed=cfg.walk_speed,
                         kind="ego-pedestrian")
    ego = EgoState(pose=ego_pose, head_fsm=build_head_fsm(cfg),
                   body_fsm=build_body_fsm(cfg), waypoints=waypoints,
                   yaw_targets=yaw_targets)

    n_peds = int(spawn_rng.integers(cfg.pedestrian_count[0], cfg.pedestrian_count[1] + 1))
    n_vehicles = int(spawn_rng.integers(cfg.vehicle_count[0], cfg.vehicle_count[1] + 1))

    pedestrians: list[Pedestrian] = []
    for pid in range(n_peds):
        placed = False
        for _ in range(_SPAWN_RETRIES):
            sidewalk = geometry.sidewalks[int(spawn_rng.integers(0, 2))]
            x, y = _sidewalk_point(spawn_rng, sidewalk)
            if math.hypot(x - ego_pose.x, y - ego_pose.y) < 1.5:
                continue
            if any(math.hypot(x - q.x, y - q.y) < 3.0 * PED_RADIUS for q in pedestrians):
                continue
            speed = float(spawn_rng.uniform(*cfg.pedestrian_speed))
            height = float(spawn_rng.uniform(1.5, 1.9))
            ped = Pedestrian(pid=pid, x=x, y=y, yaw=0.0, speed=speed, height=height,
                             route=[], rng=stream(seed, f"pedestrian-path/{pid}"))
            ped.route = _new_route(ped, geometry, cfg)
            pedestrians.append(ped)
            placed = True
            break
        if not placed:
            warnings.warn(f"pedestrian spawn capacity reached at {len(pedestrians)} of {n_peds}")
            break

    vehicles: list[Vehicle] = []
    for vid in range(n_vehicles):
        placed = False
        for _ in range(_SPAWN_RETRIES):
            lane = int(vehicle_rng.integers(0, len(geometry.lanes)))
            x = float(vehicle_rng.uniform(-cfg.road_half_length + 5.0, cfg.road_half_length - 5.0))
            if abs(x) < cfg.crosswalk_half_width + VEHICLE_LENGTH:
                continue
            if any(v.lane == lane and abs(v.x - x) < _MIN_HEADWAY + VEHICLE_LENGTH for v in vehicles):
                continue
            cruise = float(vehicle_rng.uniform(*cfg.vehicle_speed))
            vehicles.append(Vehicle(vid=vid, lane=lane, x=x, cruise=cruise))
            placed = True
            break
        if not placed:
            warnings.warn(f"vehicle spawn capacity reached at {len(vehicles)} of {n_vehicles}")
            break

    world = WorldState(step=0, config=cfg, geometry=geometry, ego=ego,
                       pedestrians=pedestrians, vehicles=vehicles,
                       detector=DetectorState(), seed=seed)
    _refresh_detector(world)
    return world


# ---------------------------------------------------------------------------
# detector


def detector_clear(world: WorldState) -> bool:
    """True iff no vehicle footprint touches either approach detector."""
    ids = _vehicles_in_detectors(world)
    return not ids


def _vehicles_in_detectors(world: WorldState) -> list[int]:
    ids = []
    for v in world.vehicles:
        lane_y = world.geometry.lanes[v.lane].y
        fp = v.footprint(lane_y)
        if any(fp.intersects(det) for det in world.geometry.detectors):
            ids.append(v.vid)
    return ids


def _refresh_detector(world: WorldState) -> None:
    ids = _vehicles_in_detectors(world)
    world.detector = DetectorState(clear=not ids, vehicle_ids=ids)


# ---------------------------------------------------------------------------
# stepping


def _move_toward(x: float, y: float, wx: float, wy: float, dist: float):
    dx, dy = wx - x, wy - y
    gap = math.hypot(dx, dy)
    if gap <= dist or gap == 0.0:
        return wx, wy, gap > 0.0
    f = dist / gap
    return x + dx * f, y + dy * f, True


def _crosswalk_lane_occupied(world: WorldState, lane_y: float) -> bool:
    """A pedestrian stands on the crosswalk cell of this lane (or its edge)."""
    cw = world.geometry.crosswalk
    half = world.config.lane_width / 2.0
    r = PED_RADIUS
    y0, y1 = lane_y - half - r, lane_y + half + r
    pads = [(world.ego.pose.x, world.ego.pose.y)] + [(p.x, p.y) for p in world.pedestrians]
    for x, y in pads:
        if (cw.x0 - r <= x <= cw.x1 + r) and (y0 <= y <= y1):
            return True
    return False


def _step_ego(world: WorldState, c: bool, new_step: int) -> None:
    cfg = world.config
    ego = world.ego
    state = ego.body_fsm.state

    if state in (BodyState.WALK1, BodyState.WALK2, BodyState.WALK3):
        wx, wy = ego.waypoints[state]
        ego.pose.x, ego.pose.y, _ = _move_toward(ego.pose.x, ego.pose.y, wx, wy, cfg.walk_speed * DT)
        ego.pose.body_yaw = ego.yaw_targets[state]
    elif state in (BodyState.TURN_R, BodyState.TURN_L):
        ego.pose.body_yaw = rotate_toward(ego.pose.body_yaw, ego.yaw_targets[state], cfg.turn_rate * DT)

    head_target = ego.head_fsm.target_at(new_step * DT)
    ego.pose.head_yaw = rotate_toward(ego.pose.head_yaw, head_target, cfg.head_slew_rate * DT)

    from .fsm import body_fsm_step  # local import keeps module init order simple
    ego.body_fsm = body_fsm_step(ego.body_fsm, c, new_step)


def _step_pedestrians(world: WorldState) -> None:
    for p in world.pedestrians:
        if not p.route:
            p.route = _new_route(p, world.geometry, world.config)
        wx, wy = p.route[0]
        p.yaw = math.atan2(wy - p.y, wx - p.x)
        p.x, p.y, _ = _move_toward(p.x, p.y, wx, wy, p.speed * DT)
        if math.hypot(wx - p.x, wy - p.y) < 1e-9:
            p.route.pop(0)


def _step_vehicles(world: WorldState) -> None:
    cfg = world.config
    occupied = {i: _crosswalk_lane_occupied(world, lane.y)
                for i, lane in enumerate(world.geometry.lanes)}
    cw = world.geometry.crosswalk
    # leaders first so followers react to updated positions
    order = sorted(world.vehicles,
                   key=lambda v: (v.lane, -world.geometry.lanes[v.lane].direction * v.x))
    leader_front: dict[int, float] = {}
    for v in order:
        direction = world.geometry.lanes[v.lane].direction
        front = v.x + direction * v.length / 2.0
        near_edge = cw.x0 if direction > 0 else cw.x1
        gap_to_crossing = (near_edge - front) * direction
        hold = occupied[v.lane] and 0.0 <= gap_to_crossing <= cfg.brake_distance
        new_x = v.x if hold else v.x + direction * v.cruise * DT
        if v.lane in leader_front:
            limit = leader_front[v.lane] - direction * (_MIN_HEADWAY + v.length / 2.0)
            if direction > 0:
                new_x = min(new_x, limit)
            else:
                new_x = max(new_x, limit)
        v.moving = abs(new_x - v.x) > 1e-12
        v.x = new_x
        leader_front[v.lane] = v.x - direction * v.length / 2.0
    limit = cfg.road_half_length + _DESPAWN_MARGIN
    world.vehicles = [v for v in world.vehicles if abs(v.x) <= limit]


def step_world(world: WorldState) -> WorldState:
    """Advance exactly one 60 ms step in place and return the world."""
    new_step = world.step + 1
    c = world.detector.clear
    _step_ego(world, c, new_step)
    _step_pedestrians(world)
    _step_vehicles(world)
    _refresh_detector(world)
    world.step = new_step
    return world
