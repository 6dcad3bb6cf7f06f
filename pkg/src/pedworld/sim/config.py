"""Scenario configuration and its JSON form.

All distances are meters, durations seconds, angles radians.  Time itself is
stored as an integer step count at DT = 60 ms per step so runs are exactly
reproducible; helpers here convert durations and walk legs to whole steps.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from pedworld import DT


class ConfigError(ValueError):
    pass


def steps_for(seconds: float) -> int:
    """Whole simulation steps covering ``seconds`` (robust to float dust)."""
    return max(0, math.ceil(seconds / DT - 1e-9))


def steps_for_distance(distance: float, speed: float) -> int:
    return steps_for(distance / speed)


@dataclass
class ScenarioConfig:
    # map dimensions
    road_half_length: float = 60.0
    lane_width: float = 3.5
    sidewalk_width: float = 3.0
    crosswalk_half_width: float = 1.5
    detector_length: float = 21.0

    # ego pedestrian
    walk_speed: float = 1.4
    turn_rate: float = math.pi
    head_slew_rate: float = 2.0 * math.pi
    look_yaw: float = math.pi / 3.0
    approach_distance: float = 5.04   # walk1 leg, ends 2 m short of the curb
    curb_margin: float = 2.0
    depart_walk_s: float = 4.0        # walk3 leg duration

    # body FSM durations (seconds)
    turn_r_s: float = 0.9
    look_min_s: float = 1.2
    rest_s: float = 0.6
    turn_l_s: float = 0.9

    # head FSM (seconds on the absolute episode clock)
    head_first_look_at_s: float = 3.6
    head_left_duration_s: float = 2.4
    head_gap_s: float = 1.8           # measured from the end of the left look
    head_right_duration_s: float = 4.2

    # background agents
    pedestrian_count: tuple[int, int] = (0, 50)
    vehicle_count: tuple[int, int] = (0, 20)
    pedestrian_speed: tuple[float, float] = (1.0, 1.8)
    vehicle_speed: tuple[float, float] = (8.0, 14.0)
    crossing_prob: float = 0.3
    brake_distance: float = 12.0

    # episode control
    tail_steps: int = 486
    step_cap: int = 4000

    def __post_init__(self):
        self.pedestrian_count = tuple(self.pedestrian_count)
        self.vehicle_count = tuple(self.vehicle_count)
        self.pedestrian_speed = tuple(self.pedestrian_speed)
        self.vehicle_speed = tuple(self.vehicle_speed)
        for name in ("pedestrian_count", "vehicle_count"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ConfigError(f"{name} range {lo}..{hi} invalid")
        if self.walk_speed <= 0 or self.road_half_length <= 0:
            raise ConfigError("speeds and map dimensions must be positive")

    # --- derived ego path -------------------------------------------------

    @property
    def sidewalk_lane_y(self) -> float:
        """Distance from road center to the walking line (curb + margin)."""
        return self.lane_width + self.curb_margin

    @property
    def crossing_distance(self) -> float:
        return 2.0 * self.sidewalk_lane_y

    def body_state_steps(self) -> dict[str, int]:
        """Per-state dwell steps; look is the minimum before the clear gate."""
        return {
            "walk1": steps_for_distance(self.approach_distance, self.walk_speed),
            "turn_r": steps_for(self.turn_r_s),
            "look": steps_for(self.look_min_s),
            "walk2": steps_for_distance(self.crossing_distance, self.walk_speed),
            "rest": steps_for(self.rest_s),
            "turn_l": steps_for(self.turn_l_s),
            "walk3": steps_for(self.depart_walk_s),
        }

    def nominal_episode_frames(self) -> int:
        """Frames in a wait-free episode: state steps + tail + initial frame."""
        return sum(self.body_state_steps().values()) + self.tail_steps + 1

    # --- JSON -------------------------------------------------------------

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown scenario config keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: scenario config must be a JSON object")
        return cls.from_dict(raw)
