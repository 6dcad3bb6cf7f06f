"""Deterministic fixed-step crossing-scenario simulation."""
from .config import ConfigError, ScenarioConfig, steps_for, steps_for_distance
from .fsm import (BODY_ORDER, TURN_STATES, WALK_STATES, BodyFsm, BodyState,
                  HeadFsm, body_fsm_step, build_body_fsm, build_head_fsm,
                  head_fsm_state)
from .map import Building, Lane, MapGeometry, Pole, Rect, default_map
from .world import (AgentPose, DetectorState, EgoState, Pedestrian, Vehicle,
                    WorldState, build_scenario, detector_clear, step_world,
                    wrap_angle)
from .episode import run_episode

__all__ = [
    "ConfigError", "ScenarioConfig", "steps_for", "steps_for_distance",
    "BODY_ORDER", "TURN_STATES", "WALK_STATES", "BodyFsm", "BodyState",
    "HeadFsm", "body_fsm_step", "build_body_fsm", "build_head_fsm",
    "head_fsm_state", "Building", "Lane", "MapGeometry", "Pole", "Rect",
    "default_map", "AgentPose", "DetectorState", "EgoState", "Pedestrian",
    "Vehicle", "WorldState", "build_scenario", "detector_clear", "step_world",
    "wrap_angle", "run_episode",
]
