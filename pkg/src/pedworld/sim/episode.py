"""Full episode rollout: step the world, render and record every frame."""
from __future__ import annotations

import math
import warnings

import numpy as np

from pedworld.data import EpisodeLog, action_vector
from pedworld.render import CameraModel, SemanticPalette, camera_for, render_ego_frame

from .config import ScenarioConfig
from .fsm import BodyState
from .world import WorldState, build_scenario, step_world


def run_episode(cfg: ScenarioConfig, seed: int,
                camera: CameraModel | None = None,
                palette: SemanticPalette | None = None) -> EpisodeLog:
    """Simulate until the ego reaches ``end`` plus the configured tail.

    Records one (frame, action) pair per step including step 0.  The action
    at step t is (moved during the step ending at t, body yaw at t, head yaw
    at t).  Episodes hitting the step cap are truncated and flagged.
    """
    camera = camera or CameraModel()
    palette = palette or SemanticPalette()
    world = build_scenario(cfg, seed)

    frames: list[np.ndarray] = []
    actions: list[np.ndarray] = []
    states: list[str] = []
    truncated = False

    end_entry_step: int | None = None
    prev_pos = (world.ego.pose.x, world.ego.pose.y)
    moved = False
    while True:
        frames.append(render_ego_frame(world, palette, camera_for(world, camera)))
        actions.append(action_vector(moved, world.ego.pose.body_yaw, world.ego.pose.head_yaw))
        states.append(world.ego.body_fsm.state.value)

        if world.ego.body_fsm.state is BodyState.END and end_entry_step is None:
            end_entry_step = world.step
        if end_entry_step is not None and world.step >= end_entry_step + cfg.tail_steps:
            break
        if world.step >= cfg.step_cap:
            truncated = True
            warnings.warn(f"episode seed={seed} hit the {cfg.step_cap}-step cap, truncated")
            break

        step_world(world)
        moved = math.hypot(world.ego.pose.x - prev_pos[0], world.ego.pose.y - prev_pos[1]) > 1e-12
        prev_pos = (world.ego.pose.x, world.ego.pose.y)

    return EpisodeLog(seed=seed,
                      frames=np.stack(frames).astype(np.uint8),
                      actions=np.stack(actions).astype(np.float32),
                      body_states=states,
                      truncated=truncated)
