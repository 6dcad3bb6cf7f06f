"""The ego-pedestrian's two state machines.

The head FSM is a fixed schedule on the absolute episode clock: look ahead,
left, ahead, right, ahead.  The body FSM walks the crossing choreography
walk1 -> turn_r -> look -> walk2 -> rest -> turn_l -> walk3 -> end; every
transition is a dwell-time check except look -> walk2, which additionally
waits for the street-clear flag.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .config import ScenarioConfig, steps_for


# --- head -------------------------------------------------------------------

@dataclass(frozen=True)
class HeadSegment:
    start: float
    end: float
    yaw: float


@dataclass(frozen=True)
class HeadFsm:
    segments: tuple[HeadSegment, ...]

    def target_at(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"head FSM queried at negative time {t}")
        for seg in self.segments:
            if seg.start <= t < seg.end:
                return seg.yaw
        return 0.0


def build_head_fsm(cfg: ScenarioConfig) -> HeadFsm:
    left_start = cfg.head_first_look_at_s
    left_end = left_start + cfg.head_left_duration_s
    right_start = left_end + cfg.head_gap_s          # gap runs from the end of the left look
    right_end = right_start + cfg.head_right_duration_s
    return HeadFsm(segments=(
        HeadSegment(left_start, left_end, +cfg.look_yaw),
        HeadSegment(right_start, right_end, -cfg.look_yaw),
    ))


def head_fsm_state(t: float, fsm: HeadFsm | None = None, cfg: ScenarioConfig | None = None) -> float:
    """Head-yaw target at episode time ``t`` seconds."""
    if fsm is None:
        fsm = build_head_fsm(cfg or ScenarioConfig())
    return fsm.target_at(t)


# --- body -------------------------------------------------------------------

class BodyState(str, Enum):
    WALK1 = "walk1"
    TURN_R = "turn_r"
    LOOK = "look"
    WALK2 = "walk2"
    REST = "rest"
    TURN_L = "turn_l"
    WALK3 = "walk3"
    END = "end"


BODY_ORDER = tuple(BodyState)
_NEXT = {s: BODY_ORDER[i + 1] for i, s in enumerate(BODY_ORDER[:-1])}
WALK_STATES = (BodyState.WALK1, BodyState.WALK2, BodyState.WALK3)
TURN_STATES = (BodyState.TURN_R, BodyState.TURN_L)


@dataclass(frozen=True)
class BodyFsm:
    state: BodyState = BodyState.WALK1
    entry_step: int = 0
    durations: dict[BodyState, int] | None = None  # dwell steps per non-terminal state

    def elapsed(self, step: int) -> int:
        return step - self.entry_step


def build_body_fsm(cfg: ScenarioConfig) -> BodyFsm:
    steps = cfg.body_state_steps()
    durations = {BodyState(name): n for name, n in steps.items()}
    return BodyFsm(state=BodyState.WALK1, entry_step=0, durations=durations)


def body_fsm_step(fsm: BodyFsm, c: bool, step: int) -> BodyFsm:
    """Advance at most one transition; look -> walk2 is gated on ``c``."""
    if fsm.state is BodyState.END:
        return fsm
    if fsm.elapsed(step) < fsm.durations[fsm.state]:
        return fsm
    if fsm.state is BodyState.LOOK and not c:
        return fsm
    return replace(fsm, state=_NEXT[fsm.state], entry_step=step)
