"""Task phases, scoring, time pressure, and the experimental protocol.

Scoring follows the study constants exactly: trials start at 300 points,
lose 10 points per full 10 seconds and 100 per collision episode, and gain
a connection-quality bonus Q = 100/(dist+0.1) + 5000/(theta+5) at the
grapple and at the dock. Q has no floor; scores may go negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import random

from .geom import Pose, angular_distance_deg

START_POINTS = 300
TIME_PENALTY = 10          # points per full 10 s
TIME_PENALTY_PERIOD = 10.0
COLLISION_PENALTY = 100
GRAPPLE_RANGE = 1.0        # m, inclusive
DOCK_RANGE = 3.0           # m, inclusive
TIME_LIMIT = 240.0         # s, the 4-minute threshold
TIMER_YELLOW = 180.0
TIMER_RED = 210.0

BLOCKS = ("familiarisation", "tp_block", "latency_block")


class PhaseError(RuntimeError):
    """Operation attempted in the wrong task phase."""


@dataclass(frozen=True)
class TrialConfig:
    """One trial's confound settings."""

    latency: float = 0.0
    time_pressure: bool = False
    obstacles: bool = True
    block: str = "tp_block"
    trial_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        if self.block not in BLOCKS:
            raise ValueError(f"unknown block {self.block!r}")

    def to_dict(self) -> dict:
        return {"latency": self.latency, "time_pressure": self.time_pressure,
                "obstacles": self.obstacles, "block": self.block,
                "trial_index": self.trial_index, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "TrialConfig":
        return TrialConfig(latency=float(d["latency"]),
                           time_pressure=bool(d["time_pressure"]),
                           obstacles=bool(d["obstacles"]),
                           block=str(d["block"]),
                           trial_index=int(d["trial_index"]),
                           seed=int(d["seed"]))


@dataclass
class SubtaskResult:
    time: float
    dist: float
    angle: float
    quality: float


@dataclass
class TaskState:
    """Phase machine plus the running score ledger."""

    config: TrialConfig = field(default_factory=TrialConfig)
    phase: str = "Approach"   # Approach | Grappled | Docked | TimedOut
    elapsed: float = 0.0
    collisions: int = 0
    grapple_event: SubtaskResult | None = None
    dock_event: SubtaskResult | None = None

    @property
    def quality_sum(self) -> float:
        total = 0.0
        if self.grapple_event:
            total += self.grapple_event.quality
        if self.dock_event:
            total += self.dock_event.quality
        return total

    @property
    def score(self) -> float:
        return (START_POINTS
                - TIME_PENALTY * math.floor(self.elapsed / TIME_PENALTY_PERIOD)
                - COLLISION_PENALTY * self.collisions
                + self.quality_sum)

    @property
    def done(self) -> bool:
        return self.phase in ("Docked", "TimedOut")


def quality_score(dist: float, theta: float) -> float:
    """Connection quality bonus: 100/(dist+0.1) + 5000/(theta+5)."""
    if dist < 0:
        raise ValueError("dist must be >= 0")
    if not 0.0 <= theta <= 180.0:
        raise ValueError("theta must be within [0, 180] degrees")
    return 100.0 / (dist + 0.1) + 5000.0 / (theta + 5.0)


def try_grapple(ee: Pose, fixture: Pose, state: TaskState) -> bool:
    """Latch attempt; True on success. Range 1 m inclusive, no angle gate."""
    if state.phase != "Approach":
        raise PhaseError(f"grapple attempted in phase {state.phase}")
    dist = float(math.dist(ee.position, fixture.position))
    if dist > GRAPPLE_RANGE:
        return False
    angle = angular_distance_deg(ee.orientation, fixture.orientation)
    state.grapple_event = SubtaskResult(state.elapsed, dist, angle,
                                        quality_score(dist, angle))
    state.phase = "Grappled"
    return True


def try_dock(module: Pose, dock: Pose, state: TaskState) -> bool:
    """Dock attempt; True on success and the trial is complete. 3 m inclusive."""
    if state.phase != "Grappled":
        raise PhaseError(f"dock attempted in phase {state.phase}")
    dist = float(math.dist(module.position, dock.position))
    if dist > DOCK_RANGE:
        return False
    angle = angular_distance_deg(module.orientation, dock.orientation)
    state.dock_event = SubtaskResult(state.elapsed, dist, angle,
                                     quality_score(dist, angle))
    state.phase = "Docked"
    return True


def advance_to(state: TaskState, elapsed: float) -> TaskState:
    """Advance the clock to an absolute trial time (engines track exact
    tick-multiple times to keep the 4-minute stop free of float drift)."""
    if not state.done:
        state.elapsed = elapsed
        if state.config.time_pressure and state.elapsed >= TIME_LIMIT:
            state.elapsed = TIME_LIMIT
            state.phase = "TimedOut"
    return state


def tick_score(state: TaskState, dt: float) -> TaskState:
    """Advance the clock; the score follows from the ledger invariant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return advance_to(state, state.elapsed + dt)


def record_collision(state: TaskState) -> None:
    state.collisions += 1


def timer_state(elapsed: float, tp: bool) -> str:
    """HUD timer color: white/yellow/red/expired under time pressure."""
    if elapsed < 0:
        raise ValueError("elapsed must be >= 0")
    if not tp:
        return "white"
    if elapsed >= TIME_LIMIT:
        return "expired"
    if elapsed >= TIMER_RED:
        return "red"
    if elapsed >= TIMER_YELLOW:
        return "yellow"
    return "white"


def generate_protocol(seed: int, familiarisation_runs: int = 2) -> list[TrialConfig]:
    """The three-block session: familiarisation, time-pressure block (nine
    trials), latency block (six trials). Randomised per seed, deterministic.

    Familiarisation runs have no obstacles except the final one; every later
    trial includes obstacles.
    """
    rng = random.Random(seed)
    trials: list[TrialConfig] = []
    index = 0

    def add(latency: float, tp: bool, obstacles: bool, block: str) -> None:
        nonlocal index
        trials.append(TrialConfig(latency=latency, time_pressure=tp,
                                  obstacles=obstacles, block=block,
                                  trial_index=index,
                                  seed=rng.randrange(2 ** 31)))
        index += 1

    for _ in range(max(0, familiarisation_runs)):
        add(0.0, False, False, "familiarisation")
    add(0.0, False, True, "familiarisation")

    # three permuted repetitions of {time pressure, 0.5 s latency, neither}
    for _ in range(3):
        conditions = [(0.0, True), (0.5, False), (0.0, False)]
        rng.shuffle(conditions)
        for latency, tp in conditions:
            add(latency, tp, True, "tp_block")

    # one latency permutation without TP, then another with TP
    for tp in (False, True):
        latencies = [0.5, 1.0, 1.5]
        rng.shuffle(latencies)
        for latency in latencies:
            add(latency, tp, True, "latency_block")

    return trials
