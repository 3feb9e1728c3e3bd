"""Paired physical/twin execution: threats, snapshots, updates, studies."""

from __future__ import annotations

import copy
import math
import statistics
import time as _time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analysis import avg_utility_deviation, comparison_memory_cost
from .equivalence import CheckerHistory, get_checker, windowed_check
from .model import (
    DroneState,
    KnowledgeGraph,
    Message,
    ObjectState,
    SceneSpec,
    Vec2,
    WorldState,
)
from .agent import AgentStreams
from .worldsim import clamp_point, coverage_map, step_world, utility_k

# ============================================================
# Randomness plumbing
# ============================================================

# Stream tags keep unrelated consumers on provably distinct substreams.
STREAM_AGENT = 1
STREAM_NOISE = 2
STREAM_SCENE = 3
STREAM_STUDY = 4


def derive_rng(*entropy: int) -> np.random.Generator:
    """A PCG64 generator keyed by an integer tuple; same tuple, same stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


# Channel tags inside a drone's stream family.
CHANNEL_CHOICE = 0
CHANNEL_WALK = 1


def agent_streams(
    seed: int,
    drone_ids: Iterable[int],
    salt: tuple[int, ...] = (),
    walk_seed: int | None = None,
) -> dict[int, AgentStreams]:
    """Private choice and walk streams per drone.

    `walk_seed` defaults to `seed`; passing a different value keys only the
    choice channel to `seed`, which is how a twin diverges on object picks
    while sampling the same movement noise as its physical counterpart.
    """
    wseed = seed if walk_seed is None else walk_seed
    return {
        i: AgentStreams(
            derive_rng(seed, STREAM_AGENT, *salt, i, CHANNEL_CHOICE),
            derive_rng(wseed, STREAM_AGENT, *salt, i, CHANNEL_WALK),
        )
        for i in drone_ids
    }


# ============================================================
# Threats
# ============================================================


@dataclass(frozen=True)
class ThreatConfig:
    """Which divergence channels are switched on for a paired run."""

    bias_degrees: float = 0.0  # leftward per-step rotation of object headings (physical only)
    divergent_seeds: bool = False  # twin agents pick objects from a different seed
    sensor_limited: bool = False  # uncovered objects are position-estimated in snapshots
    estimation_error_max: float = 0.0


CONDITIONS: dict[str, ThreatConfig] = {
    "none": ThreatConfig(),
    "I": ThreatConfig(bias_degrees=3.0, divergent_seeds=True),
    "II": ThreatConfig(bias_degrees=3.0, sensor_limited=True, estimation_error_max=5.0),
}


# ============================================================
# Snapshots and twin updates
# ============================================================


@dataclass(frozen=True)
class SnapshotObject:
    id: int
    position: Vec2
    direction: float
    important: bool
    estimated: bool  # position is a noisy estimate, not a measurement


@dataclass(frozen=True)
class SnapshotDrone:
    id: int
    position: Vec2
    inbox: tuple[Message, ...]
    graph: KnowledgeGraph


@dataclass(frozen=True)
class Snapshot:
    """What the physical side reports when the twin asks for a resync."""

    time: int
    objects: tuple[SnapshotObject, ...]
    drones: tuple[SnapshotDrone, ...]


def sense_snapshot(
    physical: WorldState,
    threat: ThreatConfig,
    rng: np.random.Generator,
    signed_noise: bool = False,
) -> Snapshot:
    """Capture the physical world for an update.

    Under a sensor-limited threat, objects nobody currently covers get their
    position estimated with per-coordinate noise (U[0, e] by default,
    U[-e, e] when signed), clamped into bounds and flagged. Directions,
    importance, inboxes, and graphs are reported exactly.
    """
    uncovered: set[int] = set()
    if threat.sensor_limited:
        cov = coverage_map(physical, physical.params.sensing_range)
        uncovered = {oid for oid, drones in cov.items() if not drones}

    objects = []
    for o in physical.objects:
        pos = o.position
        estimated = False
        if o.id in uncovered:
            e = threat.estimation_error_max
            lo = -e if signed_noise else 0.0
            pos = clamp_point(
                Vec2(pos.x + rng.uniform(lo, e), pos.y + rng.uniform(lo, e)),
                physical.params.bounds,
            )
            estimated = True
        objects.append(SnapshotObject(o.id, pos, o.direction, o.important, estimated))

    drones = tuple(
        SnapshotDrone(d.id, d.position, d.inbox, d.graph) for d in physical.drones
    )
    return Snapshot(physical.time, tuple(objects), drones)


STRATEGIES = ("update", "keep", "clear")


def apply_update(twin: WorldState, snapshot: Snapshot, strategy: str) -> WorldState:
    """Overwrite the twin from a snapshot.

    All strategies replace positions, directions, importance flags, and
    inboxes. They differ on the interaction graphs: "update" copies them from
    the snapshot, "keep" leaves the twin's own graphs in place, "clear" zeroes
    every edge. Agent rng streams are never touched.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown update strategy {strategy!r}")
    if snapshot.time != twin.time:
        raise ValueError(
            f"snapshot time {snapshot.time} does not match twin time {twin.time}"
        )
    objects = tuple(
        ObjectState(o.id, o.position, o.direction, o.important)
        for o in snapshot.objects
    )
    twin_graphs = {d.id: d.graph for d in twin.drones}
    drones = []
    for sd in snapshot.drones:
        if strategy == "update":
            graph = sd.graph.copy()
        elif strategy == "keep":
            graph = twin_graphs[sd.id]
        else:
            graph = KnowledgeGraph.empty(sd.id, sd.graph.drones)
        drones.append(DroneState(sd.id, sd.position, sd.inbox, graph))
    return WorldState(twin.time, objects, tuple(drones), twin.params)


# ============================================================
# Paired lockstep runs
# ============================================================


@dataclass(frozen=True)
class TwinRunConfig:
    """Everything a paired run needs; world parameters come from the scene."""

    scene: SceneSpec
    scene_name: str = "scene"
    condition: str = "none"
    checker: str = "state"
    theta: float = math.inf
    q: int = 1
    l: int = 1
    steps: int = 1000
    seed: int = 0
    twin_seed: int | None = None  # defaults to seed + 1 when divergence is on
    strategy: str = "update"
    bias_mode: str = "accumulate"
    signed_noise: bool = False
    realtime: float = 0.0  # demo pacing, seconds per step; 0 disables


@dataclass
class Trace:
    """Per-step record of one paired run plus its final counters."""

    config: TwinRunConfig
    u_physical: list[float] = field(default_factory=list)
    u_twin: list[float] = field(default_factory=list)
    metric_values: list[float] = field(default_factory=list)
    updated: list[bool] = field(default_factory=list)
    update_steps: list[int] = field(default_factory=list)
    action_kinds_physical: list[tuple[str, ...]] = field(default_factory=list)
    action_kinds_twin: list[tuple[str, ...]] = field(default_factory=list)
    memory_cost: float = 0.0

    @property
    def updates(self) -> int:
        return len(self.update_steps)

    @property
    def steps(self) -> int:
        return len(self.u_physical)

    def avg_utility_deviation(self) -> float:
        return avg_utility_deviation(self.u_physical, self.u_twin)

    def rows(self):
        for t in range(self.steps):
            yield (
                t,
                self.u_physical[t],
                self.u_twin[t],
                self.metric_values[t],
                int(self.updated[t]),
            )


def run_paired(config: TwinRunConfig) -> Trace:
    """Run physical and twin worlds in lockstep with checker-triggered updates.

    Each step: record comparison payloads, run the windowed check on the
    q-grid, resync the twin on a trigger (the recorded payloads keep their
    pre-update values), measure both utilities, then advance both worlds.
    Utilities come last so u' describes the twin the step hands onward: a
    resynced twin scores as resynced. Only the physical world sees the
    heading bias; only the twin agents' choice draws come from a different
    seed under seed divergence.
    """
    threat = CONDITIONS.get(config.condition)
    if threat is None:
        raise ValueError(f"unknown condition {config.condition!r}")
    checker = get_checker(config.checker)
    if config.strategy not in STRATEGIES:
        raise ValueError(f"unknown update strategy {config.strategy!r}")
    if config.steps < 1:
        raise ValueError(f"steps must be >= 1, got {config.steps}")

    physical = config.scene.build_world()
    twin = config.scene.build_world()
    params = physical.params
    k = params.k
    if config.checker == "action2" and k < 2:
        raise ValueError("checker action2 needs k >= 2")

    ids = [d.id for d in physical.drones]
    phys_rngs = agent_streams(config.seed, ids)
    if threat.divergent_seeds:
        twin_base = config.twin_seed if config.twin_seed is not None else config.seed + 1
        # Only the choice channel diverges; walks stay on the shared seed so
        # a freshly re-synced twin keeps sampling the same wander angles.
        twin_rngs = agent_streams(twin_base, ids, walk_seed=config.seed)
    else:
        twin_rngs = agent_streams(config.seed, ids)
    noise_rng = derive_rng(config.seed, STREAM_NOISE)

    def metric(p: object, t: object) -> float:
        return checker.metric(p, t, k)

    history = CheckerHistory(config.l)
    trace = Trace(config)
    prev_actions_phys: tuple = ()
    prev_actions_twin: tuple = ()

    for t in range(config.steps):
        payload_phys = checker.payload(physical, prev_actions_phys)
        payload_twin = checker.payload(twin, prev_actions_twin)
        history.append(t, payload_phys, payload_twin)
        trace.metric_values.append(metric(payload_phys, payload_twin))
        trace.action_kinds_physical.append(
            tuple(a.kind.value for a in prev_actions_phys)
        )
        trace.action_kinds_twin.append(tuple(a.kind.value for a in prev_actions_twin))

        outcome = windowed_check(history, t, config.q, config.l, config.theta, metric)
        if outcome.triggered:
            snapshot = sense_snapshot(physical, threat, noise_rng, config.signed_noise)
            twin = apply_update(twin, snapshot, config.strategy)
            trace.update_steps.append(t)
        trace.updated.append(outcome.triggered)

        # Utilities describe the tick as the manager leaves it: payloads and
        # the window are read from the pre-update twin, but the recorded u'
        # reflects any re-init applied this tick.
        trace.u_physical.append(utility_k(physical, k, params.sensing_range))
        trace.u_twin.append(utility_k(twin, k, params.sensing_range))

        physical, prev_actions_phys = step_world(
            physical,
            phys_rngs,
            bias_degrees=threat.bias_degrees,
            bias_mode=config.bias_mode,
        )
        twin, prev_actions_twin = step_world(twin, twin_rngs)
        if config.realtime > 0:
            _time.sleep(config.realtime)

    trace.memory_cost = _trace_memory_cost(trace, len(ids), len(physical.objects), k)
    return trace


def _trace_memory_cost(trace: Trace, m: int, n_obj: int, k: int) -> float:
    if trace.config.checker != "action2":
        return comparison_memory_cost(trace.config.checker, m, n_obj)
    costs = [
        comparison_memory_cost("action2", m, n_obj, k=k, step_kinds=(kp, kt))
        for kp, kt in zip(trace.action_kinds_physical, trace.action_kinds_twin)
    ]
    return sum(costs) / len(costs) if costs else 0.0


# ============================================================
# Summary rows (shared by run and sweep)
# ============================================================

SUMMARY_HEADER = (
    "scene",
    "condition",
    "checker",
    "theta",
    "q",
    "l",
    "seed",
    "repeat",
    "updates",
    "avg_utility_deviation",
    "memory_cost",
)


def summary_row(trace: Trace, repeat: int = 0) -> tuple:
    cfg = trace.config
    return (
        cfg.scene_name,
        cfg.condition,
        cfg.checker,
        repr(cfg.theta),
        cfg.q,
        cfg.l,
        cfg.seed,
        repeat,
        trace.updates,
        repr(trace.avg_utility_deviation()),
        repr(trace.memory_cost),
    )


# ============================================================
# Update-strategy study
# ============================================================


@dataclass(frozen=True)
class StrategyStudyConfig:
    """Clone-accumulate-update-evaluate experiment over sampled start times."""

    scene: SceneSpec
    scene_name: str = "scene"
    condition: str = "I"
    samples: int = 30
    repeats: int = 10
    seed: int = 0
    accumulation: int = 50  # steps the clone drifts before the update
    evaluation: int = 50  # steps scored after the update
    start_min: int = 1
    start_max: int = 900
    horizon: int = 1000
    bias_mode: str = "accumulate"
    signed_noise: bool = False


@dataclass
class StrategyStudyResult:
    """Per-strategy deviation samples, one per (repeat, start time)."""

    config: StrategyStudyConfig
    start_times: list[int]
    deviations: dict[str, list[float]]

    def mean(self, strategy: str) -> float:
        return statistics.fmean(self.deviations[strategy])

    def stdev(self, strategy: str) -> float:
        values = self.deviations[strategy]
        return statistics.stdev(values) if len(values) > 1 else 0.0

    def stderr(self, strategy: str) -> float:
        values = self.deviations[strategy]
        return self.stdev(strategy) / math.sqrt(len(values)) if values else 0.0


def run_strategy_study(config: StrategyStudyConfig) -> StrategyStudyResult:
    """Compare the three update strategies on identical drift episodes.

    Per repeat, one physical trajectory runs to the horizon. At each sampled
    start the twin is cloned from the physical world with exact stream
    copies (under seed divergence its choice channel is re-keyed to the
    divergent seed), drifts for the accumulation phase, receives one shared
    snapshot through each strategy in turn, and is scored on mean |u - u'|
    over the evaluation phase. Every strategy sees identical worlds,
    streams, and snapshot bytes at the branch point.
    """
    threat = CONDITIONS.get(config.condition)
    if threat is None:
        raise ValueError(f"unknown condition {config.condition!r}")
    if config.samples < 1 or config.repeats < 1:
        raise ValueError("samples and repeats must be >= 1")
    if not (0 <= config.start_min <= config.start_max):
        raise ValueError("need 0 <= start_min <= start_max")
    last_needed = config.start_max + config.accumulation + config.evaluation
    if last_needed > config.horizon:
        raise ValueError(
            f"start_max {config.start_max} + phases {config.accumulation}+"
            f"{config.evaluation} overruns the horizon {config.horizon}"
        )

    study_rng = derive_rng(config.seed, STREAM_STUDY)
    start_times = sorted(
        int(s)
        for s in study_rng.integers(
            config.start_min, config.start_max + 1, size=config.samples
        )
    )
    clone_points = set(start_times)
    snapshot_points = {s + config.accumulation for s in start_times}

    k = config.scene.k
    sensing_range = config.scene.sensing_range
    ids = [d.id for d in config.scene.drones]
    deviations: dict[str, list[float]] = {s: [] for s in STRATEGIES}

    for rep in range(config.repeats):
        physical = config.scene.build_world()
        phys_rngs = agent_streams(config.seed, ids, salt=(rep,))
        noise_rng = derive_rng(config.seed, STREAM_NOISE, rep)

        u_phys = [utility_k(physical, k, sensing_range)]
        worlds: dict[int, WorldState] = {}
        stream_copies: dict[int, dict[int, AgentStreams]] = {}
        if 0 in clone_points:
            worlds[0] = physical
            stream_copies[0] = copy.deepcopy(phys_rngs)
        run_to = config.start_max + config.accumulation + config.evaluation
        for t in range(1, run_to + 1):
            physical, _ = step_world(
                physical,
                phys_rngs,
                bias_degrees=threat.bias_degrees,
                bias_mode=config.bias_mode,
            )
            u_phys.append(utility_k(physical, k, sensing_range))
            if t in clone_points or t in snapshot_points:
                worlds[t] = physical
                if t in clone_points:
                    stream_copies[t] = copy.deepcopy(phys_rngs)

        for start in start_times:
            twin = worlds[start]  # world states are immutable, sharing is safe
            twin_rngs = copy.deepcopy(stream_copies[start])
            if threat.divergent_seeds:
                divergent = agent_streams(config.seed + 1, ids, salt=(rep,))
                twin_rngs = {
                    i: AgentStreams(divergent[i].choice, twin_rngs[i].walk)
                    for i in ids
                }
            for _ in range(config.accumulation):
                twin, _ = step_world(twin, twin_rngs)

            update_at = start + config.accumulation
            snapshot = sense_snapshot(
                worlds[update_at], threat, noise_rng, config.signed_noise
            )
            for strategy in STRATEGIES:
                branch = apply_update(twin, snapshot, strategy)
                branch_rngs = copy.deepcopy(twin_rngs)
                gaps = []
                for step in range(1, config.evaluation + 1):
                    branch, _ = step_world(branch, branch_rngs)
                    gaps.append(
                        abs(u_phys[update_at + step] - utility_k(branch, k, sensing_range))
                    )
                deviations[strategy].append(sum(gaps) / len(gaps))

    return StrategyStudyResult(config, start_times, deviations)
