"""Per-drone behaviour: sensing, action selection, knowledge evolution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import (
    ActionKind,
    ActionRecord,
    KnowledgeGraph,
    Message,
    Vec2,
    WorldState,
)


class SensedObject(NamedTuple):
    id: int
    position: Vec2
    important: bool


class AgentStreams(NamedTuple):
    """One drone's private randomness, split by what it feeds.

    `choice` drives which important object gets picked; `walk` drives the
    wander angle. Keeping the channels separate lets a paired twin diverge
    on choices while still sampling the same movement noise.
    """

    choice: np.random.Generator
    walk: np.random.Generator


class AgentDraws(NamedTuple):
    """The two uniforms a drone consumes each step, one per channel.

    The stepper draws both every step for every drone whether or not they
    end up used, so lockstep worlds stay draw-aligned across branch and
    update differences.
    """

    choice: float
    walk: float


@dataclass(frozen=True)
class Perception:
    """Everything one drone can see at one instant.

    `co_cover` holds (other drone id, object id) pairs for objects this drone
    itself has in range; `time` is the world clock at sensing.
    """

    drone_id: int
    position: Vec2
    time: int
    objects_in_range: tuple[SensedObject, ...]  # ascending object id
    co_cover: frozenset[tuple[int, int]]
    inbox: tuple[Message, ...]


@dataclass(frozen=True)
class Decision:
    """One drone's chosen move and side effects for the current step.

    Exactly one of move_target / move_angle is set; move_angle is the
    random-walk heading in degrees. `outgoing` pairs each message with its
    recipient drone id.
    """

    action: ActionRecord
    move_target: Vec2 | None
    move_angle: float | None
    move_distance: float
    outgoing: tuple[tuple[int, Message], ...] = ()


# Movement budget per action kind, in world units per step.
FOLLOW_DISTANCE = 1.0
RESPOND_DISTANCE = 2.0
RANDOM_WALK_DISTANCE = 5.0


def build_perceptions(world: WorldState, sensing_range: float) -> dict[int, Perception]:
    """Sense the world once for every drone.

    One distance matrix serves all drones, so this is the path the stepper
    uses; `perceive` delegates here for single-drone queries.
    """
    drones = world.drones
    objects = world.objects
    if not drones:
        return {}

    covered_by: dict[int, list[int]] = {o.id: [] for o in objects}
    in_range: dict[int, list[SensedObject]] = {d.id: [] for d in drones}
    if objects:
        dpos = np.array([d.position for d in drones])
        opos = np.array([o.position for o in objects])
        diff = dpos[:, None, :] - opos[None, :, :]
        dist = np.hypot(diff[:, :, 0], diff[:, :, 1])
        for di, oj in zip(*np.nonzero(dist <= sensing_range)):
            drone = drones[di]
            obj = objects[oj]
            covered_by[obj.id].append(drone.id)
            in_range[drone.id].append(SensedObject(obj.id, obj.position, obj.important))

    out: dict[int, Perception] = {}
    for d in drones:
        sensed = in_range[d.id]
        pairs = frozenset(
            (other, s.id)
            for s in sensed
            for other in covered_by[s.id]
            if other != d.id
        )
        out[d.id] = Perception(
            drone_id=d.id,
            position=d.position,
            time=world.time,
            objects_in_range=tuple(sensed),
            co_cover=pairs,
            inbox=d.inbox,
        )
    return out


def perceive(world: WorldState, drone_id: int, sensing_range: float) -> Perception:
    """Sense the world from one drone's point of view."""
    perceptions = build_perceptions(world, sensing_range)
    if drone_id not in perceptions:
        raise ValueError(f"unknown drone id {drone_id}")
    return perceptions[drone_id]


def select_notify_targets(graph: KnowledgeGraph, self_id: int, k: int) -> frozenset[int]:
    """Pick the k-1 strongest-edge drones to ask for help, ties by ascending id.

    Zero-weight drones are eligible; with fewer than k-1 others, all of them
    are picked.
    """
    others = sorted(graph.drones - {self_id})
    others.sort(key=lambda d: -graph.weight(d))  # stable: id order breaks ties
    return frozenset(others[: max(0, k - 1)])


def select_response(inbox: tuple[Message, ...], graph: KnowledgeGraph) -> Message | None:
    """Choose which help request to honour: strongest edge, then newest, then lowest sender id."""
    if not inbox:
        return None
    return min(
        inbox,
        key=lambda m: (-graph.weight(m.sender_id), -m.sent_at, m.sender_id),
    )


def decide(
    perception: Perception,
    graph: KnowledgeGraph,
    draws: AgentDraws,
    k: int,
) -> Decision:
    """Select this step's action.

    Priority: important object in range (notify if not locally k-covered,
    else follow), then answering a help request, then a random walk. Pure in
    its inputs: all randomness arrives pre-drawn in `draws`.
    """
    me = perception.drone_id
    important = [o for o in perception.objects_in_range if o.important]
    if important:
        # objects_in_range is id-sorted, so the draw is order-independent
        obj = important[int(draws.choice * len(important))]
        covering_others = {d for d, oid in perception.co_cover if oid == obj.id}
        if len(covering_others) < k - 1:
            targets = select_notify_targets(graph, me, k)
            msg = Message(me, obj.id, obj.position, perception.time)
            action = ActionRecord(
                me,
                ActionKind.NOTIFY_AND_FOLLOW,
                followed_object=obj.id,
                notified_drones=targets,
            )
            return Decision(
                action,
                move_target=obj.position,
                move_angle=None,
                move_distance=FOLLOW_DISTANCE,
                outgoing=tuple((t, msg) for t in sorted(targets)),
            )
        action = ActionRecord(me, ActionKind.FOLLOW, followed_object=obj.id)
        return Decision(
            action,
            move_target=obj.position,
            move_angle=None,
            move_distance=FOLLOW_DISTANCE,
        )

    request = select_response(perception.inbox, graph)
    if request is not None:
        action = ActionRecord(
            me,
            ActionKind.RESPOND_AND_FOLLOW,
            followed_object=request.object_id,
            responded_to=request.sender_id,
        )
        return Decision(
            action,
            move_target=request.object_position,
            move_angle=None,
            move_distance=RESPOND_DISTANCE,
        )

    angle = draws.walk * 360.0
    action = ActionRecord(me, ActionKind.RANDOM_WALK)
    return Decision(
        action,
        move_target=None,
        move_angle=angle,
        move_distance=RANDOM_WALK_DISTANCE,
    )


def evolve_knowledge(
    graph: KnowledgeGraph,
    perception: Perception,
    gamma: float,
    delta: float,
) -> KnowledgeGraph:
    """One pheromone step: evaporate all edges, reinforce per co-covered object.

    Weights stay below delta * n_objects / (1 - gamma) because each step adds
    at most delta per shared object after multiplying by gamma.
    """
    weights = {d: w * gamma for d, w in graph.weights.items()}
    for other, _oid in sorted(perception.co_cover):
        weights[other] = weights.get(other, 0.0) + delta
    return KnowledgeGraph(graph.owner, graph.drones, weights)
