"""Scene bodies, primitive-shape collision detection, and contact response.

Arm links are capsules, obstacles spheres, station modules and the research
module boxes. The arm is kinematic: contacts never move it. Obstacles pick
up velocity along the contact normal and then drift in a straight line
(microgravity, no angular motion).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math

import numpy as np

from .geom import Pose, quat_rotate, quat_conj

RESPONSE_GAIN = 1.0
SCORED_KINDS_A = ("arm_link", "module")
SCORED_KINDS_B = ("obstacle", "iss")


class AttachmentError(RuntimeError):
    """Raised on attach while attached / detach while detached."""


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Capsule:
    """Segment p0-p1 (local frame) swept by a sphere of the given radius."""

    radius: float
    p0: tuple[float, float, float]
    p1: tuple[float, float, float]

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("capsule radius must be positive")


@dataclass(frozen=True)
class BoxShape:
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        if any(h <= 0 for h in self.half_extents):
            raise ValueError("box half-extents must be positive")


Shape = Sphere | Capsule | BoxShape


@dataclass
class Body:
    id: str
    kind: str  # arm_link | module | iss | obstacle
    shape: Shape
    pose: Pose = field(default_factory=Pose)
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in ("arm_link", "module", "iss", "obstacle"):
            raise ValueError(f"unknown body kind {self.kind!r}")
        self.velocity = np.asarray(self.velocity, dtype=float)


@dataclass
class Contact:
    body_a: str
    body_b: str
    point: np.ndarray
    normal: np.ndarray       # unit, pointing from body_a toward body_b
    depth: float
    time: float = 0.0
    episode: str = "new"     # new | ongoing


def _segment_world(body: Body, cap: Capsule) -> tuple[np.ndarray, np.ndarray]:
    return (body.pose.transform_point(np.array(cap.p0)),
            body.pose.transform_point(np.array(cap.p1)))


def closest_point_on_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return a
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return a + t * ab


def _point_box_vector(p_world: np.ndarray, body: Body, box: BoxShape) -> np.ndarray:
    """Vector from the closest point on the box surface region to p (world)."""
    q = quat_conj(body.pose.orientation)
    local = quat_rotate(q, p_world - body.pose.position)
    h = np.array(box.half_extents)
    clamped = np.clip(local, -h, h)
    return quat_rotate(body.pose.orientation, local - clamped)


def _segment_box_closest(a: np.ndarray, b: np.ndarray, body: Body,
                         box: BoxShape) -> tuple[float, np.ndarray]:
    """(distance, point on segment) minimizing distance to the solid box.

    Works in box-local coordinates where dist^2(t) is piecewise quadratic
    and convex: solve each quadratic piece between axis crossings exactly.
    """
    q = quat_conj(body.pose.orientation)
    al = quat_rotate(q, a - body.pose.position)
    bl = quat_rotate(q, b - body.pose.position)
    u = bl - al
    h = box.half_extents

    breaks = {0.0, 1.0}
    for i in range(3):
        ui = float(u[i])
        if abs(ui) > 1e-15:
            for bound in (h[i], -h[i]):
                t = (bound - float(al[i])) / ui
                if 0.0 < t < 1.0:
                    breaks.add(t)
    ts = sorted(breaks)

    def dist2(t: float) -> float:
        s = 0.0
        for i in range(3):
            e = abs(float(al[i]) + t * float(u[i])) - h[i]
            if e > 0.0:
                s += e * e
        return s

    best_t, best_d2 = 0.0, dist2(0.0)
    for lo, hi in zip(ts[:-1], ts[1:]):
        mid = 0.5 * (lo + hi)
        # active axes on this piece form dist^2 = A t^2 + B t + C
        aa = bb = 0.0
        for i in range(3):
            pi = float(al[i]) + mid * float(u[i])
            if pi > h[i]:
                r = float(al[i]) - h[i]
            elif pi < -h[i]:
                r = float(al[i]) + h[i]
            else:
                continue
            aa += float(u[i]) * float(u[i])
            bb += 2.0 * float(u[i]) * r
        cand = hi if aa == 0.0 else min(hi, max(lo, -bb / (2.0 * aa)))
        for t in (cand, hi):
            d2 = dist2(t)
            if d2 < best_d2:
                best_t, best_d2 = t, d2
    return math.sqrt(best_d2), a + best_t * (b - a)


def _box_axes(body: Body, box: BoxShape) -> tuple[np.ndarray, np.ndarray]:
    axes = np.column_stack([
        quat_rotate(body.pose.orientation, e)
        for e in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    ])
    return axes, np.array(box.half_extents)


def _box_box_overlap(ba: Body, sa: BoxShape, bb: Body, sb: BoxShape):
    """OBB-OBB separating-axis test; returns (depth, normal a->b) or None."""
    axes_a, ha = _box_axes(ba, sa)
    axes_b, hb = _box_axes(bb, sb)
    d = bb.pose.position - ba.pose.position
    candidates = [axes_a[:, i] for i in range(3)] + [axes_b[:, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            c = np.cross(axes_a[:, i], axes_b[:, j])
            n = np.linalg.norm(c)
            if n > 1e-9:
                candidates.append(c / n)
    best_depth = np.inf
    best_axis = None
    for axis in candidates:
        ra = float(np.sum(ha * np.abs(axis @ axes_a)))
        rb = float(np.sum(hb * np.abs(axis @ axes_b)))
        sep = abs(float(d @ axis))
        overlap = ra + rb - sep
        if overlap <= 0:
            return None
        if overlap < best_depth:
            best_depth = overlap
            best_axis = axis if float(d @ axis) >= 0 else -axis
    return best_depth, best_axis


def _pair_contact(a: Body, b: Body):
    """Geometric overlap test; returns (point, normal a->b, depth) or None."""
    sa, sb = a.shape, b.shape
    if isinstance(sa, Sphere) and isinstance(sb, Sphere):
        d = b.pose.position - a.pose.position
        dist = float(np.linalg.norm(d))
        depth = sa.radius + sb.radius - dist
        if depth <= 0:
            return None
        normal = d / dist if dist > 1e-12 else np.array([1.0, 0.0, 0.0])
        point = a.pose.position + normal * (sa.radius - 0.5 * depth)
        return point, normal, depth
    if isinstance(sa, Capsule) and isinstance(sb, Sphere):
        p0, p1 = _segment_world(a, sa)
        cp = closest_point_on_segment(b.pose.position, p0, p1)
        d = b.pose.position - cp
        dist = float(np.linalg.norm(d))
        depth = sa.radius + sb.radius - dist
        if depth <= 0:
            return None
        normal = d / dist if dist > 1e-12 else np.array([1.0, 0.0, 0.0])
        return cp + normal * sa.radius, normal, depth
    if isinstance(sa, Sphere) and isinstance(sb, Capsule):
        res = _pair_contact(b, a)
        if res is None:
            return None
        point, normal, depth = res
        return point, -normal, depth
    if isinstance(sa, Capsule) and isinstance(sb, Capsule):
        p0, p1 = _segment_world(a, sa)
        q0, q1 = _segment_world(b, sb)
        cp_a, cp_b = _closest_segment_segment(p0, p1, q0, q1)
        d = cp_b - cp_a
        dist = float(np.linalg.norm(d))
        depth = sa.radius + sb.radius - dist
        if depth <= 0:
            return None
        normal = d / dist if dist > 1e-12 else np.array([1.0, 0.0, 0.0])
        return cp_a + normal * sa.radius, normal, depth
    if isinstance(sa, Capsule) and isinstance(sb, BoxShape):
        p0, p1 = _segment_world(a, sa)
        dist, cp = _segment_box_closest(p0, p1, b, sb)
        depth = sa.radius - dist
        if depth <= 0:
            return None
        v = _point_box_vector(cp, b, sb)
        n = float(np.linalg.norm(v))
        normal = -v / n if n > 1e-12 else _fallback_normal(a, b)
        return cp + normal * sa.radius, normal, depth
    if isinstance(sa, BoxShape) and isinstance(sb, Capsule):
        res = _pair_contact(b, a)
        if res is None:
            return None
        point, normal, depth = res
        return point, -normal, depth
    if isinstance(sa, Sphere) and isinstance(sb, BoxShape):
        v = _point_box_vector(a.pose.position, b, sb)
        dist = float(np.linalg.norm(v))
        depth = sa.radius - dist
        if depth <= 0:
            return None
        normal = -v / dist if dist > 1e-12 else _fallback_normal(a, b)
        return a.pose.position + normal * sa.radius, normal, depth
    if isinstance(sa, BoxShape) and isinstance(sb, Sphere):
        res = _pair_contact(b, a)
        if res is None:
            return None
        point, normal, depth = res
        return point, -normal, depth
    if isinstance(sa, BoxShape) and isinstance(sb, BoxShape):
        res = _box_box_overlap(a, sa, b, sb)
        if res is None:
            return None
        depth, normal = res
        point = 0.5 * (a.pose.position + b.pose.position)
        return point, normal, depth
    raise TypeError(f"unsupported shape pair {type(sa)}/{type(sb)}")


def _fallback_normal(a: Body, b: Body) -> np.ndarray:
    d = b.pose.position - a.pose.position
    n = float(np.linalg.norm(d))
    return d / n if n > 1e-12 else np.array([1.0, 0.0, 0.0])


def _closest_segment_segment(p0, p1, q0, q1):
    """Closest points between two segments (standard clamped solve)."""
    u = p1 - p0
    v = q1 - q0
    w = p0 - q0
    a, b, c = float(u @ u), float(u @ v), float(v @ v)
    d, e = float(u @ w), float(v @ w)
    denom = a * c - b * b
    if denom > 1e-12:
        s = np.clip((b * e - c * d) / denom, 0.0, 1.0)
    else:
        s = 0.0
    t = (b * s + e) / c if c > 1e-12 else 0.0
    t = float(np.clip(t, 0.0, 1.0))
    # re-clamp s for the clamped t
    if a > 1e-12:
        s = float(np.clip((b * t - d) / a, 0.0, 1.0))
    return p0 + s * u, q0 + t * v


def collision_pairs(bodies: list[Body]) -> list[tuple[Body, Body]]:
    """Pairs subject to detection: {arm_link|module} x {obstacle|iss} plus
    obstacle x obstacle."""
    out = []
    for a, b in itertools.combinations(bodies, 2):
        kinds = {a.kind, b.kind}
        if kinds == {"obstacle"}:
            out.append((a, b))
            continue
        first = a if a.kind in SCORED_KINDS_A else b if b.kind in SCORED_KINDS_A else None
        second = b if first is a else a
        if first is not None and second.kind in SCORED_KINDS_B:
            out.append((first, second))
    return out


def _bounding_sphere(body: Body) -> tuple[np.ndarray, float]:
    s = body.shape
    if isinstance(s, Sphere):
        return body.pose.position, s.radius
    if isinstance(s, Capsule):
        p0, p1 = _segment_world(body, s)
        return 0.5 * (p0 + p1), 0.5 * float(np.linalg.norm(p1 - p0)) + s.radius
    return body.pose.position, float(np.linalg.norm(s.half_extents))


def detect_collisions(bodies: list[Body], now: float = 0.0,
                      previous: frozenset[tuple[str, str]] = frozenset()) -> list[Contact]:
    """All overlapping detectable pairs; episode='new' iff the pair was
    separated on the previous tick (pass the prior overlap key set)."""
    contacts = []
    spheres = {b.id: _bounding_sphere(b) for b in bodies}
    for a, b in collision_pairs(bodies):
        (ca, ra), (cb, rb) = spheres[a.id], spheres[b.id]
        if float(np.linalg.norm(cb - ca)) > ra + rb:
            continue
        res = _pair_contact(a, b)
        if res is None:
            continue
        point, normal, depth = res
        key = pair_key(a.id, b.id)
        contacts.append(Contact(a.id, b.id, point, normal, depth, time=now,
                                episode="ongoing" if key in previous else "new"))
    return contacts


def pair_key(id_a: str, id_b: str) -> tuple[str, str]:
    return (id_a, id_b) if id_a <= id_b else (id_b, id_a)


def resolve_contact(contact: Contact, bodies: dict[str, Body],
                    dt: float = 0.02, gain: float = RESPONSE_GAIN) -> None:
    """Push free obstacles along the contact normal; kinematic bodies stay.

    The imparted speed is depth/dt (penetration rate over one tick) times
    a response gain. Obstacle-obstacle contacts split the push evenly.
    """
    a = bodies[contact.body_a]
    b = bodies[contact.body_b]
    speed = gain * contact.depth / dt
    if a.kind == "obstacle" and b.kind == "obstacle":
        a.velocity = a.velocity - 0.5 * speed * contact.normal
        b.velocity = b.velocity + 0.5 * speed * contact.normal
    elif b.kind == "obstacle":
        b.velocity = b.velocity + speed * contact.normal
    elif a.kind == "obstacle":
        a.velocity = a.velocity - speed * contact.normal


def integrate_free_bodies(bodies: list[Body], dt: float) -> None:
    """Straight-line drift for anything carrying velocity (microgravity)."""
    for body in bodies:
        if np.any(body.velocity != 0.0):
            body.pose = Pose(body.pose.position + body.velocity * dt,
                             body.pose.orientation.copy())


@dataclass
class Attachment:
    """Rigid coupling of the research module to the end-effector frame."""

    relative: Pose  # module pose expressed in the ee frame

    @staticmethod
    def attach(ee_frame: Pose, module: Body) -> "Attachment":
        return Attachment(ee_frame.inverse().compose(module.pose))

    def follow(self, ee_frame: Pose) -> Pose:
        return ee_frame.compose(self.relative)


class AttachmentState:
    """Tracks whether the module is latched and keeps it following the ee."""

    def __init__(self):
        self._attachment: Attachment | None = None

    @property
    def attached(self) -> bool:
        return self._attachment is not None

    def attach(self, ee_frame: Pose, module: Body) -> None:
        if self._attachment is not None:
            raise AttachmentError("module already attached")
        self._attachment = Attachment.attach(ee_frame, module)
        module.velocity = np.zeros(3)

    def detach(self, module: Body) -> None:
        if self._attachment is None:
            raise AttachmentError("module not attached")
        self._attachment = None
        module.velocity = np.zeros(3)

    def update(self, ee_frame: Pose, module: Body) -> None:
        if self._attachment is not None:
            module.pose = self._attachment.follow(ee_frame)
