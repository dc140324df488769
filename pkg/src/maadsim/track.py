"""Closed two-lane track made of waypoint rings, with projection queries."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import kernels

INNER, OUTER = 0, 1

DEFAULT_SPACING = 0.1
DEFAULT_LANE_WIDTH = 0.22
DEFAULT_HALF_WIDTH = 0.22


def wrap_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(angle, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


class Waypoint(NamedTuple):
    position: tuple[float, float]
    lane_id: int
    index: int


@dataclass(frozen=True)
class LaneProjection:
    nearest_point: np.ndarray
    lateral_offset: float
    tangent_angle: float
    arc_position: float


@dataclass(frozen=True)
class _Ring:
    points: np.ndarray
    seg: np.ndarray = field(repr=False)
    seglen: np.ndarray = field(repr=False)
    cum: np.ndarray = field(repr=False)
    heading: np.ndarray = field(repr=False)
    cum_list: list = field(repr=False, default_factory=list)
    seglen_list: list = field(repr=False, default_factory=list)
    points_list: list = field(repr=False, default_factory=list)
    seg_list: list = field(repr=False, default_factory=list)

    @classmethod
    def from_points(cls, points) -> "_Ring":
        pts = np.ascontiguousarray(points, dtype=np.float64)
        seg = np.ascontiguousarray(np.roll(pts, -1, axis=0) - pts)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(seglen)])
        heading = np.array([wrap_angle(math.atan2(dy, dx)) for dx, dy in seg])
        for arr in (pts, seg, seglen, cum, heading):
            arr.setflags(write=False)
        return cls(pts, seg, seglen, cum, heading, cum.tolist(), seglen.tolist(),
                   pts.tolist(), seg.tolist())

    @property
    def length(self) -> float:
        return float(self.cum[-1])


class TrackMap:
    """Two closed lanes (0 = inner, 1 = outer) travelled counter-clockwise.

    Immutable after construction. ``half_width`` is the off-track threshold
    measured from the nearer lane centerline.
    """

    def __init__(self, inner, outer, lane_width=DEFAULT_LANE_WIDTH,
                 half_width=DEFAULT_HALF_WIDTH, spacing=DEFAULT_SPACING):
        self.rings = (_Ring.from_points(inner), _Ring.from_points(outer))
        self.lane_width = float(lane_width)
        self.half_width = float(half_width)
        self.spacing = float(spacing)
        self._validate()

    def _validate(self) -> None:
        if not self.lane_width > 0:
            raise ValueError("lane_width must be positive")
        if self.half_width < self.lane_width / 2:
            raise ValueError("half_width must be at least lane_width / 2")
        for lane, ring in enumerate(self.rings):
            if len(ring.points) < 8:
                raise ValueError(f"lane {lane} has fewer than 8 waypoints")
            if ring.seglen.min() <= 0 or ring.seglen.max() > 0.2:
                raise ValueError(f"lane {lane} waypoint spacing outside (0, 0.2] m")
        if not self.rings[INNER].length < self.rings[OUTER].length:
            raise ValueError("inner ring must be shorter than outer ring")

    def lane_length(self, lane_id: int) -> float:
        return self.rings[lane_id].length

    def waypoints(self, lane_id: int) -> list[Waypoint]:
        pts = self.rings[lane_id].points
        return [Waypoint((float(x), float(y)), lane_id, i) for i, (x, y) in enumerate(pts)]

    def project_many(self, lane_id: int, points):
        """Vectorized projection: (nearest, lateral, tangent, arc) arrays."""
        r = self.rings[lane_id]
        pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
        return kernels.project_points(pts, r.points, r.seg, r.seglen, r.cum, r.heading)

    def project(self, lane_id: int, point) -> LaneProjection:
        nearest, lateral, tangent, arc = self.project_many(lane_id, point)
        return LaneProjection(nearest[0], float(lateral[0]), float(tangent[0]), float(arc[0]))

    def point_at_arc(self, lane_id: int, s: float) -> np.ndarray:
        r = self.rings[lane_id]
        cum = r.cum_list
        s = s % cum[-1]
        k = min(max(bisect.bisect_right(cum, s) - 1, 0), len(cum) - 2)
        t = (s - cum[k]) / r.seglen_list[k]
        (x, y), (dx, dy) = r.points_list[k], r.seg_list[k]
        return np.array([x + t * dx, y + t * dy])

    def goal_point(self, lane_id: int, proj: LaneProjection, lookahead: float) -> np.ndarray:
        return self.point_at_arc(lane_id, proj.arc_position + lookahead)

    def is_off_track(self, point) -> bool:
        offset = min(abs(self.project(lane, point).lateral_offset) for lane in (INNER, OUTER))
        return offset > self.half_width

    # -- persistence -----------------------------------------------------

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    def dumps(self) -> str:
        lines = [
            f"lanes 2 spacing {self.spacing:.9g} width {self.lane_width:.9g} "
            f"half_width {self.half_width:.9g}"
        ]
        for lane, ring in enumerate(self.rings):
            lines.extend(f"{lane} {x:.9g} {y:.9g}" for x, y in ring.points)
        return "\n".join(lines) + "\n"

    @classmethod
    def read(cls, path) -> "TrackMap":
        return cls.loads(Path(path).read_text())

    @classmethod
    def loads(cls, text: str) -> "TrackMap":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines:
            raise ValueError("empty track file")
        head = lines[0]
        if len(head) != 8 or head[0::2] != ["lanes", "spacing", "width", "half_width"]:
            raise ValueError("bad track header: " + " ".join(head))
        if int(head[1]) != 2:
            raise ValueError("only two-lane tracks are supported")
        rings: list[list[tuple[float, float]]] = [[], []]
        for lineno, parts in enumerate(lines[1:], start=2):
            if len(parts) != 3 or parts[0] not in ("0", "1"):
                raise ValueError(f"bad waypoint line {lineno}: {' '.join(parts)}")
            rings[int(parts[0])].append((float(parts[1]), float(parts[2])))
        return cls(rings[0], rings[1], lane_width=float(head[5]),
                   half_width=float(head[7]), spacing=float(head[3]))


def _rounded_rect(s: float, lx: float, ly: float, radius: float) -> tuple[float, float]:
    """Point at arc length ``s`` on a CCW rounded rectangle starting bottom-left."""
    hx, hy = lx / 2, ly / 2
    quarter = math.pi * radius / 2
    pieces = [
        ("line", lx, (-hx, -hy - radius), (1.0, 0.0)),
        ("arc", quarter, (hx, -hy), -math.pi / 2),
        ("line", ly, (hx + radius, -hy), (0.0, 1.0)),
        ("arc", quarter, (hx, hy), 0.0),
        ("line", lx, (hx, hy + radius), (-1.0, 0.0)),
        ("arc", quarter, (-hx, hy), math.pi / 2),
        ("line", ly, (-hx - radius, hy), (0.0, -1.0)),
        ("arc", quarter, (-hx, -hy), math.pi),
    ]
    for kind, length, origin, direction in pieces:
        if s <= length or kind == "arc" and direction == math.pi:
            if kind == "line":
                return origin[0] + s * direction[0], origin[1] + s * direction[1]
            phi = direction + s / radius
            return origin[0] + radius * math.cos(phi), origin[1] + radius * math.sin(phi)
        s -= length
    raise AssertionError("unreachable")


def rounded_rectangle_track(lx=1.5, ly=0.4, outer_radius=0.5,
                            lane_width=DEFAULT_LANE_WIDTH,
                            half_width=DEFAULT_HALF_WIDTH,
                            spacing=DEFAULT_SPACING) -> TrackMap:
    """Rounded-rectangle loop; the inner lane sits ``lane_width`` inside the outer."""
    rings = []
    for radius in (outer_radius - lane_width, outer_radius):
        length = 2 * lx + 2 * ly + 2 * math.pi * radius
        n = math.ceil(length / spacing - 1e-9)
        step = length / n
        rings.append([_rounded_rect(i * step, lx, ly, radius) for i in range(n)])
    return TrackMap(rings[0], rings[1], lane_width, half_width, spacing)


def default_track() -> TrackMap:
    return _DEFAULT


_DEFAULT = rounded_rectangle_track()


def project(track: TrackMap, lane_id: int, point) -> LaneProjection:
    return track.project(lane_id, point)


def goal_point(track: TrackMap, lane_id: int, proj: LaneProjection, lookahead: float) -> np.ndarray:
    return track.goal_point(lane_id, proj, lookahead)


def is_off_track(track: TrackMap, point) -> bool:
    return track.is_off_track(point)
