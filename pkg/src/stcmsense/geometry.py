"""Scene layout and angle/position conversions on the 2-D sensing plane.

The base station (BS) and the reflecting panel both sit in the x-z plane
(y = 0 everywhere) and share the z-axis.  Angles follow one convention
throughout the package:

* ``alpha`` -- BS-to-target angle from the BS boresight (+z), signed
  positive toward +x: ``alpha = atan2(x - bx, z - bz)``.
* ``xi`` -- panel-to-target angle from the panel boresight, which points
  into the scene (toward the BS side of the panel plane):
  ``xi = atan2(x - sx, |z - sz|)``.

With both terminals on the z-axis, alpha and xi carry the same sign, and the
BS/target/panel triangle obeys the law of sines; that is what makes the
target range recoverable from the two angles alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePoint, DegenerateTriangle

# Below this total angle the triangle is numerically collapsed: the range
# formula divides by sin(alpha + xi).
DEGENERATE_ANGLE_SUM = 1e-3

_TERMINAL_EPS = 1e-9


class TargetKind(enum.Enum):
    ABSENT = "absent"
    HUMAN_LIKE = "human_like"
    OBJECT_LIKE = "object_like"


@dataclass(frozen=True)
class SceneGeometry:
    """BS/panel placement and the rectangular sensing plane.

    Attributes
    ----------
    bs_center, stcm_center : (3,) arrays, meters; both in the y = 0 plane.
    x_bounds, z_bounds : (min, max) extents of the sensing area, meters.
    """

    bs_center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    stcm_center: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 100.0]))
    x_bounds: tuple = (-80.0, 80.0)
    z_bounds: tuple = (0.0, 100.0)

    def __post_init__(self):
        object.__setattr__(self, "bs_center", np.asarray(self.bs_center, dtype=float))
        object.__setattr__(self, "stcm_center", np.asarray(self.stcm_center, dtype=float))
        if self.bs_center[1] != 0.0 or self.stcm_center[1] != 0.0:
            raise ValueError("BS and panel centers must lie in the y=0 plane")
        if self.d_s <= 0:
            raise ValueError("BS and panel centers must be distinct")

    @property
    def d_s(self) -> float:
        """BS-to-panel distance, meters."""
        return float(np.linalg.norm(self.bs_center - self.stcm_center))

    @property
    def boresight_sign(self) -> float:
        """+1 when the panel sits above the BS on the z-axis, -1 below."""
        return 1.0 if self.stcm_center[2] >= self.bs_center[2] else -1.0

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(
            self.x_bounds[0] <= q[0] <= self.x_bounds[1]
            and self.z_bounds[0] <= q[2] <= self.z_bounds[1]
        )


@dataclass(frozen=True)
class AnglePair:
    """BS-side and panel-side target angles, radians."""

    alpha: float
    xi: float


@dataclass(frozen=True)
class ScatterPoint:
    """Point target: position on the plane, amplitude-domain sqrt-RCS, kind."""

    position: np.ndarray
    rcs_sqrt: float
    kind: TargetKind = TargetKind.OBJECT_LIKE

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.rcs_sqrt < 0:
            raise ValueError("rcs_sqrt must be nonnegative")
        if (self.rcs_sqrt == 0) != (self.kind is TargetKind.ABSENT):
            raise ValueError("rcs_sqrt == 0 iff kind is ABSENT")


def rcs_sqrt_from_dbsm(rcs_dbsm: float) -> float:
    """Amplitude-domain sqrt-RCS from a power-domain RCS in dB.m^2."""
    return 10.0 ** (rcs_dbsm / 20.0)


def _check_terminals(q: np.ndarray, geom: SceneGeometry) -> None:
    if np.linalg.norm(q - geom.bs_center) < _TERMINAL_EPS:
        raise DegeneratePoint("point coincides with the BS center")
    if np.linalg.norm(q - geom.stcm_center) < _TERMINAL_EPS:
        raise DegeneratePoint("point coincides with the panel center")


def angles_from_position(q, geom: SceneGeometry) -> AnglePair:
    """Angles (alpha, xi) of scene point ``q`` seen from the BS and the panel.

    Full-quadrant arctangents; the panel-side angle uses |z - sz| so the
    panel boresight points into the scene.
    """
    q = np.asarray(q, dtype=float)
    _check_terminals(q, geom)
    bx, _, bz = geom.bs_center
    sx, _, sz = geom.stcm_center
    alpha = np.arctan2(q[0] - bx, q[2] - bz)
    xi = np.arctan2(q[0] - sx, abs(q[2] - sz))
    return AnglePair(alpha=float(alpha), xi=float(xi))


def position_from_angles(angles: AnglePair, geom: SceneGeometry) -> np.ndarray:
    """Target position from the angle pair via the law of sines.

    The BS-target range is ``d_r = d_S sin(xi) / sin(alpha + xi)`` and the
    returned point is ``bs_center + d_r (sin(alpha), 0, cos(alpha))``.

    Raises
    ------
    DegenerateTriangle
        When |alpha + xi| < 1e-3 rad (target on the BS-panel axis; range is
        unobservable) or the angles do not close a triangle.
    """
    a, x = angles.alpha, angles.xi
    if abs(a + x) < DEGENERATE_ANGLE_SUM or abs(a) + abs(x) >= np.pi:
        raise DegenerateTriangle(f"angle sum {a + x:.3e} rad does not identify a range")
    d_r = geom.d_s * np.sin(x) / np.sin(a + x)
    if d_r <= 0:
        raise DegenerateTriangle("angles close no triangle on this side of the axis")
    return geom.bs_center + d_r * np.array([np.sin(a), 0.0, np.cos(a)])


def triangle_distances(q, geom: SceneGeometry) -> tuple[float, float, float]:
    """(d_r, d_S, d_r') = BS-target, BS-panel and panel-target distances."""
    q = np.asarray(q, dtype=float)
    d_r = float(np.linalg.norm(q - geom.bs_center))
    d_rp = float(np.linalg.norm(q - geom.stcm_center))
    return d_r, geom.d_s, d_rp


def jacobian_angles_to_position(q, geom: SceneGeometry) -> np.ndarray:
    """2x2 Jacobian d(alpha, xi)/d(x, z) at scene point ``q``.

    Rows are the gradients of alpha and xi; entries are the exact derivatives
    of :func:`angles_from_position` for points on the scene side of the panel
    plane, so the matrix matches central finite differences of that function.
    """
    q = np.asarray(q, dtype=float)
    _check_terminals(q, geom)
    bx, _, bz = geom.bs_center
    sx, _, sz = geom.stcm_center
    sgn = geom.boresight_sign
    dxb, dzb = q[0] - bx, q[2] - bz
    db2 = dxb * dxb + dzb * dzb
    dxs = q[0] - sx
    w = sgn * (sz - q[2])  # == |z - sz| on the scene side
    ds2 = dxs * dxs + w * w
    return np.array(
        [
            [dzb / db2, -dxb / db2],
            [w / ds2, sgn * dxs / ds2],
        ]
    )
