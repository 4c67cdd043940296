"""Geodesic primitives: distances, destination points, local planar frames,
and uniform-per-area annulus sampling.

All public interfaces take angles in degrees; radians are internal only.
The Earth model is a sphere of mean radius 6,371,000 m, which keeps errors
well under 0.5% at game scale (frames of a few km).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

#: meters per degree of latitude on the spherical model
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("GeoPoint coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular planar frame centred at ``origin``.

    Valid for points within ~5 km of the origin; beyond that the planar
    approximation degrades past the 0.5% distance-error budget.
    """

    origin: GeoPoint
    meters_per_deg_lat: float
    meters_per_deg_lon: float

    @classmethod
    def at(cls, origin: GeoPoint) -> "LocalFrame":
        return cls(
            origin=origin,
            meters_per_deg_lat=METERS_PER_DEG_LAT,
            meters_per_deg_lon=METERS_PER_DEG_LAT * math.cos(math.radians(origin.lat)),
        )


@dataclass(frozen=True)
class AnnulusSpec:
    """Ring around ``center`` in which points may be sampled, radii in meters."""

    center: GeoPoint
    r_min: float
    r_max: float

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise ValueError(f"require 0 < r_min < r_max, got ({self.r_min}, {self.r_max})")
        if self.r_max > 5000.0:
            raise ValueError("r_max above 5 km breaks the planar approximation bound")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    d_phi = math.radians(b.lat - a.lat)
    d_lambda = math.radians(b.lon - a.lon)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def destination_point(origin: GeoPoint, bearing_deg: float, distance_m: float) -> GeoPoint:
    """Point reached by travelling ``distance_m`` meters from ``origin`` on the
    given initial bearing (degrees clockwise from north)."""
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    if distance_m == 0:
        return origin
    theta = math.radians(bearing_deg)
    delta = distance_m / EARTH_RADIUS_M
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)

    phi2 = math.asin(
        math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    )
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon = math.degrees(lam2)
    if not -180.0 <= lon <= 180.0:  # crossed the antimeridian
        lon = (lon + 540.0) % 360.0 - 180.0
    return GeoPoint(lat=math.degrees(phi2), lon=lon)


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing from ``a`` to ``b``, degrees in [0, 360)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    d_lambda = math.radians(b.lon - a.lon)
    x = math.sin(d_lambda) * math.cos(phi2)
    y = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(d_lambda)
    return (math.degrees(math.atan2(x, y)) + 360.0) % 360.0


def sample_annulus(spec: AnnulusSpec, rng: random.Random) -> GeoPoint:
    """Draw a point uniformly per unit area from the annulus.

    Radius uses the square-root transform r = sqrt(u*(r_max^2 - r_min^2) + r_min^2),
    which is what makes the density uniform in area rather than in radius.
    """
    u = rng.random()
    r = math.sqrt(u * (spec.r_max**2 - spec.r_min**2) + spec.r_min**2)
    theta = rng.random() * 360.0
    return destination_point(spec.center, theta, r)


def sample_annulus_naive(spec: AnnulusSpec, rng: random.Random) -> GeoPoint:
    """Deliberately wrong radius law (linear in u): overweights the inner bands.

    Kept as the negative control for the area-uniformity tests; still honors
    the [r_min, r_max] range.
    """
    r = spec.r_min + rng.random() * (spec.r_max - spec.r_min)
    theta = rng.random() * 360.0
    return destination_point(spec.center, theta, r)


def to_local(frame: LocalFrame, p: GeoPoint) -> tuple[float, float]:
    """Project a point into the frame's planar (x east, y north) meters."""
    return (
        (p.lon - frame.origin.lon) * frame.meters_per_deg_lon,
        (p.lat - frame.origin.lat) * frame.meters_per_deg_lat,
    )


def from_local(frame: LocalFrame, xy: tuple[float, float]) -> GeoPoint:
    """Inverse of :func:`to_local`."""
    x, y = xy
    return GeoPoint(
        lat=frame.origin.lat + y / frame.meters_per_deg_lat,
        lon=frame.origin.lon + x / frame.meters_per_deg_lon,
    )
