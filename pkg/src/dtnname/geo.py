"""Points on the globe, great-circle distance and the ``within`` predicate."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidCoordinate

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True, order=True)
class GeoPoint:
    longitude: float
    latitude: float

    def __post_init__(self) -> None:
        lon, lat = float(self.longitude), float(self.latitude)
        if not (math.isfinite(lon) and math.isfinite(lat)):
            raise InvalidCoordinate(f"non-finite coordinate ({lon}, {lat})")
        if not -180.0 <= lon <= 180.0:
            raise InvalidCoordinate(f"longitude {lon} outside [-180, 180]")
        if not -90.0 <= lat <= 90.0:
            raise InvalidCoordinate(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "longitude", lon)
        object.__setattr__(self, "latitude", lat)

    def __str__(self) -> str:
        return f"({self.longitude:.6f}, {self.latitude:.6f})"


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in kilometres on a sphere of radius 6371 km."""
    # fixed argument order keeps distance(a, b) == distance(b, a) bit for bit
    if b < a:
        a, b = b, a
    phi1 = math.radians(a.latitude)
    phi2 = math.radians(b.latitude)
    dphi = phi2 - phi1
    dlam = math.radians(b.longitude - a.longitude)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


@dataclass(frozen=True)
class WithinPredicate:
    """``within(longitude, latitude, distance)``: a closed disc on the sphere."""

    center: GeoPoint
    radius_km: float

    def __post_init__(self) -> None:
        r = float(self.radius_km)
        if not (math.isfinite(r) and r > 0):
            raise ValueError(f"radius must be positive and finite, got {self.radius_km!r}")
        object.__setattr__(self, "radius_km", r)

    def contains(self, p: GeoPoint) -> bool:
        return distance(p, self.center) <= self.radius_km

    def distance_to_center(self, p: GeoPoint) -> float:
        return distance(p, self.center)


def within(p: GeoPoint, pred: WithinPredicate) -> bool:
    return pred.contains(p)
