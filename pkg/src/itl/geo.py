"""Great-circle distances on a spherical Earth."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import shapely

EARTH_RADIUS_KM = 6371.0088


def haversine_km(lat1, lon1, lat2, lon2):
    """Haversine distance in km; accepts scalars or broadcastable arrays (degrees)."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def _unit_vectors(lat, lon) -> np.ndarray:
    phi, lmb = np.radians(lat), np.radians(lon)
    return np.stack([np.cos(phi) * np.cos(lmb), np.cos(phi) * np.sin(lmb), np.sin(phi)], axis=-1)


def _segment_distance_km(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from unit vectors ``points`` (N, 3) to the minor arc from ``a`` to ``b``."""
    ends = np.minimum(
        EARTH_RADIUS_KM * np.arccos(np.clip(points @ a, -1.0, 1.0)),
        EARTH_RADIUS_KM * np.arccos(np.clip(points @ b, -1.0, 1.0)),
    )
    normal = np.cross(a, b)
    norm = np.linalg.norm(normal)
    if norm < 1e-15:
        return ends
    normal /= norm
    sin_xt = points @ normal
    foot = points - np.outer(sin_xt, normal)
    foot_norm = np.linalg.norm(foot, axis=1)
    ok = foot_norm > 1e-15
    foot[ok] /= foot_norm[ok, None]
    # foot lies on the arc iff it is on the same side of both endpoints
    on_arc = ok & (np.cross(a, foot) @ normal >= 0) & (np.cross(foot, b) @ normal >= 0)
    cross_track = EARTH_RADIUS_KM * np.abs(np.arcsin(np.clip(sin_xt, -1.0, 1.0)))
    return np.where(on_arc, cross_track, ends)


def distance_to_polygon_km(
    lats: Sequence[float], lons: Sequence[float], ring: Sequence[Sequence[float]]
) -> np.ndarray:
    """Geodesic distance from each point to a polygon; zero inside or on the boundary.

    ``ring`` is a GeoJSON-style ring of ``[lon, lat]`` pairs. Containment is
    tested in the lon/lat plane, edges are treated as great-circle arcs.
    """
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    coords = np.asarray(ring, dtype=float)
    if len(coords) and np.array_equal(coords[0], coords[-1]):
        coords = coords[:-1]
    if len(coords) < 3:
        raise ValueError("polygon ring needs at least three distinct vertices")
    poly = shapely.Polygon(coords)
    inside = shapely.covers(poly, shapely.points(lons, lats))

    pts = _unit_vectors(lats, lons)
    verts = _unit_vectors(coords[:, 1], coords[:, 0])
    dist = np.full(len(lats), np.inf)
    for i in range(len(verts)):
        dist = np.minimum(dist, _segment_distance_km(pts, verts[i], verts[(i + 1) % len(verts)]))
    return np.where(inside, 0.0, dist)
