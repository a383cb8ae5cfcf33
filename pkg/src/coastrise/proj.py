"""Projected <-> geographic coordinate conversion.

Implements the standard ellipsoidal Transverse Mercator series (the form
tabulated in Snyder's "Map Projections: A Working Manual") which is accurate
to millimetres within a UTM zone.  The UTM zone is parsed from the grid's
CRS tag, e.g. "NAD 1983 UTM Zone 10N" or "EPSG:26910".
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Ellipsoid:
    name: str
    a: float  # semi-major axis, metres
    e2: float  # first eccentricity squared

    @classmethod
    def from_flattening(cls, name: str, a: float, inv_f: float) -> "Ellipsoid":
        f = 1.0 / inv_f
        return cls(name, a, f * (2.0 - f))


GRS80 = Ellipsoid.from_flattening("GRS80", 6378137.0, 298.257222101)
WGS84 = Ellipsoid.from_flattening("WGS84", 6378137.0, 298.257223563)
CLARKE_1866 = Ellipsoid("Clarke 1866", 6378206.4, 0.00676866)
SPHERE = Ellipsoid("sphere", 6370997.0, 0.0)


@dataclass(frozen=True)
class TransverseMercator:
    """Forward/inverse Transverse Mercator on an ellipsoid."""

    ellipsoid: Ellipsoid
    lon0_deg: float
    k0: float = 0.9996
    false_easting: float = 500000.0
    false_northing: float = 0.0

    def _meridian_arc(self, phi):
        a, e2 = self.ellipsoid.a, self.ellipsoid.e2
        e4, e6 = e2 * e2, e2 * e2 * e2
        return a * (
            (1 - e2 / 4 - 3 * e4 / 64 - 5 * e6 / 256) * phi
            - (3 * e2 / 8 + 3 * e4 / 32 + 45 * e6 / 1024) * np.sin(2 * phi)
            + (15 * e4 / 256 + 45 * e6 / 1024) * np.sin(4 * phi)
            - (35 * e6 / 3072) * np.sin(6 * phi)
        )

    def forward(self, lon_deg, lat_deg):
        """(easting, northing) in metres from geographic degrees."""
        a, e2 = self.ellipsoid.a, self.ellipsoid.e2
        ep2 = e2 / (1 - e2) if e2 else 0.0
        phi = np.radians(np.asarray(lat_deg, dtype=np.float64))
        lam = np.radians(np.asarray(lon_deg, dtype=np.float64))
        lam0 = math.radians(self.lon0_deg)

        sin_phi, cos_phi = np.sin(phi), np.cos(phi)
        n = a / np.sqrt(1 - e2 * sin_phi**2)
        t = np.tan(phi) ** 2
        c = ep2 * cos_phi**2
        big_a = (lam - lam0) * cos_phi
        m = self._meridian_arc(phi)

        x = self.k0 * n * (
            big_a
            + (1 - t + c) * big_a**3 / 6
            + (5 - 18 * t + t**2 + 72 * c - 58 * ep2) * big_a**5 / 120
        )
        y = self.k0 * (
            m
            + n
            * np.tan(phi)
            * (
                big_a**2 / 2
                + (5 - t + 9 * c + 4 * c**2) * big_a**4 / 24
                + (61 - 58 * t + t**2 + 600 * c - 330 * ep2) * big_a**6 / 720
            )
        )
        return x + self.false_easting, y + self.false_northing

    def inverse(self, x, y):
        """Geographic (lon, lat) degrees from projected metres."""
        a, e2 = self.ellipsoid.a, self.ellipsoid.e2
        ep2 = e2 / (1 - e2) if e2 else 0.0
        x = np.asarray(x, dtype=np.float64) - self.false_easting
        y = np.asarray(y, dtype=np.float64) - self.false_northing

        m = y / self.k0
        mu = m / (a * (1 - e2 / 4 - 3 * e2**2 / 64 - 5 * e2**3 / 256))
        e1 = (1 - math.sqrt(1 - e2)) / (1 + math.sqrt(1 - e2)) if e2 else 0.0
        phi1 = (
            mu
            + (3 * e1 / 2 - 27 * e1**3 / 32) * np.sin(2 * mu)
            + (21 * e1**2 / 16 - 55 * e1**4 / 32) * np.sin(4 * mu)
            + (151 * e1**3 / 96) * np.sin(6 * mu)
            + (1097 * e1**4 / 512) * np.sin(8 * mu)
        )

        sin1, cos1 = np.sin(phi1), np.cos(phi1)
        c1 = ep2 * cos1**2
        t1 = np.tan(phi1) ** 2
        n1 = a / np.sqrt(1 - e2 * sin1**2)
        r1 = a * (1 - e2) / (1 - e2 * sin1**2) ** 1.5
        d = x / (n1 * self.k0)

        phi = phi1 - (n1 * np.tan(phi1) / r1) * (
            d**2 / 2
            - (5 + 3 * t1 + 10 * c1 - 4 * c1**2 - 9 * ep2) * d**4 / 24
            + (61 + 90 * t1 + 298 * c1 + 45 * t1**2 - 252 * ep2 - 3 * c1**2)
            * d**6
            / 720
        )
        lam = (
            d
            - (1 + 2 * t1 + c1) * d**3 / 6
            + (5 - 2 * c1 + 28 * t1 - 3 * c1**2 + 8 * ep2 + 24 * t1**2) * d**5 / 120
        ) / cos1
        return np.degrees(lam) + self.lon0_deg, np.degrees(phi)


_UTM_RE = re.compile(r"UTM\s*,?\s*ZONE\s*(\d{1,2})\s*,?\s*([NS])", re.IGNORECASE)
_EPSG_RE = re.compile(r"EPSG\s*:\s*(\d{4,5})", re.IGNORECASE)


def utm_zone_lon0(zone: int) -> float:
    if not 1 <= zone <= 60:
        raise ValueError(f"UTM zone must be 1..60, got {zone}")
    return zone * 6.0 - 183.0


def utm_from_crs_tag(tag: str):
    """TransverseMercator for a CRS tag naming a UTM zone, else None.

    NAD83 and WGS84 zones both map onto GRS80 here; the two ellipsoids
    differ by less than a tenth of a millimetre in flattening.
    """
    if not tag:
        return None
    m = _UTM_RE.search(tag)
    zone = hemisphere = None
    if m:
        zone = int(m.group(1))
        hemisphere = m.group(2).upper()
    else:
        m = _EPSG_RE.search(tag)
        if m:
            code = int(m.group(1))
            if 32601 <= code <= 32660:
                zone, hemisphere = code - 32600, "N"
            elif 32701 <= code <= 32760:
                zone, hemisphere = code - 32700, "S"
            elif 26901 <= code <= 26923:
                zone, hemisphere = code - 26900, "N"
    if zone is None:
        return None
    return TransverseMercator(
        ellipsoid=GRS80,
        lon0_deg=utm_zone_lon0(zone),
        false_northing=0.0 if hemisphere == "N" else 10000000.0,
    )
