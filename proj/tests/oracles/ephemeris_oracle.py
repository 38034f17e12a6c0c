"""Generates frozen solar-altitude reference tables with astropy.

Run once; the CSV outputs are committed under tests/data and consumed by the
C++ ephemeris tests. Altitudes are geometric (pressure = 0, no refraction).
"""
import csv
import pathlib

import numpy as np
from astropy import units as u
from astropy.coordinates import TETE, AltAz, EarthLocation, get_sun
from astropy.time import Time
from astropy.utils import iers

iers.conf.auto_download = False
iers.conf.auto_max_age = None

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def altitude_grid(n=100, seed=20240621):
    rng = np.random.default_rng(seed)
    lats = rng.uniform(-60.0, 60.0, n)
    lons = rng.uniform(-180.0, 180.0, n)
    start = Time("2015-01-01T00:00:00", scale="utc").unix
    stop = Time("2025-12-31T23:59:59", scale="utc").unix
    secs = np.floor(rng.uniform(start, stop, n))
    times = Time(secs, format="unix", scale="utc")
    loc = EarthLocation(lat=lats * u.deg, lon=lons * u.deg, height=0 * u.m)
    frame = AltAz(obstime=times, location=loc, pressure=0 * u.hPa)
    alt = get_sun(times).transform_to(frame).alt.deg
    with open(OUT / "ephemeris_oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lat", "lon", "utc", "altitude_deg"])
        for la, lo, t, a in zip(lats, lons, times, alt):
            w.writerow([f"{la:.6f}", f"{lo:.6f}", t.strftime("%Y-%m-%dT%H:%M:%SZ"), f"{a:.6f}"])


def equation_of_time(iso):
    # EoT = apparent solar time - mean solar time, from the Sun's Greenwich hour angle.
    t = Time(iso, scale="utc")
    sun = get_sun(t).transform_to(TETE(obstime=t))
    gast = t.sidereal_time("apparent", "greenwich").deg
    gha = (gast - sun.ra.deg) % 360.0
    ut_hours = (t.unix % 86400) / 3600.0
    mean_gha = (ut_hours * 15.0 - 180.0) % 360.0
    diff = (gha - mean_gha + 180.0) % 360.0 - 180.0
    return diff * 4.0


def scalar_refs():
    with open(OUT / "ephemeris_scalars.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value"])
        w.writerow(["jd_2024-06-21T00:00:00Z", f"{Time('2024-06-21T00:00:00', scale='utc').jd:.6f}"])
        w.writerow(["eot_minutes_2023-11-03T12:00:00Z", f"{equation_of_time('2023-11-03T12:00:00'):.4f}"])


if __name__ == "__main__":
    altitude_grid()
    scalar_refs()
