#!/usr/bin/env python3
"""Generate the bundled sample day (southwestern US, 2023-08-23/24).

Writes radiosonde-style soundings for three stations and a coarse
pressure-level "forecast-like" grid to data/sample/. The atmosphere is
constructed, not observed: eastward winds below ~20.5 km and westward winds
above, sampled at irregular sonde altitudes. The forecast-like model sees a
smoother, different field on seven pressure levels and mostly misses the
opposing layer, which is the usual situation with reanalysis levels.

Run from the repository root:  python3 scripts/make_sample_data.py
"""

import json
import math
import os
from datetime import datetime, timedelta, timezone

import numpy as np

OUT = os.path.join("data", "sample")
SEED = 20230823

STATIONS = [
    ("72274", "Tucson", 32.23, -110.96, 751.0),
    ("72365", "Albuquerque", 35.04, -106.62, 1619.0),
    ("72376", "Flagstaff", 35.23, -111.82, 2179.0),
]
LAUNCHES = [
    datetime(2023, 8, 23, 0, tzinfo=timezone.utc),
    datetime(2023, 8, 23, 12, tzinfo=timezone.utc),
    datetime(2023, 8, 24, 0, tzinfo=timezone.utc),
]
T0 = LAUNCHES[0]

# Forecast-like pressure levels, bottom to top, with nominal summer heights.
PRESSURE_LEVELS = [(150, 14200.0), (125, 15400.0), (100, 16600.0), (70, 18750.0),
                   (50, 20700.0), (30, 23900.0), (20, 26500.0)]
LAT = np.round(np.arange(31.0, 37.0 + 1e-9, 0.25), 4)
LON = np.round(np.arange(-113.0, -105.0 + 1e-9, 0.25), 4)
FRAMES = [T0 + timedelta(hours=3 * k) for k in range(9)]


def hours(t):
    return (t - T0).total_seconds() / 3600.0


def vec(speed, bearing_deg):
    """Wind vector blowing toward `bearing_deg` (clockwise from north)."""
    b = math.radians(bearing_deg)
    return speed * math.sin(b), speed * math.cos(b)


def truth_wind(z, lat, lon, h):
    """Sonde-side atmosphere: u, v in m/s at altitude z (m)."""
    if z < 12000.0:
        # tropospheric westerlies, strongest near the jet
        s = 8.0 + 14.0 * math.exp(-((z - 11000.0) / 2500.0) ** 2)
        return vec(s, 75.0 + 5.0 * (lat - 34.0))
    z_t = 20500.0 + 250.0 * math.sin(2 * math.pi * h / 24.0) + 80.0 * (lat - 34.0)
    low = vec(6.0 + 1.5 * math.sin(0.7 * lon + h / 6.0), 88.0 + 6.0 * (lat - 34.0))
    high = vec(9.0 + 0.1 * (z - 21000.0) / 100.0 * 0.2, 268.0 - 4.0 * (lon + 109.0) / 4.0)
    w = 0.5 * (1.0 + math.tanh((z - z_t) / 500.0))
    # taper the tropospheric jet into the lower stratospheric flow
    if z < 15000.0:
        a = (z - 12000.0) / 3000.0
        jet = truth_wind(11999.0, lat, lon, h)
        low = (a * low[0] + (1 - a) * jet[0], a * low[1] + (1 - a) * jet[1])
    return (1 - w) * low[0] + w * high[0], (1 - w) * low[1] + w * high[1]


def forecast_wind(level_index, lat, lon, h):
    """Forecast-like model on pressure levels; differs from the truth."""
    boundary = 33.6 + 1.2 * math.sin(2 * math.pi * h / 24.0) + 0.08 * (lon + 109.0)
    south = lat < boundary
    p, _ = PRESSURE_LEVELS[level_index]
    if p >= 125:
        return vec(6.0, 50.0) if south else vec(3.5, 345.0)
    if p == 100:
        return vec(4.0, 95.0) if south else vec(3.0, 280.0)
    if p == 70:
        return vec(1.2, 200.0) if south else vec(3.0, 290.0)
    speed = {50: 7.0, 30: 10.0, 20: 12.0}[p]
    return vec(speed, 272.0 + 6.0 * math.sin(0.5 * lon + h / 5.0))


def sonde_altitudes(rng, elevation):
    z = elevation + 30.0
    out = []
    while z < 30500.0:
        out.append(round(z))
        z += rng.uniform(60.0, 320.0)
    return out


def write_sounding(station, launch, rng, use_uv):
    sid, name, lat, lon, elev = station
    alts = sonde_altitudes(rng, elev)
    if sid == "72376" and launch == LAUNCHES[0]:
        # exactly two readings inside the 16000 m bin
        alts = [a for a in alts if not 15875 <= a < 16125] + [15998, 16103]
        alts.sort()
    h = hours(launch)
    lines = [
        f"# station_id: {sid}",
        f"# name: {name}",
        f"# latitude: {lat}",
        f"# longitude: {lon}",
        f"# elevation_m: {elev:.0f}",
        f"# launch_time: {launch.strftime('%Y-%m-%dT%H:%M:%SZ')}",
        "altitude_m,u_ms,v_ms" if use_uv else "altitude_m,wind_dir_deg,wind_speed_ms",
    ]
    for a in alts:
        # the sonde drifts downwind while rising; ignore that, add sensor noise
        u, v = truth_wind(float(a), lat, lon, h)
        u += rng.normal(0.0, 0.6)
        v += rng.normal(0.0, 0.6)
        if use_uv:
            lines.append(f"{a},{u:.2f},{v:.2f}")
        else:
            speed = math.hypot(u, v)
            direction = (math.degrees(math.atan2(-u, -v)) + 360.0) % 360.0  # blowing from
            lines.append(f"{a},{direction:.0f},{speed:.1f}")
    path = os.path.join(OUT, "soundings", f"{sid}_{launch.strftime('%Y%m%d%H')}.csv")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def write_forecast_grid():
    nt, nk, ny, nx = len(FRAMES), len(PRESSURE_LEVELS), len(LAT), len(LON)
    u = np.zeros((nt, nk, ny, nx), dtype="<f4")
    v = np.zeros_like(u)
    alt = np.zeros_like(u)
    for t, frame in enumerate(FRAMES):
        h = hours(frame)
        for k, (_, z0) in enumerate(PRESSURE_LEVELS):
            for i, la in enumerate(LAT):
                for j, lo in enumerate(LON):
                    u[t, k, i, j], v[t, k, i, j] = forecast_wind(k, la, lo, h)
                    # geopotential height varies a little with latitude and time
                    alt[t, k, i, j] = z0 - 40.0 * (la - 34.0) + 60.0 * math.sin(2 * math.pi * h / 24.0)
    name = "forecast_like_20230823"
    header = {
        "format": "habsk-wind-grid",
        "version": 1,
        "kind": "forecast-like",
        "per_level_altitude": True,
        "axes": {
            "latitude": LAT.tolist(),
            "longitude": LON.tolist(),
            "level": [{"altitude_m": z, "pressure_hpa": float(p)} for p, z in PRESSURE_LEVELS],
            "time": [t.strftime("%Y-%m-%dT%H:%M:%SZ") for t in FRAMES],
        },
        "units": {"latitude": "degrees_north", "longitude": "degrees_east", "altitude": "m",
                  "pressure": "hPa", "u": "m/s", "v": "m/s", "time": "UTC"},
        "payload": {"file": name + ".bin", "encoding": "float32-le",
                    "order": "[time][level][lat][lon]", "fields": ["u", "v", "altitude"]},
    }
    with open(os.path.join(OUT, name + ".json"), "w", newline="\n") as f:
        json.dump(header, f, indent=2)
        f.write("\n")
    with open(os.path.join(OUT, name + ".bin"), "wb") as f:
        f.write(u.tobytes())
        f.write(v.tobytes())
        f.write(alt.tobytes())


def main():
    rng = np.random.default_rng(SEED)
    os.makedirs(os.path.join(OUT, "soundings"), exist_ok=True)
    for station in STATIONS:
        for launch in LAUNCHES:
            write_sounding(station, launch, rng, use_uv=(station[0] == "72365"))
    write_forecast_grid()


if __name__ == "__main__":
    main()
