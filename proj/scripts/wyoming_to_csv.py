#!/usr/bin/env python3
"""Convert University of Wyoming upper-air "Text: List" pages to sounding CSVs.

Each page (saved HTML or plain text, possibly holding several soundings) is
split into soundings; every sounding becomes STATIONID_YYYYMMDDHH.csv with
altitude_m,wind_dir_deg,wind_speed_ms rows. Levels without height, direction
or speed are dropped. Speeds are converted from knots.

    python3 scripts/wyoming_to_csv.py page1.html page2.txt -o data/soundings
"""

import argparse
import html
import re
import sys
from datetime import datetime
from pathlib import Path

KNOT = 0.514444
COLUMN_WIDTH = 7

TAG = re.compile(r"<[^>]+>")
TITLE = re.compile(r"^\s*(\d{5})\s+(\S+)?\s*(.*?)\s+Observations at\s+(\d{2})Z\s+(\d{1,2} \w{3} \d{4})", re.M)
INFO = re.compile(r"^\s*(Station number|Observation time|Station latitude|Station longitude|Station elevation):\s*(\S+)",
                  re.M)


def parse_table(block):
    """Rows of {column: value} from one fixed-width table."""
    lines = block.splitlines()
    header = None
    rows = []
    for i, line in enumerate(lines):
        if header is None:
            if "HGHT" in line and "DRCT" in line and "SKNT" in line:
                header = line
                start = i
            continue
        if i <= start + 2 or not line.strip() or line.startswith("-"):
            continue
        if not re.match(r"^\s*[\d.]", line):
            break
        names = [header[k:k + COLUMN_WIDTH].strip() for k in range(0, len(header), COLUMN_WIDTH)]
        row = {}
        for k, name in enumerate(names):
            cell = line[k * COLUMN_WIDTH:(k + 1) * COLUMN_WIDTH].strip()
            if name and cell:
                row[name] = cell
        rows.append(row)
    return rows


def split_soundings(text):
    text = html.unescape(TAG.sub("", text))
    titles = list(TITLE.finditer(text))
    for n, m in enumerate(titles):
        end = titles[n + 1].start() if n + 1 < len(titles) else len(text)
        yield m, text[m.start():end]


def convert(text, out_dir):
    written = []
    for title, block in split_soundings(text):
        info = {k: v for k, v in INFO.findall(block)}
        station = info.get("Station number", title.group(1))
        when = datetime.strptime(f"{title.group(5)} {title.group(4)}", "%d %b %Y %H")
        if "Station latitude" not in info or "Station longitude" not in info:
            print(f"skipping {station} {when:%Y%m%d%H}: no station coordinates", file=sys.stderr)
            continue
        samples = {}
        for row in parse_table(block):
            try:
                z, d, s = float(row["HGHT"]), float(row["DRCT"]), float(row["SKNT"])
            except (KeyError, ValueError):
                continue
            samples.setdefault(z, (d, s * KNOT))
        if len(samples) < 2:
            print(f"skipping {station} {when:%Y%m%d%H}: fewer than two wind levels", file=sys.stderr)
            continue
        path = out_dir / f"{station}_{when:%Y%m%d%H}.csv"
        with open(path, "w", newline="\n") as f:
            f.write(f"# station_id: {station}\n")
            if title.group(3):
                f.write(f"# name: {title.group(3).strip()}\n")
            f.write(f"# latitude: {info['Station latitude']}\n")
            f.write(f"# longitude: {info['Station longitude']}\n")
            if "Station elevation" in info:
                f.write(f"# elevation_m: {info['Station elevation']}\n")
            f.write(f"# launch_time: {when:%Y-%m-%dT%H:00:00Z}\n")
            f.write("altitude_m,wind_dir_deg,wind_speed_ms\n")
            for z in sorted(samples):
                d, s = samples[z]
                f.write(f"{z:g},{d:g},{s:.2f}\n")
        written.append(path)
    return written


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("pages", nargs="+", type=Path)
    ap.add_argument("-o", "--out", type=Path, default=Path("soundings"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    total = 0
    for page in args.pages:
        files = convert(page.read_text(errors="replace"), args.out)
        total += len(files)
        for f in files:
            print(f)
    if total == 0:
        print("no soundings converted", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
