"""Writes measurements.csv: hourly SO2 at VOELKLINGEN-CITY over the
winters 1995/96 and 1996/97. Deterministic; no 3-hour mean exceeds 600."""

import csv
import math
from datetime import datetime, timedelta

STATION = "VOELKLINGEN-CITY"


def winter_hours(year):
    t = datetime(year, 11, 1)
    end = datetime(year + 1, 4, 1)
    while t < end:
        yield t
        t += timedelta(hours=1)


def main():
    state = 12345
    rows = []
    for year in (1995, 1996):
        for i, t in enumerate(winter_hours(year)):
            state = (1103515245 * state + 12345) % 2**31
            noise = (state % 2000) / 100.0
            day = i / 24.0
            value = 40.0 + 25.0 * math.sin(2 * math.pi * t.hour / 24.0) \
                + 15.0 * math.sin(2 * math.pi * day / 7.0) + noise
            # winter smog episode, peaking below the warning threshold
            episode = 480.0 * math.exp(-((day - 75.0) ** 2) / 0.5)
            rows.append((t.strftime("%Y-%m-%dT%H:%M:%SZ"), round(value + episode, 1)))
    with open("measurements.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp", "station", "pollutant", "value", "unit"])
        for ts, v in rows:
            w.writerow([ts, STATION, "SO2", f"{v:.1f}", "MKG-M3"])


if __name__ == "__main__":
    main()
