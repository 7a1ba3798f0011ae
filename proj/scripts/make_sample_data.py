#!/usr/bin/env python3
"""Writes the bundled sample day (data/sample/aisdk-2024-03-01.csv).

Four synthetic vessels in the Danish AIS dump layout, sampled over one day,
with transmission gaps and a few deliberately bad rows. Deterministic.
"""

import math
import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

R = 6371000.0
KN = 1852.0 / 3600.0
DAY = datetime(2024, 3, 1, tzinfo=timezone.utc)

HEADER = ("# Timestamp,Type of mobile,MMSI,Latitude,Longitude,Navigational status,ROT,SOG,COG,"
          "Heading,IMO,Callsign,Name,Ship type,Cargo type,Width,Length,"
          "Type of position fixing device,Draught,Destination,ETA,Data source type,A,B,C,D")


def bearing(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (*a, *b))
    y = math.sin(lo2 - lo1) * math.cos(la2)
    x = math.cos(la1) * math.sin(la2) - math.sin(la1) * math.cos(la2) * math.cos(lo2 - lo1)
    return (math.degrees(math.atan2(y, x)) + 360.0) % 360.0


def distance(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (*a, *b))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * R * math.asin(math.sqrt(h))


def move(p, brg, d):
    la, lo, th = math.radians(p[0]), math.radians(p[1]), math.radians(brg)
    dr = d / R
    la2 = math.asin(math.sin(la) * math.cos(dr) + math.cos(la) * math.sin(dr) * math.cos(th))
    lo2 = lo + math.atan2(math.sin(th) * math.sin(dr) * math.cos(la),
                          math.cos(dr) - math.sin(la) * math.sin(la2))
    return (math.degrees(la2), math.degrees(lo2))


class Vessel:
    def __init__(self, mmsi, name, ship_type, width, length, draught, interval, rng):
        self.mmsi, self.name, self.ship_type = mmsi, name, ship_type
        self.width, self.length, self.draught = width, length, draught
        self.interval = interval
        self.rng = rng
        self.t = 0.0            # seconds after midnight
        self.pos = None
        self.track = []         # (t, lat, lon, sog, cog, nav)

    def emit(self, sog, cog, nav):
        self.track.append((self.t, self.pos[0], self.pos[1], sog, cog, nav))

    def hold(self, until, nav, jitter_m=3.0):
        while self.t < until:
            p = move(self.pos, self.rng.uniform(0, 360), self.rng.uniform(0, jitter_m))
            self.track.append((self.t, p[0], p[1], 0.0, None, nav))
            self.t += self.interval

    def route(self, waypoints, v_start, v_cruise, v_end, ramp_up_m, ramp_down_m, nav):
        legs = [self.pos] + waypoints
        total = sum(distance(a, b) for a, b in zip(legs, legs[1:]))
        travelled, leg = 0.0, 0
        next_emit = self.t
        while leg < len(legs) - 1:
            remaining = total - travelled
            v = v_cruise
            if travelled < ramp_up_m:
                v = v_start + (v_cruise - v_start) * travelled / ramp_up_m
            if remaining < ramp_down_m:
                v = min(v, v_end + (v_cruise - v_end) * remaining / ramp_down_m)
            v = max(v, 1.5)
            target = legs[leg + 1]
            brg = bearing(self.pos, target)
            if self.t >= next_emit:
                self.emit(v, brg, nav)
                next_emit += self.interval
            step = v * KN
            d = distance(self.pos, target)
            if step >= d:
                self.pos = target
                leg += 1
                step = d
            else:
                self.pos = move(self.pos, brg, step)
            travelled += step
            self.t += 1.0
        self.t = max(self.t, next_emit)

    def wander(self, until, speed_kn, nav, turn_every_s=600):
        brg = self.rng.uniform(0, 360)
        next_turn, next_emit = self.t + turn_every_s, self.t
        while self.t < until:
            if self.t >= next_turn:
                brg = (brg + self.rng.choice([-1, 1]) * self.rng.uniform(40, 120)) % 360
                next_turn += turn_every_s
            v = speed_kn + self.rng.uniform(-0.8, 0.8)
            if self.t >= next_emit:
                self.emit(v, brg, nav)
                next_emit += self.interval
            self.pos = move(self.pos, brg, v * KN)
            self.t += 1.0


def row(v, rec, heading_unavailable=False):
    t, lat, lon, sog, cog, nav = rec
    ts = (DAY + timedelta(seconds=round(t))).strftime("%d/%m/%Y %H:%M:%S")
    cog_s = "" if cog is None else f"{cog:.1f}"
    heading = "511" if heading_unavailable or cog is None else f"{round(cog) % 360}"
    return ",".join([ts, "Class A", str(v.mmsi), f"{lat:.6f}", f"{lon:.6f}", nav, "0.0",
                     f"{sog:.1f}", cog_s, heading, "Unknown", "OZ" + str(v.mmsi)[-4:], v.name,
                     v.ship_type, "", str(v.width), str(v.length), "GPS", f"{v.draught:.1f}",
                     "", "", "AIS", "", "", "", ""])


def drop(track, start, end):
    return [r for r in track if not (start <= r[0] < end)]


def hhmm(h, m=0):
    return h * 3600 + m * 60


def build(rng):
    vessels = []

    # Cargo vessel bound for Aalborg through the Limfjord, berths, then leaves.
    a = Vessel(219000001, "NORDIC TRADER", "Cargo", 18, 120, 6.8, 60, rng)
    a.t, a.pos = hhmm(1, 30), (57.300, 11.000)
    a.route([(56.995, 10.320)], 11.0, 12.0, 12.0, 500, 1, "Under way using engine")
    a.route([(57.030, 10.100), (57.0505, 9.9320)], 12.0, 12.0, 0.0, 1, 9000, "Under way using engine")
    a.hold(hhmm(15), "Moored")
    a.route([(57.030, 10.100), (56.995, 10.320), (57.350, 11.100)], 0.0, 11.5, 11.5, 6000, 1,
            "Under way using engine")
    a.track = drop(a.track, hhmm(3, 10), hhmm(3, 45))      # gap during the approach
    a.track = drop(a.track, hhmm(11, 0), hhmm(11, 40))     # gap at berth
    vessels.append(a)

    # Tanker northbound through the Kattegat, rounding Skagen.
    b = Vessel(219000002, "KATTEGAT SPIRIT", "Tanker", 32, 183, 10.4, 60, rng)
    b.t, b.pos = hhmm(5), (56.200, 12.400)
    b.route([(57.000, 11.700), (57.700, 11.200), (57.900, 10.600), (57.850, 9.400)],
            11.0, 11.0, 11.0, 1, 1, "Under way using engine")
    b.track = drop(b.track, hhmm(8, 0), hhmm(8, 40))       # gap on the straight leg
    vessels.append(b)

    # Fishing vessel: at anchor off Frederikshavn, fishes, returns to port.
    c = Vessel(219000003, "SKAGEN HAV", "Fishing", 8, 24, 3.2, 90, rng)
    c.t, c.pos = 0.0, (57.440, 10.640)
    c.hold(hhmm(5), "At anchor", jitter_m=6.0)
    c.route([(57.520, 10.900)], 0.0, 8.0, 4.0, 1500, 1500, "Under way using engine")
    c.wander(hhmm(14), 3.0, "Engaged in fishing")
    c.route([(57.4405, 10.5460)], 6.0, 8.0, 0.0, 500, 4000, "Under way using engine")
    c.hold(hhmm(24), "Moored")
    c.track = drop(c.track, hhmm(9, 0), hhmm(10, 0))       # gap while fishing
    vessels.append(c)

    # Ferry between Frederikshavn and Gothenburg. Its AIS goes quiet mid-crossing
    # and for most of each berth stay.
    d = Vessel(219000004, "KATTEGAT EXPRESS", "Passenger", 28, 170, 6.0, 30, rng)
    fred, gbg = (57.4400, 10.5450), (57.6900, 11.9000)
    d.t, d.pos = hhmm(2, 50), fred
    d.hold(hhmm(3), "Moored")
    for dest, next_departure in ((gbg, hhmm(8)), (fred, hhmm(13)), (gbg, hhmm(18)), (fred, None)):
        departure = d.t
        d.route([dest], 0.0, 16.0, 0.0, 5000, 6000, "Under way using engine")
        arrival = d.t
        middle = (departure + arrival) / 2
        d.track = drop(d.track, middle - 600, middle + 600)
        if next_departure is None:
            d.hold(hhmm(23, 59), "Moored")
        else:
            d.hold(next_departure, "Moored")
            d.track = drop(d.track, arrival + 300, next_departure - 600)
    vessels.append(d)
    return vessels


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent.parent / "data" / "sample" / "aisdk-2024-03-01.csv")
    rng = random.Random(20240301)
    vessels = build(rng)
    lines = []
    for v in vessels:
        for rec in v.track:
            if rec[0] >= 86400:
                break
            lines.append((rec[0], v.mmsi, row(v, rec, heading_unavailable=v.mmsi == 219000003)))

    # Noise a real dump carries: a repeated row, a jump, a garbled MMSI, an
    # impossible latitude and a truncated line.
    a_rows = [l for l in lines if l[1] == 219000001]
    lines.append(a_rows[40])
    b_rows = [l for l in lines if l[1] == 219000002]
    t, _, text = b_rows[100]
    cells = text.split(",")
    cells[0] = (DAY + timedelta(seconds=round(t) + 20)).strftime("%d/%m/%Y %H:%M:%S")
    cells[3] = f"{float(cells[3]) + 0.5:.6f}"
    lines.append((t + 20, 219000002, ",".join(cells)))
    bad = a_rows[10][2].split(",")
    bad[2] = "21900X001"
    lines.append((a_rows[10][0], 0, ",".join(bad)))
    bad = a_rows[11][2].split(",")
    bad[3] = "91.500000"
    lines.append((a_rows[11][0], 0, ",".join(bad)))
    lines.append((a_rows[12][0], 0, ",".join(a_rows[12][2].split(",")[:2])))

    lines.sort(key=lambda l: (l[0], l[1]))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as f:
        f.write(HEADER + "\n")
        for _, _, text in lines:
            f.write(text + "\n")
    print(f"wrote {len(lines)} rows to {out}")


if __name__ == "__main__":
    main()
