#!/usr/bin/env python3
"""Generates the bundled 500 m x 500 m OSM XML test extract.

The extract is synthetic: an irregular street network with curved arterials,
local streets, dead ends and buildings laid out along road frontages. It is
written in plain OSM 0.6 XML so it exercises the same parser path as a real
download. Output is deterministic for a given seed.

    python3 data/generate_town.py > data/town.osm
"""

import math
import random
import sys

from shapely.geometry import LineString, Polygon
from shapely.strtree import STRtree

ORIGIN_LAT = 42.3365
ORIGIN_LON = -71.0578
HALF_EXTENT = 250.0
SEED = 20240611

A = 6378137.0
F = 1.0 / 298.257223563
E2 = F * (2.0 - F)


def enu_to_latlon(east, north):
    lat0 = math.radians(ORIGIN_LAT)
    s = math.sin(lat0)
    rn = A / math.sqrt(1.0 - E2 * s * s)
    rm = rn * (1.0 - E2) / (1.0 - E2 * s * s)
    lat = ORIGIN_LAT + math.degrees(north / rm)
    lon = ORIGIN_LON + math.degrees(east / (rn * math.cos(lat0)))
    return lat, lon


class Osm:
    def __init__(self):
        self.nodes = []
        self.ways = []
        self.relations = []
        self.next_node = 1000
        self.next_way = 5000
        self.next_rel = 9000

    def node(self, e, n, tags=None):
        nid = self.next_node
        self.next_node += 1
        lat, lon = enu_to_latlon(e, n)
        self.nodes.append((nid, lat, lon, tags or {}))
        return nid

    def way(self, pts, tags, closed=False):
        ids = [self.node(e, n) for e, n in pts]
        if closed:
            ids.append(ids[0])
        wid = self.next_way
        self.next_way += 1
        self.ways.append((wid, ids, tags))
        return wid

    def relation(self, members, tags):
        rid = self.next_rel
        self.next_rel += 1
        self.relations.append((rid, members, tags))
        return rid

    def write(self, out):
        out.write("<?xml version='1.0' encoding='UTF-8'?>\n")
        out.write('<osm version="0.6" generator="generate_town.py">\n')
        s, w = enu_to_latlon(-HALF_EXTENT, -HALF_EXTENT)
        n, e = enu_to_latlon(HALF_EXTENT, HALF_EXTENT)
        out.write(f'  <bounds minlat="{s:.7f}" minlon="{w:.7f}" maxlat="{n:.7f}" maxlon="{e:.7f}"/>\n')
        for nid, lat, lon, tags in self.nodes:
            if tags:
                out.write(f'  <node id="{nid}" version="1" lat="{lat:.8f}" lon="{lon:.8f}">\n')
                for k, v in tags.items():
                    out.write(f'    <tag k="{k}" v="{v}"/>\n')
                out.write("  </node>\n")
            else:
                out.write(f'  <node id="{nid}" version="1" lat="{lat:.8f}" lon="{lon:.8f}"/>\n')
        for wid, ids, tags in self.ways:
            out.write(f'  <way id="{wid}" version="1">\n')
            for i in ids:
                out.write(f'    <nd ref="{i}"/>\n')
            for k, v in tags.items():
                out.write(f'    <tag k="{k}" v="{v}"/>\n')
            out.write("  </way>\n")
        for rid, members, tags in self.relations:
            out.write(f'  <relation id="{rid}" version="1">\n')
            for kind, ref, role in members:
                out.write(f'    <member type="{kind}" ref="{ref}" role="{role}"/>\n')
            for k, v in tags.items():
                out.write(f'    <tag k="{k}" v="{v}"/>\n')
            out.write("  </relation>\n")
        out.write("</osm>\n")


def polyline(f, t0, t1, steps):
    return [f(t0 + (t1 - t0) * i / steps) for i in range(steps + 1)]


def main():
    rng = random.Random(SEED)
    osm = Osm()
    roads = []  # (LineString, half_width_m)

    def add_road(pts, kind, lanes=None):
        tags = {"highway": kind}
        if lanes is not None:
            tags["lanes"] = str(lanes)
        tags["name"] = f"Street {len(roads) + 1}"
        osm.way(pts, tags)
        width = max(1, lanes if lanes is not None else 2) * 3.5
        roads.append((LineString(pts), width / 2.0))

    ext = HALF_EXTENT + 20.0

    # Curved east-west arterials.
    for base, amp, per, phase, lanes in [(-150.0, 12.0, 310.0, 0.3, 4), (-20.0, 18.0, 420.0, 1.7, None), (125.0, 9.0, 260.0, 2.9, 3)]:
        f = lambda x, b=base, a=amp, p=per, ph=phase: (x, b + a * math.sin(2 * math.pi * x / p + ph))
        add_road(polyline(f, -ext, ext, 40), "secondary" if lanes else "residential", lanes)

    # North-south streets with a slight lean.
    for base, lean, bend, lanes in [(-185.0, 0.08, 6.0, None), (-70.0, -0.05, 14.0, 4), (40.0, 0.11, 0.0, None), (165.0, -0.02, 10.0, 2)]:
        f = lambda y, b=base, l=lean, bd=bend: (b + l * y + bd * math.sin(y / 70.0), y)
        add_road(polyline(f, -ext, ext, 40), "tertiary" if lanes else "residential", lanes)

    # Diagonal avenue.
    add_road(polyline(lambda t: (t, 0.62 * t + 40.0 + 8.0 * math.sin(t / 50.0)), -ext, 110.0, 30), "primary", 3)

    # Crescent and loop streets.
    cx, cy, rad = -120.0, 60.0, 45.0
    add_road([(cx + rad * math.cos(a), cy + rad * math.sin(a)) for a in [math.pi * (0.1 + 0.9 * i / 24) for i in range(25)]], "residential")
    add_road(polyline(lambda t: (95.0 + 38.0 * math.cos(t), -85.0 + 30.0 * math.sin(t)), -0.4, 3.6, 30), "residential")

    # Dead-end service roads and short connectors.
    for _ in range(9):
        x0 = rng.uniform(-210.0, 210.0)
        y0 = rng.uniform(-210.0, 210.0)
        ang = rng.uniform(0, 2 * math.pi)
        length = rng.uniform(35.0, 80.0)
        kink = rng.uniform(-0.6, 0.6)
        mid = (x0 + 0.5 * length * math.cos(ang), y0 + 0.5 * length * math.sin(ang))
        end = (mid[0] + 0.5 * length * math.cos(ang + kink), mid[1] + 0.5 * length * math.sin(ang + kink))
        add_road([(x0, y0), mid, end], "service", 1)

    road_geoms = [r[0] for r in roads]
    road_tree = STRtree(road_geoms)

    def clear_of_roads(poly, margin):
        for idx in road_tree.query(poly.buffer(margin + 8.0)):
            line = road_geoms[idx]
            if poly.distance(line) < roads[idx][1] + margin:
                return False
        return True

    placed = []

    def overlaps_existing(poly):
        for other in placed:
            if poly.distance(other) < 1.5:
                return True
        return False

    def rect(cx, cy, ux, uy, w, d):
        vx, vy = -uy, ux
        hw, hd = w / 2.0, d / 2.0
        return [
            (cx - ux * hw - vx * hd, cy - uy * hw - vy * hd),
            (cx + ux * hw - vx * hd, cy + uy * hw - vy * hd),
            (cx + ux * hw + vx * hd, cy + uy * hw + vy * hd),
            (cx - ux * hw + vx * hd, cy - uy * hw + vy * hd),
        ]

    def ell(cx, cy, ux, uy, w, d):
        vx, vy = -uy, ux
        hw, hd = w / 2.0, d / 2.0
        cut_w = w * rng.uniform(0.35, 0.6)
        cut_d = d * rng.uniform(0.35, 0.6)
        local = [(-hw, -hd), (hw, -hd), (hw, hd - cut_d), (hw - cut_w, hd - cut_d), (hw - cut_w, hd), (-hw, hd)]
        return [(cx + ux * a + vx * b, cy + uy * a + vy * b) for a, b in local]

    candidates = []
    for line, hw in roads:
        length = line.length
        s = rng.uniform(2.0, 10.0)
        while s < length - 2.0:
            p = line.interpolate(s)
            q = line.interpolate(min(s + 1.0, length))
            dx, dy = q.x - p.x, q.y - p.y
            norm = math.hypot(dx, dy) or 1.0
            ux, uy = dx / norm, dy / norm
            w = rng.uniform(9.0, 26.0)
            for side in (-1.0, 1.0):
                if rng.random() < 0.18:
                    continue
                d = rng.uniform(9.0, 22.0)
                setback = hw + rng.uniform(2.5, 9.0) + d / 2.0
                cx = p.x + ux * w / 2.0 - side * uy * setback
                cy = p.y + uy * w / 2.0 + side * ux * setback
                skew = rng.uniform(-0.12, 0.12)
                ca, sa = math.cos(skew), math.sin(skew)
                bx, by = ux * ca - uy * sa, ux * sa + uy * ca
                candidates.append((cx, cy, bx, by, w, d))
                if rng.random() < 0.55:
                    d2 = rng.uniform(8.0, 18.0)
                    back = setback + d / 2.0 + rng.uniform(3.0, 8.0) + d2 / 2.0
                    w2 = w * rng.uniform(0.6, 1.1)
                    candidates.append((p.x + ux * w / 2.0 - side * uy * back, p.y + uy * w / 2.0 + side * ux * back, bx, by, w2, d2))
            s += w + rng.uniform(3.0, 18.0)

    rng.shuffle(candidates)
    for cx, cy, bx, by, w, d in candidates:
        if abs(cx) > HALF_EXTENT - 12.0 or abs(cy) > HALF_EXTENT - 12.0:
            continue
        pts = ell(cx, cy, bx, by, w, d) if rng.random() < 0.22 else rect(cx, cy, bx, by, w, d)
        poly = Polygon(pts)
        if not poly.is_valid or not clear_of_roads(poly, 1.5) or overlaps_existing(poly):
            continue
        placed.append(poly)

    # Park with no buildings: drop buildings inside it to leave an open square.
    park = Polygon([(-30.0, -120.0), (20.0, -120.0), (20.0, -75.0), (-30.0, -75.0)])
    placed = [p for p in placed if not p.intersects(park)]

    relation_budget = 3
    for poly in placed:
        pts = list(poly.exterior.coords)[:-1]
        levels = str(rng.randint(1, 12))
        if relation_budget > 0 and poly.area > 300.0:
            relation_budget -= 1
            outer = osm.way(pts, {}, closed=True)
            members = [("way", outer, "outer")]
            c = poly.centroid
            inner = [(c.x - 2.0, c.y - 2.0), (c.x + 2.0, c.y - 2.0), (c.x + 2.0, c.y + 2.0), (c.x - 2.0, c.y + 2.0)]
            members.append(("way", osm.way(inner, {}, closed=True), "inner"))
            osm.relation(members, {"type": "multipolygon", "building": "yes", "building:levels": levels})
        else:
            osm.way(pts, {"building": "yes", "building:levels": levels}, closed=True)

    # Classes the map keeps out of the raster.
    osm.way([(-30.0, -120.0), (20.0, -120.0), (20.0, -75.0), (-30.0, -75.0)], {"leisure": "park"}, closed=True)
    osm.way([(-250.0, 230.0), (-100.0, 238.0), (50.0, 226.0), (250.0, 240.0)], {"waterway": "stream"})
    osm.way([(180.0, -240.0), (240.0, -240.0), (240.0, -190.0), (180.0, -190.0)], {"landuse": "grass"}, closed=True)
    for i in range(6):
        osm.node(rng.uniform(-200, 200), rng.uniform(-200, 200), {"amenity": "bench" if i % 2 else "cafe"})

    osm.write(sys.stdout)


if __name__ == "__main__":
    main()
