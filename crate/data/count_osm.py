#!/usr/bin/env python3
"""Counts the roads and buildings an ingest of an OSM extract should keep.

Usage: python3 data/count_osm.py data/town.osm

Independent of the Rust parser: plain ElementTree, same retention rules
(highway ways with two or more distinct consecutive vertices, closed
building ways, outer rings of building multipolygons; inner rings dropped).
"""
import json
import sys
import xml.etree.ElementTree as ET


def dedup(seq):
    return [p for i, p in enumerate(seq) if i == 0 or p != seq[i - 1]]


def main(path):
    root = ET.parse(path).getroot()
    nodes = {n.get("id"): (n.get("lat"), n.get("lon")) for n in root.iter("node")}
    ways = {}
    roads = road_vertices = buildings = building_vertices = 0
    for w in root.iter("way"):
        refs = [nd.get("ref") for nd in w.iter("nd")]
        tags = {t.get("k"): t.get("v") for t in w.iter("tag")}
        ways[w.get("id")] = refs
        if "highway" in tags:
            pts = dedup([nodes[r] for r in refs])
            if len(pts) >= 2:
                roads += 1
                road_vertices += len(pts)
        elif tags.get("building", "no") != "no" and refs[0] == refs[-1]:
            ring = dedup([nodes[r] for r in refs])
            if len(set(ring)) >= 3:
                buildings += 1
                building_vertices += len(ring)
    for rel in root.iter("relation"):
        tags = {t.get("k"): t.get("v") for t in rel.iter("tag")}
        if tags.get("type") != "multipolygon" or tags.get("building", "no") == "no":
            continue
        for m in rel.iter("member"):
            if m.get("type") == "way" and m.get("role") != "inner":
                refs = ways[m.get("ref")]
                if refs[0] == refs[-1]:
                    buildings += 1
                    building_vertices += len(dedup([nodes[r] for r in refs]))
    print(json.dumps({
        "roads": roads,
        "buildings": buildings,
        "road_vertices": road_vertices,
        "building_vertices": building_vertices,
    }, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1])
