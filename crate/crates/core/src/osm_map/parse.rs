use std::collections::{HashMap, HashSet};

use log::{debug, warn};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{Building, Road, VectorMap};
use crate::error::{Error, Result};
use crate::geodesy::{wgs84_to_local, EnuFrame, GeodeticPoint};

#[derive(Default)]
struct RawWay {
    id: i64,
    refs: Vec<i64>,
    tags: HashMap<String, String>,
}

#[derive(Default)]
struct RawRelation {
    id: i64,
    members: Vec<(String, i64, String)>,
    tags: HashMap<String, String>,
}

enum Open {
    Way(RawWay),
    Relation(RawRelation),
    Other,
}

fn attr(e: &BytesStart<'_>, key: &str, offset: u64) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|err| Error::MalformedXml {
            offset,
            message: err.to_string(),
        })?;
        if a.key.as_ref() == key {
            return Ok(Some(a.value.into_owned()));
        }
    }
    Ok(None)
}

fn required<T: std::str::FromStr>(e: &BytesStart<'_>, key: &str, offset: u64) -> Result<T> {
    let raw = attr(e, key, offset)?.ok_or_else(|| Error::MalformedXml {
        offset,
        message: format!(
            "<{}> missing attribute `{key}`",
            e.name().as_ref()
        ),
    })?;
    raw.parse().map_err(|_| Error::MalformedXml {
        offset,
        message: format!("attribute `{key}` has unparseable value {raw:?}"),
    })
}

fn is_building(tags: &HashMap<String, String>) -> bool {
    tags.get("building").is_some_and(|v| v != "no")
}

/// Parses an OSM XML extract, keeping only roads (`highway=*` ways) and
/// buildings (`building=*` ways and multipolygon relations).
pub fn parse_osm_xml(bytes: &[u8], frame: &EnuFrame) -> Result<VectorMap> {
    let mut reader = Reader::from_reader(bytes);
    let mut nodes: HashMap<i64, [f64; 2]> = HashMap::new();
    let mut ways: Vec<RawWay> = Vec::new();
    let mut relations: Vec<RawRelation> = Vec::new();
    let mut stack: Vec<Open> = Vec::new();
    let mut depth = 0usize;
    let mut saw_root = false;

    loop {
        let offset = reader.buffer_position();
        let event = reader.read_event().map_err(|err| Error::MalformedXml {
            offset: reader.error_position(),
            message: err.to_string(),
        })?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = e.name();
                let name = name.as_ref();
                if depth == 0 {
                    if name != "osm" {
                        return Err(Error::MalformedXml {
                            offset,
                            message: "root element is not <osm>".into(),
                        });
                    }
                    saw_root = true;
                }
                let open = match name {
                    "node" => {
                        let id: i64 = required(e, "id", offset)?;
                        let lat: f64 = required(e, "lat", offset)?;
                        let lon: f64 = required(e, "lon", offset)?;
                        let geo = GeodeticPoint::new(lat, lon, 0.0).map_err(|err| Error::MalformedXml {
                            offset,
                            message: format!("node {id}: {err}"),
                        })?;
                        nodes.insert(id, wgs84_to_local(geo, frame).planar());
                        Open::Other
                    }
                    "way" => Open::Way(RawWay {
                        id: required(e, "id", offset)?,
                        ..Default::default()
                    }),
                    "relation" => Open::Relation(RawRelation {
                        id: required(e, "id", offset)?,
                        ..Default::default()
                    }),
                    "nd" => {
                        if let Some(Open::Way(w)) = stack.last_mut() {
                            w.refs.push(required(e, "ref", offset)?);
                        }
                        Open::Other
                    }
                    "tag" => {
                        let k: String = required(e, "k", offset)?;
                        let v: String = required(e, "v", offset)?;
                        match stack.last_mut() {
                            Some(Open::Way(w)) => {
                                w.tags.insert(k, v);
                            }
                            Some(Open::Relation(r)) => {
                                r.tags.insert(k, v);
                            }
                            _ => {}
                        }
                        Open::Other
                    }
                    "member" => {
                        if let Some(Open::Relation(r)) = stack.last_mut() {
                            let kind: String = required(e, "type", offset)?;
                            let reference: i64 = required(e, "ref", offset)?;
                            let role = attr(e, "role", offset)?.unwrap_or_default();
                            r.members.push((kind, reference, role));
                        }
                        Open::Other
                    }
                    _ => Open::Other,
                };
                if is_empty {
                    match open {
                        Open::Way(w) => ways.push(w),
                        Open::Relation(r) => relations.push(r),
                        Open::Other => {}
                    }
                } else {
                    stack.push(open);
                    depth += 1;
                }
            }
            Event::End(_) => {
                depth = depth.saturating_sub(1);
                match stack.pop() {
                    Some(Open::Way(w)) => ways.push(w),
                    Some(Open::Relation(r)) => relations.push(r),
                    _ => {}
                }
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(Error::MalformedXml {
                        offset,
                        message: format!("unexpected end of input with {depth} unclosed element(s)"),
                    });
                }
                if !saw_root {
                    return Err(Error::MalformedXml {
                        offset,
                        message: "no <osm> root element".into(),
                    });
                }
                break;
            }
            _ => {}
        }
    }

    assemble(nodes, ways, relations, frame)
}

fn resolve(way: &RawWay, nodes: &HashMap<i64, [f64; 2]>) -> Result<Vec<[f64; 2]>> {
    way.refs
        .iter()
        .map(|r| {
            nodes.get(r).copied().ok_or(Error::DanglingNodeRef {
                way: way.id,
                node: *r,
            })
        })
        .collect()
}

fn assemble(
    nodes: HashMap<i64, [f64; 2]>,
    ways: Vec<RawWay>,
    relations: Vec<RawRelation>,
    frame: &EnuFrame,
) -> Result<VectorMap> {
    let mut map = VectorMap::empty(*frame);
    let by_id: HashMap<i64, &RawWay> = ways.iter().map(|w| (w.id, w)).collect();
    let mut skipped = 0usize;

    for way in &ways {
        if way.tags.contains_key("highway") {
            let points = resolve(way, &nodes)?;
            let lanes = way.tags.get("lanes").and_then(|v| v.trim().parse::<u32>().ok());
            match Road::new(points, lanes) {
                Some(road) => map.roads.push(road),
                None => skipped += 1,
            }
        } else if is_building(&way.tags) {
            let points = resolve(way, &nodes)?;
            if way.refs.first() != way.refs.last() {
                debug!("building way {} is not closed, skipped", way.id);
                skipped += 1;
                continue;
            }
            match Building::new(points) {
                Some(b) => map.buildings.push(b),
                None => skipped += 1,
            }
        }
    }

    let mut inner_ignored = 0usize;
    for rel in &relations {
        if rel.tags.get("type").map(String::as_str) != Some("multipolygon") || !is_building(&rel.tags) {
            continue;
        }
        let mut outer: Vec<Vec<i64>> = Vec::new();
        for (kind, reference, role) in &rel.members {
            if kind != "way" {
                continue;
            }
            if role == "inner" {
                inner_ignored += 1;
                continue;
            }
            match by_id.get(reference) {
                Some(w) => outer.push(w.refs.clone()),
                None => warn!("relation {} references way {} outside the extract", rel.id, reference),
            }
        }
        for ring in join_rings(outer) {
            let points = resolve(
                &RawWay {
                    id: rel.id,
                    refs: ring,
                    tags: HashMap::new(),
                },
                &nodes,
            )?;
            match Building::new(points) {
                Some(b) => map.buildings.push(b),
                None => skipped += 1,
            }
        }
    }
    if inner_ignored > 0 {
        debug!("{inner_ignored} inner multipolygon ring(s) ignored");
    }
    if skipped > 0 {
        debug!("{skipped} degenerate road/building way(s) skipped");
    }
    Ok(map)
}

/// Joins way segments end-to-end into closed rings. Segments that never close are dropped.
fn join_rings(mut segments: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    let mut rings = Vec::new();
    segments.retain(|s| s.len() >= 2);
    while let Some(mut ring) = segments.pop() {
        let mut guard = HashSet::new();
        while ring.first() != ring.last() {
            let tail = *ring.last().unwrap();
            let Some(pos) = segments
                .iter()
                .position(|s| s.first() == Some(&tail) || s.last() == Some(&tail))
            else {
                break;
            };
            let mut next = segments.swap_remove(pos);
            if next.first() != Some(&tail) {
                next.reverse();
            }
            if !guard.insert(tail) {
                break;
            }
            ring.extend_from_slice(&next[1..]);
        }
        if ring.len() >= 4 && ring.first() == ring.last() {
            rings.push(ring);
        } else {
            warn!("multipolygon outer ring could not be closed, skipped");
        }
    }
    rings.reverse();
    rings
}
