//! Neighborhood polygons and point-in-polygon assignment.
//!
//! Containment uses even–odd ray casting over all rings, which subtracts
//! holes without caring which ring is the outer one. Boundary points count
//! as inside, and when several neighborhoods contain a point the lowest id
//! wins, so assignment stays reproducible. Coordinates are treated as
//! planar; at neighborhood granularity the geodesic error is negligible.

use std::fs;
use std::path::Path;
use std::thread;

use serde_json::Value;

use super::{IngestError, MediaRecord};

type Ring = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub id: String,
    pub name: String,
    /// Outer rings and holes, all closed (first vertex == last).
    pub rings: Vec<Ring>,
    bbox: (f64, f64, f64, f64),
}

impl Neighborhood {
    pub fn new(id: String, name: String, rings: Vec<Ring>) -> Result<Self, IngestError> {
        if rings.is_empty() {
            return Err(IngestError::Geometry {
                message: format!("neighborhood {id:?} has no rings"),
            });
        }
        for ring in &rings {
            if ring.len() < 4 {
                return Err(IngestError::Geometry {
                    message: format!(
                        "neighborhood {id:?} has a ring with {} vertices, need at least 4",
                        ring.len()
                    ),
                });
            }
            if ring.first() != ring.last() {
                return Err(IngestError::Geometry {
                    message: format!("neighborhood {id:?} has an unclosed ring"),
                });
            }
        }
        let mut bbox = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in rings.iter().flatten() {
            bbox.0 = bbox.0.min(*x);
            bbox.1 = bbox.1.min(*y);
            bbox.2 = bbox.2.max(*x);
            bbox.3 = bbox.3.max(*y);
        }
        Ok(Neighborhood {
            id,
            name,
            rings,
            bbox,
        })
    }

    /// Even–odd containment with boundary points counting as inside.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        let (minx, miny, maxx, maxy) = self.bbox;
        if lon < minx || lon > maxx || lat < miny || lat > maxy {
            return false;
        }
        let mut inside = false;
        for ring in &self.rings {
            for window in ring.windows(2) {
                let (ax, ay) = window[0];
                let (bx, by) = window[1];
                if on_segment(lon, lat, ax, ay, bx, by) {
                    return true;
                }
                if (ay > lat) != (by > lat) {
                    let x_cross = ax + (lat - ay) * (bx - ax) / (by - ay);
                    if lon < x_cross {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

fn on_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> bool {
    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    if cross != 0.0 {
        return false;
    }
    let dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay);
    let len2 = (bx - ax).powi(2) + (by - ay).powi(2);
    (0.0..=len2).contains(&dot)
}

/// Assigns a point to the lowest-id neighborhood containing it.
/// `neighborhoods` must be sorted by id (the loader guarantees it).
pub fn assign_location(lon: f64, lat: f64, neighborhoods: &[Neighborhood]) -> Option<&str> {
    neighborhoods
        .iter()
        .find(|n| n.contains(lon, lat))
        .map(|n| n.id.as_str())
}

/// Assigns a batch of records on `workers` threads. Assignment is stateless
/// per record, so the output order always mirrors the input order.
pub fn assign_records(
    records: &[MediaRecord],
    neighborhoods: &[Neighborhood],
    workers: usize,
) -> Vec<Option<String>> {
    let workers = workers.max(1).min(records.len().max(1));
    if workers <= 1 {
        return records
            .iter()
            .map(|r| assign_location(r.lon, r.lat, neighborhoods).map(String::from))
            .collect();
    }
    let chunk_size = records.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = records
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|r| assign_location(r.lon, r.lat, neighborhoods).map(String::from))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn ring_from_json(raw: &Value, id: &str, path: &Path) -> Result<Ring, IngestError> {
    let points = raw.as_array().ok_or_else(|| IngestError::Format {
        path: path.to_path_buf(),
        message: format!("feature {id:?}: ring is not an array"),
    })?;
    points
        .iter()
        .map(|p| {
            let pair = p.as_array().filter(|a| a.len() >= 2);
            let x = pair.and_then(|a| a[0].as_f64());
            let y = pair.and_then(|a| a[1].as_f64());
            match (x, y) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err(IngestError::Format {
                    path: path.to_path_buf(),
                    message: format!("feature {id:?}: ring vertex is not an [x, y] pair"),
                }),
            }
        })
        .collect()
}

/// Loads a GeoJSON FeatureCollection of Polygon / MultiPolygon features with
/// `id` and `name` properties. Returns neighborhoods sorted by id.
pub fn load_neighborhoods(path: &Path) -> Result<Vec<Neighborhood>, IngestError> {
    let content = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let root: Value = serde_json::from_str(&content).map_err(|e| IngestError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if root["type"] != "FeatureCollection" {
        return Err(IngestError::Format {
            path: path.to_path_buf(),
            message: "expected a FeatureCollection".into(),
        });
    }
    let features = root["features"]
        .as_array()
        .ok_or_else(|| IngestError::Format {
            path: path.to_path_buf(),
            message: "FeatureCollection without a features array".into(),
        })?;

    let mut out: Vec<Neighborhood> = Vec::with_capacity(features.len());
    for feature in features {
        let props = &feature["properties"];
        let id = match &props["id"] {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => {
                return Err(IngestError::Format {
                    path: path.to_path_buf(),
                    message: "feature without a string or numeric `id` property".into(),
                })
            }
        };
        let name = props["name"]
            .as_str()
            .ok_or_else(|| IngestError::Format {
                path: path.to_path_buf(),
                message: format!("feature {id:?} without a `name` property"),
            })?
            .to_string();
        let geometry = &feature["geometry"];
        let rings: Vec<Ring> = match geometry["type"].as_str() {
            Some("Polygon") => geometry["coordinates"]
                .as_array()
                .map(|rings| {
                    rings
                        .iter()
                        .map(|r| ring_from_json(r, &id, path))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
                .unwrap_or_default(),
            Some("MultiPolygon") => {
                let mut rings = Vec::new();
                for polygon in geometry["coordinates"].as_array().into_iter().flatten() {
                    for ring in polygon.as_array().into_iter().flatten() {
                        rings.push(ring_from_json(ring, &id, path)?);
                    }
                }
                rings
            }
            other => {
                return Err(IngestError::Format {
                    path: path.to_path_buf(),
                    message: format!("feature {id:?}: unsupported geometry type {other:?}"),
                })
            }
        };
        out.push(Neighborhood::new(id, name, rings)?);
    }

    out.sort_by(|a, b| a.id.cmp(&b.id));
    for window in out.windows(2) {
        if window[0].id == window[1].id {
            return Err(IngestError::Integrity {
                message: format!("duplicate neighborhood id {:?}", window[0].id),
            });
        }
    }
    Ok(out)
}
