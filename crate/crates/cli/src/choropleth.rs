//! Plain SVG choropleth: neighborhoods shaded by value quartile, lowest
//! quartile darkest, top quartile the lightest blue. Output bytes are
//! deterministic: neighborhoods render in id order with fixed-precision
//! coordinates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};

use culturank_core::ingest::Neighborhood;
use culturank_core::quantile::quartiles;

/// Quartile fills, darkest to lightest.
const FILLS: [&str; 4] = ["#08306b", "#2171b5", "#6baed6", "#c6dbef"];
const WIDTH: f64 = 800.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn quartile_bin(value: f64, q1: f64, q2: f64, q3: f64) -> usize {
    if value <= q1 {
        0
    } else if value <= q2 {
        1
    } else if value <= q3 {
        2
    } else {
        3
    }
}

/// Renders one value per location onto the neighborhood polygons. Every
/// value must have a polygon; extra polygons without values are an error
/// too, so a stale capital table cannot silently half-render.
pub fn render(values: &BTreeMap<String, f64>, neighborhoods: &[Neighborhood]) -> Result<String> {
    for location in values.keys() {
        if !neighborhoods.iter().any(|n| &n.id == location) {
            bail!("location {location:?} has no geometry in the neighborhoods file");
        }
    }
    let used: Vec<&Neighborhood> = neighborhoods
        .iter()
        .filter(|n| values.contains_key(&n.id))
        .collect();
    if used.is_empty() {
        bail!("no locations to render");
    }

    let vals: Vec<f64> = used.iter().map(|n| values[&n.id]).collect();
    let q = quartiles(&vals).expect("non-empty values");

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for hood in &used {
        for &(x, y) in hood.rings.iter().flatten() {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    let height = (WIDTH * span_y / span_x).max(1.0);

    let project = |x: f64, y: f64| -> (f64, f64) {
        (
            (x - min_x) / span_x * WIDTH,
            height - (y - min_y) / span_y * height,
        )
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH:.2} {height:.2}">"#
    )
    .expect("string write");
    for hood in &used {
        let value = values[&hood.id];
        let fill = FILLS[quartile_bin(value, q.q1, q.median, q.q3)];
        let mut d = String::new();
        for ring in &hood.rings {
            for (i, &(x, y)) in ring.iter().enumerate() {
                let (px, py) = project(x, y);
                if i == 0 {
                    write!(d, "M{px:.4},{py:.4}").expect("string write");
                } else {
                    write!(d, " L{px:.4},{py:.4}").expect("string write");
                }
            }
            d.push_str(" Z ");
        }
        writeln!(
            svg,
            r##"<path id="{}" fill="{}" stroke="#ffffff" stroke-width="0.5" fill-rule="evenodd" d="{}"><title>{}</title></path>"##,
            xml_escape(&hood.id),
            fill,
            d.trim_end(),
            xml_escape(&hood.name),
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
