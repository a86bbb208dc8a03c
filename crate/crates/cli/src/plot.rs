//! Static SVG rendering of a boundary CSV written by `region` or
//! `compare-async`.

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};
use crate::table::g9;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Series {
    name: &'static str,
    points: Vec<(f64, f64)>,
}

fn parse(csv: &str) -> CliResult<Vec<Series>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Usage("empty CSV".into()))?
        .split(',')
        .collect();
    let col = |name: &str| header.iter().position(|h| *h == name);
    let pairs: Vec<(&'static str, usize, usize)> = match (col("r0"), col("r1")) {
        (Some(a), Some(b)) => vec![("boundary", a, b)],
        _ => match (
            col("sync_r0"),
            col("sync_r1"),
            col("async_r0"),
            col("async_r1"),
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => {
                vec![("synchronous", a, b), ("asynchronous", c, d)]
            }
            _ => {
                return Err(CliError::Usage(
                    "CSV needs r0,r1 or sync_r0,sync_r1,async_r0,async_r1 columns".into(),
                ))
            }
        },
    };
    let rows: Vec<Vec<&str>> = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    Ok(pairs
        .into_iter()
        .map(|(name, i0, i1)| Series {
            name,
            points: rows
                .iter()
                .filter_map(|r| {
                    let x: f64 = r.get(i0)?.parse().ok()?;
                    let y: f64 = r.get(i1)?.parse().ok()?;
                    (x.is_finite() && y.is_finite()).then_some((x, y))
                })
                .collect(),
        })
        .collect())
}

/// Renders `R1` against `R0`.
pub fn render_svg(csv: &str) -> CliResult<String> {
    let series = parse(csv)?;
    let all = series.iter().flat_map(|s| s.points.iter());
    let (xmax, ymax) = all.fold((0.0f64, 0.0f64), |(a, b), &(x, y)| (a.max(x), b.max(y)));
    let xmax = if xmax > 0.0 { xmax * 1.05 } else { 1.0 };
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let sx = |x: f64| MARGIN + x / xmax * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y / ymax * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(xmax), sy(ymax));
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let (xv, yv) = (t * xmax, t * ymax);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            g9((xv * 1000.0).round() / 1000.0)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            g9((yv * 1000.0).round() / 1000.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">R0 (bits/use)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">R1 (bits/use)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = MARGIN + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_both_table_kinds() {
        let region = "gamma1,r0,r1\n0,2,0\n1,1.5,0.5\ninf,nan,nan\n";
        let svg = render_svg(region).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
        assert_eq!(svg.matches("<circle").count(), 2);
        let cmp = "gamma1,sync_r0,sync_r1,async_r0,async_r1\n0,2,0,1,0\n";
        assert_eq!(render_svg(cmp).unwrap().matches("<polyline").count(), 2);
        assert!(render_svg("a,b\n1,2\n").is_err());
    }
}
