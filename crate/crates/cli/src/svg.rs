//! Static SVG of the admissible `(beta, D)` regions.

use std::fmt::Write;

use nelson_ibc::params::{Condition1Branch, RegionCurveRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const Y_MIN: f64 = -0.05;
const Y_MAX: f64 = 1.1;

fn x_px(beta: f64) -> f64 {
    MARGIN + beta / 2.0 * (WIDTH - 2.0 * MARGIN)
}

fn y_px(d: f64) -> f64 {
    HEIGHT - MARGIN - (d - Y_MIN) / (Y_MAX - Y_MIN) * (HEIGHT - 2.0 * MARGIN)
}

fn polyline(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(b, d)| format!("{:.2},{:.2}", x_px(*b), y_px(*d)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Curve plus the closed area down to `D = 0`.
fn curve(out: &mut String, points: &[(f64, f64)], dash: &str, fill_opacity: f64) {
    if points.len() < 2 {
        return;
    }
    let (b0, b1) = (points[0].0, points[points.len() - 1].0);
    let mut area = points.to_vec();
    area.push((b1, 0.0));
    area.push((b0, 0.0));
    writeln!(
        out,
        r#"<polygon points="{}" fill="gray" fill-opacity="{fill_opacity}" stroke="none"/>"#,
        polyline(&area)
    )
    .unwrap();
    writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"{dash}/>"#,
        polyline(points)
    )
    .unwrap();
}

pub fn region_svg(rows: &[RegionCurveRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let piece = |branch: Condition1Branch| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| {
                r.branch == branch || (branch == Condition1Branch::Large && r.branch == Condition1Branch::Endpoint)
            })
            .map(|r| {
                let d = match branch {
                    Condition1Branch::Small => r.small,
                    Condition1Branch::Middle => r.middle,
                    _ => r.large,
                };
                (r.beta, d)
            })
            .collect()
    };
    // each piece starts at the previous breakpoint so the plain line is continuous
    let mut small = vec![(0.0, 0.0)];
    small.extend(piece(Condition1Branch::Small));
    let mut middle = piece(Condition1Branch::Middle);
    let mut large = piece(Condition1Branch::Large);
    if let Some(&(b, _)) = middle.first() {
        small.push((b, nelson_ibc::params::small_branch(b)));
    }
    if let Some(&(b, _)) = large.first() {
        middle.push((b, nelson_ibc::params::middle_branch(b)));
    }
    large.dedup_by(|a, b| a.0 == b.0);

    curve(&mut out, &small, "", 0.5);
    curve(&mut out, &middle, "", 0.5);
    curve(&mut out, &large, "", 0.5);
    let mut old = vec![(0.0, 0.0)];
    old.extend(rows.iter().map(|r| (r.beta, r.old)));
    curve(&mut out, &old, r#" stroke-dasharray="8,3,2,3""#, 0.7);
    let mut half = vec![(0.0, 0.0)];
    half.extend(rows.iter().map(|r| (r.beta, r.half_beta)));
    curve(&mut out, &half, r#" stroke-dasharray="6,4""#, 0.4);

    // axes: beta along the bottom, D on the right
    let (x0, x1) = (x_px(0.0), x_px(2.0));
    let (yb, yt) = (y_px(Y_MIN), y_px(Y_MAX));
    writeln!(out, r#"<line x1="{x0}" y1="{yb}" x2="{x1}" y2="{yb}" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<line x1="{x1}" y1="{yb}" x2="{x1}" y2="{yt}" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let b = 0.5 * i as f64;
        let x = x_px(b);
        writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{b}</text>"#,
            yb + 16.0
        )
        .unwrap();
    }
    for i in 0..=5 {
        let d = 0.2 * i as f64;
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">{d:.1}</text>"#,
            x1 + 6.0,
            y_px(d) + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">β ∈ (0,2]</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14">D = 1 − 2α</text>"#,
        x1 + 6.0,
        yt - 8.0
    )
    .unwrap();
    // (2, 0) is excluded from the massless regions
    writeln!(
        out,
        r#"<circle id="excluded-point" cx="{:.2}" cy="{:.2}" r="5" fill="none" stroke="black" stroke-width="1.5"/>"#,
        x_px(2.0),
        y_px(0.0)
    )
    .unwrap();
    writeln!(out, "</svg>").unwrap();
    out
}
