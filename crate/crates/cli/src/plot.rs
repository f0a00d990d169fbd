//! Static SVG 1.1 line plot of the probability columns.

use std::fmt::Write;

use crate::config::Scale;
use crate::runner::ResultRecord;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const PAD: f64 = 60.0;

type Column = (&'static str, &'static str, fn(&ResultRecord) -> Option<f64>);

pub const COLUMNS: [Column; 3] = [
    ("p_exact", "#1f77b4", |r| r.p_exact),
    ("p_leading", "#d62728", |r| r.p_leading),
    ("p_classical", "#2ca02c", |r| Some(r.p_classical)),
];

fn x_of(r: &ResultRecord) -> f64 {
    r.sweep_value.unwrap_or(r.index as f64)
}

fn usable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

fn transform(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo > 0.0 {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

pub fn svg(records: &[ResultRecord], scale: Scale) -> String {
    let log_x = scale == Scale::Log && records.iter().all(|r| x_of(r) > 0.0);
    let all_y = || COLUMNS.iter().flat_map(|(_, _, get)| records.iter().filter_map(get));
    let log_y = scale == Scale::Log && all_y().filter(|v| v.is_finite()).all(|v| v > 0.0);
    let present: Vec<&Column> = COLUMNS
        .iter()
        .filter(|(_, _, get)| records.iter().filter_map(get).any(|v| usable(v, log_y)))
        .collect();

    let (x0, x1) = range(
        records
            .iter()
            .map(x_of)
            .filter(|&x| usable(x, log_x))
            .map(|x| transform(x, log_x)),
    );
    let (y0, y1) = range(all_y().filter(|&v| usable(v, log_y)).map(|v| transform(v, log_y)));
    let px = |x: f64| PAD + (transform(x, log_x) - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let py = |y: f64| HEIGHT - PAD - (transform(y, log_y) - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);

    let x_label = records
        .first()
        .and_then(|r| r.sweep_param)
        .map(|p| p.name().to_string())
        .unwrap_or_else(|| "index".into());
    let axis = |log: bool, name: &str| if log { format!("log10 {name}") } else { name.to_string() };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        HEIGHT - PAD,
        WIDTH - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        axis(log_x, &x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        axis(log_y, "probability")
    );
    for (v, x, y, anchor) in [
        (x0, PAD, HEIGHT - PAD + 18.0, "start"),
        (x1, WIDTH - PAD, HEIGHT - PAD + 18.0, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="11">{v:.4e}</text>"#
        );
    }
    for (v, y) in [(y0, HEIGHT - PAD), (y1, PAD)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="11">{v:.4e}</text>"#,
            PAD - 4.0
        );
    }
    for (k, (name, color, get)) in present.iter().enumerate() {
        let points: Vec<String> = records
            .iter()
            .filter_map(|r| get(r).map(|v| (x_of(r), v)))
            .filter(|&(x, v)| usable(x, log_x) && usable(v, log_y))
            .map(|(x, v)| format!("{:.3},{:.3}", px(x), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = PAD + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" font-size="12" text-anchor="end">{name}</text>"#,
            WIDTH - PAD
        );
    }
    s.push_str("</svg>\n");
    s
}
