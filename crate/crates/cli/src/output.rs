//! Report files: `report.csv`, `summary.json` and `scatter.svg`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use pansu_core::report::{format_real, Tally};
use pansu_core::VerificationReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Column layout: fixed leading columns, then every input and detail key
/// that occurs in any row, sorted.
pub fn write_csv(path: &Path, rows: &[VerificationReport]) -> std::io::Result<()> {
    let inputs: BTreeSet<&str> = rows.iter().flat_map(|r| r.inputs.keys().map(String::as_str)).collect();
    let details: BTreeSet<&str> = rows.iter().flat_map(|r| r.details.keys().map(String::as_str)).collect();

    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# schema={SCHEMA_VERSION}")?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["check_id", "status", "lhs", "rhs", "margin"];
    header.extend(inputs.iter().copied());
    header.extend(details.iter().copied());
    header.push("message");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.check_id.clone(),
            r.status.to_string(),
            format_real(r.lhs),
            format_real(r.rhs),
            format_real(r.margin),
        ];
        rec.extend(inputs.iter().map(|k| r.inputs.get(*k).map_or_else(String::new, |v| v.to_string())));
        rec.extend(details.iter().map(|k| r.details.get(*k).map_or_else(String::new, |v| format_real(*v))));
        rec.push(r.message.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()
}

#[derive(Debug, Serialize)]
pub struct CheckSummary {
    pub tally: Tally,
    /// Lowest margin for this check id, formatted like the CSV.
    pub min_margin: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary<'a, C: Serialize> {
    pub schema: u32,
    pub command: &'a str,
    pub config: &'a C,
    pub overall: Tally,
    pub checks: BTreeMap<String, CheckSummary>,
}

impl<'a, C: Serialize> Summary<'a, C> {
    pub fn new(command: &'a str, config: &'a C, rows: &[VerificationReport]) -> Self {
        let mut groups: BTreeMap<String, Vec<&VerificationReport>> = BTreeMap::new();
        for r in rows {
            groups.entry(r.check_id.clone()).or_default().push(r);
        }
        let checks = groups
            .into_iter()
            .map(|(id, rs)| {
                let tally = Tally::of(rs.iter().copied());
                let min_margin = tally.min_margin.map(format_real);
                (id, CheckSummary { tally, min_margin })
            })
            .collect();
        Self { schema: SCHEMA_VERSION, command, config, overall: Tally::of(rows), checks }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Log-log scatter of the deficit against the power of the asymmetry, one
/// colour per `ε`.
pub fn scatter_svg(rows: &[VerificationReport]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;
    const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let (Some(&x), Some(&y)) = (r.details.get("asymmetry_power"), r.details.get("deficit")) else {
            continue;
        };
        if x > 0.0 && y > 0.0 {
            let eps = r.inputs.get("eps").map_or_else(String::new, |v| v.to_string());
            series.entry(eps).or_default().push((x.log10(), y.log10()));
        }
    }
    let all = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x.floor());
        x1 = x1.max(x.ceil());
        y0 = y0.min(y.floor());
        y1 = y1.max(y.ceil());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in (x0 as i32)..=(x1 as i32) {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">1e{k}</text>"#, px(k as f64), H - PAD + 18.0);
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, PAD - 6.0, py(k as f64) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">asymmetry^p (p = 3 at eps = 0, else 2)</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">deficit</text>"#, H / 2.0, H / 2.0);
    for (k, (eps, pts)) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, px(x), py(y));
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{colour}">eps = {eps}</text>"#, W - PAD - 120.0, PAD + 18.0 * (k as f64 + 1.0));
    }
    s.push_str("</svg>\n");
    s
}
