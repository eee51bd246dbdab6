use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::eval::EvalRecord;
use super::metrics::{discriminability_report, DiscriminabilityReport, SuccessCurve};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["id", "iou", "x", "y", "w", "h", "ms"];

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::load(path, e.to_string())
}

/// Writes `id,iou,x,y,w,h,ms`. IoU has six decimals; failed pairs leave the
/// box empty. Without `timing` the `ms` column is 0 so repeated runs give
/// identical files.
pub fn write_results_csv(path: impl AsRef<Path>, records: &[EvalRecord], timing: bool) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in records {
        let b = r.predicted_box.map(|b| b.to_xywh().map(|v| v.to_string()));
        let [x, y, bw, bh] = b.unwrap_or_default();
        let ms = if timing {
            format!("{:.3}", r.wall_time * 1e3)
        } else {
            "0".to_string()
        };
        w.write_record([r.id.clone(), format!("{:.6}", r.iou), x, y, bw, bh, ms])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `(id, iou)` rows of a results CSV.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::load(path, format!("unexpected header {:?}", headers)));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let iou: f64 = rec[1]
            .parse()
            .map_err(|_| Error::load(path, format!("bad IoU '{}' for {}", &rec[1], &rec[0])))?;
        rows.push((rec[0].to_string(), iou));
    }
    Ok(rows)
}

/// Discriminability across several result files of the same pairs. The
/// method name of each file is its file stem; pairs follow the first file.
pub fn discriminability_from_csvs<P: AsRef<Path>>(paths: &[P]) -> Result<DiscriminabilityReport> {
    let tables = paths.iter().map(read_results_csv).collect::<Result<Vec<_>>>()?;
    let methods: Vec<String> = paths
        .iter()
        .map(|p| {
            p.as_ref()
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let ids: Vec<String> = tables.first().map(|t| t.iter().map(|(id, _)| id.clone()).collect()).unwrap_or_default();
    let mut rows = Vec::with_capacity(ids.len());
    for id in &ids {
        let row = tables
            .iter()
            .zip(paths)
            .map(|(t, p)| {
                t.iter().find(|(i, _)| i == id).map(|(_, v)| *v).ok_or_else(|| {
                    Error::load(p.as_ref(), format!("pair {id} is missing"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    for (t, p) in tables.iter().zip(paths) {
        if t.len() != ids.len() {
            return Err(Error::load(
                p.as_ref(),
                format!("has {} pairs, expected {}", t.len(), ids.len()),
            ));
        }
    }
    discriminability_report(&methods, &ids, &rows)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Success curve as a standalone SVG line plot with the AUC in the title.
pub fn success_curve_svg(curve: &SuccessCurve, label: &str) -> String {
    let (w, h, m) = (480.0, 360.0, 48.0);
    let px = |t: f64| m + t * (w - 2.0 * m);
    let py = |s: f64| h - m - s * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{} AUC={:.4}</text>"#,
        w / 2.0,
        escape(label),
        curve.auc
    );
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y0} L{x1} {y0} M{x0} {y0} L{x0} {y1}" stroke="black" fill="none"/>"#,
        x0 = px(0.0),
        y0 = py(0.0),
        x1 = px(1.0),
        y1 = py(1.0)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
            px(v),
            py(0.0) + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
            px(0.0) - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">IoU threshold</text>"#,
        w / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">success rate</text>"#,
        h / 2.0,
        h / 2.0
    );
    let points: Vec<String> = curve
        .thresholds
        .iter()
        .zip(&curve.success_rate)
        .map(|(&t, &r)| format!("{:.2},{:.2}", px(t), py(r)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        points.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_curve_svg(path: impl AsRef<Path>, curve: &SuccessCurve, label: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, success_curve_svg(curve, label)).map_err(|e| Error::io(path, e))
}
