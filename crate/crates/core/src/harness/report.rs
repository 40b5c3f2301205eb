//! Grouped bar charts of correlation reports as standalone SVG, plus the
//! matching CSV. Bar labels use the exact CSV text of each value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::stats::{fmt_corr, CorrelationReport, CorrelationRow};

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_T: f64 = 36.0;
const PLOT_H: f64 = 180.0;
const LEGEND_H: f64 = 28.0;

const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

fn first_seen<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if !out.contains(&it) {
            out.push(it);
        }
    }
    out
}

fn metric_order(rows: &[CorrelationRow]) -> Vec<String> {
    let mut seen = first_seen(rows.iter().map(|r| r.metric.clone()));
    seen.sort_by_key(|m| Metric::from_name(m).map_or(usize::MAX, |x| x as usize));
    seen
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the report as SVG: one panel per (design, K), metrics along the
/// x axis, one bar per model. NA values are drawn as hatched outlines.
pub fn report_svg(report: &CorrelationReport) -> Result<String> {
    let rows = &report.rows;
    if rows.is_empty() {
        return Err(Error::invalid("cannot render an empty report"));
    }
    let panels = first_seen(rows.iter().map(|r| (r.split_design.clone(), r.k)));
    let metrics = metric_order(rows);
    let models = first_seen(rows.iter().map(|r| r.model_name.clone()));

    let width = PANEL_W;
    let height = LEGEND_H + PANEL_H * panels.len() as f64;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"#
    )
    .unwrap();
    s.push_str(concat!(
        r#"<defs><pattern id="na" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">"#,
        r##"<line x1="0" y1="0" x2="0" y2="6" stroke="#999" stroke-width="2"/></pattern></defs>"##,
        "\n"
    ));
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    // legend
    for (i, m) in models.iter().enumerate() {
        let x = MARGIN_L + i as f64 * 110.0;
        writeln!(
            s,
            r#"<rect x="{x:.1}" y="8" width="12" height="12" fill="{}"/><text x="{:.1}" y="18">{}</text>"#,
            PALETTE[i % PALETTE.len()],
            x + 16.0,
            escape(m)
        )
        .unwrap();
    }

    let plot_w = PANEL_W - MARGIN_L - 16.0;
    let group_w = plot_w / metrics.len() as f64;
    let bar_w = (group_w * 0.8) / models.len() as f64;
    for (pi, (design, k)) in panels.iter().enumerate() {
        let top = LEGEND_H + pi as f64 * PANEL_H + MARGIN_T;
        let zero = top + PLOT_H / 2.0;
        let scale = PLOT_H / 2.0;
        writeln!(s, r#"<g class="panel" data-design="{}" data-k="{k}">"#, escape(design)).unwrap();
        writeln!(
            s,
            r#"<text x="{MARGIN_L:.1}" y="{:.1}" font-size="12" font-weight="bold">{} K={k}</text>"#,
            top - 12.0,
            escape(design)
        )
        .unwrap();
        for (tick, label) in [(1.0, "1"), (0.5, "0.5"), (0.0, "0"), (-0.5, "-0.5"), (-1.0, "-1")] {
            let y = zero - tick * scale;
            writeln!(
                s,
                r##"<line x1="{MARGIN_L:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"##,
                MARGIN_L + plot_w,
                if tick == 0.0 { "#000" } else { "#ddd" },
                MARGIN_L - 4.0,
                y + 3.0
            )
            .unwrap();
        }
        for (mi, metric) in metrics.iter().enumerate() {
            let gx = MARGIN_L + mi as f64 * group_w + group_w * 0.1;
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                gx + group_w * 0.4,
                top + PLOT_H + 14.0,
                escape(metric)
            )
            .unwrap();
            for (ci, model) in models.iter().enumerate() {
                let Some(row) = rows
                    .iter()
                    .find(|r| &r.split_design == design && r.k == *k && &r.metric == metric && &r.model_name == model)
                else {
                    continue;
                };
                let x = gx + ci as f64 * bar_w;
                let text = fmt_corr(row.bicor_mean);
                match row.bicor_mean {
                    Some(v) => {
                        let h = v.abs() * scale;
                        let y = if v >= 0.0 { zero - h } else { zero };
                        writeln!(
                            s,
                            r#"<rect class="bar" x="{x:.1}" y="{y:.1}" width="{:.1}" height="{h:.1}" fill="{}" data-model="{}" data-metric="{}" data-value="{text}"><title>{text}</title></rect>"#,
                            bar_w * 0.9,
                            PALETTE[ci % PALETTE.len()],
                            escape(model),
                            escape(metric)
                        )
                        .unwrap();
                        let ty = if v >= 0.0 { y - 2.0 } else { y + h + 8.0 };
                        writeln!(
                            s,
                            r#"<text x="{:.1}" y="{ty:.1}" text-anchor="middle" font-size="6">{text}</text>"#,
                            x + bar_w * 0.45
                        )
                        .unwrap();
                    }
                    None => {
                        writeln!(
                            s,
                            r#"<rect class="bar na" x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="url(#na)" stroke="{}" data-model="{}" data-metric="{}" data-value=""><title>NA</title></rect>"#,
                            zero - scale * 0.25,
                            bar_w * 0.9,
                            scale * 0.25,
                            PALETTE[ci % PALETTE.len()],
                            escape(model),
                            escape(metric)
                        )
                        .unwrap();
                        writeln!(
                            s,
                            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="6">NA</text>"#,
                            x + bar_w * 0.45,
                            zero - scale * 0.25 - 2.0
                        )
                        .unwrap();
                    }
                }
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `report.csv` and `report.svg` into `dir`.
pub fn render_report(report: &CorrelationReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let svg = report_svg(report)?;
    report.write_csv(dir.join("report.csv"))?;
    fs::write(dir.join("report.svg"), svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, metric: &str, v: Option<f64>) -> CorrelationRow {
        CorrelationRow {
            model_name: model.into(),
            split_design: "random".into(),
            k: 8,
            metric: metric.into(),
            bicor_mean: v,
            bicor_sd: None,
            n_replicates: 1,
            n_pairs: 10,
        }
    }

    fn bars(svg: &str) -> usize {
        svg.matches(r#"class="bar"#).count()
    }

    #[test]
    fn one_model_five_metrics_gives_five_bars() {
        let rows = Metric::STRUCTURAL
            .iter()
            .map(|m| row("fc", m.name(), Some(0.5)))
            .collect();
        let svg = report_svg(&CorrelationReport { rows, unpaired: vec![] }).unwrap();
        assert_eq!(bars(&svg), 5);
    }

    #[test]
    fn na_is_hatched_and_labelled() {
        let r = CorrelationReport {
            rows: vec![row("mean", "ndvi_mean", None)],
            unpaired: vec![],
        };
        let svg = report_svg(&r).unwrap();
        assert!(svg.contains(r#"class="bar na""#));
        assert!(svg.contains("url(#na)"));
        assert!(svg.contains(">NA</text>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = vec![row("fc", "shdi", Some(0.123456789)), row("mean", "shdi", Some(-0.3))];
        let r = CorrelationReport { rows, unpaired: vec![] };
        assert_eq!(report_svg(&r).unwrap(), report_svg(&r).unwrap());
    }

    #[test]
    fn svg_values_are_csv_fields() {
        let rows = vec![row("fc", "shdi", Some(0.123456789)), row("fc", "mesh_ha", Some(-0.987654321))];
        let r = CorrelationReport { rows, unpaired: vec![] };
        let svg = report_svg(&r).unwrap();
        let dir = tempfile::tempdir().unwrap();
        r.write_csv(dir.path().join("r.csv")).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        for v in ["0.123457", "-0.987654"] {
            assert!(svg.contains(&format!(r#"data-value="{v}""#)));
            assert!(csv.contains(v));
        }
    }

    #[test]
    fn empty_report_is_rejected() {
        assert!(report_svg(&CorrelationReport::default()).is_err());
    }
}
