//! Rendering of a [`ReportBundle`] to CSV, Markdown and SVG.
//!
//! All output is a pure function of the bundle, so rendering twice gives
//! identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::analyze::{PairwiseSection, ReportBundle};
use crate::error::{Error, Result};
use crate::metrics::CorrelationMatrix;
use crate::stats::PairwiseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportFormat {
    Csv,
    Md,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Md, ReportFormat::Svg];
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Md),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::Invalid(format!(
                "unknown report format `{other}` (csv, md, svg)"
            ))),
        }
    }
}

/// Rendered file: name relative to the output directory, and contents.
pub type RenderedFile = (String, String);

pub fn render(bundle: &ReportBundle, formats: &[ReportFormat]) -> Result<Vec<RenderedFile>> {
    let mut files = Vec::new();
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    for f in formats {
        match f {
            ReportFormat::Csv => files.extend(render_csv(bundle)?),
            ReportFormat::Md => files.push(("report.md".into(), render_markdown(bundle))),
            ReportFormat::Svg => files.extend(render_svg(bundle)),
        }
    }
    Ok(files)
}

pub fn write_report(bundle: &ReportBundle, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (name, text) in render(bundle, formats)? {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}

/// File-name-safe form of a label.
pub fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn pairwise_name(section: &PairwiseSection) -> String {
    format!("pairwise_{}_{}", section.matrix.factor, slug(&section.subset))
}

/// Gain as shown in cells: ×100, one decimal, no negative zero.
pub fn gain_text(g: f64) -> String {
    let s = format!("{:.1}", g * 100.0);
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() {
        x.to_string()
    } else if x.abs() < 1e-4 || x.abs() >= 1e6 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn render_csv(b: &ReportBundle) -> Result<Vec<RenderedFile>> {
    let mut files = Vec::new();
    if let Some(c) = &b.correlations {
        let mut header = vec!["metric"];
        header.extend(c.names.iter().map(String::as_str));
        let rows = c
            .names
            .iter()
            .zip(&c.values)
            .map(|(n, row)| std::iter::once(n.clone()).chain(row.iter().map(|v| opt(*v))).collect())
            .collect();
        files.push(("correlations.csv".into(), csv_text(&header, rows)?));
    }
    for s in &b.screenings {
        let mut rows = Vec::new();
        for (entries, kept) in [(&s.ranked, "1"), (&s.excluded, "0")] {
            for e in entries.iter() {
                rows.push(vec![
                    e.variable.clone(),
                    e.p_value.to_string(),
                    e.r2.to_string(),
                    kept.into(),
                ]);
            }
        }
        for (v, msg) in &s.failed {
            rows.push(vec![v.clone(), String::new(), String::new(), format!("failed: {msg}")]);
        }
        let header = ["variable", "p_value", "r2", "kept"];
        files.push((format!("screening_{}.csv", slug(&s.response)), csv_text(&header, rows)?));
    }
    for sel in &b.model_selection {
        let response = sel.entries[sel.best]
            .formula
            .split('~')
            .next()
            .unwrap_or("")
            .trim()
            .to_string();
        let rows = sel
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                vec![
                    e.formula.clone(),
                    e.n_params.map_or_else(String::new, |p| p.to_string()),
                    opt(e.aic),
                    opt(e.r2),
                    if i == sel.best { "1" } else { "0" }.into(),
                    e.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        let header = ["formula", "n_params", "aic", "r2", "best", "error"];
        files.push((
            format!("model_selection_{}.csv", slug(&response)),
            csv_text(&header, rows)?,
        ));
    }
    let mut rows = Vec::new();
    for t in &b.anova {
        for r in &t.rows {
            rows.push(vec![
                t.formula.clone(),
                r.term.clone(),
                r.sum_sq.to_string(),
                r.df.to_string(),
                r.f_statistic.to_string(),
                r.p_value.to_string(),
                r.partial_eta2.to_string(),
            ]);
        }
        rows.push(vec![
            t.formula.clone(),
            "Residual".into(),
            t.residual_sum_sq.to_string(),
            t.residual_df.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    if !b.anova.is_empty() {
        let header = [
            "formula",
            "term",
            "sum_sq",
            "df",
            "f_statistic",
            "p_value",
            "partial_eta2",
        ];
        files.push(("anova.csv".into(), csv_text(&header, rows)?));
    }
    let mut rows = Vec::new();
    for r in &b.regressions {
        for c in &r.coefficients {
            rows.push(vec![
                r.formula.clone(),
                c.label.clone(),
                c.estimate.to_string(),
                c.std_error.to_string(),
                c.t_value.to_string(),
                c.p_value.to_string(),
            ]);
        }
    }
    if !b.regressions.is_empty() {
        let header = ["formula", "term", "estimate", "std_error", "t_value", "p_value"];
        files.push(("regressions.csv".into(), csv_text(&header, rows)?));
    }
    for s in &b.pairwise {
        let m = &s.matrix;
        let mut rows = Vec::new();
        for (i, li) in m.levels.iter().enumerate() {
            for (j, lj) in m.levels.iter().enumerate() {
                rows.push(vec![
                    li.clone(),
                    lj.clone(),
                    opt(m.gain[i][j]),
                    opt(m.p_values[i][j]),
                    u8::from(m.significant[i][j]).to_string(),
                    u8::from(m.significant_uncorrected[i][j]).to_string(),
                ]);
            }
        }
        let header = [
            "level",
            "versus",
            "gain",
            "p_value",
            "significant",
            "significant_uncorrected",
        ];
        files.push((format!("{}.csv", pairwise_name(s)), csv_text(&header, rows)?));
    }
    for (k, d) in b.diagnostics.iter().enumerate() {
        let g = &d.diagnostics;
        let rows = (0..g.standardized_residuals.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    g.scale_location[i].0.to_string(),
                    g.standardized_residuals[i].to_string(),
                    g.scale_location[i].1.to_string(),
                    g.leverages[i].to_string(),
                    g.qq[i].0.to_string(),
                    g.qq[i].1.to_string(),
                ]
            })
            .collect();
        let header = [
            "obs",
            "fitted",
            "standardized_residual",
            "sqrt_abs_standardized_residual",
            "leverage",
            "qq_theoretical",
            "qq_sample",
        ];
        files.push((format!("diagnostics_{}.csv", k + 1), csv_text(&header, rows)?));
    }
    if !b.diagnostics.is_empty() {
        let rows = b
            .diagnostics
            .iter()
            .map(|d| {
                vec![
                    d.formula.clone(),
                    d.gram.min_eigenvalue.to_string(),
                    d.gram.max_eigenvalue.to_string(),
                    d.gram.threshold.to_string(),
                    u8::from(d.gram.collinear).to_string(),
                    d.leverage_sum.to_string(),
                ]
            })
            .collect();
        let header = [
            "formula",
            "min_eigenvalue",
            "max_eigenvalue",
            "threshold",
            "collinear",
            "leverage_sum",
        ];
        files.push(("gram.csv".into(), csv_text(&header, rows)?));
    }
    let rows = b
        .warnings
        .iter()
        .map(|w| vec![w.stage.clone(), w.subject.clone(), w.message.clone()])
        .collect();
    files.push(("warnings.csv".into(), csv_text(&["stage", "subject", "message"], rows)?));
    Ok(files)
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = md_row(header);
    out.push_str(&md_row(&vec!["---".to_string(); header.len()]));
    for r in rows {
        out.push_str(&md_row(r));
    }
    out
}

/// Pairwise gain matrix as a Markdown table: one header cell per level plus
/// the row-label column. Significant cells are bold.
pub fn pairwise_markdown(m: &PairwiseMatrix<f64>) -> String {
    let mut header = vec![format!("{} (row vs column)", md_escape(&m.factor))];
    header.extend(m.levels.iter().map(|l| md_escape(l)));
    let rows: Vec<Vec<String>> = m
        .levels
        .iter()
        .enumerate()
        .map(|(i, li)| {
            let mut row = vec![md_escape(li)];
            for j in 0..m.levels.len() {
                row.push(match m.gain[i][j] {
                    None => "n/a".into(),
                    Some(_) if i == j => "·".into(),
                    Some(g) if m.significant[i][j] => format!("**{}**", gain_text(g)),
                    Some(g) => gain_text(g),
                });
            }
            row
        })
        .collect();
    md_table(&header, &rows)
}

pub fn render_markdown(b: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Analysis report\n");
    let _ = writeln!(out, "- observations: {}", b.nobs);
    let _ = writeln!(out, "- config hash: `{}`", b.config_hash);
    let _ = writeln!(out, "- version: {}", b.version);
    let _ = writeln!(out, "- alpha: {}", b.alpha);
    for c in &b.conventions {
        let _ = writeln!(out, "- {c}");
    }
    out.push('\n');

    if let Some(c) = &b.correlations {
        let _ = writeln!(out, "## Metric correlations (Pearson)\n");
        let mut header = vec![String::new()];
        header.extend(c.names.iter().cloned());
        let rows: Vec<Vec<String>> = c
            .names
            .iter()
            .zip(&c.values)
            .map(|(n, r)| {
                std::iter::once(n.clone())
                    .chain(
                        r.iter()
                            .map(|v| v.map_or_else(|| "undefined".into(), |x| format!("{x:.3}"))),
                    )
                    .collect()
            })
            .collect();
        out.push_str(&md_table(&header, &rows));
        out.push('\n');
    }

    for s in &b.screenings {
        let _ = writeln!(out, "## Screening: one-variable regressions of {}\n", s.response);
        let header: Vec<String> = ["variable", "p-value", "R²", "kept"].map(String::from).to_vec();
        let mut rows = Vec::new();
        for (entries, kept) in [(&s.ranked, "yes"), (&s.excluded, "no")] {
            for e in entries.iter() {
                rows.push(vec![
                    e.variable.clone(),
                    num(e.p_value),
                    format!("{:.3}", e.r2),
                    kept.into(),
                ]);
            }
        }
        for (v, msg) in &s.failed {
            rows.push(vec![
                v.clone(),
                String::new(),
                String::new(),
                format!("failed: {}", md_escape(msg)),
            ]);
        }
        out.push_str(&md_table(&header, &rows));
        out.push('\n');
    }

    for sel in &b.model_selection {
        let _ = writeln!(out, "## Model selection by AIC\n");
        let _ = writeln!(out, "Selected: `{}`\n", sel.best_formula());
        let header: Vec<String> = ["formula", "params", "AIC", "R²", "note"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = sel
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                vec![
                    format!("`{}`", e.formula),
                    e.n_params.map_or_else(String::new, |p| p.to_string()),
                    e.aic.map_or_else(String::new, |a| format!("{a:.2}")),
                    e.r2.map_or_else(String::new, |r| format!("{r:.3}")),
                    match (&e.error, i == sel.best) {
                        (Some(err), _) => format!("skipped: {}", md_escape(err)),
                        (None, true) => "selected".into(),
                        (None, false) => String::new(),
                    },
                ]
            })
            .collect();
        out.push_str(&md_table(&header, &rows));
        out.push('\n');
    }

    for t in &b.anova {
        let _ = writeln!(out, "## ANOVA (Type II): `{}`\n", t.formula);
        let _ = writeln!(out, "n = {}, R² = {:.3}\n", t.nobs, t.r2);
        let header: Vec<String> = ["term", "sum sq", "df", "F", "p-value", "partial η²"]
            .map(String::from)
            .to_vec();
        let mut rows: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.term.clone(),
                    num(r.sum_sq),
                    r.df.to_string(),
                    num(r.f_statistic),
                    num(r.p_value),
                    format!("{:.3}", r.partial_eta2),
                ]
            })
            .collect();
        rows.push(vec![
            "Residual".into(),
            num(t.residual_sum_sq),
            t.residual_df.to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        out.push_str(&md_table(&header, &rows));
        let ranked: Vec<&str> = t.ranked().iter().map(|r| r.term.as_str()).collect();
        let _ = writeln!(out, "\nRanking by partial η²: {}\n", ranked.join(" > "));
    }

    for r in &b.regressions {
        let _ = writeln!(out, "## Regression: `{}`\n", r.formula);
        let _ = writeln!(
            out,
            "n = {}, R² = {:.3}, adjusted R² = {:.3}, AIC = {:.2}\n",
            r.nobs, r.r2, r.adj_r2, r.aic
        );
        let header: Vec<String> = ["term", "estimate", "std. error", "t", "p-value"]
            .map(String::from)
            .to_vec();
        let rows: Vec<Vec<String>> = r
            .coefficients
            .iter()
            .map(|c| {
                vec![
                    md_escape(&c.label),
                    num(c.estimate),
                    num(c.std_error),
                    num(c.t_value),
                    num(c.p_value),
                ]
            })
            .collect();
        out.push_str(&md_table(&header, &rows));
        out.push('\n');
    }

    for s in &b.pairwise {
        let m = &s.matrix;
        let _ = writeln!(
            out,
            "## Pairwise gains of {} ({}, n = {})\n",
            m.factor, s.subset, s.nobs
        );
        let _ = writeln!(
            out,
            "Model `{}`. Cells are gain ×100 of the row level over the column level; bold cells have p < {:.4e} ({} tests at alpha {}).\n",
            m.formula, m.threshold, m.tests, m.alpha
        );
        out.push_str(&pairwise_markdown(m));
        out.push('\n');
    }

    for d in &b.diagnostics {
        let _ = writeln!(out, "## Diagnostics: `{}`\n", d.formula);
        let max_abs = d
            .diagnostics
            .standardized_residuals
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()));
        let max_lev = d.diagnostics.leverages.iter().fold(0.0f64, |a, &h| a.max(h));
        let _ = writeln!(
            out,
            "- smallest Gram eigenvalue: {} (threshold {})",
            num(d.gram.min_eigenvalue),
            num(d.gram.threshold)
        );
        let _ = writeln!(
            out,
            "- collinearity warning: {}",
            if d.gram.collinear { "yes" } else { "no" }
        );
        let _ = writeln!(out, "- sum of leverages: {:.6}", d.leverage_sum);
        let _ = writeln!(out, "- max leverage: {max_lev:.4}");
        let _ = writeln!(out, "- max |standardized residual|: {max_abs:.3}\n");
    }

    if !b.warnings.is_empty() {
        let _ = writeln!(out, "## Warnings\n");
        let header: Vec<String> = ["stage", "subject", "message"].map(String::from).to_vec();
        let rows: Vec<Vec<String>> = b
            .warnings
            .iter()
            .map(|w| {
                vec![
                    w.stage.clone(),
                    format!("`{}`", md_escape(&w.subject)),
                    md_escape(&w.message),
                ]
            })
            .collect();
        out.push_str(&md_table(&header, &rows));
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One heatmap cell: its label, a signed intensity in [-1, 1] (`None` for
/// gray) and whether it is emphasized.
#[derive(Debug, Clone)]
pub struct HeatCell {
    pub text: String,
    pub intensity: Option<f64>,
    pub emphasized: bool,
}

fn color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (202.0, 0.0, 32.0)
    } else {
        (5.0, 113.0, 176.0)
    };
    let a = t.abs();
    let mix = |c: f64| (255.0 + (c - 255.0) * a).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(r), mix(g), mix(b))
}

/// Square heatmap with row labels on the left and column labels on top.
pub fn heatmap_svg(title: &str, labels: &[String], cells: &[Vec<HeatCell>], caption: &str) -> String {
    const CELL: usize = 56;
    const CHAR_W: usize = 7;
    let n = labels.len();
    let longest = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    let label_w = longest * CHAR_W + 12;
    let left = label_w + 8;
    let top = 36 + label_w;
    let width = (left + n * CELL + 16)
        .max(title.chars().count() * 8 + 16)
        .max(caption.chars().count() * 6 + 16);
    let height = top + n * CELL + 40;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">"##
    );
    let _ = writeln!(s, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<text x="8" y="20" font-size="14" font-weight="bold">{}</text>"##,
        xml_escape(title)
    );
    for (j, l) in labels.iter().enumerate() {
        let x = left + j * CELL + CELL / 2 + 4;
        let y = top - 6;
        let _ = writeln!(
            s,
            r##"<text x="{x}" y="{y}" font-size="12" transform="rotate(-90 {x} {y})">{}</text>"##,
            xml_escape(l)
        );
    }
    for (i, l) in labels.iter().enumerate() {
        let y = top + i * CELL + CELL / 2 + 4;
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{y}" font-size="12" text-anchor="end">{}</text>"##,
            left - 6,
            xml_escape(l)
        );
    }
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let x = left + j * CELL;
            let y = top + i * CELL;
            let fill = c.intensity.map_or_else(|| "#dddddd".to_string(), color);
            let opacity = if c.emphasized { "1" } else { "0.35" };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" fill-opacity="{opacity}" stroke="#ffffff" stroke-width="1"/>"##
            );
            let weight = if c.emphasized { "bold" } else { "normal" };
            let ink = if c.emphasized { "#000000" } else { "#666666" };
            let _ = writeln!(
                s,
                r##"<text x="{}" y="{}" font-size="12" text-anchor="middle" font-weight="{weight}" fill="{ink}">{}</text>"##,
                x + CELL / 2,
                y + CELL / 2 + 4,
                xml_escape(&c.text)
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<text x="8" y="{}" font-size="11" fill="#333333">{}</text>"##,
        top + n * CELL + 24,
        xml_escape(caption)
    );
    s.push_str("</svg>\n");
    s
}

/// Heatmap of a pairwise matrix: cell text is gain ×100 to one decimal;
/// significant cells are bold at full opacity, the rest dimmed.
pub fn pairwise_svg(title: &str, m: &PairwiseMatrix<f64>) -> String {
    let max = m.gain.iter().flatten().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
    let cells: Vec<Vec<HeatCell>> = (0..m.levels.len())
        .map(|i| {
            (0..m.levels.len())
                .map(|j| match m.gain[i][j] {
                    None => HeatCell {
                        text: "n/a".into(),
                        intensity: None,
                        emphasized: false,
                    },
                    Some(g) => HeatCell {
                        text: gain_text(g),
                        intensity: if i == j {
                            None
                        } else {
                            Some(if max > 0.0 { g / max } else { 0.0 })
                        },
                        emphasized: m.significant[i][j],
                    },
                })
                .collect()
        })
        .collect();
    let caption = format!(
        "row over column, x100; bold: p < {:.3e} ({} tests, alpha {})",
        m.threshold, m.tests, m.alpha
    );
    heatmap_svg(title, &m.levels, &cells, &caption)
}

pub fn correlation_svg(c: &CorrelationMatrix<f64>) -> String {
    let cells: Vec<Vec<HeatCell>> = c
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| match v {
                    Some(r) => HeatCell {
                        text: format!("{r:.2}"),
                        intensity: Some(*r),
                        emphasized: true,
                    },
                    None => HeatCell {
                        text: "n/a".into(),
                        intensity: None,
                        emphasized: false,
                    },
                })
                .collect()
        })
        .collect();
    heatmap_svg(
        "Metric correlations",
        &c.names,
        &cells,
        "Pearson r; n/a where a metric is constant",
    )
}

pub fn render_svg(b: &ReportBundle) -> Vec<RenderedFile> {
    let mut files = Vec::new();
    if let Some(c) = &b.correlations {
        files.push(("correlations.svg".into(), correlation_svg(c)));
    }
    for s in &b.pairwise {
        let title = format!("Pairwise gain of {} ({})", s.matrix.factor, s.subset);
        files.push((format!("{}.svg", pairwise_name(s)), pairwise_svg(&title, &s.matrix)));
    }
    files
}
