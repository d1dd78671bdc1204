//! Report rendering: JSON, CSV and Markdown tables.

use std::fmt::Write as _;
use std::path::Path;

use super::campaign::{AttackKind, CampaignReport, SweepReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Config(format!(
                "unknown report format {s:?}; use json, csv or md"
            ))),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |s| format!("{s:.6}"))
}

/// Renders a campaign report. Output is a pure function of the report.
pub fn emit_report(report: &CampaignReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => campaign_csv(report),
        ReportFormat::Markdown => campaign_markdown(report),
    }
}

pub fn parse_report(json: &str) -> Result<CampaignReport> {
    serde_json::from_str(json).map_err(|e| Error::Data(format!("cannot parse report: {e}")))
}

const CSV_HEADER: [&str; 13] = [
    "row",
    "attack",
    "epsilon",
    "fold",
    "n_samples",
    "original_accuracy",
    "original_accuracy_std",
    "post_attack_accuracy",
    "post_attack_accuracy_std",
    "total_queries",
    "whitebox_evaluations",
    "box_violations",
    "wall_clock_seconds",
];

/// One row per (attack, ε, fold) followed by one aggregate row per (attack, ε).
fn campaign_csv(report: &CampaignReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in &report.cells {
        w.write_record([
            "fold".to_string(),
            c.attack.name().to_string(),
            c.epsilon.to_string(),
            c.fold.to_string(),
            c.n_samples.to_string(),
            format!("{:.4}", c.original_accuracy),
            String::new(),
            format!("{:.4}", c.post_attack_accuracy),
            String::new(),
            c.total_queries.to_string(),
            c.whitebox_evaluations.to_string(),
            c.box_violations.to_string(),
            opt(c.wall_clock_seconds),
        ])
        .expect("in-memory write");
    }
    for a in &report.aggregates {
        let n: usize = report
            .cells_for(a.attack, a.epsilon)
            .map(|c| c.n_samples)
            .sum();
        w.write_record([
            "aggregate".to_string(),
            a.attack.name().to_string(),
            a.epsilon.to_string(),
            String::new(),
            n.to_string(),
            format!("{:.4}", a.original_accuracy_mean),
            format!("{:.4}", a.original_accuracy_std),
            format!("{:.4}", a.post_attack_accuracy_mean),
            format!("{:.4}", a.post_attack_accuracy_std),
            a.total_queries.to_string(),
            a.whitebox_evaluations.to_string(),
            a.box_violations.to_string(),
            opt(a.wall_clock_seconds),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn attacks_in(report: &CampaignReport) -> Vec<AttackKind> {
    let mut v: Vec<AttackKind> = Vec::new();
    for a in &report.aggregates {
        if !v.contains(&a.attack) {
            v.push(a.attack);
        }
    }
    v
}

fn epsilons_in(report: &CampaignReport) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    for a in &report.aggregates {
        if !v.contains(&a.epsilon) {
            v.push(a.epsilon);
        }
    }
    v
}

/// One table per statistic; rows are dataset × ε and columns are attacks.
fn campaign_markdown(report: &CampaignReport) -> String {
    let attacks = attacks_in(report);
    let epsilons = epsilons_in(report);
    let name = &report.metadata.dataset;
    let mut out = String::new();
    let _ = writeln!(out, "# Attack campaign: {name}\n");
    let _ = writeln!(
        out,
        "{} rows, {} features, {} folds, seed {}.\n",
        report.metadata.n_rows,
        report.metadata.n_features,
        report.metadata.config.folds,
        report.metadata.seed
    );

    type Stat = fn(&super::campaign::AggregateResult) -> String;
    let stats: [(&str, Stat); 3] = [
        ("Original accuracy (%)", |a| {
            format!(
                "{:.2} ± {:.2}",
                a.original_accuracy_mean, a.original_accuracy_std
            )
        }),
        ("Post-attack accuracy (%)", |a| {
            format!(
                "{:.2} ± {:.2}",
                a.post_attack_accuracy_mean, a.post_attack_accuracy_std
            )
        }),
        ("Model queries", |a| a.total_queries.to_string()),
    ];
    for (title, render) in stats {
        let _ = writeln!(out, "## {title}\n");
        let mut header = String::from("| dataset | ε |");
        let mut rule = String::from("|---|---|");
        for a in &attacks {
            let _ = write!(header, " {} |", a.name());
            rule.push_str("---|");
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for &e in &epsilons {
            let mut line = format!("| {name} | {e} |");
            for &a in &attacks {
                let cell = report
                    .aggregate(a, e)
                    .map_or_else(|| "n/a".to_string(), render);
                let _ = write!(line, " {cell} |");
            }
            let _ = writeln!(out, "{line}");
        }
        out.push('\n');
    }
    out
}

pub fn emit_sweep(report: &SweepReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "temperature",
                "attack",
                "epsilon",
                "post_attack_accuracy",
                "post_attack_accuracy_std",
                "fidelity",
            ])
            .expect("in-memory write");
            for r in &report.rows {
                let fid = report
                    .fidelity
                    .iter()
                    .find(|f| f.temperature == r.temperature)
                    .map_or(String::new(), |f| format!("{:.4}", f.agreement));
                w.write_record([
                    r.temperature.to_string(),
                    r.attack.name().to_string(),
                    r.epsilon.to_string(),
                    format!("{:.4}", r.post_attack_accuracy_mean),
                    format!("{:.4}", r.post_attack_accuracy_std),
                    fid,
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        ReportFormat::Markdown => {
            let mut out = String::from("# Temperature sweep\n\n| τ | attack | ε | post-attack accuracy (%) |\n|---|---|---|---|\n");
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.2} ± {:.2} |",
                    r.temperature,
                    r.attack.name(),
                    r.epsilon,
                    r.post_attack_accuracy_mean,
                    r.post_attack_accuracy_std
                );
            }
            out.push_str("\n## Fidelity on clean test rows\n\n| τ | agreement (%) |\n|---|---|\n");
            for f in &report.fidelity {
                let _ = writeln!(out, "| {} | {:.2} |", f.temperature, f.agreement);
            }
            let _ = writeln!(out, "\nRecommended τ: {}", report.best_temperature);
            out
        }
    }
}

/// Writes rendered output, creating no directories.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
