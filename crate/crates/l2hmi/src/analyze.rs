//! Analysis pipeline: session logs to CSV, CSV to results.
//!
//! Export writes `responses.csv` (participant, group, item, administration,
//! value) and `tti.csv` (participant, group, event_kind, onset, tti,
//! collided). Analysis reads them back and writes:
//!
//! - `pvalues.csv` and `pvalues.txt`: rank-sum p-values, items by
//!   administration.
//! - `tti_summary.csv` and `tti_summary.txt`: per risk and group box-plot
//!   statistics (Tukey hinges, whiskers, mild and extreme outliers), a
//!   normality check and the group comparison.
//! - `tti_outliers.csv`: the tag given to every reaction time.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use l2hmi_core::experiment::{
    export_analysis_dataset, summarize_session, AnalysisDataset, Group, MissingResponse,
    ResponseRow, TtiRow, B_ADMINISTRATIONS,
};
use l2hmi_core::scenario::RiskKind;
use l2hmi_core::stats::{
    build_pvalue_table, compare_groups, iqr_outliers, shapiro_wilk, BoxStats, CellFlag, Method,
    OutlierTag, PValueTable, StatsConfig, TestResult,
};
use l2hmi_core::Config;

use crate::logfile::{log_files, read_log};
use crate::{Error, Result};

pub const RESPONSES_CSV: &str = "responses.csv";
pub const TTI_CSV: &str = "tti.csv";
pub const MISSING_CSV: &str = "missing.csv";
pub const PVALUES_CSV: &str = "pvalues.csv";
pub const PVALUES_TXT: &str = "pvalues.txt";
pub const TTI_SUMMARY_CSV: &str = "tti_summary.csv";
pub const TTI_SUMMARY_TXT: &str = "tti_summary.txt";
pub const TTI_OUTLIERS_CSV: &str = "tti_outliers.csv";

const ADMINISTRATION_NAMES: [&str; 3] = ["first", "second", "third"];

/// Reads every sealed log in `dir` into one dataset.
pub fn dataset_from_logs(dir: &Path, items: u8) -> Result<(AnalysisDataset, usize)> {
    let paths = log_files(dir)?;
    let mut sessions = Vec::new();
    for path in &paths {
        let log = read_log(path)?;
        if !log.integrity.is_sealed() {
            return Err(Error::Tampered(format!("{}: {}", path.display(), log.integrity.describe())));
        }
        sessions.push(summarize_session(&log.header.participant, &log.records));
    }
    Ok((export_analysis_dataset(&sessions, items), sessions.len()))
}

pub fn write_dataset(data: &AnalysisDataset, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_rows(&out.join(RESPONSES_CSV), &data.responses)?;
    write_rows(&out.join(TTI_CSV), &data.tti)?;
    let missing = out.join(MISSING_CSV);
    if data.missing.is_empty() {
        if missing.exists() {
            std::fs::remove_file(&missing).map_err(|e| Error::io(&missing, e))?;
        }
    } else {
        write_rows(&missing, &data.missing)?;
    }
    Ok(())
}

fn write_rows<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_dataset(dir: &Path) -> Result<AnalysisDataset> {
    let missing = dir.join(MISSING_CSV);
    Ok(AnalysisDataset {
        responses: read_rows::<ResponseRow>(&dir.join(RESPONSES_CSV))?,
        tti: read_rows::<TtiRow>(&dir.join(TTI_CSV))?,
        missing: if missing.exists() {
            read_rows::<MissingResponse>(&missing)?
        } else {
            Vec::new()
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedTti {
    pub participant: String,
    pub tti: f64,
    pub tag: OutlierTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupTti {
    pub group: Group,
    /// Drives with an onset of this kind.
    pub drives: usize,
    /// Drives where the driver never intervened.
    pub no_intervention: usize,
    pub collided: usize,
    /// `None` below four reaction times.
    pub box_stats: Option<BoxStats>,
    pub normality: Option<TestResult>,
    pub values: Vec<TaggedTti>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtiSummary {
    pub kind: RiskKind,
    pub groups: [GroupTti; 2],
    pub comparison: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub table: PValueTable,
    pub tti: Vec<TtiSummary>,
    pub alpha: f64,
}

fn group_tti(data: &AnalysisDataset, kind: RiskKind, group: Group) -> GroupTti {
    let rows: Vec<&TtiRow> = data
        .tti
        .iter()
        .filter(|r| r.event_kind == kind && r.group == group)
        .collect();
    let timed: Vec<(&str, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.participant.as_str(), r.tti?)))
        .collect();
    let values: Vec<f64> = timed.iter().map(|t| t.1).collect();
    let labels = iqr_outliers(&values).ok();
    let tagged = timed
        .iter()
        .enumerate()
        .map(|(i, (p, t))| TaggedTti {
            participant: p.to_string(),
            tti: *t,
            tag: labels.as_ref().map_or(OutlierTag::Inlier, |l| l.tags[i]),
        })
        .collect();
    GroupTti {
        group,
        drives: rows.len(),
        no_intervention: rows.iter().filter(|r| r.tti.is_none()).count(),
        collided: rows.iter().filter(|r| r.collided).count(),
        box_stats: labels.map(|l| l.stats),
        normality: shapiro_wilk(&values).ok(),
        values: tagged,
    }
}

pub fn analyze_dataset(data: &AnalysisDataset, items: u8, stats: &StatsConfig) -> AnalysisReport {
    let cells = data.cell_samples(items, B_ADMINISTRATIONS);
    let table = build_pvalue_table(&cells, usize::from(items), usize::from(B_ADMINISTRATIONS), stats);
    let tti = [RiskKind::ApparentEntry, RiskKind::ApparentPylons]
        .into_iter()
        .map(|kind| {
            let s = data.tti_samples(kind);
            TtiSummary {
                kind,
                groups: [group_tti(data, kind, Group::One), group_tti(data, kind, Group::Two)],
                comparison: compare_groups(&s.group1, &s.group2, stats).ok(),
            }
        })
        .collect();
    AnalysisReport {
        table,
        tti,
        alpha: stats.alpha,
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ShapiroWilk => "shapiro_wilk",
        Method::WilcoxonRankSumExact => "rank_sum_exact",
        Method::WilcoxonRankSumNormal => "rank_sum_normal",
    }
}

fn flag_name(f: CellFlag) -> &'static str {
    match f {
        CellFlag::MissingGroup1 => "missing_group1",
        CellFlag::MissingGroup2 => "missing_group2",
        CellFlag::MissingBoth => "missing_both",
        CellFlag::Failed => "failed",
    }
}

fn tag_name(t: OutlierTag) -> &'static str {
    match t {
        OutlierTag::Inlier => "inlier",
        OutlierTag::Mild => "mild",
        OutlierTag::Extreme => "extreme",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn pvalue_text(table: &PValueTable, alpha: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<6}", "Item");
    for a in 1..=table.administrations {
        let name = ADMINISTRATION_NAMES.get(a - 1).copied().unwrap_or("later");
        let _ = write!(s, "{name:>12}");
    }
    s.push('\n');
    for item in 1..=table.items {
        let _ = write!(s, "{:<6}", format!("Q{item}"));
        for a in 1..=table.administrations {
            let cell = table.cell(item, a).expect("cell in range");
            let text = match (&cell.result, cell.flag) {
                (Some(r), _) => {
                    let mark = if r.p_value < alpha { "*" } else { " " };
                    format!("{:.5}{mark}", r.p_value)
                }
                (None, Some(f)) => flag_name(f).to_string(),
                (None, None) => "-".to_string(),
            };
            let _ = write!(s, "{text:>12}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "* p < {alpha}");
    s
}

pub fn tti_text(report: &AnalysisReport) -> String {
    let mut s = String::new();
    for t in &report.tti {
        let _ = writeln!(s, "Risk {} time to intervene [s]", t.kind);
        for g in &t.groups {
            let _ = write!(
                s,
                "  group {}: drives {}, timed {}, no intervention {}, collided {}",
                g.group,
                g.drives,
                g.values.len(),
                g.no_intervention,
                g.collided
            );
            match &g.box_stats {
                Some(b) => {
                    let _ = writeln!(
                        s,
                        "\n    Q1 {:.3}  median {:.3}  Q3 {:.3}  IQR {:.3}  whiskers [{:.3}, {:.3}]",
                        b.q1, b.median, b.q3, b.iqr, b.lower_whisker, b.upper_whisker
                    );
                    let _ = writeln!(s, "    mild outliers {:?}  extreme outliers {:?}", b.mild, b.extreme);
                }
                None => s.push_str("\n    too few values for box statistics\n"),
            }
            if let Some(n) = &g.normality {
                let _ = writeln!(s, "    Shapiro-Wilk W {:.4}  p {:.4}", n.statistic, n.p_value);
            }
        }
        match &t.comparison {
            Some(c) => {
                let _ = writeln!(
                    s,
                    "  group 1 vs 2: {} p {:.5}{}",
                    method_name(c.method),
                    c.p_value,
                    if c.p_value < report.alpha { " *" } else { "" }
                );
            }
            None => s.push_str("  group 1 vs 2: not enough data\n"),
        }
    }
    s
}

pub fn write_report(report: &AnalysisReport, out: &Path) -> Result<Vec<PathBuf>> {
    let mut w = csv::Writer::from_path(out.join(PVALUES_CSV))?;
    w.write_record(["item", "administration", "n1", "n2", "method", "statistic", "p_value", "significant", "flag"])?;
    for c in &report.table.cells {
        let (n1, n2, method, stat, p, sig) = match &c.result {
            Some(r) => (
                r.n1.to_string(),
                r.n2.to_string(),
                method_name(r.method).to_string(),
                r.statistic.to_string(),
                r.p_value.to_string(),
                (r.p_value < report.alpha).to_string(),
            ),
            None => Default::default(),
        };
        w.write_record([
            c.item.to_string(),
            c.administration.to_string(),
            n1,
            n2,
            method,
            stat,
            p,
            sig,
            c.flag.map(flag_name).unwrap_or_default().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;

    let mut w = csv::Writer::from_path(out.join(TTI_SUMMARY_CSV))?;
    w.write_record([
        "kind",
        "group",
        "drives",
        "timed",
        "no_intervention",
        "collided",
        "q1",
        "median",
        "q3",
        "iqr",
        "lower_whisker",
        "upper_whisker",
        "mild",
        "extreme",
        "shapiro_w",
        "shapiro_p",
        "comparison_method",
        "comparison_p",
    ])?;
    let mut o = csv::Writer::from_path(out.join(TTI_OUTLIERS_CSV))?;
    o.write_record(["participant", "group", "kind", "tti", "tag"])?;
    for t in &report.tti {
        for g in &t.groups {
            let b = g.box_stats.as_ref();
            w.write_record([
                t.kind.to_string(),
                g.group.to_string(),
                g.drives.to_string(),
                g.values.len().to_string(),
                g.no_intervention.to_string(),
                g.collided.to_string(),
                opt(b.map(|b| b.q1)),
                opt(b.map(|b| b.median)),
                opt(b.map(|b| b.q3)),
                opt(b.map(|b| b.iqr)),
                opt(b.map(|b| b.lower_whisker)),
                opt(b.map(|b| b.upper_whisker)),
                b.map(|b| join(&b.mild)).unwrap_or_default(),
                b.map(|b| join(&b.extreme)).unwrap_or_default(),
                opt(g.normality.map(|n| n.statistic)),
                opt(g.normality.map(|n| n.p_value)),
                t.comparison.map(|c| method_name(c.method)).unwrap_or_default().to_string(),
                opt(t.comparison.map(|c| c.p_value)),
            ])?;
            for v in &g.values {
                o.write_record([
                    v.participant.clone(),
                    g.group.to_string(),
                    t.kind.to_string(),
                    v.tti.to_string(),
                    tag_name(v.tag).to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    o.flush().map_err(|e| Error::io(out, e))?;

    let pv = out.join(PVALUES_TXT);
    std::fs::write(&pv, pvalue_text(&report.table, report.alpha)).map_err(|e| Error::io(&pv, e))?;
    let tt = out.join(TTI_SUMMARY_TXT);
    std::fs::write(&tt, tti_text(report)).map_err(|e| Error::io(&tt, e))?;
    Ok([PVALUES_CSV, PVALUES_TXT, TTI_SUMMARY_CSV, TTI_SUMMARY_TXT, TTI_OUTLIERS_CSV]
        .iter()
        .map(|f| out.join(f))
        .collect())
}

/// Exports any logs in `dir` to CSV, then analyses the CSVs in `dir` and
/// writes the results next to them.
pub fn analyze_dir(dir: &Path, cfg: &Config) -> Result<AnalysisReport> {
    let items = u8::try_from(cfg.experiment.questionnaire_b.items.len())
        .map_err(|_| Error::Config("too many questionnaire B items".into()))?;
    let (data, sessions) = dataset_from_logs(dir, items)?;
    if sessions > 0 {
        log::info!("exporting {sessions} session logs");
        write_dataset(&data, dir)?;
    }
    if !dir.join(RESPONSES_CSV).exists() {
        return Err(Error::io(
            dir.join(RESPONSES_CSV),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no session logs or exported CSVs"),
        ));
    }
    let data = read_dataset(dir)?;
    let report = analyze_dataset(&data, items, &cfg.stats);
    write_report(&report, dir)?;
    Ok(report)
}
