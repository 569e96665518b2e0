//! Text, CSV and SVG renderings of run results. Every renderer is a pure
//! function of its input, so equal inputs give byte-equal output.

use std::fmt::Write as _;

use crate::dataset::FeatureMatrix;
use crate::metrics::ScoreBundle;
use crate::pipeline::{Comparison, ComparisonRow, RunResult};

pub const COMPARISON_HEADER: [&str; 9] = [
    "id", "variant", "clusters", "precise", "accuracy", "recall", "f_score", "time_s", "key_path",
];

pub const METRICS: [&str; 4] = ["precise", "accuracy", "recall", "f_score"];

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn metric(scores: &ScoreBundle, name: &str) -> Option<f64> {
    match name {
        "precise" => Some(scores.precise),
        "accuracy" => Some(scores.accuracy),
        "recall" => Some(scores.recall),
        "f_score" => Some(scores.f_score),
        _ => None,
    }
}

/// Header lines, then one `cluster,n,radius,centroid` row per cluster with
/// space-separated centroid coordinates.
pub fn model_report(run: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "id={}", run.id);
    let _ = writeln!(out, "variant={}", run.variant);
    let _ = writeln!(out, "clusters={}", run.model.cluster_count());
    let _ = writeln!(
        out,
        "features={}",
        run.features.iter().map(|a| a.name()).collect::<Vec<_>>().join(";")
    );
    if let Some(path) = &run.key_path {
        let _ = writeln!(out, "key_path={}", path.joined());
    }
    let _ = writeln!(out, "outlier_rows={}", run.assignment.outlier_rows.len());
    if let Some(s) = &run.scores {
        for name in METRICS {
            let _ = writeln!(out, "{name}={:.6}", metric(s, name).unwrap_or_default());
        }
    }
    out.push_str("cluster,n,radius,centroid\n");
    for (k, (cf, c)) in run.model.cluster_cfs.iter().zip(&run.model.centroids).enumerate() {
        let coords: Vec<String> = c.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(
            out,
            "{k},{},{:.6},{}",
            cf.n(),
            cf.radius().unwrap_or(0.0),
            coords.join(" ")
        );
    }
    out
}

/// `row,label` lines for every row.
pub fn assignment_csv(run: &RunResult) -> String {
    let mut out = String::from("row,label\n");
    for (i, l) in run.assignment.labels.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

fn csv_string(records: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in records {
        w.write_record(&r).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("records are utf-8")
}

fn run_record(run: &RunResult) -> Vec<String> {
    let score = |name| {
        run.scores
            .as_ref()
            .and_then(|s| metric(s, name))
            .map_or_else(String::new, |v| format!("{v:.6}"))
    };
    vec![
        run.id.clone(),
        run.variant.to_string(),
        run.model.cluster_count().to_string(),
        score("precise"),
        score("accuracy"),
        score("recall"),
        score("f_score"),
        format!("{:.6}", run.wall_time),
        run.key_path.as_ref().map_or_else(String::new, |p| p.joined()),
    ]
}

/// Two rows per successful matrix (baseline, improved); one `failed` row
/// carrying the error message otherwise.
pub fn comparison_csv(comparison: &Comparison) -> String {
    let mut records = vec![COMPARISON_HEADER.iter().map(|s| s.to_string()).collect()];
    for row in &comparison.rows {
        match &row.outcome {
            Ok((b, i)) => {
                records.push(run_record(b));
                records.push(run_record(i));
            }
            Err(message) => {
                let mut r = vec![row.id.clone(), "failed".to_string()];
                r.extend(std::iter::repeat_n(String::new(), 6));
                r.push(message.clone());
                records.push(r);
            }
        }
    }
    csv_string(records)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub median_delta: Option<f64>,
    pub improved_wins: usize,
    pub ties: usize,
    pub baseline_wins: usize,
    /// Matrices where both variants were scored.
    pub scored: usize,
}

/// Per metric: median of improved minus baseline, and how often each side
/// scored higher.
pub fn summarize(comparison: &Comparison) -> Vec<MetricSummary> {
    let deltas: Vec<ScoreBundle> = comparison.rows.iter().filter_map(|r| r.score_delta()).collect();
    METRICS
        .iter()
        .map(|&name| {
            let d: Vec<f64> = deltas.iter().filter_map(|s| metric(s, name)).collect();
            MetricSummary {
                metric: name,
                median_delta: median(&d),
                improved_wins: d.iter().filter(|&&x| x > 0.0).count(),
                ties: d.iter().filter(|&&x| x == 0.0).count(),
                baseline_wins: d.iter().filter(|&&x| x < 0.0).count(),
                scored: d.len(),
            }
        })
        .collect()
}

pub fn summary_csv(comparison: &Comparison) -> String {
    let mut records = vec![[
        "metric",
        "median_delta",
        "improved_wins",
        "ties",
        "baseline_wins",
        "scored",
        "subsets",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()];
    for s in summarize(comparison) {
        records.push(vec![
            s.metric.to_string(),
            s.median_delta.map_or_else(String::new, |v| format!("{v:.6}")),
            s.improved_wins.to_string(),
            s.ties.to_string(),
            s.baseline_wins.to_string(),
            s.scored.to_string(),
            comparison.rows.len().to_string(),
        ]);
    }
    csv_string(records)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

type RowPick = fn(&ComparisonRow) -> Option<&RunResult>;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Scatter of the first two columns, one colour per cluster label. A
/// single-column matrix is drawn along the horizontal axis.
pub fn scatter_svg(matrix: &FeatureMatrix, labels: &[i64], title: &str) -> String {
    let x = if matrix.n_features() > 0 {
        matrix.column(0)
    } else {
        vec![0.0; matrix.n_rows()]
    };
    let y = if matrix.n_features() > 1 {
        matrix.column(1)
    } else {
        vec![0.0; matrix.n_rows()]
    };
    let bounds = |v: &[f64]| {
        v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        })
    };
    let ((x0, x1), (y0, y1)) = (bounds(&x), bounds(&y));
    let inner = SIZE - 2.0 * MARGIN;
    let names = matrix.feature_names();
    let axis = |j: usize| names.get(j).map_or("", |a| a.name());

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        SIZE / 2.0,
        SIZE - 10.0,
        axis(0)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0,
        axis(1)
    );
    for (i, label) in labels.iter().enumerate() {
        let px = MARGIN + scale(x[i], x0, x1) * inner;
        let py = SIZE - MARGIN - scale(y[i], y0, y1) * inner;
        let colour = if *label < 0 {
            "#000000"
        } else {
            PALETTE[*label as usize % PALETTE.len()]
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="2" fill="{colour}" data-cluster="{label}"/>"#
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of one metric across matrices, baseline and improved as two
/// series. Failed or unscored matrices leave a gap.
pub fn metric_plot_svg(comparison: &Comparison, metric_name: &str) -> String {
    let n = comparison.rows.len();
    let inner = SIZE - 2.0 * MARGIN;
    let step = if n > 1 { inner / (n - 1) as f64 } else { 0.0 };
    let px = |i: usize| if n > 1 { MARGIN + i as f64 * step } else { SIZE / 2.0 };
    let py = |v: f64| SIZE - MARGIN - v.clamp(0.0, 1.0) * inner;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(metric_name)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{tick:.1}</text>"#,
            MARGIN - 4.0,
            py(tick) + 3.0
        );
    }
    for (i, row) in comparison.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="end" font-size="9" transform="rotate(-60 {:.2} {})">{}</text>"#,
            px(i),
            SIZE - MARGIN + 12.0,
            px(i),
            SIZE - MARGIN + 12.0,
            escape(&row.id)
        );
    }
    let series: [(&str, &str, RowPick); 2] = [
        ("baseline", PALETTE[0], |r| r.baseline()),
        ("improved", PALETTE[1], |r| r.improved()),
    ];
    for (k, (name, colour, pick)) in series.iter().enumerate() {
        let points: Vec<Option<(f64, f64)>> = comparison
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                pick(r)
                    .and_then(|run| run.scores.as_ref())
                    .and_then(|s| metric(s, metric_name))
                    .map(|v| (px(i), py(v)))
            })
            .collect();
        for segment in points.split(Option::is_none) {
            if segment.is_empty() {
                continue;
            }
            let coords: Vec<String> = segment
                .iter()
                .flatten()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5" data-series="{name}"/>"#,
                coords.join(" ")
            );
        }
        for (x, y) in points.iter().flatten() {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{colour}"/>"#);
        }
        let ly = MARGIN + 14.0 + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{colour}">{name}</text>"#,
            SIZE - MARGIN - 60.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birch::{BirchConfig, StopRule};
    use crate::cf_tree::TreeParams;
    use crate::dataset::{generate_synthetic, normalize, SyntheticSpec};
    use crate::pipeline::{compare, run_baseline, run_improved, CompareConfig, ComparisonRow};
    use crate::random_walk::WalkConfig;

    fn blobs(seed: u64, k: usize) -> FeatureMatrix {
        let spec = SyntheticSpec {
            cluster_count: k,
            informative_features: 3,
            distractor_features: 2,
            points_per_cluster: 40,
            seed,
            ..SyntheticSpec::default()
        };
        normalize(&generate_synthetic(&spec).unwrap()).with_id(format!("b{seed}"))
    }

    fn config(k: usize) -> BirchConfig {
        BirchConfig {
            tree: TreeParams {
                threshold: 0.2,
                ..TreeParams::new(1)
            },
            outlier_min_points: 1,
            stop: StopRule::TargetClusters(k),
        }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn model_report_layout() {
        let m = blobs(1, 3);
        let r = run_improved(&m, &config(3), &WalkConfig::default(), 0.6).unwrap();
        let text = model_report(&r);
        assert!(text.contains("variant=improved\n"));
        assert!(text.contains("clusters=3\n"));
        assert!(text.lines().any(|l| l.starts_with("key_path=")));
        let table: Vec<&str> = text.lines().skip_while(|l| *l != "cluster,n,radius,centroid").collect();
        assert_eq!(table.len(), 4);
        let n_total: u64 = table[1..]
            .iter()
            .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(n_total, m.n_rows() as u64);

        let b = run_baseline(&m, &config(3)).unwrap();
        assert!(!model_report(&b).contains("key_path="));
        let csv = assignment_csv(&b);
        assert_eq!(csv.lines().count(), m.n_rows() + 1);
        assert_eq!(csv.lines().next(), Some("row,label"));
    }

    #[test]
    fn comparison_and_summary_tables() {
        let mats = vec![blobs(1, 2), blobs(2, 2)];
        let cfg = CompareConfig {
            birch: config(2),
            workers: 1,
            ..CompareConfig::default()
        };
        let mut c = compare(&mats, &cfg).unwrap();
        c.rows.push(ComparisonRow {
            id: "broken".into(),
            outcome: Err("need at least 2 features, got 1".into()),
        });
        let text = comparison_csv(&c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COMPARISON_HEADER.join(","));
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("b1,baseline,2,"));
        assert!(lines[1].ends_with(','));
        assert!(lines[2].starts_with("b1,improved,2,"));
        assert_eq!(lines[5], "broken,failed,,,,,,,\"need at least 2 features, got 1\"");

        let summary = summarize(&c);
        assert_eq!(summary.len(), 4);
        for s in &summary {
            assert_eq!(s.scored, 2);
            assert_eq!(s.improved_wins + s.ties + s.baseline_wins, 2);
        }
        let table = summary_csv(&c);
        assert!(table.starts_with("metric,median_delta,improved_wins,ties,baseline_wins,scored,subsets\n"));
        assert_eq!(table.lines().count(), 5);
        assert!(table.lines().all(|l| !l.contains("time")));
    }

    #[test]
    fn scatter_has_one_glyph_per_row() {
        let m = blobs(3, 1);
        let labels = vec![0; m.n_rows()];
        let svg = scatter_svg(&m, &labels, "one <blob>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), m.n_rows());
        assert_eq!(svg.matches(PALETTE[0]).count(), m.n_rows());
        assert!(svg.contains("one &lt;blob&gt;"));
        assert_eq!(svg, scatter_svg(&m, &labels, "one <blob>"));
    }

    #[test]
    fn metric_plot_draws_both_series() {
        let mats = vec![blobs(1, 2), blobs(2, 2), blobs(3, 2)];
        let cfg = CompareConfig {
            birch: config(2),
            workers: 1,
            ..CompareConfig::default()
        };
        let c = compare(&mats, &cfg).unwrap();
        let svg = metric_plot_svg(&c, "f_score");
        assert_eq!(svg.matches("data-series=\"baseline\"").count(), 1);
        assert_eq!(svg.matches("data-series=\"improved\"").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 6);
        for id in ["b1", "b2", "b3"] {
            assert!(svg.contains(&format!(">{id}</text>")));
        }
    }
}
