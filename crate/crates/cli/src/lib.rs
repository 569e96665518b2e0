//! Command-line front end: `generate`, `walk`, `cluster` and `compare`.
//!
//! Exit codes: 0 on success, 1 when the work itself fails, 2 for bad
//! flags, bad config files or invalid settings. Every file is written under
//! `--out`.

mod args;
mod config_file;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use birchwalk::birch::BirchConfig;
use birchwalk::dataset::{
    course_cell_specs, generate_synthetic, normalize, read_matrix, write_subset, FeatureMatrix, SyntheticSpec,
};
use birchwalk::pipeline::{compare, run_baseline, run_improved, CompareConfig, Comparison, ComparisonRow, RunResult};
use birchwalk::random_walk::{extract_key_path, project_features, WalkConfig};
use birchwalk::report;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, ClusterArgs, Command, CompareArgs, GenerateArgs, VariantChoice, WalkArgs, WalkFlags};

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (program name first) and runs the command, writing
/// progress to `stdout` and diagnostics to `stderr`. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config_file::expand(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    2
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, stdout),
        Command::Walk(a) => cmd_walk(a, stdout),
        Command::Cluster(a) => cmd_cluster(a, stdout),
        Command::Compare(a) => cmd_compare(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

fn prepare_out(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: PathBuf, content: &str) -> Outcome {
    fs::write(&path, content).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn check_walk(flags: &WalkFlags, seed: u64) -> Result<WalkConfig, Failure> {
    let cfg = flags.config(seed);
    cfg.validate().map_err(usage)?;
    if !(flags.top_fraction > 0.0 && flags.top_fraction <= 1.0) {
        return Err(usage(format!(
            "--top-fraction {} must lie in (0, 1]",
            flags.top_fraction
        )));
    }
    Ok(cfg)
}

fn check_birch(cfg: BirchConfig) -> Result<BirchConfig, Failure> {
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load(path: &Path) -> Result<FeatureMatrix, Failure> {
    read_matrix(path)
        .map(|m| normalize(&m))
        .map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_generate(a: &GenerateArgs, stdout: &mut dyn Write) -> Outcome {
    let seed = a.output.seed;
    let specs: Vec<(String, Option<_>, SyntheticSpec)> = if a.course_preset {
        course_cell_specs(seed, a.clusters, a.outlier_fraction)
            .into_iter()
            .map(|(key, mut spec)| {
                spec.span = a.span;
                (key.to_string(), Some(key), spec)
            })
            .collect()
    } else {
        if a.subsets == 0 {
            return Err(usage("--subsets must be at least 1"));
        }
        (0..a.subsets as u64)
            .map(|i| {
                let spec = SyntheticSpec {
                    cluster_count: a.clusters,
                    informative_features: a.informative,
                    distractor_features: a.distractors,
                    points_per_cluster: a.points_per_cluster,
                    variance: a.variance,
                    outlier_fraction: a.outlier_fraction,
                    span: a.span,
                    seed: seed.wrapping_add(i),
                    ..SyntheticSpec::default()
                };
                (format!("synthetic-{}", spec.seed), None, spec)
            })
            .collect()
    };
    for (_, _, spec) in &specs {
        spec.validate().map_err(usage)?;
    }
    prepare_out(&a.output.out)?;
    for (id, key, spec) in specs {
        let mut m = generate_synthetic(&spec).map_err(runtime)?.with_id(id.clone());
        if let Some(k) = key {
            m = m.with_subset(k);
        }
        let path = a.output.out.join(format!("{id}.csv"));
        write_subset(&m, &path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        let _ = writeln!(stdout, "{id}: {} rows x {} features", m.n_rows(), m.n_features());
    }
    Ok(())
}

fn cmd_walk(a: &WalkArgs, stdout: &mut dyn Write) -> Outcome {
    let cfg = check_walk(&a.walk, a.output.seed)?;
    let m = load(&a.input)?;
    let path = extract_key_path(&m, &cfg, a.walk.top_fraction).map_err(runtime)?;
    prepare_out(&a.output.out)?;
    let text = path.render();
    write_file(a.output.out.join(format!("{}.keypath", m.id())), &text)?;
    let _ = write!(stdout, "{text}");
    Ok(())
}

fn write_run(dir: &Path, matrix: &FeatureMatrix, run: &RunResult) -> Outcome {
    let stem = format!("{}.{}", run.id, run.variant);
    write_file(dir.join(format!("{stem}.assignment.csv")), &report::assignment_csv(run))?;
    write_file(dir.join(format!("{stem}.report.txt")), &report::model_report(run))?;
    let shown = match &run.key_path {
        Some(p) => project_features(matrix, p).map_err(runtime)?,
        None => matrix.clone(),
    };
    let title = format!("{} {} ({} clusters)", run.id, run.variant, run.model.cluster_count());
    write_file(
        dir.join(format!("{stem}.scatter.svg")),
        &report::scatter_svg(&shown, &run.assignment.labels, &title),
    )
}

fn cmd_cluster(a: &ClusterArgs, stdout: &mut dyn Write) -> Outcome {
    let birch = check_birch(a.birch.config())?;
    let walk = check_walk(&a.walk, a.output.seed)?;
    let m = load(&a.input)?;
    prepare_out(&a.output.out)?;
    let (baseline, improved) = match a.variant {
        VariantChoice::Baseline => (true, false),
        VariantChoice::Improved => (false, true),
        VariantChoice::Both => (true, true),
    };
    let mut runs = Vec::new();
    if baseline {
        runs.push(run_baseline(&m, &birch).map_err(runtime)?);
    }
    if improved {
        runs.push(run_improved(&m, &birch, &walk, a.walk.top_fraction).map_err(runtime)?);
    }
    for r in &runs {
        write_run(&a.output.out, &m, r)?;
        let _ = write!(stdout, "{} {}: {} clusters", r.id, r.variant, r.model.cluster_count());
        if let Some(s) = &r.scores {
            let _ = write!(stdout, ", f_score {:.4}", s.f_score);
        }
        let _ = writeln!(stdout);
    }
    Ok(())
}

/// Matrices in the order they will be reported; unreadable inputs keep
/// their slot as a failure.
struct Unreadable {
    id: String,
    message: String,
}

fn compare_inputs(a: &CompareArgs) -> Result<Vec<Result<FeatureMatrix, Unreadable>>, Failure> {
    if a.course_preset {
        let k = a.birch.clusters.unwrap_or(4);
        return course_cell_specs(a.output.seed, k, 0.0)
            .into_iter()
            .map(|(key, spec)| {
                let m = generate_synthetic(&spec).map_err(runtime)?;
                Ok(Ok(normalize(&m).with_id(key.to_string()).with_subset(key)))
            })
            .collect();
    }
    let dir = a.input.as_deref().expect("clap requires --input without --paper-shape");
    let entries = fs::read_dir(dir).map_err(|e| usage(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("{} contains no .csv matrices", dir.display())));
    }
    Ok(files
        .iter()
        .map(|p| {
            read_matrix(p).map(|m| normalize(&m)).map_err(|e| Unreadable {
                id: p
                    .file_stem()
                    .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
                message: e.to_string(),
            })
        })
        .collect())
}

fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Outcome {
    let config = CompareConfig {
        birch: check_birch(a.birch.config())?,
        walk: check_walk(&a.walk, a.output.seed)?,
        top_fraction: a.walk.top_fraction,
        workers: a.workers,
    };
    let inputs = compare_inputs(a)?;
    prepare_out(&a.output.out)?;

    let readable: Vec<FeatureMatrix> = inputs.iter().filter_map(|i| i.as_ref().ok().cloned()).collect();
    let mut compared = if readable.is_empty() {
        Vec::new().into_iter()
    } else {
        compare(&readable, &config).map_err(runtime)?.rows.into_iter()
    };
    let rows = inputs
        .into_iter()
        .map(|i| match i {
            Ok(_) => compared.next().expect("one row per readable matrix"),
            Err(u) => ComparisonRow {
                id: u.id,
                outcome: Err(u.message),
            },
        })
        .collect();
    let comparison = Comparison { rows };

    let out = &a.output.out;
    write_file(out.join("comparison.csv"), &report::comparison_csv(&comparison))?;
    write_file(out.join("summary.csv"), &report::summary_csv(&comparison))?;
    for metric in report::METRICS {
        write_file(
            out.join(format!("{metric}.svg")),
            &report::metric_plot_svg(&comparison, metric),
        )?;
    }

    let total = comparison.rows.len();
    for row in comparison.rows.iter().filter(|r| r.outcome.is_err()) {
        let _ = writeln!(stdout, "{}: failed: {}", row.id, row.outcome.as_ref().unwrap_err());
    }
    for s in report::summarize(&comparison) {
        let _ = writeln!(
            stdout,
            "{}: improved wins {}/{} (ties {}), median delta {}",
            s.metric,
            s.improved_wins,
            s.scored,
            s.ties,
            s.median_delta.map_or_else(|| "n/a".into(), |d| format!("{d:+.4}"))
        );
    }
    let ratios: Vec<f64> = comparison.rows.iter().filter_map(ComparisonRow::time_ratio).collect();
    if let Some(r) = report::median(&ratios) {
        let _ = writeln!(stdout, "median time ratio (improved / baseline): {r:.3}");
    }
    let _ = writeln!(stdout, "compared {total} subsets, {} failed", comparison.failed());
    if comparison.succeeded() == 0 {
        return Err(runtime("every subset failed"));
    }
    Ok(())
}
