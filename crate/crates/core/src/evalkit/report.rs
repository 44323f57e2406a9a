use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::env::ACTION_DIM;
use crate::error::EvalError;
use crate::muscle::MuscleKind;

use super::phases::{MilestoneCurve, PointTrace};
use super::series::{parse_series_csv, Series};
use super::stats::{deviation_angle, EyeStats, FixationStats, StatsRow};
use super::svg::line_plot;

pub const STATS_HEADER: &str = "dy,dz,r_mean,l_mean,r_max,l_max,r_min,l_min,r_std,l_std";

/// Reference fixation statistics of a converged agent, in cm, in table
/// order `(dy, dz, r_mean, l_mean, r_max, l_max, r_min, l_min, r_std, l_std)`.
pub const REFERENCE_ROWS: [(f64, f64, [f64; 8]); 9] = [
    (0.0, 0.0, [5.4, 7.7, 7.0, 8.2, 3.6, 7.3, 0.8, 0.2]),
    (0.0, 0.1, [8.2, 7.7, 8.6, 8.1, 7.6, 7.5, 0.2, 0.12]),
    (0.0, -0.1, [4.6, 3.2, 6.4, 4.9, 1.4, 0.4, 1.5, 0.9]),
    (0.1, 0.0, [6.8, 5.1, 7.5, 5.7, 5.4, 4.4, 0.6, 0.3]),
    (0.1, 0.1, [3.8, 3.0, 5.1, 3.9, 3.2, 1.9, 0.3, 0.4]),
    (0.1, -0.1, [2.0, 3.9, 2.8, 4.3, 1.4, 3.4, 0.4, 0.2]),
    (-0.1, 0.0, [1.5, 9.7, 2.2, 10.3, 1.2, 9.2, 0.3, 0.3]),
    (-0.1, 0.1, [2.6, 7.6, 3.4, 8.6, 2.1, 7.0, 0.2, 0.3]),
    (-0.1, -0.1, [5.3, 6.5, 6.3, 7.4, 0.7, 2.6, 0.9, 0.9]),
];
pub const REFERENCE_OVERALL: [f64; 8] = [4.5, 6.1, 8.6, 10.3, 0.7, 0.45, 2.2, 2.2];
/// Reference mean deviation angle and its spread, degrees.
pub const REFERENCE_ANGLE_DEG: (f64, f64) = (3.5, 1.25);

/// What to write; absent parts are skipped.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReportInputs<'a> {
    pub stats: Option<&'a FixationStats>,
    pub points: &'a [PointTrace],
    pub milestones: &'a [MilestoneCurve],
    /// Target depth for deviation angles (m).
    pub depth: f64,
}

/// `0`, `0.1`, `-0.1`: shortest round-trip form.
pub fn fmt_coord(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

pub fn point_dir_name(dy: f64, dz: f64) -> String {
    format!("point_{}_{}", fmt_coord(dy), fmt_coord(dz))
}

fn cm(v: f64) -> String {
    format!("{:.4}", v * 100.0)
}

fn stats_line(dy: &str, dz: &str, r: &EyeStats, l: &EyeStats) -> String {
    [
        dy.to_string(),
        dz.to_string(),
        cm(r.mean),
        cm(l.mean),
        cm(r.max),
        cm(l.max),
        cm(r.min),
        cm(l.min),
        cm(r.std),
        cm(l.std),
    ]
    .join(",")
}

pub fn stats_csv(stats: &FixationStats) -> String {
    let mut out = format!("{STATS_HEADER}\n");
    for row in &stats.points {
        let (dy, dz) = row.point.unwrap_or((f64::NAN, f64::NAN));
        out.push_str(&stats_line(&fmt_coord(dy), &fmt_coord(dz), &row.right, &row.left));
        out.push('\n');
    }
    out
}

pub fn overall_csv(overall: &StatsRow) -> String {
    format!("{STATS_HEADER}\n{}\n", stats_line("all", "all", &overall.right, &overall.left))
}

/// Pointwise mean and population std across the values present at each index.
fn pointwise<F>(n_episodes: usize, len: usize, get: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(usize, usize) -> Option<f64>,
{
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for t in 0..len {
        let vals: Vec<f64> = (0..n_episodes).filter_map(|e| get(e, t)).collect();
        if vals.is_empty() {
            mean.push(f64::NAN);
            std.push(f64::NAN);
            continue;
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        mean.push(m);
        std.push((vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt());
    }
    (mean, std)
}

/// Per-step distance table of one point, in cm.
pub fn distance_series(p: &PointTrace) -> Series {
    let len = p.episodes.iter().map(|e| e.len()).max().unwrap_or(0);
    let n = p.episodes.len();
    let (rm, rs) = pointwise(n, len, |e, t| p.episodes[e].dist_r.get(t).map(|d| d * 100.0));
    let (lm, ls) = pointwise(n, len, |e, t| p.episodes[e].dist_l.get(t).map(|d| d * 100.0));
    Series {
        x_label: "step".into(),
        x: (1..=len).map(|s| s as f64).collect(),
        columns: vec![
            ("r_mean".into(), rm),
            ("r_std".into(), rs),
            ("l_mean".into(), lm),
            ("l_std".into(), ls),
        ],
    }
}

pub fn muscle_labels() -> Vec<String> {
    ["R", "L"]
        .iter()
        .flat_map(|side| MuscleKind::ALL.iter().map(move |k| format!("{side}_{}", k.as_str())))
        .collect()
}

/// Per-step activation table of one point.
pub fn activation_series(p: &PointTrace) -> Series {
    let len = p.episodes.iter().map(|e| e.len()).max().unwrap_or(0);
    let n = p.episodes.len();
    let mut columns = Vec::with_capacity(2 * ACTION_DIM);
    for (m, label) in muscle_labels().into_iter().enumerate() {
        let (mean, std) = pointwise(n, len, |e, t| p.episodes[e].activations.get(t).map(|a| a[m]));
        columns.push((format!("{label}_mean"), mean));
        columns.push((format!("{label}_std"), std));
    }
    Series {
        x_label: "step".into(),
        x: (1..=len).map(|s| s as f64).collect(),
        columns,
    }
}

/// Mean and std of greedy cumulative reward per milestone.
pub fn milestone_series(curves: &[MilestoneCurve]) -> Series {
    let mut episode = Vec::new();
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for c in curves {
        let cum = c.cumulative();
        let n = cum.len().max(1) as f64;
        let m = cum.iter().sum::<f64>() / n;
        episode.push(c.train_episode as f64);
        mean.push(m);
        std.push((cum.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt());
    }
    Series {
        x_label: "milestone".into(),
        x: (1..=curves.len()).map(|i| i as f64).collect(),
        columns: vec![
            ("train_episode".into(), episode),
            ("reward_mean".into(), mean),
            ("reward_std".into(), std),
        ],
    }
}

/// Per-step greedy reward of every milestone, averaged over its episodes.
pub fn milestone_step_series(curves: &[MilestoneCurve]) -> Series {
    let len = curves
        .iter()
        .flat_map(|c| c.rewards.iter().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut columns = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let (m, s) = pointwise(c.rewards.len(), len, |e, t| c.rewards[e].get(t).copied());
        columns.push((format!("m{}_mean", i + 1), m));
        columns.push((format!("m{}_std", i + 1), s));
    }
    Series {
        x_label: "step".into(),
        x: (1..=len).map(|s| s as f64).collect(),
        columns,
    }
}

/// Plot title and axis labels for each known table.
fn plot_labels(file_stem: &str, context: &str) -> Option<(String, &'static str, &'static str)> {
    match file_stem {
        "distances" => Some((format!("POG distance {context}"), "step", "distance (cm)")),
        "activations" => Some((format!("Muscle activation {context}"), "step", "activation")),
        "milestones" => Some(("Greedy cumulative reward per milestone".into(), "milestone", "cumulative reward")),
        "milestone_steps" => Some(("Greedy reward per step".into(), "step", "reward")),
        _ => None,
    }
}

fn write(path: &Path, contents: &str, written: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    written.push(path.to_path_buf());
    Ok(())
}

fn mkdir(path: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_table(dir: &Path, stem: &str, context: &str, s: &Series, written: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    write(&dir.join(format!("{stem}.csv")), &s.to_csv(), written)?;
    if let Some((title, xl, yl)) = plot_labels(stem, context) {
        write(&dir.join(format!("{stem}.svg")), &line_plot(&title, xl, yl, &s.x, &s.bands()), written)?;
    }
    Ok(())
}

/// Text summary comparing the run with the reference table.
pub fn summary_text(stats: &FixationStats, depth: f64) -> String {
    let o = &stats.overall;
    let pooled_mean = (o.right.mean + o.left.mean) / 2.0;
    let mut s = String::new();
    let _ = writeln!(s, "samples: {}", o.samples);
    let _ = writeln!(s, "failed episodes: {}", stats.failed_episodes);
    let _ = writeln!(
        s,
        "overall mean distance (cm): right {:.2}, left {:.2}, both {:.2}",
        o.right.mean * 100.0,
        o.left.mean * 100.0,
        pooled_mean * 100.0
    );
    let _ = writeln!(
        s,
        "mean deviation angle (deg): right {:.2}, left {:.2}, both {:.2}",
        deviation_angle(o.right.mean, depth),
        deviation_angle(o.left.mean, depth),
        deviation_angle(pooled_mean, depth)
    );
    let r = REFERENCE_OVERALL;
    let _ = writeln!(
        s,
        "reference overall (cm): right mean {}, left mean {}, std {}/{}; reference angle {} +- {} deg",
        r[0], r[1], r[6], r[7], REFERENCE_ANGLE_DEG.0, REFERENCE_ANGLE_DEG.1
    );
    s
}

/// Writes the report tree under `out_dir`; returns the files written.
pub fn emit_report(out_dir: &Path, inputs: &ReportInputs) -> Result<Vec<PathBuf>, EvalError> {
    mkdir(out_dir)?;
    let mut written = Vec::new();
    if let Some(stats) = inputs.stats {
        write(&out_dir.join("stats.csv"), &stats_csv(stats), &mut written)?;
        write(&out_dir.join("overall.csv"), &overall_csv(&stats.overall), &mut written)?;
        write(&out_dir.join("summary.txt"), &summary_text(stats, inputs.depth), &mut written)?;
    }
    for p in inputs.points {
        let dir = out_dir.join(point_dir_name(p.dy, p.dz));
        mkdir(&dir)?;
        let context = format!("(dy {}, dz {})", fmt_coord(p.dy), fmt_coord(p.dz));
        write_table(&dir, "distances", &context, &distance_series(p), &mut written)?;
        write_table(&dir, "activations", &context, &activation_series(p), &mut written)?;
    }
    if !inputs.milestones.is_empty() {
        write_table(out_dir, "milestones", "", &milestone_series(inputs.milestones), &mut written)?;
        write_table(out_dir, "milestone_steps", "", &milestone_step_series(inputs.milestones), &mut written)?;
    }
    Ok(written)
}

/// Re-renders every SVG from the CSV tables found in a report tree.
pub fn regenerate_plots(report_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let mut dirs = vec![report_dir.to_path_buf()];
    let entries = fs::read_dir(report_dir).map_err(|source| EvalError::Io {
        path: report_dir.to_path_buf(),
        source,
    })?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    dirs.extend(subdirs);
    let mut written = Vec::new();
    for dir in dirs {
        let context = dir
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("point_"))
            .map(|n| match n.rsplit_once('_') {
                Some((dy, dz)) => format!("(dy {dy}, dz {dz})"),
                None => n.to_string(),
            })
            .unwrap_or_default();
        for stem in ["distances", "activations", "milestones", "milestone_steps"] {
            let csv = dir.join(format!("{stem}.csv"));
            if !csv.exists() {
                continue;
            }
            let text = fs::read_to_string(&csv).map_err(|source| EvalError::Io {
                path: csv.clone(),
                source,
            })?;
            let s = parse_series_csv(&text).map_err(|e| EvalError::Series {
                path: csv.clone(),
                reason: e.to_string(),
            })?;
            let (title, xl, yl) = plot_labels(stem, &context).expect("known table");
            write(&dir.join(format!("{stem}.svg")), &line_plot(&title, xl, yl, &s.x, &s.bands()), &mut written)?;
        }
    }
    Ok(written)
}
