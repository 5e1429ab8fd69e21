//! Cross-product sweeps over methods, annotation ratios, seeds and reward
//! hyperparameters, with per-run directories and CSV summaries.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::run::{partial_view, run_experiment, Method, Split};
use crate::datagen::Dataset;
use crate::error::{MlpacError, Result};
use crate::trainer::TrainConfig;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Clone, Debug)]
pub struct Cell {
    pub method: Method,
    pub ratio: f64,
    pub seed: u64,
    pub rho: f64,
    pub w0: f64,
}

impl Cell {
    fn dir_name(&self) -> String {
        format!(
            "{}_r{}_s{}_rho{}_w{}",
            self.method.tag(),
            self.ratio,
            self.seed,
            self.rho,
            self.w0
        )
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub cell: Cell,
    pub scores: Option<Scores>,
    pub wall_seconds: f64,
    pub status: String,
}

#[derive(Clone, Copy, Debug)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map: Option<f64>,
}

pub struct SweepPlan {
    pub methods: Vec<Method>,
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Empty means "use the base config's value".
    pub rhos: Vec<f64>,
    pub w0s: Vec<f64>,
}

impl SweepPlan {
    /// Cells in method, ratio, rho, w0, seed order.
    pub fn cells(&self, base: &TrainConfig) -> Vec<Cell> {
        let rhos = if self.rhos.is_empty() {
            vec![base.reward.rho]
        } else {
            self.rhos.clone()
        };
        let w0s = if self.w0s.is_empty() {
            vec![base.reward.w0]
        } else {
            self.w0s.clone()
        };
        let mut cells = Vec::new();
        for &method in &self.methods {
            for &ratio in &self.ratios {
                for &rho in &rhos {
                    for &w0 in &w0s {
                        for &seed in &self.seeds {
                            cells.push(Cell {
                                method,
                                ratio,
                                seed,
                                rho,
                                w0,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

fn run_cell(data: &Dataset, cell: &Cell, base: &TrainConfig, split: Split, root: &Path) -> Row {
    let start = Instant::now();
    let outcome = (|| {
        let mut config = base.clone();
        config.seed = cell.seed;
        config.reward.rho = cell.rho;
        config.reward.w0 = cell.w0;
        let partial = partial_view(data, Some(cell.ratio), cell.seed)?;
        run_experiment(
            &partial,
            cell.method,
            &config,
            split,
            &root.join(cell.dir_name()),
        )
    })();
    let wall_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(m) => {
            let r = m.headline();
            Row {
                cell: cell.clone(),
                scores: Some(Scores {
                    precision: r.precision,
                    recall: r.recall,
                    f1: r.f1,
                    map: r.map,
                }),
                wall_seconds,
                status: "ok".into(),
            }
        }
        Err(e) => Row {
            cell: cell.clone(),
            scores: None,
            wall_seconds,
            status: format!("error: {e}"),
        },
    }
}

/// Run every cell with at most `jobs` concurrent runs. Rows come back in cell order.
pub fn run_sweep(
    data: &Dataset,
    cells: &[Cell],
    base: &TrainConfig,
    split: Split,
    jobs: usize,
    out: &Path,
) -> Result<Vec<Row>> {
    let runs = out.join("runs");
    std::fs::create_dir_all(&runs).map_err(|e| MlpacError::io(&runs, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| MlpacError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(data, c, base, split, &runs))
            .collect()
    }))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> MlpacError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => MlpacError::io(path, io),
        other => MlpacError::Input(format!("{}: {other:?}", path.display())),
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_summary(rows: &[Row], path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record([
        "method",
        "ratio",
        "seed",
        "P",
        "R",
        "F1",
        "mAP",
        "wall_seconds",
        "rho",
        "w0",
        "status",
    ])
    .map_err(&err)?;
    for row in rows {
        let c = &row.cell;
        let (p, r, f, m) = match row.scores {
            Some(s) => (
                fmt6(s.precision),
                fmt6(s.recall),
                fmt6(s.f1),
                s.map.map(fmt6).unwrap_or_default(),
            ),
            None => Default::default(),
        };
        w.write_record([
            c.method.tag().to_string(),
            c.ratio.to_string(),
            c.seed.to_string(),
            p,
            r,
            f,
            m,
            format!("{:.3}", row.wall_seconds),
            c.rho.to_string(),
            c.w0.to_string(),
            row.status.clone(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| MlpacError::io(path, e))
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug)]
pub struct AggregateRow {
    pub method: String,
    pub ratio: f64,
    pub rho: f64,
    pub w0: f64,
    pub runs: usize,
    pub failed: usize,
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    pub f1: (f64, f64),
    pub map: (f64, f64),
    /// Highest mean F1 among the rho values of its (method, ratio, w0) group.
    pub best_rho: bool,
}

/// Per-cell statistics across seeds. Failed runs are counted but not averaged.
pub fn aggregate(rows: &[Row]) -> Vec<AggregateRow> {
    // groups in order of first appearance
    let mut groups: Vec<(String, Vec<&Row>)> = Vec::new();
    for row in rows {
        let c = &row.cell;
        let key = format!("{}|{}|{}|{}", c.method.tag(), c.ratio, c.rho, c.w0);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(row),
            None => groups.push((key, vec![row])),
        }
    }

    let mut out: Vec<AggregateRow> = groups
        .into_iter()
        .map(|(_, members)| {
            let c = &members[0].cell;
            let ok: Vec<Scores> = members.iter().filter_map(|r| r.scores).collect();
            let col = |f: fn(&Scores) -> f64| mean_std(&ok.iter().map(f).collect::<Vec<_>>());
            let maps: Vec<f64> = ok.iter().filter_map(|s| s.map).collect();
            AggregateRow {
                method: c.method.tag().to_string(),
                ratio: c.ratio,
                rho: c.rho,
                w0: c.w0,
                runs: members.len(),
                failed: members.len() - ok.len(),
                precision: col(|s| s.precision),
                recall: col(|s| s.recall),
                f1: col(|s| s.f1),
                map: mean_std(&maps),
                best_rho: false,
            }
        })
        .collect();

    // argmax of mean F1 over rho, first maximizer wins
    let mut best: Vec<((String, u64, u64), usize)> = Vec::new();
    for (i, a) in out.iter().enumerate() {
        if a.f1.0.is_nan() {
            continue;
        }
        let key = (a.method.clone(), a.ratio.to_bits(), a.w0.to_bits());
        match best.iter_mut().find(|(k, _)| *k == key) {
            Some((_, j)) if out[*j].f1.0 >= a.f1.0 => {}
            Some((_, j)) => *j = i,
            None => best.push((key, i)),
        }
    }
    for (_, j) in best {
        out[j].best_rho = true;
    }
    out
}

pub fn write_aggregate(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record([
        "method", "ratio", "rho", "w0", "runs", "failed", "P_mean", "P_std", "R_mean", "R_std",
        "F1_mean", "F1_std", "mAP_mean", "mAP_std", "best_rho",
    ])
    .map_err(&err)?;
    let num = |v: f64| if v.is_nan() { String::new() } else { fmt6(v) };
    for a in rows {
        w.write_record([
            a.method.clone(),
            a.ratio.to_string(),
            a.rho.to_string(),
            a.w0.to_string(),
            a.runs.to_string(),
            a.failed.to_string(),
            num(a.precision.0),
            num(a.precision.1),
            num(a.recall.0),
            num(a.recall.1),
            num(a.f1.0),
            num(a.f1.1),
            num(a.map.0),
            num(a.map.1),
            if a.best_rho { "*" } else { "" }.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| MlpacError::io(path, e))
}

pub fn output_paths(out: &Path) -> (PathBuf, PathBuf) {
    (out.join(SUMMARY_FILE), out.join(AGGREGATE_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, ratio: f64, seed: u64, rho: f64, f1: Option<f64>) -> Row {
        Row {
            cell: Cell {
                method,
                ratio,
                seed,
                rho,
                w0: 10.0,
            },
            scores: f1.map(|f| Scores {
                precision: f,
                recall: f,
                f1: f,
                map: Some(f),
            }),
            wall_seconds: 0.0,
            status: if f1.is_some() { "ok" } else { "error: x" }.into(),
        }
    }

    #[test]
    fn cross_product_size() {
        let plan = SweepPlan {
            methods: vec![Method::Mlpac, Method::Negative],
            ratios: vec![0.1, 0.3, 0.5],
            seeds: vec![1, 2, 3],
            rhos: vec![],
            w0s: vec![],
        };
        assert_eq!(plan.cells(&TrainConfig::default()).len(), 18);
        let plan = SweepPlan {
            rhos: vec![0.1, 0.5],
            w0s: vec![5.0, 7.0, 12.0],
            ..plan
        };
        assert_eq!(plan.cells(&TrainConfig::default()).len(), 108);
    }

    #[test]
    fn mean_std_across_seeds() {
        let (m, s) = mean_std(&[0.5, 0.7, 0.9]);
        assert!((m - 0.7).abs() < 1e-15);
        assert!((s - 0.2).abs() < 1e-15);
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
    }

    #[test]
    fn aggregate_skips_failures_and_marks_best_rho() {
        let rows = vec![
            row(Method::Mlpac, 0.1, 1, 0.2, Some(0.4)),
            row(Method::Mlpac, 0.1, 2, 0.2, Some(0.6)),
            row(Method::Mlpac, 0.1, 1, 0.4, Some(0.7)),
            row(Method::Mlpac, 0.1, 2, 0.4, None),
            row(Method::Mlpac, 0.1, 1, 0.6, Some(0.7)),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 3);
        assert_eq!((agg[1].runs, agg[1].failed), (2, 1));
        assert!((agg[0].f1.0 - 0.5).abs() < 1e-15);
        // tie between rho 0.4 and 0.6: first wins
        assert_eq!(
            agg.iter().map(|a| a.best_rho).collect::<Vec<_>>(),
            vec![false, true, false]
        );
    }
}
