//! Runtime scaling harness: times image evaluation, service evaluation and
//! combination over synthetic catalogs of growing size and fits a quadratic
//! to the total time.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::GoalHierarchy;
use crate::catalog::{generate_synthetic_catalog, DependencyMode};
use crate::evaluation::{best_combination, combine, combine_par, evaluate_images, evaluate_services, CombinationWeights, EvaluationError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    Config(String),
    #[error("quadratic fit needs at least three distinct sizes")]
    DegenerateFit,
}

fn default_warmups() -> usize {
    2
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// (images, services) per row.
    pub sizes: Vec<(usize, usize)>,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Make every pair a dependency so no combination is filtered out.
    #[serde(default = "default_true")]
    pub skip_feasibility_filter: bool,
    /// Untimed runs per size before measuring.
    #[serde(default = "default_warmups")]
    pub warmups: usize,
    /// Value and sort pairs on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

impl Default for BenchConfig {
    /// 100 to 1000 images and services in steps of 100, 20 repetitions.
    fn default() -> Self {
        Self {
            sizes: (1..=10).map(|k| (100 * k, 100 * k)).collect(),
            repetitions: 20,
            seed: 7,
            skip_feasibility_filter: true,
            warmups: default_warmups(),
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.sizes.is_empty() {
            return Err(BenchError::Config("sizes must not be empty".into()));
        }
        if self.repetitions == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if let Some((m, n)) = self.sizes.iter().find(|(m, n)| *m == 0 || *n == 0) {
            return Err(BenchError::Config(format!("size ({m}, {n}) must have at least one image and one service")));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Generation,
    ImageEvaluation,
    ServiceEvaluation,
    Combination,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl PhaseStats {
    fn of(samples: &[f64]) -> Self {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { mean, min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub generation_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_evaluation: Option<PhaseStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_evaluation: Option<PhaseStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combination: Option<PhaseStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<PhaseStats>,
    /// Value of the best pair; identical across runs with the same seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_pair: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub m: usize,
    pub n: usize,
    pub phase: Phase,
    pub rep: usize,
    pub seconds: f64,
}

/// Least-squares fit `t = a2*s^2 + a1*s + a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub r_squared: f64,
}

impl QuadraticFit {
    pub fn predict(&self, s: f64) -> f64 {
        self.a2 * s * s + self.a1 * s + self.a0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Fit of mean total time against the image count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_fit: Option<QuadraticFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub summary: BenchSummary,
    pub samples: Vec<Sample>,
}

impl BenchReport {
    pub fn rows(&self) -> &[BenchRow] {
        &self.summary.rows
    }

    /// One line per timed sample, with header `m,n,phase,rep,seconds`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            w.serialize(s).expect("samples always serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
    }

    pub fn summary_toml(&self) -> String {
        toml::to_string_pretty(&self.summary).expect("bench summaries always serialize")
    }
}

struct Timings {
    image: f64,
    service: f64,
    combination: f64,
    total: f64,
    best: Option<(f64, String, String)>,
}

fn run_once(
    catalog: &crate::catalog::Catalog,
    image_h: &GoalHierarchy,
    service_h: &GoalHierarchy,
    cw: &CombinationWeights,
    parallel: bool,
) -> Result<Timings, EvaluationError> {
    let start = Instant::now();
    let images = evaluate_images(catalog, &[], image_h, 0)?;
    let t_image = start.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let services = evaluate_services(catalog, &[], service_h, 0)?;
    let t_service = t1.elapsed().as_secs_f64();
    let t2 = Instant::now();
    let combos = if parallel { combine_par(&images, &services, catalog, cw) } else { combine(&images, &services, catalog, cw) };
    let best = best_combination(&combos).ok().map(|b| (b.combined_value, b.image_id.to_string(), b.service_id.to_string()));
    let t_combination = t2.elapsed().as_secs_f64();
    let total = start.elapsed().as_secs_f64();
    drop(combos);
    Ok(Timings { image: t_image, service: t_service, combination: t_combination, total, best })
}

/// Runs the configured sweep. A failing size is reported in its row and the
/// remaining sizes still run.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mode = if cfg.skip_feasibility_filter { DependencyMode::CrossProduct } else { DependencyMode::SameProvider };
    let image_h = GoalHierarchy::default_image();
    let service_h = GoalHierarchy::default_service();
    let cw = CombinationWeights::default();
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    let mut samples = Vec::new();

    for &(m, n) in &cfg.sizes {
        let gen_start = Instant::now();
        let catalog = generate_synthetic_catalog(m, n, cfg.seed, mode);
        let generation_seconds = gen_start.elapsed().as_secs_f64();
        samples.push(Sample { m, n, phase: Phase::Generation, rep: 0, seconds: generation_seconds });
        let mut row = BenchRow {
            m,
            n,
            generation_seconds,
            image_evaluation: None,
            service_evaluation: None,
            combination: None,
            total: None,
            best_value: None,
            best_pair: None,
            error: None,
        };
        let catalog = match catalog {
            Ok(c) => c,
            Err(e) => {
                row.error = Some(e.to_string());
                rows.push(row);
                continue;
            }
        };

        let mut per_phase: [Vec<f64>; 4] = Default::default();
        let mut failure = None;
        for rep in 0..cfg.warmups + cfg.repetitions {
            match run_once(&catalog, &image_h, &service_h, &cw, cfg.parallel) {
                Ok(t) => {
                    if rep < cfg.warmups {
                        continue;
                    }
                    let rep = rep - cfg.warmups + 1;
                    for (i, (phase, secs)) in [
                        (Phase::ImageEvaluation, t.image),
                        (Phase::ServiceEvaluation, t.service),
                        (Phase::Combination, t.combination),
                        (Phase::Total, t.total),
                    ]
                    .into_iter()
                    .enumerate()
                    {
                        per_phase[i].push(secs);
                        samples.push(Sample { m, n, phase, rep, seconds: secs });
                    }
                    if let Some((v, i, s)) = t.best {
                        row.best_value = Some(v);
                        row.best_pair = Some((i, s));
                    }
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(e) = failure {
            row.error = Some(e);
        } else {
            row.image_evaluation = Some(PhaseStats::of(&per_phase[0]));
            row.service_evaluation = Some(PhaseStats::of(&per_phase[1]));
            row.combination = Some(PhaseStats::of(&per_phase[2]));
            row.total = Some(PhaseStats::of(&per_phase[3]));
        }
        rows.push(row);
    }

    let points: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.total.map(|t| (r.m as f64, t.mean))).collect();
    let total_fit = fit_quadratic(&points).ok();
    Ok(BenchReport { summary: BenchSummary { config: cfg.clone(), rows, total_fit }, samples })
}

/// Least-squares quadratic through `(size, seconds)` points. Sizes are
/// rescaled to [0, 1] before solving to keep the system well conditioned.
pub fn fit_quadratic(points: &[(f64, f64)]) -> Result<QuadraticFit, BenchError> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(BenchError::DegenerateFit);
    }
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let x = DMatrix::from_fn(points.len(), 3, |i, k| (points[i].0 / scale).powi(k as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let b = x.svd(true, true).solve(&y, 1e-12).map_err(|_| BenchError::DegenerateFit)?;
    let fit = QuadraticFit { a2: b[2] / (scale * scale), a1: b[1] / scale, a0: b[0], r_squared: 0.0 };

    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - fit.predict(p.0)).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    Ok(QuadraticFit { r_squared, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_quadratic() {
        let pts: Vec<_> = (1..=10).map(|s| (s as f64 * 100.0, 2.0 * (s as f64 * 100.0).powi(2))).collect();
        let fit = fit_quadratic(&pts).unwrap();
        assert!((fit.a2 - 2.0).abs() < 1e-9, "{fit:?}");
        assert!(fit.a1.abs() < 1e-6 && fit.a0.abs() < 1e-3, "{fit:?}");
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_line() {
        let pts: Vec<_> = (1..=10).map(|s| (s as f64, 3.0 * s as f64 + 1.0)).collect();
        let fit = fit_quadratic(&pts).unwrap();
        assert!(fit.a2.abs() < 1e-9, "{fit:?}");
        assert!((fit.a1 - 3.0).abs() < 1e-9 && (fit.a0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_quadratic_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (a2, a1, a0) = (3e-6, 2e-4, 5e-3);
        let pts: Vec<_> = (1..=10)
            .map(|k| {
                let s = 100.0 * k as f64;
                let t = a2 * s * s + a1 * s + a0;
                (s, t * (1.0 + rng.random_range(-0.05..=0.05)))
            })
            .collect();
        let fit = fit_quadratic(&pts).unwrap();
        assert!(fit.r_squared >= 0.98, "{fit:?}");
        assert!((fit.a2 - a2).abs() / a2 < 0.10, "{fit:?}");
    }

    #[test]
    fn degenerate_sizes() {
        assert_eq!(fit_quadratic(&[(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)]), Err(BenchError::DegenerateFit));
        assert_eq!(fit_quadratic(&[(1.0, 1.0), (2.0, 2.0)]), Err(BenchError::DegenerateFit));
    }

    #[test]
    fn config_validation() {
        assert!(BenchConfig { sizes: vec![], ..BenchConfig::default() }.validate().is_err());
        assert!(BenchConfig { repetitions: 0, ..BenchConfig::default() }.validate().is_err());
        assert!(BenchConfig::parse("sizes = [[10, 10]]\nrepetitions = 1\n").is_ok());
        assert!(BenchConfig::parse("sizes = [[0, 10]]\nrepetitions = 1\n").is_err());
        assert_eq!(BenchConfig::default().sizes.len(), 10);
    }

    #[test]
    fn single_row_report() {
        let cfg = BenchConfig { sizes: vec![(100, 100)], repetitions: 2, warmups: 0, ..BenchConfig::default() };
        let report = run_bench(&cfg).unwrap();
        assert_eq!(report.rows().len(), 1);
        let row = &report.rows()[0];
        assert!(row.total.unwrap().mean > 0.0);
        assert!(row.error.is_none());
        assert!(report.summary.total_fit.is_none());
        let csv = report.to_csv();
        assert!(csv.starts_with("m,n,phase,rep,seconds\n"));
        // generation + 2 reps x 4 phases
        assert_eq!(csv.lines().count(), 1 + 1 + 8);
    }

    #[test]
    fn values_are_deterministic() {
        let cfg = BenchConfig { sizes: vec![(20, 30), (40, 10)], repetitions: 1, warmups: 0, ..BenchConfig::default() };
        let a = run_bench(&cfg).unwrap();
        let b = run_bench(&BenchConfig { parallel: true, ..cfg }).unwrap();
        for (x, y) in a.rows().iter().zip(b.rows()) {
            assert_eq!(x.best_value, y.best_value);
            assert_eq!(x.best_pair, y.best_pair);
        }
    }

    #[test]
    fn summary_round_trips() {
        let cfg = BenchConfig { sizes: vec![(5, 5), (10, 10), (15, 15)], repetitions: 1, warmups: 0, ..BenchConfig::default() };
        let report = run_bench(&cfg).unwrap();
        let back: BenchSummary = toml::from_str(&report.summary_toml()).unwrap();
        assert_eq!(back.rows.len(), 3);
        assert!(back.total_fit.is_some());
    }
}
