use anyhow::{bail, ensure, Context, Result};
use lccp_core::formulas::ccp_expected_full;
use lccp_core::markov::expected_complete;
use lccp_core::simulate::estimate;
use lccp_core::{Error, Mode, RecoveryTarget, SampleSizeDist};
use serde::Serialize;

/// Decimal places kept in grid points.
pub const GRID_DECIMALS: usize = 12;

/// Rounds to [`GRID_DECIMALS`] places, landing on the float nearest the decimal.
fn snap(x: f64) -> f64 {
    let snapped: f64 = format!("{x:.GRID_DECIMALS$}").parse().expect("formatted float parses");
    // adding zero turns -0.0 into 0.0
    snapped + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub expected_exact: f64,
    /// Linear interpolation between the `p = 0` and `p = 1` expectations;
    /// empty when either endpoint is unrecoverable.
    pub convex_baseline: Option<f64>,
    /// `expected_exact / (n * H_n)`.
    pub normalized_exact: f64,
    pub sim_mean: Option<f64>,
    pub sim_std_error: Option<f64>,
    pub sim_min: Option<f64>,
    pub sim_q25: Option<f64>,
    pub sim_median: Option<f64>,
    pub sim_q75: Option<f64>,
    pub sim_max: Option<f64>,
    pub reps: u64,
    pub seed: u64,
}

/// Parses `start:stop:step` or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let number = |s: &str| -> Result<f64> { s.trim().parse().with_context(|| format!("bad grid value {s:?}")) };
    let points: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        ensure!(parts.len() == 3, "range grid must be start:stop:step, got {spec:?}");
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        ensure!(step > 0.0, "grid step must be positive");
        ensure!(start <= stop, "grid start exceeds stop");
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| snap(start + i as f64 * step)).collect()
    } else {
        spec.split(',').map(|s| number(s).map(snap)).collect::<Result<_>>()?
    };
    if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        bail!("grid point {p} outside [0, 1]");
    }
    ensure!(!points.is_empty(), "empty grid");
    Ok(points)
}

fn endpoint(n: usize, p: f64) -> Result<Option<f64>> {
    match expected_complete(n, p) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Unrecoverable(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Exact expectation, convex baseline and (for `reps > 0`) simulated box-plot
/// statistics at every grid point, in grid order.
pub fn sweep(n: usize, grid: &[f64], reps: u64, seed: u64) -> Result<Vec<SweepRow>> {
    let pairs_only = endpoint(n, 0.0)?;
    let singles_only = endpoint(n, 1.0)?;
    let target = RecoveryTarget::complete(Mode::VerticesUnknown);
    let norm = ccp_expected_full(n);
    grid.iter()
        .map(|&p| {
            let expected_exact = expected_complete(n, p).with_context(|| format!("exact solve at p = {p}"))?;
            let convex_baseline = pairs_only
                .zip(singles_only)
                .map(|(e0, e1)| p * e1 + (1.0 - p) * e0);
            let stats = if reps > 0 {
                Some(estimate(n, &SampleSizeDist::kp(p)?, &target, reps, seed)?)
            } else {
                None
            };
            Ok(SweepRow {
                n,
                p,
                expected_exact,
                convex_baseline,
                normalized_exact: expected_exact / norm,
                sim_mean: stats.map(|s| s.mean),
                sim_std_error: stats.map(|s| s.std_error),
                sim_min: stats.map(|s| s.five_number.min),
                sim_q25: stats.map(|s| s.five_number.q25),
                sim_median: stats.map(|s| s.five_number.median),
                sim_q75: stats.map(|s| s.five_number.q75),
                sim_max: stats.map(|s| s.five_number.max),
                reps,
                seed,
            })
        })
        .collect()
}
