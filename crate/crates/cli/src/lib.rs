//! Command-line front end: exact solving, simulation, closed forms, minimal
//! sample counts, parameter sweeps and the cross-verification report.

pub mod sweep;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lccp_core::formulas::{
    ccp_expected_full, ccp_expected_partial, conjectured_2lccp_expected, harmonic, kp3_expected, min_samples,
    st1_expected, st1_tail, t1_expected_series, FormulaResult, Kp3Variant, Provenance, St1Variant,
};
use lccp_core::markov::{expected_complete_dist, tail_distribution};
use lccp_core::simulate::{compare_lccp_ccp, estimate, SimulationStats};
use lccp_core::{Error, Mode, RecoveryTarget, SampleSizeDist};
use serde::Serialize;

/// Exit status for a failed check on a proven statement.
pub const EXIT_FAILED_CHECK: i32 = 1;
/// Exit status for bad arguments or unsolvable requests.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lccp", version, about = "Labeled coupon collector: exact solvers, simulation and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact expected samples for complete recovery with sizes 1 and 2.
    Exact {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        dist: DistArgs,
        /// Also print P(T > t) for t = 0..=TAIL.
        #[arg(long)]
        tail: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Exact and simulated expectations over a grid of single-sample probabilities.
    Sweep {
        #[arg(long)]
        n: usize,
        /// `start:stop:step` or a comma-separated list of probabilities.
        #[arg(long)]
        grid: String,
        /// Replications per grid point; 0 skips simulation.
        #[arg(long, default_value_t = 0)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Cross-check closed forms, the oracle, the chain and the simulator.
    Verify {
        /// Largest n handed to the brute-force oracle (at most 7).
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 20_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Monte Carlo estimate of the number of samples until recovery.
    Simulate {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        dist: DistArgs,
        /// `complete`, `arbitrary:R` or `specific:C1,C2,...`.
        #[arg(long, default_value = "complete")]
        target: TargetSpec,
        /// Coupon and label sets are known before sampling.
        #[arg(long)]
        vertices_known: bool,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Also estimate plain collection of n - 1 coupons on the same draws.
        #[arg(long, conflicts_with_all = ["target", "vertices_known"])]
        compare_ccp: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate a closed form or series.
    Formula {
        #[arg(value_enum)]
        name: FormulaName,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// Target count for `ccp`.
        #[arg(long)]
        r: Option<usize>,
        /// Time index for `st1-tail`.
        #[arg(long)]
        t: Option<u32>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Minimal number of samples for complete recovery.
    MinSamples {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
pub struct DistArgs {
    /// Probability of a single-coupon sample (pairs otherwise).
    #[arg(long, conflicts_with = "dist")]
    pub p: Option<f64>,
    /// Sample-size distribution as JSON, e.g. '{"sizes":{"1":0.5,"2":0.5}}'.
    #[arg(long)]
    pub dist: Option<String>,
}

impl DistArgs {
    pub fn resolve(&self) -> Result<SampleSizeDist> {
        match (self.p, &self.dist) {
            (Some(p), None) => Ok(SampleSizeDist::kp(p)?),
            (None, Some(json)) => serde_json::from_str(json).context("parsing --dist"),
            _ => bail!("give exactly one of --p and --dist"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaName {
    Harmonic,
    Ccp,
    St1,
    St1Tail,
    T1,
    Kp3,
    Conjecture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Printed,
    Tailsum,
    Proofseries,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec(pub TargetShape);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetShape {
    Complete,
    Arbitrary(usize),
    Specific(Vec<usize>),
}

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let shape = match (head, rest) {
            ("complete", "") => TargetShape::Complete,
            ("arbitrary", r) => TargetShape::Arbitrary(r.parse().map_err(|_| format!("bad count {r:?}"))?),
            ("specific", ids) if !ids.is_empty() => TargetShape::Specific(
                ids.split(',')
                    .map(|c| c.trim().parse().map_err(|_| format!("bad coupon id {c:?}")))
                    .collect::<Result<_, _>>()?,
            ),
            _ => return Err(format!("expected complete, arbitrary:R or specific:IDS, got {s:?}")),
        };
        Ok(TargetSpec(shape))
    }
}

impl TargetSpec {
    pub fn with_mode(&self, mode: Mode) -> RecoveryTarget {
        match &self.0 {
            TargetShape::Complete => RecoveryTarget::complete(mode),
            TargetShape::Arbitrary(r) => RecoveryTarget::arbitrary(*r, mode),
            TargetShape::Specific(ids) => RecoveryTarget::specific(ids.iter().copied(), mode),
        }
    }
}

#[derive(Serialize)]
struct ExactReport {
    n: usize,
    p: f64,
    expected_complete: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct StatsRow<'a> {
    model: &'a str,
    reps: u64,
    mean: f64,
    std_error: f64,
    min: f64,
    q25: f64,
    median: f64,
    q75: f64,
    max: f64,
    seed: u64,
}

impl<'a> StatsRow<'a> {
    fn new(model: &'a str, s: &SimulationStats) -> Self {
        let f = s.five_number;
        StatsRow {
            model,
            reps: s.reps,
            mean: s.mean,
            std_error: s.std_error,
            min: f.min,
            q25: f.q25,
            median: f.median,
            q75: f.q75,
            max: f.max,
            seed: s.seed,
        }
    }
}

fn write_csv<W: Write, T: Serialize>(out: &mut W, rows: &[T]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn write_json<W: Write, T: Serialize + ?Sized>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn need<T>(value: Option<T>, flag: &str, name: FormulaName) -> Result<T> {
    value.ok_or_else(|| anyhow!("formula {name:?} needs --{flag}"))
}

fn formula(name: FormulaName, n: Option<usize>, p: Option<f64>, r: Option<usize>, t: Option<u32>, variant: Option<VariantArg>) -> Result<FormulaResult> {
    let baseline = |value| FormulaResult {
        value,
        provenance: Provenance::Baseline,
    };
    let n = || need(n, "n", name);
    Ok(match name {
        FormulaName::Harmonic => baseline(harmonic(n()?)),
        FormulaName::Ccp => match r {
            Some(r) => baseline(ccp_expected_partial(n()?, r)?),
            None => baseline(ccp_expected_full(n()?)),
        },
        FormulaName::St1 => {
            let v = match variant {
                None | Some(VariantArg::Tailsum) => St1Variant::TailSum,
                Some(VariantArg::Printed) => St1Variant::Printed,
                Some(VariantArg::Proofseries) => bail!("st1 variants are printed and tailsum"),
            };
            st1_expected(n()?, v)?
        }
        FormulaName::St1Tail => FormulaResult {
            value: st1_tail(n()?, need(t, "t", name)?)?,
            provenance: Provenance::ProofTailSum,
        },
        FormulaName::T1 => t1_expected_series(n()?)?,
        FormulaName::Kp3 => {
            let v = match variant {
                None | Some(VariantArg::Proofseries) => Kp3Variant::ProofSeries,
                Some(VariantArg::Printed) => Kp3Variant::Printed,
                Some(VariantArg::Tailsum) => bail!("kp3 variants are printed and proofseries"),
            };
            kp3_expected(need(p, "p", name)?, v)?
        }
        FormulaName::Conjecture => conjectured_2lccp_expected(n()?)?,
    })
}

/// Runs one command, returning the process exit status.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::Exact { n, dist, tail, format } => {
            let dist = dist.resolve()?;
            let expected = match expected_complete_dist(n, &dist) {
                Err(Error::UnsupportedHistory(_)) => {
                    bail!("support beyond {{1,2}} has no exact chain; use `simulate` instead")
                }
                other => other?,
            };
            let p = dist.as_kp().expect("support checked by the exact solver");
            let tail = tail.map(|t| tail_distribution(n, p, t)).transpose()?;
            match format {
                Format::Text => {
                    writeln!(out, "{expected}")?;
                    for (t, v) in tail.iter().flatten().enumerate() {
                        writeln!(out, "P(T > {t}) = {v}")?;
                    }
                }
                Format::Json => write_json(
                    out,
                    &ExactReport {
                        n,
                        p,
                        expected_complete: expected,
                        tail,
                    },
                )?,
                Format::Csv => {
                    let row = |t: Option<usize>, tail_prob: Option<f64>| ExactRow {
                        n,
                        p,
                        expected_complete: expected,
                        t,
                        tail_prob,
                    };
                    let rows: Vec<ExactRow> = match tail {
                        None => vec![row(None, None)],
                        Some(tail) => tail.iter().enumerate().map(|(t, &v)| row(Some(t), Some(v))).collect(),
                    };
                    write_csv(out, &rows)?
                }
            }
        }
        Command::Sweep {
            n,
            grid,
            reps,
            seed,
            out: path,
            format,
        } => {
            let rows = sweep::sweep(n, &sweep::parse_grid(&grid)?, reps, seed)?;
            let mut buf = Vec::new();
            match format {
                Format::Json => write_json(&mut buf, &rows)?,
                Format::Csv | Format::Text => write_csv(&mut buf, &rows)?,
            }
            match &path {
                Some(path) => std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?,
                None => out.write_all(&buf)?,
            }
        }
        Command::Verify {
            n_max,
            reps,
            seed,
            format,
        } => {
            let records = verify::verify(&verify::VerifyConfig { n_max, reps, seed })?;
            match format {
                Format::Text => {
                    for r in &records {
                        writeln!(out, "{:<7} [{:?}] {}: {}", r.status, r.kind, r.claim, r.detail)?;
                    }
                }
                Format::Csv => write_csv(out, &records)?,
                Format::Json => write_json(out, &records)?,
            }
            if records.iter().any(|r| r.status == verify::Status::Fail) {
                return Ok(EXIT_FAILED_CHECK);
            }
        }
        Command::Simulate {
            n,
            dist,
            target,
            vertices_known,
            reps,
            seed,
            compare_ccp,
            format,
        } => {
            let dist = dist.resolve()?;
            let rows = if compare_ccp {
                let (lccp, ccp) = compare_lccp_ccp(n, &dist, reps, seed)?;
                vec![("lccp", lccp), ("ccp", ccp)]
            } else {
                let mode = if vertices_known { Mode::VerticesKnown } else { Mode::VerticesUnknown };
                vec![("lccp", estimate(n, &dist, &target.with_mode(mode), reps, seed)?)]
            };
            match format {
                Format::Text => {
                    for (model, s) in &rows {
                        let f = s.five_number;
                        writeln!(
                            out,
                            "{model}: mean {} +- {} (reps {}, seed {}); min {} q25 {} median {} q75 {} max {}",
                            s.mean, s.std_error, s.reps, s.seed, f.min, f.q25, f.median, f.q75, f.max
                        )?;
                    }
                }
                Format::Csv => {
                    let flat: Vec<StatsRow> = rows.iter().map(|(m, s)| StatsRow::new(m, s)).collect();
                    write_csv(out, &flat)?
                }
                Format::Json if compare_ccp => write_json(
                    out,
                    &serde_json::json!({ "lccp": rows[0].1, "ccp": rows[1].1 }),
                )?,
                Format::Json => write_json(out, &rows[0].1)?,
            }
        }
        Command::Formula {
            name,
            n,
            p,
            r,
            t,
            variant,
            format,
        } => {
            let result = formula(name, n, p, r, t, variant)?;
            match format {
                Format::Text => writeln!(out, "{} ({})", result.value, result.provenance)?,
                Format::Csv => write_csv(out, &[result])?,
                Format::Json => write_json(out, &result)?,
            }
        }
        Command::MinSamples { n, dist, format } => {
            let m = min_samples(n, &dist.resolve()?)?;
            match format {
                Format::Text => writeln!(
                    out,
                    "{} {} (k_m = {}, effective k = {})",
                    m.value,
                    if m.proven { "proven" } else { "conjecture" },
                    m.k_m,
                    m.effective_k
                )?,
                Format::Csv => write_csv(out, &[m])?,
                Format::Json => write_json(out, &m)?,
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct ExactRow {
    n: usize,
    p: f64,
    expected_complete: f64,
    t: Option<usize>,
    tail_prob: Option<f64>,
}
