//! The deflation driver: per-level rank cuts, border draws, bordered
//! solves, and the report that records the whole run.

use std::sync::Arc;
use std::time::Instant;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use super::border::{draw_border, inf_norm, solve_bordered_detailed};
use super::rank::{numerical_rank, RankResult};
use super::{DeflatableSystem, DeflatedSystem};
use crate::error::{Error, Result};

/// A point counts as a solution when `‖F(x)‖∞` stays below this.
pub const SOLUTION_RESIDUAL_TOL: f64 = 1e-6;

/// Knobs of a deflation run.
#[derive(Debug, Clone, Serialize)]
pub struct DeflationConfig {
    /// Number of deflation steps; the sequence gets `max_steps + 1` values.
    pub max_steps: usize,
    /// Seed for the border draws; identical seeds reproduce runs exactly.
    pub rng_seed: u64,
    /// Relative singular-value threshold of the rank cut.
    pub rank_rel_tol: f64,
    /// Relative residual allowed on the bordered solve.
    pub bordered_residual_tol: f64,
    /// Border draw attempts before declaring the input degenerate.
    pub max_border_retries: usize,
    /// Stop extending once the last three nullities agree.
    pub early_stop: bool,
}

impl Default for DeflationConfig {
    fn default() -> Self {
        Self {
            max_steps: 3,
            rng_seed: 0,
            rank_rel_tol: 1e-8,
            bordered_residual_tol: 1e-8,
            max_border_retries: 3,
            early_stop: false,
        }
    }
}

impl DeflationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { rng_seed: seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank_rel_tol <= 0.0 || self.bordered_residual_tol <= 0.0 {
            return Err(Error::InvalidInput(
                "tolerances must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything recorded about one level of the run.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Equations × variables of the level-`i` system.
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// `n_i = cols − rank`.
    pub nullity: usize,
    pub singular_values: Vec<f64>,
    pub gap_ratio: f64,
    pub tolerance_used: f64,
    /// Rank cut not backed by a clear spectral gap.
    pub borderline: bool,
    /// `‖F_i(x)‖∞` at this level's extended point.
    pub eval_residual: f64,
    /// Residual of the bordered solve that extended this level to the next
    /// one (absent on the last level).
    pub bordered_residual: Option<f64>,
    /// Draw attempts the border needed (absent on the last level).
    pub border_attempts: Option<u32>,
    pub wall_secs: f64,
}

/// The record of a full deflation run at one solution.
#[derive(Debug, Clone, Serialize)]
pub struct DeflationReport {
    /// `(n₀, …, n_s)`.
    pub sequence: Vec<usize>,
    pub levels: Vec<LevelRecord>,
    pub seed: u64,
    pub base_n_vars: usize,
    pub base_n_eqs: usize,
    /// False when some level failed; `sequence` and `levels` then hold the
    /// completed prefix and `failure` says what went wrong.
    pub complete: bool,
    pub failure: Option<String>,
}

impl DeflationReport {
    /// `n_s`, the last recorded nullity.
    pub fn final_nullity(&self) -> Option<usize> {
        self.sequence.last().copied()
    }

    /// Whether `n_{i+1} ≤ n_i` held at every recorded level.
    pub fn is_monotone(&self) -> bool {
        self.sequence.windows(2).all(|w| w[1] <= w[0])
    }

    /// Levels whose rank cut was flagged borderline.
    pub fn borderline_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .filter(|l| l.borderline)
            .map(|l| l.level)
            .collect()
    }

    /// Checks the dimension bookkeeping `N_i = 2^i·n` and
    /// `M_{i+1} = 2·M_i + n_i`.
    pub fn bookkeeping_ok(&self) -> bool {
        for (i, l) in self.levels.iter().enumerate() {
            if l.level != i || l.cols != (1usize << i) * self.base_n_vars {
                return false;
            }
            let expect_rows = if i == 0 {
                self.base_n_eqs
            } else {
                2 * self.levels[i - 1].rows + self.levels[i - 1].nullity
            };
            if l.rows != expect_rows {
                return false;
            }
        }
        true
    }
}

/// Result of a single deflation step.
pub struct DeflateStep {
    /// The expanded system (block-structured or symbolic).
    pub system: Arc<dyn DeflatableSystem>,
    /// The extended point of doubled length.
    pub point: Vec<Complex64>,
    /// Nullity of the parent Jacobian (`n_i`), which sized the border.
    pub parent_nullity: usize,
    /// Nullity of the expanded Jacobian at the extended point (`n_{i+1}`).
    pub nullity: usize,
    /// Rank evidence for `nullity`.
    pub rank: RankResult,
    /// Residual of the bordered solve.
    pub bordered_residual: f64,
}

/// Runs one deflation step on `sys` at `x`, drawing the border from a
/// fresh RNG seeded with `cfg.rng_seed`.
///
/// The point must satisfy `‖F(x)‖∞ ≤ 1e-6`; the returned step carries the
/// expanded system, the doubled point, and the new nullity.
pub fn deflate_once(
    sys: Arc<dyn DeflatableSystem>,
    x: &[Complex64],
    cfg: &DeflationConfig,
) -> Result<DeflateStep> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    check_solution(&*sys, x)?;
    let jac = sys.jac(x)?;
    let rank = numerical_rank(jac.view(), cfg.rank_rel_tol)?;
    let nullity = rank.nullity(sys.n_vars());
    let (next, attempts) = extend_level(sys, x, &jac, nullity, cfg, &mut rng)?;
    let _ = attempts;
    let jac_next = next.system.jac(&next.point)?;
    let rank_next = numerical_rank(jac_next.view(), cfg.rank_rel_tol)?;
    let n_next = rank_next.nullity(next.system.n_vars());
    Ok(DeflateStep {
        system: next.system,
        point: next.point,
        parent_nullity: nullity,
        nullity: n_next,
        rank: rank_next,
        bordered_residual: next.bordered_residual,
    })
}

struct Extension {
    system: Arc<dyn DeflatableSystem>,
    point: Vec<Complex64>,
    bordered_residual: f64,
}

/// Draws a border, solves the bordered system, and wraps the next level,
/// redrawing when the solve misses its residual tolerance.
fn extend_level(
    sys: Arc<dyn DeflatableSystem>,
    x: &[Complex64],
    jac: &Array2<Complex64>,
    nullity: usize,
    cfg: &DeflationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Extension, u32)> {
    let cols = sys.n_vars();
    let mut attempts = 0u32;
    let mut last_err = None;
    while attempts < cfg.max_border_retries.max(1) as u32 {
        attempts += 1;
        let (border, rhs) = draw_border(rng, nullity, cols, &jac.view(), cfg)?;
        match solve_bordered_detailed(
            &jac.view(),
            &border.view(),
            &rhs.view(),
            cfg.bordered_residual_tol,
        ) {
            Ok((y, bordered_residual)) => {
                let system: Arc<dyn DeflatableSystem> = if sys.degree_bound() <= 3 {
                    Arc::new(DeflatedSystem::new(sys.clone(), border, rhs)?)
                } else {
                    Arc::new(sys.deflate_symbolic(&border.view(), &rhs.view())?)
                };
                let mut point = x.to_vec();
                point.extend(y.iter());
                return Ok((Extension { system, point, bordered_residual }, attempts));
            }
            Err(e @ Error::Numerical(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Numerical("bordered solve failed with no attempts".into())
    }))
}

fn check_solution(sys: &dyn DeflatableSystem, x: &[Complex64]) -> Result<f64> {
    let residual = inf_norm(sys.eval(x)?.view());
    if residual > SOLUTION_RESIDUAL_TOL {
        return Err(Error::NotASolution { residual, tolerance: SOLUTION_RESIDUAL_TOL });
    }
    Ok(residual)
}

/// Runs `cfg.max_steps` deflation steps at `x` and records the sequence.
///
/// Returns `Err` only when the input itself is unusable (dimension
/// mismatch, not a solution); once level 0 is recorded, later failures
/// produce a partial report with `complete = false`.
pub fn deflation_sequence(
    sys: Arc<dyn DeflatableSystem>,
    x: &[Complex64],
    cfg: &DeflationConfig,
) -> Result<DeflationReport> {
    deflation_sequence_with_progress(sys, x, cfg, &mut |_| {})
}

/// As [`deflation_sequence`], invoking `progress` after each level.
pub fn deflation_sequence_with_progress(
    sys: Arc<dyn DeflatableSystem>,
    x: &[Complex64],
    cfg: &DeflationConfig,
    progress: &mut dyn FnMut(&LevelRecord),
) -> Result<DeflationReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let mut report = DeflationReport {
        sequence: Vec::with_capacity(cfg.max_steps + 1),
        levels: Vec::with_capacity(cfg.max_steps + 1),
        seed: cfg.rng_seed,
        base_n_vars: sys.n_vars(),
        base_n_eqs: sys.n_eqs(),
        complete: false,
        failure: None,
    };

    // level 0
    let t0 = Instant::now();
    let eval_residual = check_solution(&*sys, x)?;
    let jac = sys.jac(x)?;
    let rank = numerical_rank(jac.view(), cfg.rank_rel_tol)?;
    push_level(&mut report, 0, &*sys, rank, eval_residual, t0, progress);

    let mut current: Arc<dyn DeflatableSystem> = sys;
    let mut point = x.to_vec();
    let mut jac = jac;

    for step in 0..cfg.max_steps {
        if cfg.early_stop && stabilized(&report.sequence) {
            break;
        }
        let t = Instant::now();
        let nullity = *report.sequence.last().expect("level 0 recorded");
        let extended = match extend_level(current.clone(), &point, &jac, nullity, cfg, &mut rng)
        {
            Ok(v) => v,
            Err(e) => {
                report.failure = Some(format!("step {}: {e}", step + 1));
                return Ok(report);
            }
        };
        let (ext, attempts) = extended;
        {
            let last = report.levels.last_mut().expect("level exists");
            last.bordered_residual = Some(ext.bordered_residual);
            last.border_attempts = Some(attempts);
        }

        let eval_residual = match check_solution(&*ext.system, &ext.point) {
            Ok(r) => r,
            Err(e) => {
                report.failure = Some(format!("step {}: extended point drifted: {e}", step + 1));
                return Ok(report);
            }
        };
        let next_jac = match ext.system.jac(&ext.point) {
            Ok(j) => j,
            Err(e) => {
                report.failure = Some(format!("step {}: {e}", step + 1));
                return Ok(report);
            }
        };
        let rank = match numerical_rank(next_jac.view(), cfg.rank_rel_tol) {
            Ok(r) => r,
            Err(e) => {
                report.failure = Some(format!("step {}: {e}", step + 1));
                return Ok(report);
            }
        };
        push_level(&mut report, step + 1, &*ext.system, rank, eval_residual, t, progress);
        current = ext.system;
        point = ext.point;
        jac = next_jac;
    }

    report.complete = true;
    debug_assert!(report.bookkeeping_ok());
    Ok(report)
}

fn push_level(
    report: &mut DeflationReport,
    level: usize,
    sys: &dyn DeflatableSystem,
    rank: RankResult,
    eval_residual: f64,
    started: Instant,
    progress: &mut dyn FnMut(&LevelRecord),
) {
    let nullity = rank.nullity(sys.n_vars());
    let record = LevelRecord {
        level,
        rows: sys.n_eqs(),
        cols: sys.n_vars(),
        rank: rank.rank,
        nullity,
        borderline: rank.is_borderline(),
        singular_values: rank.singular_values,
        gap_ratio: rank.gap_ratio,
        tolerance_used: rank.tolerance_used,
        eval_residual,
        bordered_residual: None,
        border_attempts: None,
        wall_secs: started.elapsed().as_secs_f64(),
    };
    progress(&record);
    report.sequence.push(nullity);
    report.levels.push(record);
}

fn stabilized(sequence: &[usize]) -> bool {
    sequence.len() >= 3 && {
        let k = sequence.len();
        sequence[k - 1] == sequence[k - 2] && sequence[k - 2] == sequence[k - 3]
    }
}

/// Diagnostic for the identity `n_i = n − rank(J_i restricted to the first
/// n columns)`, where `n` is the base variable count: computes both sides
/// at `x` and reports whether they agree.
pub fn first_columns_nullity_check(
    sys: &dyn DeflatableSystem,
    x: &[Complex64],
    cfg: &DeflationConfig,
) -> Result<bool> {
    let jac = sys.jac(x)?;
    let full = numerical_rank(jac.view(), cfg.rank_rel_tol)?;
    let n_i = full.nullity(sys.n_vars());
    let base_n = sys.base_n_vars();
    let sub = jac.slice(s![.., ..base_n]);
    let sub_rank = numerical_rank(sub, cfg.rank_rel_tol)?;
    Ok(base_n - sub_rank.rank == n_i)
}
