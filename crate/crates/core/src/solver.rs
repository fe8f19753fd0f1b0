//! Alternating minimization for
//! `min ||L||_* + λ||S||_1 + μ||L + S - D||_F`.
//!
//! Each iteration solves the S-block exactly with the vector prox and then
//! the L-block exactly, either by a full SVD ([`Mode::Plain`]) or by the
//! rank-certified truncated route ([`Mode::Accelerated`]). Both routes
//! produce the same iterates; only the cost differs.

use alloc::vec::Vec;
use core::time::Duration;

use crate::bm::acc_update_L;
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm_fro, norm_l1, norm_nuclear, outer_sum, svd_full, svd_partial, DenseMatrix, LanczosOptions};
use crate::prox::update_S;
use crate::spectral::{l_step_parameters, update_L_full, LowRankUpdate};

/// Below `OVERFIT_RATIO * ||D||_F` the data-fit residual is treated as zero.
pub const OVERFIT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct Problem {
    d: DenseMatrix,
    lambda: f64,
    mu: f64,
}

impl Problem {
    pub fn new(d: DenseMatrix, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(alloc::format!("lambda must be positive, got {lambda}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid(alloc::format!("mu must be positive, got {mu}")));
        }
        Ok(Problem { d, lambda, mu })
    }

    /// `λ = 1/sqrt(n₁)`, `μ = sqrt(n₂/2)`.
    pub fn with_defaults(d: DenseMatrix) -> Result<Self> {
        let (lambda, mu) = default_parameters(d.rows(), d.cols());
        Self::new(d, lambda, mu)
    }

    pub fn data(&self) -> &DenseMatrix {
        &self.d
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `(1/sqrt(rows), sqrt(cols/2))`.
pub fn default_parameters(rows: usize, cols: usize) -> (f64, f64) {
    (1.0 / libm::sqrt(rows as f64), libm::sqrt(cols as f64 / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Plain,
    Accelerated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Checked against [`Monitor::elapsed`]; ignored when the monitor has
    /// no clock.
    pub max_wall_time: Option<Duration>,
    pub mode: Mode,
    /// Rank guess before the first accelerated L-step.
    pub initial_rank: usize,
    pub delta_k: usize,
    /// The KKT residual is evaluated every this many iterations.
    pub residual_check_period: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            max_iterations: 5000,
            max_wall_time: None,
            mode: Mode::Plain,
            initial_rank: 10,
            delta_k: 1,
            residual_check_period: 1,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.max_iterations == 0 || self.delta_k == 0 || self.residual_check_period == 0 {
            return Err(invalid("iteration budget, rank increment and check period must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// `η < ε`.
    Tolerance,
    MaxIter,
    TimeOut,
    /// `L + S` reproduced `D`; the last iterate is returned.
    Overfit,
}

/// KKT residual components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub eta: f64,
    /// `||L - prox_*(L - μ∇f)||_F`.
    pub delta1: f64,
    /// `||S - prox_{λ||.||_1}(S - μ∇f)||_F`.
    pub delta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRecord {
    pub iteration: usize,
    pub residual: KktResidual,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub l_hat: DenseMatrix,
    pub s_hat: DenseMatrix,
    pub iterations: usize,
    /// Objective at `(L^i, S^i)`; entry 0 is the starting point.
    pub objective_history: Vec<f64>,
    pub residual_history: Vec<ResidualRecord>,
    /// `rank(L^i)`; entry 0 is the starting point.
    pub rank_history: Vec<usize>,
    pub termination: Termination,
    /// Truncated SVDs that did not converge and were redone densely.
    pub svd_fallbacks: usize,
}

impl SolveResult {
    pub fn final_residual(&self) -> Option<KktResidual> {
        self.residual_history.last().map(|r| r.residual)
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("history holds the starting point")
    }

    pub fn final_rank(&self) -> usize {
        *self.rank_history.last().expect("history holds the starting point")
    }
}

/// State exposed to a [`Monitor`] after each iteration.
#[derive(Debug)]
pub struct IterationReport<'a> {
    pub iteration: usize,
    pub l_prev: &'a DenseMatrix,
    pub s_prev: &'a DenseMatrix,
    pub s: &'a DenseMatrix,
    pub l: &'a DenseMatrix,
    /// `f(L^i, S^i)`.
    pub objective_before: f64,
    /// `f(L^i, S^{i+1})`.
    pub objective_after_s: f64,
    /// `f(L^{i+1}, S^{i+1})`.
    pub objective_after_l: f64,
    pub rank: usize,
    pub residual: Option<KktResidual>,
}

/// Progress hook, called synchronously on the solving thread.
pub trait Monitor {
    /// Time since the solve started, if a clock is available.
    fn elapsed(&self) -> Option<Duration> {
        None
    }

    fn on_iteration(&mut self, _report: &IterationReport<'_>) {}
}

/// A monitor that observes nothing and has no clock.
#[derive(Debug, Default, Clone, Copy)]
pub struct Silent;

impl Monitor for Silent {}

/// `||L||_* + λ||S||_1 + μ||L + S - D||_F`.
pub fn objective(l: &DenseMatrix, s: &DenseMatrix, problem: &Problem) -> Result<f64> {
    l.ensure_same_shape(&problem.d)?;
    s.ensure_same_shape(&problem.d)?;
    Ok(objective_with_nuclear(norm_nuclear(l)?, l, s, problem))
}

fn objective_with_nuclear(nuclear: f64, l: &DenseMatrix, s: &DenseMatrix, problem: &Problem) -> f64 {
    nuclear + problem.lambda * norm_l1(s) + problem.mu * fit_norm(l, s, &problem.d)
}

fn fit_norm(l: &DenseMatrix, s: &DenseMatrix, d: &DenseMatrix) -> f64 {
    let mut acc = 0.0;
    for ((x, y), z) in l.as_col_major().iter().zip(s.as_col_major()).zip(d.as_col_major()) {
        let r = x + y - z;
        acc += r * r;
    }
    libm::sqrt(acc)
}

/// Singular-value soft-thresholding at 1.
pub fn prox_nuclear_unit(z: &DenseMatrix) -> Result<DenseMatrix> {
    if z.is_zero() {
        return Ok(z.clone());
    }
    let svd = svd_full(z)?;
    let shrunk: Vec<f64> = svd.singular_values.iter().map(|s| (s - 1.0).max(0.0)).collect();
    let r = shrunk.iter().filter(|&&x| x > 0.0).count();
    if r == 0 {
        return Ok(DenseMatrix::zeros(z.rows(), z.cols()));
    }
    Ok(outer_sum(&svd.u, &shrunk[..r], &svd.v))
}

/// Same as [`prox_nuclear_unit`], using truncated SVDs grown until the
/// last computed singular value is at most 1.
fn prox_nuclear_unit_truncated(z: &DenseMatrix, hint: usize, fallbacks: &mut usize) -> Result<DenseMatrix> {
    let p = z.rows().min(z.cols());
    if z.is_zero() {
        return Ok(z.clone());
    }
    let opts = LanczosOptions::default();
    let mut k = (hint + 2).clamp(1, p);
    loop {
        if opts.prefers_dense(k, p) {
            return prox_nuclear_unit(z);
        }
        let part = svd_partial(z, k)?;
        let (u, sigma, v) = if part.converged {
            (part.u, part.singular_values, part.v)
        } else {
            *fallbacks += 1;
            return prox_nuclear_unit(z);
        };
        let covered = sigma.len() == p || sigma.last().map_or(true, |&s| s <= 1.0);
        if covered {
            let shrunk: Vec<f64> = sigma.iter().map(|s| (s - 1.0).max(0.0)).collect();
            let r = shrunk.iter().filter(|&&x| x > 0.0).count();
            if r == 0 {
                return Ok(DenseMatrix::zeros(z.rows(), z.cols()));
            }
            return Ok(outer_sum(&u, &shrunk[..r], &v));
        }
        k = (2 * k).min(p);
    }
}

/// Elementwise soft-thresholding at `lambda`.
pub fn prox_l1(z: &DenseMatrix, lambda: f64) -> DenseMatrix {
    z.map(|x| libm::copysign((libm::fabs(x) - lambda).max(0.0), x))
}

/// KKT relative residual
/// `η = (Δ₁ + Δ₂) / (1 + ||L||_F + ||S||_F)` with `∇f = (L+S-D)/||L+S-D||_F`.
///
/// Fails with [`Error::Overfit`] when `||L + S - D||_F <= 1e-13 ||D||_F`.
pub fn kkt_residual(l: &DenseMatrix, s: &DenseMatrix, problem: &Problem) -> Result<KktResidual> {
    kkt_residual_inner(l, s, problem, None)
}

fn kkt_residual_inner(
    l: &DenseMatrix,
    s: &DenseMatrix,
    problem: &Problem,
    truncated: Option<(usize, &mut usize)>,
) -> Result<KktResidual> {
    let d = &problem.d;
    l.ensure_same_shape(d)?;
    s.ensure_same_shape(d)?;
    let fit = fit_norm(l, s, d);
    if fit <= OVERFIT_RATIO * norm_fro(d) {
        return Err(Error::Overfit { residual: fit });
    }
    let step = problem.mu / fit;
    let mut zl = l.clone();
    let mut zs = s.clone();
    for (((a, b), (x, y)), w) in zl
        .as_col_major_mut()
        .iter_mut()
        .zip(zs.as_col_major_mut().iter_mut())
        .zip(l.as_col_major().iter().zip(s.as_col_major()))
        .zip(d.as_col_major())
    {
        let g = step * (x + y - w);
        *a -= g;
        *b -= g;
    }
    let pl = match truncated {
        Some((hint, fallbacks)) => prox_nuclear_unit_truncated(&zl, hint, fallbacks)?,
        None => prox_nuclear_unit(&zl)?,
    };
    let ps = prox_l1(&zs, problem.lambda);
    let delta1 = norm_fro(&l.sub(&pl)?);
    let delta2 = norm_fro(&s.sub(&ps)?);
    let eta = (delta1 + delta2) / (1.0 + norm_fro(l) + norm_fro(s));
    Ok(KktResidual { eta, delta1, delta2 })
}

/// Plain alternating minimization from `L = S = 0`.
pub fn alt_min(problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    let config = SolverConfig {
        mode: Mode::Plain,
        ..config.clone()
    };
    solve_with(problem, &config, &mut Silent)
}

/// Accelerated alternating minimization from `L = S = 0`.
pub fn acc_alt_min(problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    let config = SolverConfig {
        mode: Mode::Accelerated,
        ..config.clone()
    };
    solve_with(problem, &config, &mut Silent)
}

/// Runs the mode selected in `config`, reporting to `monitor`.
pub fn solve_with(problem: &Problem, config: &SolverConfig, monitor: &mut dyn Monitor) -> Result<SolveResult> {
    solve_from(problem, config, monitor, None)
}

/// As [`solve_with`], starting from `(L⁰, S⁰)` instead of zeros.
pub fn solve_from(
    problem: &Problem,
    config: &SolverConfig,
    monitor: &mut dyn Monitor,
    start: Option<(DenseMatrix, DenseMatrix)>,
) -> Result<SolveResult> {
    config.validate()?;
    let d = &problem.d;
    let (rows, cols) = d.shape();
    let (mut l, mut s) = match start {
        Some((l0, s0)) => {
            l0.ensure_same_shape(d)?;
            s0.ensure_same_shape(d)?;
            (l0, s0)
        }
        None => (DenseMatrix::zeros(rows, cols), DenseMatrix::zeros(rows, cols)),
    };

    if d.is_zero() && l.is_zero() && s.is_zero() {
        let zero = KktResidual {
            eta: 0.0,
            delta1: 0.0,
            delta2: 0.0,
        };
        return Ok(SolveResult {
            l_hat: l,
            s_hat: s,
            iterations: 1,
            objective_history: alloc::vec![0.0, 0.0],
            residual_history: alloc::vec![ResidualRecord {
                iteration: 1,
                residual: zero
            }],
            rank_history: alloc::vec![0, 0],
            termination: Termination::Tolerance,
            svd_fallbacks: 0,
        });
    }

    let (mut nuclear, mut rank) = if l.is_zero() {
        (0.0, 0)
    } else {
        let svd = svd_full(&l)?;
        (svd.singular_values.iter().sum(), svd.rank_count())
    };
    let mut objective_history = alloc::vec![objective_with_nuclear(nuclear, &l, &s, problem)];
    let mut rank_history = alloc::vec![rank];
    let mut residual_history = Vec::new();
    let mut rank_guess = config.initial_rank;
    let mut svd_fallbacks = 0;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    for it in 1..=config.max_iterations {
        iterations = it;
        let objective_before = *objective_history.last().unwrap();
        let s_next = update_S(&l, d, problem.lambda, problem.mu)?;
        let objective_after_s = objective_with_nuclear(nuclear, &l, &s_next, problem);

        let (a, rho) = l_step_parameters(d, &s_next, problem.mu)?;
        let update: LowRankUpdate = match config.mode {
            Mode::Plain => update_L_full(&a, rho)?,
            Mode::Accelerated => {
                let acc = acc_update_L(&a, rho, rank_guess, config.delta_k)?;
                svd_fallbacks += acc.dense_fallbacks;
                rank_guess = acc.update.rank;
                acc.update
            }
        };
        let objective_after_l = objective_with_nuclear(update.nuclear_norm, &update.matrix, &s_next, problem);
        debug_assert!(objective_after_s <= objective_before + 1e-10 * (1.0 + objective_before.abs()));
        debug_assert!(objective_after_l <= objective_after_s + 1e-10 * (1.0 + objective_after_s.abs()));

        nuclear = update.nuclear_norm;
        rank = update.rank;
        let l_prev = core::mem::replace(&mut l, update.matrix);
        let s_prev = core::mem::replace(&mut s, s_next);
        objective_history.push(objective_after_l);
        rank_history.push(rank);

        let overfit = fit_norm(&l, &s, d) <= OVERFIT_RATIO * norm_fro(d);
        let residual = if !overfit && (it % config.residual_check_period == 0 || it == config.max_iterations) {
            let r = kkt_residual_inner(&l, &s, problem, Some((rank, &mut svd_fallbacks)))?;
            residual_history.push(ResidualRecord {
                iteration: it,
                residual: r,
            });
            Some(r)
        } else {
            None
        };

        monitor.on_iteration(&IterationReport {
            iteration: it,
            l_prev: &l_prev,
            s_prev: &s_prev,
            s: &s,
            l: &l,
            objective_before,
            objective_after_s,
            objective_after_l,
            rank,
            residual,
        });

        if overfit {
            termination = Termination::Overfit;
            break;
        }
        if residual.is_some_and(|r| r.eta < config.tolerance) {
            termination = Termination::Tolerance;
            break;
        }
        if let (Some(limit), Some(now)) = (config.max_wall_time, monitor.elapsed()) {
            if now >= limit {
                termination = Termination::TimeOut;
                break;
            }
        }
    }

    Ok(SolveResult {
        l_hat: l,
        s_hat: s,
        iterations,
        objective_history,
        residual_history,
        rank_history,
        termination,
        svd_fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_trivial_cases() {
        let d = DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, -1.0]]).unwrap();
        let p = Problem::new(d.clone(), 0.7, 1.3).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        assert!((objective(&z, &z, &p).unwrap() - 1.3 * norm_fro(&d)).abs() < 1e-14);
        assert!((objective(&d, &z, &p).unwrap() - norm_nuclear(&d).unwrap()).abs() < 1e-12);
        assert!(objective(&DenseMatrix::zeros(3, 2), &z, &p).is_err());
    }

    #[test]
    fn prox_examples() {
        let z = DenseMatrix::from_rows(&[[2.0, -0.3]]).unwrap();
        assert_eq!(prox_l1(&z, 0.5).to_row_major(), [1.5, 0.0]);
        let z = DenseMatrix::from_diagonal(2, 2, &[3.0, 0.5]).unwrap();
        let p = prox_nuclear_unit(&z).unwrap();
        let expected = DenseMatrix::from_diagonal(2, 2, &[2.0, 0.0]).unwrap();
        assert!(norm_fro(&p.sub(&expected).unwrap()) < 1e-14);
    }

    #[test]
    fn residual_zero_at_identity_example() {
        let p = Problem::new(DenseMatrix::identity(2), 0.8, 0.5).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        let r = kkt_residual(&z, &z, &p).unwrap();
        assert_eq!(r.eta, 0.0);
    }

    #[test]
    fn residual_overfit_signal() {
        let d = DenseMatrix::identity(2);
        let p = Problem::with_defaults(d.clone()).unwrap();
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(kkt_residual(&d, &z, &p), Err(Error::Overfit { .. })));
    }

    #[test]
    fn zero_data() {
        let p = Problem::with_defaults(DenseMatrix::zeros(3, 4)).unwrap();
        for r in [alt_min(&p, &SolverConfig::default()).unwrap(), acc_alt_min(&p, &SolverConfig::default()).unwrap()] {
            assert_eq!(r.iterations, 1);
            assert!(r.l_hat.is_zero() && r.s_hat.is_zero());
            assert_eq!(r.final_residual().unwrap().eta, 0.0);
            assert_eq!(r.termination, Termination::Tolerance);
        }
    }

    #[test]
    fn inactive_thresholds_stop_immediately() {
        let p = Problem::new(DenseMatrix::identity(2), 0.8, 0.5).unwrap();
        let r = alt_min(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.l_hat.is_zero() && r.s_hat.is_zero());
        assert_eq!(r.final_residual().unwrap().eta, 0.0);
    }

    #[test]
    fn config_validation() {
        let p = Problem::with_defaults(DenseMatrix::identity(2)).unwrap();
        let bad = SolverConfig {
            residual_check_period: 0,
            ..SolverConfig::default()
        };
        assert!(alt_min(&p, &bad).is_err());
        assert!(Problem::new(DenseMatrix::identity(2), 0.0, 1.0).is_err());
    }
}
