//! Semidefinite relaxation of the phase sub-problem, solved by generalized
//! Dinkelbach iterations, then rounded back to unit modulus.
//!
//! With `V = Φ_vec Φ_vecᴴ`, every SINR is a ratio of affine functions of
//! `V`. Dropping `rank(V) = 1` leaves `V ⪰ 0, diag(V) = α²`. For a fixed
//! ratio level `λ` the inner problem
//!
//! `max_V min_k (p_k Tr(R_k V) − λ(Σ_{i≠k} p_i Tr(R_{k,i} V) + σ̃_k²)) / D_k`
//!
//! is solved in factored form `V = U Uᴴ` (`U` is N×r with rows of norm `α`,
//! which enforces the diagonal exactly and keeps `V` PSD by construction) by
//! Riemannian gradient ascent on a smoothed minimum. `D_k` is user `k`'s
//! denominator at the current iterate, which keeps the users' terms on a
//! common scale.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_normal, hermitian_eigen};
use crate::model::PhaseVector;
use crate::phase::quadratic::{min_of, QuadraticFormSet};
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdrParams {
    /// Gaussian randomization draws when the relaxed solution is not rank one.
    pub randomizations: usize,
    pub max_outer: usize,
    /// Relative `λ` improvement below which the outer loop stops.
    pub outer_tol: f64,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
    /// Fraction of the trace the top eigenvalue must carry to count as rank one.
    pub rank_one_ratio: f64,
    /// Re-entries of the Dinkelbach loop from a rounded point that beat it.
    pub restarts: usize,
}

impl Default for SdrParams {
    fn default() -> Self {
        Self {
            randomizations: 200,
            max_outer: 30,
            outer_tol: 1e-4,
            inner_max_iter: 150,
            inner_tol: 1e-6,
            rank_one_ratio: 1.0 - 1e-3,
            restarts: 3,
        }
    }
}

impl SdrParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.randomizations >= 1
            && self.max_outer >= 1
            && self.outer_tol > 0.0
            && self.inner_max_iter >= 1
            && self.inner_tol > 0.0
            && self.rank_one_ratio > 0.0
            && self.rank_one_ratio <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid relaxation parameters {self:?}"
            )))
        }
    }
}

/// A feasible point of the relaxation: Hermitian PSD with `diag(V) = α²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrix {
    v: CMatrix,
    alpha: f64,
}

impl LiftedMatrix {
    /// Checks the invariants (Hermitian to 1e-10, eigenvalues ≥ -1e-8,
    /// diagonal within 1e-8 of `α²`, all relative to `α²`).
    pub fn new(v: CMatrix, alpha: f64) -> Result<Self> {
        if !v.is_square() {
            return Err(Error::Dimension(format!(
                "lifted matrix is {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        let a2 = alpha * alpha;
        let n = v.nrows();
        for r in 0..n {
            if (v[(r, r)].re - a2).abs() > 1e-8 * a2 || v[(r, r)].im.abs() > 1e-10 * a2 {
                return Err(Error::Numeric(format!(
                    "diagonal entry {r} is {} instead of {a2}",
                    v[(r, r)]
                )));
            }
            for c in 0..r {
                if (v[(r, c)] - v[(c, r)].conj()).norm() > 1e-10 * a2 {
                    return Err(Error::Numeric(format!(
                        "lifted matrix not Hermitian at ({r}, {c})"
                    )));
                }
            }
        }
        let (values, _) = hermitian_eigen(&v);
        if values.first().is_some_and(|&l| l < -1e-8 * a2) {
            return Err(Error::Numeric(format!(
                "lifted matrix has eigenvalue {}",
                values[0]
            )));
        }
        Ok(Self { v, alpha })
    }

    pub fn from_factor(u: &CMatrix, alpha: f64) -> Result<Self> {
        let v = u * u.adjoint();
        Self::new(crate::linalg::hermitian_part(&v), alpha)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrOutcome {
    pub phase: PhaseVector,
    pub min_sinr: f64,
    /// Best minimum SINR found for the relaxed problem (`λ*`). Every
    /// rank-one point is feasible for the relaxation, so this is at least
    /// the minimum SINR of the returned phase.
    pub relaxed_bound: f64,
    pub lifted: LiftedMatrix,
    /// The relaxed solution passed the rank-one test.
    pub rank_one: bool,
    pub outer_iterations: usize,
    /// False when some inner solve ran out of iterations before meeting
    /// its tolerance; the best iterate found is used regardless.
    pub inner_converged: bool,
    /// The returned phase differs from (and beats) the input.
    pub improved: bool,
}

/// All `b_{k,i}` side by side (column `k·K + i`), so every projection
/// `Uᴴ b_{k,i}` is one product.
struct Lifting<'a> {
    q: &'a QuadraticFormSet,
    stacked: CMatrix,
}

impl<'a> Lifting<'a> {
    fn new(q: &'a QuadraticFormSet) -> Self {
        let k = q.users();
        let n = q.elements();
        let stacked = CMatrix::from_fn(n, k * k, |r, c| q.cross(c / k, c % k)[r]);
        Self { q, stacked }
    }

    /// `(numerator, denominator)` of every user's ratio at `V = U Uᴴ`.
    fn terms(&self, u: &CMatrix) -> (Vec<f64>, Vec<f64>, CMatrix) {
        let k = self.q.users();
        let proj = u.adjoint() * &self.stacked;
        let p = self.q.power();
        let mut num = vec![0.0; k];
        let mut den = self.q.sigma_tilde2().to_vec();
        for a in 0..k {
            for i in 0..k {
                let gain = proj.column(a * k + i).norm_squared();
                if i == a {
                    num[a] = p[a] * gain;
                } else {
                    den[a] += p[i] * gain;
                }
            }
        }
        (num, den, proj)
    }

    fn ratios(&self, u: &CMatrix) -> Vec<f64> {
        let (num, den, _) = self.terms(u);
        num.iter().zip(&den).map(|(a, b)| a / b).collect()
    }
}

/// Smoothed minimum `-μ log Σ exp(-c_k/μ)` and its weights.
fn soft_min(c: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let lo = min_of(c);
    let e: Vec<f64> = c.iter().map(|&x| (-(x - lo) / mu).exp()).collect();
    let s: f64 = e.iter().sum();
    (lo - mu * s.ln(), e.into_iter().map(|x| x / s).collect())
}

fn normalize_rows(u: &mut CMatrix, alpha: f64) {
    for mut row in u.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row *= Complex64::from(alpha / norm);
        } else {
            row.fill(Complex64::from(0.0));
            row[0] = Complex64::from(alpha);
        }
    }
}

struct InnerProblem<'l, 'q> {
    lift: &'l Lifting<'q>,
    lambda: f64,
    d_ref: Vec<f64>,
    alpha: f64,
}

impl InnerProblem<'_, '_> {
    fn margins(&self, num: &[f64], den: &[f64]) -> Vec<f64> {
        (0..num.len())
            .map(|k| (num[k] - self.lambda * den[k]) / self.d_ref[k])
            .collect()
    }

    fn value(&self, u: &CMatrix, mu: f64) -> f64 {
        let (num, den, _) = self.lift.terms(u);
        soft_min(&self.margins(&num, &den), mu).0
    }

    /// Smoothed objective and its Riemannian gradient at `u`.
    fn value_and_gradient(&self, u: &CMatrix, mu: f64) -> (f64, CMatrix) {
        let q = self.lift.q;
        let k = q.users();
        let p = q.power();
        let (num, den, proj) = self.lift.terms(u);
        let (value, s) = soft_min(&self.margins(&num, &den), mu);
        // d Tr(b bᴴ U Uᴴ) / dU* = b (Uᴴ b)ᴴ, summed with per-column weights
        let mut weighted = proj.adjoint();
        for a in 0..k {
            for i in 0..k {
                let w = if i == a { p[a] } else { -self.lambda * p[i] };
                let coef = 2.0 * s[a] * w / self.d_ref[a];
                weighted.row_mut(a * k + i).scale_mut(coef);
            }
        }
        let mut grad = &self.lift.stacked * weighted;
        // tangent space of the product of spheres
        let a2 = self.alpha * self.alpha;
        for (mut g, row) in grad.row_iter_mut().zip(u.row_iter()) {
            let radial = row.dotc(&g).re / a2;
            g -= row * Complex64::from(radial);
        }
        (value, grad)
    }
}

/// Gradient ascent with Armijo backtracking and a continuation on the
/// smoothing width. Returns whether the final stage met its tolerance.
fn inner_solve(problem: &InnerProblem, u: &mut CMatrix, scale: f64, params: &SdrParams) -> bool {
    let stages = [1e-2, 1e-3, 1e-4];
    let budget = params.inner_max_iter.div_ceil(stages.len());
    let mut converged = false;
    let mut step = f64::NAN;
    for &width in &stages {
        let mu = width * scale;
        converged = false;
        let (mut value, mut grad) = problem.value_and_gradient(u, mu);
        for _ in 0..budget {
            let gnorm2 = grad.norm_squared();
            if gnorm2.sqrt() * problem.alpha <= params.inner_tol * scale {
                converged = true;
                break;
            }
            if !step.is_finite() {
                step = 0.1 * problem.alpha / gnorm2.sqrt();
            }
            step *= 2.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut trial = &*u + &grad * Complex64::from(step);
                normalize_rows(&mut trial, problem.alpha);
                let v = problem.value(&trial, mu);
                if v >= value + 1e-4 * step * gnorm2 {
                    *u = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // no ascent at machine resolution: stationary for this width
                converged = true;
                break;
            }
            (value, grad) = problem.value_and_gradient(u, mu);
        }
    }
    converged
}

struct Dinkelbach {
    u: CMatrix,
    lambda: f64,
    outer: usize,
    inner_converged: bool,
}

fn dinkelbach(lift: &Lifting, mut u: CMatrix, alpha: f64, params: &SdrParams) -> Dinkelbach {
    let mut lambda = min_of(&lift.ratios(&u));
    let mut best = u.clone();
    let mut inner_converged = true;
    let mut outer = 0;
    while outer < params.max_outer {
        outer += 1;
        let (num, den, _) = lift.terms(&best);
        let scale = if lambda > 0.0 {
            lambda
        } else {
            num.iter().zip(&den).map(|(a, b)| a / b).fold(0.0, f64::max)
        };
        if !(scale > 0.0) {
            break;
        }
        let problem = InnerProblem {
            lift,
            lambda,
            d_ref: den,
            alpha,
        };
        inner_converged &= inner_solve(&problem, &mut u, scale, params);
        let next = min_of(&lift.ratios(&u));
        if next > lambda {
            best = u.clone();
        } else {
            u = best.clone();
        }
        let gained = next > lambda * (1.0 + params.outer_tol);
        lambda = lambda.max(next);
        if !gained {
            break;
        }
    }
    Dinkelbach {
        u: best,
        lambda,
        outer,
        inner_converged,
    }
}

/// Factor rank used for the relaxed solution; large enough that local
/// maxima of the factored problem are generically global.
fn factor_rank(n: usize, k: usize) -> usize {
    let r = ((n + k) as f64).sqrt().ceil() as usize + 1;
    r.clamp(1, n)
}

/// `U` whose first column is `Φ_vec` and remaining columns a small
/// perturbation, so the ascent can leave the rank-one set.
fn seeded_factor<R: Rng + ?Sized>(
    phase: &PhaseVector,
    r: usize,
    spread: f64,
    rng: &mut R,
) -> CMatrix {
    let phi = phase.stacked();
    let alpha = phase.alpha();
    let mut u = CMatrix::from_fn(phi.len(), r, |row, col| {
        if col == 0 {
            phi[row]
        } else {
            complex_normal(rng) * (spread * alpha)
        }
    });
    normalize_rows(&mut u, alpha);
    u
}

/// Rounds a relaxed solution to a unit-modulus phase. Rank-one solutions
/// use the entrywise phases of the top eigenvector; otherwise the best of
/// `randomizations` draws `z = U w ~ CN(0, V)`, with the top eigenvector as
/// one more candidate.
fn round<R: Rng + ?Sized>(
    q: &QuadraticFormSet,
    u: &CMatrix,
    alpha: f64,
    params: &SdrParams,
    rng: &mut R,
) -> (PhaseVector, f64, bool) {
    let v = u * u.adjoint();
    let (values, vectors) = hermitian_eigen(&v);
    let n = values.len();
    let trace: f64 = (0..n).map(|i| v[(i, i)].re).sum();
    let top = values[n - 1];
    let rank_one = top >= params.rank_one_ratio * trace;
    let eigen_candidate = PhaseVector::from_coefficients(vectors.column(n - 1).as_slice(), alpha);
    let mut best_value = q.min_sinr(&eigen_candidate);
    let mut best = eigen_candidate;
    if !rank_one {
        let r = u.ncols();
        for _ in 0..params.randomizations {
            let w = crate::CVector::from_fn(r, |_, _| complex_normal(rng));
            let z = u * w;
            let candidate = PhaseVector::from_coefficients(z.as_slice(), alpha);
            let value = q.min_sinr(&candidate);
            if value > best_value {
                best_value = value;
                best = candidate;
            }
        }
    }
    (best, best_value, rank_one)
}

/// Phase design by relaxation, Dinkelbach iterations and rounding. The
/// returned phase never has a lower minimum SINR than `init` under `q`.
pub fn sdr_dinkelbach_phase<R: Rng + ?Sized>(
    q: &QuadraticFormSet,
    init: &PhaseVector,
    params: &SdrParams,
    rng: &mut R,
) -> Result<SdrOutcome> {
    params.validate()?;
    let n = q.elements();
    if init.len() != n {
        return Err(Error::Dimension(format!(
            "{} phases for {n} elements",
            init.len()
        )));
    }
    if q.users() == 0 || n == 0 {
        return Err(Error::Dimension(
            "phase design needs at least one user and one element".into(),
        ));
    }
    let alpha = init.alpha();
    let init_value = q.min_sinr(init);
    let init_factor = CMatrix::from_column_slice(n, 1, init.stacked().as_slice());
    let unchanged = |outer, inner_converged| -> Result<SdrOutcome> {
        Ok(SdrOutcome {
            phase: init.clone(),
            min_sinr: init_value,
            relaxed_bound: init_value,
            lifted: LiftedMatrix::from_factor(&init_factor, alpha)?,
            rank_one: true,
            outer_iterations: outer,
            inner_converged,
            improved: false,
        })
    };
    if n == 1 {
        // |b φ|² does not depend on the phase of a single element
        return unchanged(0, true);
    }

    let lift = Lifting::new(q);
    let r = factor_rank(n, q.users());
    let mut u = seeded_factor(init, r, 0.3, rng);
    let mut bound = init_value;
    let mut best_factor = u.clone();
    let mut best_phase = init.clone();
    let mut best_value = init_value;
    let mut rank_one = true;
    let mut outer_total = 0;
    let mut inner_converged = true;

    for attempt in 0..=params.restarts {
        let run = dinkelbach(&lift, u, alpha, params);
        outer_total += run.outer;
        inner_converged &= run.inner_converged;
        if run.lambda >= bound {
            bound = run.lambda;
            best_factor = run.u.clone();
        }
        let (candidate, value, is_rank_one) = round(q, &run.u, alpha, params, rng);
        if attempt == 0 || run.lambda >= bound {
            rank_one = is_rank_one;
        }
        let beats_input = value > best_value;
        if beats_input {
            best_value = value;
            best_phase = candidate.clone();
        }
        if value <= bound * (1.0 + 1e-9) || attempt == params.restarts {
            break;
        }
        // a rounded point beat the relaxed iterate: resume from it
        u = seeded_factor(&candidate, r, 1e-3, rng);
    }
    if !(bound.is_finite() && best_value.is_finite()) {
        return Err(Error::Numeric("non-finite SINR in phase relaxation".into()));
    }
    // any rank-one point is feasible for the relaxation
    let bound = bound.max(best_value);
    let improved = best_value > init_value * (1.0 + 1e-12);
    if !improved {
        return Ok(SdrOutcome {
            relaxed_bound: bound,
            ..unchanged(outer_total, inner_converged)?
        });
    }
    Ok(SdrOutcome {
        phase: best_phase,
        min_sinr: best_value,
        relaxed_bound: bound,
        lifted: LiftedMatrix::from_factor(&best_factor, alpha)?,
        rank_one,
        outer_iterations: outer_total,
        inner_converged,
        improved,
    })
}
