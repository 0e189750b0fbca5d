//! Smoothing functions for nonsmooth convex losses.
//!
//! A [`SmoothableLoss`] pairs a nonsmooth convex `c` with a family of C¹
//! surrogates `c̃(·, μ)` such that
//!
//! * `|c̃(x, μ₁) − c̃(x, μ₂)| ≤ κ |μ₁ − μ₂|`, hence `|c̃(x, μ) − c(x)| ≤ κμ`;
//! * `∇c̃(·, μ)` is Lipschitz with modulus `L / μ`.
//!
//! The solvers only ever call the value/gradient methods. `κ` and `L` are
//! consumed by diagnostics and by the fixed-step inexact solver, so
//! [`SmoothableLoss::constants`] is optional.
//!
//! The two scalar building blocks are the Huber-type smoothing of `|z|` and
//! the quadratic smoothing of `max{z, 0}`. Both switch branches on the strict
//! test `|z| > μ`; at `|z| = μ` the branches coincide in value and slope.

use std::fmt::Debug;

use thiserror::Error;

use crate::linalg::{spectral_norm_sq, DenseMatrix, LinalgError, Vector, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothingError {
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("penalty weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `κ` and `L` of a smoothing function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConstants {
    /// Lipschitz modulus of `μ ↦ c̃(x, μ)`.
    pub kappa: f64,
    /// `∇c̃(·, μ)` is Lipschitz with modulus `lipschitz_factor / μ`.
    pub lipschitz_factor: f64,
}

impl SmoothingConstants {
    pub fn new(kappa: f64, lipschitz_factor: f64) -> Option<Self> {
        (kappa >= 0.0 && lipschitz_factor > 0.0).then_some(Self { kappa, lipschitz_factor })
    }
}

/// A convex loss together with its smoothing function.
///
/// Implementations must accept any `mu > 0`; callers guarantee positivity.
pub trait SmoothableLoss: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `c(x)`
    fn exact_value(&self, x: &Vector) -> f64;

    /// `c̃(x, μ)`
    fn smooth_value(&self, x: &Vector, mu: f64) -> f64;

    /// `∇ₓ c̃(x, μ)`
    fn smooth_gradient(&self, x: &Vector, mu: f64) -> Vector;

    /// Value and gradient together; override when they share work.
    fn smooth_value_and_gradient(&self, x: &Vector, mu: f64) -> (f64, Vector) {
        (self.smooth_value(x, mu), self.smooth_gradient(x, mu))
    }

    /// `(c(x), c̃(x, μ))`; override when they share work.
    fn exact_and_smooth(&self, x: &Vector, mu: f64) -> (f64, f64) {
        (self.exact_value(x), self.smooth_value(x, mu))
    }

    fn constants(&self) -> Option<SmoothingConstants>;

    fn name(&self) -> &'static str;
}

fn check_mu(mu: f64) -> Result<(), SmoothingError> {
    if mu > 0.0 {
        Ok(())
    } else {
        Err(SmoothingError::NonPositiveMu(mu))
    }
}

#[inline]
fn abs_unchecked(z: f64, mu: f64) -> (f64, f64) {
    if z.abs() > mu {
        (z.abs(), z.signum())
    } else {
        (z * z / (2.0 * mu) + mu / 2.0, z / mu)
    }
}

#[inline]
fn plus_unchecked(z: f64, mu: f64) -> (f64, f64) {
    if z.abs() > mu {
        if z > 0.0 {
            (z, 1.0)
        } else {
            (0.0, 0.0)
        }
    } else {
        let t = z + mu;
        (t * t / (4.0 * mu), t / (2.0 * mu))
    }
}

/// Smoothing of `|z|`: `|z|` when `|z| > μ`, `z²/(2μ) + μ/2` otherwise.
/// Returns `(value, d/dz)`.
pub fn smoothed_abs(z: f64, mu: f64) -> Result<(f64, f64), SmoothingError> {
    check_mu(mu)?;
    Ok(abs_unchecked(z, mu))
}

/// Smoothing of `max{z, 0}`: exact when `|z| > μ`, `(z + μ)²/(4μ)` otherwise.
/// Returns `(value, d/dz)`.
pub fn smoothed_plus(z: f64, mu: f64) -> Result<(f64, f64), SmoothingError> {
    check_mu(mu)?;
    Ok(plus_unchecked(z, mu))
}

fn lipschitz_of(a: &DenseMatrix) -> Result<f64, SmoothingError> {
    Ok(spectral_norm_sq(a, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?)
}

fn check_rows(a: &DenseMatrix, b: &Vector) -> Result<(), SmoothingError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch { expected: a.rows(), got: b.len() }.into());
    }
    Ok(())
}

/// `c(x) = ‖Ax − b‖₁` smoothed termwise with [`smoothed_abs`].
#[derive(Debug, Clone)]
pub struct L1AffineLoss {
    a: DenseMatrix,
    b: Vector,
    constants: SmoothingConstants,
}

/// Builds the least-absolute-deviations loss. `κ = m/2`, `L = ‖A‖₂²`.
pub fn l1_affine_loss(a: DenseMatrix, b: Vector) -> Result<L1AffineLoss, SmoothingError> {
    check_rows(&a, &b)?;
    let lipschitz = lipschitz_of(&a)?;
    let kappa = 0.5 * a.rows() as f64;
    Ok(L1AffineLoss { a, b, constants: SmoothingConstants { kappa, lipschitz_factor: lipschitz } })
}

impl L1AffineLoss {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    fn residual(&self, x: &Vector) -> Vector {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        ax.sub(&self.b)
    }
}

impl SmoothableLoss for L1AffineLoss {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn exact_value(&self, x: &Vector) -> f64 {
        self.residual(x).norm1()
    }

    fn smooth_value(&self, x: &Vector, mu: f64) -> f64 {
        self.residual(x).iter().map(|&r| abs_unchecked(r, mu).0).sum()
    }

    fn smooth_gradient(&self, x: &Vector, mu: f64) -> Vector {
        self.smooth_value_and_gradient(x, mu).1
    }

    fn smooth_value_and_gradient(&self, x: &Vector, mu: f64) -> (f64, Vector) {
        let r = self.residual(x);
        let mut value = 0.0;
        let d: Vec<f64> = r
            .iter()
            .map(|&ri| {
                let (v, dv) = abs_unchecked(ri, mu);
                value += v;
                dv
            })
            .collect();
        (value, self.a.matvec_transpose(&d).expect("rows match"))
    }

    fn exact_and_smooth(&self, x: &Vector, mu: f64) -> (f64, f64) {
        let r = self.residual(x);
        let exact = r.norm1();
        let smooth = r.iter().map(|&ri| abs_unchecked(ri, mu).0).sum();
        (exact, smooth)
    }

    fn constants(&self) -> Option<SmoothingConstants> {
        Some(self.constants)
    }

    fn name(&self) -> &'static str {
        "l1_affine"
    }
}

/// `c(x) = ‖max{Ax, 0} − b‖₁`, smoothed as `Σ θ̃(φ̃(Aᵢx, μ) − bᵢ, μ)`.
///
/// Per term, `|∂/∂μ| ≤ 1·¼ + ½`, so `κ = 3m/4`; the second derivative is at
/// most `1/μ + 1/(2μ)` times `‖Aᵢ‖²`, so `L = (3/2)‖A‖₂²`.
///
/// Note that `|max{z, 0} − b|` is not convex in `z` when `b > 0` (flat for
/// `z < 0`, decreasing on `(0, b)`), so neither is this loss in general.
#[derive(Debug, Clone)]
pub struct CensoredAffineLoss {
    a: DenseMatrix,
    b: Vector,
    constants: SmoothingConstants,
}

pub fn censored_affine_loss(a: DenseMatrix, b: Vector) -> Result<CensoredAffineLoss, SmoothingError> {
    check_rows(&a, &b)?;
    let lipschitz = 1.5 * lipschitz_of(&a)?;
    let kappa = 0.75 * a.rows() as f64;
    Ok(CensoredAffineLoss { a, b, constants: SmoothingConstants { kappa, lipschitz_factor: lipschitz } })
}

impl CensoredAffineLoss {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }
}

impl SmoothableLoss for CensoredAffineLoss {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn exact_value(&self, x: &Vector) -> f64 {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        ax.iter().zip(self.b.iter()).map(|(&z, &bi)| (z.max(0.0) - bi).abs()).sum()
    }

    fn smooth_value(&self, x: &Vector, mu: f64) -> f64 {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        ax.iter()
            .zip(self.b.iter())
            .map(|(&z, &bi)| abs_unchecked(plus_unchecked(z, mu).0 - bi, mu).0)
            .sum()
    }

    fn smooth_gradient(&self, x: &Vector, mu: f64) -> Vector {
        self.smooth_value_and_gradient(x, mu).1
    }

    fn smooth_value_and_gradient(&self, x: &Vector, mu: f64) -> (f64, Vector) {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        let mut value = 0.0;
        let d: Vec<f64> = ax
            .iter()
            .zip(self.b.iter())
            .map(|(&z, &bi)| {
                let (p, dp) = plus_unchecked(z, mu);
                let (v, dv) = abs_unchecked(p - bi, mu);
                value += v;
                dv * dp
            })
            .collect();
        (value, self.a.matvec_transpose(&d).expect("rows match"))
    }

    fn exact_and_smooth(&self, x: &Vector, mu: f64) -> (f64, f64) {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        let mut exact = 0.0;
        let mut smooth = 0.0;
        for (&z, &bi) in ax.iter().zip(self.b.iter()) {
            exact += (z.max(0.0) - bi).abs();
            smooth += abs_unchecked(plus_unchecked(z, mu).0 - bi, mu).0;
        }
        (exact, smooth)
    }

    fn constants(&self) -> Option<SmoothingConstants> {
        Some(self.constants)
    }

    fn name(&self) -> &'static str {
        "censored_affine"
    }
}

/// Exact penalty `λ Σ max{Hᵢx − dᵢ, 0}` for affine constraints `Hx ≤ d`.
///
/// `κ = λr/4`, `L = λ‖H‖₂²/2`.
#[derive(Debug, Clone)]
pub struct HingePenaltyLoss {
    lam: f64,
    h: DenseMatrix,
    d: Vector,
    constants: SmoothingConstants,
}

pub fn hinge_penalty_loss(lam: f64, h: DenseMatrix, d: Vector) -> Result<HingePenaltyLoss, SmoothingError> {
    if !(lam > 0.0) {
        return Err(SmoothingError::NonPositiveWeight(lam));
    }
    check_rows(&h, &d)?;
    let lipschitz = 0.5 * lam * lipschitz_of(&h)?;
    let kappa = 0.25 * lam * h.rows() as f64;
    Ok(HingePenaltyLoss { lam, h, d, constants: SmoothingConstants { kappa, lipschitz_factor: lipschitz } })
}

impl HingePenaltyLoss {
    fn slack(&self, x: &Vector) -> Vector {
        self.h.matvec(x).expect("dimension checked by caller").sub(&self.d)
    }
}

impl SmoothableLoss for HingePenaltyLoss {
    fn dim(&self) -> usize {
        self.h.cols()
    }

    fn exact_value(&self, x: &Vector) -> f64 {
        self.lam * self.slack(x).iter().map(|&s| s.max(0.0)).sum::<f64>()
    }

    fn smooth_value(&self, x: &Vector, mu: f64) -> f64 {
        self.lam * self.slack(x).iter().map(|&s| plus_unchecked(s, mu).0).sum::<f64>()
    }

    fn smooth_gradient(&self, x: &Vector, mu: f64) -> Vector {
        self.smooth_value_and_gradient(x, mu).1
    }

    fn smooth_value_and_gradient(&self, x: &Vector, mu: f64) -> (f64, Vector) {
        let s = self.slack(x);
        let mut value = 0.0;
        let w: Vec<f64> = s
            .iter()
            .map(|&si| {
                let (v, dv) = plus_unchecked(si, mu);
                value += v;
                self.lam * dv
            })
            .collect();
        (self.lam * value, self.h.matvec_transpose(&w).expect("rows match"))
    }

    fn constants(&self) -> Option<SmoothingConstants> {
        Some(self.constants)
    }

    fn name(&self) -> &'static str {
        "hinge_penalty"
    }
}

/// `c ≡ 0`. Has no meaningful Lipschitz factor, so no constants.
#[derive(Debug, Clone)]
pub struct ZeroLoss {
    n: usize,
}

impl ZeroLoss {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl SmoothableLoss for ZeroLoss {
    fn dim(&self) -> usize {
        self.n
    }

    fn exact_value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn smooth_value(&self, _x: &Vector, _mu: f64) -> f64 {
        0.0
    }

    fn smooth_gradient(&self, _x: &Vector, _mu: f64) -> Vector {
        Vector::zeros(self.n)
    }

    fn constants(&self) -> Option<SmoothingConstants> {
        None
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> (DenseMatrix, Xoshiro256PlusPlus) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(rows, cols, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        (a, rng)
    }

    /// Central differences, step 1e-6.
    fn fd_gradient(loss: &dyn SmoothableLoss, x: &Vector, mu: f64) -> Vector {
        let h = 1e-6;
        Vector::from_fn(x.len(), |i| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (loss.smooth_value(&xp, mu) - loss.smooth_value(&xm, mu)) / (2.0 * h)
        })
    }

    #[test]
    fn smoothed_abs_examples() {
        assert_eq!(smoothed_abs(0.0, 0.5).unwrap(), (0.25, 0.0));
        assert_eq!(smoothed_abs(2.0, 1.0).unwrap(), (2.0, 1.0));
        let mu = 0.3;
        let (v, d) = smoothed_abs(mu, mu).unwrap();
        assert!((v - mu).abs() < 1e-15);
        assert!((d - 1.0).abs() < 1e-15);
        let (v, d) = smoothed_abs(-mu, mu).unwrap();
        assert!((v - mu).abs() < 1e-15 && (d + 1.0).abs() < 1e-15);
        assert_eq!(smoothed_abs(1.0, 0.0), Err(SmoothingError::NonPositiveMu(0.0)));
        assert!(smoothed_abs(1.0, -1.0).is_err());
    }

    #[test]
    fn smoothed_plus_examples() {
        assert_eq!(smoothed_plus(-2.0, 1.0).unwrap(), (0.0, 0.0));
        assert_eq!(smoothed_plus(0.0, 1.0).unwrap(), (0.25, 0.5));
        let (v, d) = smoothed_plus(1.0, 1.0).unwrap();
        assert_eq!((v, d), (1.0, 1.0));
        let (v, d) = smoothed_plus(-1.0, 1.0).unwrap();
        assert_eq!((v, d), (0.0, 0.0));
        assert!(smoothed_plus(0.0, 0.0).is_err());
    }

    #[test]
    fn scalar_primitives_derivative_ranges() {
        for i in -300..=300 {
            let z = i as f64 / 100.0;
            let (va, da) = smoothed_abs(z, 0.7).unwrap();
            assert!((-1.0..=1.0).contains(&da) && va >= z.abs());
            let (vp, dp) = smoothed_plus(z, 0.7).unwrap();
            assert!((0.0..=1.0).contains(&dp) && vp >= 0.0 && vp >= z.max(0.0));
        }
    }

    #[test]
    fn l1_single_term_envelope() {
        let loss = l1_affine_loss(DenseMatrix::identity(1), Vector::zeros(1)).unwrap();
        let x = Vector::zeros(1);
        assert_eq!(loss.smooth_value(&x, 0.5), 0.25);
        assert_eq!(loss.exact_value(&x), 0.0);
        let k = loss.constants().unwrap().kappa;
        assert!(loss.smooth_value(&x, 0.5) - loss.exact_value(&x) <= k * 0.5);
    }

    #[test]
    fn l1_zero_residuals() {
        let b = Vector::new(vec![1.0, -1.0]).unwrap();
        let loss = l1_affine_loss(DenseMatrix::identity(2), b.clone()).unwrap();
        for mu in [0.01, 0.3, 2.0] {
            assert_eq!(loss.exact_value(&b), 0.0);
            assert!((loss.smooth_value(&b, mu) - mu).abs() < 1e-15);
        }
    }

    #[test]
    fn l1_dimension_mismatch() {
        assert!(l1_affine_loss(DenseMatrix::identity(2), Vector::zeros(3)).is_err());
        assert!(censored_affine_loss(DenseMatrix::identity(2), Vector::zeros(1)).is_err());
    }

    #[test]
    fn l1_seeded_envelope_and_gradient() {
        let (a, mut rng) = seeded_matrix(5, 8, 42);
        let b = Vector::from_fn(5, |_| rng.gen::<f64>() - 0.5);
        let loss = l1_affine_loss(a, b).unwrap();
        let mu = 0.1;
        let c = loss.constants().unwrap();
        assert_eq!(c.kappa, 2.5);
        let mut checked = 0;
        for _ in 0..50 {
            let x = Vector::from_fn(8, |_| rng.gen::<f64>() * 2.0 - 1.0);
            let gap = (loss.smooth_value(&x, mu) - loss.exact_value(&x)).abs();
            assert!(gap <= c.kappa * mu + 1e-12);
            let r = loss.matrix().matvec(&x).unwrap().sub(loss.rhs());
            if r.iter().any(|&ri| (ri.abs() - mu).abs() < 1e-4) {
                continue;
            }
            let g = loss.smooth_gradient(&x, mu);
            let fd = fd_gradient(&loss, &x, mu);
            assert!(g.sub(&fd).norm_inf() <= 1e-6 * (1.0 + g.norm_inf()));
            checked += 1;
        }
        assert!(checked > 30);
    }

    #[test]
    fn censored_deep_negative_branch() {
        let loss = censored_affine_loss(DenseMatrix::identity(1), Vector::zeros(1)).unwrap();
        let x = Vector::new(vec![-5.0]).unwrap();
        assert!((loss.smooth_value(&x, 0.1) - 0.05).abs() < 1e-15);
        assert_eq!(loss.exact_value(&x), 0.0);
        assert_eq!(loss.smooth_gradient(&x, 0.1)[0], 0.0);
    }

    #[test]
    fn censored_exact_fit_vanishes() {
        let loss = censored_affine_loss(DenseMatrix::identity(1), Vector::filled(1, 1.0)).unwrap();
        let x = Vector::filled(1, 1.0);
        let mut prev = f64::INFINITY;
        for j in 1..30 {
            let mu = 0.5_f64.powi(j);
            let v = loss.smooth_value(&x, mu);
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-8);
    }

    /// Numeric sup of the per-term μ-derivative over a grid, by central
    /// differences in μ; confirms κ = 3/4 per term.
    #[test]
    fn censored_kappa_grid_oracle() {
        let term = |z: f64, b: f64, mu: f64| abs_unchecked(plus_unchecked(z, mu).0 - b, mu).0;
        let mut sup = 0.0_f64;
        for b in [-0.5, 0.0, 0.2, 1.0] {
            for mu in [0.5, 0.25, 0.125] {
                for i in -600..=600 {
                    let z = i as f64 * 0.005;
                    let h = 1e-7;
                    let d = (term(z, b, mu + h) - term(z, b, mu - h)) / (2.0 * h);
                    sup = sup.max(d.abs());
                }
            }
        }
        assert!(sup <= 0.75 + 1e-6, "sup = {sup}");
        // the θ̃ part alone reaches ½
        assert!(sup >= 0.5, "sup = {sup}");
    }

    #[test]
    fn censored_term_is_not_convex_for_positive_target() {
        // |max{z,0} - 1| at z = -1, 0, 1 is 1, 1, 0: the midpoint inequality
        // between -1 and 1 fails by 0.5 (1 > (1 + 0) / 2).
        let loss = censored_affine_loss(DenseMatrix::identity(1), Vector::filled(1, 1.0)).unwrap();
        let v = |z: f64| loss.exact_value(&Vector::filled(1, z));
        assert!(v(0.0) > 0.5 * (v(-1.0) + v(1.0)));
    }

    #[test]
    fn hinge_inactive_branch() {
        let h = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let loss = hinge_penalty_loss(3.0, h, Vector::filled(2, 1.0)).unwrap();
        let x = Vector::filled(2, 0.0);
        assert_eq!(loss.smooth_value(&x, 0.5), 0.0);
        assert_eq!(loss.smooth_gradient(&x, 0.5).norm_inf(), 0.0);
    }

    #[test]
    fn hinge_single_row() {
        let loss = hinge_penalty_loss(2.0, DenseMatrix::identity(1), Vector::zeros(1)).unwrap();
        assert_eq!(loss.smooth_value(&Vector::zeros(1), 1.0), 0.5);
        assert_eq!(loss.constants().unwrap().kappa, 0.5);
        assert!(hinge_penalty_loss(0.0, DenseMatrix::identity(1), Vector::zeros(1)).is_err());
    }

    #[test]
    fn hinge_seeded_gradient() {
        let (h, mut rng) = seeded_matrix(4, 6, 7);
        let d = Vector::from_fn(4, |_| rng.gen::<f64>() - 0.5);
        let loss = hinge_penalty_loss(1.5, h.clone(), d.clone()).unwrap();
        let mu = 0.2;
        let mut checked = 0;
        for _ in 0..40 {
            let x = Vector::from_fn(6, |_| rng.gen::<f64>() * 2.0 - 1.0);
            let s = h.matvec(&x).unwrap().sub(&d);
            if s.iter().any(|&si| (si.abs() - mu).abs() < 1e-4) {
                continue;
            }
            let g = loss.smooth_gradient(&x, mu);
            let fd = fd_gradient(&loss, &x, mu);
            assert!(g.sub(&fd).norm_inf() <= 1e-6 * (1.0 + g.norm_inf()));
            checked += 1;
        }
        assert!(checked > 20);
    }

    #[test]
    fn value_and_gradient_agree_with_separate_calls() {
        let (a, mut rng) = seeded_matrix(6, 4, 3);
        let b = Vector::from_fn(6, |_| rng.gen::<f64>());
        let losses: Vec<Box<dyn SmoothableLoss>> = vec![
            Box::new(l1_affine_loss(a.clone(), b.clone()).unwrap()),
            Box::new(censored_affine_loss(a.clone(), b.clone()).unwrap()),
            Box::new(hinge_penalty_loss(0.7, a, b).unwrap()),
        ];
        let x = Vector::from_fn(4, |_| rng.gen::<f64>() - 0.5);
        for loss in &losses {
            let (v, g) = loss.smooth_value_and_gradient(&x, 0.3);
            assert_eq!(v, loss.smooth_value(&x, 0.3));
            assert_eq!(g, loss.smooth_gradient(&x, 0.3));
            let (e, s) = loss.exact_and_smooth(&x, 0.3);
            assert_eq!(e, loss.exact_value(&x));
            assert_eq!(s, loss.smooth_value(&x, 0.3));
        }
    }
}
