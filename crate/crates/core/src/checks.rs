//! Randomized invariant suites behind `sapg check`.
//!
//! Each suite probes one module on small seeded data and reports, per
//! invariant, how many probes ran and how many violated it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::datagen::{gen_instance, objective_for, InstanceKind, InstanceSpec};
use crate::diagnostics::{compute_reference, energy_trace, worst_descent_violation};
use crate::linalg::{orthonormality_defect, orthonormalize_rows, spectral_norm_sq, DenseMatrix, Vector};
use crate::model::default_config;
use crate::prox::{prox_step, FeasibleBox, ProximablePart};
use crate::smoothing::{censored_affine_loss, hinge_penalty_loss, l1_affine_loss, SmoothableLoss};
use crate::solver::sapg_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Linalg,
    Smoothing,
    Prox,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Linalg, Suite::Smoothing, Suite::Prox, Suite::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Linalg => "linalg",
            Suite::Smoothing => "smoothing",
            Suite::Prox => "prox",
            Suite::Energy => "energy",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected linalg, smoothing, prox or energy)"))
    }
}

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Checks the smoothing envelope against `κ = 0`.
    ZeroKappa,
}

impl FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero-kappa" => Ok(Fault::ZeroKappa),
            _ => Err(format!("unknown fault `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub probes: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { probes: 1000, seed: 0, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub invariant: String,
    pub probes: usize,
    pub violations: usize,
    /// Largest amount by which a probe exceeded its bound.
    pub worst_excess: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.probes > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Accumulates probe results for one invariant.
struct Tally {
    invariant: String,
    probes: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(invariant: impl Into<String>) -> Self {
        Self { invariant: invariant.into(), probes: 0, violations: 0, worst: 0.0 }
    }

    /// Records one probe of `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.probes += 1;
        let excess = lhs - rhs;
        if !(excess <= 0.0) {
            self.violations += 1;
            self.worst = self.worst.max(if excess.is_nan() { f64::INFINITY } else { excess });
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome { invariant: self.invariant, probes: self.probes, violations: self.violations, worst_excess: self.worst }
    }
}

fn gaussian_matrix(rng: &mut Xoshiro256PlusPlus, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    })
}

fn random_vector(rng: &mut Xoshiro256PlusPlus, n: usize, half_width: f64) -> Vector {
    Vector::from_fn(n, |_| rng.gen_range(-half_width..half_width))
}

fn log_uniform(rng: &mut Xoshiro256PlusPlus, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

pub fn run_suite(suite: Suite, opts: &CheckOptions) -> SuiteReport {
    let checks = match suite {
        Suite::Linalg => linalg_suite(opts),
        Suite::Smoothing => smoothing_suite(opts),
        Suite::Prox => prox_suite(opts),
        Suite::Energy => energy_suite(opts),
    };
    SuiteReport { suite, checks }
}

pub fn run_suites(suites: &[Suite], opts: &CheckOptions) -> Vec<SuiteReport> {
    suites.iter().map(|&s| run_suite(s, opts)).collect()
}

fn linalg_suite(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed ^ 0x11);
    let mut ortho = Tally::new("orthonormalized rows satisfy AAᵀ = I");
    let mut rayleigh = Tally::new("‖Av‖² ≤ ‖A‖²‖v‖² for the estimated spectral norm");
    for _ in 0..(opts.probes / 20).max(1) {
        let m = rng.gen_range(1..8);
        let n = rng.gen_range(m..12);
        let b = gaussian_matrix(&mut rng, m, n);
        if let Ok(q) = orthonormalize_rows(&b) {
            ortho.le(orthonormality_defect(&q), 1e-10);
        }
        let Ok(l) = spectral_norm_sq(&b, 1e-12, 20_000) else {
            rayleigh.le(1.0, 0.0);
            continue;
        };
        for _ in 0..5 {
            let v = random_vector(&mut rng, n, 1.0);
            let av = b.matvec(&v).expect("shape fixed above");
            rayleigh.le(av.norm_sq(), l * v.norm_sq() * (1.0 + 1e-6));
        }
    }
    vec![ortho.finish(), rayleigh.finish()]
}

fn probe_losses(seed: u64) -> Vec<Box<dyn SmoothableLoss>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x22);
    let lin = gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 20, 40, 0.3, seed)).expect("valid spec");
    let cen = gen_instance(&InstanceSpec::new(InstanceKind::Censored, 60, 12, 0.3, seed)).expect("valid spec");
    let h = gaussian_matrix(&mut rng, 6, 10);
    let d = random_vector(&mut rng, 6, 1.0);
    vec![
        Box::new(l1_affine_loss(lin.a, lin.b).expect("consistent shapes")),
        Box::new(censored_affine_loss(cen.a, cen.b).expect("consistent shapes")),
        Box::new(hinge_penalty_loss(2.0, h, d).expect("positive weight")),
    ]
}

fn smoothing_suite(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for loss in probe_losses(opts.seed) {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed ^ 0x33);
        let name = loss.name();
        let constants = loss.constants().expect("benchmark losses carry constants");
        let kappa = if opts.fault == Some(Fault::ZeroKappa) { 0.0 } else { constants.kappa };
        let n = loss.dim();
        let mut envelope = Tally::new(format!("{name}: envelope |c̃(x,μ) − c(x)| ≤ κμ"));
        let mut mu_lip = Tally::new(format!("{name}: |c̃(x,μ₁) − c̃(x,μ₂)| ≤ κ|μ₁ − μ₂|"));
        let mut grad_lip = Tally::new(format!("{name}: ‖∇c̃(x,μ) − ∇c̃(z,μ)‖ ≤ (L/μ)‖x − z‖"));
        let mut convex = Tally::new(format!("{name}: midpoint convexity of c̃(·,μ)"));
        let mut fd = Tally::new(format!("{name}: central differences match ∇c̃"));
        for _ in 0..opts.probes {
            let mu = log_uniform(&mut rng, 1e-3, 1.0);
            let x = random_vector(&mut rng, n, 2.0);
            let z = random_vector(&mut rng, n, 2.0);
            let (c, s) = loss.exact_and_smooth(&x, mu);
            let scale = 1e-12 * (1.0 + c.abs());
            envelope.le((s - c).abs(), kappa * mu + scale);

            let mu2 = log_uniform(&mut rng, 1e-3, 1.0);
            mu_lip.le((s - loss.smooth_value(&x, mu2)).abs(), kappa * (mu - mu2).abs() + scale);

            let gx = loss.smooth_gradient(&x, mu);
            let gz = loss.smooth_gradient(&z, mu);
            let lip = constants.lipschitz_factor / mu;
            grad_lip.le(gx.dist2(&gz), lip * x.dist2(&z) * (1.0 + 1e-9) + 1e-12);

            let mid = Vector::from_fn(n, |i| 0.5 * (x[i] + z[i]));
            let avg = 0.5 * (s + loss.smooth_value(&z, mu));
            convex.le(loss.smooth_value(&mid, mu), avg + 1e-12 * (1.0 + avg.abs()));
        }
        let mut attempts = 0;
        while fd.probes < (opts.probes / 10).max(1) && attempts < opts.probes * 10 {
            attempts += 1;
            let mu = log_uniform(&mut rng, 1e-2, 1.0);
            let x = random_vector(&mut rng, n, 2.0);
            let v = random_vector(&mut rng, n, 1.0);
            let v = v.scale(1.0 / v.norm2());
            let slope = |h: f64| (loss.smooth_value(&x.axpy(h, &v), mu) - loss.smooth_value(&x.axpy(-h, &v), mu)) / (2.0 * h);
            let (d1, d2) = (slope(1e-6), slope(5e-7));
            let tol = 1e-6 * d1.abs().max(1.0);
            // disagreeing step sizes mean a regime seam lies within reach
            if (d1 - d2).abs() > 0.25 * tol {
                continue;
            }
            fd.le((d1 - loss.smooth_gradient(&x, mu).dot(&v)).abs(), tol);
        }
        out.extend([envelope, mu_lip, grad_lip, convex, fd].map(Tally::finish));
    }
    out
}

fn prox_suite(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed ^ 0x44);
    let mut feasible = Tally::new("prox output lies in the box");
    let mut nonexp = Tally::new("prox is nonexpansive");
    let mut optimal = Tally::new("prox beats random feasible points");
    let mut grid = Tally::new("1-D prox matches grid search");
    let n = 6;
    for _ in 0..opts.probes {
        let lo = Vector::from_fn(n, |_| rng.gen_range(-1.5..0.5));
        let hi = Vector::from_fn(n, |i| lo[i] + rng.gen_range(0.0..2.0));
        let bounds = FeasibleBox::new(lo.into_vec(), hi.into_vec()).expect("lower ≤ upper");
        let lambda = rng.gen_range(0.0..2.0);
        let g = ProximablePart::scaled_l1(lambda, bounds.clone()).expect("nonnegative weight");
        let theta = log_uniform(&mut rng, 1e-3, 2.0);
        let y = random_vector(&mut rng, n, 3.0);
        let w = random_vector(&mut rng, n, 3.0);
        let p = prox_step(&g, &y, theta).expect("positive theta");
        let q = prox_step(&g, &w, theta).expect("positive theta");
        feasible.le(if bounds.contains(&p) { 0.0 } else { 1.0 }, 0.0);
        nonexp.le(p.dist2(&q), y.dist2(&w) * (1.0 + 1e-12) + 1e-15);

        let obj = |x: &Vector| theta * g.value(x) + 0.5 * x.dist2(&y).powi(2);
        let best = obj(&p);
        for _ in 0..5 {
            let cand = Vector::from_fn(n, |i| rng.gen_range(bounds.lower()[i]..=bounds.upper()[i]));
            optimal.le(best, obj(&cand) + 1e-12);
        }
    }
    for _ in 0..(opts.probes / 20).max(1) {
        let lo = rng.gen_range(-1.0..0.5);
        let hi = lo + rng.gen_range(0.0..1.0);
        let t = rng.gen_range(0.0..1.0);
        let y = rng.gen_range(-2.0..2.0);
        let g = ProximablePart::scaled_l1(t, FeasibleBox::uniform(1, lo, hi).expect("lo ≤ hi")).expect("t ≥ 0");
        let p = prox_step(&g, &Vector::filled(1, y), 1.0).expect("positive theta")[0];
        let phi = |x: f64| t * x.abs() + 0.5 * (x - y) * (x - y);
        let steps = ((hi - lo) / 1e-4).ceil() as usize;
        let brute = (0..=steps)
            .map(|i| phi((lo + i as f64 * 1e-4).min(hi)))
            .fold(f64::INFINITY, f64::min);
        grid.le(phi(p), brute + 1e-8);
    }
    [feasible, nonexp, optimal, grid].map(Tally::finish).into()
}

fn energy_suite(opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut feasible = Tally::new("iterates stay feasible");
    let mut gamma = Tally::new("γₖ is non-increasing");
    let mut descent = Tally::new("energy Eₖ is non-increasing");
    let mut w_pos = Tally::new("Wₖ ≥ 0");
    let spec = InstanceSpec::new(InstanceKind::LinearL1, 20, 40, 0.3, opts.seed);
    let inst = gen_instance(&spec).expect("valid spec");
    let prob = objective_for(&inst, spec.kind).expect("consistent shapes");
    let mut cfg = default_config(spec.n);
    cfg.maxiter = 300;
    let run = sapg_solve(&prob, &cfg);
    let reference = compute_reference(&prob, &cfg);
    match (run, reference) {
        (Ok(run), Ok(reference)) => {
            feasible.le(if prob.reg().bounds().contains(&run.x_final) { 0.0 } else { 1.0 }, 0.0);
            for w in run.trace.records.windows(2) {
                gamma.le(w[1].gamma, w[0].gamma);
            }
            let tol = 10.0 * reference.uncertainty;
            match energy_trace(&prob, &cfg, &reference) {
                Ok(rows) => {
                    descent.le(worst_descent_violation(&rows, &cfg), tol);
                    for r in &rows {
                        w_pos.le(-r.w, tol);
                    }
                }
                Err(_) => descent.le(1.0, 0.0),
            }
        }
        _ => feasible.le(1.0, 0.0),
    }
    [feasible, gamma, descent, w_pos].map(Tally::finish).into()
}
