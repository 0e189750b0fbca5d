//! Seeded synthetic instances for the ℓ1-penalized regression benchmarks.
//!
//! Draws come from `Xoshiro256PlusPlus` seeded with a 64-bit seed, in this
//! order: the m×n Gaussian matrix (row-major, Box–Muller pairs), the n
//! uniform entries of `x_true`, the Fisher–Yates shuffle of `x_true`, then the
//! m uniform noise draws. The same seed always gives the same instance.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{orthonormalize_columns, orthonormalize_rows, DenseMatrix, LinalgError, Vector};
use crate::model::CompositeProblem;
use crate::prox::{FeasibleBox, ProximablePart};
use crate::smoothing::{censored_affine_loss, l1_affine_loss, SmoothingError};

/// `λ` of the ℓ1 penalty in both benchmark problems.
pub const PENALTY_WEIGHT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Smoothing(#[from] SmoothingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// `min ‖Ax − b‖₁ + 0.01‖x‖₁` over `[0, 1]ⁿ`
    LinearL1,
    /// `min ‖max{Ax, 0} − b‖₁ + 0.01‖x‖₁` over `[0, 1]ⁿ`
    Censored,
}

fn default_noise() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    pub spar: f64,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
    pub kind: InstanceKind,
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind, m: usize, n: usize, spar: f64, seed: u64) -> Self {
        Self { m, n, spar, seed, noise_scale: default_noise(), kind }
    }

    /// Number of nonzeros, `round(spar·n)` with halves rounded up.
    pub fn support_size(&self) -> usize {
        (self.spar * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |msg: String| Err(DatagenError::InvalidSpec(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("m and n must be positive (got {}x{})", self.m, self.n));
        }
        if !(self.spar > 0.0 && self.spar <= 1.0) {
            return bad(format!("spar must lie in (0, 1], got {}", self.spar));
        }
        if self.support_size() == 0 {
            return bad(format!("spar {} leaves no nonzeros for n = {}", self.spar, self.n));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise_scale must be finite and nonnegative, got {}", self.noise_scale));
        }
        if self.kind == InstanceKind::LinearL1 && self.m > self.n {
            return bad(format!("linear_l1 instances need m <= n (got {}x{})", self.m, self.n));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: InstanceSpec,
    /// Orthonormal rows when m ≤ n, orthonormal columns otherwise.
    pub a: DenseMatrix,
    pub b: Vector,
    pub x_true: Vector,
    /// The uniform draws added to `A·x_true` before any clipping.
    pub noise: Vector,
}

/// Standard normals by Box–Muller, both variates of each pair used.
fn fill_gaussian(rng: &mut Xoshiro256PlusPlus, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count + 1);
    while out.len() < count {
        let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1], keeps ln finite
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        out.push(r * c);
        out.push(r * s);
    }
    out.truncate(count);
    out
}

pub fn gen_instance(spec: &InstanceSpec) -> Result<Instance, DatagenError> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);

    let b_raw = DenseMatrix::new(m, n, fill_gaussian(&mut rng, m * n))?;
    let a = if m <= n { orthonormalize_rows(&b_raw)? } else { orthonormalize_columns(&b_raw)? };

    let s = spec.support_size();
    let mut x_true: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    for v in x_true.iter_mut().take(n - s) {
        *v = 0.0;
    }
    x_true.shuffle(&mut rng);
    let x_true = Vector::new(x_true)?;

    let noise = Vector::from_fn(m, |_| spec.noise_scale * rng.gen::<f64>());
    let clean = a.matvec(&x_true)?;
    let mut b = clean.axpy(1.0, &noise);
    if spec.kind == InstanceKind::Censored {
        for v in b.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(Instance { spec: spec.clone(), a, b, x_true, noise })
}

/// Binds the loss matching `kind`, `g = 0.01‖x‖₁`, and the box `[0, 1]ⁿ`.
pub fn objective_for(instance: &Instance, kind: InstanceKind) -> Result<CompositeProblem, DatagenError> {
    let n = instance.a.cols();
    let reg = ProximablePart::scaled_l1(PENALTY_WEIGHT, FeasibleBox::uniform(n, 0.0, 1.0).expect("0 <= 1"))
        .expect("positive weight");
    let loss: Box<dyn crate::smoothing::SmoothableLoss> = match kind {
        InstanceKind::LinearL1 => Box::new(l1_affine_loss(instance.a.clone(), instance.b.clone())?),
        InstanceKind::Censored => Box::new(censored_affine_loss(instance.a.clone(), instance.b.clone())?),
    };
    Ok(CompositeProblem::new(loss, reg).expect("dimensions agree by construction"))
}

fn write_column<P: AsRef<Path>>(path: P, v: &[f64]) -> Result<(), DatagenError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for x in v {
        w.serialize([*x])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<P: AsRef<Path>>(path: P) -> Result<Vec<Vec<f64>>, DatagenError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

fn read_column<P: AsRef<Path>>(path: P) -> Result<Vector, DatagenError> {
    let rows = read_rows(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        match row.as_slice() {
            [v] => out.push(*v),
            _ => return Err(DatagenError::InvalidSpec("column file must have one value per line".into())),
        }
    }
    Ok(Vector::new(out)?)
}

/// Writes `A.csv` (row-major, no header), `b.csv`, `x_true.csv`, `noise.csv`
/// (one value per line) and `spec.json` into `dir`. Values are printed with
/// shortest round-trip formatting, so reading them back is exact.
pub fn write_instance(dir: &Path, instance: &Instance) -> Result<(), DatagenError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join("A.csv"))?;
    for i in 0..instance.a.rows() {
        w.serialize(instance.a.row(i))?;
    }
    w.flush()?;
    write_column(dir.join("b.csv"), &instance.b)?;
    write_column(dir.join("x_true.csv"), &instance.x_true)?;
    write_column(dir.join("noise.csv"), &instance.noise)?;
    fs::write(dir.join("spec.json"), serde_json::to_string_pretty(&instance.spec)? + "\n")?;
    Ok(())
}

pub fn read_instance(dir: &Path) -> Result<Instance, DatagenError> {
    let spec: InstanceSpec = serde_json::from_str(&fs::read_to_string(dir.join("spec.json"))?)?;
    let a = DenseMatrix::from_rows(&read_rows(dir.join("A.csv"))?)?;
    let b = read_column(dir.join("b.csv"))?;
    let x_true = read_column(dir.join("x_true.csv"))?;
    let noise_path = dir.join("noise.csv");
    let noise = if noise_path.exists() { read_column(noise_path)? } else { Vector::zeros(b.len()) };
    if a.rows() != b.len() || a.cols() != x_true.len() {
        return Err(DatagenError::InvalidSpec(format!(
            "inconsistent instance files: A is {}x{}, b has {}, x_true has {}",
            a.rows(),
            a.cols(),
            b.len(),
            x_true.len()
        )));
    }
    Ok(Instance { spec, a, b, x_true, noise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

    #[test]
    fn table_cell_sparsity() {
        let inst = gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 150, 300, 0.2, 9)).unwrap();
        let zeros = inst.x_true.iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 240);
        assert!(inst.x_true.iter().all(|&v| (0.0..1.0).contains(&v)));
        assert!(orthonormality_defect(&inst.a) <= 1e-10);
    }

    #[test]
    fn same_seed_same_instance() {
        let spec = InstanceSpec::new(InstanceKind::Censored, 30, 10, 0.3, 77);
        assert_eq!(gen_instance(&spec).unwrap(), gen_instance(&spec).unwrap());
        let other = InstanceSpec { seed: 78, ..spec.clone() };
        assert_ne!(gen_instance(&spec).unwrap().a, gen_instance(&other).unwrap().a);
    }

    #[test]
    fn linear_reconstruction_identity() {
        let inst = gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 20, 40, 0.5, 3)).unwrap();
        let ax = inst.a.matvec(&inst.x_true).unwrap();
        assert_eq!(ax.axpy(1.0, &inst.noise), inst.b);
        assert!(inst.noise.iter().all(|&v| (0.0..0.01).contains(&v)));
    }

    #[test]
    fn censored_has_orthonormal_columns_and_clipped_rhs() {
        let inst = gen_instance(&InstanceSpec::new(InstanceKind::Censored, 50, 10, 0.2, 5)).unwrap();
        assert_eq!((inst.a.rows(), inst.a.cols()), (50, 10));
        assert!(orthonormality_defect(&inst.a.transpose()) <= 1e-10);
        assert!(inst.b.iter().all(|&v| v >= 0.0));
        let raw = inst.a.matvec(&inst.x_true).unwrap().axpy(1.0, &inst.noise);
        for (bi, ri) in inst.b.iter().zip(raw.iter()) {
            assert_eq!(*bi, ri.max(0.0));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 10, 5, 0.2, 1)).is_err());
        assert!(gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 5, 10, 0.0, 1)).is_err());
        assert!(gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 5, 10, 0.01, 1)).is_err());
        assert!(gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 0, 10, 0.5, 1)).is_err());
    }

    #[test]
    fn objective_binding() {
        let inst = gen_instance(&InstanceSpec::new(InstanceKind::LinearL1, 4, 8, 0.5, 2)).unwrap();
        let prob = objective_for(&inst, InstanceKind::LinearL1).unwrap();
        assert_eq!(prob.loss().name(), "l1_affine");
        assert_eq!(prob.reg().lambda(), 0.01);
        assert_eq!(prob.reg().bounds().lower(), &[0.0; 8]);
        assert_eq!(prob.reg().bounds().upper(), &[1.0; 8]);
        let cens = objective_for(&inst, InstanceKind::Censored).unwrap();
        assert_eq!(cens.loss().name(), "censored_affine");
    }

    #[test]
    fn files_roundtrip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let inst = gen_instance(&InstanceSpec::new(InstanceKind::Censored, 12, 5, 0.4, 11)).unwrap();
        write_instance(dir.path(), &inst).unwrap();
        assert_eq!(read_instance(dir.path()).unwrap(), inst);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sparsity_exact_and_shuffle_is_permutation(n in 1usize..60, spar in 0.05f64..1.0, seed in 0u64..1000) {
            let spec = InstanceSpec::new(InstanceKind::LinearL1, 1, n, spar, seed);
            prop_assume!(spec.support_size() >= 1);
            let inst = gen_instance(&spec).unwrap();
            let zeros = inst.x_true.iter().filter(|&&v| v == 0.0).count();
            prop_assert_eq!(zeros, n - spec.support_size());
            prop_assert!(orthonormality_defect(&inst.a) <= 1e-10);

            // replay the draws without the shuffle and compare multisets
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let _ = fill_gaussian(&mut rng, n);
            let mut unshuffled: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            for v in unshuffled.iter_mut().take(n - spec.support_size()) { *v = 0.0; }
            let mut got = inst.x_true.clone().into_vec();
            unshuffled.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            prop_assert_eq!(got, unshuffled);
        }
    }
}
