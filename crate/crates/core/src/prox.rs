//! Closed-form proximal steps for separable penalties over a box.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxError {
    #[error("prox scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("box bound lengths differ ({lower} vs {upper})")]
    LengthMismatch { lower: usize, upper: usize },
    #[error("box has lower > upper at coordinate {0}")]
    EmptyInterval(usize),
    #[error("box bound at coordinate {0} is NaN")]
    NanBound(usize),
    #[error("penalty weight must be nonnegative, got {0}")]
    NegativeWeight(f64),
}

/// Componentwise interval constraints `lower ≤ x ≤ upper`; infinite bounds
/// leave a coordinate free.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FeasibleBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProxError> {
        if lower.len() != upper.len() {
            return Err(ProxError::LengthMismatch { lower: lower.len(), upper: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(ProxError::NanBound(i));
            }
            if l > u {
                return Err(ProxError::EmptyInterval(i));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self, ProxError> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn unbounded(n: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// Euclidean projection onto the box.
pub fn project_box(bounds: &FeasibleBox, x: &Vector) -> Vector {
    debug_assert_eq!(bounds.len(), x.len());
    Vector::from_vec_unchecked(
        x.iter()
            .zip(bounds.lower.iter().zip(&bounds.upper))
            .map(|(&v, (&l, &u))| v.max(l).min(u))
            .collect(),
    )
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    /// `λ‖x‖₁`
    ScaledL1 { lambda: f64 },
    Zero,
}

/// The nonsmooth part `g` together with the feasible box `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximablePart {
    penalty: Penalty,
    bounds: FeasibleBox,
}

impl ProximablePart {
    pub fn new(penalty: Penalty, bounds: FeasibleBox) -> Result<Self, ProxError> {
        if let Penalty::ScaledL1 { lambda } = penalty {
            if !(lambda >= 0.0) {
                return Err(ProxError::NegativeWeight(lambda));
            }
        }
        Ok(Self { penalty, bounds })
    }

    pub fn scaled_l1(lambda: f64, bounds: FeasibleBox) -> Result<Self, ProxError> {
        Self::new(Penalty::ScaledL1 { lambda }, bounds)
    }

    pub fn zero(bounds: FeasibleBox) -> Self {
        Self { penalty: Penalty::Zero, bounds }
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn bounds(&self) -> &FeasibleBox {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn lambda(&self) -> f64 {
        match self.penalty {
            Penalty::ScaledL1 { lambda } => lambda,
            Penalty::Zero => 0.0,
        }
    }

    /// `g(x)`, without the indicator of the box.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self.penalty {
            Penalty::ScaledL1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            Penalty::Zero => 0.0,
        }
    }
}

/// `argmin_{x ∈ X} θ g(x) + ½‖x − y‖²`.
///
/// Every supported `g` is separable, and each coordinate subproblem is a 1-D
/// convex problem on an interval, so the minimizer is the unconstrained one
/// clamped to the interval.
pub fn prox_step(g: &ProximablePart, y: &Vector, theta: f64) -> Result<Vector, ProxError> {
    if !(theta > 0.0) {
        return Err(ProxError::NonPositiveScale(theta));
    }
    Ok(prox_unchecked(g, y, theta))
}

pub(crate) fn prox_unchecked(g: &ProximablePart, y: &Vector, theta: f64) -> Vector {
    debug_assert_eq!(g.dim(), y.len());
    match g.penalty {
        Penalty::Zero => project_box(&g.bounds, y),
        Penalty::ScaledL1 { lambda } => {
            let t = theta * lambda;
            Vector::from_vec_unchecked(
                y.iter()
                    .zip(g.bounds.lower.iter().zip(&g.bounds.upper))
                    .map(|(&v, (&l, &u))| soft_threshold(v, t).max(l).min(u))
                    .collect(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box(n: usize) -> FeasibleBox {
        FeasibleBox::uniform(n, 0.0, 1.0).unwrap()
    }

    fn scalar(v: f64) -> Vector {
        Vector::filled(1, v)
    }

    #[test]
    fn prox_soft_threshold_inside_box() {
        let g = ProximablePart::scaled_l1(0.1, unit_box(1)).unwrap();
        let x = prox_step(&g, &scalar(0.5), 1.0).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn prox_clamps_at_bounds() {
        let g = ProximablePart::scaled_l1(0.01, unit_box(1)).unwrap();
        assert_eq!(prox_step(&g, &scalar(-0.3), 10.0).unwrap()[0], 0.0);
        assert_eq!(prox_step(&g, &scalar(2.0), 10.0).unwrap()[0], 1.0);
    }

    #[test]
    fn prox_rejects_nonpositive_scale() {
        let g = ProximablePart::zero(unit_box(1));
        assert_eq!(prox_step(&g, &scalar(0.2), 0.0), Err(ProxError::NonPositiveScale(0.0)));
    }

    #[test]
    fn project_box_examples() {
        let b = unit_box(2);
        let x = Vector::new(vec![-1.0, 0.5]).unwrap();
        assert_eq!(project_box(&b, &x).as_slice(), &[0.0, 0.5]);
        let feasible = Vector::new(vec![0.25, 1.0]).unwrap();
        assert_eq!(project_box(&b, &feasible), feasible);
        let free = FeasibleBox::unbounded(2);
        let far = Vector::new(vec![-1e9, 3e7]).unwrap();
        assert_eq!(project_box(&free, &far), far);
    }

    #[test]
    fn box_validation() {
        assert_eq!(FeasibleBox::new(vec![1.0], vec![0.0]), Err(ProxError::EmptyInterval(0)));
        assert!(FeasibleBox::new(vec![0.0], vec![0.0, 1.0]).is_err());
        assert!(FeasibleBox::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(ProximablePart::scaled_l1(-0.1, unit_box(1)).is_err());
    }

    #[test]
    fn zero_penalty_is_projection() {
        let g = ProximablePart::zero(unit_box(3));
        let y = Vector::new(vec![-0.2, 0.3, 1.7]).unwrap();
        assert_eq!(prox_step(&g, &y, 5.0).unwrap(), project_box(g.bounds(), &y));
    }

    fn objective(lambda: f64, theta: f64, y: f64, x: f64) -> f64 {
        theta * lambda * x.abs() + 0.5 * (x - y) * (x - y)
    }

    proptest! {
        #[test]
        fn prox_is_feasible_and_nonexpansive(
            y1 in prop::collection::vec(-3.0f64..3.0, 5),
            y2 in prop::collection::vec(-3.0f64..3.0, 5),
            lambda in 0.0f64..2.0,
            theta in 0.01f64..3.0,
        ) {
            let bounds = FeasibleBox::new(vec![-0.5, 0.0, -1.0, f64::NEG_INFINITY, 0.2],
                                          vec![0.5, 1.0, 2.0, 0.0, f64::INFINITY]).unwrap();
            let g = ProximablePart::scaled_l1(lambda, bounds).unwrap();
            let y1 = Vector::new(y1).unwrap();
            let y2 = Vector::new(y2).unwrap();
            let p1 = prox_step(&g, &y1, theta).unwrap();
            let p2 = prox_step(&g, &y2, theta).unwrap();
            prop_assert!(g.bounds().contains(&p1));
            prop_assert!(p1.dist2(&p2) <= y1.dist2(&y2) + 1e-12);
        }

        #[test]
        fn prox_beats_random_feasible_points(
            y in -3.0f64..3.0, lambda in 0.0f64..2.0, theta in 0.01f64..3.0,
            lo in -2.0f64..1.0, width in 0.0f64..2.0,
            probes in prop::collection::vec(0.0f64..1.0, 100),
        ) {
            let bounds = FeasibleBox::uniform(1, lo, lo + width).unwrap();
            let g = ProximablePart::scaled_l1(lambda, bounds).unwrap();
            let x = prox_step(&g, &scalar(y), theta).unwrap()[0];
            let fx = objective(lambda, theta, y, x);
            for t in probes {
                let z = lo + t * width;
                prop_assert!(objective(lambda, theta, y, z) >= fx - 1e-10);
            }
        }
    }
}
