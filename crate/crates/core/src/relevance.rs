//! Frame relevance profiles: weighted sums of Gaussian radial basis functions
//! over the progress index.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BASIS_COUNT: usize = 10;
pub const DEFAULT_SPREAD: f64 = 5.0;

const RIDGE: f64 = 1e-8;

/// `Q` unnormalized Gaussian bumps `exp(-s (d - c_q)²)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    centers: Vec<f64>,
    spread: f64,
}

impl RbfBasis {
    pub fn new(centers: Vec<f64>, spread: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("an RBF basis needs at least one center"));
        }
        if !(spread > 0.0) || !spread.is_finite() {
            return Err(Error::invalid(format!("RBF spread must be positive, got {spread}")));
        }
        if centers.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::invalid("RBF centers must lie in [0, 1]"));
        }
        if centers.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("RBF centers must be sorted ascending"));
        }
        Ok(RbfBasis { centers, spread })
    }

    /// `count` centers spread uniformly over `[0, 1]`, endpoints included.
    pub fn uniform(count: usize, spread: f64) -> Result<Self> {
        let centers = match count {
            0 => Vec::new(),
            1 => vec![0.5],
            _ => (0..count).map(|q| q as f64 / (count - 1) as f64).collect(),
        };
        RbfBasis::new(centers, spread)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    /// `[φ_1(d), …, φ_Q(d)]`.
    pub fn rbf_vector(&self, d: f64) -> Result<DVector<f64>> {
        check_progress(d)?;
        Ok(self.features(d))
    }

    fn features(&self, d: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.centers.iter().map(|c| (-self.spread * (d - c).powi(2)).exp()),
        )
    }

    /// Rows are `Φ(d_g)ᵀ` for each abscissa.
    pub fn design_matrix(&self, abscissae: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(abscissae.len(), self.len());
        for (row, &d) in abscissae.iter().enumerate() {
            m.set_row(row, &self.rbf_vector(d)?.transpose());
        }
        Ok(m)
    }
}

impl Default for RbfBasis {
    fn default() -> Self {
        RbfBasis::uniform(DEFAULT_BASIS_COUNT, DEFAULT_SPREAD).expect("default basis is valid")
    }
}

fn check_progress(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("progress {d} outside [0, 1]")));
    }
    Ok(())
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Relevance weight function `f(d) = Φ(d)ᵀ ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct RelevanceProfile {
    basis: RbfBasis,
    omega: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    #[serde(rename = "Q")]
    q: usize,
    centers: Vec<f64>,
    spread: f64,
    omega: Vec<f64>,
}

impl TryFrom<ProfileRepr> for RelevanceProfile {
    type Error = Error;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        if repr.q != repr.centers.len() {
            return Err(Error::invalid(format!(
                "profile declares Q = {} but lists {} centers",
                repr.q,
                repr.centers.len()
            )));
        }
        let basis = RbfBasis::new(repr.centers, repr.spread)?;
        RelevanceProfile::new(basis, DVector::from_vec(repr.omega))
    }
}

impl From<RelevanceProfile> for ProfileRepr {
    fn from(p: RelevanceProfile) -> Self {
        ProfileRepr {
            q: p.basis.len(),
            spread: p.basis.spread,
            centers: p.basis.centers,
            omega: p.omega.iter().copied().collect(),
        }
    }
}

impl RelevanceProfile {
    pub fn new(basis: RbfBasis, omega: DVector<f64>) -> Result<Self> {
        if omega.len() != basis.len() {
            return Err(Error::invalid(format!(
                "omega has {} entries, basis has {}",
                omega.len(),
                basis.len()
            )));
        }
        Ok(RelevanceProfile { basis, omega })
    }

    pub fn zeros(basis: RbfBasis) -> Self {
        let omega = DVector::zeros(basis.len());
        RelevanceProfile { basis, omega }
    }

    pub fn basis(&self) -> &RbfBasis {
        &self.basis
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    /// `Φ(d)ᵀ ω`, not clamped to `[0, 1]`.
    pub fn evaluate(&self, d: f64) -> Result<f64> {
        check_progress(d)?;
        Ok(self.basis.features(d).dot(&self.omega))
    }

    /// Analytic derivative `Σ_q ω_q · (−2 s (d − c_q)) φ_q(d)`.
    pub fn derivative(&self, d: f64) -> Result<f64> {
        check_progress(d)?;
        let s = self.basis.spread;
        Ok(self
            .basis
            .centers
            .iter()
            .zip(self.omega.iter())
            .map(|(c, w)| w * -2.0 * s * (d - c) * (-s * (d - c).powi(2)).exp())
            .sum())
    }

    /// Largest violation of `0 ≤ f ≤ 1` over the given abscissae.
    pub fn max_violation(&self, grid: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &d in grid {
            let f = self.evaluate(d)?;
            worst = worst.max(-f).max(f - 1.0);
        }
        Ok(worst)
    }
}

/// Least-squares weights whose profile follows `targets` at the abscissae,
/// with a `1e-8` ridge on the normal equations.
pub fn fit_targets(basis: &RbfBasis, abscissae: &[f64], targets: &[f64]) -> Result<DVector<f64>> {
    if abscissae.len() != targets.len() {
        return Err(Error::invalid("abscissae and targets differ in length"));
    }
    if abscissae.len() < basis.len() {
        return Err(Error::invalid(format!(
            "fit grid has {} points, basis has {} functions",
            abscissae.len(),
            basis.len()
        )));
    }
    let phi = basis.design_matrix(abscissae)?;
    let t = DVector::from_row_slice(targets);
    let mut normal = phi.tr_mul(&phi);
    for i in 0..basis.len() {
        normal[(i, i)] += RIDGE;
    }
    let rhs = phi.tr_mul(&t);
    if let Some(chol) = normal.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("RBF normal equations are singular".to_string()))
}

/// Weights making `f(d) ≈ d` on a uniform grid of `grid_size` points.
pub fn fit_ramp_init(basis: &RbfBasis, grid_size: usize) -> Result<DVector<f64>> {
    let grid = uniform_grid(grid_size);
    fit_targets(basis, &grid, &grid)
}
