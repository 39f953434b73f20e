//! Trigonometric moment problems `∫₀ᵀ u(s)e^{iμ_k s} ds = x_k` with real `u`,
//! solved through the biorthogonal family of a truncated exponential set.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{ingham_package, resonance_witness};
use crate::control::{exp_integral, ControlSignal, Term};
use crate::error::{Error, Result};

/// Condition number above which the Gram matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest `|Im x_l|` accepted as real.
pub const REAL_TOL: f64 = 1e-12;

/// Moment frequencies around level `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet {
    pub l: usize,
    pub cutoff: usize,
    /// `μ_k = π²(k² − l²)`, k = 1..N.
    pub mu: Vec<f64>,
    /// `−μ_1..−μ_N` followed by `μ_k` for `k ≠ l`.
    pub omega: Vec<f64>,
    /// Minimal pairwise distance in `omega`.
    pub gap: f64,
}

impl FrequencySet {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Position of the `l`-th (zero) frequency in `omega`.
    pub fn zero_index(&self) -> usize {
        self.l - 1
    }
}

pub fn build_frequencies(l: usize, cutoff: usize) -> Result<FrequencySet> {
    if l == 0 || l > cutoff {
        return Err(Error::Domain(format!("base index {l} outside 1..={cutoff}")));
    }
    if let Some((m, p)) = resonance_witness(l, 2 * l) {
        return Err(Error::Resonance { k: l, m, l: p });
    }
    let l2 = (l * l) as i64;
    let ints: Vec<i64> = (1..=cutoff as i64).map(|k| k * k - l2).collect();
    let mut sym: Vec<i64> = ints.iter().map(|d| -d).collect();
    sym.extend(ints.iter().enumerate().filter(|&(i, _)| i + 1 != l).map(|(_, d)| *d));
    let mut sorted = sym.clone();
    sorted.sort_unstable();
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).min().map_or(f64::INFINITY, |g| g as f64 * PI * PI);
    Ok(FrequencySet {
        l,
        cutoff,
        mu: ints.iter().map(|&d| d as f64 * PI * PI).collect(),
        omega: sym.iter().map(|&d| d as f64 * PI * PI).collect(),
        gap,
    })
}

/// Biorthogonal family to `{e^{iω_m t}}` on `(0, T)` in the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalFamily {
    pub freq: FrequencySet,
    pub horizon: f64,
    /// Column `k` holds `v_k = Σ_m coefficients[(m, k)]·e^{iω_m t}`.
    pub coefficients: DMatrix<Complex64>,
    pub gram: DMatrix<Complex64>,
    pub gram_min: f64,
    pub gram_max: f64,
}

/// `G_{mn} = ∫₀ᵀ e^{i(ω_n − ω_m)t} dt`.
pub fn gram_matrix(omega: &[f64], horizon: f64) -> DMatrix<Complex64> {
    let n = omega.len();
    DMatrix::from_fn(n, n, |m, k| {
        if m == k {
            Complex64::new(horizon, 0.0)
        } else {
            exp_integral(omega[k] - omega[m], horizon)
        }
    })
}

/// Smallest horizon allowed by the Ingham condition for this set.
/// The gap is capped at π², the truncation-uniform value.
pub fn required_horizon(freq: &FrequencySet) -> f64 {
    2.0 * PI / freq.gap.min(PI * PI)
}

pub fn build_biorthogonal(freq: &FrequencySet, horizon: f64) -> Result<BiorthogonalFamily> {
    let required = required_horizon(freq);
    if !(horizon > required) {
        return Err(Error::Horizon { horizon, required });
    }
    let gram = gram_matrix(&freq.omega, horizon);
    let eig = SymmetricEigen::new(gram.clone());
    let gram_min = eig.eigenvalues.min();
    let gram_max = eig.eigenvalues.max();
    let cond = if gram_min > 0.0 { gram_max / gram_min } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let coefficients = gram
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned(cond))?
        .inverse();
    Ok(BiorthogonalFamily { freq: freq.clone(), horizon, coefficients, gram, gram_min, gram_max })
}

impl BiorthogonalFamily {
    /// `max |G·C − I|`, the biorthogonality defect.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.freq.len();
        let p = &self.gram * &self.coefficients;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - d).norm());
            }
        }
        worst
    }
}

/// Real `u` on `(0, T)` with `∫u e^{iμ_k s} ds = x_k` for `k = 1..N`.
///
/// The extended targets are `x̃ = (x̄_1..x̄_N, x_k for k ≠ l)`, matching the
/// frequencies `(−μ_k, μ_k)`; the expansion `u = Σ c_m e^{iω_m t}` with
/// `c = G⁻¹x̃` is conjugate-symmetric and hence real.
pub fn solve_moments(fam: &BiorthogonalFamily, targets: &[Complex64]) -> Result<ControlSignal> {
    Ok(control_from_coefficients(fam, &moment_coefficients(fam, targets)?))
}

/// The coefficient vector `c = G⁻¹x̃` behind [`solve_moments`], aligned with `fam.freq.omega`.
pub fn moment_coefficients(fam: &BiorthogonalFamily, targets: &[Complex64]) -> Result<DVector<Complex64>> {
    let freq = &fam.freq;
    let n = freq.cutoff;
    if targets.len() != n {
        return Err(Error::Domain(format!("expected {n} targets, got {}", targets.len())));
    }
    let xl = targets[freq.l - 1];
    if xl.im.abs() > REAL_TOL * xl.re.abs().max(1.0) {
        return Err(Error::Domain(format!("x_{} = {xl} must be real for a real control", freq.l)));
    }
    let mut ext: Vec<Complex64> = Vec::with_capacity(freq.len());
    for (k, x) in targets.iter().enumerate() {
        ext.push(if k + 1 == freq.l { Complex64::new(x.re, 0.0) } else { *x });
    }
    for (k, x) in targets.iter().enumerate() {
        if k + 1 != freq.l {
            ext.push(x.conj());
        }
    }
    Ok(&fam.coefficients * DVector::from_vec(ext))
}

/// `Σ c_m e^{iω_m t}` on `(0, T)`, dropping zero terms.
pub fn control_from_coefficients(fam: &BiorthogonalFamily, c: &DVector<Complex64>) -> ControlSignal {
    let terms = fam
        .freq
        .omega
        .iter()
        .zip(c.iter())
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(&omega, &coeff)| Term { coeff, omega })
        .collect();
    ControlSignal::BiorthogonalSum { horizon: fam.horizon, terms }
}

/// `(gram_min, gram_max)`, with a check that they sit inside the Ingham frame
/// `[C₁², C₂²]` when `T = 4/π` and the gap is at least π².
pub fn frame_certificate(fam: &BiorthogonalFamily) -> (f64, f64) {
    if (fam.horizon - 4.0 / PI).abs() < 1e-12 && fam.freq.gap >= PI * PI * (1.0 - 1e-12) {
        let ing = ingham_package();
        debug_assert!(
            fam.gram_min >= ing.c1_sq - 1e-8 && fam.gram_max <= ing.c2_sq + 1e-8,
            "Gram spectrum [{}, {}] leaves the Ingham frame",
            fam.gram_min,
            fam.gram_max
        );
    }
    (fam.gram_min, fam.gram_max)
}

/// `(C₂⁻¹|x|, 2C₁⁻¹|x|)` for the targets `x`.
pub fn norm_sandwich(targets: &[Complex64]) -> (f64, f64) {
    let ing = ingham_package();
    let s = targets.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    (s / ing.c2_sq.sqrt(), 2.0 * s / ing.c1_sq.sqrt())
}
