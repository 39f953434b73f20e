//! Dirichlet eigenbasis of `A = -Δ` on (0,1), truncated modal states, Sobolev
//! norms and the coupling operator `B` in that basis.
//!
//! Eigenfunctions are `φ_k(x) = √2 sin(πkx)` with eigenvalues `λ_k = π²k²`.
//! Indices are 1-based throughout the public API: `coeffs[k - 1]` is `⟨φ_k, ψ⟩`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Rule;

/// Default cutoff for operator-norm estimation.
pub const NORM_CUTOFF: usize = 40;
/// Relative change between cutoffs N and 2N under which a norm counts as converged.
pub const NORM_CONVERGENCE_TOL: f64 = 1e-6;
/// Tolerance of the "normalized" flag on modal states.
pub const NORMALIZED_TOL: f64 = 1e-9;

/// `λ_k = π²k²`.
pub fn eigenvalue(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("eigenvalue index must be >= 1".into()));
    }
    Ok(lambda(k))
}

#[inline]
pub(crate) fn lambda(k: usize) -> f64 {
    let kf = k as f64;
    PI * PI * kf * kf
}

/// Weight `(πk)^s` of mode `k` in the `H^s_(0)` norm.
#[inline]
pub fn sobolev_weight(k: usize, s: f64) -> f64 {
    (PI * k as f64).powf(s)
}

/// Truncated eigenbasis representation of a wave function at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

#[derive(Serialize, Deserialize)]
struct ModalStateRepr {
    cutoff: usize,
    coeffs: Vec<[f64; 2]>,
    time: f64,
}

impl Serialize for ModalState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModalStateRepr {
            cutoff: self.cutoff(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            time: self.time,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModalState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ModalStateRepr::deserialize(d)?;
        if r.cutoff != r.coeffs.len() || r.cutoff == 0 {
            return Err(serde::de::Error::custom(format!(
                "cutoff {} does not match {} coefficients",
                r.cutoff,
                r.coeffs.len()
            )));
        }
        Ok(ModalState {
            coeffs: r.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            time: r.time,
        })
    }
}

impl ModalState {
    pub fn new(coeffs: Vec<Complex64>, time: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("modal state needs at least one coefficient".into()));
        }
        Ok(Self { coeffs, time })
    }

    /// The eigenstate `φ_k` at time 0 in a basis truncated at `cutoff`.
    pub fn eigenstate(cutoff: usize, k: usize) -> Result<Self> {
        if k == 0 || k > cutoff {
            return Err(Error::Domain(format!("mode {k} outside cutoff {cutoff}")));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); cutoff];
        coeffs[k - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { coeffs, time: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.coeffs.len()
    }

    /// `⟨φ_k, ψ⟩`.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k - 1]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs() <= NORMALIZED_TOL
    }

    /// Mass in the last two retained modes.
    pub fn tail_mass(&self) -> f64 {
        let n = self.cutoff();
        self.coeffs[n.saturating_sub(2)..].iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for c in &mut self.coeffs {
            *c /= n;
        }
        self
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * z).collect(),
            time: self.time,
        }
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ModalState) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            time: self.time,
        }
    }

    /// `‖self − other‖_(s)`; both states must share a cutoff.
    pub fn sobolev_distance(&self, other: &ModalState, s: f64) -> f64 {
        assert_eq!(self.cutoff(), other.cutoff(), "cutoff mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| (sobolev_weight(i + 1, s) * (a - b).norm()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        sobolev_norm(self, s)
    }

    pub fn free_evolve(&self, dt: f64) -> Self {
        free_evolve(self, dt)
    }

    /// Same coefficients, truncated or zero-padded to `cutoff`.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(cutoff, Complex64::new(0.0, 0.0));
        Self { coeffs, time: self.time }
    }
}

/// Exact free flow `e^{-iA dt}`: multiplies `c_k` by `e^{-iλ_k dt}`.
pub fn free_evolve(state: &ModalState, dt: f64) -> ModalState {
    ModalState {
        coeffs: state
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -lambda(i + 1) * dt))
            .collect(),
        time: state.time + dt,
    }
}

/// `(Σ_k |(πk)^s c_k|²)^{1/2}`.
pub fn sobolev_norm(state: &ModalState, s: f64) -> f64 {
    state
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (sobolev_weight(i + 1, s) * c.norm()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Analytic families of coupling operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Multiplication by `x²`.
    XSquared,
}

/// `⟨φ_j, x²φ_k⟩ = 2∫₀¹ x² sin(πjx) sin(πkx) dx`.
///
/// Off the diagonal this is `2(−1)^{j−k}/((j−k)²π²) − 2(−1)^{j+k}/((j+k)²π²)`,
/// of magnitude `8jk/((j²−k²)²π²)`; on the diagonal `1/3 − 1/(2k²π²)`.
pub fn x_squared_entry(j: usize, k: usize) -> f64 {
    let pi2 = PI * PI;
    if j == k {
        let kf = k as f64;
        return 1.0 / 3.0 - 1.0 / (2.0 * kf * kf * pi2);
    }
    let d = j as f64 - k as f64;
    let s = (j + k) as f64;
    // (−1)^{j−k} = (−1)^{j+k}
    let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
    2.0 * sign * (1.0 / (d * d * pi2) - 1.0 / (s * s * pi2))
}

/// The off-diagonal closed form as printed in the x² worked example,
/// `(−1)^{j−k}/((j−k)²π²) − (−1)^{j+k}/((j+k)²π²)`; half of [`x_squared_entry`].
/// Kept for the reproduction table only.
pub fn printed_x_squared_entry(j: usize, k: usize) -> f64 {
    if j == k {
        return x_squared_entry(j, k);
    }
    0.5 * x_squared_entry(j, k)
}

/// Real symmetric matrix of `B` in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    pub entries: DMatrix<f64>,
    pub generator: Option<Generator>,
}

#[derive(Serialize, Deserialize)]
struct CouplingRepr {
    cutoff: usize,
    entries: Vec<f64>,
    #[serde(default)]
    generator: Option<Generator>,
}

impl Serialize for CouplingOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.cutoff();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(self.entries[(r, c)]);
            }
        }
        CouplingRepr { cutoff: n, entries, generator: self.generator }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CouplingOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CouplingRepr::deserialize(d)?;
        if r.cutoff == 0 || r.entries.len() != r.cutoff * r.cutoff {
            return Err(serde::de::Error::custom(format!(
                "expected {}x{} row-major entries, got {}",
                r.cutoff,
                r.cutoff,
                r.entries.len()
            )));
        }
        match r.generator {
            Some(Generator::XSquared) => Ok(coupling_x2(r.cutoff)),
            None => Ok(CouplingOperator {
                entries: DMatrix::from_row_slice(r.cutoff, r.cutoff, &r.entries),
                generator: None,
            }),
        }
    }
}

impl CouplingOperator {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Domain("coupling matrix must be square and non-empty".into()));
        }
        Ok(Self { entries, generator: None })
    }

    pub fn cutoff(&self) -> usize {
        self.entries.nrows()
    }

    /// `B_{j,k}` (1-based). Analytic generators answer beyond the cutoff.
    pub fn entry(&self, j: usize, k: usize) -> Option<f64> {
        if j == 0 || k == 0 {
            return None;
        }
        match self.generator {
            Some(Generator::XSquared) => Some(x_squared_entry(j, k)),
            None if j <= self.cutoff() && k <= self.cutoff() => Some(self.entries[(j - 1, k - 1)]),
            None => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.cutoff();
        let scale = self.entries.amax().max(f64::MIN_POSITIVE);
        (0..n).all(|r| (0..r).all(|c| (self.entries[(r, c)] - self.entries[(c, r)]).abs() <= 1e-12 * scale))
    }

    /// Same operator at another cutoff; only available for analytic generators.
    pub fn at_cutoff(&self, cutoff: usize) -> Option<Self> {
        self.generator.map(|Generator::XSquared| coupling_x2(cutoff))
    }
}

/// Matrix of multiplication by `x²` on the first `n` eigenfunctions.
pub fn coupling_x2(n: usize) -> CouplingOperator {
    assert!(n >= 1, "coupling_x2: cutoff must be >= 1");
    let entries = DMatrix::from_fn(n, n, |r, c| x_squared_entry(r + 1, c + 1));
    CouplingOperator { entries, generator: Some(Generator::XSquared) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `‖B‖_{L(L²)}`.
    L2,
    /// `‖B‖_{L(H²_(0))}`.
    H2Op,
    /// `‖B‖_{L(H³_(0), H³∩H¹₀)}`.
    H3Op,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: NormKind,
    pub cutoff_used: usize,
    /// Relative change from cutoff N to 2N is below [`NORM_CONVERGENCE_TOL`].
    pub converged: bool,
    /// Value at 2N, when the operator can be re-evaluated there.
    pub value_at_double: Option<f64>,
}

/// Operator norm over the span of the first `N` eigenfunctions.
///
/// `L2` is the spectral radius of the symmetric matrix, `H2Op` the largest
/// singular value of `D B D⁻¹` with `D = diag((πk)²)`. `H3Op` maximizes
/// `‖Bψ‖_{H³∩H¹₀} / ‖ψ‖_(3)`, with `‖φ‖²_{H³∩H¹₀} = Σ_{m=1..3} ‖∂ᵐφ‖²`; for
/// `x²` the derivatives of `x²φ_k` are integrated by Gauss quadrature, for a
/// plain matrix the image is the truncated sine series.
pub fn operator_norm(b: &CouplingOperator, kind: NormKind) -> Result<NormEstimate> {
    if !b.is_symmetric() {
        return Err(Error::Domain("operator_norm requires a symmetric coupling matrix".into()));
    }
    let n = b.cutoff();
    let value = truncated_norm(b, kind);
    let value_at_double = b.at_cutoff(2 * n).map(|b2| truncated_norm(&b2, kind));
    let converged = value_at_double
        .map(|v2| (v2 - value).abs() <= NORM_CONVERGENCE_TOL * v2.abs().max(f64::MIN_POSITIVE))
        .unwrap_or(false);
    Ok(NormEstimate { value, kind, cutoff_used: n, converged, value_at_double })
}

fn truncated_norm(b: &CouplingOperator, kind: NormKind) -> f64 {
    let n = b.cutoff();
    match kind {
        NormKind::L2 => {
            let eig = SymmetricEigen::new(b.entries.clone());
            eig.eigenvalues.amax()
        }
        NormKind::H2Op => {
            let d = |k: usize| sobolev_weight(k, 2.0);
            let m = DMatrix::from_fn(n, n, |r, c| d(r + 1) * b.entries[(r, c)] / d(c + 1));
            m.singular_values().max()
        }
        NormKind::H3Op => {
            let q = match b.generator {
                Some(Generator::XSquared) => x_squared_h3_gram(n),
                None => {
                    let w = DMatrix::from_fn(n, n, |r, c| {
                        if r == c {
                            (1..=3).map(|m| sobolev_weight(r + 1, 2.0 * m as f64)).sum()
                        } else {
                            0.0
                        }
                    });
                    b.entries.transpose() * w * &b.entries
                }
            };
            let s = DMatrix::from_fn(n, n, |r, c| {
                q[(r, c)] / (sobolev_weight(r + 1, 3.0) * sobolev_weight(c + 1, 3.0))
            });
            let eig = SymmetricEigen::new(s);
            eig.eigenvalues.max().max(0.0).sqrt()
        }
    }
}

/// Gram matrix `Q_{ab} = Σ_{m=1..3} ∫₀¹ ∂ᵐ(x²φ_a) ∂ᵐ(x²φ_b) dx`.
pub(crate) fn x_squared_h3_gram(n: usize) -> DMatrix<f64> {
    let rule = Rule::gauss(0.0, 1.0, 4 * n + 32);
    let sq2 = std::f64::consts::SQRT_2;
    // derivs[k][m][node] = ∂^{m+1}(x² φ_{k+1}) at node
    let derivs: Vec<[Vec<f64>; 3]> = (1..=n)
        .map(|k| {
            let a = PI * k as f64;
            let mut d1 = Vec::with_capacity(rule.len());
            let mut d2 = Vec::with_capacity(rule.len());
            let mut d3 = Vec::with_capacity(rule.len());
            for &x in &rule.nodes {
                let (s, c) = (a * x).sin_cos();
                let f0 = sq2 * s;
                let f1 = sq2 * a * c;
                let f2 = -sq2 * a * a * s;
                let f3 = -sq2 * a * a * a * c;
                d1.push(2.0 * x * f0 + x * x * f1);
                d2.push(2.0 * f0 + 4.0 * x * f1 + x * x * f2);
                d3.push(6.0 * f1 + 6.0 * x * f2 + x * x * f3);
            }
            [d1, d2, d3]
        })
        .collect();
    DMatrix::from_fn(n, n, |r, c| {
        (0..3)
            .map(|m| {
                derivs[r][m]
                    .iter()
                    .zip(&derivs[c][m])
                    .zip(&rule.weights)
                    .map(|((p, q), w)| w * p * q)
                    .sum::<f64>()
            })
            .sum()
    })
}

/// Result of scanning the lower bound `|B_{j,k}| ≥ C_k / j³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionScan {
    /// `min_{j ≤ J} j³|B_{j,k}|`.
    pub constant: f64,
    pub argmin: usize,
    pub j_max: usize,
    /// Some `B_{j,k}` vanished in the scanned range.
    pub violated: bool,
}

/// Largest `C_k` with `|B_{j,k}| ≥ C_k/j³` for all scanned `j ≤ j_max`.
pub fn assumption_constant(b: &CouplingOperator, k: usize, j_max: usize) -> Result<AssumptionScan> {
    if k == 0 || b.entry(k, k).is_none() {
        return Err(Error::Domain(format!("column {k} outside cutoff {}", b.cutoff())));
    }
    let j_max = if b.generator.is_some() { j_max } else { j_max.min(b.cutoff()) };
    let mut best = (f64::INFINITY, 1);
    for j in 1..=j_max {
        let v = (j as f64).powi(3) * b.entry(j, k).unwrap_or(0.0).abs();
        if v < best.0 {
            best = (v, j);
        }
    }
    let violated = best.0 == 0.0;
    Ok(AssumptionScan { constant: best.0, argmin: best.1, j_max, violated })
}
