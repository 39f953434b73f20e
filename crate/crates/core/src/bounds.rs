//! Explicit constants, thresholds and error bounds for the two-phase transfer
//! `φ_j → e^{iθ}φ_k`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    assumption_constant, coupling_x2, lambda, operator_norm, printed_x_squared_entry, CouplingOperator, Generator,
    NormKind, NORM_CUTOFF,
};

/// Horizon of the exact-correction phase.
pub const CORRECTION_HORIZON: f64 = 4.0 / PI;
/// Largest n (in control periods) the pipeline will simulate.
pub const SIMULATION_CAP: f64 = 1e6;
/// Scan bound used for `C_k` when the operator has an analytic generator.
pub const ASSUMPTION_SCAN: usize = 200;

/// Printed constants of the x² worked example.
pub mod printed {
    use std::f64::consts::PI;
    pub const NORM_L2: f64 = 1.0;
    pub const NORM_H2: f64 = 1.64;
    pub const NORM_H3: f64 = 5.2;
    /// `(2π − 3)/(6π²)`, as printed for `|B_{1,1}|`.
    pub const C1: f64 = (2.0 * PI - 3.0) / (6.0 * PI * PI);
    /// `8/(9π²)`, as printed for `|B_{1,2}|`.
    pub const B12: f64 = 8.0 / (9.0 * PI * PI);
    pub const RADIUS: f64 = 2.14e-5;
    pub const H3_COEFFICIENT: f64 = 1e80;
    pub const N_THRESHOLD: f64 = 2.3e117;
    pub const PHYSICAL_TIME_LOG10: f64 = 116.0;
}

/// `m² + l² = 2k²` with `m, l ≠ k` and `m, l ≤ search_bound`, if any.
pub fn resonance_witness(k: usize, search_bound: usize) -> Option<(usize, usize)> {
    let target = 2 * k * k;
    for m in 1..=search_bound {
        if m == k || m * m >= target {
            continue;
        }
        let rest = target - m * m;
        let l = (rest as f64).sqrt().round() as usize;
        for cand in l.saturating_sub(1)..=l + 1 {
            if cand >= 1 && cand != k && cand <= search_bound && cand * cand == rest {
                return Some((m.max(cand), m.min(cand)));
            }
        }
    }
    None
}

/// True iff `m² − k² ≠ k² − l²` for all `m, l ≤ search_bound`, `m, l ≠ k`.
/// Any solution has `m² < 2k²`, so `search_bound ≥ 2k` is exhaustive.
pub fn resonance_free(k: usize, search_bound: usize) -> bool {
    resonance_witness(k, search_bound).is_none()
}

fn check_resonance(k: usize) -> Result<()> {
    match resonance_witness(k, 2 * k) {
        Some((m, l)) => Err(Error::Resonance { k, m, l }),
        None => Ok(()),
    }
}

fn gap(j: usize, k: usize) -> f64 {
    ((k * k) as f64 - (j * j) as f64).abs()
}

/// The index set `Λ′` and `C′ = sup_{Λ′} |sin(π|l² − m²|/|k² − j²|)|⁻¹`.
///
/// Diagonal pairs `l = m` are excluded; with them `C′` would be infinite.
pub fn lambda_prime(j: usize, k: usize, b: &CouplingOperator) -> Result<(Vec<(usize, usize)>, f64)> {
    if j == k || j == 0 || k == 0 {
        return Err(Error::Domain(format!("need distinct positive indices, got ({j},{k})")));
    }
    let delta = gap(j, k);
    let mut pairs = Vec::new();
    let mut c_prime: f64 = 0.0;
    let mut pins = vec![j, k];
    pins.sort_unstable();
    for &p in &pins {
        let q_max = (((p * p) as f64 + 1.5 * delta).sqrt()).floor() as usize;
        for q in 1..=q_max {
            if q == p {
                continue;
            }
            let d = ((p * p) as f64 - (q * q) as f64).abs();
            if d > 1.5 * delta || d == delta {
                continue;
            }
            for (l, m) in [(p, q), (q, p)] {
                if pairs.contains(&(l, m)) {
                    continue;
                }
                let entry = b.entry(l, m).ok_or_else(|| {
                    Error::Domain(format!("Λ′ needs B_({l},{m}) beyond cutoff {}", b.cutoff()))
                })?;
                if entry == 0.0 {
                    continue;
                }
                let s = (PI * d / delta).sin().abs();
                if s < 1e-12 {
                    return Err(Error::SingularPair { l, m });
                }
                pairs.push((l, m));
                c_prime = c_prime.max(1.0 / s);
            }
        }
    }
    pairs.sort_unstable();
    Ok((pairs, c_prime))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMode {
    /// Norms and `C_k` computed from the operator.
    Scanned,
    /// The printed x² constants.
    PaperLiteral,
}

impl std::str::FromStr for ConstantsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scanned" => Ok(ConstantsMode::Scanned),
            "paper-literal" | "paper_literal" => Ok(ConstantsMode::PaperLiteral),
            other => Err(Error::Config(format!("unknown constants mode '{other}'"))),
        }
    }
}

/// Operator-dependent inputs of every bound, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub mode: ConstantsMode,
    pub j: usize,
    pub k: usize,
    pub norm_l2: f64,
    pub norm_h2: f64,
    pub norm_h3: f64,
    /// `|B_{j,k}|`.
    pub b_jk: f64,
    pub c_k: f64,
    pub c_prime: f64,
    pub lambda_prime: Vec<(usize, usize)>,
    pub provenance: BTreeMap<String, String>,
}

impl Constants {
    pub fn new(b: &CouplingOperator, j: usize, k: usize, mode: ConstantsMode) -> Result<Self> {
        if j == k || j == 0 || k == 0 {
            return Err(Error::Domain(format!("need distinct positive indices, got ({j},{k})")));
        }
        let (lambda_prime, c_prime) = lambda_prime(j, k, b)?;
        let mut provenance = BTreeMap::new();
        provenance.insert("Cprime".into(), "enumerated".into());
        match mode {
            ConstantsMode::Scanned => {
                let norm_src = match b.generator {
                    Some(_) if b.cutoff() < NORM_CUTOFF => b.at_cutoff(NORM_CUTOFF).unwrap_or_else(|| b.clone()),
                    _ => b.clone(),
                };
                let norm = |kind| operator_norm(&norm_src, kind).map(|e| e.value);
                let scan = assumption_constant(b, k, ASSUMPTION_SCAN)?;
                let b_jk = b
                    .entry(j, k)
                    .ok_or_else(|| Error::Domain(format!("B_({j},{k}) outside cutoff {}", b.cutoff())))?
                    .abs();
                let tag = format!("scanned (cutoff {})", norm_src.cutoff());
                for key in ["norm_l2", "norm_h2", "norm_h3"] {
                    provenance.insert(key.into(), tag.clone());
                }
                provenance.insert("B_jk".into(), "matrix entry".into());
                provenance.insert("C_k".into(), format!("scanned j <= {}", scan.j_max));
                Ok(Self {
                    mode,
                    j,
                    k,
                    norm_l2: norm(NormKind::L2)?,
                    norm_h2: norm(NormKind::H2Op)?,
                    norm_h3: norm(NormKind::H3Op)?,
                    b_jk,
                    c_k: scan.constant,
                    c_prime,
                    lambda_prime,
                    provenance,
                })
            }
            ConstantsMode::PaperLiteral => {
                if b.generator != Some(Generator::XSquared) {
                    return Err(Error::Domain("paper-literal constants exist only for the x² operator".into()));
                }
                let c_k = match k {
                    1 => printed::C1,
                    2 => printed::B12,
                    _ => (1..=ASSUMPTION_SCAN)
                        .map(|jj| (jj as f64).powi(3) * printed_x_squared_entry(jj, k).abs())
                        .fold(f64::INFINITY, f64::min),
                };
                for key in ["norm_l2", "norm_h2", "norm_h3"] {
                    provenance.insert(key.into(), "paper-literal".into());
                }
                provenance.insert("B_jk".into(), "paper-literal closed form".into());
                provenance.insert(
                    "C_k".into(),
                    if k <= 2 { "paper-literal".into() } else { "scan of printed closed form".into() },
                );
                Ok(Self {
                    mode,
                    j,
                    k,
                    norm_l2: printed::NORM_L2,
                    norm_h2: printed::NORM_H2,
                    norm_h3: printed::NORM_H3,
                    b_jk: printed_x_squared_entry(j, k).abs(),
                    c_k,
                    c_prime,
                    lambda_prime,
                    provenance,
                })
            }
        }
    }

    /// Same constants with `C_k` replaced.
    pub fn with_c_k(mut self, c_k: f64, source: &str) -> Self {
        self.c_k = c_k;
        self.provenance.insert("C_k".into(), source.into());
        self
    }

    fn delta(&self) -> f64 {
        gap(self.j, self.k)
    }

    /// `T* = π/|B_{k,j}|`.
    pub fn t_star(&self) -> f64 {
        PI / self.b_jk
    }
}

/// Averaging-phase bound in L².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Bound {
    /// `n ≥ 3(1 + C′)|B_{j,k}|⁻¹‖B‖²/|k² − j²|`.
    pub threshold: f64,
    /// Bound on `‖Γ^{u_n}_{T_n}φ_j − e^{iθ}φ_k‖²`.
    pub bound: f64,
    /// `(1 + 2K‖B‖)(1 + C′)‖B‖I/n`.
    pub r_n: f64,
    /// The bound is at least 2, the largest squared distance at optimal phase.
    pub vacuous: bool,
}

pub fn approx_bound_l2(n: f64, c: &Constants) -> Result<L2Bound> {
    if c.b_jk == 0.0 {
        return Err(Error::Domain(format!("B_({},{}) = 0 violates the coupling assumption", c.j, c.k)));
    }
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("n = {n} must be at least 1")));
    }
    let delta = c.delta();
    let base = (1.0 + c.c_prime) * c.norm_l2 * c.norm_l2 / (c.b_jk * delta);
    let k_const = 2.0 / c.b_jk;
    let i_const = 4.0 / (PI * PI * delta);
    let bound = 9.0 * base / n;
    Ok(L2Bound {
        threshold: 3.0 * base,
        bound,
        r_n: (1.0 + 2.0 * k_const * c.norm_l2) * (1.0 + c.c_prime) * c.norm_l2 * i_const / n,
        vacuous: bound >= 2.0,
    })
}

/// Right side of the H⁴ growth estimate for `‖Γ^{u_n}_{T_n}φ_j‖₍₄₎`, with internals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H4Growth {
    pub value: f64,
    pub lambda_tilde: f64,
    /// Upper bound for `M²`.
    pub m_sq: f64,
    /// Quarter periods of `u` in `[0, nT* + T]`.
    pub d: f64,
    /// Bound on `‖u‖_{BV}`.
    pub bv_norm: f64,
    pub exponent: f64,
}

pub fn h4_growth(n: f64, c: &Constants) -> Result<H4Growth> {
    let delta = c.delta();
    let bjk = c.b_jk;
    let drive = n * PI * PI * delta;
    if drive <= 4.0 * bjk {
        return Err(Error::Domain(format!("n = {n} too small for the H⁴ estimate")));
    }
    let d = 2.0 * (drive + 2.0 * bjk) / bjk;
    let bv_norm = 2.0 * (drive + 4.0 * bjk) / bjk;
    let lambda_tilde = c.norm_h2 * (bv_norm + 1.0) / n;
    let m_sq = ((drive + 6.0 * bjk) / (drive - 4.0 * bjk)).powi(2);
    let exponent = c.norm_h2 / bjk + 2.0 * c.norm_h2 / (n * PI * delta) + 1.0;
    let value = exponent.exp() * 2.0 * m_sq * (PI * PI + lambda_tilde) * (c.j as f64).powi(4);
    Ok(H4Growth { value, lambda_tilde, m_sq, d, bv_norm, exponent })
}

/// Bound on `‖Γ^{u_n}_{nT*}φ_j − e^{iθ}φ_k‖₍₃₎⁸`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Bound {
    /// `2⁷(window drift)⁸ + 2⁷·3R_n(H⁴ bound + k⁴)⁶` at this n.
    pub value_pow8: f64,
    /// `lim n·value_pow8`.
    pub leading_coefficient: f64,
    /// Closed form from the end of the assembly, exactly proportional to 1/n.
    pub closed_form_pow8: f64,
    pub window_term: f64,
    pub interpolation_term: f64,
}

pub fn approx_bound_h3(n: f64, c: &Constants) -> Result<H3Bound> {
    let terms = |n: f64| -> Result<(f64, f64)> {
        let l2 = approx_bound_l2(n, c)?;
        let h4 = h4_growth(n, c)?;
        let jf = c.j as f64;
        let kf = c.k as f64;
        let drift = 32.0 * 3.0 * SQRT_2 * (c.norm_h2 / c.b_jk).exp() * c.norm_h3 / n * c.norm_h2 / c.b_jk * jf.powi(4);
        let window = 128.0 * drift.powi(8);
        let interp = 128.0 * l2.bound * (h4.value + kf.powi(4)).powi(6);
        Ok((window, interp))
    };
    let (window_term, interpolation_term) = terms(n)?;
    // n·bound converges like 1 + O(1/n); 1e12 is far into the asymptotic regime
    let big = 1e12_f64.max(n);
    let (w, i) = terms(big)?;
    let leading_coefficient = (w + i) * big;
    let jf = c.j as f64;
    let kf = c.k as f64;
    let log_closed = 20.0 * 2f64.ln() + 2.0 * 3f64.ln() + 24.0 * PI.ln() + (1.0 + c.c_prime).ln()
        + 6.0 * c.norm_h2 / c.b_jk
        + 6.0 * c.norm_h2.ln()
        + 2.0 * c.norm_h3.ln()
        + 5.0 * c.delta().ln()
        + 24.0 * jf.max(kf).ln()
        - n.ln()
        - 7.0 * c.b_jk.ln();
    Ok(H3Bound {
        value_pow8: window_term + interpolation_term,
        leading_coefficient,
        closed_form_pow8: log_closed.exp(),
        window_term,
        interpolation_term,
    })
}

/// Threshold on n for the averaging phase to land in the exact-controllability ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremThreshold {
    pub n_star: f64,
    pub log10_n_star: f64,
    /// `3C_k²/(16k³‖B‖₃²)`.
    pub radius: f64,
    /// Same with `‖φ_k‖₍₃₎ = (πk)³`.
    pub radius_definitional: f64,
    pub b: f64,
    pub e_jk: f64,
    pub simulable: bool,
}

pub fn theorem_threshold(c: &Constants) -> Result<TheoremThreshold> {
    check_resonance(c.k)?;
    if !(c.c_k > 0.0) {
        return Err(Error::Domain(format!("C_{} = 0 violates the coupling assumption", c.k)));
    }
    let (jf, kf) = (c.j as f64, c.k as f64);
    let ln_b = 6.0 * c.norm_h2.ln() + c.norm_l2.ln() + 16.0 * c.norm_h3.ln() + c.norm_l2.max(c.norm_h3).ln();
    let ln_e = 6.0 * c.norm_h2 / c.b_jk + 5.0 * c.delta().ln() + 24.0 * kf.ln() + 24.0 * jf.max(kf).ln()
        - 16.0 * c.c_k.ln()
        - 7.0 * c.b_jk.ln();
    let ln_n = 51.0 * 2f64.ln() + 19.0 * PI.ln() + ln_b + (1.0 + c.c_prime).ln() + ln_e;
    let n_star = ln_n.exp();
    let radius = 3.0 * c.c_k * c.c_k / (16.0 * kf.powi(3) * c.norm_h3 * c.norm_h3);
    Ok(TheoremThreshold {
        n_star,
        log10_n_star: ln_n / std::f64::consts::LN_10,
        radius,
        radius_definitional: radius / PI.powi(3),
        b: ln_b.exp(),
        e_jk: ln_e.exp(),
        simulable: n_star <= SIMULATION_CAP,
    })
}

/// Smallest n whose assembled H³ bound at `nT*` fits the exact-controllability
/// ball, `approx_bound_h3(n)^{1/8} ≤ radius`. Bisection in `log n`.
pub fn chain_threshold(c: &Constants) -> Result<f64> {
    let radius = theorem_threshold(c)?.radius;
    let target = radius.powi(8);
    let fits = |ln_n: f64| approx_bound_h3(ln_n.exp(), c).map(|h| h.value_pow8 <= target).unwrap_or(false);
    let mut lo = approx_bound_l2(1.0, c)?.threshold.max(1.0).ln();
    let mut hi = lo.max(1.0);
    while !fits(hi) {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::Domain("H³ bound never enters the ball below n = 1e300".into()));
        }
    }
    if fits(lo) {
        return Ok(lo.exp());
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// Ingham constants for the horizon `4/π` and gap `π²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ingham {
    pub c1_sq: f64,
    pub c2_sq: f64,
    /// `C(4/π) = 3π⁻³√2·C₂`.
    pub c_of_t: f64,
    /// `C̃(4/π) = 2/C₁`.
    pub ctilde_of_t: f64,
}

pub fn ingham_package() -> Ingham {
    let c1_sq = 3.0 * PI / 16.0;
    let c2_sq = 8.0 / PI;
    let c_of_t = 3.0 * PI.powi(-3) * SQRT_2 * c2_sq.sqrt();
    Ingham { c1_sq, c2_sq, c_of_t, ctilde_of_t: 2.0 / c1_sq.sqrt() }
}

/// Contraction parameters of the exact-correction phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub a_l: f64,
    pub mu: f64,
    /// `M = C_l/C̃(4/π)`.
    pub m: f64,
    /// `3C_l/16 ≤ M − M₁`.
    pub m_lower: f64,
    /// `C_l/(l³‖B‖₃²)`.
    pub ball_radius_control: f64,
    /// `3C_l²/(16l³‖B‖₃²)`.
    pub radius_exact: f64,
    /// Same with `‖φ_l‖₍₃₎ = (πl)³`.
    pub radius_exact_definitional: f64,
}

pub fn contraction_package(l: usize, c_l: f64, norm_h3: f64) -> Result<Contraction> {
    check_resonance(l)?;
    if !(c_l > 0.0) {
        return Err(Error::Domain(format!("C_{l} = {c_l} must be positive")));
    }
    let ing = ingham_package();
    let l3 = (l as f64).powi(3);
    let m = c_l / ing.ctilde_of_t;
    let radius_exact = 3.0 * c_l * c_l / (16.0 * l3 * norm_h3 * norm_h3);
    Ok(Contraction {
        a_l: 2.0 * ing.c_of_t * ing.ctilde_of_t * l3 / c_l,
        mu: 22.0 / 5.0 * l3 / c_l,
        m,
        m_lower: 3.0 * c_l / 16.0,
        ball_radius_control: c_l / (l3 * norm_h3 * norm_h3),
        radius_exact,
        radius_exact_definitional: radius_exact / PI.powi(3),
    })
}

/// Scanned or overridden `C_l` and computed `‖B‖₃` for the correction phase at `l`.
pub fn contraction_for(l: usize, b: &CouplingOperator, paper_literal_cl: Option<f64>) -> Result<Contraction> {
    match paper_literal_cl {
        Some(c_l) => contraction_package(l, c_l, printed::NORM_H3),
        None => {
            let src = match b.generator {
                Some(Generator::XSquared) => coupling_x2(NORM_CUTOFF.max(b.cutoff())),
                None => b.clone(),
            };
            let c_l = assumption_constant(b, l, ASSUMPTION_SCAN)?.constant;
            contraction_package(l, c_l, operator_norm(&src, NormKind::H3Op)?.value)
        }
    }
}

/// Every named constant of the transfer `(j, k)` at drive strength `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BoundReport {
    pub j: usize,
    pub k: usize,
    pub n: f64,
    pub mode: ConstantsMode,
    pub norm_l2: f64,
    pub norm_h2: f64,
    pub norm_h3: f64,
    pub B_jk: f64,
    pub C_k: f64,
    pub Tstar: f64,
    pub T_period: f64,
    pub I: f64,
    pub K: f64,
    pub Cprime: f64,
    pub LambdaPrime: Vec<(usize, usize)>,
    pub L2_threshold: f64,
    pub R_n: f64,
    pub L2_bound: f64,
    pub L2_vacuous: bool,
    pub H4_growth: Option<H4Growth>,
    pub H3_bound_pow8: Option<f64>,
    pub H3_leading_coefficient: Option<f64>,
    pub H3_closed_form_pow8: Option<f64>,
    pub resonance_free_k: bool,
    pub b: Option<f64>,
    pub E_jk: Option<f64>,
    pub n_star: Option<f64>,
    pub log10_n_star: Option<f64>,
    /// Threshold from the assembled H³ bound, see [`chain_threshold`].
    pub n_chain: Option<f64>,
    pub simulable: Option<bool>,
    pub radius: Option<f64>,
    pub radius_definitional: Option<f64>,
    pub C1_sq: f64,
    pub C2_sq: f64,
    pub C_of_T: f64,
    pub Ctilde_of_T: f64,
    pub a_l: Option<f64>,
    pub mu_contraction: Option<f64>,
    pub M: Option<f64>,
    pub M_lower: Option<f64>,
    pub ball_radius_control: Option<f64>,
    pub radius_exact: Option<f64>,
    pub radius_exact_definitional: Option<f64>,
    pub provenance: BTreeMap<String, String>,
}

impl BoundReport {
    pub fn new(n: f64, c: &Constants) -> Result<Self> {
        let delta = c.delta();
        let l2 = approx_bound_l2(n, c)?;
        let h4 = h4_growth(n, c).ok();
        let h3 = approx_bound_h3(n, c).ok();
        let resonance_free_k = resonance_free(c.k, 2 * c.k);
        let thr = if resonance_free_k { Some(theorem_threshold(c)?) } else { None };
        let con = if resonance_free_k { Some(contraction_package(c.k, c.c_k, c.norm_h3)?) } else { None };
        let ing = ingham_package();
        Ok(Self {
            j: c.j,
            k: c.k,
            n,
            mode: c.mode,
            norm_l2: c.norm_l2,
            norm_h2: c.norm_h2,
            norm_h3: c.norm_h3,
            B_jk: c.b_jk,
            C_k: c.c_k,
            Tstar: c.t_star(),
            T_period: 2.0 / (PI * delta),
            I: 4.0 / (PI * PI * delta),
            K: 2.0 / c.b_jk,
            Cprime: c.c_prime,
            LambdaPrime: c.lambda_prime.clone(),
            L2_threshold: l2.threshold,
            R_n: l2.r_n,
            L2_bound: l2.bound,
            L2_vacuous: l2.vacuous,
            H4_growth: h4,
            H3_bound_pow8: h3.map(|h| h.value_pow8),
            H3_leading_coefficient: h3.map(|h| h.leading_coefficient),
            H3_closed_form_pow8: h3.map(|h| h.closed_form_pow8),
            resonance_free_k,
            b: thr.map(|t| t.b),
            E_jk: thr.map(|t| t.e_jk),
            n_star: thr.map(|t| t.n_star),
            log10_n_star: thr.map(|t| t.log10_n_star),
            n_chain: if resonance_free_k { chain_threshold(c).ok() } else { None },
            simulable: thr.map(|t| t.simulable),
            radius: thr.map(|t| t.radius),
            radius_definitional: thr.map(|t| t.radius_definitional),
            C1_sq: ing.c1_sq,
            C2_sq: ing.c2_sq,
            C_of_T: ing.c_of_t,
            Ctilde_of_T: ing.ctilde_of_t,
            a_l: con.map(|x| x.a_l),
            mu_contraction: con.map(|x| x.mu),
            M: con.map(|x| x.m),
            M_lower: con.map(|x| x.m_lower),
            ball_radius_control: con.map(|x| x.ball_radius_control),
            radius_exact: con.map(|x| x.radius_exact),
            radius_exact_definitional: con.map(|x| x.radius_exact_definitional),
            provenance: c.provenance.clone(),
        })
    }
}

/// `λ_k − λ_j`.
pub fn bohr_frequency(j: usize, k: usize) -> f64 {
    lambda(k) - lambda(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn x2() -> CouplingOperator {
        coupling_x2(40)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn resonance_examples() {
        assert!(resonance_free(1, 2));
        assert!(resonance_free(3, 6));
        assert!(!resonance_free(5, 10));
        assert_eq!(resonance_witness(5, 10), Some((7, 1)));
    }

    #[test]
    fn lambda_prime_examples() {
        let b = x2();
        let (pairs, cp) = lambda_prime(2, 1, &b).unwrap();
        assert!(pairs.is_empty());
        assert_eq!(cp, 0.0);

        let mut m = DMatrix::from_diagonal_element(5, 5, 0.3);
        m[(0, 2)] = 0.1;
        m[(2, 0)] = 0.1;
        let sparse = CouplingOperator::from_matrix(m).unwrap();
        let (pairs, cp) = lambda_prime(1, 3, &sparse).unwrap();
        assert!(pairs.is_empty());
        assert_eq!(cp, 0.0);

        // |l² − m²| ∈ {3, 7, 8, 9, 12, 20} against Δ = 15
        let (pairs, cp) = lambda_prime(1, 4, &b).unwrap();
        let mut diffs: Vec<usize> = pairs.iter().map(|&(l, m)| (l * l).abs_diff(m * m)).collect();
        diffs.sort_unstable();
        diffs.dedup();
        assert_eq!(diffs, vec![3, 7, 8, 9, 12, 20]);
        let expected = [3.0, 7.0, 8.0, 9.0, 12.0, 20.0]
            .iter()
            .map(|d: &f64| 1.0 / (PI * d / 15.0).sin().abs())
            .fold(0.0, f64::max);
        assert!((cp - expected).abs() < 1e-14);
        assert!((cp - 1.0 / (PI / 5.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn paper_literal_l2_bound() {
        let c = Constants::new(&x2(), 2, 1, ConstantsMode::PaperLiteral).unwrap();
        let b = approx_bound_l2(1000.0, &c).unwrap();
        assert!((b.threshold - 9.0 * PI * PI / 8.0).abs() < 1e-12);
        assert!((b.bound - 27.0 * PI * PI / 8.0 / 1000.0).abs() < 1e-15);
        assert!((b.bound - 0.03331).abs() < 1e-5);
        assert!(approx_bound_l2(1.0, &c).unwrap().vacuous);
        assert!(!b.vacuous);
    }

    #[test]
    fn zero_coupling_rejected() {
        let b = CouplingOperator::from_matrix(DMatrix::from_diagonal_element(4, 4, 0.5)).unwrap();
        let c = Constants::new(&b, 2, 1, ConstantsMode::Scanned).unwrap();
        assert!(matches!(approx_bound_l2(10.0, &c), Err(Error::Domain(_))));
        assert!(matches!(theorem_threshold(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn section_four_constants() {
        let c = Constants::new(&x2(), 2, 1, ConstantsMode::PaperLiteral).unwrap();
        let r = BoundReport::new(100.0, &c).unwrap();
        assert!((r.Tstar - 9.0 * PI.powi(3) / 8.0).abs() < 1e-12);
        assert!((r.K - 9.0 * PI * PI / 4.0).abs() < 1e-12);
        assert!((r.I - 4.0 / (3.0 * PI * PI)).abs() < 1e-15);
        assert!((r.Tstar * r.B_jk - PI).abs() < 1e-14);
        assert!(rel(r.radius.unwrap(), 2.14e-5) < 0.01);
        assert!(r.log10_n_star.unwrap() > 100.0);
        assert!(!r.simulable.unwrap());
        let h3 = approx_bound_h3(1e100, &c).unwrap();
        assert!((h3.leading_coefficient.log10() - 80.0).abs() < 1.0);
        let chain = r.n_chain.unwrap();
        let r8 = r.radius.unwrap().powi(8);
        assert!((chain / (h3.leading_coefficient / r8) - 1.0).abs() < 1e-6);
        assert!(approx_bound_h3(chain * 1.001, &c).unwrap().value_pow8 <= r8);
        assert!(approx_bound_h3(chain * 0.999, &c).unwrap().value_pow8 > r8);
    }

    #[test]
    fn contraction_paper_literal() {
        let con = contraction_package(1, printed::C1, printed::NORM_H3).unwrap();
        assert!((con.mu - 79.36).abs() < 0.01);
        assert!(rel(con.radius_exact, 2.13e-5) < 0.005);
        assert!(con.ball_radius_control <= 2.05e-3 + 1e-6);
        assert!(con.m - con.m / 2.0 >= con.m_lower);
    }

    #[test]
    fn contraction_inequality_for_scanned_constants() {
        let b = x2();
        let ing = ingham_package();
        for l in (1..=10).filter(|&l| resonance_free(l, 2 * l)) {
            let con = contraction_for(l, &b, None).unwrap();
            assert!(con.mu >= con.a_l + (con.a_l * (con.a_l + 1.0)).sqrt() + 1.0, "l = {l}");
            assert!(con.a_l <= 1.2 * (l as f64).powi(3) / assumption_constant(&b, l, 200).unwrap().constant);
            assert!(ing.c_of_t * ing.ctilde_of_t <= 0.6);
        }
        assert!(matches!(contraction_for(5, &b, None), Err(Error::Resonance { .. })));
    }

    #[test]
    fn ingham_values() {
        let ing = ingham_package();
        assert!((ing.c1_sq - 0.58905).abs() < 1e-5);
        assert!((ing.c2_sq - 2.5465).abs() < 1e-4);
        assert!((ing.c_of_t - 0.21836).abs() < 1e-5);
        assert!((ing.ctilde_of_t - 2.6059).abs() < 1e-4);
        assert!((ing.c_of_t * ing.ctilde_of_t - 0.569).abs() < 1e-3);
    }

    #[test]
    fn radius_scales_inverse_square_in_h3_norm() {
        let c = Constants::new(&x2(), 2, 1, ConstantsMode::PaperLiteral).unwrap();
        let mut c2 = c.clone();
        c2.norm_h3 *= 2.0;
        let r1 = theorem_threshold(&c).unwrap().radius;
        let r2 = theorem_threshold(&c2).unwrap().radius;
        assert!((r2 - r1 / 4.0).abs() < 1e-20);
    }

    #[test]
    fn h4_growth_decreases_with_n() {
        for mode in [ConstantsMode::Scanned, ConstantsMode::PaperLiteral] {
            let c = Constants::new(&x2(), 2, 1, mode).unwrap();
            let v: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&n| h4_growth(n, &c).unwrap().value).collect();
            assert!(v[0] > v[1] && v[1] > v[2]);
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn h3_closed_form_is_exactly_inverse_n() {
        let c = Constants::new(&x2(), 2, 1, ConstantsMode::PaperLiteral).unwrap();
        let a = approx_bound_h3(1e6, &c).unwrap();
        let b = approx_bound_h3(2e6, &c).unwrap();
        assert!(rel(b.closed_form_pow8, a.closed_form_pow8 / 2.0) < 1e-12);
        assert_eq!(a.leading_coefficient, b.leading_coefficient);
        // the assembled bound approaches 1/n from above
        let far = approx_bound_h3(1e40, &c).unwrap();
        let far2 = approx_bound_h3(2e40, &c).unwrap();
        assert!(rel(far2.value_pow8, far.value_pow8 / 2.0) < 1e-9);
    }

    #[test]
    fn threshold_ordering() {
        let b = x2();
        for (j, k) in [(2, 1), (1, 2), (3, 1), (1, 3), (3, 2), (4, 1)] {
            let c = Constants::new(&b, j, k, ConstantsMode::Scanned).unwrap();
            let thr = theorem_threshold(&c).unwrap();
            assert!(thr.n_star >= approx_bound_l2(1.0, &c).unwrap().threshold);
        }
    }

    #[test]
    fn report_is_deterministic() {
        let c = Constants::new(&x2(), 2, 1, ConstantsMode::Scanned).unwrap();
        let a = serde_json::to_string(&BoundReport::new(100.0, &c).unwrap()).unwrap();
        let b = serde_json::to_string(&BoundReport::new(100.0, &c).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"Tstar\""));
        assert!(a.contains("\"provenance\""));
    }
}
