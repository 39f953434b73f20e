//! Time integration of `i∂ψ = Aψ + u(t)Bψ` on a truncated eigenbasis.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::spectral::{lambda, CouplingOperator, ModalState, NORMALIZED_TOL};

pub const DEFAULT_UNITARITY_TOL: f64 = 1e-9;
pub const DEFAULT_RK_TOL: f64 = 1e-10;
/// Largest allowed `dt·(λ_N − λ₁)` for the splitting scheme.
pub const RESOLUTION_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential midpoint in the interaction picture (Strang form).
    ExpMidpoint,
    /// Dormand–Prince 5(4) in the interaction picture.
    RkAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    /// Step size; `None` picks `min(1e-3, 0.5/(λ_N − λ₁))`.
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub unitarity_tol: f64,
    /// Record every `record_stride` steps; `None` records once per control quarter period.
    pub record_stride: Option<usize>,
    pub rk_tol: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            dt: None,
            scheme: Scheme::ExpMidpoint,
            unitarity_tol: DEFAULT_UNITARITY_TOL,
            record_stride: None,
            rk_tol: DEFAULT_RK_TOL,
        }
    }
}

impl IntegrationOptions {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = Some(stride);
        self
    }
}

/// `min(1e-3, 0.5/(λ_N − λ₁))`.
pub fn default_dt(cutoff: usize) -> f64 {
    let spread = lambda(cutoff) - lambda(1);
    if spread > 0.0 {
        (RESOLUTION_LIMIT / spread).min(1e-3)
    } else {
        1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<ModalState>,
    pub control: ControlSignal,
    /// `max_t |‖ψ(t)‖ − 1|` over every step, recorded or not.
    pub drift: f64,
    /// False when the run stopped early.
    pub complete: bool,
}

impl Trajectory {
    pub fn last(&self) -> &ModalState {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// CSV with header `t,re_c1,im_c1,…,re_cN,im_cN,norm_drift`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.samples.first().map_or(0, |s| s.cutoff());
        let mut header = String::from("t");
        for k in 1..=n {
            header.push_str(&format!(",re_c{k},im_c{k}"));
        }
        header.push_str(",norm_drift");
        writeln!(w, "{header}")?;
        for s in &self.samples {
            let mut line = format!("{}", s.time);
            for c in &s.coeffs {
                line.push_str(&format!(",{},{}", c.re, c.im));
            }
            line.push_str(&format!(",{}", (s.norm() - 1.0).abs()));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Reusable integrator for one coupling operator and option set.
#[derive(Debug, Clone)]
pub struct Propagator {
    cutoff: usize,
    lambdas: Vec<f64>,
    b: DMatrix<f64>,
    /// Eigenvectors of `B`, column-major `v[m*n + k] = V_{k,m}`.
    v: Vec<f64>,
    d: Vec<f64>,
    opts: IntegrationOptions,
    dt: f64,
}

impl Propagator {
    pub fn new(b: &CouplingOperator, opts: IntegrationOptions) -> Result<Self> {
        if !b.is_symmetric() {
            return Err(Error::Domain("coupling matrix must be symmetric".into()));
        }
        let n = b.cutoff();
        let dt = opts.dt.unwrap_or_else(|| default_dt(n));
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("step {dt} must be positive")));
        }
        let spread = lambda(n) - lambda(1);
        if opts.scheme == Scheme::ExpMidpoint && dt * spread > RESOLUTION_LIMIT * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt·(λ_N − λ₁) = {:.4} exceeds {RESOLUTION_LIMIT}; use dt ≤ {:.3e}",
                dt * spread,
                RESOLUTION_LIMIT / spread
            )));
        }
        if !(opts.unitarity_tol > 0.0) {
            return Err(Error::Config("unitarity_tol must be positive".into()));
        }
        let eig = SymmetricEigen::new(b.entries.clone());
        let vmat = orthogonalize(eig.eigenvectors);
        let mut v = Vec::with_capacity(n * n);
        for m in 0..n {
            for k in 0..n {
                v.push(vmat[(k, m)]);
            }
        }
        Ok(Self {
            cutoff: n,
            lambdas: (1..=n).map(lambda).collect(),
            b: b.entries.clone(),
            v,
            d: eig.eigenvalues.iter().copied().collect(),
            opts,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn options(&self) -> &IntegrationOptions {
        &self.opts
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Integrates from `state0.time` to `t1`, calling `observe` after every step.
    /// Returns the final state and the maximal drift.
    pub fn run<F>(&self, state0: &ModalState, u: &ControlSignal, t1: f64, mut observe: F) -> Result<(ModalState, f64)>
    where
        F: FnMut(&ModalState, usize),
    {
        self.check_start(state0, t1)?;
        match self.opts.scheme {
            Scheme::ExpMidpoint => self.run_splitting(state0, u, t1, &mut observe),
            Scheme::RkAdaptive => self.run_rk(state0, u, t1, &mut observe),
        }
    }

    fn check_start(&self, state0: &ModalState, t1: f64) -> Result<()> {
        if state0.cutoff() != self.cutoff {
            return Err(Error::Domain(format!(
                "state cutoff {} does not match operator cutoff {}",
                state0.cutoff(),
                self.cutoff
            )));
        }
        if (state0.norm().powi(2) - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::Domain("initial state is not normalized".into()));
        }
        if !(t1 >= state0.time) {
            return Err(Error::Domain(format!("end time {t1} precedes start {}", state0.time)));
        }
        Ok(())
    }

    /// Exponential midpoint in the interaction picture,
    /// `a ← a + e^{iΛt_m}V(e^{−iu(t_m)Dh} − I)Vᵀe^{−iΛt_m}a`.
    ///
    /// Phases are recomputed every step and the kick is added as an increment,
    /// so rounding stays unbiased; repeated products with fixed phase factors
    /// leak norm at about one ulp per step.
    fn run_splitting<F>(&self, state0: &ModalState, u: &ControlSignal, t1: f64, observe: &mut F) -> Result<(ModalState, f64)>
    where
        F: FnMut(&ModalState, usize),
    {
        let n = self.cutoff;
        let t0 = state0.time;
        let steps = ((t1 - t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let h = if steps > 0 { (t1 - t0) / steps as f64 } else { 0.0 };
        let zero = Complex64::new(0.0, 0.0);
        let half: Vec<Complex64> = self.lambdas.iter().map(|l| Complex64::from_polar(1.0, -l * h / 2.0)).collect();
        let mut a = to_interaction(&state0.coeffs, &self.lambdas, t0);
        let mut zk = vec![zero; n];
        let mut b = vec![zero; n];
        let mut y = vec![zero; n];
        let mut state = state0.clone();
        let mut drift = (state0.norm() - 1.0).abs();
        for step in 1..=steps {
            let tm = t0 + (step as f64 - 0.5) * h;
            let um = u.eval(tm);
            mode_phases(tm, &mut zk);
            for k in 0..n {
                b[k] = zk[k].conj() * a[k];
            }
            for m in 0..n {
                let col = &self.v[m * n..(m + 1) * n];
                let mut acc = zero;
                for k in 0..n {
                    acc += b[k] * col[k];
                }
                let theta = um * self.d[m] * h;
                let s = (theta / 2.0).sin();
                y[m] = acc * Complex64::new(-2.0 * s * s, -theta.sin());
            }
            for k in 0..n {
                let mut acc = zero;
                for m in 0..n {
                    acc += y[m] * self.v[m * n + k];
                }
                a[k] += zk[k] * acc;
            }
            for k in 0..n {
                state.coeffs[k] = zk[k].conj() * half[k] * a[k];
            }
            state.time = if step == steps { t1 } else { t0 + step as f64 * h };
            let dev = (state.norm() - 1.0).abs();
            drift = drift.max(dev);
            observe(&state, step);
            if dev > self.opts.unitarity_tol {
                return Err(self.drift_error(drift, state.time, &state, u));
            }
        }
        state.time = t1;
        Ok((state, drift))
    }

    fn drift_error(&self, drift: f64, time: f64, state: &ModalState, u: &ControlSignal) -> Error {
        Error::Drift {
            drift,
            tol: self.opts.unitarity_tol,
            time,
            partial: Box::new(Trajectory {
                samples: vec![state.clone()],
                control: u.clone(),
                drift,
                complete: false,
            }),
        }
    }

    /// Interaction-picture right-hand side `a' = −iu(t)e^{iΛt}Be^{−iΛt}a`.
    fn rhs(&self, u: &ControlSignal, t: f64, a: &[Complex64], out: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.cutoff;
        let ut = u.eval(t);
        for k in 0..n {
            scratch[k] = a[k] * Complex64::from_polar(1.0, -self.lambdas[k] * t);
        }
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += scratch[j] * self.b[(k, j)];
            }
            out[k] = Complex64::new(0.0, -ut) * acc * Complex64::from_polar(1.0, self.lambdas[k] * t);
        }
    }

    fn run_rk<F>(&self, state0: &ModalState, u: &ControlSignal, t1: f64, observe: &mut F) -> Result<(ModalState, f64)>
    where
        F: FnMut(&ModalState, usize),
    {
        const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 7] = [
            [0.0; 6],
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let n = self.cutoff;
        let tol = self.opts.rk_tol;
        let t0 = state0.time;
        let mut t = t0;
        let mut a: Vec<Complex64> = state0
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, self.lambdas[k] * t0))
            .collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut k = vec![vec![zero; n]; 7];
        let mut tmp = vec![zero; n];
        let mut scratch = vec![zero; n];
        let mut h = self.dt.min((t1 - t0).max(f64::MIN_POSITIVE));
        let mut state = state0.clone();
        let mut drift = (state0.norm() - 1.0).abs();
        let mut step = 0usize;
        while t < t1 {
            h = h.min(t1 - t);
            let (k0, rest) = k.split_at_mut(1);
            self.rhs(u, t, &a, &mut k0[0], &mut scratch);
            let _ = rest;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = a[i];
                    for (r, coef) in A[s].iter().enumerate().take(s) {
                        acc += k[r][i] * (h * coef);
                    }
                    tmp[i] = acc;
                }
                let mut out = vec![zero; n];
                self.rhs(u, t + C[s] * h, &tmp, &mut out, &mut scratch);
                k[s] = out;
            }
            let mut err: f64 = 0.0;
            let mut next = vec![zero; n];
            for i in 0..n {
                let mut y5 = a[i];
                let mut e = zero;
                for s in 0..7 {
                    y5 += k[s][i] * (h * B5[s]);
                    e += k[s][i] * (h * (B5[s] - B4[s]));
                }
                next[i] = y5;
                err = err.max(e.norm());
            }
            if err <= tol || h < 1e-14 {
                t += h;
                a = next;
                step += 1;
                for (i, ai) in a.iter().enumerate() {
                    state.coeffs[i] = ai * Complex64::from_polar(1.0, -self.lambdas[i] * t);
                }
                state.time = t;
                let dev = (state.norm() - 1.0).abs();
                drift = drift.max(dev);
                observe(&state, step);
                if dev > self.opts.unitarity_tol {
                    return Err(self.drift_error(drift, t, &state, u));
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
            h *= factor;
        }
        state.time = t1;
        Ok((state, drift))
    }
}

/// Newton–Schulz polish `V ← V(3I − VᵀV)/2` to orthogonality at machine precision.
fn orthogonalize(mut v: DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    for _ in 0..3 {
        let g = v.transpose() * &v;
        v = &v * (&id * 3.0 - g) * 0.5;
    }
    v
}

fn to_interaction(c: &[Complex64], lambdas: &[f64], t: f64) -> Vec<Complex64> {
    c.iter().zip(lambdas).map(|(ck, l)| ck * Complex64::from_polar(1.0, l * t)).collect()
}

/// `out[k−1] = e^{iλ_k t}`, built from powers of `e^{iπ²t}`.
fn mode_phases(t: f64, out: &mut [Complex64]) {
    let z = Complex64::from_polar(1.0, PI * PI * t);
    let z2 = z * z;
    let mut odd = z;
    let mut cur = z;
    for (k, o) in out.iter_mut().enumerate() {
        if k > 0 {
            // z^{(k+1)²} = z^{k²}·z^{2k+1}
            odd *= z2;
            cur *= odd;
        }
        *o = cur;
    }
}

/// Integrates `state0` to `t1` and records samples every `record_stride` steps.
pub fn propagate(state0: &ModalState, u: &ControlSignal, t1: f64, b: &CouplingOperator, opts: IntegrationOptions) -> Result<Trajectory> {
    let prop = Propagator::new(b, opts)?;
    let stride = opts.record_stride.unwrap_or_else(|| quarter_period_stride(u, prop.dt())).max(1);
    let mut samples = vec![state0.clone()];
    let result = prop.run(state0, u, t1, |s, step| {
        if step % stride == 0 {
            samples.push(s.clone());
        }
    });
    match result {
        Ok((fin, drift)) => {
            if samples.last().map(|s| s.time) != Some(fin.time) {
                samples.push(fin);
            }
            Ok(Trajectory { samples, control: u.clone(), drift, complete: true })
        }
        Err(Error::Drift { drift, tol, time, partial }) => {
            let last_time = samples.last().map_or(f64::NEG_INFINITY, |s| s.time);
            samples.extend(partial.samples.into_iter().filter(|s| s.time > last_time));
            Err(Error::Drift {
                drift,
                tol,
                time,
                partial: Box::new(Trajectory { samples, control: u.clone(), drift, complete: false }),
            })
        }
        Err(e) => Err(e),
    }
}

fn quarter_period_stride(u: &ControlSignal, dt: f64) -> usize {
    match u {
        ControlSignal::PeriodicCosine { frequency, .. } if *frequency > 0.0 => {
            ((PI / 2.0 / frequency) / dt).floor().max(1.0) as usize
        }
        _ => 1,
    }
}

/// Max over samples of `‖ψ(t) − e^{−iAt}ψ⁰ + i∫₀ᵗe^{−iA(t−s)}u(s)Bψ(s)ds‖`,
/// with the integral by the trapezoid rule over the recorded samples.
pub fn duhamel_residual(traj: &Trajectory, b: &CouplingOperator) -> Result<f64> {
    let samples = &traj.samples;
    if samples.len() < 3 {
        return Err(Error::Domain("Duhamel residual needs at least 3 samples".into()));
    }
    let n = b.cutoff();
    if samples[0].cutoff() != n {
        return Err(Error::Domain("trajectory and operator cutoffs differ".into()));
    }
    let lambdas: Vec<f64> = (1..=n).map(lambda).collect();
    // interaction-picture integrand g(s) = u(s)e^{iΛs}Bψ(s)
    let integrand = |s: &ModalState| -> Vec<Complex64> {
        let us = traj.control.eval(s.time);
        (0..n)
            .map(|k| {
                let bk: Complex64 = (0..n).map(|j| s.coeffs[j] * b.entries[(k, j)]).sum();
                bk * us * Complex64::from_polar(1.0, lambdas[k] * s.time)
            })
            .collect()
    };
    let to_interaction = |s: &ModalState| -> Vec<Complex64> {
        s.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::from_polar(1.0, lambdas[k] * s.time))
            .collect()
    };
    let a0 = to_interaction(&samples[0]);
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut prev = integrand(&samples[0]);
    let mut worst: f64 = 0.0;
    for w in samples.windows(2) {
        let h = w[1].time - w[0].time;
        let cur = integrand(&w[1]);
        for k in 0..n {
            acc[k] += (prev[k] + cur[k]) * (0.5 * h);
        }
        let a = to_interaction(&w[1]);
        let r: f64 = (0..n)
            .map(|k| (a[k] - a0[k] + Complex64::new(0.0, 1.0) * acc[k]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
        prev = cur;
    }
    Ok(worst)
}

/// `(|c_k|, arg c_k)`.
pub fn fidelity_phase(state: &ModalState, k: usize) -> Result<(f64, f64)> {
    if k == 0 || k > state.cutoff() {
        return Err(Error::Domain(format!("mode {k} outside cutoff {}", state.cutoff())));
    }
    let c = state.coeff(k);
    Ok((c.norm(), c.arg()))
}
