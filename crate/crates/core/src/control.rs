//! Real control signals `u(t)` with closed-form evaluation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One term `c·e^{iωt}` of a biorthogonal expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub omega: f64,
}

/// A scalar control on `[0, t_end]`.
///
/// `BiorthogonalSum` evaluates to `Σ Re(c·e^{iωt})`. The moment solver emits a
/// conjugate-symmetric term list, so the complex sum is itself real and
/// [`ControlSignal::eval_complex`] exposes its imaginary part as a check.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSignal {
    Zero { t_end: f64 },
    PeriodicCosine { amplitude: f64, frequency: f64, phase: f64, t_end: f64 },
    BiorthogonalSum { horizon: f64, terms: Vec<Term> },
}

impl ControlSignal {
    /// `u_n(t) = cos(π²|k² − j²|t)/n` on `[0, t_end]`.
    pub fn periodic(j: usize, k: usize, n: f64, t_end: f64) -> Self {
        let d = (k as f64).powi(2) - (j as f64).powi(2);
        ControlSignal::PeriodicCosine {
            amplitude: 1.0 / n,
            frequency: std::f64::consts::PI.powi(2) * d.abs(),
            phase: 0.0,
            t_end,
        }
    }

    pub fn t_end(&self) -> f64 {
        match self {
            ControlSignal::Zero { t_end } => *t_end,
            ControlSignal::PeriodicCosine { t_end, .. } => *t_end,
            ControlSignal::BiorthogonalSum { horizon, .. } => *horizon,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ControlSignal::Zero { .. } => 0.0,
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, .. } => {
                amplitude * (frequency * t + phase).cos()
            }
            ControlSignal::BiorthogonalSum { terms, .. } => terms
                .iter()
                .map(|term| {
                    let (s, c) = (term.omega * t).sin_cos();
                    term.coeff.re * c - term.coeff.im * s
                })
                .sum(),
        }
    }

    /// `Σ c·e^{iωt}` without taking the real part.
    pub fn eval_complex(&self, t: f64) -> Complex64 {
        match self {
            ControlSignal::BiorthogonalSum { terms, .. } => terms
                .iter()
                .map(|term| term.coeff * Complex64::from_polar(1.0, term.omega * t))
                .sum(),
            other => Complex64::new(other.eval(t), 0.0),
        }
    }

    /// `t ↦ u(T − t)` on `[0, T]`.
    pub fn time_reversed(&self, horizon: f64) -> Self {
        match self {
            ControlSignal::Zero { .. } => ControlSignal::Zero { t_end: horizon },
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, .. } => {
                // cos(ω(T − t) + φ) = cos(ωt − ωT − φ)
                ControlSignal::PeriodicCosine {
                    amplitude: *amplitude,
                    frequency: *frequency,
                    phase: -frequency * horizon - phase,
                    t_end: horizon,
                }
            }
            ControlSignal::BiorthogonalSum { terms, .. } => ControlSignal::BiorthogonalSum {
                horizon,
                terms: terms
                    .iter()
                    .map(|term| Term {
                        coeff: term.coeff * Complex64::from_polar(1.0, term.omega * horizon),
                        omega: -term.omega,
                    })
                    .collect(),
            },
        }
    }

    /// `‖u‖_{L²(0,t_end)}`, exact for the closed forms.
    pub fn l2_norm(&self) -> f64 {
        match self {
            ControlSignal::Zero { .. } => 0.0,
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, t_end } => {
                // ∫cos²(ωt+φ) = T/2 + (sin(2ωT+2φ) − sin 2φ)/(4ω)
                let osc = if *frequency == 0.0 {
                    t_end * phase.cos().powi(2) - t_end / 2.0
                } else {
                    ((2.0 * frequency * t_end + 2.0 * phase).sin() - (2.0 * phase).sin()) / (4.0 * frequency)
                };
                (amplitude * amplitude * (t_end / 2.0 + osc)).max(0.0).sqrt()
            }
            ControlSignal::BiorthogonalSum { horizon, terms } => {
                // u = Σ (c e^{iωt} + conj(c) e^{-iωt})/2
                let half: Vec<Term> = terms
                    .iter()
                    .flat_map(|t| {
                        [
                            Term { coeff: t.coeff * 0.5, omega: t.omega },
                            Term { coeff: t.coeff.conj() * 0.5, omega: -t.omega },
                        ]
                    })
                    .collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for a in &half {
                    for b in &half {
                        acc += a.coeff.conj() * b.coeff * exp_integral(b.omega - a.omega, *horizon);
                    }
                }
                acc.re.max(0.0).sqrt()
            }
        }
    }

    /// `∫₀^{t_end} u(s)e^{iνs} ds` in closed form.
    pub fn fourier_moment(&self, nu: f64) -> Complex64 {
        match self {
            ControlSignal::Zero { .. } => Complex64::new(0.0, 0.0),
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, t_end } => {
                let p = Complex64::from_polar(1.0, *phase);
                0.5 * amplitude
                    * (p * exp_integral(nu + frequency, *t_end) + p.conj() * exp_integral(nu - frequency, *t_end))
            }
            ControlSignal::BiorthogonalSum { horizon, terms } => terms
                .iter()
                .map(|t| {
                    0.5 * (t.coeff * exp_integral(nu + t.omega, *horizon)
                        + t.coeff.conj() * exp_integral(nu - t.omega, *horizon))
                })
                .sum(),
        }
    }

    /// Same signal with every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            ControlSignal::Zero { t_end } => ControlSignal::Zero { t_end: *t_end },
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, t_end } => ControlSignal::PeriodicCosine {
                amplitude: amplitude * s,
                frequency: *frequency,
                phase: *phase,
                t_end: *t_end,
            },
            ControlSignal::BiorthogonalSum { horizon, terms } => ControlSignal::BiorthogonalSum {
                horizon: *horizon,
                terms: terms.iter().map(|t| Term { coeff: t.coeff * s, omega: t.omega }).collect(),
            },
        }
    }
}

/// `∫₀ᵀ e^{iνs} ds`, with a series near `ν = 0`.
pub fn exp_integral(nu: f64, horizon: f64) -> Complex64 {
    let x = nu * horizon;
    if x.abs() < 1e-4 {
        let ix = Complex64::new(0.0, x);
        // (e^{ix} − 1)/(ix) = 1 + ix/2 + (ix)²/6 + (ix)³/24
        return horizon * (1.0 + ix / 2.0 + ix * ix / 6.0 + ix * ix * ix / 24.0);
    }
    (Complex64::from_polar(1.0, x) - 1.0) / Complex64::new(0.0, nu)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
enum ControlRepr {
    Zero {
        t_end: f64,
    },
    PeriodicCosine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        t_end: f64,
    },
    BiorthogonalSum {
        #[serde(rename = "T")]
        horizon: f64,
        terms: Vec<[f64; 3]>,
    },
}

impl Serialize for ControlSignal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            ControlSignal::Zero { t_end } => ControlRepr::Zero { t_end: *t_end },
            ControlSignal::PeriodicCosine { amplitude, frequency, phase, t_end } => ControlRepr::PeriodicCosine {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                t_end: *t_end,
            },
            ControlSignal::BiorthogonalSum { horizon, terms } => ControlRepr::BiorthogonalSum {
                horizon: *horizon,
                terms: terms.iter().map(|t| [t.coeff.re, t.coeff.im, t.omega]).collect(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ControlSignal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match ControlRepr::deserialize(d)? {
            ControlRepr::Zero { t_end } => ControlSignal::Zero { t_end },
            ControlRepr::PeriodicCosine { amplitude, frequency, phase, t_end } => {
                ControlSignal::PeriodicCosine { amplitude, frequency, phase, t_end }
            }
            ControlRepr::BiorthogonalSum { horizon, terms } => ControlSignal::BiorthogonalSum {
                horizon,
                terms: terms
                    .into_iter()
                    .map(|[re, im, omega]| Term { coeff: Complex64::new(re, im), omega })
                    .collect(),
            },
        })
    }
}
