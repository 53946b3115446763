//! Optimal qutrit strategy for the three-outcome CGLMP inequality and the
//! communication game built on it.
//!
//! Alice and Bob share `|φ> = Σ_k γ_k |kk> / √N` with `γ = (1, γ₁, 1)`,
//! `γ₁ = (√11 - √3)/2`, and measure in the phase-shifted Fourier bases
//!
//! ```text
//! |a>_X = Σ_k ω^{k(a + α_X)} |k> / √3,   α = (0, 1/2)
//! |b>_Y = Σ_k ω^{k(-b + β_Y)} |k> / √3,  β = (1/4, -1/4)
//! ```
//!
//! with `ω = e^{2πi/3}`. In the game, Alice's preparation `(x0, x)` is Bob's
//! conditional state after Alice's outcome `a = x0 - δ_{x,1}` on setting `x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bellmap::preparations_from_entangled;
use crate::error::Result;
use crate::games::{cglmp_input, cglmp_target, Behavior, QuantumStrategy};
use crate::qmath::{Ket, Povm};

#[derive(Clone, Debug, PartialEq)]
pub struct CglmpStrategy {
    pub gamma: [f64; 3],
    pub norm: f64,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub omega: Complex64,
}

impl CglmpStrategy {
    pub fn optimal() -> Self {
        let g1 = (11f64.sqrt() - 3f64.sqrt()) / 2.0;
        Self {
            gamma: [1.0, g1, 1.0],
            norm: 2.0 + g1 * g1,
            alpha: [0.0, 0.5],
            beta: [0.25, -0.25],
            omega: Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        }
    }
}

/// `ω^t` for real `t`.
fn omega_pow(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t / 3.0)
}

pub fn optimal_state() -> Ket {
    let s = CglmpStrategy::optimal();
    let mut amps = vec![Complex64::new(0.0, 0.0); 9];
    for k in 0..3 {
        amps[4 * k] = Complex64::new(s.gamma[k] / s.norm.sqrt(), 0.0);
    }
    Ket::normalized(amps).expect("nonzero")
}

pub fn alice_basis(x: usize) -> Vec<Ket> {
    let alpha = CglmpStrategy::optimal().alpha[x];
    fourier_basis(|a, k| k as f64 * (a as f64 + alpha))
}

pub fn bob_basis(y: usize) -> Vec<Ket> {
    let beta = CglmpStrategy::optimal().beta[y];
    fourier_basis(|b, k| k as f64 * (beta - b as f64))
}

fn fourier_basis(phase: impl Fn(usize, usize) -> f64) -> Vec<Ket> {
    let s = 1.0 / 3f64.sqrt();
    (0..3).map(|v| Ket::new((0..3).map(|k| omega_pow(phase(v, k)) * s).collect()).expect("unit norm")).collect()
}

pub fn alice_measurements() -> Vec<Povm> {
    (0..2).map(|x| Povm::from_basis(&alice_basis(x)).expect("orthonormal")).collect()
}

pub fn bob_measurements() -> Vec<Povm> {
    (0..2).map(|y| Povm::from_basis(&bob_basis(y)).expect("orthonormal")).collect()
}

/// Alice's Bell outcome behind game preparation `(x0, x)`.
pub fn bell_outcome(x0: usize, x: usize) -> usize {
    (x0 + 3 - x) % 3
}

/// Bob's conditional state for game preparation `(x0, x)`:
/// `Σ_k γ_k ω^{-k(x0 - δ_{x,1} + α_x)} |k> / √N`.
pub fn conditional_state(x0: usize, x: usize) -> Ket {
    let s = CglmpStrategy::optimal();
    let theta = x0 as f64 - x as f64 + s.alpha[x];
    let amps = (0..3).map(|k| omega_pow(-(k as f64) * theta) * (s.gamma[k] / s.norm.sqrt())).collect();
    Ket::normalized(amps).expect("nonzero")
}

/// `p(b|x0 x, y) = (1/3N) Σ_{k,j} γ_k γ_j ω^{(k-j)(x0 - b + α_x + β_y - δ_{x,1})}`.
pub fn closed_form_prob(x0: usize, x: usize, y: usize, b: usize) -> f64 {
    let s = CglmpStrategy::optimal();
    let theta = x0 as f64 - b as f64 + s.alpha[x] + s.beta[y] - x as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..3 {
        for j in 0..3 {
            acc += omega_pow((k as f64 - j as f64) * theta) * (s.gamma[k] * s.gamma[j]);
        }
    }
    acc.re / (3.0 * s.norm)
}

/// Closed-form statistics laid out for [`crate::games::make_cglmp3_game`].
pub fn closed_form_behavior() -> Behavior {
    let mut table = vec![vec![vec![0.0; 3]; 2]; 6];
    for x in 0..2 {
        for x0 in 0..3 {
            for y in 0..2 {
                for b in 0..3 {
                    table[cglmp_input(x0, x)][y][b] = closed_form_prob(x0, x, y, b);
                }
            }
        }
    }
    Behavior::new(table).expect("closed form is normalized")
}

/// `(1/3N) Σ γ_k γ_j [cos(π(k-j)/6) - cos(π(k-j)/2)]`.
pub fn a3_quantum() -> f64 {
    let s = CglmpStrategy::optimal();
    let mut acc = 0.0;
    for k in 0..3 {
        for j in 0..3 {
            let t = k as f64 - j as f64;
            acc += s.gamma[k] * s.gamma[j] * ((PI * t / 6.0).cos() - (PI * t / 2.0).cos());
        }
    }
    acc / (3.0 * s.norm)
}

/// `A_3` from any table `p[(x0, x)][y][b]` in game layout.
pub fn a3_from_table(p: impl Fn(usize, usize, usize, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for x0 in 0..3 {
        for x in 0..2 {
            for y in 0..2 {
                total += p(x0, x, y, cglmp_target(x0, x, y, 0)) - p(x0, x, y, cglmp_target(x0, x, y, 1));
            }
        }
    }
    total / 12.0
}

/// The game strategy obtained by steering the optimal state with Alice's
/// bases, computed with matrices rather than the closed form.
pub fn quantum_strategy() -> Result<QuantumStrategy> {
    let steered = preparations_from_entangled(&optimal_state().density(), &alice_measurements())?;
    let mut preps = Vec::with_capacity(6);
    for x in 0..2 {
        for x0 in 0..3 {
            preps.push(steered.preparations[x * 3 + bell_outcome(x0, x)].clone());
        }
    }
    QuantumStrategy::new(preps, bob_measurements())
}

/// `cos(2χ₁)|0> + sin(2χ₁) sin(2χ₂)|1> + sin(2χ₁) cos(2χ₂)|2>`, angles in degrees.
pub fn waveplate_state(chi1: f64, chi2: f64) -> Ket {
    let (a, b) = (2.0 * chi1.to_radians(), 2.0 * chi2.to_radians());
    Ket::normalized(vec![
        Complex64::new(a.cos(), 0.0),
        Complex64::new(a.sin() * b.sin(), 0.0),
        Complex64::new(a.sin() * b.cos(), 0.0),
    ])
    .expect("trigonometric amplitudes are normalized")
}

/// Half-wave plate settings `(label, χ₁, χ₂)` of the six lab preparations.
pub const LAB_PREPARATION_ANGLES: [(&str, f64, f64); 6] = [
    ("11", 77.01, 24.93),
    ("12", 12.98, 20.07),
    ("13", 36.80, 34.79),
    ("21", 54.78, 81.28),
    ("22", 53.19, 10.21),
    ("23", 54.78, 53.71),
];

pub fn lab_preparations() -> Vec<Ket> {
    LAB_PREPARATION_ANGLES.iter().map(|&(_, a, b)| waveplate_state(a, b)).collect()
}
