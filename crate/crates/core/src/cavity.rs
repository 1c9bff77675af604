//! Cavity-QED layer: reflection coefficients of the quantum-dot–cavity
//! system, the phases they imprint on a reflected photon, and the resulting
//! spin–photon controlled-phase gate.
//!
//! The gate is built from phases alone: the raw reflection amplitudes (which
//! drop below 1 off the ideal regime) stay available in
//! [`ReflectionResult`] for diagnostics, but the matrix entries are unit
//! modulus, matching the phase-shift model the construction relies on.

use crate::qcore::{GateMatrix, QcoreError};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CavityError {
    #[error("invalid cavity parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("reflection denominator vanished for these parameters")]
    SingularInput,
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// Physical rates and frequencies (all rad/s): probe photon frequency ω_p,
/// cavity frequency ω_C, dot transition frequency ω_0, cavity decay κ > 0,
/// spin decay γ > 0, coupling strength g ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    omega_p: f64,
    omega_c: f64,
    omega_0: f64,
    kappa: f64,
    gamma: f64,
    g: f64,
}

impl CavityParams {
    pub fn new(
        omega_p: f64,
        omega_c: f64,
        omega_0: f64,
        kappa: f64,
        gamma: f64,
        g: f64,
    ) -> Result<Self, CavityError> {
        for (value, name) in [
            (omega_p, "omega_p must be finite"),
            (omega_c, "omega_c must be finite"),
            (omega_0, "omega_0 must be finite"),
        ] {
            if !value.is_finite() {
                return Err(CavityError::InvalidParameter(name));
            }
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(CavityError::InvalidParameter(
                "kappa must be finite and > 0",
            ));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(CavityError::InvalidParameter(
                "gamma must be finite and > 0",
            ));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(CavityError::InvalidParameter("g must be finite and >= 0"));
        }
        Ok(CavityParams {
            omega_p,
            omega_c,
            omega_0,
            kappa,
            gamma,
            g,
        })
    }

    /// All three frequencies equal: the regime the closed forms are quoted in.
    pub fn resonant(omega: f64, kappa: f64, gamma: f64, g: f64) -> Result<Self, CavityError> {
        CavityParams::new(omega, omega, omega, kappa, gamma, g)
    }

    pub fn omega_p(&self) -> f64 {
        self.omega_p
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn is_resonant(&self) -> bool {
        self.omega_p == self.omega_c && self.omega_p == self.omega_0
    }
}

/// Reflection coefficient of the coupled dot–cavity system:
/// ([i(ω_C−ω_p) − κ/2][i(ω_0−ω_p) + γ/2] + g²) /
/// ([i(ω_C−ω_p) + κ/2][i(ω_0−ω_p) + γ/2] + g²).
pub fn reflection_coupled(p: &CavityParams) -> Result<Complex64, CavityError> {
    let cavity_detuning = Complex64::new(0.0, p.omega_c - p.omega_p);
    let dot_detuning = Complex64::new(0.0, p.omega_0 - p.omega_p);
    let half_kappa = Complex64::new(p.kappa / 2.0, 0.0);
    let half_gamma = Complex64::new(p.gamma / 2.0, 0.0);
    let g_sq = Complex64::new(p.g * p.g, 0.0);

    let numerator = (cavity_detuning - half_kappa) * (dot_detuning + half_gamma) + g_sq;
    let denominator = (cavity_detuning + half_kappa) * (dot_detuning + half_gamma) + g_sq;
    if denominator.norm_sqr() == 0.0 {
        return Err(CavityError::SingularInput);
    }
    Ok(numerator / denominator)
}

/// Reflection coefficient with the dot uncoupled:
/// [i(ω_C−ω_p) − κ/2] / [i(ω_C−ω_p) + κ/2]. A pure phase for κ > 0.
pub fn reflection_uncoupled(p: &CavityParams) -> Complex64 {
    let detuning = p.omega_c - p.omega_p;
    let numerator = Complex64::new(-p.kappa / 2.0, detuning);
    let denominator = Complex64::new(p.kappa / 2.0, detuning);
    numerator / denominator
}

/// Both reflections and their principal arguments in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionResult {
    pub r_coupled: Complex64,
    pub r_uncoupled: Complex64,
    /// arg r_coupled.
    pub phi: f64,
    /// arg r_uncoupled.
    pub phi_0: f64,
}

pub fn phases(p: &CavityParams) -> Result<ReflectionResult, CavityError> {
    let r_coupled = reflection_coupled(p)?;
    let r_uncoupled = reflection_uncoupled(p);
    Ok(ReflectionResult {
        r_coupled,
        r_uncoupled,
        // wrap: atan2 maps a −0.0 imaginary part on the negative real axis
        // to −π, while the contract here is (−π, π]
        phi: wrap_angle(r_coupled.arg()),
        phi_0: wrap_angle(r_uncoupled.arg()),
    })
}

/// Wrap an angle into (−π, π].
fn wrap_angle(x: f64) -> f64 {
    let mut w = x.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// The diagonal spin–photon gate in the basis (photon R=0/L=1, spin +=0/−=1).
///
/// `effective_theta` is the deviation from an ideal CZ: the realized gate is
/// CP(π − effective_theta) up to phases common to all four entries, so the
/// value plugs directly into the game's imperfection parameter.
#[derive(Debug, Clone)]
pub struct SpinPhotonGate {
    pub matrix: GateMatrix,
    pub effective_theta: f64,
}

/// Build the gate from the reflection phases. An R photon never couples and
/// picks up φ₀ regardless of the spin; an L photon picks up φ against spin
/// |−⟩ and φ₀ against spin |+⟩. The optional π shifter multiplies the whole
/// reflection path by e^{iπ}, which turns the ideal-regime phases
/// (φ=0, φ₀=π) into an exact CZ.
pub fn spin_photon_gate(
    p: &CavityParams,
    apply_pi_shifter: bool,
) -> Result<SpinPhotonGate, CavityError> {
    let result = phases(p)?;
    let uncoupled = Complex64::from_polar(1.0, result.phi_0);
    let coupled = Complex64::from_polar(1.0, result.phi);
    let shifter = if apply_pi_shifter {
        -Complex64::ONE
    } else {
        Complex64::ONE
    };

    let diag = [
        shifter * uncoupled, // |R+⟩
        shifter * uncoupled, // |R−⟩
        shifter * uncoupled, // |L+⟩
        shifter * coupled,   // |L−⟩
    ];
    let mut entries = vec![Complex64::ZERO; 16];
    for (i, v) in diag.into_iter().enumerate() {
        entries[i * 4 + i] = v;
    }
    let matrix = GateMatrix::unitary(2, entries)?;

    // Only the phase of |L−⟩ relative to the common phase of the other three
    // entries matters downstream; an ideal CZ puts it at π.
    let effective_theta = PI - wrap_angle(result.phi - result.phi_0).abs();
    Ok(SpinPhotonGate {
        matrix,
        effective_theta,
    })
}

/// The regime condition g > 5√(κγ) under which φ ≈ 0 and φ₀ = π.
pub fn coupling_check(p: &CavityParams) -> bool {
    p.g > 5.0 * (p.kappa * p.gamma).sqrt()
}
