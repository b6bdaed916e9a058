//! Phasor signals, analytic transmission factors and the rendering sums.
//!
//! A stage renders `R = sum_mn S_mn * T_mn` over its voxels; the two-stage
//! signal is the complex product of the stage renders. Phases are carried
//! unwrapped and only wrapped into `(-pi, pi]` on rendered outputs.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitude floor applied before converting to dB.
pub const DEFAULT_FLOOR_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorSignal {
    pub amplitude: f64,
    pub phase: f64,
}

impl PhasorSignal {
    pub const ONE: PhasorSignal = PhasorSignal {
        amplitude: 1.0,
        phase: 0.0,
    };

    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase must be finite"));
        }
        Ok(Self { amplitude, phase })
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    /// Polar form of `z` with phase in `(-pi, pi]`.
    pub fn from_complex(z: Complex64) -> Self {
        Self {
            amplitude: z.norm(),
            phase: wrap_phase(z.arg()),
        }
    }
}

/// Maps any finite angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// Amplitude (`rho`) and phase (`xi`) transmission coefficients plus carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConstants {
    pub amplitude_coefficient: f64,
    pub phase_coefficient: f64,
    pub wavelength: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        Self {
            amplitude_coefficient: 1.0,
            phase_coefficient: 1.0,
            wavelength: 0.125,
        }
    }
}

impl RadioConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude_coefficient", self.amplitude_coefficient),
            ("phase_coefficient", self.phase_coefficient),
            ("wavelength", self.wavelength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// Free-space transmission over `distance`: amplitude `rho / t`, phase `2 pi xi t / lambda`.
pub fn analytic_transmission(distance: f64, constants: &RadioConstants) -> Result<PhasorSignal> {
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::Singularity { distance });
    }
    Ok(PhasorSignal {
        amplitude: constants.amplitude_coefficient / distance,
        phase: 2.0 * PI * constants.phase_coefficient * distance / constants.wavelength,
    })
}

/// Per-voxel emitted signals and transmission factors for one bundle (ray-major).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    rays: usize,
    samples_per_ray: usize,
    signals: Vec<PhasorSignal>,
    transmissions: Vec<PhasorSignal>,
}

impl VoxelField {
    pub fn new(
        rays: usize,
        samples_per_ray: usize,
        signals: Vec<PhasorSignal>,
        transmissions: Vec<PhasorSignal>,
    ) -> Result<Self> {
        let n = rays * samples_per_ray;
        if n == 0 {
            return Err(Error::invalid("voxel field must be non-empty"));
        }
        if signals.len() != n || transmissions.len() != n {
            return Err(Error::invalid(format!(
                "voxel field expects {n} entries, got {} signals and {} transmissions",
                signals.len(),
                transmissions.len()
            )));
        }
        Ok(Self {
            rays,
            samples_per_ray,
            signals,
            transmissions,
        })
    }

    pub fn rays(&self) -> usize {
        self.rays
    }

    pub fn samples_per_ray(&self) -> usize {
        self.samples_per_ray
    }

    pub fn signals(&self) -> &[PhasorSignal] {
        &self.signals
    }

    pub fn transmissions(&self) -> &[PhasorSignal] {
        &self.transmissions
    }
}

/// Complex sum of `S * T` over every voxel of the field.
pub fn render_stage(field: &VoxelField) -> Result<PhasorSignal> {
    if field.signals.is_empty() {
        return Err(Error::invalid("cannot render an empty voxel field"));
    }
    let total: Complex64 = field
        .signals
        .iter()
        .zip(&field.transmissions)
        .map(|(s, t)| Complex64::from_polar(s.amplitude * t.amplitude, s.phase + t.phase))
        .sum();
    Ok(PhasorSignal::from_complex(total))
}

/// Complex product of the two stage renders.
pub fn render_total(stage1: PhasorSignal, stage2: PhasorSignal) -> PhasorSignal {
    PhasorSignal {
        amplitude: stage1.amplitude * stage2.amplitude,
        phase: wrap_phase(stage1.phase + stage2.phase),
    }
}

/// `20 log10(max(amplitude, floor_eps))`.
pub fn strength_db(signal: PhasorSignal, floor_eps: f64) -> f64 {
    amplitude_db(signal.amplitude, floor_eps)
}

pub(crate) fn amplitude_db(amplitude: f64, floor_eps: f64) -> f64 {
    20.0 * amplitude.max(floor_eps).log10()
}
