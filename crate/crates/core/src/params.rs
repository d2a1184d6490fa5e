//! Physical scenario, unit conversions and the rubidium / silica-toroid
//! example parameters.
//!
//! Every energy is stored as an angular frequency (E/ħ). Widths `gamma1`,
//! `gamma2` are rates in s⁻¹ that enter the golden-rule denominators in the
//! same units.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
/// Atomic unit of electric dipole moment e·a0, C·m.
pub const EA0: f64 = 8.478_353_625_5e-30;

/// Complete parameter set, canonical units (rad/s, s⁻¹, atom count).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    /// Mode spacing ω0 (rad/s).
    pub omega0: f64,
    /// Probe offset δ from the midpoint Ē/ħ of the two bracketing modes.
    pub delta: f64,
    /// Midpoint Ē/ħ. Only the oracle uses it; the rate formulas do not.
    pub ebar: f64,
    /// Detuning Δ1 of |1_A⟩ from Ē/ħ.
    pub delta1: f64,
    /// Detuning Δ2 of |2_A⟩ from 2Ē/ħ.
    pub delta2: f64,
    /// Half-width of |1_A⟩ (s⁻¹).
    pub gamma1: f64,
    /// Width of |2_A⟩ (s⁻¹).
    pub gamma2: f64,
    /// Atomic coupling M1/ħ (rad/s).
    pub m1: f64,
    /// Atomic coupling M2/ħ (rad/s).
    pub m2: f64,
    /// Waveguide-resonator coupling Mw/ħ (rad/s).
    pub mw: f64,
    /// Number of atoms in the mode volume (real because N_A = ρ·V_m).
    pub n_atoms: f64,
}

impl Scenario {
    /// Finite fields, ω0 > 0, γ1, γ2 > 0, N ≥ 0. The rate formulas need
    /// the widths strictly positive.
    pub fn validate(&self) -> Result<()> {
        self.validate_allowing_zero_widths()?;
        if self.gamma1 == 0.0 {
            return Err(Error::InvalidInput("gamma1 must be positive".into()));
        }
        if self.gamma2 == 0.0 {
            return Err(Error::InvalidInput("gamma2 must be positive".into()));
        }
        Ok(())
    }

    /// As [`Scenario::validate`] but γ = 0 is accepted (lossless dynamics).
    pub fn validate_allowing_zero_widths(&self) -> Result<()> {
        let finite = [
            ("omega0", self.omega0),
            ("delta", self.delta),
            ("ebar", self.ebar),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("m1", self.m1),
            ("m2", self.m2),
            ("mw", self.mw),
            ("n_atoms", self.n_atoms),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} is not finite")));
            }
        }
        if self.omega0 <= 0.0 {
            return Err(Error::InvalidInput("omega0 must be positive".into()));
        }
        if self.gamma1 < 0.0 {
            return Err(Error::InvalidInput("gamma1 must not be negative".into()));
        }
        if self.gamma2 < 0.0 {
            return Err(Error::InvalidInput("gamma2 must not be negative".into()));
        }
        if self.n_atoms < 0.0 {
            return Err(Error::InvalidInput("n_atoms must be non-negative".into()));
        }
        Ok(())
    }

    /// δ/ω0.
    pub fn delta_frac(&self) -> f64 {
        self.delta / self.omega0
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_delta_frac(self, frac: f64) -> Self {
        let d = frac * self.omega0;
        self.with_delta(d)
    }

    pub fn with_n_atoms(mut self, n_atoms: f64) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    /// Multiply all three couplings (M1, M2, Mw) by `factor`.
    pub fn with_scaled_couplings(mut self, factor: f64) -> Self {
        self.m1 *= factor;
        self.m2 *= factor;
        self.mw *= factor;
        self
    }

    /// Index l_R of the lower bracketing mode, assuming Ē = (l_R + ½)·ω0.
    pub fn lower_mode_index(&self) -> i64 {
        (self.ebar / self.omega0 - 0.5).round() as i64
    }

    /// Conditions under which the closed forms are used outside the regime
    /// they were derived for. Empty when the scenario is comfortably inside.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta.abs() > 0.1 * self.delta1.abs() {
            out.push(format!(
                "|delta| = {:.3e} exceeds 0.1*|delta1| = {:.3e}; the single-photon rate drops delta next to delta1",
                self.delta.abs(),
                0.1 * self.delta1.abs()
            ));
        }
        if self.mw.abs() > 0.5 * (0.5 * self.omega0 - self.delta.abs()) {
            out.push("mw is not small compared with the nearest mode detuning".into());
        }
        out
    }

    pub fn to_display(&self) -> DisplayScenario {
        let hz = |w: f64| w / (2.0 * PI);
        DisplayScenario {
            omega0_hz: hz(self.omega0),
            delta_hz: hz(self.delta),
            ebar_hz: hz(self.ebar),
            delta1_hz: hz(self.delta1),
            delta2_hz: hz(self.delta2),
            gamma1_per_s: self.gamma1,
            gamma2_per_s: self.gamma2,
            m1_hz: hz(self.m1),
            m2_hz: hz(self.m2),
            mw_hz: hz(self.mw),
            n_atoms: self.n_atoms,
        }
    }
}

/// A [`Scenario`] in laboratory display units: frequencies in Hz (cycles),
/// widths in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayScenario {
    pub omega0_hz: f64,
    pub delta_hz: f64,
    pub ebar_hz: f64,
    pub delta1_hz: f64,
    pub delta2_hz: f64,
    pub gamma1_per_s: f64,
    pub gamma2_per_s: f64,
    pub m1_hz: f64,
    pub m2_hz: f64,
    pub mw_hz: f64,
    pub n_atoms: f64,
}

impl DisplayScenario {
    pub fn to_canonical(&self) -> Result<Scenario> {
        let w = |hz: f64| 2.0 * PI * hz;
        let s = Scenario {
            omega0: w(self.omega0_hz),
            delta: w(self.delta_hz),
            ebar: w(self.ebar_hz),
            delta1: w(self.delta1_hz),
            delta2: w(self.delta2_hz),
            gamma1: self.gamma1_per_s,
            gamma2: self.gamma2_per_s,
            m1: w(self.m1_hz),
            m2: w(self.m2_hz),
            mw: w(self.mw_hz),
            n_atoms: self.n_atoms,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Ring geometry. `D ≫ d` is expected but only warned about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorGeometry {
    pub fiber_diameter: f64,
    pub ring_diameter: f64,
    pub mode_volume: f64,
    pub probe_wavelength: f64,
}

impl ResonatorGeometry {
    pub fn new(
        fiber_diameter: f64,
        ring_diameter: f64,
        mode_volume: f64,
        probe_wavelength: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("fiber_diameter", fiber_diameter),
            ("ring_diameter", ring_diameter),
            ("mode_volume", mode_volume),
            ("probe_wavelength", probe_wavelength),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(Self {
            fiber_diameter,
            ring_diameter,
            mode_volume,
            probe_wavelength,
        })
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.ring_diameter < 10.0 * self.fiber_diameter {
            vec![format!(
                "ring diameter {:.3e} m is not much larger than fiber diameter {:.3e} m",
                self.ring_diameter, self.fiber_diameter
            )]
        } else {
            Vec::new()
        }
    }
}

/// N_A = ρ·V_m with ρ in m⁻³ and V_m in m³.
pub fn atoms_in_mode_volume(rho: f64, v_m: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "density {rho} must be non-negative"
        )));
    }
    if !(v_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mode volume {v_m} must be positive"
        )));
    }
    Ok(rho * v_m)
}

/// atoms/cm³ → atoms/m³.
pub fn per_cm3_to_per_m3(rho_cm3: f64) -> f64 {
    rho_cm3 * 1e6
}

/// Angular-frequency offset for a small wavelength offset `delta_lambda`
/// around `lambda_ref`, to first order: 2πc·Δλ/λ².
pub fn detuning_from_wavelengths(lambda_ref: f64, delta_lambda: f64) -> Result<f64> {
    if !(lambda_ref > 0.0) {
        return Err(Error::InvalidInput(
            "reference wavelength must be positive".into(),
        ));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT * delta_lambda / (lambda_ref * lambda_ref))
}

/// Single-photon vacuum field √(ħω / 2ε0V), V/m.
///
/// Standard mode-volume normalization; it stands in for the exact
/// evanescent-field integral of the fiber mode, so absolute couplings
/// derived from it are estimates.
pub fn vacuum_field_amplitude(omega: f64, v_m: f64) -> Result<f64> {
    if !(omega > 0.0) || !(v_m > 0.0) {
        return Err(Error::InvalidInput(
            "vacuum field needs positive frequency and mode volume".into(),
        ));
    }
    Ok((HBAR * omega / (2.0 * EPSILON0 * v_m)).sqrt())
}

/// Dipole coupling d·E/ħ in rad/s.
pub fn matrix_element(dipole: f64, field: f64) -> Result<f64> {
    if !(field >= 0.0) {
        return Err(Error::InvalidInput(
            "field amplitude must be non-negative".into(),
        ));
    }
    Ok(dipole * field / HBAR)
}

/// Parameters of the rubidium vapor / silica toroid example.
pub mod rubidium {
    use super::EA0;

    /// ω0/2π for d = 0.35 μm, D = 50 μm.
    pub const MODE_SPACING_HZ: f64 = 1.8e12;
    pub const MODE_VOLUME_M3: f64 = 7.6e-17;
    pub const FIBER_DIAMETER_M: f64 = 0.35e-6;
    pub const RING_DIAMETER_M: f64 = 50e-6;
    /// Two-photon resonance 5S → 5D.
    pub const TWO_PHOTON_WAVELENGTH_M: f64 = 778e-9;
    /// Wavelength offset of the intermediate 5P level from the probe.
    pub const INTERMEDIATE_OFFSET_M: f64 = 2.1e-9;
    /// γ1 = γ2 ≐ π×10⁸ s⁻¹.
    pub const GAMMA_PER_S: f64 = std::f64::consts::PI * 1e8;
    /// Mw = ħω0/3.
    pub const MW_FRACTION: f64 = 1.0 / 3.0;
    /// Reference density of the worked example.
    pub const DENSITY_CM3: f64 = 1e15;

    /// 5S1/2 → 5P3/2 reduced dipole, 4.227 e·a0. External-literature
    /// estimate, not part of the resonator model.
    pub const DIPOLE1_CM: f64 = 4.227 * EA0;
    /// 5P3/2 → 5D5/2 reduced dipole, about 2.0 e·a0. External-literature
    /// estimate.
    pub const DIPOLE2_CM: f64 = 2.0 * EA0;
}

/// Inputs of the rubidium example before conversion to a [`Scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RubidiumInputs {
    pub dipole1: f64,
    pub dipole2: f64,
    pub density_cm3: f64,
    pub delta_frac: f64,
}

impl Default for RubidiumInputs {
    fn default() -> Self {
        Self {
            dipole1: rubidium::DIPOLE1_CM,
            dipole2: rubidium::DIPOLE2_CM,
            density_cm3: rubidium::DENSITY_CM3,
            delta_frac: 0.0,
        }
    }
}

/// Ē for a probe of wavelength `lambda`: the midpoint of the two modes that
/// bracket ω = 2πc/λ.
pub fn midpoint_for_wavelength(omega0: f64, lambda: f64) -> f64 {
    let w = 2.0 * PI * SPEED_OF_LIGHT / lambda;
    let l_r = (w / omega0 - 0.5).round();
    (l_r + 0.5) * omega0
}

pub fn rubidium_scenario(inputs: &RubidiumInputs) -> Result<Scenario> {
    let omega0 = 2.0 * PI * rubidium::MODE_SPACING_HZ;
    let lambda = rubidium::TWO_PHOTON_WAVELENGTH_M;
    let field =
        vacuum_field_amplitude(2.0 * PI * SPEED_OF_LIGHT / lambda, rubidium::MODE_VOLUME_M3)?;
    let n_atoms = atoms_in_mode_volume(
        per_cm3_to_per_m3(inputs.density_cm3),
        rubidium::MODE_VOLUME_M3,
    )?;
    let s = Scenario {
        omega0,
        delta: inputs.delta_frac * omega0,
        ebar: midpoint_for_wavelength(omega0, lambda),
        delta1: detuning_from_wavelengths(lambda, rubidium::INTERMEDIATE_OFFSET_M)?,
        delta2: 0.0,
        gamma1: rubidium::GAMMA_PER_S,
        gamma2: rubidium::GAMMA_PER_S,
        m1: matrix_element(inputs.dipole1, field)?,
        m2: matrix_element(inputs.dipole2, field)?,
        mw: rubidium::MW_FRACTION * omega0,
        n_atoms,
    };
    s.validate()?;
    Ok(s)
}

/// The worked example: ρ = 10¹⁵ cm⁻³, δ = 0, default dipole estimates.
pub fn rubidium_default_scenario() -> Scenario {
    rubidium_scenario(&RubidiumInputs::default()).expect("built-in constants are valid")
}
