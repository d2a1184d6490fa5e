//! Scenario files: flat `key = value` lines, `#` starts a comment.
//!
//! Keys carry their unit: `_hz` is cycles per second (multiplied by 2π on
//! load), `_per_s` a rate, `_m`, `_m3`, `_cm3`, `_cm` SI or CGS lengths
//! and densities, `_frac` a multiple of ω0. Missing keys fall back to the
//! rubidium example. Keys within one group are alternatives; giving two of
//! them is an error.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{
    atoms_in_mode_volume, detuning_from_wavelengths, matrix_element, midpoint_for_wavelength,
    per_cm3_to_per_m3, rubidium, vacuum_field_amplitude, ResonatorGeometry, Scenario,
    SPEED_OF_LIGHT,
};

/// Accepted keys, grouped by the quantity they set.
pub const KEY_GROUPS: &[&[&str]] = &[
    &["omega0_hz"],
    &["delta_frac", "delta_hz"],
    &["lambda_m"],
    &["delta1_dlambda_m", "delta1_hz"],
    &["delta2_hz"],
    &["gamma1_per_s"],
    &["gamma2_per_s", "gamma2_frac"],
    &["mw_frac", "mw_hz"],
    &["m1_hz", "dipole1_cm"],
    &["m2_hz", "dipole2_cm"],
    &["rho_cm3", "n_atoms"],
    &["vm_m3"],
    &["fiber_diameter_m"],
    &["ring_diameter_m"],
];

fn group_of(key: &str) -> Option<&'static [&'static str]> {
    KEY_GROUPS.iter().copied().find(|g| g.contains(&key))
}

/// Raw key/value pairs in file order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioSpec {
    values: BTreeMap<String, f64>,
}

impl ScenarioSpec {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    fn insert_checked(&mut self, key: &str, value: f64, line: usize) -> Result<()> {
        let group = group_of(key).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown key '{key}'"),
        })?;
        if self.values.contains_key(key) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        if let Some(other) = group
            .iter()
            .find(|k| **k != key && self.values.contains_key(**k))
        {
            return Err(Error::Parse {
                line,
                message: format!("'{key}' and '{other}' set the same quantity"),
            });
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Replace `key` (and any alternative to it) with `value`.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let group =
            group_of(key).ok_or_else(|| Error::InvalidInput(format!("unknown key '{key}'")))?;
        for k in group {
            self.values.remove(*k);
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("override '{assignment}' is not key=value"))
        })?;
        let value = parse_number(v.trim())
            .map_err(|m| Error::InvalidInput(format!("override '{assignment}': {m}")))?;
        self.set(k.trim(), value)
    }
}

fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let v: f64 = text
        .parse()
        .map_err(|_| format!("'{text}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}

pub fn parse(text: &str) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected 'key = value', got '{body}'"),
        })?;
        let value = parse_number(v.trim()).map_err(|message| Error::Parse { line, message })?;
        spec.insert_checked(k.trim(), value, line)?;
    }
    Ok(spec)
}

pub fn load(path: &Path) -> Result<ScenarioSpec> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// A scenario together with the inputs it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub mode_volume_m3: f64,
    pub probe_wavelength_m: f64,
    /// Density when N_A was derived from one.
    pub density_cm3: Option<f64>,
    /// Dipole moments (C·m) when M1, M2 were derived from them.
    pub dipole1_cm: Option<f64>,
    pub dipole2_cm: Option<f64>,
    pub warnings: Vec<String>,
}

impl ResolvedScenario {
    /// Header lines describing the derived inputs.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut out = vec![(
            "mode_volume_m3".to_string(),
            format!("{:e}", self.mode_volume_m3),
        )];
        if let Some(r) = self.density_cm3 {
            out.push(("rho_cm3".into(), format!("{r:e}")));
        }
        if let Some(d) = self.dipole1_cm {
            out.push(("dipole1_cm".into(), format!("{d:e}")));
        }
        if let Some(d) = self.dipole2_cm {
            out.push(("dipole2_cm".into(), format!("{d:e}")));
        }
        for w in &self.warnings {
            out.push(("warning".into(), w.clone()));
        }
        out
    }
}

pub fn resolve(spec: &ScenarioSpec) -> Result<ResolvedScenario> {
    let hz = |v: f64| 2.0 * PI * v;
    let omega0 = hz(spec.get("omega0_hz").unwrap_or(rubidium::MODE_SPACING_HZ));
    if !(omega0 > 0.0) {
        return Err(Error::InvalidInput("omega0_hz must be positive".into()));
    }
    let lambda = spec
        .get("lambda_m")
        .unwrap_or(rubidium::TWO_PHOTON_WAVELENGTH_M);
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput("lambda_m must be positive".into()));
    }
    let v_m = spec.get("vm_m3").unwrap_or(rubidium::MODE_VOLUME_M3);
    if !(v_m > 0.0) {
        return Err(Error::InvalidInput("vm_m3 must be positive".into()));
    }
    let delta = match (spec.get("delta_frac"), spec.get("delta_hz")) {
        (Some(f), _) => f * omega0,
        (_, Some(h)) => hz(h),
        _ => 0.0,
    };
    let delta1 = match (spec.get("delta1_hz"), spec.get("delta1_dlambda_m")) {
        (Some(h), _) => hz(h),
        (_, Some(dl)) => detuning_from_wavelengths(lambda, dl)?,
        _ => detuning_from_wavelengths(lambda, rubidium::INTERMEDIATE_OFFSET_M)?,
    };
    let gamma2 = match (spec.get("gamma2_per_s"), spec.get("gamma2_frac")) {
        (Some(g), _) => g,
        (_, Some(f)) => f * omega0,
        _ => rubidium::GAMMA_PER_S,
    };
    let mw = match (spec.get("mw_frac"), spec.get("mw_hz")) {
        (Some(f), _) => f * omega0,
        (_, Some(h)) => hz(h),
        _ => rubidium::MW_FRACTION * omega0,
    };
    let field = vacuum_field_amplitude(2.0 * PI * SPEED_OF_LIGHT / lambda, v_m)?;
    let coupling = |hz_key: &str, dipole_key: &str, default: f64| -> Result<(f64, Option<f64>)> {
        match (spec.get(hz_key), spec.get(dipole_key)) {
            (Some(h), _) => Ok((hz(h), None)),
            (_, Some(d)) => Ok((matrix_element(d, field)?, Some(d))),
            _ => Ok((matrix_element(default, field)?, Some(default))),
        }
    };
    let (m1, dipole1_cm) = coupling("m1_hz", "dipole1_cm", rubidium::DIPOLE1_CM)?;
    let (m2, dipole2_cm) = coupling("m2_hz", "dipole2_cm", rubidium::DIPOLE2_CM)?;
    let (n_atoms, density_cm3) = match (spec.get("n_atoms"), spec.get("rho_cm3")) {
        (Some(n), _) => (n, None),
        (_, Some(r)) => (atoms_in_mode_volume(per_cm3_to_per_m3(r), v_m)?, Some(r)),
        _ => (
            atoms_in_mode_volume(per_cm3_to_per_m3(rubidium::DENSITY_CM3), v_m)?,
            Some(rubidium::DENSITY_CM3),
        ),
    };
    let scenario = Scenario {
        omega0,
        delta,
        ebar: midpoint_for_wavelength(omega0, lambda),
        delta1,
        delta2: hz(spec.get("delta2_hz").unwrap_or(0.0)),
        gamma1: spec.get("gamma1_per_s").unwrap_or(rubidium::GAMMA_PER_S),
        gamma2,
        m1,
        m2,
        mw,
        n_atoms,
    };
    scenario.validate()?;
    let geometry = ResonatorGeometry::new(
        spec.get("fiber_diameter_m")
            .unwrap_or(rubidium::FIBER_DIAMETER_M),
        spec.get("ring_diameter_m")
            .unwrap_or(rubidium::RING_DIAMETER_M),
        v_m,
        lambda,
    )?;
    let mut warnings = geometry.warnings();
    warnings.extend(scenario.regime_warnings());
    Ok(ResolvedScenario {
        scenario,
        mode_volume_m3: v_m,
        probe_wavelength_m: lambda,
        density_cm3,
        dipole1_cm,
        dipole2_cm,
        warnings,
    })
}
