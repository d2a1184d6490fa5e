//! High-density treatment: the photon pair and the singly excited atomic
//! ensemble mix strongly, so the M1 step is diagonalized exactly and only
//! Mw and M2 are left to perturbation theory.
//!
//! For each chain the pair state |2 l⟩ and the collective state |l, 1_A⟩
//! form a 2×2 block with coupling g = √N·(Bose factor)·M1. The bare
//! amplitude carries g/D3 for that step; over the dressed pair the same
//! step becomes ½·sin 2θ with tan 2θ = 2g/D3. For g ≪ |D3| this reduces to
//! g/D3 and the rate is linear in N; for g ≫ |D3| it tends to ½·sign(D3)
//! and the rate no longer depends on N.

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::error::{Error, Result};
use crate::params::{atoms_in_mode_volume, per_cm3_to_per_m3, Scenario};
use crate::perturbative::{
    summed_elements, two_photon_rate_full, ChainState, ModeOffset, PathAmplitude, PathOptions,
};
use crate::sweep::{log_log_slope, map_ordered, SweepResult};

/// Eigen-decomposition of a real symmetric 2×2 matrix [[a, c], [c, b]].
///
/// Basis order is (pair state, atomic state), so `c2m_prime[i]` and
/// `c1a[i]` are the components of eigenvector i (0 = upper, 1 = lower).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedBasis {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// tan 2θ = 2c/(a − b), principal branch; θ = 0 when decoupled.
    pub mixing_angle: f64,
    /// c/√2, the collective M1′ when built from the two-level block.
    pub m1_prime: f64,
    pub c2m_prime: [f64; 2],
    pub c1a: [f64; 2],
}

impl DressedBasis {
    pub fn diagonalize(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidInput("non-finite 2x2 matrix entry".into()));
        }
        let mean = 0.5 * (a + b);
        let half = 0.5 * (a - b);
        let r = half.hypot(c);
        let det = a * b - c * c;
        let (lambda_plus, lambda_minus) = if mean > 0.0 {
            let hi = mean + r;
            (hi, det / hi)
        } else if mean < 0.0 {
            let lo = mean - r;
            (det / lo, lo)
        } else {
            (r, -r)
        };

        let theta = if half == 0.0 {
            if c == 0.0 {
                0.0
            } else {
                FRAC_PI_4.copysign(c)
            }
        } else {
            0.5 * (c / half).atan()
        };
        let (sn, cs) = theta.sin_cos();
        // (cos θ, sin θ) is continuous with the pair state.
        let pair_like = [cs, sn];
        let atom_like = [-sn, cs];
        let pair_energy = a + c * theta.tan();
        let atom_energy = b - c * theta.tan();
        let (upper, lower) = if pair_energy >= atom_energy {
            (pair_like, atom_like)
        } else {
            (atom_like, pair_like)
        };
        Ok(Self {
            lambda_plus,
            lambda_minus,
            mixing_angle: theta,
            m1_prime: c / SQRT_2,
            c2m_prime: [upper[0], lower[0]],
            c1a: [upper[1], lower[1]],
        })
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        [self.lambda_plus, self.lambda_minus]
    }

    pub fn eigenvector(&self, i: usize) -> [f64; 2] {
        [self.c2m_prime[i], self.c1a[i]]
    }

    /// ½ sin 2θ, which stands in for g/(a − b) once the block is dressed.
    pub fn half_sin_two_theta(&self) -> f64 {
        0.5 * (2.0 * self.mixing_angle).sin()
    }
}

/// The m_R block: [[ω0, √2·m1′], [√2·m1′, ω0/2 + Δ1]] with m1′ = √N·m1,
/// energies measured from 2Ē.
pub fn build_effective_two_level(s: &Scenario) -> Result<DressedBasis> {
    s.validate()?;
    let m1p = s.n_atoms.sqrt() * s.m1;
    DressedBasis::diagonalize(s.omega0, 0.5 * s.omega0 + s.delta1, SQRT_2 * m1p)
}

/// Which chains are dressed and summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DressedScope {
    /// Every chain in the path window.
    #[default]
    Window,
    /// The dominant m_R and l_R chains.
    BracketingPair,
    /// Only the m_R chain.
    UpperOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DressedOptions {
    pub paths: PathOptions,
    pub scope: DressedScope,
}

fn in_scope(scope: DressedScope, p: &PathAmplitude) -> bool {
    let keep = |n: i64| match scope {
        DressedScope::Window => true,
        DressedScope::BracketingPair => n == 0 || n == -1,
        DressedScope::UpperOnly => n == 0,
    };
    match p.chain[1] {
        ChainState::ModePair(ModeOffset(a), ModeOffset(b)) => keep(a) && keep(b),
        _ => false,
    }
}

/// Dressed atomic-step factor for one chain.
pub fn chain_dressing(s: &Scenario, p: &PathAmplitude) -> Result<DressedBasis> {
    let g = s.n_atoms.sqrt() * p.couplings[2];
    DressedBasis::diagonalize(0.0, -p.denominators[2], g)
}

/// R2 with the M1 step of every chain taken over its dressed pair (s⁻¹).
pub fn two_photon_rate_dressed(s: &Scenario, opts: &DressedOptions) -> Result<f64> {
    let sqrt_n = s.n_atoms.sqrt();
    let (total, _, _) = summed_elements(s, &opts.paths, |p| {
        if !in_scope(opts.scope, p) {
            return 0.0;
        }
        let g = sqrt_n * p.couplings[2];
        let d3 = p.denominators[2];
        let step = g.copysign(d3) / (d3 * d3 + 4.0 * g * g).sqrt();
        p.photonic_part() * step * p.couplings[3]
    })?;
    let fin = 2.0 * s.delta - s.delta2;
    Ok(2.0 * s.gamma2 / (fin * fin + s.gamma2 * s.gamma2) * total * total)
}

/// R2 against density. Columns: rho_cm3, N_A, R2_dressed, R2_full, slope
/// (local d ln R2_dressed / d ln ρ).
pub fn saturation_curve(
    s: &Scenario,
    rho_cm3: &[f64],
    mode_volume_m3: f64,
    opts: &DressedOptions,
    parallel: bool,
) -> Result<SweepResult> {
    if rho_cm3.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidInput(
            "densities must be positive and finite".into(),
        ));
    }
    if rho_cm3.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "densities must be strictly increasing".into(),
        ));
    }
    let rows = map_ordered(rho_cm3, parallel, |&rho| {
        let n = atoms_in_mode_volume(per_cm3_to_per_m3(rho), mode_volume_m3)?;
        let t = s.with_n_atoms(n);
        let dressed = two_photon_rate_dressed(&t, opts)?;
        let full = two_photon_rate_full(&t, &opts.paths)?.rate;
        Ok(vec![rho, n, dressed, full])
    })?;
    let dressed: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let slopes = log_log_slope(rho_cm3, &dressed);
    let mut out = SweepResult::new(&["rho_cm3", "N_A", "R2_dressed", "R2_full", "slope"]);
    out.rows = rows
        .into_iter()
        .zip(slopes)
        .map(|(mut r, k)| {
            r.push(k);
            r
        })
        .collect();
    out.push_meta("window", opts.paths.window);
    out.push_meta("path_rule", format!("{:?}", opts.paths.rule));
    out.push_meta("atomic_detuning", format!("{:?}", opts.paths.atomic));
    out.push_meta("dressed_scope", format!("{:?}", opts.scope));
    out.push_meta(
        "dressed_construction",
        "M1 step g/D3 replaced by sin(2 theta)/2 per chain, tan(2 theta) = 2g/D3, no fitted factor",
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{rubidium, rubidium_default_scenario};
    use crate::sweep::logspace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> Scenario {
        Scenario {
            omega0: 1.0,
            delta: 0.0,
            ebar: 10.5,
            delta1: 10.0,
            delta2: 0.0,
            gamma1: 0.1,
            gamma2: 0.1,
            m1: 1.0,
            m2: 1.0,
            mw: 1.0,
            n_atoms: 4.0,
        }
    }

    fn residual(a: f64, b: f64, c: f64, d: &DressedBasis) -> f64 {
        let norm = (a * a + b * b + 2.0 * c * c).sqrt();
        (0..2)
            .map(|i| {
                let v = d.eigenvector(i);
                let l = d.eigenvalues()[i];
                let r0 = a * v[0] + c * v[1] - l * v[0];
                let r1 = c * v[0] + b * v[1] - l * v[1];
                r0.hypot(r1) / norm
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn decoupled_block() {
        let d = build_effective_two_level(&unit().with_n_atoms(0.0)).unwrap();
        assert_eq!(d.mixing_angle, 0.0);
        let mut ev = d.eigenvalues();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev, [1.0, 10.5]);
    }

    #[test]
    fn degenerate_block() {
        let mut s = unit();
        s.delta1 = 0.5;
        let d = build_effective_two_level(&s).unwrap();
        let c = SQRT_2 * 2.0;
        assert_relative_eq!(d.lambda_plus, 1.0 + c, max_relative = 1e-14);
        assert_relative_eq!(d.lambda_minus, 1.0 - c, max_relative = 1e-14);
        assert_relative_eq!(d.mixing_angle, FRAC_PI_4, max_relative = 1e-15);
    }

    #[test]
    fn hand_quadratic_example() {
        // [[1, 2√2], [2√2, 10.5]]: trace 11.5, det 10.5 − 8 = 2.5,
        // discriminant 9.5² + 32 = 122.25.
        let d = build_effective_two_level(&unit()).unwrap();
        assert_relative_eq!(d.m1_prime, 2.0, max_relative = 1e-15);
        let root = 122.25f64.sqrt();
        assert_relative_eq!(d.lambda_plus, (11.5 + root) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(d.lambda_minus, (11.5 - root) / 2.0, max_relative = 1e-13);
        assert_relative_eq!(d.lambda_plus, 11.278_336_096_874, max_relative = 1e-12);
        assert_relative_eq!(d.lambda_minus, 0.221_663_903_126, max_relative = 1e-11);
        assert!(residual(1.0, 10.5, 2.0 * SQRT_2, &d) < 1e-14);
    }

    #[test]
    fn small_root_keeps_precision() {
        // det = 1e-12 exactly representable path: a·b − c² with tiny product.
        let d = DressedBasis::diagonalize(1e8, 1e-8, 1e-4 * (1.0 - 1e-6f64).sqrt()).unwrap();
        let det: f64 = 1e8 * 1e-8 - 1e-8 * (1.0 - 1e-6);
        assert_relative_eq!(d.lambda_plus * d.lambda_minus, det, max_relative = 1e-12);
        assert!(d.lambda_minus > 0.0);
    }

    #[test]
    fn upper_state_is_pair_like_below_crossing() {
        // Pair state above the atomic one: the upper eigenvector leans pair.
        let d = DressedBasis::diagonalize(2.0, 0.0, 0.1).unwrap();
        assert!(d.c2m_prime[0].abs() > 0.99);
        let d = DressedBasis::diagonalize(0.0, 2.0, 0.1).unwrap();
        assert!(d.c1a[0].abs() > 0.99);
    }

    #[test]
    fn low_density_matches_perturbative() {
        let base = rubidium_default_scenario().with_delta_frac(0.0);
        let opts = DressedOptions::default();
        let mut last_gap = f64::INFINITY;
        for n in [1e2, 1e1, 1e0, 1e-1, 1e-2] {
            let s = base.with_n_atoms(n);
            let ratio = two_photon_rate_dressed(&s, &opts).unwrap()
                / two_photon_rate_full(&s, &opts.paths).unwrap().rate;
            let gap = (1.0 - ratio).abs();
            assert!(gap < last_gap, "n={n} gap={gap}");
            last_gap = gap;
        }
        assert!(last_gap < 1e-5);
    }

    #[test]
    fn nominal_dressing_is_a_lorentzian_factor() {
        // Every chain shares D3 = Δ1, so the ratio is 1/(1 + 4g²/Δ1²).
        let s = rubidium_default_scenario().with_delta_frac(0.1);
        let opts = DressedOptions::default();
        let g2 = s.n_atoms * 2.0 * s.m1 * s.m1;
        let expected = 1.0 / (1.0 + 4.0 * g2 / (s.delta1 * s.delta1));
        let ratio = two_photon_rate_dressed(&s, &opts).unwrap()
            / two_photon_rate_full(&s, &opts.paths).unwrap().rate;
        assert_relative_eq!(ratio, expected, max_relative = 1e-12);
    }

    #[test]
    fn no_atomic_coupling_no_rate() {
        let mut s = rubidium_default_scenario().with_delta_frac(0.1);
        s.m1 = 0.0;
        assert_eq!(
            two_photon_rate_dressed(&s, &DressedOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn chain_blocks_give_the_rate_step() {
        use crate::perturbative::{enumerate_paths, AtomicDetuning};
        let s = rubidium_default_scenario()
            .with_delta_frac(0.07)
            .with_n_atoms(3e5);
        let paths = PathOptions {
            window: 4,
            atomic: AtomicDetuning::Exact,
            ..Default::default()
        };
        for p in enumerate_paths(&s, &paths).unwrap() {
            let g = s.n_atoms.sqrt() * p.couplings[2];
            let d3 = p.denominators[2];
            let d = chain_dressing(&s, &p).unwrap();
            let step = g.copysign(d3) / (d3 * d3 + 4.0 * g * g).sqrt();
            assert_relative_eq!(d.half_sin_two_theta(), step, max_relative = 1e-12);
        }
    }

    #[test]
    fn plateau_at_high_density() {
        let base = rubidium_default_scenario();
        let opts = DressedOptions::default();
        let at = |rho: f64| {
            let n = atoms_in_mode_volume(per_cm3_to_per_m3(rho), rubidium::MODE_VOLUME_M3).unwrap();
            two_photon_rate_dressed(&base.with_n_atoms(n), &opts).unwrap()
        };
        let (a, b) = (at(1e18), at(1e19));
        assert!((b - a).abs() / b < 0.05);
    }

    #[test]
    fn curve_rows_follow_input_and_rise() {
        let rho = logspace(1e11, 1e19, 17);
        let s = rubidium_default_scenario();
        let opts = DressedOptions::default();
        let a = saturation_curve(&s, &rho, rubidium::MODE_VOLUME_M3, &opts, true).unwrap();
        let b = saturation_curve(&s, &rho, rubidium::MODE_VOLUME_M3, &opts, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.column("rho_cm3").unwrap(), rho);
        let r2 = a.column("R2_dressed").unwrap();
        assert!(r2.windows(2).all(|w| w[1] >= w[0]));
        let slope = a.column("slope").unwrap();
        assert!(slope.last().unwrap().abs() < 0.05);
        assert!(saturation_curve(&s, &[1e15, 1e14], 1e-16, &opts, false).is_err());
    }

    #[test]
    fn scopes_nest() {
        let s = rubidium_default_scenario().with_delta_frac(0.05);
        let rate = |scope| {
            two_photon_rate_dressed(
                &s,
                &DressedOptions {
                    scope,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (w, b, u) = (
            rate(DressedScope::Window),
            rate(DressedScope::BracketingPair),
            rate(DressedScope::UpperOnly),
        );
        assert!(w > b && b > u && u > 0.0);
    }

    proptest! {
        #[test]
        fn decomposition_is_orthonormal_and_exact(
            a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3,
        ) {
            let d = DressedBasis::diagonalize(a, b, c).unwrap();
            prop_assert!(d.lambda_plus >= d.lambda_minus);
            let (v0, v1) = (d.eigenvector(0), d.eigenvector(1));
            prop_assert!((v0[0] * v0[0] + v0[1] * v0[1] - 1.0).abs() < 1e-12);
            prop_assert!((v1[0] * v1[0] + v1[1] * v1[1] - 1.0).abs() < 1e-12);
            prop_assert!((v0[0] * v1[0] + v0[1] * v1[1]).abs() < 1e-12);
            prop_assert!(residual(a, b, c, &d) <= 1e-12);
        }

        #[test]
        fn scaling_the_block(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3, k in 1e-3f64..1e3) {
            let d = DressedBasis::diagonalize(a, b, c).unwrap();
            let e = DressedBasis::diagonalize(k * a, k * b, k * c).unwrap();
            let tol = 1e-12 * (a.abs() + b.abs() + c.abs()) * k;
            prop_assert!((e.lambda_plus - k * d.lambda_plus).abs() <= tol);
            prop_assert!((e.lambda_minus - k * d.lambda_minus).abs() <= tol);
            prop_assert!((e.mixing_angle - d.mixing_angle).abs() <= 1e-12);
        }

        #[test]
        fn dressed_rate_is_continuous_in_density(log_n in -2.0f64..8.0, x in -0.3f64..0.3) {
            let s = rubidium_default_scenario().with_delta_frac(x).with_n_atoms(10f64.powf(log_n));
            prop_assume!((2.0 * s.delta).abs() > 1e-6 * s.omega0);
            let opts = DressedOptions { paths: PathOptions::default().with_window(8), ..Default::default() };
            let r = two_photon_rate_dressed(&s, &opts).unwrap();
            let q = two_photon_rate_dressed(&s.with_n_atoms(s.n_atoms * (1.0 + 1e-4)), &opts).unwrap();
            prop_assert!(((q - r) / r).abs() < 1e-3);
        }
    }
}
