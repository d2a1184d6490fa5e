//! Closed-form perturbative rates.
//!
//! Single-photon scattering goes through the two virtual resonator states
//! bracketing the probe; their amplitudes have opposite signs and cancel at
//! the midpoint. Two-photon absorption is fourth order, through chains
//!
//! ```text
//! |2_w⟩ → |1_w, l⟩ → |l, l'⟩ → |l'', 1_A⟩ → |2_A⟩
//! ```
//!
//! summed over a symmetric window of resonator modes and closed with a
//! golden-rule factor carrying the width γ2 of the final atomic level.
//!
//! Sign convention: the resonator denominators are E_initial − E_state. The
//! atomic intermediate |l, 1_A⟩ uses the nominal detuning Δ1 (the
//! `δ ≪ Δ1` form of the closed expressions) unless [`AtomicDetuning::Exact`]
//! is selected. Level widths never enter intermediate denominators.

use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::params::Scenario;

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;
/// Pole guard as a fraction of ω0.
pub const DEFAULT_POLE_GUARD: f64 = 1e-9;

fn check_inside_poles(s: &Scenario) -> Result<()> {
    if !(s.delta.abs() < 0.5 * s.omega0) {
        return Err(Error::OutOfValidity(format!(
            "|delta| = {:.6e} rad/s reaches the resonator poles at ±omega0/2 = ±{:.6e} rad/s",
            s.delta.abs(),
            0.5 * s.omega0
        )));
    }
    Ok(())
}

/// M_eff/ħ, the second-order coupling of the waveguide photon to |1_A⟩
/// through the two bracketing modes.
///
/// Evaluated as m1·mw·2δ/(δ² − ω0²/4), so δ = 0 gives an exact zero rather
/// than the difference of two large terms.
pub fn effective_matrix_element(s: &Scenario) -> Result<f64> {
    s.validate()?;
    check_inside_poles(s)?;
    let d = s.delta;
    let half = 0.5 * s.omega0;
    Ok(s.m1 * s.mw * 2.0 * d / (d * d - half * half))
}

/// R1, the single-photon scattering rate (s⁻¹).
pub fn single_photon_rate(s: &Scenario) -> Result<f64> {
    let m_eff = effective_matrix_element(s)?;
    let lorentz = s.gamma1 / (s.delta1 * s.delta1 + s.gamma1 * s.gamma1);
    Ok(2.0 * s.n_atoms * lorentz * m_eff * m_eff)
}

/// R1 through an explicit list of modes (offsets as in [`ModeOffset`]),
/// with the atomic detuning δ − Δ1 kept exact. Reduces to
/// [`single_photon_rate`] for the bracketing pair when |δ| ≪ |Δ1|.
pub fn single_photon_rate_modes(s: &Scenario, offsets: &[i64]) -> Result<f64> {
    s.validate()?;
    let mut m_eff = 0.0;
    for &n in offsets {
        let d = s.delta - ModeOffset(n).half_integer() * s.omega0;
        pole_guard(s, DEFAULT_POLE_GUARD, &format!("|{}⟩", ModeOffset(n)), d)?;
        m_eff += s.mw * s.m1 / d;
    }
    let det = s.delta - s.delta1;
    Ok(2.0 * s.n_atoms * s.gamma1 / (det * det + s.gamma1 * s.gamma1) * m_eff * m_eff)
}

fn pole_guard(s: &Scenario, guard: f64, state: &str, value: f64) -> Result<()> {
    let limit = guard * s.omega0;
    if !(value.abs() >= limit) {
        return Err(Error::Pole {
            state: state.to_string(),
            denominator: value,
            guard: limit,
        });
    }
    Ok(())
}

/// The two dominant fourth-order amplitudes (A2 via |2 m_R⟩, A2′ via
/// |2 l_R⟩), dimensionless.
pub fn two_photon_amplitudes(s: &Scenario) -> Result<(f64, f64)> {
    s.validate()?;
    check_inside_poles(s)?;
    let d = s.delta;
    let w = s.omega0;
    let g = DEFAULT_POLE_GUARD;
    let fin = 2.0 * d - s.delta2;
    pole_guard(s, g, "|2_A⟩ (2 delta = delta2)", fin)?;
    pole_guard(s, g, "|m_R, 1_A⟩ (delta1 = 0)", s.delta1)?;
    for (label, v) in [
        ("|2 m_R⟩", 2.0 * d - w),
        ("|1_w, m_R⟩", d - 0.5 * w),
        ("|2 l_R⟩", 2.0 * d + w),
        ("|1_w, l_R⟩", d + 0.5 * w),
    ] {
        pole_guard(s, g, label, v)?;
    }
    let common = (s.m2 / fin) * (SQRT_2 * s.m1 / s.delta1);
    let a2 = common * (SQRT_2 * s.mw / (2.0 * d - w)) * (s.mw / (d - 0.5 * w));
    let a2p = common * (SQRT_2 * s.mw / (2.0 * d + w)) * (s.mw / (d + 0.5 * w));
    Ok((a2, a2p))
}

/// R2 from the two dominant chains only (s⁻¹).
pub fn two_photon_rate_two_path(s: &Scenario) -> Result<f64> {
    s.validate()?;
    if s.delta1 == 0.0 {
        return Err(Error::OutOfValidity(
            "delta1 = 0: the two-path two-photon rate divides by delta1^2".into(),
        ));
    }
    check_inside_poles(s)?;
    let d = s.delta;
    let w = s.omega0;
    let bracket = 1.0 / ((2.0 * d - w) * (d - 0.5 * w)) + 1.0 / ((2.0 * d + w) * (d + 0.5 * w));
    let fin = 2.0 * d - s.delta2;
    let num = 8.0 * s.n_atoms * (s.m1 * s.m2).powi(2) * s.mw.powi(4) * s.gamma2;
    let den = s.delta1 * s.delta1 * (fin * fin + s.gamma2 * s.gamma2);
    Ok(num / den * bracket * bracket)
}

/// Resonator mode, counted from the midpoint: offset `n` is the mode at
/// (n + ½)·ω0 above Ē, so 0 is m_R and −1 is l_R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeOffset(pub i64);

impl ModeOffset {
    /// Energy above Ē in units of ω0.
    pub fn half_integer(self) -> f64 {
        self.0 as f64 + 0.5
    }
}

impl fmt::Display for ModeOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "m_R"),
            -1 => write!(f, "l_R"),
            n if n > 0 => write!(f, "m_R+{n}"),
            n => write!(f, "l_R-{}", -n - 1),
        }
    }
}

/// Intermediate state of a fourth-order chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    /// |1_w, l⟩: one photon left in the waveguide.
    WaveguideMode(ModeOffset),
    /// |1_w, l_i⟩ and |1_w, l_j⟩ with both photon orderings summed; the
    /// pair denominator cancels against them and the chain carries the two
    /// single-photon denominators instead.
    BothOrderings(ModeOffset, ModeOffset),
    /// |l_j, l_k⟩, doubly occupied when equal.
    ModePair(ModeOffset, ModeOffset),
    /// |l, 1_A⟩.
    ModeAtom(ModeOffset),
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainState::WaveguideMode(l) => write!(f, "|1_w, {l}⟩"),
            ChainState::BothOrderings(a, b) => write!(f, "|1_w, {a}⟩+|1_w, {b}⟩"),
            ChainState::ModePair(a, b) if a == b => write!(f, "|2 {a}⟩"),
            ChainState::ModePair(a, b) => write!(f, "|{a}, {b}⟩"),
            ChainState::ModeAtom(l) => write!(f, "|{l}, 1_A⟩"),
        }
    }
}

/// Which fourth-order chains count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathRule {
    /// Both photons enter the same mode l: |1_w, l⟩ → |2 l⟩ → |l, 1_A⟩.
    /// This is the family the two dominant chains belong to.
    #[default]
    DoublyOccupied,
    /// Every pair of modes with exact Fock weights. Summed over a symmetric
    /// window the amplitude factorizes into (Σ 1/D_l)·(...) and vanishes at
    /// δ = 0 together with the single-photon amplitude.
    AllPairs,
}

/// Denominator used for the atomic intermediate |l, 1_A⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AtomicDetuning {
    /// Δ1, as in the closed-form amplitudes.
    #[default]
    Nominal,
    /// 2δ − (l+½)ω0 − Δ1 from the diagonal of the Hamiltonian.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Half-width L: modes with offsets −L..L−1, i.e. 2L modes.
    pub window: usize,
    pub rule: PathRule,
    pub atomic: AtomicDetuning,
    /// Fraction of ω0 below which a denominator counts as resonant.
    pub pole_guard: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            rule: PathRule::default(),
            atomic: AtomicDetuning::default(),
            pole_guard: DEFAULT_POLE_GUARD,
        }
    }
}

impl PathOptions {
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }
}

/// One fourth-order chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAmplitude {
    /// The three intermediate states.
    pub chain: [ChainState; 3],
    /// Step couplings including Bose factors, rad/s: two waveguide steps,
    /// the M1 step, the M2 step.
    pub couplings: [f64; 4],
    /// One denominator per intermediate state, rad/s.
    pub denominators: [f64; 3],
    /// 2δ − Δ2, the detuning of the final |2_A⟩ state.
    pub final_detuning: f64,
}

impl PathAmplitude {
    pub fn numerator(&self) -> f64 {
        self.couplings.iter().product()
    }

    /// Effective coupling of |2_w⟩ to |2_A⟩ carried by this chain, rad/s.
    pub fn transition_element(&self) -> f64 {
        self.numerator() / self.denominators.iter().product::<f64>()
    }

    /// Dimensionless amplitude, transition element over the final detuning.
    pub fn value(&self) -> Result<f64> {
        if self.final_detuning == 0.0 {
            return Err(Error::Pole {
                state: "|2_A⟩".into(),
                denominator: 0.0,
                guard: 0.0,
            });
        }
        Ok(self.transition_element() / self.final_detuning)
    }

    /// Transition element up to the M1 step: photon part over the first two
    /// denominators.
    pub fn photonic_part(&self) -> f64 {
        self.couplings[0] * self.couplings[1] / (self.denominators[0] * self.denominators[1])
    }

    pub fn describe(&self) -> String {
        format!(
            "|2_w⟩ → {} → {} → {} → |2_A⟩",
            self.chain[0], self.chain[1], self.chain[2]
        )
    }
}

struct Denominators {
    delta: f64,
    omega0: f64,
    delta1: f64,
    atomic: AtomicDetuning,
}

impl Denominators {
    fn single(&self, l: ModeOffset) -> f64 {
        self.delta - l.half_integer() * self.omega0
    }

    fn pair(&self, a: ModeOffset, b: ModeOffset) -> f64 {
        2.0 * self.delta - (a.half_integer() + b.half_integer()) * self.omega0
    }

    fn atomic(&self, remaining: ModeOffset) -> f64 {
        match self.atomic {
            AtomicDetuning::Nominal => self.delta1,
            AtomicDetuning::Exact => {
                2.0 * self.delta - remaining.half_integer() * self.omega0 - self.delta1
            }
        }
    }
}

/// Chains whose outermost mode lies in shell `k` (k ≥ 1): the shell holds
/// offsets k−1 and −k.
fn shell_paths(s: &Scenario, opts: &PathOptions, k: usize) -> Vec<PathAmplitude> {
    let den = Denominators {
        delta: s.delta,
        omega0: s.omega0,
        delta1: s.delta1,
        atomic: opts.atomic,
    };
    let fin = 2.0 * s.delta - s.delta2;
    let k = k as i64;
    let shell = [ModeOffset(-k), ModeOffset(k - 1)];
    let mut out = Vec::new();
    for &l in &shell {
        out.push(PathAmplitude {
            chain: [
                ChainState::WaveguideMode(l),
                ChainState::ModePair(l, l),
                ChainState::ModeAtom(l),
            ],
            couplings: [s.mw, SQRT_2 * s.mw, SQRT_2 * s.m1, s.m2],
            denominators: [den.single(l), den.pair(l, l), den.atomic(l)],
            final_detuning: fin,
        });
    }
    if opts.rule == PathRule::AllPairs {
        // Partners: every mode inside shell k that is not the same mode.
        let mut pairs = Vec::new();
        pairs.push((shell[0], shell[1]));
        for &outer in &shell {
            for n in (-k + 1)..(k - 1) {
                pairs.push((outer, ModeOffset(n)));
            }
        }
        for (a, b) in pairs {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            for (absorbed, remaining) in [(a, b), (b, a)] {
                let _ = absorbed;
                out.push(PathAmplitude {
                    chain: [
                        ChainState::BothOrderings(a, b),
                        ChainState::ModePair(a, b),
                        ChainState::ModeAtom(remaining),
                    ],
                    couplings: [s.mw, s.mw, s.m1, s.m2],
                    denominators: [den.single(a), den.single(b), den.atomic(remaining)],
                    final_detuning: fin,
                });
            }
        }
    }
    out
}

fn check_path(s: &Scenario, opts: &PathOptions, p: &PathAmplitude) -> Result<()> {
    for (state, d) in p.chain.iter().zip(p.denominators.iter()) {
        pole_guard(
            s,
            opts.pole_guard,
            &format!("{state} in {}", p.describe()),
            *d,
        )?;
    }
    Ok(())
}

/// Number of chains in a window of half-width `window`.
pub fn path_count(rule: PathRule, window: usize) -> usize {
    match rule {
        PathRule::DoublyOccupied => 2 * window,
        PathRule::AllPairs => 4 * window * window,
    }
}

/// Every chain in the window, ordered shell by shell from the midpoint out.
pub fn enumerate_paths(s: &Scenario, opts: &PathOptions) -> Result<Vec<PathAmplitude>> {
    s.validate()?;
    if opts.window == 0 {
        return Err(Error::InvalidInput("path window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(path_count(opts.rule, opts.window));
    for k in 1..=opts.window {
        for p in shell_paths(s, opts, k) {
            check_path(s, opts, &p)?;
            out.push(p);
        }
    }
    Ok(out)
}

/// Golden-rule closure: 2·N·γ2/((2δ−Δ2)² + γ2²)·M².
pub fn golden_rule_two_photon(s: &Scenario, transition_element: f64) -> f64 {
    let fin = 2.0 * s.delta - s.delta2;
    2.0 * s.n_atoms * s.gamma2 / (fin * fin + s.gamma2 * s.gamma2) * transition_element.powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullRate {
    pub rate: f64,
    pub transition_element: f64,
    pub window: usize,
    pub n_paths: usize,
    /// (R(L) − R(L−1))/R(L); `None` for L = 1 or a zero rate.
    pub relative_change: Option<f64>,
}

/// Σ over shells 1..=window of the transition elements, plus the partial sum
/// through shell window−1.
pub(crate) fn summed_elements<F>(
    s: &Scenario,
    opts: &PathOptions,
    mut element: F,
) -> Result<(f64, f64, usize)>
where
    F: FnMut(&PathAmplitude) -> f64,
{
    s.validate()?;
    check_inside_poles(s)?;
    if opts.window == 0 {
        return Err(Error::InvalidInput("path window must be at least 1".into()));
    }
    let mut total = 0.0;
    let mut previous = 0.0;
    let mut count = 0;
    for k in 1..=opts.window {
        previous = total;
        let mut shell_sum = 0.0;
        for p in shell_paths(s, opts, k) {
            check_path(s, opts, &p)?;
            shell_sum += element(&p);
            count += 1;
        }
        total += shell_sum;
    }
    Ok((total, previous, count))
}

/// R2 from the coherent sum over all chains in the window (s⁻¹).
pub fn two_photon_rate_full(s: &Scenario, opts: &PathOptions) -> Result<FullRate> {
    let (total, previous, n_paths) = summed_elements(s, opts, PathAmplitude::transition_element)?;
    let rate = golden_rule_two_photon(s, total);
    let relative_change = if opts.window > 1 && rate != 0.0 {
        Some((rate - golden_rule_two_photon(s, previous)) / rate)
    } else {
        None
    };
    Ok(FullRate {
        rate,
        transition_element: total,
        window: opts.window,
        n_paths,
        relative_change,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStep {
    pub window: usize,
    pub rate: f64,
    /// Relative change from the previous (half-size) window.
    pub relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub steps: Vec<ConvergenceStep>,
    pub converged: bool,
    pub tolerance: f64,
}

impl ConvergenceStudy {
    pub fn final_rate(&self) -> f64 {
        self.steps.last().map(|s| s.rate).unwrap_or(f64::NAN)
    }

    pub fn final_window(&self) -> usize {
        self.steps.last().map(|s| s.window).unwrap_or(0)
    }
}

/// Doubles the window from `opts.window` until successive rates agree to
/// `tolerance` (relative) or `max_window` is passed.
pub fn converge_full_rate(
    s: &Scenario,
    opts: &PathOptions,
    tolerance: f64,
    max_window: usize,
) -> Result<ConvergenceStudy> {
    let mut steps: Vec<ConvergenceStep> = Vec::new();
    let mut window = opts.window.max(1);
    loop {
        let r = two_photon_rate_full(s, &PathOptions { window, ..*opts })?.rate;
        let relative_change = steps.last().map(|p| {
            if r == 0.0 {
                (r - p.rate).abs()
            } else {
                ((r - p.rate) / r).abs()
            }
        });
        steps.push(ConvergenceStep {
            window,
            rate: r,
            relative_change,
        });
        if let Some(c) = relative_change {
            if c < tolerance {
                return Ok(ConvergenceStudy {
                    steps,
                    converged: true,
                    tolerance,
                });
            }
        }
        if window * 2 > max_window {
            return Ok(ConvergenceStudy {
                steps,
                converged: false,
                tolerance,
            });
        }
        window *= 2;
    }
}

/// All rates at one scenario point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub delta: f64,
    pub r1: f64,
    pub r2_two_path: f64,
    pub r2_full: f64,
    pub n_paths: usize,
}

pub fn rate_point(s: &Scenario, opts: &PathOptions) -> Result<RatePoint> {
    let full = two_photon_rate_full(s, opts)?;
    Ok(RatePoint {
        delta: s.delta,
        r1: single_photon_rate(s)?,
        r2_two_path: two_photon_rate_two_path(s)?,
        r2_full: full.rate,
        n_paths: full.n_paths,
    })
}
