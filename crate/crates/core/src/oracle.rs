//! Brute-force check of the perturbative rates: the waveguide mode, a set
//! of resonator modes and a few three-level atoms in a truncated Fock
//! space, evolved under the full Hamiltonian with level widths as an
//! anti-Hermitian diagonal.
//!
//! Energies are stored in a frame rotating at Ē per excitation, so the
//! waveguide photon sits at δ, mode l at (l − l_R − ½)·ω0, |1_A⟩ at Δ1 and
//! |2_A⟩ at Δ2.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{rubidium_default_scenario, Scenario};
use crate::perturbative::{single_photon_rate, single_photon_rate_modes};
use crate::sweep::{format_value, SweepResult};

pub const DEFAULT_DIMENSION_LIMIT: usize = 2_000_000;
/// Largest basis the dense exponential propagator accepts.
pub const DENSE_LIMIT: usize = 2_000;
pub const DEFAULT_STEP_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: u32 = 14;

/// Resonator modes included in the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    /// Absolute mode numbers l, strictly increasing.
    pub mode_indices: Vec<i64>,
    /// l_R, the mode just below the probe.
    pub lower_index: i64,
    /// ω_γ, rad/s.
    pub waveguide_freq: f64,
}

impl ModeSet {
    pub fn new(mode_indices: Vec<i64>, lower_index: i64, waveguide_freq: f64) -> Result<Self> {
        if mode_indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "mode indices must be strictly increasing".into(),
            ));
        }
        if !mode_indices.contains(&lower_index) || !mode_indices.contains(&(lower_index + 1)) {
            return Err(Error::InvalidInput(format!(
                "mode set must contain the bracketing pair {lower_index}, {}",
                lower_index + 1
            )));
        }
        Ok(Self {
            mode_indices,
            lower_index,
            waveguide_freq,
        })
    }

    /// Any strictly increasing set, bracketing pair not required. For
    /// few-mode checks such as a single resonant mode.
    pub fn isolated(mode_indices: Vec<i64>, lower_index: i64, waveguide_freq: f64) -> Result<Self> {
        if mode_indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "mode indices must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            mode_indices,
            lower_index,
            waveguide_freq,
        })
    }

    /// Modes by offset from m_R, as in the perturbative chains: 0 is m_R,
    /// −1 is l_R.
    pub fn from_offsets(s: &Scenario, offsets: impl IntoIterator<Item = i64>) -> Result<Self> {
        let l_r = s.lower_mode_index();
        let mut idx: Vec<i64> = offsets.into_iter().map(|n| l_r + 1 + n).collect();
        idx.sort_unstable();
        Self::new(idx, l_r, s.ebar + s.delta)
    }

    /// `below` modes from l_R downward and `above` modes from m_R upward.
    pub fn around(s: &Scenario, below: usize, above: usize) -> Result<Self> {
        Self::from_offsets(s, -(below as i64)..(above as i64))
    }

    /// Offsets from m_R.
    pub fn offsets(&self) -> Vec<i64> {
        self.mode_indices
            .iter()
            .map(|l| l - self.lower_index - 1)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.mode_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode_indices.is_empty()
    }
}

/// Occupation-number state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub n_w: u8,
    pub n_modes: Vec<u8>,
    /// 0, 1 or 2 per atom.
    pub atom_levels: Vec<u8>,
}

impl BasisState {
    pub fn excitations(&self) -> u32 {
        self.n_w as u32
            + self.n_modes.iter().map(|&n| n as u32).sum::<u32>()
            + self.atom_levels.iter().map(|&a| a as u32).sum::<u32>()
    }

    pub fn label(&self, modes: &ModeSet) -> String {
        let mut parts = Vec::new();
        if self.n_w > 0 {
            parts.push(format!("{}w", self.n_w));
        }
        for (n, l) in self.n_modes.iter().zip(&modes.mode_indices) {
            if *n > 0 {
                parts.push(format!("{n}l{l}"));
            }
        }
        for (i, a) in self.atom_levels.iter().enumerate() {
            if *a > 0 {
                parts.push(format!("{a}A{i}"));
            }
        }
        if parts.is_empty() {
            "|0⟩".into()
        } else {
            format!("|{}⟩", parts.join(" "))
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.n_w)?;
        for n in &self.n_modes {
            write!(f, " {n}")?;
        }
        write!(f, " |")?;
        for a in &self.atom_levels {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Basis {
    pub modes: ModeSet,
    pub n_atoms: usize,
    pub total_excitations: u32,
    pub per_mode_cap: u8,
    pub states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl Basis {
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// All excitations in the waveguide, atoms in the ground state.
    pub fn waveguide_state(&self) -> Option<usize> {
        self.index_of(&BasisState {
            n_w: self.total_excitations as u8,
            n_modes: vec![0; self.modes.len()],
            atom_levels: vec![0; self.n_atoms],
        })
    }

    /// Normalized initial vector on the waveguide state.
    pub fn initial_vector(&self) -> Result<Vec<Complex64>> {
        let i = self.waveguide_state().ok_or_else(|| {
            Error::InvalidInput("waveguide state is outside the truncation".into())
        })?;
        let mut v = vec![Complex64::new(0.0, 0.0); self.dimension()];
        v[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Occupation caps for each slot: waveguide, modes, atoms.
fn slot_caps(n_modes: usize, n_atoms: usize, total: u32, cap: u8) -> Vec<u32> {
    let mut caps = vec![total];
    caps.extend(std::iter::repeat_n(cap as u32, n_modes));
    caps.extend(std::iter::repeat_n(2, n_atoms));
    caps
}

/// Number of ways to fill slots[i..] with exactly `left` quanta.
fn count_fillings(caps: &[u32], total: u32) -> u128 {
    let mut ways = vec![0u128; total as usize + 1];
    ways[0] = 1;
    for &c in caps {
        let mut next = vec![0u128; total as usize + 1];
        for (have, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for add in 0..=c.min(total - have as u32) {
                next[have + add as usize] += w;
            }
        }
        ways = next;
    }
    ways[total as usize]
}

pub fn build_basis(
    modes: &ModeSet,
    n_atoms: usize,
    total_excitations: u32,
    per_mode_cap: u8,
) -> Result<Basis> {
    build_basis_with_limit(
        modes,
        n_atoms,
        total_excitations,
        per_mode_cap,
        DEFAULT_DIMENSION_LIMIT,
    )
}

pub fn build_basis_with_limit(
    modes: &ModeSet,
    n_atoms: usize,
    total_excitations: u32,
    per_mode_cap: u8,
    limit: usize,
) -> Result<Basis> {
    if !(1..=2).contains(&total_excitations) {
        return Err(Error::InvalidInput(format!(
            "total excitations must be 1 or 2, got {total_excitations}"
        )));
    }
    let caps = slot_caps(modes.len(), n_atoms, total_excitations, per_mode_cap);
    let dim = count_fillings(&caps, total_excitations);
    if dim > limit as u128 {
        return Err(Error::Capacity {
            dimension: dim.min(usize::MAX as u128) as usize,
            limit,
        });
    }
    let mut states = Vec::with_capacity(dim as usize);
    let mut slots = vec![0u32; caps.len()];
    fill(&caps, 0, total_excitations, &mut slots, &mut |occ| {
        let m = modes.len();
        states.push(BasisState {
            n_w: occ[0] as u8,
            n_modes: occ[1..=m].iter().map(|&n| n as u8).collect(),
            atom_levels: occ[m + 1..].iter().map(|&n| n as u8).collect(),
        });
    });
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(Basis {
        modes: modes.clone(),
        n_atoms,
        total_excitations,
        per_mode_cap,
        states,
        index,
    })
}

/// Lexicographic enumeration of slot occupations summing to `left`.
fn fill(caps: &[u32], pos: usize, left: u32, slots: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if pos == caps.len() {
        if left == 0 {
            emit(slots);
        }
        return;
    }
    for n in 0..=caps[pos].min(left) {
        slots[pos] = n;
        fill(caps, pos + 1, left - n, slots, emit);
    }
    slots[pos] = 0;
}

/// Effective Hamiltonian H − iΓ in the rotating frame, rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub dimension: usize,
    pub diagonal: Vec<f64>,
    /// Upper-triangle couplings (i < j); the matrix is symmetric by
    /// construction.
    pub couplings: Vec<(usize, usize, f64)>,
    /// −(γ1·#|1_A⟩ + γ2·#|2_A⟩) per basis state.
    pub decay: Vec<f64>,
}

impl HamiltonianMatrix {
    /// y = (H − iΓ)·x.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.dimension {
            y[i] = x[i] * Complex64::new(self.diagonal[i], self.decay[i]);
        }
        for &(i, j, v) in &self.couplings {
            y[i] += x[j] * v;
            y[j] += x[i] * v;
        }
    }

    /// ⟨x|H|x⟩/⟨x|x⟩ for the coherent part only.
    pub fn energy(&self, x: &[Complex64]) -> f64 {
        let norm: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let mut e: f64 = x
            .iter()
            .zip(&self.diagonal)
            .map(|(c, d)| c.norm_sqr() * d)
            .sum();
        for &(i, j, v) in &self.couplings {
            e += 2.0 * v * (x[i].conj() * x[j]).re;
        }
        e / norm
    }

    pub fn coherent_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.couplings
            .iter()
            .filter(|(p, q, _)| *p == a && *q == b)
            .map(|(_, _, v)| v)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dimension;
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.diagonal[i], self.decay[i]);
        }
        for &(i, j, v) in &self.couplings {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    /// Max row sum of |entries|.
    pub fn norm_inf(&self) -> f64 {
        let mut rows: Vec<f64> = (0..self.dimension)
            .map(|i| self.diagonal[i].hypot(self.decay[i]))
            .collect();
        for &(i, j, v) in &self.couplings {
            rows[i] += v.abs();
            rows[j] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

pub fn build_hamiltonian(s: &Scenario, basis: &Basis) -> Result<HamiltonianMatrix> {
    s.validate_allowing_zero_widths()?;
    if basis.modes.lower_index != s.lower_mode_index() {
        return Err(Error::InvalidInput(format!(
            "basis built around l_R = {}, scenario has l_R = {}",
            basis.modes.lower_index,
            s.lower_mode_index()
        )));
    }
    let mode_offsets: Vec<f64> = basis
        .modes
        .mode_indices
        .iter()
        .map(|l| ((l - basis.modes.lower_index) as f64 - 0.5) * s.omega0)
        .collect();
    let n = basis.dimension();
    let mut diagonal = Vec::with_capacity(n);
    let mut decay = Vec::with_capacity(n);
    let mut couplings = Vec::new();
    for (i, st) in basis.states.iter().enumerate() {
        let mut e = st.n_w as f64 * s.delta;
        for (k, &nl) in st.n_modes.iter().enumerate() {
            e += nl as f64 * mode_offsets[k];
        }
        let mut g = 0.0;
        for &a in &st.atom_levels {
            match a {
                1 => {
                    e += s.delta1;
                    g -= s.gamma1;
                }
                2 => {
                    e += s.delta2;
                    g -= s.gamma2;
                }
                _ => {}
            }
        }
        diagonal.push(e);
        decay.push(g);

        // Raising moves out of state i; lowering partners are found from
        // the other side, so each pair is visited once.
        for k in 0..st.n_modes.len() {
            let nl = st.n_modes[k];
            // a_l† a_w
            if st.n_w > 0 {
                let mut t = st.clone();
                t.n_w -= 1;
                t.n_modes[k] += 1;
                if let Some(j) = basis.index_of(&t) {
                    let amp = s.mw * (st.n_w as f64).sqrt() * ((nl + 1) as f64).sqrt();
                    if amp != 0.0 {
                        couplings.push((i.min(j), i.max(j), amp));
                    }
                }
            }
            // σ†·a_l for each atom
            if nl > 0 {
                for (a, &lev) in st.atom_levels.iter().enumerate() {
                    let m = match lev {
                        0 => s.m1,
                        1 => s.m2,
                        _ => continue,
                    };
                    let mut t = st.clone();
                    t.n_modes[k] -= 1;
                    t.atom_levels[a] += 1;
                    if let Some(j) = basis.index_of(&t) {
                        if m != 0.0 {
                            couplings.push((i.min(j), i.max(j), m * (nl as f64).sqrt()));
                        }
                    }
                }
            }
        }
    }
    couplings.sort_by_key(|c| (c.0, c.1));
    Ok(HamiltonianMatrix {
        dimension: n,
        diagonal,
        couplings,
        decay,
    })
}

/// Sampled evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// |c_k|² per sample, per basis state.
    pub populations: Vec<Vec<f64>>,
    /// Total norm² per sample.
    pub survival: Vec<f64>,
    /// ⟨H⟩ of the coherent part per sample.
    pub energy: Vec<f64>,
    /// RK4 substeps per sample interval (0 for the exponential propagator).
    pub substeps: usize,
}

impl Trajectory {
    fn record(&mut self, t: f64, psi: &[Complex64], h: &HamiltonianMatrix) {
        let pops: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
        self.survival.push(pops.iter().sum());
        self.populations.push(pops);
        self.energy.push(h.energy(psi));
        self.times.push(t);
    }

    fn empty(substeps: usize) -> Self {
        Self {
            times: Vec::new(),
            populations: Vec::new(),
            survival: Vec::new(),
            energy: Vec::new(),
            substeps,
        }
    }

    /// CSV: time_s, survival, then one column per tracked state.
    pub fn to_csv(&self, basis: &Basis, tracked: &[usize], header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            out.push_str(&format!("# {h}\n"));
        }
        let mut cols = vec!["time_s".to_string(), "survival".to_string()];
        cols.extend(tracked.iter().map(|&i| basis.states[i].label(&basis.modes)));
        out.push_str(&cols.join(","));
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format_value(*t), format_value(self.survival[k])];
            row.extend(
                tracked
                    .iter()
                    .map(|&i| format_value(self.populations[k][i])),
            );
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn check_normalized(state0: &[Complex64], h: &HamiltonianMatrix) -> Result<()> {
    if state0.len() != h.dimension {
        return Err(Error::InvalidInput(format!(
            "state has {} components, Hamiltonian has dimension {}",
            state0.len(),
            h.dimension
        )));
    }
    let norm: f64 = state0.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "initial state has norm² {norm}"
        )));
    }
    Ok(())
}

fn rk4_step(h: &HamiltonianMatrix, psi: &mut [Complex64], dt: f64, work: &mut [Vec<Complex64>; 5]) {
    // dψ/dt = −i(H − iΓ)ψ
    let minus_i = Complex64::new(0.0, -1.0);
    let n = psi.len();
    let [k1, k2, k3, k4, tmp] = work;
    h.apply(psi, k1);
    k1.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = psi[i] + k1[i] * (0.5 * dt);
    }
    h.apply(tmp, k2);
    k2.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = psi[i] + k2[i] * (0.5 * dt);
    }
    h.apply(tmp, k3);
    k3.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        tmp[i] = psi[i] + k3[i] * dt;
    }
    h.apply(tmp, k4);
    k4.iter_mut().for_each(|v| *v *= minus_i);
    for i in 0..n {
        psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
    }
}

fn rk4_run(
    state0: &[Complex64],
    h: &HamiltonianMatrix,
    t_end: f64,
    intervals: usize,
    substeps: usize,
) -> Trajectory {
    let n = state0.len();
    let mut work: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]);
    let mut psi = state0.to_vec();
    let mut traj = Trajectory::empty(substeps);
    traj.record(0.0, &psi, h);
    let tau = t_end / intervals as f64;
    let dt = tau / substeps as f64;
    for k in 1..=intervals {
        for _ in 0..substeps {
            rk4_step(h, &mut psi, dt, &mut work);
        }
        traj.record(tau * k as f64, &psi, h);
    }
    traj
}

fn max_population_change(a: &Trajectory, b: &Trajectory) -> f64 {
    a.populations
        .iter()
        .zip(&b.populations)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Fixed-step RK4, sampled every `dt_hint` (rounded to divide `t_end`).
/// The substep count doubles until another halving moves no population by
/// more than `DEFAULT_STEP_TOLERANCE` of the initial norm.
pub fn evolve(
    state0: &[Complex64],
    h: &HamiltonianMatrix,
    t_end: f64,
    dt_hint: f64,
) -> Result<Trajectory> {
    evolve_with_tolerance(state0, h, t_end, dt_hint, DEFAULT_STEP_TOLERANCE)
}

pub fn evolve_with_tolerance(
    state0: &[Complex64],
    h: &HamiltonianMatrix,
    t_end: f64,
    dt_hint: f64,
    tolerance: f64,
) -> Result<Trajectory> {
    check_normalized(state0, h)?;
    if !(t_end > 0.0 && dt_hint > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(
            "t_end and dt_hint must be positive".into(),
        ));
    }
    let intervals = (t_end / dt_hint).ceil().max(1.0) as usize;
    let tau = t_end / intervals as f64;
    // Start where the RK4 stability region is comfortably respected.
    let mut substeps = (tau * h.norm_inf() / 0.5).ceil().max(1.0) as usize;
    let mut coarse = rk4_run(state0, h, t_end, intervals, substeps);
    let mut achieved = f64::INFINITY;
    for halvings in 1..=MAX_HALVINGS {
        substeps *= 2;
        let fine = rk4_run(state0, h, t_end, intervals, substeps);
        achieved = max_population_change(&coarse, &fine);
        if achieved < tolerance {
            return Ok(fine);
        }
        coarse = fine;
        let _ = halvings;
    }
    Err(Error::StepControl {
        achieved,
        tolerance,
        halvings: MAX_HALVINGS,
    })
}

/// Exact propagation with U = exp(−i(H − iΓ)τ), sampled at `samples + 1`
/// equally spaced times on [0, t_end]. Meant for runs far longer than the
/// fastest oscillation.
pub fn evolve_exponential(
    state0: &[Complex64],
    h: &HamiltonianMatrix,
    t_end: f64,
    samples: usize,
) -> Result<Trajectory> {
    check_normalized(state0, h)?;
    if h.dimension > DENSE_LIMIT {
        return Err(Error::Capacity {
            dimension: h.dimension,
            limit: DENSE_LIMIT,
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) || samples == 0 {
        return Err(Error::InvalidInput(
            "t_end and samples must be positive".into(),
        ));
    }
    let tau = t_end / samples as f64;
    let u = (h.to_dense() * Complex64::new(0.0, -tau)).exp();
    let mut psi = nalgebra::DVector::from_column_slice(state0);
    let mut traj = Trajectory::empty(0);
    traj.record(0.0, psi.as_slice(), h);
    for k in 1..=samples {
        psi = &u * psi;
        traj.record(tau * k as f64, psi.as_slice(), h);
    }
    Ok(traj)
}

/// Least-squares fit of ln(survival) against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// −slope, s⁻¹.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// ln S(start) − ln S(end) over the fitted window.
    pub log_decay: f64,
    pub samples: usize,
}

/// Minimum decay of ln(survival) across the window.
pub const RESOLUTION: f64 = 1e-6;

/// Fits the last `window` fraction of the trajectory.
pub fn extract_rate(traj: &Trajectory, window: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "fit window {window} not in (0, 1]"
        )));
    }
    let n = traj.times.len();
    let t_end = *traj
        .times
        .last()
        .ok_or_else(|| Error::Extraction("empty trajectory".into()))?;
    let t_start = t_end * (1.0 - window);
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.survival)
        .filter(|(t, _)| **t >= t_start)
        .map(|(t, s)| (*t, s.ln()))
        .collect();
    if pts.len() < 3 || n < 3 {
        return Err(Error::Extraction(
            "fewer than 3 samples in the fit window".into(),
        ));
    }
    let log_decay = pts[0].1 - pts[pts.len() - 1].1;
    if !(log_decay.abs() >= RESOLUTION) {
        return Err(Error::Extraction(format!(
            "rate below resolution: ln survival changes by {log_decay:.3e} over the window"
        )));
    }
    let tol = 1e-12 + 1e-3 * log_decay.abs();
    if pts.windows(2).any(|w| w[1].1 > w[0].1 + tol) {
        return Err(Error::Extraction(
            "survival is not monotone over the window; use a longer t_end or smaller couplings"
                .into(),
        ));
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / m, sy / m);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok(RateFit {
        rate: -slope,
        intercept: my - slope * mt,
        r_squared,
        log_decay,
        samples: pts.len(),
    })
}

/// Configuration where a single-mode waveguide and the golden rule agree:
/// the mode spacing, Δ1 and Ē of `base`, waveguide coupling 1e-2 of
/// `base`, M1 = 0.005·ω0, γ1 = 0.05·ω0, one atom.
pub fn weak_coupling_from(base: &Scenario, delta_frac: f64) -> Scenario {
    let w = base.omega0;
    Scenario {
        mw: base.mw * 1e-2,
        m1: 0.005 * w,
        m2: base.m2 * 1e-2,
        gamma1: 0.05 * w,
        n_atoms: 1.0,
        ..*base
    }
    .with_delta_frac(delta_frac)
}

/// [`weak_coupling_from`] the rubidium example.
pub fn weak_coupling_scenario(delta_frac: f64) -> Scenario {
    weak_coupling_from(&rubidium_default_scenario(), delta_frac)
}

/// Offsets of the eleven modes used for the weak-coupling runs: six from
/// l_R down, five from m_R up.
pub fn weak_coupling_modes(s: &Scenario) -> Result<ModeSet> {
    ModeSet::around(s, 6, 5)
}

/// One oracle run against the perturbative single-photon rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonComparison {
    pub delta_frac: f64,
    pub oracle_rate: f64,
    pub fit: RateFit,
    /// Closed form through the bracketing pair.
    pub bracketing_rate: f64,
    /// Same mode set, exact atomic detuning.
    pub mode_sum_rate: f64,
    pub dimension: usize,
}

impl SinglePhotonComparison {
    pub fn bracketing_ratio(&self) -> f64 {
        self.bracketing_rate / self.oracle_rate
    }

    pub fn mode_sum_ratio(&self) -> f64 {
        self.mode_sum_rate / self.oracle_rate
    }
}

/// Evolves |1_w⟩ long enough for ln(survival) to fall by `target_decay`
/// (estimated from the mode-sum rate) and fits the second half.
pub fn single_photon_comparison(
    s: &Scenario,
    modes: &ModeSet,
    n_atoms: usize,
    target_decay: f64,
    samples: usize,
) -> Result<SinglePhotonComparison> {
    let basis = build_basis(modes, n_atoms, 1, 1)?;
    let h = build_hamiltonian(s, &basis)?;
    let t = s.with_n_atoms(n_atoms as f64);
    let mode_sum_rate = single_photon_rate_modes(&t, &modes.offsets())?;
    if !(mode_sum_rate > 0.0) {
        return Err(Error::Extraction(
            "predicted rate is zero; nothing to resolve".into(),
        ));
    }
    let t_end = target_decay / mode_sum_rate;
    let traj = evolve_exponential(&basis.initial_vector()?, &h, t_end, samples)?;
    let fit = extract_rate(&traj, 0.5)?;
    Ok(SinglePhotonComparison {
        delta_frac: s.delta_frac(),
        oracle_rate: fit.rate,
        fit,
        bracketing_rate: single_photon_rate(&t)?,
        mode_sum_rate,
        dimension: basis.dimension(),
    })
}

/// Rows of [`single_photon_comparison`] for several detunings.
pub fn comparison_table(rows: &[SinglePhotonComparison]) -> SweepResult {
    let mut out = SweepResult::new(&[
        "delta_over_omega0",
        "oracle_rate",
        "bracketing_rate",
        "mode_sum_rate",
        "bracketing_ratio",
        "mode_sum_ratio",
        "r_squared",
    ]);
    for r in rows {
        out.rows.push(vec![
            r.delta_frac,
            r.oracle_rate,
            r.bracketing_rate,
            r.mode_sum_rate,
            r.bracketing_ratio(),
            r.mode_sum_ratio(),
            r.fit.r_squared,
        ]);
    }
    out
}
