//! Command-line driver: datasets for the rate-vs-detuning and
//! rate-vs-density figures, single-point evaluation, the validation report
//! and oracle runs.
//!
//! Exit codes: 0 success, 1 invalid input, 2 domain error (pole, validity
//! range, oracle failure), 3 validation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dressed::{saturation_curve, two_photon_rate_dressed, DressedOptions, DressedScope};
use crate::error::{Error, Result};
use crate::oracle::{
    build_basis, build_hamiltonian, comparison_table, evolve, single_photon_comparison,
    weak_coupling_from, weak_coupling_modes, BasisState, ModeSet,
};
use crate::params::{atoms_in_mode_volume, per_cm3_to_per_m3, Scenario};
use crate::perturbative::{
    converge_full_rate, effective_matrix_element, single_photon_rate, two_photon_amplitudes,
    two_photon_rate_full, two_photon_rate_two_path, PathOptions, PathRule, DEFAULT_CONVERGENCE_TOL,
    DEFAULT_WINDOW,
};
use crate::scenario_file::{self, ResolvedScenario, ScenarioSpec};
use crate::sweep::{self, fingerprint, linspace, logspace, map_ordered, SweepResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Largest window tried by convergence studies.
pub const MAX_CONVERGENCE_WINDOW: usize = 1 << 22;

/// Reference plateau of the saturation curve, s⁻¹.
pub const PLATEAU_REFERENCE: f64 = 4.7e9;
/// Reference single-photon rate at ρ = 1e15 cm⁻³, δ = 0.2·ω0, s⁻¹.
pub const R1_REFERENCE: f64 = 2.3e7;
/// Reference ratio of the full sum to the two dominant chains.
pub const FULL_SUM_REFERENCE: f64 = 1.52;

#[derive(Debug, Parser)]
#[command(
    name = "twomode",
    version,
    about = "Two-photon absorption near a ring resonator"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (key = value lines); rubidium defaults otherwise.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override a scenario key, e.g. --set delta_frac=0.2. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Path window half-width L (2L resonator modes).
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// γ2 as a fraction of ω0.
    #[arg(long = "gamma2-frac", global = true)]
    pub gamma2_frac: Option<f64>,
    /// Evaluate sweep points on one thread.
    #[arg(long, global = true)]
    pub serial: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    Window,
    Bracketing,
    Upper,
}

impl From<ScopeArg> for DressedScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Window => DressedScope::Window,
            ScopeArg::Bracketing => DressedScope::BracketingPair,
            ScopeArg::Upper => DressedScope::UpperOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleConfig {
    /// Weak waveguide and atom couplings where golden rule and
    /// single-mode dynamics agree.
    Weak,
    /// Every coupling of the scenario scaled by 1e-2.
    Scaled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// R1 and R2 against δ/ω0 (γ2 defaults to 0.05·ω0).
    Fig3 {
        #[arg(long, default_value_t = 0.3)]
        max_frac: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// R2 against atomic density, dressed and perturbative.
    Fig4 {
        #[arg(long, default_value_t = 1e11)]
        rho_min: f64,
        #[arg(long, default_value_t = 1e19)]
        rho_max: f64,
        #[arg(long, default_value_t = 33)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ScopeArg::Window)]
        scope: ScopeArg,
    },
    /// All rates at one parameter point.
    Point,
    /// Invariant and reference checks; exit 3 if any fails.
    Validate,
    /// Brute-force single-photon runs against the perturbative rates.
    OracleRun {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3])]
        deltas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = OracleConfig::Weak)]
        config: OracleConfig,
        #[arg(long, default_value_t = 1)]
        atoms: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        /// Target fall of ln(survival) over the run.
        #[arg(long, default_value_t = 0.02)]
        decay: f64,
        /// Also write the trajectory of the first δ here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_domain() {
        EXIT_DOMAIN
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (program name first) and runs the command, writing to
/// `stdout`/`stderr`. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_INVALID
                }
            };
        }
    };
    match execute(&cli) {
        Ok(Outcome { text, code }) => {
            if let Err(e) = emit(&cli.common, &text, stdout) {
                let _ = writeln!(stderr, "error: {e}");
                return exit_code(&e);
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Outcome {
    text: String,
    code: i32,
}

fn emit(common: &CommonArgs, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &common.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Scenario file plus overrides, resolved.
pub fn load_scenario(common: &CommonArgs) -> Result<ResolvedScenario> {
    let mut spec = match &common.scenario {
        Some(p) => scenario_file::load(p)?,
        None => ScenarioSpec::default(),
    };
    for s in &common.set {
        spec.apply_override(s)?;
    }
    if let Some(g) = common.gamma2_frac {
        spec.set("gamma2_frac", g)?;
    }
    scenario_file::resolve(&spec)
}

fn path_options(common: &CommonArgs) -> Result<PathOptions> {
    let window = common.window.unwrap_or(DEFAULT_WINDOW);
    if window == 0 {
        return Err(Error::InvalidInput("--window must be at least 1".into()));
    }
    Ok(PathOptions::default().with_window(window))
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let ok = |text| {
        Ok(Outcome {
            text,
            code: EXIT_OK,
        })
    };
    match &cli.command {
        Command::Fig3 { max_frac, points } => {
            let mut r = load_scenario(c)?;
            if c.gamma2_frac.is_none() {
                r.scenario.gamma2 = 0.05 * r.scenario.omega0;
            }
            let opts = path_options(c)?;
            let grid = linspace(-max_frac, *max_frac, *points);
            let mut out = fig3_data(&r.scenario, &grid, &opts, !c.serial)?;
            add_provenance(&mut out, &r);
            ok(out.to_csv(&fingerprint(&r.scenario)))
        }
        Command::Fig4 {
            rho_min,
            rho_max,
            points,
            scope,
        } => {
            let r = load_scenario(c)?;
            if !(*rho_min > 0.0 && rho_max > rho_min) || *points < 2 {
                return Err(Error::InvalidInput(
                    "need 0 < rho_min < rho_max and at least 2 points".into(),
                ));
            }
            let opts = DressedOptions {
                paths: path_options(c)?,
                scope: (*scope).into(),
            };
            let rho = logspace(*rho_min, *rho_max, *points);
            let mut out = saturation_curve(&r.scenario, &rho, r.mode_volume_m3, &opts, !c.serial)?;
            add_provenance(&mut out, &r);
            ok(out.to_csv(&fingerprint(&r.scenario)))
        }
        Command::Point => ok(point_report(&load_scenario(c)?, &path_options(c)?)?),
        Command::Validate => {
            let r = load_scenario(c)?;
            let checks = validation_checks(&r, &path_options(c)?, !c.serial);
            let failed = checks.iter().any(|k| k.status == Status::Fail);
            Ok(Outcome {
                text: render_checks(&checks, &fingerprint(&r.scenario)),
                code: if failed { EXIT_VALIDATION } else { EXIT_OK },
            })
        }
        Command::OracleRun {
            deltas,
            config,
            atoms,
            samples,
            decay,
            trajectory,
        } => {
            let r = load_scenario(c)?;
            let scenario_for = |x: f64| match config {
                OracleConfig::Weak => weak_coupling_from(&r.scenario, x),
                OracleConfig::Scaled => r.scenario.with_scaled_couplings(1e-2).with_delta_frac(x),
            };
            let rows = map_ordered(deltas, !c.serial, |&x| {
                let s = scenario_for(x);
                let modes = weak_coupling_modes(&s)?;
                single_photon_comparison(&s, &modes, *atoms, *decay, *samples)
            })?;
            if let (Some(path), Some(&x)) = (trajectory, deltas.first()) {
                let s = scenario_for(x);
                let text = trajectory_csv(&s, *atoms, rows[0].oracle_rate, *decay, *samples)?;
                std::fs::write(path, text)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            let mut out = comparison_table(&rows);
            out.push_meta("config", format!("{config:?}"));
            out.push_meta("atoms", atoms);
            out.push_meta("dimension", rows.first().map(|r| r.dimension).unwrap_or(0));
            ok(out.to_csv(&fingerprint(&r.scenario)))
        }
    }
}

fn add_provenance(out: &mut SweepResult, r: &ResolvedScenario) {
    for (k, v) in r.provenance() {
        out.metadata.push((k, v));
    }
}

/// Columns: delta_over_omega0, R1, R2_two_path, R2_full, R1_norm, R2_norm
/// (the last two divided by their maxima over the grid).
pub fn fig3_data(
    s: &Scenario,
    grid: &[f64],
    opts: &PathOptions,
    parallel: bool,
) -> Result<SweepResult> {
    let rows = map_ordered(grid, parallel, |&x| {
        let t = s.with_delta_frac(x);
        Ok(vec![
            x,
            single_photon_rate(&t)?,
            two_photon_rate_two_path(&t)?,
            two_photon_rate_full(&t, opts)?.rate,
        ])
    })?;
    let peak = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
    let (p1, p2) = (peak(1), peak(3));
    let norm = |v: f64, p: f64| if p > 0.0 { v / p } else { 0.0 };
    let mut out = SweepResult::new(&[
        "delta_over_omega0",
        "R1",
        "R2_two_path",
        "R2_full",
        "R1_norm",
        "R2_norm",
    ]);
    out.rows = rows
        .into_iter()
        .map(|mut r| {
            let (a, b) = (norm(r[1], p1), norm(r[3], p2));
            r.push(a);
            r.push(b);
            r
        })
        .collect();
    out.push_meta("window", opts.window);
    out.push_meta("gamma2_over_omega0", s.gamma2 / s.omega0);
    for w in s
        .with_delta_frac(grid.iter().fold(0.0f64, |a, b| a.max(b.abs())))
        .regime_warnings()
    {
        out.push_meta("warning", w);
    }
    Ok(out)
}

fn trajectory_csv(
    s: &Scenario,
    atoms: usize,
    rate: f64,
    decay: f64,
    samples: usize,
) -> Result<String> {
    let modes = weak_coupling_modes(s)?;
    let basis = build_basis(&modes, atoms, 1, 1)?;
    let h = build_hamiltonian(s, &basis)?;
    let t_end = decay / rate;
    let traj = crate::oracle::evolve_exponential(&basis.initial_vector()?, &h, t_end, samples)?;
    let tracked: Vec<usize> = (0..basis.dimension()).collect();
    let header = vec![
        format!("twomode {}", sweep::TOOL_VERSION),
        format!("scenario_fingerprint: {}", fingerprint(s)),
    ];
    Ok(traj.to_csv(&basis, &tracked, &header))
}

fn point_report(r: &ResolvedScenario, opts: &PathOptions) -> Result<String> {
    let s = &r.scenario;
    let mut lines: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
    let f = sweep::format_value;
    put("scenario_fingerprint", fingerprint(s));
    put("delta_over_omega0", f(s.delta_frac()));
    put("n_atoms", f(s.n_atoms));
    put("m_eff_rad_s", f(effective_matrix_element(s)?));
    put("R1_per_s", f(single_photon_rate(s)?));
    match two_photon_amplitudes(s) {
        Ok((a, b)) => {
            put("A2", f(a));
            put("A2_prime", f(b));
        }
        Err(e) => put("A2", format!("undefined ({e})")),
    }
    put("R2_two_path_per_s", f(two_photon_rate_two_path(s)?));
    let full = two_photon_rate_full(s, opts)?;
    put("window", opts.window.to_string());
    put("n_paths", full.n_paths.to_string());
    put("R2_full_per_s", f(full.rate));
    if let Some(c) = full.relative_change {
        put("R2_full_last_shell_change", f(c));
    }
    let study = converge_full_rate(s, opts, DEFAULT_CONVERGENCE_TOL, MAX_CONVERGENCE_WINDOW)?;
    put("R2_full_converged_per_s", f(study.final_rate()));
    put("converged_window", study.final_window().to_string());
    put("converged", study.converged.to_string());
    let dressed = DressedOptions {
        paths: *opts,
        ..Default::default()
    };
    put("R2_dressed_per_s", f(two_photon_rate_dressed(s, &dressed)?));
    for (k, v) in r.provenance() {
        put(&k, v);
    }
    Ok(lines
        .into_iter()
        .map(|(k, v)| format!("{k}: {v}\n"))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
    /// The scenario lies outside the domain of this check.
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
            Status::Rejected => "REJECTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: String,
    pub target: String,
}

fn check(name: &str, ok: bool, measured: String, target: &str) -> Check {
    Check {
        name: name.into(),
        status: if ok { Status::Pass } else { Status::Fail },
        measured,
        target: target.into(),
    }
}

fn info(name: &str, measured: String, target: &str) -> Check {
    Check {
        name: name.into(),
        status: Status::Info,
        measured,
        target: target.into(),
    }
}

/// Runs `f`; a domain error becomes a `Rejected` entry, other errors a
/// failure.
fn guarded(name: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Vec<Check> {
    match f() {
        Ok(v) => v,
        Err(e) => vec![Check {
            name: name.into(),
            status: if e.is_domain() {
                Status::Rejected
            } else {
                Status::Fail
            },
            measured: e.to_string(),
            target: String::new(),
        }],
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn unit_scenario() -> Scenario {
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
        n_atoms: 1.0,
    }
}

fn scenario_at_density(r: &ResolvedScenario, rho_cm3: f64) -> Result<Scenario> {
    let n = atoms_in_mode_volume(per_cm3_to_per_m3(rho_cm3), r.mode_volume_m3)?;
    Ok(r.scenario.with_n_atoms(n))
}

pub fn validation_checks(r: &ResolvedScenario, opts: &PathOptions, parallel: bool) -> Vec<Check> {
    let s = r.scenario;
    let mut out = Vec::new();

    out.extend(guarded("transparency_null", || {
        let u = unit_scenario();
        let null = single_photon_rate(&u)?;
        let mut worst: f64 = 0.0;
        for i in 1..=100 {
            let x = 0.49 * i as f64 / 100.0;
            let a = single_photon_rate(&u.with_delta(x))?;
            let b = single_photon_rate(&u.with_delta(-x))?;
            worst = worst.max(rel(b, a));
        }
        Ok(vec![check(
            "transparency_null",
            null.abs() <= 1e-20 && worst <= 1e-10,
            format!("R1(0)={null:e} parity={worst:.2e}"),
            "R1(0)<=1e-20, parity<=1e-10",
        )])
    }));

    out.extend(guarded("hand_values", || {
        let u = unit_scenario();
        let m = effective_matrix_element(&u.with_delta(0.25))?;
        let r1 = single_photon_rate(&u.with_delta(0.25))?;
        let (a, b) = two_photon_amplitudes(&u.with_delta(0.1))?;
        let r2 = two_photon_rate_two_path(&u)?;
        let errs = [
            rel(m, -8.0 / 3.0),
            rel(r1, 2.0 * (0.1 / 100.01) * 64.0 / 9.0),
            rel(a, 3.125),
            rel(b, 25.0 / 18.0),
            rel(r2, 12.8),
        ];
        let worst = errs.iter().copied().fold(0.0, f64::max);
        Ok(vec![check(
            "hand_values",
            worst <= 1e-10,
            format!("{worst:.2e}"),
            "<=1e-10",
        )])
    }));

    out.extend(guarded("full_sum_ratio", || {
        let t = s.with_delta(0.0);
        let study = converge_full_rate(&t, opts, DEFAULT_CONVERGENCE_TOL, MAX_CONVERGENCE_WINDOW)?;
        let ratio = study.final_rate() / two_photon_rate_two_path(&t)?;
        Ok(vec![check(
            "full_sum_ratio",
            study.converged && (ratio - FULL_SUM_REFERENCE).abs() <= 0.08,
            format!("{ratio:.6} at L={}", study.final_window()),
            "1.52 +/- 0.08",
        )])
    }));

    out.extend(guarded("fig3_shape", || {
        let mut t = s;
        t.gamma2 = 0.05 * t.omega0;
        let grid: Vec<f64> = (1..=30).map(|i| 0.01 * i as f64).collect();
        let mut ok = true;
        let mut parity: f64 = 0.0;
        let centre = two_photon_rate_full(&t, opts)?.rate;
        let mut last = 0.0;
        for &x in &grid {
            let p = t.with_delta_frac(x);
            let m = t.with_delta_frac(-x);
            let r1 = single_photon_rate(&p)?;
            ok &= r1 > last;
            last = r1;
            let (r2p, r2m) = (
                two_photon_rate_full(&p, opts)?.rate,
                two_photon_rate_full(&m, opts)?.rate,
            );
            ok &= r2p < centre && r2m < centre;
            parity = parity
                .max(rel(single_photon_rate(&m)?, r1))
                .max(rel(r2m, r2p));
        }
        Ok(vec![check(
            "fig3_shape",
            ok && parity <= 1e-10,
            format!("parity={parity:.2e}"),
            "R1 rising on (0,0.3], R2 peaked at 0, parity<=1e-10",
        )])
    }));

    out.extend(guarded("fig4", || {
        let dopts = DressedOptions {
            paths: *opts,
            ..Default::default()
        };
        let low = logspace(1e11, 1e15, 9);
        let curve = saturation_curve(&s, &low, r.mode_volume_m3, &dopts, parallel)?;
        let worst_low = curve
            .column("slope")
            .unwrap_or_default()
            .iter()
            .map(|k| (k - 1.0).abs())
            .fold(0.0, f64::max);
        let high = logspace(1e17, 1e19, 5);
        let curve = saturation_curve(&s, &high, r.mode_volume_m3, &dopts, parallel)?;
        let worst_high = curve
            .column("slope")
            .unwrap_or_default()
            .iter()
            .map(|k| k.abs())
            .fold(0.0, f64::max);
        let plateau = *curve
            .column("R2_dressed")
            .unwrap_or_default()
            .last()
            .unwrap_or(&f64::NAN);
        let tiny = scenario_at_density(r, 1e9)?;
        let agree =
            two_photon_rate_dressed(&tiny, &dopts)? / two_photon_rate_full(&tiny, opts)?.rate;
        Ok(vec![
            check(
                "fig4_low_density_slope",
                worst_low <= 0.05,
                format!("max |slope-1| = {worst_low:.3}"),
                "slope 1.00 +/- 0.05 for rho <= 1e15",
            ),
            check(
                "fig4_high_density_slope",
                worst_high < 0.05,
                format!("max |slope| = {worst_high:.4}"),
                "< 0.05 for rho >= 1e17",
            ),
            check(
                "fig4_plateau",
                (PLATEAU_REFERENCE / 2.0..=PLATEAU_REFERENCE * 2.0).contains(&plateau),
                format!("{plateau:.4e}"),
                "4.7e9 within x2",
            ),
            check(
                "dressed_low_density_limit",
                (agree - 1.0).abs() <= 1e-3,
                format!("{agree:.8}"),
                "dressed/full -> 1",
            ),
        ])
    }));

    out.extend(guarded("r1_reference", || {
        let t = scenario_at_density(r, 1e15)?.with_delta_frac(0.2);
        let r1 = single_photon_rate(&t)?;
        let factor = (r1 / R1_REFERENCE).max(R1_REFERENCE / r1);
        let dipoles = match (r.dipole1_cm, r.dipole2_cm) {
            (Some(a), Some(b)) => format!(" dipoles={a:.4e},{b:.4e} C*m"),
            _ => String::new(),
        };
        Ok(vec![check(
            "r1_reference",
            factor <= 3.0,
            format!("{r1:.4e} (x{factor:.2}){dipoles}"),
            "2.3e7 within x3",
        )])
    }));

    out.extend(guarded("oracle_weak_coupling", || {
        let rows = map_ordered(&[0.1, 0.2, 0.3], parallel, |&x| {
            let w = weak_coupling_from(&s, x);
            single_photon_comparison(&w, &weak_coupling_modes(&w)?, 1, 0.02, 2000)
        })?;
        let mut v = Vec::new();
        for c in rows {
            v.push(check(
                &format!("oracle_mode_sum_d{:.1}", c.delta_frac),
                (c.mode_sum_ratio() - 1.0).abs() <= 0.1,
                format!("{:.5}", c.mode_sum_ratio()),
                "mode-sum rate / oracle within 10%",
            ));
            v.push(info(
                &format!("oracle_bracketing_d{:.1}", c.delta_frac),
                format!("{:.5}", c.bracketing_ratio()),
                "bracketing-pair rate / oracle (10% criterion)",
            ));
        }
        Ok(v)
    }));

    out.extend(guarded("oracle_integrity", || {
        let mut t = unit_scenario();
        t.mw = 0.05;
        t.delta = 0.5;
        t.gamma1 = 0.0;
        t.gamma2 = 0.0;
        let modes = ModeSet::isolated(vec![11], 10, t.ebar + t.delta)?;
        let basis = build_basis(&modes, 0, 1, 1)?;
        let h = build_hamiltonian(&t, &basis)?;
        let target = std::f64::consts::PI / (2.0 * t.mw);
        let psi0 = basis.initial_vector()?;
        let mode = basis
            .index_of(&BasisState {
                n_w: 0,
                n_modes: vec![1],
                atom_levels: vec![],
            })
            .ok_or_else(|| Error::InvalidInput("mode state missing".into()))?;
        let eps = 1e-3;
        let mut p = [0.0; 3];
        for (k, f) in [1.0 - eps, 1.0, 1.0 + eps].iter().enumerate() {
            let tr = evolve(&psi0, &h, target * f, target * f / 8.0)?;
            p[k] = tr.populations.last().map(|v| v[mode]).unwrap_or(f64::NAN);
        }
        let vertex = target * (1.0 + eps * (p[0] - p[2]) / (2.0 * (p[0] - 2.0 * p[1] + p[2])));
        let tr = evolve(&psi0, &h, 20.0 * target, target / 4.0)?;
        let e0 = tr.energy[0];
        let drift = tr
            .survival
            .iter()
            .zip(&tr.energy)
            .map(|(n, e)| (n - 1.0).abs().max((e - e0).abs() / e0.abs().max(t.mw)))
            .fold(0.0, f64::max);
        Ok(vec![
            check(
                "oracle_rabi_time",
                rel(vertex, target) <= 1e-6,
                format!("{:.2e}", rel(vertex, target)),
                "pi/(2 Mw) to 1e-6",
            ),
            check(
                "oracle_conservation",
                drift <= 1e-9,
                format!("{drift:.2e}"),
                "norm and energy to 1e-9 over 10 Rabi periods",
            ),
        ])
    }));

    out.extend(guarded("all_pairs_midpoint", || {
        let t = s.with_delta(0.0);
        let all = two_photon_rate_full(
            &t,
            &PathOptions {
                rule: PathRule::AllPairs,
                ..*opts
            },
        )?
        .rate;
        let doubly = two_photon_rate_full(&t, opts)?.rate;
        Ok(vec![info(
            "all_pairs_midpoint",
            format!("{:.3e}", all / doubly),
            "every-pair rule / doubly-occupied rule at delta=0",
        )])
    }));

    out.extend(guarded("dressed_scope", || {
        let t = scenario_at_density(r, 1e19)?;
        let rate = |scope| {
            two_photon_rate_dressed(
                &t,
                &DressedOptions {
                    paths: *opts,
                    scope,
                },
            )
        };
        let w = rate(DressedScope::Window)?;
        Ok(vec![info(
            "dressed_scope",
            format!(
                "bracketing/window={:.4} upper/window={:.4}",
                rate(DressedScope::BracketingPair)? / w,
                rate(DressedScope::UpperOnly)? / w
            ),
            "plateau by dressed chain set",
        )])
    }));

    for w in &r.warnings {
        out.push(info("warning", w.clone(), ""));
    }
    out
}

pub fn render_checks(checks: &[Check], fingerprint: &str) -> String {
    let mut s = format!(
        "# twomode {}\n# scenario_fingerprint: {fingerprint}\nstatus,check,measured,target\n",
        sweep::TOOL_VERSION
    );
    for c in checks {
        let clean = |t: &str| t.replace(',', ";");
        s.push_str(&format!(
            "{},{},{},{}\n",
            c.status.as_str(),
            c.name,
            clean(&c.measured),
            clean(&c.target)
        ));
    }
    s
}
