//! Experiment driver: config ingestion, run execution, artifact
//! persistence, and report emission for the stratified-MHD toolkit.
//!
//! Exit codes: 0 ok, 2 config error, 3 numerical abort, 4 hypothesis
//! (smallness) violation.

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use stratmhd::background::{background_decay_rate, init_background, BackgroundModal, Params};
use stratmhd::basis::Spectrum;
use stratmhd::diagnostics::{fit_decay, report, DecayFit, EnergyReport};
use stratmhd::linear::{evolve_linear, mode_matrix, spectral_abscissa};
use stratmhd::oracle::{expm_reference, rk4_reference, OdeProblem};
use stratmhd::sim::{random_initial_state, PerturbationState, RunTermination, SimConfig};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_HYPOTHESIS: u8 = 4;

#[derive(Parser)]
#[command(name = "stratmhd", version, about = "Damped stratified-MHD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Execute the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Parent directory for the timestamped run directory.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Accept k_order below 7 (outside the validated regime).
        #[arg(long)]
        allow_low_order: bool,
    },
    /// Recompute fits and verdicts from a run directory's artifacts.
    Report { run_dir: PathBuf },
    /// Cross-check the numerical kernels against reference oracles.
    Selftest,
    /// Print the decay rates alpha, c_kappa, beta for given parameters.
    Rates {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        c0: f64,
    },
}

// ---------------------------------------------------------------------------
// config file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Linear,
    Nonlinear,
    Background,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhysicsSection {
    kappa: f64,
    c0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GridSection {
    l_x: f64,
    n_x: usize,
    n_y: usize,
    k_order: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TimeSection {
    dt: f64,
    t_end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InitSection {
    epsilon0: f64,
    seed: u64,
    mode: Mode,
    /// Cosine coefficients of the initial background potential profile.
    #[serde(default)]
    bg_phi: Vec<f64>,
    /// Cosine coefficients of the initial background flow profile.
    #[serde(default)]
    bg_psi: Vec<f64>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OutputSection {
    #[serde(default = "default_true")]
    dealias: bool,
    output_stride: usize,
    #[serde(default)]
    snapshots: bool,
    #[serde(default)]
    exact_damping: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Config {
    physics: PhysicsSection,
    grid: GridSection,
    time: TimeSection,
    init: InitSection,
    output: OutputSection,
}

impl Config {
    fn params(&self) -> Params {
        Params {
            kappa: self.physics.kappa,
            c0: self.physics.c0,
            l_x: self.grid.l_x,
            n_x: self.grid.n_x,
            n_y: self.grid.n_y,
            k_order: self.grid.k_order,
        }
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params(),
            dt: self.time.dt,
            t_end: self.time.t_end,
            dealias: self.output.dealias,
            output_stride: self.init_stride(),
            epsilon0: self.init.epsilon0,
            exact_damping: self.output.exact_damping,
            keep_states: self.output.snapshots,
        }
    }

    fn init_stride(&self) -> usize {
        self.output.output_stride.max(1)
    }

    fn validate(&self, allow_low_order: bool) -> Result<(), String> {
        if !(self.physics.kappa > 0.0) {
            return Err("kappa must be positive".into());
        }
        if self.physics.c0 == 0.0 || !self.physics.c0.is_finite() {
            return Err("c0 must be nonzero and finite".into());
        }
        if !(self.init.epsilon0 > 0.0) {
            return Err("epsilon0 must be positive".into());
        }
        if self.grid.k_order < 7 && !allow_low_order {
            return Err(
                "k_order below 7 is outside the validated regime (pass --allow-low-order)".into(),
            );
        }
        if self.output.output_stride == 0 {
            return Err("output_stride must be positive".into());
        }
        if self.init.bg_phi.len() > self.grid.n_y + 1 || self.init.bg_psi.len() > self.grid.n_y + 1
        {
            return Err("background coefficient list longer than n_y + 1".into());
        }
        self.sim_config().validate().map_err(|e| e.to_string())
    }
}

fn read_threads() -> Result<usize, String> {
    match std::env::var("THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| format!("THREADS must be a positive integer, got {v:?}")),
        Err(_) => Ok(1),
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn padded_coeffs(list: &[f64], n_y: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_y + 1];
    v[..list.len()].copy_from_slice(list);
    v
}

fn csv_header() -> &'static str {
    "t,E_k,E_4,Gamma_kp1,norm_u_Hk,norm_dtu_Hk,norm_rho_Hkp1,norm_dtrho_Hkp1,smallness_ok,bg_phi_norm,bg_psi_norm"
}

fn csv_row(r: &EnergyReport) -> String {
    format!(
        "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e}",
        r.t,
        r.e_k,
        r.e_4,
        r.gamma_kp1,
        r.norm_u_hk,
        r.norm_dtu_hk,
        r.norm_rho_hkp1,
        r.norm_dtrho_hkp1,
        u8::from(r.smallness_ok),
        r.bg_phi_norm,
        r.bg_psi_norm
    )
}

/// Time derivative of a state under the flat-background linear system.
fn linear_time_derivative(s: &PerturbationState, p: &Params) -> (Spectrum, Spectrum, Spectrum) {
    let mut du1 = s.u1.clone();
    let mut du2 = s.u2.clone();
    let mut drho = s.rho.clone();
    for j in 0..s.u1.n_x {
        let xi = s.u1.xi(j);
        for q in 0..=s.u1.n_y {
            let k = Spectrum::k_q(q);
            let a = mode_matrix(p, xi, k).matrix();
            // bridge: v = (u1_hat, -i u2_hat, rho_hat)
            let v = [
                s.u1.coeffs[(j, q)],
                Complex64::new(0.0, -1.0) * s.u2.coeffs[(j, q)],
                s.rho.coeffs[(j, q)],
            ];
            let mut dv = [Complex64::new(0.0, 0.0); 3];
            for (r, dvr) in dv.iter_mut().enumerate() {
                for (c, vc) in v.iter().enumerate() {
                    *dvr += a[(r, c)] * vc;
                }
            }
            du1.coeffs[(j, q)] = dv[0];
            du2.coeffs[(j, q)] = Complex64::new(0.0, 1.0) * dv[1];
            drho.coeffs[(j, q)] = dv[2];
        }
    }
    (du1, du2, drho)
}

struct RunOutcome {
    reports: Vec<EnergyReport>,
    snapshots: Vec<stratmhd::snapshot::Snapshot>,
    termination: RunTermination,
}

fn execute(cfg: &Config, bg: &BackgroundModal) -> Result<RunOutcome, String> {
    let p = cfg.params();
    let sim_cfg = cfg.sim_config();
    match cfg.init.mode {
        Mode::Nonlinear => {
            let init = random_initial_state(&p, cfg.init.epsilon0, cfg.init.seed);
            let traj = stratmhd::sim::run(&sim_cfg, bg, init).map_err(|e| e.to_string())?;
            Ok(RunOutcome {
                reports: traj.reports,
                snapshots: traj.states,
                termination: traj.termination,
            })
        }
        Mode::Linear => {
            let init = random_initial_state(&p, cfg.init.epsilon0, cfg.init.seed);
            let stride_dt = sim_cfg.dt * cfg.init_stride() as f64;
            let n_out = (cfg.time.t_end / stride_dt).round() as usize;
            let mut reports = Vec::with_capacity(n_out + 1);
            let mut snapshots = Vec::new();
            for i in 0..=n_out {
                let t = (i as f64 * stride_dt).min(cfg.time.t_end);
                let (u1, u2, rho) = evolve_linear(&init.u1, &init.u2, &init.rho, &p, t)
                    .map_err(|e| e.to_string())?;
                let mut s = PerturbationState {
                    u1,
                    u2,
                    rho,
                    t,
                    cached_rhs: None,
                };
                s.cached_rhs = Some(linear_time_derivative(&s, &p));
                reports.push(report(&s, bg, &p).map_err(|e| e.to_string())?);
                if cfg.output.snapshots {
                    snapshots.push(stratmhd::snapshot::Snapshot {
                        t,
                        u1: s.u1.clone(),
                        u2: s.u2.clone(),
                        rho: s.rho.clone(),
                    });
                }
            }
            Ok(RunOutcome {
                reports,
                snapshots,
                termination: RunTermination::Completed,
            })
        }
        Mode::Background => {
            let p2 = p.clone();
            let stride_dt = sim_cfg.dt * cfg.init_stride() as f64;
            let n_out = (cfg.time.t_end / stride_dt).round() as usize;
            let mut reports = Vec::with_capacity(n_out + 1);
            let mut s = PerturbationState::zeros(&p2);
            let zero = (s.u1.clone(), s.u2.clone(), s.rho.clone());
            s.cached_rhs = Some(zero);
            for i in 0..=n_out {
                s.t = (i as f64 * stride_dt).min(cfg.time.t_end);
                reports.push(report(&s, bg, &p2).map_err(|e| e.to_string())?);
            }
            Ok(RunOutcome {
                reports,
                snapshots: Vec::new(),
                termination: RunTermination::Completed,
            })
        }
    }
}

fn decay_series(cfg: &Config, reports: &[EnergyReport]) -> Vec<(f64, f64)> {
    match cfg.init.mode {
        Mode::Background => reports.iter().map(|r| (r.t, r.bg_phi_norm)).collect(),
        _ => reports
            .iter()
            .map(|r| (r.t, r.norm_u_hk + r.norm_rho_hkp1))
            .collect(),
    }
}

fn fit_window(t_end: f64) -> (f64, f64) {
    (0.25 * t_end, t_end)
}

fn decay_json(cfg: &Config, fit: &Result<DecayFit, String>) -> serde_json::Value {
    let p = cfg.params();
    let alpha = background_decay_rate(&p);
    let c_kappa = spectral_abscissa(&p);
    let beta = alpha.min(0.5 * c_kappa);
    let series = match cfg.init.mode {
        Mode::Background => "bg_phi_norm",
        _ => "norm_u_Hk + norm_rho_Hkp1",
    };
    match fit {
        Ok(f) => serde_json::json!({
            "alpha": alpha,
            "c_kappa": c_kappa,
            "beta": beta,
            "series": series,
            "rate": f.rate,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "window": [f.window.0, f.window.1],
        }),
        Err(e) => serde_json::json!({
            "alpha": alpha,
            "c_kappa": c_kappa,
            "beta": beta,
            "series": series,
            "rate": null,
            "error": e,
        }),
    }
}

fn termination_label(t: &RunTermination) -> String {
    match t {
        RunTermination::Completed => "completed".into(),
        RunTermination::SmallnessViolation { t, value } => {
            format!("smallness violation at t={t} (value {value:.3e})")
        }
        RunTermination::NumericalAbort { t, message } => {
            format!("numerical abort at t={t}: {message}")
        }
    }
}

fn make_run_dir(parent: &Path) -> Result<PathBuf, String> {
    fs::create_dir_all(parent).map_err(|e| e.to_string())?;
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    for attempt in 0..1000 {
        let name = if attempt == 0 {
            format!("run-{stamp}")
        } else {
            format!("run-{stamp}-{attempt}")
        };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err("could not allocate a run directory".into())
}

fn cmd_run(config_path: &Path, out_dir: &Path, allow_low_order: bool) -> u8 {
    // everything up to directory creation is a config error (exit 2,
    // no run directory on failure)
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    let cfg: Config = match toml::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = cfg.validate(allow_low_order) {
        eprintln!("config error: {e}");
        return EXIT_CONFIG;
    }
    let threads = match read_threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };

    let p = cfg.params();
    let phi0 = padded_coeffs(&cfg.init.bg_phi, p.n_y);
    let psi0 = padded_coeffs(&cfg.init.bg_psi, p.n_y);
    let bg = match init_background(&phi0, &psi0, &p) {
        Ok(bg) => bg,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };

    let run_dir = match make_run_dir(out_dir) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let started = chrono::Local::now();

    let outcome = match execute(&cfg, &bg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("run failed: {e}");
            let _ = fs::remove_dir(&run_dir);
            return EXIT_NUMERICAL;
        }
    };

    let mut files = Vec::new();
    // energy.csv
    let csv_path = run_dir.join("energy.csv");
    {
        let mut out = String::with_capacity(outcome.reports.len() * 256);
        out.push_str(csv_header());
        out.push('\n');
        for r in &outcome.reports {
            out.push_str(&csv_row(r));
            out.push('\n');
        }
        if let Err(e) = fs::write(&csv_path, out) {
            eprintln!("write failed: {e}");
            return EXIT_NUMERICAL;
        }
        files.push("energy.csv".to_string());
    }

    // decay.json
    let fit = fit_decay(&decay_series(&cfg, &outcome.reports), fit_window(cfg.time.t_end))
        .map_err(|e| e.to_string());
    let decay = decay_json(&cfg, &fit);
    if let Err(e) = fs::write(
        run_dir.join("decay.json"),
        serde_json::to_string_pretty(&decay).expect("json"),
    ) {
        eprintln!("write failed: {e}");
        return EXIT_NUMERICAL;
    }
    files.push("decay.json".to_string());

    // optional snapshots
    for (i, snap) in outcome.snapshots.iter().enumerate() {
        let name = format!("snap_{i:05}.bin");
        if let Err(e) = stratmhd::snapshot::write_snapshot(&run_dir.join(&name), snap) {
            eprintln!("write failed: {e}");
            return EXIT_NUMERICAL;
        }
        files.push(name);
    }

    // manifest last, via atomic rename
    files.push("manifest.json".to_string());
    let finished = chrono::Local::now();
    let smallness_ok = outcome.reports.iter().all(|r| r.smallness_ok);
    let manifest = serde_json::json!({
        "code_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "threads": threads,
        "started": started.to_rfc3339(),
        "finished": finished.to_rfc3339(),
        "files": files,
        "termination": termination_label(&outcome.termination),
        "verdicts": {
            "decay": decay,
            "smallness_ok": smallness_ok,
            "max_div_residual": outcome.reports.iter().map(|r| r.div_residual).fold(0.0_f64, f64::max),
        },
    });
    let tmp = run_dir.join("manifest.json.tmp");
    let write_manifest = fs::write(&tmp, serde_json::to_string_pretty(&manifest).expect("json"))
        .and_then(|()| fs::rename(&tmp, run_dir.join("manifest.json")));
    if let Err(e) = write_manifest {
        eprintln!("write failed: {e}");
        return EXIT_NUMERICAL;
    }

    println!("{}", run_dir.display());
    match outcome.termination {
        RunTermination::Completed => EXIT_OK,
        RunTermination::SmallnessViolation { .. } => {
            eprintln!("{}", termination_label(&outcome.termination));
            EXIT_HYPOTHESIS
        }
        RunTermination::NumericalAbort { .. } => {
            eprintln!("{}", termination_label(&outcome.termination));
            EXIT_NUMERICAL
        }
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn parse_energy_csv(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty energy.csv")?;
    if header != csv_header() {
        return Err("corrupt energy.csv: unexpected header".into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("corrupt energy.csv at data row {}: {e}", i + 1))?;
        if cols.len() != 11 {
            return Err(format!(
                "corrupt energy.csv at data row {}: {} columns",
                i + 1,
                cols.len()
            ));
        }
        rows.push(cols);
    }
    Ok(rows)
}

fn cmd_report(run_dir: &Path) -> u8 {
    let rows = match parse_energy_csv(&run_dir.join("energy.csv")) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("report error: {e}");
            return EXIT_CONFIG;
        }
    };
    if rows.len() < 2 {
        eprintln!("report error: too few samples in energy.csv ({} rows)", rows.len());
        return EXIT_CONFIG;
    }
    if let Some(bad) = rows.iter().find(|r| r[2] <= 0.0) {
        eprintln!("report error: non-positive energy sample at t={}", bad[0]);
        return EXIT_CONFIG;
    }
    let t_end = rows.last().expect("nonempty")[0];
    let window = fit_window(t_end);
    let e4: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
    let amp: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[4] + r[6])).collect();
    let e4_fit = fit_decay(&e4, window).map_err(|e| e.to_string());
    let amp_fit = fit_decay(&amp, window).map_err(|e| e.to_string());
    let smallness_ok = rows.iter().all(|r| r[8] != 0.0);

    // rates need the physical parameters, recovered from the manifest
    let rates = fs::read_to_string(run_dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|m| {
            let cfg: Config = serde_json::from_value(m.get("config")?.clone()).ok()?;
            let p = cfg.params();
            let alpha = background_decay_rate(&p);
            let c_kappa = spectral_abscissa(&p);
            Some((alpha, c_kappa, alpha.min(0.5 * c_kappa)))
        });

    println!("samples: {}", rows.len());
    println!("time span: [{}, {}]", rows[0][0], t_end);
    if let Some((alpha, c_kappa, beta)) = rates {
        println!("alpha = {alpha:.6}, c_kappa = {c_kappa:.6}, beta = {beta:.6}");
    } else {
        println!("alpha, c_kappa, beta unavailable (no readable manifest.json)");
    }
    match &e4_fit {
        Ok(f) => println!("E_4 fitted rate: {:.6} (r^2 = {:.4})", f.rate, f.r_squared),
        Err(e) => println!("E_4 fit failed: {e}"),
    }
    match &amp_fit {
        Ok(f) => println!("amplitude fitted rate: {:.6} (r^2 = {:.4})", f.rate, f.r_squared),
        Err(e) => println!("amplitude fit failed: {e}"),
    }
    println!("smallness condition held: {smallness_ok}");
    let json = serde_json::json!({
        "samples": rows.len(),
        "t_span": [rows[0][0], t_end],
        "alpha": rates.map(|r| r.0),
        "c_kappa": rates.map(|r| r.1),
        "beta": rates.map(|r| r.2),
        "e4_rate": e4_fit.as_ref().ok().map(|f| f.rate),
        "amplitude_rate": amp_fit.as_ref().ok().map(|f| f.rate),
        "smallness_ok": smallness_ok,
        "window": [window.0, window.1],
    });
    println!("{}", serde_json::to_string(&json).expect("json"));
    EXIT_OK
}

// ---------------------------------------------------------------------------
// selftest and rates
// ---------------------------------------------------------------------------

fn cmd_selftest() -> u8 {
    use rand::{Rng, SeedableRng};
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        println!("selftest {name}: {}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    // RK4 vs matrix exponential on random stable systems
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mut a = nalgebra::DMatrix::<f64>::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            a[(i, i)] -= 2.0;
        }
        let y0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = rng.gen_range(0.1..5.0);
        let rhs = |_t: f64, y: &[f64]| {
            (0..3)
                .map(|i| (0..3).map(|j| a[(i, j)] * y[j]).sum())
                .collect()
        };
        let p = OdeProblem {
            dimension: 3,
            rhs: &rhs,
            y0: y0.clone(),
            t_span: (0.0, t),
        };
        let num = rk4_reference(&p, 1e-3).expect("rk4");
        let e = expm_reference(&a, t);
        for i in 0..3 {
            let exact: f64 = (0..3).map(|j| e[(i, j)] * y0[j]).sum();
            worst = worst.max((num[i] - exact).abs());
        }
    }
    check("rk4 vs expm", worst < 1e-8);

    // analytic propagator vs expm
    let p = Params {
        kappa: 1.7,
        c0: 0.3,
        l_x: 2.0 * std::f64::consts::PI,
        n_x: 8,
        n_y: 8,
        k_order: 7,
    };
    let mut worst_prop = 0.0_f64;
    for q in 0..=4usize {
        for xi in [-2.0, 0.0, 1.0, 3.0] {
            let m = mode_matrix(&p, xi, Spectrum::k_q(q));
            let e = stratmhd::linear::propagator(&m, 1.3);
            let dense = nalgebra::DMatrix::from_fn(3, 3, |i, j| m.matrix()[(i, j)]);
            let o = expm_reference(&dense, 1.3);
            for i in 0..3 {
                for j in 0..3 {
                    worst_prop = worst_prop.max((e[(i, j)] - o[(i, j)]).abs());
                }
            }
        }
    }
    check("propagator vs expm", worst_prop < 1e-10);

    // transform roundtrip
    let basis = stratmhd::basis::Basis::new(32, 16, p.l_x);
    let s0 = random_initial_state(&p_for_grid(&p, 32, 16), 1.0, 7);
    let g = basis.inverse(&s0.rho);
    let rt = basis.inverse(&basis.forward(&g).expect("forward"));
    let mut max_rt = 0.0_f64;
    for (x, y) in g.values.iter().zip(rt.values.iter()) {
        max_rt = max_rt.max((x - y).abs());
    }
    check("transform roundtrip", max_rt < 1e-12 * g.max_abs().max(1e-300));

    if ok {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

fn p_for_grid(p: &Params, n_x: usize, n_y: usize) -> Params {
    Params {
        n_x,
        n_y,
        ..p.clone()
    }
}

fn cmd_rates(kappa: f64, c0: f64) -> u8 {
    if !(kappa > 0.0) || c0 == 0.0 {
        eprintln!("config error: need kappa > 0 and c0 != 0");
        return EXIT_CONFIG;
    }
    let p = Params {
        kappa,
        c0,
        l_x: 2.0 * std::f64::consts::PI,
        n_x: 8,
        n_y: 8,
        k_order: 7,
    };
    let alpha = background_decay_rate(&p);
    let c_kappa = spectral_abscissa(&p);
    let beta = alpha.min(0.5 * c_kappa);
    println!(
        "{}",
        serde_json::json!({ "alpha": alpha, "c_kappa": c_kappa, "beta": beta })
    );
    EXIT_OK
}

fn main() -> ExitCode {
    // keep lines flushed even when piped
    let code = match Cli::parse().command {
        Commands::Run {
            config,
            out_dir,
            allow_low_order,
        } => cmd_run(&config, &out_dir, allow_low_order),
        Commands::Report { run_dir } => cmd_report(&run_dir),
        Commands::Selftest => cmd_selftest(),
        Commands::Rates { kappa, c0 } => cmd_rates(kappa, c0),
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
