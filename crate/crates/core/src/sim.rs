//! Pseudo-spectral time integration of the full perturbed system
//!
//! ```text
//! d_t rho = -u2 dy(Phi) - C0 u1 - (u.grad) rho - Psi dx(rho)
//! d_t u   = -(u.grad) u - (u2 dy(Psi), 0) - kappa u - Psi dx(u) - grad P
//!           + (grad_perp(rho).grad) grad_perp(rho) - (dx(rho) dyy(Phi), 0)
//!           + (dy(Phi) dxy(rho), -dy(Phi) dxx(rho)) - C0 (dyy(rho), -dxy(rho))
//! ```
//!
//! with `grad_perp(rho) = (dy rho, -dx rho)`. Quadratic terms are formed on
//! the grid (parity algebra is exact there), linear terms spectrally, and
//! the pressure is eliminated by a Leray projection of the complete
//! momentum right side. Time stepping is classical RK4, optionally with the
//! exact integrating factor `e^{-kappa dt}` for the damping.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::background::{eval_background, BackgroundModal, BackgroundProfiles, Params};
use crate::basis::{Basis, DiffAxis, GridField, Parity, Spectrum};
use crate::diagnostics::{self, EnergyReport};
use crate::error::SimError;
use crate::snapshot::Snapshot;

/// RK4 stability margin on the imaginary axis.
const RK4_IMAG_LIMIT: f64 = 2.8;

/// Spectral state of the perturbation with its cached time derivatives.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub u1: Spectrum,
    pub u2: Spectrum,
    pub rho: Spectrum,
    pub t: f64,
    pub cached_rhs: Option<(Spectrum, Spectrum, Spectrum)>,
}

impl PerturbationState {
    pub fn zeros(p: &Params) -> Self {
        PerturbationState {
            u1: Spectrum::zeros(Parity::EvenY, p.l_x, p.n_x, p.n_y),
            u2: Spectrum::zeros(Parity::OddY, p.l_x, p.n_x, p.n_y),
            rho: Spectrum::zeros(Parity::EvenY, p.l_x, p.n_x, p.n_y),
            t: 0.0,
            cached_rhs: None,
        }
    }

    /// `|| i xi u1 + dy u2 ||_{L^2}`, the divergence residual.
    pub fn divergence_norm(&self) -> f64 {
        let mut div = self.u1.differentiate(DiffAxis::X, 1);
        div.axpy(1.0, &self.u2.differentiate(DiffAxis::Y, 1));
        div.l2_norm()
    }

    /// `||u||_{H^k} + ||rho||_{H^{k+1}}`, the theorem's smallness quantity.
    pub fn amplitude(&self, k: usize) -> f64 {
        let u = (self.u1.sobolev_norm(k).powi(2) + self.u2.sobolev_norm(k).powi(2)).sqrt();
        u + self.rho.sobolev_norm(k + 1)
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite() && self.rho.is_finite()
    }
}

/// Integration controls around a shared [`Params`].
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: Params,
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub output_stride: usize,
    pub epsilon0: f64,
    /// Integrate the `-kappa u` term exactly (Lawson integrating factor).
    pub exact_damping: bool,
    /// Keep per-stride state snapshots in the trajectory.
    pub keep_states: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(SimError::InvalidParameter("t_end must be positive".into()));
        }
        if self.output_stride == 0 {
            return Err(SimError::InvalidParameter(
                "output_stride must be positive".into(),
            ));
        }
        if !(self.epsilon0 >= 0.0) {
            return Err(SimError::InvalidParameter(
                "epsilon0 must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunTermination {
    Completed,
    /// `||dx rho||_{H^2} >= 1/4` (theory hypothesis broken).
    SmallnessViolation { t: f64, value: f64 },
    /// NaN or CFL failure.
    NumericalAbort { t: f64, message: String },
}

/// Collected output of [`run`].
#[derive(Debug)]
pub struct Trajectory {
    pub reports: Vec<EnergyReport>,
    pub states: Vec<Snapshot>,
    pub termination: RunTermination,
    pub final_state: PerturbationState,
}

fn per_y_product(g: &GridField, profile: &[f64], profile_parity: Parity) -> GridField {
    g.mul_profile(profile, profile_parity)
}

/// Full right-hand side `(d_t u1, d_t u2, d_t rho)` at `s.t`.
///
/// Errors on NaN and on smallness violation `||dx rho||_{H^2} >= 1/4`.
pub fn rhs(
    s: &PerturbationState,
    bg: &BackgroundModal,
    p: &Params,
    basis: &Basis,
    dealias_products: bool,
) -> Result<(Spectrum, Spectrum, Spectrum), SimError> {
    if !s.is_finite() {
        return Err(SimError::NanDetected { t: s.t });
    }
    let dx_rho = s.rho.differentiate(DiffAxis::X, 1);
    let smallness = dx_rho.sobolev_norm(2);
    if smallness >= 0.25 {
        return Err(SimError::SmallnessViolation {
            t: s.t,
            value: smallness,
        });
    }
    let prof = eval_background(bg, s.t);

    let dy_rho = s.rho.differentiate(DiffAxis::Y, 1);
    let dxy_rho = dx_rho.differentiate(DiffAxis::Y, 1);
    let dxx_rho = s.rho.differentiate(DiffAxis::X, 2);
    let dyy_rho = s.rho.differentiate(DiffAxis::Y, 2);
    let dx_u1 = s.u1.differentiate(DiffAxis::X, 1);
    let dy_u1 = s.u1.differentiate(DiffAxis::Y, 1);
    let dx_u2 = s.u2.differentiate(DiffAxis::X, 1);
    let dy_u2 = s.u2.differentiate(DiffAxis::Y, 1);

    let g_u1 = basis.inverse(&s.u1);
    let g_u2 = basis.inverse(&s.u2);
    let g_dx_rho = basis.inverse(&dx_rho);
    let g_dy_rho = basis.inverse(&dy_rho);
    let g_dxy_rho = basis.inverse(&dxy_rho);
    let g_dxx_rho = basis.inverse(&dxx_rho);
    let g_dyy_rho = basis.inverse(&dyy_rho);
    let g_dx_u1 = basis.inverse(&dx_u1);
    let g_dy_u1 = basis.inverse(&dy_u1);
    let g_dx_u2 = basis.inverse(&dx_u2);
    let g_dy_u2 = basis.inverse(&dy_u2);

    // rho equation, grid part (all products land in EvenY).
    let mut rho_g = g_u2.mul_profile(&prof.dphi_dy_grid, Parity::OddY);
    rho_g.values += &g_u1.mul(&g_dx_rho).values;
    rho_g.values += &g_u2.mul(&g_dy_rho).values;
    rho_g.values += &per_y_product(&g_dx_rho, &prof.psi_grid, Parity::EvenY).values;
    rho_g.values.mapv_inplace(|v| -v);
    debug_assert_eq!(rho_g.parity, Parity::EvenY);

    // x-momentum, grid part (EvenY).
    let mut m1_g = g_u1.mul(&g_dx_u1);
    m1_g.values += &g_u2.mul(&g_dy_u1).values;
    m1_g.values += &g_u2.mul_profile(&prof.dpsi_dy_grid, Parity::OddY).values;
    m1_g.values += &per_y_product(&g_dx_u1, &prof.psi_grid, Parity::EvenY).values;
    m1_g.values.mapv_inplace(|v| -v);
    m1_g.values += &g_dy_rho.mul(&g_dxy_rho).values;
    m1_g.values -= &g_dx_rho.mul(&g_dyy_rho).values;
    m1_g.values -= &g_dx_rho
        .mul_profile(&prof.d2phi_dy2_grid, Parity::EvenY)
        .values;
    m1_g.values += &g_dxy_rho.mul_profile(&prof.dphi_dy_grid, Parity::OddY).values;
    debug_assert_eq!(m1_g.parity, Parity::EvenY);

    // y-momentum, grid part (OddY).
    let mut m2_g = g_u1.mul(&g_dx_u2);
    m2_g.values += &g_u2.mul(&g_dy_u2).values;
    m2_g.values += &per_y_product(&g_dx_u2, &prof.psi_grid, Parity::EvenY).values;
    m2_g.values.mapv_inplace(|v| -v);
    m2_g.values -= &g_dy_rho.mul(&g_dxx_rho).values;
    m2_g.values += &g_dx_rho.mul(&g_dxy_rho).values;
    m2_g.values -= &g_dxx_rho.mul_profile(&prof.dphi_dy_grid, Parity::OddY).values;
    debug_assert_eq!(m2_g.parity, Parity::OddY);

    let mut rho_rhs = basis.forward(&rho_g)?;
    let mut m1 = basis.forward(&m1_g)?;
    let mut m2 = basis.forward(&m2_g)?;
    if dealias_products {
        dealias_in_place(&mut rho_rhs);
        dealias_in_place(&mut m1);
        dealias_in_place(&mut m2);
    }

    // linear terms, exact in spectral space
    rho_rhs.axpy(-p.c0, &s.u1);
    m1.axpy(-p.kappa, &s.u1);
    m1.axpy(-p.c0, &dyy_rho);
    m2.axpy(-p.kappa, &s.u2);
    m2.axpy(p.c0, &dxy_rho);

    let p_hat = pressure_solve(&m1, &m2)?;
    apply_pressure_gradient(&mut m1, &mut m2, &p_hat);

    // Keep the motion inside the constraint space: the q = 0 means of u1
    // and rho are zero in any admissible state and must not be re-excited,
    // otherwise the post-step projection degrades the integrator to first
    // order. (The q = 0 row of m2 is structurally zero for a sine series.)
    for j in 0..m1.n_x {
        m1.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
        rho_rhs.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
    }

    for out in [&rho_rhs, &m1, &m2] {
        if !out.is_finite() {
            return Err(SimError::NanDetected { t: s.t });
        }
    }
    Ok((m1, m2, rho_rhs))
}

/// Pressure from the incompressibility constraint:
/// `P_hat = -(i xi R1 + (dy R2)_hat) / (xi^2 + k_q^2)`, mean-free gauge.
pub fn pressure_solve(r1: &Spectrum, r2: &Spectrum) -> Result<Spectrum, SimError> {
    if r1.parity != Parity::EvenY || r2.parity != Parity::OddY {
        return Err(SimError::InvalidParameter(
            "momentum rhs must be (even, odd)".into(),
        ));
    }
    let mut p_hat = Spectrum::zeros(Parity::EvenY, r1.l_x, r1.n_x, r1.n_y);
    for j in 0..r1.n_x {
        let xi = r1.xi(j);
        for q in 0..=r1.n_y {
            let k = Spectrum::k_q(q);
            let denom = xi * xi + k * k;
            if denom == 0.0 {
                continue; // (0,0): gauge choice P_hat = 0
            }
            // (dy R2)_hat on the cosine side is +k * R2_hat (sin -> cos).
            let div = Complex64::new(0.0, xi) * r1.coeffs[(j, q)] + k * r2.coeffs[(j, q)];
            p_hat.coeffs[(j, q)] = -div / denom;
        }
    }
    Ok(p_hat)
}

/// Subtract `grad P` from the momentum right side in place.
pub fn apply_pressure_gradient(r1: &mut Spectrum, r2: &mut Spectrum, p_hat: &Spectrum) {
    for j in 0..r1.n_x {
        let xi = r1.xi(j);
        for q in 0..=r1.n_y {
            let k = Spectrum::k_q(q);
            r1.coeffs[(j, q)] -= Complex64::new(0.0, xi) * p_hat.coeffs[(j, q)];
            // (dy P)_hat on the sine side is -k * P_hat (cos -> sin).
            r2.coeffs[(j, q)] += k * p_hat.coeffs[(j, q)];
        }
    }
}

fn dealias_in_place(s: &mut Spectrum) {
    let jcut = s.n_x as i64 / 3;
    let qcut = 2 * s.n_y / 3;
    for j in 0..s.n_x {
        let kill_j = s.j_signed(j).abs() > jcut;
        for q in 0..=s.n_y {
            if kill_j || q > qcut {
                s.coeffs[(j, q)] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// 2/3-rule truncation: zero all coefficients with `|j| > N_x/3` or
/// `q > 2 N_y / 3`.
pub fn dealias(s: &Spectrum) -> Spectrum {
    let mut out = s.clone();
    dealias_in_place(&mut out);
    out
}

/// Zero the y-means of `u1` and `rho` and Leray-project the velocity.
/// Idempotent.
pub fn project_constraints(s: &PerturbationState) -> PerturbationState {
    let mut out = s.clone();
    for j in 0..out.u1.n_x {
        out.u1.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
        out.rho.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
    }
    for j in 0..out.u2.n_x {
        out.u2.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
    }
    let p_hat = pressure_solve(&out.u1, &out.u2).expect("parities fixed by construction");
    apply_pressure_gradient(&mut out.u1, &mut out.u2, &p_hat);
    out
}

fn cfl_check(s: &PerturbationState, prof: &BackgroundProfiles, cfg: &SimConfig, basis: &Basis) -> Result<(), SimError> {
    let p = &cfg.params;
    let xi_max = std::f64::consts::PI * p.n_x as f64 / p.l_x;
    let k_max = std::f64::consts::PI * p.n_y as f64;
    let wave = p.c0.abs() * k_max;
    let g_u1 = basis.inverse(&s.u1);
    let g_u2 = basis.inverse(&s.u2);
    let psi_max = prof.psi_grid.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let advect = (g_u1.max_abs() + psi_max) * xi_max + g_u2.max_abs() * k_max;
    let dt_speed = cfg.dt * (wave + advect);
    if dt_speed > RK4_IMAG_LIMIT {
        return Err(SimError::CflViolation {
            t: s.t,
            dt_speed,
            limit: RK4_IMAG_LIMIT,
        });
    }
    Ok(())
}

type Triple = (Spectrum, Spectrum, Spectrum);

fn triple_axpy(acc: &mut Triple, a: f64, other: &Triple) {
    acc.0.axpy(a, &other.0);
    acc.1.axpy(a, &other.1);
    acc.2.axpy(a, &other.2);
}

/// Scale only the velocity components (the damping acts on `u`, not `rho`).
fn damp_scale(t: &Triple, factor: f64) -> Triple {
    (t.0.scaled(factor), t.1.scaled(factor), t.2.clone())
}

fn state_with(_s: &PerturbationState, t: f64, w: &Triple) -> PerturbationState {
    PerturbationState {
        u1: w.0.clone(),
        u2: w.1.clone(),
        rho: w.2.clone(),
        t,
        cached_rhs: None,
    }
}

/// Advance one step of size `cfg.dt`; afterwards the state is dealiased
/// (if enabled), constraint-projected, and carries a fresh `cached_rhs`.
pub fn step_rk4(
    s: &PerturbationState,
    bg: &BackgroundModal,
    cfg: &SimConfig,
    basis: &Basis,
) -> Result<PerturbationState, SimError> {
    let p = &cfg.params;
    let h = cfg.dt;
    if h == 0.0 {
        return Ok(s.clone());
    }
    let prof = eval_background(bg, s.t);
    cfl_check(s, &prof, cfg, basis)?;
    let w0: Triple = (s.u1.clone(), s.u2.clone(), s.rho.clone());
    let eval = |t: f64, w: &Triple| -> Result<Triple, SimError> {
        let st = state_with(s, t, w);
        let mut k = rhs(&st, bg, p, basis, cfg.dealias)?;
        if cfg.exact_damping {
            // strip the damping; the integrating factor carries it exactly
            k.0.axpy(p.kappa, &w.0);
            k.1.axpy(p.kappa, &w.1);
        }
        Ok(k)
    };

    let mut next = if cfg.exact_damping {
        // Lawson RK4 with E_tau = e^{-kappa tau} acting on the velocity.
        let e_h = (-p.kappa * h).exp();
        let e_half = (-p.kappa * 0.5 * h).exp();
        let k1 = eval(s.t, &w0)?;
        let mut a = w0.clone();
        triple_axpy(&mut a, 0.5 * h, &k1);
        let k2 = eval(s.t + 0.5 * h, &damp_scale(&a, e_half))?;
        let mut b = damp_scale(&w0, e_half);
        triple_axpy(&mut b, 0.5 * h, &k2);
        let k3 = eval(s.t + 0.5 * h, &b)?;
        let mut c = damp_scale(&w0, e_h);
        triple_axpy(&mut c, h, &damp_scale(&k3, e_half));
        let k4 = eval(s.t + h, &c)?;
        let mut out = damp_scale(&w0, e_h);
        triple_axpy(&mut out, h / 6.0, &damp_scale(&k1, e_h));
        let k23 = {
            let mut t = k2.clone();
            triple_axpy(&mut t, 1.0, &k3);
            damp_scale(&t, e_half)
        };
        triple_axpy(&mut out, h / 3.0, &k23);
        triple_axpy(&mut out, h / 6.0, &k4);
        out
    } else {
        let k1 = eval(s.t, &w0)?;
        let mut a = w0.clone();
        triple_axpy(&mut a, 0.5 * h, &k1);
        let k2 = eval(s.t + 0.5 * h, &a)?;
        let mut b = w0.clone();
        triple_axpy(&mut b, 0.5 * h, &k2);
        let k3 = eval(s.t + 0.5 * h, &b)?;
        let mut c = w0.clone();
        triple_axpy(&mut c, h, &k3);
        let k4 = eval(s.t + h, &c)?;
        let mut out = w0.clone();
        triple_axpy(&mut out, h / 6.0, &k1);
        triple_axpy(&mut out, h / 3.0, &k2);
        triple_axpy(&mut out, h / 3.0, &k3);
        triple_axpy(&mut out, h / 6.0, &k4);
        out
    };

    if cfg.dealias {
        dealias_in_place(&mut next.0);
        dealias_in_place(&mut next.1);
        dealias_in_place(&mut next.2);
    }
    let mut advanced = state_with(s, s.t + h, &next);
    advanced = project_constraints(&advanced);
    if !advanced.is_finite() {
        return Err(SimError::NanDetected { t: advanced.t });
    }
    let fresh = rhs(&advanced, bg, p, basis, cfg.dealias)?;
    advanced.cached_rhs = Some(fresh);
    Ok(advanced)
}

/// Step to `t_end`, emitting an [`EnergyReport`] every `output_stride`
/// steps (including the initial state); terminates early with a flagged
/// [`RunTermination`] on NaN, CFL, or smallness violation.
pub fn run(
    cfg: &SimConfig,
    bg: &BackgroundModal,
    init: PerturbationState,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let p = &cfg.params;
    let basis = Basis::new(p.n_x, p.n_y, p.l_x);
    let mut state = project_constraints(&init);
    match rhs(&state, bg, p, &basis, cfg.dealias) {
        Ok(r) => state.cached_rhs = Some(r),
        Err(e) => return Err(e),
    }
    let mut reports = Vec::new();
    let mut states = Vec::new();
    let emit =
        |s: &PerturbationState, reports: &mut Vec<EnergyReport>, states: &mut Vec<Snapshot>| {
            if let Ok(rep) = diagnostics::report(s, bg, p) {
                reports.push(rep);
            }
            if cfg.keep_states {
                states.push(Snapshot {
                    t: s.t,
                    u1: s.u1.clone(),
                    u2: s.u2.clone(),
                    rho: s.rho.clone(),
                });
            }
        };
    emit(&state, &mut reports, &mut states);
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut termination = RunTermination::Completed;
    for step in 1..=n_steps {
        match step_rk4(&state, bg, cfg, &basis) {
            Ok(next) => state = next,
            Err(SimError::SmallnessViolation { t, value }) => {
                termination = RunTermination::SmallnessViolation { t, value };
                break;
            }
            Err(e @ (SimError::NanDetected { .. } | SimError::CflViolation { .. })) => {
                let t = state.t;
                termination = RunTermination::NumericalAbort {
                    t,
                    message: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        }
        if step % cfg.output_stride == 0 || step == n_steps {
            emit(&state, &mut reports, &mut states);
        }
    }
    Ok(Trajectory {
        reports,
        states,
        termination,
        final_state: state,
    })
}

/// Seeded band-limited random initial data: prescribed parities, zero
/// y-means, divergence-free, rescaled so `||u||_{H^k} + ||rho||_{H^{k+1}}`
/// equals `epsilon0`. Deterministic for a given seed (generator v1).
pub fn random_initial_state(p: &Params, epsilon0: f64, seed: u64) -> PerturbationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jcut = (p.n_x / 6).max(1) as i64;
    let qcut = (p.n_y / 4).max(2);
    let mut fill = |s: &mut Spectrum| {
        for j in 0..s.n_x {
            let js = s.j_signed(j).abs();
            for q in 0..=s.n_y {
                if js > jcut || q > qcut || (s.parity == Parity::OddY && q == 0) {
                    continue;
                }
                let decay = (-0.4 * (js as f64 + q as f64)).exp();
                s.coeffs[(j, q)] = Complex64::new(
                    rng.gen_range(-1.0..1.0) * decay,
                    rng.gen_range(-1.0..1.0) * decay,
                );
            }
        }
        s.hermitian_project();
    };
    let mut state = PerturbationState::zeros(p);
    fill(&mut state.u1);
    fill(&mut state.u2);
    fill(&mut state.rho);
    let mut state = project_constraints(&state);
    let amp = state.amplitude(p.k_order);
    if amp > 0.0 && epsilon0 > 0.0 {
        let scale = epsilon0 / amp;
        state.u1 = state.u1.scaled(scale);
        state.u2 = state.u2.scaled(scale);
        state.rho = state.rho.scaled(scale);
    } else if epsilon0 == 0.0 {
        state = PerturbationState::zeros(p);
    }
    state
}
