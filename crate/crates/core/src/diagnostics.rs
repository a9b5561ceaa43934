//! Energy functionals, the weighted energy, cancellation-identity checks,
//! decay-rate fitting and bootstrap-bound monitoring.
//!
//! `E_k^2 = 1/2 (||u||_{H^k}^2 + ||d_t u||_{H^k}^2 + ||rho||_{H^{k+1}}^2
//! + ||d_t rho||_{H^{k+1}}^2)`; the time derivatives come from the cached
//! PDE right side, not finite differences. The weighted energy
//! `Gamma_k^2 = 1/2 int (1 + dx rho)(|grad^k u|^2 + |grad^k grad_perp rho|^2)`
//! uses the order-k derivative tensor with multinomial multiplicities.

use crate::background::{cos_profile_hk_norm, eval_background, BackgroundModal, Params};
use crate::basis::{Basis, DiffAxis, GridField, Parity, Spectrum};
use crate::error::SimError;
use crate::sim::PerturbationState;

/// One diagnostics row of a trajectory.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub t: f64,
    pub e_k: f64,
    pub e_4: f64,
    /// `Gamma_{k+1}`; NaN when the weight failed positivity.
    pub gamma_kp1: f64,
    pub gamma_ok: bool,
    pub norm_u_hk: f64,
    pub norm_dtu_hk: f64,
    pub norm_rho_hkp1: f64,
    pub norm_dtrho_hkp1: f64,
    pub smallness_ok: bool,
    pub smallness_value: f64,
    pub bg_phi_norm: f64,
    pub bg_psi_norm: f64,
    /// Divergence residual relative to the velocity norm.
    pub div_residual: f64,
}

/// Log-linear least-squares decay fit: `value ~ exp(intercept - rate t)`.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Which quadratic cancellation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    /// `C0` coupling vs the `grad_perp rho` part of the energy.
    C0Coupling,
    /// Elastic term vs the transport commutator at derivative order k.
    ElasticTransport,
    /// Background `dy(Phi)` couplings at derivative order k.
    BackgroundCoupling,
    /// Same as [`Identity::BackgroundCoupling`] on the time derivatives.
    BackgroundCouplingDt,
}

fn binom(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn deriv(s: &Spectrum, ax: usize, ay: usize) -> Spectrum {
    let mut out = s.clone();
    if ax > 0 {
        out = out.differentiate(DiffAxis::X, ax);
    }
    if ay > 0 {
        out = out.differentiate(DiffAxis::Y, ay);
    }
    out
}

fn velocity_norm(u1: &Spectrum, u2: &Spectrum, k: usize) -> f64 {
    (u1.sobolev_norm(k).powi(2) + u2.sobolev_norm(k).powi(2)).sqrt()
}

fn energy_from_norms(u: f64, dtu: f64, rho: f64, dtrho: f64) -> f64 {
    (0.5 * (u * u + dtu * dtu + rho * rho + dtrho * dtrho)).sqrt()
}

/// `E_k` per the energy definition; requires `cached_rhs`.
pub fn energy_ek(s: &PerturbationState, k: usize) -> Result<f64, SimError> {
    let (du1, du2, drho) = s.cached_rhs.as_ref().ok_or(SimError::MissingRhsCache)?;
    Ok(energy_from_norms(
        velocity_norm(&s.u1, &s.u2, k),
        velocity_norm(du1, du2, k),
        s.rho.sobolev_norm(k + 1),
        drho.sobolev_norm(k + 1),
    ))
}

/// `Gamma_k` by grid quadrature of spectrally computed derivatives.
///
/// Errors with [`SimError::WeightNonPositive`] when `1 + dx rho <= 0`
/// somewhere on the grid.
pub fn weighted_gamma(s: &PerturbationState, k: usize, basis: &Basis) -> Result<f64, SimError> {
    let g_w = basis.inverse(&s.rho.differentiate(DiffAxis::X, 1));
    let min_weight = g_w.values.iter().fold(f64::INFINITY, |a, v| a.min(1.0 + v));
    if min_weight <= 0.0 {
        return Err(SimError::WeightNonPositive { min_weight });
    }
    let dy_rho = s.rho.differentiate(DiffAxis::Y, 1);
    let dx_rho = s.rho.differentiate(DiffAxis::X, 1);
    let fields = [&s.u1, &s.u2, &dy_rho, &dx_rho];
    let mut total = 0.0;
    for ax in 0..=k {
        let ay = k - ax;
        let c = binom(k, ax);
        for f in fields {
            let g = basis.inverse(&deriv(f, ax, ay));
            let mut integrand = GridField::zeros(Parity::EvenY, g.l_x, g.n_x(), g.n_y());
            for i in 0..g.n_x() {
                for m in 0..=g.n_y() {
                    let v = g.values[(i, m)];
                    integrand.values[(i, m)] = (1.0 + g_w.values[(i, m)]) * v * v;
                }
            }
            total += c * integrand.integrate();
        }
    }
    Ok((0.5 * total).sqrt())
}

fn inner(basis: &Basis, a: &Spectrum, b: &Spectrum) -> f64 {
    basis.inverse(a).mul(&basis.inverse(b)).integrate()
}

fn inner_weighted(basis: &Basis, a: &Spectrum, w: &GridField, b: &Spectrum) -> f64 {
    basis.inverse(a).mul(w).mul(&basis.inverse(b)).integrate()
}

fn background_identity(
    basis: &Basis,
    phi_y: &GridField,
    u1: &Spectrum,
    u2: &Spectrum,
    rho: &Spectrum,
    k: usize,
) -> f64 {
    let mut total = 0.0;
    for ax in 0..=k {
        let ay = k - ax;
        let c = binom(k, ax);
        let du1 = deriv(u1, ax, ay);
        let du2 = deriv(u2, ax, ay);
        total += c * inner_weighted(basis, &du1, phi_y, &deriv(rho, ax + 1, ay + 1));
        total -= c * inner_weighted(basis, &du2, phi_y, &deriv(rho, ax + 2, ay));
        total -= c * inner_weighted(basis, &deriv(rho, ax, ay + 1), phi_y, &deriv(u2, ax, ay + 1));
        total -= c * inner_weighted(basis, &deriv(rho, ax + 1, ay), phi_y, &deriv(u2, ax + 1, ay));
    }
    total
}

/// Evaluate one of the paper's quadratic cancellation combinations by grid
/// quadrature; the return value is the absolute residual (zero in exact
/// arithmetic for divergence-free, parity-correct states).
pub fn cancellation_check(
    s: &PerturbationState,
    bg: &BackgroundModal,
    which: Identity,
    k: usize,
    basis: &Basis,
) -> Result<f64, SimError> {
    let p_c0 = {
        // C0 only scales these identities; recover it from the background.
        bg.params.c0
    };
    let residual = match which {
        Identity::C0Coupling => {
            let dyy = s.rho.differentiate(DiffAxis::Y, 2);
            let dxy = deriv(&s.rho, 1, 1);
            let dy_rho = s.rho.differentiate(DiffAxis::Y, 1);
            let dx_rho = s.rho.differentiate(DiffAxis::X, 1);
            let dy_u1 = s.u1.differentiate(DiffAxis::Y, 1);
            let dx_u1 = s.u1.differentiate(DiffAxis::X, 1);
            p_c0 * (-inner(basis, &s.u1, &dyy) + inner(basis, &s.u2, &dxy)
                - inner(basis, &dy_rho, &dy_u1)
                - inner(basis, &dx_rho, &dx_u1))
        }
        Identity::ElasticTransport => {
            let g_dy_rho = basis.inverse(&s.rho.differentiate(DiffAxis::Y, 1));
            let g_dx_rho = basis.inverse(&s.rho.differentiate(DiffAxis::X, 1));
            let mut total = 0.0;
            for ax in 0..=k {
                let ay = k - ax;
                let c = binom(k, ax);
                let du1 = deriv(&s.u1, ax, ay);
                let du2 = deriv(&s.u2, ax, ay);
                // T1 + T2: elastic term paired with grad^k u
                total += c * inner_weighted(basis, &du1, &g_dy_rho, &deriv(&s.rho, ax + 1, ay + 1));
                total -= c * inner_weighted(basis, &du1, &g_dx_rho, &deriv(&s.rho, ax, ay + 2));
                total -= c * inner_weighted(basis, &du2, &g_dy_rho, &deriv(&s.rho, ax + 2, ay));
                total += c * inner_weighted(basis, &du2, &g_dx_rho, &deriv(&s.rho, ax + 1, ay + 1));
                // T3 + T4: transport commutator paired with grad^k grad_perp rho
                let r_y = deriv(&s.rho, ax, ay + 1);
                let r_x = deriv(&s.rho, ax + 1, ay);
                total -= c * inner_weighted(basis, &r_y, &g_dx_rho, &deriv(&s.u1, ax, ay + 1));
                total -= c * inner_weighted(basis, &r_y, &g_dy_rho, &deriv(&s.u2, ax, ay + 1));
                total -= c * inner_weighted(basis, &r_x, &g_dx_rho, &deriv(&s.u1, ax + 1, ay));
                total -= c * inner_weighted(basis, &r_x, &g_dy_rho, &deriv(&s.u2, ax + 1, ay));
            }
            total
        }
        Identity::BackgroundCoupling => {
            let prof = eval_background(bg, s.t);
            let mut phi_y = GridField::zeros(Parity::OddY, s.u1.l_x, s.u1.n_x, s.u1.n_y);
            for i in 0..phi_y.n_x() {
                for m in 0..=phi_y.n_y() {
                    phi_y.values[(i, m)] = prof.dphi_dy_grid[m];
                }
            }
            background_identity(basis, &phi_y, &s.u1, &s.u2, &s.rho, k)
        }
        Identity::BackgroundCouplingDt => {
            let (du1, du2, drho) = s.cached_rhs.as_ref().ok_or(SimError::MissingRhsCache)?;
            let prof = eval_background(bg, s.t);
            let mut phi_y = GridField::zeros(Parity::OddY, s.u1.l_x, s.u1.n_x, s.u1.n_y);
            for i in 0..phi_y.n_x() {
                for m in 0..=phi_y.n_y() {
                    phi_y.values[(i, m)] = prof.dphi_dy_grid[m];
                }
            }
            background_identity(basis, &phi_y, du1, du2, drho, k)
        }
    };
    Ok(residual.abs())
}

/// Least-squares fit of `log(value)` against `t` inside the window.
pub fn fit_decay(samples: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, SimError> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .copied()
        .collect();
    if pts.iter().any(|(_, v)| *v <= 0.0) {
        return Err(SimError::FitError(
            "non-positive energy sample in fit window".into(),
        ));
    }
    if pts.len() < 5 {
        return Err(SimError::FitError(format!(
            "too few samples in fit window ({} < 5)",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let y = v.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let denom = n * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(SimError::FitError("degenerate time axis".into()));
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    let mean_y = sy / n;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(t, v) in &pts {
        let y = v.ln();
        let fit = intercept + slope * t;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        window,
    })
}

/// Verdict of the bootstrap bound `E_4(t) <= 4 M0 e^{-beta t}`.
#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub bound_satisfied: bool,
    pub max_ratio: f64,
}

pub fn bootstrap_monitor(e4_series: &[(f64, f64)], m0: f64, beta: f64) -> BootstrapReport {
    assert!(m0 > 0.0, "bootstrap monitor needs M0 > 0");
    assert!(beta > 0.0, "bootstrap monitor needs beta > 0");
    let max_ratio = e4_series
        .iter()
        .map(|&(t, e)| e / (4.0 * m0 * (-beta * t).exp()))
        .fold(0.0_f64, f64::max);
    BootstrapReport {
        bound_satisfied: max_ratio <= 1.0,
        max_ratio,
    }
}

/// Max over interior samples of `(dE_k^2/dt) / ((E_k^2 + Gamma^2)(E_4 +
/// background norms))` with centered differences; reported, never
/// asserted.
pub fn differential_inequality_ratio(reports: &[EnergyReport]) -> f64 {
    let mut max_ratio = 0.0_f64;
    for w in reports.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let dt = c.t - a.t;
        if dt <= 0.0 || !b.gamma_ok {
            continue;
        }
        let de2 = (c.e_k * c.e_k - a.e_k * a.e_k) / dt;
        let denom =
            (b.e_k * b.e_k + b.gamma_kp1 * b.gamma_kp1) * (b.e_4 + b.bg_phi_norm + b.bg_psi_norm);
        if denom > 1e-300 {
            max_ratio = max_ratio.max(de2.abs() / denom);
        }
    }
    max_ratio
}

/// Assemble the full diagnostics row for the state (needs `cached_rhs`).
pub fn report(
    s: &PerturbationState,
    bg: &BackgroundModal,
    p: &Params,
) -> Result<EnergyReport, SimError> {
    let k = p.k_order;
    let (du1, du2, drho) = s.cached_rhs.as_ref().ok_or(SimError::MissingRhsCache)?;
    let basis = Basis::new(p.n_x, p.n_y, p.l_x);
    let norm_u_hk = velocity_norm(&s.u1, &s.u2, k);
    let norm_dtu_hk = velocity_norm(du1, du2, k);
    let norm_rho_hkp1 = s.rho.sobolev_norm(k + 1);
    let norm_dtrho_hkp1 = drho.sobolev_norm(k + 1);
    let e_k = energy_from_norms(norm_u_hk, norm_dtu_hk, norm_rho_hkp1, norm_dtrho_hkp1);
    let e_4 = energy_ek(s, 4)?;
    let (gamma_kp1, gamma_ok) = match weighted_gamma(s, k + 1, &basis) {
        Ok(g) => (g, true),
        Err(SimError::WeightNonPositive { .. }) => (f64::NAN, false),
        Err(e) => return Err(e),
    };
    let smallness_value = s.rho.differentiate(DiffAxis::X, 1).sobolev_norm(2);
    let prof = eval_background(bg, s.t);
    let vel_norm = (s.u1.l2_norm().powi(2) + s.u2.l2_norm().powi(2)).sqrt();
    let div_residual = if vel_norm > 0.0 {
        s.divergence_norm() / vel_norm
    } else {
        0.0
    };
    Ok(EnergyReport {
        t: s.t,
        e_k,
        e_4,
        gamma_kp1,
        gamma_ok,
        norm_u_hk,
        norm_dtu_hk,
        norm_rho_hkp1,
        norm_dtrho_hkp1,
        smallness_ok: smallness_value < 0.25,
        smallness_value,
        bg_phi_norm: cos_profile_hk_norm(&prof.phi, k + 3),
        bg_psi_norm: cos_profile_hk_norm(&prof.psi, k + 2),
        div_residual,
    })
}
