//! Exact evolution of the linearized system around the flat background.
//!
//! For each spectral mode `(xi, k)` the triple `(u1, u2, rho)` obeys
//! `w' = A w` with a matrix that becomes real after the substitution
//! `v2 = -i u2`:
//!
//! ```text
//!     A = [ -kappa      0    C0 k^2  ]
//!         [   0      -kappa  -C0 xi k]
//!         [  -C0        0      0     ]
//! ```
//!
//! The (1,3) block is a damped wave with discriminant
//! `delta = kappa^2 - 4 C0^2 k^2`; its exponential is written with
//! `cosh`/`sinhc` of `z^2 = delta t^2 / 4`, which is a single analytic
//! formula across the overdamped, critical and underdamped regimes (the
//! Taylor branch near `z^2 = 0` keeps full accuracy at `|delta| ~ 1e-8`).
//! Row 2 follows by a Duhamel integral done in closed form.

use nalgebra::Matrix3;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::background::Params;
use crate::basis::{Parity, Spectrum};
use crate::error::SimError;

/// Spectral data of one linearized mode.
#[derive(Debug, Clone)]
pub struct ModeMatrix {
    pub xi: f64,
    pub k: f64,
    pub kappa: f64,
    pub c0: f64,
    /// `kappa^2 - 4 C0^2 k^2`.
    pub delta: f64,
    /// Roots of the (1,3) wave block, `(-kappa +- sqrt(delta)) / 2`.
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Pure damping eigenvalue of row 2.
    pub lambda_damp: f64,
}

/// Build the mode data for wavenumbers `(xi, k)`.
pub fn mode_matrix(p: &Params, xi: f64, k: f64) -> ModeMatrix {
    let delta = p.kappa * p.kappa - 4.0 * p.c0 * p.c0 * k * k;
    let sq = Complex64::new(delta, 0.0).sqrt();
    let half = Complex64::new(-0.5 * p.kappa, 0.0);
    ModeMatrix {
        xi,
        k,
        kappa: p.kappa,
        c0: p.c0,
        delta,
        lambda_plus: half + 0.5 * sq,
        lambda_minus: half - 0.5 * sq,
        lambda_damp: -p.kappa,
    }
}

impl ModeMatrix {
    /// The real bridged system matrix.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            -self.kappa,
            0.0,
            self.c0 * self.k * self.k,
            0.0,
            -self.kappa,
            -self.c0 * self.xi * self.k,
            -self.c0,
            0.0,
            0.0,
        )
    }
}

/// `(cosh z, sinh(z)/z)` as analytic functions of `z^2` (negative `z^2`
/// gives `cos`/`sinc`).
fn cosh_shc(z2: f64) -> (f64, f64) {
    if z2 > 1e-4 {
        let z = z2.sqrt();
        (z.cosh(), z.sinh() / z)
    } else if z2 < -1e-4 {
        let w = (-z2).sqrt();
        (w.cos(), w.sin() / w)
    } else {
        // |z^2| <= 1e-4: three Taylor terms leave a remainder below 1e-17.
        let ch = 1.0 + z2 * (0.5 + z2 * (1.0 / 24.0 + z2 / 720.0));
        let shc = 1.0 + z2 * (1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 / 5040.0));
        (ch, shc)
    }
}

/// `exp(A t)` of the bridged mode matrix, in closed form.
pub fn propagator(m: &ModeMatrix, t: f64) -> Matrix3<f64> {
    let kappa = m.kappa;
    let c0 = m.c0;
    let k = m.k;
    let e_damp = (-kappa * t).exp();
    if k == 0.0 {
        // rho integrates the damped u1 directly.
        return Matrix3::new(
            e_damp,
            0.0,
            0.0,
            0.0,
            e_damp,
            0.0,
            c0 / kappa * (e_damp - 1.0),
            0.0,
            1.0,
        );
    }
    let r = -0.5 * kappa;
    let z2 = 0.25 * m.delta * t * t;
    let (ch, shc) = cosh_shc(z2);
    let ert = (r * t).exp();
    let ts = t * shc * ert;
    let e11 = ert * ch + r * ts;
    let e13 = c0 * k * k * ts;
    let e31 = -c0 * ts;
    let e33 = ert * ch - r * ts;
    let p23 = -c0 * m.xi * k * ts;
    let p21 = -(m.xi / k) * (e11 - e_damp);
    Matrix3::new(e11, 0.0, e13, p21, e_damp, p23, e31, 0.0, e33)
}

/// Growth bound of the linear semigroup: the slowest decay over all modes,
/// attained at `(xi, k) = (0, pi)`.
pub fn spectral_abscissa(p: &Params) -> f64 {
    let delta1 = p.kappa * p.kappa - 4.0 * p.c0 * p.c0 * PI * PI;
    if delta1 >= 0.0 {
        0.5 * (p.kappa - delta1.sqrt())
    } else {
        0.5 * p.kappa
    }
}

fn apply_mode(e: &Matrix3<f64>, w: [Complex64; 3]) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            *o += e[(i, j)] * wj;
        }
    }
    out
}

fn check_triple(u1: &Spectrum, u2: &Spectrum, rho: &Spectrum) -> Result<(), SimError> {
    for (s, parity) in [(u1, Parity::EvenY), (u2, Parity::OddY), (rho, Parity::EvenY)] {
        if s.parity != parity {
            return Err(SimError::InvalidParameter(
                "linear state must be (even u1, odd u2, even rho)".into(),
            ));
        }
        if s.n_x != u1.n_x || s.n_y != u1.n_y {
            return Err(SimError::GridMismatch {
                expected_nx: u1.n_x,
                expected_ny: u1.n_y,
                got_nx: s.n_x,
                got_ny: s.n_y,
            });
        }
    }
    Ok(())
}

/// Advance `(u1, u2, rho)` by time `t` under the exact linear flow.
///
/// The bridge `v2 = -i u2` makes each mode matrix real; the inverse bridge
/// `u2 = i v2` restores the Hermitian symmetry of real fields.
pub fn evolve_linear(
    u1: &Spectrum,
    u2: &Spectrum,
    rho: &Spectrum,
    p: &Params,
    t: f64,
) -> Result<(Spectrum, Spectrum, Spectrum), SimError> {
    check_triple(u1, u2, rho)?;
    let mut out1 = u1.clone();
    let mut out2 = u2.clone();
    let mut out3 = rho.clone();
    let mi = Complex64::new(0.0, -1.0);
    let i = Complex64::new(0.0, 1.0);
    for j in 0..u1.n_x {
        let xi = u1.xi(j);
        for q in 0..=u1.n_y {
            let k = Spectrum::k_q(q);
            let m = mode_matrix(p, xi, k);
            let e = propagator(&m, t);
            let w = [
                u1.coeffs[(j, q)],
                mi * u2.coeffs[(j, q)],
                rho.coeffs[(j, q)],
            ];
            let v = apply_mode(&e, w);
            out1.coeffs[(j, q)] = v[0];
            out2.coeffs[(j, q)] = i * v[1];
            out3.coeffs[(j, q)] = v[2];
        }
    }
    Ok((out1, out2, out3))
}

/// One inhomogeneous step `w(t + h) = e^{Ah} w(t) + int_0^h e^{A(h-s)} Q ds`
/// with the integral approximated by Simpson's rule on forcing samples at
/// `t`, `t + h/2`, `t + h`.
pub fn duhamel_step(
    state: (&Spectrum, &Spectrum, &Spectrum),
    forcing: [(&Spectrum, &Spectrum, &Spectrum); 3],
    p: &Params,
    h: f64,
) -> Result<(Spectrum, Spectrum, Spectrum), SimError> {
    let (u1, u2, rho) = state;
    check_triple(u1, u2, rho)?;
    for f in &forcing {
        check_triple(f.0, f.1, f.2)?;
    }
    let mut out1 = u1.clone();
    let mut out2 = u2.clone();
    let mut out3 = rho.clone();
    let mi = Complex64::new(0.0, -1.0);
    let i = Complex64::new(0.0, 1.0);
    for j in 0..u1.n_x {
        let xi = u1.xi(j);
        for q in 0..=u1.n_y {
            let k = Spectrum::k_q(q);
            let m = mode_matrix(p, xi, k);
            let e_full = propagator(&m, h);
            let e_half = propagator(&m, 0.5 * h);
            let grab = |t: (&Spectrum, &Spectrum, &Spectrum)| {
                [
                    t.0.coeffs[(j, q)],
                    mi * t.1.coeffs[(j, q)],
                    t.2.coeffs[(j, q)],
                ]
            };
            let ew = apply_mode(&e_full, grab((u1, u2, rho)));
            let q0 = apply_mode(&e_full, grab(forcing[0]));
            let q1 = apply_mode(&e_half, grab(forcing[1]));
            let q2 = grab(forcing[2]);
            let mut v = [Complex64::new(0.0, 0.0); 3];
            for c in 0..3 {
                v[c] = ew[c] + h / 6.0 * (q0[c] + 4.0 * q1[c] + q2[c]);
            }
            out1.coeffs[(j, q)] = v[0];
            out2.coeffs[(j, q)] = i * v[1];
            out3.coeffs[(j, q)] = v[2];
        }
    }
    Ok((out1, out2, out3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{expm_reference, rk4_reference, OdeProblem};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn params(kappa: f64, c0: f64) -> Params {
        Params {
            kappa,
            c0,
            l_x: 2.0 * PI,
            n_x: 8,
            n_y: 8,
            k_order: 7,
        }
    }

    fn dense(m: &Matrix3<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let p = params(2.0, 0.3);
        for (xi, k) in [(0.0, 0.0), (1.0, PI), (-3.0, 2.0 * PI)] {
            let e = propagator(&mode_matrix(&p, xi, k), 0.0);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(e[(i, j)], expect, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn critical_mode_entry() {
        // delta = 0: E11 = (1 - kappa t / 2) e^{-kappa t / 2}.
        let kappa = 2.0;
        let k = PI;
        let c0 = kappa / (2.0 * k);
        let p = params(kappa, c0);
        let m = mode_matrix(&p, 0.0, k);
        assert!(m.delta.abs() < 1e-12);
        let t = 1.7;
        let e = propagator(&m, t);
        let expect = (1.0 - 0.5 * kappa * t) * (-0.5 * kappa * t).exp();
        assert_abs_diff_eq!(e[(0, 0)], expect, epsilon = 1e-14);
    }

    #[test]
    fn zero_x_and_y_mode_closed_form() {
        let p = params(1.0, 0.4);
        let t = 2.0_f64.ln();
        let e = propagator(&mode_matrix(&p, 0.0, 0.0), t);
        let oracle = expm_reference(&dense(&mode_matrix(&p, 0.0, 0.0).matrix()), t);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(e[(i, j)], oracle[(i, j)], epsilon = 1e-12);
            }
        }
        // (0, 1, 0) -> (0, 1/2, 0) at kappa = 1, t = ln 2
        assert_abs_diff_eq!(e[(1, 1)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[(2, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_expm_across_regimes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let kappa = rng.gen_range(0.2..5.0);
            let c0 = rng.gen_range(-2.0..2.0_f64);
            if c0.abs() < 0.05 {
                continue;
            }
            let p = params(kappa, c0);
            let xi = rng.gen_range(-4.0..4.0);
            let k = PI * rng.gen_range(0..5) as f64;
            let t = rng.gen_range(0.01..8.0);
            let m = mode_matrix(&p, xi, k);
            let e = propagator(&m, t);
            let oracle = expm_reference(&dense(&m.matrix()), t);
            for i in 0..3 {
                for j in 0..3 {
                    assert_abs_diff_eq!(e[(i, j)], oracle[(i, j)], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn near_critical_discriminant_stress() {
        // |delta| = 1e-8 on both sides; naive sqrt(delta) division would
        // lose half the digits here.
        let kappa = 2.0;
        let k = PI;
        for ddelta in [1e-8, -1e-8] {
            let c0 = ((kappa * kappa - ddelta) / (4.0 * k * k)).sqrt();
            let p = params(kappa, c0);
            let m = mode_matrix(&p, 1.5, k);
            assert_abs_diff_eq!(m.delta, ddelta, epsilon = 1e-14);
            for t in [0.1, 1.0, 10.0] {
                let e = propagator(&m, t);
                let oracle = expm_reference(&dense(&m.matrix()), t);
                for i in 0..3 {
                    for j in 0..3 {
                        assert_abs_diff_eq!(e[(i, j)], oracle[(i, j)], epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mode_eigenvalues_satisfy_characteristic_polynomial() {
        let p = params(1.3, 0.8);
        let m = mode_matrix(&p, 2.0, 2.0 * PI);
        for lam in [m.lambda_plus, m.lambda_minus] {
            // lambda^2 + kappa lambda + C0^2 k^2 = 0
            let res = lam * lam + p.kappa * lam + p.c0 * p.c0 * m.k * m.k;
            assert!(res.norm() < 1e-12);
        }
        assert_eq!(m.lambda_damp, -p.kappa);
    }

    fn random_state(p: &Params, seed: u64) -> (Spectrum, Spectrum, Spectrum) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut make = |parity| {
            let mut s = Spectrum::zeros(parity, p.l_x, p.n_x, p.n_y);
            for j in 0..p.n_x {
                if j == p.n_x / 2 {
                    // the Nyquist row cannot carry the odd-in-xi coupling
                    // of a real field; leave it empty as dealiasing would
                    continue;
                }
                for q in 0..=p.n_y {
                    if parity == Parity::OddY && (q == 0 || q == p.n_y) {
                        continue;
                    }
                    s.coeffs[(j, q)] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            s.hermitian_project();
            s
        };
        (
            make(Parity::EvenY),
            make(Parity::OddY),
            make(Parity::EvenY),
        )
    }

    #[test]
    fn state_evolution_matches_complex_rk4() {
        // Oracle integrates the *unbridged* complex system per mode:
        // u1' = -kappa u1 + C0 k^2 rho, u2' = -kappa u2 - i C0 xi k rho,
        // rho' = -C0 u1, split into six real components.
        let p = params(1.8, 0.45);
        let (u1, u2, rho) = random_state(&p, 42);
        let t = 1.3;
        let (v1, v2, v3) = evolve_linear(&u1, &u2, &rho, &p, t).unwrap();
        for j in 0..p.n_x {
            let xi = u1.xi(j);
            for q in 0..=p.n_y {
                let k = Spectrum::k_q(q);
                let (kappa, c0) = (p.kappa, p.c0);
                let rhs = move |_t: f64, y: &[f64]| {
                    let (a_re, a_im, b_re, b_im, r_re, r_im) =
                        (y[0], y[1], y[2], y[3], y[4], y[5]);
                    vec![
                        -kappa * a_re + c0 * k * k * r_re,
                        -kappa * a_im + c0 * k * k * r_im,
                        // -i C0 xi k rho: re <- + C0 xi k rho_im, im <- - C0 xi k rho_re
                        -kappa * b_re + c0 * xi * k * r_im,
                        -kappa * b_im - c0 * xi * k * r_re,
                        -c0 * a_re,
                        -c0 * a_im,
                    ]
                };
                let y0 = vec![
                    u1.coeffs[(j, q)].re,
                    u1.coeffs[(j, q)].im,
                    u2.coeffs[(j, q)].re,
                    u2.coeffs[(j, q)].im,
                    rho.coeffs[(j, q)].re,
                    rho.coeffs[(j, q)].im,
                ];
                let prob = OdeProblem {
                    dimension: 6,
                    rhs: &rhs,
                    y0,
                    t_span: (0.0, t),
                };
                let y = rk4_reference(&prob, 1e-3).unwrap();
                assert_abs_diff_eq!(v1.coeffs[(j, q)].re, y[0], epsilon = 1e-8);
                assert_abs_diff_eq!(v1.coeffs[(j, q)].im, y[1], epsilon = 1e-8);
                assert_abs_diff_eq!(v2.coeffs[(j, q)].re, y[2], epsilon = 1e-8);
                assert_abs_diff_eq!(v2.coeffs[(j, q)].im, y[3], epsilon = 1e-8);
                assert_abs_diff_eq!(v3.coeffs[(j, q)].re, y[4], epsilon = 1e-8);
                assert_abs_diff_eq!(v3.coeffs[(j, q)].im, y[5], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn evolution_preserves_hermitian_symmetry() {
        let p = params(2.0, 1.0 / (2.0 * PI));
        let (u1, u2, rho) = random_state(&p, 9);
        let (v1, v2, v3) = evolve_linear(&u1, &u2, &rho, &p, 2.5).unwrap();
        for s in [&v1, &v2, &v3] {
            let mut projected = s.clone();
            projected.hermitian_project();
            let mut diff = s.clone();
            diff.axpy(-1.0, &projected);
            assert!(diff.l2_norm() < 1e-13, "symmetry broken: {}", diff.l2_norm());
        }
        // real fields stay real on the grid
        let b = crate::basis::Basis::new(p.n_x, p.n_y, p.l_x);
        let g = b.inverse(&v2);
        assert!(g.is_finite());
    }

    #[test]
    fn duhamel_constant_forcing_matches_variation_of_constants() {
        // For constant Q and invertible A: w(h) = e^{Ah} w0 + A^{-1}(e^{Ah} - I) Q.
        // small C0 keeps ||A|| h well inside the Simpson accuracy radius
        let p = params(1.1, 0.05);
        let h = 0.05;
        let (u1, u2, rho) = random_state(&p, 77);
        let (f1, f2, f3) = random_state(&p, 78);
        let out = duhamel_step(
            (&u1, &u2, &rho),
            [(&f1, &f2, &f3), (&f1, &f2, &f3), (&f1, &f2, &f3)],
            &p,
            h,
        )
        .unwrap();
        let mi = Complex64::new(0.0, -1.0);
        for j in 0..p.n_x {
            let xi = u1.xi(j);
            for q in 1..=p.n_y {
                let k = Spectrum::k_q(q);
                let m = mode_matrix(&p, xi, k);
                let a = dense(&m.matrix());
                let e = expm_reference(&a, h);
                let phi = a
                    .clone()
                    .lu()
                    .solve(&(&e - DMatrix::<f64>::identity(3, 3)))
                    .unwrap();
                let w0 = [
                    u1.coeffs[(j, q)],
                    mi * u2.coeffs[(j, q)],
                    rho.coeffs[(j, q)],
                ];
                let qv = [
                    f1.coeffs[(j, q)],
                    mi * f2.coeffs[(j, q)],
                    f3.coeffs[(j, q)],
                ];
                let got = [
                    out.0.coeffs[(j, q)],
                    mi * out.1.coeffs[(j, q)],
                    out.2.coeffs[(j, q)],
                ];
                for i in 0..3 {
                    let mut expect = Complex64::new(0.0, 0.0);
                    for c in 0..3 {
                        expect += e[(i, c)] * w0[c] + phi[(i, c)] * qv[c];
                    }
                    // Simpson on one panel of e^{A(h-s)} Q is O((||A|| h)^4 h)
                    assert_abs_diff_eq!(got[i].re, expect.re, epsilon = 1e-5);
                    assert_abs_diff_eq!(got[i].im, expect.im, epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn abscissa_examples() {
        let p = params(2.0, 1.0 / (2.0 * PI));
        assert_abs_diff_eq!(
            spectral_abscissa(&p),
            (2.0 - 3.0_f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
        let p2 = params(2.0, 5.0);
        assert_abs_diff_eq!(spectral_abscissa(&p2), 1.0, epsilon = 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn semigroup_property(
            kappa in 0.3..4.0f64,
            c0 in 0.1..1.5f64,
            xi in -3.0..3.0f64,
            qk in 0usize..4,
            t in 0.0..3.0f64,
            s in 0.0..3.0f64,
        ) {
            let p = params(kappa, c0);
            let m = mode_matrix(&p, xi, qk as f64 * PI);
            let ets = propagator(&m, t + s);
            let comp = propagator(&m, t) * propagator(&m, s);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((ets[(i, j)] - comp[(i, j)]).abs() < 1e-11);
                }
            }
        }
    }
}
