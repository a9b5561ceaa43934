//! Independent reference implementations used only for validation:
//! fixed-step RK4 integration, a scaling-and-squaring matrix exponential,
//! and finite-difference Sobolev norms on the grid.
//!
//! These ship in the library (not test-only) so the CLI `selftest`
//! subcommand can run the cross-checks on user hardware.

use nalgebra::DMatrix;

use crate::basis::{GridField, Parity};
use crate::error::SimError;

/// A deterministic, side-effect-free ODE initial value problem.
pub struct OdeProblem<'a> {
    pub dimension: usize,
    pub rhs: &'a dyn Fn(f64, &[f64]) -> Vec<f64>,
    pub y0: Vec<f64>,
    pub t_span: (f64, f64),
}

/// Classical fixed-step RK4; the final partial step is shortened to land
/// exactly on `t1`.
pub fn rk4_reference(p: &OdeProblem, dt: f64) -> Result<Vec<f64>, SimError> {
    let (t0, t1) = p.t_span;
    assert!(dt > 0.0 && dt <= t1 - t0, "dt must satisfy 0 < dt <= t1 - t0");
    let mut t = t0;
    let mut y = p.y0.clone();
    let n = p.dimension;
    assert_eq!(y.len(), n);
    while t < t1 - 1e-14 * (1.0 + t1.abs()) {
        let h = dt.min(t1 - t);
        let k1 = (p.rhs)(t, &y);
        let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
        let k2 = (p.rhs)(t + 0.5 * h, &y2);
        let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
        let k3 = (p.rhs)(t + 0.5 * h, &y3);
        let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
        let k4 = (p.rhs)(t + h, &y4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NanDetected { t });
        }
        t += h;
    }
    Ok(y)
}

/// `exp(M t)` by scaling-and-squaring with a diagonal Pade(6,6) approximant.
pub fn expm_reference(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let a = m * t;
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    // Scale so the Pade argument is comfortably inside its accuracy radius.
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let b = &a / 2f64.powi(s as i32);

    // Pade(6,6): c_k = c_{k-1} * (m-k+1) / ((2m-k+1) k), m = 6.
    let deg = 6usize;
    let mut coeff = vec![1.0_f64; deg + 1];
    for k in 1..=deg {
        coeff[k] =
            coeff[k - 1] * (deg - k + 1) as f64 / (((2 * deg - k + 1) * k) as f64);
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut pow = eye.clone();
    let mut num = &eye * coeff[0];
    let mut den = &eye * coeff[0];
    for (k, &c) in coeff.iter().enumerate().skip(1) {
        pow = &pow * &b;
        num += &pow * c;
        if k % 2 == 0 {
            den += &pow * c;
        } else {
            den -= &pow * c;
        }
    }
    let mut result = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is singular; matrix norm too large");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Sobolev norm on the grid via 4th-order finite differences (parity-aware
/// reflection at the walls) and trapezoid/periodic quadrature. Agrees with
/// the spectral norm to `O(h^4)`.
pub fn quadrature_norm(f: &GridField, k: usize) -> Result<f64, SimError> {
    if f.n_y() + 1 < 9 {
        return Err(SimError::InvalidParameter(
            "quadrature_norm needs at least 9 wall-normal points".into(),
        ));
    }
    let mut total = 0.0;
    // d^a f for ax + ay <= k, differentiating y first then x.
    let mut dy_pows: Vec<GridField> = vec![f.clone()];
    for _ in 0..k {
        let last = dy_pows.last().unwrap();
        dy_pows.push(fd_dy(last));
    }
    for ay in 0..=k {
        let mut g = dy_pows[ay].clone();
        total += g.mul(&g).integrate();
        for _ax in 1..=(k - ay) {
            g = fd_dx(&g);
            total += g.mul(&g).integrate();
        }
    }
    Ok(total.sqrt())
}

/// 4th-order centered x-derivative (periodic).
pub fn fd_dx(f: &GridField) -> GridField {
    let n_x = f.n_x();
    let n_y = f.n_y();
    let h = f.l_x / n_x as f64;
    let mut out = f.clone();
    for m in 0..=n_y {
        for i in 0..n_x {
            let ip1 = f.values[((i + 1) % n_x, m)];
            let im1 = f.values[((i + n_x - 1) % n_x, m)];
            let ip2 = f.values[((i + 2) % n_x, m)];
            let im2 = f.values[((i + n_x - 2) % n_x, m)];
            out.values[(i, m)] = (8.0 * (ip1 - im1) - (ip2 - im2)) / (12.0 * h);
        }
    }
    out
}

/// 4th-order centered y-derivative using parity reflection ghost points;
/// flips the parity tag.
pub fn fd_dy(f: &GridField) -> GridField {
    let n_x = f.n_x();
    let n_y = f.n_y();
    let h = 1.0 / n_y as f64;
    let sample = |i: usize, m: i64| -> f64 {
        // Even/odd extension to y-period 2 around both walls.
        let (mm, sign) = reflect(m, n_y as i64, f.parity);
        sign * f.values[(i, mm as usize)]
    };
    let mut out = f.clone();
    out.parity = f.parity.flipped();
    for i in 0..n_x {
        for m in 0..=(n_y as i64) {
            let v = (8.0 * (sample(i, m + 1) - sample(i, m - 1))
                - (sample(i, m + 2) - sample(i, m - 2)))
                / (12.0 * h);
            out.values[(i, m as usize)] = v;
        }
    }
    out
}

fn reflect(m: i64, n: i64, parity: Parity) -> (i64, f64) {
    let mut m = m;
    let mut sign = 1.0;
    loop {
        if m < 0 {
            m = -m;
            if parity == Parity::OddY {
                sign = -sign;
            }
        } else if m > n {
            m = 2 * n - m;
            if parity == Parity::OddY {
                sign = -sign;
            }
        } else {
            return (m, sign);
        }
    }
}
