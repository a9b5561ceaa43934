//! Boundary-compatible spectral representation on `[0, L_x) x [0, 1]`.
//!
//! Fields are expanded in a Fourier basis `exp(i xi_j x)` in x (periodic,
//! `xi_j = 2 pi j / L_x`) and in `cos(q pi y)` or `sin(q pi y)` in y,
//! depending on parity. Cosine fields have all odd y-derivatives vanishing
//! at `y = 0, 1`; sine fields vanish there together with all even
//! y-derivatives. Products follow the even/odd extension to y-period 2, so
//! parity algebra (even*even = even, even*odd = odd, odd*odd = even) is
//! exact on the grid.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::SimError;

/// Parity of a scalar field in the wall-normal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Cosine expansion `cos(q pi y)`, `q >= 0`.
    EvenY,
    /// Sine expansion `sin(q pi y)`, `q >= 1`.
    OddY,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::EvenY
        } else {
            Parity::OddY
        }
    }

    /// Parity after one y-derivative.
    pub fn flipped(self) -> Parity {
        match self {
            Parity::EvenY => Parity::OddY,
            Parity::OddY => Parity::EvenY,
        }
    }
}

/// Differentiation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffAxis {
    X,
    Y,
}

/// Coefficients of a scalar field on the mixed Fourier x cosine/sine basis.
///
/// `coeffs[(j, q)]` multiplies `exp(i xi_j x) * phi_q(y)` where `phi_q` is
/// `cos(q pi y)` or `sin(q pi y)` by parity. The row index `j` runs in FFT
/// order: wavenumber `j` for `j < n_x/2`, `j - n_x` otherwise. Real fields
/// obey the Hermitian symmetry `coeffs(-j, q) = conj(coeffs(j, q))`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub parity: Parity,
    pub l_x: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub coeffs: Array2<Complex64>,
}

/// Real samples on the tensor grid `x_i = i L_x / n_x`, `y_m = m / n_y`.
#[derive(Debug, Clone)]
pub struct GridField {
    pub parity: Parity,
    pub l_x: f64,
    pub values: Array2<f64>,
}

impl Spectrum {
    pub fn zeros(parity: Parity, l_x: f64, n_x: usize, n_y: usize) -> Self {
        Spectrum {
            parity,
            l_x,
            n_x,
            n_y,
            coeffs: Array2::zeros((n_x, n_y + 1)),
        }
    }

    /// Signed x-wavenumber index of FFT row `j`.
    pub fn j_signed(&self, j: usize) -> i64 {
        if j < self.n_x / 2 {
            j as i64
        } else {
            j as i64 - self.n_x as i64
        }
    }

    /// x-wavenumber `xi_j = 2 pi j / L_x` of FFT row `j`.
    pub fn xi(&self, j: usize) -> f64 {
        2.0 * PI * self.j_signed(j) as f64 / self.l_x
    }

    /// y-wavenumber `k_q = q pi`.
    pub fn k_q(q: usize) -> f64 {
        q as f64 * PI
    }

    /// Spectral differentiation; parity flips once per y-derivative.
    pub fn differentiate(&self, axis: DiffAxis, order: usize) -> Spectrum {
        assert!(order >= 1, "derivative order must be >= 1");
        match axis {
            DiffAxis::X => {
                let mut out = self.clone();
                for j in 0..self.n_x {
                    let factor = Complex64::new(0.0, self.xi(j)).powu(order as u32);
                    for q in 0..=self.n_y {
                        out.coeffs[(j, q)] = self.coeffs[(j, q)] * factor;
                    }
                }
                out
            }
            DiffAxis::Y => {
                let mut out = self.clone();
                for _ in 0..order {
                    out = out.diff_y_once();
                }
                out
            }
        }
    }

    // cos(q pi y) -> -k_q sin(q pi y); sin(q pi y) -> k_q cos(q pi y)
    fn diff_y_once(&self) -> Spectrum {
        let mut out = Spectrum::zeros(self.parity.flipped(), self.l_x, self.n_x, self.n_y);
        let sign = match self.parity {
            Parity::EvenY => -1.0,
            Parity::OddY => 1.0,
        };
        for j in 0..self.n_x {
            for q in 0..=self.n_y {
                out.coeffs[(j, q)] = self.coeffs[(j, q)] * (sign * Self::k_q(q));
            }
        }
        out
    }

    /// Parseval weight of mode `(j, q)` in the squared `L^2(Omega)` norm.
    fn l2_weight(&self, q: usize) -> f64 {
        match (self.parity, q) {
            (Parity::EvenY, 0) => self.l_x,
            (Parity::OddY, 0) => 0.0,
            _ => 0.5 * self.l_x,
        }
    }

    /// `H^k` norm with the full multi-index sum `sum_{|a| <= k} ||d^a f||^2`.
    pub fn sobolev_norm(&self, k: usize) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n_x {
            let xi2 = self.xi(j) * self.xi(j);
            for q in 0..=self.n_y {
                let c2 = self.coeffs[(j, q)].norm_sqr();
                if c2 == 0.0 {
                    continue;
                }
                let kq2 = Self::k_q(q) * Self::k_q(q);
                let mut mult = 0.0;
                let mut xp = 1.0;
                for ax in 0..=k {
                    let mut yp = 1.0;
                    for _ay in 0..=(k - ax) {
                        mult += xp * yp;
                        yp *= kq2;
                    }
                    xp *= xi2;
                }
                total += c2 * mult * self.l2_weight(q);
            }
        }
        total.sqrt()
    }

    /// `L^2(Omega)` norm (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    /// Evaluate the basis sum at an arbitrary point.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.n_x {
            let ex = Complex64::new(0.0, self.xi(j) * x).exp();
            let mut row = Complex64::new(0.0, 0.0);
            for q in 0..=self.n_y {
                let phi = match self.parity {
                    Parity::EvenY => (Self::k_q(q) * y).cos(),
                    Parity::OddY => (Self::k_q(q) * y).sin(),
                };
                row += self.coeffs[(j, q)] * phi;
            }
            acc += ex * row;
        }
        acc.re
    }

    /// Enforce `coeffs(-j, q) = conj(coeffs(j, q))` by averaging.
    pub fn hermitian_project(&mut self) {
        let n = self.n_x;
        for j in 1..n / 2 {
            for q in 0..=self.n_y {
                let a = self.coeffs[(j, q)];
                let b = self.coeffs[(n - j, q)];
                let avg = 0.5 * (a + b.conj());
                self.coeffs[(j, q)] = avg;
                self.coeffs[(n - j, q)] = avg.conj();
            }
        }
        for q in 0..=self.n_y {
            self.coeffs[(0, q)] = Complex64::new(self.coeffs[(0, q)].re, 0.0);
            if n % 2 == 0 {
                let j = n / 2;
                self.coeffs[(j, q)] = Complex64::new(self.coeffs[(j, q)].re, 0.0);
            }
        }
        if self.parity == Parity::OddY {
            for j in 0..n {
                self.coeffs[(j, 0)] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Spectrum {
        let mut out = self.clone();
        out.coeffs.mapv_inplace(|c| c * a);
        out
    }

    /// `self + a * other`; parities and sizes must match.
    pub fn axpy(&mut self, a: f64, other: &Spectrum) {
        assert_eq!(self.parity, other.parity);
        assert_eq!(self.coeffs.dim(), other.coeffs.dim());
        self.coeffs.zip_mut_with(&other.coeffs, |c, o| *c += a * o);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl GridField {
    pub fn zeros(parity: Parity, l_x: f64, n_x: usize, n_y: usize) -> Self {
        GridField {
            parity,
            l_x,
            values: Array2::zeros((n_x, n_y + 1)),
        }
    }

    pub fn n_x(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_y(&self) -> usize {
        self.values.dim().1 - 1
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        parity: Parity,
        l_x: f64,
        n_x: usize,
        n_y: usize,
        f: F,
    ) -> Self {
        let mut values = Array2::zeros((n_x, n_y + 1));
        for i in 0..n_x {
            let x = i as f64 * l_x / n_x as f64;
            for m in 0..=n_y {
                let y = m as f64 / n_y as f64;
                values[(i, m)] = f(x, y);
            }
        }
        GridField { parity, l_x, values }
    }

    /// Pointwise product; parity follows the product rule.
    pub fn mul(&self, other: &GridField) -> GridField {
        assert_eq!(self.values.dim(), other.values.dim());
        GridField {
            parity: self.parity.product(other.parity),
            l_x: self.l_x,
            values: &self.values * &other.values,
        }
    }

    /// Multiply by a y-profile sampled on the grid.
    pub fn mul_profile(&self, profile: &[f64], profile_parity: Parity) -> GridField {
        assert_eq!(profile.len(), self.n_y() + 1);
        let mut out = self.clone();
        out.parity = self.parity.product(profile_parity);
        for i in 0..self.n_x() {
            for m in 0..=self.n_y() {
                out.values[(i, m)] *= profile[m];
            }
        }
        out
    }

    /// Trapezoid-in-y, uniform-in-x quadrature of the field over `Omega`.
    pub fn integrate(&self) -> f64 {
        let (n_x, ny1) = self.values.dim();
        let n_y = ny1 - 1;
        let hx = self.l_x / n_x as f64;
        let hy = 1.0 / n_y as f64;
        let mut total = 0.0;
        for i in 0..n_x {
            for m in 0..=n_y {
                let wy = if m == 0 || m == n_y { 0.5 } else { 1.0 };
                total += self.values[(i, m)] * wy;
            }
        }
        total * hx * hy
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Cached transform plan for a fixed grid; safe to share read-only.
pub struct Basis {
    pub n_x: usize,
    pub n_y: usize,
    pub l_x: f64,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    // cos_tab[(q, m)] = cos(pi q m / n_y), sin_tab likewise
    cos_tab: Array2<f64>,
    sin_tab: Array2<f64>,
}

impl Basis {
    pub fn new(n_x: usize, n_y: usize, l_x: f64) -> Self {
        assert!(n_x >= 2 && n_x % 2 == 0, "n_x must be even and >= 2");
        assert!(n_y >= 2, "n_y must be >= 2");
        assert!(l_x > 0.0);
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n_x);
        let fft_inv = planner.plan_fft_inverse(n_x);
        let mut cos_tab = Array2::zeros((n_y + 1, n_y + 1));
        let mut sin_tab = Array2::zeros((n_y + 1, n_y + 1));
        for q in 0..=n_y {
            for m in 0..=n_y {
                let arg = PI * (q * m) as f64 / n_y as f64;
                cos_tab[(q, m)] = arg.cos();
                sin_tab[(q, m)] = arg.sin();
            }
        }
        Basis {
            n_x,
            n_y,
            l_x,
            fft_fwd,
            fft_inv,
            cos_tab,
            sin_tab,
        }
    }

    pub fn zero_spectrum(&self, parity: Parity) -> Spectrum {
        Spectrum::zeros(parity, self.l_x, self.n_x, self.n_y)
    }

    pub fn zero_grid(&self, parity: Parity) -> GridField {
        GridField::zeros(parity, self.l_x, self.n_x, self.n_y)
    }

    /// Project grid samples onto the declared basis; exact for band-limited
    /// inputs.
    pub fn forward(&self, f: &GridField) -> Result<Spectrum, SimError> {
        let (gn_x, gny1) = f.values.dim();
        if gn_x != self.n_x || gny1 != self.n_y + 1 {
            return Err(SimError::GridMismatch {
                expected_nx: self.n_x,
                expected_ny: self.n_y,
                got_nx: gn_x,
                got_ny: gny1 - 1,
            });
        }
        if !f.is_finite() {
            return Err(SimError::NanDetected { t: f64::NAN });
        }
        // x-FFT per y-row, normalized by 1/n_x.
        let mut inter: Array2<Complex64> = Array2::zeros((self.n_x, self.n_y + 1));
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_x];
        for m in 0..=self.n_y {
            for i in 0..self.n_x {
                buf[i] = Complex64::new(f.values[(i, m)], 0.0);
            }
            self.fft_fwd.process(&mut buf);
            for j in 0..self.n_x {
                inter[(j, m)] = buf[j] / self.n_x as f64;
            }
        }
        // y-projection per x-mode.
        let n = self.n_y as f64;
        let mut out = self.zero_spectrum(f.parity);
        match f.parity {
            Parity::EvenY => {
                for j in 0..self.n_x {
                    for q in 0..=self.n_y {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m in 0..=self.n_y {
                            let w = if m == 0 || m == self.n_y { 0.5 } else { 1.0 };
                            acc += inter[(j, m)] * (w * self.cos_tab[(q, m)]);
                        }
                        let scale = if q == 0 || q == self.n_y { 1.0 / n } else { 2.0 / n };
                        out.coeffs[(j, q)] = acc * scale;
                    }
                }
            }
            Parity::OddY => {
                for j in 0..self.n_x {
                    for q in 1..self.n_y {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m in 1..self.n_y {
                            acc += inter[(j, m)] * self.sin_tab[(q, m)];
                        }
                        out.coeffs[(j, q)] = acc * (2.0 / n);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sample the basis sum on the grid.
    pub fn inverse(&self, s: &Spectrum) -> GridField {
        assert_eq!(s.n_x, self.n_x);
        assert_eq!(s.n_y, self.n_y);
        // y-synthesis per x-mode.
        let mut inter: Array2<Complex64> = Array2::zeros((self.n_x, self.n_y + 1));
        let tab = match s.parity {
            Parity::EvenY => &self.cos_tab,
            Parity::OddY => &self.sin_tab,
        };
        for j in 0..self.n_x {
            for m in 0..=self.n_y {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..=self.n_y {
                    acc += s.coeffs[(j, q)] * tab[(q, m)];
                }
                inter[(j, m)] = acc;
            }
        }
        // inverse x-FFT per y-row (rustfft inverse is unnormalized; the
        // forward already carried the 1/n_x).
        let mut out = self.zero_grid(s.parity);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_x];
        for m in 0..=self.n_y {
            for j in 0..self.n_x {
                buf[j] = inter[(j, m)];
            }
            self.fft_inv.process(&mut buf);
            for i in 0..self.n_x {
                out.values[(i, m)] = buf[i].re;
            }
        }
        out
    }
}
