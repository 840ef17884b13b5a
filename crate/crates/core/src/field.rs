//! Grids, field arithmetic and the discrete Bloch transform.
//!
//! Fields are complex 2-vector valued: the components `(vr, vi)` are the
//! real/imaginary parts of the scalar unknown `psi = vr + i*vi` when the
//! field is real-valued, and become genuinely complex after a Bloch
//! transform. Samples live on uniform grids; spectral representations are
//! materialized on demand.
//!
//! The discrete Bloch transform is a regrouping of the length-`M*N` DFT:
//! bin `m + l*M` carries the frequency `xi_m + 2*pi*l/T` with
//! `xi_m = 2*pi*m/(M*T)` in the Brillouin zone `[-pi/T, pi/T)`. With the
//! convention `f(x) = sum_m exp(i*xi_m*x) * w(xi_m, x)` the transform is
//! exactly invertible and Parseval holds in exact arithmetic.

use crate::error::{Error, Result};
use crate::fft::{bin, dft, idft, signed_mode};
use num_complex::Complex64;

pub type C64 = Complex64;

/// A cell-periodic 2-vector field sampled on `x_j = j*T/n` over `[0, T)`.
#[derive(Debug, Clone)]
pub struct CellField {
    pub n_points: usize,
    pub period: f64,
    pub vr: Vec<C64>,
    pub vi: Vec<C64>,
}

/// A 2-vector field on an `m_cells`-cell torus `[0, M*T)` with `M*N` samples.
#[derive(Debug, Clone)]
pub struct ExtendedField {
    pub m_cells: usize,
    pub n_per_cell: usize,
    pub period: f64,
    pub vr: Vec<C64>,
    pub vi: Vec<C64>,
}

/// The Bloch samples `w(xi_m, .)` of an extended field, `xi` ascending.
#[derive(Debug, Clone)]
pub struct BlochSampleSet {
    pub xi_values: Vec<f64>,
    pub samples: Vec<CellField>,
}

impl CellField {
    pub fn zeros(n_points: usize, period: f64) -> Self {
        CellField {
            n_points,
            period,
            vr: vec![C64::default(); n_points],
            vi: vec![C64::default(); n_points],
        }
    }

    /// Build from complex scalar samples: `vr = Re(psi)`, `vi = Im(psi)`.
    pub fn from_psi(psi: &[C64], period: f64) -> Self {
        CellField {
            n_points: psi.len(),
            period,
            vr: psi.iter().map(|c| C64::new(c.re, 0.0)).collect(),
            vi: psi.iter().map(|c| C64::new(c.im, 0.0)).collect(),
        }
    }

    /// Scalar view `psi = vr + i*vi`.
    pub fn psi(&self) -> Vec<C64> {
        self.vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| r + C64::i() * i)
            .collect()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|j| j as f64 * self.period / self.n_points as f64)
            .collect()
    }

    /// Discrete L2(0,T) norm.
    pub fn l2_norm(&self) -> f64 {
        let h = self.period / self.n_points as f64;
        let s: f64 = self
            .vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| r.norm_sqr() + i.norm_sqr())
            .sum();
        (h * s).sqrt()
    }

    fn check(&self) -> Result<()> {
        if self.vr.len() != self.n_points || self.vi.len() != self.n_points {
            return Err(Error::Structure(format!(
                "cell field declares {} points but holds {}/{} values",
                self.n_points,
                self.vr.len(),
                self.vi.len()
            )));
        }
        Ok(())
    }
}

impl ExtendedField {
    pub fn zeros(m_cells: usize, n_per_cell: usize, period: f64) -> Self {
        let total = m_cells * n_per_cell;
        ExtendedField {
            m_cells,
            n_per_cell,
            period,
            vr: vec![C64::default(); total],
            vi: vec![C64::default(); total],
        }
    }

    pub fn from_psi(psi: &[C64], m_cells: usize, n_per_cell: usize, period: f64) -> Self {
        assert_eq!(psi.len(), m_cells * n_per_cell);
        ExtendedField {
            m_cells,
            n_per_cell,
            period,
            vr: psi.iter().map(|c| C64::new(c.re, 0.0)).collect(),
            vi: psi.iter().map(|c| C64::new(c.im, 0.0)).collect(),
        }
    }

    pub fn total_points(&self) -> usize {
        self.m_cells * self.n_per_cell
    }

    pub fn domain_length(&self) -> f64 {
        self.m_cells as f64 * self.period
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.period / self.n_per_cell as f64;
        (0..self.total_points()).map(|j| j as f64 * h).collect()
    }

    pub fn psi(&self) -> Vec<C64> {
        self.vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| r + C64::i() * i)
            .collect()
    }

    /// Discrete L2(0, M*T) norm.
    pub fn l2_norm(&self) -> f64 {
        let h = self.period / self.n_per_cell as f64;
        let s: f64 = self
            .vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| r.norm_sqr() + i.norm_sqr())
            .sum();
        (h * s).sqrt()
    }

    /// Discrete L1(0, M*T) norm of the scalar view.
    pub fn l1_norm(&self) -> f64 {
        let h = self.period / self.n_per_cell as f64;
        self.vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| (r + C64::i() * i).norm() * h)
            .sum()
    }

    /// Sobolev norm sqrt(sum_{j<=order} ||d^j f||^2).
    pub fn sobolev_norm(&self, order: usize) -> Result<f64> {
        let mut s = 0.0;
        for j in 0..=order {
            let d = spectral_derivative_extended(self, j)?;
            s += d.l2_norm().powi(2);
        }
        Ok(s.sqrt())
    }

    pub fn axpy(&mut self, a: f64, other: &ExtendedField) {
        for (x, y) in self.vr.iter_mut().zip(&other.vr) {
            *x += a * y;
        }
        for (x, y) in self.vi.iter_mut().zip(&other.vi) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> ExtendedField {
        let mut out = self.clone();
        for x in out.vr.iter_mut().chain(out.vi.iter_mut()) {
            *x *= a;
        }
        out
    }

    pub fn sub(&self, other: &ExtendedField) -> ExtendedField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Max pointwise magnitude of the scalar view.
    pub fn max_abs(&self) -> f64 {
        self.vr
            .iter()
            .zip(&self.vi)
            .map(|(r, i)| (r + C64::i() * i).norm())
            .fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        let total = self.m_cells * self.n_per_cell;
        if self.vr.len() != total || self.vi.len() != total {
            return Err(Error::Structure(format!(
                "extended field declares {}x{} points but holds {}/{} values",
                self.m_cells,
                self.n_per_cell,
                self.vr.len(),
                self.vi.len()
            )));
        }
        Ok(())
    }
}

impl BlochSampleSet {
    pub fn m_cells(&self) -> usize {
        self.samples.len()
    }

    fn check(&self) -> Result<()> {
        if self.xi_values.len() != self.samples.len() {
            return Err(Error::Structure(format!(
                "{} xi values but {} samples",
                self.xi_values.len(),
                self.samples.len()
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::Structure("empty Bloch sample set".into()));
        }
        let n = self.samples[0].n_points;
        let t = self.samples[0].period;
        let m = self.samples.len();
        for (k, s) in self.samples.iter().enumerate() {
            s.check()?;
            if s.n_points != n || s.period != t {
                return Err(Error::Structure("inconsistent cell geometry".into()));
            }
            let expected = 2.0 * std::f64::consts::PI
                * (k as f64 - (m / 2) as f64)
                / (m as f64 * t);
            if (self.xi_values[k] - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                return Err(Error::Structure(format!(
                    "xi grid entry {k} is {} but the Bloch lattice requires {expected}",
                    self.xi_values[k]
                )));
            }
        }
        Ok(())
    }
}

/// Bloch frequencies `xi = 2*pi*m/(M*T)` for signed `m`, ascending.
pub fn bloch_frequencies(m_cells: usize, period: f64) -> Vec<f64> {
    let m = m_cells as i64;
    (-m / 2..(m + 1) / 2)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / (m_cells as f64 * period))
        .collect()
}

/// Decompose an extended field into its Bloch samples.
pub fn bloch_transform(f: &ExtendedField) -> Result<BlochSampleSet> {
    f.check()?;
    let m = f.m_cells;
    let n = f.n_per_cell;
    let total = m * n;
    let coeff_r = dft(&f.vr);
    let coeff_i = dft(&f.vi);

    let xi_values = bloch_frequencies(m, f.period);
    let m_signed: Vec<i64> = {
        let mm = m as i64;
        (-mm / 2..(mm + 1) / 2).collect()
    };

    let mut samples = Vec::with_capacity(m);
    for &ms in &m_signed {
        // Gather the coefficients at frequencies xi_m + 2*pi*l/T and
        // synthesize the cell function on the cell grid.
        let mut gr = vec![C64::default(); n];
        let mut gi = vec![C64::default(); n];
        for jl in 0..n {
            let l = signed_mode(jl, n);
            let b = bin(ms + l * m as i64, total);
            gr[jl] = coeff_r[b];
            gi[jl] = coeff_i[b];
        }
        samples.push(CellField {
            n_points: n,
            period: f.period,
            vr: idft(&gr),
            vi: idft(&gi),
        });
    }
    Ok(BlochSampleSet { xi_values, samples })
}

/// Reassemble an extended field from its Bloch samples.
pub fn inverse_bloch(s: &BlochSampleSet) -> Result<ExtendedField> {
    s.check()?;
    let m = s.samples.len();
    let n = s.samples[0].n_points;
    let period = s.samples[0].period;
    let total = m * n;
    let mm = m as i64;

    let mut coeff_r = vec![C64::default(); total];
    let mut coeff_i = vec![C64::default(); total];
    for (k, sample) in s.samples.iter().enumerate() {
        let ms = k as i64 - mm / 2;
        let gr = dft(&sample.vr);
        let gi = dft(&sample.vi);
        for jl in 0..n {
            let l = signed_mode(jl, n);
            let b = bin(ms + l * mm, total);
            coeff_r[b] = gr[jl];
            coeff_i[b] = gi[jl];
        }
    }
    Ok(ExtendedField {
        m_cells: m,
        n_per_cell: n,
        period,
        vr: idft(&coeff_r),
        vi: idft(&coeff_i),
    })
}

/// Normalized Bloch-coefficient sum matching `||f||^2_{L2}`.
///
/// The discrete samples absorb the Brillouin measure, so the continuum
/// identity `||f||^2 = 1/(2*pi*T) * int int |w|^2` becomes
/// `(M*T/N) * sum |w|^2` here.
pub fn parseval_sum(s: &BlochSampleSet) -> f64 {
    let m = s.samples.len() as f64;
    let n = s.samples[0].n_points as f64;
    let t = s.samples[0].period;
    let total: f64 = s
        .samples
        .iter()
        .flat_map(|c| c.vr.iter().zip(&c.vi))
        .map(|(r, i)| r.norm_sqr() + i.norm_sqr())
        .sum();
    m * t / n * total
}

fn derivative_in_place(values: &mut Vec<C64>, length: f64, order: usize) {
    if order == 0 {
        return;
    }
    let n = values.len();
    let mut coeff = dft(values);
    for (j, c) in coeff.iter_mut().enumerate() {
        let l = signed_mode(j, n);
        // Nyquist mode has no well-defined sign; zero it for odd orders.
        if order % 2 == 1 && n % 2 == 0 && l == -(n as i64) / 2 {
            *c = C64::default();
            continue;
        }
        let k = 2.0 * std::f64::consts::PI * l as f64 / length;
        *c *= (C64::i() * k).powi(order as i32);
    }
    *values = idft(&coeff);
}

/// Exact derivative of the trigonometric interpolant of a cell field.
pub fn spectral_derivative_cell(f: &CellField, order: usize) -> Result<CellField> {
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    f.check()?;
    let mut out = f.clone();
    derivative_in_place(&mut out.vr, f.period, order);
    derivative_in_place(&mut out.vi, f.period, order);
    Ok(out)
}

/// Exact derivative of the trigonometric interpolant of an extended field.
pub fn spectral_derivative_extended(f: &ExtendedField, order: usize) -> Result<ExtendedField> {
    if order > 4 {
        return Err(Error::UnsupportedOrder(order));
    }
    f.check()?;
    let mut out = f.clone();
    let length = f.domain_length();
    derivative_in_place(&mut out.vr, length, order);
    derivative_in_place(&mut out.vi, length, order);
    Ok(out)
}

/// L2(0,T) inner product of 2-vector cell fields, conjugate-linear in `f`.
pub fn cell_inner(f: &CellField, g: &CellField) -> C64 {
    let h = f.period / f.n_points as f64;
    let mut acc = C64::default();
    for j in 0..f.n_points {
        acc += f.vr[j].conj() * g.vr[j] + f.vi[j].conj() * g.vi[j];
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Random band-limited real 2-vector field on an M-cell torus.
    fn random_smooth(m: usize, n: usize, period: f64, seed: u64) -> ExtendedField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = m * n;
        let length = m as f64 * period;
        let band = (total / 4).max(2) as i64;
        let mut f = ExtendedField::zeros(m, n, period);
        for l in 1..band {
            let (ar, br) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (ai, bi) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let decay = (-0.1 * l as f64).exp();
            for j in 0..total {
                let x = j as f64 * period / n as f64;
                let w = 2.0 * PI * l as f64 / length;
                f.vr[j] += decay * (ar * (w * x).cos() + br * (w * x).sin());
                f.vi[j] += decay * (ai * (w * x).cos() + bi * (w * x).sin());
            }
        }
        f
    }

    fn rel_err(a: &ExtendedField, b: &ExtendedField) -> f64 {
        a.sub(b).l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn zero_field_has_zero_bloch_samples() {
        let f = ExtendedField::zeros(4, 16, 2.0 * PI);
        let s = bloch_transform(&f).unwrap();
        for c in &s.samples {
            assert!(c.l2_norm() == 0.0);
        }
    }

    #[test]
    fn cell_periodic_data_lives_at_xi_zero() {
        let t = 2.0 * PI;
        let (m, n) = (4, 32);
        let mut f = ExtendedField::zeros(m, n, t);
        for j in 0..m * n {
            let x = j as f64 * t / n as f64;
            f.vr[j] = C64::new((2.0 * PI * x / t).cos(), 0.0);
        }
        let s = bloch_transform(&f).unwrap();
        for (k, c) in s.samples.iter().enumerate() {
            if s.xi_values[k].abs() < 1e-14 {
                for j in 0..n {
                    let x = j as f64 * t / n as f64;
                    assert!((c.vr[j].re - (2.0 * PI * x / t).cos()).abs() < 1e-12);
                    assert!(c.vr[j].im.abs() < 1e-12);
                }
            } else {
                assert!(c.l2_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_against_direct_dft_oracle() {
        // Unit-mass discrete Gaussian on M = 8 cells.
        let t = 2.0 * PI;
        let (m, n) = (8, 16);
        let mut f = ExtendedField::zeros(m, n, t);
        let length = m as f64 * t;
        let h = t / n as f64;
        let mut mass = 0.0;
        for j in 0..m * n {
            let x = j as f64 * h - length / 2.0;
            let g = (-x * x).exp();
            f.vr[j] = C64::new(g, 0.0);
            mass += g * h;
        }
        for v in f.vr.iter_mut() {
            *v /= mass;
        }
        let s = bloch_transform(&f).unwrap();
        let lhs = f.l2_norm().powi(2);
        // Independent oracle: Parseval directly on the MN-point DFT.
        let coeff = dft(&f.vr);
        let oracle: f64 = length * coeff.iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((lhs - oracle).abs() <= 1e-10 * oracle);
        assert!((parseval_sum(&s) - lhs).abs() <= 1e-10 * lhs);
    }

    #[test]
    fn zero_sample_set_gives_zero_field() {
        let f = ExtendedField::zeros(4, 16, 1.5);
        let s = bloch_transform(&f).unwrap();
        let g = inverse_bloch(&s).unwrap();
        assert!(g.l2_norm() == 0.0);
    }

    #[test]
    fn roundtrip_on_random_smooth_field() {
        let f = random_smooth(4, 32, 2.0 * PI, 7);
        let g = inverse_bloch(&bloch_transform(&f).unwrap()).unwrap();
        assert!(rel_err(&g, &f) <= 1e-12);
    }

    #[test]
    fn single_sample_synthesizes_plane_wave() {
        let t = 2.0;
        let (m, n) = (8, 16);
        let c = C64::new(0.3, -0.7);
        let freqs = bloch_frequencies(m, t);
        let pick = 6; // some nonzero xi
        let mut samples = Vec::new();
        for k in 0..m {
            let mut cf = CellField::zeros(n, t);
            if k == pick {
                cf.vr = vec![c; n];
            }
            samples.push(cf);
        }
        let s = BlochSampleSet {
            xi_values: freqs.clone(),
            samples,
        };
        let f = inverse_bloch(&s).unwrap();
        for j in 0..m * n {
            let x = j as f64 * t / n as f64;
            let expect = c * C64::new(0.0, freqs[pick] * x).exp();
            assert!((f.vr[j] - expect).norm() < 1e-12);
            assert!(f.vi[j].norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_sine_is_scaled_cosine() {
        let t = 3.0;
        let n = 32;
        let mut f = CellField::zeros(n, t);
        for j in 0..n {
            let x = j as f64 * t / n as f64;
            f.vr[j] = C64::new((2.0 * PI * x / t).sin(), 0.0);
        }
        let d = spectral_derivative_cell(&f, 1).unwrap();
        for j in 0..n {
            let x = j as f64 * t / n as f64;
            let expect = 2.0 * PI / t * (2.0 * PI * x / t).cos();
            assert!((d.vr[j].re - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn order_zero_derivative_is_identity() {
        let f = random_smooth(2, 16, 1.0, 3);
        let d = spectral_derivative_extended(&f, 0).unwrap();
        assert!(rel_err(&d, &f) == 0.0);
    }

    #[test]
    fn second_derivative_of_plane_wave() {
        let t = 2.0 * PI;
        let n = 32;
        let mut f = CellField::zeros(n, t);
        for j in 0..n {
            let x = j as f64 * t / n as f64;
            f.vr[j] = C64::new(0.0, 4.0 * PI * x / t).exp();
        }
        let d = spectral_derivative_cell(&f, 2).unwrap();
        let factor = -(4.0 * PI / t) * (4.0 * PI / t);
        for j in 0..n {
            assert!((d.vr[j] - factor * f.vr[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_order_above_four_rejected() {
        let f = CellField::zeros(16, 1.0);
        assert!(matches!(
            spectral_derivative_cell(&f, 5),
            Err(Error::UnsupportedOrder(5))
        ));
    }

    #[test]
    fn derivative_commutes_with_bloch_transform() {
        // d/dx B(f)(xi,.) = B(df)(xi,.) - i*xi*B(f)(xi,.)
        let f = random_smooth(8, 32, 2.0 * PI, 11);
        let df = spectral_derivative_extended(&f, 1).unwrap();
        let bf = bloch_transform(&f).unwrap();
        let bdf = bloch_transform(&df).unwrap();
        let scale = f.sobolev_norm(1).unwrap();
        for (k, &xi) in bf.xi_values.iter().enumerate() {
            let lhs = spectral_derivative_cell(&bf.samples[k], 1).unwrap();
            for j in 0..lhs.n_points {
                let rr = lhs.vr[j] - (bdf.samples[k].vr[j] - C64::i() * xi * bf.samples[k].vr[j]);
                let ri = lhs.vi[j] - (bdf.samples[k].vi[j] - C64::i() * xi * bf.samples[k].vi[j]);
                assert!(rr.norm() <= 1e-10 * scale && ri.norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn bloch_transform_is_linear() {
        let f = random_smooth(4, 32, 1.0, 21);
        let g = random_smooth(4, 32, 1.0, 22);
        let (a, b) = (0.37, -1.21);
        let mut comb = f.scaled(a);
        comb.axpy(b, &g);
        let s_comb = bloch_transform(&comb).unwrap();
        let s_f = bloch_transform(&f).unwrap();
        let s_g = bloch_transform(&g).unwrap();
        for k in 0..s_comb.samples.len() {
            for j in 0..s_comb.samples[k].n_points {
                let er = s_comb.samples[k].vr[j]
                    - (a * s_f.samples[k].vr[j] + b * s_g.samples[k].vr[j]);
                assert!(er.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_holds_on_random_fields() {
        for seed in 0..5 {
            let f = random_smooth(8, 16, 1.7, 100 + seed);
            let s = bloch_transform(&f).unwrap();
            let lhs = f.l2_norm().powi(2);
            assert!((parseval_sum(&s) - lhs).abs() <= 1e-10 * lhs);
        }
    }

    #[test]
    fn structural_mismatch_rejected() {
        let mut f = ExtendedField::zeros(4, 16, 1.0);
        f.vr.pop();
        assert!(matches!(bloch_transform(&f), Err(Error::Structure(_))));
    }
}
