//! The decomposed evolution semigroup
//! `e^{A[phi]t} = phi' s_p(t) + S~_c(t) + S_e(t)`
//! applied to extended fields through per-xi matrix exponentials, plus the
//! decay probes and the integration-by-parts identity check.

use crate::critical::critical_curve;
use crate::eig;
use crate::error::{Error, Result};
use crate::fft::{dft, idft, signed_mode};
use crate::field::{
    bloch_frequencies, bloch_transform, inverse_bloch, spectral_derivative_extended,
    BlochSampleSet, CellField, ExtendedField,
};
use crate::profile::WaveProfile;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Eigenvector condition threshold beyond which the scaling-and-squaring
/// exponential replaces the eigendecomposition.
pub const EXPM_COND_LIMIT: f64 = 1e8;

/// Smooth frequency and time cutoffs.
///
/// `rho` is 1 on `|xi| <= xi1/2`, 0 on `|xi| >= xi1`, gluing with the
/// standard `exp(1 - 1/(1-s^2))` bump in the transition band; `chi`
/// vanishes on `[0,1]` and equals 1 on `[2,inf)` via the exponential
/// smoothstep. Both formulas are fixed so results reproduce bit-for-bit.
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    pub xi1: f64,
}

impl CutoffSpec {
    pub fn rho(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let half = self.xi1 / 2.0;
        if a <= half {
            1.0
        } else if a >= self.xi1 {
            0.0
        } else {
            let s = (a - half) / half;
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn chi(t: f64) -> f64 {
        fn g(s: f64) -> f64 {
            if s > 0.0 {
                (-1.0 / s).exp()
            } else {
                0.0
            }
        }
        let num = g(t - 1.0);
        let den = num + g(2.0 - t);
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Which piece of the decomposition to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    Se,
    ScTilde,
    /// `s_p` with `ell` spatial and `j` temporal derivative weights.
    Sp { ell: usize, j: usize },
}

/// Output of [`apply_propagator`]: 2-vector field, or the scalar `s_p`.
#[derive(Debug, Clone)]
pub enum PropagatorOutput {
    Field(ExtendedField),
    Phase(Vec<f64>),
}

impl PropagatorOutput {
    pub fn l2_norm(&self, prop: &Propagator) -> f64 {
        match self {
            PropagatorOutput::Field(f) => f.l2_norm(),
            PropagatorOutput::Phase(v) => {
                let h = prop.profile.period / prop.n_per_cell as f64;
                (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
            }
        }
    }
}

enum ExpAction {
    /// `(values, V, V^-1)`: `e^{At} = V diag(e^{lambda t}) V^-1`.
    Eigen(Vec<C64>, DMatrix<C64>, DMatrix<C64>),
    /// Ill-conditioned eigenbasis: keep `A`, exponentiate per call.
    Matrix(DMatrix<C64>),
}

struct XiData {
    xi: f64,
    rho: f64,
    action: ExpAction,
    /// `(lambda_c, v, w)` with `<w, v> = 1` in coefficient space; present
    /// wherever `rho > 0`.
    crit: Option<(C64, DVector<C64>, DVector<C64>)>,
}

/// Cached per-xi evolution data for one profile on an M-cell torus.
pub struct Propagator {
    pub profile: WaveProfile,
    pub m_cells: usize,
    pub n_per_cell: usize,
    pub cutoffs: CutoffSpec,
    /// Diffusion coefficient from the critical-curve fit (for fit windows).
    pub d_fit: f64,
    data: Vec<XiData>,
    /// phi' samples on the extended grid.
    phi_prime: Vec<C64>,
    /// phi' stacked coefficients in the cell DFT basis.
    phi_prime_coeffs: DVector<C64>,
}

fn coeff_inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &DVector<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Stacked coefficient vector of a cell field in the DFT-bin mode order.
fn cell_to_coeffs(f: &CellField) -> DVector<C64> {
    let n = f.n_points;
    let sr = dft(&f.vr);
    let si = dft(&f.vi);
    DVector::from_iterator(2 * n, sr.into_iter().chain(si))
}

fn coeffs_to_cell(v: &DVector<C64>, period: f64) -> CellField {
    let n = v.len() / 2;
    let sr: Vec<C64> = v.as_slice()[..n].to_vec();
    let si: Vec<C64> = v.as_slice()[n..].to_vec();
    CellField {
        n_points: n,
        period,
        vr: idft(&sr),
        vi: idft(&si),
    }
}

impl Propagator {
    /// Build the per-xi cache for `m_cells` cells at `n_per_cell` points.
    ///
    /// The Bloch matrices act on the full DFT mode set of the cell, so the
    /// t = 0 propagator is exactly the identity.
    pub fn build(profile: &WaveProfile, m_cells: usize, n_per_cell: usize) -> Result<Propagator> {
        if n_per_cell <= 2 * profile.n_modes {
            return Err(Error::Resolution(format!(
                "n_per_cell = {n_per_cell} cannot represent {} profile modes",
                profile.n_modes
            )));
        }
        let curve = critical_curve(profile, 16)?;
        let cutoffs = CutoffSpec { xi1: curve.xi1 };

        let modes: Vec<i64> = (0..n_per_cell)
            .map(|j| signed_mode(j, n_per_cell))
            .collect();
        let freqs = bloch_frequencies(m_cells, profile.period);

        // Eigendata (or expm fallback) at every Bloch frequency.
        let mut raw: Vec<(f64, f64, ExpAction, Option<eig::Eigen>)> = Vec::new();
        for &xi in &freqs {
            let a = crate::bloch::assemble_on_modes(profile, xi, &modes);
            let e = eig::eigen(&a.matrix)?;
            let v_inv = eig::inverse(&e.vectors)?;
            let rho = cutoffs.rho(xi);
            if eig::cond_estimate(&e.vectors, &v_inv) > EXPM_COND_LIMIT {
                raw.push((xi, rho, ExpAction::Matrix(a.matrix), Some(e)));
            } else {
                let action = ExpAction::Eigen(e.values.clone(), e.vectors.clone(), v_inv);
                raw.push((xi, rho, action, Some(e)));
            }
        }

        // Critical chain on the rho support by overlap continuation from
        // phi' at xi = 0, outward in each direction.
        let phi_prime_coeffs =
            cell_to_coeffs(&profile.derivative_field(n_per_cell, 1));
        let mut crit: Vec<Option<(C64, DVector<C64>, DVector<C64>)>> = vec![None; freqs.len()];
        let i0 = freqs
            .iter()
            .position(|&x| x.abs() < 1e-14)
            .ok_or_else(|| Error::Structure("Bloch lattice lacks xi = 0".into()))?;
        for dir in [1i64, -1] {
            let mut prev = {
                let n = vnorm(&phi_prime_coeffs);
                phi_prime_coeffs.clone() / C64::new(n, 0.0)
            };
            let mut idx = i0 as i64;
            loop {
                if idx < 0 || idx as usize >= freqs.len() {
                    break;
                }
                let i = idx as usize;
                if raw[i].1 == 0.0 && i != i0 {
                    break;
                }
                let e = raw[i].3.as_ref().unwrap();
                let sel = select_by_overlap(e, &prev, freqs[i])?;
                let (lambda, mut v, mut w) = sel;
                // Phase-align with the previous chain member.
                let ov = coeff_inner(&prev, &v);
                if ov.norm() > 0.0 {
                    let c = (ov / ov.norm()).conj();
                    v *= c;
                    w *= c;
                }
                prev = v.clone();
                if crit[i].is_none() {
                    crit[i] = Some((lambda, v, w));
                }
                idx += dir;
            }
        }

        // Normalize the chain so Phi_0 = phi' itself: joint scaling keeps
        // the pairing <w, v> = 1 while giving the s_p coefficient the units
        // of a spatial translation.
        let sigma = vnorm(&phi_prime_coeffs);
        for entry in crit.iter_mut().flatten() {
            entry.1 *= C64::new(sigma, 0.0);
            entry.2 /= C64::new(sigma, 0.0);
        }

        let data: Vec<XiData> = raw
            .into_iter()
            .zip(crit)
            .map(|((xi, rho, action, _), c)| XiData {
                xi,
                rho,
                action,
                crit: c,
            })
            .collect();

        let total = m_cells * n_per_cell;
        let phi_cell = profile.sample_derivative(n_per_cell, 1);
        let phi_prime: Vec<C64> = (0..total).map(|j| phi_cell[j % n_per_cell]).collect();

        Ok(Propagator {
            profile: profile.clone(),
            m_cells,
            n_per_cell,
            cutoffs,
            d_fit: curve.d_fit,
            data,
            phi_prime,
            phi_prime_coeffs,
        })
    }

    pub fn domain_length(&self) -> f64 {
        self.m_cells as f64 * self.profile.period
    }

    fn check_input(&self, v0: &ExtendedField) -> Result<()> {
        if v0.m_cells != self.m_cells
            || v0.n_per_cell != self.n_per_cell
            || (v0.period - self.profile.period).abs() > 1e-12 * self.profile.period
        {
            return Err(Error::Structure(
                "input grid is not commensurate with the propagator".into(),
            ));
        }
        Ok(())
    }

    fn exp_apply(&self, d: &XiData, x: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
        match &d.action {
            ExpAction::Eigen(vals, v, v_inv) => {
                let mut y = v_inv * x;
                for (yi, l) in y.iter_mut().zip(vals.iter()) {
                    *yi *= (l * t).exp();
                }
                Ok(v * y)
            }
            ExpAction::Matrix(a) => {
                let e = expm(&(a * C64::new(t, 0.0)))?;
                Ok(&e * x)
            }
        }
    }

    /// Per-xi critical data `(lambda_c, coefficient <w, x>, v)`; `None`
    /// off the rho support.
    fn crit_coeff<'a>(&self, d: &'a XiData, x: &DVector<C64>) -> Option<(C64, C64, &'a DVector<C64>)> {
        d.crit
            .as_ref()
            .map(|(l, v, w)| (*l, coeff_inner(w, x), v))
    }

    /// Apply one part of the decomposition at time `t >= 0`.
    pub fn apply(&self, part: Part, v0: &ExtendedField, t: f64) -> Result<PropagatorOutput> {
        if t < 0.0 {
            return Err(Error::Domain(format!("propagator time must be >= 0, got {t}")));
        }
        self.check_input(v0)?;
        let set = bloch_transform(v0)?;
        let chi = CutoffSpec::chi(t);

        match part {
            Part::Sp { ell, j } => {
                if ell > 4 || j > 2 {
                    return Err(Error::UnsupportedOrder(ell.max(j)));
                }
                let mut weights = vec![C64::default(); set.samples.len()];
                for (i, d) in self.data.iter().enumerate() {
                    if d.rho == 0.0 {
                        continue;
                    }
                    let x = cell_to_coeffs(&set.samples[i]);
                    if let Some((lambda, c, _)) = self.crit_coeff(d, &x) {
                        let ix = C64::new(0.0, d.xi);
                        weights[i] = chi
                            * d.rho
                            * ix.powi(ell as i32)
                            * lambda.powi(j as i32)
                            * (lambda * t).exp()
                            * c;
                    }
                }
                Ok(PropagatorOutput::Phase(self.synthesize_scalar(&weights)))
            }
            _ => {
                let mut out_samples = Vec::with_capacity(set.samples.len());
                for (i, d) in self.data.iter().enumerate() {
                    let x = cell_to_coeffs(&set.samples[i]);
                    let y = match part {
                        Part::Full => self.exp_apply(d, &x, t)?,
                        Part::Se => {
                            // e^{At} x - rho e^{lambda_c t} <w,x> v
                            let mut y = self.exp_apply(d, &x, t)?;
                            if d.rho > 0.0 {
                                if let Some((lambda, c, v)) = self.crit_coeff(d, &x) {
                                    let s = d.rho * (lambda * t).exp() * c;
                                    y -= v * s;
                                }
                            }
                            y
                        }
                        Part::ScTilde => {
                            // rho e^{lambda_c t} <w,x> v - chi rho e^{lambda_c t} <w,x> phi'
                            let mut y = DVector::zeros(x.len());
                            if d.rho > 0.0 {
                                if let Some((lambda, c, v)) = self.crit_coeff(d, &x) {
                                    let s = d.rho * (lambda * t).exp() * c;
                                    y += v * s;
                                    y -= &self.phi_prime_coeffs * (chi * s);
                                }
                            }
                            y
                        }
                        Part::Sp { .. } => unreachable!(),
                    };
                    out_samples.push(coeffs_to_cell(&y, self.profile.period));
                }
                let out = inverse_bloch(&BlochSampleSet {
                    xi_values: self.data.iter().map(|d| d.xi).collect(),
                    samples: out_samples,
                })?;
                Ok(PropagatorOutput::Field(out))
            }
        }
    }

    /// `sum_m e^{i xi_m x} weight_m` on the extended grid, real part; the
    /// imaginary residue is returned alongside.
    fn synthesize_scalar_full(&self, weights: &[C64]) -> (Vec<f64>, f64) {
        let total = self.m_cells * self.n_per_cell;
        let h = self.profile.period / self.n_per_cell as f64;
        let mut re = vec![0.0; total];
        let mut imag_sq = 0.0;
        for jj in 0..total {
            let x = jj as f64 * h;
            let mut acc = C64::default();
            for (d, w) in self.data.iter().zip(weights) {
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                acc += w * C64::new(0.0, d.xi * x).exp();
            }
            re[jj] = acc.re;
            imag_sq += acc.im * acc.im;
        }
        (re, (h * imag_sq).sqrt())
    }

    fn synthesize_scalar(&self, weights: &[C64]) -> Vec<f64> {
        self.synthesize_scalar_full(weights).0
    }

    /// Critical Bloch projection of a perturbation: `gamma` with
    /// `gamma_hat(xi) = rho(xi) <Phi_tilde_xi, v_check(xi,.)>`.
    /// Returns the real samples and the imaginary residue of the synthesis.
    pub fn project_critical(&self, v: &ExtendedField) -> Result<(Vec<f64>, f64)> {
        self.check_input(v)?;
        let set = bloch_transform(v)?;
        let mut weights = vec![C64::default(); set.samples.len()];
        for (i, d) in self.data.iter().enumerate() {
            if d.rho == 0.0 {
                continue;
            }
            let x = cell_to_coeffs(&set.samples[i]);
            if let Some((_, c, _)) = self.crit_coeff(d, &x) {
                weights[i] = d.rho * c;
            }
        }
        let (re, residue) = self.synthesize_scalar_full(&weights);
        Ok((re, residue))
    }

    /// phi' samples on the extended grid.
    pub fn phi_prime_extended(&self) -> &[C64] {
        &self.phi_prime
    }

    /// `(xi, lambda_c(xi))` for every fiber carrying critical-chain data,
    /// xi ascending; diagnostic view of the tracked branch.
    pub fn critical_samples(&self) -> Vec<(f64, C64)> {
        let mut out: Vec<(f64, C64)> = self
            .data
            .iter()
            .filter_map(|d| d.crit.as_ref().map(|(l, _, _)| (d.xi, *l)))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// The critical eigenfunction `Phi_0` (= phi') and its L^2(0,T)-dual
    /// `Phi~_0` as cell fields.
    pub fn origin_eigenfunctions(&self) -> Result<(CellField, CellField)> {
        let d = self
            .data
            .iter()
            .find(|d| d.xi.abs() < 1e-14 && d.crit.is_some())
            .ok_or_else(|| Error::Structure("no critical data at xi = 0".into()))?;
        let (_, v, w) = d.crit.as_ref().unwrap();
        let phi = coeffs_to_cell(v, self.profile.period);
        // <w, x> in coefficient space equals the L^2 pairing against w/T.
        let dual = coeffs_to_cell(&(w / C64::new(self.profile.period, 0.0)), self.profile.period);
        Ok((phi, dual))
    }

    /// Norms `(t, ||part(t) v0||)` along a time list.
    pub fn decay_probe(&self, part: Part, v0: &ExtendedField, times: &[f64]) -> Result<Vec<(f64, f64)>> {
        let mut prev = f64::NEG_INFINITY;
        for &t in times {
            if t < prev || t < 0.0 {
                return Err(Error::Domain("probe times must be increasing and >= 0".into()));
            }
            prev = t;
        }
        times
            .iter()
            .map(|&t| Ok((t, self.apply(part, v0, t)?.l2_norm(self))))
            .collect()
    }
}

fn select_by_overlap(
    e: &eig::Eigen,
    prev: &DVector<C64>,
    xi: f64,
) -> Result<(C64, DVector<C64>, DVector<C64>)> {
    let n = e.values.len();
    let mut overlaps: Vec<(usize, f64)> = (0..n)
        .map(|i| {
            let col = e.vectors.column(i);
            let ov: C64 = prev.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
            (i, ov.norm())
        })
        .collect();
    overlaps.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let (best, best_ov) = overlaps[0];
    if overlaps.len() > 1 && (best_ov - overlaps[1].1).abs() < 1e-3 {
        return Err(Error::TrackingAmbiguity {
            xi,
            first: best_ov,
            second: overlaps[1].1,
        });
    }
    let v: DVector<C64> = e.vectors.column(best).into_owned();
    let v_inv = eig::inverse(&e.vectors)?;
    let mut w = DVector::from_iterator(n, v_inv.row(best).iter().map(|z| z.conj()));
    let p = coeff_inner(&w, &v);
    w *= (C64::new(1.0, 0.0) / p).conj();
    Ok((e.values[best], v, w))
}

/// Convenience free function mirroring the per-part application.
pub fn apply_propagator(
    prop: &Propagator,
    part: Part,
    v0: &ExtendedField,
    t: f64,
) -> Result<PropagatorOutput> {
    prop.apply(part, v0, t)
}

/// Relative residual of the first integration-by-parts identity:
/// `s_p(t)(f dg) = -s_p(t)(df g) + d/dx s_p(t)(fg) - correction`,
/// with the correction synthesized from `<d/dx Phi_tilde_xi, B(fg)>`.
///
/// `f` is a real scalar field (vi ignored); `g` a complex scalar field;
/// products are mapped to 2-vectors componentwise.
pub fn ibp_check(prop: &Propagator, f: &ExtendedField, g: &ExtendedField, t: f64) -> Result<f64> {
    prop.check_input(f)?;
    prop.check_input(g)?;
    // Compact support inside the interior: wrap-around would invalidate
    // the line-integral analogy.
    let fmax = f.max_abs().max(g.max_abs());
    let total = f.total_points();
    for idx in [0usize, 1, total - 2, total - 1] {
        let a = (f.vr[idx] + C64::i() * f.vi[idx]).norm();
        let b = (g.vr[idx] + C64::i() * g.vi[idx]).norm();
        if a > 1e-10 * fmax || b > 1e-10 * fmax {
            return Err(Error::Support(
                "field support touches the domain boundary".into(),
            ));
        }
    }

    let scalar_mul = |a: &ExtendedField, b: &ExtendedField| -> ExtendedField {
        // (real scalar a) * (complex scalar b), then split into a 2-vector.
        let mut out = ExtendedField::zeros(a.m_cells, a.n_per_cell, a.period);
        for j in 0..a.total_points() {
            let s = a.vr[j].re;
            let z = C64::new(b.vr[j].re, b.vi[j].re);
            let p = s * z;
            out.vr[j] = C64::new(p.re, 0.0);
            out.vi[j] = C64::new(p.im, 0.0);
        }
        out
    };

    let df = spectral_derivative_extended(f, 1)?;
    let dg = spectral_derivative_extended(g, 1)?;

    let lhs = match prop.apply(Part::Sp { ell: 0, j: 0 }, &scalar_mul(f, &dg), t)? {
        PropagatorOutput::Phase(v) => v,
        _ => unreachable!(),
    };
    let term1 = match prop.apply(Part::Sp { ell: 0, j: 0 }, &scalar_mul(&df, g), t)? {
        PropagatorOutput::Phase(v) => v,
        _ => unreachable!(),
    };
    let fg = scalar_mul(f, g);
    let sp_fg = match prop.apply(Part::Sp { ell: 0, j: 0 }, &fg, t)? {
        PropagatorOutput::Phase(v) => v,
        _ => unreachable!(),
    };
    // d/dx of the scalar s_p(t)(fg).
    let mut sp_field = ExtendedField::zeros(f.m_cells, f.n_per_cell, f.period);
    for (j, &v) in sp_fg.iter().enumerate() {
        sp_field.vr[j] = C64::new(v, 0.0);
    }
    let dsp = spectral_derivative_extended(&sp_field, 1)?;

    // Correction: chi(t) sum_m rho e^{i xi x} e^{lambda_c t} <dPhi~, B(fg)>.
    let set = bloch_transform(&fg)?;
    let chi = CutoffSpec::chi(t);
    let mut weights = vec![C64::default(); set.samples.len()];
    for (i, d) in prop.data.iter().enumerate() {
        if d.rho == 0.0 {
            continue;
        }
        if let Some((lambda, w)) = d.crit.as_ref().map(|(l, _v, w)| (*l, w)) {
            // d/dx of Phi_tilde in coefficient space: multiply each mode
            // coefficient by i*2*pi*l/T per component.
            let n = prop.n_per_cell;
            let mut dw = w.clone();
            for j in 0..n {
                let l = signed_mode(j, n);
                let omega = 2.0 * std::f64::consts::PI * l as f64 / prop.profile.period;
                let fac = C64::new(0.0, omega);
                dw[j] *= fac;
                dw[j + n] *= fac;
            }
            let x = cell_to_coeffs(&set.samples[i]);
            weights[i] = chi * d.rho * (lambda * t).exp() * coeff_inner(&dw, &x);
        }
    }
    let correction = prop.synthesize_scalar(&weights);

    let h = prop.profile.period / prop.n_per_cell as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..total {
        let rhs = -term1[j] + dsp.vr[j].re - correction[j];
        num += (lhs[j] - rhs) * (lhs[j] - rhs);
        den += lhs[j] * lhs[j];
    }
    Ok((h * num).sqrt() / (h * den).sqrt().max(1e-300))
}

/// Scaling-and-squaring matrix exponential (Pade order 13).
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / C64::new(2f64.powi(s), 0.0);

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let c = |x: f64| C64::new(x, 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_odd = &a6 * (&a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]))
        + &a6 * c(B[7])
        + &a4 * c(B[5])
        + &a2 * c(B[3])
        + &id * c(B[1]);
    let u = &a * &u_odd;
    let v = &a6 * (&a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]))
        + &a6 * c(B[6])
        + &a4 * c(B[4])
        + &a2 * c(B[2])
        + &id * c(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("expm Pade denominator is singular".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
