//! Constant and periodic steady states of the LLE profile equation
//! `i*beta*phi'' + (1+i*alpha)*phi - i*|phi|^2*phi = F`,
//! with a Fourier-collocated Newton solver restricted to the even
//! (cosine) subspace and seeded by the small-amplitude bifurcation
//! expansion.

use crate::error::{Error, Result};
use crate::fft::{bin, dft, idft};
use crate::field::CellField;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Cap on the bifurcation parameter accepted by [`bifurcation_seed`].
/// The expansion is asymptotic and carries no validity radius; this is a
/// configuration default, not a derived bound.
pub const MU_CAP_DEFAULT: f64 = 0.05;

/// Physical parameters of the equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LLEParams {
    pub alpha: f64,
    pub beta: f64,
    /// Pump strength F > 0.
    pub forcing: f64,
}

impl LLEParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.forcing > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "forcing must be positive, got {}",
                self.forcing
            )));
        }
        if self.beta == 0.0 {
            return Err(Error::ParameterDomain("beta must be nonzero".into()));
        }
        Ok(())
    }
}

/// A T-periodic steady wave stored as Fourier coefficients `l = -K..K`.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub params: LLEParams,
    pub period: f64,
    /// Truncation K: coefficients cover modes -K..K.
    pub n_modes: usize,
    /// Complex coefficients of `phi`, ascending in `l`, length 2K+1.
    pub coeffs: Vec<C64>,
    /// Discrete L2(0,T) residual of the profile equation at this state.
    pub residual_norm: f64,
}

impl WaveProfile {
    pub fn coeff(&self, l: i64) -> C64 {
        let k = self.n_modes as i64;
        if l.abs() > k {
            C64::default()
        } else {
            self.coeffs[(l + k) as usize]
        }
    }

    /// Samples of the `order`-th derivative of `phi` on `n` uniform points.
    pub fn sample_derivative(&self, n: usize, order: usize) -> Vec<C64> {
        let k = self.n_modes as i64;
        assert!(n as i64 > 2 * k, "grid too coarse for the stored modes");
        let mut spec = vec![C64::default(); n];
        for l in -k..=k {
            let w = 2.0 * PI * l as f64 / self.period;
            spec[bin(l, n)] = self.coeff(l) * (C64::i() * w).powi(order as i32);
        }
        idft(&spec)
    }

    /// Samples of `phi` on `n` uniform points over `[0, T)`.
    pub fn sample(&self, n: usize) -> Vec<C64> {
        self.sample_derivative(n, 0)
    }

    /// The 2-vector cell field `(Re phi, Im phi)` on `n` points.
    pub fn cell_field(&self, n: usize) -> CellField {
        CellField::from_psi(&self.sample(n), self.period)
    }

    /// The 2-vector cell field of the `order`-th derivative.
    pub fn derivative_field(&self, n: usize, order: usize) -> CellField {
        CellField::from_psi(&self.sample_derivative(n, order), self.period)
    }

    /// Amplitude `2|phi_hat_1|` of the first harmonic.
    pub fn first_harmonic_amplitude(&self) -> f64 {
        2.0 * self.coeff(1).norm()
    }

    /// Max deviation from the even symmetry `phi_hat_l = phi_hat_{-l}`.
    pub fn even_defect(&self) -> f64 {
        (1..=self.n_modes as i64)
            .map(|l| (self.coeff(l) - self.coeff(-l)).norm())
            .fold(0.0, f64::max)
    }
}

/// All constant solutions `phi* = F/(1+i(alpha-rho))` with `rho = |phi*|^2`
/// a real root of `rho*(1+(alpha-rho)^2) = F^2`.
pub fn constant_states(params: &LLEParams) -> Result<Vec<C64>> {
    params.validate()?;
    let a = params.alpha;
    let f2 = params.forcing * params.forcing;
    // rho^3 - 2a rho^2 + (1+a^2) rho - F^2 = 0, roots via companion matrix.
    let companion = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, f2, 1.0, 0.0, -(1.0 + a * a), 0.0, 1.0, 2.0 * a],
    );
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-10 * (1.0 + x.abs()));

    let poly = |r: f64| r * (1.0 + (a - r) * (a - r)) - f2;
    let dpoly = |r: f64| 1.0 + (a - r) * (a - r) - 2.0 * r * (a - r);
    let mut states = Vec::new();
    for mut r in roots {
        for _ in 0..50 {
            let d = dpoly(r);
            if d.abs() < 1e-14 {
                break;
            }
            let step = poly(r) / d;
            r -= step;
            if step.abs() < 1e-15 * (1.0 + r.abs()) {
                break;
            }
        }
        if poly(r).abs() > 1e-10 * (1.0 + f2) {
            continue;
        }
        states.push(params.forcing / C64::new(1.0, a - r));
    }
    if states.is_empty() {
        return Err(Error::Numerical(
            "no real root of the constant-state cubic found".into(),
        ));
    }
    Ok(states)
}

/// The constant state whose intensity `|phi*|^2` is closest to `rho_target`.
pub fn constant_state_near(params: &LLEParams, rho_target: f64) -> Result<C64> {
    let states = constant_states(params)?;
    Ok(states
        .into_iter()
        .min_by(|x, y| {
            let dx = (x.norm_sqr() - rho_target).abs();
            let dy = (y.norm_sqr() - rho_target).abs();
            dx.partial_cmp(&dy).unwrap()
        })
        .unwrap())
}

/// Small-amplitude wave seed bifurcating from the Turing onset:
/// `phi_mu = phi* + 3(alpha + i(2-alpha))/(F1*sqrt(41-30*alpha)) *
/// cos(sqrt(2-alpha)*x) * sqrt(mu)` with `T = 2*pi/sqrt(2-alpha)`,
/// `beta = -1`, `F = sqrt(F1^2 + mu)`, `F1^2 = (1-alpha)^2 + 1`.
pub fn bifurcation_seed(alpha: f64, mu: f64, n_modes: usize) -> Result<WaveProfile> {
    if alpha >= 41.0 / 30.0 {
        return Err(Error::ParameterDomain(format!(
            "bifurcation expansion requires alpha < 41/30, got {alpha}"
        )));
    }
    if !(mu > 0.0) || mu > MU_CAP_DEFAULT {
        return Err(Error::ParameterDomain(format!(
            "mu must lie in (0, {MU_CAP_DEFAULT}], got {mu}"
        )));
    }
    let f1_sq = (1.0 - alpha) * (1.0 - alpha) + 1.0;
    let f1 = f1_sq.sqrt();
    let params = LLEParams {
        alpha,
        beta: -1.0,
        forcing: (f1_sq + mu).sqrt(),
    };
    let period = 2.0 * PI / (2.0 - alpha).sqrt();
    let phi_star = constant_state_near(&params, 1.0)?;
    let amp = C64::new(alpha, 2.0 - alpha) * (3.0 / (f1 * (41.0 - 30.0 * alpha).sqrt()))
        * mu.sqrt();

    let k = n_modes as i64;
    let mut coeffs = vec![C64::default(); 2 * n_modes + 1];
    coeffs[n_modes] = phi_star;
    if n_modes >= 1 {
        coeffs[(k + 1) as usize] = amp / 2.0;
        coeffs[(k - 1) as usize] = amp / 2.0;
    }
    let mut p = WaveProfile {
        params,
        period,
        n_modes,
        coeffs,
        residual_norm: 0.0,
    };
    p.residual_norm = profile_residual(&p);
    Ok(p)
}

/// A constant state packaged as a (trivially periodic) wave profile.
pub fn constant_profile(params: &LLEParams, phi_star: C64, period: f64, n_modes: usize) -> WaveProfile {
    let mut coeffs = vec![C64::default(); 2 * n_modes + 1];
    coeffs[n_modes] = phi_star;
    let mut p = WaveProfile {
        params: *params,
        period,
        n_modes,
        coeffs,
        residual_norm: 0.0,
    };
    p.residual_norm = profile_residual(&p);
    p
}

/// Discrete L2(0,T) norm of `i*beta*phi'' + (1+i*alpha)*phi - i*|phi|^2*phi - F`.
pub fn profile_residual(p: &WaveProfile) -> f64 {
    // The residual has bandwidth 3K; 8K points make its norm quadrature-exact.
    let n = (8 * p.n_modes).max(16);
    let phi = p.sample(n);
    let phi_xx = p.sample_derivative(n, 2);
    let h = p.period / n as f64;
    let mut s = 0.0;
    for j in 0..n {
        let r = C64::i() * p.params.beta * phi_xx[j]
            + C64::new(1.0, p.params.alpha) * phi[j]
            - C64::i() * phi[j].norm_sqr() * phi[j]
            - p.params.forcing;
        s += r.norm_sqr();
    }
    (h * s).sqrt()
}

/// Newton solver state: cosine coefficients `a_l + i*b_l`, `l = 0..K`.
struct EvenState {
    k: usize,
    n: usize,
    period: f64,
    /// Stacked unknowns: a_0..a_K then b_0..b_K.
    x: DVector<f64>,
}

impl EvenState {
    /// Collocation samples (p, q) of the real/imaginary parts.
    fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let p = cosine_synthesize(&self.x.as_slice()[..self.k + 1], self.n);
        let q = cosine_synthesize(&self.x.as_slice()[self.k + 1..], self.n);
        (p, q)
    }
}

/// Evaluate `sum_l c_l cos(2*pi*l*x_j/T)` on `n` uniform points.
fn cosine_synthesize(c: &[f64], n: usize) -> Vec<f64> {
    let mut spec = vec![C64::default(); n];
    spec[0] = C64::new(c[0], 0.0);
    for (l, &cl) in c.iter().enumerate().skip(1) {
        spec[bin(l as i64, n)] += C64::new(cl / 2.0, 0.0);
        spec[bin(-(l as i64), n)] += C64::new(cl / 2.0, 0.0);
    }
    idft(&spec).into_iter().map(|z| z.re).collect()
}

/// Project samples onto cosine coefficients `0..=k_max`.
fn cosine_analyze(samples: &[f64], k_max: usize) -> Vec<f64> {
    let spec = dft(&samples.iter().map(|&s| C64::new(s, 0.0)).collect::<Vec<_>>());
    let n = samples.len();
    let mut out = vec![0.0; k_max + 1];
    out[0] = spec[0].re;
    for l in 1..=k_max {
        out[l] = (spec[bin(l as i64, n)] + spec[bin(-(l as i64), n)]).re;
    }
    out
}

fn second_derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let n = samples.len();
    let mut spec = dft(&samples.iter().map(|&s| C64::new(s, 0.0)).collect::<Vec<_>>());
    for (j, c) in spec.iter_mut().enumerate() {
        let l = crate::fft::signed_mode(j, n);
        let w = 2.0 * PI * l as f64 / period;
        *c *= -w * w;
    }
    idft(&spec).into_iter().map(|z| z.re).collect()
}

/// Pointwise profile residual components on the collocation grid.
fn residual_samples(
    params: &LLEParams,
    period: f64,
    p: &[f64],
    q: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let pxx = second_derivative(p, period);
    let qxx = second_derivative(q, period);
    let mut rr = vec![0.0; n];
    let mut ri = vec![0.0; n];
    for j in 0..n {
        let rho = p[j] * p[j] + q[j] * q[j];
        rr[j] = -params.beta * qxx[j] + p[j] - params.alpha * q[j] + rho * q[j]
            - params.forcing;
        ri[j] = params.beta * pxx[j] + params.alpha * p[j] + q[j] - rho * p[j];
    }
    (rr, ri)
}

/// Projected residual vector in the cosine basis.
fn residual_vector(params: &LLEParams, st: &EvenState) -> DVector<f64> {
    let (p, q) = st.samples();
    let (rr, ri) = residual_samples(params, st.period, &p, &q);
    let cr = cosine_analyze(&rr, st.k);
    let ci = cosine_analyze(&ri, st.k);
    DVector::from_iterator(2 * (st.k + 1), cr.into_iter().chain(ci))
}

/// Action of the residual's linearization at (p,q) on (dp,dq):
/// `dRr = (1+2pq) dp + (-beta d^2 - alpha + p^2 + 3q^2) dq`,
/// `dRi = (beta d^2 + alpha - 3p^2 - q^2) dp + (1 - 2pq) dq`.
fn linearized_residual(
    params: &LLEParams,
    period: f64,
    p: &[f64],
    q: &[f64],
    dp: &[f64],
    dq: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let dpxx = second_derivative(dp, period);
    let dqxx = second_derivative(dq, period);
    let mut rr = vec![0.0; n];
    let mut ri = vec![0.0; n];
    for j in 0..n {
        rr[j] = (1.0 + 2.0 * p[j] * q[j]) * dp[j]
            + (-params.beta * dqxx[j]
                + (-params.alpha + p[j] * p[j] + 3.0 * q[j] * q[j]) * dq[j]);
        ri[j] = (params.beta * dpxx[j]
            + (params.alpha - 3.0 * p[j] * p[j] - q[j] * q[j]) * dp[j])
            + (1.0 - 2.0 * p[j] * q[j]) * dq[j];
    }
    (rr, ri)
}

fn jacobian(params: &LLEParams, st: &EvenState) -> DMatrix<f64> {
    let dim = 2 * (st.k + 1);
    let (p, q) = st.samples();
    let mut jac = DMatrix::zeros(dim, dim);
    let zero = vec![0.0; st.n];
    for col in 0..dim {
        let mut basis = vec![0.0; st.k + 1];
        let (dp, dq): (Vec<f64>, Vec<f64>) = if col <= st.k {
            basis[col] = 1.0;
            (cosine_synthesize(&basis, st.n), zero.clone())
        } else {
            basis[col - st.k - 1] = 1.0;
            (zero.clone(), cosine_synthesize(&basis, st.n))
        };
        let (rr, ri) = linearized_residual(params, st.period, &p, &q, &dp, &dq);
        let cr = cosine_analyze(&rr, st.k);
        let ci = cosine_analyze(&ri, st.k);
        for row in 0..=st.k {
            jac[(row, col)] = cr[row];
            jac[(row + st.k + 1, col)] = ci[row];
        }
    }
    jac
}

/// Newton iteration on the even subspace starting from `seed`.
///
/// Returns a profile with `residual_norm <= tol`, or a convergence error
/// carrying the last residual.
pub fn solve_profile(seed: &WaveProfile, tol: f64) -> Result<WaveProfile> {
    solve_profile_with(seed, tol, 50)
}

pub fn solve_profile_with(seed: &WaveProfile, tol: f64, max_iter: usize) -> Result<WaveProfile> {
    seed.params.validate()?;
    let k = seed.n_modes;
    let n = (4 * k).max(16);
    // Project the seed onto the even subspace: a_l + i b_l from the
    // symmetric coefficient pairs.
    let mut x = DVector::zeros(2 * (k + 1));
    let c0 = seed.coeff(0);
    x[0] = c0.re;
    x[k + 1] = c0.im;
    for l in 1..=k {
        let c = seed.coeff(l as i64) + seed.coeff(-(l as i64));
        x[l] = c.re;
        x[k + 1 + l] = c.im;
    }
    let mut st = EvenState {
        k,
        n,
        period: seed.period,
        x,
    };

    let mut res = residual_vector(&seed.params, &st);
    let mut res_norm = projected_norm(&res, seed.period, n);
    for _ in 0..max_iter {
        if res_norm <= tol {
            return Ok(finish(seed, &st, res_norm));
        }
        let jac = jacobian(&seed.params, &st);
        let lu = jac.lu();
        let step = lu.solve(&res).ok_or_else(|| {
            Error::SingularJacobian("profile Newton Jacobian is numerically singular".into())
        })?;
        // Step-halving line search on the residual norm.
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..12 {
            let trial = EvenState {
                k,
                n,
                period: st.period,
                x: &st.x - scale * &step,
            };
            let trial_res = residual_vector(&seed.params, &trial);
            let trial_norm = projected_norm(&trial_res, seed.period, n);
            if trial_norm < res_norm {
                st = trial;
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: max_iter,
                residual: res_norm,
            });
        }
    }
    if res_norm <= tol {
        return Ok(finish(seed, &st, res_norm));
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res_norm,
    })
}

/// L2(0,T) norm of the function represented by a projected cosine residual.
fn projected_norm(res: &DVector<f64>, period: f64, _n: usize) -> f64 {
    // ||sum c_l cos(.)||^2 = T*(c_0^2 + (1/2) sum_{l>=1} c_l^2) per component.
    let k1 = res.len() / 2;
    let mut s = 0.0;
    for comp in 0..2 {
        let c = &res.as_slice()[comp * k1..(comp + 1) * k1];
        s += c[0] * c[0] + 0.5 * c[1..].iter().map(|v| v * v).sum::<f64>();
    }
    (period * s).sqrt()
}

fn finish(seed: &WaveProfile, st: &EvenState, _res_norm: f64) -> WaveProfile {
    let k = st.k as i64;
    let mut coeffs = vec![C64::default(); 2 * st.k + 1];
    coeffs[st.k] = C64::new(st.x[0], st.x[st.k + 1]);
    for l in 1..=st.k {
        let c = C64::new(st.x[l] / 2.0, st.x[st.k + 1 + l] / 2.0);
        coeffs[(k + l as i64) as usize] = c;
        coeffs[(k - l as i64) as usize] = c;
    }
    let mut p = WaveProfile {
        params: seed.params,
        period: seed.period,
        n_modes: st.k,
        coeffs,
        residual_norm: 0.0,
    };
    // Report the true quadrature-exact residual, not the projected one.
    p.residual_norm = profile_residual(&p);
    p
}
