//! Fourier-truncated Bloch operators `A_xi[phi] = -I + J L_xi[phi]`,
//! their spectra over the Brillouin zone, and the diffusive spectral
//! stability certificate.
//!
//! Basis ordering: for a mode list `l_0..l_{m-1}` the matrix acts on
//! stacked coefficients `(r_{l_0}..r_{l_{m-1}}, i_{l_0}..i_{l_{m-1}})`
//! of the 2-vector components in the basis `e^{2*pi*i*l*x/T}`.

use crate::eig::{self, Eigen};
use crate::error::{Error, Result};
use crate::fft::{bin, dft};
use crate::profile::{LLEParams, WaveProfile};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Tolerance for "touching the imaginary axis".
pub const TOL_ZERO: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BlochOperatorMatrix {
    pub xi: f64,
    pub period: f64,
    /// Fourier modes (rows of each component block), ascending.
    pub modes: Vec<i64>,
    pub matrix: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub xi: f64,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<C64>,
    pub leading_eigenvector: Option<Vec<C64>>,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Spectrum confined to the closed left half-plane, axis touched only
    /// near xi = 0.
    pub cond_i: bool,
    /// Quadratic tangency bound away from the origin.
    pub cond_ii: bool,
    /// Simple zero eigenvalue at xi = 0 carried by phi'.
    pub cond_iii: bool,
    pub theta_fit: f64,
    /// Distance of the non-critical spectrum from the axis at xi = 0.
    pub spectral_gap_delta: f64,
    /// Per-xi maximum real parts, xi ascending.
    pub diagnostics: Vec<(f64, f64)>,
    /// Translational-mode residual ||A_0 phi'|| / ||phi'||.
    pub translational_residual: f64,
    /// |lambda| of the eigenvalue nearest zero at xi = 0.
    pub critical_eigenvalue_abs: f64,
    /// Normalized adjoint pairing certifying simplicity.
    pub adjoint_pairing: f64,
}

impl StabilityReport {
    pub fn verdict(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

/// Fourier coefficients (band 2K, zero beyond) of the three multiplication
/// entries of `L[phi]`: `3*phi_r^2+phi_i^2`, `2*phi_r*phi_i`,
/// `phi_r^2+3*phi_i^2`.
struct PotentialCoeffs {
    band: i64,
    grid: usize,
    c11: Vec<C64>,
    c12: Vec<C64>,
    c22: Vec<C64>,
}

impl PotentialCoeffs {
    fn build(p: &WaveProfile) -> Self {
        let k = p.n_modes;
        // Products of band-K data have band 2K; 8K samples are alias-free.
        let grid = (8 * k).max(16);
        let phi = p.sample(grid);
        let mut f11 = Vec::with_capacity(grid);
        let mut f12 = Vec::with_capacity(grid);
        let mut f22 = Vec::with_capacity(grid);
        for z in &phi {
            let (r, i) = (z.re, z.im);
            f11.push(C64::new(3.0 * r * r + i * i, 0.0));
            f12.push(C64::new(2.0 * r * i, 0.0));
            f22.push(C64::new(r * r + 3.0 * i * i, 0.0));
        }
        PotentialCoeffs {
            band: 2 * k as i64,
            grid,
            c11: dft(&f11),
            c12: dft(&f12),
            c22: dft(&f22),
        }
    }

    fn get(&self, which: &[C64], delta: i64) -> C64 {
        if delta.abs() > self.band {
            C64::default()
        } else {
            which[bin(delta, self.grid)]
        }
    }
}

/// Assemble `A_xi` on an arbitrary Fourier mode list.
pub(crate) fn assemble_on_modes(p: &WaveProfile, xi: f64, modes: &[i64]) -> BlochOperatorMatrix {
    let pot = PotentialCoeffs::build(p);
    let m = modes.len();
    let (alpha, beta) = (p.params.alpha, p.params.beta);
    let mut a = DMatrix::<C64>::zeros(2 * m, 2 * m);
    for (row, &l) in modes.iter().enumerate() {
        for (col, &lp) in modes.iter().enumerate() {
            let d = l - lp;
            let c11 = pot.get(&pot.c11, d);
            let c12 = pot.get(&pot.c12, d);
            let c22 = pot.get(&pot.c22, d);
            // Differential symbol of -beta*(d/dx + i*xi)^2 on the column mode.
            let kp = xi + 2.0 * PI * lp as f64 / p.period;
            let diag = C64::new(beta * kp * kp - alpha, 0.0);
            // A = -I + [[-L21, -L22], [L11, L12]] with
            // L11 = diag + C11, L12 = L21 = C12, L22 = diag + C22.
            let mut rr = -c12;
            let mut ri = -c22;
            let mut ir = c11;
            let mut ii = c12;
            if row == col {
                rr -= C64::new(1.0, 0.0);
                ri -= diag;
                ir += diag;
                ii -= C64::new(1.0, 0.0);
            }
            a[(row, col)] = rr;
            a[(row, col + m)] = ri;
            a[(row + m, col)] = ir;
            a[(row + m, col + m)] = ii;
        }
    }
    BlochOperatorMatrix {
        xi,
        period: p.period,
        modes: modes.to_vec(),
        matrix: a,
    }
}

/// Assemble the truncated Bloch operator on the symmetric mode set -K..K.
pub fn assemble_bloch(p: &WaveProfile, xi: f64, n_modes: usize) -> Result<BlochOperatorMatrix> {
    let edge = PI / p.period;
    if xi.abs() > edge * (1.0 + 1e-12) {
        return Err(Error::ParameterDomain(format!(
            "xi = {xi} outside the Brillouin zone [-{edge}, {edge})"
        )));
    }
    if n_modes > p.n_modes {
        return Err(Error::Resolution(format!(
            "requested {n_modes} modes but the profile stores {}",
            p.n_modes
        )));
    }
    let k = n_modes as i64;
    let modes: Vec<i64> = (-k..=k).collect();
    Ok(assemble_on_modes(p, xi, &modes))
}

/// All eigenvalues (with the leading eigenvector) of a Bloch matrix.
pub fn spectrum_slice(m: &BlochOperatorMatrix) -> Result<SpectrumSlice> {
    let e = eig::eigen(&m.matrix)?;
    let mut order: Vec<usize> = (0..e.values.len()).collect();
    order.sort_by(|&a, &b| {
        e.values[b]
            .re
            .partial_cmp(&e.values[a].re)
            .unwrap()
            .then(e.values[b].im.partial_cmp(&e.values[a].im).unwrap())
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&i| e.values[i]).collect();
    let lead: Vec<C64> = e.vectors.column(order[0]).iter().copied().collect();
    Ok(SpectrumSlice {
        xi: m.xi,
        eigenvalues,
        leading_eigenvector: Some(lead),
    })
}

/// Eigenvalues only, unsorted (cheaper for sweeps).
pub fn slice_eigenvalues(m: &BlochOperatorMatrix) -> Result<Vec<C64>> {
    eig::eigenvalues(&m.matrix)
}

/// Closed-form dispersion `lambda = -1 +/- sqrt(-det L_k)` of a constant
/// state; brute-force oracle for `spectrum_slice`.
pub fn constant_state_dispersion(
    params: &LLEParams,
    phi_star: C64,
    k: f64,
) -> Result<(C64, C64)> {
    let rho = phi_star.norm_sqr();
    let defect = (rho * (1.0 + (params.alpha - rho) * (params.alpha - rho))
        - params.forcing * params.forcing)
        .abs();
    if defect > 1e-10 * (1.0 + params.forcing * params.forcing) {
        return Err(Error::Domain(format!(
            "phi_star violates the constant-state equation by {defect:.2e}"
        )));
    }
    let (r, i) = (phi_star.re, phi_star.im);
    let base = params.beta * k * k - params.alpha;
    let l11 = base + 3.0 * r * r + i * i;
    let l12 = 2.0 * r * i;
    let l22 = base + r * r + 3.0 * i * i;
    let det = l11 * l22 - l12 * l12;
    let s = C64::new(-det, 0.0).sqrt();
    Ok((C64::new(-1.0, 0.0) + s, C64::new(-1.0, 0.0) - s))
}

/// Stacked Fourier coefficients of the 2-vector `(Re f, Im f)` built from
/// the complex coefficients `f_hat` of a scalar field on `modes`.
pub(crate) fn two_vector_coeffs(
    f_hat: &dyn Fn(i64) -> C64,
    modes: &[i64],
) -> DVector<C64> {
    let m = modes.len();
    let mut v = DVector::zeros(2 * m);
    for (j, &l) in modes.iter().enumerate() {
        let plus = f_hat(l);
        let minus = f_hat(-l).conj();
        v[j] = (plus + minus) / 2.0;
        v[j + m] = (plus - minus) / (2.0 * C64::i());
    }
    v
}

/// Coefficient vector of `phi'` in the basis of `modes`.
pub(crate) fn phi_prime_vector(p: &WaveProfile, modes: &[i64]) -> DVector<C64> {
    let period = p.period;
    two_vector_coeffs(
        &|l: i64| {
            let w = 2.0 * PI * l as f64 / period;
            C64::i() * w * p.coeff(l)
        },
        modes,
    )
}

fn vec_norm(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Certify Definition-2.1-style diffusive spectral stability on an n_xi
/// grid over the Brillouin zone.
pub fn verify_stability(p: &WaveProfile, n_xi: usize, n_modes: usize) -> Result<StabilityReport> {
    if n_xi < 64 {
        return Err(Error::ParameterDomain(format!(
            "n_xi must be at least 64, got {n_xi}"
        )));
    }
    let max_coeff = p.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tail = p.coeff(p.n_modes as i64).norm().max(p.coeff(-(p.n_modes as i64)).norm());
    if tail > 1e-10 * max_coeff {
        return Err(Error::Resolution(format!(
            "coefficient tail {tail:.2e} exceeds 1e-10 of the peak {max_coeff:.2e}"
        )));
    }

    let edge = PI / p.period;
    let dxi = 2.0 * edge / n_xi as f64;
    let mut diagnostics = Vec::with_capacity(n_xi);
    for j in 0..n_xi {
        let xi = -edge + j as f64 * dxi;
        let m = assemble_bloch(p, xi, n_modes)?;
        let max_re = slice_eigenvalues(&m)?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        diagnostics.push((xi, max_re));
    }

    // (i): nothing in the open right half-plane, and axis-touching maxima
    // occur only adjacent to the origin.
    let global_max = diagnostics.iter().map(|&(_, r)| r).fold(f64::NEG_INFINITY, f64::max);
    let near_axis_far = diagnostics
        .iter()
        .any(|&(xi, r)| r > -TOL_ZERO && xi.abs() > 1.5 * dxi);
    let cond_i = global_max <= TOL_ZERO && !near_axis_far;

    // (ii): theta_fit = min over |xi| >= dxi of (-max Re) / xi^2.
    let theta_fit = diagnostics
        .iter()
        .filter(|&&(xi, _)| xi.abs() >= 0.999 * dxi)
        .map(|&(xi, r)| -r / (xi * xi))
        .fold(f64::INFINITY, f64::min);
    let cond_ii = theta_fit > 0.0;

    // (iii): at xi = 0 the translational mode carries a simple zero.
    let m0 = assemble_bloch(p, 0.0, n_modes)?;
    let phip = phi_prime_vector(p, &m0.modes);
    let phip_norm = vec_norm(&phip);
    let translational_residual = if phip_norm > 0.0 {
        vec_norm(&(&m0.matrix * &phip)) / phip_norm
    } else {
        // No translational mode at all (constant profile): condition fails.
        f64::INFINITY
    };

    let e: Eigen = eig::eigen(&m0.matrix)?;
    let (i_crit, _) = e
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .unwrap();
    let critical_eigenvalue_abs = e.values[i_crit].norm();
    let spectral_gap_delta = -e
        .values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != i_crit)
        .map(|(_, z)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    // Simplicity via a nondegenerate adjoint pairing.
    let adj = eig::eigen(&m0.matrix.adjoint())?;
    let lam_conj = e.values[i_crit].conj();
    let (i_adj, _) = adj
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - lam_conj)
                .norm()
                .partial_cmp(&(b.1 - lam_conj).norm())
                .unwrap()
        })
        .unwrap();
    let v = e.vectors.column(i_crit);
    let w = adj.vectors.column(i_adj);
    let pairing: C64 = w.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    let adjoint_pairing = pairing.norm();

    let cond_iii = translational_residual <= TOL_ZERO
        && critical_eigenvalue_abs <= TOL_ZERO
        && spectral_gap_delta > 0.0
        && adjoint_pairing >= 1e-6;

    Ok(StabilityReport {
        cond_i,
        cond_ii,
        cond_iii,
        theta_fit,
        spectral_gap_delta,
        diagnostics,
        translational_residual,
        critical_eigenvalue_abs,
        adjoint_pairing,
    })
}
