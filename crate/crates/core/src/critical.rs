//! Continuation of the critical spectral curve `lambda_c(xi)` through the
//! origin, the quadratic expansion fit `lambda_c ~ i*a*xi - d*xi^2`, and the
//! rank-one spectral projection data `(Phi_xi, Phi_tilde_xi)`.

use crate::bloch::{assemble_on_modes, phi_prime_vector};
use crate::eig;
use crate::error::{Error, Result};
use crate::fft::{bin, idft};
use crate::field::{cell_inner, CellField};
use crate::profile::WaveProfile;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Relative spectral-gap floor used by the automatic xi_1 selection.
pub const DELTA1_DEFAULT: f64 = 0.05;

/// Critical eigenpair of `A_xi`, normalized so `<Phi_tilde, Phi> = 1`.
#[derive(Debug, Clone)]
pub struct BlochEigenpair {
    pub xi: f64,
    pub lambda_c: C64,
    pub phi_xi: CellField,
    pub phi_tilde_xi: CellField,
}

/// Sampled critical curve with its quadratic-expansion fit.
#[derive(Debug, Clone)]
pub struct CriticalCurve {
    pub xi_samples: Vec<f64>,
    pub lambda_c: Vec<C64>,
    pub a_fit: f64,
    pub d_fit: f64,
    pub fit_residual: f64,
    /// Support edge chosen from the relative-spectral-gap window.
    pub xi1: f64,
}

/// Internal continuation state: coefficient-space eigendata at one xi.
struct TrackPoint {
    lambda: C64,
    /// Right eigenvector in the stacked Fourier basis, unit 2-norm,
    /// phase-aligned with the previous point.
    v: DVector<C64>,
    /// Biorthogonal left vector: <w, v>_coeff = 1.
    w: DVector<C64>,
    /// Relative distance of the rest of the spectrum from lambda.
    rel_gap: f64,
}

fn coeff_inner(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendata of `A_xi` with the branch selected by maximal eigenvector
/// overlap against `prev`, phase-aligned to it.
fn track_point(
    p: &WaveProfile,
    xi: f64,
    modes: &[i64],
    prev: &DVector<C64>,
) -> Result<TrackPoint> {
    let m = assemble_on_modes(p, xi, modes);
    let e = eig::eigen(&m.matrix)?;
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

    let lambda = e.values[best];
    let mut v: DVector<C64> = e.vectors.column(best).into_owned();
    // Phase alignment: make the overlap with the previous vector real
    // positive so the branch varies continuously.
    let ov = coeff_inner(prev, &v);
    if ov.norm() > 0.0 {
        v *= (ov / ov.norm()).conj();
    }
    // Left vector from the matching row of V^-1: exactly biorthogonal.
    let v_inv = eig::inverse(&e.vectors)?;
    let mut w = DVector::from_iterator(n, v_inv.row(best).iter().map(|z| z.conj()));
    // Undo the phase applied to v on w so that <w, v> stays 1.
    let pairing = coeff_inner(&w, &v);
    w /= pairing.conj();

    // Gap to the rest of the spectrum, relative to the magnitudes of the
    // eigenvalues involved so it measures closeness to a genuine collision.
    let rel_gap = e
        .values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, z)| (z - lambda).norm() / (z.norm() + lambda.norm() + f64::EPSILON))
        .fold(f64::INFINITY, f64::min);
    Ok(TrackPoint {
        lambda,
        v,
        w,
        rel_gap,
    })
}

/// Synthesize a stacked coefficient vector as a cell field on `n_grid`.
fn coeff_to_cell(v: &DVector<C64>, modes: &[i64], period: f64, n_grid: usize) -> CellField {
    let m = modes.len();
    let mut sr = vec![C64::default(); n_grid];
    let mut si = vec![C64::default(); n_grid];
    for (j, &l) in modes.iter().enumerate() {
        sr[bin(l, n_grid)] = v[j];
        si[bin(l, n_grid)] = v[j + m];
    }
    CellField {
        n_points: n_grid,
        period,
        vr: idft(&sr),
        vi: idft(&si),
    }
}

fn pair_from_point(
    pt: &TrackPoint,
    xi: f64,
    modes: &[i64],
    period: f64,
    n_grid: usize,
) -> BlochEigenpair {
    // L2(0,T) pairing of band-limited fields equals T * coefficient
    // pairing; rescale the left vector so <Phi_tilde, Phi>_{L2} = 1.
    let mut w = pt.w.clone();
    w /= C64::new(period, 0.0);
    BlochEigenpair {
        xi,
        lambda_c: pt.lambda,
        phi_xi: coeff_to_cell(&pt.v, modes, period, n_grid),
        phi_tilde_xi: coeff_to_cell(&w, modes, period, n_grid),
    }
}

/// Track the critical branch over `xi in [-xi_max, xi_max]`, `2n+1` samples.
///
/// Continuation starts at xi = 0 from the translational eigenfunction and
/// proceeds outward, selecting at each step the eigenvalue whose eigenvector
/// maximizes overlap with the previous one.
pub fn track_critical(p: &WaveProfile, xi_max: f64, n: usize) -> Result<Vec<BlochEigenpair>> {
    let k = p.n_modes as i64;
    let modes: Vec<i64> = (-k..=k).collect();
    let n_grid = (4 * p.n_modes).max(16);
    let period = p.period;

    // Seed direction: normalized phi' coefficients.
    let phip = phi_prime_vector(p, &modes);
    let norm = phip.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let seed = phip / C64::new(norm, 0.0);

    let origin = track_point(p, 0.0, &modes, &seed)?;
    let mut out: Vec<BlochEigenpair> = Vec::with_capacity(2 * n + 1);
    out.push(pair_from_point(&origin, 0.0, &modes, period, n_grid));

    for dir in [1.0f64, -1.0] {
        let mut prev = origin.v.clone();
        for j in 1..=n {
            let xi = dir * xi_max * j as f64 / n as f64;
            let pt = track_point(p, xi, &modes, &prev)?;
            prev = pt.v.clone();
            out.push(pair_from_point(&pt, xi, &modes, period, n_grid));
        }
    }
    out.sort_by(|a, b| a.xi.partial_cmp(&b.xi).unwrap());
    Ok(out)
}

/// Least-squares fit of `Im lambda_c ~ a*xi`, `Re lambda_c ~ -d*xi^2` on
/// `|xi| <= xi_fit`. Returns `(a, d, relative residual)`.
pub fn fit_expansion(
    xi: &[f64],
    lambda: &[C64],
    xi_fit: f64,
) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, C64)> = xi
        .iter()
        .copied()
        .zip(lambda.iter().copied())
        .filter(|&(x, _)| x.abs() <= xi_fit)
        .collect();
    if pts.len() < 9 {
        return Err(Error::ParameterDomain(format!(
            "expansion fit needs at least 9 samples in |xi| <= {xi_fit}, got {}",
            pts.len()
        )));
    }
    let (mut sx2, mut sxi, mut sx4, mut sx2r) = (0.0, 0.0, 0.0, 0.0);
    for &(x, l) in &pts {
        sx2 += x * x;
        sxi += x * l.im;
        sx4 += x * x * x * x;
        sx2r += x * x * l.re;
    }
    if sx2 == 0.0 || sx4 == 0.0 {
        return Err(Error::ParameterDomain(
            "degenerate xi sample set for the expansion fit".into(),
        ));
    }
    let a = sxi / sx2;
    let d = -sx2r / sx4;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, l) in &pts {
        let model = C64::new(-d * x * x, a * x);
        num += (l - model).norm_sqr();
        den += l.norm_sqr();
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    if residual > 0.1 {
        return Err(Error::PoorFit(format!(
            "expansion fit residual {residual:.3} exceeds 10% — xi window too wide"
        )));
    }
    Ok((a, d, residual))
}

/// Track, choose `xi_1` from the relative-gap window, and fit the expansion.
pub fn critical_curve(p: &WaveProfile, n: usize) -> Result<CriticalCurve> {
    // The quadratic fit uses |xi| <= xi_1/4 and needs >= 9 samples there.
    let n = n.max(16);
    let edge = std::f64::consts::PI / p.period;
    // Probe the gap along the positive axis to choose xi_1 as half the
    // largest window keeping a relative gap >= DELTA1_DEFAULT.
    let k = p.n_modes as i64;
    let modes: Vec<i64> = (-k..=k).collect();
    let phip = phi_prime_vector(p, &modes);
    let norm = phip.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let seed = phip / C64::new(norm, 0.0);

    let probes = 16usize;
    let mut prev = track_point(p, 0.0, &modes, &seed)?.v;
    let mut xi_ok = 0.0;
    for j in 1..=probes {
        let xi = edge * j as f64 / probes as f64;
        match track_point(p, xi, &modes, &prev) {
            Ok(pt) if pt.rel_gap >= DELTA1_DEFAULT => {
                xi_ok = xi;
                prev = pt.v.clone();
            }
            _ => break,
        }
    }
    if xi_ok == 0.0 {
        return Err(Error::Numerical(
            "no xi window with the required spectral gap".into(),
        ));
    }
    let xi1 = 0.5 * xi_ok;

    let pairs = track_critical(p, xi1, n)?;
    let xi_samples: Vec<f64> = pairs.iter().map(|q| q.xi).collect();
    let lambda_c: Vec<C64> = pairs.iter().map(|q| q.lambda_c).collect();
    let (a_fit, d_fit, fit_residual) = fit_expansion(&xi_samples, &lambda_c, xi1 / 4.0)?;
    Ok(CriticalCurve {
        xi_samples,
        lambda_c,
        a_fit,
        d_fit,
        fit_residual,
        xi1,
    })
}

/// `<Phi_tilde_xi, sample>_{L2(0,T)}`: the coefficient of the rank-one
/// projection `Pi(xi) v = <Phi_tilde, v> Phi_xi`.
pub fn spectral_projection_coefficient(pair: &BlochEigenpair, sample: &CellField) -> C64 {
    let tilde = resampled(&pair.phi_tilde_xi, sample.n_points);
    cell_inner(&tilde, sample)
}

/// Apply `Pi(xi)` to a cell sample.
pub fn apply_projection(pair: &BlochEigenpair, sample: &CellField) -> CellField {
    let c = spectral_projection_coefficient(pair, sample);
    let phi = resampled(&pair.phi_xi, sample.n_points);
    let mut out = CellField::zeros(sample.n_points, sample.period);
    for j in 0..sample.n_points {
        out.vr[j] = c * phi.vr[j];
        out.vi[j] = c * phi.vi[j];
    }
    out
}

/// Trigonometric resampling of a cell field onto `n` points.
pub(crate) fn resampled(f: &CellField, n: usize) -> CellField {
    if f.n_points == n {
        return f.clone();
    }
    let resample_one = |vals: &[C64]| -> Vec<C64> {
        let old = vals.len();
        let spec = crate::fft::dft(vals);
        let mut out = vec![C64::default(); n];
        let half = old as i64 / 2;
        for l in -half..=half {
            if l.unsigned_abs() as usize * 2 > n {
                continue;
            }
            let c = spec[bin(l, old)];
            // Split the Nyquist coefficient symmetrically on even grids.
            if old % 2 == 0 && (l == half || l == -half) {
                out[bin(l, n)] += 0.5 * c;
            } else {
                out[bin(l, n)] = c;
            }
        }
        idft(&out)
    };
    CellField {
        n_points: n,
        period: f.period,
        vr: resample_one(&f.vr),
        vi: resample_one(&f.vi),
    }
}

/// Residuals `||A_xi Phi - lambda Phi||`, `||A*_xi Phi~ - conj(lambda) Phi~||`
/// (relative), recomputed from scratch; diagnostic for tests.
pub fn eigenpair_residuals(p: &WaveProfile, pair: &BlochEigenpair) -> Result<(f64, f64)> {
    let k = p.n_modes as i64;
    let modes: Vec<i64> = (-k..=k).collect();
    let m = assemble_on_modes(p, pair.xi, &modes);
    let to_coeffs = |f: &CellField| -> DVector<C64> {
        let nm = modes.len();
        let sr = crate::fft::dft(&f.vr);
        let si = crate::fft::dft(&f.vi);
        let mut v = DVector::zeros(2 * nm);
        for (j, &l) in modes.iter().enumerate() {
            v[j] = sr[bin(l, f.n_points)];
            v[j + nm] = si[bin(l, f.n_points)];
        }
        v
    };
    let norm = |v: &DVector<C64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = to_coeffs(&pair.phi_xi);
    let w = to_coeffs(&pair.phi_tilde_xi);
    let rv = norm(&(&m.matrix * &v - v.scale(1.0) * pair.lambda_c)) / norm(&v);
    let adj: DMatrix<C64> = m.matrix.adjoint();
    let rw = norm(&(&adj * &w - w.scale(1.0) * pair.lambda_c.conj())) / norm(&w);
    Ok((rv, rw))
}
