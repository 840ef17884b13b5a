//! Phase-modulation extraction, algebraic decay-rate fitting, and the
//! modified-energy damping diagnostic.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::fft::{dft, idft, signed_mode};
use crate::field::ExtendedField;
use crate::profile::WaveProfile;
use crate::semigroup::Propagator;
use num_complex::Complex64 as C64;

/// Real scalar phase samples gamma on the extended grid.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub values: Vec<f64>,
    pub time: f64,
    pub domain_length: f64,
}

impl PhaseField {
    pub fn constant(value: f64, n_points: usize, domain_length: f64, time: f64) -> PhaseField {
        PhaseField {
            values: vec![value; n_points],
            time,
            domain_length,
        }
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, order: usize) -> Result<Vec<f64>> {
        if order > 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        let n = self.values.len();
        let mut spec = dft(&self.values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
        for (j, s) in spec.iter_mut().enumerate() {
            let m = signed_mode(j, n);
            if order % 2 == 1 && 2 * m == -(n as i64) {
                *s = C64::default();
                continue;
            }
            let k = 2.0 * std::f64::consts::PI * m as f64 / self.domain_length;
            *s *= C64::new(0.0, k).powi(order as i32);
        }
        Ok(idft(&spec).into_iter().map(|z| z.re).collect())
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.domain_length / self.values.len() as f64;
        (h * self.values.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `H^j` norm: root sum of squared `L^2` norms of derivatives `0..=j`.
    pub fn sobolev_norm(&self, j: usize) -> Result<f64> {
        let h = self.domain_length / self.values.len() as f64;
        let mut acc = 0.0;
        for o in 0..=j {
            let d = self.derivative(o)?;
            acc += h * d.iter().map(|x| x * x).sum::<f64>();
        }
        Ok(acc.sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Phase of a perturbation field `v~ = psi - phi` (2-vector samples):
/// `gamma_hat(xi) = rho(xi) <Phi~_xi, v_check(xi,.)>`, synthesized on the
/// extended grid with the imaginary residue checked.
pub fn phase_from_perturbation(
    prop: &Propagator,
    v: &ExtendedField,
    time: f64,
) -> Result<PhaseField> {
    let (values, residue) = prop.project_critical(v)?;
    let field = PhaseField {
        values,
        time,
        domain_length: prop.domain_length(),
    };
    let norm = field.l2_norm();
    if residue > 1e-8 * norm && residue > 1e-14 {
        return Err(Error::ExtractionInconsistency(format!(
            "imaginary residue {residue:.3e} exceeds 1e-8 * ||gamma|| = {:.3e}",
            1e-8 * norm
        )));
    }
    let gx_max = field
        .derivative(1)?
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    if gx_max >= 0.5 {
        return Err(Error::ModulationTooLarge(format!(
            "||gamma_x||_inf = {gx_max:.3e} >= 1/2 after extraction"
        )));
    }
    Ok(field)
}

/// Extract the phase from a full state `psi` by projecting `psi - phi`.
pub fn extract_phase(prop: &Propagator, psi: &ExtendedField, time: f64) -> Result<PhaseField> {
    let v = subtract_profile(&prop.profile, psi)?;
    phase_from_perturbation(prop, &v, time)
}

/// `psi - phi` on the extended grid.
pub fn subtract_profile(p: &WaveProfile, psi: &ExtendedField) -> Result<ExtendedField> {
    if (psi.period - p.period).abs() > 1e-12 * p.period {
        return Err(Error::Structure("state period disagrees with the profile".into()));
    }
    let cell = p.sample(psi.n_per_cell);
    let mut v = psi.clone();
    for j in 0..v.total_points() {
        let phi = cell[j % psi.n_per_cell];
        v.vr[j] -= phi.re;
        v.vi[j] -= phi.im;
    }
    Ok(v)
}

/// Evaluate the complex state at the shifted points `x_j - gamma(x_j)` by
/// trigonometric interpolation (exact for band-limited data).
pub fn shifted_state(psi: &ExtendedField, gamma: &PhaseField) -> Result<Vec<C64>> {
    let n = psi.total_points();
    if gamma.values.len() != n {
        return Err(Error::Structure("phase grid disagrees with the state grid".into()));
    }
    let length = psi.domain_length();
    let spec = dft(&psi.psi());
    let h = length / n as f64;
    let mut out = Vec::with_capacity(n);
    let half = n as i64 / 2;
    for j in 0..n {
        let x = j as f64 * h - gamma.values[j];
        let base = C64::new(0.0, 2.0 * std::f64::consts::PI * x / length).exp();
        // Running-power accumulation over modes -n/2 .. n/2-1.
        let mut acc = C64::default();
        let mut power = base.powi(-(half as i32));
        for mode in -half..(n as i64 - half) {
            acc += spec[crate::fft::bin(mode, n)] * power;
            power *= base;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `||psi(. - gamma) - phi||_{L^2}` over the extended domain.
pub fn modulated_residual(p: &WaveProfile, psi: &ExtendedField, gamma: &PhaseField) -> Result<f64> {
    let gx_max = gamma
        .derivative(1)?
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    if gx_max >= 0.5 {
        return Err(Error::ModulationTooLarge(format!(
            "||gamma_x||_inf = {gx_max:.3e} >= 1/2"
        )));
    }
    let shifted = shifted_state(psi, gamma)?;
    let cell = p.sample(psi.n_per_cell);
    let n = psi.total_points();
    let h = psi.domain_length() / n as f64;
    let mut acc = 0.0;
    for (j, z) in shifted.iter().enumerate() {
        acc += (z - cell[j % psi.n_per_cell]).norm_sqr();
    }
    Ok((h * acc).sqrt())
}

/// Least-squares slope of `log(value)` against `log(1+t)` inside the
/// window; returns `(exponent, r_squared)`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .cloned()
        .collect();
    if pts.len() < 10 {
        return Err(Error::Sampling(format!(
            "decay fit needs >= 10 samples in the window, found {}",
            pts.len()
        )));
    }
    let mut xs = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for (t, v) in &pts {
        if !(*v > 0.0) {
            return Err(Error::Domain(format!("non-positive value {v} at t = {t} in decay fit")));
        }
        xs.push((1.0 + t).ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        ss_res += (y - slope * x - intercept) * (y - slope * x - intercept);
        ss_tot += (y - mean) * (y - mean);
    }
    let r2 = if ss_tot <= 1e-28 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, r2))
}

#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub confirmed: bool,
}

/// Fitted algebraic rates for the five tracked quantities.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub fit_window: (f64, f64),
    pub unmod_l2: DecayFit,
    pub gamma_l2: DecayFit,
    pub mod_l2: DecayFit,
    pub gamma_x_h3: DecayFit,
    pub gamma_t_h2: DecayFit,
}

fn make_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (exponent, r_squared) = fit_decay(series, window)?;
    Ok(DecayFit {
        exponent,
        r_squared,
        confirmed: r_squared >= 0.9,
    })
}

/// Default fit window: past the cutoff transients, before the diffusive
/// footprint `sqrt(d t)` reaches the torus scale.
pub fn default_fit_window(prop: &Propagator, t_end: f64) -> (f64, f64) {
    let length = prop.domain_length();
    (10.0, t_end.min(0.05 * length * length / prop.d_fit.max(1e-12)))
}

/// Extract phases along the snapshots and fit all five decay series.
pub fn decay_report(prop: &Propagator, traj: &Trajectory) -> Result<DecayReport> {
    let t_end = *traj.times.last().ok_or_else(|| Error::Sampling("empty trajectory".into()))?;
    let window = default_fit_window(prop, t_end);
    decay_report_with_window(prop, traj, window)
}

/// As [`decay_report`] but over an explicit fit window `(t_min, t_max)`.
pub fn decay_report_with_window(
    prop: &Propagator,
    traj: &Trajectory,
    window: (f64, f64),
) -> Result<DecayReport> {
    if !(window.0 >= 0.0 && window.1 > window.0) {
        return Err(Error::Sampling(format!(
            "fit window ({}, {}) is not an ordered nonnegative interval",
            window.0, window.1
        )));
    }
    let n_snap = traj.snapshots.len();
    if n_snap < 5 {
        return Err(Error::Sampling("need at least 5 snapshots".into()));
    }
    // Uniform snapshot spacing is required for the finite-difference
    // gamma_t stencil; the stride construction guarantees it except for
    // the final snapshot, which is dropped if it breaks the spacing.
    let mut m = n_snap;
    let dt0 = traj.snapshot_times[1] - traj.snapshot_times[0];
    if m >= 3 && (traj.snapshot_times[m - 1] - traj.snapshot_times[m - 2] - dt0).abs() > 1e-9 * dt0
    {
        m -= 1;
    }

    let phases: Vec<PhaseField> = (0..m)
        .map(|i| phase_from_perturbation(prop, &traj.snapshots[i], traj.snapshot_times[i]))
        .collect::<Result<_>>()?;

    let mut unmod = Vec::new();
    let mut gamma_l2 = Vec::new();
    let mut mod_l2 = Vec::new();
    let mut gamma_x_h3 = Vec::new();
    let mut gamma_t_h2 = Vec::new();

    let phi_cell = prop.profile.sample(prop.n_per_cell);
    for i in 0..m {
        let t = traj.snapshot_times[i];
        if t < window.0 || t > window.1 {
            continue;
        }
        let v = &traj.snapshots[i];
        let g = &phases[i];
        // Norm rows are dense in time; find the matching row.
        let row = traj
            .times
            .iter()
            .position(|&tt| (tt - t).abs() < 1e-9 * (1.0 + t))
            .ok_or_else(|| Error::Structure("snapshot time missing from the norm series".into()))?;
        unmod.push((t, traj.norm_series[row][0]));
        gamma_l2.push((t, g.l2_norm()));
        // psi = v~ + phi for the shifted evaluation.
        let mut psi = v.clone();
        for j in 0..psi.total_points() {
            let phi = phi_cell[j % prop.n_per_cell];
            psi.vr[j] += phi.re;
            psi.vi[j] += phi.im;
        }
        mod_l2.push((t, modulated_residual(&prop.profile, &psi, g)?));
        let gx = PhaseField {
            values: g.derivative(1)?,
            time: t,
            domain_length: g.domain_length,
        };
        gamma_x_h3.push((t, gx.sobolev_norm(3)?));
        // 4th-order central difference for gamma_t (interior stencils only).
        if i >= 2 && i + 2 < m {
            let dt = dt0;
            let n_pts = g.values.len();
            let mut gt = vec![0.0; n_pts];
            for jj in 0..n_pts {
                gt[jj] = (-phases[i + 2].values[jj] + 8.0 * phases[i + 1].values[jj]
                    - 8.0 * phases[i - 1].values[jj]
                    + phases[i - 2].values[jj])
                    / (12.0 * dt);
            }
            let gtf = PhaseField {
                values: gt,
                time: t,
                domain_length: g.domain_length,
            };
            gamma_t_h2.push((t, gtf.sobolev_norm(2)?));
        }
    }

    Ok(DecayReport {
        fit_window: window,
        unmod_l2: make_fit(&unmod, window)?,
        gamma_l2: make_fit(&gamma_l2, window)?,
        mod_l2: make_fit(&mod_l2, window)?,
        gamma_x_h3: make_fit(&gamma_x_h3, window)?,
        gamma_t_h2: make_fit(&gamma_t_h2, window)?,
    })
}

/// Modified-energy damping diagnostic for derivative order `j`.
#[derive(Debug, Clone)]
pub struct DampingReport {
    pub j: usize,
    pub times: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub fitted_k: f64,
    pub fitted_c: f64,
    pub control_ok: bool,
    pub integrated_ok: bool,
}

impl DampingReport {
    pub fn verdict(&self) -> bool {
        self.control_ok && self.integrated_ok
    }
}

/// `E~_j(t) = ||d^j v~||^2 - (1/2 beta) <J M[phi] d^{j-1} v~, d^{j-1} v~>`
/// with `M[phi] = 2 [[-2 phi_r phi_i, phi_r^2-phi_i^2],
///                  [phi_r^2-phi_i^2, 2 phi_r phi_i]]`,
/// then the control and integrated-bound constants fitted as the smallest
/// values holding at every sample.
pub fn damping_report(p: &WaveProfile, traj: &Trajectory, j: usize) -> Result<DampingReport> {
    if j == 0 || j > 4 {
        return Err(Error::UnsupportedOrder(j));
    }
    let m = traj.snapshots.len();
    if m < 50 {
        return Err(Error::Sampling(format!(
            "damping diagnostic needs >= 50 snapshots, found {m}"
        )));
    }
    let beta = p.params.beta;
    let n_per_cell = traj.snapshots[0].n_per_cell;
    let phi_cell = p.sample(n_per_cell);

    let mut energy = Vec::with_capacity(m);
    let mut deriv_sq = Vec::with_capacity(m);
    let mut base_sq = Vec::with_capacity(m);
    for v in &traj.snapshots {
        let h = v.domain_length() / v.total_points() as f64;
        let dj = crate::field::spectral_derivative_extended(v, j)?;
        let djm1 = if j == 1 {
            v.clone()
        } else {
            crate::field::spectral_derivative_extended(v, j - 1)?
        };
        let mut dsq = 0.0;
        let mut bilinear = 0.0;
        let mut bsq = 0.0;
        for idx in 0..v.total_points() {
            dsq += dj.vr[idx].norm_sqr() + dj.vi[idx].norm_sqr();
            bsq += v.vr[idx].norm_sqr() + v.vi[idx].norm_sqr();
            let phi = phi_cell[idx % n_per_cell];
            let (pr, pi) = (phi.re, phi.im);
            let m11 = -4.0 * pr * pi;
            let m12 = 2.0 * (pr * pr - pi * pi);
            let m22 = 4.0 * pr * pi;
            // J M = [[-M21, -M22], [M11, M12]].
            let (ar, ai) = (djm1.vr[idx].re, djm1.vi[idx].re);
            let jr = -m12 * ar - m22 * ai;
            let ji = m11 * ar + m12 * ai;
            bilinear += jr * ar + ji * ai;
        }
        deriv_sq.push(h * dsq);
        base_sq.push(h * bsq);
        energy.push(h * dsq - h * bilinear / (2.0 * beta));
    }
    for e in &energy {
        if !e.is_finite() {
            return Err(Error::Numerical("damping energy series left the finite range".into()));
        }
    }

    // (a) smallest K with ||d^j v~||^2 <= 2 E~_j + K ||v~||^2 everywhere.
    let mut k_fit = 0.0f64;
    for i in 0..m {
        if base_sq[i] > 1e-300 {
            k_fit = k_fit.max((deriv_sq[i] - 2.0 * energy[i]) / base_sq[i]);
        }
    }
    let control_ok = (0..m).all(|i| {
        deriv_sq[i] <= 2.0 * energy[i] + k_fit * base_sq[i] + 1e-12 * (1.0 + deriv_sq[i])
    });

    // (b) smallest C with
    // ||d^j v~(t)||^2 <= 2 e^{-t} E~_j(0) + K ||v~(t)||^2
    //                    + 2 C int_0^t e^{-(t-s)} ||v~(s)||^2 ds,
    // with the integral accumulated on the dense norm grid.
    let mut dense_int = vec![0.0; traj.times.len()];
    for i in 1..traj.times.len() {
        let dt = traj.times[i] - traj.times[i - 1];
        let f_prev = traj.norm_series[i - 1][0] * traj.norm_series[i - 1][0];
        let f_cur = traj.norm_series[i][0] * traj.norm_series[i][0];
        // One step of exp-weighted trapezoid: I(t) = e^{-dt} I(t-dt) + quad.
        dense_int[i] = (-dt).exp() * dense_int[i - 1] + 0.5 * dt * ((-dt).exp() * f_prev + f_cur);
    }
    let mut c_fit = 0.0f64;
    let mut integrals = Vec::with_capacity(m);
    for i in 0..m {
        let t = traj.snapshot_times[i];
        let row = traj
            .times
            .iter()
            .position(|&tt| (tt - t).abs() < 1e-9 * (1.0 + t))
            .ok_or_else(|| Error::Structure("snapshot time missing from the norm series".into()))?;
        integrals.push(dense_int[row]);
        let slack = deriv_sq[i] - 2.0 * (-t).exp() * energy[0] - k_fit * base_sq[i];
        if slack > 0.0 && dense_int[row] > 1e-300 {
            c_fit = c_fit.max(slack / (2.0 * dense_int[row]));
        }
    }
    let integrated_ok = (0..m).all(|i| {
        let t = traj.snapshot_times[i];
        deriv_sq[i]
            <= 2.0 * (-t).exp() * energy[0]
                + k_fit * base_sq[i]
                + 2.0 * c_fit * integrals[i]
                + 1e-12 * (1.0 + deriv_sq[i])
    });

    Ok(DampingReport {
        j,
        times: traj.snapshot_times.clone(),
        energy_series: energy,
        fitted_k: k_fit,
        fitted_c: c_fit,
        control_ok,
        integrated_ok,
    })
}

/// Mean-value inequality instance: ratio of `||v - v~||_{L^2}` to
/// `(||phi'||_inf + ||v~||_{H^2}) ||gamma||_{L^2}` (0 when gamma = 0).
pub fn mean_value_check(p: &WaveProfile, psi: &ExtendedField, gamma: &PhaseField) -> Result<f64> {
    let v_tilde = subtract_profile(p, psi)?;
    let shifted = shifted_state(psi, gamma)?;
    let phi_cell = p.sample(psi.n_per_cell);
    let n = psi.total_points();
    let h = psi.domain_length() / n as f64;
    let mut acc = 0.0;
    for j in 0..n {
        let v = shifted[j] - phi_cell[j % psi.n_per_cell];
        let vt = C64::new(v_tilde.vr[j].re, v_tilde.vi[j].re);
        acc += (v - vt).norm_sqr();
    }
    let left = (h * acc).sqrt();
    let phi_prime_max = p
        .sample_derivative(psi.n_per_cell, 1)
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let right = (phi_prime_max + v_tilde.sobolev_norm(2)?) * gamma.l2_norm();
    if right <= 1e-300 {
        return Ok(0.0);
    }
    Ok(left / right)
}
