//! Nonlinear evolution of the LLE on an M-cell torus with an ETDRK4
//! exponential integrator, plus the perturbation-equation nonlinearities
//! used by the decay diagnostics.

use crate::error::{Error, Result};
use crate::fft::{dft, idft, signed_mode};
use crate::field::ExtendedField;
use crate::modulation::PhaseField;
use crate::profile::WaveProfile;
use num_complex::Complex64 as C64;

/// Simulation grid, stepping, and bookkeeping parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub m_cells: usize,
    pub n_per_cell: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored snapshots (norms are recorded every step).
    pub snapshot_stride: usize,
    /// Apply the 2/3 rule to the nonlinear term.
    pub dealias: bool,
    /// Escalate the step-size sanity warning to an error.
    pub strict: bool,
    /// Drop the cubic term (diagnostic runs only; forcing is kept).
    pub linear_only: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            m_cells: 64,
            n_per_cell: 64,
            dt: 0.025,
            t_end: 400.0,
            snapshot_stride: 100,
            dealias: true,
            strict: false,
            linear_only: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end < self.dt {
            return Err(Error::Config(format!(
                "t_end = {} is shorter than one step dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be >= 1".into()));
        }
        if self.m_cells == 0 || self.n_per_cell < 4 {
            return Err(Error::Config("grid must have cells and >= 4 points per cell".into()));
        }
        Ok(())
    }
}

/// Evolution record: dense norms, sparse snapshots.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `||d^j/dx^j (psi - phi)||_{L^2}` for `j = 0..=4`, one row per time.
    pub norm_series: Vec<[f64; 5]>,
    pub snapshot_times: Vec<f64>,
    /// The perturbation `psi - phi` as a 2-vector field at snapshot times.
    pub snapshots: Vec<ExtendedField>,
    pub warnings: Vec<String>,
}

/// `(e^{z/2}-1)/z` and the three ETDRK4 weight functions, evaluated by a
/// 16-point contour mean near the removable singularity.
fn phi_weights(z: C64) -> (C64, C64, C64, C64) {
    let eval = |f: &dyn Fn(C64) -> C64, z: C64| -> C64 {
        if z.norm() >= 1.0 {
            f(z)
        } else {
            let mut acc = C64::default();
            for k in 0..16 {
                let theta = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / 16.0;
                acc += f(z + C64::new(0.0, theta).exp());
            }
            acc / 16.0
        }
    };
    let q = eval(&|z: C64| ((z / 2.0).exp() - 1.0) / z, z);
    let f1 = eval(
        &|z: C64| (-4.0 - z + z.exp() * (4.0 - 3.0 * z + z * z)) / (z * z * z),
        z,
    );
    let f2 = eval(&|z: C64| (2.0 + z + z.exp() * (z - 2.0)) / (z * z * z), z);
    let f3 = eval(
        &|z: C64| (-4.0 - 3.0 * z - z * z + z.exp() * (4.0 - z)) / (z * z * z),
        z,
    );
    (q, f1, f2, f3)
}

/// Evolve `psi = phi + v0` under the full LLE and record the perturbation.
pub fn run_lle(p: &WaveProfile, v0: &ExtendedField, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if v0.m_cells != cfg.m_cells || v0.n_per_cell != cfg.n_per_cell {
        return Err(Error::Structure("initial data grid disagrees with the config".into()));
    }
    let n_tot = cfg.m_cells * cfg.n_per_cell;
    let length = cfg.m_cells as f64 * p.period;
    let (alpha, beta, forcing) = (p.params.alpha, p.params.beta, p.params.forcing);
    let h = cfg.dt;

    let mut warnings = Vec::new();
    // Linear symbol per mode; sanity bound on the step size.
    let mut symbol = Vec::with_capacity(n_tot);
    let mut max_sym = 0.0f64;
    for j in 0..n_tot {
        let k = 2.0 * std::f64::consts::PI * signed_mode(j, n_tot) as f64 / length;
        let l = C64::new(-1.0, beta * k * k - alpha);
        max_sym = max_sym.max(l.norm());
        symbol.push(l);
    }
    if h * max_sym > 50.0 {
        let msg = format!(
            "dt * max|linear symbol| = {:.2} > 50; the step may under-resolve oscillations",
            h * max_sym
        );
        if cfg.strict {
            return Err(Error::Config(msg));
        }
        warnings.push(msg);
    }

    // Per-mode integrator weights.
    let mut e_full = Vec::with_capacity(n_tot);
    let mut e_half = Vec::with_capacity(n_tot);
    let mut wq = Vec::with_capacity(n_tot);
    let mut w1 = Vec::with_capacity(n_tot);
    let mut w2 = Vec::with_capacity(n_tot);
    let mut w3 = Vec::with_capacity(n_tot);
    for l in &symbol {
        let z = h * l;
        e_full.push(z.exp());
        e_half.push((z / 2.0).exp());
        let (q, f1, f2, f3) = phi_weights(z);
        wq.push(h * q);
        w1.push(h * f1);
        w2.push(h * f2);
        w3.push(h * f3);
    }

    let dealias_keep: Vec<bool> = (0..n_tot)
        .map(|j| !cfg.dealias || 3 * signed_mode(j, n_tot).unsigned_abs() as usize <= n_tot)
        .collect();

    // Initial state and the reference wave in spectral space.
    let phi_ext: Vec<C64> = {
        let cell = p.sample(cfg.n_per_cell);
        (0..n_tot).map(|j| cell[j % cfg.n_per_cell]).collect()
    };
    let phi_hat = dft(&phi_ext);
    let mut u = {
        let psi0: Vec<C64> = v0
            .psi()
            .iter()
            .zip(&phi_ext)
            .map(|(v, f)| v + f)
            .collect();
        let mut s = dft(&psi0);
        for (j, keep) in dealias_keep.iter().enumerate() {
            if !keep {
                s[j] = C64::default();
            }
        }
        s
    };

    let nonlinear = |spec: &[C64]| -> Result<Vec<C64>> {
        let psi = idft(spec);
        let mut n = Vec::with_capacity(psi.len());
        for z in &psi {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::Numerical("state left the finite range".into()));
            }
            let cubic = if cfg.linear_only {
                C64::default()
            } else {
                C64::i() * z.norm_sqr() * z
            };
            n.push(cubic + forcing);
        }
        let mut s = dft(&n);
        for (j, keep) in dealias_keep.iter().enumerate() {
            if !keep {
                s[j] = C64::default();
            }
        }
        Ok(s)
    };

    let record_norms = |u: &[C64]| -> [f64; 5] {
        let mut out = [0.0; 5];
        for j in 0..n_tot {
            let k = 2.0 * std::f64::consts::PI * signed_mode(j, n_tot) as f64 / length;
            let d = (u[j] - phi_hat[j]).norm_sqr();
            let mut kp = 1.0;
            for o in 0..5 {
                out[o] += kp * d;
                kp *= k * k;
            }
        }
        for o in &mut out {
            *o = (length * *o).sqrt();
        }
        out
    };

    let snapshot_of = |u: &[C64]| -> ExtendedField {
        let vhat: Vec<C64> = u.iter().zip(&phi_hat).map(|(a, b)| a - b).collect();
        let v = idft(&vhat);
        let mut f = ExtendedField::zeros(cfg.m_cells, cfg.n_per_cell, p.period);
        for (j, z) in v.iter().enumerate() {
            f.vr[j] = C64::new(z.re, 0.0);
            f.vi[j] = C64::new(z.im, 0.0);
        }
        f
    };

    let n_steps = (cfg.t_end / h).round().max(1.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut norm_series = Vec::with_capacity(n_steps + 1);
    let mut snapshot_times = Vec::new();
    let mut snapshots = Vec::new();

    times.push(0.0);
    norm_series.push(record_norms(&u));
    snapshot_times.push(0.0);
    snapshots.push(snapshot_of(&u));

    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * h;
        let nu = nonlinear(&u).map_err(|_| Error::BlowUp { t: t_prev })?;
        let a: Vec<C64> = (0..n_tot).map(|j| e_half[j] * u[j] + wq[j] * nu[j]).collect();
        let na = nonlinear(&a).map_err(|_| Error::BlowUp { t: t_prev })?;
        let b: Vec<C64> = (0..n_tot).map(|j| e_half[j] * u[j] + wq[j] * na[j]).collect();
        let nb = nonlinear(&b).map_err(|_| Error::BlowUp { t: t_prev })?;
        let c: Vec<C64> = (0..n_tot)
            .map(|j| e_half[j] * a[j] + wq[j] * (2.0 * nb[j] - nu[j]))
            .collect();
        let nc = nonlinear(&c).map_err(|_| Error::BlowUp { t: t_prev })?;
        for j in 0..n_tot {
            u[j] = e_full[j] * u[j]
                + w1[j] * nu[j]
                + 2.0 * w2[j] * (na[j] + nb[j])
                + w3[j] * nc[j];
        }
        let t = step as f64 * h;
        let norms = record_norms(&u);
        if !norms[0].is_finite() || norms[0] > 1e8 {
            return Err(Error::BlowUp { t: t_prev });
        }
        times.push(t);
        norm_series.push(norms);
        if step % cfg.snapshot_stride == 0 || step == n_steps {
            snapshot_times.push(t);
            snapshots.push(snapshot_of(&u));
        }
    }

    Ok(Trajectory {
        times,
        norm_series,
        snapshot_times,
        snapshots,
        warnings,
    })
}

/// Apply the linearization `A[phi] = -1 + J L[phi]` to a 2-vector field
/// on the extended grid, with the derivatives taken spectrally.
pub fn apply_linearization(p: &WaveProfile, v: &ExtendedField) -> Result<ExtendedField> {
    let (alpha, beta) = (p.params.alpha, p.params.beta);
    let phi_cell = p.sample(v.n_per_cell);
    let vxx = crate::field::spectral_derivative_extended(v, 2)?;
    let mut out = ExtendedField::zeros(v.m_cells, v.n_per_cell, v.period);
    for j in 0..v.total_points() {
        let phi = phi_cell[j % v.n_per_cell];
        let (pr, pi) = (phi.re, phi.im);
        let (a, b) = (v.vr[j].re, v.vi[j].re);
        let l11 = -beta * vxx.vr[j].re - alpha * a + (3.0 * pr * pr + pi * pi) * a
            + 2.0 * pr * pi * b;
        let l21 = 2.0 * pr * pi * a
            + (-beta * vxx.vi[j].re - alpha * b + (pr * pr + 3.0 * pi * pi) * b);
        out.vr[j] = C64::new(-a - l21, 0.0);
        out.vi[j] = C64::new(-b + l11, 0.0);
    }
    Ok(out)
}

/// Quadratic-plus-cubic remainder of the linearization:
/// `N~(v) = J[(3v_r^2+v_i^2, 2v_rv_i; 2v_rv_i, v_r^2+3v_i^2) phi + |v|^2 v]`.
pub fn unmod_nonlinearity(p: &WaveProfile, v: &ExtendedField) -> ExtendedField {
    let phi_cell = p.sample(v.n_per_cell);
    let mut out = ExtendedField::zeros(v.m_cells, v.n_per_cell, v.period);
    for j in 0..v.total_points() {
        let (vr, vi) = (v.vr[j].re, v.vi[j].re);
        let phi = phi_cell[j % v.n_per_cell];
        let m11 = 3.0 * vr * vr + vi * vi;
        let m12 = 2.0 * vr * vi;
        let m22 = vr * vr + 3.0 * vi * vi;
        let sq = vr * vr + vi * vi;
        let pre_r = m11 * phi.re + m12 * phi.im + sq * vr;
        let pre_i = m12 * phi.re + m22 * phi.im + sq * vi;
        // J (a, b) = (-b, a).
        out.vr[j] = C64::new(-pre_i, 0.0);
        out.vi[j] = C64::new(pre_r, 0.0);
    }
    out
}

/// The two pieces of the modulated nonlinearity `N = Q + d/dx R`:
/// `Q = (1-g_x) N~(v)` and
/// `R = -g_t v - beta J[g_xx v + 2 g_x v_x + (g_x^2/(1-g_x)) (phi' + v_x)]`.
pub fn mod_nonlinearity(
    p: &WaveProfile,
    v: &ExtendedField,
    gamma: &PhaseField,
    gamma_t: &PhaseField,
) -> Result<(ExtendedField, ExtendedField)> {
    let total = v.total_points();
    if gamma.values.len() != total || gamma_t.values.len() != total {
        return Err(Error::Structure("phase grids disagree with the field grid".into()));
    }
    let gx = gamma.derivative(1)?;
    let gxx = gamma.derivative(2)?;
    let gx_max = gx.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if gx_max >= 0.5 {
        return Err(Error::ModulationTooLarge(format!(
            "||gamma_x||_inf = {gx_max:.3e} >= 1/2: the shifted coordinate is near-singular"
        )));
    }
    let beta = p.params.beta;
    let phi_prime_cell = p.sample_derivative(v.n_per_cell, 1);
    let vx = crate::field::spectral_derivative_extended(v, 1)?;
    let nl = unmod_nonlinearity(p, v);

    let mut q = ExtendedField::zeros(v.m_cells, v.n_per_cell, v.period);
    let mut r = ExtendedField::zeros(v.m_cells, v.n_per_cell, v.period);
    for j in 0..total {
        let fac = 1.0 - gx[j];
        q.vr[j] = C64::new(fac * nl.vr[j].re, 0.0);
        q.vi[j] = C64::new(fac * nl.vi[j].re, 0.0);

        let phi_p = phi_prime_cell[j % v.n_per_cell];
        let sing = gx[j] * gx[j] / fac;
        let inner_r = gxx[j] * v.vr[j].re + 2.0 * gx[j] * vx.vr[j].re + sing * (phi_p.re + vx.vr[j].re);
        let inner_i = gxx[j] * v.vi[j].re + 2.0 * gx[j] * vx.vi[j].re + sing * (phi_p.im + vx.vi[j].re);
        // -g_t v - beta J(inner): J (a, b) = (-b, a).
        r.vr[j] = C64::new(-gamma_t.values[j] * v.vr[j].re + beta * inner_i, 0.0);
        r.vi[j] = C64::new(-gamma_t.values[j] * v.vi[j].re - beta * inner_r, 0.0);
    }
    Ok((q, r))
}
