//! Thin wrappers around rustfft with cached plans.
//!
//! Convention: `dft` returns coefficients normalized by 1/n, so that
//! `f_j = sum_n F_n exp(2*pi*i*n*j/n_total)` and `idft` is the plain
//! unnormalized synthesis sum. Bin `j` carries the signed mode
//! `signed_mode(j, n)`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Forward DFT, normalized by 1/n.
pub fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Unnormalized synthesis sum (inverse of [`dft`]).
pub fn idft(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    plan(buf.len(), true).process(&mut buf);
    buf
}

/// Signed mode carried by DFT bin `j` of an `n`-point transform.
pub fn signed_mode(j: usize, n: usize) -> i64 {
    let j = j as i64;
    let n = n as i64;
    if j < (n + 1) / 2 {
        j
    } else {
        j - n
    }
}

/// DFT bin holding signed mode `ell` (taken modulo n).
pub fn bin(ell: i64, n: usize) -> usize {
    let n = n as i64;
    ell.rem_euclid(n) as usize
}
