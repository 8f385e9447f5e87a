//! FFT helpers shared by the synthesis and estimation code.

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, `X[k] = sum_n x[n] e^{-j2πkn/N}`.
pub(crate) fn fft(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Unnormalized inverse DFT, `x[n] = sum_k X[k] e^{+j2πkn/N}`.
pub(crate) fn ifft(buf: &mut [C64]) {
    if buf.len() <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}

/// Circular cross-correlation `r[k] = sum_l x[l] conj(y[(l - k) mod N])`.
pub(crate) fn circular_xcorr(x: &[C64], y: &[C64]) -> Vec<C64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut xf = x.to_vec();
    let mut yf = y.to_vec();
    fft(&mut xf);
    fft(&mut yf);
    for (a, b) in xf.iter_mut().zip(&yf) {
        *a *= b.conj();
    }
    ifft(&mut xf);
    let scale = 1.0 / n as f64;
    xf.iter_mut().for_each(|v| *v *= scale);
    xf
}

/// Zero-pads `x` to `len` samples (`len >= x.len()`).
pub(crate) fn zero_pad(x: &[C64], len: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); len.max(x.len())];
    out[..x.len()].copy_from_slice(x);
    out
}
