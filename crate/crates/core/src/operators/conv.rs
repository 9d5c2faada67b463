//! Linear (non-periodic) 1D convolution with a finite kernel, direct or via FFT.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Above this many multiply-adds the FFT path is used.
const DIRECT_LIMIT: usize = 1 << 22;

type Plans = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn plans() -> &'static Mutex<(FftPlanner<f64>, Plans)> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, Plans)>> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

/// A cached FFT plan of length `len`.
pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = plans().lock().expect("fft planner lock");
    let (planner, cache) = &mut *guard;
    cache
        .entry((len, inverse))
        .or_insert_with(|| if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) })
        .clone()
}

/// Kernel values `k(o)` at offsets `o ∈ [-reach, reach]`, stored at `o + reach`.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub reach: usize,
    pub values: Vec<f64>,
}

impl Stencil {
    pub fn from_fn(reach: usize, k: impl Fn(i64) -> f64) -> Self {
        let r = reach as i64;
        Stencil { reach, values: (-r..=r).map(k).collect() }
    }

    fn at(&self, o: i64) -> f64 {
        self.values[(o + self.reach as i64) as usize]
    }
}

/// `out[i] = Σ_j k(i - j) v[j]`, zero outside `0..v.len()`.
pub(crate) fn convolve(v: &[f64], k: &Stencil) -> Vec<f64> {
    let n = v.len();
    let first = v.iter().position(|x| *x != 0.0);
    let Some(first) = first else {
        return vec![0.0; n];
    };
    let last = v.iter().rposition(|x| *x != 0.0).expect("nonzero exists");
    let support = last - first + 1;
    if support.saturating_mul(n) <= DIRECT_LIMIT {
        return convolve_direct(v, k, first, last);
    }
    convolve_fft(v, k)
}

fn convolve_direct(v: &[f64], k: &Stencil, first: usize, last: usize) -> Vec<f64> {
    let reach = k.reach as i64;
    (0..v.len())
        .map(|i| {
            let i = i as i64;
            let lo = (i - reach).max(first as i64);
            let hi = (i + reach).min(last as i64);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += k.at(i - j) * v[j as usize];
            }
            acc
        })
        .collect()
}

fn convolve_fft(v: &[f64], k: &Stencil) -> Vec<f64> {
    let n = v.len();
    let len = (n + k.reach + 1).next_power_of_two();
    let mut a: Vec<Complex64> = (0..len).map(|i| Complex64::new(if i < n { v[i] } else { 0.0 }, 0.0)).collect();
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    for (idx, &val) in k.values.iter().enumerate() {
        let o = idx as i64 - k.reach as i64;
        b[o.rem_euclid(len as i64) as usize] = Complex64::new(val, 0.0);
    }
    let fwd = plan(len, false);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    plan(len, true).process(&mut a);
    let scale = 1.0 / len as f64;
    a[..n].iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_matches_direct() {
        let v: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64 - 50.0) / 7.0).collect();
        let k = Stencil::from_fn(299, |o| 1.0 / (1.0 + (o as f64).abs()) * if o < 0 { -1.0 } else { 1.0 });
        let a = convolve_direct(&v, &k, 0, 299);
        let b = convolve_fft(&v, &k);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn short_stencil() {
        let v = vec![0.0, 1.0, 0.0, 0.0, 2.0];
        let k = Stencil::from_fn(1, |o| [1.0, 10.0, 100.0][(o + 1) as usize]);
        assert_eq!(convolve(&v, &k), vec![1.0, 10.0, 100.0, 2.0, 20.0]);
    }
}
