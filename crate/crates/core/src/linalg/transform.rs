//! Fast Walsh–Hadamard transform and FFT-based cyclic convolution.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::matrix::DenseVector;
use crate::error::{Error, Result};

/// Unnormalized in-place Walsh–Hadamard butterfly: `buf ← H buf` with
/// `H[a, b] = (−1)^popcount(a & b)`.
///
/// Panics if the length is not a power of two.
pub fn fwht_in_place(buf: &mut [f64]) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for chunk in buf.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}

/// Entry `(a, b)` of the unnormalized Hadamard matrix.
#[inline]
pub fn hadamard_sign(a: usize, b: usize) -> f64 {
    if (a & b).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Orthonormal Walsh–Hadamard transform `H v / √len`. No padding.
pub fn fwht(v: &DenseVector) -> Result<DenseVector> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = v.as_slice().to_vec();
    fwht_in_place(&mut buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|x| *x *= s);
    Ok(DenseVector::from_raw(buf))
}

/// Planned forward/inverse FFT pair for cyclic convolutions of one length.
#[derive(Clone)]
pub struct CyclicConvolver {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CyclicConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CyclicConvolver").field("len", &self.len).finish()
    }
}

impl CyclicConvolver {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "convolution length must be positive");
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.len);
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Writes the cyclic convolution whose operand spectra are `a` and `b`
    /// into `out`, using `scratch` (length `len`) as workspace.
    pub fn convolve_spectra(&self, a: &[Complex64], b: &[Complex64], scratch: &mut [Complex64], out: &mut [f64]) {
        for ((s, x), y) in scratch.iter_mut().zip(a).zip(b) {
            *s = x * y;
        }
        self.inverse.process(scratch);
        let inv = 1.0 / self.len as f64;
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o = s.re * inv;
        }
    }

    pub fn convolve(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let (a, b) = (self.spectrum(u), self.spectrum(v));
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.len];
        let mut out = vec![0.0; self.len];
        self.convolve_spectra(&a, &b, &mut scratch, &mut out);
        out
    }
}

/// `result[r] = Σ_j u[j] · v[(r − j) mod s]`, via FFT.
pub fn circular_convolve(u: &DenseVector, v: &DenseVector) -> Result<DenseVector> {
    if u.len() != v.len() {
        return Err(Error::mismatch("circular_convolve", (u.len(), 1), (v.len(), 1)));
    }
    if u.is_empty() {
        return Ok(DenseVector::zeros(0));
    }
    let conv = CyclicConvolver::new(u.len());
    Ok(DenseVector::from_raw(conv.convolve(u.as_slice(), v.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::relative_diff;
    use proptest::prelude::*;

    fn direct_convolution(u: &[f64], v: &[f64]) -> Vec<f64> {
        let s = u.len();
        (0..s)
            .map(|r| (0..s).map(|j| u[j] * v[(r + s - j) % s]).sum())
            .collect()
    }

    fn dv(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn fwht_small_cases() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = fwht(&dv(&[1.0, 0.0])).unwrap();
        assert!(relative_diff(a.as_slice(), &[r, r]) < 1e-15);
        let b = fwht(&dv(&[1.0, 1.0])).unwrap();
        assert!((b[0] - 2f64.sqrt()).abs() < 1e-15 && b[1].abs() < 1e-15);
        assert_eq!(fwht(&DenseVector::zeros(8)).unwrap(), DenseVector::zeros(8));
        assert_eq!(fwht(&DenseVector::zeros(6)), Err(Error::NotPowerOfTwo(6)));
    }

    #[test]
    fn fwht_matches_explicit_hadamard() {
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let fast = fwht(&dv(&v)).unwrap();
        let slow: Vec<f64> = (0..16)
            .map(|a| (0..16).map(|b| hadamard_sign(a, b) * v[b]).sum::<f64>() / 4.0)
            .collect();
        assert!(relative_diff(fast.as_slice(), &slow) < 1e-14);
    }

    #[test]
    fn convolution_small_cases() {
        let (a, b, c) = (1.5, -2.0, 0.25);
        let v = dv(&[a, b, c]);
        assert_eq!(circular_convolve(&dv(&[1.0, 0.0, 0.0]), &v).unwrap().len(), 3);
        let id = circular_convolve(&dv(&[1.0, 0.0, 0.0]), &v).unwrap();
        assert!(relative_diff(id.as_slice(), &[a, b, c]) < 1e-14);
        let shift = circular_convolve(&dv(&[0.0, 1.0, 0.0]), &v).unwrap();
        assert!(relative_diff(shift.as_slice(), &[c, a, b]) < 1e-14);
        let two = circular_convolve(&dv(&[1.0, 1.0]), &dv(&[1.0, 1.0])).unwrap();
        assert!(relative_diff(two.as_slice(), &[2.0, 2.0]) < 1e-14);
        assert!(circular_convolve(&dv(&[1.0]), &dv(&[1.0, 2.0])).is_err());
    }

    proptest! {
        #[test]
        fn fwht_is_orthonormal_involution(v in proptest::collection::vec(-10.0f64..10.0, 32)) {
            let x = dv(&v);
            let y = fwht(&x).unwrap();
            let n = x.norm().max(1e-300);
            prop_assert!((y.norm() - x.norm()).abs() <= 1e-12 * n);
            let z = fwht(&y).unwrap();
            prop_assert!(relative_diff(z.as_slice(), x.as_slice()) <= 1e-12);
        }

        #[test]
        fn convolution_commutes_and_matches_direct(
            (u, v) in (1usize..=64).prop_flat_map(|s| (
                proptest::collection::vec(-5.0f64..5.0, s),
                proptest::collection::vec(-5.0f64..5.0, s),
            ))
        ) {
            let uv = circular_convolve(&dv(&u), &dv(&v)).unwrap();
            let vu = circular_convolve(&dv(&v), &dv(&u)).unwrap();
            let direct = direct_convolution(&u, &v);
            let scale = crate::linalg::matrix::norm2(&u) * crate::linalg::matrix::norm2(&v);
            let err = |a: &[f64]| a.iter().zip(&direct).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err(uv.as_slice()) <= 1e-10 * scale.max(1e-300));
            prop_assert!(err(vu.as_slice()) <= 1e-10 * scale.max(1e-300));
        }
    }
}
