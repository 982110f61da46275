use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Result};

/// Unitary DFT of a fixed length, `X_k = n^{-1/2} Σ_t x_t e^{-2πikt/n}`.
///
/// Planned once and reused; transforms run in place.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft")
            .field("len", &self.len)
            .finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return domain("DFT length must be at least 1");
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match the plan");
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match the plan");
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// One-shot unitary forward transform.
pub fn unitary_dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = UnitaryDft::new(v.len())?;
    let mut out = v.to_vec();
    plan.forward(&mut out);
    Ok(out)
}

/// One-shot unitary inverse transform.
pub fn unitary_idft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = UnitaryDft::new(v.len())?;
    let mut out = v.to_vec();
    plan.inverse(&mut out);
    Ok(out)
}
