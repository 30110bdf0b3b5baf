//! Thin-plate radial basis kernel.

use crate::error::{Error, Result};

/// Thin-plate kernel `a * r^(2m-d) * log r` (even `d`).
///
/// Only the spatial case `d = 2, m = 2` is evaluated; other orders can be
/// represented but are rejected by [`TpsKernel::eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpsKernel {
    pub m: usize,
    pub d: usize,
    pub a_md: f64,
}

impl Default for TpsKernel {
    fn default() -> Self {
        Self::spatial(1.0)
    }
}

impl TpsKernel {
    pub fn spatial(a_md: f64) -> Self {
        TpsKernel { m: 2, d: 2, a_md }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 2 || self.m != 2 {
            return Err(Error::UnsupportedKernel { d: self.d, m: self.m });
        }
        if !(self.a_md > 0.0 && self.a_md.is_finite()) {
            return Err(Error::InvalidKernelConstant(self.a_md));
        }
        Ok(())
    }

    /// Kernel value at distance `r`; `r = 0` maps to the continuous limit 0.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.eval_unchecked(r))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        if r > 0.0 {
            self.a_md * r * r * r.ln()
        } else {
            0.0
        }
    }
}

/// Free-function form of [`TpsKernel::eval`].
pub fn tps_kernel_eval(r: f64, k: &TpsKernel) -> Result<f64> {
    k.eval(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_distance_is_zero() {
        assert_eq!(tps_kernel_eval(1.0, &TpsKernel::default()).unwrap(), 0.0);
    }

    #[test]
    fn origin_uses_limit() {
        assert_eq!(tps_kernel_eval(0.0, &TpsKernel::default()).unwrap(), 0.0);
    }

    #[test]
    fn distance_two() {
        let v = tps_kernel_eval(2.0, &TpsKernel::default()).unwrap();
        assert!((v - 4.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn constant_scales() {
        let v = tps_kernel_eval(2.0, &TpsKernel::spatial(3.0)).unwrap();
        assert!((v - 12.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_other_orders() {
        let k = TpsKernel { m: 3, d: 2, a_md: 1.0 };
        assert_eq!(tps_kernel_eval(1.0, &k), Err(Error::UnsupportedKernel { d: 2, m: 3 }));
        let k = TpsKernel { m: 2, d: 3, a_md: 1.0 };
        assert!(tps_kernel_eval(1.0, &k).is_err());
        assert!(tps_kernel_eval(1.0, &TpsKernel::spatial(0.0)).is_err());
    }
}
