//! Spatial site sets and the coordinate standardization applied before
//! kernel evaluation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative singular-value cutoff below which the polynomial design is
/// considered rank deficient.
const COLLINEAR_RTOL: f64 = 1e-10;

/// Affine map from raw coordinates to standardized ones:
/// `(p - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordTransform {
    pub center: [f64; 2],
    pub scale: f64,
}

impl CoordTransform {
    #[inline]
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.center[0]) / self.scale,
            (p[1] - self.center[1]) / self.scale,
        ]
    }

    #[inline]
    pub fn invert(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0] * self.scale + self.center[0],
            p[1] * self.scale + self.center[1],
        ]
    }
}

/// `n >= 4` distinct, non-collinear sites in standardized coordinates.
#[derive(Debug, Clone)]
pub struct SpatialDesign {
    sites: Vec<[f64; 2]>,
    transform: CoordTransform,
}

impl SpatialDesign {
    pub fn sites(&self) -> &[[f64; 2]] {
        &self.sites
    }

    pub fn transform(&self) -> CoordTransform {
        self.transform
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    /// Sites mapped back to the caller's coordinate system.
    pub fn raw_sites(&self) -> Vec<[f64; 2]> {
        self.sites.iter().map(|&p| self.transform.invert(p)).collect()
    }

    /// Polynomial design `T` with columns `(1, x1, x2)`.
    pub fn polynomial_design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), 3, |i, j| match j {
            0 => 1.0,
            _ => self.sites[i][j - 1],
        })
    }
}

/// Center the sites at their mean and rescale to unit RMS radius.
pub fn build_design(raw_sites: &[[f64; 2]]) -> Result<SpatialDesign> {
    let n = raw_sites.len();
    if n < 4 {
        return Err(Error::TooFewSites(n));
    }
    for (i, p) in raw_sites.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::NonFiniteSite(i));
        }
    }
    check_duplicates(raw_sites)?;

    let nf = n as f64;
    let center = [
        raw_sites.iter().map(|p| p[0]).sum::<f64>() / nf,
        raw_sites.iter().map(|p| p[1]).sum::<f64>() / nf,
    ];
    let ms = raw_sites
        .iter()
        .map(|p| (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2))
        .sum::<f64>()
        / nf;
    let transform = CoordTransform {
        center,
        scale: ms.sqrt(),
    };
    let sites: Vec<[f64; 2]> = raw_sites.iter().map(|&p| transform.apply(p)).collect();
    let design = SpatialDesign { sites, transform };

    let rank = polynomial_rank(&design.polynomial_design());
    if rank < 3 {
        return Err(Error::CollinearSites(rank));
    }
    Ok(design)
}

fn check_duplicates(sites: &[[f64; 2]]) -> Result<()> {
    let mag = sites
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = f64::EPSILON * mag;
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            let d = (sites[i][0] - sites[j][0]).hypot(sites[i][1] - sites[j][1]);
            if d <= tol {
                return Err(Error::DuplicateSites(i, j));
            }
        }
    }
    Ok(())
}

fn polynomial_rank(t: &DMatrix<f64>) -> usize {
    let sv = t.clone().svd(false, false).singular_values;
    let smax = sv.max();
    sv.iter().filter(|&&s| s > COLLINEAR_RTOL * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_is_centered_with_unit_rms() {
        let d = build_design(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(d.n(), 4);
        let t = d.transform();
        assert!((t.center[0] - 0.5).abs() < 1e-15 && (t.center[1] - 0.5).abs() < 1e-15);
        let rms = (d.sites().iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / 4.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-14);
        for p in d.sites() {
            assert!((p[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        }
    }

    #[test]
    fn raw_sites_round_trip() {
        let raw = [[3.0, -1.0], [10.0, 2.0], [4.5, 7.0], [0.0, 0.0], [8.0, 8.0]];
        let d = build_design(&raw).unwrap();
        for (a, b) in d.raw_sites().iter().zip(raw.iter()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_site_is_rejected() {
        let raw = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [2.0, 3.0]];
        assert_eq!(build_design(&raw).unwrap_err(), Error::DuplicateSites(1, 3));
    }

    #[test]
    fn too_few_sites() {
        let raw = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert_eq!(build_design(&raw).unwrap_err(), Error::TooFewSites(3));
    }

    #[test]
    fn collinear_sites() {
        let raw: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        // rank via column-pivoted QR, independent of the SVD used above
        let t = DMatrix::from_fn(5, 3, |i, j| if j == 0 { 1.0 } else { raw[i][j - 1] });
        let qr = t.col_piv_qr();
        let r = qr.r();
        let rank = (0..3).filter(|&k| r[(k, k)].abs() > 1e-10 * r[(0, 0)].abs()).count();
        assert_eq!(rank, 2);
        assert_eq!(build_design(&raw).unwrap_err(), Error::CollinearSites(rank));
    }

    #[test]
    fn non_finite_site() {
        let raw = [[0.0, 0.0], [1.0, f64::NAN], [0.0, 1.0], [1.0, 1.0]];
        assert_eq!(build_design(&raw).unwrap_err(), Error::NonFiniteSite(1));
    }
}
