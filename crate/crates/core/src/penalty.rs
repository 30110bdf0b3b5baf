//! Thin-plate-spline basis matrices and the roughness penalty `M`.
//!
//! For sites `x_1..x_n` the spline is `f(x) = T(x) beta + sum_i psi_i(x) gamma_i`
//! with the side constraint `T' gamma = 0`. Writing `gamma = F2 lambda`, where
//! the columns of `F2` span the orthogonal complement of `col(T)`, the field
//! values at the sites are `nu = G omega` with `G = [T, K F2]` and
//! `omega = (beta, lambda)`. The roughness `gamma' K gamma` then becomes the
//! quadratic form `nu' M nu` with `M = G^{-T} H G^{-1}` and
//! `H = blockdiag(0, F2' K F2)`.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, LU};

use crate::design::SpatialDesign;
use crate::error::{Error, Result};
use crate::kernel::TpsKernel;

/// Number of polynomial terms for `m = 2, d = 2`.
pub const NULL_DIM: usize = 3;

/// Largest accepted condition estimate for `G`.
pub const MAX_BASIS_CONDITION: f64 = 1e12;

/// Slack multiplier in the zero-eigenvalue threshold
/// `n * lambda_max * eps * ZERO_EIG_SLACK`.
pub const ZERO_EIG_SLACK: f64 = 64.0;

/// Basis, penalty and spectral decomposition for one design.
#[derive(Debug, Clone)]
pub struct SplinePenalty {
    design: SpatialDesign,
    kernel: TpsKernel,
    pub t: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub f2: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Orthonormal eigenvectors of `M`, columns aligned with `lambdas`.
    pub q: DMatrix<f64>,
    /// Eigenvalues of `M`, sorted descending; the trailing three are exactly 0.
    pub lambdas: DVector<f64>,
    pub rank: usize,
    /// Sum of `ln(lambda_i)` over the positive eigenvalues.
    pub log_pdet: f64,
    pub condition: f64,
    g_lu: LU<f64, Dyn, Dyn>,
}

/// Polynomial and kernel weights of a thin-plate surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoefficients {
    pub beta: [f64; 3],
    pub gamma: DVector<f64>,
}

impl SplinePenalty {
    pub fn design(&self) -> &SpatialDesign {
        &self.design
    }

    pub fn kernel(&self) -> &TpsKernel {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    /// Zero threshold used when the spectrum was classified.
    pub fn zero_threshold(&self) -> f64 {
        zero_threshold(self.n(), self.lambdas[0])
    }

    /// `omega = G^{-1} nu`.
    pub fn solve_basis(&self, nu: &DVector<f64>) -> Result<DVector<f64>> {
        if nu.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: nu.len(),
            });
        }
        self.g_lu
            .solve(nu)
            .ok_or(Error::IllConditionedBasis(f64::INFINITY))
    }
}

fn zero_threshold(n: usize, lambda_max: f64) -> f64 {
    n as f64 * lambda_max.max(0.0) * f64::EPSILON * ZERO_EIG_SLACK
}

/// Kernel matrix between two point sets (standardized coordinates).
pub(crate) fn kernel_matrix(kernel: &TpsKernel, rows: &[[f64; 2]], cols: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let r = (rows[i][0] - cols[j][0]).hypot(rows[i][1] - cols[j][1]);
        kernel.eval_unchecked(r)
    })
}

/// Flip column signs so the first entry with magnitude above `tol` is positive.
fn fix_column_signs(mat: &mut DMatrix<f64>) {
    for mut col in mat.column_iter_mut() {
        let scale = col.amax();
        if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-8 * scale) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Eigenpairs of a symmetric matrix, reordered by `order` on eigenvalues.
fn sorted_eigen(a: DMatrix<f64>, descending: bool) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a);
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        let o = eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Orthonormal basis of the complement of `col(T)` from the spectrum of `T T'`.
fn null_space_basis(t: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.nrows();
    let (_, vecs) = sorted_eigen(t * t.transpose(), false);
    let mut f2 = vecs.columns(0, n - NULL_DIM).into_owned();
    fix_column_signs(&mut f2);
    f2
}

/// Assemble `T`, `K`, `F2`, `G`, `H`, `M` and the eigen-decomposition of `M`.
pub fn build_penalty(design: &SpatialDesign, kernel: &TpsKernel) -> Result<SplinePenalty> {
    kernel.validate()?;
    let n = design.n();
    let t = design.polynomial_design();
    let k = kernel_matrix(kernel, design.sites(), design.sites());
    let f2 = null_space_basis(&t);
    let kf2 = &k * &f2;

    let mut g = DMatrix::zeros(n, n);
    g.columns_mut(0, NULL_DIM).copy_from(&t);
    g.columns_mut(NULL_DIM, n - NULL_DIM).copy_from(&kf2);

    let mut h = DMatrix::zeros(n, n);
    let inner = f2.transpose() * &kf2;
    h.view_mut((NULL_DIM, NULL_DIM), (n - NULL_DIM, n - NULL_DIM))
        .copy_from(&inner);
    // F2' K F2 is symmetric in exact arithmetic
    h = (&h + h.transpose()) * 0.5;

    let sv = g.clone().svd(false, false).singular_values;
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(condition <= MAX_BASIS_CONDITION) {
        return Err(Error::IllConditionedBasis(condition));
    }

    // M = G^{-T} H G^{-1}: Y = G^{-T} H, then M' = G^{-T} Y'.
    let gt_lu = g.transpose().lu();
    let y = gt_lu
        .solve(&h)
        .ok_or(Error::IllConditionedBasis(condition))?;
    let mt = gt_lu
        .solve(&y.transpose())
        .ok_or(Error::IllConditionedBasis(condition))?;
    let m = (&mt + mt.transpose()) * 0.5;

    let (mut lambdas, mut q) = sorted_eigen(m.clone(), true);
    fix_column_signs(&mut q);
    let thresh = zero_threshold(n, lambdas[0]);
    let zeros = lambdas.iter().filter(|&&l| l < thresh).count();
    if zeros != NULL_DIM {
        return Err(Error::DegenerateRank(zeros));
    }
    lambdas.iter_mut().filter(|l| **l < thresh).for_each(|l| *l = 0.0);
    let log_pdet = lambdas.iter().filter(|&&l| l > 0.0).map(|l| l.ln()).sum();

    Ok(SplinePenalty {
        design: design.clone(),
        kernel: *kernel,
        g_lu: g.clone().lu(),
        t,
        k,
        f2,
        g,
        h,
        m,
        q,
        lambdas,
        rank: n - NULL_DIM,
        log_pdet,
        condition,
    })
}

/// Map field values at the sites to spline coefficients: `beta` is the first
/// three entries of `G^{-1} nu` and `gamma = F2 * rest`.
pub fn recover_coefficients(penalty: &SplinePenalty, nu: &DVector<f64>) -> Result<SplineCoefficients> {
    let omega = penalty.solve_basis(nu)?;
    let n = penalty.n();
    let lambda = omega.rows(NULL_DIM, n - NULL_DIM);
    Ok(SplineCoefficients {
        beta: [omega[0], omega[1], omega[2]],
        gamma: &penalty.f2 * lambda,
    })
}

/// Precomputed basis rows for a fixed set of query points, so that many
/// coefficient vectors can be evaluated cheaply.
#[derive(Debug, Clone)]
pub struct SurfaceBasis {
    poly: DMatrix<f64>,
    kern: DMatrix<f64>,
}

impl SurfaceBasis {
    /// `query_points` are in raw coordinates.
    pub fn new(design: &SpatialDesign, kernel: &TpsKernel, query_points: &[[f64; 2]]) -> Result<Self> {
        kernel.validate()?;
        let tr = design.transform();
        let q: Vec<[f64; 2]> = query_points.iter().map(|&p| tr.apply(p)).collect();
        let poly = DMatrix::from_fn(q.len(), 3, |i, j| if j == 0 { 1.0 } else { q[i][j - 1] });
        let kern = kernel_matrix(kernel, &q, design.sites());
        Ok(SurfaceBasis { poly, kern })
    }

    pub fn len(&self) -> usize {
        self.poly.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn evaluate(&self, coeffs: &SplineCoefficients) -> Result<DVector<f64>> {
        if coeffs.gamma.len() != self.kern.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.kern.ncols(),
                got: coeffs.gamma.len(),
            });
        }
        let beta = DVector::from_column_slice(&coeffs.beta);
        Ok(&self.poly * beta + &self.kern * &coeffs.gamma)
    }
}

/// Evaluate `f(x) = sum_j phi_j(x) beta_j + sum_i psi_i(x) gamma_i` at raw
/// query coordinates. Points outside the site hull are extrapolated.
pub fn evaluate_surface(
    coeffs: &SplineCoefficients,
    design: &SpatialDesign,
    kernel: &TpsKernel,
    query_points: &[[f64; 2]],
) -> Result<DVector<f64>> {
    SurfaceBasis::new(design, kernel, query_points)?.evaluate(coeffs)
}
