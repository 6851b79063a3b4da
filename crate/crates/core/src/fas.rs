//! Fluid-antenna port grid and its spatial correlation model.
//!
//! Ports sit on a uniform `n1 x n2` grid spanning `l1 x l2` wavelengths.
//! Port `(i, j)` (1-based) maps to the linear index `(i - 1) * n2 + j`.
//! The correlation between two ports is the zeroth-order spherical Bessel
//! function of their separation, scaled by `2*pi`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this are lifted to it before the Cholesky factorization.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Cholesky pivots (squared) below this mark a variable as a deterministic
/// combination of the previous ones.
const PIVOT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FasGeometry {
    pub n1: usize,
    pub n2: usize,
    /// Aperture lengths in wavelengths.
    pub l1: f64,
    pub l2: f64,
}

impl Default for FasGeometry {
    fn default() -> Self {
        Self {
            n1: 4,
            n2: 4,
            l1: 1.0,
            l2: 1.0,
        }
    }
}

impl FasGeometry {
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Invalid {
                key: if n1 == 0 { "fas.n1" } else { "fas.n2" }.into(),
                reason: "port count must be at least 1".into(),
            });
        }
        for (key, l) in [("fas.l1", l1), ("fas.l2", l2)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Invalid {
                    key: key.into(),
                    reason: format!("aperture length must be finite and >= 0, got {l}"),
                });
            }
        }
        Ok(Self { n1, n2, l1, l2 })
    }

    pub fn ports(&self) -> usize {
        self.n1 * self.n2
    }

    /// Inverse of [`port_index`]: 1-based linear index to 1-based `(i, j)`.
    pub fn port_coords(&self, l: usize) -> Result<(usize, usize)> {
        if l == 0 || l > self.ports() {
            return Err(Error::Domain(format!(
                "port index {l} outside 1..={}",
                self.ports()
            )));
        }
        Ok(((l - 1) / self.n2 + 1, (l - 1) % self.n2 + 1))
    }

    /// Separation between two ports in wavelengths. A dimension with a
    /// single port contributes nothing.
    fn separation(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let axis = |da: usize, n: usize, len: f64| {
            if n == 1 {
                0.0
            } else {
                da as f64 / (n - 1) as f64 * len
            }
        };
        let s1 = axis(a.0.abs_diff(b.0), self.n1, self.l1);
        let s2 = axis(a.1.abs_diff(b.1), self.n2, self.l2);
        s1.hypot(s2)
    }
}

/// `l = (i - 1) * n2_total + j` with 1-based `i`, `j`.
pub fn port_index(n1_idx: usize, n2_idx: usize, n2_total: usize) -> Result<usize> {
    if n1_idx == 0 || n2_idx == 0 || n2_idx > n2_total {
        return Err(Error::Domain(format!(
            "port ({n1_idx}, {n2_idx}) out of range for n2 = {n2_total}"
        )));
    }
    Ok((n1_idx - 1) * n2_total + n2_idx)
}

/// `j0(x) = sin(x)/x`, with the removable singularity at 0.
pub fn spherical_bessel_j0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Port correlation matrix.
pub fn correlation_matrix(geom: &FasGeometry) -> DMatrix<f64> {
    let n = geom.ports();
    let coords: Vec<(usize, usize)> = (1..=n)
        .map(|l| geom.port_coords(l).expect("index in range"))
        .collect();
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            1.0
        } else {
            spherical_bessel_j0(2.0 * std::f64::consts::PI * geom.separation(coords[r], coords[c]))
        }
    })
}

/// A correlation matrix together with the factors every consumer needs.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    j_matrix: DMatrix<f64>,
    /// `V * sqrt(max(eigenvalue, 0))`, used to sample correlated ports.
    factor: DMatrix<f64>,
    /// Lower-triangular Cholesky factor of the repaired matrix; degenerate
    /// pivots are stored as exact zeros.
    cholesky: DMatrix<f64>,
    eigen_floor_applied: bool,
    min_eigenvalue: f64,
}

impl CorrelationModel {
    pub fn from_geometry(geom: &FasGeometry) -> Result<Self> {
        psd_factorization(&correlation_matrix(geom))
    }

    pub fn identity(n: usize) -> Self {
        psd_factorization(&DMatrix::identity(n, n)).expect("identity is a valid correlation matrix")
    }

    pub fn dim(&self) -> usize {
        self.j_matrix.nrows()
    }
    pub fn j_matrix(&self) -> &DMatrix<f64> {
        &self.j_matrix
    }
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.cholesky
    }
    pub fn eigen_floor_applied(&self) -> bool {
        self.eigen_floor_applied
    }
    /// Smallest eigenvalue of the matrix before repair.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `max |factor * factor^T - J|`.
    pub fn reconstruction_error(&self) -> f64 {
        (&self.factor * self.factor.transpose() - &self.j_matrix).amax()
    }
}

/// Eigen-decomposes `j` and caches a square-root factor and a Cholesky
/// factor of the floored matrix.
pub fn psd_factorization(j: &DMatrix<f64>) -> Result<CorrelationModel> {
    let n = j.nrows();
    if n == 0 || j.ncols() != n {
        return Err(Error::Domain(format!(
            "correlation matrix must be square and non-empty, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let asym = (j - j.transpose()).amax();
    if !(asym <= 1e-12) {
        return Err(Error::Domain(format!(
            "correlation matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    if let Some(i) = (0..n).find(|&i| (j[(i, i)] - 1.0).abs() > 1e-12) {
        return Err(Error::Domain(format!(
            "correlation matrix diagonal entry {i} is {} (expected 1)",
            j[(i, i)]
        )));
    }

    let eig = SymmetricEigen::new(j.clone());
    let min_eigenvalue = eig.eigenvalues.min();
    let eigen_floor_applied = min_eigenvalue < EIGEN_FLOOR;
    // The sampling factor only drops negative round-off; the floored
    // version feeds the Cholesky factor used by the MVN integrator.
    let scaled = |floor: f64| {
        let mut f = eig.eigenvectors.clone();
        for (c, v) in eig.eigenvalues.iter().enumerate() {
            f.column_mut(c).scale_mut(v.max(floor).sqrt());
        }
        f
    };
    let factor = scaled(0.0);
    let floored = scaled(EIGEN_FLOOR);
    let repaired = &floored * floored.transpose();

    Ok(CorrelationModel {
        cholesky: semidefinite_cholesky(&repaired),
        j_matrix: j.clone(),
        factor,
        eigen_floor_applied,
        min_eigenvalue,
    })
}

/// Cholesky decomposition that tolerates (near-)singular input: a pivot
/// below [`PIVOT_TOL`] zeroes the whole column.
pub(crate) fn semidefinite_cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        let d = a[(c, c)] - (0..c).map(|k| l[(c, k)] * l[(c, k)]).sum::<f64>();
        if d <= PIVOT_TOL {
            continue;
        }
        let piv = d.sqrt();
        l[(c, c)] = piv;
        for r in c + 1..n {
            let s = a[(r, c)] - (0..c).map(|k| l[(r, k)] * l[(c, k)]).sum::<f64>();
            l[(r, c)] = s / piv;
        }
    }
    l
}
