//! Distribution of the best-port gain through a Gaussian copula.
//!
//! Every port's power gain is exponential with the same rate, so the copula
//! argument is the same in every coordinate: `t = Phi^-1(1 - exp(-rate x))`.
//! The CDF of the best port is then `Phi_J(t, ..., t)`, a function of `t`
//! and the correlation model only. [`CopulaTable`] tabulates it once per
//! correlation model and every channel sharing that model reuses it.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fas::CorrelationModel;
use crate::mvn::{mvn_cdf_constant, std_normal_quantile, MvnSpec};

pub const TABLE_KNOTS: usize = 512;
pub const TABLE_T_MIN: f64 = -8.0;
pub const TABLE_T_MAX: f64 = 8.0;
const VALIDATION_POINTS: usize = 32;

/// CDF of one port's power gain, `1 - exp(-rate x)`.
pub fn margin_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

/// Monotone cubic (Fritsch-Carlson) interpolant of `t -> Phi_J(t, ..., t)`.
#[derive(Debug, Clone)]
pub struct CopulaTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Largest QMC standard error among the knots.
    max_knot_err: f64,
    /// Largest deviation from direct evaluation seen at the validation points.
    validation_err: f64,
}

impl CopulaTable {
    pub fn build(model: &CorrelationModel, spec: &MvnSpec) -> Result<Self> {
        spec.validate()?;
        let h = (TABLE_T_MAX - TABLE_T_MIN) / (TABLE_KNOTS - 1) as f64;
        let knots: Vec<f64> = (0..TABLE_KNOTS).map(|i| TABLE_T_MIN + i as f64 * h).collect();
        let evals = knots
            .par_iter()
            .map(|&t| mvn_cdf_constant(model, t, spec))
            .collect::<Result<Vec<_>>>()?;
        let max_knot_err = evals.iter().map(|r| r.err_estimate).fold(0.0, f64::max);

        // QMC noise can break monotonicity by a few ulps of the error; pin
        // the ends and take the running maximum.
        let mut values: Vec<f64> = evals.iter().map(|r| r.value).collect();
        values[0] = 0.0;
        *values.last_mut().unwrap() = 1.0;
        let mut run = 0.0f64;
        for v in values.iter_mut() {
            run = run.max(*v).min(1.0);
            *v = run;
        }
        let slopes = fritsch_carlson_slopes(&knots, &values);
        let mut table = Self {
            knots,
            values,
            slopes,
            max_knot_err,
            validation_err: 0.0,
        };

        let stride = TABLE_KNOTS / VALIDATION_POINTS;
        let probes: Vec<f64> = (0..VALIDATION_POINTS)
            .map(|k| table.knots[k * stride + stride / 2] + 0.5 * h)
            .collect();
        let direct = probes
            .par_iter()
            .map(|&t| mvn_cdf_constant(model, t, spec))
            .collect::<Result<Vec<_>>>()?;
        table.validation_err = probes
            .iter()
            .zip(&direct)
            .map(|(&t, d)| (table.eval(t) - d.value).abs())
            .fold(0.0, f64::max);
        Ok(table)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= TABLE_T_MIN {
            return 0.0;
        }
        if t >= TABLE_T_MAX {
            return 1.0;
        }
        let h = self.knots[1] - self.knots[0];
        let i = (((t - TABLE_T_MIN) / h) as usize).min(self.knots.len() - 2);
        let s = (t - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        v.clamp(0.0, 1.0)
    }

    pub fn max_knot_err(&self) -> f64 {
        self.max_knot_err
    }

    pub fn validation_err(&self) -> f64 {
        self.validation_err
    }

    /// Pointwise error bound used when propagating table lookups into
    /// integrals: interpolation error seen at validation plus the knots' own
    /// QMC error.
    pub fn error_bound(&self) -> f64 {
        self.validation_err + self.max_knot_err
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            0.5 * (delta[i - 1] + delta[i])
        };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[i] = tau * a * delta[i];
            m[i + 1] = tau * b * delta[i];
        }
    }
    m
}

/// The relay-to-weak-user link: `n` correlated ports with identical
/// exponential margins, observed through its best port.
#[derive(Debug, Clone)]
pub struct CopulaChannel {
    model: Arc<CorrelationModel>,
    rate: f64,
    mvn_spec: MvnSpec,
    table: Option<Arc<CopulaTable>>,
}

impl CopulaChannel {
    /// Channel evaluated by direct QMC integration at every call.
    pub fn direct(model: Arc<CorrelationModel>, rate: f64, mvn_spec: MvnSpec) -> Result<Self> {
        check_rate(rate)?;
        mvn_spec.validate()?;
        Ok(Self {
            model,
            rate,
            mvn_spec,
            table: None,
        })
    }

    /// Channel backed by a prebuilt interpolation table for the same model.
    pub fn tabulated(
        model: Arc<CorrelationModel>,
        table: Arc<CopulaTable>,
        rate: f64,
        mvn_spec: MvnSpec,
    ) -> Result<Self> {
        check_rate(rate)?;
        mvn_spec.validate()?;
        Ok(Self {
            model,
            rate,
            mvn_spec,
            table: Some(table),
        })
    }

    /// Same model and table, different margin rate.
    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self {
            rate,
            ..self.clone()
        })
    }

    pub fn model(&self) -> &Arc<CorrelationModel> {
        &self.model
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn mvn_spec(&self) -> &MvnSpec {
        &self.mvn_spec
    }
    pub fn table(&self) -> Option<&Arc<CopulaTable>> {
        self.table.as_ref()
    }
    pub fn ports(&self) -> usize {
        self.model.dim()
    }

    /// Pointwise error bound of a single CDF evaluation.
    pub fn pointwise_error_bound(&self) -> f64 {
        match &self.table {
            Some(t) => t.error_bound(),
            None => self.mvn_spec.target_abs_error,
        }
    }

    /// `P(Z <= x)` for the best-port gain `Z`, with an error estimate.
    pub fn best_port_cdf(&self, x: f64) -> Result<(f64, f64)> {
        if x.is_nan() {
            return Err(Error::Domain("NaN gain".into()));
        }
        if x <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let t = std_normal_quantile(margin_cdf(x, self.rate))?;
        match &self.table {
            Some(table) => Ok((table.eval(t), table.error_bound())),
            None => {
                let r = mvn_cdf_constant(&self.model, t, &self.mvn_spec)?;
                Ok((r.value, r.err_estimate))
            }
        }
    }

    /// Table-only fast path used inside quadrature; falls back to direct
    /// evaluation when no table is attached.
    pub(crate) fn cdf_value(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(self.best_port_cdf(x)?.0)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("exponential rate must be positive, got {rate}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use std::sync::OnceLock;

    use crate::fas::{psd_factorization, FasGeometry};

    fn paper_model() -> Arc<CorrelationModel> {
        Arc::new(CorrelationModel::from_geometry(&FasGeometry::default()).unwrap())
    }

    const LIGHT: MvnSpec = MvnSpec {
        target_abs_error: 1e-4,
        sample_budget: 1024,
        randomizations: 4,
        seed: 7,
    };

    fn shared_table() -> Arc<CopulaTable> {
        static TABLE: OnceLock<Arc<CopulaTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| Arc::new(CopulaTable::build(&paper_model(), &LIGHT).unwrap()))
            .clone()
    }

    #[test]
    fn margin_fixtures() {
        assert_eq!(margin_cdf(0.0, 3.0), 0.0);
        assert_eq!(margin_cdf(-1.0, 3.0), 0.0);
        assert_abs_diff_eq!(margin_cdf(2f64.ln() / 3.0, 3.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(margin_cdf(1.0, 1.0), 1.0 - (-1f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(margin_cdf(1.0, 1.0), 0.632121, epsilon = 1e-6);
    }

    #[test]
    fn single_port_is_the_margin() {
        let ch = CopulaChannel::direct(Arc::new(CorrelationModel::identity(1)), 2.0, MvnSpec::default()).unwrap();
        for x in [0.01, 0.3, 1.0, 4.0] {
            let (v, _) = ch.best_port_cdf(x).unwrap();
            assert_abs_diff_eq!(v, margin_cdf(x, 2.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn independent_ports_multiply() {
        let ch = CopulaChannel::direct(Arc::new(CorrelationModel::identity(6)), 1.5, MvnSpec::default()).unwrap();
        for x in [0.2, 1.0, 2.5] {
            let (v, e) = ch.best_port_cdf(x).unwrap();
            assert!((v - margin_cdf(x, 1.5).powi(6)).abs() <= 3.0 * e + 1e-10);
        }
    }

    #[test]
    fn comonotone_ports_collapse() {
        let ones = psd_factorization(&DMatrix::from_element(5, 5, 1.0)).unwrap();
        let ch = CopulaChannel::direct(Arc::new(ones), 0.7, MvnSpec::default()).unwrap();
        for x in [0.2, 1.0, 2.5] {
            let (v, e) = ch.best_port_cdf(x).unwrap();
            assert!((v - margin_cdf(x, 0.7)).abs() <= 3.0 * e + 1e-6, "x={x} v={v}");
        }
    }

    #[test]
    fn non_positive_gain_is_exactly_zero() {
        let ch = CopulaChannel::direct(paper_model(), 1.0, MvnSpec::default()).unwrap();
        assert_eq!(ch.best_port_cdf(0.0).unwrap(), (0.0, 0.0));
        assert_eq!(ch.best_port_cdf(-3.0).unwrap(), (0.0, 0.0));
        assert!(CopulaChannel::direct(paper_model(), 0.0, MvnSpec::default()).is_err());
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let model = paper_model();
        let spec = LIGHT;
        let table = shared_table();
        assert!(table.validation_err() <= 1e-4, "validation err {}", table.validation_err());
        let tab = CopulaChannel::tabulated(model.clone(), table, 2.0, spec).unwrap();
        let dir = CopulaChannel::direct(model, 2.0, spec).unwrap();
        for x in [0.3, 0.9, 1.37, 2.2, 3.9] {
            let a = tab.best_port_cdf(x).unwrap().0;
            let b = dir.best_port_cdf(x).unwrap().0;
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
    }

    #[test]
    fn paper_grid_is_between_independent_and_comonotone() {
        let ch = CopulaChannel::tabulated(paper_model(), shared_table(), 1.0, LIGHT).unwrap();
        let mut prev = 0.0;
        for k in 1..60 {
            let x = 0.1 * k as f64;
            let (v, e) = ch.best_port_cdf(x).unwrap();
            let m = margin_cdf(x, 1.0);
            assert!(v >= m.powi(16) - 3.0 * e);
            assert!(v <= m + 3.0 * e);
            assert!(v >= prev);
            prev = v;
        }
        assert!(ch.best_port_cdf(1e3).unwrap().0 > 1.0 - 1e-12);
    }
}
