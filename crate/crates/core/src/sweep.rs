//! SNR sweeps and relay-position maps, written as CSV.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::analytic::{mu_map, op_af, op_df, select_relaying, MuCell};
use crate::config::RunConfig;
use crate::copula::{CopulaChannel, CopulaTable};
use crate::error::{Error, Result};
use crate::fas::{CorrelationModel, FasGeometry};
use crate::montecarlo::estimate_pair;
use crate::mvn::MvnSpec;
use crate::scenario::{Point3, Scenario};

pub const OP_CURVE_HEADER: &str =
    "snr_db,beta_b,beta_f,gamma_u1,gamma_u2,q_af,q_af_err,q_df,q_df_err,q_af_mc,q_af_mc_se,q_df_mc,q_df_mc_se,mu";
pub const MU_MAP_HEADER: &str = "x,y,z,q_af,q_af_err,q_df,q_df_err,mu";

type TableKey = (usize, usize, u64, u64, u64, usize, usize, u64);

/// Copula tables are expensive and depend only on the port grid and the
/// MVN settings, so they are shared process-wide.
pub fn shared_table(geom: &FasGeometry, model: &CorrelationModel, spec: &MvnSpec) -> Result<Arc<CopulaTable>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<CopulaTable>>>> = OnceLock::new();
    let key = (
        geom.n1,
        geom.n2,
        geom.l1.to_bits(),
        geom.l2.to_bits(),
        spec.target_abs_error.to_bits(),
        spec.sample_budget,
        spec.randomizations,
        spec.seed,
    );
    // Held across the build so concurrent callers wait instead of duplicating it.
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = cache.get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(CopulaTable::build(model, spec)?);
    cache.insert(key, table.clone());
    Ok(table)
}

/// Formats like C's `%.12g`.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..12).contains(&exp) {
        trim(&format!("{v:.*}", (11 - exp) as usize))
    } else {
        format!("{}e{}{:02}", trim(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn csv_escape(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Seed of sweep point `index`, decorrelated from neighbouring points.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McColumns {
    pub q_af: f64,
    pub q_af_se: f64,
    pub q_df: f64,
    pub q_df_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpRow {
    pub snr_db: f64,
    pub beta_b: f64,
    pub beta_f: f64,
    pub gamma_u1: f64,
    pub gamma_u2: f64,
    pub q_af: f64,
    pub q_af_err: f64,
    pub q_df: f64,
    pub q_df_err: f64,
    pub mc: Option<McColumns>,
    pub mu: u8,
    pub errors: Vec<String>,
}

/// A loaded configuration with its correlation model and copula table.
pub struct Engine {
    pub config: RunConfig,
    base: Scenario,
    channel: CopulaChannel,
}

impl Engine {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let base = config.scenario()?;
        let geom = config.fas_geometry()?;
        let model = Arc::new(CorrelationModel::from_geometry(&geom)?);
        let table = shared_table(&geom, &model, &config.mvn)?;
        let channel = CopulaChannel::tabulated(model, table, base.rate_fu2(), config.mvn)?;
        Ok(Self {
            config,
            base,
            channel,
        })
    }

    pub fn base(&self) -> &Scenario {
        &self.base
    }

    pub fn channel(&self) -> &CopulaChannel {
        &self.channel
    }

    /// Scenario at one sweep point.
    pub fn scenario_at(&self, snr_db: f64, beta_b: f64) -> Result<Scenario> {
        let joint = self.config.sweep.joint_power;
        self.base.modified(|p| {
            p.beta_b = beta_b;
            p.p_b_dbm = p.noise_dbm + snr_db;
            if joint {
                p.p_f_dbm = p.noise_dbm + snr_db;
            }
        })
    }

    fn betas(&self) -> Vec<f64> {
        if self.config.sweep.betas.is_empty() {
            vec![self.base.beta_b()]
        } else {
            self.config.sweep.betas.clone()
        }
    }

    /// Rows ordered by beta, then SNR.
    pub fn op_curve(&self) -> Vec<OpRow> {
        let snrs = &self.config.sweep.snr_db;
        let points: Vec<(f64, f64)> = self
            .betas()
            .into_iter()
            .flat_map(|b| snrs.iter().map(move |&s| (s, b)))
            .collect();
        points
            .par_iter()
            .enumerate()
            .map(|(i, &(snr, beta))| self.op_row(i as u64, snr, beta))
            .collect()
    }

    fn op_row(&self, index: u64, snr_db: f64, beta_b: f64) -> OpRow {
        let p = &self.base.params();
        let mut row = OpRow {
            snr_db,
            beta_b,
            beta_f: p.beta_f,
            gamma_u1: p.gamma_u1,
            gamma_u2: p.gamma_u2,
            q_af: f64::NAN,
            q_af_err: f64::NAN,
            q_df: f64::NAN,
            q_df_err: f64::NAN,
            mc: None,
            mu: 0,
            errors: Vec::new(),
        };
        let s = match self.scenario_at(snr_db, beta_b) {
            Ok(s) => s,
            Err(e) => {
                row.errors.push(e.to_string());
                return row;
            }
        };
        let ch = self.channel.with_rate(s.rate_fu2()).expect("rate already validated");
        match op_af(&s, &ch, &self.config.quad) {
            Ok(r) => (row.q_af, row.q_af_err) = (r.q, r.err_estimate),
            Err(e) => row.errors.push(format!("af: {e}")),
        }
        match op_df(&s, &ch, &self.config.quad) {
            Ok(r) => (row.q_df, row.q_df_err) = (r.q, r.err_estimate),
            Err(e) => row.errors.push(format!("df: {e}")),
        }
        row.mu = select_relaying(row.q_af, row.q_df);
        let mc = self.config.mc;
        if mc.trials > 0 {
            let seed = point_seed(mc.seed, index);
            match estimate_pair(&s, ch.model(), mc.trials, seed) {
                Ok((af, df)) => {
                    let (q_df, q_df_se) = match df {
                        Ok(d) => (d.p_hat, d.std_err),
                        Err(e) => {
                            row.errors.push(format!("df mc: {e}"));
                            (f64::NAN, f64::NAN)
                        }
                    };
                    row.mc = Some(McColumns {
                        q_af: af.p_hat,
                        q_af_se: af.std_err,
                        q_df,
                        q_df_se,
                    });
                }
                Err(e) => row.errors.push(format!("mc: {e}")),
            }
        }
        row
    }

    /// Relay positions in output order: height, then y, then x.
    pub fn map_positions(&self) -> Vec<Point3> {
        let sw = &self.config.sweep;
        let axis = |r: [f64; 2], n: usize| -> Vec<f64> {
            if n == 1 {
                vec![0.5 * (r[0] + r[1])]
            } else {
                (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let xs = axis(sw.x_range, sw.nx);
        let ys = axis(sw.y_range, sw.ny);
        let mut out = Vec::with_capacity(xs.len() * ys.len() * sw.heights.len());
        for &z in &sw.heights {
            for &y in &ys {
                for &x in &xs {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    pub fn mu_map(&self) -> Result<Vec<MuCell>> {
        let snr = self.config.sweep.map_snr_db;
        let base = self.scenario_at(snr, self.base.beta_b())?;
        Ok(mu_map(&base, &self.map_positions(), &self.channel, &self.config.quad))
    }
}

pub fn write_op_curve(rows: &[OpRow], with_mc: bool, w: &mut impl Write) -> Result<()> {
    let with_errors = rows.iter().any(|r| !r.errors.is_empty());
    let mut header = String::from(OP_CURVE_HEADER);
    if !with_mc {
        header = header.replace(",q_af_mc,q_af_mc_se,q_df_mc,q_df_mc_se", "");
    }
    if with_errors {
        header.push_str(",errors");
    }
    writeln!(w, "{header}")?;
    for r in rows {
        let mut cols: Vec<String> = [r.snr_db, r.beta_b, r.beta_f, r.gamma_u1, r.gamma_u2, r.q_af, r.q_af_err, r.q_df, r.q_df_err]
            .iter()
            .map(|v| fmt_g(*v))
            .collect();
        if with_mc {
            let m = r.mc.unwrap_or(McColumns {
                q_af: f64::NAN,
                q_af_se: f64::NAN,
                q_df: f64::NAN,
                q_df_se: f64::NAN,
            });
            cols.extend([m.q_af, m.q_af_se, m.q_df, m.q_df_se].iter().map(|v| fmt_g(*v)));
        }
        cols.push(r.mu.to_string());
        if with_errors {
            cols.push(csv_escape(&r.errors.join("; ")));
        }
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

pub fn write_mu_map(cells: &[MuCell], w: &mut impl Write) -> Result<()> {
    let with_errors = cells.iter().any(|c| c.error.is_some());
    let mut header = String::from(MU_MAP_HEADER);
    if with_errors {
        header.push_str(",errors");
    }
    writeln!(w, "{header}")?;
    for c in cells {
        let [x, y, z] = c.far_pos;
        let mut cols: Vec<String> = [x, y, z, c.q_af, c.err_af, c.q_df, c.err_df].iter().map(|v| fmt_g(*v)).collect();
        cols.push(c.mu.to_string());
        if with_errors {
            cols.push(csv_escape(c.error.as_deref().unwrap_or("")));
        }
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Runs the SNR sweep and renders the CSV.
pub fn run_op_curve(config: &RunConfig) -> Result<String> {
    let engine = Engine::new(config.clone())?;
    let mut out = Vec::new();
    write_op_curve(&engine.op_curve(), config.mc.trials > 0, &mut out)?;
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

/// Runs the relay-position map and renders the CSV.
pub fn run_mu_map(config: &RunConfig) -> Result<String> {
    let engine = Engine::new(config.clone())?;
    let mut out = Vec::new();
    write_mu_map(&engine.mu_map()?, &mut out)?;
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.1), "0.1");
        assert_eq!(fmt_g(-130.0), "-130");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(2.0 / 3.0 * 1e-7), "6.66666666667e-08");
        assert_eq!(fmt_g(123456789012345.0), "1.23456789012e+14");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.000045621899505), "4.5621899505e-05");
        assert_eq!(fmt_g(99999999999.99999), "100000000000");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn seeds_differ_per_point() {
        let a: Vec<u64> = (0..100).map(|i| point_seed(1, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(point_seed(1, 0), point_seed(2, 0));
    }

    #[test]
    fn escape() {
        assert_eq!(csv_escape("a, \"b\""), "\"a, \"\"b\"\"\"");
    }
}
