//! Physical configuration of the relay network and the constants derived from it.
//!
//! Powers are given in dBm and converted to linear SNR factors once, at
//! construction. Everything downstream works on the linear scale.

use crate::error::{Error, Result};

/// A position in meters.
pub type Point3 = [f64; 3];

/// Euclidean distance between two points.
pub fn distance(a: Point3, b: Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Large-scale path gain `d^-alpha`.
pub fn path_gain(d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "path gain needs a positive distance, got {d}"
        )));
    }
    Ok(d.powf(-alpha))
}

/// `10^((p_dbm - noise_dbm)/10)`.
pub fn db_ratio_to_linear(p_dbm: f64, noise_dbm: f64) -> f64 {
    10f64.powf((p_dbm - noise_dbm) / 10.0)
}

/// Raw, unvalidated scenario inputs. Build a [`Scenario`] from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub bs_pos: Point3,
    pub u1_pos: Point3,
    pub u2_pos: Point3,
    pub far_pos: Point3,
    pub alpha: f64,
    pub p_b_dbm: f64,
    pub p_f_dbm: f64,
    pub noise_dbm: f64,
    pub beta_b: f64,
    pub beta_f: f64,
    pub gamma_u1: f64,
    pub gamma_u2: f64,
}

impl Default for ScenarioParams {
    /// The reference ("desk") geometry: base station at the origin, the
    /// near user 1.2 m away, the far user 2 m away, relay hovering 0.5 m
    /// above the midpoint. Distances are small because the SNR sweep is expressed
    /// relative to a -130 dBm noise floor.
    fn default() -> Self {
        Self {
            bs_pos: DESK_BS,
            u1_pos: DESK_U1,
            u2_pos: DESK_U2,
            far_pos: DESK_FAR,
            alpha: 2.0,
            p_b_dbm: -110.0,
            p_f_dbm: -110.0,
            noise_dbm: -130.0,
            beta_b: 0.1,
            beta_f: 0.1,
            gamma_u1: 3.0,
            gamma_u2: 3.0,
        }
    }
}

pub const DESK_BS: Point3 = [0.0, 0.0, 0.0];
pub const DESK_U1: Point3 = [1.2, 0.0, 0.0];
pub const DESK_U2: Point3 = [2.0, 0.0, 0.0];
pub const DESK_FAR: Point3 = [1.0, 0.0, 0.5];

/// Validated, immutable scenario with its derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    params: ScenarioParams,
    d_bu1: f64,
    d_bu2: f64,
    d_bf: f64,
    d_fu1: f64,
    d_fu2: f64,
    rho_b: f64,
    rho_f: f64,
}

fn check(key: &str, ok: bool, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid {
            key: key.to_string(),
            reason: reason(),
        })
    }
}

impl Scenario {
    pub fn new(params: ScenarioParams) -> Result<Self> {
        let p = &params;
        for (key, v) in [
            ("scenario.bs_pos", p.bs_pos),
            ("scenario.u1_pos", p.u1_pos),
            ("scenario.u2_pos", p.u2_pos),
            ("scenario.far_pos", p.far_pos),
        ] {
            check(key, v.iter().all(|c| c.is_finite()), || {
                format!("coordinates must be finite, got {v:?}")
            })?;
        }
        check("scenario.alpha", p.alpha > 0.0 && p.alpha.is_finite(), || {
            format!("path-loss exponent must be positive, got {}", p.alpha)
        })?;
        check("scenario.beta_b", (0.0..0.5).contains(&p.beta_b), || {
            format!("NOMA power split must lie in [0, 0.5), got {}", p.beta_b)
        })?;
        check("scenario.beta_f", (0.0..0.5).contains(&p.beta_f), || {
            format!("NOMA power split must lie in [0, 0.5), got {}", p.beta_f)
        })?;
        check("scenario.gamma_u1", p.gamma_u1 >= 0.0 && p.gamma_u1.is_finite(), || {
            format!("threshold must be finite and >= 0, got {}", p.gamma_u1)
        })?;
        check("scenario.gamma_u2", p.gamma_u2 >= 0.0 && p.gamma_u2.is_finite(), || {
            format!("threshold must be finite and >= 0, got {}", p.gamma_u2)
        })?;
        for (key, v) in [
            ("scenario.p_b_dbm", p.p_b_dbm),
            ("scenario.p_f_dbm", p.p_f_dbm),
            ("scenario.noise_dbm", p.noise_dbm),
        ] {
            check(key, v.is_finite(), || format!("must be finite, got {v}"))?;
        }

        let nodes = [
            ("bs", p.bs_pos),
            ("u1", p.u1_pos),
            ("u2", p.u2_pos),
            ("far", p.far_pos),
        ];
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if distance(nodes[i].1, nodes[j].1) <= 0.0 {
                    return Err(Error::Invalid {
                        key: format!("scenario.{}_pos", nodes[j].0),
                        reason: format!("co-located with {}", nodes[i].0),
                    });
                }
            }
        }

        let rho_b = db_ratio_to_linear(p.p_b_dbm, p.noise_dbm);
        let rho_f = db_ratio_to_linear(p.p_f_dbm, p.noise_dbm);
        check("scenario.p_b_dbm", rho_b > 0.0 && rho_b.is_finite(), || {
            format!("linear SNR factor out of range: {rho_b}")
        })?;
        check("scenario.p_f_dbm", rho_f > 0.0 && rho_f.is_finite(), || {
            format!("linear SNR factor out of range: {rho_f}")
        })?;

        Ok(Self {
            d_bu1: distance(p.bs_pos, p.u1_pos),
            d_bu2: distance(p.bs_pos, p.u2_pos),
            d_bf: distance(p.bs_pos, p.far_pos),
            d_fu1: distance(p.far_pos, p.u1_pos),
            d_fu2: distance(p.far_pos, p.u2_pos),
            rho_b,
            rho_f,
            params,
        })
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    /// Rebuilds with modified parameters.
    pub fn modified(&self, f: impl FnOnce(&mut ScenarioParams)) -> Result<Self> {
        let mut p = self.params.clone();
        f(&mut p);
        Self::new(p)
    }

    /// Both transmit powers set to `noise + snr_db`.
    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        self.modified(|p| {
            p.p_b_dbm = p.noise_dbm + snr_db;
            p.p_f_dbm = p.noise_dbm + snr_db;
        })
    }

    pub fn with_far_pos(&self, far_pos: Point3) -> Result<Self> {
        self.modified(|p| p.far_pos = far_pos)
    }

    /// `(rho_b, rho_f)`.
    pub fn linear_snr_factors(&self) -> (f64, f64) {
        (self.rho_b, self.rho_f)
    }

    pub fn rho_b(&self) -> f64 {
        self.rho_b
    }
    pub fn rho_f(&self) -> f64 {
        self.rho_f
    }
    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }
    pub fn beta_b(&self) -> f64 {
        self.params.beta_b
    }
    pub fn beta_f(&self) -> f64 {
        self.params.beta_f
    }
    pub fn gamma_u1(&self) -> f64 {
        self.params.gamma_u1
    }
    pub fn gamma_u2(&self) -> f64 {
        self.params.gamma_u2
    }

    pub fn d_bu1(&self) -> f64 {
        self.d_bu1
    }
    pub fn d_bu2(&self) -> f64 {
        self.d_bu2
    }
    pub fn d_bf(&self) -> f64 {
        self.d_bf
    }
    pub fn d_fu1(&self) -> f64 {
        self.d_fu1
    }
    pub fn d_fu2(&self) -> f64 {
        self.d_fu2
    }

    // Exponential rates d^alpha of the unit-mean-normalized fading powers.
    pub fn rate_bu1(&self) -> f64 {
        self.d_bu1.powf(self.params.alpha)
    }
    pub fn rate_bu2(&self) -> f64 {
        self.d_bu2.powf(self.params.alpha)
    }
    pub fn rate_bf(&self) -> f64 {
        self.d_bf.powf(self.params.alpha)
    }
    pub fn rate_fu1(&self) -> f64 {
        self.d_fu1.powf(self.params.alpha)
    }
    pub fn rate_fu2(&self) -> f64 {
        self.d_fu2.powf(self.params.alpha)
    }
}
