//! Globally adaptive Gauss-Kronrod quadrature on finite intervals.
//!
//! Each panel is integrated with a Kronrod rule and its embedded Gauss
//! rule; the difference is the panel's error estimate. The panel with the
//! largest error is bisected until the total error meets the tolerance or
//! the worst panel has reached `max_panel_depth` bisections.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panel_depth: u32,
    /// Kronrod points per panel: 15 or 21.
    pub panel_nodes: usize,
    /// Probability mass left out when a semi-infinite range is mapped onto
    /// the unit interval and truncated.
    pub tail_mass: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_panel_depth: 18,
            panel_nodes: 15,
            tail_mass: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Invalid { key: key.into(), reason });
        if !(self.rel_tol > 0.0) {
            return bad("quad.rel_tol", format!("must be > 0, got {}", self.rel_tol));
        }
        if !(self.abs_tol > 0.0) {
            return bad("quad.abs_tol", format!("must be > 0, got {}", self.abs_tol));
        }
        if self.panel_nodes != 15 && self.panel_nodes != 21 {
            return bad(
                "quad.panel_nodes",
                format!("supported Kronrod rules have 15 or 21 nodes, got {}", self.panel_nodes),
            );
        }
        if !(self.tail_mass > 0.0 && self.tail_mass < 1e-3) {
            return bad("quad.tail_mass", format!("must lie in (0, 1e-3), got {}", self.tail_mass));
        }
        if self.max_panel_depth > 40 {
            return bad("quad.max_panel_depth", format!("must be <= 40, got {}", self.max_panel_depth));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
}

// Abscissae (non-negative half, descending) and weights, from QUADPACK.
const XGK15: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK15: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG7: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const XGK21: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK21: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208292213860,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG10: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One Kronrod panel: (kronrod estimate, |kronrod - gauss|).
fn panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, nodes: usize) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (xk, wk, wg): (&[f64], &[f64], &[f64]) = if nodes == 21 {
        (&XGK21, &WGK21, &WG10)
    } else {
        (&XGK15, &WGK15, &WG7)
    };
    let last = xk.len() - 1;
    let fc = f(c);
    let mut kron = wk[last] * fc;
    // For 15 nodes the centre is a Gauss node; for 21 it is not.
    let mut gauss = if nodes == 15 { wg[wg.len() - 1] * fc } else { 0.0 };
    for i in 0..last {
        let dx = h * xk[i];
        let s = f(c - dx) + f(c + dx);
        kron += wk[i] * s;
        if i % 2 == 1 {
            gauss += wg[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// `int_a^b f(x) dx`. An empty or reversed range integrates to zero.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if !(b > a) {
        return Ok(QuadResult { value: 0.0, err: 0.0, evals: 0 });
    }
    let nodes = spec.panel_nodes;
    let (v, e) = panel(&mut f, a, b, nodes);
    let mut evals = nodes;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e, depth: 0 });
    let mut total = v;
    let mut total_err = e;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let worst = heap.pop().expect("heap never empties");
        if worst.depth >= spec.max_panel_depth || !total.is_finite() {
            let achieved = total_err;
            heap.push(worst);
            if !total.is_finite() {
                return Err(Error::Domain("integrand is not finite".into()));
            }
            return Err(Error::Quadrature {
                partial: total,
                achieved_err: achieved,
                requested: tol,
            });
        }
        let m = 0.5 * (worst.a + worst.b);
        let (lv, le) = panel(&mut f, worst.a, m, nodes);
        let (rv, re) = panel(&mut f, m, worst.b, nodes);
        evals += 2 * nodes;
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Panel { a: worst.a, b: m, value: lv, err: le, depth: worst.depth + 1 });
        heap.push(Panel { a: m, b: worst.b, value: rv, err: re, depth: worst.depth + 1 });
        // re-sum periodically to keep the running totals honest
        if evals % (64 * nodes) < 2 * nodes {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    Ok(QuadResult { value, err, evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        for nodes in [15, 21] {
            let spec = QuadratureSpec { panel_nodes: nodes, ..Default::default() };
            let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, &spec).unwrap();
            assert_abs_diff_eq!(r.value, 13.5, epsilon = 1e-13);
            assert_eq!(r.evals, nodes);
        }
    }

    #[test]
    fn smooth_integrands() {
        let spec = QuadratureSpec::default();
        let r = integrate(f64::sin, 0.0, std::f64::consts::PI, &spec).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-12);
        let r = integrate(|x| (-x).exp(), 0.0, 30.0, &spec).unwrap();
        assert_abs_diff_eq!(r.value, 1.0 - (-30f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn kinks_need_subdivision() {
        let spec = QuadratureSpec::default();
        let r = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(r.value, 0.045 + 0.245, epsilon = 3e-7);
        assert!(r.evals > 15);
        // step function: converges by isolating the jump
        let r = integrate(|x| if x < 0.37 { 1.0 } else { 0.0 }, 0.0, 1.0, &spec);
        assert!(r.is_ok() || matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let spec = QuadratureSpec { max_panel_depth: 40, ..Default::default() };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn reports_non_convergence() {
        let spec = QuadratureSpec { max_panel_depth: 2, abs_tol: 1e-14, rel_tol: 1e-14, ..Default::default() };
        match integrate(|x: f64| (50.0 * x).sin() / (x + 1e-3), 0.0, 1.0, &spec) {
            Err(Error::Quadrature { partial, achieved_err, requested }) => {
                assert!(partial.is_finite());
                assert!(achieved_err > requested);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_range() {
        let r = integrate(|_| 1.0, 2.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
        let r = integrate(|_| 1.0, 3.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_bad_spec() {
        let spec = QuadratureSpec { panel_nodes: 7, ..Default::default() };
        assert!(integrate(|x| x, 0.0, 1.0, &spec).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, &QuadratureSpec::default()).is_err());
    }
}
