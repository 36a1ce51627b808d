//! Numerical probes of the functional inequalities attached to the model:
//! the eps-Poincare family, the nonlocal weighted Poincare (GKS) inequality,
//! the weighted space-time Sobolev inequality and the global L^1 L^3 /
//! L^{5/3} L^{5/3} estimates with their interpolation chains.

use crate::diagnostics::l3_gamma_norm;
use crate::dynamics::{Domain, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{
    integrate_with, mass, weighted_fisher, CartesianGrid3, Field, Grid, RadialGrid,
};
use crate::parallel;

use serde::Serialize;

/// Probe functions phi: bounded, with bounded gradient. Families are finite,
/// so every reported constant is a lower estimate of the true best constant.
pub struct TestFunctionFamily<G: Grid> {
    pub members: Vec<(String, Field<G>)>,
}

impl<G: Grid> TestFunctionFamily<G> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn smooth_bump(r: f64, radius: f64) -> f64 {
    let s = r / radius;
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Default radial family: shell Gaussians, mollifier bumps and rational
/// profiles, 13 members.
pub fn radial_family(grid: &RadialGrid) -> Result<TestFunctionFamily<RadialGrid>> {
    let mut members = Vec::new();
    for (c, w) in [
        (0.0, 0.5),
        (0.0, 1.0),
        (1.0, 0.5),
        (1.0, 1.0),
        (2.0, 0.7),
        (3.0, 1.5),
    ] {
        let f = Field::from_fn(grid.clone(), |i| {
            let r = grid.node(i);
            (-((r - c) / w).powi(2)).exp()
        })?;
        members.push((format!("gauss_c{c}_w{w}"), f));
    }
    for radius in [1.0, 2.0, 4.0] {
        let f = Field::from_fn(grid.clone(), |i| smooth_bump(grid.node(i), radius))?;
        members.push((format!("bump_r{radius}"), f));
    }
    for k in [1, 2] {
        let f = Field::from_fn(grid.clone(), |i| (1.0 + grid.node(i).powi(2)).powi(-k))?;
        members.push((format!("rational_k{k}"), f));
    }
    // Quadratic times a cutoff, and a wide plateau.
    members.push((
        "quadratic_bump".into(),
        Field::from_fn(grid.clone(), |i| {
            let r = grid.node(i);
            r * r * smooth_bump(r, 3.0)
        })?,
    ));
    members.push((
        "plateau".into(),
        Field::from_fn(grid.clone(), |i| smooth_bump(grid.node(i), 0.8 * grid.r_max()))?,
    ));
    Ok(TestFunctionFamily { members })
}

/// Default box family: off-center Gaussians, bumps, tensor polynomial times
/// cutoff, 13 members.
pub fn box_family(grid: &CartesianGrid3) -> Result<TestFunctionFamily<CartesianGrid3>> {
    let mut members = Vec::new();
    let l = grid.half_width();
    let centers = [
        [0.0, 0.0, 0.0],
        [0.3 * l, 0.0, 0.0],
        [0.0, -0.3 * l, 0.2 * l],
        [0.25 * l, 0.25 * l, -0.25 * l],
    ];
    for (ci, c) in centers.iter().enumerate() {
        for w in [0.25 * l, 0.5 * l] {
            let f = Field::from_fn(grid.clone(), |idx| {
                let p = grid.position(idx);
                let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
                (-d2 / (w * w)).exp()
            })?;
            members.push((format!("gauss{ci}_w{w:.2}"), f));
        }
    }
    for radius in [0.4 * l, 0.8 * l] {
        let f = Field::from_fn(grid.clone(), |idx| smooth_bump(grid.node_radius(idx), radius))?;
        members.push((format!("bump_r{radius:.2}"), f));
    }
    for ax in 0..3 {
        let f = Field::from_fn(grid.clone(), |idx| {
            let p = grid.position(idx);
            p[ax] * smooth_bump(grid.node_radius(idx), 0.7 * l)
        })?;
        members.push((format!("linear_ax{ax}_bump"), f));
    }
    Ok(TestFunctionFamily { members })
}

/// Lower estimate of the eps-Poincare constant:
/// max over phi of (int u phi^2 - eps int a |grad phi|^2) / int phi^2.
pub fn eps_poincare_constant<G: Grid>(
    u: &Field<G>,
    a: &Field<G>,
    eps: f64,
    family: &TestFunctionFamily<G>,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    if family.is_empty() {
        return Err(Error::Parameter("empty test-function family".into()));
    }
    let grid = u.grid();
    let mut best = f64::NEG_INFINITY;
    let mut used = 0usize;
    for (_, phi) in &family.members {
        if phi.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let pv = phi.values();
        let phi_sq = parallel::sum(pv.len(), |i| pv[i] * pv[i] * grid.cell_volume(i));
        if phi_sq == 0.0 {
            continue;
        }
        let uv = u.values();
        let u_phi_sq = parallel::sum(pv.len(), |i| uv[i] * pv[i] * pv[i] * grid.cell_volume(i));
        let gsq = grid.gradient_sq(pv);
        let av = a.values();
        let dirichlet = parallel::sum(pv.len(), |i| av[i] * gsq[i] * grid.cell_volume(i));
        best = best.max((u_phi_sq - eps * dirichlet) / phi_sq);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Parameter("no usable member in the family".into()));
    }
    Ok(best)
}

/// Ratio of the nonlocal weighted Poincare inequality
/// int u^{p+1} <= ((p+1)/p)^2 int a |grad u^{p/2}|^2; at most 1 + O(h) for
/// clip-free smooth slices. Zero field reports 0.
pub fn gks_ratio<G: Grid>(u: &Field<G>, a: &Field<G>, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Parameter(format!("gks_ratio needs p > 0, got {p}")));
    }
    u.require_nonnegative()?;
    if u.grid() != a.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid();
    let uv = u.values();
    let numerator = parallel::sum(uv.len(), |i| uv[i].powf(p + 1.0) * grid.cell_volume(i));
    let pow: Vec<f64> = uv.iter().map(|&v| v.powf(p / 2.0)).collect();
    let gsq = grid.gradient_sq(&pow);
    let av = a.values();
    let dirichlet = parallel::sum(uv.len(), |i| av[i] * gsq[i] * grid.cell_volume(i));
    let denom = ((p + 1.0) / p).powi(2) * dirichlet;
    if denom == 0.0 {
        if numerator == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Precondition(format!(
            "GKS denominator vanished with nonzero numerator {numerator}"
        )));
    }
    Ok(numerator / denom)
}

/// Space-time weighted Sobolev ratio
/// (iint phi^q a)^{2/q} / (iint a |grad phi|^2 + sup_t int phi^2)
/// for a per-slice probe function; q in (1, 10/3).
pub fn weighted_sobolev_ratio<G: Domain>(
    slices: &[SimState<G>],
    phis: &[Field<G>],
    q: f64,
) -> Result<f64> {
    if !(q > 1.0 && q < 10.0 / 3.0) {
        return Err(Error::Parameter(format!(
            "weighted Sobolev needs q in (1, 10/3), got {q}"
        )));
    }
    if slices.len() < 2 || phis.len() != slices.len() {
        return Err(Error::TooFewSlices { got: slices.len(), need: 2 });
    }
    let grid = slices[0].u.grid();
    let n = grid.len();
    let mut lhs_t = Vec::with_capacity(slices.len());
    let mut dir_t = Vec::with_capacity(slices.len());
    let mut sup_phi_sq = 0.0f64;
    for (slice, phi) in slices.iter().zip(phis) {
        if phi.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let pv = phi.values();
        let av = slice.a.a.values();
        lhs_t.push(parallel::sum(n, |i| pv[i].abs().powf(q) * av[i] * grid.cell_volume(i)));
        let gsq = grid.gradient_sq(pv);
        dir_t.push(parallel::sum(n, |i| av[i] * gsq[i] * grid.cell_volume(i)));
        sup_phi_sq = sup_phi_sq.max(parallel::sum(n, |i| pv[i] * pv[i] * grid.cell_volume(i)));
    }
    let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
    let lhs = trapezoid(&times, &lhs_t).powf(2.0 / q);
    let rhs = trapezoid(&times, &dir_t) + sup_phi_sq;
    if rhs == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs / rhs)
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct L1L3Report {
    /// integral over time of ||u||_{L^3(gamma^3 dx)}.
    pub value: f64,
    /// iint |grad sqrt u|^2 gamma + iint u (the Sobolev-route majorant).
    pub majorant_raw: f64,
    /// Smallest C with value <= C * majorant_raw.
    pub c_needed: f64,
}

/// Global L^1(0,T; L^3(gamma^3 dx)) estimate with its Sobolev-route
/// cross-check.
pub fn l1l3_estimate<G: Domain>(traj: &Trajectory<G>) -> Result<L1L3Report> {
    if traj.slices.len() < 2 {
        return Err(Error::TooFewSlices { got: traj.slices.len(), need: 2 });
    }
    let times: Vec<f64> = traj.slices.iter().map(|s| s.t).collect();
    let norms = traj
        .slices
        .iter()
        .map(|s| l3_gamma_norm(&s.u))
        .collect::<Result<Vec<_>>>()?;
    let fillers = traj
        .slices
        .iter()
        .map(|s| Ok(weighted_fisher(&s.u)? + mass(&s.u)?))
        .collect::<Result<Vec<_>>>()?;
    let value = trapezoid(&times, &norms);
    let majorant_raw = trapezoid(&times, &fillers);
    let c_needed = if majorant_raw > 0.0 { value / majorant_raw } else { 0.0 };
    Ok(L1L3Report { value, majorant_raw, c_needed })
}

#[derive(Debug, Clone, Serialize)]
pub struct L53Report {
    /// iint u^{5/3} dx dt.
    pub value: f64,
    /// Minimum over slices of the interpolation-chain slack
    /// (int u (1+|x|)^2)^{2/3} (int u^3 gamma^3)^{1/3} - int u^{5/3}.
    pub chain_margin_min: f64,
    pub chain_violations: usize,
}

/// Global L^{5/3}(0,T; L^{5/3}) estimate; per slice the Holder chain
/// int u^{5/3} <= (int u (1+|x|)^{3/2})^{2/3} (int u^3 (1+|x|)^{-3})^{1/3}
/// <= (int u (1+|x|)^2)^{2/3} (int u^3 (1+|x|)^{-3})^{1/3}
/// is checked with the conjugate exponents 2/3 + 1/3 = 1.
pub fn l53_estimate<G: Domain>(traj: &Trajectory<G>) -> Result<L53Report> {
    if traj.slices.len() < 2 {
        return Err(Error::TooFewSlices { got: traj.slices.len(), need: 2 });
    }
    let times: Vec<f64> = traj.slices.iter().map(|s| s.t).collect();
    let mut per_slice = Vec::with_capacity(traj.slices.len());
    let mut margin_min = f64::INFINITY;
    let mut violations = 0usize;
    for slice in &traj.slices {
        let u = &slice.u;
        let u53 = power_integral(u, 5.0 / 3.0);
        let weighted = integrate_with(u, |r| (1.0 + r) * (1.0 + r));
        let cubed = {
            let grid = u.grid();
            let v = u.values();
            parallel::sum(v.len(), |i| {
                let g = 1.0 / (1.0 + grid.node_radius(i));
                v[i] * v[i] * v[i] * g * g * g * grid.cell_volume(i)
            })
        };
        let rhs = weighted.powf(2.0 / 3.0) * cubed.powf(1.0 / 3.0);
        let margin = rhs - u53;
        margin_min = margin_min.min(margin);
        if margin < -1e-12 * rhs.abs().max(1.0) {
            violations += 1;
        }
        per_slice.push(u53);
    }
    Ok(L53Report {
        value: trapezoid(&times, &per_slice),
        chain_margin_min: margin_min,
        chain_violations: violations,
    })
}

fn power_integral<G: Grid>(u: &Field<G>, p: f64) -> f64 {
    let grid = u.grid();
    let v = u.values();
    parallel::sum(v.len(), |i| v[i].powf(p) * grid.cell_volume(i))
}

/// alpha(n) = (n+1)/(3n+2), the sup-a decay exponent ladder.
pub fn gain_alpha(n: u32) -> f64 {
    (n as f64 + 1.0) / (3.0 * n as f64 + 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GainReport {
    pub n: u32,
    pub p: f64,
    /// sup over t in [T/4, T] of int u^{5/3+n} dx.
    pub sup_lp: f64,
    /// iint u^{5/3} dx dt over [0, T].
    pub base: f64,
    /// Smallest C^n with sup_lp <= 2^{n(n+1)} C^n (1/T+1)^{n+1} base.
    pub c_needed_pow_n: f64,
    pub alpha: f64,
    pub implied_sup_a_exponent: f64,
}

/// Gain-in-integrability monitor: measures the L^{5/3+n} sup over the tail
/// window against the iterated-bound shape.
pub fn gain_integrability_bound<G: Domain>(traj: &Trajectory<G>, n: u32) -> Result<GainReport> {
    if traj.slices.len() < 2 {
        return Err(Error::TooFewSlices { got: traj.slices.len(), need: 2 });
    }
    let p = 5.0 / 3.0 + n as f64;
    let t_total = traj.t_end();
    if !(t_total > 0.0) {
        return Err(Error::Parameter("gain bound needs a positive horizon".into()));
    }
    let mut sup_lp = 0.0f64;
    for slice in &traj.slices {
        if slice.t < 0.25 * t_total {
            continue;
        }
        let u = &slice.u;
        let grid = u.grid();
        let integral = power_integral(u, p);
        // Resolution guard: a single cell must not carry the integral.
        let v = u.values();
        let peak = (0..grid.len())
            .map(|i| v[i].powf(p) * grid.cell_volume(i))
            .fold(0.0, f64::max);
        if integral > 0.0 && peak > 0.1 * integral {
            return Err(Error::Precondition(format!(
                "u^{p} under-resolved: peak cell carries {:.1}% of the integral",
                100.0 * peak / integral
            )));
        }
        sup_lp = sup_lp.max(integral);
    }
    let times: Vec<f64> = traj.slices.iter().map(|s| s.t).collect();
    let base_slices: Vec<f64> =
        traj.slices.iter().map(|s| power_integral(&s.u, 5.0 / 3.0)).collect();
    let base = trapezoid(&times, &base_slices);
    let shape = 2.0f64.powi((n * (n + 1)) as i32) * (1.0 / t_total + 1.0).powi(n as i32 + 1) * base;
    let c_needed_pow_n = if shape > 0.0 { sup_lp / shape } else { 0.0 };
    Ok(GainReport {
        n,
        p,
        sup_lp,
        base,
        c_needed_pow_n,
        alpha: gain_alpha(n),
        implied_sup_a_exponent: gain_alpha(n),
    })
}

/// JSON row shared by the inequality-report artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub verdict: String,
}

impl InequalityReport {
    pub fn new(name: &str, params: serde_json::Value, lhs: f64, rhs: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            params,
            lhs,
            rhs,
            ratio: if rhs != 0.0 { lhs / rhs } else { 0.0 },
            verdict: if pass { "PASS".into() } else { "FAIL".into() },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }
}
