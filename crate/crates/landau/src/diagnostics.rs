//! Scalar identities and bounds evaluated on state slices and trajectories:
//! entropy and its production, moment identities, the kappa lower bound
//! machinery and the calibrated upper/lower bound margins.

use crate::dynamics::{Domain, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{
    integrate, lp_norm, mass, second_moment, weighted_fisher, CartesianGrid3, Field, Grid,
    RadialGrid, Weight,
};
use crate::parallel;
use crate::potential::a_lower_bound;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Maxwell-Boltzmann entropy: integral of u log u, with 0 log 0 = 0.
pub fn entropy<G: Grid>(u: &Field<G>) -> Result<f64> {
    u.require_nonnegative()?;
    let grid = u.grid();
    let v = u.values();
    Ok(parallel::sum(v.len(), |i| {
        if v[i] == 0.0 {
            0.0
        } else {
            v[i] * v[i].ln() * grid.cell_volume(i)
        }
    }))
}

/// Grid kinds with an entropy-production pair integral and an evenness test.
pub trait ProductionGrid: Grid {
    fn entropy_production(u: &Field<Self>) -> Result<f64>;
    fn require_even(u: &Field<Self>) -> Result<()>;
}

/// Entropy production
/// D = (1/4 pi) (1/2) iint u(x)u(y)/|x-y| |grad log u(x) - grad log u(y)|^2,
/// equal to -dH/dt along solutions. Nonnegative as a sum of pairwise
/// nonnegative terms; vacuum nodes are skipped.
pub fn entropy_production<G: ProductionGrid>(u: &Field<G>) -> Result<f64> {
    G::entropy_production(u)
}

/// d/dr of log u with vacuum guards: centered where both neighbors are
/// positive, one-sided toward the populated side, zero in vacuum.
fn log_gradient_radial(u: &Field<RadialGrid>) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.len();
    let h = grid.spacing();
    let v = u.values();
    let mut g = vec![0.0; n];
    for i in 0..n {
        if v[i] <= 0.0 {
            continue;
        }
        // Even reflection across r=0: the ghost below node 0 carries v[0].
        let left = if i == 0 { Some(v[0]) } else { (v[i - 1] > 0.0).then(|| v[i - 1]) };
        let right = if i + 1 < n { (v[i + 1] > 0.0).then(|| v[i + 1]) } else { None };
        g[i] = match (left, right) {
            (Some(l), Some(r)) => (r.ln() - l.ln()) / (2.0 * h),
            (Some(l), None) => (v[i].ln() - l.ln()) / h,
            (None, Some(r)) => (r.ln() - v[i].ln()) / h,
            (None, None) => 0.0,
        };
    }
    g
}

/// Angular means over both unit spheres at radii (r, s):
/// <1/|x-y|> = 1/max, <(x.y)/(|x||y| |x-y|)> = min / (3 max^2).
#[inline]
fn pair_kernel(r: f64, s: f64, gr: f64, gs: f64) -> f64 {
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    (gr * gr + gs * gs) / hi - 2.0 * gr * gs * lo / (3.0 * hi * hi)
}

impl ProductionGrid for RadialGrid {
    fn entropy_production(u: &Field<RadialGrid>) -> Result<f64> {
        u.require_nonnegative()?;
        let grid = u.grid();
        let n = grid.len();
        let v = u.values();
        let g = log_gradient_radial(u);
        let w: Vec<f64> = (0..n).map(|i| v[i] * grid.cell_volume(i)).collect();
        let r: Vec<f64> = (0..n).map(|i| grid.node(i)).collect();
        let total = parallel::sum(n, |i| {
            if v[i] == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for j in 0..n {
                if v[j] == 0.0 {
                    continue;
                }
                acc += w[j] * pair_kernel(r[i], r[j], g[i], g[j]);
            }
            w[i] * acc
        });
        Ok(total / (8.0 * PI))
    }

    fn require_even(_u: &Field<RadialGrid>) -> Result<()> {
        Ok(()) // radial data is even by construction
    }
}

/// Per-axis gradient of log u with the same vacuum guards.
fn log_gradient_box(u: &Field<CartesianGrid3>) -> Vec<[f64; 3]> {
    let grid = u.grid();
    let n = grid.n_per_axis();
    let h = grid.spacing();
    let v = u.values();
    let strides = [1usize, n, n * n];
    let mut out = vec![[0.0; 3]; v.len()];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let idx = grid.index(i, j, k);
                if v[idx] <= 0.0 {
                    continue;
                }
                let pos = [i, j, k];
                for ax in 0..3 {
                    let s = strides[ax];
                    let p = pos[ax];
                    let left = (p > 0 && v[idx - s] > 0.0).then(|| v[idx - s]);
                    let right = (p + 1 < n && v[idx + s] > 0.0).then(|| v[idx + s]);
                    out[idx][ax] = match (left, right) {
                        (Some(l), Some(r)) => (r.ln() - l.ln()) / (2.0 * h),
                        (Some(l), None) => (v[idx].ln() - l.ln()) / h,
                        (None, Some(r)) => (r.ln() - v[idx].ln()) / h,
                        (None, None) => 0.0,
                    };
                }
            }
        }
    }
    out
}

impl ProductionGrid for CartesianGrid3 {
    /// Subsampled pair sum: every stride-th node per axis carries the
    /// coarse-cell weight. Coarser than the radial reduction; intended as a
    /// monitor, not an oracle.
    fn entropy_production(u: &Field<CartesianGrid3>) -> Result<f64> {
        u.require_nonnegative()?;
        let grid = u.grid();
        let n = grid.n_per_axis();
        let v = u.values();
        let g = log_gradient_box(u);
        let stride = (n / 12).max(1);
        let offset = stride / 2;
        let mut samples: Vec<(usize, [f64; 3])> = Vec::new();
        let mut k = offset;
        while k < n {
            let mut j = offset;
            while j < n {
                let mut i = offset;
                while i < n {
                    let idx = grid.index(i, j, k);
                    if v[idx] > 0.0 {
                        samples.push((idx, grid.position(idx)));
                    }
                    i += stride;
                }
                j += stride;
            }
            k += stride;
        }
        let h = grid.spacing();
        let wcell = (stride as f64 * h).powi(3);
        let m = samples.len();
        let total = parallel::sum(m, |p| {
            let (ip, xp) = samples[p];
            let gp = g[ip];
            let mut acc = 0.0;
            for &(iq, xq) in &samples {
                let dx = xp[0] - xq[0];
                let dy = xp[1] - xq[1];
                let dz = xp[2] - xq[2];
                let dist2 = dx * dx + dy * dy + dz * dz;
                if dist2 == 0.0 {
                    continue;
                }
                let gq = g[iq];
                let d0 = gp[0] - gq[0];
                let d1 = gp[1] - gq[1];
                let d2 = gp[2] - gq[2];
                acc += v[iq] * (d0 * d0 + d1 * d1 + d2 * d2) / dist2.sqrt();
            }
            v[ip] * acc
        });
        Ok(total * wcell * wcell / (8.0 * PI))
    }

    fn require_even(u: &Field<CartesianGrid3>) -> Result<()> {
        if u.grid().is_even(u.values(), 1e-12) {
            Ok(())
        } else {
            Err(Error::Precondition(
                "field is not even in every coordinate (within 1e-12 of its max)".into(),
            ))
        }
    }
}

/// kappa(t) = (1/8 pi) mass0^{3/2} / (E(t)^{1/2} + mass0^{1/2}).
pub fn kappa(mass0: f64, e: f64) -> Result<f64> {
    if !(mass0 > 0.0) || !(e > 0.0) {
        return Err(Error::Parameter(format!(
            "kappa needs positive mass and E, got mass={mass0}, E={e}"
        )));
    }
    Ok(mass0.powf(1.5) / (8.0 * PI * (e.sqrt() + mass0.sqrt())))
}

/// Mass-concentration margin: integral of u over B_{R(t)} minus mass0/2,
/// with R(t) = 2 sqrt(E/mass0). Nonnegative whenever mass is conserved.
pub fn concentration_margin<G: Grid>(u: &Field<G>, mass0: f64) -> Result<f64> {
    if !(mass0 > 0.0) {
        return Err(Error::Parameter("concentration_margin needs mass0 > 0".into()));
    }
    let e = second_moment(u)?;
    let radius = 2.0 * (e / mass0).sqrt();
    let grid = u.grid();
    let v = u.values();
    let inside = parallel::sum(v.len(), |i| {
        if grid.node_radius(i) < radius {
            v[i] * grid.cell_volume(i)
        } else {
            0.0
        }
    });
    Ok(inside - 0.5 * mass0)
}

/// Discrete residual of the entropy inequality
/// dH/dt + kappa(t) * fisher <= 0 over one emitted interval:
/// (H2 - H1)/dt + trapezoid of kappa*fisher. Requires even data.
pub fn entropy_inequality_residual<G: Domain + ProductionGrid>(
    prev: &SimState<G>,
    next: &SimState<G>,
    mass0: f64,
) -> Result<f64> {
    G::require_even(&prev.u)?;
    G::require_even(&next.u)?;
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::Parameter("slices must be strictly ordered in time".into()));
    }
    let h1 = entropy(&prev.u)?;
    let h2 = entropy(&next.u)?;
    let f1 = weighted_fisher(&prev.u)?;
    let f2 = weighted_fisher(&next.u)?;
    if h1 == h2 && f1 == 0.0 && f2 == 0.0 {
        return Ok(0.0); // stationary vacuum: no kappa needed
    }
    let k1 = kappa(mass0, second_moment(&prev.u)?)?;
    let k2 = kappa(mass0, second_moment(&next.u)?)?;
    Ok((h2 - h1) / dt + 0.5 * (k1 * f1 + k2 * f2))
}

/// Interpolation exponent theta(eps) = (3/2)(1+2 eps)/(3+2 eps), 0 < eps <= 3/2,
/// and the induced integrability order p = 1/theta in [1, 2).
pub fn theta_of_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.5) {
        return Err(Error::Parameter(format!("theta_of_eps needs 0 < eps <= 3/2, got {eps}")));
    }
    Ok(1.5 * (1.0 + 2.0 * eps) / (3.0 + 2.0 * eps))
}

pub fn integrability_p(eps: f64) -> Result<f64> {
    Ok(1.0 / theta_of_eps(eps)?)
}

/// Entropy-route sup bound on a[u]:
/// a^p <= (C/(2-p)) (1+|x|) (1 - dH/dt / kappa), 1 <= p < 2, dH/dt <= 0.
pub fn est_a1_bound(c: f64, p: f64, x_abs: f64, kappa_t: f64, dh_dt: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::Parameter(format!("est_a1_bound needs 1 <= p < 2, got {p}")));
    }
    if dh_dt > 0.0 {
        return Err(Error::Parameter(format!("est_a1_bound needs dH/dt <= 0, got {dh_dt}")));
    }
    if !(kappa_t > 0.0) {
        return Err(Error::Parameter("est_a1_bound needs kappa > 0".into()));
    }
    Ok(c / (2.0 - p) * (1.0 + x_abs) * (1.0 - dh_dt / kappa_t))
}

/// Entropy lower bound: -H <= C_eps (1+E)^{(1-eps)/2}, 0 < eps < 2/5.
pub fn entropy_lower_bound(c_eps: f64, eps: f64, e: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.4) {
        return Err(Error::Parameter(format!(
            "entropy_lower_bound needs 0 < eps < 2/5, got {eps}"
        )));
    }
    Ok(c_eps * (1.0 + e).powf((1.0 - eps) / 2.0))
}

/// Second-moment growth exponents: (2p/(2p-4+eps), (2p-3)/(2p-4+eps)) under
/// 9/5 < p < 2 and 4-2p < eps < 2/5.
pub fn moment_growth_exponent(p: f64, eps: f64) -> Result<(f64, f64)> {
    if !(p > 1.8 && p < 2.0) {
        return Err(Error::Parameter(format!(
            "moment growth needs 9/5 < p < 2, violated by p = {p}"
        )));
    }
    if !(eps > 4.0 - 2.0 * p) {
        return Err(Error::Parameter(format!(
            "moment growth needs eps > 4 - 2p = {}, violated by eps = {eps}",
            4.0 - 2.0 * p
        )));
    }
    if !(eps < 0.4) {
        return Err(Error::Parameter(format!(
            "moment growth needs eps < 2/5, violated by eps = {eps}"
        )));
    }
    let denom = 2.0 * p - 4.0 + eps;
    Ok((2.0 * p / denom, (2.0 * p - 3.0) / denom))
}

/// Rational-input version of `moment_growth_exponent`: p = pn/pd and
/// eps = en/ed are reduced symbolically so representable results (e.g. the
/// exponent 38 at p = 19/10, eps = 3/10) come out exact, with one floating
/// division at most.
pub fn moment_growth_exponent_exact(
    (pn, pd): (i64, i64),
    (en, ed): (i64, i64),
) -> Result<(f64, f64)> {
    if pd <= 0 || ed <= 0 {
        return Err(Error::Parameter("denominators must be positive".into()));
    }
    // 9/5 < p < 2
    if !(9 * pd < 5 * pn && pn < 2 * pd) {
        return Err(Error::Parameter(format!(
            "moment growth needs 9/5 < p < 2, violated by p = {pn}/{pd}"
        )));
    }
    // eps > 4 - 2p and eps < 2/5
    if !(en * pd > (4 * pd - 2 * pn) * ed) {
        return Err(Error::Parameter(format!(
            "moment growth needs eps > 4 - 2p, violated by eps = {en}/{ed}"
        )));
    }
    if !(5 * en < 2 * ed) {
        return Err(Error::Parameter(format!(
            "moment growth needs eps < 2/5, violated by eps = {en}/{ed}"
        )));
    }
    // common denominator pd*ed: 2p - 4 + eps = (2 pn ed - 4 pd ed + en pd)/(pd ed)
    let denom = 2 * pn * ed - 4 * pd * ed + en * pd;
    let expo = (2 * pn * ed) as f64 / denom as f64;
    let xi = ((2 * pn - 3 * pd) * ed) as f64 / denom as f64;
    Ok((expo, xi))
}

/// Fit report for the conditional decay envelopes C (1/t + 1)^s.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub s_u: f64,
    pub s_a: f64,
    pub radius: f64,
    /// Smallest constants making sup_{B_R} u(t) resp. sup a(t) fit the
    /// envelope at every emitted t > 0.
    pub c_u: f64,
    pub c_a: f64,
    /// False when the run blew up or a sup was non-finite; bounded profiles
    /// always admit the envelope on a finite horizon.
    pub consistent: bool,
}

pub fn conditional_rate_monitor<G: Domain>(
    traj: &Trajectory<G>,
    s_u: f64,
    s_a: f64,
    radius: f64,
) -> Result<RateReport> {
    if !(s_u > 1.0) {
        return Err(Error::Parameter(format!("rate monitor needs s1 > 1, got {s_u}")));
    }
    if !(s_a > 1.0 / 3.0) {
        return Err(Error::Parameter(format!("rate monitor needs s2 > 1/3, got {s_a}")));
    }
    if traj.slices.len() < 4 {
        return Err(Error::TooFewSlices { got: traj.slices.len(), need: 4 });
    }
    let mut c_u = 0.0f64;
    let mut c_a = 0.0f64;
    for slice in &traj.slices {
        if slice.t <= 0.0 {
            continue;
        }
        let grid = slice.u.grid();
        let mut sup_u = 0.0f64;
        for (i, &v) in slice.u.values().iter().enumerate() {
            if grid.node_radius(i) <= radius {
                sup_u = sup_u.max(v);
            }
        }
        let sup_a = slice.a.max_a();
        let env_u = (1.0 / slice.t + 1.0).powf(s_u);
        let env_a = (1.0 / slice.t + 1.0).powf(s_a);
        c_u = c_u.max(sup_u / env_u);
        c_a = c_a.max(sup_a / env_a);
    }
    let consistent = traj.blowup.is_none() && c_u.is_finite() && c_a.is_finite();
    Ok(RateReport { s_u, s_a, radius, c_u, c_a, consistent })
}

/// Frozen constants for the calibrated bounds. Defaults were measured with
/// `calibrate_*` on the reference suite (unit Maxwellian, wide Maxwellian and
/// uniform-ball radial runs at n=512, t=0.05) and rounded up by 2%.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratedConstants {
    pub est_a1_p: f64,
    pub est_a1_c: f64,
    pub h_lb_eps: f64,
    pub h_lb_c: f64,
    pub e_ub_p: f64,
    pub e_ub_eps: f64,
    pub e_ub_c: f64,
}

impl Default for CalibratedConstants {
    fn default() -> Self {
        Self {
            est_a1_p: 1.5,
            est_a1_c: 1.52e-3,
            h_lb_eps: 0.3,
            h_lb_c: 3.33,
            e_ub_p: 1.9,
            e_ub_eps: 0.3,
            e_ub_c: 3.45,
        }
    }
}

/// Smallest C making est.a.1 hold at every node of every positive-time
/// slice, with dH/dt taken as minus the slice's entropy production. The
/// t = 0 slice is skipped: the bounds quantify solutions, and a rough
/// initial datum (e.g. an indicator) is smoothed instantly.
pub fn calibrate_est_a1<G: Domain + ProductionGrid>(
    trajs: &[&Trajectory<G>],
    p: f64,
) -> Result<f64> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::Parameter(format!("calibrate_est_a1 needs 1 <= p < 2, got {p}")));
    }
    let mut c = 0.0f64;
    for traj in trajs {
        let mass0 = traj.initial_mass();
        for slice in traj.slices.iter().filter(|s| s.t > 0.0) {
            let e = second_moment(&slice.u)?;
            let k = kappa(mass0, e)?;
            let d = entropy_production(&slice.u)?;
            let grid = slice.u.grid();
            let factor = 1.0 + d / k;
            for (i, &av) in slice.a.a.values().iter().enumerate() {
                let needed = av.powf(p) * (2.0 - p) / ((1.0 + grid.node_radius(i)) * factor);
                c = c.max(needed);
            }
        }
    }
    Ok(c)
}

/// Smallest C_eps with -H <= C_eps (1+E)^{(1-eps)/2} across the runs'
/// positive-time slices.
pub fn calibrate_entropy_lb<G: Domain>(trajs: &[&Trajectory<G>], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.4) {
        return Err(Error::Parameter(format!(
            "calibrate_entropy_lb needs 0 < eps < 2/5, got {eps}"
        )));
    }
    let mut c = 0.0f64;
    for traj in trajs {
        for slice in traj.slices.iter().filter(|s| s.t > 0.0) {
            let h = entropy(&slice.u)?;
            let e = second_moment(&slice.u)?;
            c = c.max(-h / (1.0 + e).powf((1.0 - eps) / 2.0));
        }
    }
    Ok(c)
}

/// Smallest C with E(t) <= C (1 + t^{2p/(2p-4+eps)}) across the runs.
pub fn calibrate_e_ub<G: Domain>(trajs: &[&Trajectory<G>], p: f64, eps: f64) -> Result<f64> {
    let (expo, _) = moment_growth_exponent(p, eps)?;
    let mut c = 0.0f64;
    for traj in trajs {
        for slice in &traj.slices {
            let e = second_moment(&slice.u)?;
            c = c.max(e / (1.0 + slice.t.powf(expo)));
        }
    }
    Ok(c)
}

/// One time-slice of every monitored scalar.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub first_moment: [f64; 3],
    pub e: f64,
    pub h: f64,
    /// Entropy production D = -dH/dt (pair integral), >= 0.
    pub production: f64,
    pub kappa: f64,
    pub fisher: f64,
    /// min over nodes of a - a_lower_bound.
    pub a_min_margin: f64,
    /// min over nodes of est.a.1 bound minus a^p (calibrated C).
    pub a_ub_margin: f64,
    /// Calibrated entropy lower bound minus (-H).
    pub h_lb_margin: f64,
    /// Calibrated moment growth bound minus E.
    pub e_ub_margin: f64,
    pub clipped_mass: f64,
}

pub fn record_state<G: Domain + ProductionGrid>(
    state: &SimState<G>,
    mass0: f64,
    calib: &CalibratedConstants,
) -> Result<DiagnosticsRecord> {
    let u = &state.u;
    let grid = u.grid();
    let m = mass(u)?;
    let fm = crate::fields::first_moment(u)?;
    let e = second_moment(u)?;
    let h = entropy(u)?;
    let production = entropy_production(u)?;
    let k = kappa(mass0, e)?;
    let fisher = weighted_fisher(u)?;

    let av = state.a.a.values();
    let mut a_min_margin = f64::INFINITY;
    let mut a_ub_margin = f64::INFINITY;
    let est_factor = 1.0 + production / k;
    for (i, &a) in av.iter().enumerate() {
        let r = grid.node_radius(i);
        a_min_margin = a_min_margin.min(a - a_lower_bound(r, mass0, e)?);
        let bound = calib.est_a1_c / (2.0 - calib.est_a1_p) * (1.0 + r) * est_factor;
        a_ub_margin = a_ub_margin.min(bound - a.powf(calib.est_a1_p));
    }
    let h_lb_margin = entropy_lower_bound(calib.h_lb_c, calib.h_lb_eps, e)? - (-h);
    let (expo, _) = moment_growth_exponent(calib.e_ub_p, calib.e_ub_eps)?;
    let e_ub_margin = calib.e_ub_c * (1.0 + state.t.powf(expo)) - e;

    Ok(DiagnosticsRecord {
        t: state.t,
        mass: m,
        first_moment: fm,
        e,
        h,
        production,
        kappa: k,
        fisher,
        a_min_margin,
        a_ub_margin,
        h_lb_margin,
        e_ub_margin,
        clipped_mass: state.clipped_mass,
    })
}

/// Records for every emitted slice of a run.
pub fn records_for<G: Domain + ProductionGrid>(
    traj: &Trajectory<G>,
    calib: &CalibratedConstants,
) -> Result<Vec<DiagnosticsRecord>> {
    let mass0 = mass(&traj.slices[0].u)?;
    traj.slices.iter().map(|s| record_state(s, mass0, calib)).collect()
}

/// Quadrature check used around (kappa.T): integral of u/(1+|x|) >= pi kappa.
pub fn kappa_gamma_margin<G: Grid>(u: &Field<G>, mass0: f64) -> Result<f64> {
    let e = second_moment(u)?;
    let k = kappa(mass0, e)?;
    Ok(integrate(u, Weight::Gamma)? - PI * k)
}

/// L^3(gamma^3 dx) norm of a slice, the space in the global L^1 L^3 bound.
pub fn l3_gamma_norm<G: Grid>(u: &Field<G>) -> Result<f64> {
    lp_norm(u, 3.0, Weight::GammaCubed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, SimConfig};
    use crate::fields::Profile;

    fn radial_maxwellian(n: usize) -> Field<RadialGrid> {
        let g = RadialGrid::new(12.0, n).unwrap();
        Profile::maxwellian_unit().sample_radial(&g).unwrap()
    }

    #[test]
    fn entropy_of_unit_maxwellian() {
        let u = radial_maxwellian(2048);
        let h = entropy(&u).unwrap();
        let expect = -1.5 * (1.0 + (2.0 * PI).ln());
        assert!((h - expect).abs() < 1e-4, "{h} vs {expect}");
    }

    #[test]
    fn entropy_of_indicator_is_zero() {
        let g = RadialGrid::new(8.0, 512).unwrap();
        let u = Field::from_fn(g.clone(), |i| if g.node(i) <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(entropy(&u).unwrap(), 0.0);
    }

    #[test]
    fn entropy_scaling_identity() {
        // H[lambda u] = lambda H[u] + lambda log(lambda) mass(u)
        let u = radial_maxwellian(512);
        let lambda = 2.75;
        let h = entropy(&u).unwrap();
        let m = mass(&u).unwrap();
        let h_scaled = entropy(&u.scale(lambda).unwrap()).unwrap();
        let expect = lambda * h + lambda * lambda.ln() * m;
        assert!((h_scaled - expect).abs() < 1e-10 * h_scaled.abs());
    }

    #[test]
    fn production_of_unit_maxwellian() {
        // grad log u = -x, so D = (1/4pi)(1/2) E|X-Y| = (1/4pi)(2/sqrt(pi)).
        let u = radial_maxwellian(1024);
        let d = entropy_production(&u).unwrap();
        let expect = 2.0 / PI.sqrt() / (4.0 * PI);
        assert!((d - expect).abs() < 0.02 * expect, "{d} vs {expect}");
    }

    #[test]
    fn production_is_nonnegative_on_mixed_profiles() {
        let g = RadialGrid::new(8.0, 256).unwrap();
        for prof in [
            Profile::Maxwellian { mass: 2.0, sigma: 0.7 },
            Profile::UniformBall { radius: 1.5, height: 0.4 },
            Profile::Table { rs: vec![0.0, 1.0, 3.0], us: vec![1.0, 0.8, 0.0] },
        ] {
            let u = prof.sample_radial(&g).unwrap();
            assert!(entropy_production(&u).unwrap() >= 0.0);
        }
    }

    #[test]
    fn production_vanishes_for_uniform_log_gradient() {
        // On a 3d box, u = exp(c . x) restricted to a ball has a constant
        // log-gradient wherever u > 0; discrete log-differences are exact for
        // linear log u, so the pair integrand vanishes identically.
        let g = CartesianGrid3::new(2.0, 24).unwrap();
        let u = Field::from_fn(g.clone(), |idx| {
            let [x, y, z] = g.position(idx);
            if x * x + y * y + z * z < 1.5 * 1.5 {
                (0.4 * x + 0.2 * y - 0.3 * z).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let d = CartesianGrid3::entropy_production(&u).unwrap();
        // Interior log-gradients are exactly (0.4, 0.2, -0.3); only support
        // boundary nodes (one-sided stencils) deviate, and those are exact
        // too for a linear exponent.
        assert!(d.abs() < 1e-12, "production {d}");
    }

    #[test]
    fn box_production_approximates_maxwellian_value() {
        let g = CartesianGrid3::new(6.0, 32).unwrap();
        let u = Profile::maxwellian_unit().sample_box(&g).unwrap();
        let d = CartesianGrid3::entropy_production(&u).unwrap();
        let expect = 2.0 / PI.sqrt() / (4.0 * PI);
        assert!((d - expect).abs() < 0.2 * expect, "{d} vs {expect}");
    }

    #[test]
    fn kappa_values_and_monotonicity() {
        let k = kappa(1.0, 1.5).unwrap();
        let expect = 1.0 / (8.0 * PI * (1.5f64.sqrt() + 1.0));
        assert!((k - expect).abs() < 1e-12);
        assert!(kappa(1.0, 2.0).unwrap() < k);
        assert!(kappa(2.0, 1.5).unwrap() > k);
        assert!(kappa(0.0, 1.0).is_err());
    }

    #[test]
    fn kappa_gamma_direction_on_maxwellian() {
        let u = radial_maxwellian(1024);
        assert!(kappa_gamma_margin(&u, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn concentration_holds_on_maxwellian() {
        let u = radial_maxwellian(1024);
        assert!(concentration_margin(&u, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn theta_and_p_endpoints() {
        assert!((theta_of_eps(1.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrability_p(1.5).unwrap() - 1.0).abs() < 1e-12);
        // eps -> 0+ gives theta -> 1/2, p -> 2 (excluded endpoint).
        let th = theta_of_eps(1e-9).unwrap();
        assert!((th - 0.5).abs() < 1e-8);
        assert!(theta_of_eps(0.0).is_err());
        assert!(theta_of_eps(1.6).is_err());
    }

    #[test]
    fn est_a1_bound_domain() {
        assert!(est_a1_bound(1.0, 2.0, 0.0, 0.1, -1.0).is_err());
        assert!(est_a1_bound(1.0, 1.5, 0.0, 0.1, 1.0).is_err());
        let b = est_a1_bound(1.0, 1.5, 1.0, 0.1, -0.2).unwrap();
        assert!((b - 2.0 * 2.0 * 3.0).abs() < 1e-12); // (1/(0.5)) * 2 * (1+2)
    }

    #[test]
    fn entropy_lower_bound_domain() {
        assert!(entropy_lower_bound(1.0, 0.4, 1.0).is_err());
        assert!(entropy_lower_bound(1.0, 0.0, 1.0).is_err());
        let b1 = entropy_lower_bound(2.0, 0.3, 1.0).unwrap();
        let b2 = entropy_lower_bound(2.0, 0.3, 2.0).unwrap();
        assert!(b2 > b1); // increasing in E
    }

    #[test]
    fn moment_growth_example_values() {
        let (expo, xi) = moment_growth_exponent_exact((19, 10), (3, 10)).unwrap();
        assert_eq!(expo, 38.0);
        assert_eq!(xi, 8.0);
        // Float version agrees to rounding.
        let (expo_f, xi_f) = moment_growth_exponent(1.9, 0.3).unwrap();
        assert!((expo_f - 38.0).abs() < 1e-12 * 38.0);
        assert!((xi_f - 8.0).abs() < 1e-12 * 8.0);
        let (expo, _) = moment_growth_exponent(1.95, 0.2).unwrap();
        assert!((expo - 39.0).abs() < 1e-10);
        assert!(moment_growth_exponent(1.7, 0.3).is_err());
        assert!(moment_growth_exponent(1.9, 0.15).is_err()); // eps < 4-2p
        assert!(moment_growth_exponent(1.9, 0.45).is_err());
        assert!(moment_growth_exponent_exact((19, 10), (1, 10)).is_err());
        assert!(moment_growth_exponent_exact((19, 10), (9, 20)).is_err());
    }

    #[test]
    fn maxwellian_run_entropy_structure() {
        let g = RadialGrid::new(12.0, 256).unwrap();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let config = SimConfig
            { t_end: 0.02, output_stride: 2, cfl_safety: 0.25, ..Default::default() };
        let traj = run(&g, u, &config).unwrap();
        assert!(traj.slices.len() >= 4);
        let calib = CalibratedConstants::default();
        let records = records_for(&traj, &calib).unwrap();
        for pair in records.windows(2) {
            assert!(pair[1].h <= pair[0].h + 1e-9, "entropy rose: {:?}", pair);
            assert!(pair[1].e > pair[0].e, "second moment not increasing");
        }
        for r in &records {
            assert!(r.production >= 0.0);
            assert!(r.a_min_margin >= 0.0, "a.lb violated: {}", r.a_min_margin);
        }
        // dH/dt vs production on the first interval.
        let dh = (records[1].h - records[0].h) / (records[1].t - records[0].t);
        let d_mid = 0.5 * (records[0].production + records[1].production);
        assert!(
            ((-dh) - d_mid).abs() < 0.05 * d_mid,
            "production {d_mid} vs -dH/dt {}",
            -dh
        );
        // Entropy inequality residual on the first interval.
        let res = entropy_inequality_residual(&traj.slices[0], &traj.slices[1], 1.0).unwrap();
        assert!(res <= 1e-3 * dh.abs(), "residual {res}");
    }

    #[test]
    fn residual_of_stationary_vacuum_is_zero() {
        let g = RadialGrid::new(8.0, 64).unwrap();
        let s0 = crate::dynamics::SimState::initial(Field::zeros(g.clone()), &()).unwrap();
        let mut s1 = s0.clone();
        s1.t = 1e-3;
        assert_eq!(entropy_inequality_residual(&s0, &s1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn residual_refuses_non_even_data() {
        let g = CartesianGrid3::new(4.0, 16).unwrap();
        let shifted = Field::from_fn(g.clone(), |idx| {
            let [x, y, z] = g.position(idx);
            let r2 = (x - 0.5) * (x - 0.5) + y * y + z * z;
            (-r2).exp()
        })
        .unwrap();
        let solver = g.make_solver().unwrap();
        let s0 = SimState::initial(shifted, &solver).unwrap();
        let s1 = crate::dynamics::step_divergence(&s0, 1e-4, &solver).unwrap();
        assert!(matches!(
            entropy_inequality_residual(&s0, &s1, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rate_monitor_contract() {
        let g = RadialGrid::new(12.0, 128).unwrap();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let config = SimConfig
            { t_end: 0.02, output_stride: 2, cfl_safety: 0.1, ..Default::default() };
        let traj = run(&g, u, &config).unwrap();
        assert!(conditional_rate_monitor(&traj, 1.0, 0.4, 2.0).is_err());
        assert!(conditional_rate_monitor(&traj, 1.1, 0.2, 2.0).is_err());
        let report = conditional_rate_monitor(&traj, 1.1, 0.4, 2.0).unwrap();
        assert!(report.consistent);
        assert!(report.c_u > 0.0 && report.c_u.is_finite());
        assert!(report.c_a > 0.0 && report.c_a.is_finite());
        // For a near-stationary sup the required constant never exceeds the
        // sup itself, since (1/t + 1)^s >= 1.
        let sup = traj
            .slices
            .iter()
            .map(|s| s.u.max())
            .fold(0.0f64, f64::max);
        assert!(report.c_u <= sup);
    }
}
