//! Inequality probe battery shared by the radial and box trajectories.

use landau::dynamics::{Domain, Trajectory};
use landau::error::Result;
use landau::fields::{lp_norm, mass, Weight};
use landau::inequalities::{
    eps_poincare_constant, gain_integrability_bound, gks_ratio, l1l3_estimate, l53_estimate,
    weighted_sobolev_ratio, InequalityReport, TestFunctionFamily,
};
use landau::potential::a_upper_bound_lp;

use serde_json::json;

pub struct BatteryParams {
    pub q: f64,
    pub eps_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            q: 2.0,
            eps_grid: vec![0.05, 0.1, 0.2, 0.4],
            p_grid: vec![0.5, 1.0, 5.0 / 3.0, 2.0],
        }
    }
}

pub fn run_battery<G: Domain>(
    traj: &Trajectory<G>,
    family: &TestFunctionFamily<G>,
    params: &BatteryParams,
) -> Result<Vec<InequalityReport>> {
    let mut reports = Vec::new();
    let first = &traj.slices[0];
    let last = traj.final_state();
    let h = first.u.grid().spacing();

    // eps-Poincare probe: C(eps) must be nonincreasing over the eps grid.
    let mut cs = Vec::new();
    for &eps in &params.eps_grid {
        cs.push(eps_poincare_constant(&last.u, &last.a.a, eps, family)?);
    }
    let monotone = cs.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    reports.push(InequalityReport::new(
        "eps_poincare_monotone",
        json!({"eps_grid": params.eps_grid, "family": family.len()}),
        *cs.last().unwrap(),
        cs[0],
        monotone,
    ));

    // GKS ratio on the first and last slices for each p.
    for &p in &params.p_grid {
        for (tag, slice) in [("first", first), ("last", last)] {
            let ratio = gks_ratio(&slice.u, &slice.a.a, p)?;
            reports.push(InequalityReport::new(
                &format!("gks_p{p:.4}_{tag}"),
                json!({"p": p, "t": slice.t}),
                ratio,
                1.0 + 5.0 * h,
                ratio <= 1.0 + 5.0 * h,
            ));
        }
    }

    // Weighted space-time Sobolev: smallest admissible C over the probe set
    // (each family member held static in time).
    let mut ws_max = 0.0f64;
    let mut ws_argmax = String::new();
    for (name, phi) in &family.members {
        let phis = vec![phi.clone(); traj.slices.len()];
        let ws = weighted_sobolev_ratio(&traj.slices, &phis, params.q)?;
        if ws > ws_max {
            ws_max = ws;
            ws_argmax = name.clone();
        }
    }
    reports.push(InequalityReport::new(
        "weighted_sobolev",
        json!({"q": params.q, "probes": family.len(), "worst_probe": ws_argmax}),
        ws_max,
        1.0,
        ws_max.is_finite(),
    ));

    // Global-in-time estimates.
    let l13 = l1l3_estimate(traj)?;
    reports.push(InequalityReport::new(
        "l1l3",
        json!({}),
        l13.value,
        l13.majorant_raw,
        l13.value.is_finite() && l13.majorant_raw.is_finite(),
    ));
    let l53 = l53_estimate(traj)?;
    reports.push(InequalityReport::new(
        "l53_chain",
        json!({"violations": l53.chain_violations}),
        l53.value,
        l53.chain_margin_min,
        l53.chain_violations == 0,
    ));

    // Gain in integrability plus the split-radius sup chain for a[u].
    for n in [0u32, 1] {
        let gain = gain_integrability_bound(traj, n)?;
        let mut chain_ok = true;
        for slice in &traj.slices {
            let m = mass(&slice.u)?;
            let lp = lp_norm(&slice.u, gain.p, Weight::Unit)?;
            let bound = a_upper_bound_lp(m, lp, gain.p)?.bound;
            if slice.a.max_a() > bound {
                chain_ok = false;
            }
        }
        reports.push(InequalityReport::new(
            &format!("gain_n{n}_sup_chain"),
            json!({"n": n, "p": gain.p, "alpha": gain.alpha, "c_needed_pow_n": gain.c_needed_pow_n}),
            gain.sup_lp,
            gain.base,
            chain_ok,
        ));
    }

    Ok(reports)
}
