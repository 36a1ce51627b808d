//! Radial barrier machinery: supersolution verification a[u] lap(g) + u g < 0
//! and comparison monitoring u <= g along trajectories.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::fields::{lp_weak_norm, Field, Grid, RadialGrid};
use crate::potential::solve_poisson_radial;

use serde::Serialize;

/// Candidate barrier: positive, radially nonincreasing, finite weak-L^p norm
/// for the stated integrability class.
#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub g: Field<RadialGrid>,
    pub p_weak: f64,
}

impl BarrierSpec {
    pub fn new(g: Field<RadialGrid>, p_weak: f64) -> Result<Self> {
        if g.min() <= 0.0 {
            return Err(Error::Precondition("barrier must be strictly positive".into()));
        }
        if !monotone_radial_check(&g) {
            return Err(Error::Precondition("barrier must be radially nonincreasing".into()));
        }
        let weak = lp_weak_norm(&g, p_weak)?;
        if !weak.is_finite() {
            return Err(Error::Precondition("barrier weak norm is not finite".into()));
        }
        Ok(Self { g, p_weak })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierResidual {
    /// Nodal values of a[u] lap(g) + u g.
    pub residual: Vec<f64>,
    pub max: f64,
    pub max_radius: f64,
    pub min: f64,
    pub min_radius: f64,
    /// PASS iff the residual is strictly negative at every node (zero
    /// tolerance: the supersolution condition is strict).
    pub pass: bool,
}

/// Evaluate the barrier condition field a[u] lap(g) + u g on the shared grid.
pub fn barrier_residual(u: &Field<RadialGrid>, g: &Field<RadialGrid>) -> Result<BarrierResidual> {
    if u.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    u.require_nonnegative()?;
    let grid = u.grid();
    let a = solve_poisson_radial(u)?.a;
    let lap_g = grid.laplacian(g.values());
    let n = grid.len();
    let mut residual = vec![0.0; n];
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut max_i = 0;
    let mut min_i = 0;
    for i in 0..n {
        let r = a.values()[i] * lap_g[i] + u.values()[i] * g.values()[i];
        residual[i] = r;
        if r > max {
            max = r;
            max_i = i;
        }
        if r < min {
            min = r;
            min_i = i;
        }
    }
    Ok(BarrierResidual {
        residual,
        max,
        max_radius: grid.node(max_i),
        min,
        min_radius: grid.node(min_i),
        pass: max < 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// First (t, radius) where some node violated u <= g, if any.
    pub first_violation: Option<(f64, f64)>,
    pub clean: bool,
    pub slices_checked: usize,
}

/// Per-slice exhaustive check of u(.,t) <= g. Requires u0 < g strictly.
pub fn comparison_monitor(
    traj: &Trajectory<RadialGrid>,
    g: &Field<RadialGrid>,
) -> Result<ComparisonReport> {
    let first = &traj.slices[0];
    if first.u.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    for (i, (&u0, &gv)) in first.u.values().iter().zip(g.values()).enumerate() {
        if u0 >= gv {
            return Err(Error::Precondition(format!(
                "initial data does not sit strictly below the barrier at node {i}: {u0} >= {gv}"
            )));
        }
    }
    let mut first_violation = None;
    'outer: for slice in &traj.slices {
        for (i, (&uv, &gv)) in slice.u.values().iter().zip(g.values()).enumerate() {
            if uv > gv {
                first_violation = Some((slice.t, slice.u.grid().node(i)));
                break 'outer;
            }
        }
    }
    Ok(ComparisonReport {
        first_violation,
        clean: first_violation.is_none(),
        slices_checked: traj.slices.len(),
    })
}

/// True iff the samples are radially nonincreasing within 1e-12 * max(u).
pub fn monotone_radial_check(u: &Field<RadialGrid>) -> bool {
    let tol = 1e-12 * u.max().abs();
    u.values().windows(2).all(|w| w[1] <= w[0] + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, SimConfig};
    use crate::fields::Profile;

    fn grid() -> RadialGrid {
        RadialGrid::new(8.0, 256).unwrap()
    }

    #[test]
    fn zero_u_fails_strict_negativity() {
        let g = grid();
        let u = Field::zeros(g.clone());
        let barrier = Field::from_fn(g.clone(), |i| (1.0 + g.node(i).powi(2)).powi(-2)).unwrap();
        let res = barrier_residual(&u, &barrier).unwrap();
        assert_eq!(res.max, 0.0);
        assert!(!res.pass);
    }

    #[test]
    fn constant_barrier_fails() {
        let g = grid();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let barrier = Field::from_fn(g.clone(), |_| 1.0).unwrap();
        let res = barrier_residual(&u, &barrier).unwrap();
        // lap(g) = 0 so the residual is u g > 0 somewhere.
        assert!(res.max > 0.0);
        assert!(!res.pass);
    }

    #[test]
    fn rational_barrier_residual_changes_sign_in_space() {
        let g = grid();
        let barrier = Field::from_fn(g.clone(), |i| (1.0 + g.node(i).powi(2)).powi(-2)).unwrap();
        for mass in [0.1, 3.0] {
            let u = Profile::UniformBall { radius: 1.0, height: mass / (4.0 / 3.0 * std::f64::consts::PI) }
                .sample_radial(&g)
                .unwrap();
            let res = barrier_residual(&u, &barrier).unwrap();
            assert!(res.min < 0.0, "mass {mass}: min {}", res.min);
            assert!(res.max > 0.0, "mass {mass}: max {}", res.max);
            assert!(!res.pass);
        }
    }

    #[test]
    fn residual_scales_linearly_in_g() {
        let g = grid();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let barrier = Field::from_fn(g.clone(), |i| (1.0 + g.node(i).powi(2)).powi(-2)).unwrap();
        let r1 = barrier_residual(&u, &barrier).unwrap();
        let c = 3.5;
        let r2 = barrier_residual(&u, &barrier.scale(c).unwrap()).unwrap();
        let scale = c * r1.residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in r1.residual.iter().zip(&r2.residual) {
            assert!((c * a - b).abs() <= 1e-10 * scale);
        }
        assert_eq!(r1.pass, r2.pass);
    }

    #[test]
    fn spec_validation() {
        let g = grid();
        let decaying = Field::from_fn(g.clone(), |i| (1.0 + g.node(i).powi(2)).powi(-2)).unwrap();
        assert!(BarrierSpec::new(decaying, 2.0).is_ok());
        let ring = Field::from_fn(g.clone(), |i| {
            let r = g.node(i);
            r * r * (-r * r).exp() + 1e-6
        })
        .unwrap();
        assert!(BarrierSpec::new(ring, 2.0).is_err());
    }

    #[test]
    fn monotonicity_check() {
        let g = grid();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        assert!(monotone_radial_check(&u));
        let ring = Field::from_fn(g.clone(), |i| {
            let r = g.node(i);
            r * r * (-r * r).exp()
        })
        .unwrap();
        assert!(!monotone_radial_check(&ring));
    }

    #[test]
    fn monotonicity_survives_divergence_steps() {
        let g = RadialGrid::new(12.0, 256).unwrap();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let solver = ();
        let mut state = crate::dynamics::SimState::initial(u, &solver).unwrap();
        for _ in 0..100 {
            let dt = 0.5 * crate::dynamics::stable_dt(&state);
            state = crate::dynamics::step_divergence(&state, dt, &solver).unwrap();
        }
        assert!(monotone_radial_check(&state.u));
    }

    #[test]
    fn comparison_monitor_contract() {
        let g = RadialGrid::new(12.0, 256).unwrap();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        let max0 = u.max();
        // Dominating envelope: twice the max with a wide Gaussian tail.
        let envelope =
            Field::from_fn(g.clone(), |i| 2.0 * max0 * (-g.node(i).powi(2) / 8.0).exp()).unwrap();
        let config = SimConfig
            { t_end: 0.01, output_stride: 2, cfl_safety: 0.25, ..Default::default() };
        let traj = run(&g, u.clone(), &config).unwrap();
        let report = comparison_monitor(&traj, &envelope).unwrap();
        assert!(report.clean, "violation: {:?}", report.first_violation);
        // Tiny barrier rejects at the precondition.
        let tiny = Field::from_fn(g.clone(), |_| 0.5 * max0).unwrap();
        assert!(matches!(
            comparison_monitor(&traj, &tiny),
            Err(Error::Precondition(_))
        ));
        // No false negatives: a trajectory carrying a violating slice is
        // never reported clean.
        let mut bad = run(&g, u.clone(), &SimConfig { t_end: 0.0, ..Default::default() }).unwrap();
        let spike = Field::from_fn(g.clone(), |i| {
            if i == 10 {
                3.0 * max0
            } else {
                u.values()[i]
            }
        })
        .unwrap();
        let mut slice = bad.slices[0].clone();
        slice.t = 1e-3;
        slice.u = spike;
        bad.slices.push(slice);
        let report_bad = comparison_monitor(&bad, &envelope).unwrap();
        assert!(!report_bad.clean);
        assert!(report_bad.first_violation.is_some());

        // Zero-dynamics run with u0 = g/2 stays clean.
        let half = envelope.scale(0.5).unwrap();
        let traj0 = run(&g, half, &SimConfig { t_end: 0.0, ..Default::default() }).unwrap();
        let report0 = comparison_monitor(&traj0, &envelope).unwrap();
        assert!(report0.clean);
    }
}
