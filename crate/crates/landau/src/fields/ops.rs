//! Quadrature, moments and norms on fields.
//!
//! Every reduction runs through the deterministic block summation in
//! `crate::parallel`, so results are bit-reproducible for any worker count.

use crate::error::{Error, Result};
use crate::fields::field::{Field, Weight};
use crate::fields::grid::Grid;
use crate::parallel;

/// Weighted integral: sum of f * w(|x|) * cell volume.
pub fn integrate<G: Grid>(f: &Field<G>, w: Weight) -> Result<f64> {
    let grid = f.grid();
    let v = f.values();
    Ok(parallel::sum(v.len(), |i| {
        v[i] * w.eval(grid.node_radius(i)) * grid.cell_volume(i)
    }))
}

/// Integral of f against an arbitrary radial weight.
pub fn integrate_with<G: Grid>(f: &Field<G>, w: impl Fn(f64) -> f64 + Sync) -> f64 {
    let grid = f.grid();
    let v = f.values();
    parallel::sum(v.len(), |i| v[i] * w(grid.node_radius(i)) * grid.cell_volume(i))
}

/// Total mass (zeroth moment).
pub fn mass<G: Grid>(f: &Field<G>) -> Result<f64> {
    f.require_nonnegative()?;
    integrate(f, Weight::Unit)
}

/// First moment, integral of x f dx. Identically zero on radial grids; on the
/// box grid nodes are summed in mirrored pairs so even data cancels exactly.
pub fn first_moment<G: Grid>(f: &Field<G>) -> Result<[f64; 3]> {
    f.require_nonnegative()?;
    Ok(f.grid().first_moment(f.values()))
}

/// Second moment E = integral of |x|^2/2 f dx.
pub fn second_moment<G: Grid>(f: &Field<G>) -> Result<f64> {
    f.require_nonnegative()?;
    let grid = f.grid();
    let v = f.values();
    Ok(parallel::sum(v.len(), |i| {
        let r = grid.node_radius(i);
        0.5 * r * r * v[i] * grid.cell_volume(i)
    }))
}

/// (integral of |f|^p w dx)^{1/p}, p >= 1.
pub fn lp_norm<G: Grid>(f: &Field<G>, p: f64, w: Weight) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("lp_norm requires p >= 1, got {p}")));
    }
    let grid = f.grid();
    let v = f.values();
    let s = parallel::sum(v.len(), |i| {
        v[i].abs().powf(p) * w.eval(grid.node_radius(i)) * grid.cell_volume(i)
    });
    Ok(s.powf(1.0 / p))
}

/// Weak-L^p norm estimate: sup over a log-spaced level ladder of
/// lambda * |{f >= lambda}|^{1/p}. The ladder spans the positive range of f
/// with at least 64 levels; superlevel sets use the non-strict comparison so
/// a constant field reports its exact weak norm.
pub fn lp_weak_norm<G: Grid>(f: &Field<G>, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Parameter(format!("lp_weak_norm requires p > 0, got {p}")));
    }
    f.require_nonnegative()?;
    let grid = f.grid();
    let v = f.values();
    let mut min_pos = f64::INFINITY;
    let mut max = 0.0f64;
    for &x in v {
        if x > 0.0 {
            min_pos = min_pos.min(x);
            max = max.max(x);
        }
    }
    if max == 0.0 {
        return Ok(0.0); // empty positive support
    }
    const LEVELS: usize = 64;
    let lg_lo = min_pos.ln();
    let lg_hi = max.ln();
    let mut best = 0.0f64;
    for k in 0..LEVELS {
        let t = if LEVELS == 1 { 0.0 } else { k as f64 / (LEVELS - 1) as f64 };
        let lambda = (lg_lo + t * (lg_hi - lg_lo)).exp();
        let measure = parallel::sum(v.len(), |i| {
            if v[i] >= lambda {
                grid.cell_volume(i)
            } else {
                0.0
            }
        });
        best = best.max(lambda * measure.powf(1.0 / p));
    }
    Ok(best)
}

/// Weighted Fisher information: integral of |grad sqrt(f)|^2 / (1+|x|) dx.
/// Nodes where f vanishes contribute zero.
pub fn weighted_fisher<G: Grid>(f: &Field<G>) -> Result<f64> {
    f.require_nonnegative()?;
    let grid = f.grid();
    let sqrt_vals: Vec<f64> = f.values().iter().map(|&v| v.sqrt()).collect();
    let gsq = grid.gradient_sq(&sqrt_vals);
    let v = f.values();
    Ok(parallel::sum(v.len(), |i| {
        if v[i] == 0.0 {
            0.0
        } else {
            gsq[i] * Weight::Gamma.eval(grid.node_radius(i)) * grid.cell_volume(i)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::field::Profile;
    use crate::fields::grid::{CartesianGrid3, RadialGrid};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn maxwellian(n: usize) -> Field<RadialGrid> {
        let g = RadialGrid::new(12.0, n).unwrap();
        Profile::maxwellian_unit().sample_radial(&g).unwrap()
    }

    #[test]
    fn maxwellian_mass_is_one() {
        let f = maxwellian(2048);
        let m = integrate(&f, Weight::Unit).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "mass {m}");
    }

    #[test]
    fn zero_field_integrates_to_zero() {
        let g = RadialGrid::new(12.0, 64).unwrap();
        let f = Field::zeros(g);
        assert_eq!(integrate(&f, Weight::Gamma).unwrap(), 0.0);
    }

    #[test]
    fn ball_mass_matches_volume() {
        // Edge-aligned grid: r = 1 falls on a cell boundary.
        let g = RadialGrid::new(8.0, 2048).unwrap();
        let f = Profile::UniformBall { radius: 1.0, height: 1.0 }
            .sample_radial(&g)
            .unwrap();
        let m = integrate(&f, Weight::Unit).unwrap();
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-3, "ball mass {m}");
    }

    #[test]
    fn maxwellian_second_moment() {
        let f = maxwellian(2048);
        let e = second_moment(&f).unwrap();
        assert!((e - 1.5).abs() < 1e-5, "E {e}");
    }

    #[test]
    fn ball_second_moment() {
        let g = RadialGrid::new(8.0, 2048).unwrap();
        let f = Profile::UniformBall { radius: 1.0, height: 1.0 }
            .sample_radial(&g)
            .unwrap();
        let e = second_moment(&f).unwrap();
        assert!((e - 2.0 * PI / 5.0).abs() < 1e-3, "E {e}");
    }

    #[test]
    fn radial_first_moment_is_zero() {
        let f = maxwellian(256);
        assert_eq!(first_moment(&f).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn maxwellian_l2_norm() {
        // integral of u^2 = 1/(8 pi^{3/2})
        let f = maxwellian(2048);
        let n2 = lp_norm(&f, 2.0, Weight::Unit).unwrap();
        let expect = (8.0 * PI.powf(1.5)).powf(-0.5);
        assert!((n2 - expect).abs() < 1e-4, "{n2} vs {expect}");
    }

    #[test]
    fn ball_l3_norm() {
        let g = RadialGrid::new(8.0, 2048).unwrap();
        let f = Field::from_fn(g.clone(), |i| if g.node(i) <= 1.0 { 1.0 } else { 0.0 }).unwrap();
        let n3 = lp_norm(&f, 3.0, Weight::Unit).unwrap();
        let expect = (4.0 * PI / 3.0).powf(1.0 / 3.0);
        assert!((n3 - expect).abs() < 1e-3, "{n3} vs {expect}");
    }

    #[test]
    fn lp_norm_rejects_p_below_one() {
        let f = maxwellian(64);
        assert!(lp_norm(&f, 0.5, Weight::Unit).is_err());
    }

    #[test]
    fn weak_norm_of_power_profile() {
        // f = r^{-3/p} has lambda |{f >= lambda}|^{1/p} = (4 pi / 3)^{1/p} at
        // every resolved level. Cap the profile so the ladder stays within
        // the resolved range.
        let g = RadialGrid::new(12.0, 2048).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let cap_r: f64 = 0.4;
            let cap = cap_r.powf(-3.0 / p);
            let f = Field::from_fn(g.clone(), |i| g.node(i).powf(-3.0 / p).min(cap)).unwrap();
            let w = lp_weak_norm(&f, p).unwrap();
            let expect = (4.0 * PI / 3.0).powf(1.0 / p);
            assert!(
                (w - expect).abs() < 0.05 * expect,
                "p={p}: {w} vs {expect}"
            );
        }
    }

    #[test]
    fn weak_norm_of_constant_on_ball() {
        let g = RadialGrid::new(8.0, 1024).unwrap();
        let c = 2.5;
        let f = Field::from_fn(g.clone(), |i| if g.node(i) <= 1.0 { c } else { 0.0 }).unwrap();
        for p in [1.0, 2.0] {
            let w = lp_weak_norm(&f, p).unwrap();
            let vol: f64 = (0..g.len())
                .filter(|&i| g.node(i) <= 1.0)
                .map(|i| g.cell_volume(i))
                .sum();
            let expect = c * vol.powf(1.0 / p);
            assert!((w - expect).abs() < 1e-10 * expect, "p={p}: {w} vs {expect}");
        }
    }

    #[test]
    fn weak_norm_of_zero_field() {
        let g = RadialGrid::new(8.0, 64).unwrap();
        assert_eq!(lp_weak_norm(&Field::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn fisher_of_constant_is_zero() {
        let g = RadialGrid::new(8.0, 128).unwrap();
        let f = Field::from_fn(g, |_| 3.0).unwrap();
        assert_eq!(weighted_fisher(&f).unwrap(), 0.0);
    }

    #[test]
    fn fisher_scales_linearly() {
        let f = maxwellian(512);
        let a = weighted_fisher(&f).unwrap();
        let b = weighted_fisher(&f.scale(4.0).unwrap()).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn fisher_of_maxwellian_matches_quadrature() {
        // |grad sqrt(u)|^2 = (r^2/4) u, so compare against the direct
        // quadrature of (r^2/4) u / (1+r).
        let f = maxwellian(2048);
        let fisher = weighted_fisher(&f).unwrap();
        let oracle = integrate_with(&f, |r| 0.25 * r * r / (1.0 + r));
        assert!(
            (fisher - oracle).abs() < 0.01 * oracle,
            "{fisher} vs {oracle}"
        );
    }

    #[test]
    fn quadrature_convergence_on_maxwellian_mass() {
        // Halving h must reduce the mass error by at least 3.5x. The
        // midpoint rule is superalgebraic on the Gaussian, so measure at a
        // coarse resolution where the error is still visible.
        let err = |n: usize| {
            let f = maxwellian(n);
            (integrate(&f, Weight::Unit).unwrap() - 1.0).abs()
        };
        let e1 = err(8).max(1e-15);
        let e2 = err(16).max(1e-15);
        assert!(e1 / e2 >= 3.5, "ratio {} (e1={e1}, e2={e2})", e1 / e2);
    }

    #[test]
    fn box_moments_match_radial() {
        let g = CartesianGrid3::new(6.0, 32).unwrap();
        let f = Profile::maxwellian_unit().sample_box(&g).unwrap();
        let m = integrate(&f, Weight::Unit).unwrap();
        let e = second_moment(&f).unwrap();
        assert!((m - 1.0).abs() < 1e-4, "box mass {m}");
        assert!((e - 1.5).abs() < 1e-3, "box E {e}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn integrate_is_linear_and_monotone(
            seed in 0u64..1000,
            c in 0.1f64..5.0,
        ) {
            let g = RadialGrid::new(4.0, 32).unwrap();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut rand = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let a = Field::from_fn(g.clone(), |_| rand()).unwrap();
            let b = Field::from_fn(g.clone(), |_| rand()).unwrap();
            let ia = integrate(&a, Weight::Unit).unwrap();
            let ib = integrate(&b, Weight::Unit).unwrap();
            let isum = integrate(&a.add(&b).unwrap(), Weight::Unit).unwrap();
            let iscaled = integrate(&a.scale(c).unwrap(), Weight::Unit).unwrap();
            prop_assert!((isum - (ia + ib)).abs() <= 1e-10 * (ia.abs() + ib.abs()));
            prop_assert!((iscaled - c * ia).abs() <= 1e-10 * (c * ia).abs());
            // monotone: a <= a + b pointwise for b >= 0
            prop_assert!(isum >= ia - 1e-12);
        }

        #[test]
        fn lp_norm_triangle_inequality(seed in 0u64..1000) {
            let g = RadialGrid::new(4.0, 32).unwrap();
            let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            let mut rand = || {
                state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let a = Field::from_fn(g.clone(), |_| rand() - 0.5).unwrap();
            let b = Field::from_fn(g.clone(), |_| rand() - 0.5).unwrap();
            for p in [1.0, 2.0, 3.0] {
                let na = lp_norm(&a, p, Weight::Unit).unwrap();
                let nb = lp_norm(&b, p, Weight::Unit).unwrap();
                let nab = lp_norm(&a.add(&b).unwrap(), p, Weight::Unit).unwrap();
                prop_assert!(nab <= na + nb + 1e-12 * (na + nb));
            }
        }
    }
}
