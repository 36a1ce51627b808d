//! Explicit time advance for both PDE forms on radial and box grids.
//!
//! Divergence form:    u_t = div(a[u] grad u - u grad a[u])
//! Nondivergence form: u_t = a[u] laplace(u) + alpha u^2
//!
//! Both use explicit Euler with a CFL-limited step recomputed from the
//! current max of a[u]; the divergence form is a conservative face-flux
//! update whose interior mass change telescopes to the (zero-flux) boundary.

use crate::error::{Error, Result};
use crate::fields::{CartesianGrid3, Field, Grid, RadialGrid};
use crate::potential::{solve_poisson_radial, PoissonSolver3, PotentialSolution};

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeForm {
    Divergence,
    Nondivergence,
}

/// The alpha window from the bounded-solution theory of the nondivergence
/// variant; values outside it are allowed but flagged.
pub const ALPHA_WINDOW_SUP: f64 = 74.0 / 75.0;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub form: PdeForm,
    /// Reaction coefficient of the nondivergence form.
    pub alpha: f64,
    pub t_end: f64,
    /// Fraction of the diffusive stability limit used for the step, in (0,1].
    pub cfl_safety: f64,
    /// Steps between emitted slices.
    pub output_stride: usize,
    /// Halt when max u exceeds this multiple of the initial max.
    pub blowup_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            form: PdeForm::Divergence,
            alpha: 1.0,
            t_end: 0.1,
            cfl_safety: 0.5,
            output_stride: 10,
            blowup_factor: 1e6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Parameter(format!(
                "cfl_safety must lie in (0,1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Parameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(Error::Parameter("output_stride must be >= 1".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Parameter("blowup_factor must exceed 1".into()));
        }
        if self.form == PdeForm::Nondivergence && !(self.alpha > 0.0) {
            return Err(Error::Parameter(format!(
                "nondivergence form needs alpha > 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Advisory notes (e.g. alpha outside the bounded-solution window).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.form == PdeForm::Nondivergence && self.alpha >= ALPHA_WINDOW_SUP {
            w.push(format!(
                "alpha = {} lies outside the open window (0, 74/75) of the bounded-solution theory",
                self.alpha
            ));
        }
        w
    }
}

/// Grid kinds that can drive a simulation: they know how to produce (and
/// cache) a potential solver for themselves.
pub trait Domain: Grid {
    type Solver;
    fn make_solver(&self) -> Result<Self::Solver>;
    fn solve_potential(solver: &Self::Solver, u: &Field<Self>) -> Result<PotentialSolution<Self>>;
}

impl Domain for RadialGrid {
    type Solver = ();
    fn make_solver(&self) -> Result<()> {
        Ok(())
    }
    fn solve_potential(_: &(), u: &Field<RadialGrid>) -> Result<PotentialSolution<RadialGrid>> {
        solve_poisson_radial(u)
    }
}

impl Domain for CartesianGrid3 {
    type Solver = PoissonSolver3;
    fn make_solver(&self) -> Result<PoissonSolver3> {
        PoissonSolver3::new(self)
    }
    fn solve_potential(
        solver: &PoissonSolver3,
        u: &Field<CartesianGrid3>,
    ) -> Result<PotentialSolution<CartesianGrid3>> {
        solver.solve(u)
    }
}

/// One time slice: u together with its consistent potential.
#[derive(Debug, Clone)]
pub struct SimState<G: Domain> {
    pub t: f64,
    pub step: u64,
    pub u: Field<G>,
    pub a: PotentialSolution<G>,
    /// Cumulative mass removed by negativity clipping up to this slice.
    pub clipped_mass: f64,
}

impl<G: Domain> SimState<G> {
    pub fn initial(u: Field<G>, solver: &G::Solver) -> Result<Self> {
        u.require_nonnegative()?;
        let a = G::solve_potential(solver, &u)?;
        Ok(Self { t: 0.0, step: 0, u, a, clipped_mass: 0.0 })
    }

    pub fn restored(t: f64, step: u64, u: Field<G>, clipped_mass: f64, solver: &G::Solver) -> Result<Self> {
        u.require_nonnegative()?;
        let a = G::solve_potential(solver, &u)?;
        Ok(Self { t, step, u, a, clipped_mass })
    }
}

/// Diffusive stability limit h^2 / (2 d max a) with d = 3.
pub fn stable_dt<G: Domain>(state: &SimState<G>) -> f64 {
    let max_a = state.a.max_a();
    if max_a <= 0.0 {
        f64::INFINITY
    } else {
        let h = state.u.grid().spacing();
        h * h / (6.0 * max_a)
    }
}

fn check_dt<G: Domain>(state: &SimState<G>, dt: f64) -> Result<()> {
    let admissible = stable_dt(state);
    if dt > admissible {
        return Err(Error::UnstableTimeStep { dt, admissible });
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

fn advance<G: Domain>(
    state: &SimState<G>,
    dt: f64,
    rhs: Vec<f64>,
    solver: &G::Solver,
) -> Result<SimState<G>> {
    let grid = state.u.grid();
    let u = state.u.values();
    let mut clipped = 0.0;
    let mut next = vec![0.0; u.len()];
    for i in 0..u.len() {
        let v = u[i] + dt * rhs[i];
        if v < 0.0 {
            clipped += -v * grid.cell_volume(i);
            next[i] = 0.0;
        } else {
            next[i] = v;
        }
    }
    let u_next = Field::new(grid.clone(), next)?;
    let a_next = G::solve_potential(solver, &u_next)?;
    Ok(SimState {
        t: state.t + dt,
        step: state.step + 1,
        u: u_next,
        a: a_next,
        clipped_mass: state.clipped_mass + clipped,
    })
}

/// Conservative face-flux update of the divergence form.
pub fn step_divergence<G: Domain>(
    state: &SimState<G>,
    dt: f64,
    solver: &G::Solver,
) -> Result<SimState<G>> {
    check_dt(state, dt)?;
    let rhs = state.u.grid().div_flux(state.a.a.values(), state.u.values());
    advance(state, dt, rhs, solver)
}

/// Explicit update of the nondivergence form u += dt (a laplace(u) + alpha u^2).
pub fn step_nondivergence<G: Domain>(
    state: &SimState<G>,
    dt: f64,
    alpha: f64,
    solver: &G::Solver,
) -> Result<SimState<G>> {
    check_dt(state, dt)?;
    let grid = state.u.grid();
    let lap = grid.laplacian(state.u.values());
    let a = state.a.a.values();
    let u = state.u.values();
    let rhs: Vec<f64> = (0..u.len()).map(|i| a[i] * lap[i] + alpha * u[i] * u[i]).collect();
    advance(state, dt, rhs, solver)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BlowupReport {
    pub t: f64,
    pub step: u64,
    pub max_u: f64,
    pub ceiling: f64,
}

/// Emitted slices of one run. Slices land at step numbers divisible by the
/// output stride, plus the final step.
#[derive(Debug)]
pub struct Trajectory<G: Domain> {
    pub config: SimConfig,
    pub slices: Vec<SimState<G>>,
    pub blowup: Option<BlowupReport>,
    pub warnings: Vec<String>,
}

impl<G: Domain> Trajectory<G> {
    pub fn final_state(&self) -> &SimState<G> {
        self.slices.last().expect("trajectory holds at least the initial state")
    }

    pub fn initial_mass(&self) -> f64 {
        crate::fields::mass(&self.slices[0].u).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.final_state().t
    }
}

/// Advance to t_end with the automatic CFL step, re-solving a[u] every step.
/// Deterministic for a fixed config.
pub fn run<G: Domain>(grid: &G, u0: Field<G>, config: &SimConfig) -> Result<Trajectory<G>> {
    config.validate()?;
    let solver = grid.make_solver()?;
    let state = SimState::initial(u0, &solver)?;
    let mut traj = Trajectory {
        config: config.clone(),
        slices: Vec::new(),
        blowup: None,
        warnings: config.warnings(),
    };
    run_from(state, &solver, config, &mut traj)?;
    Ok(traj)
}

/// Continue a run from an existing state (used by checkpoint restore).
/// Emission points depend only on the step index, so a restarted run emits
/// the same slices as the uninterrupted one.
pub fn run_from<G: Domain>(
    mut state: SimState<G>,
    solver: &G::Solver,
    config: &SimConfig,
    traj: &mut Trajectory<G>,
) -> Result<()> {
    let ceiling = config.blowup_factor * state.u.max().max(f64::MIN_POSITIVE);
    traj.slices.push(state.clone());
    while state.t < config.t_end {
        let dt_limit = config.cfl_safety * stable_dt(&state);
        let dt = dt_limit.min(config.t_end - state.t);
        if !(dt > 0.0) || !dt.is_finite() {
            break; // zero field: nothing evolves
        }
        state = match config.form {
            PdeForm::Divergence => step_divergence(&state, dt, solver)?,
            PdeForm::Nondivergence => step_nondivergence(&state, dt, config.alpha, solver)?,
        };
        let max_u = state.u.max();
        if max_u > ceiling {
            traj.blowup = Some(BlowupReport { t: state.t, step: state.step, max_u, ceiling });
            traj.slices.push(state);
            return Ok(());
        }
        let at_end = state.t >= config.t_end;
        if state.step % config.output_stride as u64 == 0 || at_end {
            traj.slices.push(state.clone());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{integrate, mass, Profile, Weight};

    fn radial_maxwellian(n: usize, r_max: f64) -> (RadialGrid, Field<RadialGrid>) {
        let g = RadialGrid::new(r_max, n).unwrap();
        let u = Profile::maxwellian_unit().sample_radial(&g).unwrap();
        (g, u)
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = RadialGrid::new(4.0, 64).unwrap();
        let solver = ();
        let state = SimState::initial(Field::zeros(g), &solver).unwrap();
        let next = step_divergence(&state, 1e-3, &solver).unwrap();
        assert!(next.u.values().iter().all(|&v| v == 0.0));
        let next = step_nondivergence(&state, 1e-3, 1.0, &solver).unwrap();
        assert!(next.u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_unstable_dt() {
        let (_, u) = radial_maxwellian(256, 8.0);
        let state = SimState::initial(u, &()).unwrap();
        let limit = stable_dt(&state);
        let err = step_divergence(&state, 2.0 * limit, &()).unwrap_err();
        match err {
            Error::UnstableTimeStep { admissible, .. } => {
                assert!((admissible - limit).abs() < 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn divergence_form_conserves_mass() {
        let g = RadialGrid::new(8.0, 512).unwrap();
        let u = Profile::UniformBall { radius: 1.0, height: 1.0 }
            .sample_radial(&g)
            .unwrap();
        let solver = ();
        let mut state = SimState::initial(u, &solver).unwrap();
        let m0 = mass(&state.u).unwrap();
        for _ in 0..100 {
            let dt = 0.5 * stable_dt(&state);
            state = step_divergence(&state, dt, &solver).unwrap();
        }
        let m1 = mass(&state.u).unwrap();
        assert!(
            ((m1 + state.clipped_mass) - m0).abs() / m0 <= 1e-10,
            "mass drift {} (clipped {})",
            (m1 - m0) / m0,
            state.clipped_mass
        );
    }

    #[test]
    fn euler_step_is_first_order_in_time() {
        // Global error against a dt/8 reference halves when dt halves.
        let (_, u) = radial_maxwellian(128, 8.0);
        let solver = ();
        let initial = SimState::initial(u, &solver).unwrap();
        let dt0 = 0.5 * stable_dt(&initial);
        let horizon = 8.0 * dt0;
        let advance_to = |dt: f64| {
            let mut s = initial.clone();
            while s.t < horizon - 1e-15 {
                let step = dt.min(horizon - s.t);
                s = step_divergence(&s, step, &solver).unwrap();
            }
            s
        };
        let reference = advance_to(dt0 / 8.0);
        let err = |s: &SimState<RadialGrid>| {
            s.u.values()
                .iter()
                .zip(reference.u.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(&advance_to(dt0));
        let e2 = err(&advance_to(dt0 / 2.0));
        let ratio = e1 / e2;
        assert!(ratio > 1.6 && ratio < 2.8, "ratio {ratio} (e1={e1}, e2={e2})");
    }

    #[test]
    fn constant_state_reacts_quadratically() {
        // With u constant the Laplacian term vanishes and the nondivergence
        // update is exactly u + dt alpha u^2.
        let g = RadialGrid::new(4.0, 64).unwrap();
        let c = 0.3;
        let u = Field::from_fn(g.clone(), |_| c).unwrap();
        let state = SimState::initial(u, &()).unwrap();
        let alpha = 0.7;
        let dt = 1e-4;
        let next = step_nondivergence(&state, dt, alpha, &()).unwrap();
        for &v in next.u.values() {
            assert_eq!(v, c + dt * alpha * c * c);
        }
    }

    #[test]
    fn forms_agree_when_alpha_is_one() {
        // div(a grad u - u grad a) = a lap u + u^2 via -lap a = u; the two
        // discrete forms converge together as the mesh refines.
        let diff_at = |n: usize| {
            let (_, u) = radial_maxwellian(n, 8.0);
            let solver = ();
            let s0 = SimState::initial(u, &solver).unwrap();
            let dt = 0.25 * stable_dt(&s0);
            let mut sd = s0.clone();
            let mut sn = s0;
            for _ in 0..10 {
                sd = step_divergence(&sd, dt, &solver).unwrap();
                sn = step_nondivergence(&sn, dt, 1.0, &solver).unwrap();
            }
            sd.u.values()
                .iter()
                .zip(sn.u.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let d1 = diff_at(128);
        let d2 = diff_at(256);
        assert!(d2 < d1 / 2.0, "d1={d1}, d2={d2}");
    }

    #[test]
    fn run_with_zero_horizon_emits_initial_slice_only() {
        let (g, u) = radial_maxwellian(64, 8.0);
        let config = SimConfig { t_end: 0.0, ..Default::default() };
        let traj = run(&g, u, &config).unwrap();
        assert_eq!(traj.slices.len(), 1);
        assert_eq!(traj.slices[0].t, 0.0);
    }

    #[test]
    fn blowup_halts_and_is_monotone_in_alpha() {
        let g = RadialGrid::new(6.0, 96).unwrap();
        let u = Profile::Maxwellian { mass: 30.0, sigma: 0.8 }
            .sample_radial(&g)
            .unwrap();
        let step_of = |alpha: f64| {
            let config = SimConfig {
                form: PdeForm::Nondivergence,
                alpha,
                t_end: 10.0,
                cfl_safety: 0.9,
                output_stride: 50,
                blowup_factor: 50.0,
            };
            let traj = run(&g, u.clone(), &config).unwrap();
            let report = traj.blowup.expect("expected blow-up");
            report.step
        };
        let s_small = step_of(4.0);
        let s_large = step_of(8.0);
        assert!(
            s_large <= s_small,
            "blow-up with larger alpha came later: {s_large} vs {s_small}"
        );
    }

    #[test]
    fn box_run_conserves_mass_and_first_moment() {
        let g = CartesianGrid3::new(4.0, 16).unwrap();
        let u = Profile::Maxwellian { mass: 1.0, sigma: 0.7 }.sample_box(&g).unwrap();
        let config = SimConfig { t_end: 0.005, cfl_safety: 0.3, ..Default::default() };
        let traj = run(&g, u, &config).unwrap();
        assert!(traj.slices.len() >= 2);
        let m0 = integrate(&traj.slices[0].u, Weight::Unit).unwrap();
        let m1 = integrate(&traj.final_state().u, Weight::Unit).unwrap();
        assert!((m1 - m0).abs() / m0 < 1e-12, "mass drift {}", (m1 - m0) / m0);
        let fm = crate::fields::first_moment(&traj.final_state().u).unwrap();
        for c in fm {
            assert!(c.abs() < 1e-12, "first moment {fm:?}");
        }
    }

    #[test]
    fn nondivergence_warns_outside_alpha_window() {
        let config = SimConfig { form: PdeForm::Nondivergence, alpha: 1.0, ..Default::default() };
        assert_eq!(config.warnings().len(), 1);
        let config = SimConfig { form: PdeForm::Nondivergence, alpha: 0.9, ..Default::default() };
        assert!(config.warnings().is_empty());
    }
}
