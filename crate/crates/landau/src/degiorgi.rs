//! Level-set iteration machinery: truncations u_k = (u-k)_+, the geometric
//! time/radius/level ladders with their smooth cutoffs, the level energies
//! U_n, the superlinear recurrence check and the level-p energy identity.
//!
//! The iteration is verified at its endpoints: the recurrence between
//! consecutive U_n and the induction seed. The Holder/Chebyshev steps that
//! connect them are proof scaffolding and are not checked individually.

use crate::dynamics::{Domain, SimState, Trajectory};
use crate::error::{Error, Result};
use crate::fields::{Field, Grid};
use crate::parallel;

use serde::Serialize;

/// Pointwise positive part (u - k)_+ . Truncation support is standardized as
/// the strict superlevel set {u > k}.
pub fn truncation<G: Grid>(u: &Field<G>, k: f64) -> Result<Field<G>> {
    if !(k >= 0.0) {
        return Err(Error::Parameter(format!("truncation level must be >= 0, got {k}")));
    }
    u.map(|v| (v - k).max(0.0))
}

/// C-infinity ramp: 1 for t <= 0, 0 for t >= 1.
fn smooth_ramp(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let psi = |x: f64| (-1.0 / x).exp();
    psi(1.0 - t) / (psi(t) + psi(1.0 - t))
}

/// Geometric ladders
///   T_n = (1/4)(2 - 2^{-n}) T,  R_n = (1/2)(1 + 2^{-n}) R,  k_n = M(1 - 2^{-n}),
/// with smooth cutoffs eta_n equal to 1 on B_{R_{n+1}} and supported in
/// B_{R_n}.
#[derive(Debug, Clone, Serialize)]
pub struct DeGiorgiLadder {
    pub t_total: f64,
    pub radius: f64,
    pub level: f64,
    pub n_max: u32,
}

impl DeGiorgiLadder {
    pub fn new(t_total: f64, radius: f64, level: f64, n_max: u32) -> Result<Self> {
        if !(t_total > 0.0 && radius > 0.0 && level > 0.0) {
            return Err(Error::Parameter(
                "ladder needs positive horizon, radius and level".into(),
            ));
        }
        Ok(Self { t_total, radius, level, n_max })
    }

    pub fn t_n(&self, n: u32) -> f64 {
        0.25 * (2.0 - 0.5f64.powi(n as i32)) * self.t_total
    }

    pub fn r_n(&self, n: u32) -> f64 {
        0.5 * (1.0 + 0.5f64.powi(n as i32)) * self.radius
    }

    pub fn k_n(&self, n: u32) -> f64 {
        self.level * (1.0 - 0.5f64.powi(n as i32))
    }

    /// eta_n sampled at |x|: 1 inside B_{R_{n+1}}, smooth ramp across the
    /// annulus B_{R_n} \ B_{R_{n+1}}, 0 outside.
    pub fn cutoff_profile(&self, n: u32, r: f64) -> f64 {
        let outer = self.r_n(n);
        let inner = self.r_n(n + 1);
        smooth_ramp((r - inner) / (outer - inner))
    }

    pub fn cutoff<G: Grid>(&self, n: u32, grid: &G) -> Result<Field<G>> {
        Field::from_fn(grid.clone(), |i| self.cutoff_profile(n, grid.node_radius(i)))
    }
}

/// Tunable constants of the U_n definition; both default to 1 and enter via
/// the shared calibration protocol when sharper values are wanted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelEnergyParams {
    pub c_eps_p: f64,
    pub c_p: f64,
}

impl Default for LevelEnergyParams {
    fn default() -> Self {
        Self { c_eps_p: 1.0, c_p: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelEnergy {
    pub n: u32,
    pub value: f64,
    /// (time term, gradient/cutoff term, k^2 term).
    pub terms: [f64; 3],
}

/// U_n over the slab [T_n, T]:
///   (2^{n+2}/T + C(eps,p)) iint eta_n^2 u_n^p
/// + (C(p)+1) 2^{2n+2}      iint_{B_n} a eta_n^2 u_n^p
/// + 2 p k_n^2              iint eta_n^2 u_n^{p-1},
/// quadrature in space, trapezoid over the emitted slices in time.
pub fn level_energy<G: Domain>(
    traj: &Trajectory<G>,
    ladder: &DeGiorgiLadder,
    n: u32,
    p: f64,
    params: &LevelEnergyParams,
) -> Result<LevelEnergy> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("level energy needs p > 1, got {p}")));
    }
    let k_n = ladder.k_n(n);
    let t_n = ladder.t_n(n);
    let slices: Vec<&SimState<G>> =
        traj.slices.iter().filter(|s| s.t >= t_n && s.t <= ladder.t_total).collect();
    // A dead truncation makes every integrand vanish identically; no
    // quadrature (and no cutoff resolution) is needed to report 0.
    let truncation_alive = slices.iter().any(|s| s.u.max() > k_n);
    if !truncation_alive {
        return Ok(LevelEnergy { n, value: 0.0, terms: [0.0; 3] });
    }
    if slices.len() < 2 {
        return Err(Error::TooFewSlices { got: slices.len(), need: 2 });
    }
    let grid = slices[0].u.grid();

    // The cutoff matters now: demand 4 cells across the ramp annulus.
    {
        let width = ladder.r_n(n) - ladder.r_n(n + 1);
        let cells = (width / grid.spacing()).floor() as usize;
        if cells < 4 {
            return Err(Error::UnderResolved { cells, required: 4 });
        }
    }

    let eta = ladder.cutoff(n, grid)?;
    let ev = eta.values();
    let mut t_term = Vec::with_capacity(slices.len());
    let mut grad_term = Vec::with_capacity(slices.len());
    let mut k_term = Vec::with_capacity(slices.len());
    let mut times = Vec::with_capacity(slices.len());
    for s in &slices {
        let uk = truncation(&s.u, k_n)?;
        let ukv = uk.values();
        let av = s.a.a.values();
        let m = grid.len();
        t_term.push(parallel::sum(m, |i| {
            ev[i] * ev[i] * ukv[i].powf(p) * grid.cell_volume(i)
        }));
        grad_term.push(parallel::sum(m, |i| {
            av[i] * ev[i] * ev[i] * ukv[i].powf(p) * grid.cell_volume(i)
        }));
        k_term.push(parallel::sum(m, |i| {
            ev[i] * ev[i] * ukv[i].powf(p - 1.0) * grid.cell_volume(i)
        }));
        times.push(s.t);
    }
    let trap = |v: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 1..times.len() {
            acc += 0.5 * (v[i] + v[i - 1]) * (times[i] - times[i - 1]);
        }
        acc
    };
    let two_pow = 2.0f64.powi(n as i32 + 2);
    let term1 = (two_pow / ladder.t_total + params.c_eps_p) * trap(&t_term);
    let term2 = (params.c_p + 1.0) * 2.0f64.powi(2 * n as i32 + 2) * trap(&grad_term);
    let term3 = 2.0 * p * k_n * k_n * trap(&k_term);
    Ok(LevelEnergy { n, value: term1 + term2 + term3, terms: [term1, term2, term3] })
}

/// Max empirical constant in U_n <= 4^{n-1} C U_{n-1}^{q/2} over the
/// computed sequence (0 when every predecessor vanishes).
pub fn measure_recurrence_constant(us: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    let mut c: f64 = 0.0;
    for n in 1..us.len() {
        if us[n - 1] > 0.0 {
            c = c.max(us[n] / (4.0f64.powi(n as i32 - 1) * us[n - 1].powf(q / 2.0)));
        }
    }
    Ok(c)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 2.0 && q < 10.0 / 3.0) {
        return Err(Error::Parameter(format!(
            "recurrence needs q in (2, 10/3) so q/2 > 1, got {q}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub q: f64,
    pub c: f64,
    /// Per-n verdicts of U_n <= 4^{n-1} C U_{n-1}^{q/2}.
    pub steps_hold: Vec<bool>,
    /// Smallness threshold of the induction seed U_0^{q/2-1}.
    pub seed_threshold: f64,
    pub seed_ok: bool,
    /// Decay verdict: the induction closes iff the seed condition holds.
    pub decay: bool,
}

/// Verify the recurrence and the induction seed
/// U_0^{q/2-1} <= 1 / (C 8^{1/(q/2-1)}).
pub fn recurrence_check(us: &[f64], q: f64, c: f64) -> Result<RecurrenceReport> {
    check_q(q)?;
    if us.is_empty() {
        return Err(Error::Parameter("empty U sequence".into()));
    }
    let half_q = q / 2.0;
    let steps_hold: Vec<bool> = (1..us.len())
        .map(|n| {
            let bound = 4.0f64.powi(n as i32 - 1) * c * us[n - 1].powf(half_q);
            us[n] <= bound + 1e-12 * bound.abs()
        })
        .collect();
    let seed_threshold = if c > 0.0 {
        1.0 / (c * 8.0f64.powf(1.0 / (half_q - 1.0)))
    } else {
        f64::INFINITY
    };
    let seed_ok = us[0].powf(half_q - 1.0) <= seed_threshold;
    Ok(RecurrenceReport {
        q,
        c,
        steps_hold,
        seed_threshold,
        seed_ok,
        decay: seed_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MThreshold {
    pub n: u32,
    pub q: f64,
    pub alpha: f64,
    /// c(n) (1/T + 1)^{alpha(n)} with the calibration constant c(n).
    pub threshold: f64,
    /// Exponent s of the resulting sup bound sup_{(T/4,T) x B_{R/2}} u
    /// <= c0 (1/T + 1)^s; any s > alpha(n) is admissible.
    pub sup_exponent: f64,
}

/// Level threshold M > c(n) (1/T+1)^{alpha(n)} with
/// alpha(n) = ((7n+5)/(3n+2) + n)(q/2-1) / ((5/3+n)(q/2-1) - 1),
/// evaluated in a single-division rational form so dyadic cases (e.g.
/// alpha(2) = 21/8 at q = 3) come out exact.
pub fn m_threshold(t_total: f64, n: u32, q: f64, c_n: f64) -> Result<MThreshold> {
    if !(q > 2.0) {
        return Err(Error::Parameter(format!("m_threshold needs q > 2, got {q}")));
    }
    if !(t_total > 0.0) {
        return Err(Error::Parameter("m_threshold needs T > 0".into()));
    }
    let nf = n as f64;
    // denominator of alpha: (5/3+n)(q/2-1) - 1 = ((3n+5)(q-2) - 6)/6 > 0
    let den_core = (3.0 * nf + 5.0) * (q - 2.0) - 6.0;
    if den_core <= 0.0 {
        // minimal admissible n: (3n+5)(q-2) > 6
        let n_min = ((6.0 / (q - 2.0) - 5.0) / 3.0).max(0.0).floor() as u32 + 1;
        return Err(Error::Parameter(format!(
            "alpha(n) denominator nonpositive at n = {n}, q = {q}; minimal admissible n is {n_min}"
        )));
    }
    let alpha = 3.0 * (3.0 * nf * nf + 9.0 * nf + 5.0) * (q - 2.0)
        / ((3.0 * nf + 2.0) * den_core);
    let threshold = c_n * (1.0 / t_total + 1.0).powf(alpha);
    Ok(MThreshold { n, q, alpha, threshold, sup_exponent: alpha })
}

/// Residual of the level-p energy inequality over one emitted interval:
///
///   d/dt int eta^2 u_k^p + ((p-1)/p) int a |grad(eta u_k^{p/2})|^2
///   <= (p-1) int eta^2 u u_k^p + p k int eta^2 u u_k^{p-1}
///    + C(p) int u_k^p a |grad eta|^2 + 2 int u_k^p a eta |lap eta|,
///
/// with the concrete C(p) = 2(p-2)^2/(p(p-1)) + 4/p + 4p/(p-1) + 6 from the
/// Cauchy-Schwarz/Young splitting (override via `c_p`). Returns LHS - RHS;
/// the contract is <= 0 up to discretization tolerance.
pub fn energy_identity_residual<G: Domain>(
    prev: &SimState<G>,
    next: &SimState<G>,
    eta: &Field<G>,
    k: f64,
    p: f64,
    c_p: Option<f64>,
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("energy identity needs p > 1, got {p}")));
    }
    if !(k >= 0.0) {
        return Err(Error::Parameter("truncation level must be >= 0".into()));
    }
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(Error::Parameter("slices must be strictly ordered in time".into()));
    }
    let grid = prev.u.grid();
    if eta.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let c_p = c_p.unwrap_or_else(|| {
        2.0 * (p - 2.0) * (p - 2.0) / (p * (p - 1.0)) + 4.0 / p + 4.0 * p / (p - 1.0) + 6.0
    });
    let ev = eta.values();
    let eta_gsq = grid.gradient_sq(ev);
    let eta_lap = grid.laplacian(ev);
    let m = grid.len();

    let mass_term = |s: &SimState<G>| -> Result<f64> {
        let uk = truncation(&s.u, k)?;
        let ukv = uk.values();
        Ok(parallel::sum(m, |i| ev[i] * ev[i] * ukv[i].powf(p) * grid.cell_volume(i)))
    };
    let spatial_terms = |s: &SimState<G>| -> Result<(f64, f64)> {
        let uk = truncation(&s.u, k)?;
        let ukv = uk.values();
        let uv = s.u.values();
        let av = s.a.a.values();
        let w: Vec<f64> = (0..m).map(|i| ev[i] * ukv[i].powf(p / 2.0)).collect();
        let wg = grid.gradient_sq(&w);
        let dirichlet = parallel::sum(m, |i| av[i] * wg[i] * grid.cell_volume(i));
        let rhs = parallel::sum(m, |i| {
            let ukp = ukv[i].powf(p);
            let vol = grid.cell_volume(i);
            ((p - 1.0) * ev[i] * ev[i] * uv[i] * ukp
                + p * k * ev[i] * ev[i] * uv[i] * ukv[i].powf(p - 1.0)
                + c_p * ukp * av[i] * eta_gsq[i]
                + 2.0 * ukp * av[i] * ev[i] * eta_lap[i].abs())
                * vol
        });
        Ok((dirichlet, rhs))
    };

    let (d1, r1) = spatial_terms(prev)?;
    let (d2, r2) = spatial_terms(next)?;
    let lhs = (mass_term(next)? - mass_term(prev)?) / dt
        + (p - 1.0) / p * 0.5 * (d1 + d2);
    let rhs = 0.5 * (r1 + r2);
    Ok(lhs - rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeGiorgiReport {
    pub ladder: DeGiorgiLadder,
    pub p: f64,
    pub energies: Vec<LevelEnergy>,
    pub recurrence: RecurrenceReport,
}

/// Full pipeline: level energies for n = 0..n_max, measured recurrence
/// constant, decay verdict.
pub fn degiorgi_report<G: Domain>(
    traj: &Trajectory<G>,
    ladder: &DeGiorgiLadder,
    p: f64,
    q: f64,
    params: &LevelEnergyParams,
) -> Result<DeGiorgiReport> {
    let mut energies = Vec::new();
    for n in 0..=ladder.n_max {
        energies.push(level_energy(traj, ladder, n, p, params)?);
    }
    let us: Vec<f64> = energies.iter().map(|e| e.value).collect();
    let c = measure_recurrence_constant(&us, q)?;
    let recurrence = recurrence_check(&us, q, c)?;
    Ok(DeGiorgiReport { ladder: ladder.clone(), p, energies, recurrence })
}
