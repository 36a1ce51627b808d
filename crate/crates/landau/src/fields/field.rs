//! Scalar fields on a grid, evaluation weights and initial profiles.

use crate::error::{Error, Result};
use crate::fields::grid::{CartesianGrid3, Grid, RadialGrid};

use std::f64::consts::PI;

/// Nonnegative-or-signed scalar samples bound to their grid. Fields are
/// immutable once constructed; every transformation builds a new field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<G: Grid> {
    grid: G,
    values: Vec<f64>,
}

impl<G: Grid> Field<G> {
    pub fn new(grid: G, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index: i });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: G) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: G, f: impl FnMut(usize) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// Fails unless every sample is >= 0.
    pub fn require_nonnegative(&self) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeValue { index: i, value: v });
            }
        }
        Ok(())
    }
}

/// Evaluation weight for integrals and norms. gamma(x) = (1+|x|)^{-1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Unit,
    Gamma,
    GammaCubed,
}

impl Weight {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Gamma => 1.0 / (1.0 + r),
            Weight::GammaCubed => {
                let g = 1.0 / (1.0 + r);
                g * g * g
            }
        }
    }
}

/// Initial data profiles shared by the simulator and the test harness.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// mass * (2 pi sigma^2)^{-3/2} exp(-|x|^2 / (2 sigma^2))
    Maxwellian { mass: f64, sigma: f64 },
    /// height on |x| <= radius, cell-averaged at the boundary shell so the
    /// discrete mass matches the continuum ball.
    UniformBall { radius: f64, height: f64 },
    /// Piecewise-linear radial table (r ascending); zero beyond the last r.
    Table { rs: Vec<f64>, us: Vec<f64> },
}

impl Profile {
    pub fn maxwellian_unit() -> Self {
        Profile::Maxwellian { mass: 1.0, sigma: 1.0 }
    }

    fn pointwise(&self, r: f64) -> f64 {
        match self {
            Profile::Maxwellian { mass, sigma } => {
                let s2 = sigma * sigma;
                mass * (2.0 * PI * s2).powf(-1.5) * (-r * r / (2.0 * s2)).exp()
            }
            Profile::UniformBall { radius, height } => {
                if r <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            Profile::Table { rs, us } => {
                if rs.is_empty() || r > *rs.last().unwrap() {
                    return 0.0;
                }
                if r <= rs[0] {
                    return us[0];
                }
                match rs.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
                    Ok(i) => us[i],
                    Err(i) => {
                        let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
                        us[i - 1] + t * (us[i] - us[i - 1])
                    }
                }
            }
        }
    }

    pub fn sample_radial(&self, grid: &RadialGrid) -> Result<Field<RadialGrid>> {
        let h = grid.spacing();
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let r = grid.node(i);
                match self {
                    Profile::UniformBall { radius, height } => {
                        // Exact volume fraction of the shell cell inside the ball.
                        let lo = r - 0.5 * h;
                        let hi = r + 0.5 * h;
                        if hi <= *radius {
                            *height
                        } else if lo >= *radius {
                            0.0
                        } else {
                            let frac = (radius.powi(3) - lo.powi(3)) / (hi.powi(3) - lo.powi(3));
                            *height * frac
                        }
                    }
                    _ => self.pointwise(r),
                }
            })
            .collect();
        Field::new(grid.clone(), values)
    }

    pub fn sample_box(&self, grid: &CartesianGrid3) -> Result<Field<CartesianGrid3>> {
        let h = grid.spacing();
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let [x, y, z] = grid.position(idx);
                match self {
                    Profile::UniformBall { radius, height } => {
                        // Classify by nearest/farthest cube corner; subsample
                        // only the straddling cells.
                        let half = 0.5 * h;
                        let near = ((x.abs() - half).max(0.0).powi(2)
                            + (y.abs() - half).max(0.0).powi(2)
                            + (z.abs() - half).max(0.0).powi(2))
                        .sqrt();
                        let far = ((x.abs() + half).powi(2)
                            + (y.abs() + half).powi(2)
                            + (z.abs() + half).powi(2))
                        .sqrt();
                        if far <= *radius {
                            *height
                        } else if near >= *radius {
                            0.0
                        } else {
                            const M: usize = 8;
                            let mut inside = 0usize;
                            for a in 0..M {
                                for b in 0..M {
                                    for c in 0..M {
                                        let sx = x + ((a as f64 + 0.5) / M as f64 - 0.5) * h;
                                        let sy = y + ((b as f64 + 0.5) / M as f64 - 0.5) * h;
                                        let sz = z + ((c as f64 + 0.5) / M as f64 - 0.5) * h;
                                        if sx * sx + sy * sy + sz * sz <= radius * radius {
                                            inside += 1;
                                        }
                                    }
                                }
                            }
                            *height * inside as f64 / (M * M * M) as f64
                        }
                    }
                    _ => self.pointwise((x * x + y * y + z * z).sqrt()),
                }
            })
            .collect();
        Field::new(grid.clone(), values)
    }
}
