//! Cell-centered uniform grids for radial and box discretizations of R^3.
//!
//! Both grids place nodes at cell centers so no node sits on the coordinate
//! singularity r = 0. Quadrature uses the midpoint metric: 4*pi*r_i^2*h for
//! radial shells, h^3 for box cells.

use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Common measure/stencil surface shared by the two grid kinds.
pub trait Grid: Clone + PartialEq + Send + Sync + 'static {
    fn len(&self) -> usize;
    fn spacing(&self) -> f64;
    /// |x| at node i.
    fn node_radius(&self, i: usize) -> f64;
    /// Quadrature weight of cell i.
    fn cell_volume(&self, i: usize) -> f64;
    /// Squared gradient magnitude of nodal samples, centered differences.
    fn gradient_sq(&self, v: &[f64]) -> Vec<f64>;
    /// Conservative Laplacian with zero-flux outer boundary (and a regular
    /// origin on the radial grid).
    fn laplacian(&self, v: &[f64]) -> Vec<f64>;
    /// div(a grad u - u grad a) in conservative face-flux form. Face values
    /// of a and u are arithmetic means; boundary faces carry zero flux.
    fn div_flux(&self, a: &[f64], u: &[f64]) -> Vec<f64>;
    /// First moment (integral of x f dx); identically zero on radial grids.
    fn first_moment(&self, v: &[f64]) -> [f64; 3];
    /// One-line human-readable description.
    fn describe(&self) -> String;
}

/// Uniform cell-centered grid on [0, r_max]; node i sits at (i + 1/2) h.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidGrid(format!("r_max must be positive, got {r_max}")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 radial cells, got {n}")));
        }
        Ok(Self { r_max, n, h: r_max / n as f64 })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    /// d/dr of nodal samples: centered in the interior, even reflection at
    /// the origin face, one-sided at the outer boundary.
    pub fn radial_derivative(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h = self.h;
        let mut d = vec![0.0; n];
        if n == 0 {
            return d;
        }
        // Node 0 sits at h/2; its mirror across r=0 carries the same value.
        d[0] = if n > 1 { (v[1] - v[0]) / (2.0 * h) } else { 0.0 };
        for i in 1..n - 1 {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        }
        if n > 1 {
            d[n - 1] = (v[n - 1] - v[n - 2]) / h;
        }
        d
    }
}

impl Grid for RadialGrid {
    fn len(&self) -> usize {
        self.n
    }

    fn spacing(&self) -> f64 {
        self.h
    }

    fn node_radius(&self, i: usize) -> f64 {
        self.node(i)
    }

    fn cell_volume(&self, i: usize) -> f64 {
        let r = self.node(i);
        4.0 * PI * r * r * self.h
    }

    fn gradient_sq(&self, v: &[f64]) -> Vec<f64> {
        self.radial_derivative(v).iter().map(|d| d * d).collect()
    }

    fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        // (1/r^2) d/dr (r^2 dv/dr) over faces; inner face area vanishes at
        // r=0, outer face carries zero flux.
        let n = self.n;
        let h = self.h;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let r = self.node(i);
            let flux_hi = if i + 1 < n {
                let rf = (i as f64 + 1.0) * h;
                rf * rf * (v[i + 1] - v[i]) / h
            } else {
                0.0
            };
            let flux_lo = if i > 0 {
                let rf = i as f64 * h;
                rf * rf * (v[i] - v[i - 1]) / h
            } else {
                0.0
            };
            out[i] = (flux_hi - flux_lo) / (r * r * h);
        }
        out
    }

    fn div_flux(&self, a: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h = self.h;
        // Face flux F = a_f (du/dr) - u_f (da/dr), area-weighted by r_f^2.
        let mut face = vec![0.0; n + 1]; // face i+1 between cells i and i+1
        for i in 0..n.saturating_sub(1) {
            let rf = (i as f64 + 1.0) * h;
            let af = 0.5 * (a[i] + a[i + 1]);
            let uf = 0.5 * (u[i] + u[i + 1]);
            let f = af * (u[i + 1] - u[i]) / h - uf * (a[i + 1] - a[i]) / h;
            face[i + 1] = rf * rf * f;
        }
        // face[0] (r=0) and face[n] (outer) stay zero.
        let mut out = vec![0.0; n];
        for i in 0..n {
            let r = self.node(i);
            out[i] = (face[i + 1] - face[i]) / (r * r * h);
        }
        out
    }

    fn first_moment(&self, _v: &[f64]) -> [f64; 3] {
        // Radial fields are even in every coordinate.
        [0.0, 0.0, 0.0]
    }

    fn describe(&self) -> String {
        format!("radial grid, r_max={}, n={}, h={}", self.r_max, self.n, self.h)
    }
}

/// Uniform cell-centered box [-L, L]^3 with n cells per axis (n even).
///
/// Linear index (i, j, k) -> i + n*(j + n*k); axis coordinate of index i is
/// (i + 1/2 - n/2) h, so mirrored indices carry exactly negated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid3 {
    half_width: f64,
    n: usize,
    h: f64,
}

impl CartesianGrid3 {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_per_axis must be even and >= 16, got {n}"
            )));
        }
        Ok(Self { half_width, n, h: 2.0 * half_width / n as f64 })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    /// Axis coordinate of 1-d index i.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - self.n as f64 / 2.0) * self.h
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let i = idx % n;
        let j = (idx / n) % n;
        let k = idx / (n * n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Per-axis centered-difference gradient (one-sided at boundaries).
    pub fn gradient3(&self, v: &[f64]) -> Vec<[f64; 3]> {
        let n = self.n;
        let h = self.h;
        let strides = [1usize, n, n * n];
        let mut out = vec![[0.0; 3]; v.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let idx = self.index(i, j, k);
                    let pos = [i, j, k];
                    for ax in 0..3 {
                        let s = strides[ax];
                        let p = pos[ax];
                        out[idx][ax] = if p == 0 {
                            (v[idx + s] - v[idx]) / h
                        } else if p == n - 1 {
                            (v[idx] - v[idx - s]) / h
                        } else {
                            (v[idx + s] - v[idx - s]) / (2.0 * h)
                        };
                    }
                }
            }
        }
        out
    }

    /// True when v is even under sign flip of each coordinate axis,
    /// within tol*max|v|.
    pub fn is_even(&self, v: &[f64], rel_tol: f64) -> bool {
        let n = self.n;
        let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = rel_tol * max;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let idx = self.index(i, j, k);
                    let mx = self.index(n - 1 - i, j, k);
                    let my = self.index(i, n - 1 - j, k);
                    let mz = self.index(i, j, n - 1 - k);
                    if (v[idx] - v[mx]).abs() > tol
                        || (v[idx] - v[my]).abs() > tol
                        || (v[idx] - v[mz]).abs() > tol
                    {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl Grid for CartesianGrid3 {
    fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    fn spacing(&self) -> f64 {
        self.h
    }

    fn node_radius(&self, idx: usize) -> f64 {
        let [x, y, z] = self.position(idx);
        (x * x + y * y + z * z).sqrt()
    }

    fn cell_volume(&self, _i: usize) -> f64 {
        self.h * self.h * self.h
    }

    fn gradient_sq(&self, v: &[f64]) -> Vec<f64> {
        self.gradient3(v)
            .iter()
            .map(|g| g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
            .collect()
    }

    fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h2 = self.h * self.h;
        let strides = [1usize, n, n * n];
        let mut out = vec![0.0; v.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let idx = self.index(i, j, k);
                    let pos = [i, j, k];
                    let mut acc = 0.0;
                    for ax in 0..3 {
                        let s = strides[ax];
                        let p = pos[ax];
                        // Zero-flux ghost cells at the box faces.
                        let hi = if p + 1 < n { v[idx + s] - v[idx] } else { 0.0 };
                        let lo = if p > 0 { v[idx] - v[idx - s] } else { 0.0 };
                        acc += (hi - lo) / h2;
                    }
                    out[idx] = acc;
                }
            }
        }
        out
    }

    fn div_flux(&self, a: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h = self.h;
        let strides = [1usize, n, n * n];
        let mut out = vec![0.0; u.len()];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let idx = self.index(i, j, k);
                    let pos = [i, j, k];
                    let mut acc = 0.0;
                    for ax in 0..3 {
                        let s = strides[ax];
                        let p = pos[ax];
                        let f_hi = if p + 1 < n {
                            let af = 0.5 * (a[idx] + a[idx + s]);
                            let uf = 0.5 * (u[idx] + u[idx + s]);
                            af * (u[idx + s] - u[idx]) / h - uf * (a[idx + s] - a[idx]) / h
                        } else {
                            0.0
                        };
                        let f_lo = if p > 0 {
                            let af = 0.5 * (a[idx - s] + a[idx]);
                            let uf = 0.5 * (u[idx - s] + u[idx]);
                            af * (u[idx] - u[idx - s]) / h - uf * (a[idx] - a[idx - s]) / h
                        } else {
                            0.0
                        };
                        acc += (f_hi - f_lo) / h;
                    }
                    out[idx] = acc;
                }
            }
        }
        out
    }

    fn first_moment(&self, v: &[f64]) -> [f64; 3] {
        // Mirror-paired summation: each term couples a node with its
        // reflection, so even data cancels exactly in floating point.
        let n = self.n;
        let vol = self.cell_volume(0);
        let half = n / 2;
        let mut m = [0.0; 3];
        let pair = |coord: f64, a: f64, b: f64| coord * (a - b) * vol;
        m[0] = crate::parallel::sum(n * n * half, |t| {
            let i = t % half;
            let j = (t / half) % n;
            let k = t / (half * n);
            let hi = n - 1 - i;
            pair(self.coord(hi), v[self.index(hi, j, k)], v[self.index(i, j, k)])
        });
        m[1] = crate::parallel::sum(n * n * half, |t| {
            let j = t % half;
            let i = (t / half) % n;
            let k = t / (half * n);
            let hj = n - 1 - j;
            pair(self.coord(hj), v[self.index(i, hj, k)], v[self.index(i, j, k)])
        });
        m[2] = crate::parallel::sum(n * n * half, |t| {
            let k = t % half;
            let i = (t / half) % n;
            let j = t / (half * n);
            let hk = n - 1 - k;
            pair(self.coord(hk), v[self.index(i, j, hk)], v[self.index(i, j, k)])
        });
        m
    }

    fn describe(&self) -> String {
        format!(
            "cartesian grid, half_width={}, n={}^3, h={}",
            self.half_width, self.n, self.h
        )
    }
}
