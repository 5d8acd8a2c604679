//! Neumann eigensystem of the Laplacian on the rectangle `[0, L] x [0, H]`.
//!
//! The eigenfunctions are the L2-orthonormal products
//!
//! ```text
//! e_{m,n}(x, y) = nu_m(L) cos(m pi x / L) * nu_n(H) cos(n pi y / H)
//! nu_0(a) = 1 / sqrt(a),   nu_j(a) = sqrt(2 / a)  (j >= 1)
//! ```
//!
//! with `-Delta e_{m,n} = lambda_{m,n} e_{m,n}`,
//! `lambda_{m,n} = (m^2 / L^2 + n^2 / H^2) pi^2`. Modes are flattened
//! row-major, `k = m * (N + 1) + n`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Geometry of the rectangle together with spectral truncation orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub length: f64,
    pub height: f64,
    pub modes_m: usize,
    pub modes_n: usize,
    pub quad_points: usize,
}

/// Index of a retained eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub m: usize,
    pub n: usize,
}

impl ModeIndex {
    pub const fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    /// Column label used in CSV exports.
    pub fn label(&self) -> String {
        if self.m < 10 && self.n < 10 {
            format!("mode_{}{}", self.m, self.n)
        } else {
            format!("mode_{}_{}", self.m, self.n)
        }
    }
}

impl DomainSpec {
    pub fn new(
        length: f64,
        height: f64,
        modes_m: usize,
        modes_n: usize,
        quad_points: usize,
    ) -> Result<Self> {
        let d = Self {
            length,
            height,
            modes_m,
            modes_n,
            quad_points,
        };
        d.validate()?;
        Ok(d)
    }

    /// Domain with the smallest admissible quadrature for its truncation,
    /// rounded up to at least 64 nodes per axis.
    pub fn with_modes(length: f64, height: f64, modes_m: usize, modes_n: usize) -> Result<Self> {
        let q = Self::min_quad_points(modes_m, modes_n).max(64);
        Self::new(length, height, modes_m, modes_n, q)
    }

    pub fn unit_square(modes_m: usize, modes_n: usize) -> Self {
        Self::with_modes(1.0, 1.0, modes_m, modes_n).expect("unit square is valid")
    }

    pub fn min_quad_points(modes_m: usize, modes_n: usize) -> usize {
        2 * modes_m.max(modes_n) + 2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::config(format!(
                "domain length must be positive, got {}",
                self.length
            )));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::config(format!(
                "domain height must be positive, got {}",
                self.height
            )));
        }
        let min_q = Self::min_quad_points(self.modes_m, self.modes_n);
        if self.quad_points < min_q {
            return Err(Error::config(format!(
                "quad_points = {} does not resolve modes {}x{} (need >= {min_q})",
                self.quad_points, self.modes_m, self.modes_n
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.length * self.height
    }

    pub fn mode_count(&self) -> usize {
        (self.modes_m + 1) * (self.modes_n + 1)
    }

    pub fn flat_index(&self, idx: ModeIndex) -> usize {
        debug_assert!(self.contains_mode(idx));
        idx.m * (self.modes_n + 1) + idx.n
    }

    pub fn mode_at(&self, k: usize) -> ModeIndex {
        ModeIndex::new(k / (self.modes_n + 1), k % (self.modes_n + 1))
    }

    pub fn contains_mode(&self, idx: ModeIndex) -> bool {
        idx.m <= self.modes_m && idx.n <= self.modes_n
    }

    /// Retained modes in flattened order.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.mode_count()).map(|k| self.mode_at(k))
    }

    pub fn contains_point(&self, xi1: f64, xi2: f64) -> bool {
        let tol_x = 1e-12 * self.length;
        let tol_y = 1e-12 * self.height;
        (-tol_x..=self.length + tol_x).contains(&xi1) && (-tol_y..=self.height + tol_y).contains(&xi2)
    }

    pub(crate) fn check_point(&self, xi1: f64, xi2: f64) -> Result<()> {
        if self.contains_point(xi1, xi2) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                xi1,
                xi2,
                length: self.length,
                height: self.height,
            })
        }
    }

    /// `lambda_{m,n}`, the Neumann eigenvalue of `-Delta`.
    pub fn laplace_eigenvalue(&self, idx: ModeIndex) -> f64 {
        let m = idx.m as f64;
        let n = idx.n as f64;
        (m * m / (self.length * self.length) + n * n / (self.height * self.height)) * PI * PI
    }

    /// `mu_k = lambda_k + rho`, the negated eigenvalue of `A = Delta - rho`.
    pub fn a_eigenvalue(&self, idx: ModeIndex, rho: f64) -> f64 {
        self.laplace_eigenvalue(idx) + rho
    }

    /// Evaluate `e_{m,n}` at a point of the rectangle.
    pub fn eigenfunction(&self, idx: ModeIndex, xi1: f64, xi2: f64) -> Result<f64> {
        self.check_point(xi1, xi2)?;
        Ok(axis_mode(idx.m, self.length, xi1) * axis_mode(idx.n, self.height, xi2))
    }
}

/// `lambda_{m,n}` for a mode of `domain`.
pub fn laplace_eigenvalue(domain: &DomainSpec, idx: ModeIndex) -> f64 {
    domain.laplace_eigenvalue(idx)
}

/// `mu_k = lambda_{m,n} + rho`.
pub fn a_eigenvalue(domain: &DomainSpec, idx: ModeIndex, rho: f64) -> f64 {
    domain.a_eigenvalue(idx, rho)
}

pub fn eigenfunction_eval(domain: &DomainSpec, idx: ModeIndex, xi1: f64, xi2: f64) -> Result<f64> {
    domain.eigenfunction(idx, xi1, xi2)
}

/// Normalised one-dimensional cosine `nu_j(a) cos(j pi x / a)`.
#[inline]
pub fn axis_mode(j: usize, axis_len: f64, x: f64) -> f64 {
    if j == 0 {
        1.0 / axis_len.sqrt()
    } else {
        (2.0 / axis_len).sqrt() * (j as f64 * PI * x / axis_len).cos()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss-Legendre quadrature on the rectangle with the eigenbasis
/// tabulated at its nodes.
///
/// Nodal arrays are row-major with the `xi1` index outer.
#[derive(Debug, Clone)]
pub struct Quadrature {
    domain: DomainSpec,
    pub nodes_x: Vec<f64>,
    pub nodes_y: Vec<f64>,
    pub weights_x: Vec<f64>,
    pub weights_y: Vec<f64>,
    /// `phi[m * q + i] = nu_m cos(m pi x_i / L)`
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl Quadrature {
    pub fn new(domain: &DomainSpec) -> Self {
        let q = domain.quad_points;
        let (t, w) = gauss_legendre(q);
        let map = |len: f64| -> (Vec<f64>, Vec<f64>) {
            let x = t.iter().map(|&ti| 0.5 * len * (ti + 1.0)).collect();
            let wx = w.iter().map(|&wi| 0.5 * len * wi).collect();
            (x, wx)
        };
        let (nodes_x, weights_x) = map(domain.length);
        let (nodes_y, weights_y) = map(domain.height);
        let mut phi = Vec::with_capacity((domain.modes_m + 1) * q);
        for m in 0..=domain.modes_m {
            phi.extend(nodes_x.iter().map(|&x| axis_mode(m, domain.length, x)));
        }
        let mut psi = Vec::with_capacity((domain.modes_n + 1) * q);
        for n in 0..=domain.modes_n {
            psi.extend(nodes_y.iter().map(|&y| axis_mode(n, domain.height, y)));
        }
        Self {
            domain: *domain,
            nodes_x,
            nodes_y,
            weights_x,
            weights_y,
            phi,
            psi,
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn points_per_axis(&self) -> usize {
        self.domain.quad_points
    }

    pub fn node_count(&self) -> usize {
        self.domain.quad_points * self.domain.quad_points
    }

    /// Iterator over `(xi1, xi2, weight)` in nodal order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.nodes_x
            .iter()
            .zip(&self.weights_x)
            .flat_map(move |(&x, &wx)| {
                self.nodes_y
                    .iter()
                    .zip(&self.weights_y)
                    .map(move |(&y, &wy)| (x, y, wx * wy))
            })
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().map(|(x, y, _)| f(x, y)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.node_count());
        self.nodes().zip(values).map(|((_, _, w), v)| w * v).sum()
    }

    /// Coefficients `<f, e_k>` of nodal values.
    pub fn project_values(&self, values: &[f64]) -> SpectralField {
        let q = self.domain.quad_points;
        let nm = self.domain.modes_m + 1;
        let nn = self.domain.modes_n + 1;
        assert_eq!(values.len(), q * q, "nodal array has the wrong size");
        // g[i * nn + n] = sum_j w_j f(x_i, y_j) psi_n(y_j)
        let mut g = vec![0.0; q * nn];
        for i in 0..q {
            let row = &values[i * q..(i + 1) * q];
            for n in 0..nn {
                let psi_n = &self.psi[n * q..(n + 1) * q];
                let mut s = 0.0;
                for j in 0..q {
                    s += self.weights_y[j] * row[j] * psi_n[j];
                }
                g[i * nn + n] = s;
            }
        }
        let mut coeffs = vec![0.0; nm * nn];
        for m in 0..nm {
            let phi_m = &self.phi[m * q..(m + 1) * q];
            for n in 0..nn {
                let mut s = 0.0;
                for i in 0..q {
                    s += self.weights_x[i] * phi_m[i] * g[i * nn + n];
                }
                coeffs[m * nn + n] = s;
            }
        }
        SpectralField {
            domain: self.domain,
            coeffs,
        }
    }

    pub fn project_fn<F: Fn(f64, f64) -> f64>(&self, f: F) -> SpectralField {
        self.project_values(&self.sample(f))
    }

    /// Nodal values of a spectral field.
    pub fn synthesize(&self, field: &SpectralField) -> Vec<f64> {
        let q = self.domain.quad_points;
        let nm = self.domain.modes_m + 1;
        let nn = self.domain.modes_n + 1;
        assert_eq!(field.coeffs.len(), nm * nn, "field does not match quadrature");
        // h[m * q + j] = sum_n c_{m,n} psi_n(y_j)
        let mut h = vec![0.0; nm * q];
        for m in 0..nm {
            for n in 0..nn {
                let c = field.coeffs[m * nn + n];
                if c == 0.0 {
                    continue;
                }
                let psi_n = &self.psi[n * q..(n + 1) * q];
                let hm = &mut h[m * q..(m + 1) * q];
                for j in 0..q {
                    hm[j] += c * psi_n[j];
                }
            }
        }
        let mut out = vec![0.0; q * q];
        for m in 0..nm {
            let phi_m = &self.phi[m * q..(m + 1) * q];
            let hm = &h[m * q..(m + 1) * q];
            for i in 0..q {
                let a = phi_m[i];
                let row = &mut out[i * q..(i + 1) * q];
                for j in 0..q {
                    row[j] += a * hm[j];
                }
            }
        }
        out
    }
}

/// Project a function on the rectangle onto the retained eigenmodes.
pub fn project<F: Fn(f64, f64) -> f64>(domain: &DomainSpec, f: F) -> SpectralField {
    Quadrature::new(domain).project_fn(f)
}

/// Pointwise synthesis `sum_k c_k e_k(xi)`.
pub fn reconstruct(field: &SpectralField, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    points.iter().map(|&(x, y)| field.eval(x, y)).collect()
}

/// A snapshot expressed in the eigenbasis of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub domain: DomainSpec,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(domain: &DomainSpec) -> Self {
        Self {
            domain: *domain,
            coeffs: vec![0.0; domain.mode_count()],
        }
    }

    pub fn from_coeffs(domain: &DomainSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != domain.mode_count() {
            return Err(Error::config(format!(
                "expected {} coefficients, got {}",
                domain.mode_count(),
                coeffs.len()
            )));
        }
        Ok(Self {
            domain: *domain,
            coeffs,
        })
    }

    /// The constant function `c`.
    pub fn constant(domain: &DomainSpec, c: f64) -> Self {
        let mut f = Self::zeros(domain);
        f.coeffs[0] = c * domain.area().sqrt();
        f
    }

    /// The eigenfunction `e_{m,n}` itself.
    pub fn basis_element(domain: &DomainSpec, idx: ModeIndex) -> Self {
        let mut f = Self::zeros(domain);
        f.set(idx, 1.0);
        f
    }

    pub fn get(&self, idx: ModeIndex) -> f64 {
        self.coeffs[self.domain.flat_index(idx)]
    }

    pub fn set(&mut self, idx: ModeIndex, value: f64) {
        let k = self.domain.flat_index(idx);
        self.coeffs[k] = value;
    }

    pub fn eval(&self, xi1: f64, xi2: f64) -> Result<f64> {
        self.domain.check_point(xi1, xi2)?;
        let d = &self.domain;
        let fx: Vec<f64> = (0..=d.modes_m).map(|m| axis_mode(m, d.length, xi1)).collect();
        let fy: Vec<f64> = (0..=d.modes_n).map(|n| axis_mode(n, d.height, xi2)).collect();
        let nn = d.modes_n + 1;
        let mut s = 0.0;
        for (m, a) in fx.iter().enumerate() {
            for (n, b) in fy.iter().enumerate() {
                s += self.coeffs[m * nn + n] * a * b;
            }
        }
        Ok(s)
    }

    /// L2 inner product by Parseval.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.domain, other.domain);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `int_Xi f dxi`.
    pub fn integral(&self) -> f64 {
        self.coeffs[0] * self.domain.area().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            domain: self.domain,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.domain, other.domain);
        Self {
            domain: self.domain,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}
