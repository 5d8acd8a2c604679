//! Independent oracles: a Crank-Nicolson finite-difference solver, exact
//! discrete-time LQ dynamic programming per mode, Richardson
//! extrapolation, an adaptive Runge-Kutta integrator and a numerical
//! Gateaux-derivative probe.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{ControlSignal, ControlValues, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{fmt_real, GridField};
use crate::spectral::{DomainSpec, Quadrature, SpectralField};

// ---------------------------------------------------------------------------
// Finite differences

/// Vertex-grid operator `L = Laplacian - rho` with mirrored ghost points.
struct FdOperator {
    nx: usize,
    ny: usize,
    ihx2: f64,
    ihy2: f64,
    rho: f64,
}

impl FdOperator {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for i in 0..nx {
            for j in 0..ny {
                let c = x[i * ny + j];
                let xm = if i == 0 { x[ny + j] } else { x[(i - 1) * ny + j] };
                let xp = if i == nx - 1 { x[(nx - 2) * ny + j] } else { x[(i + 1) * ny + j] };
                let ym = if j == 0 { x[i * ny + 1] } else { x[i * ny + j - 1] };
                let yp = if j == ny - 1 { x[i * ny + ny - 2] } else { x[i * ny + j + 1] };
                out[i * ny + j] = (xm - 2.0 * c + xp) * self.ihx2 + (ym - 2.0 * c + yp) * self.ihy2 - self.rho * c;
            }
        }
    }

    /// Trapezoid weights that make `W L` symmetric.
    fn weights(&self) -> Vec<f64> {
        let w = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        (0..self.nx)
            .flat_map(|i| (0..self.ny).map(move |j| (i, j)))
            .map(|(i, j)| w(i, self.nx) * w(j, self.ny))
            .collect()
    }
}

/// Solve `(I - theta L) x = rhs` by Jacobi-preconditioned CG on the
/// `W`-weighted symmetric form.
fn cg_solve(op: &FdOperator, theta: f64, weights: &[f64], rhs: &[f64], x: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    let diag_l = -2.0 * op.ihx2 - 2.0 * op.ihy2 - op.rho;
    let apply = |v: &[f64], lv: &mut [f64], out: &mut [f64]| {
        op.apply(v, lv);
        for k in 0..n {
            out[k] = weights[k] * (v[k] - theta * lv[k]);
        }
    };
    let precond: Vec<f64> = weights.iter().map(|w| 1.0 / (w * (1.0 - theta * diag_l))).collect();
    let b: Vec<f64> = rhs.iter().zip(weights).map(|(r, w)| r * w).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let mut scratch = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(x, &mut scratch, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..10 * n + 100 {
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-14 * b_norm {
            return Ok(());
        }
        apply(&p, &mut scratch, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            z[k] = r[k] * precond[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::config("finite-difference linear solve did not converge"))
}

fn vertex_forcing(params: &ModelParams, u: &ControlSignal, t: f64, grid: &GridField, b: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(b.len());
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let (x, y) = clamp_vertex(grid, i, j, params);
            out.push(b[i * grid.ny + j] * u.value_at(t, x, y)?);
        }
    }
    Ok(out)
}

fn clamp_vertex(grid: &GridField, i: usize, j: usize, params: &ModelParams) -> (f64, f64) {
    let (x, y) = grid.vertex(i, j);
    let d = params.domain();
    (x.min(d.length), y.min(d.height))
}

/// Crank-Nicolson solution on an `nx x ny` vertex grid with `steps`
/// uniform time steps; returns `(t, x(t))` for every step including `t = 0`.
///
/// Controls must be pointwise evaluable (spectral samples or a rule).
/// With `dt (2/hx^2 + 2/hy^2 + rho/2) <= 1` nonnegative data stay nonnegative.
pub fn fd_solve(
    params: &ModelParams,
    u: &ControlSignal,
    nx: usize,
    ny: usize,
    steps: usize,
) -> Result<Vec<(f64, GridField)>> {
    if nx < 2 || ny < 2 || steps == 0 {
        return Err(Error::config(format!(
            "finite-difference grid needs nx, ny >= 2 and steps >= 1, got {nx}x{ny}, {steps} steps"
        )));
    }
    params.validate()?;
    if matches!(u.values, ControlValues::Nodal { .. }) {
        return Err(Error::config("finite differences need a pointwise evaluable control"));
    }
    let d = *params.domain();
    let x0 = GridField::from_spectral(&params.x0, nx, ny)?;
    let (hx, hy) = x0.spacing();
    let op = FdOperator {
        nx,
        ny,
        ihx2: if params.diffusion { 1.0 / (hx * hx) } else { 0.0 },
        ihy2: if params.diffusion { 1.0 / (hy * hy) } else { 0.0 },
        rho: params.rho,
    };
    let weights = op.weights();
    let mut b = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = clamp_vertex(&x0, i, j, params);
            b.push(params.effectiveness.eval(x, y)?);
        }
    }
    let dt = params.horizon / steps as f64;
    let theta = 0.5 * dt;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.values.clone();
    let mut lx = vec![0.0; x.len()];
    let mut forcing = vertex_forcing(params, u, 0.0, &x0, &b)?;
    out.push((0.0, x0.clone()));
    for n in 0..steps {
        let t1 = if n + 1 == steps { params.horizon } else { (n + 1) as f64 * dt };
        let next = vertex_forcing(params, u, t1, &x0, &b)?;
        op.apply(&x, &mut lx);
        let rhs: Vec<f64> = (0..x.len())
            .map(|k| x[k] + theta * lx[k] + theta * (forcing[k] + next[k]))
            .collect();
        cg_solve(&op, theta, &weights, &rhs, &mut x)?;
        forcing = next;
        out.push((t1, GridField::new(nx, ny, d.length, d.height, x.clone())?));
    }
    Ok(out)
}

/// Trapezoid-weighted total `int x dxi` of a grid field.
pub fn grid_mass(field: &GridField) -> f64 {
    let (hx, hy) = field.spacing();
    let w = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut m = 0.0;
    for i in 0..field.nx {
        for j in 0..field.ny {
            m += w(i, field.nx) * w(j, field.ny) * field.at(i, j);
        }
    }
    m * hx * hy
}

/// Relative discrete L2 distance between a grid field and a spectral field
/// sampled on the same vertices.
pub fn relative_l2_error(field: &GridField, reference: &SpectralField) -> Result<f64> {
    let r = GridField::from_spectral(reference, field.nx, field.ny)?;
    let diff = GridField::new(
        field.nx,
        field.ny,
        field.length,
        field.height,
        field.values.iter().zip(&r.values).map(|(a, b)| (a - b) * (a - b)).collect(),
    )?;
    let sq = GridField::new(
        field.nx,
        field.ny,
        field.length,
        field.height,
        r.values.iter().map(|v| v * v).collect(),
    )?;
    let den = grid_mass(&sq);
    let num = grid_mass(&diff);
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

// ---------------------------------------------------------------------------
// Discrete-time dynamic programming

/// Scalar problem `x_{j+1} = (1 + a dt) x_j + dt u_j + dt f` with cost
/// `sum dt u_j^2 + w (x_J - target)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLQInstance {
    pub a: f64,
    pub terminal_weight: f64,
    pub target: f64,
    pub f: f64,
    pub horizon: f64,
    pub steps: usize,
    pub x0: f64,
}

/// Exact solution of a [`ScalarLQInstance`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarLqSolution {
    pub value: f64,
    /// Quadratic coefficient of the cost-to-go at every step.
    pub gains: Vec<f64>,
    /// Linear coefficient of the cost-to-go, `V_j(x) = P_j x^2 + 2 q_j x + c_j`.
    pub affine: Vec<f64>,
    pub trajectory: Vec<f64>,
    pub control: Vec<f64>,
}

impl ScalarLQInstance {
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    /// Backward Riccati recursion followed by a forward closed-loop pass.
    /// A nonpositive pivot `1 + P dt` is reported as a blow-up.
    pub fn solve(&self) -> Result<ScalarLqSolution> {
        if self.steps == 0 || !(self.horizon > 0.0) {
            return Err(Error::config("DP instance needs steps >= 1 and T > 0"));
        }
        let n = self.steps;
        let dt = self.dt();
        let alpha = 1.0 + self.a * dt;
        let mut p = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        p[n] = self.terminal_weight;
        q[n] = -self.terminal_weight * self.target;
        c[n] = self.terminal_weight * self.target * self.target;
        for j in (0..n).rev() {
            let (pn, qn) = (p[j + 1], q[j + 1]);
            let den = 1.0 + pn * dt;
            if !(den > 0.0) {
                return Err(Error::BlowUp {
                    mu: -self.a,
                    time: self.horizon - (j + 1) as f64 * dt,
                });
            }
            let df = dt * self.f;
            p[j] = alpha * alpha * pn / den;
            q[j] = alpha * (pn * df + qn) / den;
            c[j] = pn / den * df * df + 2.0 * qn / den * df + c[j + 1] - dt * qn * qn / den;
        }
        let mut x = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n);
        x.push(self.x0);
        for j in 0..n {
            let s = alpha * x[j] + dt * self.f;
            let uj = -(p[j + 1] * s + q[j + 1]) / (1.0 + p[j + 1] * dt);
            u.push(uj);
            x.push(s + dt * uj);
        }
        Ok(ScalarLqSolution {
            value: p[0] * self.x0 * self.x0 + 2.0 * q[0] * self.x0 + c[0],
            gains: p,
            affine: q,
            trajectory: x,
            control: u,
        })
    }
}

/// `scalar_lq_dp` as a free function.
pub fn scalar_lq_dp(inst: &ScalarLQInstance) -> Result<ScalarLqSolution> {
    inst.solve()
}

/// Richardson tableau for values computed with step counts `N, 2N, 4N, ...`
/// of a first-order scheme with a smooth error expansion.
pub fn richardson(values: &[f64]) -> f64 {
    let mut row = values.to_vec();
    let mut factor = 2.0;
    while row.len() > 1 {
        row = row.windows(2).map(|w| (factor * w[1] - w[0]) / (factor - 1.0)).collect();
        factor *= 2.0;
    }
    row.first().copied().unwrap_or(f64::NAN)
}

/// DP values at `base * 2^l` steps for `l < levels`, plus their extrapolation.
pub fn dp_refinement(inst: &ScalarLQInstance, base: usize, levels: usize) -> Result<(Vec<(usize, f64)>, f64)> {
    let rows = (0..levels)
        .map(|l| {
            let steps = base << l;
            Ok((steps, inst.with_steps(steps).solve()?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = richardson(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    Ok((rows, limit))
}

/// `steps,value` CSV of a refinement study.
pub fn convergence_csv(rows: &[(usize, f64)]) -> String {
    let mut s = String::from("steps,value\n");
    for (n, v) in rows {
        let _ = writeln!(s, "{n},{}", fmt_real(*v));
    }
    s
}

// ---------------------------------------------------------------------------
// Adaptive Runge-Kutta

/// Dormand-Prince 5(4) for a scalar ODE `y' = f(t, y)` from `t0` to `t1`.
pub fn integrate_ode<F: Fn(f64, f64) -> f64>(f: F, t0: f64, y0: f64, t1: f64, rtol: f64, atol: f64) -> Result<f64> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let (mut t, mut y) = (t0, y0);
    let mut h = span * 1e-3;
    let mut k = [0.0; 7];
    for _ in 0..10_000_000 {
        if (t1 - t) * span.signum() <= 0.0 {
            return Ok(y);
        }
        if ((t + h) - t1) * span.signum() > 0.0 {
            h = t1 - t;
        }
        for s in 0..7 {
            let ys = y + h * (0..s).map(|i| A[s][i] * k[i]).sum::<f64>();
            k[s] = f(t + C[s] * h, ys);
        }
        let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        if !y5.is_finite() {
            return Err(Error::config(format!("ODE solution diverged near t = {t}")));
        }
        let scale = atol + rtol * y.abs().max(y5.abs());
        let err = ((y5 - y4) / scale).abs();
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < 1e-14 * span.abs() {
            return Err(Error::config(format!("ODE step size underflow near t = {t}")));
        }
    }
    Err(Error::config("ODE integration exceeded the step budget"))
}

// ---------------------------------------------------------------------------
// Gateaux probe

/// Random direction with unit `L2(0,T; L2(Xi))` norm, one spectral sample per time.
pub fn random_unit_direction(u: &ControlSignal, domain: &DomainSpec, rng: &mut ChaCha8Rng) -> Result<Vec<SpectralField>> {
    let mut dir: Vec<SpectralField> = u
        .times
        .iter()
        .map(|_| {
            let coeffs = (0..domain.mode_count()).map(|_| rng.sample(StandardNormal)).collect();
            SpectralField { domain: *domain, coeffs }
        })
        .collect();
    let probe = ControlSignal::new(u.times.clone(), ControlValues::Spectral(dir.clone()))?;
    let norm = probe.norm(&Quadrature::new(domain))?;
    for f in &mut dir {
        *f = f.scaled(1.0 / norm);
    }
    Ok(dir)
}

/// `max_v |J(u + eps v) - J(u - eps v)| / (2 eps)` over `directions` seeded
/// random unit directions, with `eps = 1e-4 (1 + ||u||)`.
pub fn gateaux_gradient_norm<J>(objective: J, u: &ControlSignal, quad: &Quadrature, directions: usize, seed: u64) -> Result<f64>
where
    J: Fn(&ControlSignal) -> Result<f64>,
{
    let eps = 1e-4 * (1.0 + u.norm(quad)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let dir = random_unit_direction(u, quad.domain(), &mut rng)?;
        let plus = objective(&u.perturbed(&dir, eps, quad)?)?;
        let minus = objective(&u.perturbed(&dir, -eps, quad)?)?;
        worst = worst.max(((plus - minus) / (2.0 * eps)).abs());
    }
    Ok(worst)
}
