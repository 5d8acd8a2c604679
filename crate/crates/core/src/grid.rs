//! Vertex-centred grid functions and the ASCII grid dump.
//!
//! ```text
//! GRID nx ny L H
//! v(0,0)
//! v(0,1)
//! ...
//! ```
//!
//! Values are row-major with the `xi1` index outer, at the vertices
//! `(i L / (nx - 1), j H / (ny - 1))`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, Quadrature, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub nx: usize,
    pub ny: usize,
    pub length: f64,
    pub height: f64,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(nx: usize, ny: usize, length: f64, height: f64, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::GridFormat(format!(
                "grid needs at least 2 vertices per axis, got {nx}x{ny}"
            )));
        }
        if !(length > 0.0 && height > 0.0) {
            return Err(Error::GridFormat(format!(
                "grid extents must be positive, got {length}x{height}"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::GridFormat(format!(
                "expected {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::GridFormat(format!("value #{bad} is not finite")));
        }
        Ok(Self {
            nx,
            ny,
            length,
            height,
            values,
        })
    }

    /// Sample a function at the grid vertices.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        nx: usize,
        ny: usize,
        length: f64,
        height: f64,
        f: F,
    ) -> Result<Self> {
        let hx = length / (nx.max(2) - 1) as f64;
        let hy = height / (ny.max(2) - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                values.push(f(i as f64 * hx, j as f64 * hy));
            }
        }
        Self::new(nx, ny, length, height, values)
    }

    /// Sample a spectral field at the grid vertices.
    pub fn from_spectral(field: &SpectralField, nx: usize, ny: usize) -> Result<Self> {
        let d = field.domain;
        let hx = d.length / (nx.max(2) - 1) as f64;
        let hy = d.height / (ny.max(2) - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                // clamp the last vertex onto the boundary against rounding
                let x = (i as f64 * hx).min(d.length);
                let y = (j as f64 * hy).min(d.height);
                values.push(field.eval(x, y)?);
            }
        }
        Self::new(nx, ny, d.length, d.height, values)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            self.length / (self.nx - 1) as f64,
            self.height / (self.ny - 1) as f64,
        )
    }

    pub fn vertex(&self, i: usize, j: usize) -> (f64, f64) {
        let (hx, hy) = self.spacing();
        (i as f64 * hx, j as f64 * hy)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny + j]
    }

    /// Bilinear interpolation; points outside the rectangle are rejected.
    pub fn interpolate(&self, xi1: f64, xi2: f64) -> Result<f64> {
        let tol_x = 1e-12 * self.length;
        let tol_y = 1e-12 * self.height;
        if !(-tol_x..=self.length + tol_x).contains(&xi1) || !(-tol_y..=self.height + tol_y).contains(&xi2) {
            return Err(Error::OutOfDomain {
                xi1,
                xi2,
                length: self.length,
                height: self.height,
            });
        }
        let (hx, hy) = self.spacing();
        let sx = (xi1 / hx).clamp(0.0, (self.nx - 1) as f64);
        let sy = (xi2 / hy).clamp(0.0, (self.ny - 1) as f64);
        let i = (sx.floor() as usize).min(self.nx - 2);
        let j = (sy.floor() as usize).min(self.ny - 2);
        let fx = sx - i as f64;
        let fy = sy - j as f64;
        Ok((1.0 - fx) * (1.0 - fy) * self.at(i, j)
            + fx * (1.0 - fy) * self.at(i + 1, j)
            + (1.0 - fx) * fy * self.at(i, j + 1)
            + fx * fy * self.at(i + 1, j + 1))
    }

    /// Project onto the eigenbasis of `domain` through bilinear
    /// interpolation at the quadrature nodes.
    pub fn project(&self, domain: &DomainSpec) -> Result<SpectralField> {
        self.check_extent(domain)?;
        let quad = Quadrature::new(domain);
        let values = self.sample_nodes(&quad)?;
        Ok(quad.project_values(&values))
    }

    /// Bilinear interpolant at the quadrature nodes.
    pub fn sample_nodes(&self, quad: &Quadrature) -> Result<Vec<f64>> {
        self.check_extent(quad.domain())?;
        quad.nodes().map(|(x, y, _)| self.interpolate(x, y)).collect()
    }

    fn check_extent(&self, domain: &DomainSpec) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        if close(self.length, domain.length) && close(self.height, domain.height) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "grid extent {}x{} does not match domain {}x{}",
                self.length, self.height, domain.length, domain.height
            )))
        }
    }

    /// Render in the grid dump format.
    pub fn to_dump(&self) -> String {
        let mut s = String::with_capacity(24 * self.values.len() + 64);
        let _ = writeln!(
            s,
            "GRID {} {} {} {}",
            self.nx,
            self.ny,
            fmt_real(self.length),
            fmt_real(self.height)
        );
        for v in &self.values {
            let _ = writeln!(s, "{}", fmt_real(*v));
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::GridFormat("empty grid file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "GRID" {
            return Err(Error::GridFormat(format!(
                "header must read `GRID nx ny L H`, got `{header}`"
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::GridFormat(format!("bad grid dimension `{s}`")))
        };
        let real = |s: &str, line: usize| {
            s.parse::<f64>()
                .map_err(|_| Error::GridFormat(format!("line {line}: bad number `{s}`")))
        };
        let nx = int(parts[1])?;
        let ny = int(parts[2])?;
        let length = real(parts[3], 1)?;
        let height = real(parts[4], 1)?;
        let values = lines
            .map(|(i, l)| real(l, i + 1))
            .collect::<Result<Vec<f64>>>()?;
        Self::new(nx, ny, length, height, values)
    }
}

/// Real formatting shared by all text exports: 17 significant digits, enough to round-trip.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}
