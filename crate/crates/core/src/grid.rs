//! Uniform collocation grid on `[0, 1]` with composite trapezoid quadrature.
//!
//! All spatial numerics (integrals, running integrals, norms, shape
//! reconstruction) go through [`Grid`] so that every module shares one
//! second-order discretization.

use std::ops::{Deref, DerefMut};

/// Smallest admissible number of intervals.
pub const MIN_INTERVALS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Nodal values of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn zeros(len: usize) -> Self {
        Field(vec![0.0; len])
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Field(vec![value; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Field(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

/// Sampled planar center line.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Shape {
    /// Sum of chord lengths between consecutive samples.
    pub fn polyline_length(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| (x[1] - x[0]).hypot(y[1] - y[0]))
            .sum()
    }
}

impl Grid {
    /// Uniform grid with `n` intervals; `None` if `n < MIN_INTERVALS`.
    pub fn new(n: usize) -> Option<Self> {
        if n < MIN_INTERVALS {
            return None;
        }
        let h = 1.0 / n as f64;
        let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
        let mut weights = vec![h; n + 1];
        weights[0] = 0.5 * h;
        weights[n] = 0.5 * h;
        Some(Grid {
            n,
            h,
            nodes,
            weights,
        })
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.nodes.iter().map(|&s| f(s)).collect())
    }

    pub fn zeros(&self) -> Field {
        Field::zeros(self.len())
    }

    fn check(&self, field: &[f64]) {
        assert_eq!(field.len(), self.len(), "field does not match grid");
    }

    /// Trapezoid approximation of the integral over `[0, 1]`.
    pub fn integral(&self, field: &[f64]) -> f64 {
        self.check(field);
        field.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Running trapezoid integral from `0` to each node; first entry is exactly zero.
    pub fn cumulative(&self, field: &[f64]) -> Field {
        self.check(field);
        let half_h = 0.5 * self.h;
        let mut out = Vec::with_capacity(field.len());
        let mut acc = 0.0;
        out.push(acc);
        for pair in field.windows(2) {
            acc += half_h * (pair[0] + pair[1]);
            out.push(acc);
        }
        Field(out)
    }

    /// Trapezoid integral from each node to `1`; last entry is exactly zero.
    pub fn tail(&self, field: &[f64]) -> Field {
        self.check(field);
        let half_h = 0.5 * self.h;
        let mut out = vec![0.0; field.len()];
        let mut acc = 0.0;
        for i in (0..self.n).rev() {
            acc += half_h * (field[i] + field[i + 1]);
            out[i] = acc;
        }
        Field(out)
    }

    /// `g(s) = int_s^1 sin( int_0^sigma mu ) dsigma`, the bending load term.
    pub fn tail_sine_integral(&self, mu: &[f64]) -> Field {
        let angle = self.cumulative(mu);
        self.tail(&angle.map(f64::sin))
    }

    pub fn l2_norm(&self, field: &[f64]) -> f64 {
        self.check(field);
        field
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Norm on `L^2(0,1) x R`: `||field|| + |scalar|`.
    pub fn product_norm(&self, field: &[f64], scalar: f64) -> f64 {
        self.l2_norm(field) + scalar.abs()
    }

    /// Center line of a unit-speed rod with tangent angle `int_0^s mu`,
    /// clamped at the origin.
    pub fn reconstruct_shape(&self, mu: &[f64]) -> Shape {
        let angle = self.cumulative(mu);
        let x = self.cumulative(&angle.map(f64::cos)).into_inner();
        let y = self.cumulative(&angle.map(f64::sin)).into_inner();
        Shape { x, y }
    }
}
