//! Rectangular grids on `[0, X_max]^d` (d <= 2) carrying the speed-measure
//! weight, and functions sampled on them.
//!
//! Each axis is a graded cell partition with edges `X_max (j/n)^{1/b}`,
//! clustered at 0 so the `x^{-alpha}` weight and the entrance behavior of the
//! kernels are resolved. Values live at cell midpoints; `L^p(mu)` norms use
//! the exact per-cell mass `int x^{-alpha} dx` (closed form), never the
//! midpoint weight, which would diverge in the first cell.

use crate::error::{Error, Result};
use crate::kernel::SpeedMeasure;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub alpha: f64,
    /// `n+1` cell edges, `edges[0] = 0`.
    pub edges: Vec<f64>,
    /// `n` cell midpoints (the collocation nodes).
    pub nodes: Vec<f64>,
    /// `n` exact cell masses under `x^{-alpha} dx`.
    pub mu_mass: Vec<f64>,
}

impl Axis {
    /// Graded axis with `n` cells on `[0, x_max]`, clustering exponent `1/b`.
    pub fn graded(alpha: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("axis: alpha {alpha} outside (0,1)")));
        }
        if !(x_max > 0.0) || n < 8 {
            return Err(Error::input("axis: need x_max > 0 and n >= 8".to_string()));
        }
        let b = 1.0 - 0.5 * alpha;
        let grade = 1.0 / b;
        let edges: Vec<f64> = (0..=n)
            .map(|j| x_max * ((j as f64) / (n as f64)).powf(grade))
            .collect();
        let nodes: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mu_mass: Vec<f64> = edges
            .windows(2)
            .map(|w| SpeedMeasure::cell_mass_1d(alpha, w[0], w[1]))
            .collect();
        Ok(Axis {
            alpha,
            edges,
            nodes,
            mu_mass,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }
}

/// Function values on a tensor grid (row-major over axis-0 nodes outermost).
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub axes: Arc<Vec<Axis>>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(axes: Arc<Vec<Axis>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::input(
                "grid functions support d <= 2 (dense operator quadrature)".to_string(),
            ));
        }
        let n: usize = axes.iter().map(Axis::len).product();
        Ok(GridFunction {
            axes,
            values: vec![0.0; n],
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(axes: Arc<Vec<Axis>>, f: F) -> Result<Self> {
        let mut g = GridFunction::zeros(axes)?;
        match g.axes.len() {
            1 => {
                for (j, &x) in g.axes[0].nodes.iter().enumerate() {
                    g.values[j] = f(&[x]);
                }
            }
            _ => {
                let (n0, n1) = (g.axes[0].len(), g.axes[1].len());
                for j in 0..n0 {
                    for k in 0..n1 {
                        g.values[j * n1 + k] = f(&[g.axes[0].nodes[j], g.axes[1].nodes[k]]);
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn shape(&self) -> (usize, usize) {
        match self.axes.len() {
            1 => (self.axes[0].len(), 1),
            _ => (self.axes[0].len(), self.axes[1].len()),
        }
    }

    /// Product cell mass at a flat index.
    fn mass(&self, flat: usize) -> f64 {
        match self.axes.len() {
            1 => self.axes[0].mu_mass[flat],
            _ => {
                let n1 = self.axes[1].len();
                self.axes[0].mu_mass[flat / n1] * self.axes[1].mu_mass[flat % n1]
            }
        }
    }

    /// `L^p(mu)` norm with the exact cell masses.
    pub fn lp_norm_mu(&self, p: f64) -> Result<f64> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::input(format!("lp_norm_mu: p must lie in (1, inf), got {p}")));
        }
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            acc += v.abs().powf(p) * self.mass(i);
        }
        Ok(acc.powf(1.0 / p))
    }

    /// `<f, g>_mu`.
    pub fn inner_mu(&self, other: &GridFunction) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::input("inner_mu: shape mismatch".to_string()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| a * b * self.mass(i))
            .sum())
    }

    /// Centered first difference along `axis` (nonuniform three-point
    /// formula); endpoints are set to 0, consistent with the Neumann
    /// condition at 0 and compact support at the outer edge.
    pub fn deriv_axis(&self, axis: usize) -> Result<GridFunction> {
        self.stencil_axis(axis, false)
    }

    /// Nonuniform second difference along `axis`, endpoints 0.
    pub fn second_diff_axis(&self, axis: usize) -> Result<GridFunction> {
        self.stencil_axis(axis, true)
    }

    fn stencil_axis(&self, axis: usize, second: bool) -> Result<GridFunction> {
        if axis >= self.axes.len() {
            return Err(Error::input("stencil: axis out of range".to_string()));
        }
        let mut out = GridFunction::zeros(self.axes.clone())?;
        let (n0, n1) = self.shape();
        let (na, stride, n_other, other_stride) = if axis == 0 {
            (n0, n1, n1, 1)
        } else {
            (n1, 1, n0, n1)
        };
        let xs = &self.axes[axis].nodes;
        for o in 0..n_other {
            for j in 1..na.saturating_sub(1) {
                let hm = xs[j] - xs[j - 1];
                let hp = xs[j + 1] - xs[j];
                let fm = self.values[o * other_stride + (j - 1) * stride];
                let f0 = self.values[o * other_stride + j * stride];
                let fp = self.values[o * other_stride + (j + 1) * stride];
                let v = if second {
                    2.0 * ((fp - f0) / hp - (f0 - fm) / hm) / (hp + hm)
                } else {
                    // weighted centered difference, exact for quadratics
                    (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0)
                        / (hm * hp * (hm + hp))
                };
                out.values[o * other_stride + j * stride] = v;
            }
        }
        Ok(out)
    }

    /// Pointwise map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction {
            axes: self.axes.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<GridFunction> {
        if self.values.len() != other.values.len() {
            return Err(Error::input("zip_with: shape mismatch".to_string()));
        }
        Ok(GridFunction {
            axes: self.axes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn axis_masses_sum_to_total() {
        let ax = Axis::graded(0.5, 10.0, 128).unwrap();
        let total: f64 = ax.mu_mass.iter().sum();
        assert_relative_eq!(total, 10.0f64.powf(0.5) / 0.5, max_relative = 1e-12);
        assert!(ax.edges[1] < 10.0 / 128.0, "grading must cluster at 0");
    }

    #[test]
    fn lp_norm_matches_closed_form() {
        // f(x) = x on [0, 1], alpha = 1/2: int_0^1 x^2 x^{-1/2} dx = 2/5.
        let ax = Arc::new(vec![Axis::graded(0.5, 1.0, 4000).unwrap()]);
        let f = GridFunction::from_fn(ax, |x| x[0]).unwrap();
        assert_relative_eq!(
            f.lp_norm_mu(2.0).unwrap(),
            (2.0f64 / 5.0).sqrt(),
            max_relative = 1e-4
        );
    }

    #[test]
    fn derivative_stencils_on_smooth_function() {
        let ax = Arc::new(vec![Axis::graded(0.5, 5.0, 800).unwrap()]);
        let f = GridFunction::from_fn(ax.clone(), |x| (x[0] - 2.0).powi(3)).unwrap();
        let d1 = f.deriv_axis(0).unwrap();
        let d2 = f.second_diff_axis(0).unwrap();
        for (j, &x) in ax[0].nodes.iter().enumerate().skip(50).take(700) {
            assert_relative_eq!(d1.values[j], 3.0 * (x - 2.0).powi(2), max_relative = 2e-3, epsilon = 1e-4);
            assert_relative_eq!(d2.values[j], 6.0 * (x - 2.0), max_relative = 2e-2, epsilon = 2e-2);
        }
    }

    #[test]
    fn two_dimensional_layout() {
        let axes = Arc::new(vec![
            Axis::graded(0.5, 2.0, 32).unwrap(),
            Axis::graded(0.3, 3.0, 16).unwrap(),
        ]);
        let f = GridFunction::from_fn(axes.clone(), |x| x[0] + 10.0 * x[1]).unwrap();
        let j = 5;
        let k = 7;
        assert_relative_eq!(
            f.values[j * 16 + k],
            axes[0].nodes[j] + 10.0 * axes[1].nodes[k]
        );
        assert!(GridFunction::zeros(Arc::new(vec![])).is_err());
    }
}
