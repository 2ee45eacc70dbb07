//! Test functions for Monte Carlo functionals: smooth bumps, coordinate
//! functions, and box indicators, each with analytic derivatives and an
//! analytic boundary-normal-derivative certificate where one exists.
//!
//! The submartingale formulation requires `df/dx_i >= 0` on the face
//! `{x_i = 0}`; the certificate is checked symbolically per kind, never
//! numerically.

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctionKind {
    /// `prod_i exp(1 - 1/(1 - u_i^2))` on `|u_i| < 1`, `u_i = (x_i-c_i)/w_i`,
    /// 0 outside; C^infty with compact support, peak value 1.
    Bump { center: Vec<f64>, width: Vec<f64> },
    /// `f(x) = x_coord`; C^2 with `df/dx_i = delta_{i,coord} >= 0`.
    CoordinateLinear { coord: usize },
    /// Indicator of the box `prod [lo_i, hi_i]`; not C^2, so admissible for
    /// discounted-occupation functionals only.
    Indicator { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
}

fn bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// `g'(u)/g(u)` for the 1-d bump profile.
fn bump_log_deriv(u: f64) -> f64 {
    let s = 1.0 - u * u;
    -2.0 * u / (s * s)
}

/// `g''(u)/g(u)` for the 1-d bump profile.
fn bump_log_second(u: f64) -> f64 {
    let s = 1.0 - u * u;
    let h = -2.0 * u / (s * s);
    let hp = -2.0 / (s * s) - 8.0 * u * u / (s * s * s);
    h * h + hp
}

impl TestFunctionSpec {
    pub fn bump(center: Vec<f64>, width: Vec<f64>) -> Result<Self> {
        if center.len() != width.len() || center.is_empty() {
            return Err(Error::input("bump: center/width dimension mismatch".to_string()));
        }
        if width.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::input("bump: widths must be positive".to_string()));
        }
        Ok(TestFunctionSpec {
            kind: TestFunctionKind::Bump { center, width },
        })
    }

    pub fn coordinate_linear(coord: usize) -> Self {
        TestFunctionSpec {
            kind: TestFunctionKind::CoordinateLinear { coord },
        }
    }

    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::input("indicator: need a nondegenerate box".to_string()));
        }
        Ok(TestFunctionSpec {
            kind: TestFunctionKind::Indicator { lo, hi },
        })
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            TestFunctionKind::Bump { center, .. } => center.len(),
            TestFunctionKind::CoordinateLinear { coord } => coord + 1,
            TestFunctionKind::Indicator { lo, .. } => lo.len(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            TestFunctionKind::Bump { center, width } => center
                .iter()
                .zip(width)
                .zip(x)
                .map(|((&c, &w), &xi)| bump_profile((xi - c) / w))
                .product(),
            TestFunctionKind::CoordinateLinear { coord } => x[*coord],
            TestFunctionKind::Indicator { lo, hi } => {
                let inside = lo
                    .iter()
                    .zip(hi)
                    .zip(x)
                    .all(|((&a, &b), &xi)| xi >= a && xi <= b);
                f64::from(inside)
            }
        }
    }

    /// Analytic gradient; indicators are refused (not differentiable).
    pub fn grad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            TestFunctionKind::Bump { center, width } => {
                let v = self.value(x);
                for i in 0..center.len() {
                    let u = (x[i] - center[i]) / width[i];
                    out[i] = if u.abs() >= 1.0 {
                        0.0
                    } else {
                        v * bump_log_deriv(u) / width[i]
                    };
                }
                Ok(())
            }
            TestFunctionKind::CoordinateLinear { coord } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[*coord] = 1.0;
                Ok(())
            }
            TestFunctionKind::Indicator { .. } => Err(Error::input(
                "indicator test functions have no derivatives".to_string(),
            )),
        }
    }

    /// Analytic diagonal of the Hessian (all the generator needs).
    pub fn diag_hessian(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            TestFunctionKind::Bump { center, width } => {
                let v = self.value(x);
                for i in 0..center.len() {
                    let u = (x[i] - center[i]) / width[i];
                    out[i] = if u.abs() >= 1.0 {
                        0.0
                    } else {
                        v * bump_log_second(u) / (width[i] * width[i])
                    };
                }
                Ok(())
            }
            TestFunctionKind::CoordinateLinear { .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                Ok(())
            }
            TestFunctionKind::Indicator { .. } => Err(Error::input(
                "indicator test functions have no derivatives".to_string(),
            )),
        }
    }

    /// Certify `df/dx_i >= 0` on every face `{x_i = 0}` of the orthant,
    /// symbolically. Bumps qualify when their support stays off every face
    /// (the derivative then vanishes there); coordinate functions have
    /// constant derivative 1; indicators are never certified.
    pub fn boundary_certificate(&self, dim: usize) -> Result<()> {
        match &self.kind {
            TestFunctionKind::Bump { center, width } => {
                if center.len() != dim {
                    return Err(Error::input("certificate: dimension mismatch".to_string()));
                }
                for (i, (&c, &w)) in center.iter().zip(width).enumerate() {
                    if c - w <= 0.0 {
                        return Err(Error::input(format!(
                            "bump support touches the face x_{i} = 0; normal derivative sign not certified"
                        )));
                    }
                }
                Ok(())
            }
            TestFunctionKind::CoordinateLinear { coord } => {
                if *coord >= dim {
                    return Err(Error::input("certificate: coordinate out of range".to_string()));
                }
                Ok(())
            }
            TestFunctionKind::Indicator { .. } => Err(Error::input(
                "indicator test functions are not C^2; no certificate".to_string(),
            )),
        }
    }

    /// `L^p` norm with respect to Lebesgue measure. Closed form for
    /// indicators, per-axis quadrature for bumps; coordinate functions have
    /// no finite Lebesgue norm.
    pub fn lp_norm_lebesgue(&self, p: f64) -> Result<f64> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::input(format!("lp norm: p must lie in (1, inf), got {p}")));
        }
        match &self.kind {
            TestFunctionKind::Bump { center, width } => {
                let mut acc = 1.0;
                for (_c, &w) in center.iter().zip(width) {
                    let axis = quad::integrate(
                        |u: f64| bump_profile(u).powf(p),
                        -1.0,
                        1.0,
                        1e-10,
                        1e-13,
                    )?;
                    acc *= w * axis.value;
                }
                Ok(acc.powf(1.0 / p))
            }
            TestFunctionKind::Indicator { lo, hi } => {
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                Ok(vol.powf(1.0 / p))
            }
            TestFunctionKind::CoordinateLinear { .. } => Err(Error::input(
                "coordinate functions are not Lebesgue p-integrable".to_string(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bump_shape_and_support() {
        let f = TestFunctionSpec::bump(vec![1.0], vec![0.5]).unwrap();
        assert_relative_eq!(f.value(&[1.0]), 1.0);
        assert_eq!(f.value(&[0.5]), 0.0);
        assert_eq!(f.value(&[1.5]), 0.0);
        assert!(f.value(&[1.2]) > 0.0 && f.value(&[1.2]) < 1.0);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let f = TestFunctionSpec::bump(vec![1.0, 2.0], vec![0.5, 0.8]).unwrap();
        let x = [1.1, 1.7];
        let h = 1e-6;
        let mut g = [0.0; 2];
        f.grad(&x, &mut g).unwrap();
        let mut hdiag = [0.0; 2];
        f.diag_hessian(&x, &mut hdiag).unwrap();
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6, epsilon = 1e-8);
            let fd2 = (f.value(&xp) - 2.0 * f.value(&x) + f.value(&xm)) / (h * h);
            assert_relative_eq!(hdiag[i], fd2, max_relative = 1e-3, epsilon = 1e-5);
        }
    }

    #[test]
    fn certificates() {
        // interior bump: certified
        assert!(TestFunctionSpec::bump(vec![1.0], vec![0.5])
            .unwrap()
            .boundary_certificate(1)
            .is_ok());
        // support touching the face: refused
        assert!(TestFunctionSpec::bump(vec![0.3], vec![0.5])
            .unwrap()
            .boundary_certificate(1)
            .is_err());
        assert!(TestFunctionSpec::coordinate_linear(0)
            .boundary_certificate(1)
            .is_ok());
        assert!(TestFunctionSpec::indicator(vec![0.0], vec![1.0])
            .unwrap()
            .boundary_certificate(1)
            .is_err());
    }

    #[test]
    fn lp_norms() {
        let ind = TestFunctionSpec::indicator(vec![0.0, 0.0], vec![0.5, 2.0]).unwrap();
        assert_relative_eq!(ind.lp_norm_lebesgue(2.0).unwrap(), 1.0, max_relative = 1e-12);
        // bump norm scales like width^{1/p}
        let b1 = TestFunctionSpec::bump(vec![1.0], vec![0.5]).unwrap();
        let b2 = TestFunctionSpec::bump(vec![1.0], vec![1.0]).unwrap();
        let r = b2.lp_norm_lebesgue(2.0).unwrap() / b1.lp_norm_lebesgue(2.0).unwrap();
        assert_relative_eq!(r, 2.0f64.sqrt(), max_relative = 1e-9);
        assert!(TestFunctionSpec::coordinate_linear(0)
            .lp_norm_lebesgue(2.0)
            .is_err());
    }
}
