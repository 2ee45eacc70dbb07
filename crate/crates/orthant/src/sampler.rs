//! Exact (distribution-faithful) sampling of the canonical degenerate
//! process `Z` with generator `x^alpha f''` and reflection at 0.
//!
//! One transition is drawn through the squared-Bessel reduction: with
//! `y0 = phi(x0)` the process `Y = phi(Z)` is a reflected Bessel process of
//! order `delta in (0,1)`, and `R = Y^2` is a squared Bessel process whose
//! transition is the Poisson-mixed gamma law
//!
//! ```text
//! R_t | R_0 = r  ~  2t Gamma(N + delta/2),   N ~ Poisson(r / 2t).
//! ```
//!
//! The mixture is valid for every `delta > 0`; for `delta < 2` the origin is
//! automatically reflecting, matching the zero-time-at-the-boundary
//! normalization. Paths are produced by Markov chaining of the one-step law,
//! one derived random stream per path, so batches are reproducible
//! regardless of scheduling order.

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::rng::RandomStream;
use crate::sde::{ModelSpec, SchemeConfig};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use std::sync::Arc;

/// Where a path came from: scheme tag, model digest, and the random stream
/// that generated it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scheme: String,
    pub model_digest: u64,
    pub stream: RandomStream,
}

impl Provenance {
    pub fn new(scheme: impl Into<String>, model_digest: u64, stream: RandomStream) -> Self {
        Provenance {
            scheme: scheme.into(),
            model_digest,
            stream,
        }
    }
}

/// One simulated trajectory on a time grid, states stored row-major
/// (time x coordinate). Exact paths carry no local-time accumulator
/// (`local_time = None`); Euler paths record the cumulative projection
/// deficit per coordinate.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub times: Arc<Vec<f64>>,
    pub d: usize,
    pub states: Vec<f64>,
    pub local_time: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl PathSample {
    #[inline]
    pub fn state(&self, k: usize, i: usize) -> f64 {
        self.states[k * self.d + i]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.states[(self.times.len() - 1) * self.d..]
    }

    /// Values of one coordinate along the grid.
    pub fn coord(&self, i: usize) -> Vec<f64> {
        (0..self.times.len()).map(|k| self.state(k, i)).collect()
    }
}

/// One exact draw of the squared Bessel process of order `delta` over
/// horizon `t`, started at `z0 >= 0`.
pub fn sample_besq<R: Rng + ?Sized>(delta: f64, t: f64, z0: f64, rng: &mut R) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(Error::domain(format!(
            "sample_besq: delta must lie in (0,2), got {delta}"
        )));
    }
    if !(t > 0.0) || !(z0 >= 0.0) {
        return Err(Error::domain(format!(
            "sample_besq: need t > 0 and z0 >= 0 (t={t}, z0={z0})"
        )));
    }
    let lambda = z0 / (2.0 * t);
    let n = if lambda > 0.0 {
        let draw: f64 = Poisson::new(lambda)
            .map_err(|e| Error::domain(format!("poisson: {e}")))?
            .sample(rng);
        draw
    } else {
        0.0
    };
    let shape = n + 0.5 * delta;
    let g: f64 = Gamma::new(shape, 1.0)
        .map_err(|e| Error::domain(format!("gamma: {e}")))?
        .sample(rng);
    Ok(2.0 * t * g)
}

/// One exact draw from the transition law `p_Z(t, x0, .)` of the canonical
/// degenerate process: squared-Bessel step in the `phi` coordinates, then
/// the inverse power map `z = (b sqrt2 y)^{1/b}`.
pub fn sample_z<R: Rng + ?Sized>(
    params: &KernelParams,
    t: f64,
    x0: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("sample_z: x0 must be >= 0, got {x0}")));
    }
    let y0 = params.phi(x0);
    let r = sample_besq(params.delta, t, y0 * y0, rng)?;
    Ok(params.phi_inv(r.sqrt()))
}

/// Convenience wrappers taking a [`RandomStream`] by value.
pub fn sample_besq_stream(delta: f64, t: f64, z0: f64, stream: RandomStream) -> Result<f64> {
    sample_besq(delta, t, z0, &mut stream.rng())
}

pub fn sample_z_stream(params: &KernelParams, t: f64, x0: f64, stream: RandomStream) -> Result<f64> {
    sample_z(params, t, x0, &mut stream.rng())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(
            "times must increase strictly from 0".to_string(),
        ));
    }
    Ok(())
}

/// Exact path on a grid by Markov chaining of [`sample_z`]; the
/// finite-dimensional distributions on the grid are exact. On a one-step
/// grid this reproduces `sample_z` draw for draw from the same stream.
pub fn sample_path_exact(
    params: &KernelParams,
    times: &[f64],
    x0: f64,
    stream: RandomStream,
) -> Result<PathSample> {
    check_times(times)?;
    if !(x0 >= 0.0) {
        return Err(Error::domain(format!("sample_path_exact: x0 must be >= 0, got {x0}")));
    }
    let mut rng = stream.rng();
    let mut states = Vec::with_capacity(times.len());
    states.push(x0);
    let mut x = x0;
    for w in times.windows(2) {
        x = sample_z(params, w[1] - w[0], x, &mut rng)?;
        states.push(x);
    }
    Ok(PathSample {
        times: Arc::new(times.to_vec()),
        d: 1,
        states,
        local_time: None,
        provenance: Provenance::new(
            format!("exact(alpha={})", params.alpha),
            params.alpha.to_bits(),
            stream,
        ),
    })
}

/// How a batch generates its paths.
#[derive(Debug, Clone)]
pub enum Generator {
    Exact { params: KernelParams, x0: f64 },
    Euler {
        model: Arc<ModelSpec>,
        x0: Vec<f64>,
        record_local_time: bool,
    },
}

/// A lazy, reproducible ensemble of paths: path `i` is generated on demand
/// from the stream derived with index `i`, so folds are independent of
/// scheduling, mergeable in path-index order, and never hold more than a few
/// paths in memory.
#[derive(Debug, Clone)]
pub struct PathBatch {
    times: Arc<Vec<f64>>,
    pub generator: Generator,
    n_paths: u64,
    stream: RandomStream,
}

/// Paths per sequential work unit in parallel folds. Partial results are
/// merged in chunk order, which keeps float accumulation deterministic.
const FOLD_CHUNK: u64 = 64;

impl PathBatch {
    pub fn exact(
        params: &KernelParams,
        times: Vec<f64>,
        x0: f64,
        n_paths: u64,
        stream: RandomStream,
    ) -> Result<Self> {
        check_times(&times)?;
        if n_paths < 1 {
            return Err(Error::input("path batch: n_paths must be >= 1".to_string()));
        }
        Ok(PathBatch {
            times: Arc::new(times),
            generator: Generator::Exact {
                params: *params,
                x0,
            },
            n_paths,
            stream,
        })
    }

    pub fn euler(
        model: Arc<ModelSpec>,
        x0: Vec<f64>,
        cfg: &SchemeConfig,
        stream: RandomStream,
    ) -> Result<Self> {
        if x0.len() != model.dimension() {
            return Err(Error::input("path batch: x0 dimension mismatch".to_string()));
        }
        if x0.iter().any(|&v| v < 0.0) {
            return Err(Error::input(
                "path batch: x0 must lie in the closed orthant".to_string(),
            ));
        }
        Ok(PathBatch {
            times: Arc::new(cfg.times()),
            generator: Generator::Euler {
                model,
                x0,
                record_local_time: cfg.record_local_time,
            },
            n_paths: cfg.n_paths,
            stream,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn n_paths(&self) -> u64 {
        self.n_paths
    }

    pub fn stream(&self) -> RandomStream {
        self.stream
    }

    pub fn dimension(&self) -> usize {
        match &self.generator {
            Generator::Exact { .. } => 1,
            Generator::Euler { x0, .. } => x0.len(),
        }
    }

    /// Degeneracy exponents of the generating model, per coordinate.
    pub fn alphas(&self) -> Vec<f64> {
        match &self.generator {
            Generator::Exact { params, .. } => vec![params.alpha],
            Generator::Euler { model, .. } => model.alphas.clone(),
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match &self.generator {
            Generator::Exact { x0, .. } => vec![*x0],
            Generator::Euler { x0, .. } => x0.clone(),
        }
    }

    pub fn scheme_label(&self) -> String {
        match &self.generator {
            Generator::Exact { params, x0 } => {
                format!("exact(alpha={}, x0={x0})", params.alpha)
            }
            Generator::Euler { model, x0, .. } => format!(
                "euler(d={}, eps={}, dt={}, x0={x0:?})",
                model.dimension(),
                model.epsilon,
                self.dt()
            ),
        }
    }

    /// Generate path `idx` (0-based). Identical calls return bit-identical
    /// paths.
    pub fn generate(&self, idx: u64) -> Result<PathSample> {
        let stream = self.stream.derive(0, idx);
        match &self.generator {
            Generator::Exact { params, x0 } => sample_path_exact(params, &self.times, *x0, stream),
            Generator::Euler {
                model,
                x0,
                record_local_time,
            } => crate::sde::euler_path(
                model,
                x0,
                &self.times,
                *record_local_time,
                &mut stream.rng(),
                Provenance::new(self.scheme_label(), model.digest(), stream),
            ),
        }
    }

    /// Parallel fold over all paths with a deterministic merge order:
    /// fixed-size chunks are folded sequentially and merged in chunk order.
    pub fn fold<T, F, M>(&self, init: T, f: F, merge: M) -> Result<T>
    where
        T: Clone + Send + Sync,
        F: Fn(T, &PathSample) -> T + Sync + Send,
        M: Fn(T, T) -> T,
    {
        let starts: Vec<u64> = (0..self.n_paths).step_by(FOLD_CHUNK as usize).collect();
        let partials: Result<Vec<T>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = init.clone();
                for idx in s..(s + FOLD_CHUNK).min(self.n_paths) {
                    let p = self.generate(idx)?;
                    acc = f(acc, &p);
                }
                Ok(acc)
            })
            .collect();
        let mut it = partials?.into_iter();
        let first = it.next().expect("at least one chunk");
        Ok(it.fold(first, merge))
    }

    /// Like [`Self::fold`] but the step may fail (e.g. a model-contract
    /// check along the path); the first error wins.
    pub fn try_fold<T, F, M>(&self, init: T, f: F, merge: M) -> Result<T>
    where
        T: Clone + Send + Sync,
        F: Fn(T, &PathSample) -> Result<T> + Sync + Send,
        M: Fn(T, T) -> T,
    {
        let starts: Vec<u64> = (0..self.n_paths).step_by(FOLD_CHUNK as usize).collect();
        let partials: Result<Vec<T>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = init.clone();
                for idx in s..(s + FOLD_CHUNK).min(self.n_paths) {
                    let p = self.generate(idx)?;
                    acc = f(acc, &p)?;
                }
                Ok(acc)
            })
            .collect();
        let mut it = partials?.into_iter();
        let first = it.next().expect("at least one chunk");
        Ok(it.fold(first, merge))
    }

    /// Materialize every path. Only sensible for small ensembles.
    pub fn collect(&self) -> Result<Vec<PathSample>> {
        self.fold(
            Vec::new(),
            |mut acc, p| {
                acc.push(p.clone());
                acc
            },
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )
    }

    /// Terminal values of coordinate `i`, in path order.
    pub fn terminal_coord(&self, i: usize) -> Result<Vec<f64>> {
        self.fold(
            Vec::new(),
            |mut acc, p| {
                acc.push(p.terminal()[i]);
                acc
            },
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_params, TransitionCdf};
    use crate::quad;
    use crate::stats;
    use approx::assert_relative_eq;

    #[test]
    fn besq_domain_checks() {
        let mut rng = RandomStream::root(1).rng();
        assert!(sample_besq(0.0, 1.0, 1.0, &mut rng).is_err());
        assert!(sample_besq(2.0, 1.0, 1.0, &mut rng).is_err());
        assert!(sample_besq(0.5, 0.0, 1.0, &mut rng).is_err());
        assert!(sample_besq(0.5, 1.0, -1.0, &mut rng).is_err());
        assert!(sample_besq(1.9, 1.0, 1.0, &mut rng).is_ok());
    }

    #[test]
    fn besq_mean_from_zero_is_t_delta() {
        // X_t | X_0 = 0 is 2t Gamma(delta/2): mean t*delta. 1e6 draws.
        let (delta, t) = (2.0 / 3.0, 0.7);
        let mut rng = RandomStream::root(11).rng();
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = sample_besq(delta, t, 0.0, &mut rng).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let want = t * delta;
        assert!(
            (mean - want).abs() <= 3.0 * se,
            "mean {mean} vs {want} (se {se})"
        );
    }

    #[test]
    fn besq_concentrates_at_short_horizon() {
        let mut rng = RandomStream::root(3).rng();
        let mut vals = Vec::with_capacity(20_000);
        for _ in 0..20_000 {
            vals.push(sample_besq(0.5, 1e-6, 4.0, &mut rng).unwrap());
        }
        let (mean, _) = stats::mean_and_se(&vals);
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!((mean - 4.0).abs() < 0.01, "mean {mean}");
        assert!(var < 1e-4, "var {var}");
    }

    #[test]
    fn besq_ks_against_squared_density() {
        // KS of 1e5 draws against the CDF obtained by quadrature of the
        // squared-process density p_R(t,z0,r) = p_Y(t, sqrt z0, sqrt r)/(2 sqrt r).
        let (delta, t, z0) = (2.0 / 3.0, 1.0, 1.0);
        let n = 100_000u64;
        let mut rng = RandomStream::root(2024).rng();
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_besq(delta, t, z0, &mut rng).unwrap())
            .collect();

        // CDF table on a graded r-grid (oracle code local to this test).
        let y0 = z0.sqrt();
        let r_hi = (y0 + 9.5 * t.sqrt()).powi(2);
        let p_r = |r: f64| crate::kernel::density_y_unchecked(delta, t, y0, r.sqrt()) / (2.0 * r.sqrt());
        let m = 3000usize;
        let grade = 2.0 / delta; // absorbs the r^{delta/2-1} entrance behavior
        let nodes: Vec<f64> = (0..=m)
            .map(|j| r_hi * ((j as f64) / m as f64).powf(grade))
            .collect();
        let mut cdf = vec![0.0; m + 1];
        for j in 1..=m {
            let inc = if j == 1 {
                quad::integrate_power0(p_r, nodes[1], quad::absorbing_exponent(0.5 * delta - 1.0), 1e-9, 1e-12)
                    .unwrap()
                    .value
            } else {
                quad::qk15(&p_r, nodes[j - 1], nodes[j]).value
            };
            cdf[j] = cdf[j - 1] + inc;
        }
        assert!((cdf[m] - 1.0).abs() < 1e-7, "oracle mass {}", cdf[m]);
        let eval = |r: f64| -> f64 {
            if r <= 0.0 {
                return 0.0;
            }
            if r >= r_hi {
                return 1.0;
            }
            let j = nodes.partition_point(|&v| v < r);
            let w = (r - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
            cdf[j - 1] * (1.0 - w) + cdf[j] * w
        };

        let d = stats::ks_statistic(&draws, eval);
        let crit = stats::ks_critical_one_sample(0.01, draws.len()).unwrap();
        assert!(d < crit, "KS {d} vs critical {crit}");
    }

    #[test]
    fn z_exactness_ks_from_boundary() {
        let params = kernel_params(0.5).unwrap();
        let n = 100_000u64;
        let mut rng = RandomStream::root(7).rng();
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_z(&params, 1.0, 0.0, &mut rng).unwrap())
            .collect();
        let cdf = TransitionCdf::build(&params, 1.0, 0.0, 3000).unwrap();
        let d = stats::ks_statistic(&draws, |q| cdf.eval(q));
        let crit = stats::ks_critical_one_sample(0.01, draws.len()).unwrap();
        assert!(d < crit, "KS {d} vs critical {crit}");
    }

    #[test]
    fn z_mean_from_zero_closed_form() {
        // E[Z_1 | Z_0 = 0] = (b sqrt2)^{1/b} (2)^{1/(2b)} Gamma(delta/2 + 1/(2b)) / Gamma(delta/2)
        // = 0.6409521314445975 for alpha = 0.5.
        let params = kernel_params(0.5).unwrap();
        let mut rng = RandomStream::root(8).rng();
        let n = 200_000u64;
        let vals: Vec<f64> = (0..n)
            .map(|_| sample_z(&params, 1.0, 0.0, &mut rng).unwrap())
            .collect();
        let (mean, se) = stats::mean_and_se(&vals);
        assert!(
            (mean - 0.640_952_131_444_597_5).abs() <= 3.0 * se,
            "mean {mean} (se {se})"
        );
    }

    #[test]
    fn z_short_horizon_continuity() {
        let params = kernel_params(0.5).unwrap();
        let mut rng = RandomStream::root(5).rng();
        for _ in 0..200 {
            let v = sample_z(&params, 1e-9, 1.3, &mut rng).unwrap();
            assert!((v - 1.3).abs() < 0.02, "draw {v}");
        }
    }

    #[test]
    fn z_scaling_law_in_distribution() {
        // Z_t from x0 equals in law t^{1/(2b)} Z_1 from x0 t^{-1/(2b)}.
        let params = kernel_params(0.5).unwrap();
        let (t, x0) = (0.25, 1.0);
        let s = params.scale(t); // t^{-1/(2b)}
        let n = 30_000;
        let mut rng_a = RandomStream::root(100).rng();
        let mut rng_b = RandomStream::root(200).rng();
        let a: Vec<f64> = (0..n)
            .map(|_| sample_z(&params, t, x0, &mut rng_a).unwrap())
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|_| sample_z(&params, 1.0, x0 * s, &mut rng_b).unwrap() / s)
            .collect();
        let d = stats::ks_two_sample(&a, &b);
        let crit = stats::ks_critical_two_sample(0.01, n, n).unwrap();
        assert!(d < crit, "two-sample KS {d} vs {crit}");
    }

    #[test]
    fn one_step_path_reproduces_sample_z() {
        let params = kernel_params(0.5).unwrap();
        let stream = RandomStream::root(77).derive(0, 4);
        let p = sample_path_exact(&params, &[0.0, 0.8], 1.2, stream).unwrap();
        let direct = sample_z_stream(&params, 0.8, 1.2, stream).unwrap();
        assert_eq!(p.states[1].to_bits(), direct.to_bits());
    }

    #[test]
    fn two_step_terminal_matches_one_step_law() {
        let params = kernel_params(0.5).unwrap();
        let n = 30_000u64;
        let root = RandomStream::root(31);
        let two: Vec<f64> = (0..n)
            .map(|i| {
                sample_path_exact(&params, &[0.0, 0.5, 1.0], 1.0, root.derive(1, i))
                    .unwrap()
                    .states[2]
            })
            .collect();
        let one: Vec<f64> = (0..n)
            .map(|i| sample_z_stream(&params, 1.0, 1.0, root.derive(2, i)).unwrap())
            .collect();
        let d = stats::ks_two_sample(&two, &one);
        let crit = stats::ks_critical_two_sample(0.01, two.len(), one.len()).unwrap();
        assert!(d < crit, "KS {d} vs {crit}");
    }

    #[test]
    fn batch_reproducible_and_nonnegative() {
        let params = kernel_params(0.3).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| 0.05 * k as f64).collect();
        let batch = PathBatch::exact(&params, times, 0.5, 64, RandomStream::root(9)).unwrap();
        let a = batch.generate(17).unwrap();
        let b = batch.generate(17).unwrap();
        assert_eq!(a.states, b.states);
        assert!(a.states.iter().all(|&v| v >= 0.0));

        // chunked parallel fold equals the sequential fold, bit for bit
        let folded = batch
            .fold(0.0f64, |acc, p| acc + p.terminal()[0], |x, y| x + y)
            .unwrap();
        let mut seq = 0.0;
        for i in 0..batch.n_paths() {
            seq += batch.generate(i).unwrap().terminal()[0];
        }
        assert_eq!(folded.to_bits(), seq.to_bits());
    }

    #[test]
    fn markov_conditional_means_match_kernel() {
        // E[Z_{t2} | Z_{t1} in bin] should match the kernel mean
        // m(z) = int y p_Z(t2-t1, z, y) dy averaged over the same bin.
        let params = kernel_params(0.5).unwrap();
        let n = 8_000u64;
        let root = RandomStream::root(55);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let p = sample_path_exact(&params, &[0.0, 0.5, 1.0], 1.0, root.derive(0, i)).unwrap();
                (p.states[1], p.states[2])
            })
            .collect();
        let mut z1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        z1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let edges = [z1[(n / 4) as usize], z1[(n / 2) as usize], z1[(3 * n / 4) as usize]];
        let bin_of = |z: f64| edges.iter().filter(|&&e| z > e).count();

        let m_of = |z: f64| -> f64 {
            let hi = params.y_cutoff(0.5, z.max(1.0));
            let f = |y: f64| y * crate::kernel::density_z_unchecked(&params, 0.5, z, y);
            let head = quad::integrate_power0(f, 0.05, quad::absorbing_exponent(2.0 * params.b - 2.0), 1e-8, 1e-10)
                .unwrap()
                .value;
            head + quad::integrate(f, 0.05, hi, 1e-8, 1e-10).unwrap().value
        };

        for b in 0..4 {
            let members: Vec<&(f64, f64)> = pairs.iter().filter(|p| bin_of(p.0) == b).collect();
            let ys: Vec<f64> = members.iter().map(|p| p.1).collect();
            let (emp, se) = stats::mean_and_se(&ys);
            let pred =
                members.iter().map(|p| m_of(p.0)).sum::<f64>() / members.len() as f64;
            assert!(
                (emp - pred).abs() <= 3.0 * se,
                "bin {b}: empirical {emp} vs kernel {pred} (se {se})"
            );
        }
    }

    #[test]
    fn path_input_validation() {
        let params = kernel_params(0.5).unwrap();
        let s = RandomStream::root(1);
        assert!(sample_path_exact(&params, &[0.1, 0.2], 1.0, s).is_err());
        assert!(sample_path_exact(&params, &[0.0, 0.2, 0.2], 1.0, s).is_err());
        assert!(sample_path_exact(&params, &[0.0], 1.0, s).is_err());
        assert!(sample_path_exact(&params, &[0.0, 1.0], -1.0, s).is_err());
    }

    #[test]
    fn phi_inverse_consistency_of_draws() {
        // the inverse power map must send the BESQ draw back to Z-scale
        let params = kernel_params(0.5).unwrap();
        let stream = RandomStream::root(4);
        let z = sample_z_stream(&params, 1.0, 1.0, stream).unwrap();
        let mut rng = stream.rng();
        let y0 = params.phi(1.0);
        let r = sample_besq(params.delta, 1.0, y0 * y0, &mut rng).unwrap();
        assert_relative_eq!(z, params.phi_inv(r.sqrt()), max_relative = 1e-12);
    }
}
