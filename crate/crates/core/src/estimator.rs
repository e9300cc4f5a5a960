//! Recovery of the √T coefficient from finite-T data.
//!
//! A(T) = E[U] − (r/n)·T is collected on a T grid from either the exact
//! engine or the simulator, then fit by least squares against
//! c·√T + b. The intercept is a pragmatic finite-T bias absorber: the
//! expansion only promises o(√T) below the leading term, but a bounded
//! correction is what the data shows, and fitting it sharpens small-T
//! estimates considerably.

use num_traits::ToPrimitive;

use crate::montecarlo::{sample_batch, SimConfig};
use crate::occupancy::ExactDistribution;
use crate::{Error, Params, Rational};

/// Which engine produced the A data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::MonteCarlo => "montecarlo",
        })
    }
}

/// One grid point: A(T), with a standard error when estimated.
#[derive(Debug, Clone, Copy)]
pub struct APoint {
    pub t: u32,
    pub a: f64,
    pub std_error: Option<f64>,
}

/// Fit of A(T) against c·√T + b.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Params,
    pub c_hat: f64,
    pub intercept: f64,
    pub t_grid: Vec<u32>,
    pub residual_rms: f64,
    pub backend: Backend,
}

impl FitResult {
    /// One-row CSV (with header).
    pub fn render_csv(&self) -> String {
        format!(
            "n,r,backend,c_hat,intercept,residual_rms,t_min,t_max,grid_len\n{},{},{},{:.12e},{:.12e},{:.3e},{},{},{}\n",
            self.params.n(),
            self.params.r(),
            self.backend,
            self.c_hat,
            self.intercept,
            self.residual_rms,
            self.t_grid.first().unwrap(),
            self.t_grid.last().unwrap(),
            self.t_grid.len()
        )
    }

    pub fn render_text(&self) -> String {
        format!(
            "fit for {} over T in {:?} ({} backend):\n  c_hat        = {:.9}\n  intercept    = {:.9}\n  residual rms = {:.3e}\n",
            self.params, self.t_grid, self.backend, self.c_hat, self.intercept, self.residual_rms
        )
    }
}

fn validate_grid(t_grid: &[u32]) -> Result<(), Error> {
    if t_grid.len() < 3 {
        return Err(Error::InvalidParams(
            "T grid needs at least 3 points".into(),
        ));
    }
    if !t_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParams(
            "T grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Default geometric grid {start, 2·start, ..., start·2^(len-1)}.
pub fn geometric_grid(start: u32, len: usize) -> Vec<u32> {
    (0..len).map(|i| start << i).collect()
}

/// Exact A(T) on a grid, stepping the DP once up to the largest T.
pub fn collect_a_exact(params: Params, t_grid: &[u32]) -> Result<Vec<(u32, Rational)>, Error> {
    validate_grid(t_grid)?;
    let mut out = Vec::with_capacity(t_grid.len());
    let mut dist = ExactDistribution::initial(params);
    let mut next_idx = 0usize;
    let t_max = *t_grid.last().unwrap();
    for t in 0..=t_max {
        if next_idx < t_grid.len() && t_grid[next_idx] == t {
            let a = dist.max_expectation()
                - params.drift() * Rational::from(num_bigint::BigInt::from(t));
            out.push((t, a));
            next_idx += 1;
        }
        if t < t_max {
            dist = dist.step()?;
        }
    }
    Ok(out)
}

/// Monte Carlo A(T) on a grid with standard errors. Each grid point uses
/// the batch seed offset by its grid position so points are independent.
pub fn collect_a_montecarlo(
    params: Params,
    t_grid: &[u32],
    replicates: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<APoint>, Error> {
    validate_grid(t_grid)?;
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cfg = SimConfig {
                params,
                rounds: t,
                replicates,
                seed: seed.wrapping_add(i as u64),
                workers,
            };
            let batch = sample_batch(&cfg)?;
            let sqrt_t = f64::from(t).sqrt();
            Ok(APoint {
                t,
                a: batch.mean() * sqrt_t,
                std_error: Some(batch.std_error() * sqrt_t),
            })
        })
        .collect()
}

/// A(T) on a grid by the requested backend.
pub fn collect_a(
    params: Params,
    t_grid: &[u32],
    backend: Backend,
    sim: Option<(u64, u64, usize)>, // (replicates, seed, workers)
) -> Result<Vec<APoint>, Error> {
    match backend {
        Backend::Exact => Ok(collect_a_exact(params, t_grid)?
            .into_iter()
            .map(|(t, a)| APoint {
                t,
                a: a.to_f64().unwrap(),
                std_error: None,
            })
            .collect()),
        Backend::MonteCarlo => {
            let (replicates, seed, workers) = sim.ok_or_else(|| {
                Error::InvalidParams("montecarlo backend needs simulation settings".into())
            })?;
            collect_a_montecarlo(params, t_grid, replicates, seed, workers)
        }
    }
}

/// Least squares of A against c·√T + b, weighted by inverse variance
/// when standard errors are present on every point.
pub fn fit_cnr(params: Params, backend: Backend, points: &[APoint]) -> Result<FitResult, Error> {
    if points.len() < 3 {
        return Err(Error::InvalidParams("fit needs at least 3 points".into()));
    }
    let t_grid: Vec<u32> = points.iter().map(|p| p.t).collect();
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "fit needs strictly increasing distinct T values".into(),
        ));
    }
    let weighted = points.iter().all(|p| p.std_error.is_some());
    // normal equations for the 2-parameter model [sqrt(T), 1]
    let (mut sww, mut swx, mut sxx, mut swy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let x = f64::from(p.t).sqrt();
        let w = if weighted {
            let se = p.std_error.unwrap();
            if se > 0.0 {
                1.0 / (se * se)
            } else {
                1.0
            }
        } else {
            1.0
        };
        sww += w;
        swx += w * x;
        sxx += w * x * x;
        swy += w * p.a;
        sxy += w * x * p.a;
    }
    let det = sxx * sww - swx * swx;
    if det.abs() < 1e-30 {
        return Err(Error::InvalidParams("degenerate design matrix".into()));
    }
    let c_hat = (sxy * sww - swy * swx) / det;
    let intercept = (sxx * swy - swx * sxy) / det;
    let ss: f64 = points
        .iter()
        .map(|p| {
            let r = p.a - (c_hat * f64::from(p.t).sqrt() + intercept);
            r * r
        })
        .sum();
    Ok(FitResult {
        params,
        c_hat,
        intercept,
        t_grid,
        residual_rms: (ss / points.len() as f64).sqrt(),
        backend,
    })
}

/// Convenience: collect then fit.
pub fn estimate_cnr(
    params: Params,
    t_grid: &[u32],
    backend: Backend,
    sim: Option<(u64, u64, usize)>,
) -> Result<FitResult, Error> {
    let points = collect_a(params, t_grid, backend, sim)?;
    fit_cnr(params, backend, &points)
}
