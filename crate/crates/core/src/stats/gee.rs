//! Gaussian, identity-link GEE with an exchangeable working correlation.
//!
//! For a cluster of size `m` the exchangeable inverse is `a I - c J` with
//! `a = 1 / (1 - rho)` and `c = rho / ((1 - rho)(1 + (m - 1) rho))`, so every
//! quantity the iteration needs is a combination of per-cluster sums
//! (`X'X`, `X'1`, `X'y`, `1'y`, `y'y`) computed once up front.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::{spd_inverse, to_rows};
use super::panel::StepPanel;
use super::{normal_p_value, StatsError};
use crate::baseline::WEAR_THRESHOLD;
use crate::domain::Arm;

pub const TABLE6_COVARIATES: [&str; 8] =
    ["(Intercept)", "Random", "Fixed", "RL", "day", "Random x day", "Fixed x day", "RL x day"];

#[derive(Debug, Clone, PartialEq)]
pub struct GeeCluster {
    /// Row-major, `y.len()` rows by `p` columns.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeeData {
    pub names: Vec<String>,
    pub clusters: Vec<GeeCluster>,
}

impl GeeData {
    pub fn n_obs(&self) -> usize {
        self.clusters.iter().map(|c| c.y.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeeOptions {
    /// Hold the working correlation at this value instead of estimating it.
    pub fixed_rho: Option<f64>,
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute coefficient change.
    pub tol: f64,
}

impl Default for GeeOptions {
    fn default() -> Self {
        GeeOptions { fixed_rho: None, max_iter: 100, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeeResult {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Robust (sandwich) standard errors.
    pub se: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub p: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub rho: f64,
    pub scale: f64,
    pub iterations: usize,
    pub n_clusters: usize,
    pub n_obs: usize,
}

struct Suff {
    m: f64,
    xx: DMatrix<f64>,
    x1: DVector<f64>,
    xy: DVector<f64>,
    y1: f64,
    yy: f64,
}

impl Suff {
    fn new(c: &GeeCluster, p: usize) -> Self {
        let m = c.y.len();
        let x = DMatrix::from_row_slice(m, p, &c.x);
        let y = DVector::from_column_slice(&c.y);
        Suff {
            m: m as f64,
            xx: x.transpose() * &x,
            x1: x.row_sum().transpose(),
            xy: x.transpose() * &y,
            y1: y.sum(),
            yy: y.dot(&y),
        }
    }

    fn weights(&self, rho: f64) -> (f64, f64) {
        let a = 1.0 / (1.0 - rho);
        let c = rho / ((1.0 - rho) * (1.0 + (self.m - 1.0) * rho));
        (a, c)
    }

    /// Residual sum of squares and residual sum at `beta`.
    fn residuals(&self, beta: &DVector<f64>) -> (f64, f64) {
        let ssr = self.yy - 2.0 * beta.dot(&self.xy) + beta.dot(&(&self.xx * beta));
        (ssr.max(0.0), self.y1 - self.x1.dot(beta))
    }

    /// `X' R^-1 X` and `X' R^-1 y` contributions.
    fn gls(&self, rho: f64) -> (DMatrix<f64>, DVector<f64>) {
        let (a, c) = self.weights(rho);
        (&self.xx * a - &self.x1 * self.x1.transpose() * c, &self.xy * a - &self.x1 * (c * self.y1))
    }

    /// Estimating-equation score `X' R^-1 e` at `beta`.
    fn score(&self, beta: &DVector<f64>, rho: f64) -> DVector<f64> {
        let (a, c) = self.weights(rho);
        let xe = &self.xy - &self.xx * beta;
        let e1 = self.y1 - self.x1.dot(beta);
        xe * a - &self.x1 * (c * e1)
    }
}

fn solve(suff: &[Suff], p: usize, rho: f64) -> Result<(DVector<f64>, DMatrix<f64>), StatsError> {
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for s in suff {
        let (ai, bi) = s.gls(rho);
        a += ai;
        b += bi;
    }
    let inv = spd_inverse(&a)?;
    Ok((&inv * b, inv))
}

/// Fits the marginal model by alternating a GLS coefficient update with a
/// moment update of the correlation, then forms robust sandwich SEs.
///
/// The moment estimates follow the usual degrees-of-freedom convention:
/// `scale = SSR / (N - p)` and `rho = sum_{j<k} e_j e_k / (scale (pairs - p))`.
/// `rho` is kept inside the range where every cluster's working correlation
/// is positive definite.
pub fn gee_fit(data: &GeeData, opts: &GeeOptions) -> Result<GeeResult, StatsError> {
    let p = data.names.len();
    let clusters: Vec<&GeeCluster> = data.clusters.iter().filter(|c| !c.y.is_empty()).collect();
    if clusters.len() < 2 {
        return Err(StatsError::DegenerateDesign(format!("{} clusters", clusters.len())));
    }
    for c in &clusters {
        if c.x.len() != c.y.len() * p {
            return Err(StatsError::DegenerateDesign("cluster design has the wrong width".into()));
        }
    }
    let suff: Vec<Suff> = clusters.iter().map(|c| Suff::new(c, p)).collect();
    let n_obs: usize = clusters.iter().map(|c| c.y.len()).sum();
    let max_m = clusters.iter().map(|c| c.y.len()).max().unwrap_or(1);
    let pairs: f64 = suff.iter().map(|s| 0.5 * s.m * (s.m - 1.0)).sum();
    let rho_lo = if max_m > 1 { -1.0 / (max_m as f64 - 1.0) } else { -1.0 };
    let clamp = |r: f64| r.clamp(rho_lo + 1e-9, 1.0 - 1e-9);

    let moments = |beta: &DVector<f64>| -> (f64, f64) {
        let (mut ssr, mut cross) = (0.0, 0.0);
        for s in &suff {
            let (q, e1) = s.residuals(beta);
            ssr += q;
            cross += 0.5 * (e1 * e1 - q);
        }
        let dof = (n_obs as f64 - p as f64).max(1.0);
        let scale = ssr / dof;
        let rho = if pairs - p as f64 > 0.0 && scale > 0.0 { cross / (scale * (pairs - p as f64)) } else { 0.0 };
        (scale, rho)
    };

    let (mut beta, _) = solve(&suff, p, 0.0)?;
    let mut rho = opts.fixed_rho.map_or(0.0, clamp);
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        if opts.fixed_rho.is_none() {
            rho = clamp(moments(&beta).1);
        }
        let (next, _) = solve(&suff, p, rho)?;
        change = (&next - &beta).amax();
        beta = next;
        if change < opts.tol {
            break;
        }
    }
    if !(change < opts.tol) {
        return Err(StatsError::NoConvergence { iterations, last_change: change });
    }

    let (_, bread) = solve(&suff, p, rho)?;
    let mut meat = DMatrix::zeros(p, p);
    for s in &suff {
        let u = s.score(&beta, rho);
        meat += &u * u.transpose();
    }
    let cov = &bread * meat * &bread;
    let se: Vec<f64> = (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let estimates: Vec<f64> = beta.iter().copied().collect();
    Ok(GeeResult {
        names: data.names.clone(),
        ci_low: estimates.iter().zip(&se).map(|(b, s)| b - 1.96 * s).collect(),
        ci_high: estimates.iter().zip(&se).map(|(b, s)| b + 1.96 * s).collect(),
        p: estimates.iter().zip(&se).map(|(b, s)| normal_p_value(b / s)).collect(),
        covariance: to_rows(&cov),
        scale: moments(&beta).0,
        estimates,
        se,
        rho,
        iterations,
        n_clusters: clusters.len(),
        n_obs,
    })
}

/// Design for the arm-by-time model: one row per participant wear day in
/// the study period, with arm dummies against Control, study day, and
/// arm-by-day interactions. Arms absent from the panel lose their columns.
pub fn table6_design(panel: &StepPanel) -> Result<GeeData, StatsError> {
    let present = panel.arms();
    if !present.contains(&Arm::Control) {
        return Err(StatsError::DegenerateDesign("the time model needs a Control arm".into()));
    }
    let treated: Vec<Arm> = [Arm::Random, Arm::Fixed, Arm::Rl].into_iter().filter(|a| present.contains(a)).collect();
    if treated.is_empty() {
        return Err(StatsError::DegenerateDesign("the time model needs a treated arm".into()));
    }
    let mut names = vec![TABLE6_COVARIATES[0].to_string()];
    names.extend(treated.iter().map(|a| a.to_string()));
    names.push(TABLE6_COVARIATES[4].to_string());
    names.extend(treated.iter().map(|a| format!("{a} x day")));
    let p = names.len();

    let clusters = panel
        .participants
        .iter()
        .map(|s| {
            let mut c = GeeCluster { x: Vec::new(), y: Vec::new() };
            for r in s.records.iter().filter(|r| r.day >= 1 && r.total_steps() >= WEAR_THRESHOLD) {
                let day = f64::from(r.day);
                let mut row = Vec::with_capacity(p);
                row.push(1.0);
                row.extend(treated.iter().map(|a| if *a == s.arm { 1.0 } else { 0.0 }));
                row.push(day);
                row.extend(treated.iter().map(|a| if *a == s.arm { day } else { 0.0 }));
                c.x.extend(row);
                c.y.push(f64::from(r.total_steps()));
            }
            c
        })
        .filter(|c| !c.y.is_empty())
        .collect();
    Ok(GeeData { names, clusters })
}
