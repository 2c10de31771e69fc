//! `L^p`, Calderón `C^p_alpha`, and Besov `B^{p,q}_alpha` norms on a cloud.
//!
//! The Besov seminorm is the dyadic sum
//! `(sum_nu [t_nu^-alpha ||𝓔_k(f, Q(., t_nu))_{L^p}||_{L^p}]^q)^{1/q}` with
//! `k = [alpha] + 1` over the same scale grid the maximal functions use, so
//! each per-scale term is directly comparable to the sharp maximal function.

use serde::Serialize;

use crate::error::{FrakError, Result};
use crate::geometry::dyadic_net_for;
use crate::gridfn::GridFunction;
use crate::maximal::{degree_for_flat, sharp_from_errors, LocalErrors, ScaleGrid, SharpMaximal, Variant};
use crate::measure::WeightedPointCloud;
use crate::polyapprox::{check_exponent, fit_points, local_frame, weighted_lu};

/// `(sum w_i |f_i|^p)^{1/p}`, or `max |f_i|` for `p = inf`.
pub fn lp_norm(cloud: &WeightedPointCloud, f: &GridFunction, p: f64) -> Result<f64> {
    f.check_len(cloud)?;
    if !(p >= 1.0) {
        return Err(FrakError::InvalidParameter(format!("p = {p} below 1")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    Ok(weighted_lu(cloud.weights(), f.values(), p))
}

fn ell_q(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    let terms: Vec<f64> = terms.collect();
    if q.is_infinite() {
        return terms.iter().fold(0.0, |m, &t| m.max(t));
    }
    let ones = vec![1.0; terms.len()];
    weighted_lu(&ones, &terms, q)
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(FrakError::InvalidParameter(format!("q = {q} below 1")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CalderonNorm {
    pub lp: f64,
    pub sharp_lp: f64,
    pub total: f64,
    pub sharp: SharpMaximal,
}

/// `||f||_p + ||f♯_{alpha,u,S}||_p` with the variant's degree rule.
pub fn calderon_norm(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    u: f64,
    variant: Variant,
    grid: &ScaleGrid,
) -> Result<CalderonNorm> {
    if !(p > 1.0) {
        return Err(FrakError::InvalidParameter(format!("Calderón norm needs p > 1, got {p}")));
    }
    let sharp = crate::maximal::sharp_maximal(cloud, f, alpha, u, variant, grid)?;
    calderon_from_sharp(cloud, f, p, sharp)
}

pub fn calderon_from_sharp(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    p: f64,
    sharp: SharpMaximal,
) -> Result<CalderonNorm> {
    let lp = lp_norm(cloud, f, p)?;
    let sharp_lp = lp_norm(cloud, &sharp.values, p)?;
    Ok(CalderonNorm { lp, sharp_lp, total: lp + sharp_lp, sharp })
}

/// One dyadic level of the Besov sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleTerm {
    pub nu: u32,
    pub t: f64,
    /// `||𝓔_k(f, Q(., t))_{L^p(S)}||_{L^p(S)}`.
    pub error_lp: f64,
    /// `t^-alpha * error_lp`.
    pub term: f64,
    /// Points whose cube was not well posed at this scale (counted as 0).
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct BesovNorm {
    pub lp: f64,
    pub seminorm: f64,
    pub total: f64,
    pub per_scale: Vec<ScaleTerm>,
}

impl BesovNorm {
    /// Seminorm of the same profile for another `q`.
    pub fn seminorm_for(&self, q: f64) -> f64 {
        ell_q(self.per_scale.iter().map(|s| s.term), q)
    }
}

/// Local `L^p` errors with `k = [alpha] + 1` on the grid.
pub fn besov_errors(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    grid: &ScaleGrid,
) -> Result<LocalErrors> {
    let k = degree_for_flat(alpha)?;
    check_exponent(p)?;
    LocalErrors::compute(cloud, f, k, p, grid)
}

pub fn besov_from_errors(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    errors: &LocalErrors,
    alpha: f64,
    q: f64,
    grid: &ScaleGrid,
) -> Result<BesovNorm> {
    check_q(q)?;
    let p = errors.u;
    let per_scale: Vec<ScaleTerm> = grid
        .levels()
        .iter()
        .zip(grid.scales())
        .enumerate()
        .map(|(j, (&nu, &t))| {
            let column: Vec<f64> = errors.table.iter().map(|row| row[j].unwrap_or(0.0)).collect();
            let skipped = errors.table.iter().filter(|row| row[j].is_none()).count();
            let error_lp = weighted_lu(cloud.weights(), &column, p);
            ScaleTerm { nu, t, error_lp, term: t.powf(-alpha) * error_lp, skipped }
        })
        .collect();
    let lp = lp_norm(cloud, f, p)?;
    let seminorm = ell_q(per_scale.iter().map(|s| s.term), q);
    Ok(BesovNorm { lp, seminorm, total: lp + seminorm, per_scale })
}

/// Besov norm through local polynomial approximation on the scale grid.
pub fn besov_norm(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    q: f64,
    grid: &ScaleGrid,
) -> Result<BesovNorm> {
    check_q(q)?;
    let errors = besov_errors(cloud, f, alpha, p, grid)?;
    besov_from_errors(cloud, f, &errors, alpha, q, grid)
}

#[derive(Debug, Clone)]
pub struct NetNorm {
    pub seminorm: f64,
    /// `(nu, c_nu)` with `c_nu = 2^{nu alpha} ||f - P_pi f||_{L^p(S)}`.
    pub per_level: Vec<(u32, f64)>,
}

/// Besov seminorm from best piecewise polynomials of degree `[alpha]` on
/// dyadic nets of mesh `2^-nu`.
pub fn besov_net_norm(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    q: f64,
    levels: &[u32],
) -> Result<NetNorm> {
    f.check_len(cloud)?;
    check_exponent(p)?;
    check_q(q)?;
    let k = degree_for_flat(alpha)?;
    let mut per_level = Vec::with_capacity(levels.len());
    for &nu in levels {
        let net = dyadic_net_for(cloud, nu)?;
        let mut residual_sum = 0.0;
        let mut pieces = Vec::new();
        for (cube, group) in net.cubes.iter().zip(net.assign(cloud)) {
            if group.is_empty() {
                continue;
            }
            let fit = fit_points(cloud, &group, &local_frame(cloud, &group, cube), f.values(), k, p);
            pieces.push(fit.error);
        }
        // ||f - P_pi f||_p^p is the sum of the per-cube p-th powers
        let emax = pieces.iter().fold(0.0f64, |m, &e| m.max(e));
        if emax > 0.0 {
            residual_sum = pieces.iter().map(|e| (e / emax).powf(p)).sum::<f64>();
        }
        let err = if emax > 0.0 { emax * residual_sum.powf(1.0 / p) } else { 0.0 };
        per_level.push((nu, 2f64.powf(nu as f64 * alpha) * err));
    }
    let seminorm = ell_q(per_level.iter().map(|&(_, c)| c), q);
    Ok(NetNorm { seminorm, per_level })
}

/// Coarsest level used by [`profile_slope`]: at levels 0 and 1 the cubes
/// cover (almost) the whole set and the local errors saturate.
pub const RATE_MIN_LEVEL: u32 = 2;

/// Least-squares slope of `log2(term)` against `nu` over levels at or above
/// `min_nu` with positive terms; `None` with fewer than two such levels.
pub fn profile_slope(per_scale: &[ScaleTerm], min_nu: u32) -> Option<f64> {
    let pts: Vec<(f64, f64)> = per_scale
        .iter()
        .filter(|s| s.nu >= min_nu && s.term > 0.0)
        .map(|s| (s.nu as f64, s.term.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Parameters of one norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub u: f64,
    pub variant: Variant,
}

#[derive(Debug, Clone)]
pub struct NormReport {
    pub lp: f64,
    pub sharp_lp: f64,
    pub calderon: f64,
    pub besov_seminorm: f64,
    pub besov: f64,
    pub params: NormParams,
    pub per_scale: Vec<ScaleTerm>,
    pub nu_min: u32,
    pub nu_max: u32,
}

/// Calderón and Besov norms of `f` on a shared scale grid.
pub fn norm_report(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    params: NormParams,
    grid: &ScaleGrid,
) -> Result<NormReport> {
    let calderon = calderon_norm(cloud, f, params.alpha, params.p, params.u, params.variant, grid)?;
    let besov = besov_norm(cloud, f, params.alpha, params.p, params.q, grid)?;
    Ok(NormReport {
        lp: calderon.lp,
        sharp_lp: calderon.sharp_lp,
        calderon: calderon.total,
        besov_seminorm: besov.seminorm,
        besov: besov.lp + besov.seminorm,
        params,
        per_scale: besov.per_scale,
        nu_min: grid.nu_min().ok_or(FrakError::EmptyGrid)?,
        nu_max: grid.nu_max().ok_or(FrakError::EmptyGrid)?,
    })
}

/// Sharp maximal function rebuilt from precomputed local errors.
pub fn sharp_from(errors: &LocalErrors, alpha: f64, variant: Variant, grid: &ScaleGrid) -> Result<SharpMaximal> {
    sharp_from_errors(errors, alpha, variant, grid)
}
