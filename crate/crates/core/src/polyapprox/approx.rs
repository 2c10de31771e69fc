//! Local best approximation `E_k(f, Q)_{L^u(S)}` and its normalized form.
//!
//! For `u = 2` the minimizer is the orthogonal projection. Other exponents
//! use iteratively reweighted least squares on the smoothed objective
//! `sum w_i (r_i^2 + delta^2)^{u/2}`: majorize-minimize steps for `u < 2`,
//! damped Newton steps (`1 / (u - 1)` of the reweighted solution) for
//! `u > 2`, each guarded by backtracking on the true objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::polynomial::{basis_size, Frame, Polynomial};
use super::projector::{design_matrix, local_frame, projector_from_restriction, POINTS_PER_BASIS, RANK_TOLERANCE};
use crate::error::{FrakError, Result};
use crate::geometry::{restrict, Cube, Restriction};
use crate::gridfn::GridFunction;
use crate::measure::WeightedPointCloud;

pub const IRLS_MAX_ITERATIONS: usize = 50;
pub const IRLS_RELATIVE_TOLERANCE: f64 = 1e-8;
/// Smoothing `delta` relative to `max |f|` on the cube.
pub const IRLS_SMOOTHING: f64 = 1e-8;
/// Normalized errors at or below `ROUNDING_FLOOR * max |f|` on the cube are
/// indistinguishable from rounding and reported as exactly zero.
pub const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;
/// IRLS iterations before the exact vertex search takes over at `u = 1`.
pub const L1_WARM_START_ITERATIONS: usize = 3;
/// Relative size of the deterministic perturbation that breaks ties in the
/// exact `u = 1` finish.
pub const L1_TIE_BREAK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ApproxResult {
    /// `E_k(f, Q)_{L^u(S)}`.
    pub error: f64,
    /// `mu(Q_S)^{-1/u} E_k`.
    pub normalized: f64,
    pub mass: f64,
    pub minimizer: Polynomial,
    pub iterations: usize,
    /// False when IRLS hit its iteration cap; the value is still the best
    /// objective found.
    pub converged: bool,
}

/// Weighted `L^u` norm `(sum w_i |r_i|^u)^{1/u}`, scaled against overflow.
pub fn weighted_lu(weights: &[f64], residuals: &[f64], u: f64) -> f64 {
    let rmax = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if rmax == 0.0 {
        return 0.0;
    }
    let sum: f64 = weights.iter().zip(residuals).map(|(w, r)| w * (r.abs() / rmax).powf(u)).sum();
    rmax * sum.powf(1.0 / u)
}

/// Outcome of a weighted `L^u` polynomial fit on a set of points.
#[derive(Debug, Clone)]
pub(crate) struct Fit {
    pub coeffs: Vec<f64>,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted least squares `min ||sqrt(w) (f - X c)||_2` through the normal
/// equations, solved with an eigenvalue pseudo-inverse (minimum-norm
/// solution when the weighted Gram matrix is singular).
fn weighted_lsq(x: &DMatrix<f64>, weights: &[f64], f: &[f64]) -> Vec<f64> {
    let m = x.ncols();
    if m == 0 {
        return Vec::new();
    }
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for r in 0..x.nrows() {
        let w = weights[r];
        if w == 0.0 {
            continue;
        }
        for (j, v) in row.iter_mut().enumerate() {
            *v = x[(r, j)];
        }
        for a in 0..m {
            let wa = w * row[a];
            rhs[a] += wa * f[r];
            for b in a..m {
                gram[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    if m == 1 {
        return vec![if gram[(0, 0)] > 0.0 { rhs[0] / gram[(0, 0)] } else { 0.0 }];
    }
    let eig = SymmetricEigen::new(gram);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut sol = DVector::<f64>::zeros(m);
    for j in 0..m {
        let lambda = eig.eigenvalues[j];
        if lambda > lmax * RANK_TOLERANCE {
            let v = eig.eigenvectors.column(j);
            sol += v * (v.dot(&rhs) / lambda);
        }
    }
    sol.iter().copied().collect()
}

/// Weighted median of `values`: a minimizer of `sum w_i |v_i - c|`.
pub(crate) fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| weights[i] > 0.0).collect();
    if order.is_empty() {
        return 0.0;
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&i| weights[i]).sum();
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= 0.5 * total {
            return values[i];
        }
    }
    values[*order.last().unwrap()]
}

/// One-coefficient fit `min_c sum w_i |f_i - c a_i|^u`, exact up to
/// rounding: a weighted median for `u = 1`, otherwise bisection on the
/// monotone derivative.
fn scalar_fit(a: &[f64], weights: &[f64], f: &[f64], u: f64) -> f64 {
    let mut ratios = Vec::with_capacity(a.len());
    let mut rw = Vec::with_capacity(a.len());
    for ((&ai, &wi), &fi) in a.iter().zip(weights).zip(f) {
        if ai != 0.0 && wi > 0.0 {
            ratios.push(fi / ai);
            rw.push(wi * ai.abs().powf(u));
        }
    }
    if ratios.is_empty() {
        return 0.0;
    }
    if u == 1.0 {
        return weighted_median(&ratios, &rw);
    }
    // sum w_i |f_i - c a_i|^u = sum rw_i |ratio_i - c|^u: Newton on the
    // monotone derivative, safeguarded by a bracket
    let derivs = |c: f64| -> (f64, f64) {
        ratios.iter().zip(&rw).fold((0.0, 0.0), |(g, h), (&v, &w)| {
            let d = (c - v).abs();
            (g + w * (c - v).signum() * d.powf(u - 1.0), h + w * (u - 1.0) * d.powf(u - 2.0))
        })
    };
    let mut lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = rw.iter().sum();
    let mut c = ratios.iter().zip(&rw).map(|(v, w)| v * w).sum::<f64>() / total;
    for _ in 0..200 {
        let (g, h) = derivs(c);
        if g == 0.0 {
            return c;
        }
        if g > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        let newton = c - g / h;
        let next = if h.is_finite() && h > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - c).abs() <= f64::EPSILON * c.abs() {
            return next;
        }
        c = next;
    }
    c
}

fn residuals(x: &DMatrix<f64>, c: &[f64], f: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|r| f[r] - (0..c.len()).map(|j| x[(r, j)] * c[j]).sum::<f64>())
        .collect()
}

/// Minimizes `sum w_i |f_i - (X c)_i|^u` over `c`.
pub(crate) fn fit_lu(x: &DMatrix<f64>, weights: &[f64], f: &[f64], u: f64) -> Fit {
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if x.ncols() == 0 {
        return Fit { coeffs: Vec::new(), error: weighted_lu(weights, f, u), iterations: 0, converged: true };
    }
    if x.ncols() == 1 && u != 2.0 {
        let a: Vec<f64> = x.column(0).iter().copied().collect();
        let c = vec![scalar_fit(&a, weights, f, u)];
        let error = weighted_lu(weights, &residuals(x, &c, f), u);
        return Fit { coeffs: c, error, iterations: 0, converged: true };
    }
    let mut c = weighted_lsq(x, weights, f);
    let mut res = residuals(x, &c, f);
    let mut err = weighted_lu(weights, &res, u);
    // data reproduced to rounding: nothing left to minimize
    let mass: f64 = weights.iter().sum();
    let floor = 64.0 * f64::EPSILON * scale * mass.powf(1.0 / u);
    if u == 2.0 || err <= floor || scale == 0.0 {
        return Fit { coeffs: c, error: err, iterations: 0, converged: true };
    }
    let delta2 = (IRLS_SMOOTHING * scale).powi(2);
    let first_step = if u <= 2.0 { 1.0 } else { 1.0 / (u - 1.0) };
    let mut converged = false;
    let mut iterations = 0;
    let mut omega = vec![0.0; weights.len()];
    let max_iterations = if u == 1.0 { L1_WARM_START_ITERATIONS } else { IRLS_MAX_ITERATIONS };
    while iterations < max_iterations {
        iterations += 1;
        let rmax2 = res.iter().fold(0.0f64, |m, r| m.max(r * r));
        for ((o, w), r) in omega.iter_mut().zip(weights).zip(&res) {
            *o = w * ((r * r + delta2) / rmax2).powf(0.5 * (u - 2.0));
        }
        let target = weighted_lsq(x, &omega, f);
        let mut theta = first_step;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = c.iter().zip(&target).map(|(a, b)| a + theta * (b - a)).collect();
            let trial_res = residuals(x, &trial, f);
            let trial_err = weighted_lu(weights, &trial_res, u);
            if trial_err < err {
                accepted = Some((trial, trial_res, trial_err));
                break;
            }
            theta *= 0.5;
        }
        match accepted {
            Some((trial, trial_res, trial_err)) => {
                let gain = (err - trial_err) / err;
                c = trial;
                res = trial_res;
                err = trial_err;
                if gain < IRLS_RELATIVE_TOLERANCE || err == 0.0 {
                    converged = true;
                    break;
                }
            }
            None => {
                // no descent along the reweighted direction: stationary
                converged = true;
                break;
            }
        }
    }
    if u == 1.0 {
        converged = l1_exchange(x, weights, f, &mut c, &mut err, &res);
    } else if u < 2.0 {
        polish_by_interpolation(x, weights, f, u, &mut c, &mut err, &res);
    }
    Fit { coeffs: c, error: err, iterations, converged }
}

/// Exact finish for `u = 1`. The objective is convex and piecewise linear,
/// minimized at a vertex where the fit interpolates `m` points. Starting
/// from the interpolant through the smallest residuals, walks along the
/// edges obtained by releasing one interpolation condition, with an exact
/// (weighted median) line search, until no edge descends. Returns whether
/// an optimal vertex was certified.
fn l1_exchange(
    x: &DMatrix<f64>,
    weights: &[f64],
    f: &[f64],
    c: &mut Vec<f64>,
    err: &mut f64,
    res: &[f64],
) -> bool {
    let m = x.ncols();
    let rows = x.nrows();
    if rows < m {
        return false;
    }
    // Ties in f (lattice points on a level set of f) make vertices
    // degenerate: more than m residuals vanish, and releasing one
    // interpolation condition at a time no longer certifies optimality.
    // Walk on a slightly perturbed copy, where vertices are simple, and refit
    // the final basis to f itself.
    let original = f;
    let spread = f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(rows as u64);
    let perturbed: Vec<f64> =
        f.iter().map(|v| v + L1_TIE_BREAK * spread * rng.random_range(-1.0..1.0)).collect();
    let f = perturbed.as_slice();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| res[a].abs().total_cmp(&res[b].abs()).then(a.cmp(&b)));
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    // greedily pick well-conditioned interpolation rows
    for &r in &order {
        basis.push(r);
        let sub = DMatrix::from_fn(basis.len(), m, |i, j| x[(basis[i], j)]);
        let sv = sub.singular_values();
        let smax = sv.max();
        if sv.iter().filter(|&&s| s > smax * 1e-9).count() < basis.len() {
            basis.pop();
        }
        if basis.len() == m {
            break;
        }
    }
    if basis.len() < m {
        return false;
    }
    let mut cur = match interpolate(x, f, &basis) {
        Some(v) => v,
        None => return false,
    };
    let mut cur_res = residuals(x, &cur, f);
    let mut cur_err: f64 = weights.iter().zip(&cur_res).map(|(w, r)| w * r.abs()).sum();
    let max_steps = 20 * m + 100;
    let mut certified = false;
    let mut a = vec![0.0; rows];
    let mut breaks: Vec<f64> = Vec::with_capacity(rows);
    let mut bw: Vec<f64> = Vec::with_capacity(rows);
    for _ in 0..max_steps {
        let sub = DMatrix::from_fn(m, m, |i, j| x[(basis[i], j)]);
        let inv = match sub.try_inverse() {
            Some(inv) => inv,
            None => break,
        };
        // column j of X inv moves the residuals when the fit changes only
        // at basis row j
        let moves = x * &inv;
        let mut best: Option<(f64, usize, f64)> = None;
        for leave in 0..m {
            let col = moves.column(leave);
            let mut anchored = 0.0;
            let mut free = 0.0;
            for r in 0..rows {
                let ar = col[r];
                if ar == 0.0 {
                    continue;
                }
                if cur_res[r] == 0.0 || basis.contains(&r) {
                    anchored += weights[r] * ar.abs();
                } else {
                    free -= weights[r] * cur_res[r].signum() * ar;
                }
            }
            for sign in [1.0, -1.0] {
                let deriv = anchored + sign * free;
                if deriv < -1e-14 * cur_err.max(f64::MIN_POSITIVE) && best.is_none_or(|b| deriv < b.0) {
                    best = Some((deriv, leave, sign));
                }
            }
        }
        let (leave, d) = match best {
            Some((_, leave, sign)) => (leave, (0..m).map(|j| sign * inv[(j, leave)]).collect::<Vec<f64>>()),
            None => {
                certified = true;
                break;
            }
        };
        for (r, ar) in a.iter_mut().enumerate() {
            *ar = (0..m).map(|j| x[(r, j)] * d[j]).sum();
        }
        breaks.clear();
        bw.clear();
        let mut entering = Vec::new();
        for r in 0..rows {
            if a[r] != 0.0 && weights[r] > 0.0 {
                breaks.push(cur_res[r] / a[r]);
                bw.push(weights[r] * a[r].abs());
                entering.push(r);
            }
        }
        let t = weighted_median(&breaks, &bw);
        let trial: Vec<f64> = cur.iter().zip(&d).map(|(ci, di)| ci + t * di).collect();
        let trial_res = residuals(x, &trial, f);
        let trial_err: f64 = weights.iter().zip(&trial_res).map(|(w, r)| w * r.abs()).sum();
        if !(trial_err < cur_err) {
            certified = true;
            break;
        }
        // the row whose breakpoint was selected enters the basis
        let enter = entering
            .iter()
            .zip(&breaks)
            .filter(|(r, _)| !basis.contains(r))
            .min_by(|(_, a), (_, b)| (*a - t).abs().total_cmp(&(*b - t).abs()))
            .map(|(&r, _)| r);
        match enter {
            Some(r) => basis[leave] = r,
            None => break,
        }
        cur = trial;
        cur_res = trial_res;
        cur_err = trial_err;
    }
    if let Some(refit) = interpolate(x, original, &basis) {
        cur = refit;
    }
    let final_err = weighted_lu(weights, &residuals(x, &cur, original), 1.0);
    if final_err < *err {
        *c = cur;
        *err = final_err;
    }
    certified
}

fn interpolate(x: &DMatrix<f64>, f: &[f64], rows: &[usize]) -> Option<Vec<f64>> {
    let m = rows.len();
    let sub = DMatrix::from_fn(m, m, |r, j| x[(rows[r], j)]);
    let rhs = DVector::from_iterator(m, rows.iter().map(|&r| f[r]));
    let sol = sub.lu().solve(&rhs)?;
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().copied().collect())
}

/// For `u < 2` minimizers tend to interpolate the data on as many points
/// as there are coefficients. Tries the interpolant through the points with
/// the smallest residuals and keeps it if it lowers the objective.
fn polish_by_interpolation(
    x: &DMatrix<f64>,
    weights: &[f64],
    f: &[f64],
    u: f64,
    c: &mut Vec<f64>,
    err: &mut f64,
    res: &[f64],
) {
    let m = x.ncols();
    if x.nrows() < m {
        return;
    }
    let mut order: Vec<usize> = (0..res.len()).collect();
    order.sort_by(|&a, &b| res[a].abs().total_cmp(&res[b].abs()).then(a.cmp(&b)));
    let rows = &order[..m];
    let sub = DMatrix::from_fn(m, m, |r, j| x[(rows[r], j)]);
    let rhs = DVector::from_iterator(m, rows.iter().map(|&r| f[r]));
    let candidate: Vec<f64> = match sub.lu().solve(&rhs) {
        Some(sol) => sol.iter().copied().collect(),
        None => return,
    };
    if candidate.iter().any(|v| !v.is_finite()) {
        return;
    }
    let cand_err = weighted_lu(weights, &residuals(x, &candidate, f), u);
    if cand_err < *err {
        *c = candidate;
        *err = cand_err;
    }
}

/// `E_k` and `𝓔_k` of `f` on `Q ∩ S` in `L^u`, `u` in `[1, ∞)`.
pub fn best_approx(
    cloud: &WeightedPointCloud,
    cube: &Cube,
    f: &GridFunction,
    k: usize,
    u: f64,
) -> Result<ApproxResult> {
    f.check_len(cloud)?;
    best_approx_on(cloud, cube, restrict(cloud, cube), f.values(), k, u)
}

pub(crate) fn check_exponent(u: f64) -> Result<()> {
    if !(u >= 1.0 && u.is_finite()) {
        return Err(FrakError::InvalidParameter(format!("exponent {u} outside [1, inf)")));
    }
    Ok(())
}

pub(crate) fn best_approx_on(
    cloud: &WeightedPointCloud,
    cube: &Cube,
    restriction: Restriction,
    values: &[f64],
    k: usize,
    u: f64,
) -> Result<ApproxResult> {
    check_exponent(u)?;
    let mass = restriction.mass;
    let frame = local_frame(cloud, &restriction.indices, cube);
    if u == 2.0 {
        let proj = projector_from_restriction(cloud, cube, restriction, k)?;
        let projected = proj.projected_values(cloud, values);
        let weights: Vec<f64> = proj.indices().iter().map(|&i| cloud.weight(i)).collect();
        let res: Vec<f64> =
            proj.indices().iter().zip(&projected).map(|(&i, p)| values[i] - p).collect();
        let mut error = weighted_lu(&weights, &res, 2.0);
        if error / mass.sqrt() <= rounding_floor(proj.indices(), values) {
            error = 0.0;
        }
        let minimizer = proj.apply_values(cloud, values);
        return Ok(ApproxResult {
            error,
            normalized: error / mass.sqrt(),
            mass,
            minimizer,
            iterations: 0,
            converged: true,
        });
    }
    // same well-posedness gate as the projector (point count and rank)
    let m = basis_size(cloud.dim(), k);
    let needed = (POINTS_PER_BASIS * m).max(1);
    if restriction.len() < needed || !(mass > 0.0) {
        return Err(FrakError::TooFewPoints { found: restriction.len(), needed });
    }
    check_rank(cloud, &restriction, &frame, k)?;
    let fit = fit_points(cloud, &restriction.indices, &frame, values, k, u);
    let mut error = fit.error;
    if error / mass.powf(1.0 / u) <= rounding_floor(&restriction.indices, values) {
        error = 0.0;
    }
    Ok(ApproxResult {
        error,
        normalized: error / mass.powf(1.0 / u),
        mass,
        minimizer: Polynomial::from_coeffs(frame, k, fit.coeffs),
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

fn rounding_floor(indices: &[usize], values: &[f64]) -> f64 {
    ROUNDING_FLOOR * indices.iter().fold(0.0f64, |m, &i| m.max(values[i].abs()))
}

fn check_rank(cloud: &WeightedPointCloud, restriction: &Restriction, frame: &Frame, k: usize) -> Result<()> {
    let m = basis_size(cloud.dim(), k);
    if m <= 1 {
        return Ok(());
    }
    let x = design_matrix(cloud, &restriction.indices, frame, k);
    let mut a = x;
    for (r, &i) in restriction.indices.iter().enumerate() {
        a.row_mut(r).scale_mut(cloud.weight(i).sqrt());
    }
    let sv = a.singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > smax * RANK_TOLERANCE.sqrt()).count();
    if rank < m {
        return Err(FrakError::RankDeficient { rank, needed: m });
    }
    Ok(())
}

/// Weighted `L^u` fit of `values` on the listed cloud points, without
/// well-posedness checks. Used for net cells, which may hold few points.
pub(crate) fn fit_points(
    cloud: &WeightedPointCloud,
    indices: &[usize],
    frame: &Frame,
    values: &[f64],
    k: usize,
    u: f64,
) -> Fit {
    let x = design_matrix(cloud, indices, frame, k);
    let w: Vec<f64> = indices.iter().map(|&i| cloud.weight(i)).collect();
    let f: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
    fit_lu(&x, &w, &f, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_cloud, builtin, unit_interval, unit_square};
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_reproduced_for_every_exponent() {
        let cloud = build_cloud(&builtin("cantor4").unwrap(), 4).unwrap();
        let f = GridFunction::sample(&cloud, |x| 1.0 + 2.0 * x[0] - 3.0 * x[1] + x[0] * x[1]).unwrap();
        let cube = Cube::new(cloud.point(40).to_vec(), 0.35);
        for u in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let r = best_approx(&cloud, &cube, &f, 3, u).unwrap();
            assert!(r.error <= 1e-9 * f.max_abs(), "u = {u}: {}", r.error);
            assert!(r.converged);
        }
    }

    #[test]
    fn degree_zero_space_gives_the_norm() {
        let cloud = build_cloud(&unit_interval(), 5).unwrap();
        let f = GridFunction::sample(&cloud, |x| x[0] - 0.3).unwrap();
        let cube = Cube::new(vec![0.5], 1.0);
        let r = best_approx(&cloud, &cube, &f, 0, 3.0).unwrap();
        let direct = cloud.points().zip(cloud.weights()).map(|(p, w)| w * (p[0] - 0.3).abs().powi(3)).sum::<f64>().cbrt();
        assert_abs_diff_eq!(r.error, direct, epsilon = 1e-12);
    }

    #[test]
    fn l2_constant_fit_is_weighted_standard_deviation() {
        let cloud = build_cloud(&unit_square(), 4).unwrap();
        let f = GridFunction::sample(&cloud, |x| (5.0 * x[0]).exp() * x[1]).unwrap();
        let cube = Cube::new(cloud.point(77).to_vec(), 0.3);
        let r = best_approx(&cloud, &cube, &f, 1, 2.0).unwrap();
        let q = restrict(&cloud, &cube);
        let mean = q.indices.iter().map(|&i| cloud.weight(i) * f[i]).sum::<f64>() / q.mass;
        let var = q.indices.iter().map(|&i| cloud.weight(i) * (f[i] - mean).powi(2)).sum::<f64>() / q.mass;
        assert_abs_diff_eq!(r.normalized, var.sqrt(), epsilon = 1e-12 * var.sqrt().max(1.0));
    }

    #[test]
    fn higher_exponents_converge() {
        let cloud = build_cloud(&unit_interval(), 7).unwrap();
        let f = GridFunction::sample(&cloud, |x| (x[0] - 0.37).abs().powf(0.6)).unwrap();
        let cube = Cube::new(cloud.point(50).to_vec(), 0.25);
        let mut previous = 0.0;
        for u in [1.0, 1.5, 2.0, 4.0, 8.0, 32.0] {
            let r = best_approx(&cloud, &cube, &f, 2, u).unwrap();
            assert!(r.converged, "u = {u}");
            // normalized errors are nondecreasing in u
            assert!(r.normalized >= previous * (1.0 - 1e-7), "u = {u}");
            previous = r.normalized;
        }
    }

    #[test]
    fn l1_fit_with_tied_values_matches_vertex_enumeration() {
        // a steep step saturates at +-1 on most of the lattice
        let cloud = build_cloud(&unit_square(), 3).unwrap();
        let step = crate::functions::battery(&cloud, 20240611).into_iter().find(|t| t.name == "sigmoid").unwrap();
        let f = crate::functions::sample(&step, &cloud).unwrap();
        let cube = Cube::new(vec![0.6875, 0.1875], 0.45);
        let r = best_approx(&cloud, &cube, &f, 2, 1.0).unwrap();
        let idx = restrict(&cloud, &cube).indices;
        let n = idx.len();
        let row = |i: usize| [1.0, cloud.point(idx[i])[0], cloud.point(idx[i])[1]];
        let g = |i: usize| f[idx[i]];
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let m = DMatrix::from_fn(3, 3, |i, j| row([a, b, c][i])[j]);
                    let rhs = DVector::from_vec(vec![g(a), g(b), g(c)]);
                    if let Some(coef) = m.lu().solve(&rhs) {
                        let e: f64 = (0..n)
                            .map(|i| cloud.weight(idx[i]) * (g(i) - row(i).iter().zip(coef.iter()).map(|(x, c)| x * c).sum::<f64>()).abs())
                            .sum();
                        best = best.min(e);
                    }
                }
            }
        }
        assert_abs_diff_eq!(r.error, best, epsilon = 1e-10 * best);
    }

    #[test]
    fn invalid_exponent() {
        let cloud = build_cloud(&unit_interval(), 3).unwrap();
        let f = GridFunction::constant(cloud.len(), 1.0);
        let cube = Cube::new(vec![0.5], 1.0);
        assert!(best_approx(&cloud, &cube, &f, 1, 0.5).is_err());
        assert!(best_approx(&cloud, &cube, &f, 1, f64::INFINITY).is_err());
    }
}
