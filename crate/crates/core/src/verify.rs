//! Executable checks of the inequalities relating local approximations,
//! maximal functions, and the Calderón and Besov norms.
//!
//! Inequalities that hold with constant 1 at our discretization are hard
//! checks with fixed budgets. Inequalities with unspecified constants are
//! measured per cloud and then compared across consecutive depths: the
//! discrete counterpart of a depth-independent constant is a measured value
//! that does not drift as the cloud is refined.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::{CheckConfig, RunConfig};
use crate::error::{FrakError, Result};
use crate::functions::{battery, sample, TestFunction};
use crate::geometry::{restrict, Cube};
use crate::gridfn::GridFunction;
use crate::maximal::{degree_for_flat, degree_for_sharp, hl_maximal, sharp_from_errors, LocalErrors, ScaleGrid, ScaleWindow, SharpMaximal, Variant};
use crate::measure::{build_cloud, WeightedPointCloud};
use crate::norms::{besov_from_errors, lp_norm};
use crate::polyapprox::{
    best_approx, make_projector, reverse_holder_ratio, weighted_lu, Frame, Polynomial,
};

/// Right-hand sides at or below this are treated as zero; the left side
/// must then be at or below it too.
pub const ABSOLUTE_TOLERANCE: f64 = 1e-9;
/// Budget of the inequalities that hold with constant 1.
pub const EXACT_BUDGET: f64 = 1.0 + 1e-6;
/// Budget of the left sharp-maximal comparison.
pub const LEFT_EQUIVALENCE_BUDGET: f64 = 1.0 + 1e-8;
/// Relative tolerance of `E_k(f, Q) = 0` for `f` in `P_{k-1}`.
pub const POLYNOMIAL_ERROR_TOLERANCE: f64 = 1e-9;
pub const REPRODUCTION_TOLERANCE: f64 = 1e-10;
pub const IDEMPOTENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Holds with constant 1 (or is an identity); fixed budget.
    Exact,
    /// Existential constant measured on one cloud; recorded, must be finite.
    Empirical,
    /// Ratio of an empirical constant between consecutive depths.
    Stability,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Exact => "exact",
            CheckKind::Empirical => "empirical",
            CheckKind::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub generator: String,
    pub depth: usize,
    pub function: String,
    pub params: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_name: String,
    pub kind: CheckKind,
    pub worst_constant: f64,
    pub budget: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub metadata: BTreeMap<String, String>,
}

impl CheckResult {
    pub fn new(
        check_name: impl Into<String>,
        kind: CheckKind,
        budget: f64,
        witnesses: Vec<Witness>,
        metadata: BTreeMap<String, String>,
    ) -> Self {
        let worst_constant = witnesses.iter().fold(0.0f64, |m, w| if w.value.is_nan() { f64::NAN } else { m.max(w.value) });
        let mut out = Self { check_name: check_name.into(), kind, worst_constant, budget, pass: false, witnesses, metadata };
        out.set_budget(budget);
        out
    }

    pub fn set_budget(&mut self, budget: f64) {
        self.budget = budget;
        self.pass = self.witnesses.iter().all(|w| w.value.is_finite()) && self.worst_constant <= budget;
    }

    /// Name without the `/generator/depth` suffix.
    pub fn base_name(&self) -> &str {
        self.check_name.split('/').next().unwrap_or(&self.check_name)
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.check_name,
            self.worst_constant,
            self.budget,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// `lhs / rhs`, with the zero-right-side convention: if `rhs` is below the
/// absolute tolerance the value is 0 when `lhs` is too, and infinite
/// otherwise.
pub fn bound_ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > ABSOLUTE_TOLERANCE {
        lhs / rhs
    } else if lhs <= ABSOLUTE_TOLERANCE {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Sampled battery on one cloud, with cached local error tables.
pub struct Lab {
    pub generator: String,
    pub cloud: WeightedPointCloud,
    pub grid: ScaleGrid,
    pub window: ScaleWindow,
    pub functions: Vec<TestFunction>,
    pub samples: Vec<GridFunction>,
    cache: HashMap<(usize, usize, u64), Arc<LocalErrors>>,
}

impl Lab {
    pub fn new(
        generator: impl Into<String>,
        cloud: WeightedPointCloud,
        functions: Vec<TestFunction>,
        window: &ScaleWindow,
    ) -> Result<Self> {
        let grid = ScaleGrid::for_cloud(&cloud, window)?;
        let samples = functions.iter().map(|f| sample(f, &cloud)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            generator: generator.into(),
            cloud,
            grid,
            window: *window,
            functions,
            samples,
            cache: HashMap::new(),
        })
    }

    /// Standard battery on `cloud` under `seed`.
    pub fn with_battery(generator: impl Into<String>, cloud: WeightedPointCloud, seed: u64, window: &ScaleWindow) -> Result<Self> {
        let functions = battery(&cloud, seed);
        Self::new(generator, cloud, functions, window)
    }

    pub fn errors(&mut self, f: usize, k: usize, u: f64) -> Result<Arc<LocalErrors>> {
        let key = (f, k, u.to_bits());
        if let Some(e) = self.cache.get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(LocalErrors::compute(&self.cloud, &self.samples[f], k, u, &self.grid)?);
        self.cache.insert(key, e.clone());
        Ok(e)
    }

    /// `f♯_{alpha,u,S}` (or `f♭`) of battery function `f`.
    pub fn sharp(&mut self, f: usize, alpha: f64, u: f64, variant: Variant) -> Result<SharpMaximal> {
        let k = variant.degree(alpha)?;
        let errors = self.errors(f, k, u)?;
        sharp_from_errors(&errors, alpha, variant, &self.grid)
    }

    fn witness(&self, function: &str, params: String, value: f64) -> Witness {
        Witness {
            generator: self.generator.clone(),
            depth: self.cloud.depth(),
            function: function.to_string(),
            params,
            value,
        }
    }

    fn metadata(&self, seed: Option<u64>) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("points".into(), self.cloud.len().to_string());
        m.insert("nu_min".into(), self.grid.nu_min().map_or("-".into(), |v| v.to_string()));
        m.insert("nu_max".into(), self.grid.nu_max().map_or("-".into(), |v| v.to_string()));
        if let Some(seed) = seed {
            m.insert("seed".into(), seed.to_string());
        }
        m
    }

    fn name(&self, check: &str) -> String {
        format!("{check}/{}/d{}", self.generator, self.cloud.depth())
    }

    /// Smallest and largest grid scales.
    fn scale_range(&self) -> (f64, f64) {
        let scales = self.grid.scales();
        let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scales.iter().copied().fold(0.0, f64::max);
        (lo, hi)
    }

    /// Cube centered at a random cloud point, half side log-uniform in `[lo, hi]`.
    fn random_cube(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Cube {
        let i = rng.random_range(0..self.cloud.len());
        let r = if hi > lo { (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp() } else { lo };
        Cube::new(self.cloud.point(i).to_vec(), r)
    }

    fn polynomial_functions(&self) -> Vec<usize> {
        (0..self.functions.len()).filter(|&i| self.functions[i].polynomial_degree.is_some()).collect()
    }
}

fn random_polynomial(rng: &mut ChaCha8Rng, frame: Frame, k: usize) -> Polynomial {
    let m = crate::polyapprox::basis_size(frame.dim(), k);
    let coeffs = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Polynomial::from_coeffs(frame, k, coeffs)
}

fn global_frame(cloud: &WeightedPointCloud) -> Frame {
    let (lo, hi) = cloud.bounding_box();
    Frame {
        center: lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        scale: 0.5 * cloud.diam(),
    }
}

fn ill_posed(e: &FrakError) -> bool {
    matches!(e, FrakError::TooFewPoints { .. } | FrakError::RankDeficient { .. } | FrakError::EmptyCube)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Identities of local polynomial approximation: `E_k` vanishes on
/// `P_{k-1}`, projectors reproduce `P_{k-1}` and are idempotent, and sharp
/// maximal functions of polynomials below the degree vanish.
pub fn check_exactness(lab: &mut Lab, cubes: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = lab.scale_range();
    let frame = global_frame(&lab.cloud);
    let polys: Vec<Polynomial> = (1..=3).map(|k| random_polynomial(&mut rng, frame.clone(), k)).collect();
    let poly_values: Vec<GridFunction> = polys
        .iter()
        .map(|p| GridFunction::sample(&lab.cloud, |x| p.eval(x)))
        .collect::<Result<_>>()?;
    let rough: Vec<usize> = (0..lab.functions.len())
        .filter(|&i| lab.functions[i].polynomial_degree.is_none())
        .take(3)
        .collect();

    let us = [1.0, 2.0, 3.0];
    let mut approx_worst = vec![vec![0.0f64; us.len()]; polys.len()];
    let mut repro_worst = vec![0.0f64; polys.len()];
    let mut idem_worst = vec![0.0f64; rough.len()];
    let mut posed = 0usize;
    for _ in 0..cubes {
        let cube = lab.random_cube(&mut rng, lo, hi);
        for (j, (p, values)) in polys.iter().zip(&poly_values).enumerate() {
            let k = j + 1;
            let scale = values.max_abs().max(f64::MIN_POSITIVE);
            for (ui, &u) in us.iter().enumerate() {
                match best_approx(&lab.cloud, &cube, values, k, u) {
                    Ok(a) => approx_worst[j][ui] = approx_worst[j][ui].max(a.normalized / scale),
                    Err(e) if ill_posed(&e) => {}
                    Err(e) => return Err(e),
                }
            }
            let proj = match make_projector(&lab.cloud, &cube, k) {
                Ok(proj) => proj,
                Err(e) if ill_posed(&e) => continue,
                Err(e) => return Err(e),
            };
            if j == 0 {
                posed += 1;
            }
            let image = proj.apply_values(&lab.cloud, values.values());
            let gap = proj.indices().iter().fold(0.0f64, |m, &i| {
                let x = lab.cloud.point(i);
                m.max((image.eval(x) - p.eval(x)).abs())
            });
            repro_worst[j] = repro_worst[j].max(gap / scale);
            if k == 2 {
                for (r, &fi) in rough.iter().enumerate() {
                    let once = proj.projected_values(&lab.cloud, lab.samples[fi].values());
                    let mut lifted = lab.samples[fi].values().to_vec();
                    for (&i, v) in proj.indices().iter().zip(&once) {
                        lifted[i] = *v;
                    }
                    let twice = proj.projected_values(&lab.cloud, &lifted);
                    let norm = once.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                    idem_worst[r] = idem_worst[r].max(max_abs_diff(&once, &twice) / norm);
                }
            }
        }
    }

    let mut meta = lab.metadata(Some(seed));
    meta.insert("cubes".into(), cubes.to_string());
    meta.insert("posed_cubes".into(), posed.to_string());

    let mut approx_w = Vec::new();
    let mut repro_w = Vec::new();
    for (j, row) in approx_worst.iter().enumerate() {
        for (ui, &v) in row.iter().enumerate() {
            approx_w.push(lab.witness(&format!("random_poly_deg{j}"), format!("k={};u={}", j + 1, us[ui]), v));
        }
        repro_w.push(lab.witness(&format!("random_poly_deg{j}"), format!("k={}", j + 1), repro_worst[j]));
    }
    let idem_w: Vec<Witness> = rough
        .iter()
        .zip(&idem_worst)
        .map(|(&fi, &v)| lab.witness(&lab.functions[fi].name, "k=2".into(), v))
        .collect();

    // sharp maximal functions of polynomials below the degree
    let mut zero_w = Vec::new();
    let mut targets: Vec<(String, usize, GridFunction)> = lab
        .polynomial_functions()
        .into_iter()
        .map(|i| (lab.functions[i].name.clone(), lab.functions[i].polynomial_degree.unwrap_or(0), lab.samples[i].clone()))
        .collect();
    for (j, v) in poly_values.iter().enumerate() {
        targets.push((format!("random_poly_deg{j}"), j, v.clone()));
    }
    for (name, degree, values) in targets {
        let alpha = degree as f64 + 0.5;
        let k = degree_for_sharp(alpha)?;
        let scale = values.max_abs().max(f64::MIN_POSITIVE);
        for u in [1.0, 2.0] {
            let errors = LocalErrors::compute(&lab.cloud, &values, k, u, &lab.grid)?;
            let sharp = sharp_from_errors(&errors, alpha, Variant::Sharp, &lab.grid)?;
            zero_w.push(lab.witness(&name, format!("alpha={alpha};u={u}"), sharp.values.max_abs() / scale));
        }
    }

    Ok(vec![
        CheckResult::new(lab.name("exactness.best_approx"), CheckKind::Exact, POLYNOMIAL_ERROR_TOLERANCE, approx_w, meta.clone()),
        CheckResult::new(lab.name("exactness.reproduction"), CheckKind::Exact, REPRODUCTION_TOLERANCE, repro_w, meta.clone()),
        CheckResult::new(lab.name("exactness.idempotence"), CheckKind::Exact, IDEMPOTENCE_TOLERANCE, idem_w, meta.clone()),
        CheckResult::new(lab.name("exactness.sharp_zero"), CheckKind::Exact, POLYNOMIAL_ERROR_TOLERANCE, zero_w, meta),
    ])
}

/// Nested pair `Q1 ⊂ Q2` with `Q2` up to four times larger and shifted.
fn nested_pair(lab: &Lab, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Cube, Cube) {
    let q1 = lab.random_cube(rng, lo, hi);
    let r2 = q1.half_side * (rng.random::<f64>() * 4f64.ln()).exp();
    let slack = r2 - q1.half_side;
    let center = q1.center.iter().map(|c| c + slack * (2.0 * rng.random::<f64>() - 1.0)).collect();
    (q1, Cube::new(center, r2))
}

/// Monotonicity of local approximation under inclusion: the exact form
/// `𝓔(Q1) <= (mu(Q2) / mu(Q1))^{1/u} 𝓔(Q2)` and the regular form
/// `𝓔(Q1) <= c (r2 / r1)^{s/u} 𝓔(Q2)` with measured `c`.
pub fn check_monotonicity(lab: &mut Lab, k: usize, u: f64, pairs: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = lab.scale_range();
    let mut cubes = Vec::with_capacity(pairs);
    while cubes.len() < pairs {
        let (q1, q2) = nested_pair(lab, &mut rng, lo, 0.5 * hi);
        debug_assert!(q2.contains_cube(&q1));
        cubes.push((q1, q2));
    }
    let s = lab.cloud.s();
    let params = format!("k={k};u={u}");
    let mut exact_w = Vec::new();
    let mut regular_w = Vec::new();
    let mut used = 0usize;
    for (fi, values) in lab.samples.iter().enumerate() {
        let mut exact = 0.0f64;
        let mut regular = 0.0f64;
        for (q1, q2) in &cubes {
            let a1 = match best_approx(&lab.cloud, q1, values, k, u) {
                Ok(a) => a,
                Err(e) if ill_posed(&e) => continue,
                Err(e) => return Err(e),
            };
            let a2 = best_approx(&lab.cloud, q2, values, k, u)?;
            if fi == 0 {
                used += 1;
            }
            let factor = (a2.mass / a1.mass).powf(1.0 / u);
            exact = exact.max(bound_ratio(a1.normalized, factor * a2.normalized));
            let geometric = (q2.half_side / q1.half_side).powf(s / u);
            regular = regular.max(bound_ratio(a1.normalized, geometric * a2.normalized));
        }
        let name = &lab.functions[fi].name;
        exact_w.push(lab.witness(name, params.clone(), exact));
        regular_w.push(lab.witness(name, params.clone(), regular));
    }
    let mut meta = lab.metadata(Some(seed));
    meta.insert("pairs".into(), pairs.to_string());
    meta.insert("posed_pairs".into(), used.to_string());
    let tag = format!("k{k}u{u}");
    Ok(vec![
        CheckResult::new(lab.name(&format!("monotonicity.exact.{tag}")), CheckKind::Exact, EXACT_BUDGET, exact_w, meta.clone()),
        CheckResult::new(lab.name(&format!("monotonicity.regular.{tag}")), CheckKind::Empirical, f64::INFINITY, regular_w, meta),
    ])
}

/// `1/sigma = 1/q + alpha/s`.
pub fn poincare_sigma(q: f64, alpha: f64, s: f64) -> f64 {
    1.0 / (1.0 / q + alpha / s)
}

fn average_power(cloud: &WeightedPointCloud, indices: &[usize], values: impl Fn(usize) -> f64, power: f64) -> f64 {
    let mass: f64 = indices.iter().map(|&i| cloud.weight(i)).sum();
    if !(mass > 0.0) {
        return 0.0;
    }
    let w: Vec<f64> = indices.iter().map(|&i| cloud.weight(i) / mass).collect();
    let v: Vec<f64> = indices.iter().map(|&i| values(i)).collect();
    weighted_lu(&w, &v, power)
}

/// Sobolev–Poincaré inequality
/// `(avg_Q |f - P_Q f|^q)^{1/q} <= c r^alpha (avg_{2Q} (f♯)^sigma)^{1/sigma}`.
pub fn check_poincare(lab: &mut Lab, alpha: f64, q: f64, cubes: usize, seed: u64) -> Result<CheckResult> {
    let k = degree_for_sharp(alpha)?;
    let sigma = poincare_sigma(q, alpha, lab.cloud.s());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = lab.scale_range();
    let sample_cubes: Vec<Cube> = (0..cubes).map(|_| lab.random_cube(&mut rng, lo, 0.5 * hi)).collect();
    let params = format!("alpha={alpha};q={q};sigma={sigma}");
    let mut witnesses = Vec::new();
    for fi in 0..lab.samples.len() {
        let sharp = lab.sharp(fi, alpha, 1.0, Variant::Sharp)?;
        let values = lab.samples[fi].values();
        let mut worst = 0.0f64;
        for cube in &sample_cubes {
            let proj = match make_projector(&lab.cloud, cube, k) {
                Ok(p) => p,
                Err(e) if ill_posed(&e) => continue,
                Err(e) => return Err(e),
            };
            let projected = proj.projected_values(&lab.cloud, values);
            let residual: Vec<f64> = proj.indices().iter().zip(&projected).map(|(&i, p)| values[i] - p).collect();
            let lhs = {
                let w: Vec<f64> = proj.indices().iter().map(|&i| lab.cloud.weight(i) / proj.mass()).collect();
                weighted_lu(&w, &residual, q)
            };
            let doubled = restrict(&lab.cloud, &cube.dilate(2.0));
            let avg = average_power(&lab.cloud, &doubled.indices, |i| sharp.values[i], sigma);
            let rhs = cube.half_side.powf(alpha) * avg;
            worst = worst.max(bound_ratio(lhs, rhs));
        }
        witnesses.push(lab.witness(&lab.functions[fi].name, params.clone(), worst));
    }
    let mut meta = lab.metadata(Some(seed));
    meta.insert("cubes".into(), cubes.to_string());
    Ok(CheckResult::new(lab.name("poincare"), CheckKind::Empirical, f64::INFINITY, witnesses, meta))
}

/// `f♯_{alpha,S} <= f♯_{alpha,u,S} <= c M_sigma(f♯_{alpha,S})` pointwise,
/// `1/sigma = 1/u + alpha/s`.
pub fn check_sharp_equivalence(lab: &mut Lab, alpha: f64, u: f64) -> Result<Vec<CheckResult>> {
    if !(u > 1.0) {
        return Err(FrakError::InvalidParameter(format!("sharp equivalence needs u > 1, got {u}")));
    }
    let sigma = poincare_sigma(u, alpha, lab.cloud.s());
    let params = format!("alpha={alpha};u={u};sigma={sigma}");
    let mut left_w = Vec::new();
    let mut right_w = Vec::new();
    for fi in 0..lab.samples.len() {
        let base = lab.sharp(fi, alpha, 1.0, Variant::Sharp)?;
        let upper = lab.sharp(fi, alpha, u, Variant::Sharp)?;
        let maximal = hl_maximal(&lab.cloud, &base.values, sigma, &lab.grid)?;
        let mut left = 0.0f64;
        let mut right = 0.0f64;
        for i in 0..lab.cloud.len() {
            left = left.max(bound_ratio(base.values[i], upper.values[i]));
            right = right.max(bound_ratio(upper.values[i], maximal[i]));
        }
        let name = &lab.functions[fi].name;
        left_w.push(lab.witness(name, params.clone(), left));
        right_w.push(lab.witness(name, params.clone(), right));
    }
    let meta = lab.metadata(None);
    Ok(vec![
        CheckResult::new(lab.name(&format!("sharp_equivalence.left.u{u}")), CheckKind::Exact, LEFT_EQUIVALENCE_BUDGET, left_w, meta.clone()),
        CheckResult::new(lab.name(&format!("sharp_equivalence.right.u{u}")), CheckKind::Empirical, f64::INFINITY, right_w, meta),
    ])
}

/// `B^{p,p}_alpha ⊂ C^p_alpha ⊂ B^{p,inf}_alpha` as norm ratios
/// `R1 = ||f||_C / ||f||_{B^{p,p}}` and `R2 = ||f||_{B^{p,inf}} / ||f||_C`,
/// plus the exact comparison of every Besov per-scale term with the
/// `L^p` norm of the sharp maximal function built from the same local
/// errors (`u = p`, `k = [alpha] + 1`). Integer `alpha` uses the flat variant.
pub fn check_embedding_chain(lab: &mut Lab, alpha: f64, p: f64) -> Result<Vec<CheckResult>> {
    if !(p > 1.0) {
        return Err(FrakError::InvalidParameter(format!("embedding chain needs p > 1, got {p}")));
    }
    let variant = Variant::for_alpha(alpha);
    let kb = degree_for_flat(alpha)?;
    let params = format!("alpha={alpha};p={p};variant={variant}");
    let mut r1_w = Vec::new();
    let mut r2_w = Vec::new();
    let mut exact_w = Vec::new();
    for fi in 0..lab.samples.len() {
        let f = lab.samples[fi].clone();
        let lp = lp_norm(&lab.cloud, &f, p)?;
        let sharp = lab.sharp(fi, alpha, 1.0, variant)?;
        let calderon = lp + lp_norm(&lab.cloud, &sharp.values, p)?;
        let errors = lab.errors(fi, kb, p)?;
        let besov = besov_from_errors(&lab.cloud, &f, &errors, alpha, p, &lab.grid)?;
        let b_pp = lp + besov.seminorm;
        let b_pinf = lp + besov.seminorm_for(f64::INFINITY);
        let name = lab.functions[fi].name.clone();
        r1_w.push(lab.witness(&name, params.clone(), bound_ratio(calderon, b_pp)));
        r2_w.push(lab.witness(&name, params.clone(), bound_ratio(b_pinf, calderon)));

        let sharp_p = sharp_from_errors(&errors, alpha, Variant::Flat, &lab.grid)?;
        let sharp_p_lp = lp_norm(&lab.cloud, &sharp_p.values, p)?;
        let worst = besov.per_scale.iter().fold(0.0f64, |m, t| m.max(bound_ratio(t.term, sharp_p_lp)));
        exact_w.push(lab.witness(&name, params.clone(), worst));
    }
    let meta = lab.metadata(None);
    let tag = format!("a{alpha}");
    Ok(vec![
        CheckResult::new(lab.name(&format!("embedding_chain.R1.{tag}")), CheckKind::Empirical, f64::INFINITY, r1_w, meta.clone()),
        CheckResult::new(lab.name(&format!("embedding_chain.R2.{tag}")), CheckKind::Empirical, f64::INFINITY, r2_w, meta.clone()),
        CheckResult::new(lab.name(&format!("embedding_chain.exact.{tag}")), CheckKind::Exact, EXACT_BUDGET, exact_w, meta),
    ])
}

/// `q = s p / (s - k p)`, defined for `k p < s`.
pub fn sobolev_exponent(s: f64, k: usize, p: f64) -> Option<f64> {
    let kp = k as f64 * p;
    (kp < s).then(|| s * p / (s - kp))
}

/// `||f||_{L^q} <= c (||f♯_{k,S}||_p + diam^{-k} ||f||_p)` with
/// `q = s p / (s - k p)`; `None` when `k p >= s`.
pub fn check_sobolev_embedding(lab: &mut Lab, k: usize, p: f64) -> Result<Option<CheckResult>> {
    let q = match sobolev_exponent(lab.cloud.s(), k, p) {
        Some(q) => q,
        None => return Ok(None),
    };
    let alpha = k as f64;
    let params = format!("k={k};p={p};q={q}");
    let diam = lab.cloud.diam();
    let mut witnesses = Vec::new();
    for fi in 0..lab.samples.len() {
        let sharp = lab.sharp(fi, alpha, 1.0, Variant::Sharp)?;
        let f = &lab.samples[fi];
        let lhs = lp_norm(&lab.cloud, f, q)?;
        let rhs = lp_norm(&lab.cloud, &sharp.values, p)? + diam.powf(-alpha) * lp_norm(&lab.cloud, f, p)?;
        witnesses.push(lab.witness(&lab.functions[fi].name, params.clone(), bound_ratio(lhs, rhs)));
    }
    Ok(Some(CheckResult::new(lab.name("sobolev"), CheckKind::Empirical, f64::INFINITY, witnesses, lab.metadata(None))))
}

/// Reverse Hölder inequality for polynomials of degree `k` with standard
/// normal coefficients in the cube's local monomial basis.
pub fn check_reverse_holder(lab: &mut Lab, k: usize, pairs: &[(f64, f64)], trials: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = lab.scale_range();
    let mut worst = vec![0.0f64; pairs.len()];
    for _ in 0..trials {
        let cube = lab.random_cube(&mut rng, lo, hi);
        let frame = Frame { center: cube.center.clone(), scale: cube.half_side };
        let poly = random_polynomial(&mut rng, frame, k + 1);
        for (j, &(q, u)) in pairs.iter().enumerate() {
            worst[j] = worst[j].max(reverse_holder_ratio(&lab.cloud, &cube, &poly, q, u)?);
        }
    }
    let witnesses = pairs
        .iter()
        .zip(&worst)
        .map(|(&(q, u), &v)| lab.witness(&format!("random_poly_deg{k}"), format!("k={k};q={q};u={u}"), v))
        .collect();
    let mut meta = lab.metadata(Some(seed));
    meta.insert("trials".into(), trials.to_string());
    Ok(CheckResult::new(lab.name("reverse_holder"), CheckKind::Empirical, f64::INFINITY, witnesses, meta))
}

/// Runs every check on one lab.
pub fn run_lab(lab: &mut Lab, checks: &CheckConfig, seed: u64) -> Result<Vec<CheckResult>> {
    let sub = |tag: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag);
    let mut out = check_exactness(lab, checks.exactness_cubes, sub(1))?;
    for (j, &(k, u)) in checks.monotonicity.iter().enumerate() {
        out.extend(check_monotonicity(lab, k, u, checks.monotonicity_pairs, sub(10 + j as u64))?);
    }
    out.push(check_poincare(lab, checks.poincare_alpha, checks.poincare_q, checks.poincare_cubes, sub(2))?);
    for &u in &checks.equivalence_us {
        out.extend(check_sharp_equivalence(lab, checks.equivalence_alpha, u)?);
    }
    for &alpha in &checks.chain_alphas {
        out.extend(check_embedding_chain(lab, alpha, checks.chain_p)?);
    }
    if let Some(r) = check_sobolev_embedding(lab, checks.sobolev_k, checks.sobolev_p)? {
        out.push(r);
    }
    out.push(check_reverse_holder(lab, checks.holder_k, &checks.holder_pairs, checks.holder_trials, sub(3))?);
    Ok(out)
}

/// Cross-depth comparison of the empirical constants: for every empirical
/// check present at two consecutive depths of a generator, the larger
/// worst constant divided by the smaller.
pub fn stability_results(results: &[CheckResult], factor: f64) -> Vec<CheckResult> {
    // (base name, generator) -> depth -> result
    let mut groups: BTreeMap<(String, String), BTreeMap<usize, &CheckResult>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.kind == CheckKind::Empirical) {
        if let Some(w) = r.witnesses.first() {
            groups.entry((r.base_name().to_string(), w.generator.clone())).or_default().insert(w.depth, r);
        }
    }
    let mut out = Vec::new();
    for ((base, generator), by_depth) in groups {
        let depths: Vec<(&usize, &&CheckResult)> = by_depth.iter().collect();
        for pair in depths.windows(2) {
            let (&d1, a) = pair[0];
            let (&d2, b) = pair[1];
            let (x, y) = (a.worst_constant, b.worst_constant);
            let ratio = if x == y {
                1.0
            } else if x > 0.0 && y > 0.0 {
                x.max(y) / x.min(y)
            } else {
                f64::INFINITY
            };
            let witness = Witness {
                generator: generator.clone(),
                depth: d2,
                function: "-".into(),
                params: format!("d{d1}={x};d{d2}={y}"),
                value: ratio,
            };
            let mut meta = BTreeMap::new();
            meta.insert("depths".into(), format!("{d1},{d2}"));
            out.push(CheckResult::new(
                format!("stability.{base}/{generator}/d{d1}-d{d2}"),
                CheckKind::Stability,
                factor,
                vec![witness],
                meta,
            ));
        }
    }
    out
}

/// Applies budget overrides keyed by base check name.
pub fn apply_budgets(results: &mut [CheckResult], budgets: &BTreeMap<String, f64>) {
    for r in results.iter_mut() {
        if let Some(&b) = budgets.get(r.base_name()) {
            r.set_budget(b);
        }
    }
}

/// The full suite for every configured generator and depth, followed by
/// the stability comparisons; sorted by check name.
pub fn run_all(config: &RunConfig) -> Result<Vec<CheckResult>> {
    config.validate()?;
    let mut results = Vec::new();
    for g in &config.generators {
        let ifs = g.load()?;
        for &depth in &g.depths {
            let cloud = build_cloud(&ifs, depth)?;
            let mut lab = Lab::with_battery(g.name.clone(), cloud, config.seed, &config.window)?;
            results.extend(run_lab(&mut lab, &config.checks, config.seed)?);
        }
    }
    let stability = stability_results(&results, config.checks.stability_factor);
    results.extend(stability);
    apply_budgets(&mut results, &config.budgets);
    results.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    Ok(results)
}

pub fn all_pass(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.pass)
}
