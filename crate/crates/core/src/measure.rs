//! Discrete approximations of Ahlfors regular measures on self-similar sets.
//!
//! A self-similar set is described by an [`IfsSpec`]: a family of contracting
//! similarities `x -> ratio * x + translate` acting on the unit cube
//! `[0, 1]^n`. At depth `m` every word of length `m` selects one cell of the
//! `m`-th generation; the cloud carries one point per cell (the image of the
//! unit cube's center) with the self-similar mass of that cell.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FrakError, Result};
use crate::geometry::{restrict, Cube};

/// Default upper bound on the number of points a cloud may hold.
pub const DEFAULT_POINT_CAP: usize = 1 << 17;

/// Absolute tolerance of the Moran equation solver.
pub const MORAN_TOLERANCE: f64 = 1e-12;

/// One contracting similarity `x -> ratio * x + translate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMap {
    pub ratio: f64,
    pub translate: Vec<f64>,
}

/// An iterated function system of contracting similarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub ambient_dim: usize,
    pub maps: Vec<SimilarityMap>,
    pub name: String,
}

impl IfsSpec {
    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio).collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(0.0, f64::max)
    }

    /// Checks ratios, translation lengths, and the open-set condition on
    /// the unit cube (images of `[0,1]^n` have disjoint interiors).
    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim == 0 {
            return Err(FrakError::InvalidIfs("ambient_dim must be >= 1".into()));
        }
        if self.maps.is_empty() {
            return Err(FrakError::InvalidIfs("at least one map is required".into()));
        }
        for m in &self.maps {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(FrakError::OutOfRange(m.ratio));
            }
            if m.translate.len() != self.ambient_dim {
                return Err(FrakError::InvalidIfs(format!(
                    "translation of length {} in ambient dimension {}",
                    m.translate.len(),
                    self.ambient_dim
                )));
            }
            if m.translate.iter().any(|t| !t.is_finite()) {
                return Err(FrakError::InvalidIfs("non-finite translation".into()));
            }
        }
        for (i, a) in self.maps.iter().enumerate() {
            for b in &self.maps[i + 1..] {
                let overlaps = (0..self.ambient_dim).all(|d| {
                    let lo = a.translate[d].max(b.translate[d]);
                    let hi = (a.translate[d] + a.ratio).min(b.translate[d] + b.ratio);
                    hi - lo > 1e-12
                });
                if overlaps {
                    return Err(FrakError::InvalidIfs(
                        "cell images overlap; the open-set condition fails".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: IfsSpec =
            serde_json::from_str(text).map_err(|e| FrakError::InvalidIfs(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| FrakError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("IfsSpec serializes")
    }
}

/// Four-corner Cantor dust in the plane with contraction `rho`.
///
/// `rho` must lie in `(1/4, 1/2]` so that `1 < s <= 2`.
pub fn cantor_dust(rho: f64) -> Result<IfsSpec> {
    if !(rho > 0.25 && rho <= 0.5) {
        return Err(FrakError::InvalidParameter(format!(
            "Cantor dust ratio {rho} outside (1/4, 1/2]"
        )));
    }
    let far = 1.0 - rho;
    let maps = [[0.0, 0.0], [far, 0.0], [0.0, far], [far, far]]
        .iter()
        .map(|t| SimilarityMap { ratio: rho, translate: t.to_vec() })
        .collect();
    let name = if (rho - 1.0 / 3.0).abs() < 1e-15 {
        "cantor4".to_string()
    } else {
        format!("cantor4:{rho}")
    };
    Ok(IfsSpec { ambient_dim: 2, maps, name })
}

/// Sierpiński carpet: eight maps of ratio 1/3.
pub fn sierpinski_carpet() -> IfsSpec {
    let third = 1.0 / 3.0;
    let mut maps = Vec::with_capacity(8);
    for j in 0..3 {
        for i in 0..3 {
            if i == 1 && j == 1 {
                continue;
            }
            maps.push(SimilarityMap {
                ratio: third,
                translate: vec![i as f64 * third, j as f64 * third],
            });
        }
    }
    IfsSpec { ambient_dim: 2, maps, name: "carpet".into() }
}

/// The full unit square as four half-scale copies.
pub fn unit_square() -> IfsSpec {
    let maps = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]]
        .iter()
        .map(|t| SimilarityMap { ratio: 0.5, translate: t.to_vec() })
        .collect();
    IfsSpec { ambient_dim: 2, maps, name: "square".into() }
}

/// The unit interval as two half-scale copies.
pub fn unit_interval() -> IfsSpec {
    let maps = vec![
        SimilarityMap { ratio: 0.5, translate: vec![0.0] },
        SimilarityMap { ratio: 0.5, translate: vec![0.5] },
    ];
    IfsSpec { ambient_dim: 1, maps, name: "interval".into() }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["cantor4", "carpet", "square", "interval"];

/// Looks up a built-in generator. `cantor4:<rho>` selects a Cantor dust
/// with a custom contraction.
pub fn builtin(name: &str) -> Result<IfsSpec> {
    match name {
        "cantor4" => cantor_dust(1.0 / 3.0),
        "carpet" => Ok(sierpinski_carpet()),
        "square" => Ok(unit_square()),
        "interval" => Ok(unit_interval()),
        other => match other.strip_prefix("cantor4:") {
            Some(rho) => {
                let rho: f64 = rho
                    .parse()
                    .map_err(|_| FrakError::UnknownGenerator(other.to_string()))?;
                cantor_dust(rho)
            }
            None => Err(FrakError::UnknownGenerator(other.to_string())),
        },
    }
}

/// Solves the Moran equation `sum_i ratio_i^s = 1` by bisection.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(FrakError::EmptyRatios);
    }
    if let Some(&bad) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(FrakError::OutOfRange(bad));
    }
    let moran = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    // moran is strictly decreasing with moran(0) = N - 1 >= 0.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while moran(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > MORAN_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if moran(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Weighted point cloud approximating `(S, H^s)` normalized to total mass 1.
#[derive(Debug, Clone)]
pub struct WeightedPointCloud {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    s: f64,
    depth: usize,
    diam: f64,
    max_ratio: f64,
    name: String,
    // point indices sorted by first coordinate, used by range queries
    by_first: Vec<usize>,
    first_sorted: Vec<f64>,
}

impl WeightedPointCloud {
    /// Assembles a cloud from raw parts. Weights are used as given.
    pub fn from_parts(
        name: impl Into<String>,
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        s: f64,
        depth: usize,
        diam: f64,
        max_ratio: f64,
    ) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(FrakError::InvalidParameter(
                "points and weights must be nonempty and of equal length".into(),
            ));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(FrakError::InvalidParameter("point of wrong dimension".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(FrakError::InvalidParameter("weights must be positive".into()));
        }
        if !(diam > 0.0) {
            return Err(FrakError::InvalidParameter("diam must be positive".into()));
        }
        let coords: Vec<f64> = points.into_iter().flatten().collect();
        let mut by_first: Vec<usize> = (0..weights.len()).collect();
        by_first.sort_by(|&a, &b| coords[a * dim].total_cmp(&coords[b * dim]).then(a.cmp(&b)));
        let first_sorted = by_first.iter().map(|&i| coords[i * dim]).collect();
        Ok(Self {
            dim,
            coords,
            weights,
            s,
            depth,
            diam,
            max_ratio,
            name: name.into(),
            by_first,
            first_sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn diam(&self) -> f64 {
        self.diam
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_ratio(&self) -> f64 {
        self.max_ratio
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `diam * max_ratio^depth`: the side of the finest generation's cells,
    /// scaled to the set's diameter.
    pub fn resolution_scale(&self) -> f64 {
        self.diam * self.max_ratio.powi(self.depth as i32)
    }

    /// Axis-aligned bounding box of the points as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for d in 0..self.dim {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Indices whose first coordinate lies in `[lo, hi]`, ordered by that
    /// coordinate.
    pub(crate) fn first_coordinate_range(&self, lo: f64, hi: f64) -> &[usize] {
        let start = self.first_sorted.partition_point(|&v| v < lo);
        let end = self.first_sorted.partition_point(|&v| v <= hi);
        &self.by_first[start..end.max(start)]
    }
}

/// Builds the depth-`depth` cloud of `ifs` under the default point cap.
pub fn build_cloud(ifs: &IfsSpec, depth: usize) -> Result<WeightedPointCloud> {
    build_cloud_with_cap(ifs, depth, DEFAULT_POINT_CAP)
}

pub fn build_cloud_with_cap(
    ifs: &IfsSpec,
    depth: usize,
    cap: usize,
) -> Result<WeightedPointCloud> {
    ifs.validate()?;
    let n = ifs.ambient_dim;
    let maps = ifs.maps.len() as u128;
    let count = (0..depth).try_fold(1u128, |acc, _| acc.checked_mul(maps));
    match count {
        Some(c) if c <= cap as u128 => {}
        other => {
            return Err(FrakError::BudgetExceeded { points: other.unwrap_or(u128::MAX), cap })
        }
    }
    let ratios = ifs.ratios();
    let s = moran_dimension(&ratios)?;
    if !(s > n as f64 - 1.0 && s <= n as f64 + 1e-9) {
        return Err(FrakError::DimensionOutOfRange { s, n });
    }
    let raw: Vec<f64> = ratios.iter().map(|r| r.powf(s)).collect();
    let raw_total: f64 = raw.iter().sum();
    let shares: Vec<f64> = raw.iter().map(|m| m / raw_total).collect();

    // (offset, side, mass) per cell, words in lexicographic order
    let mut cells: Vec<(Vec<f64>, f64, f64)> = vec![(vec![0.0; n], 1.0, 1.0)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(cells.len() * ifs.maps.len());
        for (offset, side, mass) in &cells {
            for (map, share) in ifs.maps.iter().zip(&shares) {
                let child: Vec<f64> =
                    offset.iter().zip(&map.translate).map(|(o, t)| o + side * t).collect();
                next.push((child, side * map.ratio, mass * share));
            }
        }
        cells = next;
    }

    let diam = cover_diameter(&cells, n);
    let total: f64 = cells.iter().map(|c| c.2).sum();
    let mut points = Vec::with_capacity(cells.len());
    let mut weights = Vec::with_capacity(cells.len());
    for (offset, side, mass) in cells {
        points.push(offset.iter().map(|o| o + 0.5 * side).collect());
        weights.push(mass / total);
    }
    WeightedPointCloud::from_parts(
        ifs.name.clone(),
        n,
        points,
        weights,
        s,
        depth,
        diam,
        ifs.max_ratio(),
    )
}

/// Diameter of the union of cells, taken over corners of the cells that are
/// extremal in some coordinate.
fn cover_diameter(cells: &[(Vec<f64>, f64, f64)], n: usize) -> f64 {
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (offset, side, _) in cells {
        for d in 0..n {
            lo[d] = lo[d].min(offset[d]);
            hi[d] = hi[d].max(offset[d] + side);
        }
    }
    let eps = 1e-12;
    let mut corners: Vec<Vec<f64>> = Vec::new();
    for (offset, side, _) in cells {
        let extremal = (0..n).any(|d| offset[d] <= lo[d] + eps || offset[d] + side >= hi[d] - eps);
        if !extremal {
            continue;
        }
        for mask in 0..(1usize << n) {
            corners.push(
                (0..n)
                    .map(|d| if mask >> d & 1 == 1 { offset[d] + side } else { offset[d] })
                    .collect(),
            );
        }
    }
    corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
    corners.dedup();
    let mut best = 0.0f64;
    for (i, a) in corners.iter().enumerate() {
        for b in &corners[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.max(d2);
        }
    }
    best.sqrt()
}

/// Empirical Ahlfors regularity constants of a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct AhlforsReport {
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub samples: usize,
    pub scale_range: (f64, f64),
}

impl AhlforsReport {
    pub fn spread(&self) -> f64 {
        self.c2_hat / self.c1_hat
    }
}

/// Min and max of `mu(Q(x, r)) / r^s` over `samples` random cloud points
/// (drawn from `seed`) and every listed scale.
pub fn ahlfors_constants(
    cloud: &WeightedPointCloud,
    samples: usize,
    scales: &[f64],
    seed: u64,
) -> Result<AhlforsReport> {
    if samples == 0 || scales.is_empty() {
        return Err(FrakError::InvalidParameter("need samples and scales".into()));
    }
    let minimum = cloud.resolution_scale();
    for &r in scales {
        if r < minimum * (1.0 - 1e-12) {
            return Err(FrakError::ScaleTooFine { scale: r, minimum });
        }
        if r > cloud.diam() * (1.0 + 1e-12) {
            return Err(FrakError::InvalidParameter(format!(
                "scale {r} exceeds diam {}",
                cloud.diam()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for _ in 0..samples {
        let x = rng.random_range(0..cloud.len());
        for &r in scales {
            let mass = restrict(cloud, &Cube::new(cloud.point(x).to_vec(), r)).mass;
            let ratio = mass / r.powf(cloud.s());
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
    }
    let r_min = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = scales.iter().copied().fold(0.0, f64::max);
    Ok(AhlforsReport { c1_hat: c1, c2_hat: c2, samples, scale_range: (r_min, r_max) })
}
