//! Fractional sharp maximal functions and the Hardy–Littlewood maximal
//! operator on a cloud.
//!
//! The supremum over `t > 0` runs over a dyadic grid `t = diam * 2^-nu`,
//! truncated below at a multiple of the cloud's resolution scale.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FrakError, Result};
use crate::geometry::{restrict, Cube};
use crate::gridfn::GridFunction;
use crate::measure::WeightedPointCloud;
use crate::polyapprox::best_approx_on;

/// Smallest admissible half-side as a multiple of the resolution scale.
pub const DEFAULT_RESOLUTION_MULTIPLE: f64 = 4.0;

/// `k = -floor(-alpha)`, the greatest integer strictly below `alpha + 1`.
pub fn degree_for_sharp(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(FrakError::NonpositiveAlpha(alpha));
    }
    Ok((-(-alpha).floor()) as usize)
}

/// `k = floor(alpha) + 1`, the smallest integer strictly above `alpha`.
pub fn degree_for_flat(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(FrakError::NonpositiveAlpha(alpha));
    }
    Ok(alpha.floor() as usize + 1)
}

/// Which degree rule a maximal function uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `k = -[-alpha]` (`f♯`).
    Sharp,
    /// `k = [alpha] + 1` (`f♭`).
    Flat,
}

impl Variant {
    pub fn degree(self, alpha: f64) -> Result<usize> {
        match self {
            Variant::Sharp => degree_for_sharp(alpha),
            Variant::Flat => degree_for_flat(alpha),
        }
    }

    /// Sharp for non-integer `alpha`, flat for integer `alpha`.
    pub fn for_alpha(alpha: f64) -> Variant {
        if alpha.fract() == 0.0 {
            Variant::Flat
        } else {
            Variant::Sharp
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Sharp => "sharp",
            Variant::Flat => "flat",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = FrakError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Variant::Sharp),
            "flat" => Ok(Variant::Flat),
            other => Err(FrakError::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

/// Overrides for the dyadic scale window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleWindow {
    pub nu_min: u32,
    pub nu_max: Option<u32>,
    pub resolution_multiple: f64,
}

impl Default for ScaleWindow {
    fn default() -> Self {
        Self { nu_min: 0, nu_max: None, resolution_multiple: DEFAULT_RESOLUTION_MULTIPLE }
    }
}

/// Decreasing dyadic scales `diam * 2^-nu`, `nu = nu_min..=nu_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    nus: Vec<u32>,
    scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(diam: f64, nus: impl IntoIterator<Item = u32>) -> Self {
        let nus: Vec<u32> = nus.into_iter().collect();
        let scales = nus.iter().map(|&nu| diam * 0.5f64.powi(nu as i32)).collect();
        Self { nus, scales }
    }

    /// Largest admissible `nu`: the finest scale stays at or above
    /// `multiple * resolution_scale`.
    pub fn finest_level(cloud: &WeightedPointCloud, multiple: f64) -> u32 {
        let floor = multiple * cloud.resolution_scale();
        let mut nu = 0;
        while cloud.diam() * 0.5f64.powi(nu as i32 + 1) >= floor * (1.0 - 1e-12) {
            nu += 1;
        }
        nu
    }

    pub fn for_cloud(cloud: &WeightedPointCloud, window: &ScaleWindow) -> Result<Self> {
        let finest = Self::finest_level(cloud, window.resolution_multiple);
        let nu_max = window.nu_max.unwrap_or(finest);
        if nu_max > finest {
            let scale = cloud.diam() * 0.5f64.powi(nu_max as i32);
            return Err(FrakError::ScaleTooFine {
                scale,
                minimum: window.resolution_multiple * cloud.resolution_scale(),
            });
        }
        if window.nu_min > nu_max {
            return Err(FrakError::EmptyGrid);
        }
        Ok(Self::new(cloud.diam(), window.nu_min..=nu_max))
    }

    pub fn default_for(cloud: &WeightedPointCloud) -> Result<Self> {
        Self::for_cloud(cloud, &ScaleWindow::default())
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn levels(&self) -> &[u32] {
        &self.nus
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn nu_min(&self) -> Option<u32> {
        self.nus.first().copied()
    }

    pub fn nu_max(&self) -> Option<u32> {
        self.nus.last().copied()
    }
}

/// Normalized local errors `𝓔_k(f, Q(x_i, t_j))_{L^u(S)}` for every point
/// and grid scale; `None` where the cube is not well posed for `P_{k-1}`.
#[derive(Debug, Clone)]
pub struct LocalErrors {
    pub k: usize,
    pub u: f64,
    pub table: Vec<Vec<Option<f64>>>,
}

impl LocalErrors {
    pub fn compute(
        cloud: &WeightedPointCloud,
        f: &GridFunction,
        k: usize,
        u: f64,
        grid: &ScaleGrid,
    ) -> Result<Self> {
        f.check_len(cloud)?;
        crate::polyapprox::check_exponent(u)?;
        let values = f.values();
        let table = (0..cloud.len())
            .into_par_iter()
            .map(|i| {
                grid.scales()
                    .iter()
                    .map(|&t| {
                        let cube = Cube::new(cloud.point(i).to_vec(), t);
                        let r = restrict(cloud, &cube);
                        match best_approx_on(cloud, &cube, r, values, k, u) {
                            Ok(a) => Ok(Some(a.normalized)),
                            Err(FrakError::TooFewPoints { .. } | FrakError::RankDeficient { .. }) => {
                                Ok(None)
                            }
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k, u, table })
    }

    pub fn skipped_at(&self, i: usize) -> usize {
        self.table[i].iter().filter(|e| e.is_none()).count()
    }
}

/// Sampled sharp (or flat) maximal function with per-scale diagnostics.
#[derive(Debug, Clone)]
pub struct SharpMaximal {
    pub values: GridFunction,
    pub k: usize,
    pub alpha: f64,
    pub u: f64,
    pub variant: Variant,
    /// `t^-alpha 𝓔_k(f, Q(x, t))` per point and scale; `None` if skipped.
    pub profile: Vec<Vec<Option<f64>>>,
}

impl SharpMaximal {
    pub fn skipped(&self) -> Vec<usize> {
        self.profile.iter().map(|row| row.iter().filter(|v| v.is_none()).count()).collect()
    }
}

/// `max_t t^-alpha 𝓔_k(f, Q(x, t))_{L^u(S)}` at every cloud point.
pub fn sharp_maximal(
    cloud: &WeightedPointCloud,
    f: &GridFunction,
    alpha: f64,
    u: f64,
    variant: Variant,
    grid: &ScaleGrid,
) -> Result<SharpMaximal> {
    let k = variant.degree(alpha)?;
    if grid.is_empty() {
        return Err(FrakError::EmptyGrid);
    }
    let errors = LocalErrors::compute(cloud, f, k, u, grid)?;
    sharp_from_errors(&errors, alpha, variant, grid)
}

pub fn sharp_from_errors(
    errors: &LocalErrors,
    alpha: f64,
    variant: Variant,
    grid: &ScaleGrid,
) -> Result<SharpMaximal> {
    let weights: Vec<f64> = grid.scales().iter().map(|t| t.powf(-alpha)).collect();
    let mut values = Vec::with_capacity(errors.table.len());
    let mut profile = Vec::with_capacity(errors.table.len());
    for (i, row) in errors.table.iter().enumerate() {
        let scaled: Vec<Option<f64>> =
            row.iter().zip(&weights).map(|(e, w)| e.map(|e| w * e)).collect();
        let best = scaled.iter().flatten().copied().fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.max(v)))
        });
        values.push(best.ok_or(FrakError::AllScalesSkipped(i))?);
        profile.push(scaled);
    }
    Ok(SharpMaximal {
        values: GridFunction::new(values)?,
        k: errors.k,
        alpha,
        u: errors.u,
        variant,
        profile,
    })
}

/// `M_sigma g(x) = max_t (avg_{Q(x, t)} |g|^sigma)^{1/sigma}`.
pub fn hl_maximal(
    cloud: &WeightedPointCloud,
    g: &GridFunction,
    sigma: f64,
    grid: &ScaleGrid,
) -> Result<GridFunction> {
    g.check_len(cloud)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(FrakError::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if grid.is_empty() {
        return Err(FrakError::EmptyGrid);
    }
    let gmax = g.max_abs();
    if gmax == 0.0 {
        return Ok(GridFunction::constant(cloud.len(), 0.0));
    }
    let powered: Vec<f64> = g.values().iter().map(|v| (v.abs() / gmax).powf(sigma)).collect();
    let values = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            grid.scales()
                .iter()
                .map(|&t| {
                    let r = restrict(cloud, &Cube::new(cloud.point(i).to_vec(), t));
                    let s: f64 = r.indices.iter().map(|&j| cloud.weight(j) * powered[j]).sum();
                    gmax * (s / r.mass).powf(1.0 / sigma)
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    GridFunction::new(values)
}
