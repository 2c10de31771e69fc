use super::polynomial::Polynomial;
use crate::error::{FrakError, Result};
use crate::geometry::{restrict, Cube};
use crate::measure::WeightedPointCloud;

/// Averaged `L^q` over `L^u` norm of `poly` on `Q ∩ S`.
///
/// Returns `+inf` when the `L^u` average vanishes but the `L^q` one does not,
/// which only happens for degenerate discrete configurations.
pub fn reverse_holder_ratio(
    cloud: &WeightedPointCloud,
    cube: &Cube,
    poly: &Polynomial,
    q: f64,
    u: f64,
) -> Result<f64> {
    if !(q >= 1.0 && u >= 1.0 && q.is_finite() && u.is_finite()) {
        return Err(FrakError::InvalidParameter(format!("exponents ({q}, {u}) outside [1, inf)")));
    }
    let r = restrict(cloud, cube);
    if r.is_empty() {
        return Err(FrakError::EmptyCube);
    }
    let values: Vec<f64> = r.indices.iter().map(|&i| poly.eval(cloud.point(i))).collect();
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if vmax == 0.0 {
        return Ok(1.0);
    }
    let avg = |e: f64| -> f64 {
        let s: f64 = r
            .indices
            .iter()
            .zip(&values)
            .map(|(&i, v)| cloud.weight(i) * (v.abs() / vmax).powf(e))
            .sum();
        vmax * (s / r.mass).powf(1.0 / e)
    };
    let num = avg(q);
    let den = avg(u);
    if den == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / den)
}
