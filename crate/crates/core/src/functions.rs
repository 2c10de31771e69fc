//! Test functions of known nominal smoothness.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::gridfn::GridFunction;
use crate::measure::WeightedPointCloud;

type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named function on `R^n` with a nominal (continuum) smoothness label.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    /// Nominal smoothness `beta`; `f64::INFINITY` for smooth functions.
    pub nominal_smoothness: f64,
    /// Total degree when the function is a polynomial.
    pub polynomial_degree: Option<usize>,
    pub description: String,
    eval: Eval,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("nominal_smoothness", &self.nominal_smoothness)
            .field("polynomial_degree", &self.polynomial_degree)
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        nominal_smoothness: f64,
        description: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            nominal_smoothness,
            polynomial_degree: None,
            description: description.into(),
            eval: Arc::new(eval),
        }
    }

    fn polynomial(mut self, degree: usize) -> Self {
        self.polynomial_degree = Some(degree);
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const_{c}"), f64::INFINITY, "constant", move |_| c).polynomial(0)
    }

    /// `|x - x0|^beta`.
    pub fn cusp(x0: Vec<f64>, beta: f64, tag: &str) -> Self {
        Self::new(
            format!("cusp_b{beta}_{tag}"),
            beta,
            format!("Hölder cusp |x - x0|^{beta}"),
            move |x| {
                let r2: f64 = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
                r2.sqrt().powf(beta)
            },
        )
    }

    /// `sum_{j=0}^{levels} 2^{-j beta} cos(2^j * 2 pi * omega . x)`.
    pub fn lacunary(omega: Vec<f64>, beta: f64, levels: u32) -> Self {
        Self::new(
            format!("lacunary_b{beta}"),
            beta,
            format!("lacunary cosine sum, {} octaves", levels + 1),
            move |x| {
                let phase: f64 = 2.0 * PI * x.iter().zip(&omega).map(|(a, b)| a * b).sum::<f64>();
                (0..=levels)
                    .map(|j| {
                        let scale = 2f64.powi(j as i32);
                        scale.powf(-beta) * (scale * phase).cos()
                    })
                    .sum()
            },
        )
    }
}

/// Evaluates a test function on every cloud point.
pub fn sample(tf: &TestFunction, cloud: &WeightedPointCloud) -> Result<GridFunction> {
    GridFunction::sample(cloud, |x| tf.eval(x))
}

/// Octaves used by the lacunary sums.
pub const LACUNARY_LEVELS: u32 = 10;
/// Transition width of the steep sigmoid.
pub const SIGMOID_WIDTH: f64 = 0.02;

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// The standard battery: two constants, polynomials of degrees 1 to 3,
/// Hölder cusps at three seeded cloud points, two lacunary sums, and a
/// steep sigmoid.
pub fn battery(cloud: &WeightedPointCloud, seed: u64) -> Vec<TestFunction> {
    let n = cloud.dim();
    let last = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![TestFunction::constant(1.0), TestFunction::constant(-2.5)];

    out.push(
        TestFunction::new("poly_deg1", f64::INFINITY, "0.5 + x1 - 0.25 xn", move |x| {
            0.5 + x[0] - 0.25 * x[last]
        })
        .polynomial(1),
    );
    out.push(
        TestFunction::new("poly_deg2", f64::INFINITY, "x1^2 - 0.5 x1 xn + 0.3 xn", move |x| {
            x[0] * x[0] - 0.5 * x[0] * x[last] + 0.3 * x[last]
        })
        .polynomial(2),
    );
    out.push(
        TestFunction::new("poly_deg3", f64::INFINITY, "x1^3 - 2 x1 xn^2 + xn", move |x| {
            x[0].powi(3) - 2.0 * x[0] * x[last] * x[last] + x[last]
        })
        .polynomial(3),
    );

    let centers: Vec<usize> = (0..3).map(|_| rng.random_range(0..cloud.len())).collect();
    for beta in [0.3, 0.6, 0.9] {
        for (j, &c) in centers.iter().enumerate() {
            out.push(TestFunction::cusp(cloud.point(c).to_vec(), beta, &format!("x{j}")));
        }
    }

    for beta in [0.5, 1.5] {
        let omega = random_direction(&mut rng, n);
        out.push(TestFunction::lacunary(omega, beta, LACUNARY_LEVELS));
    }

    let omega = random_direction(&mut rng, n);
    let (lo, hi) = cloud.bounding_box();
    let mid: f64 = (0..n).map(|d| 0.5 * (lo[d] + hi[d]) * omega[d]).sum();
    out.push(TestFunction::new(
        "sigmoid",
        f64::INFINITY,
        format!("tanh((omega . x - c) / {SIGMOID_WIDTH})"),
        move |x| {
            let t: f64 = x.iter().zip(&omega).map(|(a, b)| a * b).sum::<f64>() - mid;
            (t / SIGMOID_WIDTH).tanh()
        },
    ));
    out
}

/// Battery listing as an aligned text table.
pub fn battery_table(functions: &[TestFunction]) -> String {
    let width = functions.iter().map(|f| f.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}  nominal_beta\n", "name");
    for f in functions {
        let beta = if f.nominal_smoothness.is_infinite() {
            "inf".to_string()
        } else {
            f.nominal_smoothness.to_string()
        };
        out.push_str(&format!("{:<width$}  {beta}\n", f.name));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_cloud, builtin, unit_square};

    #[test]
    fn sampling_examples() {
        let cloud = build_cloud(&unit_square(), 3).unwrap();
        let one = sample(&TestFunction::constant(1.0), &cloud).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let x1 = TestFunction::new("x1", f64::INFINITY, "first coordinate", |x| x[0]);
        let g = sample(&x1, &cloud).unwrap();
        for (i, p) in cloud.points().enumerate() {
            assert_eq!(g[i], p[0]);
        }
        let cusp = TestFunction::cusp(cloud.point(5).to_vec(), 0.6, "a");
        assert_eq!(sample(&cusp, &cloud).unwrap()[5], 0.0);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let cloud = build_cloud(&unit_square(), 1).unwrap();
        let bad = TestFunction::new("bad", 0.0, "log", |x| (x[0] - 0.25).abs().ln() / 0.0);
        assert!(sample(&bad, &cloud).is_err());
    }

    #[test]
    fn battery_is_deterministic_and_large_enough() {
        let cloud = build_cloud(&builtin("cantor4").unwrap(), 3).unwrap();
        let a = battery(&cloud, 11);
        let b = battery(&cloud, 11);
        assert!(a.len() >= 12);
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.name, fb.name);
            assert_eq!(sample(fa, &cloud).unwrap(), sample(fb, &cloud).unwrap());
        }
        let table = battery_table(&a);
        assert_eq!(table.lines().count(), a.len() + 1);
        assert!(table.contains("cusp_b0.3_x0"));
    }
}
