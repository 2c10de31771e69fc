use nalgebra::{DMatrix, SymmetricEigen};

use super::polynomial::{basis_size, multi_indices, Frame, Polynomial};
use crate::error::{FrakError, Result};
use crate::geometry::{restrict, Cube, Restriction};
use crate::gridfn::GridFunction;
use crate::measure::WeightedPointCloud;

/// Eigenvalues below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Minimum number of cube points per basis polynomial.
pub const POINTS_PER_BASIS: usize = 2;

/// Orthogonal projector of `L^2(Q_S, mu)` onto `P_{k-1}`.
///
/// The basis is orthonormal for `<f, g> = sum_{i in Q_S} w_i f(x_i) g(x_i)`
/// and is built from the monomials in the cube's chart `(x - c) / r`, which
/// maps the cube onto `[-1, 1]^n`.
#[derive(Debug, Clone)]
pub struct Projector {
    cube: Cube,
    k: usize,
    frame: Frame,
    restriction: Restriction,
    basis: Vec<Polynomial>,
    // basis_values[(row, j)] = p_j(x_row) for the rows of Q_S
    basis_values: DMatrix<f64>,
    // coefficient matrix: column j holds p_j in the monomial basis
    coeff_matrix: DMatrix<f64>,
    gram_cond: f64,
}

/// Local frame of the listed points: centered at the middle of their
/// bounding box and scaled by its half extent, falling back to the cube
/// when the points coincide. Depending only on the point set, identical
/// restrictions of different cubes give bitwise identical fits.
pub(crate) fn local_frame(cloud: &WeightedPointCloud, indices: &[usize], cube: &Cube) -> Frame {
    let n = cloud.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for &i in indices {
        for (d, &v) in cloud.point(i).iter().enumerate() {
            lo[d] = lo[d].min(v);
            hi[d] = hi[d].max(v);
        }
    }
    let scale = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).fold(0.0f64, f64::max);
    if indices.is_empty() || !(scale > 0.0) {
        return Frame { center: cube.center.clone(), scale: cube.half_side };
    }
    Frame { center: lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(), scale }
}

/// Monomial design matrix of the listed points in `frame`.
pub(crate) fn design_matrix(
    cloud: &WeightedPointCloud,
    indices: &[usize],
    frame: &Frame,
    k: usize,
) -> DMatrix<f64> {
    let betas = multi_indices(cloud.dim(), k);
    let m = betas.len();
    let mut x = DMatrix::zeros(indices.len(), m);
    let mut row = vec![0.0; m];
    for (r, &i) in indices.iter().enumerate() {
        frame.monomials_into(cloud.point(i), k, &betas, &mut row);
        for j in 0..m {
            x[(r, j)] = row[j];
        }
    }
    x
}

/// Builds `P_Q` for `P_{k-1}` on `Q ∩ S`.
pub fn make_projector(cloud: &WeightedPointCloud, cube: &Cube, k: usize) -> Result<Projector> {
    let restriction = restrict(cloud, cube);
    projector_from_restriction(cloud, cube, restriction, k)
}

pub(crate) fn projector_from_restriction(
    cloud: &WeightedPointCloud,
    cube: &Cube,
    restriction: Restriction,
    k: usize,
) -> Result<Projector> {
    let m = basis_size(cloud.dim(), k);
    let needed = (POINTS_PER_BASIS * m).max(1);
    if restriction.len() < needed || !(restriction.mass > 0.0) {
        return Err(FrakError::TooFewPoints { found: restriction.len(), needed });
    }
    let frame = local_frame(cloud, &restriction.indices, cube);
    let x = design_matrix(cloud, &restriction.indices, &frame, k);
    let w: Vec<f64> = restriction.indices.iter().map(|&i| cloud.weight(i)).collect();

    let mut gram = DMatrix::zeros(m, m);
    for (r, wr) in w.iter().enumerate() {
        for a in 0..m {
            let xa = x[(r, a)] * wr;
            for b in 0..=a {
                gram[(a, b)] += xa * x[(r, b)];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }

    let (coeff_matrix, gram_cond) = if m == 0 {
        (DMatrix::zeros(0, 0), 1.0)
    } else {
        let eig: SymmetricEigen<f64, nalgebra::Dyn> = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > lmax * RANK_TOLERANCE).count();
        if rank < m || !(lmax > 0.0) {
            return Err(FrakError::RankDeficient { rank, needed: m });
        }
        let mut coeffs = eig.eigenvectors.clone();
        for j in 0..m {
            let scale: f64 = 1.0 / eig.eigenvalues[j].sqrt();
            coeffs.column_mut(j).scale_mut(scale);
        }
        (coeffs, lmax / lmin)
    };

    let basis_values = &x * &coeff_matrix;
    let basis = (0..m)
        .map(|j| Polynomial::from_coeffs(frame.clone(), k, coeff_matrix.column(j).iter().copied().collect()))
        .collect();
    Ok(Projector {
        cube: cube.clone(),
        k,
        frame,
        restriction,
        basis,
        basis_values,
        coeff_matrix,
        gram_cond,
    })
}

impl Projector {
    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn basis(&self) -> &[Polynomial] {
        &self.basis
    }

    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    pub fn indices(&self) -> &[usize] {
        &self.restriction.indices
    }

    pub fn mass(&self) -> f64 {
        self.restriction.mass
    }

    /// Eigenvalue ratio of the monomial Gram matrix.
    pub fn gram_cond(&self) -> f64 {
        self.gram_cond
    }

    /// Discrete inner products `<p_a, p_b>` of the basis.
    pub fn basis_gram(&self, cloud: &WeightedPointCloud) -> DMatrix<f64> {
        let m = self.basis.len();
        let mut g = DMatrix::zeros(m, m);
        for (r, &i) in self.indices().iter().enumerate() {
            let w = cloud.weight(i);
            for a in 0..m {
                for b in 0..m {
                    g[(a, b)] += w * self.basis_values[(r, a)] * self.basis_values[(r, b)];
                }
            }
        }
        g
    }

    /// `<f, p_beta>` for every basis polynomial.
    fn inner_products(&self, cloud: &WeightedPointCloud, values: &[f64]) -> Vec<f64> {
        let m = self.basis.len();
        let mut c = vec![0.0; m];
        for (r, &i) in self.indices().iter().enumerate() {
            let wf = cloud.weight(i) * values[i];
            for (j, cj) in c.iter_mut().enumerate() {
                *cj += wf * self.basis_values[(r, j)];
            }
        }
        c
    }

    /// `P_Q f = sum_beta <f, p_beta> p_beta`, using the values of `f` on the
    /// cube's points (`values` is indexed by cloud point).
    pub fn apply_values(&self, cloud: &WeightedPointCloud, values: &[f64]) -> Polynomial {
        let c = self.inner_products(cloud, values);
        let m = c.len();
        let mut coeffs = vec![0.0; m];
        for (j, cj) in c.iter().enumerate() {
            for (a, slot) in coeffs.iter_mut().enumerate() {
                *slot += cj * self.coeff_matrix[(a, j)];
            }
        }
        Polynomial::from_coeffs(self.frame.clone(), self.k, coeffs)
    }

    /// Values of `P_Q f` at the cube's points, in the order of [`Self::indices`].
    pub fn projected_values(&self, cloud: &WeightedPointCloud, values: &[f64]) -> Vec<f64> {
        let c = self.inner_products(cloud, values);
        (0..self.indices().len())
            .map(|r| c.iter().enumerate().map(|(j, cj)| cj * self.basis_values[(r, j)]).sum())
            .collect()
    }

    /// `max_{Q_S} |P_Q f| / avg_{Q_S} |f|`, the constant of the pointwise
    /// bound `|P_Q f(y)| <= c avg |f|`. Zero when `f` vanishes on `Q_S`.
    pub fn sup_bound_ratio(&self, cloud: &WeightedPointCloud, values: &[f64]) -> f64 {
        let avg = self.indices().iter().map(|&i| cloud.weight(i) * values[i].abs()).sum::<f64>()
            / self.mass();
        let sup = self
            .projected_values(cloud, values)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if avg == 0.0 {
            0.0
        } else {
            sup / avg
        }
    }

    /// `sum_beta ||p_beta||_{L^u(Q_S)} ||p_beta||_{L^u'(Q_S)}` with `1/u + 1/u' = 1`.
    pub fn holder_bound(&self, cloud: &WeightedPointCloud, u: f64) -> f64 {
        let conj = if u == 1.0 { f64::INFINITY } else { u / (u - 1.0) };
        let norm = |j: usize, exponent: f64| -> f64 {
            if exponent.is_infinite() {
                (0..self.indices().len()).fold(0.0f64, |m, r| m.max(self.basis_values[(r, j)].abs()))
            } else {
                self.indices()
                    .iter()
                    .enumerate()
                    .map(|(r, &i)| cloud.weight(i) * self.basis_values[(r, j)].abs().powf(exponent))
                    .sum::<f64>()
                    .powf(1.0 / exponent)
            }
        };
        (0..self.basis.len()).map(|j| norm(j, u) * norm(j, conj)).sum()
    }
}

/// `P_Q f` as a polynomial.
pub fn apply_projector(proj: &Projector, cloud: &WeightedPointCloud, f: &GridFunction) -> Result<Polynomial> {
    f.check_len(cloud)?;
    Ok(proj.apply_values(cloud, f.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_cloud, builtin, unit_interval};
    use approx::assert_abs_diff_eq;

    fn cantor(depth: usize) -> WeightedPointCloud {
        build_cloud(&builtin("cantor4").unwrap(), depth).unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        let cloud = cantor(4);
        let cube = Cube::new(cloud.point(17).to_vec(), 0.3);
        for k in 1..=3 {
            let proj = make_projector(&cloud, &cube, k).unwrap();
            let g = proj.basis_gram(&cloud);
            let m = g.nrows();
            for a in 0..m {
                for b in 0..m {
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(g[(a, b)], expected, epsilon = 1e-8);
                }
            }
            assert!(proj.gram_cond() >= 1.0);
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let cloud = cantor(4);
        let cube = Cube::new(cloud.point(100).to_vec(), 0.25);
        let proj = make_projector(&cloud, &cube, 3).unwrap();
        let f = GridFunction::constant(cloud.len(), -2.75);
        let p = apply_projector(&proj, &cloud, &f).unwrap();
        assert_abs_diff_eq!(p.coeffs()[0], -2.75, epsilon = 1e-10);
        for c in &p.coeffs()[1..] {
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn degree_one_projection_is_the_weighted_mean() {
        let cloud = build_cloud(&unit_interval(), 6).unwrap();
        let f = GridFunction::sample(&cloud, |x| (7.0 * x[0]).sin() + x[0] * x[0]).unwrap();
        let cube = Cube::new(cloud.point(9).to_vec(), 0.2);
        let proj = make_projector(&cloud, &cube, 1).unwrap();
        let p = apply_projector(&proj, &cloud, &f).unwrap();
        let r = restrict(&cloud, &cube);
        let mean = r.indices.iter().map(|&i| cloud.weight(i) * f[i]).sum::<f64>() / r.mass;
        assert_abs_diff_eq!(p.eval(cloud.point(9)), mean, epsilon = 1e-12);
    }

    #[test]
    fn half_indicator_projects_to_mass_fraction() {
        let cloud = cantor(3);
        let cube = Cube::new(cloud.point(0).to_vec(), 0.4);
        let proj = make_projector(&cloud, &cube, 1).unwrap();
        let idx = proj.indices().to_vec();
        let mut values = vec![0.0; cloud.len()];
        for &i in idx.iter().step_by(2) {
            values[i] = 1.0;
        }
        let chosen: f64 = idx.iter().step_by(2).map(|&i| cloud.weight(i)).sum();
        let p = proj.apply_values(&cloud, &values);
        assert_abs_diff_eq!(p.coeffs()[0], chosen / proj.mass(), epsilon = 1e-12);
    }

    #[test]
    fn zero_maps_to_zero_polynomial() {
        let cloud = cantor(3);
        let cube = Cube::new(cloud.point(5).to_vec(), 0.5);
        let proj = make_projector(&cloud, &cube, 2).unwrap();
        let p = apply_projector(&proj, &cloud, &GridFunction::constant(cloud.len(), 0.0)).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn too_few_points_and_rank_deficiency() {
        let cloud = cantor(3);
        let tiny = Cube::new(cloud.point(0).to_vec(), 0.01);
        assert!(matches!(make_projector(&cloud, &tiny, 2), Err(FrakError::TooFewPoints { .. })));
        // 12 points on a line cannot support quadratics in two variables
        let line = WeightedPointCloud::from_parts(
            "line",
            2,
            (0..12).map(|i| vec![i as f64 / 11.0, 0.5]).collect(),
            vec![1.0 / 12.0; 12],
            1.5,
            0,
            1.0,
            0.5,
        )
        .unwrap();
        let cube = Cube::new(vec![0.5, 0.5], 0.6);
        assert!(matches!(make_projector(&line, &cube, 3), Err(FrakError::RankDeficient { .. })));
    }

    #[test]
    fn projector_norm_bound_is_finite() {
        let cloud = cantor(4);
        let cube = Cube::new(cloud.point(33).to_vec(), 0.3);
        let proj = make_projector(&cloud, &cube, 2).unwrap();
        for u in [1.0, 2.0, 4.0] {
            let b = proj.holder_bound(&cloud, u);
            assert!(b.is_finite() && b >= 1.0 - 1e-12);
        }
        // for u = 2 each summand is ||p||_2^2 = 1
        assert_abs_diff_eq!(proj.holder_bound(&cloud, 2.0), 3.0, epsilon = 1e-9);
    }
}
