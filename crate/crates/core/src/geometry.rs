//! Cubes, restriction of a cloud to a cube, and dyadic nets.

use crate::error::{FrakError, Result};
use crate::measure::WeightedPointCloud;

/// Closed axis-parallel cube `Q(center, half_side)` of side `2 * half_side`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub center: Vec<f64>,
    pub half_side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, half_side: f64) -> Self {
        debug_assert!(half_side > 0.0);
        Self { center, half_side }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_side
    }

    /// The concentric cube scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Cube {
        Cube::new(self.center.clone(), self.half_side * factor)
    }

    fn slack(&self) -> f64 {
        self.half_side * (1.0 + 1e-12) + 1e-14
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = self.slack();
        self.center.iter().zip(x).all(|(c, v)| (v - c).abs() <= r)
    }

    /// Whether `other` lies inside this cube.
    pub fn contains_cube(&self, other: &Cube) -> bool {
        self.center
            .iter()
            .zip(&other.center)
            .all(|(a, b)| (a - b).abs() + other.half_side <= self.half_side * (1.0 + 1e-12))
    }
}

/// Indices of the cloud points in a cube and their total weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Restriction {
    pub indices: Vec<usize>,
    pub mass: f64,
}

impl Restriction {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `Q ∩ S` on the cloud. Indices come back in increasing order.
pub fn restrict(cloud: &WeightedPointCloud, cube: &Cube) -> Restriction {
    let r = cube.slack();
    let c0 = cube.center[0];
    let mut indices: Vec<usize> = cloud
        .first_coordinate_range(c0 - r, c0 + r)
        .iter()
        .copied()
        .filter(|&i| cube.contains(cloud.point(i)))
        .collect();
    indices.sort_unstable();
    let mass = indices.iter().map(|&i| cloud.weight(i)).sum();
    Restriction { indices, mass }
}

/// Partition of a box into cubes of side `mesh = 2^-level`.
#[derive(Debug, Clone)]
pub struct Net {
    pub level: u32,
    pub mesh: f64,
    pub cubes: Vec<Cube>,
    anchor: Vec<f64>,
    counts: Vec<usize>,
}

impl Net {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Index of the net cube that owns `x`. Points on shared faces go to
    /// the lower cell index along each axis; points outside the box are
    /// clamped to the nearest cell.
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut index = 0;
        let mut stride = 1;
        for d in 0..self.anchor.len() {
            let t = (x[d] - self.anchor[d]) / self.mesh;
            let mut cell = t.ceil() as i64 - 1;
            if cell < 0 {
                cell = 0;
            }
            let cell = (cell as usize).min(self.counts[d] - 1);
            index += cell * stride;
            stride *= self.counts[d];
        }
        index
    }

    /// Point indices of the cloud grouped by owning cube.
    pub fn assign(&self, cloud: &WeightedPointCloud) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.cubes.len()];
        for (i, p) in cloud.points().enumerate() {
            groups[self.cell_of(p)].push(i);
        }
        groups
    }

    pub fn masses(&self, cloud: &WeightedPointCloud) -> Vec<f64> {
        self.assign(cloud)
            .iter()
            .map(|g| g.iter().map(|&i| cloud.weight(i)).sum())
            .collect()
    }
}

/// Dyadic net of mesh `2^-level` over `bbox = (lower, upper)`, anchored at
/// `lower + offset`.
pub fn dyadic_net(level: u32, bbox: (&[f64], &[f64]), offset: Option<&[f64]>) -> Net {
    let (lower, upper) = bbox;
    let n = lower.len();
    let mesh = 0.5f64.powi(level as i32);
    let anchor: Vec<f64> = match offset {
        Some(off) => lower.iter().zip(off).map(|(l, o)| l + o).collect(),
        None => lower.to_vec(),
    };
    let counts: Vec<usize> = (0..n)
        .map(|d| {
            let extent = (upper[d] - anchor[d]).max(0.0);
            ((extent / mesh - 1e-9).ceil() as usize).max(1)
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut cubes = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let center = (0..n)
            .map(|d| {
                let cell = rem % counts[d];
                rem /= counts[d];
                anchor[d] + (cell as f64 + 0.5) * mesh
            })
            .collect();
        cubes.push(Cube::new(center, 0.5 * mesh));
    }
    Net { level, mesh, cubes, anchor, counts }
}

/// Dyadic net over the cloud's bounding box, rejecting meshes finer than
/// the cloud's resolution scale.
pub fn dyadic_net_for(cloud: &WeightedPointCloud, level: u32) -> Result<Net> {
    let mesh = 0.5f64.powi(level as i32);
    let minimum = cloud.resolution_scale();
    if mesh < minimum {
        return Err(FrakError::ScaleTooFine { scale: mesh, minimum });
    }
    let (lo, hi) = cloud.bounding_box();
    Ok(dyadic_net(level, (&lo, &hi), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_cloud, builtin, unit_square};
    use approx::assert_abs_diff_eq;

    #[test]
    fn whole_and_disjoint_cubes() {
        let cloud = build_cloud(&builtin("cantor4").unwrap(), 3).unwrap();
        let all = restrict(&cloud, &Cube::new(vec![0.5, 0.5], 1.0));
        assert_eq!(all.len(), 64);
        assert_abs_diff_eq!(all.mass, 1.0, epsilon = 1e-12);
        let none = restrict(&cloud, &Cube::new(vec![5.0, 5.0], 1.0));
        assert!(none.is_empty());
        assert_eq!(none.mass, 0.0);
    }

    #[test]
    fn depth_one_cell_holds_a_quarter() {
        let cloud = build_cloud(&builtin("cantor4").unwrap(), 3).unwrap();
        let cell = Cube::new(vec![1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0);
        let r = restrict(&cloud, &cell);
        assert_eq!(r.len(), 16);
        assert_abs_diff_eq!(r.mass, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn cell_masses_are_self_similar() {
        // every depth-j cell carries 4^-j = (3^-j)^s
        let cloud = build_cloud(&builtin("cantor4").unwrap(), 4).unwrap();
        let mut cells = vec![(vec![0.0, 0.0], 1.0)];
        for j in 1..=4 {
            let mut next = Vec::new();
            for (o, side) in &cells {
                let child = side / 3.0;
                for t in [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]] {
                    next.push((vec![o[0] + t[0] * child, o[1] + t[1] * child], child));
                }
            }
            cells = next;
            for (o, side) in &cells {
                let cube = Cube::new(vec![o[0] + side / 2.0, o[1] + side / 2.0], side / 2.0);
                let mass = restrict(&cloud, &cube).mass;
                assert_abs_diff_eq!(mass, 4f64.powi(-j), epsilon = 1e-14);
                assert_abs_diff_eq!(mass, side.powf(cloud.s()), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn unit_square_nets() {
        let lo = [0.0, 0.0];
        let hi = [1.0, 1.0];
        assert_eq!(dyadic_net(0, (&lo, &hi), None).len(), 1);
        assert_eq!(dyadic_net(2, (&lo, &hi), None).len(), 16);
    }

    #[test]
    fn net_partitions_the_cloud() {
        let cloud = build_cloud(&unit_square(), 4).unwrap();
        let net = dyadic_net_for(&cloud, 2).unwrap();
        let groups = net.assign(&cloud);
        let mut seen = vec![0; cloud.len()];
        for (c, g) in groups.iter().enumerate() {
            for &i in g {
                seen[i] += 1;
                assert!(net.cubes[c].contains(cloud.point(i)));
            }
        }
        assert!(seen.iter().all(|&k| k == 1));
        assert_abs_diff_eq!(net.masses(&cloud).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shared_faces_go_to_the_lower_cell() {
        let lo = [0.0];
        let hi = [1.0];
        let net = dyadic_net(1, (&lo, &hi), None);
        assert_eq!(net.cell_of(&[0.5]), 0);
        assert_eq!(net.cell_of(&[0.50001]), 1);
        assert_eq!(net.cell_of(&[0.0]), 0);
        assert_eq!(net.cell_of(&[1.0]), 1);
    }

    #[test]
    fn too_fine_net_is_rejected() {
        let cloud = build_cloud(&unit_square(), 2).unwrap();
        assert!(matches!(dyadic_net_for(&cloud, 6), Err(FrakError::ScaleTooFine { .. })));
    }
}
