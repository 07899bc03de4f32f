use nalgebra::Matrix3;

use super::CollocationSet;
use crate::error::{Error, Result};

/// The 48 signed permutation matrices of the cube group.
pub fn cube_symmetries() -> Vec<Matrix3<f64>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for p in perms {
        for signs in 0..8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    }
    out
}

/// Collocation points grouped into orbits of a symmetry group.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbits {
    /// Smallest point index of each orbit.
    pub representatives: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Orbit of every point.
    pub orbit_of: Vec<usize>,
}

/// Orbits of the collocation points under those `symmetries` that map the
/// point set onto itself within `tol`. Symmetries that do not are ignored.
pub fn point_orbits(colloc: &CollocationSet, symmetries: &[Matrix3<f64>], tol: f64) -> Result<Orbits> {
    let n = colloc.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| colloc.points[a].x.x.total_cmp(&colloc.points[b].x.x));
    let xs: Vec<f64> = order.iter().map(|&i| colloc.points[i].x.x).collect();
    let find = |q: &crate::geometry::Vec3| -> Option<usize> {
        let start = xs.partition_point(|&x| x < q.x - tol);
        order[start..]
            .iter()
            .take_while(|&&i| colloc.points[i].x.x <= q.x + tol)
            .copied()
            .find(|&i| (colloc.points[i].x - q).norm() <= tol)
    };
    // parent pointers of a union-find over point indices
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for m in symmetries {
        let image: Option<Vec<usize>> = colloc.points.iter().map(|p| find(&(m * p.x))).collect();
        let Some(image) = image else { continue };
        for (i, &j) in image.iter().enumerate() {
            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut orbit_of = vec![usize::MAX; n];
    let mut representatives = Vec::new();
    let mut sizes = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if orbit_of[r] == usize::MAX {
            orbit_of[r] = representatives.len();
            representatives.push(r);
            sizes.push(0);
        }
        orbit_of[i] = orbit_of[r];
        sizes[orbit_of[i]] += 1;
    }
    if sizes.iter().sum::<usize>() != n {
        return Err(Error::Invariant("orbit sizes do not cover the point set".into()));
    }
    Ok(Orbits { representatives, sizes, orbit_of })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{collocation_points, Discretization};
    use crate::geometry::unit_sphere;

    #[test]
    fn group_has_48_distinct_orthogonal_elements() {
        let g = cube_symmetries();
        assert_eq!(g.len(), 48);
        for (k, a) in g.iter().enumerate() {
            assert!((a * a.transpose() - Matrix3::identity()).norm() < 1e-15);
            assert!(g[..k].iter().all(|b| b != a));
        }
    }

    #[test]
    fn sphere_points_fall_into_symmetric_orbits() {
        let disc = Discretization::uniform(unit_sphere().unwrap(), 0, 4).unwrap();
        let colloc = collocation_points(&disc).unwrap();
        let o = point_orbits(&colloc, &cube_symmetries(), 1e-12).unwrap();
        assert_eq!(o.sizes.iter().sum::<usize>(), 96);
        // 4x4 cells per face: inner, corner and edge cells
        let mut sizes = o.sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![24, 24, 48]);
    }
}
