//! Support-wise quadrature for weakly and nearly singular boundary integrals.

mod dct;
mod nodes;
mod nonsingular;
mod singular;

use std::collections::BTreeMap;

pub use dct::{AlphaRule, DctMap};
pub use nodes::{gauss_legendre, ChebyshevGrid, NodePolicy, EXTRA_SLOPE};
pub use nonsingular::{
    integrate_nonsingular, integrate_region, integrate_region_explicit, region_rules, DirectionRule, GREVILLE_MAX_DEGREE, PRECISE_DEGREE,
    NonsingularInfo,
};
pub use singular::{
    integrate_duffy_triangle, integrate_singular, partition_singular_support, triangle_area, SingularInfo,
    SingularPartition, Uv,
};

use crate::error::Result;
use crate::geometry::{closest_point, MultipatchSurface, ScanGrid, Vec3};
use crate::spline::BSplineSupport;

/// Everything the support-wise rules need besides the integrand.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule {
    pub policy: NodePolicy,
    pub alpha: AlphaRule,
    /// Gauss–Legendre nodes per direction on Duffy triangles.
    pub duffy_nodes: (usize, usize),
}

impl QuadratureRule {
    pub fn new(policy: NodePolicy, alpha: AlphaRule) -> Self {
        Self { policy, alpha, duffy_nodes: policy.duffy_nodes() }
    }

    /// Same rule with the Duffy node counts multiplied by `factor`.
    pub fn with_duffy_factor(mut self, factor: usize) -> Self {
        self.duffy_nodes = (self.duffy_nodes.0 * factor, self.duffy_nodes.1 * factor);
        self
    }
}

/// The point a support integral is seen from; `param` is its preimage when
/// the point lies on the surface.
#[derive(Debug, Clone, Copy)]
pub struct Target {
    pub x: Vec3,
    pub param: Option<(usize, Uv)>,
}

/// Counters gathered while integrating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadStats {
    /// Non-singular support integrals keyed by the larger per-direction node count.
    pub histogram: BTreeMap<usize, u64>,
    pub nonsingular: u64,
    pub singular: u64,
    /// Kernel evaluation points summed over all support integrals.
    pub points: u64,
}

impl QuadStats {
    pub fn merge(&mut self, other: &QuadStats) {
        for (k, v) in &other.histogram {
            *self.histogram.entry(*k).or_insert(0) += v;
        }
        self.nonsingular += other.nonsingular;
        self.singular += other.singular;
        self.points += other.points;
    }

    pub fn integrals(&self) -> u64 {
        self.nonsingular + self.singular
    }

    /// Mean number of quadrature points per support integral.
    pub fn mean_points(&self) -> f64 {
        if self.integrals() == 0 {
            0.0
        } else {
            self.points as f64 / self.integrals() as f64
        }
    }

    /// Rows `(nodes, count, percent)` of the node histogram.
    pub fn histogram_rows(&self) -> Vec<(usize, u64, f64)> {
        let total: u64 = self.histogram.values().sum();
        self.histogram
            .iter()
            .map(|(&n, &c)| (n, c, 100.0 * c as f64 / total.max(1) as f64))
            .collect()
    }
}

/// Integral of `K(F(x̂), y) B(x̂) J(x̂)` over `support`, choosing the singular
/// rule when `y` lies on the support and the non-singular rule otherwise.
///
/// The kernel is called as `kernel(x, r, n)` with `r = x - y`.
pub fn integrate_support<const N: usize>(
    surface: &MultipatchSurface,
    support: &BSplineSupport,
    target: &Target,
    kernel: &impl Fn(&Vec3, &Vec3, &Vec3) -> [f64; N],
    rule: &QuadratureRule,
    grid: Option<&ScanGrid>,
    stats: &mut QuadStats,
) -> Result<[f64; N]> {
    let on_support = match target.param {
        Some((patch, uv)) if patch == support.patch && support.rect.contains(uv.0, uv.1) => Some(uv),
        _ => None,
    };
    let cp = match on_support {
        Some(_) => None,
        None => Some(closest_point(&surface.patches[support.patch], support.rect, &target.x, grid)),
    };
    let singular_at = match (&on_support, &cp) {
        (Some(uv), _) => Some(*uv),
        (None, Some(c)) if c.delta < 1e-12 * surface.diameter => Some(c.uv),
        _ => None,
    };
    if let Some(uv) = singular_at {
        let (v, info) = integrate_singular(
            surface,
            support,
            &target.x,
            uv,
            kernel,
            &rule.policy,
            &rule.alpha,
            rule.duffy_nodes,
        )?;
        stats.singular += 1;
        stats.points += info.points as u64;
        return Ok(v);
    }
    let cp = cp.expect("closest point computed for the non-singular branch");
    let (v, info) = integrate_region(surface, support, support.rect, &cp, &target.x, kernel, &rule.policy, &rule.alpha)?;
    stats.nonsingular += 1;
    stats.points += (info.nodes.0 * info.nodes.1) as u64;
    *stats.histogram.entry(info.nodes.0.max(info.nodes.1)).or_insert(0) += 1;
    Ok(v)
}
