use super::dd::Scalar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spline degree the fixed-size evaluation scratch supports.
pub const MAX_DEGREE: usize = 160;

/// A non-decreasing knot sequence together with the spline degree it carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::Knots(format!("degree {degree} exceeds {MAX_DEGREE}")));
        }
        if knots.len() < degree + 2 {
            return Err(Error::Knots(format!(
                "{} knots cannot carry a degree {degree} basis",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Knots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Knots("knots must be non-decreasing".into()));
        }
        let kv = Self { knots, degree };
        if let Some((value, mult)) = kv.breakpoints().into_iter().find(|&(_, m)| m > degree + 1) {
            return Err(Error::Knots(format!(
                "knot {value} has multiplicity {mult} > degree + 1"
            )));
        }
        if kv.knots[0] >= kv.knots[kv.knots.len() - 1] {
            return Err(Error::Knots("knots span an empty interval".into()));
        }
        Ok(kv)
    }

    /// Clamped knot vector on `[a, b]` with `elements` uniform spans.
    pub fn open_uniform(degree: usize, elements: usize, a: f64, b: f64) -> Result<Self> {
        if elements == 0 || b <= a {
            return Err(Error::Knots("need at least one element on a proper interval".into()));
        }
        let mut knots = vec![a; degree + 1];
        for e in 1..elements {
            knots.push(a + (b - a) * e as f64 / elements as f64);
        }
        knots.extend(std::iter::repeat_n(b, degree + 1));
        Self::new(knots, degree)
    }

    /// Clamped knot vector from distinct breakpoints and interior multiplicities.
    pub fn from_breakpoints(degree: usize, breaks: &[(f64, usize)]) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::Knots("need at least two breakpoints".into()));
        }
        let mut knots = Vec::new();
        let last = breaks.len() - 1;
        for (i, &(x, m)) in breaks.iter().enumerate() {
            let mult = if i == 0 || i == last { degree + 1 } else { m };
            knots.extend(std::iter::repeat_n(x, mult));
        }
        Self::new(knots, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// The parametric domain `[ξ_p, ξ_n]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.knots.len() - self.degree - 1])
    }

    /// First and last knots repeated `degree + 1` times.
    pub fn is_open(&self) -> bool {
        let p = self.degree;
        let n = self.knots.len();
        let first = self.knots[0];
        let last = self.knots[n - 1];
        self.knots[..=p].iter().all(|&k| k == first) && self.knots[n - p - 1..].iter().all(|&k| k == last)
    }

    /// Distinct knot values with their multiplicities.
    pub fn breakpoints(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Largest knot span inside the domain.
    pub fn max_span(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Knot subsequence `ξ_k ..= ξ_{k+p+1}` supporting basis function `k`.
    pub fn local_knots(&self, k: usize) -> &[f64] {
        &self.knots[k..k + self.degree + 2]
    }

    /// Index `s` with `ξ_s <= x < ξ_{s+1}` inside the domain; the right end maps
    /// to the last non-empty span.
    pub fn find_span(&self, x: f64) -> Result<usize> {
        let (a, b) = self.domain();
        if !(x >= a && x <= b) {
            return Err(Error::Domain(format!("{x} outside knot range [{a}, {b}]")));
        }
        Ok(self.span_unchecked(x))
    }

    pub(crate) fn span_unchecked(&self, x: f64) -> usize {
        let p = self.degree;
        let n = self.num_basis();
        if x >= self.knots[n] {
            let mut s = n - 1;
            while s > p && self.knots[s] == self.knots[s + 1] {
                s -= 1;
            }
            return s;
        }
        // last index s in [p, n-1] with knots[s] <= x
        let slice = &self.knots[p..=n];
        let pos = slice.partition_point(|&k| k <= x);
        p + pos.max(1) - 1
    }

    /// Values of the `degree + 1` basis functions that do not vanish at `x`.
    pub fn eval_nonzero_basis(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        let span = self.find_span(x)?;
        let mut values = vec![0.0; self.degree + 1];
        basis_funs(&self.knots, self.degree, span, x, &mut values);
        Ok((span - self.degree, values))
    }

    /// Greville abscissae; element midpoints for degree 0.
    pub fn greville_points(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| {
                if p == 0 {
                    0.5 * (self.knots[i] + self.knots[i + 1])
                } else {
                    self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Greville abscissae with the two end points pulled into the interior by a
    /// quarter of the adjacent knot span divided by `degree + 1`.
    pub fn improved_greville(&self) -> Vec<f64> {
        let mut g = self.greville_points();
        if self.degree == 0 {
            return g;
        }
        let p = self.degree as f64;
        let (a, b) = self.domain();
        let bp = self.breakpoints();
        let first_span = bp.iter().map(|&(v, _)| v).find(|&v| v > a).map_or(b - a, |v| v - a);
        let last_span = bp.iter().rev().map(|&(v, _)| v).find(|&v| v < b).map_or(b - a, |v| b - v);
        let n = g.len();
        g[0] += first_span / (4.0 * (p + 1.0));
        g[n - 1] -= last_span / (4.0 * (p + 1.0));
        g
    }

    /// Exact integral of basis function `k` over its support.
    pub fn bspline_integral(&self, k: usize) -> f64 {
        let p = self.degree;
        (self.knots[k + p + 1] - self.knots[k]) / (p + 1) as f64
    }
}

/// Cox–de Boor evaluation of the non-vanishing basis functions on `span`.
pub(crate) fn basis_funs<T: Scalar>(knots: &[f64], p: usize, span: usize, x: T, out: &mut [T]) {
    let mut left = [T::zero(); MAX_DEGREE + 1];
    let mut right = [T::zero(); MAX_DEGREE + 1];
    out[0] = T::one();
    for j in 1..=p {
        left[j] = x - T::from_f64(knots[span + 1 - j]);
        right[j] = T::from_f64(knots[span + j]) - x;
        let mut saved = T::zero();
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Basis functions and their derivatives up to order `nd` on `span`.
/// `out[k][j]` holds the k-th derivative of basis `span - p + j`.
pub(crate) fn ders_basis_funs<const W: usize>(
    knots: &[f64],
    p: usize,
    span: usize,
    x: f64,
    nd: usize,
    out: &mut [[f64; W]; 3],
) {
    debug_assert!(p < W && nd <= 2);
    let mut ndu = [[0.0f64; W]; W];
    let mut left = [0.0f64; W];
    let mut right = [0.0f64; W];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        out[0][j] = ndu[j][p];
    }
    let mut a = [[0.0f64; W]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd.min(p) {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
        for k in p + 1..=nd {
            out[k][r] = 0.0;
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd.min(p) {
        for j in 0..=p {
            out[k][j] *= fac;
        }
        fac *= (p - k) as f64;
    }
}

/// Value of the single B-spline defined by `local` (length `p + 2`) at `x`.
///
/// At a knot, `right_continuous` selects the polynomial piece to the right of
/// `x`; otherwise the piece to its left is used. This lets callers read the
/// inside limit at either end of an integration interval.
pub fn one_basis<T: Scalar>(local: &[f64], x: T, right_continuous: bool) -> T {
    let p = local.len() - 2;
    let at = |i: usize| T::from_f64(local[i]);
    let (a, b) = (at(0), at(p + 1));
    if x < a || x > b || (right_continuous && x == b) || (!right_continuous && x == a) {
        return T::zero();
    }
    let zero = T::zero();
    let mut n = [zero; MAX_DEGREE + 2];
    for j in 0..=p {
        let (l, r) = (at(j), at(j + 1));
        let inside = if right_continuous { l <= x && x < r } else { l < x && x <= r };
        n[j] = if inside { T::one() } else { zero };
    }
    for k in 1..=p {
        let mut saved = if n[0] == zero {
            zero
        } else {
            (x - at(0)) * n[0] / (at(k) - at(0))
        };
        for j in 0..=p - k {
            let ul = at(j + 1);
            let ur = at(j + k + 1);
            if n[j + 1] == zero {
                n[j] = saved;
                saved = zero;
            } else {
                let temp = n[j + 1] / (ur - ul);
                n[j] = saved + (ur - x) * temp;
                saved = (x - ul) * temp;
            }
        }
    }
    n[0]
}
