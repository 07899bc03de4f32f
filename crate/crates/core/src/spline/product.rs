use super::dd::{Dd, Scalar};
use super::knots::{basis_funs, KnotVector};
use crate::error::{Error, Result};

const DEDUP_TOL: f64 = 1e-12;

/// Spline space of degree `3d + c` on `[-1, 1]` that contains
/// `B(A(q(s))) * p(s)` for a degree-`d` B-spline `B`, the affine map `A`
/// onto the integration interval, a cubic reparametrization `q`, and any
/// polynomial `p` of degree `c`.
#[derive(Debug, Clone)]
pub struct ProductSplineSpace {
    knots: KnotVector,
    greville: Vec<f64>,
    integrals: Vec<f64>,
    lu: BandedLu<f64>,
}

impl ProductSplineSpace {
    /// Builds the space from breakpoints `(z, multiplicity)` given in the
    /// `[-1, 1]` coordinate of the integration interval. `inverse_map` is the
    /// inverse reparametrization; it must fix `±1` and be increasing.
    pub fn new(
        interior: &[(f64, usize)],
        d: usize,
        c: usize,
        inverse_map: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let degree = 3 * d + c;
        let lo = inverse_map(-1.0);
        let hi = inverse_map(1.0);
        if (lo + 1.0).abs() > 1e-10 || (hi - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "inverse map must fix the end points, got {lo} and {hi}"
            )));
        }
        let mut breaks: Vec<(f64, usize)> = vec![(-1.0, degree + 1)];
        let mut prev_z = -1.0;
        for &(z, mu) in interior {
            if z <= prev_z {
                return Err(Error::Invariant("breakpoints must increase".into()));
            }
            prev_z = z;
            let s = inverse_map(z);
            let last = breaks.last().unwrap().0;
            if !(s >= last - DEDUP_TOL) {
                return Err(Error::Invariant(format!("inverse map not monotone near {z}")));
            }
            if s - last <= DEDUP_TOL || 1.0 - s <= DEDUP_TOL {
                continue;
            }
            breaks.push((s, (mu + 2 * d + c).min(degree)));
        }
        breaks.push((1.0, degree + 1));
        let knots = KnotVector::from_breakpoints(degree, &breaks)?;
        Self::from_knots(knots)
    }

    /// Space for one direction of a tensor B-spline restricted to `[a, b]`.
    /// `local` holds the `d + 2` local knots of the univariate factor.
    pub fn for_interval(
        local: &[f64],
        interval: (f64, f64),
        c: usize,
        inverse_map: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let d = local.len() - 2;
        let interior = interior_breaks(local, interval);
        Self::new(&interior, d, c, inverse_map)
    }

    fn from_knots(knots: KnotVector) -> Result<Self> {
        let greville = knots.greville_points();
        if greville.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invariant("Greville abscissae are not distinct".into()));
        }
        let integrals = (0..knots.num_basis()).map(|k| knots.bspline_integral(k)).collect();
        let lu = BandedLu::collocation(&knots, &greville)?;
        Ok(Self { knots, greville, integrals, lu })
    }

    pub fn degree(&self) -> usize {
        self.knots.degree()
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn greville(&self) -> &[f64] {
        &self.greville
    }

    pub fn dim(&self) -> usize {
        self.greville.len()
    }

    /// Exact integrals of the basis functions.
    pub fn basis_integrals(&self) -> &[f64] {
        &self.integrals
    }

    /// Spline coefficients interpolating `f` at the Greville abscissae.
    pub fn interpolate_at_greville(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.greville.iter().map(|&g| f(g)).collect();
        self.lu.solve(&mut rhs);
        rhs
    }

    /// Value of the spline with coefficients `coeffs` at `x`.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        let p = self.degree();
        let span = self.knots.span_unchecked(x.clamp(-1.0, 1.0));
        let mut vals = vec![0.0; p + 1];
        basis_funs(self.knots.knots(), p, span, x, &mut vals);
        vals.iter().enumerate().map(|(j, v)| v * coeffs[span - p + j]).sum()
    }

    /// Exact integral over `[-1, 1]` of the spline with coefficients `coeffs`.
    pub fn integrate(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.integrals).map(|(a, b)| a * b).sum()
    }

    /// Weights `w` with `sum_m w_m f(g_m)` equal to the exact integral of the
    /// Greville interpolant of `f`.
    pub fn greville_weights(&self) -> Vec<f64> {
        let mut w = self.integrals.clone();
        self.lu.solve_transposed(&mut w);
        w
    }

    /// Greville abscissae in double-double precision.
    pub fn greville_precise(&self) -> Vec<Dd> {
        let p = self.degree();
        let kn = self.knots.knots();
        (0..self.dim())
            .map(|k| {
                let mut s = Dd::zero();
                for &t in &kn[k + 1..=k + p] {
                    s += Dd::new(t);
                }
                s / Dd::from_f64(p as f64)
            })
            .collect()
    }

    /// [`Self::greville_weights`] computed in double-double precision, for
    /// degrees where the Greville collocation matrix is badly conditioned.
    pub fn greville_weights_precise(&self) -> Result<Vec<Dd>> {
        let p = self.degree();
        let kn = self.knots.knots();
        let g = self.greville_precise();
        let lu = BandedLu::collocation_at(&self.knots, &g, |x| x.to_f64())?;
        let mut w: Vec<Dd> = (0..self.dim())
            .map(|k| (Dd::new(kn[k + p + 1]) - Dd::new(kn[k])) / Dd::from_f64((p + 1) as f64))
            .collect();
        lu.solve_transposed(&mut w);
        Ok(w)
    }
}

/// Distinct knots of `local` strictly inside `interval`, affinely mapped to
/// `[-1, 1]`, with their multiplicities.
pub fn interior_breaks(local: &[f64], interval: (f64, f64)) -> Vec<(f64, usize)> {
    let (a, b) = interval;
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NAN;
    for &k in local {
        if k <= a || k >= b {
            continue;
        }
        let z = (2.0 * k - a - b) / (b - a);
        if k == last {
            out.last_mut().unwrap().1 += 1;
        } else {
            out.push((z, 1));
            last = k;
        }
    }
    out
}

/// LU factors of a banded matrix, computed without pivoting.
#[derive(Debug, Clone)]
pub(crate) struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    a: Vec<T>,
}

impl BandedLu<f64> {
    fn collocation(knots: &KnotVector, points: &[f64]) -> Result<Self> {
        Self::collocation_at(knots, points, |x| x)
    }
}

impl<T: Scalar> BandedLu<T> {
    /// Factors the collocation matrix `B_j(x_m)`; `approx` rounds a point to
    /// f64 for the knot-span search.
    fn collocation_at(knots: &KnotVector, points: &[T], approx: impl Fn(T) -> f64) -> Result<Self> {
        let n = points.len();
        let p = knots.degree();
        let zero = T::zero();
        let mut a = vec![zero; n * n];
        let mut vals = vec![zero; p + 1];
        let (mut kl, mut ku) = (0usize, 0usize);
        for (m, &x) in points.iter().enumerate() {
            let span = knots.span_unchecked(approx(x));
            basis_funs(knots.knots(), p, span, x, &mut vals);
            for (j, &v) in vals.iter().enumerate() {
                let col = span - p + j;
                if v != zero {
                    a[m * n + col] = v;
                    if col < m {
                        kl = kl.max(m - col);
                    } else {
                        ku = ku.max(col - m);
                    }
                }
            }
        }
        Self::factor(n, kl, ku, a)
    }

    pub(crate) fn factor(n: usize, kl: usize, ku: usize, mut a: Vec<T>) -> Result<Self> {
        for k in 0..n {
            let pivot = a[k * n + k];
            let pf = pivot.to_f64();
            if pf.abs() < 1e-300 || !pf.is_finite() {
                return Err(Error::Numeric(format!("zero pivot in banded factorization at row {k}")));
            }
            let row_end = (k + kl + 1).min(n);
            let col_end = (k + ku + 1).min(n);
            for i in k + 1..row_end {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != T::zero() {
                    for j in k + 1..col_end {
                        let u = a[k * n + j];
                        a[i * n + j] -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, kl, ku, a })
    }

    pub(crate) fn solve(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let start = i.saturating_sub(self.kl);
            let mut s = b[i];
            for j in start..i {
                s -= self.a[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + self.ku + 1).min(n);
            let mut s = b[i];
            for j in i + 1..end {
                s -= self.a[i * n + j] * b[j];
            }
            b[i] = s / self.a[i * n + i];
        }
    }

    pub(crate) fn solve_transposed(&self, b: &mut [T]) {
        let n = self.n;
        // U^T y = b
        for i in 0..n {
            let start = i.saturating_sub(self.ku);
            let mut s = b[i];
            for j in start..i {
                s -= self.a[j * n + i] * b[j];
            }
            b[i] = s / self.a[i * n + i];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let end = (i + self.kl + 1).min(n);
            let mut s = b[i];
            for j in i + 1..end {
                s -= self.a[j * n + i] * b[j];
            }
            b[i] = s;
        }
    }
}
