use std::f64::consts::PI;

use igabem::assembly::*;
use igabem::geometry::{spheroid, spheroid_area, unit_sphere, Vec3};
use igabem::postprocess::*;
use igabem::Error;

fn sphere(d: usize, n: usize) -> (Discretization, CollocationSet) {
    let disc = Discretization::uniform(unit_sphere().unwrap(), d, n).unwrap();
    let c = collocation_points(&disc).unwrap();
    (disc, c)
}

/// Stokeslet of strength `f` at `x0`, viscosity `eta`.
struct Stokeslet {
    x0: Vec3,
    f: Vec3,
    eta: f64,
}

impl Stokeslet {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        let r = x - self.x0;
        let d = r.norm();
        (self.f / d + r * (r.dot(&self.f) / (d * d * d))) / (8.0 * PI * self.eta)
    }

    fn pressure(&self, x: &Vec3) -> f64 {
        let r = x - self.x0;
        r.dot(&self.f) / (4.0 * PI * r.norm().powi(3))
    }

    fn stress(&self, x: &Vec3) -> nalgebra::Matrix3<f64> {
        let r = x - self.x0;
        r * r.transpose() * (-6.0 * r.dot(&self.f) / (8.0 * PI * r.norm().powi(5)))
    }
}

fn stokeslet() -> Stokeslet {
    Stokeslet { x0: Vec3::new(0.1, -0.2, 0.15), f: Vec3::new(0.3, -0.5, 1.0), eta: 1.7 }
}

#[test]
fn stokeslet_stress_matches_finite_differences() {
    let s = stokeslet();
    let x = Vec3::new(0.8, 0.4, -0.6);
    let h = 1e-5;
    let mut grad = nalgebra::Matrix3::zeros();
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = h;
        let du = (s.velocity(&(x + e)) - s.velocity(&(x - e))) / (2.0 * h);
        for i in 0..3 {
            grad[(i, k)] = du[i];
        }
    }
    let sigma = -nalgebra::Matrix3::identity() * s.pressure(&x) + (grad + grad.transpose()) * s.eta;
    assert!((sigma - s.stress(&x)).norm() <= 1e-8 * s.stress(&x).norm());
    // incompressible
    assert!(grad.trace().abs() < 1e-8);
}

#[test]
fn exterior_stokeslet_field_is_reproduced() {
    let s = stokeslet();
    let (disc, c) = sphere(2, 4);
    let rule = disc.rule(8.0, 30).unwrap();
    let t = SplineVectorField::interpolate(&disc, &c, &|x: &Vec3| s.stress(x) * x.normalize()).unwrap();
    let u = |x: &Vec3| s.velocity(x);
    for y in [Vec3::new(1.6, 0.3, -0.4), Vec3::new(-0.5, 2.5, 1.0), Vec3::new(0.0, 0.0, -1.3)] {
        let (uy, py) = eval_interior(&disc, &t, &u, &y, s.eta, &rule).unwrap();
        let ue = s.velocity(&y);
        assert!((uy - ue).norm() <= 2e-3 * ue.norm(), "u at {y:?}: {uy:?} vs {ue:?}");
        let pe = s.pressure(&y);
        assert!((py - pe).abs() <= 2e-3 * pe.abs().max(0.05), "p at {y:?}: {py} vs {pe}");
    }
}

#[test]
fn rotating_sphere_exterior_field_is_a_rotlet() {
    let (disc, c) = sphere(2, 3);
    let rule = disc.rule(8.0, 30).unwrap();
    let t = SplineVectorField::interpolate(&disc, &c, &|x: &Vec3| analytic_traction_sphere(&x.normalize(), 1.0, 1.0, 1.0).unwrap())
        .unwrap();
    let u = |x: &Vec3| Vec3::z().cross(x);
    let (uy, py) = eval_interior(&disc, &t, &u, &Vec3::new(2.0, 0.0, 0.0), 1.0, &rule).unwrap();
    assert!((uy - Vec3::new(0.0, 0.25, 0.0)).norm() < 1e-3, "{uy:?}");
    assert!(py.abs() < 1e-3);
    // decays like |y|^-2
    let y = Vec3::new(3.0, -6.0, 2.0);
    let (uy, _) = eval_interior(&disc, &t, &u, &y, 1.0, &rule).unwrap();
    let exact = Vec3::z().cross(&y) / y.norm().powi(3);
    assert!((uy - exact).norm() <= 2e-3 * exact.norm(), "{uy:?} vs {exact:?}");
}

#[test]
fn interior_evaluation_is_linear_in_the_data() {
    let (disc, c) = sphere(1, 2);
    let rule = disc.rule(8.0, 30).unwrap();
    let t1 = SplineVectorField::interpolate(&disc, &c, &|x: &Vec3| Vec3::new(x.y, x.z * x.z, 1.0)).unwrap();
    let t2 = SplineVectorField::interpolate(&disc, &c, &|x: &Vec3| Vec3::new(-x.x, 0.5, x.x * x.y)).unwrap();
    let u1 = |x: &Vec3| Vec3::new(x.z, 0.0, x.x);
    let u2 = |x: &Vec3| Vec3::new(1.0, x.y, -x.z);
    let (a, b) = (1.5, -0.75);
    let t = SplineVectorField { coeffs: &t1.coeffs * a + &t2.coeffs * b };
    let u = |x: &Vec3| u1(x) * a + u2(x) * b;
    let y = Vec3::new(1.4, -0.9, 0.6);
    let (r1, p1) = eval_interior(&disc, &t1, &u1, &y, 2.0, &rule).unwrap();
    let (r2, p2) = eval_interior(&disc, &t2, &u2, &y, 2.0, &rule).unwrap();
    let (r, p) = eval_interior(&disc, &t, &u, &y, 2.0, &rule).unwrap();
    let lin = r1 * a + r2 * b;
    assert!((r - lin).norm() <= 1e-12 * lin.norm().max(1.0));
    assert!((p - (a * p1 + b * p2)).abs() <= 1e-12 * p.abs().max(1.0));
}

#[test]
fn interior_evaluation_refuses_points_on_the_boundary() {
    let (disc, c) = sphere(0, 2);
    let rule = disc.rule(8.0, 30).unwrap();
    let t = SplineVectorField::zeros(&disc);
    let u = |_: &Vec3| Vec3::zeros();
    let y = disc.surface.point(3, 0.3, 0.7);
    assert!(matches!(eval_interior(&disc, &t, &u, &y, 1.0, &rule), Err(Error::TooClose(_))));
    let (v, p) = eval_interior(&disc, &t, &u, &(y * 1.5), 1.0, &rule).unwrap();
    assert_eq!((v, p), (Vec3::zeros(), 0.0));
    let _ = c;
}

#[test]
fn analytic_tractions_give_the_expected_functionals() {
    let (disc, _) = sphere(2, 4);
    let (force, torque) =
        net_force_torque_of(&disc, &|_, _, x| analytic_traction_sphere(&x.normalize(), 1.0, 1.0, 1.0)).unwrap();
    assert!(force.norm() < 1e-10);
    assert!((torque - Vec3::new(0.0, 0.0, -8.0 * PI)).norm() < 1e-8);

    let flow = SpheroidFlow::new(1.5, 1.0, 1.0, 1.0).unwrap();
    let disc = Discretization::uniform(spheroid(1.5, 1.0).unwrap(), 2, 4).unwrap();
    let (force, torque) = net_force_torque_of(&disc, &|_, _, x| flow.traction(x)).unwrap();
    assert!((force - Vec3::new(0.0, 0.0, flow.f3())).norm() < 1e-8 * flow.f3());
    assert!(torque.norm() < 1e-10);
    assert!((disc.surface.area(24) - spheroid_area(1.5, 1.0)).abs() < 1e-10);
}

#[test]
fn interpolation_error_converges() {
    let exact = |x: &Vec3| analytic_traction_sphere(&x.normalize(), 1.0, 1.0, 1.0);
    let mut series = Vec::new();
    for n in [2, 3, 4, 5] {
        let (disc, c) = sphere(2, n);
        let t = SplineVectorField::interpolate(&disc, &c, &|x: &Vec3| exact(x).unwrap()).unwrap();
        let r = l2_error(&disc, &t, &exact, Normalization::Max(3.0), None, 0).unwrap();
        series.push((3 * disc.dof(), r.e_l2));
    }
    assert!(series.windows(2).all(|w| w[1].1 < w[0].1), "{series:?}");
    let rate = convergence_rate(&series).unwrap();
    assert!(rate > 1.3, "rate {rate} {series:?}");
}
