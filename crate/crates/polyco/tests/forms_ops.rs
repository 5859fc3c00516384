//! Exterior-calculus operation checks against hand-expanded oracles.

use polyco::chart::ChartBox;
use polyco::dual::Dual;
use polyco::field::SmoothField;
use polyco::form::{
    barwedge, contract_kvector, exterior_derivative, interior_product, lie_bracket,
    lie_derivative, max_coeff_norm, pullback, wedge, FormBuilder, KVectorFieldRep, VValuedForm,
    VectorFieldRep,
};

fn chart3() -> polyco::chart::ChartRef {
    ChartBox::new(&["x", "y", "z"], &[(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)]).unwrap()
}

#[test]
fn wedge_of_a_one_form_with_itself_vanishes() {
    let chart = chart3();
    let dx = FormBuilder::new(&chart, 1, 1).constant(0, &["x"], 1.0).build();
    let sq = wedge(&dx, &dx).unwrap();
    for c in sq.coefficients_at(&[0.3, -1.0, 0.5]) {
        assert_eq!(c, 0.0);
    }
}

#[test]
fn wedge_basis_coefficient_is_one() {
    let chart = chart3();
    let dy = FormBuilder::new(&chart, 1, 1).constant(0, &["y"], 1.0).build();
    let dz = FormBuilder::new(&chart, 1, 1).constant(0, &["z"], 1.0).build();
    let w = wedge(&dy, &dz).unwrap();
    let c = w.coefficients_at(&[0.0, 0.0, 0.0]);
    assert_eq!(c[w.slot(0, &[1, 2])], 1.0);
    assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 1);
}

#[test]
fn wedge_is_bilinear_in_the_coefficient() {
    // (x dy) ^ dz has coefficient x on (y, z)
    let chart = chart3();
    let xdy = FormBuilder::new(&chart, 1, 1).func(0, &["y"], |p| p[0]).build();
    let dz = FormBuilder::new(&chart, 1, 1).constant(0, &["z"], 1.0).build();
    let w = wedge(&xdy, &dz).unwrap();
    let c = w.coefficients_at(&[3.0, 0.2, -0.9]);
    assert!((c[w.slot(0, &[1, 2])] - 3.0).abs() < 1e-15);
}

#[test]
fn wedge_degree_cap_is_enforced() {
    let chart = chart3();
    let dx = FormBuilder::new(&chart, 1, 1).constant(0, &["x"], 1.0).build();
    let dy = FormBuilder::new(&chart, 1, 1).constant(0, &["y"], 1.0).build();
    let dz = FormBuilder::new(&chart, 1, 1).constant(0, &["z"], 1.0).build();
    let two = wedge(&dx, &dy).unwrap();
    let three = wedge(&two, &dz).unwrap();
    assert_eq!(three.degree(), 3);
    assert!(wedge(&three, &dx).is_err());
}

#[test]
fn barwedge_expands_componentwise() {
    // du barwedge pr*tau with tau = dt (x) e1 + dx (x) e2 on a k = 2 chart
    let chart = ChartBox::new(
        &["u1", "u2", "t", "x"],
        &[(-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    )
    .unwrap();
    let du = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["u1"], 1.0)
        .constant(1, &["u2"], 1.0)
        .build();
    let tau = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["t"], 1.0)
        .constant(1, &["x"], 1.0)
        .build();
    let w = barwedge(&du, &tau).unwrap();
    let c = w.coefficients_at(&[0.0, 0.0, 0.5, 0.5]);
    assert_eq!(c[w.slot(0, &[0, 2])], 1.0); // du1 ^ dt on e1
    assert_eq!(c[w.slot(1, &[1, 3])], 1.0); // du2 ^ dx on e2
    assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 2);
    // bilinearity: barwedge with zero is zero
    let zero = VValuedForm::zero(&chart, 1, 2);
    let wz = barwedge(&du, &zero).unwrap();
    assert_eq!(max_coeff_norm(&wz, &[vec![0.1, 0.2, 0.3, 0.4]]), 0.0);
}

#[test]
fn barwedge_with_k1_reduces_to_wedge() {
    let chart = chart3();
    let a = FormBuilder::new(&chart, 1, 1).func(0, &["x"], |p| p[1]).build();
    let b = FormBuilder::new(&chart, 1, 1).func(0, &["z"], |p| p[0].sin()).build();
    let bw = barwedge(&a, &b).unwrap();
    let w = wedge(&a, &b).unwrap();
    let pt = vec![0.7, -0.4, 1.2];
    assert_eq!(bw.coefficients_at(&pt), w.coefficients_at(&pt));
}

#[test]
fn interior_product_pairs_dual_bases() {
    let chart = chart3();
    let dx = FormBuilder::new(&chart, 1, 1).constant(0, &["x"], 1.0).build();
    let ddx = VectorFieldRep::coordinate(&chart, "x");
    let one = interior_product(&ddx, &dx).unwrap();
    assert_eq!(one.degree(), 0);
    assert_eq!(one.coefficients_at(&[0.1, 0.2, 0.3]), vec![1.0]);
    // iota_{d/dy}(dx ^ dy) = -dx
    let dy = FormBuilder::new(&chart, 1, 1).constant(0, &["y"], 1.0).build();
    let w = wedge(&dx, &dy).unwrap();
    let hooked = interior_product(&VectorFieldRep::coordinate(&chart, "y"), &w).unwrap();
    let c = hooked.coefficients_at(&[0.0; 3]);
    assert_eq!(c[0], -1.0); // dx slot
    assert_eq!(c[1], 0.0);
    assert_eq!(c[2], 0.0);
    assert!(interior_product(&ddx, &one).is_err());
}

#[test]
fn interior_product_on_string_like_two_form() {
    // iota_{d/dq1}(dq1 ^ dp1_t (x) e1 + dq1 ^ dp1_x (x) e2)
    let chart = ChartBox::new(
        &["q1", "q2", "p1_t", "p1_x"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap();
    let omega = FormBuilder::new(&chart, 2, 2)
        .constant(0, &["q1", "p1_t"], 1.0)
        .constant(1, &["q1", "p1_x"], 1.0)
        .build();
    let hook = interior_product(&VectorFieldRep::coordinate(&chart, "q1"), &omega).unwrap();
    let c = hook.coefficients_at(&[0.0; 4]);
    assert_eq!(c[hook.slot(0, &[2])], 1.0); // dp1_t on e1
    assert_eq!(c[hook.slot(1, &[3])], 1.0); // dp1_x on e2
    assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 2);
}

#[test]
fn kvector_contraction_sums_over_value_index() {
    let chart = ChartBox::new(&["t", "x"], &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
    let tau = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["t"], 1.0)
        .constant(1, &["x"], 1.0)
        .build();
    let kv = KVectorFieldRep::from_components(&[
        VectorFieldRep::coordinate(&chart, "t"),
        VectorFieldRep::coordinate(&chart, "x"),
    ]);
    let c = contract_kvector(&kv, &tau).unwrap();
    assert_eq!(c.coefficients_at(&[0.3, 0.8]), vec![2.0]);
    // zeroing one component removes its term
    let kv2 = KVectorFieldRep::from_components(&[
        VectorFieldRep::coordinate(&chart, "t"),
        VectorFieldRep::constant(&chart, vec![0.0, 0.0]),
    ]);
    let c2 = contract_kvector(&kv2, &tau).unwrap();
    assert_eq!(c2.coefficients_at(&[0.3, 0.8]), vec![1.0]);
    // k = 1 agrees with the plain interior product
    let one_chart = chart3();
    let omega = FormBuilder::new(&one_chart, 2, 1).func(0, &["x", "y"], |p| p[2]).build();
    let v = VectorFieldRep::coordinate(&one_chart, "x");
    let kv1 = KVectorFieldRep::from_components(&[v.clone()]);
    let a = contract_kvector(&kv1, &omega).unwrap();
    let b = interior_product(&v, &omega).unwrap();
    let pt = vec![0.3, 0.6, -0.2];
    assert_eq!(a.coefficients_at(&pt), b.coefficients_at(&pt));
}

#[test]
fn exterior_derivative_of_coordinate_differential_vanishes() {
    let chart = chart3();
    let dx = FormBuilder::new(&chart, 1, 1).constant(0, &["x"], 1.0).build();
    let d = exterior_derivative(&dx).unwrap();
    assert!(max_coeff_norm(&d, &[vec![0.4, 0.1, -0.7]]) < 1e-12);
}

#[test]
fn exterior_derivative_single_term_leibniz() {
    // d(y dz)|: coefficient +1 on (y, z)
    let chart = chart3();
    let ydz = FormBuilder::new(&chart, 1, 1).func(0, &["z"], |p| p[1]).build();
    let d = exterior_derivative(&ydz).unwrap();
    let c = d.coefficients_at(&[0.5, 0.9, -0.4]);
    assert!((c[d.slot(0, &[1, 2])] - 1.0).abs() < 1e-9);
    assert!(c[d.slot(0, &[0, 1])].abs() < 1e-9);
    assert!(c[d.slot(0, &[0, 2])].abs() < 1e-9);
}

#[test]
fn canonical_one_form_differential_is_minus_canonical_two_form() {
    // theta = p_i^alpha dq^i (x) e_alpha on a k = 2, n = 1 chart;
    // d theta = dp ^ dq = -(dq ^ dp) componentwise
    let chart = ChartBox::new(
        &["q", "p1", "p2"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap();
    let theta = FormBuilder::new(&chart, 1, 2)
        .func(0, &["q"], |x| x[1])
        .func(1, &["q"], |x| x[2])
        .build();
    let omega_canonical = FormBuilder::new(&chart, 2, 2)
        .constant(0, &["q", "p1"], 1.0)
        .constant(1, &["q", "p2"], 1.0)
        .build();
    let d = exterior_derivative(&theta).unwrap();
    let pt = vec![0.2, -0.6, 1.1];
    let dc = d.coefficients_at(&pt);
    let oc = omega_canonical.coefficients_at(&pt);
    for (a, b) in dc.iter().zip(&oc) {
        assert!((a + b).abs() < 1e-9, "expected d theta = -omega");
    }
}

#[test]
fn lie_derivative_along_translation_of_constant_form_vanishes() {
    let chart = chart3();
    let w = FormBuilder::new(&chart, 2, 1).constant(0, &["x", "y"], 1.0).build();
    let l = lie_derivative(&VectorFieldRep::coordinate(&chart, "x"), &w).unwrap();
    assert!(max_coeff_norm(&l, &[vec![0.2, 0.6, -0.1]]) < 1e-10);
}

#[test]
fn lie_derivative_of_scaling_field_reproduces_the_form() {
    // L_{x d/dx} dx = dx
    let chart = chart3();
    let dx = FormBuilder::new(&chart, 1, 1).constant(0, &["x"], 1.0).build();
    let scaling = VectorFieldRep::new(
        &chart,
        SmoothField::exact(3, 3, |p| vec![p[0], Dual::ZERO, Dual::ZERO]),
    )
    .unwrap();
    let l = lie_derivative(&scaling, &dx).unwrap();
    let c = l.coefficients_at(&[0.7, 0.1, 0.4]);
    assert!((c[0] - 1.0).abs() < 1e-9);
    assert!(c[1].abs() < 1e-9 && c[2].abs() < 1e-9);
}

#[test]
fn bracket_of_rotation_generators() {
    // [x d/dy, y d/dx] = x d/dx - y d/dy (hand expansion)
    let chart = chart3();
    let a = VectorFieldRep::new(
        &chart,
        SmoothField::exact(3, 3, |p| vec![Dual::ZERO, p[0], Dual::ZERO]),
    )
    .unwrap();
    let b = VectorFieldRep::new(
        &chart,
        SmoothField::exact(3, 3, |p| vec![p[1], Dual::ZERO, Dual::ZERO]),
    )
    .unwrap();
    let br = lie_bracket(&a, &b).unwrap();
    let v = br.eval(&[1.3, -0.8, 0.2]);
    assert!((v[0] - 1.3).abs() < 1e-9);
    assert!((v[1] + (-0.8)).abs() < 1e-9);
    assert!(v[2].abs() < 1e-9);
    // constant fields commute
    let c1 = VectorFieldRep::coordinate(&chart, "x");
    let c2 = VectorFieldRep::coordinate(&chart, "y");
    let z = lie_bracket(&c1, &c2).unwrap();
    assert!(z.eval(&[0.5, 0.5, 0.5]).iter().all(|u| u.abs() < 1e-12));
}

#[test]
fn pullback_along_identity_preserves_coefficients() {
    let chart = chart3();
    let w = FormBuilder::new(&chart, 2, 1).func(0, &["x", "z"], |p| p[1] * p[1]).build();
    let pulled = pullback(&SmoothField::identity(3), &chart, &w).unwrap();
    let pt = vec![0.3, 1.4, -0.2];
    let a = pulled.coefficients_at(&pt);
    let b = w.coefficients_at(&pt);
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn pullback_of_fibre_coordinate_along_slice_inclusion_vanishes() {
    // inclusion iota_u: M -> R x M at fixed u; pullback of du is zero
    let base = ChartBox::new(&["q"], &[(-1.0, 1.0)]).unwrap();
    let total = ChartBox::new(&["u", "q"], &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    let du = FormBuilder::new(&total, 1, 1).constant(0, &["u"], 1.0).build();
    let incl = SmoothField::exact(1, 2, |y| vec![Dual::constant(0.7), y[0]]);
    let pulled = pullback(&incl, &base, &du).unwrap();
    assert_eq!(pulled.coefficients_at(&[0.2]), vec![0.0]);
}

#[test]
fn pullback_onto_string_level_set() {
    // substitute p2_t = mu1 - p1_t into omega^1 = dq1 ^ dp1_t + dq2 ^ dp2_t:
    // the result is (dq1 - dq2) ^ dp1_t
    let total = ChartBox::new(
        &["q1", "q2", "p1_t", "p2_t"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap();
    let level = ChartBox::new(
        &["q1", "q2", "a"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .unwrap();
    let omega = FormBuilder::new(&total, 2, 1)
        .constant(0, &["q1", "p1_t"], 1.0)
        .constant(0, &["q2", "p2_t"], 1.0)
        .build();
    let mu1 = 0.8;
    let embed = SmoothField::exact(3, 4, move |y| {
        vec![y[0], y[1], y[2], Dual::constant(mu1) - y[2]]
    });
    let pulled = pullback(&embed, &level, &omega).unwrap();
    let c = pulled.coefficients_at(&[0.3, -0.2, 0.5]);
    assert!((c[pulled.slot(0, &[0, 2])] - 1.0).abs() < 1e-12); // dq1 ^ da
    assert!((c[pulled.slot(0, &[1, 2])] + 1.0).abs() < 1e-12); // -dq2 ^ da
    assert!(c[pulled.slot(0, &[0, 1])].abs() < 1e-12);
}

#[test]
fn wedge_is_associative() {
    let chart = chart3();
    let a = FormBuilder::new(&chart, 1, 1).func(0, &["x"], |p| p[1]).build();
    let b = FormBuilder::new(&chart, 1, 1).func(0, &["y"], |p| p[2] * p[2]).build();
    let c = FormBuilder::new(&chart, 1, 1).func(0, &["z"], |p| p[0].cos()).build();
    let left = wedge(&wedge(&a, &b).unwrap(), &c).unwrap();
    let right = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
    let pt = vec![0.7, -0.9, 0.4];
    let lv = left.coefficients_at(&pt);
    let rv = right.coefficients_at(&pt);
    for (u, v) in lv.iter().zip(&rv) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn exterior_derivative_of_two_form() {
    // d(x dy^dz) = dx^dy^dz
    let chart = chart3();
    let w = FormBuilder::new(&chart, 2, 1).func(0, &["y", "z"], |p| p[0]).build();
    let d = exterior_derivative(&w).unwrap();
    assert_eq!(d.degree(), 3);
    let c = d.coefficients_at(&[0.5, 0.1, -0.2]);
    assert_eq!(c.len(), 1);
    assert!((c[0] - 1.0).abs() < 1e-9);
    // three-form evaluation on a frame gives the coefficient
    let v0 = [1.0, 0.0, 0.0];
    let v1 = [0.0, 1.0, 0.0];
    let v2 = [0.0, 0.0, 1.0];
    let val = d.apply(&[0.5, 0.1, -0.2], &[&v0, &v1, &v2]);
    assert!((val[0] - 1.0).abs() < 1e-9);
    // swapping two arguments flips the sign
    let val = d.apply(&[0.5, 0.1, -0.2], &[&v1, &v0, &v2]);
    assert!((val[0] + 1.0).abs() < 1e-9);
}
