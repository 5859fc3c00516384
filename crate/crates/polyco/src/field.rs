//! The derivative contract: smooth maps exposing values and Jacobians.
//!
//! A [`SmoothField`] is either *exact* (a closure over dual numbers, giving
//! machine-precision Jacobians) or *numeric* (a plain evaluation closure
//! whose Jacobian falls back to central differences with step
//! `cbrt(machine epsilon) * scale`). Fields produced by differentiating
//! operators (exterior derivative, pullback, brackets of solved fields) are
//! numeric: their values use exact first derivatives of their parents, and
//! only their own re-differentiation pays the documented finite-difference
//! tolerance loss.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dual::Dual;

pub type DualFn = Arc<dyn Fn(&[Dual]) -> Vec<Dual> + Send + Sync>;
pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Exact(DualFn),
    Numeric(EvalFn),
}

#[derive(Clone)]
pub struct SmoothField {
    dim_in: usize,
    dim_out: usize,
    repr: Repr,
}

impl SmoothField {
    /// Field backed by dual-number arithmetic; Jacobians are exact.
    pub fn exact(
        dim_in: usize,
        dim_out: usize,
        f: impl Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    ) -> SmoothField {
        SmoothField { dim_in, dim_out, repr: Repr::Exact(Arc::new(f)) }
    }

    /// Scalar exact field.
    pub fn exact_scalar(
        dim_in: usize,
        f: impl Fn(&[Dual]) -> Dual + Send + Sync + 'static,
    ) -> SmoothField {
        SmoothField::exact(dim_in, 1, move |x| vec![f(x)])
    }

    /// Field with an evaluation rule only; the Jacobian is obtained by
    /// central differences.
    pub fn numeric(
        dim_in: usize,
        dim_out: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> SmoothField {
        SmoothField { dim_in, dim_out, repr: Repr::Numeric(Arc::new(f)) }
    }

    pub fn constant(dim_in: usize, values: Vec<f64>) -> SmoothField {
        let dim_out = values.len();
        SmoothField::exact(dim_in, dim_out, move |_| {
            values.iter().map(|v| Dual::constant(*v)).collect()
        })
    }

    pub fn identity(dim: usize) -> SmoothField {
        SmoothField::exact(dim, dim, |x| x.to_vec())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact(_))
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim_in);
        match &self.repr {
            Repr::Exact(f) => {
                let dx: Vec<Dual> = x.iter().map(|v| Dual::constant(*v)).collect();
                f(&dx).iter().map(|d| d.re).collect()
            }
            Repr::Numeric(f) => f(x),
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.eval(x))
    }

    /// Jacobian (dim_out x dim_in). Numeric fields differentiate through a
    /// fourth-order five-point stencil; the plain central-difference rule
    /// stays available as the independent contract oracle.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.dim_in);
        match &self.repr {
            Repr::Exact(f) => {
                let mut jac = DMatrix::zeros(self.dim_out, self.dim_in);
                let mut dx: Vec<Dual> = x.iter().map(|v| Dual::constant(*v)).collect();
                for col in 0..self.dim_in {
                    dx[col].du = 1.0;
                    let out = f(&dx);
                    for (row, d) in out.iter().enumerate() {
                        jac[(row, col)] = d.du;
                    }
                    dx[col].du = 0.0;
                }
                jac
            }
            Repr::Numeric(f) => five_point_jacobian(f, x, self.dim_out),
        }
    }

    /// Evaluate at a dual point. Exact fields propagate derivative parts
    /// through their own arithmetic; numeric fields propagate them to first
    /// order through the (possibly finite-difference) Jacobian, which is
    /// precisely their derivative contract.
    pub fn eval_dual(&self, x: &[Dual]) -> Vec<Dual> {
        debug_assert_eq!(x.len(), self.dim_in);
        match &self.repr {
            Repr::Exact(f) => f(x),
            Repr::Numeric(f) => {
                let re: Vec<f64> = x.iter().map(|d| d.re).collect();
                let val = f(&re);
                if x.iter().all(|d| d.du == 0.0) {
                    return val.iter().map(|v| Dual::constant(*v)).collect();
                }
                let jac = five_point_jacobian(f, &re, self.dim_out);
                (0..self.dim_out)
                    .map(|row| {
                        let du = (0..self.dim_in).map(|col| jac[(row, col)] * x[col].du).sum();
                        Dual { re: val[row], du }
                    })
                    .collect()
            }
        }
    }

    /// Composition `self . inner`.
    pub fn compose(&self, inner: &SmoothField) -> SmoothField {
        assert_eq!(inner.dim_out, self.dim_in, "composition arity");
        let outer = self.clone();
        let inner = inner.clone();
        SmoothField::exact(inner.dim_in, self.dim_out, move |x| {
            outer.eval_dual(&inner.eval_dual(x))
        })
    }

    /// Directional derivative of a scalar-or-vector field along a vector
    /// field on the same chart, `(x) -> J_self(x) . v(x)`.
    pub fn derive_along(&self, v: &SmoothField) -> SmoothField {
        assert_eq!(self.dim_in, v.dim_in());
        assert_eq!(v.dim_out(), self.dim_in);
        let f = self.clone();
        let v = v.clone();
        SmoothField::numeric(self.dim_in, self.dim_out, move |x| {
            let jac = f.jacobian(x);
            let vv = DVector::from_vec(v.eval(x));
            (jac * vv).iter().copied().collect()
        })
    }
}

/// Central-difference Jacobian with step `cbrt(eps) * scale`; the
/// independent oracle of the derivative contract.
pub fn central_difference_jacobian(
    f: &EvalFn,
    x: &[f64],
    dim_out: usize,
) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(dim_out, n);
    let base_step = f64::EPSILON.cbrt();
    let mut xp = x.to_vec();
    for col in 0..n {
        let h = base_step * x[col].abs().max(1.0);
        xp[col] = x[col] + h;
        let fp = f(&xp);
        xp[col] = x[col] - h;
        let fm = f(&xp);
        xp[col] = x[col];
        for row in 0..dim_out {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    jac
}

/// Fourth-order five-point Jacobian with step `eps^(1/5) * scale`; keeps
/// re-differentiated quantities (Hessians entering bracket identities)
/// accurate at instance scales.
pub fn five_point_jacobian(f: &EvalFn, x: &[f64], dim_out: usize) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(dim_out, n);
    let base_step = f64::EPSILON.powf(0.2);
    let mut xp = x.to_vec();
    for col in 0..n {
        let h = base_step * x[col].abs().max(1.0);
        xp[col] = x[col] + 2.0 * h;
        let fp2 = f(&xp);
        xp[col] = x[col] + h;
        let fp1 = f(&xp);
        xp[col] = x[col] - h;
        let fm1 = f(&xp);
        xp[col] = x[col] - 2.0 * h;
        let fm2 = f(&xp);
        xp[col] = x[col];
        for row in 0..dim_out {
            jac[(row, col)] =
                (-fp2[row] + 8.0 * fp1[row] - 8.0 * fm1[row] + fm2[row]) / (12.0 * h);
        }
    }
    jac
}

/// Contract test: Jacobian vs central differences of `eval` at the given
/// points, as a maximum relative deviation.
pub fn derivative_contract_residual(field: &SmoothField, points: &[Vec<f64>]) -> f64 {
    let eval: EvalFn = {
        let f = field.clone();
        Arc::new(move |x: &[f64]| f.eval(x))
    };
    let mut worst: f64 = 0.0;
    for p in points {
        let jac = field.jacobian(p);
        let fd = central_difference_jacobian(&eval, p, field.dim_out());
        let scale = jac.amax().max(1.0);
        worst = worst.max((&jac - &fd).amax() / scale);
    }
    worst
}
