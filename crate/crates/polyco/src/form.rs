//! R^k-valued exterior calculus on coordinate boxes.
//!
//! Forms are stored through strictly increasing multi-indices in
//! lexicographic order, one coefficient block per value index (value-index
//! major), so a `p`-form with values in R^k on an `n`-dimensional chart has
//! `k * C(n, p)` coefficient functions and no antisymmetry redundancy. The
//! degree is capped at 3; the theory never needs more than a two-form plus
//! one exterior derivative.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{ChartBox, ChartRef};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::field::SmoothField;

pub const MAX_DEGREE: usize = 3;

pub fn binomial(n: usize, p: usize) -> usize {
    if p > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..p {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Strictly increasing `p`-tuples from `{0..n}` in lexicographic order.
pub fn multi_indices(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, p));
    let mut idx: Vec<usize> = (0..p).collect();
    if p == 0 {
        out.push(vec![]);
        return out;
    }
    if p > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        // advance to the next combination
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - p {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..p {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Position of a strictly increasing tuple in the lexicographic enumeration.
pub fn lex_rank(n: usize, index: &[usize]) -> usize {
    let p = index.len();
    let mut rank = 0usize;
    let mut prev = 0usize;
    for (slot, &i) in index.iter().enumerate() {
        for candidate in prev..i {
            rank += binomial(n - candidate - 1, p - slot - 1);
        }
        prev = i + 1;
    }
    rank
}

/// Sort an index tuple, returning the permutation sign; `None` on repeats.
pub fn normalize_index(index: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut idx = index.to_vec();
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in (i + 1..idx.len()).rev() {
            if idx[j] < idx[j - 1] {
                idx.swap(j, j - 1);
                sign = -sign;
            }
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some((idx, sign))
}

/// Sign of merging two disjoint increasing tuples into one increasing tuple.
fn merge_sign(a: &[usize], b: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if y < x {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn charts_compatible(a: &ChartBox, b: &ChartBox) -> bool {
    a.dim == b.dim && a.names == b.names
}

#[derive(Clone)]
pub struct VValuedForm {
    chart: ChartRef,
    degree: usize,
    value_dim: usize,
    coeffs: SmoothField,
}

impl VValuedForm {
    pub fn new(chart: &ChartRef, degree: usize, value_dim: usize, coeffs: SmoothField) -> Result<VValuedForm> {
        if degree > MAX_DEGREE {
            return Err(Error::DegreeOverflow(degree, 0));
        }
        let expected = value_dim * binomial(chart.dim, degree);
        if coeffs.dim_in() != chart.dim || coeffs.dim_out() != expected {
            return Err(Error::DimensionMismatch(format!(
                "coefficient field is {}->{}, expected {}->{}",
                coeffs.dim_in(),
                coeffs.dim_out(),
                chart.dim,
                expected
            )));
        }
        Ok(VValuedForm { chart: Arc::clone(chart), degree, value_dim, coeffs })
    }

    pub fn zero(chart: &ChartRef, degree: usize, value_dim: usize) -> VValuedForm {
        let len = value_dim * binomial(chart.dim, degree);
        VValuedForm::new(chart, degree, value_dim, SmoothField::constant(chart.dim, vec![0.0; len]))
            .expect("zero form")
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn coeffs(&self) -> &SmoothField {
        &self.coeffs
    }

    pub fn coeff_len(&self) -> usize {
        self.value_dim * binomial(self.chart.dim, self.degree)
    }

    /// Flat slot of coefficient `(alpha, I)` in the value-index-major layout.
    pub fn slot(&self, alpha: usize, index: &[usize]) -> usize {
        alpha * binomial(self.chart.dim, self.degree) + lex_rank(self.chart.dim, index)
    }

    pub fn coefficients_at(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs.eval(x)
    }

    /// Evaluate the form on `degree` tangent vectors; returns the R^k value.
    pub fn apply(&self, x: &[f64], vectors: &[&[f64]]) -> Vec<f64> {
        assert_eq!(vectors.len(), self.degree);
        let c = self.coeffs.eval(x);
        let indices = multi_indices(self.chart.dim, self.degree);
        let block = indices.len();
        (0..self.value_dim)
            .map(|alpha| {
                indices
                    .iter()
                    .enumerate()
                    .map(|(r, idx)| c[alpha * block + r] * det_minor(vectors, idx))
                    .sum()
            })
            .collect()
    }

    /// Matrix `W[i][j] = omega^alpha(e_i, e_j)` of a two-form component.
    pub fn two_form_matrix(&self, x: &[f64], alpha: usize) -> DMatrix<f64> {
        assert_eq!(self.degree, 2);
        let n = self.chart.dim;
        let c = self.coeffs.eval(x);
        let indices = multi_indices(n, 2);
        let block = indices.len();
        let mut w = DMatrix::zeros(n, n);
        for (r, idx) in indices.iter().enumerate() {
            let v = c[alpha * block + r];
            w[(idx[0], idx[1])] = v;
            w[(idx[1], idx[0])] = -v;
        }
        w
    }

    /// Covector of a one-form component.
    pub fn one_form_covector(&self, x: &[f64], alpha: usize) -> DVector<f64> {
        assert_eq!(self.degree, 1);
        let n = self.chart.dim;
        let c = self.coeffs.eval(x);
        DVector::from_iterator(n, c[alpha * n..(alpha + 1) * n].iter().copied())
    }

    /// Dual-number variants used when assembling derived exact fields.
    pub fn two_form_matrix_dual(&self, x: &[Dual], alpha: usize) -> Vec<Vec<Dual>> {
        assert_eq!(self.degree, 2);
        let n = self.chart.dim;
        let c = self.coeffs.eval_dual(x);
        let indices = multi_indices(n, 2);
        let block = indices.len();
        let mut w = vec![vec![Dual::ZERO; n]; n];
        for (r, idx) in indices.iter().enumerate() {
            let v = c[alpha * block + r];
            w[idx[0]][idx[1]] = v;
            w[idx[1]][idx[0]] = -v;
        }
        w
    }

    pub fn one_form_covector_dual(&self, x: &[Dual], alpha: usize) -> Vec<Dual> {
        assert_eq!(self.degree, 1);
        let n = self.chart.dim;
        let c = self.coeffs.eval_dual(x);
        c[alpha * n..(alpha + 1) * n].to_vec()
    }

    /// Pick out one value component as a scalar-valued form.
    pub fn component(&self, alpha: usize) -> VValuedForm {
        assert!(alpha < self.value_dim);
        let block = binomial(self.chart.dim, self.degree);
        let coeffs = self.coeffs.clone();
        let field = SmoothField::exact(self.chart.dim, block, move |x| {
            coeffs.eval_dual(x)[alpha * block..(alpha + 1) * block].to_vec()
        });
        VValuedForm::new(&self.chart, self.degree, 1, field).expect("component form")
    }

    /// Constant coefficient vector when the form is constant across the
    /// sampled points (within `tol`); used by the config exporter.
    pub fn constant_coefficients(&self, points: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
        let first = self.coeffs.eval(&points[0]);
        for p in &points[1..] {
            let c = self.coeffs.eval(p);
            if c.iter().zip(&first).any(|(a, b)| (a - b).abs() > tol) {
                return None;
            }
        }
        Some(first)
    }
}

fn det_minor(vectors: &[&[f64]], rows: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => vectors[0][rows[0]],
        2 => {
            vectors[0][rows[0]] * vectors[1][rows[1]] - vectors[0][rows[1]] * vectors[1][rows[0]]
        }
        3 => {
            let m = |a: usize, b: usize| vectors[b][rows[a]];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(2, 1) * m(1, 2))
                - m(1, 0) * (m(0, 1) * m(2, 2) - m(2, 1) * m(0, 2))
                + m(2, 0) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2))
        }
        _ => unreachable!("degree cap"),
    }
}

/// Term-based construction of forms with constant or analytic coefficients.
pub struct FormBuilder {
    chart: ChartRef,
    degree: usize,
    value_dim: usize,
    terms: Vec<(usize, Vec<usize>, f64, Option<Arc<dyn Fn(&[Dual]) -> Dual + Send + Sync>>)>,
}

impl FormBuilder {
    pub fn new(chart: &ChartRef, degree: usize, value_dim: usize) -> FormBuilder {
        FormBuilder { chart: Arc::clone(chart), degree, value_dim, terms: Vec::new() }
    }

    fn resolve(&self, names: &[&str]) -> Vec<usize> {
        names
            .iter()
            .map(|n| self.chart.index_of(n).unwrap_or_else(|| panic!("unknown coordinate '{n}'")))
            .collect()
    }

    /// `c * dx^I` with a constant coefficient.
    pub fn constant(mut self, alpha: usize, names: &[&str], c: f64) -> Self {
        let (idx, sign) = normalize_index(&self.resolve(names)).expect("repeated index");
        self.terms.push((alpha, idx, sign * c, None));
        self
    }

    /// `f(x) * dx^I` with an analytic coefficient.
    pub fn func(
        mut self,
        alpha: usize,
        names: &[&str],
        f: impl Fn(&[Dual]) -> Dual + Send + Sync + 'static,
    ) -> Self {
        let (idx, sign) = normalize_index(&self.resolve(names)).expect("repeated index");
        self.terms.push((alpha, idx, sign, Some(Arc::new(f))));
        self
    }

    pub fn build(self) -> VValuedForm {
        let n = self.chart.dim;
        let block = binomial(n, self.degree);
        let len = self.value_dim * block;
        let slots: Vec<(usize, f64, Option<Arc<dyn Fn(&[Dual]) -> Dual + Send + Sync>>)> = self
            .terms
            .into_iter()
            .map(|(alpha, idx, c, f)| (alpha * block + lex_rank(n, &idx), c, f))
            .collect();
        let coeffs = SmoothField::exact(n, len, move |x| {
            let mut out = vec![Dual::ZERO; len];
            for (slot, c, f) in &slots {
                let v = match f {
                    Some(f) => f(x) * *c,
                    None => Dual::constant(*c),
                };
                out[*slot] = out[*slot] + v;
            }
            out
        });
        VValuedForm::new(&self.chart, self.degree, self.value_dim, coeffs).expect("builder form")
    }
}

/// A vector field through the derivative contract (components `n -> n`).
#[derive(Clone)]
pub struct VectorFieldRep {
    chart: ChartRef,
    field: SmoothField,
}

impl VectorFieldRep {
    pub fn new(chart: &ChartRef, field: SmoothField) -> Result<VectorFieldRep> {
        if field.dim_in() != chart.dim || field.dim_out() != chart.dim {
            return Err(Error::DimensionMismatch("vector field arity".into()));
        }
        Ok(VectorFieldRep { chart: Arc::clone(chart), field })
    }

    pub fn constant(chart: &ChartRef, components: Vec<f64>) -> VectorFieldRep {
        VectorFieldRep::new(chart, SmoothField::constant(chart.dim, components)).expect("constant field")
    }

    pub fn coordinate(chart: &ChartRef, name: &str) -> VectorFieldRep {
        let mut v = vec![0.0; chart.dim];
        v[chart.index_of(name).expect("coordinate name")] = 1.0;
        VectorFieldRep::constant(chart, v)
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn field(&self) -> &SmoothField {
        &self.field
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.field.eval(x)
    }
}

/// A `k`-vector field `(X_1, ..., X_k)`, component-major (`k * n` outputs).
#[derive(Clone)]
pub struct KVectorFieldRep {
    chart: ChartRef,
    k: usize,
    field: SmoothField,
}

impl KVectorFieldRep {
    pub fn new(chart: &ChartRef, k: usize, field: SmoothField) -> Result<KVectorFieldRep> {
        if field.dim_in() != chart.dim || field.dim_out() != k * chart.dim {
            return Err(Error::DimensionMismatch("k-vector field arity".into()));
        }
        Ok(KVectorFieldRep { chart: Arc::clone(chart), k, field })
    }

    pub fn from_components(parts: &[VectorFieldRep]) -> KVectorFieldRep {
        let chart = Arc::clone(parts[0].chart());
        let k = parts.len();
        let fields: Vec<SmoothField> = parts.iter().map(|p| p.field.clone()).collect();
        let n = chart.dim;
        let field = SmoothField::exact(n, k * n, move |x| {
            let mut out = Vec::with_capacity(fields.len() * n);
            for f in &fields {
                out.extend(f.eval_dual(x));
            }
            out
        });
        KVectorFieldRep::new(&chart, k, field).expect("k-vector assembly")
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn field(&self) -> &SmoothField {
        &self.field
    }

    pub fn component(&self, alpha: usize) -> VectorFieldRep {
        assert!(alpha < self.k);
        let n = self.chart.dim;
        let f = self.field.clone();
        let comp = SmoothField::exact(n, n, move |x| {
            f.eval_dual(x)[alpha * n..(alpha + 1) * n].to_vec()
        });
        VectorFieldRep::new(&self.chart, comp).expect("component field")
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.field.eval(x)
    }
}

/// Wedge of scalar-valued forms.
pub fn wedge(a: &VValuedForm, b: &VValuedForm) -> Result<VValuedForm> {
    if a.value_dim != 1 || b.value_dim != 1 {
        return Err(Error::ValueDimMismatch(a.value_dim, b.value_dim));
    }
    wedge_component(a, b)
}

fn wedge_component(a: &VValuedForm, b: &VValuedForm) -> Result<VValuedForm> {
    if !charts_compatible(&a.chart, &b.chart) {
        return Err(Error::ChartMismatch("wedge operands live on different charts".into()));
    }
    let (p, q) = (a.degree, b.degree);
    if p + q > MAX_DEGREE {
        return Err(Error::DegreeOverflow(p, q));
    }
    let n = a.chart.dim;
    let out_indices = multi_indices(n, p + q);
    let a_indices = multi_indices(n, p);
    // (slot_out, slot_a, slot_b, sign) table, computed once
    let mut table: Vec<(usize, usize, usize, f64)> = Vec::new();
    for ia in &a_indices {
        for (rb, ib) in multi_indices(n, q).iter().enumerate() {
            if ia.iter().any(|i| ib.contains(i)) {
                continue;
            }
            let sign = merge_sign(ia, ib);
            let mut merged: Vec<usize> = ia.iter().chain(ib.iter()).copied().collect();
            merged.sort_unstable();
            table.push((lex_rank(n, &merged), lex_rank(n, ia), rb, sign));
        }
    }
    let out_len = out_indices.len();
    let (ca, cb) = (a.coeffs.clone(), b.coeffs.clone());
    let coeffs = SmoothField::exact(n, out_len, move |x| {
        let va = ca.eval_dual(x);
        let vb = cb.eval_dual(x);
        let mut out = vec![Dual::ZERO; out_len];
        for (slot, ra, rb, sign) in &table {
            out[*slot] = out[*slot] + va[*ra] * vb[*rb] * *sign;
        }
        out
    });
    VValuedForm::new(&a.chart, p + q, 1, coeffs)
}

/// Componentwise exterior product of two R^k-valued forms.
pub fn barwedge(a: &VValuedForm, b: &VValuedForm) -> Result<VValuedForm> {
    if a.value_dim != b.value_dim {
        return Err(Error::ValueDimMismatch(a.value_dim, b.value_dim));
    }
    let k = a.value_dim;
    let parts: Vec<VValuedForm> = (0..k)
        .map(|alpha| wedge_component(&a.component(alpha), &b.component(alpha)))
        .collect::<Result<_>>()?;
    Ok(stack_components(&parts))
}

/// Reassemble scalar-valued forms of equal degree into one R^k-valued form.
pub fn stack_components(parts: &[VValuedForm]) -> VValuedForm {
    let chart = Arc::clone(&parts[0].chart);
    let degree = parts[0].degree;
    let block = binomial(chart.dim, degree);
    let k = parts.len();
    let fields: Vec<SmoothField> = parts.iter().map(|p| p.coeffs.clone()).collect();
    let coeffs = SmoothField::exact(chart.dim, k * block, move |x| {
        let mut out = Vec::with_capacity(fields.len() * block);
        for f in &fields {
            out.extend(f.eval_dual(x));
        }
        out
    });
    VValuedForm::new(&chart, degree, k, coeffs).expect("stacked form")
}

/// Contraction with a vector field, componentwise over the value index.
pub fn interior_product(x: &VectorFieldRep, omega: &VValuedForm) -> Result<VValuedForm> {
    if omega.degree == 0 {
        return Err(Error::DegreeZeroContraction);
    }
    if !charts_compatible(x.chart(), &omega.chart) {
        return Err(Error::ChartMismatch("contraction operands on different charts".into()));
    }
    let n = omega.chart.dim;
    let p = omega.degree;
    let k = omega.value_dim;
    let in_block = binomial(n, p);
    let out_block = binomial(n, p - 1);
    // (slot_out_local, component index i, slot_in_local, sign)
    let mut table: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (rj, j_idx) in multi_indices(n, p - 1).iter().enumerate() {
        for i in 0..n {
            if j_idx.contains(&i) {
                continue;
            }
            let sign = merge_sign(&[i], j_idx);
            let mut merged = j_idx.clone();
            merged.push(i);
            merged.sort_unstable();
            table.push((rj, i, lex_rank(n, &merged), sign));
        }
    }
    let xc = x.field().clone();
    let oc = omega.coeffs.clone();
    let coeffs = SmoothField::exact(n, k * out_block, move |pt| {
        let xv = xc.eval_dual(pt);
        let ov = oc.eval_dual(pt);
        let mut out = vec![Dual::ZERO; k * out_block];
        for alpha in 0..k {
            for (rj, i, ri, sign) in &table {
                out[alpha * out_block + rj] =
                    out[alpha * out_block + rj] + xv[*i] * ov[alpha * in_block + ri] * *sign;
            }
        }
        out
    });
    VValuedForm::new(&omega.chart, p - 1, k, coeffs)
}

/// `iota_X theta = iota_{X_alpha} theta^alpha` (sum over the value index).
pub fn contract_kvector(x: &KVectorFieldRep, omega: &VValuedForm) -> Result<VValuedForm> {
    if x.k() != omega.value_dim {
        return Err(Error::ValueDimMismatch(x.k(), omega.value_dim));
    }
    let mut acc: Option<VValuedForm> = None;
    for alpha in 0..omega.value_dim {
        let term = interior_product(&x.component(alpha), &omega.component(alpha))?;
        acc = Some(match acc {
            None => term,
            Some(prev) => add_forms(&prev, &term)?,
        });
    }
    Ok(acc.expect("k >= 1"))
}

pub fn add_forms(a: &VValuedForm, b: &VValuedForm) -> Result<VValuedForm> {
    if a.degree != b.degree || a.value_dim != b.value_dim {
        return Err(Error::DimensionMismatch("form addition".into()));
    }
    let (ca, cb) = (a.coeffs.clone(), b.coeffs.clone());
    let len = a.coeff_len();
    let coeffs = SmoothField::exact(a.chart.dim, len, move |x| {
        let va = ca.eval_dual(x);
        let vb = cb.eval_dual(x);
        va.iter().zip(vb).map(|(u, v)| *u + v).collect()
    });
    VValuedForm::new(&a.chart, a.degree, a.value_dim, coeffs)
}

pub fn scale_form(a: &VValuedForm, s: f64) -> VValuedForm {
    let ca = a.coeffs.clone();
    let len = a.coeff_len();
    let coeffs = SmoothField::exact(a.chart.dim, len, move |x| {
        ca.eval_dual(x).iter().map(|v| *v * s).collect()
    });
    VValuedForm::new(&a.chart, a.degree, a.value_dim, coeffs).expect("scaled form")
}

/// Exterior derivative from the alternating sum of coefficient derivatives.
/// The output evaluates exactly through the parents' Jacobians; its own
/// Jacobian is finite-difference backed.
pub fn exterior_derivative(omega: &VValuedForm) -> Result<VValuedForm> {
    if omega.degree + 1 > MAX_DEGREE {
        return Err(Error::DegreeOverflow(omega.degree, 1));
    }
    let n = omega.chart.dim;
    let p = omega.degree;
    let k = omega.value_dim;
    let in_block = binomial(n, p);
    let out_block = binomial(n, p + 1);
    // (slot_out_local, derivative direction, slot_in_local, sign)
    let mut table: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (ro, k_idx) in multi_indices(n, p + 1).iter().enumerate() {
        for (a, &dir) in k_idx.iter().enumerate() {
            let rest: Vec<usize> = k_idx.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, v)| *v).collect();
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            table.push((ro, dir, lex_rank(n, &rest), sign));
        }
    }
    let oc = omega.coeffs.clone();
    let coeffs = SmoothField::numeric(n, k * out_block, move |x| {
        let jac = oc.jacobian(x);
        let mut out = vec![0.0; k * out_block];
        for alpha in 0..k {
            for (ro, dir, ri, sign) in &table {
                out[alpha * out_block + ro] += sign * jac[(alpha * in_block + ri, *dir)];
            }
        }
        out
    });
    VValuedForm::new(&omega.chart, p + 1, k, coeffs)
}

/// Cartan formula `L_X = d iota_X + iota_X d`.
pub fn lie_derivative(x: &VectorFieldRep, omega: &VValuedForm) -> Result<VValuedForm> {
    let hook_d = interior_product(x, &exterior_derivative(omega)?)?;
    if omega.degree == 0 {
        return Ok(hook_d);
    }
    let d_hook = exterior_derivative(&interior_product(x, omega)?)?;
    add_forms(&d_hook, &hook_d)
}

/// `[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`.
pub fn lie_bracket(x: &VectorFieldRep, y: &VectorFieldRep) -> Result<VectorFieldRep> {
    if !charts_compatible(x.chart(), y.chart()) {
        return Err(Error::ChartMismatch("bracket operands on different charts".into()));
    }
    let n = x.chart().dim;
    let (fx, fy) = (x.field().clone(), y.field().clone());
    let field = SmoothField::numeric(n, n, move |p| {
        let vx = DVector::from_vec(fx.eval(p));
        let vy = DVector::from_vec(fy.eval(p));
        let jx = fx.jacobian(p);
        let jy = fy.jacobian(p);
        ((jy * &vx) - (jx * &vy)).iter().copied().collect()
    });
    VectorFieldRep::new(x.chart(), field)
}

/// Pullback along a smooth map `phi: source -> target`,
/// `(phi^* omega)_J(x) = sum_I omega_I(phi(x)) det(D phi[I, J])`.
pub fn pullback(
    phi: &SmoothField,
    source: &ChartRef,
    omega: &VValuedForm,
) -> Result<VValuedForm> {
    if phi.dim_in() != source.dim || phi.dim_out() != omega.chart.dim {
        return Err(Error::DimensionMismatch(format!(
            "pullback map is {}->{}, chart dims are {} and {}",
            phi.dim_in(),
            phi.dim_out(),
            source.dim,
            omega.chart.dim
        )));
    }
    let n_src = source.dim;
    let p = omega.degree;
    let k = omega.value_dim;
    let tgt_indices = multi_indices(omega.chart.dim, p);
    let src_indices = multi_indices(n_src, p);
    let in_block = tgt_indices.len();
    let out_block = src_indices.len();
    let phic = phi.clone();
    let oc = omega.coeffs.clone();
    let coeffs = SmoothField::numeric(n_src, k * out_block, move |x| {
        let y = phic.eval(x);
        let jac = phic.jacobian(x);
        let ov = oc.eval(&y);
        let mut out = vec![0.0; k * out_block];
        for (rj, j_idx) in src_indices.iter().enumerate() {
            for (ri, i_idx) in tgt_indices.iter().enumerate() {
                let minor = jac_minor(&jac, i_idx, j_idx);
                if minor == 0.0 {
                    continue;
                }
                for alpha in 0..k {
                    out[alpha * out_block + rj] += ov[alpha * in_block + ri] * minor;
                }
            }
        }
        out
    });
    VValuedForm::new(source, p, k, coeffs)
}

fn jac_minor(jac: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => jac[(rows[0], cols[0])],
        2 => {
            jac[(rows[0], cols[0])] * jac[(rows[1], cols[1])]
                - jac[(rows[0], cols[1])] * jac[(rows[1], cols[0])]
        }
        3 => {
            let m = |a: usize, b: usize| jac[(rows[a], cols[b])];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => unreachable!("degree cap"),
    }
}

/// Max coefficient deviation between two forms over the sample points.
pub fn max_coeff_deviation(a: &VValuedForm, b: &VValuedForm, points: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for p in points {
        let ca = a.coeffs.eval(p);
        let cb = b.coeffs.eval(p);
        for (u, v) in ca.iter().zip(&cb) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

/// Max coefficient magnitude over the sample points.
pub fn max_coeff_norm(a: &VValuedForm, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flat_map(|p| a.coeffs.eval(p))
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}
