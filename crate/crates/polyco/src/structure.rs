//! Cosymplectic, k-polycosymplectic and k-polysymplectic structures on
//! charts: pointwise verification, Reeb fields, the flat isomorphism, the
//! distinguished vector fields of a function, the Poisson bracket, and the
//! fibred polysymplectic extension on `R^k x M`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{halton_points, ChartBox, ChartRef};
use crate::dual::{lu_solve_dual, Dual};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{
    binomial, exterior_derivative, lex_rank, max_coeff_norm, multi_indices, KVectorFieldRep,
    VValuedForm, VectorFieldRep,
};
use crate::linalg::{nullspace, rank};
use crate::report::{CheckResult, VerificationReport};

pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct CosymplecticStructure {
    pub chart: ChartRef,
    pub tau: VValuedForm,
    pub omega: VValuedForm,
}

#[derive(Clone)]
pub struct KPolycosymplecticStructure {
    pub chart: ChartRef,
    pub k: usize,
    pub tau: VValuedForm,
    pub omega: VValuedForm,
}

#[derive(Clone)]
pub struct KPolysymplecticStructure {
    pub chart: ChartRef,
    pub k: usize,
    pub omega: VValuedForm,
}

#[derive(Clone)]
pub enum GeometricStructure {
    Cosymplectic(CosymplecticStructure),
    KPolycosymplectic(KPolycosymplecticStructure),
    KPolysymplectic(KPolysymplecticStructure),
}

impl CosymplecticStructure {
    pub fn new(chart: &ChartRef, tau: VValuedForm, omega: VValuedForm) -> Result<Self> {
        if tau.degree() != 1 || omega.degree() != 2 || tau.value_dim() != 1 || omega.value_dim() != 1 {
            return Err(Error::DimensionMismatch("cosymplectic data must be a scalar one- and two-form".into()));
        }
        Ok(CosymplecticStructure { chart: Arc::clone(chart), tau, omega })
    }

    pub fn to_polyco(&self) -> KPolycosymplecticStructure {
        KPolycosymplecticStructure {
            chart: Arc::clone(&self.chart),
            k: 1,
            tau: self.tau.clone(),
            omega: self.omega.clone(),
        }
    }
}

impl KPolycosymplecticStructure {
    pub fn new(chart: &ChartRef, k: usize, tau: VValuedForm, omega: VValuedForm) -> Result<Self> {
        if tau.degree() != 1 || omega.degree() != 2 {
            return Err(Error::DimensionMismatch("polycosymplectic data degrees".into()));
        }
        if tau.value_dim() != k || omega.value_dim() != k {
            return Err(Error::ValueDimMismatch(tau.value_dim(), k));
        }
        Ok(KPolycosymplecticStructure { chart: Arc::clone(chart), k, tau, omega })
    }

    /// `k x n` matrix of the tau covectors at a point.
    pub fn tau_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.chart.dim;
        let mut t = DMatrix::zeros(self.k, n);
        for alpha in 0..self.k {
            t.row_mut(alpha).copy_from(&self.tau.one_form_covector(x, alpha).transpose());
        }
        t
    }

    /// Stacked `(k n) x n` matrix of the omega components at a point.
    pub fn omega_stack(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.chart.dim;
        let mut s = DMatrix::zeros(self.k * n, n);
        for alpha in 0..self.k {
            s.view_mut((alpha * n, 0), (n, n)).copy_from(&self.omega.two_form_matrix(x, alpha));
        }
        s
    }
}

impl KPolysymplecticStructure {
    pub fn new(chart: &ChartRef, k: usize, omega: VValuedForm) -> Result<Self> {
        if omega.degree() != 2 || omega.value_dim() != k {
            return Err(Error::DimensionMismatch("polysymplectic data".into()));
        }
        Ok(KPolysymplecticStructure { chart: Arc::clone(chart), k, omega })
    }

    pub fn omega_stack(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.chart.dim;
        let mut s = DMatrix::zeros(self.k * n, n);
        for alpha in 0..self.k {
            s.view_mut((alpha * n, 0), (n, n)).copy_from(&self.omega.two_form_matrix(x, alpha));
        }
        s
    }
}

fn closedness_check(report: &mut VerificationReport, name: &str, form: &VValuedForm, points: &[Vec<f64>], tol: f64) {
    match exterior_derivative(form) {
        Ok(d) => report.push(CheckResult::residual(name, max_coeff_norm(&d, points), tol)),
        Err(e) => report.push(CheckResult::boolean(&format!("{name} ({e})"), false)),
    }
}

/// Pointwise verification of the defining conditions of any structure
/// variant: closedness residuals, kernel ranks via singular values, and
/// kernel-intersection triviality. Sampling uses the Halton sequence.
pub fn verify_structure(
    structure: &GeometricStructure,
    samples: usize,
    tol: f64,
    seed: u64,
) -> VerificationReport {
    match structure {
        GeometricStructure::Cosymplectic(s) => {
            let pts = halton_points(&s.chart, samples, seed);
            let mut report = VerificationReport::new("cosymplectic");
            report.push(CheckResult::boolean("odd_dimension", s.chart.dim % 2 == 1));
            closedness_check(&mut report, "closedness_tau", &s.tau, &pts, tol);
            closedness_check(&mut report, "closedness_omega", &s.omega, &pts, tol);
            let mut worst_rank = s.chart.dim;
            for p in &pts {
                let f = flat_matrix(s, p);
                worst_rank = worst_rank.min(rank(&f));
            }
            report.push(CheckResult::rank("flat_isomorphism_rank", worst_rank, s.chart.dim));
            report
        }
        GeometricStructure::KPolycosymplectic(s) => {
            let pts = halton_points(&s.chart, samples, seed);
            let mut report = VerificationReport::new("k_polycosymplectic");
            closedness_check(&mut report, "closedness_tau", &s.tau, &pts, tol);
            closedness_check(&mut report, "closedness_omega", &s.omega, &pts, tol);
            let n = s.chart.dim;
            let mut worst_kernel = n;
            let mut worst_joint = 0usize;
            for p in &pts {
                let stack = s.omega_stack(p);
                worst_kernel = worst_kernel.min(n - rank(&stack));
                let mut joint = DMatrix::zeros(s.k * n + s.k, n);
                joint.view_mut((0, 0), (s.k * n, n)).copy_from(&stack);
                joint.view_mut((s.k * n, 0), (s.k, n)).copy_from(&s.tau_matrix(p));
                worst_joint = worst_joint.max(n - rank(&joint));
            }
            report.push(CheckResult::rank("omega_kernel_rank", worst_kernel, s.k));
            report.push(CheckResult::rank("joint_kernel_rank", worst_joint, 0));
            report
        }
        GeometricStructure::KPolysymplectic(s) => {
            let pts = halton_points(&s.chart, samples, seed);
            let mut report = VerificationReport::new("k_polysymplectic");
            closedness_check(&mut report, "closedness_omega", &s.omega, &pts, tol);
            let n = s.chart.dim;
            let mut worst = 0usize;
            for p in &pts {
                worst = worst.max(n - rank(&s.omega_stack(p)));
            }
            report.push(CheckResult::rank("omega_kernel_rank", worst, 0));
            report
        }
    }
}

/// `flat(v) = iota_v omega + (iota_v tau) tau` as the matrix
/// `Omega^T + tau tau^T` with `Omega[i][j] = omega(e_i, e_j)`.
pub fn flat_matrix(s: &CosymplecticStructure, x: &[f64]) -> DMatrix<f64> {
    let omega = s.omega.two_form_matrix(x, 0);
    let tau = s.tau.one_form_covector(x, 0);
    omega.transpose() + &tau * tau.transpose()
}

fn flat_matrix_dual(s: &CosymplecticStructure, x: &[Dual]) -> (Vec<Vec<Dual>>, Vec<Dual>) {
    let n = s.chart.dim;
    let omega = s.omega.two_form_matrix_dual(x, 0);
    let tau = s.tau.one_form_covector_dual(x, 0);
    let mut f = vec![vec![Dual::ZERO; n]; n];
    for i in 0..n {
        for j in 0..n {
            f[i][j] = omega[j][i] + tau[i] * tau[j];
        }
    }
    (f, tau)
}

/// Apply the inverse flat map to a covector.
pub fn flat_inverse_apply(s: &CosymplecticStructure, x: &[f64], covector: &DVector<f64>) -> Result<DVector<f64>> {
    flat_matrix(s, x)
        .lu()
        .solve(covector)
        .ok_or_else(|| Error::SingularSystem("flat matrix".into()))
}

/// Reeb vector field of a cosymplectic structure at a point,
/// `R = flat^{-1}(tau)`.
pub fn reeb_cosymplectic(s: &CosymplecticStructure, x: &[f64]) -> Result<DVector<f64>> {
    let tau = s.tau.one_form_covector(x, 0);
    let r = flat_inverse_apply(s, x, &tau)?;
    let omega = s.omega.two_form_matrix(x, 0);
    let residual = (omega.transpose() * &r).amax().max((tau.dot(&r) - 1.0).abs());
    if residual > RESIDUAL_TOL {
        return Err(Error::InconsistentSystem(residual));
    }
    Ok(r)
}

/// Reeb fields of a cosymplectic structure as an exact vector field.
pub fn reeb_cosymplectic_field(s: &CosymplecticStructure) -> VectorFieldRep {
    let chart = Arc::clone(&s.chart);
    let s = s.clone();
    let n = chart.dim;
    let field = SmoothField::exact(n, n, move |x| {
        let (mut f, tau) = flat_matrix_dual(&s, x);
        let mut rhs = tau;
        lu_solve_dual(&mut f, &mut rhs).expect("flat matrix invertible")
    });
    VectorFieldRep::new(&chart, field).expect("reeb field")
}

/// Outcome of the Reeb-family solve at a point.
pub struct ReebSolution {
    pub fields: Vec<DVector<f64>>,
    pub residual: f64,
    /// Column rank of the stacked defining system; equal to the chart
    /// dimension exactly when the solution is unique.
    pub system_column_rank: usize,
}

/// Reeb family of a k-polycosymplectic structure at a point: a nullspace
/// basis of the stacked omega matrices followed by the dual-basis solve
/// against tau restricted to that nullspace.
pub fn reeb_family(s: &KPolycosymplecticStructure, x: &[f64]) -> Result<ReebSolution> {
    let n = s.chart.dim;
    let stack = s.omega_stack(x);
    let basis = nullspace(&stack);
    if basis.ncols() != s.k {
        return Err(Error::KernelRank { found: basis.ncols(), expected: s.k, sample: 0 });
    }
    let tmat = s.tau_matrix(x);
    let restricted = &tmat * &basis; // k x k
    let lu = restricted.clone().lu();
    let mut fields = Vec::with_capacity(s.k);
    let mut residual = 0.0f64;
    for alpha in 0..s.k {
        let mut e = DVector::zeros(s.k);
        e[alpha] = 1.0;
        let z = lu
            .solve(&e)
            .ok_or_else(|| Error::SingularSystem("tau restricted to ker omega".into()))?;
        let r = &basis * z;
        residual = residual.max((&stack * &r).amax());
        residual = residual.max((&tmat * &r - e).amax());
        fields.push(r);
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::InconsistentSystem(residual));
    }
    let mut defining = DMatrix::zeros(s.k * n + s.k, n);
    defining.view_mut((0, 0), (s.k * n, n)).copy_from(&stack);
    defining.view_mut((s.k * n, 0), (s.k, n)).copy_from(&tmat);
    Ok(ReebSolution { fields, residual, system_column_rank: rank(&defining) })
}

/// The Reeb family as a k-vector field (numeric: each evaluation solves).
pub fn reeb_family_field(s: &KPolycosymplecticStructure) -> KVectorFieldRep {
    let s2 = s.clone();
    let n = s.chart.dim;
    let k = s.k;
    let field = SmoothField::numeric(n, k * n, move |x| {
        let sol = reeb_family(&s2, x).expect("reeb family");
        let mut out = Vec::with_capacity(k * n);
        for r in &sol.fields {
            out.extend(r.iter().copied());
        }
        out
    });
    KVectorFieldRep::new(&s.chart, k, field).expect("reeb family field")
}

fn differential(f: &SmoothField) -> SmoothField {
    let n = f.dim_in();
    assert_eq!(f.dim_out(), 1);
    let f = f.clone();
    SmoothField::numeric(n, n, move |x| {
        let jac = f.jacobian(x);
        (0..n).map(|j| jac[(0, j)]).collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistinguishedField {
    /// `flat^{-1}(df)`
    Gradient,
    /// `flat^{-1}(df - (Rf) tau)`
    Hamiltonian,
    /// `R + X_f`
    Evolution,
}

/// The gradient, Hamiltonian or evolution vector field of a function. The
/// returned field evaluates exactly; its Jacobian is finite-difference
/// backed because it embeds first derivatives of `f`.
pub fn distinguished_field(
    s: &CosymplecticStructure,
    f: &SmoothField,
    which: DistinguishedField,
) -> VectorFieldRep {
    assert_eq!(f.dim_out(), 1, "scalar Hamiltonian expected");
    let s2 = s.clone();
    let df = differential(f);
    let n = s.chart.dim;
    let field = SmoothField::exact(n, n, move |x| {
        let (fmat, tau) = flat_matrix_dual(&s2, x);
        let df_x = df.eval_dual(x);
        // R = flat^{-1} tau
        let mut a = fmat.clone();
        let mut rhs = tau.clone();
        let reeb = lu_solve_dual(&mut a, &mut rhs).expect("flat invertible");
        let rf = df_x.iter().zip(&reeb).fold(Dual::ZERO, |acc, (d, r)| acc + *d * *r);
        let rhs: Vec<Dual> = match which {
            DistinguishedField::Gradient => df_x,
            _ => df_x.iter().zip(&tau).map(|(d, t)| *d - rf * *t).collect(),
        };
        let mut a = fmat;
        let mut rhs = rhs;
        let mut v = lu_solve_dual(&mut a, &mut rhs).expect("flat invertible");
        if which == DistinguishedField::Evolution {
            for (vi, ri) in v.iter_mut().zip(&reeb) {
                *vi = *vi + *ri;
            }
        }
        v
    });
    VectorFieldRep::new(&s.chart, field).expect("distinguished field")
}

pub fn gradient_field(s: &CosymplecticStructure, f: &SmoothField) -> VectorFieldRep {
    distinguished_field(s, f, DistinguishedField::Gradient)
}

pub fn hamiltonian_field(s: &CosymplecticStructure, f: &SmoothField) -> VectorFieldRep {
    distinguished_field(s, f, DistinguishedField::Hamiltonian)
}

pub fn evolution_field(s: &CosymplecticStructure, f: &SmoothField) -> VectorFieldRep {
    distinguished_field(s, f, DistinguishedField::Evolution)
}

/// Poisson bracket `{f, g} = omega(X_f, X_g)`.
pub fn poisson_bracket(s: &CosymplecticStructure, f: &SmoothField, g: &SmoothField) -> SmoothField {
    let xf = hamiltonian_field(s, f);
    let xg = hamiltonian_field(s, g);
    let omega = s.omega.clone();
    let n = s.chart.dim;
    SmoothField::exact(n, 1, move |x| {
        let u = xf.field().eval_dual(x);
        let v = xg.field().eval_dual(x);
        let w = omega.two_form_matrix_dual(x, 0);
        let mut acc = Dual::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc = acc + u[i] * w[i][j] * v[j];
            }
        }
        vec![acc]
    })
}

/// The fibred polysymplectic extension
/// `omega~ = pr* omega + du barwedge pr* tau` on `R^k x M`, together with
/// its k-polysymplectic Reeb fields.
#[derive(Clone)]
pub struct FibredExtension {
    pub base: KPolycosymplecticStructure,
    pub extended_chart: ChartRef,
    pub omega_tilde: KPolysymplecticStructure,
    pub reeb_tilde: KVectorFieldRep,
}

pub fn extend_to_fibred(s: &KPolycosymplecticStructure) -> Result<FibredExtension> {
    let k = s.k;
    let n = s.chart.dim;
    let mut names: Vec<String> = (1..=k).map(|a| format!("u{a}")).collect();
    names.extend(s.chart.names.iter().cloned());
    let mut bounds = vec![(-1.0, 1.0); k];
    bounds.extend(s.chart.bounds.iter().copied());
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let ext_chart = ChartBox::new(&name_refs, &bounds)?;

    let nn = k + n;
    let out_block = binomial(nn, 2);
    let base_block = binomial(n, 2);
    // scatter tables from base-form slots into extended slots
    let mut omega_table: Vec<(usize, usize)> = Vec::new(); // (ext slot local, base slot local)
    for (r, idx) in multi_indices(n, 2).iter().enumerate() {
        omega_table.push((lex_rank(nn, &[idx[0] + k, idx[1] + k]), r));
    }
    let mut tau_tables: Vec<Vec<(usize, usize)>> = Vec::new(); // per alpha: (ext slot, base cov index)
    for alpha in 0..k {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((lex_rank(nn, &[alpha, i + k]), i));
        }
        tau_tables.push(t);
    }
    let tau = s.tau.coeffs().clone();
    let omega = s.omega.coeffs().clone();
    let coeffs = SmoothField::exact(nn, k * out_block, move |y| {
        let x = &y[k..];
        let tv = tau.eval_dual(x);
        let ov = omega.eval_dual(x);
        let mut out = vec![Dual::ZERO; k * out_block];
        for alpha in 0..k {
            for (slot, r) in &omega_table {
                out[alpha * out_block + slot] = out[alpha * out_block + slot] + ov[alpha * base_block + r];
            }
            for (slot, i) in &tau_tables[alpha] {
                out[alpha * out_block + slot] = out[alpha * out_block + slot] + tv[alpha * n + i];
            }
        }
        out
    });
    let omega_tilde_form = VValuedForm::new(&ext_chart, 2, k, coeffs)?;
    let omega_tilde = KPolysymplecticStructure::new(&ext_chart, k, omega_tilde_form)?;

    let base = s.clone();
    let reeb_field = SmoothField::numeric(nn, k * nn, move |y| {
        let sol = reeb_family(&base, &y[k..]).expect("reeb family of the base");
        let mut out = Vec::with_capacity(k * nn);
        for r in &sol.fields {
            out.extend(std::iter::repeat(0.0).take(k));
            out.extend(r.iter().copied());
        }
        out
    });
    let reeb_tilde = KVectorFieldRep::new(&ext_chart, k, reeb_field)?;

    Ok(FibredExtension {
        base: s.clone(),
        extended_chart: ext_chart,
        omega_tilde,
        reeb_tilde,
    })
}

/// Defining identities of the fibred extension:
/// `iota_{R~_alpha} omega~^beta = -delta^beta_alpha du^alpha` and
/// `R~_alpha u^beta = 0`, checked coefficientwise at samples.
pub fn verify_fibred_extension(fe: &FibredExtension, samples: usize, tol: f64, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::new("fibred_extension");
    let pts = halton_points(&fe.extended_chart, samples, seed);
    let k = fe.base.k;
    let nn = fe.extended_chart.dim;
    let mut worst = 0.0f64;
    let mut worst_u = 0.0f64;
    for p in &pts {
        let rv = fe.reeb_tilde.eval(p);
        for alpha in 0..k {
            let r = &rv[alpha * nn..(alpha + 1) * nn];
            for comp in r.iter().take(k) {
                worst_u = worst_u.max(comp.abs());
            }
            for beta in 0..k {
                let w = fe.omega_tilde.omega.two_form_matrix(p, beta);
                let rvec = DVector::from_iterator(nn, r.iter().copied());
                let contraction = w.transpose() * rvec;
                // expected: -delta^beta_alpha du^alpha
                for j in 0..nn {
                    let expected = if beta == alpha && j == alpha { -1.0 } else { 0.0 };
                    worst = worst.max((contraction[j] - expected).abs());
                }
            }
        }
    }
    report.push(CheckResult::residual("reeb_contraction_identity", worst, tol));
    report.push(CheckResult::residual("reeb_annihilates_u", worst_u, tol));
    report.merge(verify_structure(
        &GeometricStructure::KPolysymplectic(fe.omega_tilde.clone()),
        samples,
        tol.max(1e-9),
        seed,
    ));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::FormBuilder;

    fn darboux() -> CosymplecticStructure {
        let chart = ChartBox::new(&["t", "q", "p"], &[(0.0, 2.0), (-5.0, 5.0), (-5.0, 5.0)]).unwrap();
        let tau = FormBuilder::new(&chart, 1, 1).constant(0, &["t"], 1.0).build();
        let omega = FormBuilder::new(&chart, 2, 1).constant(0, &["q", "p"], 1.0).build();
        CosymplecticStructure::new(&chart, tau, omega).unwrap()
    }

    #[test]
    fn darboux_reeb_is_dt() {
        let s = darboux();
        let r = reeb_cosymplectic(&s, &[0.3, 1.0, -2.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12 && r[1].abs() < 1e-12 && r[2].abs() < 1e-12);
    }

    #[test]
    fn scaled_tau_halves_reeb() {
        let chart = ChartBox::new(&["t", "q", "p"], &[(0.0, 2.0), (-5.0, 5.0), (-5.0, 5.0)]).unwrap();
        let tau = FormBuilder::new(&chart, 1, 1).constant(0, &["t"], 2.0).build();
        let omega = FormBuilder::new(&chart, 2, 1).constant(0, &["q", "p"], 1.0).build();
        let s = CosymplecticStructure::new(&chart, tau, omega).unwrap();
        // iota_R tau = 1 forces R_t = 1/2
        let r = s;
        let sol = reeb_family(&r.to_polyco(), &[0.1, 0.0, 0.0]).unwrap();
        assert!((sol.fields[0][0] - 0.5).abs() < 1e-12);
        assert!(sol.fields[0][1].abs() < 1e-12 && sol.fields[0][2].abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_field_of_kinetic_energy() {
        let s = darboux();
        let f = SmoothField::exact_scalar(3, |x| x[2] * x[2] * 0.5);
        let xf = hamiltonian_field(&s, &f);
        let v = xf.eval(&[0.0, 1.0, 3.0]);
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
        assert!(v[2].abs() < 1e-12);
    }

    #[test]
    fn time_function_has_zero_hamiltonian_field() {
        let s = darboux();
        let f = SmoothField::exact_scalar(3, |x| x[0]);
        let xf = hamiltonian_field(&s, &f);
        let nabla = gradient_field(&s, &f);
        let ef = evolution_field(&s, &f);
        let v = xf.eval(&[0.7, 0.2, -0.4]);
        assert!(v.iter().all(|c| c.abs() < 1e-12));
        let g = nabla.eval(&[0.7, 0.2, -0.4]);
        let r = reeb_cosymplectic(&s, &[0.7, 0.2, -0.4]).unwrap();
        for i in 0..3 {
            assert!((g[i] - r[i]).abs() < 1e-12);
        }
        let e = ef.eval(&[0.7, 0.2, -0.4]);
        for i in 0..3 {
            assert!((e[i] - r[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_poisson_bracket() {
        let s = darboux();
        let q = SmoothField::exact_scalar(3, |x| x[1]);
        let p = SmoothField::exact_scalar(3, |x| x[2]);
        let b = poisson_bracket(&s, &q, &p);
        assert!((b.eval(&[0.5, 1.0, 2.0])[0] - 1.0).abs() < 1e-12);
        let t = SmoothField::exact_scalar(3, |x| x[0]);
        let g = SmoothField::exact_scalar(3, |x| x[1] * x[2].sin() + x[0]);
        let tb = poisson_bracket(&s, &t, &g);
        assert!(tb.eval(&[0.5, 1.0, 2.0])[0].abs() < 1e-12);
        let bb = poisson_bracket(&s, &g, &g);
        assert!(bb.eval(&[0.5, 1.0, 2.0])[0].abs() < 1e-12);
    }
}
