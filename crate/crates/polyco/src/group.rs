//! Lie group models, actions, momentum maps, co-adjoint cocycles and the
//! affine action making every momentum map equivariant.
//!
//! Built-in instances use the abelian preset (`R^m` with Ad = id); general
//! matrix groups are accepted through user-supplied multiplication, Ad, Ad*
//! and exp closures.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{halton_cube, halton_points, ChartRef};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{interior_product, lie_derivative, max_coeff_norm, pullback, VectorFieldRep};
use crate::report::{CheckResult, VerificationReport};
use crate::structure::{reeb_family, KPolycosymplecticStructure};

type GroupOp2 = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type GroupOp1 = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type AdOp = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A finite-dimensional Lie group through closures over its parameter space.
#[derive(Clone)]
pub struct LieGroupModel {
    pub dim: usize,
    pub multiply: GroupOp2,
    pub inverse: GroupOp1,
    /// `exp: g -> G` on parameters.
    pub exp: GroupOp1,
    /// `Ad_g` as a matrix acting on Lie algebra coordinates.
    pub ad: AdOp,
    /// Lie algebra bracket.
    pub bracket: GroupOp2,
}

impl LieGroupModel {
    /// Abelian `R^m`: addition, Ad = identity, exp = identity, zero bracket.
    pub fn abelian(dim: usize) -> LieGroupModel {
        LieGroupModel {
            dim,
            multiply: Arc::new(|g, h| g.iter().zip(h).map(|(a, b)| a + b).collect()),
            inverse: Arc::new(|g| g.iter().map(|a| -a).collect()),
            exp: Arc::new(|xi| xi.to_vec()),
            ad: Arc::new(move |g| DMatrix::identity(g.len(), g.len())),
            bracket: Arc::new(|xi, _| vec![0.0; xi.len()]),
        }
    }

    /// The trivial group.
    pub fn trivial() -> LieGroupModel {
        LieGroupModel::abelian(0)
    }

    pub fn identity(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    /// Co-adjoint action `Ad*_{g^{-1}} mu = mu . Ad_{g^{-1}}`.
    pub fn coad(&self, g: &[f64], mu: &DVector<f64>) -> DVector<f64> {
        let ginv = (self.inverse)(g);
        let ad = (self.ad)(&ginv);
        ad.transpose() * mu
    }

    /// Group-model sanity: associativity and the Ad homomorphism property at
    /// sampled parameter triples.
    pub fn verify(&self, samples: usize, tol: f64, seed: u64) -> VerificationReport {
        let mut report = VerificationReport::new("lie_group");
        if self.dim == 0 {
            report.push(CheckResult::boolean("trivial_group", true));
            return report;
        }
        let pts = halton_cube(3 * self.dim, 1.0, samples, seed);
        let mut assoc = 0.0f64;
        let mut hom = 0.0f64;
        for p in &pts {
            let (g, rest) = p.split_at(self.dim);
            let (h, k) = rest.split_at(self.dim);
            let gh_k = (self.multiply)(&(self.multiply)(g, h), k);
            let g_hk = (self.multiply)(g, &(self.multiply)(h, k));
            for (a, b) in gh_k.iter().zip(&g_hk) {
                assoc = assoc.max((a - b).abs());
            }
            let ad_gh = (self.ad)(&(self.multiply)(g, h));
            let ad_g_ad_h = (self.ad)(g) * (self.ad)(h);
            hom = hom.max((ad_gh - ad_g_ad_h).amax());
        }
        report.push(CheckResult::residual("associativity", assoc, tol));
        report.push(CheckResult::residual("ad_homomorphism", hom, tol));
        report
    }
}

/// A Lie group action on a chart, with its fundamental vector fields.
#[derive(Clone)]
pub struct ActionModel {
    pub group: LieGroupModel,
    pub chart: ChartRef,
    phi: Arc<dyn Fn(&[f64]) -> SmoothField + Send + Sync>,
    pub generators: Vec<VectorFieldRep>,
}

impl ActionModel {
    pub fn new(
        group: LieGroupModel,
        chart: &ChartRef,
        phi: impl Fn(&[f64]) -> SmoothField + Send + Sync + 'static,
        generators: Vec<VectorFieldRep>,
    ) -> ActionModel {
        ActionModel { group, chart: Arc::clone(chart), phi: Arc::new(phi), generators }
    }

    /// The diffeomorphism `Phi_g` as a smooth field on the chart.
    pub fn phi(&self, g: &[f64]) -> SmoothField {
        (self.phi)(g)
    }

    pub fn apply(&self, g: &[f64], x: &[f64]) -> Vec<f64> {
        self.phi(g).eval(x)
    }

    /// `Phi(e, x) = x` and flow-derivative agreement of the generators:
    /// `(Phi(exp(s xi), x) - Phi(exp(-s xi), x)) / 2s ~ xi_M(x)`.
    pub fn verify(&self, point_samples: usize, seed: u64) -> VerificationReport {
        let mut report = VerificationReport::new("action_model");
        let pts = halton_points(&self.chart, point_samples, seed);
        let e = self.group.identity();
        let mut ident = 0.0f64;
        for p in &pts {
            let y = self.apply(&e, p);
            for (a, b) in y.iter().zip(p) {
                ident = ident.max((a - b).abs());
            }
        }
        report.push(CheckResult::residual("identity_acts_trivially", ident, 1e-12));
        let step = 1e-5;
        let mut flow = 0.0f64;
        for (a, gen) in self.generators.iter().enumerate() {
            let mut xi = vec![0.0; self.group.dim];
            xi[a] = 1.0;
            let g_plus = (self.group.exp)(&xi.iter().map(|v| v * step).collect::<Vec<_>>());
            let g_minus = (self.group.exp)(&xi.iter().map(|v| -v * step).collect::<Vec<_>>());
            for p in &pts {
                let yp = self.apply(&g_plus, p);
                let ym = self.apply(&g_minus, p);
                let v = gen.eval(p);
                for i in 0..self.chart.dim {
                    flow = flow.max(((yp[i] - ym[i]) / (2.0 * step) - v[i]).abs());
                }
            }
        }
        report.push(CheckResult::residual("generator_flow_agreement", flow, 1e-4));
        report
    }
}

/// A momentum map with values in `(g*)^k`, stored value-index major
/// (`J[alpha * m + a] = <J^alpha, xi_a>`).
#[derive(Clone)]
pub struct MomentumMapModel {
    pub value_k: usize,
    pub map: SmoothField,
}

impl MomentumMapModel {
    pub fn new(value_k: usize, map: SmoothField) -> MomentumMapModel {
        MomentumMapModel { value_k, map }
    }

    pub fn algebra_dim(&self) -> usize {
        if self.value_k == 0 {
            return 0;
        }
        self.map.dim_out() / self.value_k
    }

    /// Value as a `k x m` matrix.
    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.algebra_dim();
        let v = self.map.eval(x);
        DMatrix::from_fn(self.value_k, m, |alpha, a| v[alpha * m + a])
    }

    /// `<J, xi>` as an R^k-valued function of the chart.
    pub fn pairing(&self, xi: &[f64]) -> SmoothField {
        let k = self.value_k;
        let m = self.algebra_dim();
        let xi = xi.to_vec();
        let map = self.map.clone();
        SmoothField::exact(self.map.dim_in(), k, move |x| {
            let v = map.eval_dual(x);
            (0..k)
                .map(|alpha| {
                    (0..m).fold(crate::dual::Dual::ZERO, |acc, a| acc + v[alpha * m + a] * xi[a])
                })
                .collect()
        })
    }
}

/// Apply `Ad*^k_{g^{-1}}` to a `k x m` momentum value.
pub fn coad_k(group: &LieGroupModel, g: &[f64], mu: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = mu.clone_owned();
    for alpha in 0..mu.nrows() {
        let row = mu.row(alpha).transpose();
        out.row_mut(alpha).copy_from(&group.coad(g, &row).transpose());
    }
    out
}

/// Structure invariance of an action: pullback deviation `Phi_g^* omega -
/// omega`, `Phi_g^* tau - tau` over sampled group elements, plus the
/// infinitesimal version through the generators.
pub fn verify_action_invariance(
    action: &ActionModel,
    structure: &KPolycosymplecticStructure,
    group_samples: usize,
    point_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("action_invariance");
    let pts = halton_points(&structure.chart, point_samples, seed);
    let gs = halton_cube(action.group.dim.max(1), 1.0, group_samples, seed + 1);
    let mut pull_dev = 0.0f64;
    if action.group.dim > 0 {
        for g in &gs {
            let phi = action.phi(g);
            let tau_pull = pullback(&phi, &structure.chart, &structure.tau)?;
            let omega_pull = pullback(&phi, &structure.chart, &structure.omega)?;
            for p in &pts {
                let a = tau_pull.coefficients_at(p);
                let b = structure.tau.coefficients_at(p);
                for (u, v) in a.iter().zip(&b) {
                    pull_dev = pull_dev.max((u - v).abs());
                }
                let a = omega_pull.coefficients_at(p);
                let b = structure.omega.coefficients_at(p);
                for (u, v) in a.iter().zip(&b) {
                    pull_dev = pull_dev.max((u - v).abs());
                }
            }
        }
    }
    report.push(CheckResult::residual("pullback_invariance", pull_dev, tol));
    let mut lie_dev = 0.0f64;
    for gen in &action.generators {
        let lt = lie_derivative(gen, &structure.tau)?;
        let lo = lie_derivative(gen, &structure.omega)?;
        lie_dev = lie_dev.max(max_coeff_norm(&lt, &pts));
        lie_dev = lie_dev.max(max_coeff_norm(&lo, &pts));
    }
    report.push(CheckResult::residual("infinitesimal_invariance", lie_dev, tol));
    Ok(report)
}

/// Defining equations of a k-polycosymplectic momentum map:
/// `iota_{xi_M} omega = d<J, xi>`, `iota_{xi_M} tau = 0`,
/// `L_{R_alpha} J_xi = 0` for every basis element xi.
pub fn verify_momentum_map(
    action: &ActionModel,
    structure: &KPolycosymplecticStructure,
    momentum: &MomentumMapModel,
    point_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("momentum_map");
    let pts = halton_points(&structure.chart, point_samples, seed);
    let n = structure.chart.dim;
    let k = structure.k;
    let m = momentum.algebra_dim();
    let mut dev_domega = 0.0f64;
    let mut dev_tau = 0.0f64;
    let mut dev_reeb = 0.0f64;
    for a in 0..m {
        let mut xi = vec![0.0; m];
        xi[a] = 1.0;
        let gen = &action.generators[a];
        let hook_omega = interior_product(gen, &structure.omega)?;
        let hook_tau = interior_product(gen, &structure.tau)?;
        let pairing = momentum.pairing(&xi);
        for p in &pts {
            let lhs = hook_omega.coefficients_at(p);
            let jac = pairing.jacobian(p);
            for alpha in 0..k {
                for i in 0..n {
                    dev_domega = dev_domega.max((lhs[alpha * n + i] - jac[(alpha, i)]).abs());
                }
            }
            for v in hook_tau.coefficients_at(p) {
                dev_tau = dev_tau.max(v.abs());
            }
            let reeb = reeb_family(structure, p)?;
            for r in &reeb.fields {
                let dj = &jac * r;
                dev_reeb = dev_reeb.max(dj.amax());
            }
        }
    }
    report.push(CheckResult::residual("pairing_differential", dev_domega, tol));
    report.push(CheckResult::residual("tau_annihilation", dev_tau, tol));
    report.push(CheckResult::residual("reeb_invariance", dev_reeb, tol));
    Ok(report)
}

/// A co-adjoint cocycle value with its constancy certificate.
pub struct CocycleValue {
    /// `sigma(g)` as a `k x m` matrix.
    pub sigma: DMatrix<f64>,
    /// Max deviation of `J(Phi_g x) - Ad*^k_{g^{-1}} J(x)` across samples.
    pub constancy: f64,
}

/// `sigma(g) = J(Phi_g x) - Ad*^k_{g^{-1}} J(x)`, evaluated at one sample and
/// certified constant across the rest.
pub fn cocycle(
    action: &ActionModel,
    momentum: &MomentumMapModel,
    g: &[f64],
    point_samples: usize,
    seed: u64,
) -> Result<CocycleValue> {
    let pts = halton_points(&action.chart, point_samples.max(2), seed);
    let mut sigma: Option<DMatrix<f64>> = None;
    let mut constancy = 0.0f64;
    for p in &pts {
        let moved = action.apply(g, p);
        let value = momentum.value(&moved) - coad_k(&action.group, g, &momentum.value(p));
        match &sigma {
            None => sigma = Some(value),
            Some(first) => constancy = constancy.max((value - first).amax()),
        }
    }
    let sigma = sigma.expect("at least one sample");
    if constancy > 1e-10 {
        return Err(Error::CocycleNotConstant(constancy));
    }
    Ok(CocycleValue { sigma, constancy })
}

/// The affine action `Delta_g mu = Ad*^k_{g^{-1}} mu + sigma(g)`.
pub struct AffineAction<'a> {
    action: &'a ActionModel,
    momentum: &'a MomentumMapModel,
    point_samples: usize,
    seed: u64,
}

impl<'a> AffineAction<'a> {
    pub fn new(action: &'a ActionModel, momentum: &'a MomentumMapModel, point_samples: usize, seed: u64) -> Self {
        AffineAction { action, momentum, point_samples, seed }
    }

    pub fn apply(&self, g: &[f64], mu: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let sigma = cocycle(self.action, self.momentum, g, self.point_samples, self.seed)?;
        Ok(coad_k(&self.action.group, g, mu) + sigma.sigma)
    }

    /// Group-action axioms of Delta and Delta-equivariance of J at sampled
    /// group elements, algebra values and chart points.
    pub fn verify(&self, group_samples: usize, tol: f64) -> Result<VerificationReport> {
        let mut report = VerificationReport::new("affine_action");
        let group = &self.action.group;
        let k = self.momentum.value_k;
        let m = self.momentum.algebra_dim();
        if group.dim == 0 {
            report.push(CheckResult::boolean("trivial_group", true));
            return Ok(report);
        }
        let gs = halton_cube(2 * group.dim, 1.0, group_samples, self.seed + 11);
        let mus = halton_cube(k * m, 2.0, group_samples, self.seed + 13);
        let mut axiom = 0.0f64;
        let mut cocycle_identity = 0.0f64;
        for (pair, muv) in gs.iter().zip(&mus) {
            let (g1, g2) = pair.split_at(group.dim);
            let mu = DMatrix::from_fn(k, m, |alpha, a| muv[alpha * m + a]);
            let via_product = self.apply(&(group.multiply)(g1, g2), &mu)?;
            let nested = self.apply(g1, &self.apply(g2, &mu)?)?;
            axiom = axiom.max((via_product - nested).amax());
            let s12 = cocycle(self.action, self.momentum, &(group.multiply)(g1, g2), self.point_samples, self.seed)?;
            let s1 = cocycle(self.action, self.momentum, g1, self.point_samples, self.seed)?;
            let s2 = cocycle(self.action, self.momentum, g2, self.point_samples, self.seed)?;
            let rhs = s1.sigma.clone() + coad_k(group, g1, &s2.sigma);
            cocycle_identity = cocycle_identity.max((s12.sigma - rhs).amax());
        }
        let e = group.identity();
        let mu0 = DMatrix::from_fn(k, m, |alpha, a| 0.5 + alpha as f64 - 0.3 * a as f64);
        let at_identity = (self.apply(&e, &mu0)? - &mu0).amax();
        report.push(CheckResult::residual("identity_acts_trivially", at_identity, tol));
        report.push(CheckResult::residual("action_axiom", axiom, tol));
        report.push(CheckResult::residual("cocycle_identity", cocycle_identity, tol));

        let pts = halton_points(&self.action.chart, self.point_samples, self.seed + 17);
        let mut equiv = 0.0f64;
        for g in gs.iter().map(|pair| &pair[..group.dim]) {
            for p in &pts {
                let lhs = self.momentum.value(&self.action.apply(g, p));
                let rhs = self.apply(g, &self.momentum.value(p))?;
                equiv = equiv.max((lhs - rhs).amax());
            }
        }
        report.push(CheckResult::residual("delta_equivariance", equiv, tol));
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartBox;
    use crate::dual::Dual;
    use crate::form::FormBuilder;

    /// R^2 translation action on R x T*R with J = (p, -q): the standard
    /// nonzero abelian cocycle sigma(a, b) = (b, -a).
    fn translation_setup() -> (ActionModel, MomentumMapModel, KPolycosymplecticStructure) {
        let chart = ChartBox::new(&["t", "q", "p"], &[(0.0, 2.0), (-5.0, 5.0), (-5.0, 5.0)]).unwrap();
        let tau = FormBuilder::new(&chart, 1, 1).constant(0, &["t"], 1.0).build();
        let omega = FormBuilder::new(&chart, 2, 1).constant(0, &["q", "p"], 1.0).build();
        let s = KPolycosymplecticStructure::new(&chart, 1, tau, omega).unwrap();
        let generators = vec![
            VectorFieldRep::coordinate(&chart, "q"),
            VectorFieldRep::coordinate(&chart, "p"),
        ];
        let action = ActionModel::new(LieGroupModel::abelian(2), &chart, |g| {
            let (a, b) = (g[0], g[1]);
            SmoothField::exact(3, 3, move |x| vec![x[0], x[1] + a, x[2] + b])
        }, generators);
        let momentum = MomentumMapModel::new(1, SmoothField::exact(3, 2, |x| vec![x[2], Dual::ZERO - x[1]]));
        (action, momentum, s)
    }

    #[test]
    fn translation_cocycle_is_b_minus_a() {
        let (action, momentum, _s) = translation_setup();
        let c = cocycle(&action, &momentum, &[0.7, -0.3], 20, 3).unwrap();
        assert!((c.sigma[(0, 0)] + 0.3).abs() < 1e-12);
        assert!((c.sigma[(0, 1)] + 0.7).abs() < 1e-12);
        assert!(c.constancy < 1e-12);
    }

    #[test]
    fn translation_momentum_map_verifies() {
        let (action, momentum, s) = translation_setup();
        let r = verify_momentum_map(&action, &s, &momentum, 25, 1e-10, 5).unwrap();
        assert!(r.pass(), "{}", r.to_text());
        let r = verify_action_invariance(&action, &s, 10, 20, 1e-10, 5).unwrap();
        assert!(r.pass(), "{}", r.to_text());
    }

    #[test]
    fn affine_action_axioms_hold() {
        let (action, momentum, _s) = translation_setup();
        let aff = AffineAction::new(&action, &momentum, 10, 3);
        let report = aff.verify(15, 1e-10).unwrap();
        assert!(report.pass(), "{}", report.to_text());
        // Delta_{(a,b)}(mu1, mu2) = (mu1 + b, mu2 - a)
        let mu = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
        let out = aff.apply(&[0.5, -1.5], &mu).unwrap();
        assert!((out[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((out[(0, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_action_breaks_invariance() {
        let (_, _, s) = translation_setup();
        let chart = Arc::clone(&s.chart);
        let gen = VectorFieldRep::new(&chart, SmoothField::exact(3, 3, |x| {
            vec![Dual::ZERO, x[1], Dual::ZERO]
        }))
        .unwrap();
        let action = ActionModel::new(LieGroupModel::abelian(1), &chart, |g| {
            let lambda = g[0];
            SmoothField::exact(3, 3, move |x| vec![x[0], x[1] * lambda.exp(), x[2]])
        }, vec![gen]);
        let r = verify_action_invariance(&action, &s, 5, 10, 1e-10, 2).unwrap();
        assert!(!r.pass());
    }
}
