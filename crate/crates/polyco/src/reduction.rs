//! Marsden-Weinstein reduction on instance-supplied charts: hypothesis
//! verification by sampled rank tests, execution of the reduction through an
//! explicit level-set parametrization and quotient chart, reduction of
//! dynamics, the extended action/momentum/Hamiltonian constructions on the
//! fibred polysymplectic manifold, and the space-time reduction.
//!
//! Quotients are never constructed abstractly. Each instance ships a
//! parametrization `embed` of the level set, a projection `project` onto the
//! quotient chart and at least two sections; every claim about the reduced
//! data is certified against the defining pullback identities at sampled
//! points.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::{halton_cube, halton_points, ChartRef};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{
    add_forms, contract_kvector, interior_product, lie_bracket,
    max_coeff_deviation, max_coeff_norm, pullback, scale_form, KVectorFieldRep, VValuedForm,
    VectorFieldRep,
};
use crate::group::{ActionModel, MomentumMapModel};
use crate::linalg::{column_basis, rank, span_intersection, span_sum, subspace_equal};
use crate::report::{CheckResult, VerificationReport};
use crate::structure::{
    reeb_family, verify_structure, FibredExtension, GeometricStructure, KPolycosymplecticStructure,
};

/// Parametrization of a momentum level set `J^{-1}(mu)`.
pub struct LevelChart {
    pub chart: ChartRef,
    /// `lambda_mu: level -> M`.
    pub embed: SmoothField,
    /// Left inverse of `embed` on its image.
    pub coords: SmoothField,
}

/// Quotient data for the isotropy action on a level set.
pub struct QuotientChart {
    pub chart: ChartRef,
    /// `pi_mu: level -> reduced`.
    pub project: SmoothField,
    /// Section `s_mu: reduced -> level` with `pi_mu . s_mu = id`.
    pub section: SmoothField,
    /// A second, distinct section for well-definedness certificates.
    pub section_alt: SmoothField,
}

/// Reduced data a worked example expects, for coefficientwise comparison.
pub struct ExpectedReduced {
    pub tau: VValuedForm,
    pub omega: VValuedForm,
    pub hamiltonian: SmoothField,
}

/// Everything tied to one momentum value.
pub struct MuData {
    /// `mu` as a `k x m` matrix in `(g*)^k`.
    pub mu: DMatrix<f64>,
    pub level: LevelChart,
    pub quotient: QuotientChart,
    /// Generator indices spanning the isotropy orbit directions of
    /// `G^Delta_mu` (built-in abelian instances: the full generator set when
    /// `Delta` fixes `mu`, empty when the isotropy is trivial).
    pub isotropy: Vec<usize>,
    /// Per value index: generators of `G^{Delta^alpha}_{mu^alpha}`.
    pub isotropy_alpha: Vec<Vec<usize>>,
    pub expected: Option<ExpectedReduced>,
}

fn orbit_matrix(action: &ActionModel, indices: &[usize], x: &[f64]) -> DMatrix<f64> {
    let n = action.chart.dim;
    let mut m = DMatrix::zeros(n, indices.len());
    for (col, &i) in indices.iter().enumerate() {
        let v = action.generators[i].eval(x);
        for row in 0..n {
            m[(row, col)] = v[row];
        }
    }
    m
}

fn kernel_tau_omega(structure: &KPolycosymplecticStructure, x: &[f64], alpha: usize) -> DMatrix<f64> {
    let n = structure.chart.dim;
    let mut stacked = DMatrix::zeros(n + 1, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&structure.omega.two_form_matrix(x, alpha));
    stacked
        .view_mut((n, 0), (1, n))
        .copy_from(&structure.tau.one_form_covector(x, alpha).transpose());
    crate::linalg::nullspace(&stacked)
}

/// Sampled verification of weak regularity of `mu` and of the two subspace
/// identities behind the reduction theorem:
/// `T_x(G^Delta_mu x)` equals the alpha-intersection of
/// `(ker omega^alpha cap ker tau^alpha) + T_x(G^{Delta^alpha} x)` cut with
/// `T_x J^{-1}(mu)`, and `ker T_x J_alpha` equals
/// `(ker omega^alpha cap ker tau^alpha) + T_x J^{-1}(mu) + T_x(G^{Delta^alpha} x)`.
pub fn check_reduction_conditions(
    structure: &KPolycosymplecticStructure,
    action: &ActionModel,
    momentum: &MomentumMapModel,
    mu_data: &MuData,
    samples: usize,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new("reduction_conditions");
    let k = structure.k;
    let m = momentum.algebra_dim();
    let pts = halton_points(&mu_data.level.chart, samples, seed);
    let mut level_residual = 0.0f64;
    let mut weak_regular = true;
    let mut rank_tj: Option<usize> = None;
    let mut rank_constant = true;
    let mut eq_orbit = true;
    let mut eq_kernel = true;
    let mut orbit_deficit = (0usize, 0usize);
    let mut kernel_deficit = (0usize, 0usize);
    for y in &pts {
        let x = mu_data.level.embed.eval(y);
        // J(embed(y)) = mu
        let jval = momentum.value(&x);
        level_residual = level_residual.max((jval - &mu_data.mu).amax());
        let tj = momentum.map.jacobian(&x);
        let r = rank(&tj);
        match rank_tj {
            None => rank_tj = Some(r),
            Some(r0) => rank_constant &= r == r0,
        }
        let level_tangent = column_basis(&mu_data.level.embed.jacobian(y));
        let ker_tj = crate::linalg::nullspace(&tj);
        let (eq, _, _) = subspace_equal(&level_tangent, &ker_tj);
        weak_regular &= eq;

        let orbit_iso = orbit_matrix(action, &mu_data.isotropy, &x);
        let mut rhs: Option<DMatrix<f64>> = None;
        for alpha in 0..k {
            let pair = kernel_tau_omega(structure, &x, alpha);
            let orbit_alpha = orbit_matrix(action, &mu_data.isotropy_alpha[alpha], &x);
            let summed = span_sum(&[&pair, &orbit_alpha]);
            rhs = Some(match rhs {
                None => column_basis(&summed),
                Some(prev) => span_intersection(&prev, &summed),
            });
            // second identity, per alpha
            let j_alpha = tj.rows(alpha * m, m).into_owned();
            let ker_j_alpha = crate::linalg::nullspace(&j_alpha);
            let rhs2 = span_sum(&[&pair, &level_tangent, &orbit_alpha]);
            let (eq2, d_lhs, d_rhs) = subspace_equal(&ker_j_alpha, &rhs2);
            if !eq2 {
                eq_kernel = false;
                kernel_deficit = (d_lhs.max(kernel_deficit.0), d_rhs.max(kernel_deficit.1));
            }
        }
        let rhs = span_intersection(&rhs.expect("k >= 1"), &level_tangent);
        let (eq1, d_lhs, d_rhs) = subspace_equal(&orbit_iso, &rhs);
        if !eq1 {
            eq_orbit = false;
            orbit_deficit = (d_lhs.max(orbit_deficit.0), d_rhs.max(orbit_deficit.1));
        }
    }
    report.push(CheckResult::residual("level_parametrization", level_residual, 1e-9));
    report.push(CheckResult::boolean("momentum_rank_constant", rank_constant));
    report.push(CheckResult::boolean("weak_regular_value", weak_regular));
    let mut orbit_check = CheckResult::boolean("orbit_subspace_identity", eq_orbit);
    if !eq_orbit {
        orbit_check.rank = Some(orbit_deficit);
    }
    report.push(orbit_check);
    let mut kernel_check = CheckResult::boolean("kernel_subspace_identity", eq_kernel);
    if !eq_kernel {
        kernel_check.rank = Some(kernel_deficit);
    }
    report.push(kernel_check);
    report
}

pub struct ReductionResult {
    pub chart: ChartRef,
    pub tau: VValuedForm,
    pub omega: VValuedForm,
    pub hamiltonian: SmoothField,
    pub report: VerificationReport,
}

/// Execute the reduction: pull the structure back along `embed . section`,
/// certify the defining identities `pi* tau_mu = j* tau`,
/// `pi* omega_mu = j* omega` at level samples, certify section independence
/// and the well-definedness of the reduced Hamiltonian, and verify the
/// reduced structure as k-polycosymplectic.
pub fn reduce(
    structure: &KPolycosymplecticStructure,
    action: &ActionModel,
    hamiltonian: &SmoothField,
    mu_data: &MuData,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ReductionResult> {
    let k = structure.k;
    let level = &mu_data.level;
    let quotient = &mu_data.quotient;
    let composite = level.embed.compose(&quotient.section);
    let composite_alt = level.embed.compose(&quotient.section_alt);

    let tau_red = pullback(&composite, &quotient.chart, &structure.tau)?;
    let omega_red = pullback(&composite, &quotient.chart, &structure.omega)?;
    let h_red = hamiltonian.compose(&composite);

    let mut report = VerificationReport::new(&format!("reduce@{}", fmt_mu(&mu_data.mu)));

    // defining pullback identities on the level chart
    let level_pts = halton_points(&level.chart, samples, seed);
    let j_tau = pullback(&level.embed, &level.chart, &structure.tau)?;
    let j_omega = pullback(&level.embed, &level.chart, &structure.omega)?;
    let pi_tau = pullback(&quotient.project, &level.chart, &tau_red)?;
    let pi_omega = pullback(&quotient.project, &level.chart, &omega_red)?;
    report.push(CheckResult::residual(
        "pullback_identity_tau",
        max_coeff_deviation(&pi_tau, &j_tau, &level_pts),
        tol,
    ));
    report.push(CheckResult::residual(
        "pullback_identity_omega",
        max_coeff_deviation(&pi_omega, &j_omega, &level_pts),
        tol,
    ));

    // section independence of the reduced data
    let red_pts = halton_points(&quotient.chart, samples, seed + 1);
    let tau_alt = pullback(&composite_alt, &quotient.chart, &structure.tau)?;
    let omega_alt = pullback(&composite_alt, &quotient.chart, &structure.omega)?;
    let h_alt = hamiltonian.compose(&composite_alt);
    let mut section_dev = max_coeff_deviation(&tau_red, &tau_alt, &red_pts)
        .max(max_coeff_deviation(&omega_red, &omega_alt, &red_pts));
    let mut h_dev = 0.0f64;
    for z in &red_pts {
        h_dev = h_dev.max((h_red.eval(z)[0] - h_alt.eval(z)[0]).abs());
    }
    section_dev = section_dev.max(h_dev);
    report.push(CheckResult::residual("section_independence", section_dev, tol));

    // pi . s = id and orbit invariance of the projection and Hamiltonian
    let mut sect_id = 0.0f64;
    for z in &red_pts {
        let back = quotient.project.eval(&quotient.section.eval(z));
        for (a, b) in back.iter().zip(z) {
            sect_id = sect_id.max((a - b).abs());
        }
    }
    report.push(CheckResult::residual("section_is_right_inverse", sect_id, 1e-10));

    let mut orbit_const = 0.0f64;
    let mut h_invariant = 0.0f64;
    if !mu_data.isotropy.is_empty() {
        let gs = halton_cube(action.group.dim, 0.5, 8, seed + 2);
        for y in level_pts.iter().take(12) {
            let x = level.embed.eval(y);
            let z = quotient.project.eval(y);
            for g in &gs {
                // restrict to isotropy directions
                let mut g_iso = vec![0.0; action.group.dim];
                for &i in &mu_data.isotropy {
                    g_iso[i] = g[i];
                }
                let moved = action.apply(&g_iso, &x);
                let y_moved = level.coords.eval(&moved);
                let z_moved = quotient.project.eval(&y_moved);
                for (a, b) in z_moved.iter().zip(&z) {
                    orbit_const = orbit_const.max((a - b).abs());
                }
                h_invariant = h_invariant
                    .max((hamiltonian.eval(&moved)[0] - hamiltonian.eval(&x)[0]).abs());
            }
        }
    }
    report.push(CheckResult::residual("projection_orbit_invariance", orbit_const, 1e-9));
    report.push(CheckResult::residual("hamiltonian_orbit_invariance", h_invariant, 1e-10));

    // the reduced data is itself a k-polycosymplectic structure
    let reduced_structure =
        KPolycosymplecticStructure::new(&quotient.chart, k, tau_red.clone(), omega_red.clone())?;
    report.merge(verify_structure(
        &GeometricStructure::KPolycosymplectic(reduced_structure),
        samples.min(60),
        1e-9,
        seed + 3,
    ));

    if let Some(expected) = &mu_data.expected {
        report.push(CheckResult::residual(
            "expected_tau",
            max_coeff_deviation(&tau_red, &expected.tau, &red_pts),
            tol,
        ));
        report.push(CheckResult::residual(
            "expected_omega",
            max_coeff_deviation(&omega_red, &expected.omega, &red_pts),
            tol,
        ));
        let mut dev = 0.0f64;
        for z in &red_pts {
            dev = dev.max((h_red.eval(z)[0] - expected.hamiltonian.eval(z)[0]).abs());
        }
        report.push(CheckResult::residual("expected_hamiltonian", dev, tol));
    }

    Ok(ReductionResult {
        chart: Arc::clone(&quotient.chart),
        tau: tau_red,
        omega: omega_red,
        hamiltonian: h_red,
        report,
    })
}

fn fmt_mu(mu: &DMatrix<f64>) -> String {
    let vals: Vec<String> = mu.iter().map(|v| format!("{v}")).collect();
    vals.join(",")
}

fn rk4_flow(field: &SmoothField, x0: &[f64], time: f64, steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    let h = time / steps as f64;
    let n = x.len();
    for _ in 0..steps {
        let k1 = field.eval(&x);
        let mid1: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
        let k2 = field.eval(&mid1);
        let mid2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
        let k3 = field.eval(&mid2);
        let end: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
        let k4 = field.eval(&end);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

pub struct ReducedDynamics {
    pub field: KVectorFieldRep,
    pub report: VerificationReport,
}

/// Push a level-tangent, orbit-invariant Hamiltonian k-vector field down to
/// the quotient chart and certify the construction: tangency, invariance,
/// section independence of the pushforward, and the short-time flow
/// commutation `pi_mu . F^alpha_s = K^alpha_s . pi_mu`.
pub fn reduce_dynamics(
    structure: &KPolycosymplecticStructure,
    action: &ActionModel,
    momentum: &MomentumMapModel,
    mu_data: &MuData,
    kvector: &KVectorFieldRep,
    samples: usize,
    seed: u64,
) -> Result<ReducedDynamics> {
    let k = structure.k;
    let level = &mu_data.level;
    let quotient = &mu_data.quotient;
    let mut report = VerificationReport::new("reduce_dynamics");

    let level_pts = halton_points(&level.chart, samples, seed);
    let mut tangency = 0.0f64;
    for y in &level_pts {
        let x = level.embed.eval(y);
        let tj = momentum.map.jacobian(&x);
        let v = kvector.eval(&x);
        let n = structure.chart.dim;
        for alpha in 0..k {
            let va = DVector::from_iterator(n, v[alpha * n..(alpha + 1) * n].iter().copied());
            tangency = tangency.max((&tj * va).amax());
        }
    }
    report.push(CheckResult::residual("level_tangency", tangency, 1e-9));

    let mut invariance = 0.0f64;
    for gen in &action.generators {
        for alpha in 0..k {
            let bracket = lie_bracket(gen, &kvector.component(alpha))?;
            for y in level_pts.iter().take(12) {
                let x = level.embed.eval(y);
                invariance =
                    invariance.max(bracket.eval(&x).iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
        }
    }
    report.push(CheckResult::residual("orbit_invariance", invariance, 1e-7));

    let reduced_field = pushforward(level, quotient, &quotient.section, kvector, k)?;
    let reduced_alt = pushforward(level, quotient, &quotient.section_alt, kvector, k)?;
    let red_pts = halton_points(&quotient.chart, samples.min(40), seed + 5);
    let mut section_dev = 0.0f64;
    for z in &red_pts {
        let a = reduced_field.eval(z);
        let b = reduced_alt.eval(z);
        for (u, v) in a.iter().zip(&b) {
            section_dev = section_dev.max((u - v).abs());
        }
    }
    report.push(CheckResult::residual("pushforward_section_independence", section_dev, 1e-8));

    // short-time flow commutation
    let s_time = 0.01;
    let mut commutation = 0.0f64;
    for z0 in red_pts.iter().take(8) {
        let y0 = quotient.section.eval(z0);
        let x0 = level.embed.eval(&y0);
        for alpha in 0..k {
            let up = kvector.component(alpha);
            let x1 = rk4_flow(up.field(), &x0, s_time, 16);
            let z_up = quotient.project.eval(&level.coords.eval(&x1));
            let down = reduced_field.component(alpha);
            let z1 = rk4_flow(down.field(), z0, s_time, 16);
            for (a, b) in z_up.iter().zip(&z1) {
                commutation = commutation.max((a - b).abs());
            }
        }
    }
    report.push(CheckResult::residual("flow_commutation", commutation, 1e-6));

    Ok(ReducedDynamics { field: reduced_field, report })
}

fn pushforward(
    level: &LevelChart,
    quotient: &QuotientChart,
    section: &SmoothField,
    kvector: &KVectorFieldRep,
    k: usize,
) -> Result<KVectorFieldRep> {
    let embed = level.embed.clone();
    let project = quotient.project.clone();
    let section = section.clone();
    let kv = kvector.clone();
    let n_red = quotient.chart.dim;
    let n = kvector.chart().dim;
    let field = SmoothField::numeric(n_red, k * n_red, move |z| {
        let y = section.eval(z);
        let x = embed.eval(&y);
        let de = embed.jacobian(&y);
        let dp = project.jacobian(&y);
        let v = kv.field().eval(&x);
        let mut out = Vec::with_capacity(k * n_red);
        for alpha in 0..k {
            let va = DVector::from_iterator(n, v[alpha * n..(alpha + 1) * n].iter().copied());
            let w = crate::linalg::pinv_solve(&de, &va);
            let down = &dp * w;
            out.extend(down.iter().copied());
        }
        out
    });
    KVectorFieldRep::new(&quotient.chart, k, field)
}

/// Residual of the Hamiltonian k-vector field equations
/// `iota_X omega = dh - (R_alpha h) tau^alpha`, `iota_{X_beta} tau = e_beta`
/// for a given candidate field, maximized over samples.
pub fn hamiltonian_equations_residual(
    structure: &KPolycosymplecticStructure,
    h: &SmoothField,
    kvector: &KVectorFieldRep,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let pts = halton_points(&structure.chart, samples, seed);
    let n = structure.chart.dim;
    let k = structure.k;
    let contraction = contract_kvector(kvector, &structure.omega)?;
    let mut worst = 0.0f64;
    for x in &pts {
        let lhs = contraction.coefficients_at(x);
        let dh = h.jacobian(x);
        let reeb = reeb_family(structure, x)?;
        let mut rhs = DVector::from_iterator(n, (0..n).map(|j| dh[(0, j)]));
        for alpha in 0..k {
            let rh = reeb.fields[alpha].dot(&DVector::from_iterator(n, (0..n).map(|j| dh[(0, j)])));
            rhs -= rh * structure.tau.one_form_covector(x, alpha);
        }
        for j in 0..n {
            worst = worst.max((lhs[j] - rhs[j]).abs());
        }
        let tmat = structure.tau_matrix(x);
        let v = kvector.eval(x);
        for beta in 0..k {
            let vb = DVector::from_iterator(n, v[beta * n..(beta + 1) * n].iter().copied());
            let pairing = &tmat * vb;
            for gamma in 0..k {
                let expect = if gamma == beta { 1.0 } else { 0.0 };
                worst = worst.max((pairing[gamma] - expect).abs());
            }
        }
    }
    Ok(worst)
}

/// Extend an action and momentum map to the fibred manifold:
/// `Phi~(g, u, x) = (u, Phi(g, x))`, `J~(u, x) = J(x)`, and certify that
/// `J~` is a k-polysymplectic momentum map for `omega~`.
pub fn extend_action_momentum(
    action: &ActionModel,
    momentum: &MomentumMapModel,
    fibred: &FibredExtension,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(ActionModel, MomentumMapModel, VerificationReport)> {
    let k = fibred.base.k;
    let n = fibred.base.chart.dim;
    let ext_chart = Arc::clone(&fibred.extended_chart);
    let ext_generators: Vec<VectorFieldRep> = action
        .generators
        .iter()
        .map(|gen| {
            let g = gen.field().clone();
            let lifted = SmoothField::exact(k + n, k + n, move |y| {
                let mut out = vec![crate::dual::Dual::ZERO; k];
                out.extend(g.eval_dual(&y[k..]));
                out
            });
            VectorFieldRep::new(&ext_chart, lifted).expect("lifted generator")
        })
        .collect();
    let base_action = action.clone();
    let ext_action = ActionModel::new(
        action.group.clone(),
        &ext_chart,
        move |g| {
            let phi = base_action.phi(g);
            SmoothField::exact(k + n, k + n, move |y| {
                let mut out: Vec<crate::dual::Dual> = y[..k].to_vec();
                out.extend(phi.eval_dual(&y[k..]));
                out
            })
        },
        ext_generators,
    );

    let jmap = momentum.map.clone();
    let ext_momentum = MomentumMapModel::new(
        momentum.value_k,
        SmoothField::exact(k + n, momentum.map.dim_out(), move |y| jmap.eval_dual(&y[k..])),
    );

    let mut report = VerificationReport::new("extended_momentum_map");
    let pts = halton_points(&ext_chart, samples, seed);
    let m = momentum.algebra_dim();
    let mut dev = 0.0f64;
    for (a, gen) in ext_action.generators.iter().enumerate() {
        let hook = interior_product(gen, &fibred.omega_tilde.omega)?;
        let mut xi = vec![0.0; m];
        xi[a] = 1.0;
        let pairing = ext_momentum.pairing(&xi);
        for y in &pts {
            let lhs = hook.coefficients_at(y);
            let jac = pairing.jacobian(y);
            for alpha in 0..k {
                for j in 0..k + n {
                    dev = dev.max((lhs[alpha * (k + n) + j] - jac[(alpha, j)]).abs());
                }
            }
        }
    }
    report.push(CheckResult::residual("polysymplectic_momentum_identity", dev, tol));

    // u-independence of the extended map
    let mut u_dev = 0.0f64;
    for y in &pts {
        let mut y2 = y.clone();
        for item in y2.iter_mut().take(k) {
            *item += 0.25;
        }
        let a = ext_momentum.map.eval(y);
        let b = ext_momentum.map.eval(&y2);
        for (u, v) in a.iter().zip(&b) {
            u_dev = u_dev.max((u - v).abs());
        }
    }
    report.push(CheckResult::residual("u_independence", u_dev, 1e-12));
    Ok((ext_action, ext_momentum, report))
}

/// The extended Hamiltonian `h~(u, x) = h(x) - sum_alpha u^alpha` and its
/// k-polysymplectic Hamiltonian k-vector field
/// `X~_alpha = X_alpha + (R_alpha h) d/du^alpha`, certified through
/// `iota_{X~} omega~ = d h~`.
pub fn extended_hamiltonian(
    structure: &KPolycosymplecticStructure,
    h: &SmoothField,
    kvector: &KVectorFieldRep,
    fibred: &FibredExtension,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(SmoothField, KVectorFieldRep, VerificationReport)> {
    let k = structure.k;
    let n = structure.chart.dim;
    let hc = h.clone();
    let h_tilde = SmoothField::exact(k + n, 1, move |y| {
        let mut v = hc.eval_dual(&y[k..])[0];
        for u in &y[..k] {
            v = v - *u;
        }
        vec![v]
    });
    let base = structure.clone();
    let hc = h.clone();
    let kv = kvector.field().clone();
    let xt_field = SmoothField::numeric(k + n, k * (k + n), move |y| {
        let x = &y[k..];
        let v = kv.eval(x);
        let dh = hc.jacobian(x);
        let reeb = reeb_family(&base, x).expect("reeb family");
        let dh_vec = DVector::from_iterator(n, (0..n).map(|j| dh[(0, j)]));
        let mut out = Vec::with_capacity(k * (k + n));
        for alpha in 0..k {
            let rh = reeb.fields[alpha].dot(&dh_vec);
            for beta in 0..k {
                out.push(if beta == alpha { rh } else { 0.0 });
            }
            out.extend(v[alpha * n..(alpha + 1) * n].iter().copied());
        }
        out
    });
    let x_tilde = KVectorFieldRep::new(&fibred.extended_chart, k, xt_field)?;

    let mut report = VerificationReport::new("extended_hamiltonian");
    let contraction = contract_kvector(&x_tilde, &fibred.omega_tilde.omega)?;
    let pts = halton_points(&fibred.extended_chart, samples, seed);
    let mut dev = 0.0f64;
    for y in &pts {
        let lhs = contraction.coefficients_at(y);
        let dh = h_tilde.jacobian(y);
        for j in 0..k + n {
            dev = dev.max((lhs[j] - dh[(0, j)]).abs());
        }
    }
    report.push(CheckResult::residual("polysymplectic_hamiltonian_identity", dev, tol));
    Ok((h_tilde, x_tilde, report))
}

/// Places suppressed base coordinates and momenta: `(z, lambda) -> M_k`.
pub type LiftFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Space-time reduction data for a canonical k-cosymplectic instance whose
/// tau-combinations vanishing on the fundamental vector fields have already
/// been ordered first.
pub struct SpacetimeData {
    pub ell: usize,
    /// `ell x k`: `tau_bar^beta = c^beta_alpha tau^alpha`.
    pub c_matrix: DMatrix<f64>,
    /// Reordering `X^_beta = X_{order[beta]}` putting the components paired
    /// with the surviving base coordinates first.
    pub component_order: Vec<usize>,
    /// Chart indices of the momenta suppressed on `S_lambda`, matching
    /// `component_order[ell..]`.
    pub suppressed_momenta: Vec<usize>,
    /// Chart indices of the base coordinates that project out.
    pub suppressed_base: Vec<usize>,
    /// Projection `pi: M_k -> M_ell`.
    pub projection: SmoothField,
    pub reduced_chart: ChartRef,
    /// Lift of reduced points back to `M_k` on `S_lambda`.
    pub lift: LiftFn,
    pub reduced_tau: VValuedForm,
    pub reduced_omega: VValuedForm,
    /// The reduced group action `Phi_ell` equivariant to `Phi` through the
    /// projection.
    pub reduced_phi: Arc<dyn Fn(&[f64]) -> SmoothField + Send + Sync>,
}

pub struct SpacetimeReduction {
    pub reduced: KPolycosymplecticStructure,
    pub h_reduced: SmoothField,
    /// Projection of the surviving components of the reordered k-vector
    /// field; an ell-vector field on the reduced chart.
    pub reduced_field: KVectorFieldRep,
    pub report: VerificationReport,
}

/// The k-cosymplectic to ell-cosymplectic space-time reduction: build the
/// barred forms from the constant combination matrix, certify
/// `pi* tau_ell = tau_bar`, `pi* omega_ell = omega_bar`, check the
/// projectability hypothesis `sum_{alpha > ell} [X^h_alpha]^alpha_i = 0` and
/// the equivariance `pi . Phi_g = Phi_ell_g . pi`, and produce the reduced
/// Hamiltonian from the restriction to `S_lambda`.
pub fn spacetime_reduce(
    structure: &KPolycosymplecticStructure,
    action: &ActionModel,
    h: &SmoothField,
    kvector: &KVectorFieldRep,
    data: &SpacetimeData,
    lambda: &[f64],
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<SpacetimeReduction> {
    let mut report = VerificationReport::new("spacetime_reduce");
    let n = structure.chart.dim;
    let k = structure.k;
    let ell = data.ell;
    if lambda.len() != data.suppressed_momenta.len() {
        return Err(Error::InvalidConfig(format!(
            "lambda has {} entries, expected {}",
            lambda.len(),
            data.suppressed_momenta.len()
        )));
    }

    // barred forms: constant combinations of the structure components
    let bar = |form: &VValuedForm| -> VValuedForm {
        let parts: Vec<VValuedForm> = (0..ell)
            .map(|beta| {
                let mut acc: Option<VValuedForm> = None;
                for alpha in 0..k {
                    let coeff = data.c_matrix[(beta, alpha)];
                    if coeff == 0.0 {
                        continue;
                    }
                    let term = scale_form(&form.component(alpha), coeff);
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => add_forms(&prev, &term).expect("same degree"),
                    });
                }
                acc.unwrap_or_else(|| VValuedForm::zero(&structure.chart, form.degree(), 1))
            })
            .collect();
        crate::form::stack_components(&parts)
    };
    let tau_bar = bar(&structure.tau);
    let omega_bar = bar(&structure.omega);

    let pts = halton_points(&structure.chart, samples, seed);
    let pulled_tau = pullback(&data.projection, &structure.chart, &data.reduced_tau)?;
    let pulled_omega = pullback(&data.projection, &structure.chart, &data.reduced_omega)?;
    report.push(CheckResult::residual(
        "projection_identity_tau",
        max_coeff_deviation(&pulled_tau, &tau_bar, &pts),
        tol,
    ));
    report.push(CheckResult::residual(
        "projection_identity_omega",
        max_coeff_deviation(&pulled_omega, &omega_bar, &pts),
        tol,
    ));

    // tau_bar vanishes on the fundamental vector fields
    let mut tau_on_gen = 0.0f64;
    for gen in &action.generators {
        let hook = interior_product(gen, &tau_bar)?;
        tau_on_gen = tau_on_gen.max(max_coeff_norm(&hook, &pts));
    }
    report.push(CheckResult::residual("tau_bar_annihilates_generators", tau_on_gen, 1e-10));

    // projectability hypothesis: the suppressed momentum components of the
    // reordered k-vector field sum to zero
    let mut hypothesis = 0.0f64;
    for x in &pts {
        let v = kvector.eval(x);
        let mut acc = 0.0f64;
        for (offset, &slot) in data.suppressed_momenta.iter().enumerate() {
            let alpha = data.component_order[ell + offset];
            acc += v[alpha * n + slot];
        }
        hypothesis = hypothesis.max(acc.abs());
    }
    report.push(CheckResult::residual("suppressed_momentum_hypothesis", hypothesis, 1e-10));

    // h restricted to S_lambda must not depend on the suppressed base coords
    let red_pts = halton_points(&data.reduced_chart, samples, seed + 1);
    let mut base_dev = 0.0f64;
    for z in &red_pts {
        let x0 = (data.lift)(z, lambda);
        let mut x1 = x0.clone();
        for &b in &data.suppressed_base {
            x1[b] += 0.3;
        }
        base_dev = base_dev.max((h.eval(&x0)[0] - h.eval(&x1)[0]).abs());
    }
    report.push(CheckResult::residual("h_suppressed_base_independence", base_dev, 1e-10));

    let lift = Arc::clone(&data.lift);
    let lam: Vec<f64> = lambda.to_vec();
    let hc = h.clone();
    let h_reduced = SmoothField::numeric(data.reduced_chart.dim, 1, move |z| hc.eval(&lift(z, &lam)));

    // group equivariance through the projection
    let gs = halton_cube(action.group.dim.max(1), 0.5, 8, seed + 2);
    let mut equivariance = 0.0f64;
    if action.group.dim > 0 {
        for g in &gs {
            let phi_red = (data.reduced_phi)(g);
            for x in pts.iter().take(16) {
                let lhs = data.projection.eval(&action.apply(g, x));
                let rhs = phi_red.eval(&data.projection.eval(x));
                for (a, b) in lhs.iter().zip(&rhs) {
                    equivariance = equivariance.max((a - b).abs());
                }
            }
        }
    }
    report.push(CheckResult::residual("projection_equivariance", equivariance, 1e-10));

    let reduced = KPolycosymplecticStructure::new(
        &data.reduced_chart,
        ell,
        data.reduced_tau.clone(),
        data.reduced_omega.clone(),
    )?;
    report.merge(verify_structure(
        &GeometricStructure::KPolycosymplectic(reduced.clone()),
        samples.min(60),
        1e-9,
        seed + 3,
    ));

    // projected ell-vector field through the lift
    let lift = Arc::clone(&data.lift);
    let lam: Vec<f64> = lambda.to_vec();
    let kv = kvector.field().clone();
    let projection = data.projection.clone();
    let order = data.component_order.clone();
    let n_red = data.reduced_chart.dim;
    let red_field = SmoothField::numeric(n_red, ell * n_red, move |z| {
        let x = lift(z, &lam);
        let v = kv.eval(&x);
        let dp = projection.jacobian(&x);
        let mut out = Vec::with_capacity(ell * n_red);
        for beta in 0..ell {
            let alpha = order[beta];
            let va = DVector::from_iterator(n, v[alpha * n..(alpha + 1) * n].iter().copied());
            out.extend((&dp * va).iter().copied());
        }
        out
    });
    let reduced_field = KVectorFieldRep::new(&data.reduced_chart, ell, red_field)?;
    let ham_residual =
        hamiltonian_equations_residual(&reduced, &h_reduced, &reduced_field, samples.min(40), seed + 4)?;
    report.push(CheckResult::residual("reduced_hamiltonian_equations", ham_residual, 1e-9));

    Ok(SpacetimeReduction { reduced, h_reduced, reduced_field, report })
}

/// Orbit directions at a point, as matrix columns.
pub fn orbit_tangent(action: &ActionModel, indices: &[usize], x: &[f64]) -> DMatrix<f64> {
    orbit_matrix(action, indices, x)
}
