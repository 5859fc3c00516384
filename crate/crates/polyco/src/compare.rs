//! Full-vs-reduced dynamics comparison: solve the full HDW system, project
//! through the quotient chart, solve the reduced HDW system from the
//! projected data, and report the gap.

use std::sync::Arc;

use crate::dynamics::{
    divergence_law_residual, hdw_residuals_membrane, hdw_residuals_strings,
    solve_coupled_wave, solve_membrane_constant_momentum, solve_reduced_membrane_ode, Boundary,
    CoupledWaveProblem, RadialSolution, ResidualReport, SectionGrid,
};
use crate::error::Result;
use crate::instances::Coupling;

/// Default initial profiles for the strings comparison; periodic on
/// `[0, 2 pi]`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn strings_initial_data() -> ([Profile; 2], [Profile; 2]) {
    (
        [Arc::new(|x: f64| x.sin()), Arc::new(|x: f64| 0.3 * (2.0 * x).cos())],
        [Arc::new(|x: f64| -x.cos()), Arc::new(|_| 0.0)],
    )
}

pub struct StringsCompare {
    pub full: SectionGrid,
    pub reduced: SectionGrid,
    pub gap_linf: f64,
    pub gap_l2: f64,
    pub full_residuals: ResidualReport,
    pub divergence_residual: f64,
}

/// Solve the two-string system on an `nt x nx` grid, project
/// `q = q1 - q2`, `p = p1 - p2`, solve the reduced single-field system with
/// the projected initial data, and measure the field gap over all nodes.
pub fn compare_strings(coupling: &Coupling, nt: usize, nx: usize) -> Result<StringsCompare> {
    let t_span = (0.0, 2.0);
    let x_span = (0.0, std::f64::consts::TAU);
    let (init_q, init_v) = strings_initial_data();

    let full = crate::dynamics::solve_hdw_strings(
        Arc::clone(&coupling.dcdq),
        t_span,
        x_span,
        nt,
        nx,
        Boundary::Periodic,
        [Arc::clone(&init_q[0]), Arc::clone(&init_q[1])],
        [Arc::clone(&init_v[0]), Arc::clone(&init_v[1])],
    )?;

    // The leapfrog update commutes exactly with the linear projection
    // q = q1 - q2, so an identically discretized reduced solve would differ
    // from the projected full solve only by rounding. The reduced system is
    // cheap, so it runs at half the time step; the reported gap is then a
    // genuine second-order discretization quantity.
    let dcdq = Arc::clone(&coupling.dcdq);
    let q0 = Arc::clone(&init_q[0]);
    let q1 = Arc::clone(&init_q[1]);
    let v0 = Arc::clone(&init_v[0]);
    let v1 = Arc::clone(&init_v[1]);
    let reduced_problem = CoupledWaveProblem {
        n_fields: 1,
        t_span,
        x_span,
        nt: 2 * nt - 1,
        nx,
        boundary: Boundary::Periodic,
        init_value: vec![Arc::new(move |x| q0(x) - q1(x))],
        init_velocity: vec![Arc::new(move |x| v0(x) - v1(x))],
        source: Arc::new(move |t, x, q| vec![-2.0 * dcdq(t, x, q[0])]),
    };
    let reduced = solve_coupled_wave(&reduced_problem, &["q"], &[("p_t", "p_x")])?;

    let q_red = reduced.field("q");
    let q1_full = full.field("q1");
    let q2_full = full.field("q2");
    let mut gap_linf = 0.0f64;
    let mut gap_sq = 0.0f64;
    for m in 0..nt {
        for j in 0..nx {
            let gap = q_red[reduced.idx(&[2 * m, j])] - (q1_full[m * nx + j] - q2_full[m * nx + j]);
            gap_linf = gap_linf.max(gap.abs());
            gap_sq += gap * gap;
        }
    }
    let cell: f64 = full.spacing.iter().product();
    let dcdq = Arc::clone(&coupling.dcdq);
    let full_residuals = hdw_residuals_strings(&full, &*dcdq);
    let divergence_residual = divergence_law_residual(&full);
    Ok(StringsCompare {
        full,
        reduced,
        gap_linf,
        gap_l2: (gap_sq * cell).sqrt(),
        full_residuals,
        divergence_residual,
    })
}

pub struct MembraneCompare {
    pub full: SectionGrid,
    pub radial: RadialSolution,
    pub gap_linf: f64,
    pub full_residuals: ResidualReport,
    /// Residuals of the radial subsystem only (divergence and the radial
    /// slope equation), which the lifted solution satisfies for any lambda.
    pub radial_subsystem_residual: f64,
}

/// Compare the midpoint march of the full constant-momentum sector against
/// the fourth-order radial ODE solve and evaluate the full HDW residuals of
/// the lifted section.
pub fn compare_membrane(
    force_scale: f64,
    c: f64,
    lambda: (f64, f64),
    shape: (usize, usize, usize),
    zeta0: f64,
    pr0: f64,
) -> Result<MembraneCompare> {
    let t_span = (0.0, 2.0);
    let r_span = (1.0, 2.0);
    let theta_span = (0.0, std::f64::consts::TAU);
    let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |_| force_scale);
    let full = solve_membrane_constant_momentum(
        Arc::clone(&f),
        c,
        lambda,
        t_span,
        r_span,
        theta_span,
        shape,
        zeta0,
        pr0,
    )?;
    let radial = solve_reduced_membrane_ode(&*f, c, r_span, shape.1 - 1, zeta0, pr0)?;
    let zeta = full.field("zeta");
    let p_r = full.field("p_r");
    let mut gap_linf = 0.0f64;
    for it in 0..shape.0 {
        for (ir, (z_ode, p_ode)) in radial.zeta.iter().zip(&radial.p_r).enumerate() {
            for itheta in 0..shape.2 {
                let flat = full.idx(&[it, ir, itheta]);
                gap_linf = gap_linf.max((zeta[flat] - z_ode).abs());
                gap_linf = gap_linf.max((p_r[flat] - p_ode).abs());
            }
        }
    }
    let full_residuals = hdw_residuals_membrane(&full, &*f, c);
    let radial_subsystem_residual = full_residuals
        .entries
        .iter()
        .filter(|(name, _, _)| name == "divergence" || name == "dzeta_dr")
        .fold(0.0f64, |acc, (_, max, _)| acc.max(*max));
    Ok(MembraneCompare { full, radial, gap_linf, full_residuals, radial_subsystem_residual })
}
