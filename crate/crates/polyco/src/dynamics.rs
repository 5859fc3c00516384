//! Hamiltonian k-vector fields, gauge freedom, integrability tests, and the
//! HDW solvers for the worked field theories.
//!
//! The first-order HDW system is overdetermined as an evolution in time, so
//! grid solving goes through the equivalent second-order field equation
//! (leapfrog, fixed step), recovers momenta by centered differences, and
//! then reports the residuals of the first-order system on the result.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::halton_points;
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{lie_bracket, KVectorFieldRep};
use crate::linalg::pinv_solve;
use crate::report::{CheckResult, VerificationReport};
use crate::structure::{reeb_family, KPolycosymplecticStructure, RESIDUAL_TOL};

/// Gauge selection among the solutions of the underdetermined defining
/// equations of a Hamiltonian k-vector field.
#[derive(Clone)]
pub enum GaugeChoice {
    /// Minimum Euclidean norm solution (SVD pseudoinverse).
    MinimalNorm,
    /// Instance-supplied k-vector field; its defining residual is checked on
    /// every solve.
    InstanceSupplied(KVectorFieldRep),
}

#[derive(Clone)]
pub struct HamiltonianSystem {
    pub structure: KPolycosymplecticStructure,
    pub h: SmoothField,
    pub gauge: GaugeChoice,
}

impl HamiltonianSystem {
    pub fn new(structure: KPolycosymplecticStructure, h: SmoothField, gauge: GaugeChoice) -> Result<Self> {
        if h.dim_in() != structure.chart.dim || h.dim_out() != 1 {
            return Err(Error::DimensionMismatch("Hamiltonian must be scalar on the structure chart".into()));
        }
        Ok(HamiltonianSystem { structure, h, gauge })
    }

    /// Stacked defining system `A X = b` for `X = (X_1, ..., X_k)`:
    /// `iota_X omega = dh - (R_alpha h) tau^alpha` (n rows) and
    /// `iota_{X_beta} tau = e_beta` (k^2 rows).
    pub fn defining_system(&self, x: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let s = &self.structure;
        let n = s.chart.dim;
        let k = s.k;
        let rows = n + k * k;
        let mut a = DMatrix::zeros(rows, k * n);
        for alpha in 0..k {
            let omega_t = s.omega.two_form_matrix(x, alpha).transpose();
            a.view_mut((0, alpha * n), (n, n)).copy_from(&omega_t);
        }
        let tmat = s.tau_matrix(x);
        for beta in 0..k {
            a.view_mut((n + beta * k, beta * n), (k, n)).copy_from(&tmat);
        }
        let mut b = DVector::zeros(rows);
        let dh = self.h.jacobian(x);
        let reeb = reeb_family(s, x)?;
        let mut rhs_one_form = DVector::from_iterator(n, (0..n).map(|j| dh[(0, j)]));
        for alpha in 0..k {
            let rh = reeb.fields[alpha].dot(&rhs_one_form_base(&dh, n));
            let tau_alpha = s.tau.one_form_covector(x, alpha);
            rhs_one_form -= rh * tau_alpha;
        }
        b.rows_mut(0, n).copy_from(&rhs_one_form);
        for beta in 0..k {
            b[n + beta * k + beta] = 1.0;
        }
        Ok((a, b))
    }

    /// Solve the defining equations at a point under the configured gauge;
    /// the returned components are `(X_1, ..., X_k)` flattened.
    pub fn solve_kvector(&self, x: &[f64]) -> Result<DVector<f64>> {
        let (a, b) = self.defining_system(x)?;
        let sol = match &self.gauge {
            GaugeChoice::MinimalNorm => pinv_solve(&a, &b),
            GaugeChoice::InstanceSupplied(field) => DVector::from_vec(field.eval(x)),
        };
        let residual = (&a * &sol - &b).amax();
        if residual > RESIDUAL_TOL {
            return Err(Error::InconsistentSystem(residual));
        }
        Ok(sol)
    }

    /// The gauge solution as a k-vector field.
    pub fn kvector_field(&self) -> KVectorFieldRep {
        match &self.gauge {
            GaugeChoice::InstanceSupplied(field) => field.clone(),
            GaugeChoice::MinimalNorm => {
                let sys = self.clone();
                let n = self.structure.chart.dim;
                let k = self.structure.k;
                let f = SmoothField::numeric(n, k * n, move |x| {
                    sys.solve_kvector(x).expect("defining system").iter().copied().collect()
                });
                KVectorFieldRep::new(&self.structure.chart, k, f).expect("gauge field")
            }
        }
    }
}

fn rhs_one_form_base(dh: &DMatrix<f64>, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|j| dh[(0, j)]))
}

/// The Darboux-coordinate family of Hamiltonian k-vector fields:
/// `(X_alpha)^{t^beta} = delta`, `(X_beta)^{q^i} = dh/dp_i^beta`, and the
/// free momentum coefficients constrained by the trace condition
/// `sum_alpha (X_alpha)^{p_i^alpha} = -dh/dq^i`.
pub struct DarbouxFamily {
    pub k: usize,
    pub n_fields: usize,
    base: Vec<usize>,
    fields: Vec<usize>,
    momenta: Vec<Vec<usize>>,
    h: SmoothField,
    dim: usize,
}

pub fn darboux_family(sys: &HamiltonianSystem) -> Result<DarbouxFamily> {
    let tags = sys.structure.chart.darboux.clone().ok_or(Error::NotDarboux)?;
    Ok(DarbouxFamily {
        k: sys.structure.k,
        n_fields: tags.fields.len(),
        base: tags.base,
        fields: tags.fields,
        momenta: tags.momenta,
        h: sys.h.clone(),
        dim: sys.structure.chart.dim,
    })
}

impl DarbouxFamily {
    /// `-dh/dq^i`, the right-hand side of the trace constraint.
    pub fn trace_rhs(&self, x: &[f64]) -> Vec<f64> {
        let dh = self.h.jacobian(x);
        self.fields.iter().map(|&qi| -dh[(0, qi)]).collect()
    }

    /// Deviation of a candidate k-vector field from the fixed components of
    /// the family, maximized over the points.
    pub fn fixed_residual(&self, kv: &KVectorFieldRep, points: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for x in points {
            let v = kv.eval(x);
            let dh = self.h.jacobian(x);
            for alpha in 0..self.k {
                let xa = &v[alpha * n..(alpha + 1) * n];
                for (beta, &tb) in self.base.iter().enumerate() {
                    let expect = if beta == alpha { 1.0 } else { 0.0 };
                    worst = worst.max((xa[tb] - expect).abs());
                }
                for (i, &qi) in self.fields.iter().enumerate() {
                    worst = worst.max((xa[qi] - dh[(0, self.momenta[i][alpha])]).abs());
                }
            }
        }
        worst
    }

    /// Trace-constraint residual of a candidate member.
    pub fn trace_residual(&self, kv: &KVectorFieldRep, points: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for x in points {
            let v = kv.eval(x);
            let rhs = self.trace_rhs(x);
            for (i, &target) in rhs.iter().enumerate() {
                let total: f64 = (0..self.k).map(|alpha| v[alpha * n + self.momenta[i][alpha]]).sum();
                worst = worst.max((total - target).abs());
            }
        }
        worst
    }

    /// Momentum coefficients `(X_alpha)^{p_i^beta}` of the minimal-norm
    /// member: the trace splits equally across the diagonal, off-diagonal
    /// slots vanish.
    pub fn minimal_norm_momentum_coeffs(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let rhs = self.trace_rhs(x);
        (0..self.n_fields)
            .map(|i| {
                let mut m = DMatrix::zeros(self.k, self.k);
                for alpha in 0..self.k {
                    m[(alpha, alpha)] = rhs[i] / self.k as f64;
                }
                m
            })
            .collect()
    }
}

/// Max pairwise Lie-bracket residual of a k-vector field over the samples.
pub fn check_integrability(kv: &KVectorFieldRep, samples: usize, seed: u64) -> Result<f64> {
    let points = halton_points(kv.chart(), samples, seed);
    let mut worst = 0.0f64;
    for alpha in 0..kv.k() {
        for beta in alpha + 1..kv.k() {
            let bracket = lie_bracket(&kv.component(alpha), &kv.component(beta))?;
            for p in &points {
                worst = worst.max(bracket.eval(p).iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// A rectangular grid of field values over `(s^1, ..., s^k)`, `k <= 3`.
#[derive(Clone)]
pub struct SectionGrid {
    pub param_names: Vec<String>,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub boundary: Boundary,
    pub field_names: Vec<String>,
    /// One flat array per field, row-major over the shape.
    pub values: Vec<Vec<f64>>,
}

impl SectionGrid {
    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn idx(&self, coords: &[usize]) -> usize {
        let mut acc = 0usize;
        for (c, s) in coords.iter().zip(&self.shape) {
            acc = acc * s + c;
        }
        acc
    }

    pub fn param_of(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + self.spacing[axis] * i as f64
    }

    pub fn field(&self, name: &str) -> &Vec<f64> {
        let i = self.field_names.iter().position(|n| n == name).expect("field name");
        &self.values[i]
    }

    /// CSV serialization: coordinate header, one row per node (parameters
    /// first, then fields in declaration order); `#` lines carry metadata.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.param_names.join(","));
        for f in &self.field_names {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        let k = self.shape.len();
        let mut coords = vec![0usize; k];
        loop {
            for (axis, &c) in coords.iter().enumerate() {
                if axis > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.param_of(axis, c)));
            }
            let flat = self.idx(&coords);
            for v in &self.values {
                out.push_str(&format!(",{}", v[flat]));
            }
            out.push('\n');
            let mut axis = k;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                coords[axis] += 1;
                if coords[axis] < self.shape[axis] {
                    break;
                }
                coords[axis] = 0;
            }
        }
    }
}

/// Second-order coupled wave problem `d^2 q_i/dt^2 - d^2 q_i/dx^2 =
/// source_i(t, x, q)` with initial value and velocity profiles.
pub struct CoupledWaveProblem {
    pub n_fields: usize,
    pub t_span: (f64, f64),
    pub x_span: (f64, f64),
    pub nt: usize,
    pub nx: usize,
    pub boundary: Boundary,
    pub init_value: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub init_velocity: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub source: Arc<dyn Fn(f64, f64, &[f64]) -> Vec<f64> + Send + Sync>,
}

impl CoupledWaveProblem {
    fn dt(&self) -> f64 {
        (self.t_span.1 - self.t_span.0) / (self.nt - 1) as f64
    }

    fn dx(&self) -> f64 {
        (self.x_span.1 - self.x_span.0) / (self.nx - 1) as f64
    }
}

/// Leapfrog solve of the coupled wave system; momenta are recovered from the
/// solution grid by centered differences (one-sided second order at the
/// non-periodic time boundaries) as `p^t = dq/dt`, `p^x = -dq/dx`.
/// `field_names[i]` names the i-th field, `momentum_names[i]` its `(t, x)`
/// momentum pair.
pub fn solve_coupled_wave(
    p: &CoupledWaveProblem,
    field_names: &[&str],
    momentum_names: &[(&str, &str)],
) -> Result<SectionGrid> {
    if p.nt < 8 || p.nx < 8 {
        return Err(Error::InvalidConfig(format!("grid sizes must be >= 8 (got {}x{})", p.nt, p.nx)));
    }
    let dt = p.dt();
    let dx = p.dx();
    if dt <= 0.0 || dx <= 0.0 {
        return Err(Error::InvalidConfig("grid spacing must be positive".into()));
    }
    if dt > dx + 1e-12 {
        return Err(Error::CflViolation { dt, dx });
    }
    let nf = p.n_fields;
    let nt = p.nt;
    let nx = p.nx;
    // interior width for the spatial second difference
    let lap = |row: &[f64], j: usize| -> f64 {
        match p.boundary {
            Boundary::Periodic => {
                // node nx-1 is the wrap image of node 0
                let m = nx - 1;
                let left = row[(j + m - 1) % m];
                let right = row[(j + 1) % m];
                (left - 2.0 * row[j % m] + right) / (dx * dx)
            }
            Boundary::Dirichlet => {
                if j == 0 || j == nx - 1 {
                    0.0
                } else {
                    (row[j - 1] - 2.0 * row[j] + row[j + 1]) / (dx * dx)
                }
            }
        }
    };
    let x_of = |j: usize| p.x_span.0 + dx * j as f64;
    let t_of = |m: usize| p.t_span.0 + dt * m as f64;

    // q[f][m * nx + j]
    let mut q = vec![vec![0.0f64; nt * nx]; nf];
    let core = match p.boundary {
        Boundary::Periodic => nx - 1,
        Boundary::Dirichlet => nx,
    };
    for f in 0..nf {
        for j in 0..nx {
            q[f][j] = (p.init_value[f])(x_of(j));
        }
    }
    // Taylor start with the source at t0
    for j in 0..core {
        if p.boundary == Boundary::Dirichlet && (j == 0 || j == nx - 1) {
            for f in 0..nf {
                q[f][nx + j] = q[f][j];
            }
            continue;
        }
        let state: Vec<f64> = (0..nf).map(|f| q[f][j]).collect();
        let src = (p.source)(t_of(0), x_of(j), &state);
        for f in 0..nf {
            let row = &q[f][0..nx];
            let acc = lap(row, j) + src[f];
            let v0 = (p.init_velocity[f])(x_of(j));
            let val = q[f][j] + dt * v0 + 0.5 * dt * dt * acc;
            q[f][nx + j] = val;
        }
    }
    sync_wrap(&mut q, p.boundary, 1, nx);
    for m in 1..nt - 1 {
        for j in 0..core {
            if p.boundary == Boundary::Dirichlet && (j == 0 || j == nx - 1) {
                for f in 0..nf {
                    q[f][(m + 1) * nx + j] = q[f][m * nx + j];
                }
                continue;
            }
            let state: Vec<f64> = (0..nf).map(|f| q[f][m * nx + j]).collect();
            let src = (p.source)(t_of(m), x_of(j), &state);
            for f in 0..nf {
                let row = &q[f][m * nx..(m + 1) * nx];
                let acc = lap(row, j) + src[f];
                q[f][(m + 1) * nx + j] =
                    2.0 * q[f][m * nx + j] - q[f][(m - 1) * nx + j] + dt * dt * acc;
            }
        }
        sync_wrap(&mut q, p.boundary, m + 1, nx);
    }

    // momenta by differencing
    let mut fields = Vec::new();
    let mut names = Vec::new();
    for (f, name) in field_names.iter().enumerate() {
        names.push(name.to_string());
        fields.push(q[f].clone());
    }
    for (f, (name_t, name_x)) in momentum_names.iter().enumerate() {
        let mut pt = vec![0.0f64; nt * nx];
        let mut px = vec![0.0f64; nt * nx];
        for m in 0..nt {
            for j in 0..nx {
                pt[m * nx + j] = diff_time(&q[f], m, j, nt, nx, dt);
                px[m * nx + j] = -diff_space(&q[f], m, j, nx, dx, p.boundary);
            }
        }
        names.push(name_t.to_string());
        fields.push(pt);
        names.push(name_x.to_string());
        fields.push(px);
    }
    Ok(SectionGrid {
        param_names: vec!["t".into(), "x".into()],
        shape: vec![nt, nx],
        origin: vec![p.t_span.0, p.x_span.0],
        spacing: vec![dt, dx],
        boundary: p.boundary,
        field_names: names,
        values: fields,
    })
}

/// The two-string HDW solve: leapfrog on the equivalent wave equations
/// `d^2 q^1 = -dC/dq`, `d^2 q^2 = +dC/dq` (with `q = q^1 - q^2`), momenta
/// recovered by differencing.
#[allow(clippy::too_many_arguments)]
pub fn solve_hdw_strings(
    dcdq: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    t_span: (f64, f64),
    x_span: (f64, f64),
    nt: usize,
    nx: usize,
    boundary: Boundary,
    init_value: [Arc<dyn Fn(f64) -> f64 + Send + Sync>; 2],
    init_velocity: [Arc<dyn Fn(f64) -> f64 + Send + Sync>; 2],
) -> Result<SectionGrid> {
    let problem = CoupledWaveProblem {
        n_fields: 2,
        t_span,
        x_span,
        nt,
        nx,
        boundary,
        init_value: init_value.to_vec(),
        init_velocity: init_velocity.to_vec(),
        source: Arc::new(move |t, x, q| {
            let force = dcdq(t, x, q[0] - q[1]);
            vec![-force, force]
        }),
    };
    solve_coupled_wave(&problem, &["q1", "q2"], &[("p1_t", "p1_x"), ("p2_t", "p2_x")])
}

fn sync_wrap(q: &mut [Vec<f64>], boundary: Boundary, m: usize, nx: usize) {
    if boundary == Boundary::Periodic {
        for f in q.iter_mut() {
            f[m * nx + nx - 1] = f[m * nx];
        }
    }
}

fn diff_time(q: &[f64], m: usize, j: usize, nt: usize, nx: usize, dt: f64) -> f64 {
    if m == 0 {
        (-3.0 * q[j] + 4.0 * q[nx + j] - q[2 * nx + j]) / (2.0 * dt)
    } else if m == nt - 1 {
        (3.0 * q[m * nx + j] - 4.0 * q[(m - 1) * nx + j] + q[(m - 2) * nx + j]) / (2.0 * dt)
    } else {
        (q[(m + 1) * nx + j] - q[(m - 1) * nx + j]) / (2.0 * dt)
    }
}

fn diff_space(q: &[f64], m: usize, j: usize, nx: usize, dx: f64, boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Periodic => {
            let w = nx - 1;
            let left = q[m * nx + (j % w + w - 1) % w];
            let right = q[m * nx + (j % w + 1) % w];
            (right - left) / (2.0 * dx)
        }
        Boundary::Dirichlet => {
            if j == 0 {
                (-3.0 * q[m * nx] + 4.0 * q[m * nx + 1] - q[m * nx + 2]) / (2.0 * dx)
            } else if j == nx - 1 {
                (3.0 * q[m * nx + j] - 4.0 * q[m * nx + j - 1] + q[m * nx + j - 2]) / (2.0 * dx)
            } else {
                (q[m * nx + j + 1] - q[m * nx + j - 1]) / (2.0 * dx)
            }
        }
    }
}

/// Discrete residual report of a first-order HDW system on a grid.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub entries: Vec<(String, f64, f64)>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, e| a.max(e.1))
    }

    pub fn to_comments(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(name, max, l2)| format!("residual {name}: max = {max:e}, l2 = {l2:e}"))
            .collect()
    }

    pub fn to_report(&self, subject: &str, tol: f64) -> VerificationReport {
        let mut r = VerificationReport::new(subject);
        for (name, max, _) in &self.entries {
            r.push(CheckResult::residual(name, *max, tol));
        }
        r
    }
}

struct GridDiff<'a> {
    grid: &'a SectionGrid,
}

impl<'a> GridDiff<'a> {
    /// Centered partial along an axis, one-sided second order at non-periodic
    /// edges. Axis 0 is always treated as non-periodic (time-like).
    fn partial(&self, data: &[f64], coords: &[usize], axis: usize) -> f64 {
        let shape = &self.grid.shape;
        let h = self.grid.spacing[axis];
        let n = shape[axis];
        let at = |alt: usize| {
            let mut c = coords.to_vec();
            c[axis] = alt;
            data[self.grid.idx(&c)]
        };
        let i = coords[axis];
        let periodic = self.grid.boundary == Boundary::Periodic && axis > 0;
        if periodic {
            let w = n - 1;
            let left = at((i % w + w - 1) % w);
            let right = at((i % w + 1) % w);
            (right - left) / (2.0 * h)
        } else if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        }
    }
}

fn fold_residual(acc: &mut (f64, f64), r: f64) {
    acc.0 = acc.0.max(r.abs());
    acc.1 += r * r;
}

/// Residuals of the two-string HDW system
/// `dq^i/dt = p_i^t`, `dq^i/dx = -p_i^x`,
/// `dp_i^t/dt + dp_i^x/dx = -(+/-) dC/dq` on a solution grid.
pub fn hdw_residuals_strings(
    grid: &SectionGrid,
    dcdq: &dyn Fn(f64, f64, f64) -> f64,
) -> ResidualReport {
    let d = GridDiff { grid };
    let q1 = grid.field("q1");
    let q2 = grid.field("q2");
    let p1t = grid.field("p1_t");
    let p1x = grid.field("p1_x");
    let p2t = grid.field("p2_t");
    let p2x = grid.field("p2_x");
    let (nt, nx) = (grid.shape[0], grid.shape[1]);
    let cell = grid.spacing[0] * grid.spacing[1];
    let mut acc = vec![(0.0f64, 0.0f64); 6];
    for m in 0..nt {
        for j in 0..nx {
            let coords = [m, j];
            let flat = grid.idx(&coords);
            let t = grid.param_of(0, m);
            let x = grid.param_of(1, j);
            let qdiff = q1[flat] - q2[flat];
            let force = dcdq(t, x, qdiff);
            fold_residual(&mut acc[0], d.partial(q1, &coords, 0) - p1t[flat]);
            fold_residual(&mut acc[1], d.partial(q1, &coords, 1) + p1x[flat]);
            fold_residual(&mut acc[2], d.partial(q2, &coords, 0) - p2t[flat]);
            fold_residual(&mut acc[3], d.partial(q2, &coords, 1) + p2x[flat]);
            fold_residual(&mut acc[4], d.partial(p1t, &coords, 0) + d.partial(p1x, &coords, 1) + force);
            fold_residual(&mut acc[5], d.partial(p2t, &coords, 0) + d.partial(p2x, &coords, 1) - force);
        }
    }
    let names = ["dq1_dt", "dq1_dx", "dq2_dt", "dq2_dx", "momentum_1", "momentum_2"];
    ResidualReport {
        entries: names
            .iter()
            .zip(acc)
            .map(|(n, (max, sq))| (n.to_string(), max, (sq * cell).sqrt()))
            .collect(),
    }
}

/// Discrete divergence-law residual
/// `d/dt (p_1^t + p_2^t) + d/dx (p_1^x + p_2^x)` on a strings grid; the
/// coupling terms cancel on solutions, so this measures the conservation of
/// the momentum-map pairing.
pub fn divergence_law_residual(grid: &SectionGrid) -> f64 {
    let d = GridDiff { grid };
    let (nt, nx) = (grid.shape[0], grid.shape[1]);
    let sum_t: Vec<f64> = grid
        .field("p1_t")
        .iter()
        .zip(grid.field("p2_t"))
        .map(|(a, b)| a + b)
        .collect();
    let sum_x: Vec<f64> = grid
        .field("p1_x")
        .iter()
        .zip(grid.field("p2_x"))
        .map(|(a, b)| a + b)
        .collect();
    let mut worst = 0.0f64;
    // skip the one-sided time edges where the recovery stencils differ
    for m in 2..nt.saturating_sub(2) {
        for j in 0..nx {
            let coords = [m, j];
            let r = d.partial(&sum_t, &coords, 0) + d.partial(&sum_x, &coords, 1);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Classical fourth-order fixed-step integration of the reduced membrane
/// system `dp^r/dr = r f(r)`, `dzeta/dr = -p^r / (r c^2)`.
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub zeta: Vec<f64>,
    pub p_r: Vec<f64>,
}

pub fn solve_reduced_membrane_ode(
    f: &dyn Fn(f64) -> f64,
    c: f64,
    r_span: (f64, f64),
    steps: usize,
    zeta0: f64,
    pr0: f64,
) -> Result<RadialSolution> {
    if r_span.0 <= 0.0 && r_span.1 >= 0.0 {
        return Err(Error::RadialDomain(r_span.0, r_span.1));
    }
    let h = (r_span.1 - r_span.0) / steps as f64;
    let rhs = |r: f64, state: [f64; 2]| -> [f64; 2] {
        // state = [zeta, p^r]
        [-state[1] / (r * c * c), r * f(r)]
    };
    let mut state = [zeta0, pr0];
    let mut out = RadialSolution {
        r: Vec::with_capacity(steps + 1),
        zeta: Vec::with_capacity(steps + 1),
        p_r: Vec::with_capacity(steps + 1),
    };
    let mut r = r_span.0;
    out.r.push(r);
    out.zeta.push(state[0]);
    out.p_r.push(state[1]);
    for _ in 0..steps {
        let k1 = rhs(r, state);
        let k2 = rhs(r + 0.5 * h, [state[0] + 0.5 * h * k1[0], state[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [state[0] + 0.5 * h * k2[0], state[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [state[0] + h * k3[0], state[1] + h * k3[1]]);
        for i in 0..2 {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
        out.r.push(r);
        out.zeta.push(state[0]);
        out.p_r.push(state[1]);
    }
    Ok(out)
}

/// Residual of `c^2 (zeta'' + zeta'/r) + f(r)` on a radial solution,
/// by centered differences on the interior nodes.
pub fn radial_pde_residual(sol: &RadialSolution, f: &dyn Fn(f64) -> f64, c: f64) -> f64 {
    let n = sol.r.len();
    let h = sol.r[1] - sol.r[0];
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let d1 = (sol.zeta[i + 1] - sol.zeta[i - 1]) / (2.0 * h);
        let d2 = (sol.zeta[i + 1] - 2.0 * sol.zeta[i] + sol.zeta[i - 1]) / (h * h);
        let r = sol.r[i];
        worst = worst.max((c * c * (d2 + d1 / r) + f(r)).abs());
    }
    worst
}

/// March the constant-transverse-momentum sector of the membrane HDW system
/// on a `(t, r, theta)` grid. The radial direction plays the role of the
/// evolution parameter: per `(t, theta)` line a midpoint step advances
/// `dp^r/dr = r f(r) - D_t p^t - D_theta p^theta`,
/// `dzeta/dr = -p^r / (r c^2)`, where the transverse derivatives are read
/// discretely off the current grid slice. This is a deliberately different
/// scheme from the fourth-order radial ODE solve, so a comparison of the
/// two routes measures genuine discretization error rather than itself.
pub fn solve_membrane_constant_momentum(
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    c: f64,
    lambda: (f64, f64),
    t_span: (f64, f64),
    r_span: (f64, f64),
    theta_span: (f64, f64),
    shape: (usize, usize, usize),
    zeta0: f64,
    pr0: f64,
) -> Result<SectionGrid> {
    let (nt, nr, ntheta) = shape;
    if nt < 8 || nr < 8 || ntheta < 8 {
        return Err(Error::InvalidConfig("membrane grid sizes must be >= 8".into()));
    }
    if r_span.0 <= 0.0 && r_span.1 >= 0.0 {
        return Err(Error::RadialDomain(r_span.0, r_span.1));
    }
    let count = nt * nr * ntheta;
    let mut zeta = vec![0.0f64; count];
    let p_t = vec![lambda.0; count];
    let mut p_r = vec![0.0f64; count];
    let p_theta = vec![lambda.1; count];
    let dt = (t_span.1 - t_span.0) / (nt - 1) as f64;
    let dr = (r_span.1 - r_span.0) / (nr - 1) as f64;
    let dtheta = (theta_span.1 - theta_span.0) / (ntheta - 1) as f64;
    let at = |ir: usize, it: usize, itheta: usize| (it * nr + ir) * ntheta + itheta;
    for it in 0..nt {
        for itheta in 0..ntheta {
            zeta[at(0, it, itheta)] = zeta0;
            p_r[at(0, it, itheta)] = pr0;
        }
    }
    for ir in 0..nr - 1 {
        let r = r_span.0 + dr * ir as f64;
        for it in 0..nt {
            for itheta in 0..ntheta {
                // discrete transverse divergence of the frozen momenta
                let dt_pt = if it == 0 {
                    (p_t[at(ir, 1, itheta)] - p_t[at(ir, 0, itheta)]) / dt
                } else {
                    (p_t[at(ir, it, itheta)] - p_t[at(ir, it - 1, itheta)]) / dt
                };
                let dth_pth = if itheta == 0 {
                    (p_theta[at(ir, it, 1)] - p_theta[at(ir, it, 0)]) / dtheta
                } else {
                    (p_theta[at(ir, it, itheta)] - p_theta[at(ir, it, itheta - 1)]) / dtheta
                };
                let transverse = dt_pt + dth_pth;
                let z = zeta[at(ir, it, itheta)];
                let p = p_r[at(ir, it, itheta)];
                // midpoint step in r; the zeta slope depends on p^r only
                let k1_p = r * f(r) - transverse;
                let rm = r + 0.5 * dr;
                let pm = p + 0.5 * dr * k1_p;
                zeta[at(ir + 1, it, itheta)] = z + dr * (-pm / (rm * c * c));
                p_r[at(ir + 1, it, itheta)] = p + dr * (rm * f(rm) - transverse);
            }
        }
    }
    Ok(SectionGrid {
        param_names: vec!["t".into(), "r".into(), "theta".into()],
        shape: vec![nt, nr, ntheta],
        origin: vec![t_span.0, r_span.0, theta_span.0],
        spacing: vec![dt, dr, dtheta],
        boundary: Boundary::Dirichlet,
        field_names: vec!["zeta".into(), "p_t".into(), "p_r".into(), "p_theta".into()],
        values: vec![zeta, p_t, p_r, p_theta],
    })
}

/// Residuals of the full three-cosymplectic membrane HDW system on a grid:
/// `dp^t/dt + dp^r/dr + dp^theta/dtheta = r f(r)`,
/// `dzeta/dt = p^t / r`, `dzeta/dr = -p^r / (r c^2)`,
/// `dzeta/dtheta = -r p^theta / c^2`.
pub fn hdw_residuals_membrane(grid: &SectionGrid, f: &dyn Fn(f64) -> f64, c: f64) -> ResidualReport {
    let d = GridDiff { grid };
    let zeta = grid.field("zeta");
    let p_t = grid.field("p_t");
    let p_r = grid.field("p_r");
    let p_theta = grid.field("p_theta");
    let mut acc = vec![(0.0f64, 0.0f64); 4];
    let cell: f64 = grid.spacing.iter().product();
    for it in 0..grid.shape[0] {
        for ir in 0..grid.shape[1] {
            for itheta in 0..grid.shape[2] {
                let coords = [it, ir, itheta];
                let flat = grid.idx(&coords);
                let r = grid.param_of(1, ir);
                fold_residual(
                    &mut acc[0],
                    d.partial(p_t, &coords, 0) + d.partial(p_r, &coords, 1) + d.partial(p_theta, &coords, 2)
                        - r * f(r),
                );
                fold_residual(&mut acc[1], d.partial(zeta, &coords, 0) - p_t[flat] / r);
                fold_residual(&mut acc[2], d.partial(zeta, &coords, 1) + p_r[flat] / (r * c * c));
                fold_residual(&mut acc[3], d.partial(zeta, &coords, 2) + r * p_theta[flat] / (c * c));
            }
        }
    }
    let names = ["divergence", "dzeta_dt", "dzeta_dr", "dzeta_dtheta"];
    ResidualReport {
        entries: names
            .iter()
            .zip(acc)
            .map(|(n, (max, sq))| (n.to_string(), max, (sq * cell).sqrt()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartBox;
    use crate::form::FormBuilder;

    const PI2: f64 = std::f64::consts::TAU;

    fn traveling_wave_problem(nx: usize, nt: usize) -> CoupledWaveProblem {
        CoupledWaveProblem {
            n_fields: 2,
            t_span: (0.0, 2.0),
            x_span: (0.0, PI2),
            nt,
            nx,
            boundary: Boundary::Periodic,
            init_value: vec![Arc::new(|x: f64| x.sin()), Arc::new(|_| 0.0)],
            init_velocity: vec![Arc::new(|x: f64| -x.cos()), Arc::new(|_| 0.0)],
            source: Arc::new(|_, _, _| vec![0.0, 0.0]),
        }
    }

    fn solve_strings(p: &CoupledWaveProblem) -> SectionGrid {
        solve_coupled_wave(p, &["q1", "q2"], &[("p1_t", "p1_x"), ("p2_t", "p2_x")]).unwrap()
    }

    /// d'Alembert oracle: with C = 0, q1(t, x) = sin(x - t).
    fn traveling_wave_error(nx: usize, nt: usize) -> f64 {
        let grid = solve_strings(&traveling_wave_problem(nx, nt));
        let q1 = grid.field("q1");
        let mut err = 0.0f64;
        for m in 0..grid.shape[0] {
            for j in 0..grid.shape[1] {
                let t = grid.param_of(0, m);
                let x = grid.param_of(1, j);
                err = err.max((q1[grid.idx(&[m, j])] - (x - t).sin()).abs());
            }
        }
        err
    }

    #[test]
    fn traveling_wave_matches_dalembert() {
        assert!(traveling_wave_error(201, 101) < 2e-3);
    }

    #[test]
    fn leapfrog_is_second_order() {
        let e1 = traveling_wave_error(101, 51);
        let e2 = traveling_wave_error(201, 101);
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn constant_data_stays_constant() {
        let p = CoupledWaveProblem {
            n_fields: 2,
            t_span: (0.0, 2.0),
            x_span: (0.0, PI2),
            nt: 65,
            nx: 65,
            boundary: Boundary::Periodic,
            init_value: vec![Arc::new(|_| 0.7), Arc::new(|_| -0.1)],
            init_velocity: vec![Arc::new(|_| 0.0), Arc::new(|_| 0.0)],
            source: Arc::new(|_, _, _| vec![0.0, 0.0]),
        };
        let grid = solve_strings(&p);
        for v in grid.field("q1") {
            assert!((v - 0.7).abs() < 1e-12);
        }
        for v in grid.field("p1_t") {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let mut p = traveling_wave_problem(33, 201);
        p.t_span = (0.0, 40.0);
        assert!(matches!(
            solve_coupled_wave(&p, &["q1", "q2"], &[("p1_t", "p1_x"), ("p2_t", "p2_x")]),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn exact_wave_sampled_on_grid_has_small_residual() {
        // oracle values from the closed form q1 = sin(x - t), q2 = 0
        let nt = 201;
        let nx = 401;
        let dt = 2.0 / (nt - 1) as f64;
        let dx = PI2 / (nx - 1) as f64;
        let mut grid = SectionGrid {
            param_names: vec!["t".into(), "x".into()],
            shape: vec![nt, nx],
            origin: vec![0.0, 0.0],
            spacing: vec![dt, dx],
            boundary: Boundary::Periodic,
            field_names: vec![
                "q1".into(), "q2".into(), "p1_t".into(), "p1_x".into(), "p2_t".into(), "p2_x".into(),
            ],
            values: vec![vec![0.0; nt * nx]; 6],
        };
        for m in 0..nt {
            for j in 0..nx {
                let t = m as f64 * dt;
                let x = j as f64 * dx;
                let flat = m * nx + j;
                grid.values[0][flat] = (x - t).sin();
                grid.values[2][flat] = -(x - t).cos();
                grid.values[3][flat] = -(x - t).cos();
            }
        }
        let report = hdw_residuals_strings(&grid, &|_, _, _| 0.0);
        assert!(report.max() < 1e-3, "max residual {}", report.max());
    }

    #[test]
    fn noise_grid_is_flagged() {
        let nt = 32;
        let nx = 32;
        let mut grid = SectionGrid {
            param_names: vec!["t".into(), "x".into()],
            shape: vec![nt, nx],
            origin: vec![0.0, 0.0],
            spacing: vec![0.01, 0.01],
            boundary: Boundary::Periodic,
            field_names: vec![
                "q1".into(), "q2".into(), "p1_t".into(), "p1_x".into(), "p2_t".into(), "p2_x".into(),
            ],
            values: vec![vec![0.0; nt * nx]; 6],
        };
        // deterministic pseudo-noise
        let mut state = 0x2545F4914F6CDD1Du64;
        for v in grid.values.iter_mut() {
            for x in v.iter_mut() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *x = (state % 2000) as f64 / 1000.0 - 1.0;
            }
        }
        let report = hdw_residuals_strings(&grid, &|_, _, _| 0.0);
        assert!(report.max() > 10.0);
    }

    #[test]
    fn divergence_law_shrinks_second_order() {
        // C = q sin(x): the coupling cancels in the summed momentum law
        let source = |scale: f64| {
            Arc::new(move |_t: f64, x: f64, q: &[f64]| {
                let _ = q;
                vec![-x.sin() * scale, x.sin() * scale]
            })
        };
        let make = |n: usize| CoupledWaveProblem {
            n_fields: 2,
            t_span: (0.0, 2.0),
            x_span: (0.0, PI2),
            nt: n / 2 + 1,
            nx: n + 1,
            boundary: Boundary::Periodic,
            init_value: vec![Arc::new(|x: f64| x.sin()), Arc::new(|x: f64| (2.0 * x).cos())],
            init_velocity: vec![Arc::new(|x: f64| -x.cos()), Arc::new(|_| 0.0)],
            source: source(1.0),
        };
        let r1 = divergence_law_residual(&solve_strings(&make(100)));
        let r2 = divergence_law_residual(&solve_strings(&make(200)));
        assert!(r1 / r2 > 3.0, "ratio {}", r1 / r2);
    }

    #[test]
    fn membrane_ode_matches_closed_form() {
        // f = 1, c = 1: zeta = -r^2/4, p^r = r^2/2
        let sol = solve_reduced_membrane_ode(&|_| 1.0, 1.0, (1.0, 2.0), 256, -0.25, 0.5).unwrap();
        let last = sol.zeta.last().unwrap();
        assert!((last + 1.0).abs() < 1e-8, "zeta(2) = {last}");
        assert!((sol.p_r.last().unwrap() - 2.0).abs() < 1e-8);
        assert!(radial_pde_residual(&sol, &|_| 1.0, 1.0) < 1e-6);
    }

    #[test]
    fn membrane_force_free_is_constant() {
        let sol = solve_reduced_membrane_ode(&|_| 0.0, 1.0, (0.5, 3.0), 64, 0.3, 0.0).unwrap();
        assert!(sol.zeta.iter().all(|z| (z - 0.3).abs() < 1e-14));
    }

    #[test]
    fn membrane_domain_must_avoid_origin() {
        assert!(solve_reduced_membrane_ode(&|_| 1.0, 1.0, (-1.0, 2.0), 16, 0.0, 0.0).is_err());
    }

    #[test]
    fn minimal_norm_gauge_matches_evolution_field_for_k1() {
        let chart = ChartBox::new(&["t", "q", "p"], &[(0.0, 2.0), (-5.0, 5.0), (-5.0, 5.0)])
            .unwrap()
            .with_darboux(crate::chart::DarbouxTags { base: vec![0], fields: vec![1], momenta: vec![vec![2]] });
        let tau = FormBuilder::new(&chart, 1, 1).constant(0, &["t"], 1.0).build();
        let omega = FormBuilder::new(&chart, 2, 1).constant(0, &["q", "p"], 1.0).build();
        let s = KPolycosymplecticStructure::new(&chart, 1, tau.clone(), omega.clone()).unwrap();
        let h = SmoothField::exact_scalar(3, |x| x[2] * x[2] * 0.5 + x[1].sin() * x[0]);
        let sys = HamiltonianSystem::new(s, h.clone(), GaugeChoice::MinimalNorm).unwrap();
        let cos = crate::structure::CosymplecticStructure::new(&chart, tau, omega).unwrap();
        let ef = crate::structure::evolution_field(&cos, &h);
        for x in crate::chart::halton_points(&chart, 25, 3) {
            let kv = sys.solve_kvector(&x).unwrap();
            let ev = ef.eval(&x);
            for i in 0..3 {
                assert!((kv[i] - ev[i]).abs() < 1e-9, "slot {i}: {} vs {}", kv[i], ev[i]);
            }
        }
    }

    #[test]
    fn darboux_minimal_norm_splits_trace_equally() {
        // n = 1, k = 2 toy system
        let chart = ChartBox::new(
            &["t1", "t2", "q", "p1", "p2"],
            &[(0.0, 1.0), (0.0, 1.0), (-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
        )
        .unwrap()
        .with_darboux(crate::chart::DarbouxTags { base: vec![0, 1], fields: vec![2], momenta: vec![vec![3, 4]] });
        let tau = FormBuilder::new(&chart, 1, 2)
            .constant(0, &["t1"], 1.0)
            .constant(1, &["t2"], 1.0)
            .build();
        let omega = FormBuilder::new(&chart, 2, 2)
            .constant(0, &["q", "p1"], 1.0)
            .constant(1, &["q", "p2"], 1.0)
            .build();
        let s = KPolycosymplecticStructure::new(&chart, 2, tau, omega).unwrap();
        let h = SmoothField::exact_scalar(5, |x| {
            (x[3] * x[3] + x[4] * x[4]) * 0.5 + x[2] * x[2] * x[2]
        });
        let sys = HamiltonianSystem::new(s, h, GaugeChoice::MinimalNorm).unwrap();
        let family = darboux_family(&sys).unwrap();
        let x = [0.2, 0.4, 0.9, 0.3, -0.7];
        let kv = sys.solve_kvector(&x).unwrap();
        // free coefficients split -dh/dq = -3 q^2 equally
        let expect = -3.0 * 0.9 * 0.9 / 2.0;
        assert!((kv[3] - expect).abs() < 1e-10); // (X_1)^{p1}
        assert!((kv[5 + 4] - expect).abs() < 1e-10); // (X_2)^{p2}
        assert!(kv[4].abs() < 1e-10 && kv[5 + 3].abs() < 1e-10); // off-diagonal
        let field = sys.kvector_field();
        let pts = vec![x.to_vec()];
        assert!(family.fixed_residual(&field, &pts) < 1e-10);
        assert!(family.trace_residual(&field, &pts) < 1e-10);
        let mm = family.minimal_norm_momentum_coeffs(&x);
        assert!((mm[0][(0, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn constant_kvector_is_integrable() {
        let chart = ChartBox::new(&["a", "b"], &[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let f = SmoothField::constant(2, vec![1.0, 0.0, 0.0, 1.0]);
        let kv = KVectorFieldRep::new(&chart, 2, f).unwrap();
        assert!(check_integrability(&kv, 10, 1).unwrap() < 1e-14);
    }
}
