//! Catalog of fully specified worked examples, each a complete reduction
//! instance with closed-form coefficient data and expected reduced output.
//!
//! The catalog ships four instances: the two coupled vibrating strings
//! (k = 2, dimension 8), a product of two cosymplectic factors (k = 2,
//! dimension 10), the vibrating membrane in polar coordinates (k = 3,
//! dimension 7, reduced through the space-time pipeline), and a k = 1
//! Darboux sandbox carrying the translation action with momentum map
//! `J = (p, -q)` whose co-adjoint cocycle is nonzero.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{ChartBox, DarbouxTags};
use crate::dual::Dual;
use crate::dynamics::{GaugeChoice, HamiltonianSystem};
use crate::error::{Error, Result};
use crate::field::SmoothField;
use crate::form::{FormBuilder, KVectorFieldRep, VValuedForm, VectorFieldRep};
use crate::group::{ActionModel, LieGroupModel, MomentumMapModel};
use crate::reduction::{ExpectedReduced, LevelChart, LiftFn, MuData, QuotientChart, SpacetimeData};
use crate::structure::{CosymplecticStructure, KPolycosymplecticStructure};

/// Coupling function `C(t, x, q)` between the two strings.
#[derive(Clone)]
pub struct Coupling {
    pub name: String,
    pub c: Arc<dyn Fn(Dual, Dual, Dual) -> Dual + Send + Sync>,
    pub dcdq: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    /// Whether the reference-gauge two-vector field is integrable for this
    /// coupling (`C = q F(x) + Fhat(t, x)` with vanishing free
    /// coefficients).
    pub integrable_gauge: bool,
}

impl Coupling {
    pub fn zero() -> Coupling {
        Coupling {
            name: "zero".into(),
            c: Arc::new(|_, _, _| Dual::ZERO),
            dcdq: Arc::new(|_, _, _| 0.0),
            integrable_gauge: true,
        }
    }

    /// `C = q sin(x)`.
    pub fn q_sin_x() -> Coupling {
        Coupling {
            name: "q_sin_x".into(),
            c: Arc::new(|_t, x, q| q * x.sin()),
            dcdq: Arc::new(|_t, x, _q| x.sin()),
            integrable_gauge: true,
        }
    }

    /// `C = q sin(x) + 0.2 t x`; same linear force, explicit time
    /// dependence so the Reeb derivatives of `h` are nonzero.
    pub fn q_sin_x_plus_tx() -> Coupling {
        Coupling {
            name: "q_sin_x_plus_tx".into(),
            c: Arc::new(|t, x, q| q * x.sin() + t * x * 0.2),
            dcdq: Arc::new(|_t, x, _q| x.sin()),
            integrable_gauge: true,
        }
    }

    /// `C = q^2 x`; the reference-gauge field is not integrable.
    pub fn q_squared_x() -> Coupling {
        Coupling {
            name: "q_squared_x".into(),
            c: Arc::new(|_t, x, q| q * q * x),
            dcdq: Arc::new(|_t, x, q| 2.0 * q * x),
            integrable_gauge: false,
        }
    }

    pub fn by_name(name: &str) -> Result<Coupling> {
        match name {
            "zero" => Ok(Coupling::zero()),
            "q_sin_x" => Ok(Coupling::q_sin_x()),
            "q_sin_x_plus_tx" => Ok(Coupling::q_sin_x_plus_tx()),
            "q_squared_x" => Ok(Coupling::q_squared_x()),
            other => Err(Error::InvalidConfig(format!("unknown coupling '{other}'"))),
        }
    }
}

/// Builds the level-set, quotient and expected data for one momentum value.
pub type MuBuilder = Arc<dyn Fn(&[f64]) -> Result<MuData> + Send + Sync>;

/// A complete worked case: structure, action, momentum map, level and
/// quotient charts per momentum value, Hamiltonian, expected reduced data.
pub struct ReductionInstance {
    pub name: String,
    pub summary: String,
    pub k: usize,
    pub structure: KPolycosymplecticStructure,
    pub action: ActionModel,
    pub momentum: Option<MomentumMapModel>,
    pub hamiltonian: SmoothField,
    /// Number of scalar entries expected in a user-supplied `mu`.
    pub mu_len: usize,
    mu_builder: Option<MuBuilder>,
    /// The gauge choice exhibited in the worked example, when one exists.
    pub paper_gauge: Option<KVectorFieldRep>,
    pub spacetime: Option<SpacetimeData>,
    /// Present for k = 1 instances.
    pub cosymplectic: Option<CosymplecticStructure>,
    /// Strings-only coupling data used by the grid solvers.
    pub coupling: Option<Coupling>,
    /// Chart indices spanning the adapted polarization (momentum
    /// directions); stored as metadata only, no integrability checker.
    pub polarization: Option<Vec<usize>>,
    /// Named fields exercised by the derivative-contract suite.
    pub contract_fields: Vec<(String, SmoothField)>,
}

impl ReductionInstance {
    pub fn mu_data(&self, mu: &[f64]) -> Result<MuData> {
        let builder = self
            .mu_builder
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("instance '{}' has no momentum reduction route", self.name)))?;
        if mu.len() != self.mu_len {
            return Err(Error::InvalidConfig(format!(
                "mu has {} entries, instance '{}' expects {}",
                mu.len(),
                self.name,
                self.mu_len
            )));
        }
        builder(mu)
    }

    pub fn hamiltonian_system(&self, gauge: GaugeChoice) -> Result<HamiltonianSystem> {
        HamiltonianSystem::new(self.structure.clone(), self.hamiltonian.clone(), gauge)
    }
}

pub fn list_instances() -> Vec<(String, String)> {
    vec![
        (
            "cosymplectic-darboux".into(),
            "k=1 sandbox on R x T*R: Darboux cosymplectic structure, R^2 translation action with the nonzero cocycle sigma(a,b) = (b,-a)".into(),
        ),
        (
            "coupled-strings".into(),
            "two coupled vibrating strings: k=2 on dimension 8, J = (p1_t+p2_t, p1_x+p2_x), translation symmetry along q1+q2".into(),
        ),
        (
            "product-cosymplectic".into(),
            "product of two cosymplectic factors: k=2 on dimension 10, componentwise momentum map".into(),
        ),
        (
            "membrane-polar".into(),
            "vibrating membrane with radial force in polar coordinates: k=3 on dimension 7, (t,theta)-translation symmetry, space-time reduction to (dr, dzeta^dp_r)".into(),
        ),
    ]
}

pub fn get_instance(name: &str) -> Result<ReductionInstance> {
    match name {
        "cosymplectic-darboux" => Ok(darboux_instance()),
        "coupled-strings" => Ok(strings_instance(Coupling::q_sin_x())),
        "product-cosymplectic" => Ok(product_instance()),
        "membrane-polar" => Ok(membrane_instance(1.0)),
        other => Err(Error::UnknownInstance(other.into())),
    }
}

/// The invalid pair on R^4 (`tau^1 = dy`, `tau^2 = dx`,
/// `omega^1 = dx ^ dw`, `omega^2 = dy ^ dv`): the joint omega-kernel has
/// rank 0, not 2, so structure verification must fail.
pub fn counterexample_r4() -> KPolycosymplecticStructure {
    let chart = ChartBox::new(
        &["x", "y", "w", "v"],
        &[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
    )
    .expect("chart");
    let tau = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["y"], 1.0)
        .constant(1, &["x"], 1.0)
        .build();
    let omega = FormBuilder::new(&chart, 2, 2)
        .constant(0, &["x", "w"], 1.0)
        .constant(1, &["y", "v"], 1.0)
        .build();
    KPolycosymplecticStructure::new(&chart, 2, tau, omega).expect("forms assemble")
}

fn identity_map(dim: usize) -> SmoothField {
    SmoothField::identity(dim)
}

// ---------------------------------------------------------------------------
// cosymplectic-darboux
// ---------------------------------------------------------------------------

fn darboux_instance() -> ReductionInstance {
    let chart = ChartBox::new(&["t", "q", "p"], &[(0.0, 2.0), (-5.0, 5.0), (-5.0, 5.0)])
        .expect("chart")
        .with_darboux(DarbouxTags { base: vec![0], fields: vec![1], momenta: vec![vec![2]] });
    let tau = FormBuilder::new(&chart, 1, 1).constant(0, &["t"], 1.0).build();
    let omega = FormBuilder::new(&chart, 2, 1).constant(0, &["q", "p"], 1.0).build();
    let structure = KPolycosymplecticStructure::new(&chart, 1, tau.clone(), omega.clone()).expect("structure");
    let cosym = CosymplecticStructure::new(&chart, tau, omega).expect("cosymplectic");

    let generators = vec![
        VectorFieldRep::coordinate(&chart, "q"),
        VectorFieldRep::coordinate(&chart, "p"),
    ];
    let action = ActionModel::new(LieGroupModel::abelian(2), &chart, |g| {
        let (a, b) = (g[0], g[1]);
        SmoothField::exact(3, 3, move |x| vec![x[0], x[1] + a, x[2] + b])
    }, generators);

    let momentum = MomentumMapModel::new(1, SmoothField::exact(3, 2, |x| vec![x[2], Dual::ZERO - x[1]]));
    let hamiltonian = SmoothField::exact_scalar(3, |x| x[2] * x[2] * 0.5);

    let mu_builder: MuBuilder = Arc::new(move |mu: &[f64]| {
        let (m1, m2) = (mu[0], mu[1]);
        let level_chart = ChartBox::new(&["t"], &[(0.0, 2.0)])?;
        let embed = SmoothField::exact(1, 3, move |y| {
            vec![y[0], Dual::constant(-m2), Dual::constant(m1)]
        });
        let coords = SmoothField::exact(3, 1, |x| vec![x[0]]);
        // the Delta-isotropy of mu is trivial: sigma(a,b) = (b,-a) vanishes
        // only at the identity, so the quotient chart is the level chart
        let quotient = QuotientChart {
            chart: Arc::clone(&level_chart),
            project: identity_map(1),
            section: identity_map(1),
            section_alt: identity_map(1),
        };
        let red_tau = FormBuilder::new(&level_chart, 1, 1).constant(0, &["t"], 1.0).build();
        let red_omega = VValuedForm::zero(&level_chart, 2, 1);
        let red_h = SmoothField::exact_scalar(1, move |_| Dual::constant(m1 * m1 * 0.5));
        Ok(MuData {
            mu: DMatrix::from_row_slice(1, 2, &[m1, m2]),
            level: LevelChart { chart: level_chart, embed, coords },
            quotient,
            isotropy: vec![],
            isotropy_alpha: vec![vec![]],
            expected: Some(ExpectedReduced { tau: red_tau, omega: red_omega, hamiltonian: red_h }),
        })
    });

    let contract_fields = vec![
        ("hamiltonian".to_string(), hamiltonian.clone()),
        ("momentum_map".to_string(), momentum.map.clone()),
        ("tau".to_string(), structure.tau.coeffs().clone()),
        ("omega".to_string(), structure.omega.coeffs().clone()),
        ("phi_sample".to_string(), action.phi(&[0.4, -0.8])),
    ];

    ReductionInstance {
        name: "cosymplectic-darboux".into(),
        summary: list_instances()[0].1.clone(),
        k: 1,
        structure,
        action,
        momentum: Some(momentum),
        hamiltonian,
        mu_len: 2,
        mu_builder: Some(mu_builder),
        paper_gauge: None,
        spacetime: None,
        cosymplectic: Some(cosym),
        coupling: None,
        polarization: Some(vec![2]),
        contract_fields,
    }
}

// ---------------------------------------------------------------------------
// coupled-strings
// ---------------------------------------------------------------------------

pub fn strings_instance(coupling: Coupling) -> ReductionInstance {
    let names = ["t", "x", "q1", "q2", "p1_t", "p1_x", "p2_t", "p2_x"];
    let bounds = [
        (0.0, 2.0),
        (0.0, std::f64::consts::TAU),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
    ];
    let chart = ChartBox::new(&names, &bounds)
        .expect("chart")
        .with_darboux(DarbouxTags {
            base: vec![0, 1],
            fields: vec![2, 3],
            momenta: vec![vec![4, 5], vec![6, 7]],
        });
    let tau = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["t"], 1.0)
        .constant(1, &["x"], 1.0)
        .build();
    let omega = FormBuilder::new(&chart, 2, 2)
        .constant(0, &["q1", "p1_t"], 1.0)
        .constant(0, &["q2", "p2_t"], 1.0)
        .constant(1, &["q1", "p1_x"], 1.0)
        .constant(1, &["q2", "p2_x"], 1.0)
        .build();
    let structure = KPolycosymplecticStructure::new(&chart, 2, tau, omega).expect("structure");

    let gen = VectorFieldRep::constant(&chart, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let action = ActionModel::new(LieGroupModel::abelian(1), &chart, |g| {
        let lambda = g[0];
        SmoothField::exact(8, 8, move |x| {
            vec![x[0], x[1], x[2] + lambda, x[3] + lambda, x[4], x[5], x[6], x[7]]
        })
    }, vec![gen]);

    let momentum = MomentumMapModel::new(
        2,
        SmoothField::exact(8, 2, |x| vec![x[4] + x[6], x[5] + x[7]]),
    );

    let c = Arc::clone(&coupling.c);
    let hamiltonian = SmoothField::exact_scalar(8, move |x| {
        let kinetic = (x[4] * x[4] + x[6] * x[6] - x[5] * x[5] - x[7] * x[7]) * 0.5;
        kinetic + c(x[0], x[1], x[2] - x[3])
    });

    // reference gauge: free momentum coefficients zero, the forced terms in the
    // p1_x / p2_x slots of the second component
    let dcdq = Arc::clone(&coupling.dcdq);
    let gauge_field = SmoothField::numeric(8, 16, move |x| {
        let force = dcdq(x[0], x[1], x[2] - x[3]);
        vec![
            1.0, 0.0, x[4], x[6], 0.0, 0.0, 0.0, 0.0, // X_1
            0.0, 1.0, -x[5], -x[7], 0.0, -force, 0.0, force, // X_2
        ]
    });
    let paper_gauge = KVectorFieldRep::new(&chart, 2, gauge_field).expect("reference gauge");

    let c_for_expected = Arc::clone(&coupling.c);
    let mu_builder: MuBuilder = Arc::new(move |mu: &[f64]| {
        let (m1, m2) = (mu[0], mu[1]);
        let level_chart = ChartBox::new(
            &["t", "x", "q1", "q2", "p1_t", "p1_x"],
            &[
                (0.0, 2.0),
                (0.0, std::f64::consts::TAU),
                (-5.0, 5.0),
                (-5.0, 5.0),
                (-5.0, 5.0),
                (-5.0, 5.0),
            ],
        )?;
        let embed = SmoothField::exact(6, 8, move |y| {
            vec![
                y[0],
                y[1],
                y[2],
                y[3],
                y[4],
                y[5],
                Dual::constant(m1) - y[4],
                Dual::constant(m2) - y[5],
            ]
        });
        let coords = SmoothField::exact(8, 6, |x| vec![x[0], x[1], x[2], x[3], x[4], x[5]]);
        let red_chart = ChartBox::new(
            &["t", "x", "q", "p_t", "p_x"],
            &[
                (0.0, 2.0),
                (0.0, std::f64::consts::TAU),
                (-8.0, 8.0),
                (-8.0, 8.0),
                (-8.0, 8.0),
            ],
        )?;
        // quotient coordinates q = q1 - q2, p = p1 - p2
        let project = SmoothField::exact(6, 5, move |y| {
            vec![
                y[0],
                y[1],
                y[2] - y[3],
                y[4] * 2.0 - m1,
                y[5] * 2.0 - m2,
            ]
        });
        let section = SmoothField::exact(5, 6, move |z| {
            vec![
                z[0],
                z[1],
                z[2],
                Dual::ZERO,
                (z[3] + m1) * 0.5,
                (z[4] + m2) * 0.5,
            ]
        });
        let section_alt = SmoothField::exact(5, 6, move |z| {
            vec![
                z[0],
                z[1],
                z[2] + 0.7,
                Dual::constant(0.7),
                (z[3] + m1) * 0.5,
                (z[4] + m2) * 0.5,
            ]
        });
        let red_tau = FormBuilder::new(&red_chart, 1, 2)
            .constant(0, &["t"], 1.0)
            .constant(1, &["x"], 1.0)
            .build();
        let red_omega = FormBuilder::new(&red_chart, 2, 2)
            .constant(0, &["q", "p_t"], 0.5)
            .constant(1, &["q", "p_x"], 0.5)
            .build();
        let c = Arc::clone(&c_for_expected);
        let red_h = SmoothField::exact_scalar(5, move |z| {
            let quad = (z[3] * z[3] - z[4] * z[4]) * 0.25 + (m1 * m1 - m2 * m2) * 0.25;
            quad + c(z[0], z[1], z[2])
        });
        Ok(MuData {
            mu: DMatrix::from_row_slice(2, 1, &[m1, m2]),
            level: LevelChart { chart: level_chart, embed, coords },
            quotient: QuotientChart { chart: red_chart, project, section, section_alt },
            isotropy: vec![0],
            isotropy_alpha: vec![vec![0], vec![0]],
            expected: Some(ExpectedReduced { tau: red_tau, omega: red_omega, hamiltonian: red_h }),
        })
    });

    let contract_fields = vec![
        ("hamiltonian".to_string(), hamiltonian.clone()),
        ("momentum_map".to_string(), momentum.map.clone()),
        ("tau".to_string(), structure.tau.coeffs().clone()),
        ("omega".to_string(), structure.omega.coeffs().clone()),
        ("phi_sample".to_string(), action.phi(&[0.6])),
        ("paper_gauge".to_string(), paper_gauge.field().clone()),
    ];

    ReductionInstance {
        name: "coupled-strings".into(),
        summary: list_instances()[1].1.clone(),
        k: 2,
        structure,
        action,
        momentum: Some(momentum),
        hamiltonian,
        mu_len: 2,
        mu_builder: Some(mu_builder),
        paper_gauge: Some(paper_gauge),
        spacetime: None,
        cosymplectic: None,
        coupling: Some(coupling),
        polarization: Some(vec![4, 5, 6, 7]),
        contract_fields,
    }
}

// ---------------------------------------------------------------------------
// product-cosymplectic
// ---------------------------------------------------------------------------

fn product_instance() -> ReductionInstance {
    let names = ["t1", "a1", "b1", "pa1", "pb1", "t2", "a2", "b2", "pa2", "pb2"];
    let mut bounds = vec![(0.0, 2.0)];
    bounds.extend(vec![(-4.0, 4.0); 4]);
    bounds.push((0.0, 2.0));
    bounds.extend(vec![(-4.0, 4.0); 4]);
    let chart = ChartBox::new(&names, &bounds).expect("chart");
    let tau = FormBuilder::new(&chart, 1, 2)
        .constant(0, &["t1"], 1.0)
        .constant(1, &["t2"], 1.0)
        .build();
    let omega = FormBuilder::new(&chart, 2, 2)
        .constant(0, &["a1", "pa1"], 1.0)
        .constant(0, &["b1", "pb1"], 1.0)
        .constant(1, &["a2", "pa2"], 1.0)
        .constant(1, &["b2", "pb2"], 1.0)
        .build();
    let structure = KPolycosymplecticStructure::new(&chart, 2, tau, omega).expect("structure");

    let generators = vec![
        VectorFieldRep::coordinate(&chart, "a1"),
        VectorFieldRep::coordinate(&chart, "a2"),
    ];
    let action = ActionModel::new(LieGroupModel::abelian(2), &chart, |g| {
        let (l1, l2) = (g[0], g[1]);
        SmoothField::exact(10, 10, move |x| {
            vec![x[0], x[1] + l1, x[2], x[3], x[4], x[5], x[6] + l2, x[7], x[8], x[9]]
        })
    }, generators);

    // componentwise momentum map: J^1 = (pa1, 0), J^2 = (0, pa2)
    let momentum = MomentumMapModel::new(
        2,
        SmoothField::exact(10, 4, |x| vec![x[3], Dual::ZERO, Dual::ZERO, x[8]]),
    );

    let hamiltonian = SmoothField::exact_scalar(10, |x| {
        (x[3] * x[3] + x[4] * x[4] + x[8] * x[8] + x[9] * x[9]) * 0.5
            + x[2].sin()
            + x[7] * x[7] * 0.5
    });

    let mu_builder: MuBuilder = Arc::new(move |mu: &[f64]| {
        let (m1, m2) = (mu[0], mu[1]);
        let level_chart = ChartBox::new(
            &["t1", "a1", "b1", "pb1", "t2", "a2", "b2", "pb2"],
            &[
                (0.0, 2.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (0.0, 2.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
            ],
        )?;
        let embed = SmoothField::exact(8, 10, move |y| {
            vec![
                y[0],
                y[1],
                y[2],
                Dual::constant(m1),
                y[3],
                y[4],
                y[5],
                y[6],
                Dual::constant(m2),
                y[7],
            ]
        });
        let coords = SmoothField::exact(10, 8, |x| {
            vec![x[0], x[1], x[2], x[4], x[5], x[6], x[7], x[9]]
        });
        let red_chart = ChartBox::new(
            &["t1", "b1", "pb1", "t2", "b2", "pb2"],
            &[
                (0.0, 2.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
                (0.0, 2.0),
                (-4.0, 4.0),
                (-4.0, 4.0),
            ],
        )?;
        let project = SmoothField::exact(8, 6, |y| {
            vec![y[0], y[2], y[3], y[4], y[6], y[7]]
        });
        let section = SmoothField::exact(6, 8, |z| {
            vec![z[0], Dual::ZERO, z[1], z[2], z[3], Dual::ZERO, z[4], z[5]]
        });
        let section_alt = SmoothField::exact(6, 8, |z| {
            vec![z[0], Dual::constant(0.5), z[1], z[2], z[3], Dual::constant(-0.3), z[4], z[5]]
        });
        let red_tau = FormBuilder::new(&red_chart, 1, 2)
            .constant(0, &["t1"], 1.0)
            .constant(1, &["t2"], 1.0)
            .build();
        let red_omega = FormBuilder::new(&red_chart, 2, 2)
            .constant(0, &["b1", "pb1"], 1.0)
            .constant(1, &["b2", "pb2"], 1.0)
            .build();
        let red_h = SmoothField::exact_scalar(6, move |z| {
            (z[2] * z[2] + z[5] * z[5]) * 0.5 + z[1].sin() + z[4] * z[4] * 0.5
                + Dual::constant((m1 * m1 + m2 * m2) * 0.5)
        });
        Ok(MuData {
            mu: DMatrix::from_row_slice(2, 2, &[m1, 0.0, 0.0, m2]),
            level: LevelChart { chart: level_chart, embed, coords },
            quotient: QuotientChart { chart: red_chart, project, section, section_alt },
            isotropy: vec![0, 1],
            isotropy_alpha: vec![vec![0, 1], vec![0, 1]],
            expected: Some(ExpectedReduced { tau: red_tau, omega: red_omega, hamiltonian: red_h }),
        })
    });

    let contract_fields = vec![
        ("hamiltonian".to_string(), hamiltonian.clone()),
        ("momentum_map".to_string(), momentum.map.clone()),
        ("tau".to_string(), structure.tau.coeffs().clone()),
        ("omega".to_string(), structure.omega.coeffs().clone()),
        ("phi_sample".to_string(), action.phi(&[0.3, -0.9])),
    ];

    ReductionInstance {
        name: "product-cosymplectic".into(),
        summary: list_instances()[2].1.clone(),
        k: 2,
        structure,
        action,
        momentum: Some(momentum),
        hamiltonian,
        mu_len: 2,
        mu_builder: Some(mu_builder),
        paper_gauge: None,
        spacetime: None,
        cosymplectic: None,
        coupling: None,
        polarization: Some(vec![3, 4, 8, 9]),
        contract_fields,
    }
}

// ---------------------------------------------------------------------------
// membrane-polar
// ---------------------------------------------------------------------------

/// Radial force profile; the default instance uses `f(r) = force_scale`.
pub fn membrane_instance(force_scale: f64) -> ReductionInstance {
    let c_wave = 1.0f64;
    let names = ["t", "r", "theta", "zeta", "p_t", "p_r", "p_theta"];
    let bounds = [
        (0.0, 2.0),
        (0.5, 3.0),
        (0.0, std::f64::consts::TAU),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
        (-5.0, 5.0),
    ];
    let chart = ChartBox::new(&names, &bounds)
        .expect("chart")
        .with_darboux(DarbouxTags {
            base: vec![0, 1, 2],
            fields: vec![3],
            momenta: vec![vec![4, 5, 6]],
        });
    let tau = FormBuilder::new(&chart, 1, 3)
        .constant(0, &["t"], 1.0)
        .constant(1, &["r"], 1.0)
        .constant(2, &["theta"], 1.0)
        .build();
    let omega = FormBuilder::new(&chart, 2, 3)
        .constant(0, &["zeta", "p_t"], 1.0)
        .constant(1, &["zeta", "p_r"], 1.0)
        .constant(2, &["zeta", "p_theta"], 1.0)
        .build();
    let structure = KPolycosymplecticStructure::new(&chart, 3, tau, omega).expect("structure");

    let fs = force_scale;
    let hamiltonian = SmoothField::exact_scalar(7, move |x| {
        let r = x[1];
        let half_over_r = r.recip() * 0.5;
        let c2 = c_wave * c_wave;
        half_over_r * (x[4] * x[4] - x[5] * x[5] * (1.0 / c2) - r * r * x[6] * x[6] * (1.0 / c2))
            - r * x[3] * fs
    });

    let generators = vec![
        VectorFieldRep::coordinate(&chart, "t"),
        VectorFieldRep::coordinate(&chart, "theta"),
    ];
    let action = ActionModel::new(LieGroupModel::abelian(2), &chart, |g| {
        let (l1, l2) = (g[0], g[1]);
        SmoothField::exact(7, 7, move |x| {
            vec![x[0] + l1, x[1], x[2] + l2, x[3], x[4], x[5], x[6]]
        })
    }, generators);

    // reference gauge three-vector field
    let gauge_field = SmoothField::exact(7, 21, move |x| {
        let r = x[1];
        let inv_r = r.recip();
        let c2inv = 1.0 / (c_wave * c_wave);
        let mut out = vec![Dual::ZERO; 21];
        // X_1 = d/dt + (p_t / r) d/dzeta
        out[0] = Dual::constant(1.0);
        out[3] = x[4] * inv_r;
        // X_2 = d/dr - (p_r / (c^2 r)) d/dzeta + r f(r) d/dp_r
        out[7 + 1] = Dual::constant(1.0);
        out[7 + 3] = Dual::ZERO - x[5] * inv_r * c2inv;
        out[7 + 5] = x[1] * fs;
        // X_3 = d/dtheta - (r p_theta / c^2) d/dzeta
        out[14 + 2] = Dual::constant(1.0);
        out[14 + 3] = Dual::ZERO - x[1] * x[6] * c2inv;
        out
    });
    let paper_gauge = KVectorFieldRep::new(&chart, 3, gauge_field).expect("reference gauge");

    let red_chart = ChartBox::new(
        &["r", "zeta", "p_r"],
        &[(0.5, 3.0), (-5.0, 5.0), (-5.0, 5.0)],
    )
    .expect("reduced chart");
    let red_tau = FormBuilder::new(&red_chart, 1, 1).constant(0, &["r"], 1.0).build();
    let red_omega = FormBuilder::new(&red_chart, 2, 1).constant(0, &["zeta", "p_r"], 1.0).build();
    let projection = SmoothField::exact(7, 3, |x| vec![x[1], x[3], x[5]]);
    let lift: LiftFn = Arc::new(|z, lambda| {
        vec![1.0, z[0], std::f64::consts::PI, z[1], lambda[0], z[2], lambda[1]]
    });
    // tau-combination vanishing on span(d/dt, d/dtheta) is dr; the reordered
    // components are (X_2, X_1, X_3)
    let spacetime = SpacetimeData {
        ell: 1,
        c_matrix: DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]),
        component_order: vec![1, 0, 2],
        suppressed_momenta: vec![4, 6],
        suppressed_base: vec![0, 2],
        projection,
        reduced_chart: Arc::clone(&red_chart),
        lift,
        reduced_tau: red_tau,
        reduced_omega: red_omega,
        reduced_phi: Arc::new(|_g| SmoothField::identity(3)),
    };

    let contract_fields = vec![
        ("hamiltonian".to_string(), hamiltonian.clone()),
        ("tau".to_string(), structure.tau.coeffs().clone()),
        ("omega".to_string(), structure.omega.coeffs().clone()),
        ("phi_sample".to_string(), action.phi(&[0.2, 0.9])),
        ("paper_gauge".to_string(), paper_gauge.field().clone()),
    ];

    ReductionInstance {
        name: "membrane-polar".into(),
        summary: list_instances()[3].1.clone(),
        k: 3,
        structure,
        action,
        momentum: None,
        hamiltonian,
        mu_len: 2,
        mu_builder: None,
        paper_gauge: Some(paper_gauge),
        spacetime: Some(spacetime),
        cosymplectic: None,
        coupling: None,
        polarization: Some(vec![4, 5, 6]),
        contract_fields,
    }
}
