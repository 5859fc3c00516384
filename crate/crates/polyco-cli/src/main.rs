//! Batch command-line front end: verification, HDW solving, reduction and
//! full-vs-reduced comparison over the instance catalog or user structure
//! configs.
//!
//! Exit codes: 0 on success, 1 when a check or comparison fails, 2 on usage
//! or configuration errors.

mod plot;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use polyco::chart::halton_points;
use polyco::compare::{compare_membrane, compare_strings};
use polyco::config::{export_structure, parse_structure, ConfigFile};
use polyco::dynamics::{radial_pde_residual, solve_reduced_membrane_ode, GaugeChoice};
use polyco::group::{verify_action_invariance, verify_momentum_map, AffineAction};
use polyco::instances::{get_instance, list_instances, strings_instance, Coupling, ReductionInstance};
use polyco::reduction::{check_reduction_conditions, reduce, reduce_dynamics, spacetime_reduce};
use polyco::report::VerificationReport;
use polyco::structure::{verify_structure, GeometricStructure};
use polyco::Error;

#[derive(Clone, Debug, PartialEq)]
enum Gauge {
    Minimal,
    Paper,
}

#[derive(Clone, Debug)]
struct RunConfig {
    command: String,
    instance: Option<String>,
    config_path: Option<PathBuf>,
    mu: Option<Vec<f64>>,
    samples: usize,
    tol: f64,
    seed: u64,
    grid: (usize, usize),
    gauge: Gauge,
    out_dir: Option<PathBuf>,
    svg: bool,
    coupling: String,
    /// Comparison gap bound.
    bound: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            instance: None,
            config_path: None,
            mu: None,
            samples: 200,
            tol: 1e-9,
            seed: 1,
            grid: (201, 201),
            gauge: Gauge::Minimal,
            out_dir: None,
            svg: false,
            coupling: "q_sin_x".into(),
            bound: 5e-3,
        }
    }
}

fn usage() -> String {
    "usage: polyco <verify|solve|reduce|compare|list> [flags]\n\
     flags:\n\
       --instance NAME      catalog instance (see `polyco list`)\n\
       --config PATH        structured text config file\n\
       --mu A,B             momentum value components\n\
       --grid NxM           grid nodes for solvers (>= 8 each)\n\
       --tol T              verification tolerance / comparison bound\n\
       --samples N          sample count for pointwise checks (>= 1)\n\
       --seed S             Halton sequence offset\n\
       --gauge minimal|paper\n\
       --coupling NAME      strings coupling preset (zero, q_sin_x, q_sin_x_plus_tx, q_squared_x)\n\
       --out DIR            write reports, CSV grids and SVG plots here\n\
       --svg                emit SVG plots alongside CSV output\n"
        .to_string()
}

fn parse_args(args: &[String]) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if args.is_empty() {
        return Err(usage());
    }
    cfg.command = args[0].clone();
    let mut i = 1;
    while i < args.len() {
        let take = |i: &mut usize| -> Result<String, String> {
            *i += 1;
            args.get(*i).cloned().ok_or_else(|| format!("flag {} needs a value", args[*i - 1]))
        };
        match args[i].as_str() {
            "--instance" => cfg.instance = Some(take(&mut i)?),
            "--config" => cfg.config_path = Some(PathBuf::from(take(&mut i)?)),
            "--mu" => {
                let raw = take(&mut i)?;
                let mu: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
                cfg.mu = Some(mu.map_err(|_| format!("bad --mu value '{raw}'"))?);
            }
            "--grid" => {
                let raw = take(&mut i)?;
                let (a, b) = raw.split_once('x').ok_or_else(|| format!("bad --grid '{raw}' (expected NxM)"))?;
                cfg.grid = (
                    a.trim().parse().map_err(|_| format!("bad --grid '{raw}'"))?,
                    b.trim().parse().map_err(|_| format!("bad --grid '{raw}'"))?,
                );
            }
            "--tol" => {
                let raw = take(&mut i)?;
                cfg.tol = raw.parse().map_err(|_| format!("bad --tol '{raw}'"))?;
                cfg.bound = cfg.tol;
            }
            "--samples" => {
                let raw = take(&mut i)?;
                cfg.samples = raw.parse().map_err(|_| format!("bad --samples '{raw}'"))?;
            }
            "--seed" => {
                let raw = take(&mut i)?;
                cfg.seed = raw.parse().map_err(|_| format!("bad --seed '{raw}'"))?;
            }
            "--gauge" => {
                cfg.gauge = match take(&mut i)?.as_str() {
                    "minimal" => Gauge::Minimal,
                    "paper" => Gauge::Paper,
                    other => return Err(format!("unknown gauge '{other}'")),
                };
            }
            "--coupling" => cfg.coupling = take(&mut i)?,
            "--out" => cfg.out_dir = Some(PathBuf::from(take(&mut i)?)),
            "--svg" => cfg.svg = true,
            other => return Err(format!("unknown flag '{other}'\n{}", usage())),
        }
        i += 1;
    }
    Ok(cfg)
}

fn apply_config_file(cfg: &mut RunConfig) -> Result<Option<ConfigFile>, String> {
    let Some(path) = &cfg.config_path else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file = ConfigFile::parse(&text).map_err(|e| e.to_string())?;
    let read = |key: &str| file.get("run", key).map(|s| s.to_string());
    if cfg.instance.is_none() {
        cfg.instance = read("instance");
    }
    if cfg.mu.is_none() {
        if let Some(raw) = read("mu") {
            let mu: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
            cfg.mu = Some(mu.map_err(|_| format!("bad mu '{raw}' in config"))?);
        }
    }
    if let Some(v) = read("samples") {
        cfg.samples = v.parse().map_err(|_| "bad samples in config".to_string())?;
    }
    if let Some(v) = read("tol") {
        cfg.tol = v.parse().map_err(|_| "bad tol in config".to_string())?;
        cfg.bound = cfg.tol;
    }
    if let Some(v) = read("seed") {
        cfg.seed = v.parse().map_err(|_| "bad seed in config".to_string())?;
    }
    if let Some(v) = read("coupling") {
        cfg.coupling = v;
    }
    if let Some(v) = read("gauge") {
        cfg.gauge = match v.as_str() {
            "minimal" => Gauge::Minimal,
            "paper" => Gauge::Paper,
            other => return Err(format!("unknown gauge '{other}' in config")),
        };
    }
    if let Some(v) = read("grid") {
        let (a, b) = v.split_once('x').ok_or("bad grid in config")?;
        cfg.grid = (
            a.trim().parse().map_err(|_| "bad grid in config".to_string())?,
            b.trim().parse().map_err(|_| "bad grid in config".to_string())?,
        );
    }
    Ok(Some(file))
}

fn validate(cfg: &RunConfig, inst: Option<&ReductionInstance>) -> Result<(), String> {
    if cfg.samples == 0 {
        return Err("--samples must be >= 1".into());
    }
    if cfg.tol <= 0.0 {
        return Err("--tol must be positive".into());
    }
    if (cfg.command == "solve" || cfg.command == "compare") && (cfg.grid.0 < 8 || cfg.grid.1 < 8) {
        return Err(format!("grid sizes must be >= 8 (got {}x{})", cfg.grid.0, cfg.grid.1));
    }
    if let (Some(mu), Some(inst)) = (&cfg.mu, inst) {
        if mu.len() != inst.mu_len {
            return Err(format!(
                "--mu has {} entries, instance '{}' expects {}",
                mu.len(),
                inst.name,
                inst.mu_len
            ));
        }
    }
    Ok(())
}

struct Outputs {
    dir: Option<PathBuf>,
}

impl Outputs {
    fn write(&self, name: &str, content: &str) {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, content).unwrap_or_else(|e| eprintln!("cannot write {}: {e}", path.display()));
                println!("wrote {}", path.display());
            }
            None => {
                println!("--- {name} ---");
                print!("{content}");
            }
        }
    }
}

fn report_outcome(report: &VerificationReport) -> bool {
    if let Some(first) = report.first_failure() {
        let rank = first
            .rank
            .map(|(f, e)| format!(" (rank {f}, expected {e})"))
            .unwrap_or_default();
        eprintln!(
            "FAILED {}::{}: residual {:e}{rank}",
            report.subject, first.name, first.residual
        );
        false
    } else {
        true
    }
}

fn load_instance(cfg: &RunConfig) -> Result<ReductionInstance, Error> {
    let name = cfg.instance.as_deref().unwrap_or("coupled-strings");
    if name == "coupled-strings" {
        Ok(strings_instance(Coupling::by_name(&cfg.coupling)?))
    } else {
        get_instance(name)
    }
}

fn cmd_list() -> ExitCode {
    for (name, summary) in list_instances() {
        println!("{name}: {summary}");
    }
    ExitCode::SUCCESS
}

fn cmd_verify(cfg: &RunConfig, file: Option<&ConfigFile>, out: &Outputs) -> Result<ExitCode, String> {
    // a [structure] section verifies standalone
    if let Some(section) = file.and_then(|f| f.section("structure")) {
        if cfg.samples == 0 {
            return Err("--samples must be >= 1".into());
        }
        let s = parse_structure(section).map_err(|e| e.to_string())?;
        let report = verify_structure(&s, cfg.samples, cfg.tol, cfg.seed);
        out.write("verify_structure.txt", &report.to_text());
        let ok = report_outcome(&report);
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let inst = load_instance(cfg).map_err(|e| e.to_string())?;
    validate(cfg, Some(&inst))?;
    let mut all = VerificationReport::new(&inst.name);
    all.merge(verify_structure(
        &GeometricStructure::KPolycosymplectic(inst.structure.clone()),
        cfg.samples,
        cfg.tol,
        cfg.seed,
    ));
    all.merge(inst.action.group.verify(cfg.samples.min(50), 1e-10, cfg.seed));
    all.merge(inst.action.verify(cfg.samples.min(50), cfg.seed));
    all.merge(
        verify_action_invariance(&inst.action, &inst.structure, 8, cfg.samples.min(50), 1e-10, cfg.seed)
            .map_err(|e| e.to_string())?,
    );
    if let Some(momentum) = &inst.momentum {
        all.merge(
            verify_momentum_map(&inst.action, &inst.structure, momentum, cfg.samples.min(50), 1e-10, cfg.seed)
                .map_err(|e| e.to_string())?,
        );
        let affine = AffineAction::new(&inst.action, momentum, cfg.samples.min(25), cfg.seed);
        all.merge(affine.verify(cfg.samples.min(25), 1e-10).map_err(|e| e.to_string())?);
        if let Some(mu) = &cfg.mu {
            let mu_data = inst.mu_data(mu).map_err(|e| e.to_string())?;
            all.merge(check_reduction_conditions(
                &inst.structure,
                &inst.action,
                momentum,
                &mu_data,
                cfg.samples.min(25),
                cfg.seed,
            ));
        }
    }
    out.write("verify_report.txt", &all.to_text());
    let ok = report_outcome(&all);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_solve(cfg: &RunConfig, out: &Outputs) -> Result<ExitCode, String> {
    let inst = load_instance(cfg).map_err(|e| e.to_string())?;
    validate(cfg, Some(&inst))?;
    match inst.name.as_str() {
        "coupled-strings" => {
            let coupling = inst.coupling.clone().expect("strings coupling");
            let result = compare_strings(&coupling, cfg.grid.0, cfg.grid.1).map_err(|e| e.to_string())?;
            let mut comments = vec![
                format!("instance = coupled-strings, coupling = {}", coupling.name),
                format!("grid = {}x{}", cfg.grid.0, cfg.grid.1),
            ];
            comments.extend(result.full_residuals.to_comments());
            if coupling.name == "zero" {
                // d'Alembert oracle for the uncoupled preset
                let grid = &result.full;
                let q1 = grid.field("q1");
                let mut err = 0.0f64;
                for m in 0..grid.shape[0] {
                    for j in 0..grid.shape[1] {
                        let t = grid.param_of(0, m);
                        let x = grid.param_of(1, j);
                        err = err.max((q1[grid.idx(&[m, j])] - (x - t).sin()).abs());
                    }
                }
                println!("dalembert_linf_error = {err:e}");
                comments.push(format!("dalembert_linf_error = {err:e}"));
            }
            out.write("strings_solution.csv", &result.full.to_csv(&comments));
            if cfg.svg {
                let grid = &result.full;
                out.write(
                    "strings_q1.svg",
                    &plot::heatmap("q1(t, x)", grid.shape[0], grid.shape[1], grid.field("q1")),
                );
            }
            println!("max_hdw_residual = {:e}", result.full_residuals.max());
            Ok(ExitCode::SUCCESS)
        }
        "membrane-polar" => {
            let steps = cfg.grid.1.max(cfg.grid.0) - 1;
            let sol = solve_reduced_membrane_ode(&|_| 1.0, 1.0, (1.0, 2.0), steps, -0.25, 0.5)
                .map_err(|e| e.to_string())?;
            let zeta_end = *sol.zeta.last().unwrap();
            let residual = radial_pde_residual(&sol, &|_| 1.0, 1.0);
            println!("zeta(2) = {zeta_end} (analytic -1)");
            println!("radial_pde_residual = {residual:e}");
            let mut csv = String::from("# reduced membrane radial solution, f = 1, c = 1\nr,zeta,p_r\n");
            for i in 0..sol.r.len() {
                csv.push_str(&format!("{},{},{}\n", sol.r[i], sol.zeta[i], sol.p_r[i]));
            }
            out.write("membrane_radial.csv", &csv);
            if cfg.svg {
                out.write(
                    "membrane_zeta.svg",
                    &plot::line_plot("zeta(r)", "r", &[("zeta", &sol.r, &sol.zeta), ("p_r", &sol.r, &sol.p_r)]),
                );
            }
            if (zeta_end + 1.0).abs() < 1e-8 {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("FAILED: zeta(2) deviates from the closed form by {:e}", (zeta_end + 1.0).abs());
                Ok(ExitCode::from(1))
            }
        }
        other => Err(format!("instance '{other}' has no solver route")),
    }
}

fn cmd_reduce(cfg: &RunConfig, out: &Outputs) -> Result<ExitCode, String> {
    let inst = load_instance(cfg).map_err(|e| e.to_string())?;
    validate(cfg, Some(&inst))?;
    let mu = cfg.mu.clone().unwrap_or_else(|| vec![1.0, 0.5]);
    if inst.name == "membrane-polar" {
        let data = inst.spacetime.as_ref().expect("membrane spacetime data");
        let gauge = inst.paper_gauge.clone().expect("membrane gauge");
        let outcome = spacetime_reduce(
            &inst.structure,
            &inst.action,
            &inst.hamiltonian,
            &gauge,
            data,
            &mu,
            cfg.samples.min(60),
            cfg.tol.max(1e-9),
            cfg.seed,
        )
        .map_err(|e| e.to_string())?;
        out.write("reduce_certificate.txt", &outcome.report.to_text());
        let pts = halton_points(&data.reduced_chart, 10, cfg.seed);
        let exported = export_structure(&outcome.reduced, &pts).map_err(|e| e.to_string())?;
        out.write("reduced_structure.cfg", &exported);
        let ok = report_outcome(&outcome.report);
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let mu_data = inst.mu_data(&mu).map_err(|e| e.to_string())?;
    let mut result = reduce(
        &inst.structure,
        &inst.action,
        &inst.hamiltonian,
        &mu_data,
        cfg.samples.min(100),
        cfg.tol.max(1e-9),
        cfg.seed,
    )
    .map_err(|e| e.to_string())?;
    // reduce the dynamics under the selected gauge when the field actually
    // satisfies the hypotheses (tangent to the level set); a Hamiltonian
    // that is not invariant has no reducible dynamics and only the
    // structure certificate applies
    let kvector = match (&cfg.gauge, &inst.paper_gauge) {
        (Gauge::Paper, Some(g)) => Some(g.clone()),
        (Gauge::Minimal, _) => inst
            .hamiltonian_system(GaugeChoice::MinimalNorm)
            .ok()
            .map(|sys| sys.kvector_field()),
        _ => None,
    };
    if let (Some(kvector), Some(momentum)) = (kvector, &inst.momentum) {
        if level_tangent(&inst, momentum, &mu_data, &kvector, cfg.seed) {
            match reduce_dynamics(&inst.structure, &inst.action, momentum, &mu_data, &kvector, 12, cfg.seed) {
                Ok(dynamics) => result.report.merge(dynamics.report),
                Err(e) => return Err(e.to_string()),
            }
        } else {
            println!(
                "note: the selected gauge field is not tangent to the momentum level set; no dynamics reduction is claimed"
            );
        }
    }
    out.write("reduce_certificate.txt", &result.report.to_text());
    let red = polyco::structure::KPolycosymplecticStructure::new(
        &result.chart,
        inst.k,
        result.tau.clone(),
        result.omega.clone(),
    )
    .map_err(|e| e.to_string())?;
    let pts = halton_points(&result.chart, 10, cfg.seed);
    let exported = export_structure(&red, &pts).map_err(|e| e.to_string())?;
    out.write("reduced_structure.cfg", &exported);
    let ok = report_outcome(&result.report);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn level_tangent(
    inst: &ReductionInstance,
    momentum: &polyco::group::MomentumMapModel,
    mu_data: &polyco::reduction::MuData,
    kvector: &polyco::form::KVectorFieldRep,
    seed: u64,
) -> bool {
    let n = inst.structure.chart.dim;
    for y in halton_points(&mu_data.level.chart, 6, seed) {
        let x = mu_data.level.embed.eval(&y);
        let tj = momentum.map.jacobian(&x);
        let v = kvector.eval(&x);
        for alpha in 0..inst.k {
            for row in 0..tj.nrows() {
                let pairing: f64 = (0..n).map(|col| tj[(row, col)] * v[alpha * n + col]).sum();
                if pairing.abs() > 1e-9 {
                    return false;
                }
            }
        }
    }
    true
}

fn cmd_compare(cfg: &RunConfig, out: &Outputs) -> Result<ExitCode, String> {
    let inst = load_instance(cfg).map_err(|e| e.to_string())?;
    validate(cfg, Some(&inst))?;
    match inst.name.as_str() {
        "coupled-strings" => {
            let coupling = inst.coupling.clone().expect("strings coupling");
            let fine = compare_strings(&coupling, cfg.grid.0, cfg.grid.1).map_err(|e| e.to_string())?;
            let coarse = compare_strings(&coupling, cfg.grid.0 / 2 + 1, cfg.grid.1 / 2 + 1)
                .map_err(|e| e.to_string())?;
            let factor = coarse.gap_linf / fine.gap_linf;
            println!("gap_linf = {:e}", fine.gap_linf);
            println!("gap_l2 = {:e}", fine.gap_l2);
            println!("refinement_factor = {factor}");
            println!("divergence_law_residual = {:e}", fine.divergence_residual);
            let mut comments = vec![
                format!("full-vs-reduced comparison, coupling = {}", coupling.name),
                format!("gap_linf = {:e}, gap_l2 = {:e}", fine.gap_linf, fine.gap_l2),
                format!(
                    "coarse_gap_linf = {:e} at {}x{}",
                    coarse.gap_linf,
                    cfg.grid.0 / 2 + 1,
                    cfg.grid.1 / 2 + 1
                ),
            ];
            comments.extend(fine.full_residuals.to_comments());
            out.write("compare_full.csv", &fine.full.to_csv(&comments));
            out.write("compare_reduced.csv", &fine.reduced.to_csv(&comments));
            if cfg.svg {
                let grid = &fine.reduced;
                out.write(
                    "compare_reduced_q.svg",
                    &plot::heatmap("reduced q(t, x)", grid.shape[0], grid.shape[1], grid.field("q")),
                );
            }
            let bound = if cfg.bound == 1e-9 { 5e-3 } else { cfg.bound };
            if fine.gap_linf <= bound {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("FAILED: gap {:e} exceeds bound {:e}", fine.gap_linf, bound);
                Ok(ExitCode::from(1))
            }
        }
        "membrane-polar" => {
            let mu = cfg.mu.clone().unwrap_or(vec![0.0, 0.0]);
            let shape = (cfg.grid.0.max(9), cfg.grid.1.max(9), 9);
            let result = compare_membrane(1.0, 1.0, (mu[0], mu[1]), shape, -0.25, 0.5)
                .map_err(|e| e.to_string())?;
            println!("gap_linf = {:e}", result.gap_linf);
            println!("radial_subsystem_residual = {:e}", result.radial_subsystem_residual);
            for (name, max, l2) in &result.full_residuals.entries {
                println!("full_residual {name}: max = {max:e}, l2 = {l2:e}");
            }
            let comments: Vec<String> = vec![
                format!("membrane constant-momentum sector, lambda = {},{}", mu[0], mu[1]),
                format!("gap vs radial ODE = {:e}", result.gap_linf),
            ];
            out.write("compare_membrane.csv", &result.full.to_csv(&comments));
            if cfg.svg {
                out.write(
                    "compare_membrane_zeta.svg",
                    &plot::line_plot(
                        "zeta(r) lifted vs radial",
                        "r",
                        &[("zeta", &result.radial.r, &result.radial.zeta)],
                    ),
                );
            }
            let dr = result.full.spacing[1];
            let bound = cfg.bound.max(10.0 * dr * dr);
            if result.gap_linf <= bound {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("FAILED: gap {:e} exceeds bound {:e}", result.gap_linf, bound);
                Ok(ExitCode::from(1))
            }
        }
        other => Err(format!("instance '{other}' has no comparison route")),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = match parse_args(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let file = match apply_config_file(&mut cfg) {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &cfg.out_dir {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("cannot create {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    let out = Outputs { dir: cfg.out_dir.clone() };
    let run = || -> Result<ExitCode, String> {
        match cfg.command.as_str() {
            "list" => Ok(cmd_list()),
            "verify" => cmd_verify(&cfg, file.as_ref(), &out),
            "solve" => cmd_solve(&cfg, &out),
            "reduce" => cmd_reduce(&cfg, &out),
            "compare" => cmd_compare(&cfg, &out),
            other => Err(format!("unknown command '{other}'\n{}", usage())),
        }
    };
    match run() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
