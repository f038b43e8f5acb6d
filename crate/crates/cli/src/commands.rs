//! Subcommand implementations. Each returns whether its own checks passed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use qlink_core::basis::{build_physical_basis_su2, build_physical_basis_u1};
use qlink_core::evolution::{trotter_evolve, EvolutionReport, Observer};
use qlink_core::noise::{penalty_suppression_experiment, run_noisy_trajectory};
use qlink_core::observables::{
    electric_energy, entanglement_entropy, ground_state, plaquette_expectation, spectrum, winding_expectation,
    wilson_loop, EntropyUnit,
};
use qlink_core::operators::{penalty_term, wilson_loop_expr, HamiltonianParts, WorkingBasis};
use qlink_core::states::{
    apply_color_transform, baryon_state_su3, flux_loop_state, meson_state_su3, random_su3, random_u3, superpose,
    vacuum_state,
};
use qlink_core::suite::{mean_plaquette, run_suite, SuiteConfig, SuiteReport};
use qlink_core::{FullSpace, LinkId, PhysicalBasis, PlaquetteId, QlmError, Result, SparseOperator, StateVector, C64};

use crate::config::{BasisChoice, InitialState, ObservableSpec, RunConfig};

/// Relative tolerance of the penalty-versus-restricted spectrum check.
pub const PENALTY_CHECK_TOL: f64 = 5e-3;
/// Fidelity tolerance of the color-singlet demos.
pub const SINGLET_TOL: f64 = 1e-12;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub command: &'static str,
}

/// Failure of a subcommand.
#[derive(Debug)]
pub enum CliError {
    Core(QlmError),
    Io(String),
}

impl From<QlmError> for CliError {
    fn from(e: QlmError) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &FsPath, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        let path = self.path(name);
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        Ok((path, BufWriter::new(f)))
    }

    fn header(&self) -> serde_json::Value {
        json!({
            "tool": "qlink",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
        })
    }

    /// CSV with a `#`-prefixed header block carrying the resolved config.
    fn write_csv(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<PathBuf> {
        let (path, mut w) = self.create(name)?;
        writeln!(w, "# qlink {} {}", self.command, env!("CARGO_PKG_VERSION")).map_err(|e| io_err(&path, e))?;
        writeln!(w, "# config {}", self.config.to_json()).map_err(|e| io_err(&path, e))?;
        body(&mut w)?;
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn write_json(&self, name: &str, body: &impl Serialize) -> CliResult<PathBuf> {
        let (path, mut w) = self.create(name)?;
        let doc = json!({ "header": self.header(), "result": body });
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

fn build_basis(cfg: &RunConfig) -> Result<PhysicalBasis> {
    match cfg.model {
        qlink_core::GaugeModel::U1 { .. } => build_physical_basis_u1(&cfg.lattice, &cfg.model, &cfg.charges(), &cfg.budget),
        qlink_core::GaugeModel::Su2 { .. } => {
            if !cfg.charges().is_neutral() {
                return Err(QlmError::InvalidCharges(
                    "the SU(2) physical basis is built for the charge-free sector".into(),
                ));
            }
            build_physical_basis_su2(&cfg.lattice, &cfg.model, &cfg.budget)
        }
    }
}

fn parts(cfg: &RunConfig, wb: &WorkingBasis) -> Result<HamiltonianParts> {
    let mut p = HamiltonianParts::build(wb, cfg.g2, cfg.sign(), &cfg.budget)?;
    if !cfg.magnetic {
        p.magnetic = SparseOperator::zeros(p.magnetic.tag().clone());
    }
    Ok(p)
}

fn initial_state(spec: &InitialState, wb: &WorkingBasis) -> Result<StateVector> {
    match spec {
        InitialState::Vacuum {} => vacuum_state(wb),
        InitialState::FluxLoop { path, e } => flux_loop_state(wb, &path.build(wb.lattice())?, *e),
        InitialState::Superposition { terms } => {
            let states = terms.iter().map(|t| initial_state(&t.state, wb)).collect::<Result<Vec<_>>>()?;
            let amps: Vec<C64> = terms.iter().map(|t| C64::new(t.re, t.im)).collect();
            let sup = superpose(wb, &states, &amps)?;
            if sup.cross_winding {
                eprintln!(
                    "note: initial superposition spans winding sectors {:?}; local observables cannot tell it from a mixture",
                    sup.sectors.iter().map(|s| s.to_string()).collect::<Vec<_>>()
                );
            }
            Ok(sup.state)
        }
        InitialState::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| QlmError::Serialization(format!("cannot read {path}: {e}")))?;
            let psi = StateVector::from_json(&text)?;
            wb.tag().ensure_same(psi.tag())?;
            Ok(psi)
        }
    }
}

fn observers<'a>(cfg: &RunConfig, wb: &'a WorkingBasis) -> Result<Vec<Observer<'a>>> {
    let budget = cfg.budget;
    let mut out = Vec::new();
    let mut specs = cfg.observables.clone().unwrap_or_default();
    if let Some(links) = &cfg.entropy_partition {
        specs.push(ObservableSpec::Entropy { links: links.clone() });
    }
    for spec in specs {
        match spec {
            ObservableSpec::ElectricEnergy {} => out.push(Observer::real("electric_energy", move |s| electric_energy(wb, s))),
            ObservableSpec::MeanPlaquette {} => out.push(Observer::real("mean_plaquette", move |s| mean_plaquette(wb, s))),
            ObservableSpec::Plaquette { p } => out.push(Observer::new(format!("plaquette_{p}"), move |s| {
                plaquette_expectation(wb, s, PlaquetteId(p))
            })),
            ObservableSpec::WilsonLoop { path } => {
                let path = path.build(wb.lattice())?;
                wilson_loop_expr(wb.model(), &path)?;
                out.push(Observer::new("wilson_loop", move |s| wilson_loop(wb, s, &path)));
            }
            ObservableSpec::Winding {} => {
                out.push(Observer::real("winding_x", move |s| Ok(winding_expectation(wb, s)?.0)));
                out.push(Observer::real("winding_y", move |s| Ok(winding_expectation(wb, s)?.1)));
            }
            ObservableSpec::Entropy { links } => {
                let links: Vec<LinkId> = links.into_iter().map(LinkId).collect();
                out.push(Observer::real("entropy_bits", move |s| {
                    entanglement_entropy(wb, s, &links, EntropyUnit::Bits, &budget)
                }));
            }
        }
    }
    Ok(out)
}

pub fn basis(ctx: &Context) -> CliResult<bool> {
    let cfg = &ctx.config;
    let full = FullSpace::with_budget(cfg.lattice, cfg.model, &cfg.budget)?;
    let b = build_basis(cfg)?;
    let sectors: Vec<_> = b
        .split_by_winding()
        .into_iter()
        .map(|(w, members)| json!({ "wx": w.wx, "wy": w.wy, "size": members.len() }))
        .collect();
    let summary = json!({
        "model": cfg.model.to_string(),
        "lattice": cfg.lattice.to_string(),
        "full_dim": full.dim(),
        "physical_dim": b.dim(),
        "sectors": sectors,
    });
    let (path, mut w) = ctx.create(&cfg.outputs.basis)?;
    w.write_all(b.to_json()?.as_bytes()).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    ctx.write_json(&cfg.outputs.basis_summary, &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(true)
}

/// Lowest eigenvalues of the physical-restricted Hamiltonian; optionally
/// compares them with the lowest eigenvalues of the full-space
/// `H + λ·penalty`.
pub fn spectrum_cmd(ctx: &Context, penalty_check: Option<f64>) -> CliResult<bool> {
    let cfg = &ctx.config;
    let b = Arc::new(build_basis(cfg)?);
    let wb = WorkingBasis::Physical(b.clone());
    let h = parts(cfg, &wb)?.total()?;
    let values = spectrum(&h, &cfg.budget)?;
    let gs = ground_state(&h, &cfg.budget)?;
    let vac = vacuum_state(&wb)?;
    let k = cfg.spectrum.k.min(values.len());
    ctx.write_csv(&cfg.outputs.spectrum, |w| {
        writeln!(w, "index,energy")?;
        for (i, v) in values.iter().take(k).enumerate() {
            writeln!(w, "{i},{v:.15e}")?;
        }
        Ok(())
    })?;
    let overlap = gs.state.fidelity(&vac)?;
    println!(
        "{}",
        json!({
            "physical_dim": b.dim(),
            "ground_energy": gs.energy,
            "ground_multiplicity": gs.multiplicity,
            "vacuum_overlap": overlap,
            "lowest": &values[..k],
        })
    );

    let Some(lambda) = penalty_check else { return Ok(true) };
    let space = b.space().clone();
    let full = WorkingBasis::Full(space.clone());
    let pen = penalty_term(&space, lambda, &cfg.charges(), &cfg.budget)?;
    let hf = parts(cfg, &full)?.total()?.add(&pen)?;
    let full_values = spectrum(&hf, &cfg.budget)?;
    let mut worst: f64 = 0.0;
    let mut pass = full_values.len() >= values.len();
    let rows: Vec<(f64, f64, f64)> = values
        .iter()
        .zip(&full_values)
        .map(|(&a, &b)| {
            let dev = (b - a).abs();
            pass &= dev <= PENALTY_CHECK_TOL * a.abs();
            let rel = dev / a.abs();
            worst = worst.max(rel);
            (a, b, rel)
        })
        .collect();
    ctx.write_csv(&cfg.outputs.penalty_check, |w| {
        writeln!(w, "index,restricted,penalized,relative_deviation")?;
        for (i, (a, b, r)) in rows.iter().enumerate() {
            writeln!(w, "{i},{a:.15e},{b:.15e},{r:.6e}")?;
        }
        Ok(())
    })?;
    println!(
        "{}",
        json!({ "penalty_check": { "lambda": lambda, "levels": rows.len(), "max_relative_deviation": worst, "tolerance": PENALTY_CHECK_TOL, "passed": pass } })
    );
    Ok(pass)
}

fn write_stream(ctx: &Context, report: &EvolutionReport, extra: Option<&serde_json::Value>) -> CliResult<()> {
    let cfg = &ctx.config;
    let (path, mut w) = ctx.create(&cfg.outputs.stream)?;
    writeln!(w, "{}", json!({ "header": ctx.header() })).map_err(|e| io_err(&path, e))?;
    report.write_json_lines(&mut w)?;
    if let Some(x) = extra {
        writeln!(w, "{x}").map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    ctx.write_csv(&cfg.outputs.summary, |w| Ok(report.write_csv(w)?))?;
    Ok(())
}

pub fn evolve(ctx: &Context) -> CliResult<bool> {
    let cfg = &ctx.config;
    let b = Arc::new(build_basis(cfg)?);
    let wb = match cfg.basis.unwrap_or(BasisChoice::Physical) {
        BasisChoice::Physical => WorkingBasis::Physical(b.clone()),
        BasisChoice::Full => WorkingBasis::Full(b.space().clone()),
    };
    let p = parts(cfg, &wb)?;
    let psi = initial_state(&cfg.initial_state, &wb)?;
    let obs = observers(cfg, &wb)?;
    let monitor = if wb.is_full() { Some(b.as_ref()) } else { None };

    let final_state = match &cfg.noise {
        Some(noise) => {
            let out = run_noisy_trajectory(&wb, &p, &psi, &cfg.trotter, noise, &b, &obs, &cfg.budget)?;
            let summary = json!({
                "checks": out.checks,
                "first_detection": out.first_detection,
            });
            write_stream(ctx, &out.report, Some(&json!({ "detections": summary })))?;
            println!(
                "{}",
                json!({ "steps": cfg.trotter.steps, "norm_drift": out.report.norm_drift(), "first_detection": out.first_detection })
            );
            None
        }
        None => {
            let (state, report) = trotter_evolve(&p, &psi, &cfg.trotter, &obs, monitor, &cfg.budget)?;
            write_stream(ctx, &report, None)?;
            println!(
                "{}",
                json!({ "steps": cfg.trotter.steps, "norm_drift": report.norm_drift(), "basis": wb.tag().to_string() })
            );
            Some(state)
        }
    };
    if let Some(state) = final_state {
        let (path, mut w) = ctx.create(&cfg.outputs.final_state)?;
        w.write_all(state.to_json()?.as_bytes()).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    Ok(true)
}

/// With an explicit config, runs the suite for that configuration;
/// otherwise for both desk-scale defaults.
pub fn check(ctx: &Context, explicit: bool) -> CliResult<bool> {
    let cfg = &ctx.config;
    let suites = if explicit {
        vec![SuiteConfig {
            lattice: cfg.lattice,
            model: cfg.model,
            g2: cfg.g2,
            magnetic_sign: cfg.sign(),
            charges: cfg.charges(),
            seed: cfg.seed,
            budget: cfg.budget,
        }]
    } else {
        [SuiteConfig::desk_u1(), SuiteConfig::desk_su2()]
            .into_iter()
            .map(|mut s| {
                s.seed = cfg.seed;
                s.budget = cfg.budget;
                s
            })
            .collect()
    };
    let reports: Vec<SuiteReport> = suites.iter().map(run_suite).collect::<Result<_>>()?;
    for r in &reports {
        println!("{} on {}, g² = {}, sign {:?}", r.config.model, r.config.lattice, r.config.g2, r.config.magnetic_sign);
        print!("{}", r.table());
    }
    let passed = reports.iter().all(SuiteReport::all_passed);
    ctx.write_json(&cfg.outputs.check, &reports)?;
    println!("{}", if passed { "all checks passed" } else { "some checks FAILED" });
    Ok(passed)
}

pub fn penalty_sweep(ctx: &Context) -> CliResult<bool> {
    let cfg = &ctx.config;
    let b = Arc::new(build_basis(cfg)?);
    let links = cfg.penalty_links();
    let exp = penalty_suppression_experiment(
        &b,
        cfg.g2,
        cfg.sign(),
        &cfg.penalty.lambdas,
        cfg.penalty.epsilon,
        cfg.penalty.time,
        &links,
        &cfg.budget,
    )?;
    ctx.write_csv(&cfg.outputs.penalty_sweep, |w| {
        writeln!(w, "lambda,leakage")?;
        for r in &exp.rows {
            let l = r.lambda.map(|l| format!("{l}")).unwrap_or_else(|| "inf".into());
            writeln!(w, "{l},{:.15e}", r.leakage)?;
        }
        Ok(())
    })?;
    println!("{}", serde_json::to_string(&exp)?);
    Ok(true)
}

#[derive(Serialize)]
struct SingletDraw {
    draw: usize,
    meson_fidelity: f64,
    baryon_fidelity: f64,
    /// `|g·B − det(g)·B|` for a U(3) draw.
    baryon_phase_error: f64,
}

pub fn su3_singlet(ctx: &Context, draws: usize) -> CliResult<bool> {
    let cfg = &ctx.config;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let meson = meson_state_su3();
    let baryon = baryon_state_su3();
    let mut rows = Vec::new();
    for draw in 0..draws {
        let g = random_su3(&mut rng);
        let m2 = apply_color_transform(&meson, &[0, 1], &g)?;
        let b2 = apply_color_transform(&baryon, &[0, 1, 2], &g)?;
        let u = random_u3(&mut rng);
        let det = u.determinant();
        let b3 = apply_color_transform(&baryon, &[0, 1, 2], &u)?;
        let phase_err = b3
            .amps()
            .iter()
            .zip(baryon.amps())
            .map(|(x, y)| (x - det * y).norm())
            .fold(0.0, f64::max);
        rows.push(SingletDraw {
            draw,
            meson_fidelity: meson.fidelity(&m2)?,
            baryon_fidelity: baryon.fidelity(&b2)?,
            baryon_phase_error: phase_err,
        });
    }
    let pass = rows.iter().all(|r| {
        r.meson_fidelity >= 1.0 - SINGLET_TOL && r.baryon_fidelity >= 1.0 - SINGLET_TOL && r.baryon_phase_error <= SINGLET_TOL
    });
    let worst = rows
        .iter()
        .map(|r| (1.0 - r.meson_fidelity).max(1.0 - r.baryon_fidelity))
        .fold(0.0, f64::max);
    ctx.write_json(&cfg.outputs.su3_singlet, &rows)?;
    println!("{}", json!({ "draws": draws, "max_infidelity": worst, "tolerance": SINGLET_TOL, "passed": pass }));
    Ok(pass)
}
