use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qgo_core::bench::{run_qa, run_sa, run_suite, Cell, Figure, SuiteSpec, Table};
use qgo_core::dynamics::{
    evolve_meanfield, exact_cd_meanfield, overlap_trace, ExactCdConfig, IntegratorConfig, MeanFieldParams,
};
use qgo_core::measures::{ground_states, solution_success, GroundTruth, MAX_ENUMERATION_SITES};
use qgo_core::model::{
    coefficients, ferro_problem, rotated_coefficients, rotation_angle, sk_problem, CVector, IsingProblem,
    ScheduleParams,
};
use qgo_core::qgo::{
    optimize_bc, run_sequential, run_single_shot, yfield_greedy, BcFamily, CalibrationConfig, GradientRule, Measure,
    QaMeasure, QgoConfig, QgoTrace,
};
use serde_json::json;

use crate::args::{BenchArgs, Family, GenArgs, MeanfieldArgs, Mode, Model, RunArgs, ScanArgs, TraceArgs};
use crate::config::{parse_sizes, pick, pick_opt, Layers};
use crate::manifest::ManifestBuilder;

/// RK4 steps per unit time of single runs; suites default to fewer.
const RUN_STEPS: usize = 1000;
const SUITE_STEPS: usize = 250;

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn load_problem(path: &Path) -> Result<IsingProblem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading instance {}", path.display()))?;
    Ok(IsingProblem::from_json(&text)?)
}

fn gs_path(instance: &Path) -> PathBuf {
    instance.with_extension("gs.json")
}

/// Ground truth of `problem`, read from or written to the cache when asked.
fn ground_truth(problem: &IsingProblem, instance: &Path, cache: bool) -> Result<GroundTruth> {
    let path = gs_path(instance);
    if cache && path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let truth = GroundTruth::from_json(&text)?;
        let consistent = truth.n == problem.n()
            && truth.configs.iter().all(|c| problem.energy(c).is_ok_and(|e| (e - truth.energy).abs() < 1e-9));
        if consistent {
            log::info!("ground states read from {}", path.display());
            return Ok(truth);
        }
        log::warn!("{} does not match the instance; recomputing", path.display());
    }
    let truth = ground_states(problem)?;
    if cache {
        write_file(&path, &(truth.to_json() + "\n"))?;
    }
    Ok(truth)
}

fn parse_measure(text: &str) -> Result<Measure> {
    Ok(text.parse()?)
}

/// `(b_opt, c_opt)` of the ferromagnet with `n` sites at time `tau`.
fn calibrated(n: usize, tau: f64) -> Result<(f64, f64)> {
    let opt = optimize_bc(BcFamily::Ferro { n }, &CalibrationConfig { tau, ..Default::default() })?;
    log::info!("calibrated b = {:.6}, c = {:.6} for n = {n}, tau = {tau}", opt.b, opt.c);
    Ok((opt.b, opt.c))
}

pub fn gen(args: GenArgs, mut layers: Layers) -> Result<()> {
    let seed = layers.seed(0);
    let problem = match args.model {
        Model::Sk => sk_problem(args.n, seed)?,
        Model::Ferro => ferro_problem(args.n, args.j)?,
    };
    write_file(&args.out, &(problem.to_json() + "\n"))?;
    println!("instance: {}", args.out.display());
    println!("n: {}", problem.n());
    println!("couplings: {}", problem.num_couplings());
    if args.cache_gs {
        let truth = ground_truth(&problem, &args.out, true)?;
        println!("ground_energy: {:.16e}", truth.energy);
        println!("degeneracy: {}", truth.degeneracy());
    }
    Ok(())
}

fn trace_table(trace: &QgoTrace) -> Table {
    let mut t = Table::new("trace", &["iteration", "site", "gradient", "sign", "measure_value", "qa_calls"]);
    for step in &trace.steps {
        let mut sites: Vec<(usize, f64)> = step.gradients.clone();
        // sites fixed without a probe (the single-shot symmetry breaker)
        for &(site, _) in &step.assigned {
            if !sites.iter().any(|(s, _)| *s == site) {
                sites.push((site, f64::NAN));
            }
        }
        sites.sort_by_key(|(s, _)| *s);
        for (site, g) in sites {
            let sign = step.assigned.iter().find(|(s, _)| *s == site).map_or(0, |(_, v)| *v);
            t.push(vec![
                Cell::from(step.iteration),
                Cell::from(site),
                Cell::from(g),
                Cell::from(sign),
                Cell::from(step.measure_value),
                Cell::from(step.qa_calls),
            ]);
        }
    }
    t
}

pub fn run(args: RunArgs, mut layers: Layers) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    manifest.input(&args.instance);
    let problem = load_problem(&args.instance)?;
    let n = problem.n();
    let integrator = layers.integrator(RUN_STEPS)?;
    let threads = layers.threads();
    configure_threads(threads);
    let (file, res) = (&layers.file, &mut layers.resolved);
    let tau = pick(args.tau, &file.tau, 1.0, &mut res.tau);
    let measure = parse_measure(&pick(args.measure.clone(), &file.measure, "energy".into(), &mut res.measure))?;
    let delta = pick(args.delta, &file.delta, 0.1, &mut res.delta);
    let (b, c) = match (pick_opt(args.b, &file.b, &mut res.b), pick_opt(args.c, &file.c, &mut res.c)) {
        (Some(b), Some(c)) => (b, c),
        (b, c) if args.mode != Mode::Sa => {
            let (bo, co) = calibrated(n, tau)?;
            res.b = Some(b.unwrap_or(bo));
            res.c = Some(c.unwrap_or(co));
            (b.unwrap_or(bo), c.unwrap_or(co))
        }
        _ => (0.0, 0.0),
    };
    let truth = if n <= MAX_ENUMERATION_SITES {
        Some(ground_truth(&problem, &args.instance, args.cache_gs)?)
    } else if measure == Measure::Fidelity || matches!(args.mode, Mode::Qa | Mode::Sa) {
        bail!("n = {n} is too large to enumerate ground states (limit {MAX_ENUMERATION_SITES})");
    } else {
        None
    };
    let schedule = ScheduleParams::new(1.0, b, tau, c)?;
    let cfg = QgoConfig {
        measure,
        delta,
        schedule,
        integrator,
        gradient: if args.average_gradient { GradientRule::Average3 } else { GradientRule::Forward },
    };
    match args.mode {
        Mode::Qa | Mode::Sa => {
            let truth = truth.as_ref().expect("checked above");
            let rec = if args.mode == Mode::Qa {
                run_qa(&problem, truth, &schedule, &integrator)?
            } else {
                run_sa(&problem, truth, tau, &integrator)?
            };
            println!("method: {}", rec.method);
            println!("success_probability: {:.16e}", rec.success);
            println!("target_probability: {:.16e}", rec.success_exact);
            println!("energy: {:.16e}", rec.energy);
            println!("ground_energy: {:.16e}", truth.energy);
        }
        mode => {
            let (config, trace) = match mode {
                Mode::Sequential => run_sequential(&QaMeasure::with_truth(&problem, &cfg, truth.as_ref())?, &cfg)?,
                Mode::SingleShot => run_single_shot(&QaMeasure::with_truth(&problem, &cfg, truth.as_ref())?, &cfg)?,
                _ => yfield_greedy(&problem, &cfg)?,
            };
            println!("config: {config}");
            println!("energy: {:.16e}", problem.energy(&config)?);
            println!("qa_calls: {}", trace.qa_calls);
            if let Some(truth) = &truth {
                println!("ground_energy: {:.16e}", truth.energy);
                println!("success: {}", solution_success(&config, truth));
            }
            if let Some(path) = &args.trace {
                write_file(path, &trace_table(&trace).to_csv())?;
                manifest.output(path);
                let details = json!({ "mode": format!("{mode:?}"), "b": b, "c": c });
                manifest.finish(&parent_dir(path), &layers.resolved, details)?;
            }
        }
    }
    Ok(())
}

pub fn configure_threads(threads: usize) {
    // a second build in the same process fails harmlessly
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn write_tables(dir: &Path, tables: &[Table], manifest: &mut ManifestBuilder) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_file(&path, &t.to_csv())?;
        manifest.output(&path);
        println!("wrote {} ({} rows)", path.display(), t.rows.len());
    }
    Ok(())
}

pub fn scan(args: ScanArgs, mut layers: Layers) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    let integrator = layers.integrator(RUN_STEPS)?;
    configure_threads(layers.threads());
    let (file, res) = (&layers.file, &mut layers.resolved);
    let tau = pick(args.tau, &file.tau, 1.0, &mut res.tau);
    let grid = pick(args.grid, &file.grid, 21, &mut res.grid);
    let measure = parse_measure(&pick(args.measure.clone(), &file.measure, "fidelity".into(), &mut res.measure))?;
    if let Some(figure) = &args.figure {
        let figure: Figure = figure.parse()?;
        if !matches!(figure, Figure::Fig1 | Figure::Fig2ab | Figure::Fig2cd | Figure::Fig3) {
            bail!("scan covers fig1, fig2ab, fig2cd and fig3; use `bench` for {figure}");
        }
        let Some(out) = &args.out else { bail!("--figure needs --out") };
        let sizes = pick_opt(args.sizes.clone(), &file.sizes, &mut res.sizes);
        let spec = SuiteSpec { sizes: sizes.as_deref().map(parse_sizes).transpose()?, grid, ..SuiteSpec::new(figure) };
        let output = run_suite(&spec)?;
        write_tables(out, &output.tables, &mut manifest)?;
        manifest.finish(out, &layers.resolved, json!({ "figure": figure.id(), "suite": spec }))?;
        return Ok(());
    }
    let family = match args.family.expect("clap requires --family or --figure") {
        Family::Meanfield => BcFamily::MeanField,
        Family::Ferro => BcFamily::Ferro { n: args.n.context("--family ferro needs --n")? },
    };
    let cfg = CalibrationConfig { grid, tau, integrator, measure, ..Default::default() };
    let opt = optimize_bc(family, &cfg)?;
    println!("b_opt: {:.16e}", opt.b);
    println!("c_opt: {:.16e}", opt.c);
    println!("value: {:.16e}", opt.value);
    println!("residual: {:.16e}", opt.residual);
    println!("converged: {}", opt.converged);
    if let Some(out) = &args.out {
        let mut t = Table::new("scan_grid", &["b", "c", "value"]);
        for p in &opt.grid {
            t.push(vec![Cell::from(p.b), Cell::from(p.c), Cell::from(p.value)]);
        }
        let mut best = Table::new("scan_optimum", &["b", "c", "value", "residual", "converged"]);
        best.push(vec![
            Cell::from(opt.b),
            Cell::from(opt.c),
            Cell::from(opt.value),
            Cell::from(opt.residual),
            Cell::from(opt.converged),
        ]);
        write_tables(out, &[t, best], &mut manifest)?;
        manifest.finish(out, &layers.resolved, json!({ "family": family }))?;
    }
    if !opt.converged {
        log::warn!("refinement did not converge; the reported point is the best found");
    }
    Ok(())
}

pub fn bench(args: BenchArgs, mut layers: Layers) -> Result<()> {
    let mut manifest = ManifestBuilder::start();
    let figure: Figure = args.figure.parse()?;
    let integrator = layers.integrator(SUITE_STEPS)?;
    configure_threads(layers.threads());
    let seed = layers.seed(0);
    let (file, res) = (&layers.file, &mut layers.resolved);
    let defaults = SuiteSpec::new(figure);
    let sizes = pick_opt(args.sizes.clone(), &file.sizes, &mut res.sizes);
    let spec = SuiteSpec {
        sizes: sizes.as_deref().map(parse_sizes).transpose()?,
        instances: pick(args.instances, &file.instances, defaults.instances, &mut res.instances),
        taus: pick_opt(args.tau.clone(), &file.taus, &mut res.taus),
        seed,
        integrator,
        measure: pick_opt(args.measure.clone(), &file.measure, &mut res.measure)
            .map(|m| parse_measure(&m))
            .transpose()?,
        delta: pick(args.delta, &file.delta, defaults.delta, &mut res.delta),
        resamples: pick(args.resamples, &file.resamples, defaults.resamples, &mut res.resamples),
        grid: pick(args.grid, &file.grid, defaults.grid, &mut res.grid),
        ..defaults
    };
    let output = run_suite(&spec)?;
    write_tables(&args.out, &output.tables, &mut manifest)?;
    let details = json!({
        "figure": figure.id(),
        "suite": spec,
        "resolved_sizes": spec.resolved_sizes(),
        "resolved_taus": spec.resolved_taus(),
    });
    manifest.finish(&args.out, &layers.resolved, details)?;
    Ok(())
}

fn emit(
    out: &Option<PathBuf>,
    table: &Table,
    layers: &Layers,
    details: serde_json::Value,
    inputs: &[&Path],
) -> Result<()> {
    match out {
        Some(path) => {
            let mut manifest = ManifestBuilder::start();
            for p in inputs {
                manifest.input(p);
            }
            write_file(path, &table.to_csv())?;
            manifest.output(path);
            manifest.finish(&parent_dir(path), &layers.resolved, details)?;
            println!("wrote {} ({} rows)", path.display(), table.rows.len());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn sampling(integrator: IntegratorConfig, tau: f64, samples: usize) -> IntegratorConfig {
    integrator.with_stride((integrator.steps_for(tau) / samples.max(1)).max(1))
}

pub fn trace(args: TraceArgs, mut layers: Layers) -> Result<()> {
    let integrator = layers.integrator(RUN_STEPS)?;
    let (file, res) = (&layers.file, &mut layers.resolved);
    let defaults = ScheduleParams::default();
    let tau = pick(args.tau, &file.tau, 1.0, &mut res.tau);
    let a = args.a.unwrap_or(defaults.a);
    if args.coeffs {
        let b = pick(args.b, &file.b, defaults.b, &mut res.b);
        let c = pick(args.c, &file.c, defaults.c_amp, &mut res.c);
        let p = ScheduleParams::new(a, b, tau, c)?;
        if args.points < 2 {
            bail!("--points must be at least 2");
        }
        let mut t = Table::new("coefficients", &["t", "a", "b", "c", "b_prime", "c_prime", "theta"]);
        for k in 0..args.points {
            let time = tau * k as f64 / (args.points - 1) as f64;
            let k = coefficients(time, &p, &CVector::uniform(1, c));
            let r = rotated_coefficients(time, &p, c);
            t.push(vec![
                Cell::from(time),
                Cell::from(k.a),
                Cell::from(k.b),
                Cell::from(k.c[0]),
                Cell::from(r.b_prime),
                Cell::from(r.c_prime),
                Cell::from(rotation_angle(time, &p, c)),
            ]);
        }
        return emit(&args.out, &t, &layers, json!({ "kind": "coefficients", "a": a }), &[]);
    }
    let Some(instance) = &args.instance else { bail!("--overlaps needs --instance") };
    let problem = load_problem(instance)?;
    let n = problem.n();
    let (b, c) = match (pick_opt(args.b, &file.b, &mut res.b), pick_opt(args.c, &file.c, &mut res.c)) {
        (Some(b), Some(c)) => (b, c),
        (b, c) => {
            let (bo, co) = calibrated(n, tau)?;
            res.b = Some(b.unwrap_or(bo));
            res.c = Some(c.unwrap_or(co));
            (b.unwrap_or(bo), c.unwrap_or(co))
        }
    };
    let coeffs = if args.qa {
        CVector::zeros(n)
    } else {
        let signs = args.signs.clone().unwrap_or_else(|| "+".repeat(n));
        if signs.chars().count() != n {
            bail!("--signs has {} entries for {n} sites", signs.chars().count());
        }
        let values = signs
            .chars()
            .map(|ch| match ch {
                '+' => Ok(c),
                '-' => Ok(-c),
                other => bail!("sign {other:?} is not + or -"),
            })
            .collect::<Result<Vec<f64>>>()?;
        CVector::new(values)
    };
    let p = ScheduleParams::new(a, b, tau, c)?;
    let mut t = Table::new("overlaps", &["t", "problem", "transverse", "full"]);
    for s in overlap_trace(&problem, &p, &coeffs, &sampling(integrator, tau, 100))? {
        t.push(vec![Cell::from(s.t), Cell::from(s.problem), Cell::from(s.transverse), Cell::from(s.full)]);
    }
    let details = json!({ "kind": "overlaps", "a": a, "coefficients": coeffs });
    emit(&args.out, &t, &layers, details, &[instance.as_path()])
}

pub fn meanfield(args: MeanfieldArgs, mut layers: Layers) -> Result<()> {
    let integrator = layers.integrator(RUN_STEPS)?.with_stride(args.stride.max(1));
    let (file, res) = (&layers.file, &mut layers.resolved);
    let defaults = ScheduleParams::default();
    let tau = pick(args.tau, &file.tau, 1.0, &mut res.tau);
    let b = pick(args.b, &file.b, defaults.b, &mut res.b);
    let details = json!({ "g": args.g, "h": args.h, "exact_cd": args.exact_cd, "stride": args.stride });
    if args.exact_cd {
        let samples = exact_cd_meanfield(args.g, args.h, b, tau, &integrator, &ExactCdConfig::default())?;
        let mut t =
            Table::new("exact_cd", &["t", "c_exact", "magnetization", "ground_fidelity", "ground_magnetization"]);
        for s in &samples {
            t.push(vec![
                Cell::from(s.t),
                Cell::from(s.c_exact),
                Cell::from(s.magnetization),
                Cell::from(s.ground_fidelity),
                Cell::from(s.ground_magnetization),
            ]);
        }
        let last = samples.last().context("empty trajectory")?;
        let worst = samples.iter().map(|s| s.ground_fidelity).fold(1.0, f64::min);
        emit(&args.out, &t, &layers, details, &[])?;
        eprintln!("final_magnetization: {:.16e}", last.magnetization);
        eprintln!("min_ground_fidelity: {worst:.16e}");
        return Ok(());
    }
    let c = pick(args.c, &file.c, defaults.c_amp, &mut res.c);
    let p = MeanFieldParams::new(b, c, tau).with_field(args.g, args.h);
    let samples = evolve_meanfield(&p, &integrator)?;
    let envelope = ScheduleParams::new(1.0, b, tau, c)?;
    let mut t = Table::new("meanfield", &["t", "x", "y", "z", "c_y"]);
    for s in &samples {
        let ab = s.state.alpha.conj() * s.state.beta;
        t.push(vec![
            Cell::from(s.t),
            Cell::from(2.0 * ab.re),
            Cell::from(2.0 * ab.im),
            Cell::from(s.magnetization),
            Cell::from(c * envelope.y_envelope(s.t)),
        ]);
    }
    let last = samples.last().context("empty trajectory")?;
    emit(&args.out, &t, &layers, details, &[])?;
    eprintln!("final_magnetization: {:.16e}", last.magnetization);
    Ok(())
}
