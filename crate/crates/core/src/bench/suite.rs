use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_meanfield, exact_cd_meanfield, overlap_trace, CollectiveEngine, ExactCdConfig, IntegratorConfig,
    MeanFieldParams,
};
use crate::error::{QgoError, Result};
use crate::measures::{ground_states, GroundTruth};
use crate::model::{ferro_problem, rotated_coefficients, sk_problem, CVector, IsingProblem, ScheduleParams};
use crate::qgo::{
    optimize_bc, run_sequential, run_single_shot, BcFamily, CalibrationConfig, Measure, QaMeasure, QgoConfig, QgoTrace,
};

use super::table::row;
use super::{
    bootstrap_ci, instance_seed, overhead_factor, run_greedy, run_qa, run_sa, tts, BenchRecord, Cell, Method, Table,
    DEFAULT_RESAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Figure {
    Fig1,
    Fig2ab,
    Fig2cd,
    Fig3,
    /// Also serves the rescaled variant.
    Fig4,
    /// Also serves the rescaled variant.
    Fig5,
    Fig6a,
    Fig6b,
    Fig7b,
    Fig8,
    Fig9,
    Fig10,
    FigS1,
    FigS2,
    FigS3,
}

impl Figure {
    pub const ALL: [Figure; 15] = [
        Figure::Fig1,
        Figure::Fig2ab,
        Figure::Fig2cd,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6a,
        Figure::Fig6b,
        Figure::Fig7b,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
        Figure::FigS1,
        Figure::FigS2,
        Figure::FigS3,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2ab => "fig2ab",
            Figure::Fig2cd => "fig2cd",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6a => "fig6a",
            Figure::Fig6b => "fig6b",
            Figure::Fig7b => "fig7b",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
            Figure::FigS1 => "figS1",
            Figure::FigS2 => "figS2",
            Figure::FigS3 => "figS3",
        }
    }

    /// Sizes used when the spec gives none.
    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Figure::Fig2ab | Figure::Fig2cd => vec![20],
            Figure::Fig3 => (4..=20).step_by(2).collect(),
            Figure::Fig4 | Figure::Fig5 | Figure::Fig8 | Figure::Fig10 => vec![8],
            Figure::Fig6a | Figure::Fig6b | Figure::Fig7b => (4..=12).step_by(2).collect(),
            Figure::Fig9 => (4..=12).collect(),
            Figure::Fig1 | Figure::FigS1 | Figure::FigS2 | Figure::FigS3 => Vec::new(),
        }
    }
}

impl std::fmt::Display for Figure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Figure {
    type Err = QgoError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        let key = match key.as_str() {
            "figs4" => "fig4",
            "figs5" => "fig5",
            k => k,
        };
        Figure::ALL
            .into_iter()
            .find(|f| f.id().to_ascii_lowercase() == key)
            .ok_or_else(|| QgoError::InvalidArgument(format!("unknown figure id {s:?}")))
    }
}

/// What to run. `None` fields fall back to the figure's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub figure: Figure,
    pub sizes: Option<Vec<usize>>,
    pub instances: usize,
    /// Annealing times; defaults to `[1]`.
    pub taus: Option<Vec<f64>>,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    /// Measure of the sequential greedy runs (default energy).
    pub measure: Option<Measure>,
    pub delta: f64,
    pub resamples: usize,
    /// Points per axis of parameter scans.
    pub grid: usize,
    /// Target probability of the time to solution.
    pub target: f64,
}

impl SuiteSpec {
    pub fn new(figure: Figure) -> Self {
        Self {
            figure,
            sizes: None,
            instances: 100,
            taus: None,
            seed: 0,
            integrator: IntegratorConfig::rk4(250),
            measure: None,
            delta: 0.1,
            resamples: DEFAULT_RESAMPLES,
            grid: 21,
            target: 0.99,
        }
    }

    pub fn resolved_sizes(&self) -> Vec<usize> {
        self.sizes.clone().unwrap_or_else(|| self.figure.default_sizes())
    }

    pub fn resolved_taus(&self) -> Vec<f64> {
        self.taus.clone().unwrap_or_else(|| vec![1.0])
    }

    fn validate(&self) -> Result<()> {
        if self.resolved_sizes().iter().any(|&n| n < 2) {
            return Err(QgoError::InvalidSize("suite sizes must be >= 2".into()));
        }
        if self.resolved_taus().iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(QgoError::InvalidArgument("suite annealing times must be > 0".into()));
        }
        if self.instances == 0 || self.grid < 2 || self.resamples == 0 {
            return Err(QgoError::InvalidArgument("suite needs instances >= 1, grid >= 2, resamples >= 1".into()));
        }
        if !(self.delta > 0.0) || !(self.target > 0.0 && self.target < 1.0) {
            return Err(QgoError::InvalidArgument("suite needs delta > 0 and a target in (0, 1)".into()));
        }
        self.integrator.validate()
    }

    fn measure(&self) -> Measure {
        self.measure.unwrap_or(Measure::Energy)
    }

    fn calibration(&self, tau: f64) -> CalibrationConfig {
        CalibrationConfig { grid: self.grid, tau, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub figure: Figure,
    pub tables: Vec<Table>,
    /// Per-instance results, sorted by `(n, tau, method, measure, instance)`.
    pub records: Vec<BenchRecord>,
}

/// Runs one figure. Output depends only on the spec.
pub fn run_suite(spec: &SuiteSpec) -> Result<SuiteOutput> {
    spec.validate()?;
    let sizes = spec.resolved_sizes();
    if sizes.iter().any(|&n| n > 16)
        && matches!(spec.figure, Figure::Fig6a | Figure::Fig6b | Figure::Fig7b | Figure::Fig9)
    {
        log::warn!("statevector sweeps beyond n = 16 take hours and need 2^n memory per probe");
    }
    let mut out = SuiteOutput { figure: spec.figure, tables: Vec::new(), records: Vec::new() };
    match spec.figure {
        Figure::Fig1 => fig1(spec, &mut out)?,
        Figure::Fig2ab => fig2ab(spec, &sizes, &mut out)?,
        Figure::Fig2cd => fig2cd(spec, &sizes, &mut out)?,
        Figure::Fig3 => fig3(spec, &sizes, &mut out)?,
        Figure::Fig4 => greedy_scans(spec, &sizes, false, &mut out)?,
        Figure::Fig5 => greedy_scans(spec, &sizes, true, &mut out)?,
        Figure::Fig6a | Figure::Fig6b => {
            let jobs = [(Method::Qgo, Some(spec.measure())), (Method::Qa, None), (Method::Sa, None)];
            sweep(spec, &sizes, &jobs, &mut out)?;
            if spec.figure == Figure::Fig6a {
                out.tables.push(success_summary(spec, &out.records)?);
            } else {
                out.tables.push(tts_summary(spec, &out.records)?);
            }
        }
        Figure::Fig7b => {
            let jobs = [(Method::Qgo, Some(spec.measure())), (Method::Yfield, Some(Measure::Energy))];
            sweep(spec, &sizes, &jobs, &mut out)?;
            out.tables.push(success_summary(spec, &out.records)?);
        }
        Figure::Fig8 => fig8(spec, &sizes, &mut out)?,
        Figure::Fig9 => {
            let jobs =
                [(Method::SingleShotQgo, Some(Measure::Fidelity)), (Method::SingleShotQgo, Some(Measure::Energy))];
            sweep(spec, &sizes, &jobs, &mut out)?;
            out.tables.push(success_summary(spec, &out.records)?);
        }
        Figure::Fig10 => fig10(spec, &sizes, &mut out)?,
        Figure::FigS1 => fig_s1(spec, &mut out),
        Figure::FigS2 => fig_s2(spec, &mut out)?,
        Figure::FigS3 => fig_s3(spec, &mut out)?,
    }
    if !out.records.is_empty() {
        out.tables.insert(0, records_table(spec.figure, &out.records));
    }
    Ok(out)
}

fn name(figure: Figure, part: &str) -> String {
    format!("{}_{part}", figure.id())
}

fn measure_str(m: Option<Measure>) -> &'static str {
    match m {
        Some(Measure::Energy) => "energy",
        Some(Measure::Fidelity) => "fidelity",
        None => "",
    }
}

/// `k`-th SK instance of size `n` under the master seed.
pub(crate) fn sk_instance(seed: u64, n: usize, k: usize) -> Result<IsingProblem> {
    sk_problem(n, instance_seed(seed, n, k))
}

#[derive(Debug, Clone, Copy)]
struct Calibrated {
    n: usize,
    tau: f64,
    b: f64,
    c: f64,
}

/// `(b_opt, c_opt)` of the ferromagnet of size `n` at annealing time `tau`.
fn calibrate(spec: &SuiteSpec, n: usize, tau: f64) -> Result<Calibrated> {
    let opt = optimize_bc(BcFamily::Ferro { n }, &spec.calibration(tau))?;
    Ok(Calibrated { n, tau, b: opt.b, c: opt.c })
}

fn calibration_table(figure: Figure, cals: &[Calibrated]) -> Table {
    let mut t = Table::new(name(figure, "calibration"), &["n", "tau", "b_opt", "c_opt"]);
    for c in cals {
        t.push(row![c.n, c.tau, c.b, c.c]);
    }
    t
}

fn qgo_config(spec: &SuiteSpec, cal: &Calibrated, measure: Measure) -> Result<QgoConfig> {
    Ok(QgoConfig {
        measure,
        delta: spec.delta,
        schedule: ScheduleParams::new(1.0, cal.b, cal.tau, cal.c)?,
        integrator: spec.integrator,
        ..Default::default()
    })
}

fn records_table(figure: Figure, records: &[BenchRecord]) -> Table {
    let mut t = Table::new(
        name(figure, "records"),
        &[
            "instance",
            "seed",
            "method",
            "measure",
            "n",
            "tau",
            "success",
            "success_kind",
            "success_exact",
            "energy",
            "qa_calls",
        ],
    );
    for r in records {
        t.push(row![
            r.instance,
            r.seed,
            r.method.as_str(),
            measure_str(r.measure),
            r.n,
            r.tau,
            r.success,
            r.success_kind.as_str(),
            r.success_exact,
            r.energy,
            r.qa_calls,
        ]);
    }
    t
}

/// Every `(method, measure)` job on every SK instance of every size and time.
fn sweep(spec: &SuiteSpec, sizes: &[usize], jobs: &[(Method, Option<Measure>)], out: &mut SuiteOutput) -> Result<()> {
    let taus = spec.resolved_taus();
    let mut cals = Vec::new();
    for &n in sizes {
        let here: Vec<Calibrated> = taus.iter().map(|&tau| calibrate(spec, n, tau)).collect::<Result<_>>()?;
        let per_instance: Vec<Vec<BenchRecord>> = (0..spec.instances)
            .into_par_iter()
            .map(|k| {
                let problem = sk_instance(spec.seed, n, k)?;
                let truth = ground_states(&problem)?;
                let mut recs = Vec::new();
                for (ti, cal) in here.iter().enumerate() {
                    for &(method, measure) in jobs {
                        // the rotation circuit has no annealing time
                        if method == Method::Yfield && ti > 0 {
                            continue;
                        }
                        let rec = run_job(spec, &problem, &truth, cal, method, measure)?;
                        recs.push(rec.with_instance(k));
                    }
                }
                Ok(recs)
            })
            .collect::<Result<_>>()?;
        out.records.extend(per_instance.into_iter().flatten());
        cals.extend(here);
    }
    out.records.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.tau.total_cmp(&b.tau))
            .then(a.method.cmp(&b.method))
            .then(measure_str(a.measure).cmp(measure_str(b.measure)))
            .then(a.instance.cmp(&b.instance))
    });
    out.tables.push(calibration_table(spec.figure, &cals));
    Ok(())
}

fn run_job(
    spec: &SuiteSpec,
    problem: &IsingProblem,
    truth: &GroundTruth,
    cal: &Calibrated,
    method: Method,
    measure: Option<Measure>,
) -> Result<BenchRecord> {
    match method {
        Method::Qa => run_qa(problem, truth, &ScheduleParams::new(1.0, cal.b, cal.tau, 0.0)?, &spec.integrator),
        Method::Sa => run_sa(problem, truth, cal.tau, &spec.integrator),
        Method::Yfield => {
            let mut rec = run_greedy(problem, truth, method, &qgo_config(spec, cal, Measure::Energy)?)?;
            rec.tau = 0.0;
            Ok(rec)
        }
        _ => run_greedy(problem, truth, method, &qgo_config(spec, cal, measure.unwrap_or(Measure::Energy))?),
    }
}

struct Group<'a> {
    n: usize,
    tau: f64,
    method: Method,
    measure: Option<Measure>,
    records: Vec<&'a BenchRecord>,
}

fn groups(records: &[BenchRecord]) -> Vec<Group<'_>> {
    let mut map: BTreeMap<(usize, u64, Method, &str), Group> = BTreeMap::new();
    for r in records {
        map.entry((r.n, r.tau.to_bits(), r.method, measure_str(r.measure)))
            .or_insert_with(|| Group { n: r.n, tau: r.tau, method: r.method, measure: r.measure, records: Vec::new() })
            .records
            .push(r);
    }
    map.into_values().collect()
}

fn group_seed(spec: &SuiteSpec, index: usize) -> u64 {
    instance_seed(spec.seed ^ 0xB007_57A9, 0, index)
}

struct GroupStats {
    mean: f64,
    lo: f64,
    hi: f64,
    exact_mean: f64,
    exact_lo: f64,
    exact_hi: f64,
}

fn group_stats(spec: &SuiteSpec, g: &Group, index: usize) -> Result<GroupStats> {
    let success: Vec<f64> = g.records.iter().map(|r| r.success).collect();
    let exact: Vec<f64> = g.records.iter().map(|r| r.success_exact).collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (lo, hi) = bootstrap_ci(&success, spec.resamples, 0.95, group_seed(spec, 2 * index))?;
    let (exact_lo, exact_hi) = bootstrap_ci(&exact, spec.resamples, 0.95, group_seed(spec, 2 * index + 1))?;
    Ok(GroupStats { mean: mean(&success), lo, hi, exact_mean: mean(&exact), exact_lo, exact_hi })
}

fn success_summary(spec: &SuiteSpec, records: &[BenchRecord]) -> Result<Table> {
    let mut t = Table::new(
        name(spec.figure, "summary"),
        &[
            "n",
            "tau",
            "method",
            "measure",
            "success_kind",
            "instances",
            "success_mean",
            "ci_lo",
            "ci_hi",
            "success_exact_mean",
            "exact_ci_lo",
            "exact_ci_hi",
        ],
    );
    for (i, g) in groups(records).iter().enumerate() {
        let s = group_stats(spec, g, i)?;
        t.push(row![
            g.n,
            g.tau,
            g.method.as_str(),
            measure_str(g.measure),
            g.records[0].success_kind.as_str(),
            g.records.len(),
            s.mean,
            s.lo,
            s.hi,
            s.exact_mean,
            s.exact_lo,
            s.exact_hi,
        ]);
    }
    Ok(t)
}

/// TTS from the mean success; the interval maps the success interval
/// through the (decreasing) TTS formula. `p = 1` is reported as `tau`.
fn tts_summary(spec: &SuiteSpec, records: &[BenchRecord]) -> Result<Table> {
    let mut t = Table::new(
        name(spec.figure, "tts"),
        &[
            "n",
            "tau",
            "method",
            "measure",
            "success_mean",
            "tts",
            "tts_lo",
            "tts_hi",
            "overhead",
            "tts_adjusted",
            "tts_adjusted_lo",
            "tts_adjusted_hi",
            "certain_success",
        ],
    );
    for (i, g) in groups(records).iter().enumerate() {
        let s = group_stats(spec, g, i)?;
        let f = |p: f64| tts(p, g.tau, spec.target);
        let (mid, lo, hi) = (f(s.mean)?, f(s.hi)?, f(s.lo)?);
        let overhead = overhead_factor(g.method, g.n).unwrap_or(1.0);
        t.push(row![
            g.n,
            g.tau,
            g.method.as_str(),
            measure_str(g.measure),
            s.mean,
            mid,
            lo,
            hi,
            overhead,
            mid * overhead,
            lo * overhead,
            hi * overhead,
            s.mean == 1.0,
        ]);
    }
    Ok(t)
}

fn axis(lo: f64, hi: f64, k: usize, points: usize) -> f64 {
    lo + (hi - lo) * k as f64 / (points - 1) as f64
}

fn fig1(spec: &SuiteSpec, out: &mut SuiteOutput) -> Result<()> {
    let opt = optimize_bc(BcFamily::MeanField, &spec.calibration(1.0))?;
    let mut grid = Table::new(name(spec.figure, "grid"), &["b", "c", "magnetization"]);
    for p in &opt.grid {
        grid.push(row![p.b, p.c, p.value]);
    }
    let mut best = Table::new(name(spec.figure, "optimum"), &["b", "c", "magnetization", "residual", "converged"]);
    best.push(row![opt.b, opt.c, opt.value, opt.residual, opt.converged]);
    out.tables.extend([grid, best]);
    Ok(())
}

fn fig2ab(spec: &SuiteSpec, sizes: &[usize], out: &mut SuiteOutput) -> Result<()> {
    let mut grid = Table::new(name(spec.figure, "grid"), &["n", "b", "c", "fidelity", "energy"]);
    let mut best =
        Table::new(name(spec.figure, "optimum"), &["n", "measure", "b", "c", "value", "residual", "converged"]);
    for &n in sizes {
        let fid = optimize_bc(BcFamily::Ferro { n }, &spec.calibration(1.0))?;
        let en = optimize_bc(
            BcFamily::Ferro { n },
            &CalibrationConfig { measure: Measure::Energy, ..spec.calibration(1.0) },
        )?;
        for (f, e) in fid.grid.iter().zip(&en.grid) {
            grid.push(row![n, f.b, f.c, f.value, e.value]);
        }
        for (m, o) in [("fidelity", &fid), ("energy", &en)] {
            best.push(row![n, m, o.b, o.c, o.value, o.residual, o.converged]);
        }
    }
    out.tables.extend([grid, best]);
    Ok(())
}

/// Anneals stopped early or run past `τ = 1`, over `τ_actual ∈ [0.5, 1.5]`
/// and `c ∈ [1, 2]` at the fidelity-optimal `b`.
fn fig2cd(spec: &SuiteSpec, sizes: &[usize], out: &mut SuiteOutput) -> Result<()> {
    let mut grid = Table::new(name(spec.figure, "grid"), &["n", "b", "tau_actual", "c", "fidelity", "energy"]);
    let k = spec.grid;
    for &n in sizes {
        let cal = calibrate(spec, n, 1.0)?;
        let engine = CollectiveEngine::ferro(n, 1.0)?;
        let cfg = CalibrationConfig::default().integrator;
        let rows: Vec<Vec<Cell>> = (0..k * k)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / k, idx % k);
                let t_end = axis(0.5, 1.5, i, k);
                let c = axis(1.0, 2.0, j, k);
                let p = ScheduleParams::new(1.0, cal.b, 1.0, c)?;
                let psi = engine.evolve_until(&p, c, &cfg, t_end)?;
                Ok(row![n, cal.b, t_end, c, psi.fidelity_all_up(), psi.energy()])
            })
            .collect::<Result<_>>()?;
        for r in rows {
            grid.push(r);
        }
    }
    out.tables.push(grid);
    Ok(())
}

fn fig3(spec: &SuiteSpec, sizes: &[usize], out: &mut SuiteOutput) -> Result<()> {
    let mut best = Table::new(
        name(spec.figure, "optimum"),
        &["n", "measure", "b", "c", "value", "residual", "converged", "final_magnetization"],
    );
    let mut traj = Table::new(name(spec.figure, "magnetization"), &["n", "t", "magnetization"]);
    let cfg = CalibrationConfig::default().integrator.with_stride(10);
    for &n in sizes {
        let engine = CollectiveEngine::ferro(n, 1.0)?;
        for measure in [Measure::Fidelity, Measure::Energy] {
            let o = optimize_bc(BcFamily::Ferro { n }, &CalibrationConfig { measure, ..spec.calibration(1.0) })?;
            let p = ScheduleParams::new(1.0, o.b, 1.0, o.c)?;
            let mut samples = Vec::new();
            let last = engine.evolve_observed(&p, o.c, &cfg, 1.0, |t, s| samples.push((t, s.magnetization())))?;
            best.push(row![
                n,
                measure_str(Some(measure)),
                o.b,
                o.c,
                o.value,
                o.residual,
                o.converged,
                last.magnetization()
            ]);
            if measure == Measure::Fidelity {
                for (t, m) in samples {
                    traj.push(row![n, t, m]);
                }
            }
        }
    }
    out.tables.extend([best, traj]);
    Ok(())
}

/// Coefficients in force at the start of `iteration`.
fn coefficients_before(trace: &QgoTrace, n: usize, amplitude: f64, iteration: usize) -> CVector {
    let mut c = CVector::zeros(n);
    for step in &trace.steps[..iteration] {
        for &(site, sign) in &step.assigned {
            c.set(site, f64::from(sign) * amplitude);
        }
    }
    c
}

/// Per-iteration scans of the measure against each `c_i ∈ [-2, 2]` along a
/// sequential run: ferromagnet with both measures, or an SK instance.
fn greedy_scans(spec: &SuiteSpec, sizes: &[usize], random: bool, out: &mut SuiteOutput) -> Result<()> {
    let mut scans =
        Table::new(name(spec.figure, "scans"), &["n", "measure", "iteration", "site", "status", "c", "value"]);
    let mut steps = Table::new(
        name(spec.figure, "steps"),
        &["n", "measure", "iteration", "site", "gradient", "sign", "measure_value", "qa_calls"],
    );
    let mut cals = Vec::new();
    for &n in sizes {
        let cal = calibrate(spec, n, 1.0)?;
        cals.push(cal);
        let (problem, measures) = if random {
            (sk_instance(spec.seed, n, 0)?, vec![spec.measure()])
        } else {
            (ferro_problem(n, 1.0)?, vec![Measure::Fidelity, Measure::Energy])
        };
        for measure in measures {
            let cfg = qgo_config(spec, &cal, measure)?;
            let qa = QaMeasure::new(&problem, &cfg)?;
            let (_, trace) = run_sequential(&qa, &cfg)?;
            let ms = measure_str(Some(measure));
            for step in &trace.steps {
                let chosen = step.assigned[0];
                for &(site, g) in &step.gradients {
                    let sign = if site == chosen.0 { chosen.1 } else { 0 };
                    steps.push(row![n, ms, step.iteration, site, g, sign, step.measure_value, step.qa_calls]);
                }
            }
            for iteration in 0..n {
                let base = coefficients_before(&trace, n, cal.c, iteration);
                let chosen = trace.steps[iteration].assigned[0].0;
                let jobs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..spec.grid).map(move |k| (s, k))).collect();
                let values: Vec<f64> = jobs
                    .par_iter()
                    .map(|&(site, k)| {
                        let mut c = base.clone();
                        c.set(site, axis(-2.0, 2.0, k, spec.grid));
                        qa.value(&c)
                    })
                    .collect::<Result<_>>()?;
                for (&(site, k), v) in jobs.iter().zip(values) {
                    let status = if site == chosen {
                        "selected"
                    } else if base.is_fixed(site) {
                        "fixed"
                    } else {
                        "candidate"
                    };
                    scans.push(row![n, ms, iteration, site, status, axis(-2.0, 2.0, k, spec.grid), v]);
                }
            }
        }
    }
    out.tables.extend([scans, steps, calibration_table(spec.figure, &cals)]);
    Ok(())
}

/// Single-shot scans on one SK instance: (a) fidelity and (b) energy
/// measure around the symmetry-broken base point, (c) every coefficient
/// re-scanned with the others at the energy-measure result.
fn fig8(spec: &SuiteSpec, sizes: &[usize], out: &mut SuiteOutput) -> Result<()> {
    let mut scans =
        Table::new(name(spec.figure, "scans"), &["n", "panel", "measure", "site", "assigned_sign", "c", "value"]);
    let mut result = Table::new(name(spec.figure, "result"), &["n", "measure", "site", "sign", "gradient", "success"]);
    let mut cals = Vec::new();
    for &n in sizes {
        let cal = calibrate(spec, n, 1.0)?;
        cals.push(cal);
        let problem = sk_instance(spec.seed, n, 0)?;
        let truth = ground_states(&problem)?;
        for (panel, measure) in [("a", Measure::Fidelity), ("b", Measure::Energy)] {
            let cfg = qgo_config(spec, &cal, measure)?;
            let qa = QaMeasure::with_truth(&problem, &cfg, Some(&truth))?;
            let (config, trace) = run_single_shot(&qa, &cfg)?;
            let ms = measure_str(Some(measure));
            let ok = crate::measures::solution_success(&config, &truth);
            let grads: BTreeMap<usize, f64> = trace.steps[0].gradients.iter().copied().collect();
            for (site, &s) in config.signs().iter().enumerate() {
                result.push(row![n, ms, site, s, grads.get(&site).copied().unwrap_or(f64::NAN), ok]);
            }
            let mut base = CVector::zeros(n);
            base.set(0, cal.c);
            scan_sites(spec, &qa, &base, config.signs(), |site, sign, c, v| {
                scans.push(row![n, panel, ms, site, sign, c, v]);
            })?;
            if measure == Measure::Energy {
                let fixed = trace.coefficients.clone();
                scan_sites(spec, &qa, &fixed, config.signs(), |site, sign, c, v| {
                    scans.push(row![n, "c", ms, site, sign, c, v]);
                })?;
            }
        }
    }
    out.tables.extend([scans, result, calibration_table(spec.figure, &cals)]);
    Ok(())
}

fn scan_sites<F>(spec: &SuiteSpec, qa: &QaMeasure, base: &CVector, signs: &[i8], mut emit: F) -> Result<()>
where
    F: FnMut(usize, i8, f64, f64),
{
    let n = base.len();
    let jobs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..spec.grid).map(move |k| (s, k))).collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(site, k)| {
            let mut c = base.clone();
            c.set(site, axis(-2.0, 2.0, k, spec.grid));
            qa.value(&c)
        })
        .collect::<Result<_>>()?;
    for (&(site, k), v) in jobs.iter().zip(values) {
        emit(site, signs[site], axis(-2.0, 2.0, k, spec.grid), v);
    }
    Ok(())
}

/// Ground-space overlaps for the ferromagnet and one SK instance, with the
/// sequential-QGO coefficients and with plain annealing.
fn fig10(spec: &SuiteSpec, sizes: &[usize], out: &mut SuiteOutput) -> Result<()> {
    let mut t =
        Table::new(name(spec.figure, "overlaps"), &["system", "n", "method", "t", "problem", "transverse", "full"]);
    let mut cals = Vec::new();
    for &n in sizes {
        let cal = calibrate(spec, n, 1.0)?;
        cals.push(cal);
        for (system, problem) in [("ferro", ferro_problem(n, 1.0)?), ("sk", sk_instance(spec.seed, n, 0)?)] {
            let cfg = qgo_config(spec, &cal, spec.measure())?;
            let (_, trace) = run_sequential(&QaMeasure::new(&problem, &cfg)?, &cfg)?;
            let steps = spec.integrator.steps_for(1.0);
            let integ = spec.integrator.with_stride((steps / 100).max(1));
            for (method, c) in [("qgo", trace.coefficients.clone()), ("qa", CVector::zeros(n))] {
                for s in overlap_trace(&problem, &cfg.schedule, &c, &integ)? {
                    t.push(row![system, n, method, s.t, s.problem, s.transverse, s.full]);
                }
            }
        }
    }
    out.tables.extend([t, calibration_table(spec.figure, &cals)]);
    Ok(())
}

fn fig_s1(spec: &SuiteSpec, out: &mut SuiteOutput) {
    let p = ScheduleParams { a: 1.0, b: 0.5, tau: 1.0, c_amp: 1.5 };
    let mut t = Table::new(name(spec.figure, "coefficients"), &["t", "a", "b_prime", "c_prime"]);
    let points = 10 * (spec.grid - 1) + 1;
    for k in 0..points {
        let time = axis(0.0, 1.0, k, points);
        let r = rotated_coefficients(time, &p, 1.5);
        t.push(row![time, p.a_at(time), r.b_prime, r.c_prime]);
    }
    out.tables.push(t);
}

fn fig_s2(spec: &SuiteSpec, out: &mut SuiteOutput) -> Result<()> {
    let mut t = Table::new(name(spec.figure, "trajectories"), &["b", "c", "t", "x", "y", "z"]);
    let cfg = spec.integrator.with_stride((spec.integrator.steps_for(1.0) / 100).max(1));
    for b in [0.0, 0.5, 1.0, 1.5, 2.0] {
        for c in [0.1, 0.5, 1.0, 1.5, 2.0] {
            for s in evolve_meanfield(&MeanFieldParams::new(b, c, 1.0), &cfg)? {
                let ab = s.state.alpha.conj() * s.state.beta;
                t.push(row![b, c, s.t, 2.0 * ab.re, 2.0 * ab.im, s.magnetization]);
            }
        }
    }
    out.tables.push(t);
    Ok(())
}

/// Exact counterdiabatic driving for several fields next to the mean-field
/// anneal with the fixed y-field profile.
fn fig_s3(spec: &SuiteSpec, out: &mut SuiteOutput) -> Result<()> {
    let mut t =
        Table::new(name(spec.figure, "driving"), &["series", "g", "h", "t", "c_y", "magnetization", "ground_fidelity"]);
    let defaults = ScheduleParams::default();
    let cfg = spec.integrator.with_stride((spec.integrator.steps_for(1.0) / 100).max(1));
    for (g, h) in [(0.0, 1.0), (1.0, 0.01), (1.0, 0.1), (1.0, 0.3), (1.0, 1.0)] {
        for s in exact_cd_meanfield(g, h, defaults.b, 1.0, &cfg, &ExactCdConfig::default())? {
            t.push(row!["exact-cd", g, h, s.t, s.c_exact, s.magnetization, s.ground_fidelity]);
        }
    }
    let p = MeanFieldParams::new(defaults.b, defaults.c_amp, 1.0);
    for s in evolve_meanfield(&p, &cfg)? {
        t.push(row!["qgo", 1.0, 0.0, s.t, defaults.c_amp * defaults.y_envelope(s.t), s.magnetization, f64::NAN]);
    }
    out.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(figure: Figure) -> SuiteSpec {
        SuiteSpec { sizes: Some(vec![4]), instances: 4, resamples: 200, grid: 5, seed: 7, ..SuiteSpec::new(figure) }
    }

    #[test]
    fn figure_ids_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.id().parse::<Figure>().unwrap(), f);
        }
        assert_eq!("figS4".parse::<Figure>().unwrap(), Figure::Fig4);
        assert_eq!("FIGS5".parse::<Figure>().unwrap(), Figure::Fig5);
        assert!("fig11".parse::<Figure>().is_err());
    }

    #[test]
    fn sweep_is_reproducible_and_sorted() {
        let spec = SuiteSpec { sizes: Some(vec![4, 5]), ..small(Figure::Fig6a) };
        let a = run_suite(&spec).unwrap();
        let b = run_suite(&spec).unwrap();
        let csv = |o: &SuiteOutput| o.tables.iter().map(Table::to_csv).collect::<Vec<_>>();
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(a.records.len(), 2 * 4 * 3);
        let keys: Vec<_> = a.records.iter().map(|r| (r.n, r.method, r.instance)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let names: Vec<&str> = a.tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["fig6a_records", "fig6a_calibration", "fig6a_summary"]);
    }

    #[test]
    fn summary_means_equal_record_means() {
        let out = run_suite(&small(Figure::Fig9)).unwrap();
        let summary = out.tables.iter().find(|t| t.name == "fig9_summary").unwrap();
        for row in &summary.rows {
            let Cell::Text(measure) = &row[3] else { panic!() };
            let recs: Vec<f64> =
                out.records.iter().filter(|r| measure_str(r.measure) == measure).map(|r| r.success).collect();
            let Cell::Real(mean) = row[6] else { panic!() };
            assert_eq!(mean, recs.iter().sum::<f64>() / recs.len() as f64);
        }
    }

    #[test]
    fn tts_table_has_adjusted_column() {
        let out = run_suite(&small(Figure::Fig6b)).unwrap();
        let t = out.tables.iter().find(|t| t.name == "fig6b_tts").unwrap();
        for row in &t.rows {
            let (Cell::Text(m), Cell::Real(over)) = (&row[2], &row[8]) else { panic!() };
            assert_eq!(*over, if m == "qgo" { 14.0 } else { 1.0 });
        }
    }

    #[test]
    fn small_figures_run() {
        for f in [Figure::FigS1, Figure::FigS2, Figure::FigS3, Figure::Fig1] {
            let out = run_suite(&small(f)).unwrap();
            assert!(out.tables.iter().all(|t| !t.rows.is_empty()), "{f}");
        }
        let out = run_suite(&SuiteSpec { sizes: Some(vec![4]), ..small(Figure::Fig4) }).unwrap();
        let scans = &out.tables[0];
        assert_eq!(scans.rows.len(), 2 * 4 * 4 * 5);
    }

    #[test]
    fn fig1_optimum_near_published_point() {
        let out = run_suite(&SuiteSpec { grid: 21, ..small(Figure::Fig1) }).unwrap();
        let best = &out.tables[1].rows[0];
        let (Cell::Real(b), Cell::Real(c)) = (&best[0], &best[1]) else { panic!() };
        assert!((b - 0.539).abs() < 0.005 && (c - 1.565).abs() < 0.005);
    }

    #[test]
    fn scan_figures_run() {
        for f in [Figure::Fig5, Figure::Fig8, Figure::Fig10, Figure::Fig2cd, Figure::Fig3, Figure::Fig2ab] {
            let out = run_suite(&SuiteSpec { sizes: Some(vec![4]), ..small(f) }).unwrap();
            assert!(out.tables.iter().all(|t| !t.rows.is_empty()), "{f}");
        }
    }
}
