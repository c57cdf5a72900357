use std::path::PathBuf;

use qcs_core::fock::{overlap_trace, purity_direct};
use qcs_core::hom::photon_distribution_phase_invariant;
use qcs_core::interferometer::photon_distribution;
use qcs_core::phase_space::{overlap_parity, overlap_wigner, wigner_eval, GridSpec};
use qcs_core::qcs::{overlap_gaussian, purity_from_pn, purity_gaussian, qcs_two_copy, qcs_two_copy_state};
use qcs_core::sampling::{estimate_qcs, sample_counts, SampledEstimate, ShotRecord, RNG_ALGORITHM};
use qcs_core::states::gaussian_covariance;
use qcs_core::{
    BigRational, DensityOperator, FockCutoff, Method, PhotonDistribution, QcsError, QcsEstimate,
    StateKind, StateSpec,
};
use serde::Serialize;

use crate::config::{CommandName, Format, Route, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_document, in_dir, json_document, Artifact, Metadata};
use crate::routes::{evaluate, evaluate_route, methods_for, pair_tolerance, RouteOutcome, RouteStatus};

/// Files to write, plus the failure (if any) that sets a nonzero exit
/// status after they are written.
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

impl RunOutput {
    fn single(cfg: &RunConfig, bytes: Vec<u8>) -> Self {
        Self {
            artifacts: vec![Artifact {
                path: cfg.out.clone(),
                bytes,
            }],
            failure: None,
        }
    }

    fn failing(mut self, failure: Option<CliError>) -> Self {
        self.failure = failure;
        self
    }
}

pub fn execute(cfg: &RunConfig) -> CliResult<RunOutput> {
    match cfg.command {
        CommandName::Qcs => cmd_qcs(cfg),
        CommandName::Purity => cmd_purity(cfg),
        CommandName::PnDist => cmd_pn_dist(cfg),
        CommandName::Overlap => cmd_overlap(cfg),
        CommandName::Compare => cmd_compare(cfg),
        CommandName::Figure2 => cmd_figure2(cfg),
        CommandName::Sample => cmd_sample(cfg),
        CommandName::Wigner => cmd_wigner(cfg),
    }
}

fn build(spec: &StateSpec) -> CliResult<DensityOperator> {
    Ok(spec.build_default()?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn status_str(s: RouteStatus) -> &'static str {
    match s {
        RouteStatus::Ok => "ok",
        RouteStatus::NotApplicable => "not_applicable",
        RouteStatus::Failed => "failed",
    }
}

fn routes_csv(routes: &[RouteOutcome]) -> String {
    let mut out = String::from("route,status,c_squared,numerator,denominator,uncertainty\n");
    for r in routes {
        let e = r.estimate.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.route,
            status_str(r.status),
            fmt_opt(e.map(|e| e.c_squared)),
            fmt_opt(e.map(|e| e.numerator)),
            fmt_opt(e.map(|e| e.denominator)),
            fmt_opt(e.and_then(|e| e.uncertainty)),
        ));
    }
    out
}

#[derive(Serialize)]
struct QcsReport<'a> {
    state: &'a StateSpec,
    cutoff: usize,
    routes: Vec<RouteOutcome>,
}

fn cmd_qcs(cfg: &RunConfig) -> CliResult<RunOutput> {
    let spec = &cfg.states[0];
    let rho = build(spec)?;
    let mut routes = evaluate_route(cfg.route, spec, &rho);
    let mut failure = routes.iter_mut().find_map(|r| r.error.take());
    if failure.is_none() && cfg.route != Route::All {
        if let Some(r) = routes.iter().find(|r| r.status == RouteStatus::NotApplicable) {
            failure = Some(CliError::Validation(format!(
                "route {} not applicable: {}",
                r.route,
                r.reason.as_deref().unwrap_or_default()
            )));
        }
    }
    let meta = Metadata::for_run(cfg);
    let bytes = match cfg.format {
        Format::Csv => csv_document(&meta, &routes_csv(&routes)),
        _ => json_document(
            &meta,
            &QcsReport {
                state: spec,
                cutoff: rho.dim(),
                routes,
            },
        ),
    };
    Ok(RunOutput::single(cfg, bytes).failing(failure))
}

#[derive(Debug, Serialize)]
pub struct ValueRow {
    pub route: &'static str,
    pub status: RouteStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ValueRow {
    fn from_result(route: &'static str, r: qcs_core::Result<f64>) -> (Self, Option<CliError>) {
        match r {
            Ok(v) => (
                Self {
                    route,
                    status: RouteStatus::Ok,
                    value: Some(v),
                    reason: None,
                },
                None,
            ),
            Err(QcsError::NotApplicable(why)) => (
                Self {
                    route,
                    status: RouteStatus::NotApplicable,
                    value: None,
                    reason: Some(why),
                },
                None,
            ),
            Err(e) => (
                Self {
                    route,
                    status: RouteStatus::Failed,
                    value: None,
                    reason: Some(e.to_string()),
                },
                Some(e.into()),
            ),
        }
    }
}

fn rows_csv(value_name: &str, rows: &[ValueRow]) -> String {
    let mut out = format!("route,status,{value_name}\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.route, status_str(r.status), fmt_opt(r.value)));
    }
    out
}

fn value_routes(route: Route) -> Vec<Route> {
    match route {
        Route::All => vec![Route::Direct, Route::TwoCopy, Route::Gaussian, Route::Wigner],
        r => vec![r],
    }
}

fn route_name(route: Route) -> &'static str {
    match route {
        Route::All => "all",
        Route::Direct => "direct",
        Route::TwoCopy => "two_copy",
        Route::Gaussian => "gaussian",
        Route::Wigner => "wigner",
    }
}

fn finish_rows(
    cfg: &RunConfig,
    value_name: &str,
    results: Vec<(&'static str, qcs_core::Result<f64>)>,
    body: impl FnOnce(Vec<ValueRow>) -> serde_json::Value,
) -> CliResult<RunOutput> {
    let mut failure = None;
    let mut rows = Vec::new();
    for (name, r) in results {
        let (row, err) = ValueRow::from_result(name, r);
        if row.status == RouteStatus::NotApplicable && cfg.route != Route::All && failure.is_none() {
            failure = Some(CliError::Validation(format!(
                "route {name} not applicable: {}",
                row.reason.as_deref().unwrap_or_default()
            )));
        }
        failure = failure.or(err);
        rows.push(row);
    }
    let meta = Metadata::for_run(cfg);
    let bytes = match cfg.format {
        Format::Csv => csv_document(&meta, &rows_csv(value_name, &rows)),
        _ => json_document(&meta, &body(rows)),
    };
    Ok(RunOutput::single(cfg, bytes).failing(failure))
}

fn cmd_purity(cfg: &RunConfig) -> CliResult<RunOutput> {
    let spec = &cfg.states[0];
    let rho = build(spec)?;
    let results = value_routes(cfg.route)
        .into_iter()
        .map(|r| {
            let value = match r {
                Route::Direct => Ok(purity_direct(&rho)),
                Route::TwoCopy => photon_distribution(&rho, &rho).map(|pn| purity_from_pn(&pn)),
                Route::Gaussian => gaussian_covariance(spec).and_then(|c| purity_gaussian(&c)),
                Route::Wigner => GridSpec::default_for(&rho)
                    .and_then(|g| wigner_eval(&rho, &g))
                    .map(|w| w.purity()),
                Route::All => unreachable!("expanded above"),
            };
            (route_name(r), value)
        })
        .collect();
    let cutoff = rho.dim();
    finish_rows(cfg, "purity", results, |rows| {
        serde_json::json!({ "state": spec, "cutoff": cutoff, "routes": rows })
    })
}

fn cmd_overlap(cfg: &RunConfig) -> CliResult<RunOutput> {
    let (sa, sb) = (&cfg.states[0], &cfg.states[1]);
    let a = build(sa)?;
    let b = build(sb)?;
    let results = value_routes(cfg.route)
        .into_iter()
        .map(|r| {
            let value = match r {
                Route::Direct => overlap_trace(&a, &b),
                Route::TwoCopy => overlap_parity(&a, &b),
                Route::Gaussian => gaussian_covariance(sa)
                    .and_then(|ga| Ok((ga, gaussian_covariance(sb)?)))
                    .and_then(|(ga, gb)| overlap_gaussian(&ga, &gb)),
                Route::Wigner => GridSpec::default_for(&a)
                    .and_then(|ga| ga.union(&GridSpec::default_for(&b)?))
                    .and_then(|g| overlap_wigner(&a, &b, &g)),
                Route::All => unreachable!("expanded above"),
            };
            (route_name(r), value)
        })
        .collect();
    let cutoffs = [a.dim(), b.dim()];
    finish_rows(cfg, "overlap", results, |rows| {
        serde_json::json!({ "states": [sa, sb], "cutoffs": cutoffs, "routes": rows })
    })
}

#[derive(Serialize)]
struct PnReport<'a> {
    states: &'a [StateSpec],
    cutoffs: Vec<usize>,
    deficit: f64,
    odd_mass: f64,
    p_n: &'a [f64],
}

fn cmd_pn_dist(cfg: &RunConfig) -> CliResult<RunOutput> {
    let a = build(&cfg.states[0])?;
    let b = match cfg.states.get(1) {
        Some(s) => build(s)?,
        None => a.clone(),
    };
    let pn = photon_distribution(&a, &b)?;
    let meta = Metadata::for_run(cfg);
    let bytes = match cfg.format {
        Format::Csv => csv_document(&meta, &pn.to_csv()),
        _ => json_document(
            &meta,
            &PnReport {
                states: &cfg.states,
                cutoffs: vec![a.dim(), b.dim()],
                deficit: *pn.deficit(),
                odd_mass: pn.odd_mass(),
                p_n: pn.probs(),
            },
        ),
    };
    Ok(RunOutput::single(cfg, bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub a: Method,
    pub b: Method,
    pub deviation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub state: StateSpec,
    pub cutoff: usize,
    pub routes: Vec<RouteOutcome>,
    /// Largest pairwise `|C²_a - C²_b|` among routes that ran.
    pub max_deviation: Option<f64>,
    /// Same, restricted to pairs not involving the gradient route.
    pub max_deviation_exact: Option<f64>,
    pub violations: Vec<Violation>,
    pub within_tolerance: bool,
}

impl CompareReport {
    pub fn estimate(&self, method: Method) -> Option<&QcsEstimate> {
        self.routes
            .iter()
            .find(|r| r.route == method)
            .and_then(|r| r.estimate.as_ref())
    }

    pub fn failed_routes(&self) -> Vec<Method> {
        self.routes
            .iter()
            .filter(|r| r.status == RouteStatus::Failed)
            .map(|r| r.route)
            .collect()
    }
}

/// Every route on one state, with pairwise deviations checked against the
/// route-specific tolerances. Inapplicable routes are listed, not failed.
pub fn run_compare(spec: &StateSpec) -> CliResult<CompareReport> {
    let rho = build(spec)?;
    let routes: Vec<RouteOutcome> = methods_for(Route::All)
        .iter()
        .map(|&m| evaluate(m, spec, &rho))
        .collect();
    let ok: Vec<(Method, f64)> = routes
        .iter()
        .filter_map(|r| r.estimate.as_ref().map(|e| (r.route, e.c_squared)))
        .collect();
    let mut max_dev: Option<f64> = None;
    let mut max_exact: Option<f64> = None;
    let mut violations = Vec::new();
    for (i, &(ma, va)) in ok.iter().enumerate() {
        for &(mb, vb) in &ok[i + 1..] {
            let dev = (va - vb).abs();
            let tol = pair_tolerance(ma, mb);
            max_dev = Some(max_dev.map_or(dev, |m| m.max(dev)));
            if tol == crate::routes::EXACT_ROUTE_TOL {
                max_exact = Some(max_exact.map_or(dev, |m| m.max(dev)));
            }
            // NaN deviations count as violations
            if !(dev <= tol) {
                violations.push(Violation {
                    a: ma,
                    b: mb,
                    deviation: dev,
                    tolerance: tol,
                });
            }
        }
    }
    let within = violations.is_empty() && routes.iter().all(|r| r.status != RouteStatus::Failed);
    Ok(CompareReport {
        state: spec.clone(),
        cutoff: rho.dim(),
        routes,
        max_deviation: max_dev,
        max_deviation_exact: max_exact,
        violations,
        within_tolerance: within,
    })
}

fn cmd_compare(cfg: &RunConfig) -> CliResult<RunOutput> {
    let mut report = run_compare(&cfg.states[0])?;
    if cfg.route != Route::All {
        let keep = methods_for(cfg.route);
        report.routes.retain(|r| keep.contains(&r.route));
        report.violations.retain(|v| keep.contains(&v.a) && keep.contains(&v.b));
    }
    let failure = if report.within_tolerance {
        None
    } else {
        let mut parts: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("{} vs {}: {:.3e} > {:.0e}", v.a, v.b, v.deviation, v.tolerance))
            .collect();
        for r in report.routes.iter().filter(|r| r.status == RouteStatus::Failed) {
            parts.push(format!("{} failed: {}", r.route, r.reason.as_deref().unwrap_or_default()));
        }
        Some(CliError::Tolerance(format!("route comparison failed: {}", parts.join("; "))))
    };
    let meta = Metadata::for_run(cfg);
    let bytes = match cfg.format {
        Format::Csv => csv_document(&meta, &routes_csv(&report.routes)),
        _ => json_document(&meta, &report),
    };
    Ok(RunOutput::single(cfg, bytes).failing(failure))
}

/// Rows of the p_n columns.
pub const FIGURE2_ROWS: usize = 25;
/// Truncation for the thermal column, tight enough that the pipeline p_n
/// match the geometric law to 1e-10.
pub const FIGURE2_THERMAL_DEFICIT: f64 = 1e-12;
pub const FIGURE2_THERMAL_Q: f64 = 0.85;

#[derive(Debug, Clone, Serialize)]
pub struct Figure2Entry {
    pub name: &'static str,
    pub file: &'static str,
    pub state: StateSpec,
    pub cutoff: usize,
    pub mean_photon_number: f64,
    pub purity: f64,
    pub c_squared: f64,
    pub purity_exact: String,
    pub c_squared_exact: String,
    /// Two-decimal values, for comparison with rounded published numbers.
    pub purity_rounded: f64,
    pub c_squared_rounded: f64,
    #[serde(skip)]
    pub p_n: PhotonDistribution,
}

#[derive(Debug, Clone, Serialize)]
pub struct Figure2 {
    pub rows: usize,
    pub entries: Vec<Figure2Entry>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Exact purity and `C²` of a Fock mixture through the rational pipeline.
fn exact_fock_mixture(levels: &[usize]) -> CliResult<(BigRational, BigRational)> {
    let len = levels.iter().max().copied().unwrap_or(0) + 1;
    let mut lam = vec![rational(0, 1); len];
    let w = rational(1, levels.len() as i64);
    for &n in levels {
        lam[n] = w.clone();
    }
    let pn = photon_distribution_phase_invariant(&lam, &lam)?;
    let est = qcs_two_copy(&pn)?;
    Ok((est.denominator, est.c_squared))
}

fn figure2_entry(
    name: &'static str,
    file: &'static str,
    spec: StateSpec,
    exact: (BigRational, BigRational),
) -> CliResult<Figure2Entry> {
    let rho = build(&spec)?;
    let pn = photon_distribution(&rho, &rho)?;
    let est = qcs_two_copy(&pn)?;
    Ok(Figure2Entry {
        name,
        file,
        cutoff: rho.dim(),
        mean_photon_number: spec.mean_photon_number()?,
        state: spec,
        purity: est.denominator,
        c_squared: est.c_squared,
        purity_exact: exact.0.to_string(),
        c_squared_exact: exact.1.to_string(),
        purity_rounded: round2(est.denominator),
        c_squared_rounded: round2(est.c_squared),
        p_n: pn.resized(FIGURE2_ROWS),
    })
}

/// p_n columns for `ρ_10`, `ρ_even,5` and the thermal state with
/// `q = 0.85`, with their purities and `C²`.
pub fn run_figure2() -> CliResult<Figure2> {
    let m = 5;
    let rho_2m = StateSpec::new(StateKind::Rho2M { m });
    let levels_2m: Vec<usize> = (1..=2 * m).collect();
    let rho_even = StateSpec::new(StateKind::RhoEvenM { m });
    let levels_even: Vec<usize> = (1..=m).map(|n| 2 * n).collect();

    let q = FIGURE2_THERMAL_Q;
    let thermal_kind = StateKind::Thermal {
        q: Some(q),
        mean_n: None,
    };
    let dim = thermal_kind.default_cutoff(FIGURE2_THERMAL_DEFICIT)?;
    FockCutoff::new(dim)?;
    let thermal = StateSpec::new(thermal_kind).with_cutoff(dim);
    // (1-q)/(1+q) with q = 17/20 is both purity and C²
    let q_exact = rational(17, 20);
    let one = rational(1, 1);
    let thermal_exact = (&one - &q_exact) / (&one + &q_exact);

    let entries = vec![
        figure2_entry(
            "rho_10",
            "rho_10.csv",
            rho_2m,
            exact_fock_mixture(&levels_2m)?,
        )?,
        figure2_entry(
            "rho_even_5",
            "rho_even_5.csv",
            rho_even,
            exact_fock_mixture(&levels_even)?,
        )?,
        figure2_entry(
            "thermal_0.85",
            "thermal_0.85.csv",
            thermal,
            (thermal_exact.clone(), thermal_exact),
        )?,
    ];
    Ok(Figure2 {
        rows: FIGURE2_ROWS,
        entries,
    })
}

fn cmd_figure2(cfg: &RunConfig) -> CliResult<RunOutput> {
    let fig = run_figure2()?;
    let meta = Metadata::for_run(cfg);
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut artifacts: Vec<Artifact> = fig
        .entries
        .iter()
        .map(|e| Artifact {
            path: Some(in_dir(Some(&dir), e.file)),
            bytes: csv_document(&meta, &e.p_n.to_csv()),
        })
        .collect();
    artifacts.push(Artifact {
        path: Some(in_dir(Some(&dir), "summary.json")),
        bytes: json_document(&meta, &fig),
    });
    Ok(RunOutput {
        artifacts,
        failure: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub state: StateSpec,
    pub cutoff: usize,
    /// Infinite-shot value from the exact p_n.
    pub exact: QcsEstimate,
    pub record: ShotRecord,
    pub estimate: SampledEstimate,
}

pub fn run_sample(spec: &StateSpec, shots: u64, seed: u64, resamples: usize) -> CliResult<SampleReport> {
    if shots == 0 {
        return Err(CliError::Validation("--shots must be at least 1".into()));
    }
    let rho = build(spec)?;
    let pn = photon_distribution(&rho, &rho)?;
    let record = sample_counts(&pn, shots, seed)?;
    let estimate = estimate_qcs(&record, resamples)?;
    Ok(SampleReport {
        state: spec.clone(),
        cutoff: rho.dim(),
        exact: qcs_two_copy_state(&rho)?,
        record,
        estimate,
    })
}

fn cmd_sample(cfg: &RunConfig) -> CliResult<RunOutput> {
    let shots = cfg
        .shots
        .ok_or_else(|| CliError::Validation("`sample` needs --shots".into()))?;
    let report = run_sample(&cfg.states[0], shots, cfg.seed, cfg.resamples)?;
    let mut meta = Metadata::for_run(cfg);
    meta.rng = Some(RNG_ALGORITHM);
    Ok(RunOutput::single(cfg, json_document(&meta, &report)))
}

fn cmd_wigner(cfg: &RunConfig) -> CliResult<RunOutput> {
    let rho = build(&cfg.states[0])?;
    let grid = wigner_eval(&rho, &GridSpec::default_for(&rho)?)?;
    let bytes = match cfg.format {
        Format::Bin => grid.to_binary(),
        _ => csv_document(&Metadata::for_run(cfg), &grid.to_csv()),
    };
    Ok(RunOutput::single(cfg, bytes))
}
