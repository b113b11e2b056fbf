use std::sync::{Arc, Mutex};

use nptcorr::estimators::{derived_seed, measure_correlator, reference_bracket, CorrelatorEstimate, Sampling};
use nptcorr::fermion::{
    green_retarded, green_retarded_via_hadamard, green_retarded_via_protocol, mode_channel, mode_state, CoefficientResolution, MapKind,
};
use nptcorr::keldysh::{accessible_permutations, all_permutations, contour_classify, expand, word_label, ContourClass, NestedBracket};
use nptcorr::protocol::{AncillaNoise, Bracket, CachedFactory, ChannelFactory, ProtocolSpec};
use nptcorr::qmat::PauliString;
use nptcorr::{Complex64, QuantumChannel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, MapChoice};
use crate::output::ResultRow;
use crate::{CliError, Context};

/// Row of the `keldysh_table` CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeldyshRow {
    pub permutation: String,
    pub contour: String,
    pub accessible: bool,
    /// Bracket choices whose expansion contains the word, `;`-separated.
    pub brackets: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Table {
    Results(Vec<ResultRow>),
    Keldysh(Vec<KeldyshRow>),
}

impl Table {
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Self::Results(_) => {
                &["t", "t_prime", "estimate_re", "estimate_im", "stderr_re", "stderr_im", "analytic_re", "analytic_im", "shots", "method"]
            }
            Self::Keldysh(_) => &["permutation", "contour", "accessible", "brackets"],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Results(r) => r.len(),
            Self::Keldysh(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn results(&self) -> Option<&[ResultRow]> {
        match self {
            Self::Results(r) => Some(r),
            Self::Keldysh(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Value,
    /// Human-readable report for stdout.
    pub report: String,
    pub resolution: Option<CoefficientResolution>,
}

/// Validates and runs `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let diagnostics = config.validate();
    if !diagnostics.is_empty() {
        return Err(CliError::Invalid(diagnostics));
    }
    match config.experiment {
        ExperimentKind::GreenRetardedScan => green_scan(config),
        ExperimentKind::TwoPoint | ExperimentKind::ThreePoint => bracket_scan(config),
        ExperimentKind::HadamardCompare => hadamard_compare(config),
        ExperimentKind::KeldyshTable => keldysh_table(config),
        ExperimentKind::ConvergenceStudy => convergence(config),
    }
}

fn map_kind(config: &ExperimentConfig) -> MapKind<f64> {
    match config.protocol.map {
        MapChoice::Integrated => MapKind::Integrated,
        MapChoice::Trotter => MapKind::Trotter { dt: config.protocol.trotter_dt.unwrap_or(0.01) },
    }
}

/// Sampling for the `k`-th grid point; each point gets its own seed.
fn sampling(config: &ExperimentConfig, k: usize) -> Sampling {
    let p = &config.protocol;
    match (p.exact, p.seed) {
        (false, Some(seed)) => Sampling::Shots { shots: p.shots, seed: derived_seed(seed, k) },
        _ => Sampling::Exact,
    }
}

fn row(t: f64, t_prime: f64, e: &CorrelatorEstimate<f64>, analytic: Complex64, method: String) -> ResultRow {
    ResultRow {
        t,
        t_prime,
        estimate_re: e.value.re,
        estimate_im: e.value.im,
        stderr_re: e.std_error.re,
        stderr_im: e.std_error.im,
        analytic_re: analytic.re,
        analytic_im: analytic.im,
        shots: e.shots_used,
        method,
    }
}

fn error_summary(rows: &[ResultRow]) -> Value {
    let mut max_abs = 0.0f64;
    let mut within = 0usize;
    for r in rows {
        let d = Complex64::new(r.estimate_re - r.analytic_re, r.estimate_im - r.analytic_im);
        max_abs = max_abs.max(d.norm());
        if (d.re.abs() <= 3.0 * r.stderr_re || d.re.abs() <= 1e-12) && (d.im.abs() <= 3.0 * r.stderr_im || d.im.abs() <= 1e-12) {
            within += 1;
        }
    }
    json!({ "max_abs_error": max_abs, "rows_within_3_sigma": within, "rows": rows.len() })
}

fn report_rows(title: &str, rows: &[ResultRow]) -> String {
    let mut s = format!("{title}\n{:>8} {:>14} {:>14} {:>14} {:>14}  method\n", "t", "est_re", "est_im", "ana_re", "ana_im");
    for r in rows {
        s.push_str(&format!(
            "{:>8.3} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}  {}\n",
            r.t, r.estimate_re, r.estimate_im, r.analytic_re, r.analytic_im, r.method
        ));
    }
    s
}

fn green_scan(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (tp, n_ref, map) = (config.grid.t_prime, config.n_ref(), map_kind(config));
    let mut rows = Vec::new();
    let mut resolution = None;
    for (k, t) in config.grid.times().into_iter().enumerate() {
        let g = green_retarded_via_protocol(&config.model, t, tp, n_ref, map, sampling(config, k), config.protocol.route)
            .context(|| format!("G^R protocol at t = {t}"))?;
        resolution = resolution.or(g.resolution);
        let method = g.estimate.method.as_str().to_string();
        rows.push(row(t, tp, &g.estimate, green_retarded(&config.model, t, tp), method));
    }
    Ok(RunOutput {
        summary: error_summary(&rows),
        report: report_rows("G^R(t, t') via the robust protocol", &rows),
        table: Table::Results(rows),
        resolution,
    })
}

fn bracket_scan(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let p = &config.protocol;
    let (tp, n_ref, map) = (config.grid.t_prime, config.n_ref(), map_kind(config));
    let model = config.model;
    let seen = Arc::new(Mutex::new(None));
    let record = seen.clone();
    let factory: Arc<dyn ChannelFactory<f64>> = Arc::new(CachedFactory::new(Arc::new(move |a: f64, b: f64| {
        if a == b {
            return Ok(QuantumChannel::identity(1, (a, b)));
        }
        let (channel, resolution) = mode_channel(&model, a, b, n_ref, map)?;
        if let (Some(r), Ok(mut slot)) = (resolution, record.lock()) {
            slot.get_or_insert(r);
        }
        Ok(channel)
    })));
    let ops = p
        .ops
        .iter()
        .map(|s| s.parse::<PauliString>().map(|ps| ps.to_operator::<f64>()))
        .collect::<Result<Vec<_>, _>>()
        .context(|| "protocol.ops".into())?;
    let rho = mode_state(n_ref).context(|| "protocol.n_ref".into())?;
    let mut rows = Vec::new();
    for (k, t) in config.grid.times().into_iter().enumerate() {
        let times = match config.grid.t_mid {
            Some(m) if config.experiment == ExperimentKind::ThreePoint => vec![tp, m, t],
            _ => vec![tp, t],
        };
        let spec = ProtocolSpec::new(times, ops.clone(), p.brackets.clone(), factory.clone(), rho.clone())
            .context(|| format!("protocol spec at t = {t}"))?;
        let e = measure_correlator(&spec, sampling(config, k), p.route).context(|| format!("correlator at t = {t}"))?;
        let reference = reference_bracket(&spec).context(|| format!("reference bracket at t = {t}"))?;
        let method = e.method.as_str().to_string();
        rows.push(row(t, tp, &e, reference, method));
    }
    let resolution = seen.lock().ok().and_then(|g| *g);
    let title = format!("nested bracket of {} with {:?}", p.ops.join(", "), p.brackets);
    Ok(RunOutput { summary: error_summary(&rows), report: report_rows(&title, &rows), table: Table::Results(rows), resolution })
}

fn hadamard_compare(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (tp, n_ref, map) = (config.grid.t_prime, config.n_ref(), map_kind(config));
    let noise = AncillaNoise::new(config.noise.ancilla_dephasing).context(|| "noise.ancilla_dephasing".into())?;
    let mut rows = Vec::new();
    let mut resolution = None;
    for (k, t) in config.grid.times().into_iter().enumerate() {
        let analytic = green_retarded(&config.model, t, tp);
        let robust = green_retarded_via_protocol(&config.model, t, tp, n_ref, map, sampling(config, k), config.protocol.route)
            .context(|| format!("robust protocol at t = {t}"))?;
        let hadamard = green_retarded_via_hadamard(&config.model, t, tp, n_ref, map, &noise, sampling(config, k))
            .context(|| format!("Hadamard test at t = {t}"))?;
        resolution = resolution.or(robust.resolution);
        rows.push(row(t, tp, &robust.estimate, analytic, format!("robust:{}", robust.estimate.method.as_str())));
        rows.push(row(t, tp, &hadamard.estimate, analytic, format!("hadamard:{}", hadamard.estimate.method.as_str())));
    }
    let max_err = |prefix: &str| {
        rows.iter()
            .filter(|r| r.method.starts_with(prefix))
            .map(|r| Complex64::new(r.estimate_re - r.analytic_re, r.estimate_im - r.analytic_im).norm())
            .fold(0.0f64, f64::max)
    };
    let summary = json!({
        "ancilla_dephasing": config.noise.ancilla_dephasing,
        "robust_max_abs_error": max_err("robust:"),
        "hadamard_max_abs_error": max_err("hadamard:"),
    });
    Ok(RunOutput { summary, report: report_rows("robust protocol vs Hadamard test", &rows), table: Table::Results(rows), resolution })
}

fn bracket_label(b: &NestedBracket) -> String {
    b.brackets()
        .iter()
        .map(|x| match x {
            Bracket::Commutator => "-",
            Bracket::Anticommutator => "+",
        })
        .collect()
}

fn keldysh_table(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let n = config.keldysh.n;
    let brackets = NestedBracket::all(n).context(|| "keldysh.n".into())?;
    let accessible = accessible_permutations(n).context(|| "keldysh.n".into())?;
    let mut report = format!("nested brackets for n = {n} (+ anticommutator, - commutator)\n");
    for b in &brackets {
        let words: Vec<String> = expand(b).iter().map(|w| w.to_string()).collect();
        report.push_str(&format!("  [{}] {}\n", bracket_label(b), words.join(" ")));
    }
    let mut rows = Vec::new();
    for perm in all_permutations(n) {
        let class = contour_classify(&perm).context(|| "keldysh permutation".into())?;
        let reaching: Vec<String> =
            brackets.iter().filter(|b| expand(b).iter().any(|w| w.permutation == perm && w.coefficient != 0)).map(bracket_label).collect();
        rows.push(KeldyshRow {
            permutation: word_label(&perm),
            contour: match class {
                ContourClass::TwoBranch => "two_branch",
                ContourClass::MultiBranch => "multi_branch",
            }
            .into(),
            accessible: accessible.contains(&perm),
            brackets: reaching.join(";"),
        });
    }
    let acc: Vec<&str> = rows.iter().filter(|r| r.accessible).map(|r| r.permutation.as_str()).collect();
    let miss: Vec<&str> = rows.iter().filter(|r| !r.accessible).map(|r| r.permutation.as_str()).collect();
    report.push_str(&format!("accessible ({}): {}\n", acc.len(), acc.join(" ")));
    report.push_str(&format!("missing ({}): {}\n", miss.len(), miss.join(" ")));
    let summary = json!({ "n": n, "accessible": acc, "missing": miss });
    Ok(RunOutput { summary, report, table: Table::Keldysh(rows), resolution: None })
}

fn convergence(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (tp, n_ref) = (config.grid.t_prime, config.n_ref());
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &dt in &config.convergence.dts {
        let mut max_err = 0.0f64;
        for t in config.grid.times() {
            let g =
                green_retarded_via_protocol(&config.model, t, tp, n_ref, MapKind::Trotter { dt }, Sampling::Exact, config.protocol.route)
                    .context(|| format!("Trotter G^R at t = {t}, dt = {dt}"))?;
            let analytic = green_retarded(&config.model, t, tp);
            max_err = max_err.max((g.estimate.value - analytic).norm());
            rows.push(row(t, tp, &g.estimate, analytic, format!("trotter_dt={dt}")));
        }
        errors.push(max_err);
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let mut report = String::from("Trotter convergence of G^R\n      dt      max |error|   ratio\n");
    for (k, (dt, e)) in config.convergence.dts.iter().zip(&errors).enumerate() {
        let r = if k == 0 { String::new() } else { format!("{:.3}", ratios[k - 1]) };
        report.push_str(&format!("{dt:>8} {e:>16.6e}   {r}\n"));
    }
    let summary = json!({ "dts": config.convergence.dts, "max_abs_errors": errors, "ratios": ratios });
    Ok(RunOutput { summary, report, table: Table::Results(rows), resolution: None })
}
