//! Runs one configured experiment and writes its CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::config::{ExperimentConfig, Task, XPath};
use crate::error::{Error, Result};
use crate::gluing::{fit_rate, glue_with, GlueOptions, GluingMode, GluingReport};
use crate::lemmas::{lemma_sweep, neutral_one_step_bounds, write_sweep_csv, NeutralBranch};
use crate::maps::{Map, PiecewiseBijectiveMap};
use crate::output::{write_file, SummaryRow};
use crate::perturbation::{generate_pseudo, random_point, rng_from_seed, ExperimentRng, PerturbationKind};
use crate::rate::{monotone_envelope, sparse_position, sparse_rate_example, FitFamily};
use crate::shadowing::{
    check_shadowing, consecutive_glue_with, parallel_glue_with, MergeMethod, ShadowKind, ShadowOptions,
};
use crate::space::{State, TrajectoryWindow};

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Pass,
    BoundFailure,
    Usage,
    Numerical,
}

impl RunStatus {
    pub fn code(self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::BoundFailure => 1,
            RunStatus::Usage => 2,
            RunStatus::Numerical => 3,
        }
    }

    /// Status for an error that aborted a run.
    pub fn of_error(e: &Error) -> Self {
        if e.is_numerical() {
            RunStatus::Numerical
        } else {
            RunStatus::Usage
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub summary: SummaryRow,
    pub files: Vec<PathBuf>,
    /// The numerical failure that stopped the run, if any.
    pub error: Option<Error>,
}

/// Runs `cfg`, writing every artifact into `out`.
///
/// Numerical failures still produce a `summary.csv` with `pass=fail` and
/// whatever detailed CSVs were already written; usage errors are returned.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut summary = SummaryRow {
        task: cfg.task.name().to_string(),
        map: cfg.map.kind().to_string(),
        seed: cfg.seed,
        ..SummaryRow::default()
    };
    let result = match cfg.task {
        Task::Glue => run_glue(cfg, out, &mut summary, &mut files),
        Task::Rates => run_rates(cfg, out, &mut summary, &mut files),
        Task::Shadow => run_shadow(cfg, out, &mut summary, &mut files),
        Task::Lemmas => run_lemmas(cfg, out, &mut summary, &mut files),
        Task::Envelope => run_envelope(cfg, out, &mut summary, &mut files),
    };
    match result {
        Ok(()) => {
            files.push(summary.write(out)?);
            let status = if summary.pass {
                RunStatus::Pass
            } else {
                RunStatus::BoundFailure
            };
            Ok(RunOutcome {
                status,
                summary,
                files,
                error: None,
            })
        }
        Err(e) if e.is_numerical() => {
            summary.pass = false;
            files.push(summary.write(out)?);
            Ok(RunOutcome {
                status: RunStatus::Numerical,
                summary,
                files,
                error: Some(e),
            })
        }
        Err(e) => Err(e),
    }
}

/// The inequality a map's known rate is proven for.
fn proven_mode(map: &Map) -> GluingMode {
    match map {
        Map::Neutral(_) => GluingMode::Weak,
        _ => GluingMode::Strong,
    }
}

fn verdict(report: &GluingReport, mode: GluingMode) -> bool {
    report.rate().is_some()
        && match mode {
            GluingMode::Strong => report.strong_ok(),
            GluingMode::Weak => report.weak_ok(),
        }
}

/// Pulls `x0` back `len` steps along branches chosen by `path`.
fn backward_window(map: &Map, x0: State, len: usize, path: XPath, rng: &mut ExperimentRng) -> Result<TrajectoryWindow> {
    let mut pts = Vec::with_capacity(len + 1);
    let mut cur = x0;
    pts.push(cur);
    for _ in 0..len {
        let branch = match path {
            XPath::Left => 0,
            XPath::Right => map.branch_count() - 1,
            XPath::Random => rng.random_range(0..map.branch_count()),
        };
        cur = map.inverse_in_branch(branch, &cur)?;
        pts.push(cur);
    }
    pts.reverse();
    TrajectoryWindow::new(pts, len)
}

fn run_glue(cfg: &ExperimentConfig, out: &Path, summary: &mut SummaryRow, files: &mut Vec<PathBuf>) -> Result<()> {
    let space = cfg.map.space();
    let g = &cfg.glue;
    let mut rng = rng_from_seed(cfg.seed.unwrap_or(0));
    let x0 = State::from_coords(space, &g.x0)?;
    let y0 = State::from_coords(space, &g.y0)?;
    let x = backward_window(&cfg.map, x0, g.back_len, g.x_path, &mut rng)?;
    let y = TrajectoryWindow::forward_orbit(&cfg.map, y0, g.fwd_len + 1);
    let opts = GlueOptions {
        policy: g.policy,
        ..GlueOptions::default()
    };
    let report = glue_with(&cfg.map, &x, &y, &opts)?;
    files.push(write_file(out, "glue.csv", |w| report.write_csv(w))?);
    summary.window = Some(report.z().len());
    summary.uniform_err = Some(report.errors().iter().copied().fold(0.0, f64::max));
    summary.bound = report.rate().and_then(|r| r.phi().ok());
    summary.pass = verdict(&report, proven_mode(&cfg.map)) && report.defect() <= cfg.tolerances.defect;
    Ok(())
}

fn run_rates(cfg: &ExperimentConfig, out: &Path, summary: &mut SummaryRow, files: &mut Vec<PathBuf>) -> Result<()> {
    let space = cfg.map.space();
    let g = &cfg.glue;
    let mut rng = rng_from_seed(cfg.seed.unwrap_or(0));
    let opts = GlueOptions {
        policy: g.policy,
        ..GlueOptions::default()
    };
    let mode = proven_mode(&cfg.map);
    let mut rows = Vec::with_capacity(cfg.rate_pairs);
    let mut all_ok = true;
    let mut worst = 0.0f64;
    for pair in 0..cfg.rate_pairs {
        let x0 = random_point(space, &mut rng);
        let y0 = match cfg.map {
            // toral gluing is local: keep y0 near x0
            Map::Torus(_) => {
                let d = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
                State::torus(x0.x() + 0.3 * d[0], x0.y() + 0.3 * d[1])
            }
            _ => random_point(space, &mut rng),
        };
        let x = backward_window(&cfg.map, x0, g.back_len, XPath::Random, &mut rng)?;
        let y = TrajectoryWindow::forward_orbit(&cfg.map, y0, g.fwd_len + 1);
        let report = glue_with(&cfg.map, &x, &y, &opts)?;
        let ok = verdict(&report, mode);
        all_ok &= ok && report.defect() <= cfg.tolerances.defect;
        worst = report.errors().iter().copied().fold(worst, f64::max);
        let fit = fit_rate(&report).ok();
        let (family, c, exponent) = match fit.map(|f| f.family) {
            Some(FitFamily::Exponential { c, lambda }) => ("exponential", Some(c), Some(lambda)),
            Some(FitFamily::Power { c, gamma }) => ("power", Some(c), Some(gamma)),
            Some(FitFamily::Zero) => ("zero", None, None),
            None => ("", None, None),
        };
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        rows.push(format!(
            "{pair},{},{},{family},{},{},{},{},{},{}",
            report.anchor(),
            fit.map(|f| f.side.to_string()).unwrap_or_default(),
            f(c),
            f(exponent),
            f(fit.map(|f| f.residual_exp)),
            f(fit.map(|f| f.residual_pow)),
            report.strong_ok(),
            report.weak_ok(),
        ));
    }
    files.push(write_file(out, "rates.csv", |w| {
        use std::io::Write;
        writeln!(
            w,
            "pair,anchor,side,family,C,exponent,residual_exp,residual_pow,strong_ok,weak_ok"
        )?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })?);
    summary.window = Some(g.back_len + g.fwd_len + 1);
    summary.uniform_err = Some(worst);
    summary.pass = all_ok && cfg.rate_pairs > 0;
    Ok(())
}

fn run_shadow(cfg: &ExperimentConfig, out: &Path, summary: &mut SummaryRow, files: &mut Vec<PathBuf>) -> Result<()> {
    let spec = cfg
        .perturbation
        .as_ref()
        .ok_or_else(|| Error::ConfigMissing("perturbation.kind".into()))?;
    let mut rng = rng_from_seed(spec.seed);
    let gen = generate_pseudo(&cfg.map, spec, &mut rng)?;
    let p = &gen.pseudo;
    let opts = ShadowOptions {
        amplitude_cap: Some(gen.amplitude_cap),
        policy: cfg.glue.policy,
        ..ShadowOptions::default()
    };
    let report = match cfg.method {
        MergeMethod::Parallel => parallel_glue_with(&cfg.map, p, &opts)?,
        MergeMethod::Consecutive => consecutive_glue_with(&cfg.map, p, &opts)?,
    };
    files.push(write_file(out, "shadow.csv", |w| report.write_csv(p.window(), w))?);
    files.push(write_file(out, "levels.csv", |w| report.write_levels_csv(w))?);

    let (pair, eps) = match spec.kind {
        PerturbationKind::Uniform => ((spec.kind, ShadowKind::Uniform), spec.epsilon),
        PerturbationKind::Rare => (
            (spec.kind, ShadowKind::Average),
            report.checks.as_ref().map_or(spec.epsilon, |c| c.density),
        ),
        PerturbationKind::Average => ((spec.kind, ShadowKind::Average), spec.epsilon),
    };
    let v = check_shadowing(pair, eps, &report);
    let gaps_ok = report
        .checks
        .as_ref()
        .and_then(|c| c.gap.as_ref())
        .is_none_or(|g| g.observed_ok && g.final_ok);
    summary.epsilon = Some(spec.epsilon);
    summary.d = Some(gen.amplitude_cap);
    summary.window = Some(p.window().len());
    summary.uniform_err = Some(report.uniform_err);
    summary.q_limsup = Some(report.q_limsup);
    summary.limit_err = Some(report.limit_err);
    summary.k_emp = Some(v.k_emp);
    summary.bound = v.bound;
    summary.pass = v.pass && gaps_ok && report.defect <= cfg.tolerances.defect;
    Ok(())
}

/// Side of the square grid used for the one-step sandwich check.
const SANDWICH_GRID: usize = 50;

fn run_lemmas(cfg: &ExperimentConfig, out: &Path, summary: &mut SummaryRow, files: &mut Vec<PathBuf>) -> Result<()> {
    let l = &cfg.lemmas;
    let alphas: Vec<f64> = l.alphas.iter().copied().filter(|a| *a > 0.0).collect();
    if alphas.is_empty() {
        return Err(Error::usage("lemmas.alphas needs at least one positive value"));
    }
    let rows = lemma_sweep(&alphas, l.r, l.n_max)?;
    files.push(write_file(out, "lemmas.csv", |w| write_sweep_csv(&rows, w))?);
    let worst = rows
        .iter()
        .map(|r| (r.fit_gamma * r.alpha - 1.0).abs())
        .fold(0.0, f64::max);
    let mut sandwich = true;
    for i in 1..=SANDWICH_GRID {
        let v = i as f64 / SANDWICH_GRID as f64;
        for j in 1..=SANDWICH_GRID {
            let alpha = 0.1 + 1.9 * j as f64 / SANDWICH_GRID as f64;
            sandwich &= neutral_one_step_bounds(&NeutralBranch::new(l.r, alpha)?, v)?.ordered;
        }
    }
    summary.window = Some(l.n_max);
    summary.k_emp = Some(worst);
    summary.bound = Some(0.05);
    summary.pass = sandwich && worst <= 0.05;
    Ok(())
}

fn run_envelope(cfg: &ExperimentConfig, out: &Path, summary: &mut SummaryRow, files: &mut Vec<PathBuf>) -> Result<()> {
    let m = cfg.envelope_blocks;
    let phi = sparse_rate_example(m)?;
    let env = monotone_envelope(&phi)?;
    let ns: Vec<u64> = (1..=m).map(|j| sparse_position(j) as u64).collect();
    let phi_sums = phi.as_table().expect("tabulated").symmetric_partial_sums(&ns);
    let env_sums = env.as_table().expect("tabulated").symmetric_partial_sums(&ns);
    files.push(write_file(out, "phi.csv", |w| {
        use std::io::Write;
        writeln!(w, "k,phi,partial_sum")?;
        for (n, s) in ns.iter().zip(&phi_sums) {
            writeln!(w, "{n},{},{s}", phi.value(*n as i64))?;
        }
        Ok(())
    })?);
    files.push(write_file(out, "envelope.csv", |w| {
        use std::io::Write;
        writeln!(w, "k,envelope,partial_sum")?;
        for (n, s) in ns.iter().zip(&env_sums) {
            writeln!(w, "{n},{},{s}", env.value(*n as i64))?;
        }
        Ok(())
    })?);
    let mut harmonic = 0.0;
    let mut matches = true;
    for (j, s) in (1..=m).zip(&env_sums) {
        if j >= 2 {
            harmonic += 1.0 / j as f64;
        }
        matches &= (s - (1.0 + 2.0 * harmonic)).abs() <= 1e-9 * s;
    }
    let last = env_sums.last().copied().unwrap_or(0.0);
    summary.window = Some(2 * sparse_position(m) as usize + 1);
    summary.bound = phi_sums.last().copied();
    summary.pass = matches && last > 10.0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(RunStatus::Pass.code(), 0);
        assert_eq!(
            RunStatus::of_error(&Error::RootFinding("x".into())),
            RunStatus::Numerical
        );
        assert_eq!(RunStatus::of_error(&Error::usage("x")), RunStatus::Usage);
        assert_eq!(RunStatus::of_error(&Error::ConfigMissing("k".into())), RunStatus::Usage);
    }

    #[test]
    fn glue_identical_points_gives_zero_errors() {
        let cfg =
            ExperimentConfig::parse("run.task = glue\nmap.kind = doubling\nglue.x0 = 0.3\nglue.y0 = 0.3\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.status, RunStatus::Pass);
        let text = fs::read_to_string(dir.path().join("glue.csv")).unwrap();
        assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")));
    }

    #[test]
    fn numerical_failure_keeps_a_failing_summary() {
        let cfg = ExperimentConfig::parse(
            "run.task = glue\nmap.kind = piecewise_linear\nmap.a = 1.5\nmap.b = 1.5\nmap.c = 0.5\nglue.x0 = 0\nglue.y0 = 1\n",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(&cfg, dir.path()).unwrap();
        assert_eq!(outcome.status, RunStatus::Numerical);
        let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(text.trim_end().ends_with(",fail"));
    }
}
