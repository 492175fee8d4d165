use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use ordsearch::adversary::{
    b_matrix, progress_trace, query_lower_bound, spectral_norm_seeded, total_weight, Problem,
    MAX_TRACE_SIZE,
};
use ordsearch::oracle::{all_inputs, OrderedOracle};
use ordsearch::pebble::{build_covered_tree, validate_covering, Certificate, PebbledTree};
use ordsearch::search::{ceil_log3, f_tilde, implemented_queries, write_trace, Record, SearchPlan};

use crate::report::Report;
use crate::Usage;

pub const SEARCH_CAP: usize = 64;
pub const TRACE_CAP: usize = 4;
pub const HILBERT_CAP: usize = 4096;
pub const COVER_CAP: usize = 256;

fn cap(what: &str, n: usize, limit: usize, force: bool) -> Result<()> {
    if n > limit && !force {
        return Err(Usage(format!(
            "{what} is capped at {limit} (got {n}); pass --force to override"
        ))
        .into());
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Usage(format!("{name} must be positive, got {x}")).into())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn load_covering(path: &Path) -> Result<PebbledTree> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cert: Certificate = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a covering certificate", path.display()))?;
    Ok(PebbledTree::from_certificate(&cert)?)
}

/// A plan for `n`, optionally with a covering read from disk. Without
/// `force` the covering must pass validation first.
fn plan_for(
    n: usize,
    covering: Option<&PathBuf>,
    force: bool,
    report: &mut Report,
) -> Result<Option<SearchPlan>> {
    let Some(path) = covering else {
        return Ok(Some(SearchPlan::new(n)?));
    };
    let pt = load_covering(path)?;
    let violations = validate_covering(&pt).violations();
    if !violations.is_empty() && !force {
        report.check(
            "covering",
            false,
            format!("invalid: {}", violations.join(", ")),
        );
        return Ok(None);
    }
    Ok(Some(SearchPlan::with_covering(n, pt)?))
}

/// Explains a failed run on a plan whose covering may be broken.
fn diagnose(plan: &SearchPlan, err: &ordsearch::Error) -> String {
    let broken: Vec<&str> = plan
        .levels()
        .iter()
        .flat_map(|l| validate_covering(&l.covering).violations())
        .collect();
    if broken.is_empty() {
        err.to_string()
    } else {
        format!("{err}; covering violates {}", broken.join(", "))
    }
}

pub fn run(
    n: usize,
    target: usize,
    trace: Option<&PathBuf>,
    covering: Option<&PathBuf>,
    force: bool,
    report: &mut Report,
) -> Result<()> {
    if n == 0 || target >= n {
        return Err(Usage(format!(
            "--target must satisfy 0 ≤ target < n = {n}, got {target}"
        ))
        .into());
    }
    cap("search size", n, SEARCH_CAP, force)?;
    let x = OrderedOracle::with_answer(n, target)?;
    let Some(plan) = plan_for(n, covering, force, report)? else {
        return Ok(());
    };
    let record = if trace.is_some() {
        Record::Everything
    } else {
        Record::Nothing
    };
    match plan.run(&x, record) {
        Ok(out) => {
            report.check(
                "exact",
                out.index == target,
                format!("found {}, queries {}", out.index, out.queries.0),
            );
            report.value("found", out.index);
            report.value("queries", out.queries.0);
            report.value("probability", out.probability);
            report.value("sizes", plan.sizes());
            report.value("covering_hash", plan.covering_hash());
            if let Some(path) = trace {
                let mut w = create(path)?;
                write_trace(&plan, &out, &mut w)?;
                w.flush()?;
                report.value("trace", path.display().to_string());
            }
        }
        Err(e) => report.check("exact", false, diagnose(&plan, &e)),
    }
    Ok(())
}

pub fn verify(
    n_max: usize,
    tol: f64,
    covering: Option<&PathBuf>,
    force: bool,
    report: &mut Report,
) -> Result<()> {
    positive("--tol", tol)?;
    if n_max < 2 {
        return Err(Usage(format!("--n-max must be at least 2, got {n_max}")).into());
    }
    cap("--n-max", n_max, SEARCH_CAP, force)?;
    let sizes: Vec<usize> = match covering {
        Some(path) => vec![load_covering(path)?.tree().n_leaves()],
        None => (2..=n_max).step_by(2).collect(),
    };
    for n in sizes {
        let Some(plan) = plan_for(n, covering, force, report)? else {
            return Ok(());
        };
        let outcomes: Vec<_> = all_inputs(n)
            .par_iter()
            .map(|x| (*x, plan.run(x, Record::Nothing)))
            .collect();
        let mut worst = 1.0f64;
        let mut failure = None;
        for (x, out) in outcomes {
            match out {
                Ok(o) if o.probability >= 1.0 - tol => worst = worst.min(o.probability),
                Ok(o) => {
                    failure.get_or_insert(format!(
                        "target {}: probability {}",
                        ordsearch::oracle::f_of(&x),
                        o.probability
                    ));
                }
                Err(e) => {
                    failure.get_or_insert(format!(
                        "target {}: {}",
                        ordsearch::oracle::f_of(&x),
                        diagnose(&plan, &e)
                    ));
                }
            }
        }
        let detail = failure.clone().unwrap_or_else(|| {
            format!(
                "{n} oracles, queries {}, min probability {worst:.12}",
                plan.queries().0
            )
        });
        report.check(format!("exact N={n}"), failure.is_none(), detail);
        report.value(&format!("queries_{n}"), plan.queries().0);
    }
    Ok(())
}

pub fn adversary(
    problem: Problem,
    n: usize,
    out: Option<&PathBuf>,
    force: bool,
    report: &mut Report,
) -> Result<()> {
    if n < 2 {
        return Err(Usage(format!("--n must be at least 2, got {n}")).into());
    }
    match problem {
        Problem::Search => cap("search size", n, SEARCH_CAP, force)?,
        _ => {
            cap("full comparison traces", n, TRACE_CAP, force)?;
            cap("full comparison traces", n, MAX_TRACE_SIZE, false)?;
        }
    }
    let trace = progress_trace(problem, n)?;
    let total = total_weight(problem, n)?;
    report.check(
        "initial progress exact",
        trace.w0_exact.as_ref() == Some(&total),
        format!("W_0 = {total} ≈ {}", trace.w0()),
    );
    let worst = trace.deltas.iter().copied().fold(0.0, f64::max);
    report.check(
        "step bound",
        trace.steps_within_bound(1e-9),
        format!("max |ΔW| {worst:.6} ≤ {:.6}", trace.step_bound),
    );
    report.check(
        "final progress",
        trace.ends_near_zero(1e-9),
        format!("W_T = {:e}", trace.w_final()),
    );
    report.check(
        "derived bound",
        trace.derived_bound() <= trace.queries as f64,
        format!("{:.4} ≤ {} queries", trace.derived_bound(), trace.queries),
    );
    report.value("problem", problem);
    report.value("w0", trace.w0());
    report.value("w_final", trace.w_final());
    report.value("queries", trace.queries);
    report.value("step_bound", trace.step_bound);
    match out {
        Some(path) => {
            let mut w = create(path)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
            report.value("csv", path.display().to_string());
        }
        None => trace.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

pub fn hilbert(n: usize, tol: f64, seed: u64, force: bool, report: &mut Report) -> Result<()> {
    positive("--tol", tol)?;
    if n == 0 {
        return Err(Usage("--n must be positive".into()).into());
    }
    cap("Hilbert size", n, HILBERT_CAP, force)?;
    let norm = spectral_norm_seeded(&b_matrix(n), tol, seed)?;
    report.check(
        "norm ≤ π",
        norm <= std::f64::consts::PI + 1e-9,
        format!("‖B_{n}‖ = {norm:.12}"),
    );
    report.value("n", n);
    report.value("norm", norm);
    report.value("tol", tol);
    Ok(())
}

pub fn bounds(problem: Problem, n: usize, eps: f64, report: &mut Report) -> Result<()> {
    let r = query_lower_bound(problem, n, eps).map_err(|e| Usage(e.to_string()))?;
    report.value("bound", r.bound);
    report.value("formula", &r.formula);
    report.value("report", &r);
    Ok(())
}

pub fn ftilde(n: usize, report: &mut Report) -> Result<()> {
    if n == 0 {
        return Err(Usage("--n must be positive".into()).into());
    }
    let ft = f_tilde(n);
    let l3 = ceil_log3(n as u64);
    let gap = i64::from(ft) - i64::from(l3);
    report.check(
        "gap to ⌈log₃ N⌉",
        (-1..=2).contains(&gap),
        format!("F̃ − ⌈log₃ N⌉ = {gap}"),
    );
    report.value("f_tilde", ft);
    report.value("ceil_log3", l3);
    report.value("implemented", implemented_queries(n));
    Ok(())
}

pub fn cover(
    n: Option<usize>,
    covering: Option<&PathBuf>,
    out: Option<&PathBuf>,
    force: bool,
    report: &mut Report,
) -> Result<()> {
    let pt = match (covering, n) {
        (Some(path), _) => load_covering(path)?,
        (None, Some(n)) => {
            if n < 2 || n % 2 == 1 {
                return Err(Usage(format!("coverings need an even --n ≥ 2, got {n}")).into());
            }
            cap("covering size", n, COVER_CAP, force)?;
            build_covered_tree(n)?
        }
        (None, None) => return Err(Usage("cover needs --n or --covering".into()).into()),
    };
    let r = validate_covering(&pt);
    for (name, ok) in [
        ("condition A", r.cond_a),
        ("condition B", r.cond_b),
        ("fair", r.fair),
        ("tight", r.tight),
        ("budget", r.within_budget),
    ] {
        report.check(name, ok, "");
    }
    let cert = pt.to_certificate();
    report.value("n", pt.tree().n_leaves());
    report.value("colors", pt.colors());
    report.value("per_color", &r.per_color);
    report.value("n_prime", pt.n_prime());
    report.value("hash", cert.hash());
    if let Some(path) = out {
        let mut w = create(path)?;
        serde_json::to_writer(&mut w, &cert)?;
        w.flush()?;
        report.value("certificate", path.display().to_string());
    }
    Ok(())
}
