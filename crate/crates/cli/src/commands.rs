//! One handler per subcommand; each assembles a CSV (schemas are fixed) and
//! optionally an SVG plot.

use std::path::PathBuf;

use sqlab_core::apstats::{
    correlation, error_vector, full_correlation, s_gamma, variance, AffineMap,
};
use sqlab_core::expsum::{a_sum, decay_scan, incomplete_invsq_sum};
use sqlab_core::localdensity::f_density;
use sqlab_core::pairstats::{big_sigma, big_sigma_main_term, verify_pair_density};
use sqlab_core::sieve::{count_squarefree_with, SegmentStore};

use crate::args::Command;
use crate::csvfmt::{fmt_f64, write_output, Csv};
use crate::selftest;
use crate::svg::{emit_svg, PlotSpec};
use crate::CliError;

const SIX_OVER_PI2: f64 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);

pub fn dispatch(
    command: &Command,
    store: &SegmentStore,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    match command {
        Command::SieveCount { x, .. } => sieve_count(store, *x, out),
        Command::Evector {
            x,
            q,
            allow_degenerate,
            svg,
        } => evector(store, *x, *q, *allow_degenerate, svg, out),
        Command::Variance { x, q } => variance_cmd(store, *x, *q, out),
        Command::Correlate { x, q, r, s } => correlate(store, *x, *q, *r, *s, out),
        Command::Pairs {
            x,
            r,
            l_min,
            l_max,
            l_step,
            svg,
        } => pairs(store, *x, *r, *l_min, *l_max, *l_step, svg, out),
        Command::Density { l, r } => density(*l, *r, out),
        Command::Bigsigma { x, q, r, s } => bigsigma(*x, *q, *r, *s, out),
        Command::Expsum { n, q, a } => expsum_cmd(*n, *q, *a, out),
        Command::Asum { y, q, a, tol } => asum_cmd(*y, *q, *a, *tol, out),
        Command::Decay {
            q_list,
            eps_list,
            a_samples,
            svg,
        } => decay(q_list, eps_list, *a_samples, svg, out),
        Command::Selftest => selftest_cmd(store, out),
    }
}

fn sieve_count(store: &SegmentStore, x: u64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let q = count_squarefree_with(store, x)?;
    let main = SIX_OVER_PI2 * x as f64;
    let mut csv = Csv::new(&format!("sieve-count --x {x}"), "X,Q,main,delta");
    csv.row(&[
        x.to_string(),
        q.to_string(),
        fmt_f64(main),
        fmt_f64(q as f64 - main),
    ]);
    write_output(out, &csv.into_string())
}

fn evector(
    store: &SegmentStore,
    x: u64,
    q: u64,
    allow_degenerate: bool,
    svg: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if q > x && !allow_degenerate {
        return Err(CliError::Validation(format!(
            "q = {q} exceeds X = {x}; pass --allow-degenerate to proceed"
        )));
    }
    let ev = error_vector(store, x, q)?;
    let mut csv = Csv::new(&format!("evector --x {x} --q {q}"), "a,count,E");
    for a in 0..q as usize {
        csv.row(&[
            a.to_string(),
            ev.counts[a].to_string(),
            fmt_f64(ev.e[a]),
        ]);
    }
    if let Some(path) = svg {
        let points: Vec<(f64, f64)> = ev.e.iter().enumerate().map(|(a, &e)| (a as f64, e)).collect();
        let plot = emit_svg(
            &points,
            &PlotSpec {
                title: format!("error terms at X = {x}, q = {q}"),
                x_label: "residue a".into(),
                y_label: "E(X, q, a)".into(),
                log_x: false,
                log_y: false,
            },
        )?;
        std::fs::write(path, plot)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    write_output(out, &csv.into_string())
}

fn variance_cmd(store: &SegmentStore, x: u64, q: u64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let ev = error_vector(store, x, q)?;
    let v = variance(&ev);
    let ratio = v / ((x as f64) * q as f64).sqrt();
    let mut csv = Csv::new(&format!("variance --x {x} --q {q}"), "X,q,variance,ratio");
    csv.row(&[x.to_string(), q.to_string(), fmt_f64(v), fmt_f64(ratio)]);
    write_output(out, &csv.into_string())
}

fn correlate(
    store: &SegmentStore,
    x: u64,
    q: u64,
    r: i64,
    s: i64,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let ev = error_vector(store, x, q)?;
    let map = AffineMap::new(r, s);
    let c = correlation(&ev, map)?;
    let full = full_correlation(&ev, map)?;
    let sg = s_gamma(&ev, map)?;
    let v = variance(&ev);
    let mut csv = Csv::new(
        &format!("correlate --x {x} --q {q} --r {r} --s {s}"),
        "X,q,r,s,S_gamma,full_sum,C,variance,ratio",
    );
    csv.row(&[
        x.to_string(),
        q.to_string(),
        r.to_string(),
        s.to_string(),
        sg.to_string(),
        fmt_f64(full),
        fmt_f64(c),
        fmt_f64(v),
        fmt_f64(c / v),
    ]);
    write_output(out, &csv.into_string())
}

#[allow(clippy::too_many_arguments)]
fn pairs(
    store: &SegmentStore,
    x: f64,
    r: i64,
    l_min: i64,
    l_max: i64,
    l_step: i64,
    svg: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if l_step < 1 {
        return Err(CliError::Validation(format!("--l-step {l_step} must be >= 1")));
    }
    if l_min > l_max {
        return Err(CliError::Validation(format!(
            "--l-min {l_min} exceeds --l-max {l_max}"
        )));
    }
    let shifts: Vec<i64> = (l_min..=l_max).step_by(l_step as usize).filter(|&l| l != 0).collect();
    if shifts.len() > 1_000_000 {
        return Err(CliError::Validation("shift grid beyond 10^6 entries".into()));
    }
    let report = verify_pair_density(store, x, r, &shifts)?;
    let mut csv = Csv::new(
        &format!("pairs --x {x} --r {r} --l-min {l_min} --l-max {l_max} --l-step {l_step}"),
        "l,r,S,f,interval,main,abs_dev,rel_dev",
    );
    for row in &report.rows {
        csv.row(&[
            row.ell.to_string(),
            row.r.to_string(),
            row.count.to_string(),
            fmt_f64(row.density),
            fmt_f64(row.interval),
            fmt_f64(row.main),
            fmt_f64(row.abs_dev),
            fmt_f64(row.rel_dev),
        ]);
    }
    if let Some(path) = svg {
        let points: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|row| row.rel_dev.is_finite())
            .map(|row| (row.ell as f64, row.rel_dev))
            .collect();
        let plot = emit_svg(
            &points,
            &PlotSpec {
                title: format!("pair-count deviation at X = {x}, r = {r}"),
                x_label: "shift l".into(),
                y_label: "|S - f|I|| / f|I|".into(),
                log_x: false,
                log_y: false,
            },
        )?;
        std::fs::write(path, plot)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    write_output(out, &csv.into_string())
}

fn density(l: i64, r: i64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let d = f_density(l, r)?;
    let mut csv = Csv::new(
        &format!("density --l {l} --r {r}"),
        "l,r,num,den,includes_c2,approx",
    );
    csv.row(&[
        l.to_string(),
        r.to_string(),
        d.rational_part.numerator().to_string(),
        d.rational_part.denominator().to_string(),
        d.includes_c2.to_string(),
        fmt_f64(d.approx),
    ]);
    write_output(out, &csv.into_string())
}

fn bigsigma(x: f64, q: u64, r: i64, s: i64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let sigma = big_sigma(x, q, r, s)?;
    let main = big_sigma_main_term(x, q, r)?;
    let mut csv = Csv::new(
        &format!("bigsigma --x {x} --q {q} --r {r} --s {s}"),
        "X,q,r,s,sigma,main_term,rel_dev",
    );
    csv.row(&[
        x.to_string(),
        q.to_string(),
        r.to_string(),
        s.to_string(),
        fmt_f64(sigma),
        fmt_f64(main),
        fmt_f64((sigma - main).abs() / main),
    ]);
    write_output(out, &csv.into_string())
}

fn expsum_cmd(n: u64, q: u64, a: i64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let s = incomplete_invsq_sum(n, q, a)?;
    let mut csv = Csv::new(
        &format!("expsum --n {n} --q {q} --a {a}"),
        "N,q,a,re,im,abs",
    );
    csv.row(&[
        n.to_string(),
        q.to_string(),
        a.to_string(),
        fmt_f64(s.re),
        fmt_f64(s.im),
        fmt_f64(s.abs()),
    ]);
    write_output(out, &csv.into_string())
}

fn asum_cmd(y: f64, q: u64, a: i64, tol: f64, out: &Option<PathBuf>) -> Result<(), CliError> {
    let (value, budget) = a_sum(y, q, a, tol)?;
    let mut csv = Csv::new(
        &format!("asum --y {y} --q {q} --a {a} --tol {tol}"),
        "Y,q,a,tolerance,cutoff,tail_bound,value",
    );
    csv.row(&[
        fmt_f64(y),
        q.to_string(),
        a.to_string(),
        fmt_f64(budget.tolerance),
        budget.cutoff.to_string(),
        fmt_f64(budget.tail_bound),
        fmt_f64(value),
    ]);
    write_output(out, &csv.into_string())
}

fn decay(
    q_list: &[u64],
    eps_list: &[f64],
    a_samples: usize,
    svg: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    if q_list.is_empty() || eps_list.is_empty() {
        return Err(CliError::Validation(
            "--q-list and --eps-list must be nonempty".into(),
        ));
    }
    let rows = decay_scan(q_list, eps_list, a_samples)?;
    let q_str: Vec<String> = q_list.iter().map(|q| q.to_string()).collect();
    let e_str: Vec<String> = eps_list.iter().map(|e| e.to_string()).collect();
    let mut csv = Csv::new(
        &format!(
            "decay --q-list {} --eps-list {} --a-samples {a_samples}",
            q_str.join(","),
            e_str.join(",")
        ),
        "q,epsilon,N,a,abs_sum,ratio",
    );
    for row in &rows {
        csv.row(&[
            row.q.to_string(),
            row.epsilon.to_string(),
            row.n.to_string(),
            row.a.to_string(),
            fmt_f64(row.abs_sum),
            fmt_f64(row.ratio),
        ]);
    }
    if let Some(path) = svg {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|row| row.ratio > 0.0)
            .map(|row| (row.n as f64, row.ratio))
            .collect();
        let plot = emit_svg(
            &points,
            &PlotSpec {
                title: "incomplete-sum cancellation".into(),
                x_label: "N".into(),
                y_label: "|sum| / N".into(),
                log_x: true,
                log_y: true,
            },
        )?;
        std::fs::write(path, plot)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    write_output(out, &csv.into_string())
}

fn selftest_cmd(store: &SegmentStore, out: &Option<PathBuf>) -> Result<(), CliError> {
    let outcomes = selftest::run_all(store, |o| eprintln!("{}", o.line()));
    let mut csv = Csv::new("selftest", "criterion,name,measured,threshold,pass");
    for o in &outcomes {
        csv.row(&[
            o.id.to_string(),
            o.name.to_string(),
            fmt_f64(o.measured),
            fmt_f64(o.threshold),
            o.pass.to_string(),
        ]);
    }
    write_output(out, &csv.into_string())?;
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} of {} criteria failed: {:?}",
            failed.len(),
            outcomes.len(),
            failed
        )))
    }
}
