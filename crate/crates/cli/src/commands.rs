use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use optimal_balance::diagnostics::{
    fit_alpha, fit_order, log_grid, sweep, verify_theorem1, FitResult,
};
use optimal_balance::ramp::{check_gevrey2_bound, fit_gevrey2_envelope};
use optimal_balance::verify::{lemma_a1_check, lemma_a2_check, LemmaReport};
use optimal_balance::{Potential, Ramp};

use crate::config::Plan;
use crate::failure::Failure;
use crate::table::{fmt_float, read_rows, write_records};

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub fn balance(plan: &Plan, out: Option<&Path>) -> Result<(), Failure> {
    let series = &plan.single;
    let mut prob = series.template.instantiate(plan.eps)?;
    if out.is_some() {
        prob.record_stride = Some(plan.trajectory_stride);
    }
    let res = prob.solve()?;
    println!(
        "ramp {}  a {}  eps {}  solver {}  scheme {}  dt {}",
        series.ramp, series.a, plan.eps, prob.solver, prob.integrator.scheme, prob.integrator.dt
    );
    println!("p*         {}", fmt_vec(&res.p_star));
    println!("q0         {}", fmt_vec(&res.q0));
    println!("residual   {}", fmt_float(res.residual));
    println!("boundary   {}", fmt_float(res.boundary_residual));
    println!("iterations {}", res.iterations);
    if let (Some(path), Some(traj)) = (out, &res.trajectory) {
        let mut w = create(path)?;
        let d2 = res.q0.len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d2).map(|i| format!("q{i}")));
        header.extend((1..=d2).map(|i| format!("p{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(s.q.iter().copied())
                .chain(s.p.iter().copied())
                .map(fmt_float)
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        eprintln!(
            "trajectory with {} samples written to {}",
            traj.times.len(),
            path.display()
        );
    }
    Ok(())
}

pub fn run_sweep(plan: &Plan, out: Option<&Path>) -> Result<(), Failure> {
    let mut records = Vec::with_capacity(plan.series.len() * plan.grid.len());
    for series in &plan.series {
        let recs = sweep(&plan.grid, &series.template, plan.t1_slow)?;
        let failed = recs.iter().filter(|r| !r.is_ok()).count();
        eprintln!(
            "{} a={}: {} rows, {failed} failed",
            series.ramp,
            series.a,
            recs.len()
        );
        records.extend(recs);
    }
    match out.or(plan.output.as_deref()) {
        Some(path) => {
            write_records(create(path)?, &records)?;
            eprintln!("{} rows written to {}", records.len(), path.display());
        }
        None => write_records(io::stdout().lock(), &records)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMode {
    /// Algebraic order: slope of ln I against ln ε.
    Order,
    /// Exponential rate: α in I = d exp(-c ε^-α).
    Alpha,
}

pub struct FitArgs<'a> {
    pub csv: &'a Path,
    pub mode: FitMode,
    pub window: Option<(f64, f64)>,
    pub d: f64,
    pub floor: f64,
    pub ramp: Option<Ramp>,
    pub a: Option<f64>,
}

fn fit_line(ramp: &str, a: f64, f: &FitResult) -> String {
    let common = format!(
        "ramp={ramp} a={a} window={}:{} points={} residual={}",
        fmt_float(f.window.0),
        fmt_float(f.window.1),
        f.n_points,
        fmt_float(f.residual_norm)
    );
    match (f.alpha, f.ln_c, f.d) {
        (Some(alpha), Some(ln_c), Some(d)) => {
            let sens: Vec<String> = f
                .sensitivity
                .iter()
                .map(|(dd, al)| format!("{}:{}", fmt_float(*dd), fmt_float(*al)))
                .collect();
            format!(
                "FIT: mode=alpha alpha={} ln_c={} d={} below_floor={} sensitivity={} {common}",
                fmt_float(alpha),
                fmt_float(ln_c),
                fmt_float(d),
                f.n_below_floor,
                sens.join(",")
            )
        }
        _ => format!(
            "FIT: mode=order slope={} intercept={} {common}",
            fmt_float(f.slope),
            fmt_float(f.intercept)
        ),
    }
}

/// `(ramp id, a)` of one series in a sweep CSV.
type SeriesKey = (String, f64);

pub fn fit(args: &FitArgs) -> Result<(), Failure> {
    if !(args.d > 0.0 && args.d.is_finite()) {
        return Err(Failure::config(format!(
            "--d must be positive, got {}",
            args.d
        )));
    }
    if let Some((lo, hi)) = args.window {
        if !(lo > 0.0 && lo < hi) {
            return Err(Failure::config(format!(
                "window must satisfy 0 < LO < HI, got {lo}:{hi}"
            )));
        }
    }
    let file =
        File::open(args.csv).map_err(|e| Failure::io(format!("{}: {e}", args.csv.display())))?;
    let rows = read_rows(io::BufReader::new(file))?;
    let ramp_id = args.ramp.map(|r| r.id());
    let mut groups: Vec<(SeriesKey, Vec<(f64, f64)>)> = Vec::new();
    for row in rows.iter().filter(|r| r.is_ok()) {
        if ramp_id.as_ref().is_some_and(|id| *id != row.ramp) || args.a.is_some_and(|a| a != row.a)
        {
            continue;
        }
        let key = (row.ramp.clone(), row.a);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push((row.eps, row.imbalance)),
            None => groups.push((key, vec![(row.eps, row.imbalance)])),
        }
    }
    if groups.is_empty() {
        return Err(Failure::data(format!(
            "{} has no successful rows to fit",
            args.csv.display()
        )));
    }
    let mut first_error = None;
    for ((ramp, a), pts) in &groups {
        let fitted = match args.mode {
            FitMode::Order => fit_order(pts, args.window),
            FitMode::Alpha => fit_alpha(pts, args.window, args.d, args.floor),
        };
        let fitted = match fitted {
            Ok(f) => f,
            Err(e) => {
                let msg = format!("{ramp} a={a}: {e}");
                println!("{msg}");
                first_error.get_or_insert(Failure::data(msg));
                continue;
            }
        };
        match args.mode {
            FitMode::Order => println!(
                "{ramp} a={a}: slope {:.4} over {} points",
                fitted.slope, fitted.n_points
            ),
            FitMode::Alpha => println!(
                "{ramp} a={a}: alpha {:.4}, ln c {:.4} over {} points ({} below the floor)",
                fitted.alpha.unwrap_or(f64::NAN),
                fitted.ln_c.unwrap_or(f64::NAN),
                fitted.n_points,
                fitted.n_below_floor
            ),
        }
        println!("{}", fit_line(ramp, *a, &fitted));
    }
    first_error.map_or(Ok(()), Err)
}

pub struct Theorem1Args {
    pub order: usize,
    pub eps_hi: f64,
    pub eps_lo: f64,
    pub count: usize,
    pub a: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
}

pub fn verify_theorem1_cmd(
    potential: Arc<dyn Potential>,
    q0: &[f64],
    args: &Theorem1Args,
) -> Result<(), Failure> {
    if args.eps_hi >= 1.0 {
        return Err(Failure::config(format!(
            "--eps-hi must be below 1, got {}",
            args.eps_hi
        )));
    }
    let eps = log_grid(args.eps_hi, args.eps_lo, args.count)?;
    let rep = verify_theorem1(args.order, &eps, q0, args.a, potential)?;
    println!("n = {}, a = {}", rep.order, args.a);
    for (e, err) in &rep.errors {
        println!("  eps {}  sup error {}", fmt_float(*e), fmt_float(*err));
    }
    let fit = rep
        .fit
        .ok_or_else(|| Failure::data("too few positive errors for a slope fit"))?;
    let expected = args.expected.unwrap_or(args.order as f64 + 2.0);
    println!(
        "FIT: mode=order slope={} expected={} points={}",
        fmt_float(fit.slope),
        fmt_float(expected),
        fit.n_points
    );
    if (fit.slope - expected).abs() > args.tolerance {
        return Err(Failure::verification(format!(
            "sup-error slope {:.4} is outside {expected} +/- {}",
            fit.slope, args.tolerance
        )));
    }
    println!("pass");
    Ok(())
}

pub struct LemmaArgs {
    pub a1_n_max: usize,
    pub a1_k_max: usize,
    pub a2_n_max: usize,
    pub a2_s_max: usize,
    pub a2_k_max: usize,
}

fn first_violation(rep: &LemmaReport) -> Option<String> {
    rep.violations.first().map(|c| {
        format!(
            "{} violated at {}: lhs {} > rhs {}",
            rep.lemma, c.label, c.lhs, c.rhs
        )
    })
}

pub fn verify_lemmas(args: &LemmaArgs) -> Result<(), Failure> {
    let a1 = lemma_a1_check(args.a1_n_max, args.a1_k_max)?;
    println!("{a1}");
    let a2 = lemma_a2_check(args.a2_n_max, args.a2_s_max, args.a2_k_max)?;
    println!("{a2}");
    if let Some(msg) = first_violation(&a1).or_else(|| first_violation(&a2)) {
        return Err(Failure::verification(msg));
    }
    println!("pass");
    Ok(())
}

pub fn verify_gevrey(lambda: f64, n_max: usize) -> Result<(), Failure> {
    let rep = check_gevrey2_bound(n_max, lambda)?;
    println!("lambda {}  eta {}", rep.lambda, fmt_float(rep.eta));
    for r in &rep.rows {
        println!(
            "  n {:2}  sup {}  bound {}",
            r.n,
            fmt_float(r.sup),
            fmt_float(r.bound)
        );
    }
    if n_max >= 1 {
        let env = fit_gevrey2_envelope(&Ramp::Exponential, n_max)?;
        println!("exponential ramp envelope eta {}", fmt_float(env.eta));
    }
    if let Some(r) = rep.rows.iter().find(|r| r.margin < 0.0) {
        return Err(Failure::verification(format!(
            "bound violated at n = {}: sup {} > bound {}",
            r.n,
            fmt_float(r.sup),
            fmt_float(r.bound)
        )));
    }
    println!("pass");
    Ok(())
}
