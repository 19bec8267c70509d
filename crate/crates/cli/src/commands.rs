use anyhow::Result;
use clap::Subcommand;
use kst_core::combinatorics::enumerate_partitions;
use kst_core::poisson::{analytic_solution, reconstruct_field, solve_slice, sweep, x2_grid, SliceOutcome, Source};
use kst_core::{build_psi, compute_constants, KstParams};
use serde_json::json;

use crate::config::RunConfig;
use crate::export::{fmt17, Artifacts, Cell, Table};
use crate::verify;

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate ψ and its forward differences for each depth.
    Psi,
    /// Print a and the α_p constants.
    Constants,
    /// Enumerate partial Bell partitions with their coefficients.
    Bell {
        /// Largest order m to enumerate.
        #[arg(long = "max-order", default_value_t = 6)]
        max_order: usize,
    },
    /// Fit the truncation order of the Taylor form against the shifted form.
    TaylorCheck,
    /// Solve the reduced problem on each requested slice.
    Solve,
    /// Solve a uniform grid of slices in parallel and assemble the field.
    Sweep,
    /// Solve the requested slices and print their error metrics.
    Compare,
    /// Run every invariant suite.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Psi => "psi",
            Command::Constants => "constants",
            Command::Bell { .. } => "bell",
            Command::TaylorCheck => "taylor-check",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// An invariant or convergence check failed; exit status 1.
    Failure,
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<Status> {
    let mut out = Artifacts::new(&cfg.out, cfg.format)?;
    let status = match command {
        Command::Psi => psi(cfg, &mut out)?,
        Command::Constants => constants(cfg, &mut out)?,
        Command::Bell { max_order } => bell(*max_order, &mut out)?,
        Command::TaylorCheck => taylor_check(cfg, &mut out)?,
        Command::Solve => solve(cfg, &mut out)?,
        Command::Sweep => sweep_cmd(cfg, &mut out)?,
        Command::Compare => compare(cfg, &mut out)?,
        Command::Verify => verify_cmd(cfg, &mut out)?,
    };
    out.finish(command.name(), cfg)?;
    Ok(status)
}

fn psi(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    for &k in &cfg.k {
        let params = KstParams::new(cfg.n, cfg.gamma, k, cfg.terms)?;
        let table = build_psi(&params)?;
        let len = table.len();
        let values = Table::numeric(
            vec!["d", "psi"],
            (0..len).map(|i| vec![i as f64 / len as f64, table.node_value(i)]),
        );
        out.table(&format!("psi_k{k}"), &values)?;
        let mut derivs = Table::new(vec!["x", "psi", "dpsi", "d2psi"]);
        for i in 0..len {
            derivs.push(vec![
                Cell::Num(i as f64 / len as f64),
                Cell::Num(table.node_value(i)),
                Cell::Num(table.node_derivative(1, i)?),
                Cell::Num(table.node_derivative(2, i)?),
            ]);
        }
        out.table(&format!("psi_derivs_k{k}"), &derivs)?;
        println!("k = {k}: {len} nodes, psi strictly increasing");
    }
    Ok(Status::Success)
}

fn constants(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let params = compute_constants(cfg.n, cfg.gamma, cfg.terms)?;
    let mut table = Table::new(vec!["name", "value"]);
    table.push(vec![Cell::Text("a".into()), Cell::Text(params.a().to_string())]);
    table.push(vec![Cell::Text("a_decimal".into()), Cell::Num(params.a_f64())]);
    println!("a = {}", params.a());
    for (p, alpha) in params.alpha().iter().enumerate() {
        println!("alpha_{} = {}", p + 1, fmt17(*alpha));
        let name = format!("alpha_{}", p + 1);
        table.push(vec![Cell::Text(name), Cell::Num(*alpha)]);
    }
    out.table("constants", &table)?;
    Ok(Status::Success)
}

fn bell(max_order: usize, out: &mut Artifacts) -> Result<Status> {
    let mut table = Table::new(vec!["m", "k", "partition", "count"]);
    for m in 0..=max_order {
        let mut bell_number = 0u128;
        for k in 0..=m {
            for index in enumerate_partitions(m, k)? {
                bell_number += index.coefficient();
                table.push(vec![
                    Cell::Int(m as u64),
                    Cell::Int(k as u64),
                    Cell::Text(index.to_string()),
                    Cell::Int(index.coefficient() as u64),
                ]);
            }
        }
        println!("B_{m} = {bell_number}");
    }
    out.table("bell", &table)?;
    Ok(Status::Success)
}

fn taylor_check(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let orders = verify::taylor_orders(cfg)?;
    let shifts = [1e-2, 5e-3, 2.5e-3];
    let mut errors = Table::new(vec!["M", "a", "error"]);
    let mut fits = Table::new(vec!["M", "fitted_order"]);
    let mut ok = true;
    for (m, errs, fitted) in &orders {
        for (a, e) in shifts.iter().zip(errs) {
            errors.push(vec![Cell::Int(*m as u64), Cell::Num(*a), Cell::Num(*e)]);
        }
        fits.push(vec![Cell::Int(*m as u64), Cell::Num(*fitted)]);
        let pass = *fitted >= *m as f64 + 0.5;
        ok &= pass;
        println!(
            "M = {m}: fitted order {} ({})",
            fmt17(*fitted),
            if pass { "ok" } else { "below M + 0.5" }
        );
    }
    out.table("taylor_errors", &errors)?;
    out.table("taylor_orders", &fits)?;
    Ok(if ok { Status::Success } else { Status::Failure })
}

fn slice_stem(cfg: &RunConfig, k: u32, x2: f64) -> String {
    if cfg.k.len() == 1 {
        format!("{x2}")
    } else {
        format!("k{k}_{x2}")
    }
}

fn write_slice(out: &mut Artifacts, stem: &str, outcome: &SliceOutcome) -> Result<()> {
    let s = &outcome.solution;
    let table = Table::numeric(
        vec!["z", "U", "W", "u_analytic_restriction"],
        (0..s.nodes.len()).map(|i| vec![s.nodes[i], s.u[i], s.w[i], outcome.analytic[i]]),
    );
    out.csv(&format!("slice_{stem}.csv"), &table)?;
    let mut log = Table::new(vec!["iter", "res_inf"]);
    for (i, r) in s.report.residual_history.iter().enumerate() {
        log.push(vec![Cell::Int(i as u64), Cell::Num(*r)]);
    }
    out.csv(&format!("convergence_{stem}.csv"), &log)?;
    out.json(
        &format!("slice_{stem}.json"),
        &json!({"report": outcome.report, "residual_history": s.report.residual_history}),
    )?;
    Ok(())
}

fn solve_requested(cfg: &RunConfig, out: &mut Artifacts) -> Result<(Vec<SliceOutcome>, bool)> {
    let mut all_converged = true;
    let mut outcomes = Vec::new();
    for &k in &cfg.k {
        let params = KstParams::new(cfg.n, cfg.gamma, k, cfg.terms)?;
        let table = build_psi(&params)?;
        for &x2 in &cfg.x2 {
            let outcome = solve_slice(x2, &params, &table, Source::SinSin, cfg.mesh, cfg.tol, cfg.max_iter)?;
            write_slice(out, &slice_stem(cfg, k, x2), &outcome)?;
            let r = &outcome.report;
            all_converged &= r.converged;
            println!(
                "k = {k}, x2 = {x2}: {} in {} iterations, residual {}",
                if r.converged { "converged" } else { "NOT converged" },
                r.iterations,
                fmt17(r.final_residual)
            );
            outcomes.push(outcome);
        }
    }
    Ok((outcomes, all_converged))
}

fn solve(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let (_, converged) = solve_requested(cfg, out)?;
    Ok(if converged { Status::Success } else { Status::Failure })
}

fn compare(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let (outcomes, converged) = solve_requested(cfg, out)?;
    for o in &outcomes {
        let r = &o.report;
        println!(
            "x2 = {}: Linf vs analytic {}, vs reduced {}, amplitude ratio {}",
            r.x2,
            fmt17(r.linf_vs_analytic),
            fmt17(r.linf_vs_reduced),
            r.amplitude_ratio.map_or("n/a".into(), fmt17)
        );
    }
    let reports: Vec<_> = outcomes.iter().map(|o| &o.report).collect();
    out.json("compare.json", &reports)?;
    Ok(if converged { Status::Success } else { Status::Failure })
}

fn sweep_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let k = cfg.k[0];
    let params = KstParams::new(cfg.n, cfg.gamma, k, cfg.terms)?;
    let table = build_psi(&params)?;
    let rows = x2_grid(cfg.x2_grid);
    let outcomes = sweep(&rows, &params, &table, Source::SinSin, cfg.mesh, cfg.tol, cfg.max_iter, cfg.jobs)?;
    let mut summary = Table::new(vec!["x2", "iterations", "converged", "final_residual", "linf_vs_analytic"]);
    let mut converged = true;
    for (x2, o) in rows.iter().zip(&outcomes) {
        write_slice(out, &format!("{x2}"), o)?;
        let r = &o.report;
        converged &= r.converged;
        summary.push(vec![
            Cell::Num(*x2),
            Cell::Int(r.iterations as u64),
            Cell::Int(r.converged as u64),
            Cell::Num(r.final_residual),
            Cell::Num(r.linf_vs_analytic),
        ]);
    }
    out.csv("sweep_summary.csv", &summary)?;
    let slices: Vec<(f64, &_)> = rows.iter().zip(&outcomes).map(|(x, o)| (*x, &o.solution)).collect();
    let field = reconstruct_field(&slices, &rows, cfg.x2_grid, &params, &table)?;
    let mut csv = Table::new(vec!["x1", "x2", "u_numeric", "u_analytic", "abs_err"]);
    for j in 0..field.ny() {
        for i in 0..field.nx() {
            let (x1, x2) = (field.x1()[i], field.x2()[j]);
            let (u, exact) = (field.get(i, j), analytic_solution(x1, x2));
            csv.push(vec![Cell::Num(x1), Cell::Num(x2), Cell::Num(u), Cell::Num(exact), Cell::Num((u - exact).abs())]);
        }
    }
    out.csv("field.csv", &csv)?;
    println!(
        "swept {} slices at k = {k}: {}",
        rows.len(),
        if converged { "all converged" } else { "some did NOT converge" }
    );
    Ok(if converged { Status::Success } else { Status::Failure })
}

fn verify_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<Status> {
    let results = verify::run_all(cfg)?;
    let mut ok = true;
    for r in &results {
        let tag = match (r.hard, r.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        ok &= r.passed || !r.hard;
        println!("{tag} {}: {}", r.group, r.detail);
    }
    out.json("verify.json", &results)?;
    Ok(if ok { Status::Success } else { Status::Failure })
}
