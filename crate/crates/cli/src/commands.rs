use std::fs;
use std::path::{Path, PathBuf};

use dcpbc::audit::{self, compare_runs, scenario_checks, CheckItem};
use dcpbc::demos::Demo;
use dcpbc::engine::{run_scenario, run_sweep};
use dcpbc::io::config::OutputOptions;
use dcpbc::io::plot::Plot;
use dcpbc::io::{emit_plot_svg, emit_trajectory_csv, load_config, read_trajectory_csv, Overrides};
use dcpbc::{ControllerKind, Error, Result, RunResult, Scenario};

use crate::{Cli, Command};

pub enum Outcome {
    Success,
    CheckFailed,
}

impl Outcome {
    fn from_checks(passed: bool) -> Self {
        if passed {
            Self::Success
        } else {
            Self::CheckFailed
        }
    }
}

fn usage(message: impl Into<String>) -> Error {
    Error::Config {
        location: "command line".into(),
        message: message.into(),
    }
}

fn overrides(cli: &Cli) -> Result<Overrides> {
    if let Some(h) = cli.step_us {
        if !(h > 0.0) || !h.is_finite() {
            return Err(usage(format!("--step-us must be positive, got {h}")));
        }
    }
    if let Some(d) = cli.duration_s {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(usage(format!("--duration-s must be non-negative, got {d}")));
        }
    }
    Ok(Overrides {
        seed: cli.seed,
        step_s: cli.step_us.map(|h| h * 1e-6),
        duration_s: cli.duration_s,
        controller: cli.controller.map(Into::into),
    })
}

/// Scenario from --config, or the given demo when no config is passed.
fn scenario(cli: &Cli, ov: &Overrides, fallback: Option<Demo>) -> Result<(Scenario, OutputOptions)> {
    match (&cli.config, fallback) {
        (Some(path), _) => {
            let c = load_config(path, ov)?;
            Ok((c.scenario, c.output))
        }
        (None, Some(demo)) => {
            let mut s = demo.scenario(ov.seed.unwrap_or(7))?;
            ov.apply(&mut s);
            s.validate()?;
            Ok((s, OutputOptions::default()))
        }
        (None, None) => Err(usage("this command needs --config PATH")),
    }
}

fn out_dir(cli: &Cli, output: &OutputOptions) -> Option<PathBuf> {
    cli.out.clone().or_else(|| output.dir.clone())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_artifacts(dir: &Path, s: &Scenario, r: &RunResult, plots: bool) -> Result<()> {
    create_dir(dir)?;
    let stem = format!("{}_{}", s.name, r.controller);
    let csv = dir.join(format!("{stem}.csv"));
    emit_trajectory_csv(&r.records, s.v_dc_star(), &csv)?;
    if r.records.is_empty() {
        log::warn!("empty trajectory; wrote header-only {} and no plots", csv.display());
        return Ok(());
    }
    if plots {
        let title = format!("{} ({})", s.name, r.controller);
        emit_plot_svg(&Plot::v_dc(&title, &r.records, s.v_dc_star()), dir.join(format!("{stem}_vdc.svg")))?;
        emit_plot_svg(
            &Plot::energy_rate(&title, &r.records, s.plant.s_base),
            dir.join(format!("{stem}_hdot.svg")),
        )?;
    }
    Ok(())
}

fn print_summary(s: &Scenario, r: &RunResult) {
    println!(
        "scenario {} ({}), {} steps of {:.3} us",
        s.name,
        r.controller,
        r.steps_completed,
        s.step * 1e6
    );
    match &r.regulation {
        Some(reg) => {
            println!("  max |v_dc - 1|        {:.4e} p.u.", reg.max_deviation_pu);
            println!(
                "  undershoot/overshoot  {:.4e} / {:.4e} p.u.",
                reg.undershoot_pu, reg.overshoot_pu
            );
            match reg.recovery.time() {
                Some(t) => println!(
                    "  recovery to +/-{:.2}%  {:.4} s after t = {} s",
                    reg.band_pu * 100.0,
                    t,
                    reg.event_t
                ),
                None => println!("  recovery to +/-{:.2}%  unrecovered", reg.band_pu * 100.0),
            }
        }
        None => println!("  empty trajectory, no regulation metrics"),
    }
    println!(
        "  energy balance        {:.3e} relative (pointwise {:.3e}, {} stencils)",
        r.energy.rel_mismatch(),
        r.energy.rel_pointwise(),
        r.energy.stencils
    );
    println!("  supply-rate excess    {} points", r.energy.supply_violations);
    if let Some(f) = &r.failure {
        println!("  stopped at t = {} s: {}", f.t, f.reason);
    }
}

fn print_checks(items: &[CheckItem]) -> bool {
    for c in items {
        println!("{} {:<15} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    items.iter().all(|c| c.passed)
}

fn simulate(cli: &Cli, s: &Scenario, output: &OutputOptions) -> Result<Outcome> {
    let r = run_scenario(s)?;
    print_summary(s, &r);
    if let Some(dir) = out_dir(cli, output) {
        write_artifacts(&dir, s, &r, output.plots)?;
    }
    if cli.check {
        Ok(Outcome::from_checks(print_checks(&scenario_checks(&r, &s.check))))
    } else {
        Ok(Outcome::Success)
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let ov = overrides(cli)?;
    match &cli.command {
        Command::Run => {
            let (s, output) = scenario(cli, &ov, None)?;
            simulate(cli, &s, &output)
        }
        Command::Demo { which } => {
            let (s, output) = scenario(cli, &ov, Some((*which).into()))?;
            simulate(cli, &s, &output)
        }
        Command::Compare => compare(cli, &ov),
        Command::Sweep { k_v, k_i } => sweep(cli, &ov, k_v, k_i),
        Command::Audit { trajectory } => audit_file(cli, &ov, trajectory),
    }
}

fn compare(cli: &Cli, ov: &Overrides) -> Result<Outcome> {
    let (base, output) = scenario(cli, ov, Some(Demo::Normal))?;
    let runs: Vec<Scenario> = [ControllerKind::Ph, ControllerKind::Pi]
        .into_iter()
        .map(|k| {
            let mut s = base.clone();
            s.controller.kind = k;
            s
        })
        .collect();
    let mut results = run_sweep(&runs).into_iter();
    let ph = results.next().expect("two runs")?;
    let pi = results.next().expect("two runs")?;
    let table = compare_runs(&ph, &pi)?;
    println!("{table}");
    if let Some(dir) = out_dir(cli, &output) {
        for (s, r) in runs.iter().zip([&ph, &pi]) {
            write_artifacts(&dir, s, r, output.plots)?;
        }
        let path = dir.join(format!("{}_compare.csv", base.name));
        fs::write(&path, table.to_csv()).map_err(|e| Error::Io { path, source: e })?;
    }
    if cli.check {
        println!("checks for the passivity-based run:");
        Ok(Outcome::from_checks(print_checks(&scenario_checks(&ph, &runs[0].check))))
    } else {
        Ok(Outcome::Success)
    }
}

fn sweep(cli: &Cli, ov: &Overrides, k_v: &[f64], k_i: &[f64]) -> Result<Outcome> {
    let (mut base, output) = scenario(cli, ov, Some(Demo::Normal))?;
    base.controller.kind = ControllerKind::Ph;
    let around = |x: f64| vec![0.5 * x, x, 2.0 * x];
    let k_v = if k_v.is_empty() { around(base.controller.ph.k_v) } else { k_v.to_vec() };
    let k_i = if k_i.is_empty() { around(base.controller.ph.k_i) } else { k_i.to_vec() };
    let mut grid = Vec::new();
    for &kv in &k_v {
        for &ki in &k_i {
            let mut s = base.clone();
            s.controller.ph.k_v = kv;
            s.controller.ph.k_i = ki;
            s.validate()?;
            grid.push(s);
        }
    }
    let results = run_sweep(&grid);
    let mut csv = String::from("k_v_w_per_v,k_i_per_s,max_deviation_pu,recovery_s,energy_mismatch_rel,supply_violations,failed,checks_passed\n");
    let mut all_passed = true;
    println!(
        "{:>12} {:>10} {:>14} {:>12} {:>12} {:>7}",
        "k_v", "k_i", "max_dev_pu", "recovery_s", "energy_rel", "checks"
    );
    for (s, r) in grid.iter().zip(results) {
        let r = r?;
        let passed = scenario_checks(&r, &s.check).iter().all(|c| c.passed);
        all_passed &= passed;
        let dev = r.regulation.map(|g| g.max_deviation_pu);
        let rec = r.regulation.and_then(|g| g.recovery.time());
        let fmt = |v: Option<f64>, missing: &str| v.map_or(missing.to_string(), |x| format!("{x:.6e}"));
        println!(
            "{:>12} {:>10} {:>14} {:>12} {:>12.3e} {:>7}",
            s.controller.ph.k_v,
            s.controller.ph.k_i,
            fmt(dev, "n/a"),
            fmt(rec, "unrecovered"),
            r.energy.rel_mismatch(),
            if passed { "pass" } else { "fail" }
        );
        csv.push_str(&format!(
            "{},{},{},{},{:.6e},{},{},{}\n",
            s.controller.ph.k_v,
            s.controller.ph.k_i,
            fmt(dev, "n/a"),
            fmt(rec, "unrecovered"),
            r.energy.rel_mismatch(),
            r.energy.supply_violations,
            r.failure.is_some(),
            passed
        ));
    }
    if let Some(dir) = out_dir(cli, &output) {
        create_dir(&dir)?;
        let path = dir.join(format!("{}_sweep.csv", base.name));
        fs::write(&path, csv).map_err(|e| Error::Io { path, source: e })?;
    }
    Ok(if cli.check { Outcome::from_checks(all_passed) } else { Outcome::Success })
}

fn audit_file(cli: &Cli, ov: &Overrides, path: &Path) -> Result<Outcome> {
    let (s, _) = scenario(cli, ov, Some(Demo::Normal))?;
    let records = read_trajectory_csv(path)?;
    let tol = s.check.supply_tol_pu * s.plant.s_base;
    let consistency = audit::energy_consistency_check(
        &records,
        &s.plant,
        &s.controller,
        &s.breakpoints(),
        s.check.energy_tol_rel,
    )?;
    let passivity = audit::passivity_check(&records, s.controller.kind, tol);
    println!("trajectory {} ({} records)", path.display(), records.len());
    println!(
        "  energy balance      {:.3e} relative (pointwise {:.3e}), {} stencils flagged, {} excluded",
        consistency.max_rel_mismatch,
        consistency.max_rel_pointwise,
        consistency.flagged.len(),
        consistency.excluded
    );
    println!(
        "  supply-rate excess  {} records ({:.3e} of total)",
        passivity.violations, passivity.violation_fraction
    );
    println!("  max |residual|      {:.3e} W", passivity.max_abs_residual);
    if !passivity.controller_terms {
        println!("  controller storage not defined for this law; plant terms only");
    }
    if let Some(flag) = consistency.flagged.first() {
        println!("  first flagged stencil at t = {} s", records[*flag].t);
    }
    let passed = consistency.passes && passivity.violations == 0;
    Ok(if cli.check { Outcome::from_checks(passed) } else { Outcome::Success })
}
