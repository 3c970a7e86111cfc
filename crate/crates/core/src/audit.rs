//! Energy-balance, passivity and regulation checks over trajectories.

use core::fmt;

use crate::controllers::ph::controller_power_balance;
use crate::controllers::{ControllerConfig, ControllerKind};
use crate::engine::{CheckThresholds, ClosedLoopRate, RunResult, Sample};
use crate::error::{Error, Result};
use crate::ph::{energy_rate_analytic, hamiltonian_total, EnergyState, PortInputs};
use crate::plant::PlantParams;
use crate::scalar::Real;

/// Streaming comparison of the stored-energy difference quotient against
/// the analytic rate, fed one integration point at a time.
///
/// Over each stencil `t_{k−1}, t_k, t_{k+1}` the centered quotient
/// `(H_{k+1} − H_{k−1}) / 2Δ` is compared with the Simpson mean
/// `(Ḣ_{k−1} + 4Ḣ_k + Ḣ_{k+1}) / 6` and with the pointwise `Ḣ_k`.
/// Stencils whose closed interval holds an input breakpoint are skipped.
#[derive(Clone, Debug)]
pub struct EnergyAccumulator<T> {
    breakpoints: Vec<T>,
    next_breakpoint: usize,
    supply_tol: T,
    window: Vec<(T, T, T)>,
    audit: EnergyAudit<T>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyAudit<T> {
    pub points: usize,
    pub stencils: usize,
    pub excluded: usize,
    pub max_abs_mismatch: T,
    pub max_abs_pointwise: T,
    /// Time of the worst Simpson mismatch.
    pub worst_t: T,
    pub peak_rate: T,
    pub supply_violations: usize,
    /// Largest `(H_{k+1} − H_k) / H_k` between consecutive points.
    pub max_rel_increase: T,
    /// Smallest rate used to normalise mismatches [W].
    pub rate_floor: T,
}

impl<T: Real> EnergyAudit<T> {
    fn scale(&self) -> T {
        self.peak_rate.max(self.rate_floor).max(T::min_positive_value())
    }

    /// Worst stencil mismatch relative to the peak `|Ḣ_cl|`, floored so that a
    /// settled run is not judged against its own near-zero rate.
    pub fn rel_mismatch(&self) -> T {
        self.max_abs_mismatch / self.scale()
    }

    pub fn rel_pointwise(&self) -> T {
        self.max_abs_pointwise / self.scale()
    }
}

impl<T: Real> EnergyAccumulator<T> {
    /// `breakpoints` must be sorted; `supply_tol` and `rate_floor` are absolute [W].
    pub fn new(breakpoints: Vec<T>, supply_tol: T, rate_floor: T) -> Self {
        Self {
            breakpoints,
            next_breakpoint: 0,
            supply_tol,
            window: Vec::with_capacity(3),
            audit: EnergyAudit {
                max_rel_increase: T::neg_infinity(),
                rate_floor,
                ..EnergyAudit::default()
            },
        }
    }

    pub fn push(&mut self, t: T, h: T, rate: T, supply: T) {
        let a = &mut self.audit;
        a.points += 1;
        a.peak_rate = a.peak_rate.max(rate.abs());
        if rate > supply + self.supply_tol {
            a.supply_violations += 1;
        }
        if let Some(&(_, h_prev, _)) = self.window.last() {
            let denom = h_prev.abs().max(T::min_positive_value());
            a.max_rel_increase = a.max_rel_increase.max((h - h_prev) / denom);
        }
        if self.window.len() == 3 {
            self.window.remove(0);
        }
        self.window.push((t, h, rate));
        if self.window.len() < 3 {
            return;
        }
        let [(t0, h0, r0), (_, _, r1), (t2, h2, r2)] = [self.window[0], self.window[1], self.window[2]];
        while self.next_breakpoint < self.breakpoints.len() && self.breakpoints[self.next_breakpoint] < t0 {
            self.next_breakpoint += 1;
        }
        if self
            .breakpoints
            .get(self.next_breakpoint)
            .is_some_and(|&b| b <= t2)
        {
            a.excluded += 1;
            return;
        }
        let fd = (h2 - h0) / (t2 - t0);
        let simpson = (r0 + T::lit(4.0) * r1 + r2) / T::lit(6.0);
        let mismatch = (fd - simpson).abs();
        a.stencils += 1;
        if mismatch > a.max_abs_mismatch {
            a.max_abs_mismatch = mismatch;
            a.worst_t = self.window[1].0;
        }
        a.max_abs_pointwise = a.max_abs_pointwise.max((fd - r1).abs());
    }

    pub fn finish(mut self) -> EnergyAudit<T> {
        if self.audit.max_rel_increase == T::neg_infinity() {
            self.audit.max_rel_increase = T::zero();
        }
        self.audit
    }
}

/// Recomputes `H_cl` and `Ḣ_cl` of one record from its primitive columns
/// (flux, DC voltage, integrators, grid and converter voltages, load).
pub fn recompute_energy<T: Real>(
    s: &Sample<T>,
    plant: &PlantParams<T>,
    controller: &ControllerConfig<T>,
) -> Result<(T, ClosedLoopRate<T>)> {
    let x = EnergyState {
        phi: s.state.energy.phi,
        q_dc: plant.c_dc * s.v_dc,
        zeta_v: s.state.energy.zeta_v,
        zeta_i: s.state.energy.zeta_i,
    };
    let h = hamiltonian_total(&x, plant, &controller.storage_weights())?;
    let plant_rate = energy_rate_analytic(
        &x,
        &PortInputs {
            v_g: s.v_g,
            e: s.e,
            p_load: s.p_load,
        },
        plant,
    )?;
    let rates = match controller.kind {
        ControllerKind::Ph => {
            let b = controller_power_balance(s.e_v, s.e_i, x.zeta_v, x.zeta_i, &controller.ph);
            ClosedLoopRate::assemble(plant_rate, b.voltage_damping, b.current_damping, b.port_inflow)
        }
        _ => ClosedLoopRate::assemble(plant_rate, T::zero(), T::zero(), T::zero()),
    };
    Ok((h.total, rates))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    pub max_rel_mismatch: T,
    pub max_rel_pointwise: T,
    pub peak_rate: T,
    /// Centre indices of stencils whose mismatch exceeds the tolerance.
    pub flagged: Vec<usize>,
    pub excluded: usize,
    pub passes: bool,
}

/// Centered difference of `H_cl` over the records against the analytic
/// rate, both rebuilt from primitives so a corrupted column shows up.
/// Mismatches are normalised by the peak `|Ḣ_cl|`, floored at this many `S_base`.
pub const RATE_FLOOR_PU: f64 = 1e-3;

pub fn energy_consistency_check<T: Real>(
    records: &[Sample<T>],
    plant: &PlantParams<T>,
    controller: &ControllerConfig<T>,
    breakpoints: &[T],
    tol_rel: T,
) -> Result<ConsistencyReport<T>> {
    if records.len() < 3 {
        return Err(Error::TooShort {
            len: records.len(),
            need: 3,
        });
    }
    let pts = records
        .iter()
        .map(|s| recompute_energy(s, plant, controller).map(|(h, r)| (s.t, h, r.h_cl_rate)))
        .collect::<Result<Vec<_>>>()?;
    let peak = pts.iter().fold(T::zero(), |m, p| m.max(p.2.abs()));
    let scale = peak.max(T::lit(RATE_FLOOR_PU) * plant.s_base);
    let mut mismatches = Vec::new();
    let mut excluded = 0;
    let (mut worst, mut worst_pw) = (T::zero(), T::zero());
    for k in 1..pts.len() - 1 {
        let (t0, h0, r0) = pts[k - 1];
        let (_, _, r1) = pts[k];
        let (t2, h2, r2) = pts[k + 1];
        if breakpoints.iter().any(|&b| b >= t0 && b <= t2) {
            excluded += 1;
            continue;
        }
        let fd = (h2 - h0) / (t2 - t0);
        let m = (fd - (r0 + T::lit(4.0) * r1 + r2) / T::lit(6.0)).abs() / scale;
        worst = worst.max(m);
        worst_pw = worst_pw.max((fd - r1).abs() / scale);
        mismatches.push((k, m));
    }
    let flagged: Vec<usize> = mismatches.iter().filter(|(_, m)| *m > tol_rel).map(|(k, _)| *k).collect();
    Ok(ConsistencyReport {
        max_rel_mismatch: worst,
        max_rel_pointwise: worst_pw,
        peak_rate: peak,
        passes: flagged.is_empty(),
        flagged,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassivityRow<T> {
    pub t: T,
    pub h_tot_rate: T,
    pub h_cl_rate: T,
    pub fd_rate: T,
    pub supply: T,
    /// `dH_cl/dt` (centered difference) minus the analytic `Ḣ_cl`.
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassivityReport<T> {
    /// Interior records only.
    pub series: Vec<PassivityRow<T>>,
    pub max_abs_residual: T,
    /// Records with `Ḣ_cl > v_gᵀ i_g + tol`.
    pub violations: usize,
    pub violation_fraction: T,
    /// Largest relative increase of `H_cl` between consecutive records.
    pub max_rel_increase: T,
    /// False for laws without a storage function, whose audit covers `Ḣ_tot` only.
    pub controller_terms: bool,
}

pub fn passivity_check<T: Real>(records: &[Sample<T>], kind: ControllerKind, tol_abs: T) -> PassivityReport<T> {
    let violations = records
        .iter()
        .filter(|s| s.rates.h_cl_rate > s.rates.plant.supply + tol_abs)
        .count();
    let series: Vec<PassivityRow<T>> = records
        .windows(3)
        .map(|w| {
            let fd = (w[2].hamiltonian.total - w[0].hamiltonian.total) / (w[2].t - w[0].t);
            let s = &w[1];
            PassivityRow {
                t: s.t,
                h_tot_rate: s.rates.h_tot_rate(),
                h_cl_rate: s.rates.h_cl_rate,
                fd_rate: fd,
                supply: s.rates.plant.supply,
                residual: fd - s.rates.h_cl_rate,
            }
        })
        .collect();
    let max_rel_increase = records
        .windows(2)
        .map(|w| {
            let h0 = w[0].hamiltonian.total;
            (w[1].hamiltonian.total - h0) / h0.abs().max(T::min_positive_value())
        })
        .fold(T::neg_infinity(), T::max);
    PassivityReport {
        max_abs_residual: series.iter().fold(T::zero(), |m, r| m.max(r.residual.abs())),
        series,
        violations,
        violation_fraction: if records.is_empty() {
            T::zero()
        } else {
            T::from_count(violations) / T::from_count(records.len())
        },
        max_rel_increase: if records.len() < 2 { T::zero() } else { max_rel_increase },
        controller_terms: kind == ControllerKind::Ph,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Recovery<T> {
    /// Time from the last event until the band is entered for good.
    Recovered(T),
    Unrecovered,
}

impl<T: Real> Recovery<T> {
    pub fn time(self) -> Option<T> {
        match self {
            Self::Recovered(t) => Some(t),
            Self::Unrecovered => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegulationReport<T> {
    pub max_deviation_pu: T,
    pub undershoot_pu: T,
    pub overshoot_pu: T,
    pub recovery: Recovery<T>,
    pub band_pu: T,
    pub event_t: T,
}

pub fn regulation_metrics<T: Real>(
    records: &[Sample<T>],
    nominal: T,
    band_pu: T,
    event_t: T,
) -> Result<RegulationReport<T>> {
    if records.is_empty() {
        return Err(Error::TooShort { len: 0, need: 1 });
    }
    let dev = |s: &Sample<T>| s.v_dc / nominal - T::one();
    let (mut under, mut over) = (T::zero(), T::zero());
    for s in records {
        let d = dev(s);
        under = under.max(-d);
        over = over.max(d);
    }
    let after = records.partition_point(|s| s.t < event_t);
    let last_out = records[after..].iter().rposition(|s| dev(s).abs() > band_pu);
    let recovery = match last_out {
        None => Recovery::Recovered(T::zero()),
        Some(j) if after + j + 1 == records.len() => Recovery::Unrecovered,
        Some(j) => Recovery::Recovered(records[after + j + 1].t - event_t),
    };
    Ok(RegulationReport {
        max_deviation_pu: under.max(over),
        undershoot_pu: under,
        overshoot_pu: over,
        recovery,
        band_pu,
        event_t,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub controller: ControllerKind,
    pub max_deviation_pu: Option<f64>,
    pub undershoot_pu: Option<f64>,
    pub overshoot_pu: Option<f64>,
    pub recovery_s: Option<f64>,
    pub failed: bool,
}

impl RunSummary {
    pub fn of<T: Real>(r: &RunResult<T>) -> Self {
        let reg = r.regulation.as_ref();
        Self {
            controller: r.controller,
            max_deviation_pu: reg.map(|g| g.max_deviation_pu.as_f64()),
            undershoot_pu: reg.map(|g| g.undershoot_pu.as_f64()),
            overshoot_pu: reg.map(|g| g.overshoot_pu.as_f64()),
            recovery_s: reg.and_then(|g| g.recovery.time()).map(Real::as_f64),
            failed: r.failure.is_some(),
        }
    }
}

/// Two runs of one scenario side by side; deltas are `second − first`.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    pub first: RunSummary,
    pub second: RunSummary,
}

pub fn compare_runs<T: Real>(first: &RunResult<T>, second: &RunResult<T>) -> Result<Comparison> {
    if first.scenario != second.scenario {
        return Err(Error::ScenarioMismatch {
            left: first.scenario.clone(),
            right: second.scenario.clone(),
        });
    }
    Ok(Comparison {
        scenario: first.scenario.clone(),
        first: RunSummary::of(first),
        second: RunSummary::of(second),
    })
}

fn cell(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |x| format!("{x:.6e}"))
}

impl Comparison {
    fn rows(&self) -> [(&'static str, Option<f64>, Option<f64>, &'static str); 4] {
        let (a, b) = (&self.first, &self.second);
        [
            ("max_deviation_pu", a.max_deviation_pu, b.max_deviation_pu, "n/a"),
            ("undershoot_pu", a.undershoot_pu, b.undershoot_pu, "n/a"),
            ("overshoot_pu", a.overshoot_pu, b.overshoot_pu, "n/a"),
            ("recovery_s", a.recovery_s, b.recovery_s, "unrecovered"),
        ]
    }

    pub fn delta(&self, metric: &str) -> Option<f64> {
        self.rows()
            .into_iter()
            .find(|r| r.0 == metric)
            .and_then(|(_, a, b, _)| Some(b? - a?))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("metric,{},{},delta\n", self.first.controller, self.second.controller);
        for (name, a, b, missing) in self.rows() {
            let delta = a.zip(b).map(|(a, b)| b - a);
            out.push_str(&format!(
                "{name},{},{},{}\n",
                cell(a, missing),
                cell(b, missing),
                cell(delta, "n/a")
            ));
        }
        out.push_str(&format!("run_failed,{},{},\n", self.first.failed, self.second.failed));
        out
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(
            f,
            "{:<18} {:>14} {:>14} {:>14}",
            "metric", self.first.controller, self.second.controller, "delta"
        )?;
        for (name, a, b, missing) in self.rows() {
            let delta = a.zip(b).map(|(a, b)| b - a);
            writeln!(
                f,
                "{name:<18} {:>14} {:>14} {:>14}",
                cell(a, missing),
                cell(b, missing),
                cell(delta, "n/a")
            )?;
        }
        write!(
            f,
            "{:<18} {:>14} {:>14}",
            "run_failed", self.first.failed, self.second.failed
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Turns a run into pass/fail lines against its scenario thresholds.
pub fn scenario_checks<T: Real>(r: &RunResult<T>, c: &CheckThresholds<T>) -> Vec<CheckItem> {
    let mut items = vec![CheckItem {
        name: "completed",
        passed: r.failure.is_none(),
        detail: r
            .failure
            .as_ref()
            .map_or_else(|| "no guard trips".to_string(), |f| format!("stopped at t = {} s: {}", f.t, f.reason)),
    }];
    if let Some(reg) = &r.regulation {
        items.push(CheckItem {
            name: "regulation",
            passed: reg.max_deviation_pu <= c.max_deviation_pu,
            detail: format!(
                "max |v_dc - 1| = {:.3e} p.u. (limit {:.3e})",
                reg.max_deviation_pu.as_f64(),
                c.max_deviation_pu.as_f64()
            ),
        });
        if let Some(limit) = c.recovery_within_s {
            let t = reg.recovery.time();
            items.push(CheckItem {
                name: "recovery",
                passed: t.is_some_and(|t| t <= limit),
                detail: match t {
                    Some(t) => format!(
                        "back within ±{:.3e} p.u. after {:.4} s (limit {:.4} s)",
                        reg.band_pu.as_f64(),
                        t.as_f64(),
                        limit.as_f64()
                    ),
                    None => "never re-entered the band".to_string(),
                },
            });
        }
    }
    items.push(CheckItem {
        name: "guards",
        passed: r.guard_events == 0,
        detail: format!("{} points with a clamp or limit active", r.guard_events),
    });
    items.push(CheckItem {
        name: "supply_bound",
        passed: r.energy.supply_violations == 0,
        detail: format!("{} of {} points above the supply rate", r.energy.supply_violations, r.energy.points),
    });
    items.push(CheckItem {
        name: "energy_balance",
        passed: r.energy.rel_mismatch() <= c.energy_tol_rel,
        detail: format!(
            "max relative mismatch {:.3e} over {} stencils (limit {:.1e})",
            r.energy.rel_mismatch().as_f64(),
            r.energy.stencils,
            c.energy_tol_rel.as_f64()
        ),
    });
    items
}
