use mapcap::bounds::{
    backlog_tail_bound, delay_constrained_capacity, delay_tail_bound, transient_capacity_bounds, TailBoundCurve,
};
use mapcap::control::ControlledModel;
use mapcap::markov::MarginalDistribution;
use mapcap::model::MarkovAdditiveModel;
use mapcap::order::{adjustment_order_check, cx_compare, EnumerationConfig};
use mapcap::sim::{
    empirical_tail, lag1_autocorrelation, lindley_queue, simulate_ensemble, simulate_process, validate_bounds,
    PathEnsemble, DEPENDENT_SAMPLE_INFLATION, MIN_EXCEEDANCES,
};
use mapcap::spectral::{adjustment_coefficient, AdjustmentCoefficient};
use mapcap::Error;
use serde_json::{json, Value};

use crate::scenario::{BuiltModel, Scenario};
use crate::{CliError, Output};

fn ensemble(scenario: &Scenario, built: &BuiltModel, seed: u64) -> Result<PathEnsemble, CliError> {
    let sim = &scenario.simulation;
    match &built.model {
        ControlledModel::Exact(m) => simulate_ensemble(m, &built.initial, sim.horizon, sim.paths, seed)
            .map_err(|e| CliError::at("simulation", e)),
        ControlledModel::SimulationOnly(g) => Ok(simulate_process(g, sim.horizon, sim.paths, seed)),
    }
}

fn require_lambda(scenario: &Scenario) -> Result<f64, CliError> {
    scenario
        .lambda
        .ok_or_else(|| CliError::config("lambda", "required by this subcommand"))
}

pub fn simulate(scenario: &Scenario, built: &BuiltModel, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let sim = &scenario.simulation;
    let ens = ensemble(scenario, built, seed)?;
    out.write("transient.csv", &ens.summary_csv(&scenario.transient_times, sim.quantile))?;
    let lag1 = lag1_autocorrelation(&ens, 0).ok();
    let mut summary = json!({
        "paths": ens.len(),
        "horizon": ens.horizon,
        "lag1": lag1,
    });
    if let Some(lambda) = scenario.lambda {
        let queue = lindley_queue(&ens, lambda, sim.warmup());
        let delay = empirical_tail(&queue.delay, &scenario.delay_grid, sim.delta, DEPENDENT_SAMPLE_INFLATION)
            .map_err(|e| CliError::at("simulation", e))?;
        let backlog = empirical_tail(
            &queue.backlog,
            &scenario.backlog_grid(lambda),
            sim.delta,
            DEPENDENT_SAMPLE_INFLATION,
        )
        .map_err(|e| CliError::at("simulation", e))?;
        out.write("delay_empirical.csv", &delay.to_csv())?;
        out.write("backlog_empirical.csv", &backlog.to_csv())?;
        summary["queue"] = json!({
            "lambda": lambda,
            "warmup": queue.warmup,
            "samples": queue.delay.len(),
            "mean_capacity": queue.mean_capacity,
            "unstable": queue.unstable,
        });
    }
    out.write_json("simulation.json", &summary)?;
    Ok(summary)
}

/// Delay band of a queue whose capacity never drops below `λ`: empty tail.
fn zero_delay_curve(grid: &[f64]) -> TailBoundCurve<f64> {
    TailBoundCurve {
        x: grid.to_vec(),
        lower: vec![0.0; grid.len()],
        upper: vec![0.0; grid.len()],
        theta: vec![f64::INFINITY; grid.len()],
        clamped: vec![false; grid.len()],
    }
}

/// Delay band at `λ`, or an empty tail when capacity never drops below `λ`.
fn delay_band(
    m: &MarkovAdditiveModel<f64>,
    lambda: f64,
    varpi: &MarginalDistribution<f64>,
    grid: &[f64],
) -> Result<(TailBoundCurve<f64>, Option<AdjustmentCoefficient<f64>>), CliError> {
    match adjustment_coefficient(m, lambda) {
        Ok(adj) => Ok((
            delay_tail_bound(m, lambda, varpi, grid).map_err(|e| CliError::at("lambda", e))?,
            Some(adj),
        )),
        Err(Error::NoRoot) => Ok((zero_delay_curve(grid), None)),
        Err(e) => Err(CliError::at("lambda", e)),
    }
}

fn delay_status(adj: &Option<AdjustmentCoefficient<f64>>) -> &'static str {
    if adj.is_some() {
        "ok"
    } else {
        "no_root"
    }
}

pub fn bounds(scenario: &Scenario, built: &BuiltModel, out: &mut Output) -> Result<Value, CliError> {
    let m = built.exact("model")?;
    let mut csv = String::from("t,initial_state,c_lower,c_upper,theta_lower,theta_upper,clamped\n");
    for &t in &scenario.transient_times {
        for j0 in 0..m.dim() {
            let e = transient_capacity_bounds(m, j0, t, scenario.epsilon).map_err(|e| CliError::at("transient_times", e))?;
            csv.push_str(&format!(
                "{t},{j0},{},{},{},{},{}\n",
                e.c_lower, e.c_upper, e.theta_lower, e.theta_upper, e.clamped
            ));
        }
    }
    out.write("transient_bounds.csv", &csv)?;
    let mut summary = json!({ "epsilon": scenario.epsilon });

    if let Some(lambda) = scenario.lambda {
        let backlog_grid = scenario.backlog_grid(lambda);
        let (delay, adj) = delay_band(m, lambda, &built.initial, &scenario.delay_grid)?;
        let backlog = match &adj {
            Some(adj) => {
                summary["theta_star"] = json!(adj.theta_star);
                summary["h"] = json!(adj.spectral.h);
                backlog_tail_bound(m, lambda, &built.initial, &backlog_grid).map_err(|e| CliError::at("backlog_grid", e))?
            }
            None => zero_delay_curve(&backlog_grid),
        };
        out.write("delay_bounds.csv", &delay.to_csv())?;
        out.write("backlog_bounds.csv", &backlog.to_csv())?;
        summary["lambda"] = json!(lambda);
        summary["delay_status"] = json!(delay_status(&adj));
    }

    if !scenario.rate_targets.is_empty() {
        let mut csv = String::from("delay,epsilon,lambda_lower,lambda_upper\n");
        for (k, r) in scenario.rate_targets.iter().enumerate() {
            let b = delay_constrained_capacity(m, &built.initial, r.delay, r.epsilon)
                .map_err(|e| CliError::at(&format!("rate_targets[{k}]"), e))?;
            csv.push_str(&format!("{},{},{},{}\n", r.delay, r.epsilon, b.lambda_lower, b.lambda_upper));
        }
        out.write("rates.csv", &csv)?;
    }
    out.write_json("bounds.json", &summary)?;
    Ok(summary)
}

pub fn control(built: &BuiltModel, out: &mut Output) -> Result<Value, CliError> {
    let plan = built
        .plan
        .as_ref()
        .ok_or_else(|| CliError::config("model.kind", "the control subcommand needs a `copula_plan` model"))?;
    out.write_json("plan.json", &plan.to_json())?;
    Ok(json!({
        "steps": plan.horizon(),
        "constant": plan.is_constant(),
        "first_matrix": plan.transitions[0].rows(),
    }))
}

pub fn order(scenario: &Scenario, built: &BuiltModel, out: &mut Output) -> Result<Value, CliError> {
    let a = built.exact("model")?;
    let other = scenario
        .compare
        .as_ref()
        .ok_or_else(|| CliError::config("compare", "the order subcommand needs a second model"))?
        .build(scenario.initial.as_deref(), "compare")?;
    let b = other.exact("compare")?;
    // Convex order is a statement about models with a common stationary
    // marginal, so both start from the first model's stationary law.
    let varpi = a.stationary().map_err(|e| CliError::at("model", e))?;
    let cfg = EnumerationConfig::default();
    let cx = cx_compare(a, b, &varpi, scenario.order_horizon, None, &cfg).map_err(|e| CliError::at("compare", e))?;
    out.write("cx.csv", &cx.to_csv())?;
    let mut summary = json!({
        "horizon": scenario.order_horizon,
        "verdict": cx.verdict,
        "mean_a": cx.mean_a,
        "mean_b": cx.mean_b,
        "max_excess_a": cx.max_excess_a,
        "max_excess_b": cx.max_excess_b,
    });
    if let Some(lambda) = scenario.lambda {
        let report = adjustment_order_check(a, b, lambda, &varpi, scenario.order_horizon, &cfg)
            .map_err(|e| CliError::at("lambda", e))?;
        summary["adjustment"] = serde_json::to_value(report).expect("report serialises");
    }
    out.write_json("order.json", &summary)?;
    Ok(summary)
}

pub fn validate(scenario: &Scenario, built: &BuiltModel, seed: u64, out: &mut Output) -> Result<Value, CliError> {
    let m = built.exact("model")?;
    let lambda = require_lambda(scenario)?;
    let (curve, adj) = delay_band(m, lambda, &built.initial, &scenario.delay_grid)?;
    let sim = &scenario.simulation;
    let ens = ensemble(scenario, built, seed)?;
    let queue = lindley_queue(&ens, lambda, sim.warmup());
    let tail = empirical_tail(&queue.delay, &scenario.delay_grid, sim.delta, DEPENDENT_SAMPLE_INFLATION)
        .map_err(|e| CliError::at("simulation", e))?;
    let report = validate_bounds(&tail, &curve, MIN_EXCEEDANCES).map_err(|e| CliError::at("delay_grid", e))?;

    let mut csv = String::from("d,empirical,dkw_lo,dkw_hi,exceedances,lower,upper\n");
    for k in 0..tail.x.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            tail.x[k], tail.ccdf[k], tail.dkw_lo[k], tail.dkw_hi[k], tail.exceedances[k], curve.lower[k], curve.upper[k]
        ));
    }
    out.write("validation.csv", &csv)?;
    let summary = json!({
        "lambda": lambda,
        "delay_status": delay_status(&adj),
        "theta_star": curve.theta.first(),
        "samples": queue.delay.len(),
        "min_exceedances": MIN_EXCEEDANCES,
        "report": report,
        "upper_bound_holds": report.upper_violations == 0,
        "lower_bound_holds": report.lower_violations == 0,
    });
    out.write_json("validation.json", &summary)?;
    Ok(summary)
}
