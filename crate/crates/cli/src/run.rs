//! Runs every (policy, seed) cell of an experiment and writes the artifacts.

use std::path::Path;

use lapse_core::cartpole::{calibrate_moments, run_episodes, Calibration, CartPoleConfig, LinearSignController};
use lapse_core::parallel::map_items;
use lapse_core::simengine::{avg_context_lapse, run_trace, violation_probability};
use lapse_core::waterfill::bound_objective;
use lapse_core::{PolicyKind, StationaryPolicy};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{
    self, BoundRow, CartpoleRow, Summary, SyntheticRow,
};
use crate::svg::{bar_chart, Bar};
use crate::CliError;

fn cells(config: &ExperimentConfig) -> Vec<(PolicyKind, u64)> {
    let mut cells: Vec<(PolicyKind, u64)> = config
        .policies
        .iter()
        .flat_map(|&k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    cells.sort();
    cells
}

/// Water-filling probabilities and the bound rows for a synthetic config.
pub fn synthetic_bound(config: &ExperimentConfig) -> Result<(StationaryPolicy, Vec<BoundRow>), CliError> {
    let params = config.system_params()?;
    let pi = StationaryPolicy::for_params(&params).map_err(CliError::runtime)?;
    let widths = params.bar_widths();
    let rows = (0..params.n_users())
        .map(|i| BoundRow {
            p: params.p()[i],
            weighted_moment: params.w_mean()[i] * params.a2_moment()[i],
            width: widths[i],
            pi: pi.pi[i],
        })
        .collect();
    Ok((pi, rows))
}

pub fn run_synthetic(config: &ExperimentConfig) -> Result<Vec<SyntheticRow>, CliError> {
    let params = config.system_params()?;
    let (pi, _) = synthetic_bound(config)?;
    let bound = bound_objective(&params, &pi).map_err(CliError::runtime)?;
    let rule = config.threshold_rule();
    let results = map_items(&cells(config), |&(policy, seed)| {
        let acc = run_trace(&params, policy, &pi, config.slots, seed, &rule)?;
        Ok(SyntheticRow {
            policy,
            seed,
            slots: acc.slots,
            avg_context_lapse: avg_context_lapse(&acc)?,
            violation_probability: violation_probability(&acc).unwrap_or(f64::NAN),
            bound,
        })
    });
    results
        .into_iter()
        .collect::<lapse_core::Result<Vec<_>>>()
        .map_err(CliError::runtime)
}

pub fn calibrate(config: &ExperimentConfig) -> Result<Calibration, CliError> {
    let ctl = LinearSignController::new(config.cartpole.gains);
    calibrate_moments(
        config.cartpole.calibration_episodes,
        config.cartpole.calibration_seed,
        config.cartpole.disturbance_sigma,
        &ctl,
    )
    .map_err(CliError::runtime)
}

pub fn cartpole_config(config: &ExperimentConfig, cal: &Calibration) -> CartPoleConfig {
    CartPoleConfig {
        n_channels: config.n_channels,
        p: config.p.clone(),
        disturbance_sigma: config.cartpole.disturbance_sigma,
        moments: cal.moments,
    }
}

pub fn run_cartpole(config: &ExperimentConfig, cal: &Calibration) -> Result<Vec<CartpoleRow>, CliError> {
    let cp = cartpole_config(config, cal);
    let ctl = LinearSignController::new(config.cartpole.gains);
    let results = map_items(&cells(config), |&(policy, seed)| {
        let stats = run_episodes(&cp, policy, config.episodes, seed, &ctl)?;
        Ok(CartpoleRow {
            policy,
            seed,
            episodes: stats.episodes(),
            mean_steps: stats.mean_steps(),
            stderr_steps: stats.stderr_steps(),
        })
    });
    results
        .into_iter()
        .collect::<lapse_core::Result<Vec<_>>>()
        .map_err(CliError::runtime)
}

fn cartpole_bound(cp: &CartPoleConfig) -> Result<Vec<BoundRow>, CliError> {
    let pi = cp.stationary().map_err(CliError::runtime)?;
    let widths = cp.bar_widths();
    Ok((0..cp.n_poles())
        .map(|i| BoundRow {
            p: cp.p[i],
            weighted_moment: cp.moments.weighted_energy(),
            width: widths[i],
            pi: pi.pi[i],
        })
        .collect())
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn write_chart(out: &Path, title: &str, y_label: &str, summary: &[Summary], second: bool) -> Result<(), CliError> {
    let bars: Vec<Bar> = summary
        .iter()
        .map(|s| Bar {
            label: s.policy.to_string(),
            value: if second { s.second_mean } else { s.mean },
            error: if second { s.second_stderr } else { s.stderr },
        })
        .collect();
    let path = out.join("chart.svg");
    std::fs::write(&path, bar_chart(title, y_label, &bars)).map_err(|e| CliError::io(&path, e))
}

/// Run the configured experiment and write its artifacts into `config.out`.
pub fn run(config: &ExperimentConfig) -> Result<Vec<Summary>, CliError> {
    let out = config.out.as_path();
    match config.experiment {
        Experiment::SyntheticLapse | Experiment::SyntheticViolation => {
            let (_, bound_rows) = synthetic_bound(config)?;
            let rows = run_synthetic(config)?;
            let summary = output::summarize_synthetic(&rows);
            create_dir(out)?;
            output::write_synthetic_results(&out.join("results.csv"), &rows)?;
            output::write_synthetic_summary(&out.join("summary.csv"), &summary)?;
            output::write_bound(&out.join("bound.csv"), &bound_rows)?;
            if config.chart {
                if config.experiment == Experiment::SyntheticLapse {
                    write_chart(out, "Average context-aware lapse", "average lapse", &summary, false)?;
                } else {
                    write_chart(out, "Threshold violation probability", "probability", &summary, true)?;
                }
            }
            Ok(summary)
        }
        Experiment::Cartpole => {
            let cal = calibrate(config)?;
            let cp = cartpole_config(config, &cal);
            let rows = run_cartpole(config, &cal)?;
            let summary = output::summarize_cartpole(&rows);
            create_dir(out)?;
            output::write_cartpole_results(&out.join("results.csv"), &rows)?;
            output::write_cartpole_summary(&out.join("summary.csv"), &summary)?;
            output::write_calibration(&out.join("calibration.txt"), &cal)?;
            if cp.p.iter().all(|&p| p > 0.0) && cp.moments.weighted_energy() > 0.0 {
                output::write_bound(&out.join("bound.csv"), &cartpole_bound(&cp)?)?;
            }
            if config.chart {
                write_chart(out, "Average steps before game over", "steps per episode", &summary, false)?;
            }
            Ok(summary)
        }
    }
}
