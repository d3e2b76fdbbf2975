use awgnbc_core::montecarlo::{simulate, SimConfig, SimReport};
use awgnbc_core::single_feedback::{rate_region, Branch, RegionPoint};
use awgnbc_core::symmetric::{
    asymptotic_gains, blocklength_fractions, blocklength_point, no_feedback_sum_rate, optimal_gains, optimize_sum_rate,
    to_general_code, AsymptoticForm, DesignPoint, BlocklengthRow,
};
use awgnbc_core::{
    ChannelParams, FeedbackNoise, LinearFeedbackCode, Matrix, SymmetricParams, TwoUserParams,
};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{FigBlocklength, FigSumrate, Format, GainRule, Optimize, RateRegion, Scheme, Simulate};
use crate::error::CliError;
use crate::output::{gnuplot_script, Artifact, Cell, Table};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: u64,
    pub format: Format,
    pub lmax: Option<usize>,
    pub trials: Option<usize>,
    pub verbose: bool,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn fig_blocklength(cfg: &FigBlocklength, ov: &Overrides) -> Result<Artifact, CliError> {
    positive("fig_blocklength.power", cfg.power)?;
    if !(0.0..1.0).contains(&cfg.margin) {
        return Err(CliError::Validation(format!("fig_blocklength.margin must lie in [0,1), got {}", cfg.margin)));
    }
    let fractions = match cfg.fraction {
        Some(f) if f > 0.0 && f < 1.0 => vec![f],
        Some(f) => {
            return Err(CliError::Validation(format!(
                "fig_blocklength.fraction must lie in (0,1) so R stays inside the window, got {f}"
            )))
        }
        None if cfg.points == 0 => return Err(CliError::Validation("fig_blocklength.points must be >= 1".into())),
        None => blocklength_fractions(cfg.points),
    };
    let rows: Vec<BlocklengthRow> = fractions
        .into_iter()
        .map(|fr| blocklength_point(cfg.power, cfg.users, fr, cfg.margin))
        .collect::<Result<_, _>>()?;
    match ov.format {
        Format::Json => Artifact::json(&rows),
        Format::Csv => {
            let table = Table {
                schema: "fig_blocklength/1",
                header: vec!["R", "gamma", "beta", "L_ub"],
                rows: rows
                    .iter()
                    .map(|r| vec![Cell::Float(r.rate), Cell::Float(r.gamma), Cell::Float(r.beta), Cell::Int(r.ltilde_ub)])
                    .collect(),
            };
            let gp = gnuplot_script(
                "Upper bound on the inner blocklength",
                "sum-rate R [bits/use]",
                "L_ub",
                (1, 4),
                "set logscale y\n",
                "",
            );
            Artifact::csv(&table, Some(gp))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumrateRow {
    pub sigma_n2: f64,
    pub r_star: f64,
    pub ltilde_opt: usize,
    pub beta_opt: f64,
    pub gamma_opt: f64,
    pub r_no_feedback: f64,
}

pub fn fig_sumrate(cfg: &FigSumrate, ov: &Overrides) -> Result<Artifact, CliError> {
    positive("fig_sumrate.power", cfg.power)?;
    if cfg.sigma_n2.is_empty() {
        return Err(CliError::Validation("fig_sumrate.sigma_n2 is empty".into()));
    }
    if let Some(s) = cfg.sigma_n2.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(CliError::Validation(format!("fig_sumrate.sigma_n2 entries must be >= 0, got {s}")));
    }
    let search = cfg.search.to_core(ov.lmax);
    let nf = no_feedback_sum_rate(cfg.power);
    let mut noise = cfg.sigma_n2.clone();
    noise.sort_by(|a, b| b.total_cmp(a));
    let rows: Vec<SumrateRow> = noise
        .iter()
        .map(|&s2| {
            let d = optimize_sum_rate(cfg.power, cfg.users, s2, &search)?;
            info!("sigma_n2={s2:e}: Ltilde={} R*={:.6} ({} evaluations)", d.ltilde, d.achieved_sum_rate, d.evaluations);
            Ok(SumrateRow {
                sigma_n2: s2,
                r_star: d.achieved_sum_rate,
                ltilde_opt: d.ltilde,
                beta_opt: d.beta,
                gamma_opt: d.gamma,
                r_no_feedback: nf,
            })
        })
        .collect::<Result<_, CliError>>()?;
    match ov.format {
        Format::Json => Artifact::json(&rows),
        Format::Csv => {
            let table = Table {
                schema: "fig_sumrate/1",
                header: vec!["sigma_n2", "R_star", "Ltilde_opt", "beta_opt", "gamma_opt", "R_no_feedback"],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            Cell::Float(r.sigma_n2),
                            Cell::Float(r.r_star),
                            Cell::Int(r.ltilde_opt as u64),
                            Cell::Float(r.beta_opt),
                            Cell::Float(r.gamma_opt),
                            Cell::Float(r.r_no_feedback),
                        ]
                    })
                    .collect(),
            };
            let gp = gnuplot_script(
                "Achievable sum-rate with noisy feedback",
                "feedback noise variance",
                "sum-rate [bits/use]",
                (1, 2),
                "set logscale x\n",
                ", '' using 1:6 with lines title 'no feedback'",
            );
            Artifact::csv(&table, Some(gp))
        }
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Full => "full",
        Branch::Partial => "partial",
    }
}

pub fn rate_region_cmd(cfg: &RateRegion, ov: &Overrides) -> Result<Artifact, CliError> {
    let params = TwoUserParams::new(cfg.power, 0.0, cfg.forward_noise1, cfg.forward_noise2, cfg.feedback_noise1)?;
    let points: Vec<RegionPoint<f64>> = rate_region(&params, cfg.points)?;
    match ov.format {
        Format::Json => Artifact::json(&points),
        Format::Csv => {
            let table = Table {
                schema: "rate_region/1",
                header: vec!["delta", "R1pf", "R2pf", "branch"],
                rows: points
                    .iter()
                    .map(|p| {
                        vec![Cell::Float(p.delta), Cell::Float(p.r1), Cell::Float(p.r2), Cell::Text(branch_name(p.branch).into())]
                    })
                    .collect(),
            };
            let gp = gnuplot_script("Rate region with feedback to receiver 1", "R1 [bits/use]", "R2 [bits/use]", (2, 3), "", "");
            Artifact::csv(&table, Some(gp))
        }
    }
}

fn build_code(cfg: &Simulate) -> Result<(LinearFeedbackCode, ChannelParams), CliError> {
    match cfg.scheme {
        Scheme::Symmetric => {
            let s = &cfg.symmetric;
            let p = SymmetricParams::new(s.users, s.ltilde, s.beta, s.gamma, s.power, s.feedback_noise)?;
            let gains = match s.gains {
                GainRule::Optimal => optimal_gains(&p)?,
                GainRule::NoiselessLimit => asymptotic_gains(&p, AsymptoticForm::NoiselessLimit),
                GainRule::LargeBlocklength => asymptotic_gains(&p, AsymptoticForm::LargeBlocklength),
            };
            Ok((to_general_code(&p, &gains)?, p.channel()?))
        }
        Scheme::Sk => {
            let s = &cfg.sk;
            positive("simulate.sk.forward_noise", s.forward_noise)?;
            let code = awgnbc_core::single_feedback::build_sk_code(
                s.blocklength,
                s.power,
                s.forward_noise + s.feedback_noise,
                s.delta_is,
            )?;
            Ok((code.to_linear_code()?, code.channel(s.forward_noise, s.feedback_noise)?))
        }
        Scheme::General => {
            let g = &cfg.general;
            let filters = g
                .filters
                .iter()
                .map(|rows| Matrix::from_rows(rows))
                .collect::<Result<Vec<_>, _>>()?;
            let code = LinearFeedbackCode::new(g.gains.clone(), filters, g.combiners.clone(), g.msg_power.clone())?;
            let fb = g
                .feedback_noise
                .iter()
                .map(|&v| if v < 0.0 { FeedbackNoise::Absent } else { FeedbackNoise::Finite(v) })
                .collect();
            Ok((code, ChannelParams::new(g.power, g.forward_noise.clone(), fb)?))
        }
    }
}

/// Runs the simulation and returns the report with the 3-sigma verdict.
pub fn simulate_cmd(cfg: &Simulate, ov: &Overrides) -> Result<(Artifact, Option<CliError>), CliError> {
    let (code, params) = build_code(cfg)?;
    let trials = ov.trials.unwrap_or(cfg.trials);
    let mut sim = SimConfig::new(trials, ov.seed, code.users());
    sim.pam_order = vec![cfg.pam_order; code.users()];
    sim.hard_decision = cfg.hard_decision;
    let report: SimReport = simulate(&code, &params, &sim)?;
    let mut failures = Vec::new();
    if !report.snr_consistent(3.0) {
        failures.push("empirical SNR outside 3 standard errors");
    }
    if !report.power_ok(3.0) {
        failures.push("average power above budget by more than 3 standard errors");
    }
    if cfg.scheme == Scheme::Symmetric && !report.nulling_ok() {
        failures.push("cross-user leakage above 4/sqrt(trials)");
    }
    for (u, e) in report.empirical_snr.iter().enumerate() {
        info!("receiver {u}: snr {:.6} +- {:.6}, analytic {:.6}", e.value, e.stderr, report.analytic_snr[u]);
    }
    let verdict = (!failures.is_empty()).then(|| CliError::Check(failures.join("; ")));
    let art = match ov.format {
        Format::Json => Artifact::json(&report)?,
        Format::Csv => {
            let table = Table {
                schema: "simulate/1",
                header: vec!["receiver", "snr", "snr_stderr", "snr_analytic", "kurtosis", "leakage"],
                rows: (0..code.users())
                    .map(|u| {
                        vec![
                            Cell::Int(u as u64),
                            Cell::Float(report.empirical_snr[u].value),
                            Cell::Float(report.empirical_snr[u].stderr),
                            Cell::Float(report.analytic_snr[u]),
                            Cell::Float(report.error_kurtosis[u].value),
                            Cell::Float(report.empirical_leakage[u]),
                        ]
                    })
                    .collect(),
            };
            Artifact::csv(&table, None)?
        }
    };
    Ok((art, verdict))
}

pub fn optimize_cmd(cfg: &Optimize, ov: &Overrides) -> Result<Artifact, CliError> {
    positive("optimize.power", cfg.power)?;
    let mut d: DesignPoint = optimize_sum_rate(cfg.power, cfg.users, cfg.sigma_n2, &cfg.search.to_core(ov.lmax))?;
    if ov.verbose {
        for t in &d.trace {
            eprintln!("trace Ltilde={} R={:.12} beta={:.12} gamma={:.12}", t.ltilde, t.sum_rate, t.beta, t.gamma);
        }
    } else {
        d.trace.clear();
    }
    match ov.format {
        Format::Json => Artifact::json(&d),
        Format::Csv => {
            let table = Table {
                schema: "optimize/1",
                header: vec!["sigma_n2", "R_star", "Ltilde_opt", "beta_opt", "gamma_opt", "snr", "evaluations"],
                rows: vec![vec![
                    Cell::Float(d.sigma_n2),
                    Cell::Float(d.achieved_sum_rate),
                    Cell::Int(d.ltilde as u64),
                    Cell::Float(d.beta),
                    Cell::Float(d.gamma),
                    Cell::Float(d.snr),
                    Cell::Int(d.evaluations as u64),
                ]],
            };
            Artifact::csv(&table, None)
        }
    }
}
