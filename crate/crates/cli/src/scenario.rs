use std::collections::BTreeMap;

use fluctua_core::chain::spin_double_chain_site;
use fluctua_core::linalg::RVec;
use fluctua_core::meanfield::{covariance_from_sample, integrate_macro_sampled};
use fluctua_core::{
    finite_n_char, fluct_trajectory, gaussian_limit, log_negativity_with_spectrum,
    oscillator_double_chain, reduce_modes, single_spin_model, spin_double_chain, squeeze,
    twochain_meanfield_model, GaussianState, ModePartition, ModelBundle,
};
use serde::Serialize;

use crate::config::{steps, Resolved, Scenario, ScenarioConfig};
use crate::error::CliError;

/// Below this the logarithmic negativity is reported as exactly zero.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;

pub const CLT_SIZES: [u64; 5] = [250, 500, 1000, 2000, 4000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "max_E")]
    pub max_e: Option<f64>,
    #[serde(rename = "t_max_E")]
    pub t_max_e: Option<f64>,
    #[serde(rename = "E_final")]
    pub e_final: Option<f64>,
    /// Last sampled time with `E > 0`.
    #[serde(skip)]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Summary,
    pub warnings: Vec<String>,
}

impl RunOutput {
    /// CSV with a `# key=value` comment line recording every parameter in use.
    pub fn to_csv(&self) -> String {
        let mut head = format!("# scenario={}", self.summary.scenario);
        for (k, v) in &self.summary.params {
            head.push_str(&format!(" {k}={v}"));
        }
        head.push('\n');
        head + &table_csv(&self.table.columns, &self.table.rows)
    }
}

/// Shortest round-trip formatting, header row first.
pub fn table_csv(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn run_config(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    run_resolved(&config.resolve()?)
}

pub fn run_resolved(r: &Resolved) -> Result<RunOutput, CliError> {
    match r.scenario {
        Scenario::SpinDissipative => spin_dissipative(r),
        Scenario::OscillatorDissipative => oscillator_dissipative(r),
        Scenario::MeanfieldMacro => meanfield_macro(r),
        Scenario::MeanfieldFluct => meanfield_fluct(r),
        Scenario::CltCheck => clt_check(r),
    }
}

/// One point of an entanglement curve: `(t, E, nu1, nu2)`.
type Point = [f64; 4];

fn entanglement_point(t: f64, state: &GaussianState) -> Result<Point, CliError> {
    let part = ModePartition::split(state.space(), 1)?;
    let (e, nus) = log_negativity_with_spectrum(state, &part)?;
    let e = if e < NEGATIVITY_FLOOR { 0.0 } else { e };
    Ok([t, e, nus[0], nus[1]])
}

fn entanglement_output(r: &Resolved, points: Vec<Point>, warnings: Vec<String>) -> RunOutput {
    let summary = summarize(r, &points);
    RunOutput {
        table: Table {
            columns: ["t", "E", "nu1", "nu2"].map(String::from).to_vec(),
            rows: points.iter().map(|p| p.to_vec()).collect(),
        },
        summary,
        warnings,
    }
}

fn summarize(r: &Resolved, points: &[Point]) -> Summary {
    let (mut t_max, mut max_e) = (points[0][0], points[0][1]);
    for p in points {
        if p[1] > max_e {
            max_e = p[1];
            t_max = p[0];
        }
    }
    let duration = points
        .iter()
        .filter(|p| p[1] > 0.0)
        .map(|p| p[0])
        .fold(0.0, f64::max);
    Summary {
        scenario: r.scenario.name().into(),
        params: r.params.clone(),
        max_e: Some(max_e),
        t_max_e: Some(t_max),
        e_final: points.last().map(|p| p[1]),
        duration: Some(duration),
    }
}

fn plain_summary(r: &Resolved) -> Summary {
    Summary {
        scenario: r.scenario.name().into(),
        params: r.params.clone(),
        max_e: None,
        t_max_e: None,
        e_final: None,
        duration: None,
    }
}

/// Squeeze the reference state in quadratures, evolve it and follow the
/// negativity between the two kept modes.
fn dissipative_pipeline(
    r: &Resolved,
    bundle: &ModelBundle,
    squeezed: &[(usize, usize)],
    kept: &[usize],
) -> Result<RunOutput, CliError> {
    let modes = bundle.reference_in_modes()?;
    let squeezed = squeeze(&modes, squeezed, r.get("squeeze"))?;
    let initial = bundle
        .mode_map
        .from_modes(&squeezed, bundle.quasifree.space())?;
    let states = bundle.quasifree.evolve_on_grid(&initial, &r.times())?;
    let points = r
        .times()
        .iter()
        .zip(&states)
        .map(|(&t, st)| {
            let reduced = reduce_modes(&bundle.mode_map.to_modes(st)?, kept)?;
            entanglement_point(t, &reduced)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(entanglement_output(r, points, Vec::new()))
}

fn spin_dissipative(r: &Resolved) -> Result<RunOutput, CliError> {
    let bundle = spin_double_chain(r.get("beta"), r.get("epsilon"), r.get("gamma"), r.get("J0"))?;
    // modes 0 and 2 carry the two chains' leading fields
    dissipative_pipeline(r, &bundle, &[(0, 1), (4, 5)], &[0, 1, 4, 5])
}

fn oscillator_dissipative(r: &Resolved) -> Result<RunOutput, CliError> {
    let bundle = oscillator_double_chain(r.get("beta"), r.get("epsilon"), r.get("lambda"))?;
    dissipative_pipeline(r, &bundle, &[(0, 1), (2, 3)], &[0, 1, 2, 3])
}

fn meanfield_macro(r: &Resolved) -> Result<RunOutput, CliError> {
    let g = r.grid.as_ref().expect("validated");
    let omega0 = RVec::from_vec(vec![r.get("omega1"), r.get("omega2"), r.get("omega3")]);
    let (_, h) = steps(g);
    let traj = integrate_macro_sampled(&single_spin_model(), &omega0, g.t_max, h, g.sample_stride)?;
    let rows = traj
        .times
        .iter()
        .zip(&traj.omegas)
        .map(|(t, w)| std::iter::once(*t).chain(w.iter().copied()).collect())
        .collect();
    Ok(RunOutput {
        table: Table {
            columns: ["t", "omega_1", "omega_2", "omega_3"]
                .map(String::from)
                .to_vec(),
            rows,
        },
        summary: plain_summary(r),
        warnings: Vec::new(),
    })
}

fn meanfield_fluct(r: &Resolved) -> Result<RunOutput, CliError> {
    let g = r.grid.as_ref().expect("validated");
    let setup = twochain_meanfield_model(r.get("a"), r.get("b"), r.get("zeta"))?;
    let (_, h) = steps(g);
    let samples = fluct_trajectory(&setup.model, &setup.omega0, g.t_max, h, g.sample_stride)?;
    let points = samples
        .iter()
        .map(|s| {
            entanglement_point(
                s.t,
                &covariance_from_sample(&setup.initial, &setup.model, s)?,
            )
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(entanglement_output(r, points, setup.warnings))
}

/// Fixed probe directions for the CLT comparison on the eight two-chain observables.
pub fn clt_probe() -> RVec {
    RVec::from_vec(vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.3, -0.1])
}

fn clt_check(r: &Resolved) -> Result<RunOutput, CliError> {
    let site = spin_double_chain_site(r.get("beta"), r.get("epsilon"))?;
    let ops: Vec<usize> = (0..8).collect();
    let probe = clt_probe();
    let limit = gaussian_limit(&site, &ops, &probe)?;
    let rows = CLT_SIZES
        .iter()
        .map(|&n| {
            let err = (finite_n_char(&site, &ops, &probe, n)? - limit).norm();
            Ok(vec![n as f64, err])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(RunOutput {
        table: Table {
            columns: vec!["N".into(), "error".into()],
            rows,
        },
        summary: plain_summary(r),
        warnings: Vec::new(),
    })
}
