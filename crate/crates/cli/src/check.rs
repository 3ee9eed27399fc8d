//! Cross-module property and oracle checks, runnable from the command line.

use fluctua_core::linalg::{antisymmetry_defect, max_abs, standard_symplectic, RMat, RVec};
use fluctua_core::meanfield::closed_form;
use fluctua_core::{
    asymptotic_negativity, drift_matrix, emergent_unitary_spin, evolve_fluct_covariance,
    fluct_trajectory, integrate_macro, log_negativity, oscillator_double_chain, single_spin_model,
    spin_double_chain, twochain_meanfield_model, GaussianState, ModePartition, ModeSpace,
    QuasiFreeModel,
};

use crate::error::CliError;
use crate::scenario::{run_config, CLT_SIZES};
use crate::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Oracles,
    All,
}

impl std::str::FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "invariants" => Ok(Suite::Invariants),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            "" => Err(CliError::Usage(
                "empty suite name (expected invariants, oracles or all)".into(),
            )),
            other => Err(CliError::Usage(format!(
                "unknown suite {other:?} (expected invariants, oracles or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Measured deviation; the check passes when it is at most `tol`.
    pub value: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tol,
        }
    }

    pub fn pass(&self) -> bool {
        self.value <= self.tol
    }

    pub fn margin(&self) -> f64 {
        self.tol - self.value
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: value={:e} tol={:e} margin={:e}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tol,
            self.margin()
        )
    }
}

type Outcome = Result<Check, fluctua_core::Error>;
type CheckFn = (&'static str, fn() -> Outcome);

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    eprintln!("{name}: {e}");
    Check::new(name, f64::INFINITY, 0.0)
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    let mut checks: Vec<CheckFn> = Vec::new();
    if matches!(suite, Suite::Invariants | Suite::All) {
        checks.extend([
            (
                "spin reference state is stationary",
                spin_stationary as fn() -> Outcome,
            ),
            (
                "oscillator reference state is stationary",
                oscillator_stationary,
            ),
            ("chain models are completely positive", chain_cp),
            (
                "anti-dissipative model is rejected by the CP test",
                anti_dissipative,
            ),
            ("weyl images compose as a semigroup", weyl_semigroup),
            ("macro flow conserves the norm", macro_norm),
            ("mean-field drift is antisymmetric", drift_antisymmetric),
        ]);
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        checks.extend([
            (
                "two-mode squeezed negativity is 2r/ln2",
                tmsv as fn() -> Outcome,
            ),
            ("macro flow matches the closed form", macro_closed_form),
            ("rotation angle matches the closed form", gamma_closed_form),
            ("emergent rotation is orthogonal", rotation_orthogonal),
            (
                "two-chain X and Y match the closed forms",
                twochain_closed_form,
            ),
            ("asymptotic negativity at a=1 b=1 zeta=1", || {
                asymptotic(1.0, 1.0, 1.0)
            }),
            ("asymptotic negativity at a=0.3 b=0.5 zeta=0.5", || {
                asymptotic(0.3, 0.5, 0.5)
            }),
        ]);
    }
    let mut out: Vec<Check> = checks
        .into_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| failed(name, e)))
        .collect();
    if matches!(suite, Suite::Oracles | Suite::All) {
        out.push(clt_slope().unwrap_or_else(|e| failed("CLT error slope", e)));
    }
    out
}

fn stationary_deviation(model: &QuasiFreeModel) -> Result<f64, fluctua_core::Error> {
    let reference = model.reference();
    let times: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
    Ok(model
        .evolve_on_grid(reference, &times)?
        .iter()
        .map(|st| max_abs(&(st.covariance() - reference.covariance())))
        .fold(0.0, f64::max))
}

fn spin_stationary() -> Outcome {
    let b = spin_double_chain(10.0, 1.0, 0.5, 1.0)?;
    Ok(Check::new(
        "spin reference state is stationary",
        stationary_deviation(&b.quasifree)?,
        1e-10,
    ))
}

fn oscillator_stationary() -> Outcome {
    let b = oscillator_double_chain(5.0, 1.0, 1.0)?;
    Ok(Check::new(
        "oscillator reference state is stationary",
        stationary_deviation(&b.quasifree)?,
        1e-10,
    ))
}

fn chain_cp() -> Outcome {
    let models = [
        spin_double_chain(10.0, 1.0, 0.5, 1.0)?.quasifree,
        oscillator_double_chain(5.0, 1.0, 1.0)?.quasifree,
    ];
    let mut worst = f64::INFINITY;
    for m in &models {
        for k in 1..=50 {
            worst = worst.min(m.check_cp(0.1 * k as f64)?.margin);
        }
    }
    Ok(Check::new(
        "chain models are completely positive",
        -worst,
        1e-10,
    ))
}

/// Exponential growth of a thermal mode: `M = e^t`.
pub fn anti_dissipative_model() -> QuasiFreeModel {
    let reference = GaussianState::new(ModeSpace::standard(1), RMat::identity(2, 2))
        .expect("thermal state is valid");
    QuasiFreeModel::new(RMat::identity(2, 2), reference).expect("finite drift")
}

fn anti_dissipative() -> Outcome {
    let margin = anti_dissipative_model().check_cp(1.0)?.margin;
    // passes when the CP margin is clearly negative
    Ok(Check::new(
        "anti-dissipative model is rejected by the CP test",
        margin,
        -1e-10,
    ))
}

fn weyl_semigroup() -> Outcome {
    let m = spin_double_chain(2.0, 1.0, 0.4, 1.0)?.quasifree;
    let r = RVec::from_fn(8, |i, _| 0.3 - 0.1 * i as f64);
    let mut worst = 0.0_f64;
    for (t, s) in [(0.3, 1.2), (1.0, 1.0), (2.0, 0.1)] {
        let a = m.apply_to_weyl(&r, t)?;
        let b = m.apply_to_weyl(&a.r_t, s)?;
        let direct = m.apply_to_weyl(&r, t + s)?;
        worst = worst
            .max((b.r_t - &direct.r_t).amax())
            .max((a.log_prefactor + b.log_prefactor - direct.log_prefactor).abs());
    }
    Ok(Check::new(
        "weyl images compose as a semigroup",
        worst,
        1e-9,
    ))
}

fn spin_start() -> RVec {
    RVec::from_vec(vec![0.3, -0.2, 0.1])
}

fn macro_norm() -> Outcome {
    let w0 = spin_start();
    let traj = integrate_macro(&single_spin_model(), &w0, 5.0, 1e-3)?;
    let drift = traj
        .omegas
        .iter()
        .map(|w| (w.norm_squared() - w0.norm_squared()).abs())
        .fold(0.0, f64::max);
    Ok(Check::new("macro flow conserves the norm", drift, 1e-9))
}

fn drift_antisymmetric() -> Outcome {
    let setup = twochain_meanfield_model(0.8, 0.6, 0.3)?;
    let w = RVec::from_vec(vec![0.1, -0.3, 0.2, 0.05, 0.4, -0.1]);
    let d = drift_matrix(&setup.model, &w);
    let d3 = drift_matrix(&single_spin_model(), &spin_start());
    Ok(Check::new(
        "mean-field drift is antisymmetric",
        antisymmetry_defect(&d).max(antisymmetry_defect(&d3)),
        1e-14,
    ))
}

fn tmsv() -> Outcome {
    let r: f64 = 0.7;
    let (ch, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    let mut cov = RMat::identity(4, 4) * ch;
    for (i, j, v) in [(0, 2, sh), (1, 3, -sh)] {
        cov[(i, j)] = v;
        cov[(j, i)] = v;
    }
    let state = GaussianState::new(ModeSpace::new(standard_symplectic(2))?, cov)?;
    let e = log_negativity(&state, &ModePartition::split(state.space(), 1)?)?;
    Ok(Check::new(
        "two-mode squeezed negativity is 2r/ln2",
        (e - 2.0 * r / std::f64::consts::LN_2).abs(),
        1e-12,
    ))
}

fn macro_closed_form() -> Outcome {
    let mut worst = 0.0_f64;
    for w0 in [
        spin_start(),
        RVec::from_vec(vec![0.1, 0.1, -0.3]),
        RVec::from_vec(vec![-0.4, 0.0, 0.0]),
    ] {
        let traj = integrate_macro(&single_spin_model(), &w0, 5.0, 1e-3)?;
        for (t, w) in traj.times.iter().zip(&traj.omegas) {
            worst = worst.max((w - closed_form::spin_macro(&w0, *t)?).amax());
        }
    }
    Ok(Check::new(
        "macro flow matches the closed form",
        worst,
        1e-8,
    ))
}

fn gamma_closed_form() -> Outcome {
    let w0 = spin_start();
    let mut worst = 0.0_f64;
    for t in [0.5, 1.0, 2.5, 5.0] {
        let r = emergent_unitary_spin(&w0, t, 1e-3)?;
        worst = worst.max((r.gamma - closed_form::spin_gamma(&w0, t)?).abs());
    }
    Ok(Check::new(
        "rotation angle matches the closed form",
        worst,
        1e-8,
    ))
}

fn rotation_orthogonal() -> Outcome {
    let w0 = spin_start();
    let mut worst = 0.0_f64;
    for k in 0..=10 {
        let m = emergent_unitary_spin(&w0, 0.5 * k as f64, 1e-3)?.matrix;
        worst = worst.max(max_abs(&(m.transpose() * &m - RMat::identity(3, 3))));
    }
    Ok(Check::new("emergent rotation is orthogonal", worst, 1e-10))
}

fn twochain_closed_form() -> Outcome {
    let mut worst = 0.0_f64;
    for (a, b, zeta) in [(1.0, 1.0, 1.0), (0.3, 0.5, 0.5)] {
        let setup = twochain_meanfield_model(a, b, zeta)?;
        for s in fluct_trajectory(&setup.model, &setup.omega0, 10.0, 1e-3, 100)? {
            worst = worst
                .max(max_abs(&(&s.x - closed_form::twochain_x(b, zeta, s.t))))
                .max(max_abs(&(&s.y - closed_form::twochain_y(a, b, zeta, s.t))));
        }
    }
    Ok(Check::new(
        "two-chain X and Y match the closed forms",
        worst,
        1e-8,
    ))
}

/// `|E(Sigma_50) - E_inf|` from the integrated two-chain state.
pub fn asymptotic_gap(a: f64, b: f64, zeta: f64) -> Result<(f64, f64), fluctua_core::Error> {
    let setup = twochain_meanfield_model(a, b, zeta)?;
    let st = evolve_fluct_covariance(&setup.initial, &setup.model, &setup.omega0, 50.0, 1e-2)?;
    let e = log_negativity(&st, &ModePartition::split(st.space(), 1)?)?;
    Ok((e, asymptotic_negativity(a, b, zeta)?))
}

fn asymptotic(a: f64, b: f64, zeta: f64) -> Outcome {
    let (e, closed) = asymptotic_gap(a, b, zeta)?;
    Ok(Check::new(
        &format!("asymptotic negativity at a={a} b={b} zeta={zeta}"),
        (e - closed).abs(),
        1e-4,
    ))
}

fn clt_slope() -> Result<Check, CliError> {
    let config = ScenarioConfig::from_json(r#"{"scenario":"clt-check","params":{"beta":2}}"#)?;
    let out = run_config(&config)?;
    let xs: Vec<f64> = CLT_SIZES.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = out.table.rows.iter().map(|r| r[1].ln()).collect();
    let slope = loglog_slope(&xs, &ys);
    Ok(Check::new(
        "CLT error slope is -1",
        (slope + 1.0).abs(),
        0.3,
    ))
}

/// Least-squares slope of `ys` against `xs`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
