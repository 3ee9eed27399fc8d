//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Run with `-- --nocapture` to see the report
//! when everything passes.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fluctua_cli::check::{anti_dissipative_model, asymptotic_gap, loglog_slope};
use fluctua_cli::scenario::CLT_SIZES;
use fluctua_cli::{run_config, ScenarioConfig, Summary};
use fluctua_core::chain::{single_spin_site, spin_double_chain_site};
use fluctua_core::linalg::{expm, max_abs, spin_half, standard_symplectic, RMat, RVec};
use fluctua_core::meanfield::closed_form;
use fluctua_core::{
    emergent_unitary_spin, evolve_fluct_covariance, finite_n_char, fluct_trajectory,
    gaussian_limit, integrate_macro, meanfield_product_gap, oscillator_double_chain,
    partial_transpose, single_spin_model, spin_double_chain, symplectic_spectrum,
    twochain_meanfield_model, GaussianState, ModePartition, ModeSpace, QuasiFreeModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(json: &str) -> Summary {
    run_config(&ScenarioConfig::from_json(json).unwrap())
        .unwrap()
        .summary
}

fn spin_summary(t: f64, gamma: f64) -> Summary {
    run(&format!(
        r#"{{"scenario":"spin-dissipative","params":{{"T":{t},"gamma":{gamma},"squeeze":1}},"grid":{{"t_max":20,"dt":0.05}}}}"#
    ))
}

fn c1_state_invariance() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for model in [
        spin_double_chain(10.0, 1.0, 0.5, 1.0).unwrap().quasifree,
        oscillator_double_chain(5.0, 1.0, 1.0).unwrap().quasifree,
    ] {
        let reference = model.reference();
        let times: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
        for st in model.evolve_on_grid(reference, &times).unwrap() {
            worst = worst.max(max_abs(&(st.covariance() - reference.covariance())));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-10 && secs < 1.0,
        format!("max deviation {worst:e}, {secs:.3} s"),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> QuasiFreeModel {
    let modes = rng.gen_range(1..=4);
    let n = 2 * modes;
    let h = RMat::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    let s = expm(&(standard_symplectic(modes) * (&h + h.transpose())));
    let nus: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.5..2.0)).collect();
    let thermal = RMat::from_fn(n, n, |i, j| if i == j { nus[i / 2] } else { 0.0 });
    let cov = &s * thermal * s.transpose();
    let drift = RMat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let reference =
        GaussianState::new(ModeSpace::standard(modes), (&cov + cov.transpose()) * 0.5).unwrap();
    QuasiFreeModel::new(drift, reference).unwrap()
}

fn c2_semigroup_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut dr, mut dp) = (0.0_f64, 0.0_f64);
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let r = RVec::from_fn(m.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let (t, s) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let a = m.apply_to_weyl(&r, t).unwrap();
        let b = m.apply_to_weyl(&a.r_t, s).unwrap();
        let direct = m.apply_to_weyl(&r, t + s).unwrap();
        dr = dr.max((b.r_t - &direct.r_t).amax());
        dp = dp.max((a.log_prefactor + b.log_prefactor - direct.log_prefactor).abs());
    }
    ensure(
        dr < 1e-9 && dp < 1e-9,
        format!("max |dr| {dr:e}, max |d log prefactor| {dp:e}"),
    )
}

fn c3_complete_positivity() -> Verdict {
    let spin = spin_double_chain(10.0, 1.0, 0.5, 1.0).unwrap().quasifree;
    let osc = oscillator_double_chain(5.0, 1.0, 1.0).unwrap().quasifree;
    let mut worst = f64::INFINITY;
    for k in 1..=50 {
        let t = 0.1 * k as f64;
        worst = worst
            .min(spin.check_cp(t).unwrap().margin)
            .min(osc.check_cp(t).unwrap().margin);
    }
    let anti = anti_dissipative_model().check_cp(1.0).unwrap();
    ensure(
        worst >= -1e-10 && !anti.pass,
        format!(
            "worst physical margin {worst:e}, anti-dissipative margin {:e}",
            anti.margin
        ),
    )
}

fn c4_spin_generation() -> Verdict {
    let start = Instant::now();
    let maxes: Vec<f64> = [0.0, 0.1, 0.3, 0.5]
        .iter()
        .map(|&g| spin_summary(0.1, g).max_e.unwrap())
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let ordered = maxes[1] <= maxes[2] && maxes[2] <= maxes[3];
    ensure(
        maxes[0] == 0.0 && maxes[3] > 0.0 && ordered && secs < 5.0,
        format!("max E for gamma 0/0.1/0.3/0.5 = {maxes:?}, {secs:.2} s"),
    )
}

fn c5_critical_temperature() -> Verdict {
    let durations: Vec<f64> = [0.1, 0.3, 0.6]
        .iter()
        .map(|&t| spin_summary(t, 0.5).duration.unwrap())
        .collect();
    let nonincreasing = durations.windows(2).all(|w| w[1] <= w[0]);
    let t_star = [0.1, 0.3, 0.6, 1.0, 2.0, 5.0]
        .into_iter()
        .find(|&t| spin_summary(t, 0.5).max_e == Some(0.0));
    ensure(
        nonincreasing && t_star.is_some(),
        format!("durations {durations:?}, first T with E = 0: {t_star:?}"),
    )
}

fn c6_oscillator_asymptote() -> Verdict {
    let out = run_config(
        &ScenarioConfig::from_json(
            r#"{"scenario":"oscillator-dissipative","params":{"T":0.2,"lambda":1,"squeeze":1},"grid":{"t_max":20,"dt":0.05}}"#,
        )
        .unwrap(),
    )
    .unwrap();
    let at = |t: f64| {
        out.table
            .rows
            .iter()
            .find(|r| (r[0] - t).abs() < 1e-9)
            .unwrap()[1]
    };
    let (e10, e20) = (at(10.0), at(20.0));
    ensure(
        e20 > 0.0 && (e20 - e10).abs() < 1e-3,
        format!("E(10) = {e10}, E(20) = {e20}"),
    )
}

fn c7_macro_oracle() -> Verdict {
    let (mut err, mut drift) = (0.0_f64, 0.0_f64);
    for w in [[0.3, -0.2, 0.1], [0.1, 0.1, -0.3], [-0.4, 0.05, 0.2]] {
        let w0 = RVec::from_vec(w.to_vec());
        let traj = integrate_macro(&single_spin_model(), &w0, 5.0, 1e-3).unwrap();
        for (t, w) in traj.times.iter().zip(&traj.omegas) {
            err = err.max((w - closed_form::spin_macro(&w0, *t).unwrap()).amax());
            drift = drift.max((w.norm_squared() - w0.norm_squared()).abs());
        }
    }
    ensure(
        err < 1e-8 && drift < 1e-9,
        format!("max error {err:e}, norm drift {drift:e}"),
    )
}

fn c8_emergent_unitary() -> Verdict {
    let w0 = RVec::from_vec(vec![0.3, -0.2, 0.1]);
    let (mut dg, mut orth) = (0.0_f64, 0.0_f64);
    for k in 0..=20 {
        let t = 0.25 * k as f64;
        let r = emergent_unitary_spin(&w0, t, 1e-3).unwrap();
        dg = dg.max((r.gamma - closed_form::spin_gamma(&w0, t).unwrap()).abs());
        orth = orth.max(max_abs(
            &(r.matrix.transpose() * &r.matrix - RMat::identity(3, 3)),
        ));
    }
    ensure(
        dg < 1e-8 && orth < 1e-10,
        format!("max |d gamma| {dg:e}, max |M^T M - 1| {orth:e}"),
    )
}

fn c9_fluctuation_oracle() -> Verdict {
    let mut worst = 0.0_f64;
    for (a, b, zeta) in [(1.0, 1.0, 1.0), (0.3, 0.5, 0.5)] {
        let setup = twochain_meanfield_model(a, b, zeta).unwrap();
        for s in fluct_trajectory(&setup.model, &setup.omega0, 10.0, 1e-3, 50).unwrap() {
            worst = worst
                .max(max_abs(&(&s.x - closed_form::twochain_x(b, zeta, s.t))))
                .max(max_abs(&(&s.y - closed_form::twochain_y(a, b, zeta, s.t))));
        }
    }
    ensure(worst < 1e-8, format!("max deviation {worst:e}"))
}

fn c10_asymptotic_negativity() -> Verdict {
    let grid = [
        (1.0, 1.0, 1.0),
        (1.0, 0.5, 0.5),
        (1.0, 0.8, 0.3),
        (0.3, 0.5, 0.5),
        (0.5, 0.5, 0.6),
        (2.0, 1.0, 0.4),
        (1.5, 1.2, 0.5),
        (0.8, 0.4, 1.0),
        (3.0, 1.5, 0.25),
        (0.6, 0.7, 0.8),
    ];
    let mut bad = Vec::new();
    let mut worst = 0.0_f64;
    for (a, b, zeta) in grid {
        let (e, closed) = asymptotic_gap(a, b, zeta).unwrap();
        worst = worst.max((e - closed).abs());
        if (e - closed).abs() >= 1e-4 {
            bad.push(format!("({a},{b},{zeta}): E = {e:.6} vs {closed:.6}"));
        }
    }
    let setup = twochain_meanfield_model(1.0, 1.0, 1.0).unwrap();
    let st =
        evolve_fluct_covariance(&setup.initial, &setup.model, &setup.omega0, 50.0, 1e-2).unwrap();
    let part = ModePartition::split(st.space(), 1).unwrap();
    let spectrum = symplectic_spectrum(&partial_transpose(&st, &part).unwrap()).unwrap();
    let target = 1.0 / (2.0 * 2.0_f64.sqrt());
    let spec_ok = spectrum.iter().all(|nu| (nu - target).abs() < 1e-8);
    let (e111, _) = asymptotic_gap(1.0, 1.0, 1.0).unwrap();
    let unit_ok = (e111 - 1.0).abs() < 1e-4;
    ensure(
        bad.is_empty() && spec_ok && unit_ok,
        format!(
            "E(1,1,1) = {e111}, PT spectrum {spectrum:?}, worst gap {worst:.4}, {} of 10 points off: {}",
            bad.len(),
            bad.join("; ")
        ),
    )
}

fn c11_clt() -> Verdict {
    let site = spin_double_chain_site(2.0, 1.0).unwrap();
    let ops: Vec<usize> = (0..8).collect();
    let xs: Vec<f64> = CLT_SIZES.iter().map(|&n| (n as f64).ln()).collect();
    let probes = [
        vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.3, -0.1],
        vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![-0.5, 0.7, 0.2, -0.3, 0.6, -0.6, 0.1, 0.4],
    ];
    let mut slopes = Vec::new();
    for p in probes {
        let r = RVec::from_vec(p);
        let limit = gaussian_limit(&site, &ops, &r).unwrap();
        let ys: Vec<f64> = CLT_SIZES
            .iter()
            .map(|&n| {
                (finite_n_char(&site, &ops, &r, n).unwrap() - limit)
                    .norm()
                    .ln()
            })
            .collect();
        slopes.push(loglog_slope(&xs, &ys));
    }
    let single = single_spin_site(2.0, 1.0).unwrap();
    let [s1, s2, _] = spin_half();
    let ratio = meanfield_product_gap(&single, &s1, &s2, 200).unwrap()
        / meanfield_product_gap(&single, &s1, &s2, 400).unwrap();
    ensure(
        slopes.iter().all(|s| (-1.3..=-0.7).contains(s)) && (1.8..=2.2).contains(&ratio),
        format!("slopes {slopes:?}, gap ratio {ratio}"),
    )
}

fn fluctua(args: &[&str], dir: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_fluctua"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn c12_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("cfg.json"),
        r#"{"scenario":"spin-dissipative","params":{"T":0.1,"gamma":0.5},"grid":{"t_max":10,"dt":0.05},"output":"out.csv"}"#,
    )
    .unwrap();
    fluctua(&["run", "--config", "cfg.json"], p);
    let first = std::fs::read(p.join("out.csv")).unwrap();
    fluctua(&["run", "--config", "cfg.json"], p);
    let second = std::fs::read(p.join("out.csv")).unwrap();
    let sweep = |w: &str| {
        fluctua(
            &[
                "sweep",
                "--config",
                "cfg.json",
                "--axis",
                "gamma=0,0.1,0.3,0.5",
                "--axis",
                "T=0.1,0.3",
                "--workers",
                w,
            ],
            p,
        )
    };
    let (s1, s4) = (sweep("1"), sweep("4"));
    ensure(
        first == second && s1 == s4,
        format!(
            "run csv identical: {}, sweep 1 vs 4 workers identical: {}",
            first == second,
            s1 == s4
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 12] = [
        ("state invariance", c1_state_invariance),
        ("semigroup law", c2_semigroup_law),
        ("complete positivity", c3_complete_positivity),
        ("spin entanglement generation", c4_spin_generation),
        ("critical temperature", c5_critical_temperature),
        (
            "oscillator asymptotic entanglement",
            c6_oscillator_asymptote,
        ),
        ("macro ODE oracle", c7_macro_oracle),
        ("emergent unitary oracle", c8_emergent_unitary),
        ("nonlinear fluctuation oracle", c9_fluctuation_oracle),
        ("asymptotic negativity", c10_asymptotic_negativity),
        ("quantum CLT", c11_clt),
        ("determinism", c12_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = f();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
        if verdict.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
