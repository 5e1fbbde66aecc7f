//! Acceptance suite: twelve criteria at pinned tolerances, one line each.
//!
//! Runs as a plain binary so every criterion is reported even when an
//! earlier one fails; the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use opflab::cli::{self, Command, RunConfig};
use opflab::irreps::{self, dim_mn, dim_nn, CasimirMap};
use opflab::opf::distinguishability_gap;
use opflab::symgroup::{self, partitions, Partition};
use opflab::tensor;
use opflab::theories::{
    self, QuantumStar, ToyStar, AXIOM_GROUP_ACTION, AXIOM_LOCAL_STRUCTURE, AXIOM_MIXING, AXIOM_PROBABILITY,
};
use opflab::{linalg, Result};

const SEED: u64 = 20_240_611;
const EXACT_TOL: f64 = 1e-10;
const CASIMIR_REL: f64 = 1e-8;
const PROJECTOR_TOL: f64 = 1e-12;
const ASSOC_MIN_GAP: f64 = 1e-3;
const WITNESS_TOL: f64 = 1e-10;
const FROZEN_QUBIT_GAP: f64 = 0.5;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn c1_dimensional_matching() -> Result<Outcome> {
    let start = Instant::now();
    let mut bad = Vec::new();
    for d in 2..=5 {
        for n in 1..=4 {
            if dim_mn(d, n) != dim_nn(d, n) + dim_mn(d, n - 1) {
                bad.push((d, n));
            }
        }
    }
    let (fast, t) = within(start, Duration::from_secs(1));
    Ok(outcome(bad.is_empty() && fast, format!("mismatches {bad:?}, {t}")))
}

fn c2_decomposition() -> Result<Outcome> {
    let start = Instant::now();
    let cases: [((usize, usize), &[usize]); 4] = [
        ((2, 1), &[1, 3]),
        ((2, 2), &[1, 3, 5]),
        ((3, 2), &[1, 8, 27]),
        ((2, 3), &[1, 3, 5, 7]),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut seen = Vec::new();
    for ((d, n), expected) in cases {
        let blocks = irreps::decompose_mn(d, n, SEED)?;
        let mut dims: Vec<usize> = blocks.iter().map(|b| b.dim()).collect();
        dims.sort_unstable();
        ok &= dims == expected;
        let map = CasimirMap::new(d, n);
        for b in &blocks {
            worst = worst.max(irreps::block_casimir(&map, b).1);
        }
        seen.push(dims);
    }
    let (fast, t) = within(start, Duration::from_secs(60));
    Ok(outcome(
        ok && worst < CASIMIR_REL && fast,
        format!("blocks {seen:?}, eigenspace deviation {worst:.1e}, {t}"),
    ))
}

fn c3_kernel() -> Result<Outcome> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (d, n) in [(2, 2), (2, 3), (3, 2)] {
        let lower = irreps::decompose_mn(d, n - 1, SEED)?;
        for row in irreps::kernel_lemma(d, n, SEED)? {
            if row.j == n {
                worst = worst.max(row.image_norm);
                ok &= row.image_norm < EXACT_TOL;
            } else {
                let target = lower.iter().find(|b| b.j == Some(row.j)).map_or(0, |b| b.dim());
                worst = worst.max(row.outside_block);
                ok &= row.outside_block < EXACT_TOL && row.image_rank == target;
            }
        }
    }
    Ok(outcome(ok, format!("max deviation {worst:.1e}")))
}

fn c4_star_axioms() -> Result<Outcome> {
    let trials = 200;
    let q = theories::verify_star_axioms(&QuantumStar, 2, 2, trials, EXACT_TOL, SEED)?;
    let qa = theories::associativity_gap(&QuantumStar, 2, 2, 2, trials, SEED)?;
    let t = theories::verify_star_axioms(&ToyStar, 2, 2, trials, EXACT_TOL, SEED)?;
    let toy_ok = [
        AXIOM_LOCAL_STRUCTURE,
        AXIOM_PROBABILITY,
        AXIOM_MIXING,
        AXIOM_GROUP_ACTION,
    ]
    .iter()
    .all(|name| t.check(name).is_some_and(|c| c.passed));
    let q_worst = q.checks.iter().map(|c| c.max_deviation).fold(qa.gap, f64::max);
    Ok(outcome(
        q.all_passed() && qa.gap < EXACT_TOL && toy_ok,
        format!(
            "quantum worst {q_worst:.1e}, toy axioms {}",
            if toy_ok { "hold" } else { "broken" }
        ),
    ))
}

fn c5_certificate() -> Result<Outcome> {
    let start = Instant::now();
    let r = theories::associativity_gap(&ToyStar, 2, 2, 2, 1000, SEED)?;
    let replay = r.certificate.replay()?;
    let json = serde_json::to_string(&r.certificate).map_err(opflab::Error::from)?;
    let parsed: theories::Certificate = serde_json::from_str(&json).map_err(opflab::Error::from)?;
    let recomputed = parsed.recompute_gap()?;
    let replay_ok = replay.gap == r.gap && (recomputed - r.gap).abs() <= 1e-15;
    let (fast, t) = within(start, Duration::from_secs(60));
    Ok(outcome(
        r.gap > ASSOC_MIN_GAP && replay_ok && fast,
        format!(
            "gap {:.3e} at trial {}, replay exact {replay_ok}, {t}",
            r.gap, r.certificate.trial_index
        ),
    ))
}

fn c6_schur_weyl() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a, b, n) in [(2usize, 2usize, 2usize), (2, 4, 2), (2, 2, 3)] {
        let mut sum = linalg::CMat::zeros((a * b).pow(n as u32), (a * b).pow(n as u32));
        for lambda in partitions(n) {
            sum += symgroup::q_lambda(&lambda, a, b, n)?.matrix();
        }
        let p = tensor::sym_projector(a * b, n);
        worst = worst.max(linalg::max_abs_diff(&sum, p.matrix()));
    }
    let mut kron_ok = true;
    for n in 1..=4 {
        let trivial = Partition::new(vec![n])?;
        for l in partitions(n) {
            for m in partitions(n) {
                let g = symgroup::kronecker_coefficient(&trivial, &l, &m)?;
                kron_ok &= g == u64::from(l == m);
            }
        }
    }
    Ok(outcome(
        worst < PROJECTOR_TOL && kron_ok,
        format!("projector sum deviation {worst:.1e}, Kronecker special case {kron_ok}"),
    ))
}

fn c7_littlewood_richardson() -> Result<Outcome> {
    let start = Instant::now();
    let mut offending = Vec::new();
    for n in [2, 3] {
        let lambda = Partition::new(vec![n - 1, 1])?;
        let dual = symgroup::dual_partition(&lambda, 4)?;
        for (nu, _) in symgroup::lr_decompose(&lambda, &dual, 4)? {
            let p = nu.parts();
            if p.len() == 3 && p[1] == p[2] && p[0] == 2 * p[1] && p[1] >= n {
                offending.push(nu.to_string());
            }
        }
    }
    let (fast, t) = within(start, Duration::from_secs(5));
    Ok(outcome(
        offending.is_empty() && fast,
        format!("forbidden components {offending:?}, {t}"),
    ))
}

fn c8_probes() -> Result<Outcome> {
    let start = Instant::now();
    let licit = irreps::licit_probe(&ToyStar, 2, 4, SEED)?;
    let target = licit.calibration[0].2;
    let tri = irreps::tripartite_probe(&ToyStar, 2, 2, 2, SEED)?;
    let pair = tri.assertions.iter().any(|a| a.expect_present && a.observed_present)
        && tri.assertions.iter().any(|a| !a.expect_present && !a.observed_present);
    let (fast, t) = within(start, Duration::from_secs(300));
    Ok(outcome(
        licit.all_passed() && (target - 20.0).abs() < 1e-8 && tri.all_passed() && pair && fast,
        format!(
            "SU(4) j=2 value {target:.6}, licit {}, tripartite {}, {t}",
            licit.all_passed(),
            tri.all_passed()
        ),
    ))
}

fn c9_distinguishability() -> Result<Outcome> {
    let (e1, e2) = cli::unbiased_ensembles(2)?;
    let one = distinguishability_gap(&e1, &e2, 1)?;
    let two = distinguishability_gap(&e1, &e2, 2)?;
    let separation = two
        .witness_values
        .map(|(p, q)| ((p - q) - two.epsilon * two.gap).abs())
        .unwrap_or(f64::INFINITY);
    Ok(outcome(
        one.gap < EXACT_TOL
            && two.gap > 0.4
            && (two.gap - FROZEN_QUBIT_GAP).abs() < 1e-12
            && two.witness.is_some()
            && separation < WITNESS_TOL,
        format!("gaps {:.1e} / {:.6}, witness error {separation:.1e}", one.gap, two.gap),
    ))
}

fn run_cli(command: Command, trials: Option<usize>) -> Result<cli::Report> {
    let cfg = RunConfig {
        seed: SEED,
        trials,
        ..RunConfig::default()
    };
    cli::execute(&command, &cfg)
}

fn estimate(theory: &str) -> Command {
    Command::Estimate {
        theory: theory.into(),
        d: Some(2),
        n_max: Some(3),
    }
}

fn c10_estimation() -> Result<Outcome> {
    let mut ok = true;
    let mut lines = Vec::new();
    for theory in ["quantum", "toy", "contextual"] {
        let r = run_cli(estimate(theory), None)?;
        ok &= r.passed;
        lines.push(format!("{theory} {}", if r.passed { "ok" } else { "failed" }));
    }
    ok &=
        opflab::estimation::estimability_dimension(1, 2) == 3 && opflab::estimation::estimability_dimension(2, 2) == 8;
    Ok(outcome(ok, lines.join(", ")))
}

fn c11_dynamics() -> Result<Outcome> {
    let r = run_cli(Command::Dynamics { d: Some(2) }, Some(100))?;
    let r3 = run_cli(Command::Dynamics { d: Some(3) }, Some(100))?;
    Ok(outcome(
        r.passed && r3.passed,
        format!("{} + {} records over 100 trials", r.records.len(), r3.records.len()),
    ))
}

fn determinism_commands() -> Vec<(Command, Option<usize>)> {
    vec![
        (
            Command::Dims {
                d: Some("2..3".into()),
                n: Some("1..3".into()),
            },
            None,
        ),
        (
            Command::Verify {
                star: Some("quantum".into()),
                dims: None,
                cert: None,
                replay: None,
            },
            Some(20),
        ),
        (
            Command::Verify {
                star: Some("toy".into()),
                dims: None,
                cert: None,
                replay: None,
            },
            Some(20),
        ),
        (
            Command::Probe {
                kind: "tripartite".into(),
                dims: None,
                star: "toy".into(),
            },
            None,
        ),
        (estimate("quantum"), None),
        (estimate("toy"), None),
        (estimate("contextual"), None),
        (Command::Dynamics { d: Some(2) }, Some(20)),
        (Command::Distinguish { d: Some(2) }, None),
    ]
}

fn c12_determinism() -> Result<Outcome> {
    let mut differing = Vec::new();
    let commands = determinism_commands();
    for (command, trials) in &commands {
        let a = run_cli(command.clone(), *trials)?.to_json()?;
        let b = run_cli(command.clone(), *trials)?.to_json()?;
        if a != b {
            differing.push(command.name());
        }
    }
    Ok(outcome(
        differing.is_empty(),
        format!("{} commands compared, differing {differing:?}", commands.len()),
    ))
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("dimensional matching", c1_dimensional_matching),
        ("irrep decomposition", c2_decomposition),
        ("partial-trace kernel", c3_kernel),
        ("star axioms", c4_star_axioms),
        ("non-associativity certificate", c5_certificate),
        ("Schur-Weyl completeness", c6_schur_weyl),
        ("Littlewood-Richardson instance", c7_littlewood_richardson),
        ("proof probes", c8_probes),
        ("ensemble distinguishability", c9_distinguishability),
        ("state estimation", c10_estimation),
        ("dynamics", c11_dynamics),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
