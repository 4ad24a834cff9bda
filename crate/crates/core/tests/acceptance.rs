//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::f64::consts::LN_2;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use cqrel::channel::{holevo_quantity, save_channel, Channel, Prior};
use cqrel::coding::{codebook_states, error_profile, square_root_measurement, Codebook};
use cqrel::exponent::{concavity_scan, eq_aux, eq_derivative, gallager_e0_scalar, uniform_grid};
use cqrel::inequality::{fuzz, FuzzConfig, InequalityId, SSampling, Witness};
use cqrel::random::{instance_rng, random_channel, random_prior, StateEnsemble};
use cqrel::rate::{capacity_estimate, max_over_prior};
use rand::Rng;
use tempfile::TempDir;

type Verdict = Result<String, String>;

fn check(cond: bool, pass: String, fail: String) -> Verdict {
    if cond {
        Ok(pass)
    } else {
        Err(fail)
    }
}

const PD_ENSEMBLES: [StateEnsemble; 3] = [
    StateEnsemble::HaarMixed,
    StateEnsemble::Diagonal,
    StateEnsemble::NearIdentical,
];

fn theorem_config() -> FuzzConfig {
    FuzzConfig {
        a_range: (1, 4),
        d_range: (2, 6),
        s_range: (0.0, 1.0),
        s_sampling: SSampling::Grid(11),
        instance_count: 10_000,
        seed: 42,
        ensembles: PD_ENSEMBLES.to_vec(),
        tau: 1e-9,
        shrink: true,
    }
}

fn criteria_1_and_2() -> (Verdict, Verdict) {
    let start = Instant::now();
    let summary = match fuzz(InequalityId::Theorem, &theorem_config()) {
        Ok(s) => s,
        Err(e) => return (Err(format!("campaign failed: {e}")), Err(format!("campaign failed: {e}"))),
    };
    let elapsed = start.elapsed();
    let c1 = check(
        summary.violations == 0
            && summary.errors == 0
            && summary.evaluated == 10_000
            && elapsed <= Duration::from_secs(120),
        format!(
            "10000 instances, 0 violations, min gap/scale {:.3e}, {:.1}s",
            summary.min_normalized_gap,
            elapsed.as_secs_f64()
        ),
        format!(
            "violations {}, errors {}, evaluated {}, {:.1}s",
            summary.violations,
            summary.errors,
            summary.evaluated,
            elapsed.as_secs_f64()
        ),
    );
    let residual = summary.max_formulation_residual.unwrap_or(f64::INFINITY);
    let c2 = check(
        residual <= 1e-10 && summary.errors == 0,
        format!("max formulation residual {residual:.3e} over 10000 instances"),
        format!("max formulation residual {residual:.3e}, errors {}", summary.errors),
    );
    (c1, c2)
}

fn criterion_3() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for id in [InequalityId::Jensen, InequalityId::JensenTrace, InequalityId::TracePair] {
        let cfg = FuzzConfig {
            instance_count: 1000,
            seed: 3,
            s_sampling: SSampling::Uniform,
            ..theorem_config()
        };
        match fuzz(id, &cfg) {
            Ok(s) => {
                ok &= s.violations == 0 && s.errors == 0 && s.evaluated == 1000;
                lines.push(format!("{id}: {} viol, min {:.3e}", s.violations, s.min_normalized_gap));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{id}: {e}"));
            }
        }
    }
    check(ok, lines.join("; "), lines.join("; "))
}

fn random_pd_channel(seed: u64, k: u64) -> (Channel, Prior) {
    let mut rng = instance_rng(seed, k);
    let a = rng.random_range(1..=4);
    let d = rng.random_range(2..=6);
    let ch = random_channel(&mut rng, a, d, PD_ENSEMBLES[(k % 3) as usize]);
    let prior = random_prior(&mut rng, a);
    (ch, prior)
}

fn criterion_4() -> Verdict {
    let grid = uniform_grid(0.0, 1.0, 21);
    let (mut zero, mut mono, mut conc, mut deriv) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0.0f64);
    for k in 0..500 {
        let (ch, prior) = random_pd_channel(4, k);
        zero = zero.max(eq_aux(&ch, &prior, 0.0).map_err(|e| e.to_string())?.abs());
        let scan = concavity_scan(&ch, &prior, &grid).map_err(|e| e.to_string())?;
        mono = mono.max(scan.monotone_violation);
        conc = conc.max(scan.max_second_difference / scan.scale());
        if k < 200 {
            let dq = eq_derivative(&ch, &prior, 0.0).map_err(|e| e.to_string())?;
            let chi = holevo_quantity(&ch, &prior).map_err(|e| e.to_string())?;
            deriv = deriv.max((dq - chi).abs());
        }
    }
    let msg = format!(
        "|E_q(0)| {zero:.2e}, worst decrease {mono:.2e}, max 2nd diff/scale {conc:.2e}, |dE_q(0) - chi| {deriv:.2e}"
    );
    check(zero <= 1e-12 && mono <= 1e-8 && conc <= 1e-8 && deriv <= 1e-5, msg.clone(), msg)
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    for k in 0..200 {
        let mut rng = instance_rng(5, k);
        let a = rng.random_range(1..=4);
        let d = rng.random_range(2..=6);
        let ch = random_channel(&mut rng, a, d, StateEnsemble::Diagonal);
        let prior = random_prior(&mut rng, a);
        let rows: Vec<Vec<f64>> = ch.states().iter().map(|s| s.matrix().diagonal()).collect();
        for s in [-0.5, 0.0, 0.25, 0.5, 0.75, 1.0] {
            let q = eq_aux(&ch, &prior, s).map_err(|e| e.to_string())?;
            let c = gallager_e0_scalar(&rows, &prior, s).map_err(|e| e.to_string())?;
            worst = worst.max((q - c).abs());
        }
    }
    let msg = format!("max |E_q - E_0| {worst:.2e} over 200 channels x 6 s");
    check(worst <= 1e-12, msg.clone(), msg)
}

fn orthogonal() -> Channel {
    Channel::diagonal(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
}

fn bsc() -> Channel {
    Channel::diagonal(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
}

fn criterion_6() -> Verdict {
    let ch = orthogonal();
    let u = Prior::uniform(2);
    let mut line = 0.0f64;
    for s in uniform_grid(0.0, 1.0, 21) {
        line = line.max((eq_aux(&ch, &u, s).map_err(|e| e.to_string())? - s * LN_2).abs());
    }
    let p = max_over_prior(&ch, 0.3, 0).map_err(|e| e.to_string())?;
    let (c, _) = capacity_estimate(&ch, 0).map_err(|e| e.to_string())?;
    let er = (p.value - (LN_2 - 0.3)).abs();
    let ss = (p.s_star - 1.0).abs();
    let ce = (c - LN_2).abs();
    let msg = format!("|E_q - s ln2| {line:.2e}, |E_r(0.3) - (ln2 - 0.3)| {er:.2e}, |s* - 1| {ss:.2e}, |C - ln2| {ce:.2e}");
    check(line <= 1e-12 && er <= 1e-6 && ss <= 1e-6 && ce <= 1e-6, msg.clone(), msg)
}

fn criterion_7() -> Verdict {
    let ch = bsc();
    let e1 = eq_aux(&ch, &Prior::uniform(2), 1.0).map_err(|e| e.to_string())?;
    let (c, _) = capacity_estimate(&ch, 0).map_err(|e| e.to_string())?;
    let msg = format!("E_q(1) = {e1:.12}, capacity = {c:.9}");
    check(
        (e1 - 0.2231435513).abs() <= 1e-10 && (c - 0.368064).abs() <= 1e-5,
        msg.clone(),
        msg,
    )
}

fn criterion_8() -> Verdict {
    let (mut min_eig, mut completeness) = (f64::INFINITY, 0.0f64);
    for k in 0..200 {
        let mut rng = instance_rng(8, k);
        let a = rng.random_range(1..=3);
        let d = rng.random_range(2..=3);
        let n = rng.random_range(1..=2);
        let m = rng.random_range(1..=4);
        let ch = random_channel(&mut rng, a, d, StateEnsemble::HaarMixed);
        let prior = random_prior(&mut rng, a);
        let code = Codebook::random(&mut rng, &prior, n, m).map_err(|e| e.to_string())?;
        let states = codebook_states(&ch, &code).map_err(|e| e.to_string())?;
        let povm = square_root_measurement(&states).map_err(|e| e.to_string())?;
        min_eig = min_eig.min(povm.min_eigenvalue().map_err(|e| e.to_string())?);
        completeness = completeness.max(povm.completeness_residual());
    }

    let ortho = orthogonal();
    let code = Codebook::new(2, 2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
    let states = codebook_states(&ortho, &code).map_err(|e| e.to_string())?;
    let ortho_err = error_profile(&states, &square_root_measurement(&states).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .average;

    let mut oracle_gap = 0.0f64;
    for k in 0..50 {
        let mut rng = instance_rng(88, k);
        let ch = random_channel(&mut rng, 3, 3, StateEnsemble::Diagonal);
        let code = Codebook::random(&mut rng, &Prior::uniform(3), 2, 3).map_err(|e| e.to_string())?;
        let states = codebook_states(&ch, &code).map_err(|e| e.to_string())?;
        let prof = error_profile(&states, &square_root_measurement(&states).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let p: Vec<Vec<f64>> = states.iter().map(|s| s.matrix().diagonal()).collect();
        for j in 0..p.len() {
            let oracle = 1.0
                - (0..p[j].len())
                    .map(|x| {
                        let t: f64 = p.iter().map(|pk| pk[x]).sum();
                        if t > 0.0 { p[j][x] * p[j][x] / t } else { 0.0 }
                    })
                    .sum::<f64>();
            oracle_gap = oracle_gap.max((prof.per_word[j] - oracle).abs());
        }
    }
    let msg = format!(
        "min POVM eigenvalue {min_eig:.2e}, completeness {completeness:.2e}, orthogonal P_avg {ortho_err:.2e}, scalar SRM gap {oracle_gap:.2e}"
    );
    check(
        min_eig >= -1e-10 && completeness <= 1e-8 && ortho_err.abs() <= 1e-12 && oracle_gap <= 1e-10,
        msg.clone(),
        msg,
    )
}

fn cqrel(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cqrel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn criterion_9(dir: &TempDir) -> Verdict {
    let w = dir.path().join("witness.json");
    let w = w.to_str().unwrap();
    let o = cqrel(&["fuzz", "--s-min", "-0.9", "--s-max", "0", "--instances", "5000", "--seed", "9", "--witness-out", w]);
    if o.status.code() != Some(3) {
        return Err(format!("fuzz exit code {:?}", o.status.code()));
    }
    let witness = Witness::from_json(&std::fs::read_to_string(w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let replay = cqrel(&["verify", "--witness", w, "--json"]);
    let doc: serde_json::Value = serde_json::from_slice(&replay.stdout).map_err(|e| e.to_string())?;
    let direct = witness.replay().map_err(|e| e.to_string())?;
    let same = doc["lhs"].as_f64().map(f64::to_bits) == Some(direct.lhs.to_bits())
        && doc["rhs"].as_f64().map(f64::to_bits) == Some(direct.rhs.to_bits());
    check(
        same && replay.status.code() == Some(3),
        format!("exit 3, witness at s = {:.6} replays to gap {:.3e}", witness.s, direct.gap),
        format!("replay exit {:?}, bit-identical {same}", replay.status.code()),
    )
}

fn criterion_10(dir: &TempDir) -> Verdict {
    let mut rng = instance_rng(10, 0);
    let ch = random_channel(&mut rng, 3, 4, StateEnsemble::HaarMixed);
    let path = dir.path().join("ch.json");
    std::fs::write(&path, save_channel(&ch, None)).map_err(|e| e.to_string())?;
    let p = path.to_str().unwrap();
    let args = ["verify", "--channel", p, "--instances", "1000", "--seed", "7"];
    let (a, b) = (cqrel(&args), cqrel(&args));
    let json_args = ["verify", "--channel", p, "--instances", "1000", "--seed", "7", "--json"];
    let (c, d) = (cqrel(&json_args), cqrel(&json_args));
    check(
        a.status.code() == Some(0) && a.stdout == b.stdout && c.stdout == d.stdout && !a.stdout.is_empty(),
        format!("text and JSON reports byte-identical ({} and {} bytes), exit 0", a.stdout.len(), c.stdout.len()),
        format!("exit {:?}, text identical {}, json identical {}", a.status.code(), a.stdout == b.stdout, c.stdout == d.stdout),
    )
}

#[test]
fn acceptance_criteria() {
    let dir = TempDir::new().unwrap();
    let (c1, c2) = criteria_1_and_2();
    let results: Vec<(&str, Verdict)> = vec![
        ("theorem suite", c1),
        ("formulation agreement", c2),
        ("proof chain", criterion_3()),
        ("auxiliary function properties", criterion_4()),
        ("classical reduction", criterion_5()),
        ("orthogonal closed form", criterion_6()),
        ("BSC oracle", criterion_7()),
        ("coding simulation", criterion_8()),
        ("open-region exploration", criterion_9(&dir)),
        ("determinism", criterion_10(&dir)),
    ];
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (i, (name, v)) in results.iter().enumerate() {
        let (tag, detail) = match v {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        let _ = writeln!(err, "criterion {:>2} {tag} {name}: {detail}", i + 1);
        if v.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
