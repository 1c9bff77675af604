//! Subcommand implementations. Every command renders its full output into a
//! string; the caller decides between stdout and a file.

use crate::{BackendArg, CmdError, ReportFormat, TableFormat};
use magicsq::analysis::{
    classical_optimum, referee_best_response, success_table, AnalysisError, SuccessTable,
};
use magicsq::cavity::{coupling_check, phases, spin_photon_gate, CavityError, CavityParams};
use magicsq::game::{
    decomposition_cases, extended_final_state, outcome_bits, outcome_distribution, parity_complete,
    round_success, win, Backend, GameError, Player, RoundInput, Triple, ANCILLA_QUBITS,
};
use magicsq::gates::{
    diagonal_residual, evaluate_product, resolve_convention, Convention, GateKind,
};
use magicsq::ProbabilityTable;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt::Write as _;

const QUBIT_ORDER_NOTE: &str = "big-endian; reference register (alice1, alice2, bob1, bob2); \
extended register (alice1, photon_a, alice2, bob1, photon_b, bob2)";
const CLASSICAL_BOUND: f64 = 8.0 / 9.0;
const SHOT_GENERATOR: &str = "chacha20 (seed_from_u64, 53-bit uniform doubles)";

pub fn to_radians(theta: f64, degrees: bool) -> Result<f64, CmdError> {
    if !theta.is_finite() {
        return Err(CmdError::Usage("theta must be finite".into()));
    }
    Ok(if degrees { theta * PI / 180.0 } else { theta })
}

fn map_game_err(e: GameError) -> CmdError {
    match e {
        GameError::IndexOutOfRange(_) | GameError::ThetaOutOfRange(_) => {
            CmdError::Usage(e.to_string())
        }
        other => CmdError::Failure(other.to_string()),
    }
}

fn map_analysis_err(e: AnalysisError) -> CmdError {
    match e {
        AnalysisError::InvalidSweep { .. } | AnalysisError::InvalidTarget(_) => {
            CmdError::Usage(e.to_string())
        }
        AnalysisError::Game(g) => map_game_err(g),
        other => CmdError::Failure(other.to_string()),
    }
}

fn metadata(schema: &str, backend: Option<BackendArg>) -> Value {
    let mut m = json!({
        "tool": "magicsq",
        "version": env!("CARGO_PKG_VERSION"),
        "qubit_order": QUBIT_ORDER_NOTE,
        "convention": Convention::resolved().to_string(),
        "schema": schema,
    });
    if let Some(b) = backend {
        m["backend"] = json!(b.name());
    }
    m
}

fn pattern_label(pattern: usize) -> (String, String) {
    let (alice, bob) = outcome_bits(pattern);
    (
        format!("{}{}", alice[0], alice[1]),
        format!("{}{}", bob[0], bob[1]),
    )
}

fn completed(pattern: usize) -> (Triple, Triple) {
    let (alice, bob) = outcome_bits(pattern);
    (
        parity_complete(alice, Player::Alice),
        parity_complete(bob, Player::Bob),
    )
}

// ---------------------------------------------------------------- verify --

pub struct VerifyReport {
    pub rendered: String,
    pub first_failure: Option<String>,
}

pub fn run_verify(corrupt_gate_table: bool) -> VerifyReport {
    let mut out = String::new();
    let mut checks: Vec<(&str, bool)> = Vec::new();
    let tol = 1e-9;

    let mut cases = decomposition_cases();
    if corrupt_gate_table {
        // test hook: shift an interior rotation so the product deviates in a
        // way no diagonal residual can absorb
        match cases[0].factors[3].kind {
            GateKind::RotX(angle) => cases[0].factors[3].kind = GateKind::RotX(angle + PI / 2.0),
            ref other => unreachable!("corruption hook expects RotX, found {other:?}"),
        }
        let _ = writeln!(out, "NOTE: gate table intentionally corrupted (test hook)");
    }

    let report = resolve_convention(&cases, tol);
    let convention = report.resolved().unwrap_or(report.best);
    let _ = writeln!(out, "verification report");
    let _ = writeln!(
        out,
        "  convention resolution over 8 candidates at tol {tol:.0e}: selected {convention} \
         ({} of {} decompositions match{})",
        report.evaluation_for(convention).match_count(),
        cases.len(),
        if report.resolved().is_some() {
            ""
        } else {
            "; no candidate matches all"
        },
    );

    let mut decompositions_ok = true;
    for case in &cases {
        let product = evaluate_product(case, convention);
        let outcome = report
            .evaluation_for(convention)
            .outcomes
            .iter()
            .find(|o| o.label == case.label)
            .expect("every case evaluated");
        if outcome.matched {
            let _ = writeln!(
                out,
                "    {}: reproduces target up to global phase",
                case.label
            );
        } else if diagonal_residual(&product, &case.target, tol).is_some() {
            let _ = writeln!(
                out,
                "    {}: deviates by an output-side diagonal phase only \
                 (measurement-invisible; game-level checks below cover it)",
                case.label
            );
        } else {
            let _ = writeln!(out, "    {}: DOES NOT reproduce its target", case.label);
            decompositions_ok = false;
        }
    }
    checks.push(("decomposition verification", decompositions_ok));

    let extended = Backend::Extended {
        include_initial_swap: true,
    };
    let mut max_table_diff: f64 = 0.0;
    let mut max_anc_dev: f64 = 0.0;
    let mut win_structure_ok = true;
    let mut successes = Vec::new();
    for round in RoundInput::all() {
        let reference =
            outcome_distribution(round, 0.0, Backend::Reference).expect("theta 0 is valid");
        let ext = outcome_distribution(round, 0.0, extended).expect("theta 0 is valid");
        max_table_diff = max_table_diff.max(reference.max_abs_diff(&ext));

        let state = extended_final_state(round, 0.0, true).expect("theta 0 is valid");
        let anc = state
            .marginal(&ANCILLA_QUBITS)
            .expect("ancilla indices are valid");
        max_anc_dev = max_anc_dev.max((anc.probability(0b00) - 1.0).abs());

        let mut nonzero = 0;
        for (pattern, p) in reference.iter() {
            if p > 1e-12 {
                nonzero += 1;
                win_structure_ok &= (p - 0.125).abs() < tol;
                let (row, col) = completed(pattern);
                win_structure_ok &= win(row, col, round);
            }
        }
        win_structure_ok &= nonzero == 8;
        successes.push(round_success(round, 0.0, extended).expect("theta 0 is valid"));
    }
    checks.push(("backend equivalence at theta=0", max_table_diff < tol));
    checks.push(("ancilla restoration at theta=0", max_anc_dev < tol));

    let mut parity_ok = true;
    for bits in [[0u8, 0u8], [0, 1], [1, 0], [1, 1]] {
        let row_parity = parity_complete(bits, Player::Alice).sum() % 2;
        let col_parity = parity_complete(bits, Player::Bob).sum() % 2;
        parity_ok &= row_parity == 0 && col_parity == 1;
    }
    checks.push(("parity completion", parity_ok));
    checks.push(("win structure at theta=0", win_structure_ok));

    let mut first_failure = None;
    for (name, ok) in &checks {
        let _ = writeln!(out, "  [{}] {name}", if *ok { "PASS" } else { "FAIL" });
        if !*ok && first_failure.is_none() {
            first_failure = Some(name.to_string());
        }
    }

    let _ = writeln!(out, "  theta=0 success by round (extended backend):");
    for a in 0..3 {
        let row: Vec<String> = (0..3)
            .map(|b| format!("{:.9}", successes[a * 3 + b]))
            .collect();
        let _ = writeln!(out, "    a={}: {}", a + 1, row.join("  "));
    }
    let _ = match &first_failure {
        None => writeln!(out, "verify: all checks passed (convention {convention})"),
        Some(name) => writeln!(out, "verify: FAILED at: {name}"),
    };

    VerifyReport {
        rendered: out,
        first_failure,
    }
}

// ------------------------------------------------------------------ play --

fn sample_histogram(distribution: &ProbabilityTable, shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; distribution.len()];
    let cumulative: Vec<f64> = distribution
        .iter()
        .scan(0.0, |acc, (_, p)| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    for _ in 0..shots {
        // 53-bit mantissa uniform in [0, 1)
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        let index = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(distribution.len() - 1);
        counts[index] += 1;
    }
    counts
}

#[allow(clippy::too_many_arguments)]
pub fn run_play(
    a: u8,
    b: u8,
    theta: f64,
    backend: BackendArg,
    shots: Option<u64>,
    seed: Option<u64>,
    format: ReportFormat,
) -> Result<String, CmdError> {
    if let Some(0) = shots {
        return Err(CmdError::Usage("--shots must be at least 1".into()));
    }
    let round = RoundInput::new(a, b).map_err(map_game_err)?;
    let distribution =
        outcome_distribution(round, theta, backend.to_backend()).map_err(map_game_err)?;
    let success = round_success(round, theta, backend.to_backend()).map_err(map_game_err)?;
    let histogram = shots.map(|n| {
        let seed = seed.expect("clap enforces --seed with --shots");
        (n, seed, sample_histogram(&distribution, n, seed))
    });

    match format {
        ReportFormat::Json => {
            let outcomes: Vec<Value> = distribution
                .iter()
                .map(|(pattern, p)| {
                    let (alice_bits, bob_bits) = pattern_label(pattern);
                    let (row, col) = completed(pattern);
                    json!({
                        "alice_bits": alice_bits,
                        "bob_bits": bob_bits,
                        "probability": p,
                        "alice_triple": row.to_string(),
                        "bob_triple": col.to_string(),
                        "win": win(row, col, round),
                    })
                })
                .collect();
            let mut doc = json!({
                "metadata": metadata("play.schema.json", Some(backend)),
                "round": {"a": a, "b": b},
                "theta": theta,
                "success_probability": success,
                "outcomes": outcomes,
            });
            if let Some((n, seed, counts)) = histogram {
                let rows: Vec<Value> = counts
                    .iter()
                    .enumerate()
                    .map(|(pattern, &count)| {
                        let (alice_bits, bob_bits) = pattern_label(pattern);
                        let (row, col) = completed(pattern);
                        json!({
                            "alice_bits": alice_bits,
                            "bob_bits": bob_bits,
                            "count": count,
                            "frequency": count as f64 / n as f64,
                            "alice_triple": row.to_string(),
                            "bob_triple": col.to_string(),
                        })
                    })
                    .collect();
                doc["shots"] = json!({
                    "count": n,
                    "seed": seed,
                    "generator": SHOT_GENERATOR,
                    "histogram": rows,
                });
            }
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "magic square round: a={a} b={b}");
            let _ = writeln!(
                out,
                "backend: {}  theta: {theta} rad  convention: {}",
                backend.name(),
                Convention::resolved()
            );
            let _ = writeln!(
                out,
                "outcome   probability         alice row  bob column  win"
            );
            for (pattern, p) in distribution.iter() {
                let (alice_bits, bob_bits) = pattern_label(pattern);
                let (row, col) = completed(pattern);
                let _ = writeln!(
                    out,
                    "{alice_bits}|{bob_bits}     {p:<18.12}  {row}        {col}         {}",
                    if win(row, col, round) { "yes" } else { "no" }
                );
            }
            let _ = writeln!(out, "success probability: {success:.12}");
            if let Some((n, seed, counts)) = histogram {
                let _ = writeln!(out, "shots: {n}  seed: {seed}  generator: {SHOT_GENERATOR}");
                let _ = writeln!(out, "outcome   count     frequency  alice row  bob column");
                for (pattern, &count) in counts.iter().enumerate() {
                    let (alice_bits, bob_bits) = pattern_label(pattern);
                    let (row, col) = completed(pattern);
                    let _ = writeln!(
                        out,
                        "{alice_bits}|{bob_bits}     {count:<8}  {:<9.6}  {row}        {col}",
                        count as f64 / n as f64
                    );
                }
            }
            Ok(out)
        }
    }
}

// ----------------------------------------------------------------- sweep --

/// 17 significant digits: round-trips through a decimal parse exactly.
fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn run_sweep(
    theta_min: f64,
    theta_max: f64,
    steps: usize,
    backend: BackendArg,
    format: TableFormat,
) -> Result<String, CmdError> {
    let result = magicsq::analysis::sweep(theta_min, theta_max, steps, backend.to_backend())
        .map_err(map_analysis_err)?;
    match format {
        TableFormat::Csv => {
            let mut out =
                String::from("theta,ps_11,ps_12,ps_13,ps_21,ps_22,ps_23,ps_31,ps_32,ps_33,mean\n");
            for point in result.points() {
                let mut row = vec![csv_float(point.theta)];
                row.extend(point.table.row_major().iter().map(|&v| csv_float(v)));
                row.push(csv_float(point.mean));
                let _ = writeln!(out, "{}", row.join(","));
            }
            Ok(out)
        }
        TableFormat::Json => {
            let points: Vec<Value> = result
                .points()
                .iter()
                .map(|p| {
                    let rows: Vec<Vec<f64>> = (1..=3)
                        .map(|a| (1..=3).map(|b| p.table.entry(a, b)).collect())
                        .collect();
                    json!({"theta": p.theta, "success": rows, "mean": p.mean})
                })
                .collect();
            let doc = json!({
                "metadata": metadata("sweep.schema.json", Some(backend)),
                "theta_min": theta_min,
                "theta_max": theta_max,
                "steps": steps,
                "points": points,
            });
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }
    }
}

// ------------------------------------------------------------- classical --

pub fn run_classical(format: ReportFormat) -> String {
    let optimum = classical_optimum();
    let alice: Vec<String> = optimum
        .example
        .alice
        .iter()
        .map(Triple::to_string)
        .collect();
    let bob: Vec<String> = optimum.example.bob.iter().map(Triple::to_string).collect();
    match format {
        ReportFormat::Json => {
            let doc = json!({
                "metadata": metadata("classical.schema.json", None),
                "pairs_examined": optimum.pairs_examined,
                "max_wins": optimum.max_wins,
                "rounds": 9,
                "max_probability": optimum.max_probability(),
                "max_probability_exact": format!("{}/9", optimum.max_wins),
                "maximizer_count": optimum.maximizer_count,
                "example": {"alice": alice, "bob": bob},
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            )
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "deterministic strategy pairs examined: {}",
                optimum.pairs_examined
            );
            let _ = writeln!(
                out,
                "maximum wins: {} of 9 (probability {}/9 = {:.6})",
                optimum.max_wins,
                optimum.max_wins,
                optimum.max_probability()
            );
            let _ = writeln!(out, "optimal strategy pairs: {}", optimum.maximizer_count);
            let _ = writeln!(out, "example optimal strategy (fixed enumeration order):");
            let _ = writeln!(
                out,
                "  alice rows:    a=1 -> {}  a=2 -> {}  a=3 -> {}",
                alice[0], alice[1], alice[2]
            );
            let _ = writeln!(
                out,
                "  bob columns:   b=1 -> {}  b=2 -> {}  b=3 -> {}",
                bob[0], bob[1], bob[2]
            );
            let _ = writeln!(
                out,
                "shared randomness is a mixture of deterministic pairs, so {}/9 is the classical optimum",
                optimum.max_wins
            );
            out
        }
    }
}

// ------------------------------------------------------------------ bias --

fn render_table(out: &mut String, table: &SuccessTable) {
    let _ = writeln!(out, "         b=1             b=2             b=3");
    for a in 1..=3u8 {
        let row: Vec<String> = (1..=3)
            .map(|b| format!("{:.12}", table.entry(a, b)))
            .collect();
        let _ = writeln!(out, "  a={a}  {}", row.join("  "));
    }
}

pub fn run_bias(theta: f64, backend: BackendArg, format: ReportFormat) -> Result<String, CmdError> {
    let table = success_table(theta, backend.to_backend()).map_err(map_analysis_err)?;
    let response = referee_best_response(&table);
    let uniform = table.uniform_mean();
    let biased = response.expected_success(&table);
    let support = response.support();

    match format {
        ReportFormat::Json => {
            let success: Vec<Vec<f64>> = (1..=3)
                .map(|a| (1..=3).map(|b| table.entry(a, b)).collect())
                .collect();
            let weights: Vec<Vec<f64>> = (1..=3)
                .map(|a| (1..=3).map(|b| response.weight(a, b)).collect())
                .collect();
            let support_json: Vec<Value> = support
                .iter()
                .map(|&(a, b)| json!({"a": a, "b": b}))
                .collect();
            let doc = json!({
                "metadata": metadata("bias.schema.json", Some(backend)),
                "theta": theta,
                "success": success,
                "uniform_success": uniform,
                "best_response": {"weights": weights, "support": support_json},
                "biased_success": biased,
                "classical_bound": CLASSICAL_BOUND,
                "advantage_uniform": uniform > CLASSICAL_BOUND,
                "advantage_biased": biased > CLASSICAL_BOUND,
            });
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "success table at theta={theta} rad (backend {}):",
                backend.name()
            );
            render_table(&mut out, &table);
            let cells: Vec<String> = support.iter().map(|(a, b)| format!("({a},{b})")).collect();
            let _ = writeln!(
                out,
                "referee best response: {} on {}",
                if support.len() == 1 {
                    "point mass"
                } else {
                    "uniform tie"
                },
                cells.join(", ")
            );
            let _ = writeln!(out, "players' success, uniform referee: {uniform:.12}");
            let _ = writeln!(out, "players' success, biased referee:  {biased:.12}");
            let verdict = |p: f64| if p > CLASSICAL_BOUND { "holds" } else { "lost" };
            let _ = writeln!(
                out,
                "quantum advantage vs classical 8/9: uniform referee: {}; biased referee: {}",
                verdict(uniform),
                verdict(biased)
            );
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------- cavity --

fn complex_json(z: num_complex::Complex64) -> Value {
    json!({"re": z.re, "im": z.im, "abs": z.norm(), "arg": z.arg()})
}

#[allow(clippy::too_many_arguments)]
pub fn run_cavity(
    omega_p: f64,
    omega_c: f64,
    omega_0: f64,
    kappa: f64,
    gamma: f64,
    g: f64,
    pi_shifter: bool,
    format: ReportFormat,
) -> Result<String, CmdError> {
    let params = CavityParams::new(omega_p, omega_c, omega_0, kappa, gamma, g)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let map_cavity = |e: CavityError| CmdError::Failure(e.to_string());
    let reflections = phases(&params).map_err(map_cavity)?;
    let gate = spin_photon_gate(&params, pi_shifter).map_err(map_cavity)?;
    let strong = coupling_check(&params);
    let resonant = params.is_resonant();

    match format {
        ReportFormat::Json => {
            let matrix: Vec<Vec<[f64; 2]>> = (0..4)
                .map(|r| {
                    (0..4)
                        .map(|c| {
                            let z = gate.matrix.entry(r, c);
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect();
            let doc = json!({
                "metadata": metadata("cavity.schema.json", None),
                "params": {
                    "omega_p": omega_p, "omega_c": omega_c, "omega_0": omega_0,
                    "kappa": kappa, "gamma": gamma, "g": g,
                },
                "resonant": resonant,
                "model_extrapolation": !resonant,
                "r_coupled": complex_json(reflections.r_coupled),
                "r_uncoupled": complex_json(reflections.r_uncoupled),
                "phi": reflections.phi,
                "phi_0": reflections.phi_0,
                "coupling_check": strong,
                "pi_shifter": pi_shifter,
                "gate": matrix,
                "effective_theta": gate.effective_theta,
            });
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "cavity: omega_p={omega_p} omega_c={omega_c} omega_0={omega_0} \
                 kappa={kappa} gamma={gamma} g={g}"
            );
            if !resonant {
                let _ = writeln!(
                    out,
                    "off-resonance parameters: phase and effective-theta outputs are model extrapolation"
                );
            }
            let fmt_c = |z: num_complex::Complex64| {
                format!(
                    "{:+.12}{:+.12}i  (|.|={:.12}, arg={:.12})",
                    z.re,
                    z.im,
                    z.norm(),
                    z.arg()
                )
            };
            let _ = writeln!(out, "r  (coupled):   {}", fmt_c(reflections.r_coupled));
            let _ = writeln!(out, "r0 (uncoupled): {}", fmt_c(reflections.r_uncoupled));
            let _ = writeln!(
                out,
                "phi = {:.12}  phi_0 = {:.12}",
                reflections.phi, reflections.phi_0
            );
            let _ = writeln!(
                out,
                "coupling check g > 5*sqrt(kappa*gamma): {} (g = {g}, bound = {})",
                if strong { "satisfied" } else { "NOT satisfied" },
                5.0 * (kappa * gamma).sqrt()
            );
            let _ = writeln!(
                out,
                "spin-photon gate (basis R+,R-,L+,L-; pi shifter {}):",
                if pi_shifter { "on" } else { "off" }
            );
            for r in 0..4 {
                let row: Vec<String> = (0..4)
                    .map(|c| {
                        let z = gate.matrix.entry(r, c);
                        format!("{:+.6}{:+.6}i", z.re, z.im)
                    })
                    .collect();
                let _ = writeln!(out, "  {}", row.join("  "));
            }
            let _ = writeln!(out, "effective theta: {:.12}", gate.effective_theta);
            Ok(out)
        }
    }
}
