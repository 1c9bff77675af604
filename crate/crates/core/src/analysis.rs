//! Parameter sweeps, the classical brute-force baseline, the imperfection
//! threshold finder, and the adversarial referee.

use crate::game::{
    parity_complete, round_success, win, Backend, GameError, Player, RoundInput, Triple,
};
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("invalid sweep range [{theta_min}, {theta_max}] with {steps} steps")]
    InvalidSweep {
        theta_min: f64,
        theta_max: f64,
        steps: usize,
    },
    #[error("threshold target {0} must lie in (0, 1)")]
    InvalidTarget(f64),
    #[error("mean success never drops to {target} on [0, pi]: no crossing")]
    NoCrossing { target: f64 },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Absolute θ tolerance of the bisection in [`threshold_theta`].
pub const THRESHOLD_TOL: f64 = 1e-6;
/// Ties within this margin count as joint minima for the referee.
pub const REFEREE_TIE_TOL: f64 = 1e-12;

/// The 3×3 grid of winning probabilities P_s(a, b) at one θ.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable {
    theta: f64,
    backend: Backend,
    entries: [[f64; 3]; 3],
}

impl SuccessTable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// P_s(a, b) with 1-based row/column numbers.
    pub fn entry(&self, a: u8, b: u8) -> f64 {
        self.entries[(a - 1) as usize][(b - 1) as usize]
    }

    /// Entries in row-major (a, b) order.
    pub fn row_major(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                out[a * 3 + b] = self.entries[a][b];
            }
        }
        out
    }

    /// Uniform-referee expected success, (1/9)·ΣP_s(a, b).
    pub fn uniform_mean(&self) -> f64 {
        self.row_major().iter().sum::<f64>() / 9.0
    }

    pub fn min_entry(&self) -> f64 {
        self.row_major()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluate all nine rounds at one θ.
pub fn success_table(theta: f64, backend: Backend) -> Result<SuccessTable, AnalysisError> {
    let mut entries = [[0.0; 3]; 3];
    for round in RoundInput::all() {
        entries[(round.a() - 1) as usize][(round.b() - 1) as usize] =
            round_success(round, theta, backend)?;
    }
    Ok(SuccessTable {
        theta,
        backend,
        entries,
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub theta: f64,
    pub table: SuccessTable,
    pub mean: f64,
}

/// Success tables over a uniform θ grid, in ascending θ order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniform grid over [θ_min, θ_max] inclusive of both endpoints. Grid points
/// are evaluated in parallel; the result order is by ascending θ regardless
/// of schedule.
pub fn sweep(
    theta_min: f64,
    theta_max: f64,
    steps: usize,
    backend: Backend,
) -> Result<SweepResult, AnalysisError> {
    if !(0.0..=PI).contains(&theta_min)
        || !(0.0..=PI).contains(&theta_max)
        || theta_min >= theta_max
        || steps < 2
    {
        return Err(AnalysisError::InvalidSweep {
            theta_min,
            theta_max,
            steps,
        });
    }
    let spacing = (theta_max - theta_min) / (steps - 1) as f64;
    let points: Result<Vec<SweepPoint>, AnalysisError> = (0..steps)
        .into_par_iter()
        .map(|i| {
            // pin the endpoints exactly
            let theta = if i + 1 == steps {
                theta_max
            } else {
                theta_min + i as f64 * spacing
            };
            let table = success_table(theta, backend)?;
            let mean = table.uniform_mean();
            Ok(SweepPoint { theta, table, mean })
        })
        .collect();
    Ok(SweepResult { points: points? })
}

/// A deterministic classical strategy pair: one parity-valid triple per
/// question for each player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalStrategy {
    pub alice: [Triple; 3],
    pub bob: [Triple; 3],
}

impl ClassicalStrategy {
    /// Number of the nine rounds this pair wins.
    pub fn wins(&self) -> u32 {
        let mut count = 0;
        for round in RoundInput::all() {
            let row = self.alice[(round.a() - 1) as usize];
            let col = self.bob[(round.b() - 1) as usize];
            if win(row, col, round) {
                count += 1;
            }
        }
        count
    }
}

/// Outcome of the exhaustive classical search.
#[derive(Debug, Clone)]
pub struct ClassicalOptimum {
    /// Best achievable wins out of nine (exact integer count).
    pub max_wins: u32,
    /// Strategy pairs attaining the maximum.
    pub maximizer_count: u32,
    /// Total deterministic pairs examined (4³ × 4³).
    pub pairs_examined: u32,
    /// First maximizer in enumeration order.
    pub example: ClassicalStrategy,
}

impl ClassicalOptimum {
    pub fn max_probability(&self) -> f64 {
        self.max_wins as f64 / 9.0
    }
}

fn parity_triples(role: Player) -> [Triple; 4] {
    let mut out = [parity_complete([0, 0], role); 4];
    for (i, bits) in [[0u8, 0u8], [0, 1], [1, 0], [1, 1]].into_iter().enumerate() {
        out[i] = parity_complete(bits, role);
    }
    out
}

/// Brute-force the 4096 deterministic strategy pairs with integer win
/// counts. Shared randomness is a convex mixture of deterministic pairs, so
/// it cannot beat the deterministic maximum; this is the classical optimum.
pub fn classical_optimum() -> ClassicalOptimum {
    let alice_triples = parity_triples(Player::Alice);
    let bob_triples = parity_triples(Player::Bob);

    let mut best: Option<ClassicalOptimum> = None;
    let mut examined = 0u32;
    for a1 in alice_triples {
        for a2 in alice_triples {
            for a3 in alice_triples {
                for b1 in bob_triples {
                    for b2 in bob_triples {
                        for b3 in bob_triples {
                            examined += 1;
                            let strategy = ClassicalStrategy {
                                alice: [a1, a2, a3],
                                bob: [b1, b2, b3],
                            };
                            let wins = strategy.wins();
                            match &mut best {
                                Some(opt) if wins == opt.max_wins => opt.maximizer_count += 1,
                                Some(opt) if wins > opt.max_wins => {
                                    opt.max_wins = wins;
                                    opt.maximizer_count = 1;
                                    opt.example = strategy;
                                }
                                Some(_) => {}
                                None => {
                                    best = Some(ClassicalOptimum {
                                        max_wins: wins,
                                        maximizer_count: 1,
                                        pairs_examined: 0,
                                        example: strategy,
                                    })
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut optimum = best.expect("enumeration is non-empty");
    optimum.pairs_examined = examined;
    optimum
}

/// A referee distribution over the nine (a, b) questions.
#[derive(Debug, Clone, PartialEq)]
pub struct RefereeStrategy {
    weights: [[f64; 3]; 3],
}

impl RefereeStrategy {
    pub fn weight(&self, a: u8, b: u8) -> f64 {
        self.weights[(a - 1) as usize][(b - 1) as usize]
    }

    /// Cells carrying nonzero weight, row-major.
    pub fn support(&self) -> Vec<(u8, u8)> {
        let mut out = Vec::new();
        for a in 1..=3u8 {
            for b in 1..=3u8 {
                if self.weight(a, b) > 0.0 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Players' expected success when the referee draws from this
    /// distribution.
    pub fn expected_success(&self, table: &SuccessTable) -> f64 {
        let mut total = 0.0;
        for a in 1..=3u8 {
            for b in 1..=3u8 {
                total += self.weight(a, b) * table.entry(a, b);
            }
        }
        total
    }
}

/// The referee's best response to a known success table: all weight on the
/// minimum cell, split uniformly over ties (within [`REFEREE_TIE_TOL`]).
pub fn referee_best_response(table: &SuccessTable) -> RefereeStrategy {
    let min = table.min_entry();
    let mut weights = [[0.0; 3]; 3];
    let mut ties = 0usize;
    for (row, table_row) in weights.iter_mut().zip(&table.entries) {
        for (w, &p) in row.iter_mut().zip(table_row) {
            if p <= min + REFEREE_TIE_TOL {
                *w = 1.0;
                ties += 1;
            }
        }
    }
    for row in &mut weights {
        for w in row {
            *w /= ties as f64;
        }
    }
    RefereeStrategy { weights }
}

/// Which scalar summary of the success table the threshold search tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMetric {
    /// Uniform-referee mean, (1/9)·ΣP_s.
    UniformMean,
    /// Worst cell, min P_s — the biased-referee value.
    Minimum,
}

impl TableMetric {
    fn of(self, table: &SuccessTable) -> f64 {
        match self {
            TableMetric::UniformMean => table.uniform_mean(),
            TableMetric::Minimum => table.min_entry(),
        }
    }
}

/// Smallest θ in [0, π] where the chosen metric drops to `target`, by
/// bisection to [`THRESHOLD_TOL`]. Monotonicity is assumed on the bisected
/// interval (validated separately on sweep grids, never analytically).
pub fn threshold_theta_with(
    target: f64,
    backend: Backend,
    metric: TableMetric,
) -> Result<f64, AnalysisError> {
    if !(0.0..1.0).contains(&target) || target == 0.0 {
        return Err(AnalysisError::InvalidTarget(target));
    }
    let value_at = |theta: f64| -> Result<f64, AnalysisError> {
        Ok(metric.of(&success_table(theta, backend)?))
    };
    if value_at(0.0)? <= target {
        return Ok(0.0);
    }
    if value_at(PI)? > target {
        return Err(AnalysisError::NoCrossing { target });
    }
    let mut lo = 0.0f64;
    let mut hi = PI;
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if value_at(mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// [`threshold_theta_with`] on the uniform-referee mean.
pub fn threshold_theta(target: f64, backend: Backend) -> Result<f64, AnalysisError> {
    threshold_theta_with(target, backend, TableMetric::UniformMean)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXTENDED: Backend = Backend::Extended {
        include_initial_swap: true,
    };

    /// Frozen by an independent simulation of the full circuits; guards the
    /// whole statevector pipeline end to end.
    const TABLE_AT_0_4: [f64; 9] = [
        0.809737705632,
        0.858417861859,
        0.898229347184,
        0.927250929222,
        0.908127422857,
        0.912679308679,
        0.870844283874,
        0.930323771096,
        0.873522517938,
    ];

    #[test]
    fn table_at_zero_is_all_ones() {
        for backend in [Backend::Reference, EXTENDED] {
            let table = success_table(0.0, backend).unwrap();
            for value in table.row_major() {
                assert!((value - 1.0).abs() < 1e-9);
            }
            assert!((table.uniform_mean() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn table_at_0_4_matches_frozen_values() {
        let table = success_table(0.4, EXTENDED).unwrap();
        for (got, want) in table.row_major().iter().zip(TABLE_AT_0_4) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn corner_one_one_is_strict_minimum_at_sampled_thetas() {
        for theta in [0.2, 0.4, 0.6] {
            let table = success_table(theta, EXTENDED).unwrap();
            let corner = table.entry(1, 1);
            for a in 1..=3u8 {
                for b in 1..=3u8 {
                    if (a, b) != (1, 1) {
                        assert!(
                            corner <= table.entry(a, b) - 1e-6,
                            "theta {theta} ({a},{b})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn entries_stay_inside_unit_interval() {
        for theta in [0.0, 0.3, 1.1, 2.4, PI] {
            let table = success_table(theta, EXTENDED).unwrap();
            for value in table.row_major() {
                assert!(
                    (0.0..=1.0 + 1e-12).contains(&value),
                    "theta {theta}: {value}"
                );
            }
        }
    }

    #[test]
    fn sweep_respects_the_grid_contract() {
        let result = sweep(0.0, PI, 2, EXTENDED).unwrap();
        assert_eq!(result.len(), 2);
        assert!((result.points()[0].mean - 1.0).abs() < 1e-9);
        assert_eq!(result.points()[0].theta, 0.0);
        assert_eq!(result.points()[1].theta, PI);

        let result = sweep(0.1, 0.9, 5, EXTENDED).unwrap();
        assert_eq!(result.len(), 5);
        for pair in result.points().windows(2) {
            assert!(pair[0].theta < pair[1].theta);
        }
    }

    #[test]
    fn sweep_mean_is_nonincreasing_up_to_half_pi() {
        let result = sweep(0.0, std::f64::consts::FRAC_PI_2, 50, EXTENDED).unwrap();
        for pair in result.points().windows(2) {
            assert!(pair[0].mean >= pair[1].mean - 1e-12);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        assert!(sweep(0.5, 0.5, 5, EXTENDED).is_err());
        assert!(sweep(0.9, 0.1, 5, EXTENDED).is_err());
        assert!(sweep(0.0, PI, 1, EXTENDED).is_err());
        assert!(sweep(-0.1, 1.0, 5, EXTENDED).is_err());
        assert!(sweep(0.0, PI + 0.1, 5, EXTENDED).is_err());
    }

    #[test]
    fn sweep_is_schedule_independent() {
        // parallel evaluation with an ordered reduction: two runs must be
        // bit-identical whatever rayon does
        let first = sweep(0.05, 1.3, 12, EXTENDED).unwrap();
        let second = sweep(0.05, 1.3, 12, EXTENDED).unwrap();
        for (a, b) in first.points().iter().zip(second.points()) {
            assert_eq!(a.theta.to_bits(), b.theta.to_bits());
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            for (x, y) in a.table.row_major().iter().zip(b.table.row_major()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn classical_search_finds_eight_of_nine() {
        let optimum = classical_optimum();
        assert_eq!(optimum.max_wins, 8);
        assert_eq!(optimum.pairs_examined, 4096);
        assert!(optimum.max_wins < 9, "no pair may win all nine");
        // value frozen from the enumeration itself
        assert_eq!(optimum.maximizer_count, 144);
        assert_eq!(optimum.example.wins(), 8);
        // enumeration order is fixed, so the example is reproducible
        let alice: Vec<[u8; 3]> = optimum.example.alice.iter().map(|t| t.bits()).collect();
        let bob: Vec<[u8; 3]> = optimum.example.bob.iter().map(|t| t.bits()).collect();
        assert_eq!(alice, vec![[0, 0, 0], [0, 0, 0], [0, 1, 1]]);
        assert_eq!(bob, vec![[0, 0, 1], [0, 0, 1], [0, 0, 1]]);
    }

    #[test]
    fn referee_ties_at_zero_theta_spread_uniformly() {
        let table = success_table(0.0, EXTENDED).unwrap();
        let response = referee_best_response(&table);
        for a in 1..=3u8 {
            for b in 1..=3u8 {
                assert!((response.weight(a, b) - 1.0 / 9.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn referee_targets_the_worst_round_under_imperfection() {
        let table = success_table(0.5, EXTENDED).unwrap();
        let response = referee_best_response(&table);
        assert_eq!(response.support(), vec![(1, 1)]);
        assert!((response.weight(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn referee_never_helps_the_players() {
        for theta in [0.0, 0.2, 0.5, 1.0] {
            let table = success_table(theta, EXTENDED).unwrap();
            let response = referee_best_response(&table);
            assert!(response.expected_success(&table) <= table.uniform_mean() + 1e-12);
        }
    }

    #[test]
    fn threshold_near_unity_target_is_immediate() {
        let theta = threshold_theta(1.0 - 1e-12, EXTENDED).unwrap();
        assert!(theta <= 2.0 * THRESHOLD_TOL, "got {theta}");
    }

    #[test]
    fn threshold_at_classical_limit_matches_frozen_regression() {
        // frozen from this implementation's first run; reproducibility
        // contract is 1e-6. An independent 1e-9 bisection puts the true
        // crossing at 0.397536340, within the bracket width below this value.
        const FROZEN: f64 = 0.397536963490205;
        let theta = threshold_theta(8.0 / 9.0, EXTENDED).unwrap();
        assert!(theta > 0.0 && theta < PI);
        assert!((theta - FROZEN).abs() <= 1e-6, "got {theta}");
        let again = threshold_theta(8.0 / 9.0, EXTENDED).unwrap();
        assert_eq!(theta.to_bits(), again.to_bits());
    }

    #[test]
    fn min_cell_threshold_is_not_later_than_mean_threshold() {
        let target = 8.0 / 9.0;
        let by_mean = threshold_theta_with(target, EXTENDED, TableMetric::UniformMean).unwrap();
        let by_min = threshold_theta_with(target, EXTENDED, TableMetric::Minimum).unwrap();
        assert!(by_min <= by_mean + THRESHOLD_TOL);
    }

    #[test]
    fn threshold_rejects_bad_targets() {
        assert!(matches!(
            threshold_theta(0.0, EXTENDED),
            Err(AnalysisError::InvalidTarget(_))
        ));
        assert!(matches!(
            threshold_theta(1.0, EXTENDED),
            Err(AnalysisError::InvalidTarget(_))
        ));
    }

    #[test]
    fn unreachable_target_reports_no_crossing() {
        // the mean never falls to 0.01 anywhere on [0, pi]
        assert!(matches!(
            threshold_theta(0.01, EXTENDED),
            Err(AnalysisError::NoCrossing { .. })
        ));
    }
}
