//! Acceptance gate. Each criterion prints one PASS/FAIL line; the test fails if
//! any criterion fails. Run with `cargo test -p zeno-eraser --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use zeno_eraser::experiment::simulate;
use zeno_eraser::{
    baseline_probabilities, closed_form_blocked, closed_form_open, compare_frequencies, flagged,
    run_cqze, run_scenario, sample_outcomes, sweep_visibility, visibility, CqzeParams, Detector,
    Mode, Scenario, ShotConfig, REFERENCE_SEED,
};

const GRID_OUTER: u32 = 10;
const GRID_INNER: u32 = 50;
const EXACT_TOL: f64 = 1e-12;
const REGRESSION_BAND: f64 = 0.005;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn grid() -> impl Iterator<Item = (u32, u32)> {
    (1..=GRID_OUTER).flat_map(|m| (1..=GRID_INNER).map(move |n| (m, n)))
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed())
}

fn reference_visibility(outer: u32, inner: u32, target: f64, name: &'static str) -> Outcome {
    let (v, elapsed) = timed(|| {
        let (x, y) = closed_form_blocked::<f64>(outer, inner);
        visibility(x, y)
    });
    Outcome {
        name,
        passed: (v - target).abs() <= REGRESSION_BAND && elapsed < Duration::from_millis(1),
        detail: format!("V = {v:.6} (target {target} ± {REGRESSION_BAND}), {elapsed:?}"),
    }
}

fn grid_sweep() -> Outcome {
    let (grid, elapsed) = timed(|| sweep_visibility::<f64>(GRID_OUTER, GRID_INNER).unwrap());
    let count_ok = grid.rows.len() == 500;
    let range_ok = grid
        .rows
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.visibility));
    let growth_ok = (1..=GRID_OUTER)
        .all(|m| grid.get(m, GRID_INNER).unwrap().visibility > grid.get(m, 2).unwrap().visibility);
    let (x, y) = closed_form_blocked::<f64>(2, 500);
    let limit = visibility(x, y);
    Outcome {
        name: "visibility sweep: 500 points, V in [0,1], V(M,50) > V(M,2), V(2,500) > 0.999, < 1 s",
        passed: count_ok
            && range_ok
            && growth_ok
            && limit > 0.999
            && elapsed < Duration::from_secs(1),
        detail: format!(
            "rows {}, range {range_ok}, growth {growth_ok}, V(2,500) = {limit:.6}, {elapsed:?}",
            grid.rows.len()
        ),
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst_blocked = 0.0f64;
    let mut worst_open = 0.0f64;
    for (m, n) in grid() {
        let b = run_cqze(CqzeParams::blocked(m, n).unwrap(), 1.0f64).unwrap();
        let (x, y) = closed_form_blocked::<f64>(m, n);
        worst_blocked = worst_blocked
            .max((b.out_h - x).abs())
            .max((b.out_v - y).abs());

        let o = run_cqze(CqzeParams::open(m, n).unwrap(), 1.0f64).unwrap();
        worst_open = worst_open
            .max((o.out_h - closed_form_open::<f64>(m)).abs())
            .max(o.out_v.abs());
    }
    Outcome {
        name: "oracle equivalence: engine vs closed forms to 1e-12 over the grid",
        passed: worst_blocked < EXACT_TOL && worst_open < EXACT_TOL,
        detail: format!("blocked max {worst_blocked:e}, open max {worst_open:e}"),
    }
}

fn conservation() -> Outcome {
    let mut worst = 0.0f64;
    let mut points = 0;
    for scenario in [Scenario::BaselineNoTag, Scenario::BaselineTagged] {
        let r = run_scenario::<f64>(scenario, None).unwrap();
        worst = worst.max((r.total_probability() - 1.0).abs());
        points += 1;
    }
    for (m, n) in grid() {
        for (scenario, params) in [
            (Scenario::EraseBlocked, CqzeParams::blocked(m, n).unwrap()),
            (Scenario::NoEraseOpen, CqzeParams::open(m, n).unwrap()),
        ] {
            let state = simulate::<f64>(scenario, Some(params)).unwrap();
            let detectors = state.mode_probability(Mode::OutD1)
                + state.mode_probability(Mode::OutD2)
                + state.ledger_total();
            let r = run_scenario::<f64>(scenario, Some(params)).unwrap();
            worst = worst
                .max((detectors - 1.0).abs())
                .max((r.total_probability() - 1.0).abs());
            points += 1;
        }
    }
    Outcome {
        name: "conservation: detectors + ledger = 1 within 1e-12, every scenario and grid point",
        passed: worst < EXACT_TOL,
        detail: format!("{points} runs, max |sum - 1| {worst:e}"),
    }
}

fn baseline_exactness() -> Outcome {
    let plain = baseline_probabilities::<f64>(false);
    let tagged = baseline_probabilities::<f64>(true);
    let open_equal = grid().all(|(m, n)| {
        let r = run_scenario::<f64>(Scenario::NoEraseOpen, Some(CqzeParams::open(m, n).unwrap()))
            .unwrap();
        r.p_d1 == r.p_d2
    });
    Outcome {
        name: "baseline exactness: no-tag p_d2 == 1; tagged and open p_d1 == p_d2",
        passed: plain.p_d2 == 1.0 && tagged.p_d1 == tagged.p_d2 && open_equal,
        detail: format!(
            "no-tag p_d2 = {:?}, tagged ({:?}, {:?}), open equal over grid: {open_equal}",
            plain.p_d2, tagged.p_d1, tagged.p_d2
        ),
    }
}

fn counterfactuality() -> Outcome {
    let mut max_tagged = 0.0f64;
    let mut worst_lost = 0.0f64;
    for (m, n) in grid() {
        let state = simulate::<f64>(
            Scenario::EraseBlocked,
            Some(CqzeParams::blocked(m, n).unwrap()),
        )
        .unwrap();
        max_tagged = max_tagged
            .max(state.tagged_weight(Mode::OutD1))
            .max(state.tagged_weight(Mode::OutD2));
        worst_lost = worst_lost
            .max((state.tagged_loss(Mode::SinkDb) - state.sink_total(Mode::SinkDb)).abs());
    }
    Outcome {
        name: "counterfactuality (blocked): tagged mass at D1 and D2 exactly 0 over the grid",
        passed: max_tagged == 0.0 && worst_lost < EXACT_TOL,
        detail: format!("max tagged {max_tagged:e}, |tagged lost - p_db| max {worst_lost:e}"),
    }
}

fn monte_carlo() -> Outcome {
    let result = run_scenario::<f64>(
        Scenario::EraseBlocked,
        Some(CqzeParams::blocked(2, 4).unwrap()),
    )
    .unwrap();
    let ((reference_ok, reference_z, exceed, checks), elapsed) = timed(|| {
        let counts = sample_outcomes(
            &result,
            &ShotConfig::new(1_000_000, REFERENCE_SEED).unwrap(),
        )
        .unwrap();
        let z = compare_frequencies(&counts, &result);
        let reference_ok = flagged(&z, 3.0).is_empty();

        let mut exceed = 0usize;
        let mut checks = 0usize;
        for seed in 0..100u64 {
            let counts =
                sample_outcomes(&result, &ShotConfig::new(1_000_000, seed).unwrap()).unwrap();
            let z = compare_frequencies(&counts, &result);
            checks += z.len();
            exceed += flagged(&z, 3.0).len();
        }
        (reference_ok, z, exceed, checks)
    });
    let fraction = exceed as f64 / checks as f64;
    Outcome {
        name: "Monte-Carlo: 1e6 shots |z| < 3 at reference seed; < 2% exceed over 100 seeds; < 5 s",
        passed: reference_ok && fraction < 0.02 && elapsed < Duration::from_secs(5),
        detail: format!(
            "z(D1) {:.3}, z(D2) {:.3}, z(D_B) {:.3}; {exceed}/{checks} exceed; {elapsed:?}",
            reference_z[&Detector::D1],
            reference_z[&Detector::D2],
            reference_z[&Detector::Db]
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let outcomes = [
        reference_visibility(2, 4, 0.89, "regression: V(M=2, N=4) = 0.89 ± 0.005, < 1 ms"),
        reference_visibility(
            2,
            14,
            0.99,
            "regression: V(M=2, N=14) = 0.99 ± 0.005, < 1 ms",
        ),
        grid_sweep(),
        oracle_equivalence(),
        conservation(),
        baseline_exactness(),
        counterfactuality(),
        monte_carlo(),
    ];
    for o in &outcomes {
        println!(
            "[{}] {} -- {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed: Vec<_> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
