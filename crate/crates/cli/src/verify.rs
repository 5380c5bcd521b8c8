//! Self-check run by `zeno-eraser verify`.

use zeno_eraser::experiment::simulate_with;
use zeno_eraser::{
    baseline_probabilities, closed_form_blocked, closed_form_open, compare_frequencies, flagged,
    run_scenario, sample_outcomes, sweep_visibility, visibility, ChannelPolicy, CqzeParams,
    Detector, Engine, Mode, Scenario, ShotConfig, REFERENCE_SEED,
};

const GRID_OUTER: u32 = 10;
const GRID_INNER: u32 = 50;
const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Radians added to every CQZE rotator setting.
    pub angle_skew: f64,
}

fn engine(params: CqzeParams, opts: &VerifyOptions) -> Engine {
    let engine = Engine::new(params);
    if opts.angle_skew == 0.0 {
        engine
    } else {
        engine
            .with_angle_skew(opts.angle_skew)
            .expect("finite skew")
    }
}

fn grid() -> impl Iterator<Item = (u32, u32)> {
    (1..=GRID_OUTER).flat_map(|m| (1..=GRID_INNER).map(move |n| (m, n)))
}

pub fn run_checks(opts: &VerifyOptions) -> Vec<Check> {
    let mut checks = Vec::new();

    let (x, y) = closed_form_blocked::<f64>(2, 4);
    let v = visibility(x, y);
    checks.push(Check::new(
        "visibility M=2 N=4 is 0.89 +/- 0.005",
        (v - 0.89).abs() <= 0.005,
        format!("{v:.6}"),
    ));
    let (x, y) = closed_form_blocked::<f64>(2, 14);
    let v = visibility(x, y);
    checks.push(Check::new(
        "visibility M=2 N=14 is 0.99 +/- 0.005",
        (v - 0.99).abs() <= 0.005,
        format!("{v:.6}"),
    ));

    let mut worst_blocked = 0.0f64;
    let mut worst_open = 0.0f64;
    let mut worst_loss = 0.0f64;
    for (m, n) in grid() {
        let blocked = engine(CqzeParams::blocked(m, n).unwrap(), opts)
            .run(1.0)
            .unwrap();
        let (x, y) = closed_form_blocked::<f64>(m, n);
        worst_blocked = worst_blocked
            .max((blocked.out_h - x).abs())
            .max((blocked.out_v - y).abs());
        worst_loss = worst_loss.max((blocked.ledger_total() - (1.0 - x * x - y * y)).abs());

        let open = engine(CqzeParams::open(m, n).unwrap(), opts)
            .run(1.0)
            .unwrap();
        worst_open = worst_open
            .max((open.out_h - closed_form_open::<f64>(m)).abs())
            .max(open.out_v.abs());
    }
    checks.push(Check::new(
        "blocked engine matches recursion",
        worst_blocked < TOL && worst_loss < TOL,
        format!("max |diff| {worst_blocked:e}, loss {worst_loss:e}"),
    ));
    checks.push(Check::new(
        "open engine matches cos^M(pi/2M)",
        worst_open < TOL,
        format!("max |diff| {worst_open:e}"),
    ));

    let mut worst_closure = 0.0f64;
    let mut max_tagged = 0.0f64;
    for (m, n) in grid() {
        for (scenario, policy) in [
            (Scenario::EraseBlocked, ChannelPolicy::Blocked),
            (Scenario::NoEraseOpen, ChannelPolicy::Open),
        ] {
            let e = engine(CqzeParams::new(m, n, policy).unwrap(), opts);
            let state = simulate_with(scenario, Some(&e)).unwrap();
            worst_closure = worst_closure.max((state.total_probability() - 1.0).abs());
            if policy == ChannelPolicy::Blocked {
                max_tagged = max_tagged
                    .max(state.tagged_weight(Mode::OutD1))
                    .max(state.tagged_weight(Mode::OutD2));
            }
        }
    }
    checks.push(Check::new(
        "probability conservation",
        worst_closure < TOL,
        format!("max |total - 1| {worst_closure:e}"),
    ));
    checks.push(Check::new(
        "no channel-visiting amplitude at D1/D2 (blocked)",
        max_tagged == 0.0,
        format!("max tagged mass {max_tagged:e}"),
    ));

    let plain = baseline_probabilities::<f64>(false);
    let tagged = baseline_probabilities::<f64>(true);
    let open =
        run_scenario::<f64>(Scenario::NoEraseOpen, Some(CqzeParams::open(2, 4).unwrap())).unwrap();
    checks.push(Check::new(
        "baselines exact",
        plain.p_d2 == 1.0 && tagged.p_d1 == tagged.p_d2 && open.p_d1 == open.p_d2,
        format!(
            "no-tag p_d2 {}, tagged {}/{}, open {}/{}",
            plain.p_d2, tagged.p_d1, tagged.p_d2, open.p_d1, open.p_d2
        ),
    ));

    let sweep = sweep_visibility::<f64>(GRID_OUTER, GRID_INNER).unwrap();
    let monotone = (1..=GRID_OUTER).all(|m| {
        sweep.get(m, GRID_INNER).unwrap().visibility > sweep.get(m, 2).unwrap().visibility
    });
    let in_range = sweep
        .rows
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.visibility));
    let (x, y) = closed_form_blocked::<f64>(2, 500);
    let limit = visibility(x, y);
    checks.push(Check::new(
        "visibility grows towards unity",
        monotone && in_range && limit > 0.999,
        format!("V(2,500) = {limit:.6}"),
    ));

    let reference = run_scenario::<f64>(
        Scenario::EraseBlocked,
        Some(CqzeParams::blocked(2, 4).unwrap()),
    )
    .unwrap();
    let counts = sample_outcomes(
        &reference,
        &ShotConfig::new(1_000_000, REFERENCE_SEED).unwrap(),
    )
    .unwrap();
    let z = compare_frequencies(&counts, &reference);
    let bad = flagged(&z, 3.0);
    checks.push(Check::new(
        "shot frequencies within 3 sigma",
        bad.is_empty(),
        format!(
            "z(D1) {:.3}, z(D2) {:.3}, z(D_B) {:.3}",
            z[&Detector::D1],
            z[&Detector::D2],
            z[&Detector::Db]
        ),
    ));

    checks
}
