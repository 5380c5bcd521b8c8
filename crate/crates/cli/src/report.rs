//! CSV and JSON serialization of experiment results, sweeps and audits.
//!
//! Every number is rounded to 12 significant digits before it is written, and
//! written in shortest round-trip form, so re-parsing gives back exactly the
//! rounded value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use zeno_eraser::{AuditReport, Counts, Detector, ExperimentResult, VisibilityGrid};

pub const SWEEP_HEADER: &str = "M,N,X,Y,p_d1,p_d2,p_loss,visibility";

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> String {
    format!("{:?}", sig12(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCounts {
    #[serde(rename = "D1")]
    pub d1: u64,
    #[serde(rename = "D2")]
    pub d2: u64,
    #[serde(rename = "D3")]
    pub d3: u64,
    #[serde(rename = "D_B")]
    pub db: u64,
}

impl From<&Counts> for DetectorCounts {
    fn from(counts: &Counts) -> Self {
        let get = |d| counts.get(&d).copied().unwrap_or(0);
        Self {
            d1: get(Detector::D1),
            d2: get(Detector::D2),
            d3: get(Detector::D3),
            db: get(Detector::Db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    #[serde(rename = "M")]
    pub outer: Option<u32>,
    #[serde(rename = "N")]
    pub inner: Option<u32>,
    pub p_d1: f64,
    pub p_d2: f64,
    pub p_d3: f64,
    pub p_db: f64,
    pub visibility: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counts: Option<DetectorCounts>,
}

impl RunRecord {
    pub fn new(result: &ExperimentResult) -> Self {
        Self {
            scenario: result.scenario.name().to_owned(),
            outer: result.params.map(|p| p.outer()),
            inner: result.params.map(|p| p.inner()),
            p_d1: sig12(result.p_d1),
            p_d2: sig12(result.p_d2),
            p_d3: sig12(result.p_d3),
            p_db: sig12(result.p_db),
            visibility: sig12(result.visibility),
            shots: None,
            seed: None,
            counts: None,
        }
    }

    pub fn with_counts(mut self, counts: &Counts, seed: u64) -> Self {
        self.shots = Some(counts.values().sum());
        self.seed = Some(seed);
        self.counts = Some(counts.into());
        self
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut header = String::from("scenario,M,N,p_d1,p_d2,p_d3,p_db,visibility");
        let mut row = format!(
            "{},{},{},{},{},{},{},{}",
            self.scenario,
            opt(self.outer),
            opt(self.inner),
            num(self.p_d1),
            num(self.p_d2),
            num(self.p_d3),
            num(self.p_db),
            num(self.visibility)
        );
        if let (Some(shots), Some(seed), Some(c)) = (self.shots, self.seed, &self.counts) {
            header.push_str(",shots,seed,count_d1,count_d2,count_d3,count_db");
            let _ = write!(row, ",{shots},{seed},{},{},{},{}", c.d1, c.d2, c.d3, c.db);
        }
        format!("{header}\n{row}\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub scenario: String,
    #[serde(rename = "M")]
    pub outer: u32,
    #[serde(rename = "N")]
    pub inner: u32,
    pub shots: u64,
    pub seed: u64,
    pub probabilities: BTreeMap<String, f64>,
    pub counts: DetectorCounts,
    /// `None` where the z-score is infinite (a certain port missed).
    pub z_scores: BTreeMap<String, Option<f64>>,
    pub flagged: Vec<String>,
    pub tagged_mass_d1: f64,
    pub tagged_mass_d2: f64,
    pub tagged_mass_lost: f64,
    pub detector_mass: BTreeMap<String, f64>,
}

impl AuditRecord {
    pub fn new(report: &AuditReport, seed: u64) -> Self {
        let params = report
            .result
            .params
            .expect("audits always carry parameters");
        let by_detector = |f: &dyn Fn(Detector) -> f64| {
            Detector::ALL
                .iter()
                .map(|&d| (d.name().to_owned(), sig12(f(d))))
                .collect::<BTreeMap<_, _>>()
        };
        Self {
            scenario: report.result.scenario.name().to_owned(),
            outer: params.outer(),
            inner: params.inner(),
            shots: report.counts.values().sum(),
            seed,
            probabilities: by_detector(&|d| report.result.probability(d)),
            counts: (&report.counts).into(),
            z_scores: report
                .z_scores
                .iter()
                .map(|(d, z)| (d.name().to_owned(), z.is_finite().then(|| sig12(*z))))
                .collect(),
            flagged: zeno_eraser::flagged(&report.z_scores, 3.0)
                .into_iter()
                .map(|d| d.name().to_owned())
                .collect(),
            tagged_mass_d1: sig12(report.tagged_mass_d1),
            tagged_mass_d2: sig12(report.tagged_mass_d2),
            tagged_mass_lost: sig12(report.tagged_mass_lost),
            detector_mass: by_detector(&|d| report.detector_mass[&d]),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut header = String::from("scenario,M,N,shots,seed");
        let mut row = format!(
            "{},{},{},{},{}",
            self.scenario, self.outer, self.inner, self.shots, self.seed
        );
        let c = &self.counts;
        for d in Detector::ALL {
            let name = d.name();
            let count = match d {
                Detector::D1 => c.d1,
                Detector::D2 => c.d2,
                Detector::D3 => c.d3,
                Detector::Db => c.db,
            };
            let z = self.z_scores[name]
                .map(num)
                .unwrap_or_else(|| "inf".to_owned());
            let _ = write!(
                header,
                ",p_{0},count_{0},z_{0}",
                name.to_lowercase().replace('_', "")
            );
            let _ = write!(row, ",{},{count},{z}", num(self.probabilities[name]));
        }
        header.push_str(",tagged_mass_d1,tagged_mass_d2,tagged_mass_lost");
        let _ = write!(
            row,
            ",{},{},{}",
            num(self.tagged_mass_d1),
            num(self.tagged_mass_d2),
            num(self.tagged_mass_lost)
        );
        format!("{header}\n{row}\n")
    }
}

/// Sweep grid as CSV: one header line, then one row per (M, N), M-major.
pub fn sweep_csv(grid: &VisibilityGrid) -> String {
    let mut out = String::with_capacity(64 * (grid.rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &grid.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.outer,
            r.inner,
            num(r.x),
            num(r.y),
            num(r.p_d1),
            num(r.p_d2),
            num(r.p_loss),
            num(r.visibility)
        );
    }
    out
}
