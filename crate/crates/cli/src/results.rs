// SPDX-License-Identifier: MIT OR Apache-2.0

//! Benchmark results: one row per (scenario, detector).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub detector: String,
    pub mean_delay: f64,
    pub detection_fraction: f64,
    /// Mean pre-change alarms per replicate.
    pub false_alarms: f64,
    pub threshold: f64,
    pub threshold_method: String,
    pub censored: u64,
    pub censoring: String,
    pub reps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<csv::Result<Vec<ResultRow>>>()?;
        Ok(Self { rows })
    }

    /// Rows are scenarios, columns detectors, cells mean delays; censored runs
    /// are marked with `*`.
    pub fn render(&self) -> String {
        let mut detectors: Vec<&str> = Vec::new();
        let mut scenarios: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !detectors.contains(&r.detector.as_str()) {
                detectors.push(&r.detector);
            }
            if !scenarios.contains(&r.scenario.as_str()) {
                scenarios.push(&r.scenario);
            }
        }
        let cell = |s: &str, d: &str| {
            self.rows
                .iter()
                .find(|r| r.scenario == s && r.detector == d)
                .map_or(String::from("-"), |r| format!("{:.1}{}", r.mean_delay, if r.censored > 0 { "*" } else { "" }))
        };
        let first_w = scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max("scenario".len());
        let widths: Vec<usize> = detectors
            .iter()
            .map(|d| scenarios.iter().map(|s| cell(s, d).len()).max().unwrap_or(0).max(d.len()))
            .collect();
        let mut out = format!("{:<first_w$}", "scenario");
        for (d, w) in detectors.iter().zip(&widths) {
            out.push_str(&format!("  {d:>w$}"));
        }
        out.push('\n');
        for s in &scenarios {
            out.push_str(&format!("{s:<first_w$}"));
            for (d, w) in detectors.iter().zip(&widths) {
                out.push_str(&format!("  {:>w$}", cell(s, d)));
            }
            out.push('\n');
        }
        if self.rows.iter().any(|r| r.censored > 0) {
            out.push_str("* includes censored runs counted at horizon minus changepoint\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(det: &str, delay: f64, censored: u64) -> ResultRow {
        ResultRow {
            scenario: "mix".into(),
            detector: det.into(),
            mean_delay: delay,
            detection_fraction: 1.0 - censored as f64 / 100.0,
            false_alarms: 0.1 + 1.0 / 3.0,
            threshold: 2.399_263_116_374_166_7,
            threshold_method: "monte-carlo".into(),
            censored,
            censoring: "horizon-minus-changepoint".into(),
            reps: 100,
            seed: 7,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let t = ResultsTable { rows: vec![row("KS(L=50)", 4.87, 0), row("PKS", 51.0 / 7.0, 2)] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(ResultsTable::read_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn renders_scenarios_by_detectors() {
        let t = ResultsTable { rows: vec![row("KS(L=50)", 4.87, 0), row("PKS", 51.4, 2)] };
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("scenario"));
        assert!(lines[0].contains("KS(L=50)") && lines[0].contains("PKS"));
        assert!(lines[1].contains("4.9") && lines[1].contains("51.4*"));
    }
}
