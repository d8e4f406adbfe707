// SPDX-License-Identifier: MIT OR Apache-2.0

//! Live monitoring: count rows in, one JSON line per row out.

use std::collections::VecDeque;
use std::io::{Read, Write};

use anyhow::Context;
use serde::Serialize;

use ksdetect::{CountVector, DetectorConfig, KsDetector, PostAlarm, SpectrumCdf};

use crate::spectrum::winsorize;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorOptions {
    pub window: usize,
    pub threshold: f64,
    pub halt_on_alarm: bool,
    /// Rows wider than the spectrum are folded at this channel.
    pub winsorize_at: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Event {
    t: u64,
    w_stat: f64,
    alarm: bool,
    argmax_start: Option<u64>,
}

#[derive(Debug, Serialize)]
struct RowError<'a> {
    line: u64,
    error: &'a str,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct MonitorSummary {
    pub rows: u64,
    pub events: u64,
    pub malformed: u64,
    pub alarms: u64,
    pub first_alarm: Option<u64>,
}

/// Streams `t,x_1,...,x_D` rows from `input` through a windowed KS detector.
///
/// Malformed rows produce a JSON error line on `errors` and are skipped; a
/// row with the wrong number of channels is fatal. With `halt_on_alarm` the
/// run stops at the first alarm and returns [`CliError::Alarm`].
pub fn monitor<R: Read, W: Write, E: Write>(
    cdf: SpectrumCdf,
    input: R,
    mut out: W,
    mut errors: E,
    opts: MonitorOptions,
) -> Result<MonitorSummary, CliError> {
    let bins = cdf.bin_count();
    let post_alarm = if opts.halt_on_alarm { PostAlarm::Halt } else { PostAlarm::Continue };
    let cfg = DetectorConfig { window: opts.window, threshold: opts.threshold, post_alarm };
    let mut det = KsDetector::new(cdf, cfg).map_err(|e| crate::ConfigError::new(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut times: VecDeque<u64> = VecDeque::with_capacity(opts.window);
    let mut summary = MonitorSummary::default();
    let report = |line: u64, msg: &str, errors: &mut E| -> Result<(), CliError> {
        serde_json::to_writer(&mut *errors, &RowError { line, error: msg }).context("writing error line")?;
        writeln!(errors).context("writing error line")?;
        Ok(())
    };
    for (idx, record) in rdr.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(idx as u64 + 1, |p| p.line());
                summary.malformed += 1;
                report(line, &e.to_string(), &mut errors)?;
                continue;
            }
        };
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        // An optional header row (`t,x_1,...`) is recognised by its first cell.
        if idx == 0
            && record.get(0).is_some_and(|c| c.parse::<u64>().is_err() && c.starts_with(|ch: char| ch.is_alphabetic()))
        {
            continue;
        }
        summary.rows += 1;
        let parsed: Result<(u64, Vec<u64>), String> = (|| {
            let t =
                record[0].parse::<u64>().map_err(|_| format!("time `{}` is not a non-negative integer", &record[0]))?;
            let counts = record
                .iter()
                .skip(1)
                .map(|c| c.parse::<u64>().map_err(|_| format!("count `{c}` is not a non-negative integer")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((t, counts))
        })();
        let (t, mut counts) = match parsed {
            Ok(v) => v,
            Err(msg) => {
                summary.malformed += 1;
                report(line, &msg, &mut errors)?;
                continue;
            }
        };
        if let Some(at) = opts.winsorize_at {
            counts = winsorize(&counts, at);
        }
        if counts.len() != bins {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "line {line}: row has {} channels, spectrum has {bins}",
                counts.len()
            )));
        }
        let outcome = det.step(CountVector::new(counts)).context("detector step")?;
        if times.len() == opts.window {
            times.pop_front();
        }
        times.push_back(t);
        // Internal window starts count steps; report them in stream time.
        let first_internal = outcome.t + 1 - times.len() as u64;
        let argmax_start = outcome.argmax_start.map(|s| times[(s - first_internal) as usize]);
        let event = Event { t, w_stat: outcome.w_stat, alarm: outcome.alarm, argmax_start };
        serde_json::to_writer(&mut out, &event).context("writing event")?;
        writeln!(out).context("writing event")?;
        summary.events += 1;
        if outcome.alarm {
            summary.alarms += 1;
            summary.first_alarm.get_or_insert(t);
            if opts.halt_on_alarm {
                out.flush().context("flushing output")?;
                return Err(CliError::Alarm(t));
            }
        }
    }
    out.flush().context("flushing output")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(halt: bool) -> MonitorOptions {
        MonitorOptions { window: 2, threshold: 1.0, halt_on_alarm: halt, winsorize_at: None }
    }

    fn cdf() -> SpectrumCdf {
        SpectrumCdf::new(vec![0.5, 1.0]).unwrap()
    }

    #[test]
    fn emits_one_line_per_row() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let s = monitor(cdf(), "t,x1,x2\n10,50,50\n11,100,0\n".as_bytes(), &mut out, &mut err, opts(false)).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], r#"{"t":10,"w_stat":0.0,"alarm":false,"argmax_start":10}"#);
        assert_eq!(lines[1], r#"{"t":11,"w_stat":5.0,"alarm":true,"argmax_start":11}"#);
        assert_eq!(s.first_alarm, Some(11));
        assert!(err.is_empty());
    }

    #[test]
    fn malformed_rows_are_reported_and_skipped() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let s = monitor(cdf(), "1,5,5\n2,x,5\n3,5,5\n".as_bytes(), &mut out, &mut err, opts(false)).unwrap();
        assert_eq!(s.events, 2);
        assert_eq!(s.malformed, 1);
        let e = String::from_utf8(err).unwrap();
        assert!(e.starts_with(r#"{"line":2,"error":"count `x`"#), "{e}");
    }

    #[test]
    fn wrong_width_is_fatal() {
        let r = monitor(cdf(), "1,5,5,5\n".as_bytes(), Vec::new(), Vec::new(), opts(false));
        assert!(matches!(r, Err(CliError::Runtime(_))));
    }

    #[test]
    fn halts_on_first_alarm() {
        let mut out = Vec::new();
        let r = monitor(cdf(), "1,100,0\n2,100,0\n".as_bytes(), &mut out, Vec::new(), opts(true));
        assert!(matches!(r, Err(CliError::Alarm(1))));
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    }

    #[test]
    fn empty_input_is_clean() {
        let s = monitor(cdf(), "".as_bytes(), Vec::new(), Vec::new(), opts(false)).unwrap();
        assert_eq!(s, MonitorSummary::default());
    }
}
