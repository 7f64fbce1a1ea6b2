//! Event-log ingestion from CSV and a pragmatic XES subset.
//!
//! CSV logs carry a header naming the case, activity, lifecycle, and
//! timestamp columns (any order). XES logs are read for trace elements,
//! event elements, and the `concept:name`, `lifecycle:transition`, and
//! `time:timestamp` keys; everything else is ignored.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use quick_xml::events::Event as XmlEvent;
use quick_xml::Reader as XmlReader;

use crate::error::{Error, Result};
use crate::event_log::{pair_lifecycles, Event, PairingMode, Phase, RefinedLog, Trace};

/// Source format for [`parse_log`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Xes,
}

/// Ingestion options.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Pairing policy applied to validate lifecycles after grouping.
    pub pairing: PairingMode,
}

impl Default for ParseOptions {
    fn default() -> Self {
        // Silent repair hides data-quality problems; strict by default.
        ParseOptions {
            pairing: PairingMode::Strict,
        }
    }
}

/// Parses a timestamp: RFC 3339 first, then common zoneless layouts
/// interpreted as UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    const LAYOUTS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%d %H.%M",
    ];
    for layout in LAYOUTS {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, layout) {
            return Some(Utc.from_utc_datetime(&naive));
        }
    }
    None
}

struct RawEvent {
    case_id: String,
    label: String,
    phase: Phase,
    timestamp: DateTime<Utc>,
    /// Source position, the tie-break key for equal timestamps.
    order: usize,
}

/// Parses a byte stream into a validated [`RefinedLog`].
///
/// Traces are grouped by case id and sorted by timestamp; equal timestamps
/// keep source order. Every trace must pair cleanly under the configured
/// pairing mode.
pub fn parse_log<R: Read>(source: R, format: LogFormat, options: &ParseOptions) -> Result<RefinedLog> {
    let raw = match format {
        LogFormat::Csv => parse_csv(source)?,
        LogFormat::Xes => parse_xes(source)?,
    };
    assemble(raw, options)
}

fn assemble(raw: Vec<RawEvent>, options: &ParseOptions) -> Result<RefinedLog> {
    let mut by_case: BTreeMap<String, Vec<RawEvent>> = BTreeMap::new();
    for event in raw {
        by_case.entry(event.case_id.clone()).or_default().push(event);
    }
    if by_case.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut traces = Vec::with_capacity(by_case.len());
    for (case_id, mut events) in by_case {
        events.sort_by(|a, b| (a.timestamp, a.order).cmp(&(b.timestamp, b.order)));
        let trace = Trace {
            case_id,
            events: events
                .into_iter()
                .map(|e| Event {
                    label: e.label,
                    phase: e.phase,
                    timestamp: e.timestamp,
                })
                .collect(),
        };
        // Validate pairing up front so malformed lifecycles fail at parse
        // time rather than deep in the pipeline.
        pair_lifecycles(&trace, options.pairing)?;
        traces.push(trace);
    }
    RefinedLog::new(traces)
}

fn parse_csv<R: Read>(source: R) -> Result<Vec<RawEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed {
            location: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Malformed {
                location: "header".into(),
                message: format!("missing column '{name}'"),
            })
    };
    let (ci, ai, li, ti) = (col("case")?, col("activity")?, col("lifecycle")?, col("timestamp")?);

    let mut events = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::Malformed {
            location: format!("line {line}"),
            message: e.to_string(),
        })?;
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Malformed {
                location: format!("line {line}"),
                message: "too few fields".into(),
            })
        };
        let label = field(ai)?.to_string();
        if label.is_empty() {
            return Err(Error::Malformed {
                location: format!("line {line}"),
                message: "empty activity label".into(),
            });
        }
        let lifecycle = field(li)?;
        let phase = Phase::parse(lifecycle).ok_or_else(|| Error::UnknownLifecycle {
            value: lifecycle.to_string(),
            location: format!("line {line}"),
        })?;
        let ts_raw = field(ti)?;
        if ts_raw.is_empty() {
            return Err(Error::MissingTimestamp {
                location: format!("line {line}"),
            });
        }
        let timestamp = parse_timestamp(ts_raw).ok_or_else(|| Error::Malformed {
            location: format!("line {line}"),
            message: format!("unparseable timestamp '{ts_raw}'"),
        })?;
        events.push(RawEvent {
            case_id: field(ci)?.to_string(),
            label,
            phase,
            timestamp,
            order: idx,
        });
    }
    Ok(events)
}

fn parse_xes<R: Read>(source: R) -> Result<Vec<RawEvent>> {
    let mut reader = XmlReader::from_reader(std::io::BufReader::new(source));
    reader.config_mut().trim_text(true);

    let mut events = Vec::new();
    let mut buf = Vec::new();
    let mut in_trace = false;
    let mut in_event = false;
    let mut trace_id: Option<String> = None;
    let mut anon_trace = 0usize;
    let mut label: Option<String> = None;
    let mut phase: Option<Phase> = None;
    let mut timestamp: Option<DateTime<Utc>> = None;
    let mut order = 0usize;

    loop {
        let position = reader.buffer_position();
        match reader.read_event_into(&mut buf) {
            Ok(XmlEvent::Start(ref tag)) | Ok(XmlEvent::Empty(ref tag)) => {
                let name = tag.local_name();
                let name = std::str::from_utf8(name.as_ref()).unwrap_or("");
                match name {
                    "trace" => {
                        in_trace = true;
                        trace_id = None;
                    }
                    "event" if in_trace => {
                        in_event = true;
                        label = None;
                        phase = None;
                        timestamp = None;
                    }
                    "string" | "date" => {
                        let mut key = None;
                        let mut value = None;
                        for attr in tag.attributes().flatten() {
                            let k = std::str::from_utf8(attr.key.local_name().as_ref())
                                .unwrap_or("")
                                .to_string();
                            let v = attr.unescape_value().unwrap_or_default().to_string();
                            match k.as_str() {
                                "key" => key = Some(v),
                                "value" => value = Some(v),
                                _ => {}
                            }
                        }
                        if let (Some(key), Some(value)) = (key, value) {
                            if in_event {
                                match key.as_str() {
                                    "concept:name" => label = Some(value),
                                    "lifecycle:transition" => {
                                        phase = Some(Phase::parse(&value).ok_or_else(|| {
                                            Error::UnknownLifecycle {
                                                value: value.clone(),
                                                location: format!("byte {position}"),
                                            }
                                        })?)
                                    }
                                    "time:timestamp" => {
                                        timestamp =
                                            Some(parse_timestamp(&value).ok_or_else(|| {
                                                Error::Malformed {
                                                    location: format!("byte {position}"),
                                                    message: format!(
                                                        "unparseable timestamp '{value}'"
                                                    ),
                                                }
                                            })?)
                                    }
                                    _ => {}
                                }
                            } else if in_trace && key == "concept:name" {
                                trace_id = Some(value);
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ok(XmlEvent::End(ref tag)) => {
                let name = tag.local_name();
                match std::str::from_utf8(name.as_ref()).unwrap_or("") {
                    "event" if in_event => {
                        in_event = false;
                        let label = label.take().ok_or_else(|| Error::Malformed {
                            location: format!("byte {position}"),
                            message: "event without concept:name".into(),
                        })?;
                        let phase = phase.take().ok_or_else(|| Error::Malformed {
                            location: format!("byte {position}"),
                            message: "event without lifecycle:transition".into(),
                        })?;
                        let timestamp = timestamp.take().ok_or(Error::MissingTimestamp {
                            location: format!("byte {position}"),
                        })?;
                        let case_id = trace_id
                            .clone()
                            .unwrap_or_else(|| format!("trace-{anon_trace}"));
                        events.push(RawEvent {
                            case_id,
                            label,
                            phase,
                            timestamp,
                            order,
                        });
                        order += 1;
                    }
                    "trace" => {
                        in_trace = false;
                        anon_trace += 1;
                    }
                    _ => {}
                }
            }
            Ok(XmlEvent::Eof) => break,
            Ok(_) => {}
            Err(e) => {
                return Err(Error::Malformed {
                    location: format!("byte {position}"),
                    message: e.to_string(),
                })
            }
        }
        buf.clear();
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic_grouping_and_alphabet() {
        // The two-case lifecycle log: case 1 interleaves b and c, case 2 runs
        // b then d; alphabet {a, b, c, d}.
        let csv = "\
case,activity,lifecycle,timestamp
1,a,start,2020-07-08 10.03
2,a,start,2020-07-08 10.42
1,a,end,2020-07-08 10.57
2,a,end,2020-07-08 11.21
1,b,start,2020-07-08 13.29
1,c,start,2020-07-08 14.13
2,b,start,2020-07-08 15.22
2,b,end,2020-07-09 10.24
1,b,end,2020-07-09 10.37
2,d,start,2020-07-09 11.13
2,d,end,2020-07-09 12.28
1,c,end,2020-07-09 12.53
";
        let log = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap();
        assert_eq!(log.traces.len(), 2);
        assert_eq!(
            log.alphabet.iter().map(String::as_str).collect::<Vec<_>>(),
            vec!["a", "b", "c", "d"]
        );
        let t1: Vec<_> = log.traces[0]
            .events
            .iter()
            .map(|e| (e.label.as_str(), e.phase))
            .collect();
        assert_eq!(
            t1,
            vec![
                ("a", Phase::Start),
                ("a", Phase::End),
                ("b", Phase::Start),
                ("c", Phase::Start),
                ("b", Phase::End),
                ("c", Phase::End),
            ]
        );
    }

    #[test]
    fn csv_single_unmatched_start_fails_strict() {
        let csv = "case,activity,lifecycle,timestamp\n1,a,start,2020-01-01T00:00:00\n";
        let err = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("unmatched start"));
    }

    #[test]
    fn equal_timestamps_keep_source_order() {
        let csv = "\
case,activity,lifecycle,timestamp
1,a,start,2020-01-01T00:00:00
1,a,end,2020-01-01T00:01:00
1,b,start,2020-01-01T00:01:00
1,b,end,2020-01-01T00:02:00
";
        let log = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap();
        let seq: Vec<_> = log.traces[0]
            .events
            .iter()
            .map(|e| (e.label.as_str(), e.phase))
            .collect();
        // a's end (earlier in the file) sorts before b's start at the tie.
        assert_eq!(seq[1], ("a", Phase::End));
        assert_eq!(seq[2], ("b", Phase::Start));
    }

    #[test]
    fn unknown_lifecycle_names_the_value() {
        let csv = "case,activity,lifecycle,timestamp\n1,a,begun,2020-01-01T00:00:00\n";
        let err = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("'begun'"));
    }

    #[test]
    fn missing_timestamp_is_reported() {
        let csv = "case,activity,lifecycle,timestamp\n1,a,start,\n";
        let err = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingTimestamp { .. }));
    }

    #[test]
    fn empty_log_is_an_error() {
        let csv = "case,activity,lifecycle,timestamp\n";
        let err = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyLog));
    }

    #[test]
    fn xes_subset_roundtrip() {
        let xes = r#"<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="case-7"/>
    <event>
      <string key="concept:name" value="a"/>
      <string key="lifecycle:transition" value="start"/>
      <date key="time:timestamp" value="2020-01-01T08:00:00.000+00:00"/>
    </event>
    <event>
      <string key="concept:name" value="a"/>
      <string key="lifecycle:transition" value="complete"/>
      <date key="time:timestamp" value="2020-01-01T09:00:00.000+00:00"/>
    </event>
  </trace>
</log>"#;
        let log = parse_log(xes.as_bytes(), LogFormat::Xes, &ParseOptions::default()).unwrap();
        assert_eq!(log.traces.len(), 1);
        assert_eq!(log.traces[0].case_id, "case-7");
        assert_eq!(log.traces[0].events.len(), 2);
        assert_eq!(log.traces[0].events[1].phase, Phase::End);
    }

    #[test]
    fn csv_roundtrip_identity() {
        let csv = "\
case,activity,lifecycle,timestamp
1,a,start,2020-01-01T00:00:00
1,a,end,2020-01-01T00:05:00
1,b,start,2020-01-01T00:06:00
1,b,end,2020-01-01T00:07:00
";
        let log = parse_log(csv.as_bytes(), LogFormat::Csv, &ParseOptions::default()).unwrap();
        let back = parse_log(
            log.to_csv().as_bytes(),
            LogFormat::Csv,
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(log, back);
    }
}
