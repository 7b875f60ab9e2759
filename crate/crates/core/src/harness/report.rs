//! Report files: per-sample score CSV, summary JSON and sweep CSV.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use super::{
    Evaluation, HarnessError, Metric, MetricSelection, MetricVector, SampleFailure, SweepPoint,
};

fn csv_error(e: csv::Error) -> HarnessError {
    HarnessError::Report(e.to_string())
}

fn opt_cell<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes one row per vector. Only selected metrics get a score column and a
/// `<metric>_ms` timing column; missing values are empty cells.
pub fn write_scores_csv(
    out: impl Write,
    vectors: &[MetricVector],
    metrics: &MetricSelection,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_owned(), "language".to_owned()];
    header.extend(metrics.metrics().iter().map(|m| m.name().to_owned()));
    header.push("execution_match".into());
    header.push("parse_errors".into());
    header.extend(metrics.metrics().iter().map(|m| format!("{}_ms", m.name())));
    w.write_record(&header).map_err(csv_error)?;

    for v in vectors {
        let mut row = vec![v.sample_id.clone(), v.language.clone()];
        row.extend(metrics.metrics().iter().map(|&m| opt_cell(v.score(m))));
        row.push(opt_cell(v.execution_match.map(u8::from)));
        row.push(opt_cell(v.parse_errors));
        row.extend(
            metrics
                .metrics()
                .iter()
                .map(|m| opt_cell(v.timings.get(m).map(|d| d.as_secs_f64() * 1e3))),
        );
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "<scores>".into(),
        source,
    })
}

/// Reads a scores CSV back. Unknown columns (timings included) are ignored.
pub fn read_scores_csv(input: impl Read) -> Result<Vec<MetricVector>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let id =
        find("id").ok_or_else(|| HarnessError::Report("scores CSV has no 'id' column".into()))?;
    let language = find("language");
    let metric_cols: Vec<(Metric, usize)> = Metric::ALL
        .iter()
        .filter_map(|&m| Some((m, find(m.name())?)))
        .collect();
    let exec = find("execution_match");
    let parse_errors = find("parse_errors");

    let mut vectors = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = row + 2;
        let cell = |i: Option<usize>| {
            i.and_then(|i| record.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let mut v = MetricVector {
            sample_id: record.get(id).unwrap_or_default().to_owned(),
            language: cell(language).unwrap_or_default().to_owned(),
            ..MetricVector::default()
        };
        for &(metric, col) in &metric_cols {
            let value = cell(Some(col))
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        HarnessError::Report(format!(
                            "line {line}: bad {} value '{s}'",
                            metric.name()
                        ))
                    })
                })
                .transpose()?;
            v.set_score(metric, value);
        }
        v.execution_match = match cell(exec) {
            None => None,
            Some("0") | Some("false") => Some(false),
            Some("1") | Some("true") => Some(true),
            Some(other) => {
                return Err(HarnessError::Report(format!(
                    "line {line}: execution_match must be 0 or 1, got '{other}'"
                )))
            }
        };
        v.parse_errors = cell(parse_errors).map(|s| s == "true" || s == "1");
        vectors.push(v);
    }
    Ok(vectors)
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub count: usize,
    /// Mean over samples where the metric succeeded, rounded to 4 decimals.
    pub means: BTreeMap<Metric, Option<f64>>,
    pub execution_match_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub overall: GroupSummary,
    pub by_language: BTreeMap<String, GroupSummary>,
    pub failures: Vec<SampleFailure>,
}

fn summarize_group<'a>(
    vectors: impl Iterator<Item = &'a MetricVector> + Clone,
    metrics: &MetricSelection,
) -> GroupSummary {
    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            None
        } else {
            Some(round4(values.iter().sum::<f64>() / values.len() as f64))
        }
    };
    GroupSummary {
        count: vectors.clone().count(),
        means: metrics
            .metrics()
            .iter()
            .map(|&m| {
                (
                    m,
                    mean(vectors.clone().filter_map(|v| v.score(m)).collect()),
                )
            })
            .collect(),
        execution_match_rate: mean(
            vectors
                .filter_map(|v| v.execution_match.map(|b| f64::from(u8::from(b))))
                .collect(),
        ),
    }
}

pub fn summarize(evaluation: &Evaluation, metrics: &MetricSelection) -> Summary {
    let mut languages: Vec<&str> = evaluation
        .vectors
        .iter()
        .map(|v| v.language.as_str())
        .collect();
    languages.sort_unstable();
    languages.dedup();
    Summary {
        overall: summarize_group(evaluation.vectors.iter(), metrics),
        by_language: languages
            .into_iter()
            .map(|lang| {
                let group = evaluation
                    .vectors
                    .iter()
                    .filter(move |v| v.language == lang);
                (lang.to_owned(), summarize_group(group, metrics))
            })
            .collect(),
        failures: evaluation.failures.clone(),
    }
}

pub fn write_sweep_csv(out: impl Write, points: &[SweepPoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["weight", "correlation", "error"])
        .map_err(csv_error)?;
    for p in points {
        w.write_record([
            p.weight.to_string(),
            opt_cell(p.correlation),
            p.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "<sweep>".into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;

    fn vector(id: &str, lang: &str, tsed: Option<f64>, exec: Option<bool>) -> MetricVector {
        MetricVector {
            sample_id: id.into(),
            language: lang.into(),
            tsed,
            bleu: Some(0.25),
            execution_match: exec,
            parse_errors: Some(false),
            timings: [(Metric::Tsed, Duration::from_micros(1500))]
                .into_iter()
                .collect(),
            ..MetricVector::default()
        }
    }

    #[test]
    fn csv_round_trip() {
        let vectors = vec![
            vector("a", "python", Some(0.1 + 0.2), Some(true)),
            vector("b,\"c\"", "java", None, None),
        ];
        let sel: MetricSelection = "tsed,bleu".parse().unwrap();
        let mut buf = Vec::new();
        write_scores_csv(&mut buf, &vectors, &sel).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("id,language,tsed,bleu,execution_match,parse_errors,tsed_ms,bleu_ms\n"));
        assert!(text.contains(",1.5,"));

        let back = read_scores_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].tsed, Some(0.1 + 0.2));
        assert_eq!(back[0].execution_match, Some(true));
        assert_eq!(back[1].sample_id, "b,\"c\"");
        assert_eq!(back[1].tsed, None);
        assert_eq!(back[1].jaccard, None);
        assert_eq!(back[1].parse_errors, Some(false));
    }

    #[test]
    fn bad_cells_are_reported() {
        let err = read_scores_csv("id,tsed\na,0.5\nb,zero\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"));
        assert!(read_scores_csv("tsed\n0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn summary_means() {
        let evaluation = Evaluation {
            vectors: vec![
                vector("a", "python", Some(0.5), Some(true)),
                vector("b", "python", Some(0.25), Some(false)),
                vector("c", "java", None, None),
            ],
            failures: vec![],
        };
        let s = summarize(&evaluation, &"tsed,bleu".parse().unwrap());
        assert_eq!(s.overall.count, 3);
        assert_eq!(s.overall.means[&Metric::Tsed], Some(0.375));
        assert_eq!(s.by_language["java"].means[&Metric::Tsed], None);
        assert_eq!(s.by_language["python"].execution_match_rate, Some(0.5));
        assert_eq!(s.overall.means[&Metric::Bleu], Some(0.25));
    }
}
