//! Long-format CSV ingestion: one row per observed transition or censoring,
//! grouped into per-subject event records. File-level problems (missing
//! columns, unparseable fields, duplicate rows) are reported with the line
//! they occur on; path-level consistency is left to the counting-system
//! builder, which knows the transition schema.

use std::collections::HashMap;
use std::path::Path;

use survode::events::{EventRecord, Transition};

use crate::CliError;

/// Status code -> (from, to) transition; code 0 always means censoring.
pub type StatusMap = Vec<(u32, (u8, u8))>;

/// Parsed input data, one bucket per group in first-appearance order.
#[derive(Debug)]
pub struct EventLog {
    pub groups: Vec<(String, Vec<EventRecord>)>,
}

impl EventLog {
    pub fn total_subjects(&self) -> usize {
        self.groups.iter().map(|(_, recs)| recs.len()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub id_column: String,
    pub group_column: String,
    pub time_column: String,
    pub status_column: String,
    pub covariate_columns: Vec<String>,
    pub status_map: StatusMap,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            id_column: "id".into(),
            group_column: "group".into(),
            time_column: "time".into(),
            status_column: "status".into(),
            covariate_columns: Vec::new(),
            status_map: vec![(1, (0, 1))],
        }
    }
}

struct Row {
    line: u64,
    time: f64,
    status: u32,
}

struct Subject {
    id: String,
    group: String,
    rows: Vec<Row>,
    covariates: Vec<f64>,
}

pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<EventLog, CliError> {
    let display = path.display().to_string();
    let ingest_err = |line: u64, message: String| CliError::Ingest {
        path: display.clone(),
        line,
        message,
    };

    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Io {
            path: display.clone(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => ingest_err(1, e.to_string()),
    })?;

    let headers = reader
        .headers()
        .map_err(|e| ingest_err(1, format!("unreadable header: {e}")))?
        .clone();
    let find = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ingest_err(1, format!("missing required column '{name}'")))
    };
    let id_idx = find(&opts.id_column)?;
    let group_idx = find(&opts.group_column)?;
    let time_idx = find(&opts.time_column)?;
    let status_idx = find(&opts.status_column)?;
    let cov_idx: Vec<(usize, &str)> = opts
        .covariate_columns
        .iter()
        .map(|c| find(c).map(|i| (i, c.as_str())))
        .collect::<Result<_, _>>()?;

    let mut subjects: Vec<Subject> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();

    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ingest_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();

        let id = field(id_idx);
        if id.is_empty() {
            return Err(ingest_err(line, "empty subject id".into()));
        }
        let group = field(group_idx);
        let time: f64 = field(time_idx).parse().map_err(|_| {
            ingest_err(line, format!("non-numeric time '{}'", field(time_idx)))
        })?;
        let status: u32 = field(status_idx).parse().map_err(|_| {
            ingest_err(line, format!("non-numeric status '{}'", field(status_idx)))
        })?;
        if status != 0 && !opts.status_map.iter().any(|(c, _)| *c == status) {
            return Err(ingest_err(line, format!("unknown status code {status}")));
        }
        let mut covariates = Vec::with_capacity(cov_idx.len());
        for &(idx, name) in &cov_idx {
            let v: f64 = field(idx).parse().map_err(|_| {
                ingest_err(
                    line,
                    format!("non-numeric covariate '{}' in column '{name}'", field(idx)),
                )
            })?;
            covariates.push(v);
        }

        match by_id.get(id) {
            Some(&i) => {
                let subj = &mut subjects[i];
                if subj.group != group {
                    return Err(ingest_err(
                        line,
                        format!(
                            "subject '{id}' appears in groups '{}' and '{group}'",
                            subj.group
                        ),
                    ));
                }
                if subj.covariates != covariates {
                    return Err(ingest_err(
                        line,
                        format!("subject '{id}' has inconsistent covariate values"),
                    ));
                }
                subj.rows.push(Row { line, time, status });
            }
            None => {
                by_id.insert(id.to_string(), subjects.len());
                subjects.push(Subject {
                    id: id.to_string(),
                    group: group.to_string(),
                    rows: vec![Row { line, time, status }],
                    covariates,
                });
            }
        }
    }

    if subjects.is_empty() {
        return Err(ingest_err(0, "no data rows".into()));
    }

    let mut groups: Vec<(String, Vec<EventRecord>)> = Vec::new();
    for mut subj in subjects {
        subj.rows.sort_by(|a, b| a.time.total_cmp(&b.time));
        for pair in subj.rows.windows(2) {
            if pair[0].time == pair[1].time && pair[0].status == pair[1].status {
                return Err(ingest_err(
                    pair[1].line,
                    format!(
                        "duplicate row for subject '{}' (time {}, status {})",
                        subj.id, pair[1].time, pair[1].status
                    ),
                ));
            }
        }

        let mut rec = EventRecord::new(subj.id.clone(), subj.group.clone());
        rec.covariates = subj.covariates;
        for row in &subj.rows {
            if row.status == 0 {
                if rec.censor_time.is_some() {
                    return Err(ingest_err(
                        row.line,
                        format!("subject '{}' has more than one censoring row", subj.id),
                    ));
                }
                rec.censor_time = Some(row.time);
            } else {
                let (from, to) = opts
                    .status_map
                    .iter()
                    .find(|(c, _)| *c == row.status)
                    .map(|(_, ft)| *ft)
                    .expect("codes were checked during row parsing");
                rec.transitions.push(Transition {
                    time: row.time,
                    from,
                    to,
                });
            }
        }

        match groups.iter_mut().find(|(g, _)| *g == subj.group) {
            Some((_, recs)) => recs.push(rec),
            None => groups.push((subj.group, vec![rec])),
        }
    }

    Ok(EventLog { groups })
}
