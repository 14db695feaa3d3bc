use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sweep,
    Evolution,
    Local,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Sweep => "sweep",
            Source::Evolution => "evolution",
            Source::Local => "local",
        })
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sweep" => Ok(Source::Sweep),
            "evolution" => Ok(Source::Evolution),
            "local" => Ok(Source::Local),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

/// What a record was measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    Sigma(f64),
    Genome(String),
}

/// One evaluated network. Failed evaluations keep the row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub source: Source,
    pub subject: Subject,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub mc: Option<f64>,
    pub mmse: Option<f64>,
    pub narma: Option<f64>,
    pub nr: Option<f64>,
    pub ais: Option<f64>,
    pub te: Option<f64>,
    pub error: Option<String>,
}

impl EvalRecord {
    pub fn new(source: Source, subject: Subject, seed: u64) -> Self {
        Self {
            source,
            subject,
            seed,
            lambda: None,
            mc: None,
            mmse: None,
            narma: None,
            nr: None,
            ais: None,
            te: None,
            error: None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.subject {
            Subject::Sigma(s) => Some(s),
            Subject::Genome(_) => None,
        }
    }

    /// Successful rows carry lambda and at least one score.
    pub fn is_complete(&self) -> bool {
        self.error.is_none()
            && self.lambda.is_some()
            && [self.mc, self.mmse, self.narma, self.nr, self.ais, self.te].iter().any(Option::is_some)
    }

    fn append_error(&mut self, msg: String) {
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }

    pub(crate) fn fail(&mut self, what: &str, err: impl fmt::Display) {
        self.append_error(format!("{what}: {err}"));
    }
}

pub const CSV_HEADER: [&str; 11] = ["source", "sigma", "seed", "lambda", "mc", "mmse", "narma", "nr", "ais", "te", "error"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes records as CSV. Floats use the shortest round-trip form, so equal
/// values always produce identical bytes.
pub fn write_records_csv<W: Write>(out: W, records: &[EvalRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let subject = match &r.subject {
            Subject::Sigma(s) => s.to_string(),
            Subject::Genome(g) => format!("genome:{g}"),
        };
        w.write_record([
            r.source.to_string(),
            subject,
            r.seed.to_string(),
            opt(r.lambda),
            opt(r.mc),
            opt(r.mmse),
            opt(r.narma),
            opt(r.nr),
            opt(r.ais),
            opt(r.te),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<EvalRecord>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let parse = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("bad number {s:?}: {e}"))
        }
    };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| e.to_string())?;
        if row.len() != CSV_HEADER.len() {
            return Err(format!("expected {} columns, got {}", CSV_HEADER.len(), row.len()));
        }
        let subject = match row[1].strip_prefix("genome:") {
            Some(g) => Subject::Genome(g.to_string()),
            None => Subject::Sigma(row[1].parse().map_err(|e| format!("bad sigma {:?}: {e}", &row[1]))?),
        };
        out.push(EvalRecord {
            source: row[0].parse()?,
            subject,
            seed: row[2].parse().map_err(|e| format!("bad seed {:?}: {e}", &row[2]))?,
            lambda: parse(&row[3])?,
            mc: parse(&row[4])?,
            mmse: parse(&row[5])?,
            narma: parse(&row[6])?,
            nr: parse(&row[7])?,
            ais: parse(&row[8])?,
            te: parse(&row[9])?,
            error: (!row[10].is_empty()).then(|| row[10].to_string()),
        });
    }
    Ok(out)
}
