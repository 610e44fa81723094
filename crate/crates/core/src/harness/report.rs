use std::fmt::Write as _;

use crate::error::{Result, SurvError};

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationResult {
    pub permutation: usize,
    pub seed: u64,
    /// Test concordance, or the failure message.
    pub outcome: std::result::Result<f64, String>,
    /// Chosen hyperparameters, in search-space order.
    pub params: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: String,
    pub results: Vec<PermutationResult>,
}

impl MethodReport {
    pub fn test_cis(&self) -> Vec<f64> {
        self.results
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().copied())
            .collect()
    }

    pub fn mean(&self) -> Option<f64> {
        let cis = self.test_cis();
        (!cis.is_empty()).then(|| cis.iter().sum::<f64>() / cis.len() as f64)
    }

    /// Sample (n - 1) standard deviation; needs two successful permutations.
    pub fn std(&self) -> Option<f64> {
        let cis = self.test_cis();
        if cis.len() < 2 {
            return None;
        }
        let mean = self.mean()?;
        let ss: f64 = cis.iter().map(|c| (c - mean).powi(2)).sum();
        Some((ss / (cis.len() - 1) as f64).sqrt())
    }

    pub fn failed(&self) -> bool {
        self.test_cis().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

pub const CSV_HEADER: &str = "method,permutation,seed,test_ci,params";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Human-readable table: one summary row per method, then one row per
/// permutation.
pub fn summary_table(report: &EvalReport) -> String {
    let mut out = format!("{:<12} {:>7} {:>8} {:>8}\n", "method", "ok", "mean_ci", "std_ci");
    for m in &report.methods {
        let ok = format!("{}/{}", m.test_cis().len(), m.results.len());
        writeln!(
            out,
            "{:<12} {:>7} {:>8} {:>8}",
            m.method,
            ok,
            opt(m.mean()),
            opt(m.std())
        )
        .unwrap();
    }
    if report.methods.iter().any(|m| !m.results.is_empty()) {
        writeln!(
            out,
            "\n{:<12} {:>4} {:>6} {:>8}  params",
            "method", "perm", "seed", "test_ci"
        )
        .unwrap();
        for m in &report.methods {
            for r in &m.results {
                let (ci, detail) = match &r.outcome {
                    Ok(ci) => (format!("{ci:.4}"), format_params(&r.params)),
                    Err(e) => ("failed".to_string(), e.clone()),
                };
                writeln!(
                    out,
                    "{:<12} {:>4} {:>6} {:>8}  {detail}",
                    m.method, r.permutation, r.seed, ci
                )
                .unwrap();
            }
        }
    }
    out
}

fn format_params(params: &[(String, f64)]) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// One CSV line per method and permutation. Failed permutations carry
/// `failed` as the CI and `error=<message>` in the params field.
pub fn report_csv(report: &EvalReport) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for m in &report.methods {
        for r in &m.results {
            let (ci, params) = match &r.outcome {
                Ok(ci) => (ci.to_string(), format_params(&r.params)),
                Err(e) => ("failed".to_string(), format!("error={e}")),
            };
            wtr.write_record([
                m.method.as_str(),
                &r.permutation.to_string(),
                &r.seed.to_string(),
                &ci,
                &params,
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("utf-8 input")
}

/// Both renderings of a report.
pub fn summarize(report: &EvalReport) -> (String, String) {
    (summary_table(report), report_csv(report))
}

/// Inverse of [`report_csv`]. Methods keep their first-appearance order.
pub fn parse_report_csv(text: &str) -> Result<EvalReport> {
    let bad = |line: usize, m: String| SurvError::Parse {
        line,
        column: String::new(),
        message: m,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(bad(1, format!("expected header `{CSV_HEADER}`")));
    }
    let mut report = EvalReport::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 5 {
            return Err(bad(line, "expected 5 fields".into()));
        }
        let num = |k: usize| -> Result<u64> {
            rec[k]
                .parse()
                .map_err(|_| bad(line, format!("bad integer `{}`", &rec[k])))
        };
        let (outcome, params) = if &rec[3] == "failed" {
            let msg = rec[4].strip_prefix("error=").unwrap_or(&rec[4]).to_string();
            (Err(msg), Vec::new())
        } else {
            let ci: f64 = rec[3].parse().map_err(|_| bad(line, format!("bad CI `{}`", &rec[3])))?;
            let params = if rec[4].is_empty() {
                Vec::new()
            } else {
                rec[4]
                    .split(';')
                    .map(|kv| {
                        let (k, v) = kv
                            .split_once('=')
                            .ok_or_else(|| bad(line, format!("bad param `{kv}`")))?;
                        let v: f64 = v.parse().map_err(|_| bad(line, format!("bad param `{kv}`")))?;
                        Ok((k.to_string(), v))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            (Ok(ci), params)
        };
        let result = PermutationResult {
            permutation: num(1)? as usize,
            seed: num(2)?,
            outcome,
            params,
        };
        match report.methods.iter_mut().find(|m| m.method == rec[0]) {
            Some(m) => m.results.push(result),
            None => report.methods.push(MethodReport {
                method: rec[0].to_string(),
                results: vec![result],
            }),
        }
    }
    Ok(report)
}
