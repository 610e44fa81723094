//! Fitted pipelines (standardizer plus risk model) and their text format.
//!
//! ```text
//! survnet-model v1
//! kind nn
//! input 3
//! means 0.1 -0.2 0
//! scales 1 1.5 2
//! layers 2 widths 3 4 1
//! layer 0 relu 4 3
//! w <3 values>            (one line per weight row, 4 lines)
//! b <4 values>
//! layer 1 linear 1 4
//! w <4 values>
//! b <1 value>
//! end
//! ```
//!
//! A `coxnet` file replaces the layer blocks with `lambda`, `alpha` and a
//! single `coefficients` line. Reals use shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::coxnet::{predict_linear_risk, ElasticNetCoxModel};
use crate::data::{write_atomic, Standardizer};
use crate::error::{Result, SurvError};
use crate::nn::{Activation, DenseLayer, Network};
use crate::survival::RiskVector;

const MAGIC: &str = "survnet-model v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Network(Network),
    Coxnet(ElasticNetCoxModel),
}

impl Predictor {
    pub fn kind(&self) -> &'static str {
        match self {
            Predictor::Network(_) => "nn",
            Predictor::Coxnet(_) => "coxnet",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Predictor::Network(net) => net.input_dim(),
            Predictor::Coxnet(m) => m.coefficients.len(),
        }
    }
}

/// Raw features in, risk scores out.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub standardizer: Standardizer,
    pub predictor: Predictor,
}

impl Pipeline {
    pub fn new(standardizer: Standardizer, predictor: Predictor) -> Result<Self> {
        if standardizer.dim() != predictor.input_dim() {
            return Err(SurvError::DimensionMismatch(format!(
                "standardizer has {} columns, model expects {}",
                standardizer.dim(),
                predictor.input_dim()
            )));
        }
        Ok(Self {
            standardizer,
            predictor,
        })
    }

    pub fn predict(&self, raw_features: &Array2<f64>) -> Result<RiskVector> {
        let x = self.standardizer.transform(raw_features)?;
        match &self.predictor {
            Predictor::Network(net) => net.predict_risk(&x),
            Predictor::Coxnet(m) => predict_linear_risk(m, &x),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, key: &str, values: &[f64]| {
            out.push_str(key);
            for v in values {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        };
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "kind {}", self.predictor.kind()).unwrap();
        writeln!(out, "input {}", self.standardizer.dim()).unwrap();
        line(&mut out, "means", self.standardizer.means.as_slice().unwrap());
        line(&mut out, "scales", self.standardizer.scales.as_slice().unwrap());
        match &self.predictor {
            Predictor::Network(net) => {
                let layers: Vec<&DenseLayer> = net.layers().collect();
                write!(out, "layers {} widths {}", layers.len(), net.input_dim()).unwrap();
                for l in &layers {
                    write!(out, " {}", l.fan_out()).unwrap();
                }
                out.push('\n');
                for (k, l) in layers.iter().enumerate() {
                    writeln!(out, "layer {k} {} {} {}", l.activation, l.fan_out(), l.fan_in()).unwrap();
                    for row in l.weights.rows() {
                        line(&mut out, "w", &row.to_vec());
                    }
                    line(&mut out, "b", &l.bias.to_vec());
                }
            }
            Predictor::Coxnet(m) => {
                writeln!(out, "lambda {}", m.lambda).unwrap();
                writeln!(out, "alpha {}", m.alpha).unwrap();
                line(&mut out, "coefficients", &m.coefficients);
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Lines {
            lines: text.lines().enumerate(),
        };
        let (_, first) = r.next_raw()?;
        if first.trim() != MAGIC {
            return Err(SurvError::ModelFormat(format!("expected `{MAGIC}` header")));
        }
        let kind = r.single("kind")?;
        let p: usize = r.parse_single("input")?;
        let means = r.reals("means", Some(p))?;
        let scales = r.reals("scales", Some(p))?;
        if scales.iter().any(|s| !(*s > 0.0)) {
            return Err(SurvError::ModelFormat("scales must be positive".into()));
        }
        let standardizer = Standardizer {
            means: Array1::from(means),
            scales: Array1::from(scales),
        };
        let predictor = match kind.as_str() {
            "nn" => Predictor::Network(read_network(&mut r, p)?),
            "coxnet" => {
                let lambda = r.parse_single("lambda")?;
                let alpha = r.parse_single("alpha")?;
                let coefficients = r.reals("coefficients", Some(p))?;
                Predictor::Coxnet(ElasticNetCoxModel {
                    coefficients,
                    lambda,
                    alpha,
                })
            }
            other => return Err(SurvError::ModelFormat(format!("unknown model kind `{other}`"))),
        };
        let (n, end) = r.next_raw()?;
        if end.trim() != "end" {
            return Err(SurvError::ModelFormat(format!("line {}: expected `end`", n + 1)));
        }
        Self::new(standardizer, predictor)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn read_network(r: &mut Lines<'_>, p: usize) -> Result<Network> {
    let (n, header) = r.next_raw()?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad = |m: &str| SurvError::ModelFormat(format!("line {}: {m}", n + 1));
    if fields.len() < 4 || fields[0] != "layers" || fields[2] != "widths" {
        return Err(bad("expected `layers <count> widths ...`"));
    }
    let count: usize = fields[1].parse().map_err(|_| bad("bad layer count"))?;
    let widths: Vec<usize> = fields[3..]
        .iter()
        .map(|w| w.parse().map_err(|_| bad("bad width")))
        .collect::<Result<_>>()?;
    if count == 0 || widths.len() != count + 1 || widths[0] != p {
        return Err(bad("widths do not match layer count and input size"));
    }
    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let (n, head) = r.next_raw()?;
        let f: Vec<&str> = head.split_whitespace().collect();
        let bad = |m: &str| SurvError::ModelFormat(format!("line {}: {m}", n + 1));
        if f.len() != 5 || f[0] != "layer" || f[1] != k.to_string() {
            return Err(bad(&format!("expected `layer {k} <activation> <out> <in>`")));
        }
        let activation: Activation = f[2].parse().map_err(|_| bad("unknown activation"))?;
        let (out, inp): (usize, usize) = match (f[3].parse(), f[4].parse()) {
            (Ok(o), Ok(i)) => (o, i),
            _ => return Err(bad("bad layer shape")),
        };
        if out != widths[k + 1] || inp != widths[k] {
            return Err(bad("layer shape disagrees with widths"));
        }
        let mut weights = Vec::with_capacity(out * inp);
        for _ in 0..out {
            weights.extend(r.reals("w", Some(inp))?);
        }
        let bias = r.reals("b", Some(out))?;
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((out, inp), weights).map_err(|e| SurvError::ModelFormat(e.to_string()))?,
            bias: Array1::from(bias),
            activation,
        });
    }
    let head = layers.pop().expect("count >= 1");
    Network::from_layers(layers, head).map_err(|e| SurvError::ModelFormat(e.to_string()))
}

struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_raw(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .ok_or_else(|| SurvError::ModelFormat("unexpected end of file".into()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next_raw()?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(SurvError::ModelFormat(format!("line {}: expected `{key}`", n + 1)));
        }
        Ok((n, fields.collect()))
    }

    fn single(&mut self, key: &str) -> Result<String> {
        let (n, f) = self.keyed(key)?;
        match f.as_slice() {
            [v] => Ok(v.to_string()),
            _ => Err(SurvError::ModelFormat(format!(
                "line {}: `{key}` takes one value",
                n + 1
            ))),
        }
    }

    fn parse_single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.single(key)?
            .parse()
            .map_err(|_| SurvError::ModelFormat(format!("bad value for `{key}`")))
    }

    fn reals(&mut self, key: &str, expected: Option<usize>) -> Result<Vec<f64>> {
        let (n, f) = self.keyed(key)?;
        let values: Vec<f64> = f
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(SurvError::ModelFormat(format!("line {}: bad real `{s}`", n + 1))),
            })
            .collect::<Result<_>>()?;
        if let Some(e) = expected {
            if values.len() != e {
                return Err(SurvError::ModelFormat(format!(
                    "line {}: `{key}` has {} values, expected {e}",
                    n + 1,
                    values.len()
                )));
            }
        }
        Ok(values)
    }
}
