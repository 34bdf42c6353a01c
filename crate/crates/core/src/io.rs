//! File formats.
//!
//! * Dataset CSV `row,cell,y,r`: `y` is empty when `r = 0`, `cell` is empty
//!   for the count model.
//! * Parameter fixture JSON, tagged by `"model"`.
//! * Weights CSV `draw,log_weight,norm_weight`.
//! * Trace CSV `method,chain,iter,param,value`.
//!
//! Every writer goes through [`write_atomic`].

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::importance::WeightedSample;
use crate::model::{CountTheta, IncompleteDataset, MAX_COVARIATES, SatTheta};

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn dataset_csv(d: &IncompleteDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "cell", "y", "r"])?;
    let cells = d.cells();
    for (i, y) in d.y().iter().enumerate() {
        let cell = cells.get(i).map(|c| c.to_string()).unwrap_or_default();
        let (y, r) = match y {
            Some(v) => (v.to_string(), "1"),
            None => (String::new(), "0"),
        };
        w.write_record([i.to_string(), cell, y, r.to_string()])?;
    }
    finish_csv(w)
}

pub fn write_dataset(path: &Path, d: &IncompleteDataset) -> Result<()> {
    write_atomic(path, &dataset_csv(d)?)
}

/// Parses a dataset CSV. A sat dataset needs `p`; when `None` it is the
/// smallest value covering the largest cell index.
pub fn parse_dataset(text: &str, p: Option<usize>) -> Result<IncompleteDataset> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["row", "cell", "y", "r"] {
        return Err(Error::Parse(format!("expected header row,cell,y,r, got {:?}", headers)));
    }
    let mut cells: Vec<Option<usize>> = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let bad = |what: &str| Error::Parse(format!("data line {}: bad {what}", line + 1));
        let cell = match field(1) {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|_| bad("cell"))?),
        };
        let y = match (field(3), field(2)) {
            ("1", s) if !s.is_empty() => Some(s.parse::<u64>().map_err(|_| bad("y"))?),
            ("0", "") => None,
            ("0", _) => return Err(bad("row: y present with r = 0")),
            _ => return Err(bad("r")),
        };
        cells.push(cell);
        ys.push(y);
    }
    if cells.iter().all(Option::is_none) && p.is_none() {
        return Ok(IncompleteDataset::new_count(ys));
    }
    let cells: Vec<usize> = cells
        .into_iter()
        .map(|c| c.ok_or_else(|| Error::Parse("sat dataset row without a cell".into())))
        .collect::<Result<_>>()?;
    let p = match p {
        Some(p) => p,
        None => {
            let max = cells.iter().copied().max().unwrap_or(0);
            (1..=MAX_COVARIATES).find(|&p| (1usize << p) > max).ok_or_else(|| {
                Error::Parse(format!("cell index {max} needs more than {MAX_COVARIATES} covariates"))
            })?
        }
    };
    IncompleteDataset::new_sat(p, cells, ys)
}

pub fn read_dataset(path: &Path, p: Option<usize>) -> Result<IncompleteDataset> {
    parse_dataset(&fs::read_to_string(path)?, p)
}

/// True parameter values stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum Fixture {
    Sat { p: usize, alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>, delta: Vec<f64> },
    Count { mu: f64, alpha0: f64, alpha1: f64 },
}

impl Fixture {
    pub fn from_sat(t: &SatTheta) -> Self {
        Fixture::Sat {
            p: t.p(),
            alpha: t.alpha().to_vec(),
            beta: t.beta().to_vec(),
            gamma: t.gamma().to_vec(),
            delta: t.delta().to_vec(),
        }
    }

    pub fn from_count(t: &CountTheta) -> Self {
        Fixture::Count { mu: t.mu(), alpha0: t.alpha0(), alpha1: t.alpha1() }
    }

    pub fn to_sat(&self) -> Result<SatTheta> {
        match self {
            Fixture::Sat { p, alpha, beta, gamma, delta } => {
                let t = SatTheta::new(alpha.clone(), beta.clone(), gamma.clone(), delta.clone())?;
                if t.p() != *p {
                    return Err(Error::Parse(format!("fixture p = {p} but {} cells given", alpha.len())));
                }
                Ok(t)
            }
            Fixture::Count { .. } => Err(Error::KindMismatch { expected: "sat", found: "count" }),
        }
    }

    pub fn to_count(&self) -> Result<CountTheta> {
        match self {
            Fixture::Count { mu, alpha0, alpha1 } => CountTheta::new(*mu, *alpha0, *alpha1),
            Fixture::Sat { .. } => Err(Error::KindMismatch { expected: "count", found: "sat" }),
        }
    }
}

pub fn read_fixture(path: &Path) -> Result<Fixture> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

pub fn weights_csv<D>(w: &WeightedSample<D>) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["draw", "log_weight", "norm_weight"])?;
    for (i, (lw, nw)) in w.log_weights.iter().zip(&w.norm_weights).enumerate() {
        out.write_record([i.to_string(), fmt_f64(*lw), fmt_f64(*nw)])?;
    }
    finish_csv(out)
}

/// Long-format trace of `draws[chain][iter][param]`.
pub fn trace_csv(method: &str, draws: &[Vec<Vec<f64>>], names: &[String]) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["method", "chain", "iter", "param", "value"])?;
    for (c, chain) in draws.iter().enumerate() {
        let c = c.to_string();
        for (i, row) in chain.iter().enumerate() {
            let i = i.to_string();
            for (name, v) in names.iter().zip(row) {
                out.write_record([method, &c, &i, name, &fmt_f64(*v)])?;
            }
        }
    }
    finish_csv(out)
}

pub fn chain_trace_csv(method: &str, out: &ChainOutput) -> Result<Vec<u8>> {
    trace_csv(method, &out.draws, &out.param_names)
}
