use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimates::WidthQuery;
use crate::mixed_norm::{Exponent, ExponentPair, Shape};

pub const QUERY_FILE_VERSION: u32 = 1;

/// `nu,p,theta`, e.g. `1,2,inf` or `0.5,8/3,4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallRecord {
    pub nu: f64,
    pub p: Exponent,
    pub theta: Exponent,
}

pub(crate) fn parse_ball(s: &str) -> std::result::Result<BallRecord, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [nu, p, theta] = parts[..] else {
        return Err(format!("expected nu,p,theta but got {s:?}"));
    };
    Ok(BallRecord {
        nu: nu.trim().parse().map_err(|_| format!("bad radius {nu:?}"))?,
        p: p.parse().map_err(|e: crate::Error| e.to_string())?,
        theta: theta.parse().map_err(|e: crate::Error| e.to_string())?,
    })
}

pub(crate) fn parse_exponent(s: &str) -> std::result::Result<Exponent, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// One record of a query file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub m: usize,
    pub k: usize,
    pub n: u64,
    pub q: Exponent,
    pub sigma: Exponent,
    pub balls: Vec<BallRecord>,
}

impl QueryRecord {
    pub fn to_query(&self) -> Result<WidthQuery> {
        let shape = Shape::new(self.m, self.k)?;
        let target = ExponentPair::from_exponents(self.q, self.sigma);
        let balls: Vec<(f64, ExponentPair)> =
            self.balls.iter().map(|b| (b.nu, ExponentPair::from_exponents(b.p, b.theta))).collect();
        WidthQuery::new(shape, self.n, target, &balls)
    }

    pub fn from_query(q: &WidthQuery) -> Self {
        QueryRecord {
            m: q.shape.m,
            k: q.shape.k,
            n: q.n,
            q: q.target.p,
            sigma: q.target.theta,
            balls: q
                .balls
                .iter()
                .map(|b| BallRecord { nu: b.nu, p: b.exps.p, theta: b.exps.theta })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub version: u32,
    pub queries: Vec<QueryRecord>,
}

pub fn read_query_file(path: &Path) -> Result<QueryFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let f: QueryFile = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if f.version != QUERY_FILE_VERSION {
        return Err(invalid(format!("query file version {} is not supported", f.version)));
    }
    if f.queries.is_empty() {
        return Err(invalid("query file has no queries"));
    }
    Ok(f)
}

#[derive(Args, Clone, Debug, Default)]
pub struct QueryArgs {
    /// Rows per block.
    #[arg(short = 'm')]
    pub m: Option<usize>,
    /// Number of blocks.
    #[arg(short = 'k')]
    pub k: Option<usize>,
    /// Subspace dimension.
    #[arg(short = 'n')]
    pub n: Option<u64>,
    /// Inner target exponent.
    #[arg(short = 'q', value_parser = parse_exponent)]
    pub q: Option<Exponent>,
    /// Outer target exponent.
    #[arg(short = 's', long = "sigma", value_parser = parse_exponent)]
    pub sigma: Option<Exponent>,
    /// Ball as nu,p,theta; give once or twice.
    #[arg(long = "ball", value_parser = parse_ball)]
    pub balls: Vec<BallRecord>,
    /// Query file (JSON, version 1) instead of flags.
    #[arg(long, conflicts_with_all = ["m", "k", "n", "q", "sigma", "balls"])]
    pub file: Option<PathBuf>,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| invalid(format!("missing {flag}")))
}

impl QueryArgs {
    /// The record described by the flags; `n` may be supplied by a grid.
    pub fn record(&self, n: Option<u64>) -> Result<QueryRecord> {
        if self.balls.is_empty() {
            return Err(invalid("missing --ball"));
        }
        Ok(QueryRecord {
            m: need(self.m, "-m")?,
            k: need(self.k, "-k")?,
            n: need(self.n.or(n), "-n")?,
            q: need(self.q, "-q")?,
            sigma: need(self.sigma, "-s")?,
            balls: self.balls.clone(),
        })
    }

    pub fn queries(&self) -> Result<Vec<WidthQuery>> {
        match &self.file {
            Some(p) => read_query_file(p)?.queries.iter().map(QueryRecord::to_query).collect(),
            None => Ok(vec![self.record(None)?.to_query()?]),
        }
    }
}
