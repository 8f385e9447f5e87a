//! Allocation problem files.
//!
//! A problem file is CSV with header `k,g_k,h_k,n_k,t_k` preceded by `#`
//! metadata lines such as `# budget = 4`, `# alpha = 1e-3` and
//! `# method = waterfill` (or `np`). Water-filling uses levels `n_k / g_k`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use jrc_core::alloc::{np_allocate, waterfill, AllocationProblem, AllocationResult};
use serde::Deserialize;

use crate::runner::{fmt, write_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Waterfill,
    NeymanPearson,
}

impl FromStr for Method {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "waterfill" | "water-filling" | "wf" => Ok(Self::Waterfill),
            "np" | "neyman-pearson" => Ok(Self::NeymanPearson),
            other => Err(anyhow!("unknown allocation method {other:?} (expected waterfill or np)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Waterfill => "waterfill",
            Self::NeymanPearson => "np",
        })
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    k: usize,
    g_k: f64,
    h_k: f64,
    n_k: f64,
    t_k: f64,
}

#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub problem: AllocationProblem,
    pub method: Method,
}

pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let mut budget = None;
    let mut alpha = 1e-3;
    let mut method = Method::NeymanPearson;
    let mut body = String::new();
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.trim_start().strip_prefix('#') else {
            body.push_str(line);
            body.push('\n');
            continue;
        };
        let Some((key, value)) = meta.split_once('=').or_else(|| meta.split_once(':')) else {
            continue;
        };
        let parse = |v: &str| -> Result<f64> {
            v.trim().parse().with_context(|| format!("line {}: bad number {:?}", i + 1, v.trim()))
        };
        match key.trim().to_ascii_lowercase().as_str() {
            "budget" | "p_t" => budget = Some(parse(value)?),
            "alpha" => alpha = parse(value)?,
            "method" => method = value.parse().with_context(|| format!("line {}", i + 1))?,
            _ => {}
        }
    }
    let budget = budget.ok_or_else(|| anyhow!("missing `# budget = ...` line"))?;

    let mut rows: Vec<Row> = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .context("parsing problem rows")?;
    rows.sort_by_key(|r| r.k);
    if rows.iter().enumerate().any(|(i, r)| r.k != i) {
        bail!("subcarrier indices k must be 0..K-1 without gaps");
    }
    let problem = AllocationProblem {
        radar_gains: rows.iter().map(|r| r.g_k).collect(),
        comm_gains: rows.iter().map(|r| r.h_k).collect(),
        noise: rows.iter().map(|r| r.n_k).collect(),
        rate_floors: rows.iter().map(|r| r.t_k).collect(),
        budget,
        alpha,
    };
    problem.validate()?;
    Ok(ProblemFile { problem, method })
}

pub fn solve(file: &ProblemFile) -> Result<AllocationResult> {
    let p = &file.problem;
    Ok(match file.method {
        Method::Waterfill => {
            let levels: Vec<f64> = p.noise.iter().zip(&p.radar_gains).map(|(n, g)| n / g).collect();
            waterfill(&levels, p.budget)?
        }
        Method::NeymanPearson => np_allocate(p)?,
    })
}

/// Solves the problem in `input` and writes `allocation.csv` into `out_dir`.
pub fn export_alloc(input: &Path, out_dir: &Path) -> Result<(PathBuf, AllocationResult)> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let file = parse_problem(&text).with_context(|| format!("in {}", input.display()))?;
    let result = solve(&file)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join("allocation.csv");
    let p = &file.problem;
    let rows: Vec<Vec<String>> = (0..p.len())
        .map(|k| {
            vec![
                k.to_string(),
                fmt(p.radar_gains[k]),
                fmt(p.comm_gains[k]),
                fmt(p.noise[k]),
                fmt(p.rate_floors[k]),
                fmt(result.powers[k]),
            ]
        })
        .collect();
    write_csv(&path, &["k", "g_k", "h_k", "n_k", "t_k_bits", "P_k_w"], &rows)?;
    Ok((path, result))
}
