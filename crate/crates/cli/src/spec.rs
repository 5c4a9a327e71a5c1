//! Mini-language parsers for the command line.
//!
//! Grammars (parse failures name the offending token and its byte position):
//!
//! * partition: `dyadic:T=1.0,levels=4..14` | `uniform:T=1.0,n=1000[,levels=0..4]`
//! * path: `step:0.5=2.0;0.75=-1.0` | `fs:levels=14,seed=42` | `pl:file=nodes.csv`
//!   (vector jump values separated by `|`; `+` composes paths by addition)
//! * functional: `eval:f=square` | `follmer:f=square` | `qvint:phi=identity`
//!   | `qveval:f=identity` | `affine:a=1,b=2` | `oneform:f=identity`
//!   | `time:f=square`
//! * integrand: `const:c=1` | `left:f=square` | `oneform:f=identity`
//!   | `grad:<functional spec>`
//! * named scalar functions: `identity` (`id`), `square`, `cube`, `sin`, `exp`

use pathwise::functional::builtins::{self, MatFn};
use pathwise::functional::{C2Fn, Functional, VecC2Fn};
use pathwise::integrate::Integrand;
use pathwise::partition::{Partition, PartitionSequence};
use pathwise::path::{faber_schauder_path, CadlagPath};
use std::fmt;
use std::sync::Arc;

#[derive(Debug)]
pub struct SpecError {
    pub what: String,
    pub token: String,
    pub position: usize,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at position {}: '{}'",
            self.what, self.position, self.token
        )
    }
}

impl std::error::Error for SpecError {}

fn err<T>(
    what: impl Into<String>,
    token: impl Into<String>,
    position: usize,
) -> Result<T, SpecError> {
    Err(SpecError {
        what: what.into(),
        token: token.into(),
        position,
    })
}

/// Key-value splitter tracking byte positions in the original spec string.
struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str, usize)>, // key, value, position of key
}

fn split_fields(body: &str, offset: usize, sep: char) -> Result<Fields<'_>, SpecError> {
    let mut pairs = Vec::new();
    let mut pos = offset;
    for part in body.split(sep) {
        if part.is_empty() {
            pos += part.len() + 1;
            continue;
        }
        match part.split_once('=') {
            Some((k, v)) => pairs.push((k, v, pos)),
            None => return err("expected key=value", part, pos),
        }
        pos += part.len() + 1;
    }
    Ok(Fields { pairs })
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Option<(&'a str, usize)> {
        self.pairs
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, v, p)| (*v, *p))
    }

    fn require(&self, key: &str, whole: &str) -> Result<(&'a str, usize), SpecError> {
        self.get(key).ok_or_else(|| SpecError {
            what: format!("missing required key '{key}'"),
            token: whole.to_string(),
            position: 0,
        })
    }
}

fn parse_f64(s: &str, pos: usize) -> Result<f64, SpecError> {
    s.parse::<f64>().map_err(|_| SpecError {
        what: "expected a number".into(),
        token: s.to_string(),
        position: pos,
    })
}

fn parse_u32(s: &str, pos: usize) -> Result<u32, SpecError> {
    s.parse::<u32>().map_err(|_| SpecError {
        what: "expected an integer".into(),
        token: s.to_string(),
        position: pos,
    })
}

/// `a..b` inclusive level range.
pub fn parse_level_range(s: &str, pos: usize) -> Result<Vec<u32>, SpecError> {
    let Some((a, b)) = s.split_once("..") else {
        return err("expected a level range like 4..14", s, pos);
    };
    let lo = parse_u32(a, pos)?;
    let hi = parse_u32(b, pos + a.len() + 2)?;
    if hi < lo {
        return err("level range upper bound below lower bound", s, pos);
    }
    Ok((lo..=hi).collect())
}

/// Parsed partition spec: the sequence plus the level sweep it declares.
#[derive(Debug)]
pub struct PartitionSpec {
    pub seq: PartitionSequence,
    pub levels: Vec<u32>,
}

pub fn parse_partition(spec: &str) -> Result<PartitionSpec, SpecError> {
    let Some((kind, body)) = spec.split_once(':') else {
        return err("partition spec needs 'kind:...'", spec, 0);
    };
    let offset = kind.len() + 1;
    let fields = split_fields(body, offset, ',')?;
    match kind {
        "dyadic" => {
            let (t, tp) = fields.require("T", spec)?;
            let horizon = parse_f64(t, tp)?;
            let (lv, lp) = fields.require("levels", spec)?;
            let levels = parse_level_range(lv, lp)?;
            let seq = PartitionSequence::dyadic(horizon).map_err(|e| SpecError {
                what: e.to_string(),
                token: t.to_string(),
                position: tp,
            })?;
            Ok(PartitionSpec { seq, levels })
        }
        "uniform" => {
            let (t, tp) = fields.require("T", spec)?;
            let horizon = parse_f64(t, tp)?;
            let (nv, np) = fields.require("n", spec)?;
            let n0 = parse_u32(nv, np)? as usize;
            let levels = match fields.get("levels") {
                Some((lv, lp)) => parse_level_range(lv, lp)?,
                None => vec![0, 1, 2],
            };
            let seq = PartitionSequence::uniform(horizon, n0).map_err(|e| SpecError {
                what: e.to_string(),
                token: nv.to_string(),
                position: np,
            })?;
            Ok(PartitionSpec { seq, levels })
        }
        other => err("unknown partition kind (dyadic|uniform)", other, 0),
    }
}

fn parse_vector(s: &str, pos: usize) -> Result<Vec<f64>, SpecError> {
    s.split('|')
        .map(|v| parse_f64(v, pos))
        .collect::<Result<Vec<f64>, _>>()
}

fn parse_single_path(
    spec: &str,
    offset: usize,
    horizon: f64,
    default_seed: Option<u64>,
) -> Result<CadlagPath, SpecError> {
    let Some((kind, body)) = spec.split_once(':') else {
        return err("path spec needs 'kind:...'", spec, offset);
    };
    let inner = offset + kind.len() + 1;
    let lift = |e: pathwise::Error| SpecError {
        what: e.to_string(),
        token: spec.to_string(),
        position: offset,
    };
    match kind {
        "step" => {
            let mut jumps: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut dim = 1;
            let mut pos = inner;
            for part in body.split(';') {
                if part.is_empty() {
                    pos += part.len() + 1;
                    continue;
                }
                let Some((t, v)) = part.split_once('=') else {
                    return err("expected time=value", part, pos);
                };
                let time = parse_f64(t, pos)?;
                let value = parse_vector(v, pos + t.len() + 1)?;
                dim = value.len();
                jumps.push((time, value));
                pos += part.len() + 1;
            }
            CadlagPath::step_path(&jumps, dim, horizon).map_err(lift)
        }
        "fs" => {
            let fields = split_fields(body, inner, ',')?;
            let (lv, lp) = fields.require("levels", spec)?;
            let levels = parse_u32(lv, lp)?;
            let seed = match fields.get("seed") {
                Some((sv, sp)) => sv.parse::<u64>().map_err(|_| SpecError {
                    what: "expected an integer seed".into(),
                    token: sv.to_string(),
                    position: sp,
                })?,
                None => default_seed.ok_or_else(|| SpecError {
                    what: "fs path needs seed= (or pass --seed)".into(),
                    token: spec.to_string(),
                    position: offset,
                })?,
            };
            faber_schauder_path(levels, seed, horizon).map_err(lift)
        }
        "pl" => {
            let fields = split_fields(body, inner, ',')?;
            let (file, fp) = fields.require("file", spec)?;
            let text = std::fs::read_to_string(file).map_err(|e| SpecError {
                what: format!("cannot read node file ({e})"),
                token: file.to_string(),
                position: fp,
            })?;
            let mut nodes: Vec<(f64, Vec<f64>)> = Vec::new();
            for (li, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || (li == 0 && line.starts_with('t')) || line.starts_with('#') {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 2 {
                    return err("node row needs t and at least one value", line, fp);
                }
                let t = parse_f64(cols[0], fp)?;
                let vals = cols[1..]
                    .iter()
                    .map(|c| parse_f64(c, fp))
                    .collect::<Result<Vec<f64>, _>>()?;
                nodes.push((t, vals));
            }
            let dim = nodes.first().map(|(_, v)| v.len()).unwrap_or(1);
            CadlagPath::from_nodes(dim, &nodes).map_err(lift)
        }
        other => err("unknown path kind (step|fs|pl)", other, offset),
    }
}

/// Parse a path spec; `+`-separated parts are added pointwise. `fs:` parts
/// without an explicit seed fall back to `default_seed`.
pub fn parse_path(
    spec: &str,
    horizon: f64,
    default_seed: Option<u64>,
) -> Result<CadlagPath, SpecError> {
    let mut acc: Option<CadlagPath> = None;
    let mut offset = 0usize;
    for part in spec.split('+') {
        let p = parse_single_path(part, offset, horizon, default_seed)?;
        acc = Some(match acc {
            None => p,
            Some(a) => a.add(&p).map_err(|e| SpecError {
                what: e.to_string(),
                token: part.to_string(),
                position: offset,
            })?,
        });
        offset += part.len() + 1;
    }
    acc.ok_or_else(|| SpecError {
        what: "empty path spec".into(),
        token: spec.to_string(),
        position: 0,
    })
}

pub fn named_function(name: &str, pos: usize) -> Result<C2Fn, SpecError> {
    match name {
        "identity" | "id" => Ok(C2Fn::identity()),
        "square" => Ok(C2Fn::square()),
        "cube" => Ok(C2Fn::cube()),
        "sin" => Ok(C2Fn::sin()),
        "exp" => Ok(C2Fn::exp()),
        other => err(
            "unknown function (identity|square|cube|sin|exp)",
            other,
            pos,
        ),
    }
}

/// Parse a functional spec; integral families evaluate along `grid`.
pub fn parse_functional(spec: &str, grid: &Partition) -> Result<Arc<dyn Functional>, SpecError> {
    let Some((kind, body)) = spec.split_once(':') else {
        return err("functional spec needs 'kind:...'", spec, 0);
    };
    let inner = kind.len() + 1;
    let fields = split_fields(body, inner, ',')?;
    match kind {
        "eval" => {
            let (f, fp) = fields.require("f", spec)?;
            Ok(builtins::eval_scalar(named_function(f, fp)?))
        }
        "follmer" => {
            let (f, fp) = fields.require("f", spec)?;
            let g = match f {
                "square" => VecC2Fn::square_norm(),
                "identity" | "id" | "sum" => VecC2Fn::coordinate_sum(),
                other => VecC2Fn::from_scalar(named_function(other, fp)?),
            };
            Ok(builtins::follmer_grad(g, grid.clone()))
        }
        "qvint" => {
            let (phi, pp) = fields.require("phi", spec)?;
            let m = match phi {
                "identity" | "id" => MatFn::identity(),
                other => MatFn::from_scalar(named_function(other, pp)?),
            };
            Ok(builtins::qv_integral(m, grid.clone()))
        }
        "qveval" => {
            let (f, fp) = fields.require("f", spec)?;
            Ok(builtins::qv_eval(
                VecC2Fn::from_scalar(named_function(f, fp)?),
                grid.clone(),
            ))
        }
        "affine" => {
            let (a, ap) = fields.require("a", spec)?;
            let (b, bp) = fields.require("b", spec)?;
            Ok(builtins::markov_affine(
                parse_f64(a, ap)?,
                vec![parse_f64(b, bp)?],
            ))
        }
        "oneform" => {
            let (f, fp) = fields.require("f", spec)?;
            Ok(builtins::bracket_1form(
                vec![named_function(f, fp)?],
                grid.clone(),
            ))
        }
        "time" => {
            let (f, fp) = fields.require("f", spec)?;
            Ok(builtins::time_fn(named_function(f, fp)?))
        }
        other => err(
            "unknown functional kind (eval|follmer|qvint|qveval|affine|oneform|time)",
            other,
            0,
        ),
    }
}

/// Parse an integrand spec for left Riemann sums.
pub fn parse_integrand(spec: &str, grid: &Partition) -> Result<Integrand, SpecError> {
    if let Some(rest) = spec.strip_prefix("grad:") {
        let f = parse_functional(rest, grid)?;
        return Ok(Integrand::Grad(f));
    }
    let Some((kind, body)) = spec.split_once(':') else {
        return err("integrand spec needs 'kind:...'", spec, 0);
    };
    let inner = kind.len() + 1;
    let fields = split_fields(body, inner, ',')?;
    match kind {
        "const" => {
            let (c, cp) = fields.require("c", spec)?;
            Ok(Integrand::constant(parse_f64(c, cp)?))
        }
        "left" => {
            let (f, fp) = fields.require("f", spec)?;
            let g = named_function(f, fp)?;
            let gf = g.f.clone();
            Ok(Integrand::left_value(move |u| gf(u)))
        }
        "oneform" => {
            let (f, fp) = fields.require("f", spec)?;
            Ok(Integrand::OneForm(vec![named_function(f, fp)?]))
        }
        other => err("unknown integrand kind (const|left|oneform|grad)", other, 0),
    }
}
