//! Text checkpoints:
//!
//! ```text
//! revloc-params 1
//! meta <key> <value>        (any number, in order)
//! param <name> <rank> <dim>...
//! <values, space separated, on one line>
//! ```
//!
//! Values are printed in shortest round-trip form, so loading restores the
//! exact bits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::param::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &str = "revloc-params 1";

pub fn save<W: Write>(mut w: W, store: &ParamStore, meta: &[(String, String)]) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    for (k, v) in meta {
        if k.contains(char::is_whitespace) || v.contains('\n') {
            return Err(Error::Checkpoint {
                line: 0,
                msg: format!("meta entry {k:?} cannot be written"),
            });
        }
        writeln!(w, "meta {k} {v}")?;
    }
    for (_, p) in store.iter() {
        write!(w, "param {} {}", p.name, p.tensor.shape().len())?;
        for d in p.tensor.shape() {
            write!(w, " {d}")?;
        }
        writeln!(w)?;
        let mut first = true;
        for x in p.tensor.data() {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(w, "{x:?}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load<R: BufRead>(r: R) -> Result<(ParamStore, Vec<(String, String)>)> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let bad = |line: usize, msg: String| Error::Checkpoint { line, msg };
    match lines.next() {
        Some((_, Ok(l))) if l == MAGIC => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(bad(1, "not a parameter checkpoint".into())),
    }
    let mut store = ParamStore::new();
    let mut meta = Vec::new();
    while let Some((n, line)) = lines.next() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.push((k.to_string(), v.to_string()));
            continue;
        }
        let mut parts = line.split(' ');
        if parts.next() != Some("param") {
            return Err(bad(n, format!("unexpected line {line:?}")));
        }
        let name = parts.next().ok_or_else(|| bad(n, "missing parameter name".into()))?;
        let nums: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| bad(n, format!("bad dimension {p:?}"))))
            .collect::<Result<_>>()?;
        let (&rank, shape) = nums.split_first().ok_or_else(|| bad(n, "missing rank".into()))?;
        if shape.len() != rank {
            return Err(bad(n, format!("rank {rank} but {} dimensions", shape.len())));
        }
        let (vn, values) = lines.next().ok_or_else(|| bad(n + 1, format!("missing values for {name}")))?;
        let values = values?;
        let data: Vec<f64> = values
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| bad(vn, format!("bad value {v:?}"))))
            .collect::<Result<_>>()?;
        let tensor = Tensor::new(shape.to_vec(), data).map_err(|e| bad(vn, e.to_string()))?;
        store.add(name, tensor).map_err(|e| bad(n, e.to_string()))?;
    }
    Ok((store, meta))
}
