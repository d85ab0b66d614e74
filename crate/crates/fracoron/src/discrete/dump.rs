//! Text dump format for grid fields.
//!
//! Header line `FRACORON-FIELD v1 N=<dim> s=<s> res=<r> bbox=<lo..hi,...>`,
//! then node values row-major, one per line, 17 significant digits.

use std::io::{BufRead, Write};

use crate::domain::{make_grid, AnnulusDomain, GridFunction};
use crate::error::{Error, Result};
use crate::params::FracParams;

/// Formats a float with 17 significant digits (round-trip exact).
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the dump to any sink.
pub fn write_field(
    out: &mut impl Write,
    u: &GridFunction,
    params: &FracParams,
) -> std::io::Result<()> {
    let bbox = u.domain().bounding_box();
    let dim = u.domain().dim();
    let bbox_str = (0..dim)
        .map(|k| format!("{}..{}", fmt_g17(bbox.lo[k]), fmt_g17(bbox.hi[k])))
        .collect::<Vec<_>>()
        .join(",");
    writeln!(
        out,
        "FRACORON-FIELD v1 N={} s={} res={} bbox={}",
        dim,
        fmt_g17(params.s()),
        u.resolution(),
        bbox_str
    )?;
    for v in u.values() {
        writeln!(out, "{}", fmt_g17(*v))?;
    }
    Ok(())
}

/// Reads a dump produced by [`write_field`]; the annulus geometry cannot be
/// recovered from the header, so it must be supplied.
pub fn read_field(
    input: &mut impl BufRead,
    domain: &AnnulusDomain,
) -> Result<(GridFunction, f64)> {
    let mut header = String::new();
    input
        .read_line(&mut header)
        .map_err(|e| Error::Parse(format!("reading header: {e}")))?;
    let header = header.trim();
    let mut parts = header.split_whitespace();
    if parts.next() != Some("FRACORON-FIELD") || parts.next() != Some("v1") {
        return Err(Error::Parse(format!("bad magic in header: {header}")));
    }
    let mut dim = None;
    let mut s = None;
    let mut res = None;
    for kv in parts {
        let Some((key, value)) = kv.split_once('=') else {
            return Err(Error::Parse(format!("bad header field: {kv}")));
        };
        match key {
            "N" => dim = value.parse::<usize>().ok(),
            "s" => s = value.parse::<f64>().ok(),
            "res" => res = value.parse::<usize>().ok(),
            "bbox" => {}
            _ => return Err(Error::Parse(format!("unknown header key: {key}"))),
        }
    }
    let (Some(dim), Some(s), Some(res)) = (dim, s, res) else {
        return Err(Error::Parse("header missing N, s or res".into()));
    };
    if dim != domain.dim() {
        return Err(Error::Parse(format!(
            "dump dimension {dim} does not match domain dimension {}",
            domain.dim()
        )));
    }
    let mut grid = make_grid(domain, res)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in input.lines() {
        let line = line.map_err(|e| Error::Parse(format!("reading values: {e}")))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad value {t}: {e}")))?,
        );
    }
    if values.len() != grid.len() {
        return Err(Error::Parse(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    for (idx, v) in values.iter().enumerate() {
        if grid.mask()[idx] {
            grid.set(idx, *v);
        } else if *v != 0.0 {
            return Err(Error::Parse(format!(
                "nonzero value {v} at exterior node {idx}"
            )));
        }
    }
    Ok((grid, s))
}
