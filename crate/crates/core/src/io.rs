//! Plain-text field files.
//!
//! ```text
//! # normsol field v1
//! kind radial
//! dim 3
//! nodes 4097
//! r_max 4e1
//! data
//! 4.3e0
//! ...
//! ```
//!
//! Cartesian files carry `shape`, `lo` and `hi` lines instead of `nodes` and
//! `r_max`. Numbers use the shortest representation that parses back to the
//! same double, so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{CartesianGrid, Grid, RadialGrid};

pub const FIELD_MAGIC: &str = "# normsol field v1";

pub fn field_to_string(u: &Field) -> String {
    let mut s = String::with_capacity(24 * u.len() + 128);
    s.push_str(FIELD_MAGIC);
    s.push('\n');
    match &**u.grid() {
        Grid::Radial(g) => {
            let _ = writeln!(s, "kind radial\ndim {}\nnodes {}\nr_max {:e}", g.dim(), g.len(), g.r_max());
        }
        Grid::Cartesian(g) => {
            let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
            let shape = g.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
            let _ = writeln!(
                s,
                "kind cartesian\ndim {}\nshape {}\nlo {}\nhi {}",
                g.dim(),
                shape,
                join(g.lo()),
                join(g.hi())
            );
        }
    }
    s.push_str("data\n");
    for v in u.values() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn save_field(u: &Field, path: &Path) -> Result<()> {
    std::fs::write(path, field_to_string(u))?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<Field> {
    parse_field(&std::fs::read_to_string(path)?)
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| perr(line, format!("bad number {tok:?}")))
}

pub fn parse_field(text: &str) -> Result<Field> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == FIELD_MAGIC => {}
        _ => return Err(perr(1, "missing field header")),
    }
    let mut kind = None;
    let mut dim = None;
    let mut nodes = None;
    let mut r_max = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut lo: Option<Vec<f64>> = None;
    let mut hi: Option<Vec<f64>> = None;
    let mut data_line = None;
    for (i, l) in lines.by_ref() {
        let ln = i + 1;
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if l == "data" {
            data_line = Some(ln);
            break;
        }
        let (key, rest) = l.split_once(char::is_whitespace).ok_or_else(|| perr(ln, "expected `key value`"))?;
        let rest = rest.trim();
        match key {
            "kind" => kind = Some(rest.to_string()),
            "dim" => dim = Some(rest.parse::<usize>().map_err(|_| perr(ln, "bad dim"))?),
            "nodes" => nodes = Some(rest.parse::<usize>().map_err(|_| perr(ln, "bad node count"))?),
            "r_max" => r_max = Some(parse_f64(rest, ln)?),
            "shape" => {
                shape = Some(
                    rest.split_whitespace()
                        .map(|t| t.parse::<usize>().map_err(|_| perr(ln, "bad shape")))
                        .collect::<Result<_>>()?,
                )
            }
            "lo" => lo = Some(rest.split_whitespace().map(|t| parse_f64(t, ln)).collect::<Result<_>>()?),
            "hi" => hi = Some(rest.split_whitespace().map(|t| parse_f64(t, ln)).collect::<Result<_>>()?),
            _ => return Err(perr(ln, format!("unknown key {key:?}"))),
        }
    }
    let data_line = data_line.ok_or_else(|| perr(0, "missing data section"))?;
    let dim = dim.ok_or_else(|| perr(data_line, "missing dim"))?;
    let grid = match kind.as_deref() {
        Some("radial") => {
            let n = nodes.ok_or_else(|| perr(data_line, "missing nodes"))?;
            let r = r_max.ok_or_else(|| perr(data_line, "missing r_max"))?;
            Grid::Radial(RadialGrid::new(dim, r, n)?)
        }
        Some("cartesian") => {
            let shape = shape.ok_or_else(|| perr(data_line, "missing shape"))?;
            let lo = lo.ok_or_else(|| perr(data_line, "missing lo"))?;
            let hi = hi.ok_or_else(|| perr(data_line, "missing hi"))?;
            if shape.len() != dim {
                return Err(perr(data_line, "shape disagrees with dim"));
            }
            Grid::Cartesian(CartesianGrid::new(&shape, &lo, &hi)?)
        }
        other => return Err(perr(data_line, format!("unknown grid kind {other:?}"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for (i, l) in lines {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        values.push(parse_f64(l, i + 1)?);
    }
    if values.len() != grid.len() {
        return Err(perr(data_line, format!("expected {} samples, found {}", grid.len(), values.len())));
    }
    Field::new(Arc::new(grid), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Arc::new(Grid::from(CartesianGrid::new(&[5, 4], &[-1.0, -0.3], &[1.0, 2.7]).unwrap()));
        let u = Field::from_fn(g, |x| (x[0] * 1.234567).sin() / 3.0 + x[1] * 1e-300).unwrap();
        let back = parse_field(&field_to_string(&u)).unwrap();
        assert_eq!(**back.grid(), **u.grid());
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_truncated() {
        let g = Arc::new(Grid::from(RadialGrid::new(3, 2.0, 9).unwrap()));
        let s = field_to_string(&Field::zeros(g));
        let cut: String = s.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(parse_field(&cut).is_err());
    }
}
