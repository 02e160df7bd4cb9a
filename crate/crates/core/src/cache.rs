//! Text dump of a built plane.
//!
//! Layout (ASCII, `\n` line endings, single spaces):
//!
//! ```text
//! tfree-plane v1
//! field <p> <r> <q>
//! modulus <c_0> ... <c_r>
//! points <n>
//! <x> <y> <z>            # n rows, id order
//! lines <n>
//! <a> <b> <c>            # n rows, id order
//! incidence
//! <hex>                  # n rows: lines through point i, byte j = lines 8j..8j+7, bit b = line 8j+b
//! end
//! ```
//!
//! Coordinates are field element indices. The dump is the same byte sequence on
//! every platform for a given `q`.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use crate::bitset::LineSet;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::plane::{Plane, Triple};

const MAGIC: &str = "tfree-plane v1";

/// Environment variable naming a directory for plane dumps.
pub const CACHE_ENV: &str = "TFREE_CACHE_DIR";

pub fn write_plane<W: Write>(plane: &Plane, mut w: W) -> Result<()> {
    let f = plane.field();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "field {} {} {}", f.p(), f.r(), f.q())?;
    let modulus: Vec<String> = f.modulus().iter().map(u32::to_string).collect();
    writeln!(w, "modulus {}", modulus.join(" "))?;
    writeln!(w, "points {}", plane.num_points())?;
    for t in plane.points() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "lines {}", plane.num_lines())?;
    for t in plane.lines() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "incidence")?;
    for p in 0..plane.num_points() {
        writeln!(w, "{}", plane.incidence_row(p).to_hex())?;
    }
    writeln!(w, "end")?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Cache(msg.into())
}

fn parse_nums(line: &str, prefix: &str) -> Result<Vec<u32>> {
    let rest = line
        .strip_prefix(prefix)
        .ok_or_else(|| bad(format!("expected `{prefix}`, found `{line}`")))?;
    rest.split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad number `{t}`"))))
        .collect()
}

fn parse_triples(lines: &mut impl Iterator<Item = String>, n: usize) -> Result<Vec<Triple>> {
    (0..n)
        .map(|_| {
            let l = lines.next().ok_or_else(|| bad("truncated"))?;
            let v = parse_nums(&l, "")?;
            <[u32; 3]>::try_from(v).map_err(|_| bad(format!("bad triple `{l}`")))
        })
        .collect()
}

/// Reads a dump, checking it against a freshly built field and the plane
/// counting axioms.
pub fn read_plane<R: BufRead>(r: R) -> Result<Plane> {
    let mut lines = r.lines().map_while(|l| l.ok());
    let mut next = || lines.next().ok_or_else(|| bad("truncated"));
    if next()? != MAGIC {
        return Err(bad("unknown header"));
    }
    let fp = parse_nums(&next()?, "field ")?;
    let [p, r, q] = <[u32; 3]>::try_from(fp).map_err(|_| bad("bad field line"))?;
    let field = FieldSpec::new(p, r).map_err(|e| bad(e.to_string()))?;
    if field.q() != q {
        return Err(bad("field order mismatch"));
    }
    if parse_nums(&next()?, "modulus ")? != field.modulus() {
        return Err(bad("modulus differs from the canonical one"));
    }
    let n = parse_nums(&next()?, "points ")?;
    let n = *n.first().ok_or_else(|| bad("missing point count"))? as usize;
    let expected = (q * q + q + 1) as usize;
    if n != expected {
        return Err(bad(format!("{n} points, expected {expected}")));
    }
    let mut it = std::iter::from_fn(|| next().ok());
    let points = parse_triples(&mut it, n)?;
    let nl = parse_nums(&it.next().ok_or_else(|| bad("truncated"))?, "lines ")?;
    if nl.first().copied() != Some(n as u32) {
        return Err(bad("line count mismatch"));
    }
    let lines_v = parse_triples(&mut it, n)?;
    if it.next().as_deref() != Some("incidence") {
        return Err(bad("missing incidence section"));
    }
    let incidence = (0..n)
        .map(|_| {
            let h = it.next().ok_or_else(|| bad("truncated"))?;
            LineSet::from_hex(n, &h).ok_or_else(|| bad("bad incidence row"))
        })
        .collect::<Result<Vec<_>>>()?;
    if it.next().as_deref() != Some("end") {
        return Err(bad("missing end marker"));
    }
    if incidence.iter().any(|s| s.count() != q as usize + 1) {
        return Err(bad("incidence row with wrong degree"));
    }
    Ok(Plane::from_parts(field, points, lines_v, incidence))
}

pub fn cache_path(dir: &Path, q: u32) -> PathBuf {
    dir.join(format!("pg2-{q}.txt"))
}

/// Loads PG(2,q) from `dir` if a valid dump exists there, otherwise builds it
/// and writes the dump.
pub fn load_or_build(q: u64, dir: Option<&Path>) -> Result<Plane> {
    let field = FieldSpec::with_order(q)?;
    let Some(dir) = dir else {
        return Ok(Plane::new(field));
    };
    let path = cache_path(dir, field.q());
    if let Ok(file) = fs::File::open(&path) {
        if let Ok(plane) = read_plane(std::io::BufReader::new(file)) {
            if plane.field() == &field {
                return Ok(plane);
            }
        }
    }
    let plane = Plane::new(field);
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_plane(&plane, &mut buf)?;
    fs::write(&path, buf)?;
    Ok(plane)
}

/// Like [`load_or_build`], with the directory taken from `TFREE_CACHE_DIR`.
pub fn load_or_build_from_env(q: u64) -> Result<Plane> {
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    load_or_build(q, dir.as_deref())
}
