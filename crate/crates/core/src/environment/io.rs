//! Canonical text serialization of environments.
//!
//! ```text
//! # hydrolim environment v1
//! family = torus-lattice
//! dim = 1
//! level = 4
//! scaling = 4.0000000000000000e0
//! seed = none
//! geometry = torus:4
//! param.<key> = <value>      (zero or more)
//! sites = 4
//! <index> <x> [<y>]
//! edges = 4
//! <i> <j> <rate>
//! ```
//!
//! Floats are written with 17 significant digits so a read-back is exact, and
//! edges are sorted by `(i, j)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{Edge, Environment, FamilyKind, FamilyTag, Geometry};
use crate::error::{Error, Result};

const MAGIC: &str = "# hydrolim environment v1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_environment<W: Write>(env: &Environment, mut out: W) -> Result<()> {
    let mut s = String::new();
    let tag = env.tag();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "family = {}", tag.kind).unwrap();
    writeln!(s, "dim = {}", env.dim()).unwrap();
    writeln!(s, "level = {}", env.level()).unwrap();
    writeln!(s, "scaling = {}", num(env.scaling())).unwrap();
    match tag.seed {
        Some(seed) => writeln!(s, "seed = {seed}").unwrap(),
        None => writeln!(s, "seed = none").unwrap(),
    }
    match env.geometry() {
        Geometry::Torus { n } => writeln!(s, "geometry = torus:{n}").unwrap(),
        Geometry::Pointwise => writeln!(s, "geometry = pointwise").unwrap(),
    }
    for (k, v) in &tag.params {
        writeln!(s, "param.{k} = {v}").unwrap();
    }
    writeln!(s, "sites = {}", env.site_count()).unwrap();
    for (i, p) in env.coords().iter().enumerate() {
        if env.dim() == 1 {
            writeln!(s, "{i} {}", num(p[0])).unwrap();
        } else {
            writeln!(s, "{i} {} {}", num(p[0]), num(p[1])).unwrap();
        }
    }
    writeln!(s, "edges = {}", env.edges().len()).unwrap();
    for e in env.edges() {
        writeln!(s, "{} {} {}", e.i, e.j, num(e.rate)).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn key_value(&mut self) -> Result<(String, String)> {
        let l = self.next_line()?;
        let (k, v) = l
            .split_once(" = ")
            .ok_or_else(|| self.err(format!("expected `key = value`, got `{l}`")))?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    fn expect(&mut self, key: &str) -> Result<String> {
        let (k, v) = self.key_value()?;
        if k != key {
            return Err(self.err(format!("expected `{key}`, got `{k}`")));
        }
        Ok(v)
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }
}

pub fn read_environment<R: BufRead>(input: R) -> Result<Environment> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.next_line()? != MAGIC {
        return Err(lines.err("missing environment header"));
    }
    let family: FamilyKind = lines.expect("family")?.parse()?;
    let dim: usize = {
        let v = lines.expect("dim")?;
        lines.parse(&v)?
    };
    let level: u32 = {
        let v = lines.expect("level")?;
        lines.parse(&v)?
    };
    let scaling: f64 = {
        let v = lines.expect("scaling")?;
        lines.parse(&v)?
    };
    let seed = match lines.expect("seed")?.as_str() {
        "none" => None,
        v => Some(lines.parse::<u64>(v)?),
    };
    let geometry = match lines.expect("geometry")?.as_str() {
        "pointwise" => Geometry::Pointwise,
        v => match v.strip_prefix("torus:") {
            Some(n) => Geometry::Torus { n: lines.parse(n)? },
            None => return Err(lines.err(format!("unknown geometry `{v}`"))),
        },
    };
    let mut tag = FamilyTag::new(family);
    tag.seed = seed;
    let site_count: usize = loop {
        let (k, v) = lines.key_value()?;
        if let Some(key) = k.strip_prefix("param.") {
            tag.params.push((key.to_string(), v));
        } else if k == "sites" {
            break lines.parse(&v)?;
        } else {
            return Err(lines.err(format!("unexpected key `{k}`")));
        }
    };
    let mut coords = Vec::with_capacity(site_count);
    for i in 0..site_count {
        let l = lines.next_line()?;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != dim + 1 || lines.parse::<usize>(fields[0])? != i {
            return Err(lines.err(format!("bad site row `{l}`")));
        }
        let x = lines.parse(fields[1])?;
        let y = if dim == 2 { lines.parse(fields[2])? } else { 0.0 };
        coords.push([x, y]);
    }
    let edge_count: usize = {
        let v = lines.expect("edges")?;
        lines.parse(&v)?
    };
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let l = lines.next_line()?;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(lines.err(format!("bad edge row `{l}`")));
        }
        edges.push(Edge {
            i: lines.parse(fields[0])?,
            j: lines.parse(fields[1])?,
            rate: lines.parse(fields[2])?,
        });
    }
    Environment::new(dim, level, scaling, geometry, coords, edges, tag)
}
