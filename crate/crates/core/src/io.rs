//! Text formats for complexes, chains, sample sets and grid estimates.
//!
//! * `.scx`: one maximal simplex per line as space-separated vertex
//!   indices; `#` starts a comment. Faces are added by closure.
//! * `.dcx`: a `dims n0 n1 ... nK` line, then for each `k >= 1` a `B<k>`
//!   line followed by `n_{k-1}` rows of `n_k` integers. An optional
//!   `O<k> s_0 ... s_{n_k - 1}` line (entries ±1) reorients `k`-cells.
//!   Files whose matrices violate `B_k B_{k+1} = 0` are rejected.
//! * chains: `cell,value` for scalar systems, `edge,c0,...,c{T-1}` for
//!   function-valued chains.
//! * samples: `edge,t,y`.
//! * grid estimates: a `# grid=` line with the instants, then
//!   `edge,t_0,...,t_99`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;

use crate::baselines::GridEstimate;
use crate::coeff::{ChainData, ChainVector, CoefficientSystem};
use crate::complex::{
    canonical_complex, random_complex, validate, ChainComplexRep, IntMatrix, SimplicialComplex,
};
use crate::error::{Error, Result};
use crate::learn::{eval_grid_points, SampleSet, GRID_POINTS};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_scx(text: &str) -> Result<SimplicialComplex> {
    let mut simplices = Vec::new();
    for (line, l) in data_lines(text) {
        let s: Vec<usize> = l
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("'{tok}' is not a vertex index")))
            })
            .collect::<Result<_>>()?;
        simplices.push(s);
    }
    SimplicialComplex::from_simplices(0, simplices)
}

pub fn format_scx(sc: &SimplicialComplex) -> String {
    let mut out = String::new();
    for s in sc.maximal_simplices() {
        let line: Vec<String> = s.iter().map(usize::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_complex(path: impl AsRef<Path>) -> Result<SimplicialComplex> {
    parse_scx(&fs::read_to_string(path)?)
}

pub fn save_complex(path: impl AsRef<Path>, sc: &SimplicialComplex) -> Result<()> {
    fs::write(path, format_scx(sc))?;
    Ok(())
}

fn parse_ints(line: usize, l: &str) -> Result<Vec<i64>> {
    l.split_whitespace()
        .map(|tok| {
            tok.parse::<i64>()
                .map_err(|_| Error::parse(line, format!("'{tok}' is not an integer")))
        })
        .collect()
}

pub fn parse_dcx(text: &str) -> Result<ChainComplexRep> {
    let mut lines = data_lines(text).peekable();
    let (line, head) = lines.next().ok_or_else(|| Error::parse(0, "empty file"))?;
    let dims: Vec<usize> = match head.strip_prefix("dims") {
        Some(rest) => rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("'{tok}' is not a count")))
            })
            .collect::<Result<_>>()?,
        None => return Err(Error::parse(line, "expected 'dims n0 n1 ...'")),
    };
    let top = dims.len().saturating_sub(1);
    let mut boundaries: Vec<Option<IntMatrix>> = vec![None; top];
    let mut orientations: Vec<(usize, usize, Vec<i64>)> = Vec::new();
    let mut last_line = line;

    while let Some((line, l)) = lines.next() {
        last_line = line;
        let (tag, rest) = l.split_at(1);
        let mut parts = rest.splitn(2, char::is_whitespace);
        let k: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|k| (1..=top).contains(k) || (tag == "O" && *k <= top))
            .ok_or_else(|| Error::parse(line, format!("unexpected line '{l}'")))?;
        match tag {
            "B" => {
                if boundaries[k - 1].is_some() {
                    return Err(Error::parse(line, format!("B{k} given twice")));
                }
                let (rows, cols) = (dims[k - 1], dims[k]);
                let mut data = Vec::with_capacity(rows * cols);
                if cols > 0 {
                    for _ in 0..rows {
                        let (rl, row) = lines
                            .next()
                            .ok_or_else(|| Error::parse(line, format!("B{k} ends early")))?;
                        last_line = rl;
                        let vals = parse_ints(rl, row)?;
                        if vals.len() != cols {
                            return Err(Error::parse(
                                rl,
                                format!("expected {cols} entries, got {}", vals.len()),
                            ));
                        }
                        data.extend(vals);
                    }
                }
                boundaries[k - 1] = Some(IntMatrix::from_row_major(rows, cols, data)?);
            }
            "O" => {
                let signs = parse_ints(line, parts.next().unwrap_or(""))?;
                orientations.push((line, k, signs));
            }
            _ => return Err(Error::parse(line, format!("unexpected line '{l}'"))),
        }
    }
    let boundaries: Vec<IntMatrix> = boundaries
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| Error::parse(last_line, format!("missing block B{}", i + 1))))
        .collect::<Result<_>>()?;
    let mut rep = ChainComplexRep::new(dims, boundaries)?;
    for (line, k, signs) in orientations {
        rep.reorient(k, &signs)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }
    let report = validate(&rep);
    if let Some(v) = report.violations.first() {
        return Err(Error::parse(
            last_line,
            format!(
                "not a chain complex: {} nonzero entries in B_k B_(k+1), first at k={} ({}, {}) = {}",
                report.violations.len(),
                v.k,
                v.row,
                v.col,
                v.value
            ),
        ));
    }
    Ok(rep)
}

pub fn format_dcx(rep: &ChainComplexRep) -> String {
    let mut out = String::from("dims");
    for d in rep.dims() {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    for k in 1..=rep.top_dim().unwrap_or(0) {
        out.push_str(&format!("B{k}\n"));
        let b = rep.boundary(k);
        if b.ncols() == 0 {
            continue;
        }
        for r in 0..b.nrows() {
            let row: Vec<String> = b.row(r).iter().map(i64::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn load_delta(path: impl AsRef<Path>) -> Result<ChainComplexRep> {
    parse_dcx(&fs::read_to_string(path)?)
}

pub fn save_delta(path: impl AsRef<Path>, rep: &ChainComplexRep) -> Result<()> {
    fs::write(path, format_dcx(rep))?;
    Ok(())
}

/// Parses `random:n:edge_prob:fill_prob:seed`; `None` for other sources.
pub fn parse_random_spec(s: &str) -> Result<Option<SimplicialComplex>> {
    let Some(rest) = s.strip_prefix("random:") else {
        return Ok(None);
    };
    let parts: Vec<&str> = rest.split(':').collect();
    let bad = || {
        Error::InvalidArgument(format!(
            "expected random:n:edge_prob:fill_prob:seed, got '{s}'"
        ))
    };
    if parts.len() != 4 {
        return Err(bad());
    }
    let n = parts[0].parse().map_err(|_| bad())?;
    let pe = parts[1].parse().map_err(|_| bad())?;
    let pf = parts[2].parse().map_err(|_| bad())?;
    let seed = parts[3].parse().map_err(|_| bad())?;
    random_complex(n, pe, pf, seed).map(Some)
}

/// Resolves a complex argument: a `.scx`/`.dcx` file, a canonical name
/// (`rp2`, `cycle(n)`, ...) or `random:n:edge_prob:fill_prob:seed`.
pub fn resolve_complex(source: &str) -> Result<ChainComplexRep> {
    let source = source.trim();
    let path = Path::new(source);
    if path.is_file() {
        return match path.extension().and_then(|e| e.to_str()) {
            Some("dcx") => load_delta(path),
            _ => Ok(load_complex(path)?.to_rep()),
        };
    }
    if let Some(sc) = parse_random_spec(source)? {
        return Ok(sc.to_rep());
    }
    match canonical_complex(source) {
        Ok(rep) => Ok(rep),
        Err(Error::InvalidArgument(msg)) => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("'{source}' is neither a readable file nor a known complex ({msg})"),
        ))),
        Err(e) => Err(e),
    }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<&str> {
    rec.get(i)
        .ok_or_else(|| Error::parse(line, format!("missing column {i}")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("'{s}' is not a number")))
}

fn rec_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Writes a chain as `cell,value` or, for function-valued chains,
/// `edge,c0,...`.
pub fn write_chain<W: Write>(w: W, x: &ChainVector) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    match x.data() {
        ChainData::Fourier(m) => {
            let mut head = vec!["edge".to_string()];
            head.extend((0..m.ncols()).map(|j| format!("c{j}")));
            wr.write_record(&head)?;
            for r in 0..m.nrows() {
                let mut row = vec![r.to_string()];
                row.extend(m.row(r).iter().map(|v| v.to_string()));
                wr.write_record(&row)?;
            }
        }
        _ => {
            wr.write_record(["cell", "value"])?;
            for i in 0..x.len() {
                let v = match x.data() {
                    ChainData::Real(v) => v[i].to_string(),
                    ChainData::Integer(v) => v[i].to_string(),
                    ChainData::ModN { values, .. } => values[i].to_string(),
                    ChainData::Fourier(_) => unreachable!(),
                };
                wr.write_record([i.to_string(), v])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Reads a chain of the given degree. The `edge,c0,...` header selects a
/// function-valued chain; otherwise values are parsed in `system`.
pub fn read_chain<R: Read>(r: R, degree: isize, system: CoefficientSystem) -> Result<ChainVector> {
    let mut rd = csv_reader(r);
    let head = rd.headers()?.clone();
    let is_fn = head.get(0) == Some("edge") && head.len() >= 2 && head.get(1) == Some("c0");
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = rec_line(&rec);
        let idx: usize = field(&rec, 0, line)?
            .parse()
            .map_err(|_| Error::parse(line, "cell index must be a non-negative integer"))?;
        if idx != i {
            return Err(Error::parse(
                line,
                format!("expected cell {i}, found {idx}"),
            ));
        }
        rows.push(rec);
    }
    if is_fn {
        let t = head.len() - 1;
        if t % 2 == 0 {
            return Err(Error::parse(
                1,
                format!("function-valued chains need an odd number of coefficients, got {t}"),
            ));
        }
        let mut m = DMatrix::zeros(rows.len(), t);
        for (r, rec) in rows.iter().enumerate() {
            let line = rec_line(rec);
            for j in 0..t {
                m[(r, j)] = parse_f64(field(rec, j + 1, line)?, line)?;
            }
        }
        return ChainVector::fourier(degree, m);
    }
    if head.get(0) != Some("cell") || head.get(1) != Some("value") {
        return Err(Error::parse(
            1,
            "expected header 'cell,value' or 'edge,c0,...'",
        ));
    }
    let vals: Vec<&str> = rows
        .iter()
        .map(|rec| field(rec, 1, rec_line(rec)))
        .collect::<Result<_>>()?;
    let line_of = |i: usize| rec_line(&rows[i]);
    match system {
        CoefficientSystem::Real => {
            let v: Vec<f64> = vals
                .iter()
                .enumerate()
                .map(|(i, s)| parse_f64(s, line_of(i)))
                .collect::<Result<_>>()?;
            Ok(ChainVector::real(degree, DVector::from_vec(v)))
        }
        CoefficientSystem::Integer => {
            let v: Vec<BigInt> = vals
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.parse()
                        .map_err(|_| Error::parse(line_of(i), format!("'{s}' is not an integer")))
                })
                .collect::<Result<_>>()?;
            Ok(ChainVector::integer(degree, v))
        }
        CoefficientSystem::ModN(n) => {
            let v: Vec<i64> = vals
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.parse()
                        .map_err(|_| Error::parse(line_of(i), format!("'{s}' is not an integer")))
                })
                .collect::<Result<_>>()?;
            ChainVector::modular(degree, n, &v)
        }
        CoefficientSystem::FourierFn { .. } => Err(Error::parse(
            1,
            "function-valued chains need the 'edge,c0,...' header",
        )),
    }
}

pub fn save_chain(path: impl AsRef<Path>, x: &ChainVector) -> Result<()> {
    write_chain(fs::File::create(path)?, x)
}

pub fn load_chain(
    path: impl AsRef<Path>,
    degree: isize,
    system: CoefficientSystem,
) -> Result<ChainVector> {
    read_chain(fs::File::open(path)?, degree, system)
}

/// Writes `edge,t,y` rows after a metadata comment.
pub fn write_samples<W: Write>(mut w: W, s: &SampleSet) -> Result<()> {
    writeln!(
        w,
        "# samples_per_edge={} sigma={} seed={}",
        s.samples_per_edge, s.sigma, s.seed
    )?;
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["edge", "t", "y"])?;
    for (e, obs) in s.edges.iter().enumerate() {
        for (t, y) in obs {
            wr.write_record([e.to_string(), t.to_string(), y.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

fn metadata(text: &str, key: &str) -> Option<String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .flat_map(|l| l.trim_start_matches('#').split_whitespace())
        .find_map(|kv| {
            kv.strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .map(str::to_string)
        })
}

/// Reads an `edge,t,y` file. `n_edges` fixes the number of edges (edges
/// without rows are an error); every edge needs the same number of samples.
pub fn read_samples<R: Read>(mut r: R, n_edges: usize) -> Result<SampleSet> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut rd = csv_reader(text.as_bytes());
    let head = rd.headers()?.clone();
    if head.iter().collect::<Vec<_>>() != ["edge", "t", "y"] {
        return Err(Error::parse(1, "expected header 'edge,t,y'"));
    }
    let mut edges: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_edges];
    for rec in rd.records() {
        let rec = rec?;
        let line = rec_line(&rec);
        let e: usize = field(&rec, 0, line)?
            .parse()
            .map_err(|_| Error::parse(line, "edge index must be a non-negative integer"))?;
        if e >= n_edges {
            return Err(Error::parse(
                line,
                format!("edge {e} out of range (complex has {n_edges})"),
            ));
        }
        let t = parse_f64(field(&rec, 1, line)?, line)?;
        let y = parse_f64(field(&rec, 2, line)?, line)?;
        edges[e].push((t, y));
    }
    let m = edges.first().map_or(0, Vec::len);
    if m == 0 || edges.iter().any(|o| o.len() != m) {
        return Err(Error::parse(
            0,
            "every edge needs the same, positive number of samples",
        ));
    }
    let sigma = metadata(&text, "sigma")
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN);
    let seed = metadata(&text, "seed")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    Ok(SampleSet {
        edges,
        samples_per_edge: m,
        sigma,
        seed,
    })
}

pub fn save_samples(path: impl AsRef<Path>, s: &SampleSet) -> Result<()> {
    write_samples(fs::File::create(path)?, s)
}

pub fn load_samples(path: impl AsRef<Path>, n_edges: usize) -> Result<SampleSet> {
    read_samples(fs::File::open(path)?, n_edges)
}

/// Writes a grid estimate with the grid instants in a leading comment.
pub fn write_grid<W: Write>(mut w: W, g: &GridEstimate) -> Result<()> {
    let pts: Vec<String> = eval_grid_points().iter().map(f64::to_string).collect();
    writeln!(w, "# grid={}", pts.join(";"))?;
    let mut wr = csv::Writer::from_writer(w);
    let mut head = vec!["edge".to_string()];
    head.extend((0..GRID_POINTS).map(|i| format!("t_{i}")));
    wr.write_record(&head)?;
    let v = g.values();
    for r in 0..v.nrows() {
        let mut row = vec![r.to_string()];
        row.extend(v.row(r).iter().map(f64::to_string));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(r: R) -> Result<GridEstimate> {
    let mut rd = csv_reader(r);
    let head = rd.headers()?.clone();
    if head.len() != GRID_POINTS + 1 || head.get(0) != Some("edge") {
        return Err(Error::parse(
            1,
            format!("expected header 'edge,t_0,...,t_{}'", GRID_POINTS - 1),
        ));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec_line(&rec);
        let row = (1..=GRID_POINTS)
            .map(|j| parse_f64(field(&rec, j, line)?, line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    GridEstimate::new(DMatrix::from_fn(rows.len(), GRID_POINTS, |r, c| rows[r][c]))
}
