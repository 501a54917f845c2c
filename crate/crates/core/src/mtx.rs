//! Matrix Market reader and writer.
//!
//! Supported: `matrix coordinate|array`, fields `real`/`integer` (and
//! `pattern` on request), symmetries `general`, `symmetric` and
//! `skew-symmetric`. Symmetric storage is expanded to the full matrix.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::RowAccessMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Read `pattern` files with every stored entry equal to one.
    pub pattern_as_ones: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Header {
    format: Format,
    field: Field,
    symmetry: Symmetry,
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    path: PathBuf,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_raw(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            Some(l) => {
                self.line += 1;
                Ok(Some(l?))
            }
            None => Ok(None),
        }
    }

    /// Next non-blank, non-comment line.
    fn next_data(&mut self) -> Result<Option<String>> {
        while let Some(l) = self.next_raw()? {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some(t.to_string()));
        }
        Ok(None)
    }
}

fn parse_header<R: BufRead>(lines: &mut Lines<R>) -> Result<Header> {
    let first = lines
        .next_raw()?
        .ok_or_else(|| lines.err("empty file"))?;
    let tokens: Vec<String> = first.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(lines.err("expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    if tokens[1] != "matrix" {
        return Err(lines.err(format!("unsupported object `{}`", tokens[1])));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(lines.err(format!("unsupported format `{other}`"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" => Field::Pattern,
        "complex" => return Err(lines.err("complex matrices are not supported")),
        other => return Err(lines.err(format!("unsupported field `{other}`"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(lines.err(format!("unsupported symmetry `{other}`"))),
    };
    if field == Field::Pattern && format == Format::Array {
        return Err(lines.err("pattern field requires coordinate format"));
    }
    Ok(Header {
        format,
        field,
        symmetry,
    })
}

fn parse_f64<R: BufRead>(lines: &Lines<R>, tok: &str) -> Result<f64> {
    tok.replace(['D', 'd'], "e")
        .parse::<f64>()
        .map_err(|_| lines.err(format!("bad number `{tok}`")))
}

fn parse_usize<R: BufRead>(lines: &Lines<R>, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| lines.err(format!("bad integer `{tok}`")))
}

/// Parsed dimensions and `(row, col, value)` entries, 0-based, expanded.
fn parse_entries<R: BufRead>(
    reader: R,
    path: &Path,
    opts: ReadOptions,
) -> Result<(usize, usize, Vec<(usize, usize, f64)>)> {
    let mut lines = Lines {
        inner: reader.lines(),
        path: path.to_path_buf(),
        line: 0,
    };
    let header = parse_header(&mut lines)?;
    if header.field == Field::Pattern && !opts.pattern_as_ones {
        return Err(lines.err("pattern matrices carry no values (enable pattern-as-ones to read them)"));
    }
    let size = lines
        .next_data()?
        .ok_or_else(|| lines.err("missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    let mut entries = Vec::new();
    let (m, n) = match header.format {
        Format::Coordinate => {
            if dims.len() != 3 {
                return Err(lines.err("coordinate size line needs `rows cols nnz`"));
            }
            let (m, n, nnz) = (
                parse_usize(&lines, dims[0])?,
                parse_usize(&lines, dims[1])?,
                parse_usize(&lines, dims[2])?,
            );
            entries.reserve(nnz);
            for _ in 0..nnz {
                let l = lines
                    .next_data()?
                    .ok_or_else(|| lines.err(format!("expected {nnz} entries")))?;
                let t: Vec<&str> = l.split_whitespace().collect();
                let want = if header.field == Field::Pattern { 2 } else { 3 };
                if t.len() < want {
                    return Err(lines.err(format!("entry needs {want} fields")));
                }
                let (i, j) = (parse_usize(&lines, t[0])?, parse_usize(&lines, t[1])?);
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(lines.err(format!("index ({i}, {j}) outside {m}x{n}")));
                }
                let v = if header.field == Field::Pattern {
                    1.0
                } else {
                    parse_f64(&lines, t[2])?
                };
                entries.push((i - 1, j - 1, v));
            }
            (m, n)
        }
        Format::Array => {
            if dims.len() != 2 {
                return Err(lines.err("array size line needs `rows cols`"));
            }
            let (m, n) = (parse_usize(&lines, dims[0])?, parse_usize(&lines, dims[1])?);
            // Column-major; symmetric storage lists the lower triangle only.
            for j in 0..n {
                let start = match header.symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..m {
                    let l = lines
                        .next_data()?
                        .ok_or_else(|| lines.err("too few array values"))?;
                    let v = parse_f64(&lines, l.split_whitespace().next().unwrap_or(""))?;
                    entries.push((i, j, v));
                }
            }
            (m, n)
        }
    };
    if header.symmetry != Symmetry::General {
        if m != n {
            return Err(lines.err("symmetric storage requires a square matrix"));
        }
        let sign = if header.symmetry == Symmetry::Skew { -1.0 } else { 1.0 };
        let mirrored: Vec<_> = entries
            .iter()
            .filter(|(i, j, _)| i != j)
            .map(|&(i, j, v)| (j, i, sign * v))
            .collect();
        entries.extend(mirrored);
    }
    Ok((m, n, entries))
}

fn to_matrix(m: usize, n: usize, entries: &[(usize, usize, f64)], path: &Path, dense: bool) -> Result<RowAccessMatrix> {
    let res = if dense {
        let mut values = vec![0.0; m * n];
        for &(i, j, v) in entries {
            values[i * n + j] += v;
        }
        RowAccessMatrix::from_row_major(m, n, values)
    } else {
        let nz: Vec<_> = entries.iter().copied().filter(|e| e.2 != 0.0).collect();
        RowAccessMatrix::from_triplets(m, n, &nz)
    };
    res.map_err(|e| match e {
        Error::ZeroRow { row } => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("row {} is all zero", row + 1),
        },
        other => other,
    })
}

/// Parses a Matrix Market stream. `name` is used in error messages.
pub fn parse_matrix_market<R: Read>(reader: R, name: &Path, opts: ReadOptions) -> Result<RowAccessMatrix> {
    let mut buf = BufReader::new(reader);
    // Peek at the header to decide between dense and sparse storage.
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let dense = first.to_ascii_lowercase().contains(" array");
    let chained = std::io::Cursor::new(first).chain(buf);
    let (m, n, entries) = parse_entries(BufReader::new(chained), name, opts)?;
    to_matrix(m, n, &entries, name, dense)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<RowAccessMatrix> {
    read_matrix_market_with(path, ReadOptions::default())
}

pub fn read_matrix_market_with(path: impl AsRef<Path>, opts: ReadOptions) -> Result<RowAccessMatrix> {
    let path = path.as_ref();
    parse_matrix_market(File::open(path)?, path, opts)
}

/// Writes `A` in `coordinate real general` form.
pub fn write_matrix_market<W: Write>(a: &RowAccessMatrix, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    let entries: Vec<_> = a.triplets().filter(|t| t.2 != 0.0).collect();
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_file(a: &RowAccessMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(a, File::create(path)?)
}

/// Writes a vector as an `array real general` n×1 matrix.
pub fn write_vector<W: Write>(v: &[f64], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_file(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_vector(v, File::create(path)?)
}

/// Reads an n×1 (or 1×n) array or coordinate file as a vector.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let (m, n, entries) = parse_entries(reader, path, ReadOptions::default())?;
    if m != 1 && n != 1 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("expected a vector, found a {m}x{n} matrix"),
        });
    }
    let mut v = vec![0.0; m * n];
    for (i, j, x) in entries {
        v[i.max(j)] += x;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RowAccessMatrix> {
        parse_matrix_market(s.as_bytes(), Path::new("test.mtx"), ReadOptions::default())
    }

    #[test]
    fn small_coordinate() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 2.0\n").unwrap();
        assert_eq!(a.to_dense(), nalgebra::dmatrix![1.0, 0.0; 0.0, 2.0]);
        assert!(a.is_sparse());
    }

    #[test]
    fn comments_and_fortran_exponents() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real general\n% a comment\n\n2 2 2\n1 2 1.5D+00\n2 1 -2e0\n",
        )
        .unwrap();
        assert_eq!(a.to_dense(), nalgebra::dmatrix![0.0, 1.5; -2.0, 0.0]);
    }

    #[test]
    fn symmetric_is_expanded() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 1\n2 1 5\n3 2 7\n3 3 2\n").unwrap();
        assert_eq!(
            a.to_dense(),
            nalgebra::dmatrix![1.0, 5.0, 0.0; 5.0, 0.0, 7.0; 0.0, 7.0, 2.0]
        );
        let s = parse("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 3\n").unwrap();
        assert_eq!(s.to_dense(), nalgebra::dmatrix![0.0, -3.0; 3.0, 0.0]);
    }

    #[test]
    fn array_format() {
        let a = parse("%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n").unwrap();
        assert_eq!(a.to_dense(), nalgebra::dmatrix![1.0, 2.0; 3.0, 4.0]);
        assert!(!a.is_sparse());
        let s = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n3\n4\n").unwrap();
        assert_eq!(s.to_dense(), nalgebra::dmatrix![1.0, 3.0; 3.0, 4.0]);
    }

    #[test]
    fn zero_row_named() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n3 2 2\n1 1 1\n3 2 1\n").unwrap_err();
        assert!(err.to_string().contains("row 2 is all zero"), "{err}");
    }

    #[test]
    fn rejected_inputs() {
        for (src, needle) in [
            ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", "complex"),
            ("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n", "pattern"),
            ("%%MatrixMarket vector coordinate real general\n1 1 1\n1 1 1\n", "object"),
            ("%%Matrix market\n", "expected"),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", "outside"),
            ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", "expected 2 entries"),
            ("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 x\n", "bad number"),
        ] {
            let err = parse(src).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn pattern_as_ones() {
        let a = parse_matrix_market(
            "%%MatrixMarket matrix coordinate pattern general\n2 2 3\n1 1\n1 2\n2 2\n".as_bytes(),
            Path::new("p.mtx"),
            ReadOptions { pattern_as_ones: true },
        )
        .unwrap();
        assert_eq!(a.to_dense(), nalgebra::dmatrix![1.0, 1.0; 0.0, 1.0]);
    }

    #[test]
    fn vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.mtx");
        let v = vec![1.0, -2.5e-300, 3.0 / 7.0];
        write_vector_file(&v, &p).unwrap();
        assert_eq!(read_vector(&p).unwrap(), v);
    }
}
