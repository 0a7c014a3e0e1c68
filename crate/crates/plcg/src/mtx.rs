//! Matrix Market coordinate files.
//!
//! Only `matrix coordinate real {symmetric|general}` is accepted. Symmetric
//! files store the lower triangle and are expanded on load; duplicate
//! entries are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use plcg_core::SparseOperator;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

/// A parsed file together with what its header and size line declared.
#[derive(Debug, Clone)]
pub struct MatrixMarket {
    pub operator: SparseOperator,
    pub symmetry: Symmetry,
    /// Entry count from the size line (lower triangle only when symmetric).
    pub declared_entries: usize,
}

fn parse_header(line: &str) -> Result<Symmetry, Error> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    let words: Vec<&str> = words.iter().map(String::as_str).collect();
    match words.as_slice() {
        ["%%matrixmarket", "matrix", format, field, symmetry] => {
            if *format != "coordinate" {
                return Err(Error::format(1, format!("unsupported format `{format}`")));
            }
            if *field != "real" {
                return Err(Error::format(1, format!("unsupported field `{field}`")));
            }
            match *symmetry {
                "symmetric" => Ok(Symmetry::Symmetric),
                "general" => Ok(Symmetry::General),
                other => Err(Error::format(1, format!("unsupported symmetry `{other}`"))),
            }
        }
        _ => Err(Error::format(1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`")),
    }
}

fn number<T: std::str::FromStr>(word: Option<&str>, line: usize, what: &str) -> Result<T, Error> {
    let word = word.ok_or_else(|| Error::format(line, format!("missing {what}")))?;
    word.parse().map_err(|_| Error::format(line, format!("bad {what} `{word}`")))
}

/// Parses a square matrix from a Matrix Market stream.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<MatrixMarket, Error> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let symmetry = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(Error::format(1, "empty input")),
    };

    let mut size = None;
    let mut triplets = Vec::new();
    let mut declared = 0;
    for (no, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut words = line.split_whitespace();
        let Some((rows, _)) = size else {
            let rows: usize = number(words.next(), no, "row count")?;
            let cols: usize = number(words.next(), no, "column count")?;
            declared = number(words.next(), no, "entry count")?;
            if rows != cols {
                return Err(Error::format(no, format!("matrix is {rows}x{cols}, not square")));
            }
            triplets.reserve(declared);
            size = Some((rows, cols));
            continue;
        };
        let i: usize = number(words.next(), no, "row index")?;
        let j: usize = number(words.next(), no, "column index")?;
        let v: f64 = number(words.next(), no, "value")?;
        if words.next().is_some() {
            return Err(Error::format(no, "trailing data after the value"));
        }
        if i == 0 || j == 0 || i > rows || j > rows {
            return Err(Error::format(no, format!("index ({i}, {j}) outside a {rows}x{rows} matrix")));
        }
        if symmetry == Symmetry::Symmetric && j > i {
            return Err(Error::format(no, format!("entry ({i}, {j}) above the diagonal in symmetric storage")));
        }
        if triplets.len() == declared {
            return Err(Error::format(no, format!("more than the {declared} declared entries")));
        }
        triplets.push((i - 1, j - 1, v));
    }

    let Some((n, _)) = size else {
        return Err(Error::format(1, "missing size line"));
    };
    if triplets.len() != declared {
        return Err(Error::format(
            0,
            format!("{declared} entries declared, {} found", triplets.len()),
        ));
    }
    let operator = SparseOperator::from_triplets(n, &triplets, symmetry == Symmetry::Symmetric)?;
    Ok(MatrixMarket { operator, symmetry, declared_entries: declared })
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarket, Error> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes `a` in coordinate format. With `Symmetric`, only the lower
/// triangle is written and `a` must be symmetric.
pub fn write_matrix_market<W: Write>(a: &SparseOperator, symmetry: Symmetry, mut w: W) -> Result<(), Error> {
    if symmetry == Symmetry::Symmetric && !a.is_symmetric() {
        return Err(Error::Usage("cannot store a nonsymmetric matrix as symmetric".into()));
    }
    let keep = |i: usize, j: usize| symmetry == Symmetry::General || j <= i;
    let count = (0..a.n())
        .map(|i| a.row(i).0.iter().filter(|&&j| keep(i, j)).count())
        .sum::<usize>();
    let kind = match symmetry {
        Symmetry::General => "general",
        Symmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), count)?;
    for i in 0..a.n() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if keep(i, j) {
                // `{:?}` prints the shortest representation that round-trips.
                writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<MatrixMarket, Error> {
        parse_matrix_market(text.as_bytes())
    }

    #[test]
    fn symmetric_expansion() {
        let mm = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 2 2\n3 3 2\n2 1 1\n",
        )
        .unwrap();
        let a = mm.operator;
        assert_eq!(a.n(), 3);
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
        assert_eq!(mm.declared_entries, 4);
    }

    #[test]
    fn header_is_case_insensitive() {
        let mm = parse("%%MatrixMarket MATRIX Coordinate Real General\n1 1 1\n1 1 5.0\n").unwrap();
        assert_eq!(mm.symmetry, Symmetry::General);
        assert_eq!(mm.operator.get(0, 0), 5.0);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n1 1 2.5\n2 2 1\n")
            .unwrap()
            .operator;
        assert_eq!(a.get(0, 0), 3.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn unsupported_headers() {
        for header in [
            "%%MatrixMarket matrix coordinate complex symmetric",
            "%%MatrixMarket matrix coordinate pattern symmetric",
            "%%MatrixMarket matrix coordinate real skew-symmetric",
            "%%MatrixMarket matrix coordinate real hermitian",
            "%%MatrixMarket matrix array real general",
            "%%MatrixMarket vector coordinate real general",
        ] {
            let err = parse(&format!("{header}\n1 1 1\n1 1 1\n")).unwrap_err();
            assert!(matches!(err, Error::Format { line: 1, .. }), "{header}: {err}");
        }
    }

    #[test]
    fn malformed_bodies() {
        let head = "%%MatrixMarket matrix coordinate real symmetric\n";
        let cases = [
            ("2 2 1\n3 1 1\n", 3),   // row out of range
            ("2 2 1\n0 1 1\n", 3),   // zero-based index
            ("2 2 1\n1 2 1\n", 3),   // upper triangle in symmetric storage
            ("2 2 1\n1 1 x\n", 3),   // bad value
            ("2 2 1\n1 1\n", 3),     // missing value
            ("2 3 1\n1 1 1\n", 2),   // not square
            ("2 2 1\n1 1 1\n2 2 1\n", 4),
            ("2 2 2\n1 1 1\n", 0),
        ];
        for (body, line) in cases {
            match parse(&format!("{head}{body}")) {
                Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{body:?}"),
                other => panic!("{body:?}: {other:?}"),
            }
        }
        assert!(parse("").is_err());
        assert!(parse(head).is_err());
    }

    #[test]
    fn write_then_read() {
        let a = plcg_core::build_poisson_2d(3, 4).unwrap();
        for sym in [Symmetry::Symmetric, Symmetry::General] {
            let mut buf = Vec::new();
            write_matrix_market(&a, sym, &mut buf).unwrap();
            assert_eq!(parse_matrix_market(buf.as_slice()).unwrap().operator, a);
        }
    }

    #[test]
    fn refuses_symmetric_write_of_nonsymmetric() {
        let a = SparseOperator::from_triplets(2, &[(0, 1, 1.0)], false).unwrap();
        assert!(write_matrix_market(&a, Symmetry::Symmetric, Vec::new()).is_err());
    }
}
