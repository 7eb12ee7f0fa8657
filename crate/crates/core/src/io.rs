//! Text formats: Matrix Market matrices, the spectral-data format and
//! key = value reports.
//!
//! Numbers are written with Rust's shortest round-trip representation, so a
//! write/read cycle reproduces every f64 bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};
use crate::spectral::{EigBlock, RealSpectralData, SpectralBlocks};

fn perr(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_num<T: std::str::FromStr>(tok: (usize, &str), line: usize, what: &str) -> Result<T> {
    tok.1
        .parse()
        .map_err(|_| perr(line, tok.0, format!("expected {what}, found '{}'", tok.1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

/// Parses a real Matrix Market matrix (array or coordinate, general or
/// symmetric) from numbered lines.
fn parse_matrix_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    eof_line: usize,
) -> Result<Mat<f64>> {
    let (hl, header) = lines
        .next()
        .ok_or_else(|| perr(eof_line, 1, "missing %%MatrixMarket header"))?;
    let head = tokens(header);
    if head.first().map(|t| t.1.to_ascii_lowercase()) != Some("%%matrixmarket".into()) {
        return Err(perr(hl, 1, "expected '%%MatrixMarket' header"));
    }
    if head.len() != 5 {
        return Err(perr(
            hl,
            1,
            "header must read '%%MatrixMarket matrix <array|coordinate> real <general|symmetric>'",
        ));
    }
    if !head[1].1.eq_ignore_ascii_case("matrix") {
        return Err(perr(hl, head[1].0, format!("unsupported object '{}'", head[1].1)));
    }
    let layout = match head[2].1.to_ascii_lowercase().as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(perr(hl, head[2].0, format!("unsupported format '{other}'"))),
    };
    match head[3].1.to_ascii_lowercase().as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(perr(hl, head[3].0, format!("unsupported field '{other}'"))),
    }
    let symmetric = match head[4].1.to_ascii_lowercase().as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(hl, head[4].0, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sl, size_line) = data
        .next()
        .ok_or_else(|| perr(eof_line, 1, "missing dimension line"))?;
    let size = tokens(size_line);
    let want = if layout == Layout::Array { 2 } else { 3 };
    if size.len() != want {
        let col = size.get(want).or(size.last()).map_or(1, |t| t.0);
        return Err(perr(
            sl,
            col,
            format!("dimension line needs {want} integers, found {}", size.len()),
        ));
    }
    let m: usize = parse_num(size[0], sl, "row count")?;
    let n: usize = parse_num(size[1], sl, "column count")?;
    if symmetric && m != n {
        return Err(perr(sl, size[0].0, "symmetric matrix must be square"));
    }
    let mut a = Mat::<f64>::zeros(m, n);
    match layout {
        Layout::Array => {
            let positions: Vec<(usize, usize)> = if symmetric {
                (0..n).flat_map(|j| (j..m).map(move |i| (i, j))).collect()
            } else {
                (0..n).flat_map(|j| (0..m).map(move |i| (i, j))).collect()
            };
            let mut k = 0;
            let mut last = sl;
            for (ln, line) in data.by_ref() {
                last = ln;
                for tok in tokens(line) {
                    if k >= positions.len() {
                        return Err(perr(ln, tok.0, "more entries than the declared size"));
                    }
                    let v: f64 = parse_num(tok, ln, "a real number")?;
                    let (i, j) = positions[k];
                    a[(i, j)] = v;
                    if symmetric {
                        a[(j, i)] = v;
                    }
                    k += 1;
                }
                if k == positions.len() {
                    break;
                }
            }
            if k < positions.len() {
                return Err(perr(
                    last + 1,
                    1,
                    format!("expected {} entries, found {k}", positions.len()),
                ));
            }
        }
        Layout::Coordinate => {
            let nnz: usize = parse_num(size[2], sl, "entry count")?;
            let mut last = sl;
            for _ in 0..nnz {
                let (ln, line) = data
                    .next()
                    .ok_or_else(|| perr(last + 1, 1, format!("expected {nnz} entries")))?;
                last = ln;
                let t = tokens(line);
                if t.len() != 3 {
                    return Err(perr(ln, 1, "coordinate entry must be 'row column value'"));
                }
                let i: usize = parse_num(t[0], ln, "row index")?;
                let j: usize = parse_num(t[1], ln, "column index")?;
                if i == 0 || i > m {
                    return Err(perr(ln, t[0].0, format!("row index {i} outside 1..={m}")));
                }
                if j == 0 || j > n {
                    return Err(perr(ln, t[1].0, format!("column index {j} outside 1..={n}")));
                }
                let v: f64 = parse_num(t[2], ln, "a real number")?;
                a[(i - 1, j - 1)] = v;
                if symmetric {
                    a[(j - 1, i - 1)] = v;
                }
            }
        }
    }
    Ok(a)
}

fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

pub fn parse_matrix(text: &str) -> Result<Mat<f64>> {
    let eof = text.lines().count() + 1;
    let mut lines = numbered(text);
    let a = parse_matrix_lines(&mut lines, eof)?;
    for (ln, l) in lines {
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('%') {
            return Err(perr(ln, 1, "unexpected data after the matrix"));
        }
    }
    Ok(a)
}

/// Array format; `symmetric` stores only the lower triangle (the caller
/// asserts symmetry — the upper triangle is not written).
pub fn format_matrix(a: &Mat<f64>, symmetric: bool) -> String {
    let (m, n) = (a.nrows(), a.ncols());
    let symmetric = symmetric && m == n;
    let mut s = format!(
        "%%MatrixMarket matrix array real {}\n{m} {n}\n",
        if symmetric { "symmetric" } else { "general" }
    );
    for j in 0..n {
        let start = if symmetric { j } else { 0 };
        for i in start..m {
            let _ = writeln!(s, "{:e}", a[(i, j)]);
        }
    }
    s
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn write_matrix(a: &Mat<f64>, symmetric: bool, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &format_matrix(a, symmetric))
}

pub(crate) fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Spectral file contents: the eigenvalue blocks and, if present, X.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFile {
    pub values: SpectralBlocks,
    pub x: Option<Mat<f64>>,
}

/// Parses
///
/// ```text
/// p s
/// pair α β      (s lines)
/// real λ        (p − 2s lines)
/// <Matrix Market array with p columns>   (optional)
/// ```
///
/// Lines starting with `#` and blank lines are ignored before the matrix.
pub fn parse_spectral(text: &str) -> Result<SpectralFile> {
    let eof = text.lines().count() + 1;
    let all: Vec<(usize, &str)> = numbered(text).collect();
    let mut pos = 0;
    let mut next_data = || -> Option<(usize, &str)> {
        while pos < all.len() {
            let (ln, l) = all[pos];
            pos += 1;
            let t = l.trim_start();
            if !(t.is_empty() || t.starts_with('#')) {
                return Some((ln, l));
            }
        }
        None
    };
    let (hl, header) = next_data().ok_or_else(|| perr(1, 1, "empty spectral file"))?;
    let h = tokens(header);
    if h.len() != 2 {
        return Err(perr(hl, 1, "header must be 'p s'"));
    }
    let p: usize = parse_num(h[0], hl, "p")?;
    let s: usize = parse_num(h[1], hl, "s")?;
    if p == 0 {
        return Err(perr(hl, h[0].0, "p must be at least 1"));
    }
    if 2 * s > p {
        return Err(Error::MalformedBlocks(format!(
            "s = {s} conjugate pairs exceed p/2 with p = {p}"
        )));
    }
    let mut blocks = Vec::with_capacity(p - s);
    for k in 0..(p - s) {
        let (ln, line) = next_data()
            .ok_or_else(|| perr(eof, 1, format!("expected {} eigenvalue lines", p - s)))?;
        let t = tokens(line);
        let want_pair = k < s;
        let (kw, arity) = if want_pair { ("pair", 3) } else { ("real", 2) };
        if t[0].1 != kw {
            return Err(perr(ln, t[0].0, format!("expected '{kw}', found '{}'", t[0].1)));
        }
        if t.len() != arity {
            return Err(perr(
                ln,
                t.last().map_or(1, |x| x.0),
                format!("'{kw}' takes {} value(s)", arity - 1),
            ));
        }
        if want_pair {
            blocks.push(EigBlock::Pair {
                alpha: parse_num(t[1], ln, "alpha")?,
                beta: parse_num(t[2], ln, "beta")?,
            });
        } else {
            blocks.push(EigBlock::Real(parse_num(t[1], ln, "eigenvalue")?));
        }
    }
    let values = SpectralBlocks::new(blocks)?;
    let rest: Vec<(usize, &str)> = all[pos..].to_vec();
    let has_matrix = rest.iter().any(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('#')
    });
    let x = if has_matrix {
        let mut it = rest
            .into_iter()
            .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let x = parse_matrix_lines(&mut it, eof)?;
        if let Some((ln, _)) = it.next() {
            return Err(perr(ln, 1, "unexpected data after the eigenvector matrix"));
        }
        if x.ncols() != p {
            return Err(Error::dims(format!(
                "eigenvector matrix has {} columns, expected p = {p}",
                x.ncols()
            )));
        }
        Some(x)
    } else {
        None
    };
    Ok(SpectralFile { values, x })
}

pub fn format_spectral_values(v: &SpectralBlocks) -> String {
    let mut s = format!("{} {}\n", v.p(), v.s());
    for b in v.blocks() {
        match *b {
            EigBlock::Pair { alpha, beta } => {
                let _ = writeln!(s, "pair {alpha:e} {beta:e}");
            }
            EigBlock::Real(l) => {
                let _ = writeln!(s, "real {l:e}");
            }
        }
    }
    s
}

pub fn format_spectral(d: &RealSpectralData) -> String {
    let mut s = format_spectral_values(d.values());
    s.push_str(&format_matrix(&d.x().to_owned(), false));
    s
}

/// Reads a spectral file that must carry eigenvectors.
pub fn read_spectral(path: impl AsRef<Path>) -> Result<RealSpectralData> {
    let f = read_spectral_file(path)?;
    let x = f.x.ok_or_else(|| perr(f.values.p() - f.values.s() + 2, 1, "missing eigenvector matrix"))?;
    RealSpectralData::new(f.values, x)
}

pub fn read_spectral_file(path: impl AsRef<Path>) -> Result<SpectralFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_spectral(&text)
}

pub fn write_spectral(d: &RealSpectralData, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &format_spectral(d))
}

pub fn write_spectral_values(v: &SpectralBlocks, path: impl AsRef<Path>) -> Result<()> {
    write_text(path, &format_spectral_values(v))
}

/// Ordered `key = value` report. The optional timestamp is rendered on its
/// own leading comment line so the rest is reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub timestamp: Option<String>,
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        self.entries.push((key.to_string(), value.to_string().replace('\n', " ")));
        self
    }

    /// Shortest round-trip representation.
    pub fn push_f64(&mut self, key: &str, v: f64) -> &mut Self {
        self.push(key, format!("{v:e}"))
    }

    pub fn push_opt_f64(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        match v {
            Some(v) => self.push_f64(key, v),
            None => self.push(key, "unavailable"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(t) = &self.timestamp {
            let _ = writeln!(s, "# generated {t}");
        }
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::new();
        for (ln, line) in numbered(text) {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix("# generated ") {
                r.timestamp = Some(rest.to_string());
                continue;
            }
            if t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| perr(ln, 1, "expected 'key = value'"))?;
            r.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(r)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path, &self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::mat;

    #[test]
    fn identity_round_trip() {
        let i3 = Mat::<f64>::identity(3, 3);
        assert_eq!(parse_matrix(&format_matrix(&i3, true)).unwrap(), i3);
        assert_eq!(parse_matrix(&format_matrix(&i3, false)).unwrap(), i3);
    }

    #[test]
    fn symmetric_array_expands_lower_triangle() {
        let text = "%%MatrixMarket matrix array real symmetric\n% comment\n2 2\n1\n2\n3\n";
        assert_eq!(parse_matrix(text).unwrap(), mat![[1.0, 2.0], [2.0, 3.0]]);
    }

    #[test]
    fn coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 -1.5\n";
        assert_eq!(parse_matrix(text).unwrap(), mat![[4.0, -1.5], [-1.5, 0.0]]);
    }

    #[test]
    fn malformed_dimension_line() {
        let text = "%%MatrixMarket matrix array real general\n2 x\n1\n";
        match parse_matrix(text) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        let text = "%%MatrixMarket matrix array real general\n2\n";
        assert!(matches!(parse_matrix(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn awkward_values_round_trip_exactly() {
        let a = mat![[0.1, 1.0 / 3.0, -2.5e-300], [f64::MAX, 6.02214076e23, -0.0]];
        let b = parse_matrix(&format_matrix(&a, false)).unwrap();
        for j in 0..3 {
            for i in 0..2 {
                assert_eq!(a[(i, j)].to_bits(), b[(i, j)].to_bits());
            }
        }
    }

    #[test]
    fn spectral_errors() {
        assert!(matches!(parse_spectral("0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_spectral("3 2\npair 1 1\nreal 1\n"),
            Err(Error::MalformedBlocks(_))
        ));
        assert!(matches!(
            parse_spectral("2 1\nreal 1\n"),
            Err(Error::Parse { line: 2, column: 1, .. })
        ));
    }

    #[test]
    fn spectral_values_round_trip() {
        let v = SpectralBlocks::new(vec![
            EigBlock::Pair {
                alpha: 0.0645,
                beta: 0.6315,
            },
            EigBlock::Real(0.0041),
        ])
        .unwrap();
        let f = parse_spectral(&format_spectral_values(&v)).unwrap();
        assert_eq!(f.values, v);
        assert!(f.x.is_none());
    }

    #[test]
    fn report_round_trip_and_timestamp_isolation() {
        let mut r = Report::new();
        r.push("command", "embed").push_f64("res1_updated", 1.2434e-14);
        r.timestamp = Some("2024-01-01T00:00:00Z".into());
        let text = r.render();
        assert!(text.starts_with("# generated "));
        let back = Report::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.get_f64("res1_updated"), Some(1.2434e-14));
    }
}
