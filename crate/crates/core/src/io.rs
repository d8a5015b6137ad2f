//! Text formats for models, interpolation data, bases and reduced bundles.
//!
//! Every matrix series is stored as
//!
//! ```text
//! mseries <nrows> <ncols> <nparams> <nterms>
//! idx <e_1> ... <e_nparams>
//! <nrows lines of ncols complex tokens>
//! ...
//! ```
//!
//! Complex tokens are `re+imj` / `re-imj`; a bare real number is also
//! accepted. `#` starts a comment. Floats are written in shortest
//! round-trip form, so writing and reading back is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ParseError, PmorError, Result};
use crate::interp::InterpolationData;
use crate::linalg::CMatrix;
use crate::model::ParametricLTI;
use crate::rom::{Provenance, RomBundle, Transpose};
use crate::series::{MatrixSeries, MultiIndex, ParamBox};
use crate::solver::{BasisSeries, SolveRun};

pub const MODEL_FILE: &str = "model.toml";
pub const DATA_FILE: &str = "data.txt";
pub const BUNDLE_FILE: &str = "bundle.txt";
pub const BASIS_META_FILE: &str = "basis.json";

/// Formats one complex entry as `re+imj`.
pub fn format_complex(z: Complex64) -> String {
    format!("{:e}{:+e}j", z.re, z.im)
}

/// Parses `re+imj`, `re-imj`, `imj` or a plain real number.
pub fn parse_complex(token: &str) -> Option<Complex64> {
    let Some(body) = token.strip_suffix('j') else {
        return token.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().ok()?;
            let im = body[k..].parse::<f64>().ok()?;
            Some(Complex64::new(re, im))
        }
        None => body.parse::<f64>().ok().map(|im| Complex64::new(0.0, im)),
    }
}

/// Line reader that skips blanks and comments and remembers line numbers.
struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.lines.peek() {
            if strip_comment(l).is_empty() {
                self.lines.next();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.skip_blank();
        let (i, l) = self.lines.next()?;
        self.last = i + 1;
        Some((i + 1, strip_comment(l)))
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.next().ok_or_else(|| ParseError::new(self.last + 1, what, "end of file"))
    }

    /// A line `keyword rest...`; returns the tokens after the keyword.
    fn keyword(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        let (line, text) = self.expect(keyword)?;
        let mut toks = text.split_whitespace();
        if toks.next() != Some(keyword) {
            return Err(ParseError::new(line, format!("`{keyword}`"), text));
        }
        Ok((line, toks.collect()))
    }

    /// A line `key value`.
    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ParseError> {
        let (line, toks) = self.keyword(key)?;
        match toks.as_slice() {
            [v] => v
                .parse()
                .map_err(|_| ParseError::new(line, format!("a value for `{key}`"), *v)),
            _ => Err(ParseError::new(line, format!("one value after `{key}`"), toks.join(" "))),
        }
    }

    fn section(&mut self, name: &str) -> Result<(), ParseError> {
        let wanted = format!("section {name}");
        let (line, text) = self.expect(&wanted)?;
        if text.split_whitespace().collect::<Vec<_>>() != ["section", name] {
            return Err(ParseError::new(line, wanted, text));
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_usize(line: usize, what: &str, tok: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| ParseError::new(line, what, tok))
}

/// Appends one series in text form.
pub fn write_series_into(out: &mut String, s: &MatrixSeries) {
    let _ = writeln!(out, "mseries {} {} {} {}", s.nrows(), s.ncols(), s.nparams(), s.len());
    for (idx, m) in s.iter() {
        out.push_str("idx");
        for e in idx.exponents() {
            let _ = write!(out, " {e}");
        }
        out.push('\n');
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&format_complex(m[(i, j)]));
            }
            out.push('\n');
        }
    }
}

pub fn write_series(s: &MatrixSeries) -> String {
    let mut out = String::new();
    write_series_into(&mut out, s);
    out
}

fn read_series(rd: &mut Reader<'_>) -> Result<MatrixSeries> {
    let (line, toks) = rd.keyword("mseries")?;
    let [nrows, ncols, nparams, nterms] = toks.as_slice() else {
        return Err(ParseError::new(line, "mseries <nrows> <ncols> <nparams> <nterms>", toks.join(" ")).into());
    };
    let nrows = parse_usize(line, "row count", nrows)?;
    let ncols = parse_usize(line, "column count", ncols)?;
    let nparams = parse_usize(line, "parameter count", nparams)?;
    let nterms = parse_usize(line, "term count", nterms)?;
    let mut series = MatrixSeries::zeros(nrows, ncols, nparams);
    for _ in 0..nterms {
        let (line, toks) = rd.keyword("idx")?;
        if toks.len() != nparams {
            return Err(ParseError::new(line, format!("{nparams} exponents"), format!("{}", toks.len())).into());
        }
        let exps = toks
            .iter()
            .map(|t| t.parse::<u32>().map_err(|_| ParseError::new(line, "non-negative exponent", *t)))
            .collect::<Result<Vec<u32>, ParseError>>()?;
        let mut m = CMatrix::zeros(nrows, ncols);
        for i in 0..nrows {
            let (line, text) = rd.expect(&format!("matrix row {}", i + 1))?;
            let row: Vec<&str> = text.split_whitespace().collect();
            if row.len() != ncols {
                return Err(ParseError::new(line, format!("{ncols} entries"), format!("{} entries", row.len())).into());
            }
            for (j, tok) in row.iter().enumerate() {
                m[(i, j)] = parse_complex(tok).ok_or_else(|| ParseError::new(line, "complex number re+imj", *tok))?;
            }
        }
        series.insert_new(MultiIndex::new(exps), m)?;
    }
    Ok(series)
}

fn expect_end(rd: &mut Reader<'_>) -> Result<(), ParseError> {
    match rd.next() {
        None => Ok(()),
        Some((line, text)) => Err(ParseError::new(line, "end of file", text)),
    }
}

pub fn parse_series(text: &str) -> Result<MatrixSeries> {
    let mut rd = Reader::new(text);
    let s = read_series(&mut rd)?;
    expect_end(&mut rd)?;
    Ok(s)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| PmorError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| PmorError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| PmorError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Attaches `path` to parse errors.
fn located<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        PmorError::Parse(p) => PmorError::Parse(p.in_file(path)),
        other => other,
    })
}

pub fn read_series_file(path: &Path) -> Result<MatrixSeries> {
    let text = read_text(path)?;
    located(path, parse_series(&text))
}

pub fn write_series_file(path: &Path, s: &MatrixSeries) -> Result<()> {
    write_text(path, &write_series(s))
}

/// `model.toml`: dimensions, parameter box and the four series files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub params: usize,
    pub box_lower: Vec<f64>,
    pub box_upper: Vec<f64>,
    /// Paths relative to the header file.
    pub e: PathBuf,
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
}

/// Writes `model.toml` plus `E/A/B/C.mseries` into `dir`; returns the
/// header path.
pub fn write_model(sys: &ParametricLTI, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let header = ModelHeader {
        states: sys.states(),
        inputs: sys.inputs(),
        outputs: sys.outputs(),
        params: sys.nparams(),
        box_lower: sys.param_box().lower().to_vec(),
        box_upper: sys.param_box().upper().to_vec(),
        e: "E.mseries".into(),
        a: "A.mseries".into(),
        b: "B.mseries".into(),
        c: "C.mseries".into(),
    };
    for (name, s) in [(&header.e, sys.e()), (&header.a, sys.a()), (&header.b, sys.b()), (&header.c, sys.c())] {
        write_series_file(&dir.join(name), s)?;
    }
    let text = toml::to_string(&header).map_err(|e| PmorError::invalid(format!("model header: {e}")))?;
    let path = dir.join(MODEL_FILE);
    write_text(&path, &text)?;
    Ok(path)
}

fn toml_error(text: &str, err: &toml::de::Error) -> ParseError {
    let line = err.span().map_or(0, |sp| text[..sp.start].lines().count().max(1));
    ParseError::new(line, "model header (states, inputs, outputs, params, box_lower, box_upper, e, a, b, c)", err.message())
}

/// Reads a model from its header file, or from `model.toml` inside a
/// directory.
pub fn read_model(path: &Path) -> Result<ParametricLTI> {
    let path = if path.is_dir() { path.join(MODEL_FILE) } else { path.to_path_buf() };
    let text = read_text(&path)?;
    let header: ModelHeader = toml::from_str(&text).map_err(|e| PmorError::Parse(toml_error(&text, &e).in_file(&path)))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let load = |rel: &Path| read_series_file(&base.join(rel));
    let (e, a, b, c) = (load(&header.e)?, load(&header.a)?, load(&header.b)?, load(&header.c)?);
    let checks = [
        ("A rows in model header", header.states, a.nrows()),
        ("B columns in model header", header.inputs, b.ncols()),
        ("C rows in model header", header.outputs, c.nrows()),
        ("parameters in model header", header.params, a.nparams()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(PmorError::dims(what, expected, found));
        }
    }
    let bx = ParamBox::new(header.box_lower, header.box_upper)?;
    ParametricLTI::new(e, a, b, c, bx)
}

pub fn write_data(data: &InterpolationData) -> String {
    let mut out = String::from("pmor-data 1\n");
    let _ = writeln!(out, "one_sided {}", data.is_one_sided());
    let _ = writeln!(out, "conjugate_closed {}", data.claims_conjugate_closure());
    out.push_str("section LAMBDA\n");
    write_series_into(&mut out, data.lambda());
    if let Some(left) = data.left() {
        out.push_str("section M\n");
        write_series_into(&mut out, &left.mu);
    }
    out.push_str("section R\n");
    write_series_into(&mut out, data.r());
    if let Some(left) = data.left() {
        out.push_str("section L\n");
        write_series_into(&mut out, &left.l);
    }
    out
}

pub fn parse_data(text: &str) -> Result<InterpolationData> {
    let mut rd = Reader::new(text);
    rd.value::<u32>("pmor-data")?;
    let one_sided: bool = rd.value("one_sided")?;
    let conjugate_closed: bool = rd.value("conjugate_closed")?;
    rd.section("LAMBDA")?;
    let lambda = read_series(&mut rd)?;
    let data = if one_sided {
        rd.section("R")?;
        let r = read_series(&mut rd)?;
        InterpolationData::one_sided(lambda, r)?
    } else {
        rd.section("M")?;
        let mu = read_series(&mut rd)?;
        rd.section("R")?;
        let r = read_series(&mut rd)?;
        rd.section("L")?;
        let l = read_series(&mut rd)?;
        InterpolationData::two_sided(lambda, mu, r, l)?
    };
    expect_end(&mut rd)?;
    if conjugate_closed {
        data.with_conjugate_closure()
    } else {
        Ok(data)
    }
}

pub fn read_data(path: &Path) -> Result<InterpolationData> {
    let text = read_text(path)?;
    located(path, parse_data(&text))
}

pub fn write_data_file(path: &Path, data: &InterpolationData) -> Result<()> {
    write_text(path, &write_data(data))
}

fn transpose_name(t: Transpose) -> &'static str {
    match t {
        Transpose::Plain => "plain",
        Transpose::Conjugate => "conjugate",
    }
}

pub fn write_bundle(b: &RomBundle) -> String {
    let pv = &b.provenance;
    let mut out = String::from("pmor-bundle 1\n");
    let _ = writeln!(out, "order {}", b.order());
    let _ = writeln!(out, "inputs {}", b.inputs());
    let _ = writeln!(out, "outputs {}", b.outputs());
    let _ = writeln!(out, "params {}", b.nparams());
    let _ = writeln!(out, "one_sided {}", pv.one_sided);
    let _ = writeln!(out, "transpose {}", transpose_name(pv.transpose));
    let _ = writeln!(out, "tol {:e}", pv.tol);
    let _ = writeln!(out, "v_degrees {}", pv.v_degrees);
    let _ = writeln!(out, "w_degrees {}", pv.w_degrees);
    for (name, s) in [("EHAT", &b.ehat), ("AHAT", &b.ahat), ("BHAT", &b.bhat), ("CHAT", &b.chat)] {
        let _ = writeln!(out, "section {name}");
        write_series_into(&mut out, s);
    }
    out
}

pub fn parse_bundle(text: &str) -> Result<RomBundle> {
    let mut rd = Reader::new(text);
    rd.value::<u32>("pmor-bundle")?;
    let order: usize = rd.value("order")?;
    let inputs: usize = rd.value("inputs")?;
    let outputs: usize = rd.value("outputs")?;
    let params: usize = rd.value("params")?;
    let one_sided: bool = rd.value("one_sided")?;
    let transpose = match rd.value::<String>("transpose")?.as_str() {
        "plain" => Transpose::Plain,
        "conjugate" => Transpose::Conjugate,
        other => return Err(ParseError::new(rd.last, "plain or conjugate", other).into()),
    };
    let tol: f64 = rd.value("tol")?;
    let v_degrees: usize = rd.value("v_degrees")?;
    let w_degrees: usize = rd.value("w_degrees")?;
    let mut parts = Vec::with_capacity(4);
    for name in ["EHAT", "AHAT", "BHAT", "CHAT"] {
        rd.section(name)?;
        parts.push(read_series(&mut rd)?);
    }
    expect_end(&mut rd)?;
    let chat = parts.pop().expect("four sections");
    let bhat = parts.pop().expect("four sections");
    let ahat = parts.pop().expect("four sections");
    let ehat = parts.pop().expect("four sections");
    let bundle = RomBundle::from_parts(
        ehat,
        ahat,
        bhat,
        chat,
        Provenance {
            tol,
            v_degrees,
            w_degrees,
            one_sided,
            transpose,
        },
    )?;
    let checks = [
        ("bundle order", order, bundle.order()),
        ("bundle inputs", inputs, bundle.inputs()),
        ("bundle outputs", outputs, bundle.outputs()),
        ("bundle parameters", params, bundle.nparams()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(PmorError::dims(what, expected, found));
        }
    }
    Ok(bundle)
}

pub fn read_bundle(path: &Path) -> Result<RomBundle> {
    let path = if path.is_dir() { path.join(BUNDLE_FILE) } else { path.to_path_buf() };
    let text = read_text(&path)?;
    located(&path, parse_bundle(&text))
}

pub fn write_bundle_file(path: &Path, b: &RomBundle) -> Result<()> {
    write_text(path, &write_bundle(b))
}

/// Metadata stored next to `V.mseries` / `W.mseries`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMeta {
    pub tol: f64,
    pub one_sided: bool,
    pub v: SolveRun,
    pub w: Option<SolveRun>,
}

pub fn write_basis(basis: &BasisSeries, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_series_file(&dir.join("V.mseries"), &basis.v)?;
    if let Some(w) = &basis.w {
        write_series_file(&dir.join("W.mseries"), w)?;
    }
    let meta = BasisMeta {
        tol: basis.tol,
        one_sided: basis.is_one_sided(),
        v: basis.v_run.clone(),
        w: basis.w_run.clone(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| PmorError::invalid(e.to_string()))?;
    write_text(&dir.join(BASIS_META_FILE), &json)
}

pub fn read_basis(dir: &Path) -> Result<BasisSeries> {
    let meta_path = dir.join(BASIS_META_FILE);
    let text = read_text(&meta_path)?;
    let meta: BasisMeta = serde_json::from_str(&text).map_err(|e| {
        PmorError::Parse(ParseError::new(e.line(), "basis metadata JSON", e.to_string()).in_file(&meta_path))
    })?;
    let v = read_series_file(&dir.join("V.mseries"))?;
    let w = if meta.one_sided { None } else { Some(read_series_file(&dir.join("W.mseries"))?) };
    Ok(BasisSeries {
        v,
        w,
        v_run: meta.v,
        w_run: meta.w,
        tol: meta.tol,
    })
}

/// Writes an example's model and interpolation data into `dir`.
pub fn export_example(ex: &crate::examples::Example, dir: &Path) -> Result<()> {
    write_model(&ex.system, dir)?;
    write_data_file(&dir.join(DATA_FILE), &ex.data)
}
