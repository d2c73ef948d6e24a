//! Weighted observation samples and the comma-separated file format.
//!
//! A data file is a list of rows with a fixed number of comma-separated
//! fields. Empty lines and lines starting with `|` are skipped; the first
//! line starting with `|#` names the columns. Which columns hold the
//! attributes, the class label, the weight and the row label is described by
//! a [`ColumnSpec`] written as `numcols:xstart,xend:f:w:label`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row label used when the spec has no label column.
pub const NO_LABEL: &str = "??";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub total_columns: usize,
    pub x_start: usize,
    /// Inclusive.
    pub x_end: usize,
    pub f_col: usize,
    /// `None` means every weight is 1.
    pub w_col: Option<usize>,
    /// `None` means every row label is `??`.
    pub label_col: Option<usize>,
}

impl ColumnSpec {
    /// Attribute dimension.
    pub fn n(&self) -> usize {
        self.x_end - self.x_start + 1
    }

    /// Layout `x_0..x_{n-1}, f, w` used for samples built in memory.
    pub fn dense(n: usize) -> Self {
        ColumnSpec {
            total_columns: n + 2,
            x_start: 0,
            x_end: n - 1,
            f_col: n,
            w_col: Some(n + 1),
            label_col: None,
        }
    }
}

impl FromStr for ColumnSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_column_spec(s)
    }
}

impl std::fmt::Display for ColumnSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<usize>| v.map_or(-1, |c| c as i64);
        write!(
            f,
            "{}:{},{}:{}:{}:{}",
            self.total_columns,
            self.x_start,
            self.x_end,
            self.f_col,
            opt(self.w_col),
            opt(self.label_col)
        )
    }
}

/// Parse `numcols:xstart,xend:f:w:label`; a negative `w` or `label` disables that column.
pub fn parse_column_spec(text: &str) -> Result<ColumnSpec> {
    let bad = |reason: &str| Error::ColumnSpec {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = text.trim().split(':').collect();
    if parts.len() != 5 {
        return Err(bad("expected numcols:xstart,xend:f:w:label"));
    }
    let (xs, xe) = parts[1]
        .split_once(',')
        .ok_or_else(|| bad("attribute range must be xstart,xend"))?;
    let int = |s: &str| -> Result<i64> {
        s.trim()
            .parse::<i64>()
            .map_err(|_| bad(&format!("`{s}` is not an integer")))
    };
    let total = int(parts[0])?;
    let (x_start, x_end, f_col, w, label) = (int(xs)?, int(xe)?, int(parts[2])?, int(parts[3])?, int(parts[4])?);
    if total < 1 {
        return Err(bad("numcols must be positive"));
    }
    let in_range = |v: i64| v >= 0 && v < total;
    if !in_range(x_start) || !in_range(x_end) {
        return Err(bad("attribute range outside the row"));
    }
    if x_end < x_start {
        return Err(bad("xend < xstart"));
    }
    if !in_range(f_col) {
        return Err(bad("f column outside the row"));
    }
    if w >= total || label >= total {
        return Err(bad("w or label column outside the row"));
    }
    let opt = |v: i64| (v >= 0).then_some(v as usize);
    Ok(ColumnSpec {
        total_columns: total as usize,
        x_start: x_start as usize,
        x_end: x_end as usize,
        f_col: f_col as usize,
        w_col: opt(w),
        label_col: opt(label),
    })
}

/// M weighted observations of an n-dimensional attribute vector and a scalar label.
#[derive(Debug, Clone)]
pub struct Sample {
    /// M x n.
    pub x: DMatrix<f64>,
    pub f: DVector<f64>,
    pub w: DVector<f64>,
    pub labels: Vec<String>,
    pub column_names: Vec<String>,
    pub spec: ColumnSpec,
}

impl Sample {
    /// Build from in-memory data with the [`ColumnSpec::dense`] layout.
    pub fn new(x: DMatrix<f64>, f: DVector<f64>, w: DVector<f64>) -> Result<Self> {
        let m = x.nrows();
        if f.len() != m || w.len() != m {
            return Err(Error::Dimension(format!(
                "{} rows of x, {} values of f, {} weights",
                m,
                f.len(),
                w.len()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::Dimension("no attributes".into()));
        }
        if x.iter().chain(f.iter()).chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in sample".into()));
        }
        if w.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("negative observation weight".into()));
        }
        if w.sum() <= 0.0 {
            return Err(Error::Degenerate("total measure is zero".into()));
        }
        let spec = ColumnSpec::dense(x.ncols());
        Ok(Sample {
            labels: vec![NO_LABEL.to_string(); m],
            column_names: (0..spec.total_columns).map(|c| c.to_string()).collect(),
            x,
            f,
            w,
            spec,
        })
    }

    /// Same observations with a replacement class label.
    pub fn with_f(&self, f: DVector<f64>) -> Self {
        assert_eq!(f.len(), self.len());
        Sample { f, ..self.clone() }
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Sum of weights.
    pub fn total_measure(&self) -> f64 {
        self.w.sum()
    }

    fn name(&self, col: Option<usize>, fallback: &str) -> String {
        col.and_then(|c| self.column_names.get(c).cloned())
            .unwrap_or_else(|| fallback.to_string())
    }
}

/// Read a data file with the given column layout.
pub fn read_sample(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Sample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sample(&text, spec, path)
}

/// Parse file contents; `path` is only used in error messages.
pub fn parse_sample(text: &str, spec: &ColumnSpec, path: &Path) -> Result<Sample> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let n = spec.n();
    let mut names: Option<Vec<String>> = None;
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    let mut ws = Vec::new();
    let mut labels = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('|') {
            if names.is_none() {
                if let Some(header) = rest.strip_prefix('#') {
                    names = Some(header.split(',').map(|s| s.trim().to_string()).collect());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != spec.total_columns {
            return Err(err(
                line_no,
                format!("expected {} fields, found {}", spec.total_columns, fields.len()),
            ));
        }
        let num = |col: usize, what: &str| -> Result<f64> {
            let s = fields[col].trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(err(line_no, format!("non-finite {what} `{s}` in column {col}"))),
                Err(_) => Err(err(line_no, format!("bad {what} `{s}` in column {col}"))),
            }
        };
        for c in spec.x_start..=spec.x_end {
            xs.push(num(c, "attribute")?);
        }
        fs.push(num(spec.f_col, "class label")?);
        let w = match spec.w_col {
            Some(c) => num(c, "weight")?,
            None => 1.0,
        };
        if w < 0.0 {
            return Err(err(line_no, format!("negative weight {w}")));
        }
        ws.push(w);
        labels.push(match spec.label_col {
            Some(c) => fields[c].trim().to_string(),
            None => NO_LABEL.to_string(),
        });
    }

    let m = fs.len();
    if m == 0 {
        return Err(err(0, "no observations".into()));
    }
    let total: f64 = ws.iter().sum();
    if total <= 0.0 {
        return Err(err(0, "total measure is zero".into()));
    }
    let mut column_names: Vec<String> = (0..spec.total_columns).map(|c| c.to_string()).collect();
    if let Some(given) = names {
        for (dst, src) in column_names.iter_mut().zip(given) {
            *dst = src;
        }
    }
    Ok(Sample {
        x: DMatrix::from_row_slice(m, n, &xs),
        f: DVector::from_vec(fs),
        w: DVector::from_vec(ws),
        labels,
        column_names,
        spec: spec.clone(),
    })
}

/// Values computed for one row of an evaluated file.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedRow {
    pub f_rn: f64,
    pub f_ls: f64,
    pub christoffel: f64,
    pub f_rnw: f64,
    pub coverage: f64,
    pub psi: Vec<f64>,
}

/// Model information echoed into the comment block of an output file.
#[derive(Debug, Clone, Default)]
pub struct OutputMeta {
    pub source: String,
    pub model_source: String,
    /// (node, weight) of the full Lebesgue quadrature.
    pub quadrature: Vec<(f64, f64)>,
    /// (node, weight) of the cluster quadrature when clustering was requested.
    pub clusters: Option<Vec<(f64, f64)>>,
    /// n x D matrix of `<x_k|psi_i>`, printed at verbosity 3.
    pub projections: Option<DMatrix<f64>>,
    pub warnings: Vec<String>,
}

/// Render an evaluated sample in the output file format.
pub fn format_evaluation(
    sample: &Sample,
    meta: &OutputMeta,
    rows: &[EvaluatedRow],
    verbosity: u8,
) -> Result<String> {
    if rows.len() != sample.len() {
        return Err(Error::Dimension(format!(
            "{} evaluated rows for {} observations",
            rows.len(),
            sample.len()
        )));
    }
    let mut out = String::new();
    let d = rows.first().map_or(0, |r| r.psi.len());

    let _ = writeln!(out, "| source: {}", meta.source);
    let _ = writeln!(out, "| model: {}", meta.model_source);
    let _ = writeln!(out, "| observations: {}", sample.len());
    let _ = writeln!(out, "| total measure: {:?}", sample.total_measure());
    let _ = writeln!(out, "| Lebesgue quadrature, {} nodes (i,f,w):", meta.quadrature.len());
    for (i, (node, weight)) in meta.quadrature.iter().enumerate() {
        let _ = writeln!(out, "| {i},{node:?},{weight:?}");
    }
    if let Some(clusters) = &meta.clusters {
        let _ = writeln!(out, "| cluster quadrature, {} nodes (m,f,w):", clusters.len());
        for (i, (node, weight)) in clusters.iter().enumerate() {
            let _ = writeln!(out, "| {i},{node:?},{weight:?}");
        }
    }
    if verbosity >= 3 {
        if let Some(p) = &meta.projections {
            let _ = writeln!(out, "| projections <x_k|psi_i> (k,i=0..{}):", p.ncols());
            for k in 0..p.nrows() {
                let name = &sample.column_names[sample.spec.x_start + k];
                let vals: Vec<String> = p.row(k).iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(out, "| {name},{}", vals.join(","));
            }
        }
    }
    for w in &meta.warnings {
        let _ = writeln!(out, "| warning: {w}");
    }

    let spec = &sample.spec;
    let mut header = vec![sample.name(spec.label_col, "label")];
    header.extend(sample.column_names[spec.x_start..=spec.x_end].iter().cloned());
    header.push(sample.name(Some(spec.f_col), "f"));
    header.push(sample.name(spec.w_col, "w"));
    for h in ["f_RN", "f_LS", "Christoffel", "f_RNW", "Coverage"] {
        header.push(h.to_string());
    }
    if verbosity >= 2 {
        header.extend((0..d).map(|i| format!("psi{i}")));
    }
    let _ = writeln!(out, "|#{}", header.join(","));

    for (l, row) in rows.iter().enumerate() {
        out.push_str(&sample.labels[l]);
        for v in sample.x.row(l).iter() {
            let _ = write!(out, ",{v:?}");
        }
        let _ = write!(
            out,
            ",{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            sample.f[l], sample.w[l], row.f_rn, row.f_ls, row.christoffel, row.f_rnw, row.coverage
        );
        if verbosity >= 2 {
            for v in &row.psi {
                let _ = write!(out, ",{v:?}");
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Write an evaluated sample to `path_out`.
pub fn write_evaluation(
    path_out: impl AsRef<Path>,
    sample: &Sample,
    meta: &OutputMeta,
    rows: &[EvaluatedRow],
    verbosity: u8,
) -> Result<()> {
    let path = path_out.as_ref();
    let text = format_evaluation(sample, meta, rows, verbosity)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Output file name: `<prefix><input file name>.RN.csv`, placed next to the input
/// unless the prefix carries its own directory.
pub fn output_path(input: &Path, prefix: &str) -> std::path::PathBuf {
    let base = input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = format!("{prefix}{base}.RN.csv");
    if prefix.contains(std::path::MAIN_SEPARATOR) || prefix.contains('/') {
        std::path::PathBuf::from(name)
    } else {
        input.with_file_name(name)
    }
}
