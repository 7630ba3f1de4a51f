//! File formats and the batch driver.
//!
//! Two formats live here, both documented in the README:
//!
//! * **Solution files** — one JSON object per bilinear scheme: shape,
//!   factor arrays, optional metadata. Scalars are either a plain number
//!   (real) or a two-element `[re, im]` array; writing is canonical and
//!   loses nothing at double precision.
//! * **Report files** — one record per solution with the deflation
//!   sequence, dimension bounds, residual, and run provenance; rendered as
//!   JSON or CSV with field-for-field identical content.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number, Value};

use crate::brent::{
    orbit_lower_bound, underdetermined_bound, BilinearScheme, BrentShape, BrentSystem,
};
use crate::deflation::{
    deflation_sequence, DeflationConfig, DeflationReport, SOLUTION_RESIDUAL_TOL,
};
use crate::error::{Error, Result};

pub const SOLUTION_SCHEMA_VERSION: u64 = 1;
pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// A parsed solution file: the scheme plus optional provenance metadata.
#[derive(Debug, Clone)]
pub struct SolutionFile {
    pub scheme: BilinearScheme,
    pub label: Option<String>,
    pub source: Option<String>,
}

/// Reads and validates a solution file. Dimensions are checked against the
/// declared shape; the residual is deliberately *not* checked here.
pub fn parse_solution(path: &Path) -> Result<SolutionFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_solution_str(&text)
        .map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
}

/// As [`parse_solution`], from an in-memory string.
pub fn parse_solution_str(text: &str) -> Result<SolutionFile> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Schema("top level must be a JSON object".into()))?;

    let version = field(obj, "schema_version")?
        .as_u64()
        .ok_or_else(|| Error::Schema("schema_version must be an integer".into()))?;
    if version != SOLUTION_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {version}, expected {SOLUTION_SCHEMA_VERSION}"
        )));
    }

    let shape_obj = field(obj, "shape")?
        .as_object()
        .ok_or_else(|| Error::Schema("shape must be an object".into()))?;
    let dim = |k: &str| -> Result<usize> {
        shape_obj
            .get(k)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Schema(format!("shape.{k} must be a positive integer")))
    };
    let shape = BrentShape::new(dim("m")?, dim("n")?, dim("p")?, dim("r")?)?;

    let field_tag = field(obj, "field")?
        .as_str()
        .ok_or_else(|| Error::Schema("field must be a string".into()))?;
    if field_tag != "complex" {
        return Err(Error::Schema(format!(
            "unsupported field tag `{field_tag}`, expected \"complex\""
        )));
    }

    let alpha = parse_factor(obj, "alpha", shape.r, shape.m, shape.n)?;
    let beta = parse_factor(obj, "beta", shape.r, shape.n, shape.p)?;
    let gamma = parse_factor(obj, "gamma", shape.r, shape.p, shape.m)?;
    let scheme = BilinearScheme::new(shape, alpha, beta, gamma)?;

    let (label, source) = match obj.get("metadata") {
        None | Some(Value::Null) => (None, None),
        Some(Value::Object(meta)) => (
            meta.get("label").and_then(Value::as_str).map(String::from),
            meta.get("source").and_then(Value::as_str).map(String::from),
        ),
        Some(_) => return Err(Error::Schema("metadata must be an object".into())),
    };

    Ok(SolutionFile { scheme, label, source })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Schema(format!("missing required key `{key}`")))
}

fn parse_factor(
    obj: &Map<String, Value>,
    name: &str,
    r: usize,
    rows: usize,
    cols: usize,
) -> Result<Array3<Complex64>> {
    let outer = field(obj, name)?
        .as_array()
        .ok_or_else(|| Error::Schema(format!("{name} must be an array of {r} matrices")))?;
    if outer.len() != r {
        return Err(Error::Schema(format!(
            "{name} has {} terms, shape says r = {r}",
            outer.len()
        )));
    }
    let mut out = Array3::zeros((r, rows, cols));
    for (t, mat) in outer.iter().enumerate() {
        let mat = mat
            .as_array()
            .ok_or_else(|| Error::Schema(format!("{name}[{t}] must be a {rows}x{cols} array")))?;
        if mat.len() != rows {
            return Err(Error::Schema(format!(
                "{name}[{t}] has {} rows, expected {rows}",
                mat.len()
            )));
        }
        for (i, row) in mat.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Schema(format!("{name}[{t}] row {i} must be an array")))?;
            if row.len() != cols {
                return Err(Error::Schema(format!(
                    "{name}[{t}] row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                out[(t, i, j)] = parse_scalar(v).map_err(|m| {
                    Error::Schema(format!("{name}[{t}][{i}][{j}]: {m}"))
                })?;
            }
        }
    }
    Ok(out)
}

fn parse_scalar(v: &Value) -> std::result::Result<Complex64, String> {
    match v {
        Value::Number(n) => {
            let re = n.as_f64().ok_or("number out of f64 range")?;
            Ok(Complex64::new(re, 0.0))
        }
        Value::Array(parts) if parts.len() == 2 => {
            let re = parts[0].as_f64().ok_or("real part must be a number")?;
            let im = parts[1].as_f64().ok_or("imaginary part must be a number")?;
            Ok(Complex64::new(re, im))
        }
        _ => Err("scalar must be a number or a two-element [re, im] array".into()),
    }
}

/// Canonical JSON for a scheme: real scalars as plain numbers, complex ones
/// as `[re, im]`, shortest lossless float representation.
pub fn solution_to_string(
    scheme: &BilinearScheme,
    label: Option<&str>,
    source: Option<&str>,
) -> Result<String> {
    let shape = scheme.shape();
    let mut root = Map::new();
    root.insert("schema_version".into(), json!(SOLUTION_SCHEMA_VERSION));
    root.insert(
        "shape".into(),
        json!({"m": shape.m, "n": shape.n, "p": shape.p, "r": shape.r}),
    );
    root.insert("field".into(), json!("complex"));
    root.insert("alpha".into(), factor_to_value(scheme.alpha())?);
    root.insert("beta".into(), factor_to_value(scheme.beta())?);
    root.insert("gamma".into(), factor_to_value(scheme.gamma())?);
    if label.is_some() || source.is_some() {
        let mut meta = Map::new();
        if let Some(l) = label {
            meta.insert("label".into(), json!(l));
        }
        if let Some(s) = source {
            meta.insert("source".into(), json!(s));
        }
        root.insert("metadata".into(), Value::Object(meta));
    }
    serde_json::to_string_pretty(&Value::Object(root))
        .map_err(|e| Error::Schema(format!("serializing solution: {e}")))
}

/// Writes [`solution_to_string`] to `path`.
pub fn write_solution(
    path: &Path,
    scheme: &BilinearScheme,
    label: Option<&str>,
    source: Option<&str>,
) -> Result<()> {
    let mut text = solution_to_string(scheme, label, source)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn factor_to_value(arr: &Array3<Complex64>) -> Result<Value> {
    let (r, rows, cols) = arr.dim();
    let mut terms = Vec::with_capacity(r);
    for t in 0..r {
        let mut mat = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for j in 0..cols {
                row.push(scalar_to_value(arr[(t, i, j)])?);
            }
            mat.push(Value::Array(row));
        }
        terms.push(Value::Array(mat));
    }
    Ok(Value::Array(terms))
}

fn scalar_to_value(z: Complex64) -> Result<Value> {
    let num = |x: f64| -> Result<Value> {
        Number::from_f64(x)
            .map(Value::Number)
            .ok_or_else(|| Error::Schema(format!("non-finite scalar {x} cannot be serialized")))
    };
    if z.im == 0.0 {
        num(z.re)
    } else {
        Ok(Value::Array(vec![num(z.re)?, num(z.im)?]))
    }
}

/// One line of a report: everything the batch driver knows about one
/// solution after deflating it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolutionRecord {
    pub label: String,
    pub shape: BrentShape,
    pub sequence: Vec<usize>,
    pub orbit_lower_bound: usize,
    pub underdetermined_bound: usize,
    /// `n_s − max(bounds)`; negative values flag points the sequence already
    /// certifies as geometric singular. Absent when the run is incomplete.
    pub gap: Option<i64>,
    /// `‖F(x)‖∞` of the input point; absent when the file failed to parse.
    pub residual: Option<f64>,
    /// Levels whose rank cut lacked a clear spectral gap.
    pub borderline_levels: Vec<usize>,
    pub seed: u64,
    pub level_wall_secs: Vec<f64>,
    pub complete: bool,
    pub error: Option<String>,
}

impl SolutionRecord {
    pub fn from_report(
        label: String,
        shape: BrentShape,
        residual: f64,
        report: &DeflationReport,
    ) -> Self {
        let orbit = orbit_lower_bound(shape);
        let underdet = underdetermined_bound(shape);
        let bound = orbit.max(underdet);
        let gap = report
            .complete
            .then(|| report.final_nullity())
            .flatten()
            .map(|n_s| n_s as i64 - bound as i64);
        SolutionRecord {
            label,
            shape,
            sequence: report.sequence.clone(),
            orbit_lower_bound: orbit,
            underdetermined_bound: underdet,
            gap,
            residual: Some(residual),
            borderline_levels: report.borderline_levels(),
            seed: report.seed,
            level_wall_secs: report.levels.iter().map(|l| l.wall_secs).collect(),
            complete: report.complete,
            error: report.failure.clone(),
        }
    }

    fn failed(label: String, shape: Option<BrentShape>, residual: Option<f64>, err: &Error, seed: u64) -> Self {
        SolutionRecord {
            label,
            shape: shape.unwrap_or(BrentShape { m: 0, n: 0, p: 0, r: 0 }),
            sequence: Vec::new(),
            orbit_lower_bound: shape.map_or(0, orbit_lower_bound),
            underdetermined_bound: shape.map_or(0, underdetermined_bound),
            gap: None,
            residual,
            borderline_levels: Vec::new(),
            seed,
            level_wall_secs: Vec::new(),
            complete: false,
            error: Some(err.to_string()),
        }
    }
}

/// A whole report: schema version plus records sorted by label.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportFile {
    pub schema_version: u64,
    pub records: Vec<SolutionRecord>,
}

impl ReportFile {
    pub fn new(mut records: Vec<SolutionRecord>) -> Self {
        records.sort_by(|a, b| a.label.cmp(&b.label).then(a.seed.cmp(&b.seed)));
        ReportFile { schema_version: REPORT_SCHEMA_VERSION, records }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report JSON: {e}")))
    }

    /// CSV rendering with the same fields as the JSON records. List-valued
    /// fields are joined with `;`, absent values are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "label",
            "shape",
            "sequence",
            "orbit_lower_bound",
            "underdetermined_bound",
            "gap",
            "residual",
            "borderline_levels",
            "seed",
            "level_wall_secs",
            "complete",
            "error",
        ])
        .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.label.clone(),
                r.shape.to_string(),
                join(&r.sequence),
                r.orbit_lower_bound.to_string(),
                r.underdetermined_bound.to_string(),
                r.gap.map(|g| g.to_string()).unwrap_or_default(),
                r.residual.map(|x| format!("{x:e}")).unwrap_or_default(),
                join(&r.borderline_levels),
                r.seed.to_string(),
                join_f64(&r.level_wall_secs),
                r.complete.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Schema(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Schema(format!("csv: {e}")))
    }

    /// Parses the CSV rendering back; used to check JSON/CSV field parity.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(csv_err)?;
            let get = |i: usize| row.get(i).unwrap_or("").to_string();
            // lenient shape parse: failed records carry the 0x0x0:0 placeholder
            let shape = parse_shape_lenient(&get(1))?;
            records.push(SolutionRecord {
                label: get(0),
                shape,
                sequence: split_list(&get(2))?,
                orbit_lower_bound: parse_num(&get(3))?,
                underdetermined_bound: parse_num(&get(4))?,
                gap: opt(&get(5)).map(|s| s.parse()).transpose().map_err(|_| bad("gap"))?,
                residual: opt(&get(6)).map(|s| s.parse()).transpose().map_err(|_| bad("residual"))?,
                borderline_levels: split_list(&get(7))?,
                seed: parse_num(&get(8))? as u64,
                level_wall_secs: split_f64(&get(9))?,
                complete: get(10).parse().map_err(|_| bad("complete"))?,
                error: opt(&get(11)).map(String::from),
            });
        }
        Ok(ReportFile { schema_version: REPORT_SCHEMA_VERSION, records })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Schema(format!("csv: {e}"))
}

fn parse_shape_lenient(s: &str) -> Result<BrentShape> {
    let (dims, rank) = s.split_once(':').ok_or_else(|| bad("shape"))?;
    let parts: Vec<usize> = dims
        .split('x')
        .map(|p| p.parse().map_err(|_| bad("shape")))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        return Err(bad("shape"));
    }
    let r = rank.parse().map_err(|_| bad("shape"))?;
    Ok(BrentShape { m: parts[0], n: parts[1], p: parts[2], r })
}

fn bad(field: &str) -> Error {
    Error::Schema(format!("csv: bad `{field}` value"))
}

fn join(values: &[usize]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";")
}

fn split_list(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|p| p.parse().map_err(|_| bad("list"))).collect()
}

fn split_f64(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|p| p.parse().map_err(|_| bad("float list"))).collect()
}

fn parse_num(s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad("integer"))
}

fn opt(s: &str) -> Option<&str> {
    (!s.is_empty()).then_some(s)
}

/// Bucketed distribution of the per-step nullity drops `d_i = n_{i-1} − n_i`
/// across a batch, one row per step.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct StepHistogram {
    /// 1-based step index (row `i` describes `d_i`).
    pub step: usize,
    /// `d < 0`: monotonicity violated, a numerical error worth re-running.
    pub negative: usize,
    pub zero: usize,
    pub one: usize,
    pub two_to_three: usize,
    pub four_to_ten: usize,
    pub eleven_plus: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct DeltaHistogram {
    pub steps: Vec<StepHistogram>,
}

impl DeltaHistogram {
    pub fn from_records(records: &[SolutionRecord]) -> Self {
        let max_steps = records
            .iter()
            .filter(|r| r.complete)
            .map(|r| r.sequence.len().saturating_sub(1))
            .max()
            .unwrap_or(0);
        let mut steps: Vec<StepHistogram> = (1..=max_steps)
            .map(|step| StepHistogram { step, ..Default::default() })
            .collect();
        for r in records.iter().filter(|r| r.complete) {
            for (i, w) in r.sequence.windows(2).enumerate() {
                let h = &mut steps[i];
                h.total += 1;
                let d = w[0] as i64 - w[1] as i64;
                match d {
                    d if d < 0 => h.negative += 1,
                    0 => h.zero += 1,
                    1 => h.one += 1,
                    2..=3 => h.two_to_three += 1,
                    4..=10 => h.four_to_ten += 1,
                    _ => h.eleven_plus += 1,
                }
            }
        }
        DeltaHistogram { steps }
    }

    /// A compact text table, one row per step.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for h in &self.steps {
            out.push_str(&format!(
                "d{} = n{} - n{}:  d<0: {}  d=0: {}  d=1: {}  2<=d<=3: {}  4<=d<=10: {}  d>=11: {}  total: {}\n",
                h.step, h.step - 1, h.step,
                h.negative, h.zero, h.one, h.two_to_three, h.four_to_ten, h.eleven_plus,
                h.total,
            ));
        }
        out
    }
}

/// Batch options: the per-run deflation config plus batch-level policy.
#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub deflation: DeflationConfig,
    /// Reuse the master seed for every file instead of deriving per-file
    /// seeds; useful when studying solutions on a common component.
    pub shared_borders: bool,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { deflation: DeflationConfig::default(), shared_borders: false, jobs: 0 }
    }
}

/// Stable per-file seed: FNV-1a over the master seed and the file stem, so
/// every file gets an independent border stream that is reproducible across
/// runs and machines.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in master.to_le_bytes().into_iter().chain(name.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Deflates every `*.json` solution file in `dir` and aggregates a report
/// plus the drop histogram. Per-file failures become failed records; they
/// never abort the batch. Records are sorted by label.
pub fn batch_run(dir: &Path, cfg: &BatchConfig) -> Result<(ReportFile, DeltaHistogram)> {
    cfg.deflation.validate()?;
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file() && p.extension().map(|e| e.eq_ignore_ascii_case("json")).unwrap_or(false)
        })
        .collect();
    files.sort();

    let jobs = if cfg.jobs == 0 {
        std::thread::available_parallelism().map(usize::from).unwrap_or(1)
    } else {
        cfg.jobs
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;

    let records: Vec<SolutionRecord> = pool.install(|| {
        use rayon::prelude::*;
        files.par_iter().map(|path| run_one(path, cfg)).collect()
    });

    let report = ReportFile::new(records);
    let histogram = DeltaHistogram::from_records(&report.records);
    Ok((report, histogram))
}

fn run_one(path: &Path, cfg: &BatchConfig) -> SolutionRecord {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let seed = if cfg.shared_borders {
        cfg.deflation.rng_seed
    } else {
        derive_seed(cfg.deflation.rng_seed, &stem)
    };

    let parsed = match parse_solution(path) {
        Ok(p) => p,
        Err(e) => return SolutionRecord::failed(stem, None, None, &e, seed),
    };
    let label = parsed.label.unwrap_or(stem);
    let shape = parsed.scheme.shape();
    let residual = parsed.scheme.residual();
    if residual > SOLUTION_RESIDUAL_TOL {
        let err = Error::NotASolution { residual, tolerance: SOLUTION_RESIDUAL_TOL };
        return SolutionRecord::failed(label, Some(shape), Some(residual), &err, seed);
    }

    let run_cfg = DeflationConfig { rng_seed: seed, ..cfg.deflation.clone() };
    let sys = Arc::new(BrentSystem::new(shape));
    let point = parsed.scheme.flatten();
    match deflation_sequence(sys, &point, &run_cfg) {
        Ok(report) => SolutionRecord::from_report(label, shape, residual, &report),
        Err(e) => SolutionRecord::failed(label, Some(shape), Some(residual), &e, seed),
    }
}
