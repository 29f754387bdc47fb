//! CSV formats and output headers.
//!
//! Every output file starts with comment lines (`# key: value`) echoing the
//! version, the effective configuration, and the seed, so a result can
//! always be reproduced from the file alone. Values are written with Rust's
//! shortest round-trip float formatting, which keeps save/load cycles
//! lossless. Execution details that do not affect results (thread count,
//! output paths) stay out of the header so reruns are byte-identical.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use geokrige_core::geo::{GeoDataset, GeoPoint, GeoPrediction};
use geokrige_core::kernels::Locations;

/// Errors surfaced by the IO layer.
#[derive(Debug)]
pub enum IoError {
    /// Underlying filesystem error.
    Io(io::Error),
    /// Malformed content; the message carries the 1-based line number.
    Parse(String),
    /// Structurally valid but semantically unusable input.
    Invalid(String),
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "io error: {e}"),
            IoError::Parse(m) => write!(f, "parse error: {m}"),
            IoError::Invalid(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<io::Error> for IoError {
    fn from(e: io::Error) -> Self {
        IoError::Io(e)
    }
}

/// Standard comment header: version, command echo, seed.
pub fn header(cmd_echo: &str, seed: u64) -> String {
    format!(
        "# geokrige {}\n# cmd: {}\n# seed: {}\n",
        env!("CARGO_PKG_VERSION"),
        cmd_echo,
        seed
    )
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64, IoError> {
    field.trim().parse::<f64>().map_err(|_| {
        IoError::Parse(format!("line {line_no}: `{field}` is not a number"))
    })
}

/// A point dataset: coordinates, observations, optional truth displacements.
#[derive(Debug)]
pub struct Dataset {
    /// Nominal observation locations.
    pub locations: Locations,
    /// Observed values.
    pub y: Vec<f64>,
    /// True displacements when the file carries them (`u1,u2,...` columns).
    pub u: Option<Vec<f64>>,
}

/// Read a dataset CSV with columns `x1,..,xp,y[,u1,..,up]`. Comment lines
/// start with `#`.
pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let text = fs::read_to_string(path)?;
    let mut dim = None;
    let mut with_u = false;
    let mut locations = Locations::new(2);
    let mut y = Vec::new();
    let mut u = Vec::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !saw_header {
            // header row: x1..xp,y[,u1..up]
            let p = fields.iter().take_while(|f| f.trim().starts_with('x')).count();
            if p == 0 || fields.len() < p + 1 || fields[p].trim() != "y" {
                return Err(IoError::Parse(format!(
                    "line {line_no}: expected header `x1,..,xp,y[,u1,..,up]`, got `{line}`"
                )));
            }
            with_u = fields.len() == 2 * p + 1;
            if fields.len() != p + 1 && !with_u {
                return Err(IoError::Parse(format!(
                    "line {line_no}: header has {} columns, expected {} or {}",
                    fields.len(),
                    p + 1,
                    2 * p + 1
                )));
            }
            dim = Some(p);
            locations = Locations::new(p);
            saw_header = true;
            continue;
        }
        let p = dim.unwrap();
        let expect = if with_u { 2 * p + 1 } else { p + 1 };
        if fields.len() != expect {
            return Err(IoError::Parse(format!(
                "line {line_no}: {} fields, expected {expect}",
                fields.len()
            )));
        }
        let mut pt = Vec::with_capacity(p);
        for f in &fields[..p] {
            pt.push(parse_f64(f, line_no)?);
        }
        locations.push(&pt);
        y.push(parse_f64(fields[p], line_no)?);
        if with_u {
            for f in &fields[p + 1..] {
                u.push(parse_f64(f, line_no)?);
            }
        }
    }
    if !saw_header {
        return Err(IoError::Invalid("file has no header row".into()));
    }
    if y.is_empty() {
        return Err(IoError::Invalid("dataset is empty after the header".into()));
    }
    Ok(Dataset {
        locations,
        y,
        u: if with_u { Some(u) } else { None },
    })
}

/// Write a dataset CSV (inverse of [`read_dataset`]).
pub fn write_dataset(
    path: &Path,
    head: &str,
    locations: &Locations,
    y: &[f64],
    u: Option<&[f64]>,
) -> Result<(), IoError> {
    let p = locations.dim();
    let mut out = String::from(head);
    for d in 0..p {
        out.push_str(&format!("x{},", d + 1));
    }
    out.push('y');
    if u.is_some() {
        for d in 0..p {
            out.push_str(&format!(",u{}", d + 1));
        }
    }
    out.push('\n');
    for i in 0..locations.len() {
        for d in 0..p {
            out.push_str(&format!("{},", locations.point(i)[d]));
        }
        out.push_str(&format!("{}", y[i]));
        if let Some(uu) = u {
            for d in 0..p {
                out.push_str(&format!(",{}", uu[i * p + d]));
            }
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read a plain target-locations CSV with columns `x1,..,xp`.
pub fn read_targets(path: &Path) -> Result<Locations, IoError> {
    let text = fs::read_to_string(path)?;
    let mut dim = None;
    let mut locations = Locations::new(2);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if dim.is_none() {
            if !fields.iter().all(|f| f.trim().starts_with('x')) {
                return Err(IoError::Parse(format!(
                    "line {line_no}: expected header `x1,..,xp`, got `{line}`"
                )));
            }
            dim = Some(fields.len());
            locations = Locations::new(fields.len());
            continue;
        }
        let p = dim.unwrap();
        if fields.len() != p {
            return Err(IoError::Parse(format!(
                "line {line_no}: {} fields, expected {p}",
                fields.len()
            )));
        }
        let mut pt = Vec::with_capacity(p);
        for f in &fields {
            pt.push(parse_f64(f, line_no)?);
        }
        locations.push(&pt);
    }
    if locations.is_empty() {
        return Err(IoError::Invalid("no target locations found".into()));
    }
    Ok(locations)
}

/// Write target locations, optionally with their latent truth values.
pub fn write_targets(
    path: &Path,
    head: &str,
    targets: &Locations,
    truth: Option<&[f64]>,
) -> Result<(), IoError> {
    let p = targets.dim();
    let mut out = String::from(head);
    let mut cols: Vec<String> = (0..p).map(|d| format!("x{}", d + 1)).collect();
    if truth.is_some() {
        cols.push("xstar".into());
    }
    out.push_str(&cols.join(","));
    out.push('\n');
    for i in 0..targets.len() {
        let coords: Vec<String> = (0..p).map(|d| format!("{}", targets.point(i)[d])).collect();
        out.push_str(&coords.join(","));
        if let Some(t) = truth {
            out.push_str(&format!(",{}", t[i]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read gridded anomaly records `lon,lat,value[,count]`.
pub fn read_geo_csv(path: &Path) -> Result<GeoDataset, IoError> {
    let text = fs::read_to_string(path)?;
    let mut saw_header = false;
    let mut with_count = false;
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut counts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !saw_header {
            let names: Vec<String> = fields.iter().map(|f| f.trim().to_lowercase()).collect();
            match names.as_slice() {
                [a, b, c] if a == "lon" && b == "lat" && c == "value" => with_count = false,
                [a, b, c, d] if a == "lon" && b == "lat" && c == "value" && d == "count" => {
                    with_count = true
                }
                _ => {
                    return Err(IoError::Parse(format!(
                        "line {line_no}: expected header `lon,lat,value[,count]`, got `{line}`"
                    )))
                }
            }
            saw_header = true;
            continue;
        }
        let expect = if with_count { 4 } else { 3 };
        if fields.len() != expect {
            return Err(IoError::Parse(format!(
                "line {line_no}: {} fields, expected {expect}",
                fields.len()
            )));
        }
        let lon = parse_f64(fields[0], line_no)?;
        let lat = parse_f64(fields[1], line_no)?;
        let point = GeoPoint::new(lon, lat).map_err(|e| {
            IoError::Parse(format!("line {line_no}: {e}"))
        })?;
        points.push(point);
        values.push(parse_f64(fields[2], line_no)?);
        if with_count {
            let c = fields[3].trim().parse::<u32>().map_err(|_| {
                IoError::Parse(format!(
                    "line {line_no}: `{}` is not a station count",
                    fields[3]
                ))
            })?;
            counts.push(c);
        }
    }
    if !saw_header {
        return Err(IoError::Invalid("file has no header row".into()));
    }
    if points.is_empty() {
        return Err(IoError::Invalid("geo dataset is empty after the header".into()));
    }
    GeoDataset::new(points, values, if with_count { Some(counts) } else { None })
        .map_err(|e| IoError::Invalid(format!("{e}")))
}

/// Write gridded anomaly records (inverse of [`read_geo_csv`]).
pub fn write_geo_csv(path: &Path, head: &str, data: &GeoDataset) -> Result<(), IoError> {
    let mut out = String::from(head);
    let with_count = data.counts().is_some();
    out.push_str(if with_count {
        "lon,lat,value,count\n"
    } else {
        "lon,lat,value\n"
    });
    for i in 0..data.len() {
        let p = data.points()[i];
        out.push_str(&format!("{},{},{}", p.lon, p.lat, data.values()[i]));
        if let Some(c) = data.counts() {
            out.push_str(&format!(",{}", c[i]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read geo target centers `lon,lat`.
pub fn read_geo_targets(path: &Path) -> Result<Vec<GeoPoint>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut saw_header = false;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !saw_header {
            let names: Vec<String> = fields.iter().map(|f| f.trim().to_lowercase()).collect();
            if names != ["lon", "lat"] {
                return Err(IoError::Parse(format!(
                    "line {line_no}: expected header `lon,lat`, got `{line}`"
                )));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 2 {
            return Err(IoError::Parse(format!(
                "line {line_no}: {} fields, expected 2",
                fields.len()
            )));
        }
        let lon = parse_f64(fields[0], line_no)?;
        let lat = parse_f64(fields[1], line_no)?;
        points
            .push(GeoPoint::new(lon, lat).map_err(|e| IoError::Parse(format!("line {line_no}: {e}")))?);
    }
    if points.is_empty() {
        return Err(IoError::Invalid("no geo targets found".into()));
    }
    Ok(points)
}

/// Write geo predictions `lon,lat,mean,var,lo95,hi95`.
pub fn write_geo_predictions(
    path: &Path,
    head: &str,
    preds: &[GeoPrediction],
) -> Result<(), IoError> {
    let mut out = String::from(head);
    out.push_str("lon,lat,mean,var,lo95,hi95\n");
    for p in preds {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.point.lon, p.point.lat, p.mean, p.var, p.lo, p.hi
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Write bytes through a temp file and rename, so checkpoints and outputs
/// are never observed half-written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Minimal JSON object writer (flat maps of numbers/strings/arrays).
pub struct JsonObject {
    parts: Vec<String>,
}

impl JsonObject {
    /// Empty object.
    pub fn new() -> Self {
        JsonObject { parts: Vec::new() }
    }

    /// Add a numeric field.
    pub fn num(mut self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.parts.push(format!("\"{key}\": {v}"));
        } else {
            self.parts.push(format!("\"{key}\": null"));
        }
        self
    }

    /// Add an integer field.
    pub fn int(mut self, key: &str, v: i64) -> Self {
        self.parts.push(format!("\"{key}\": {v}"));
        self
    }

    /// Add a string field.
    pub fn str(mut self, key: &str, v: &str) -> Self {
        self.parts.push(format!("\"{key}\": \"{}\"", v.replace('"', "\\\"")));
        self
    }

    /// Add a numeric array field.
    pub fn arr(mut self, key: &str, vs: &[f64]) -> Self {
        let items: Vec<String> = vs
            .iter()
            .map(|v| {
                if v.is_finite() {
                    format!("{v}")
                } else {
                    "null".into()
                }
            })
            .collect();
        self.parts.push(format!("\"{key}\": [{}]", items.join(", ")));
        self
    }

    /// Add a raw (already serialized) field.
    pub fn raw(mut self, key: &str, v: &str) -> Self {
        self.parts.push(format!("\"{key}\": {v}"));
        self
    }

    /// Serialize with one field per line.
    pub fn finish(self) -> String {
        format!("{{\n  {}\n}}\n", self.parts.join(",\n  "))
    }
}

impl Default for JsonObject {
    fn default() -> Self {
        Self::new()
    }
}
