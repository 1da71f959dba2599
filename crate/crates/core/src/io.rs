//! Point cloud containers and the on-disk formats: XYZ text, PLY 1.0
//! (ascii and binary little endian) and CSV tables.
//!
//! Coordinates are meters. Every reader validates that coordinates are finite
//! and that each scalar field has exactly one value per point.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported PLY format `{format}`")]
    UnsupportedFormat { path: PathBuf, format: String },
    #[error("{path}: vertex element lacks property `{property}`")]
    MissingProperty { path: PathBuf, property: String },
    #[error("{path}: truncated body ({detail})")]
    Truncated { path: PathBuf, detail: String },
    #[error("invalid scalar field `{name}`: {reason}")]
    InvalidField { name: String, reason: String },
    #[error("row {row} has {got} values, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance_squared(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

/// An ordered set of points with named per-point scalar fields.
///
/// Scalar fields keep their insertion order, which is also the order they are
/// written to PLY.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    scalars: Vec<(String, Vec<f64>)>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self {
            points,
            scalars: Vec::new(),
        }
    }

    /// Like [`PointCloud::new`] but rejects NaN/Inf coordinates.
    pub fn try_new(points: Vec<Point3>) -> Result<Self> {
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(IoError::NonFinite { index });
        }
        Ok(Self::new(points))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Point3 {
        self.points[index]
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn scalar_names(&self) -> impl Iterator<Item = &str> {
        self.scalars.iter().map(|(n, _)| n.as_str())
    }

    pub fn scalars(&self) -> &[(String, Vec<f64>)] {
        &self.scalars
    }

    /// Adds a scalar field, or replaces an existing one of the same name.
    pub fn set_scalar(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        validate_field_name(&name)?;
        if values.len() != self.points.len() {
            return Err(IoError::InvalidField {
                name,
                reason: format!("{} values for {} points", values.len(), self.points.len()),
            });
        }
        match self.scalars.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = values,
            None => self.scalars.push((name, values)),
        }
        Ok(())
    }

    pub fn with_scalar(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.set_scalar(name, values)?;
        Ok(self)
    }

    /// New cloud holding the given points (in the given order) and their scalars.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            scalars: self
                .scalars
                .iter()
                .map(|(n, v)| (n.clone(), indices.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    /// Axis-aligned bounds as (min, max); `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            )
        }))
    }
}

fn validate_field_name(name: &str) -> Result<()> {
    let bad = |reason: &str| {
        Err(IoError::InvalidField {
            name: name.to_string(),
            reason: reason.to_string(),
        })
    };
    if name.is_empty() {
        return bad("empty name");
    }
    if !name.is_ascii() {
        return bad("name must be ASCII");
    }
    if name
        .chars()
        .any(|c| c.is_ascii_whitespace() || c.is_ascii_control())
    {
        return bad("name must not contain whitespace");
    }
    if matches!(name, "x" | "y" | "z") {
        return bad("name collides with a coordinate");
    }
    Ok(())
}

/// Shortest decimal representation that parses back to the same `f64`
/// (never more than 17 significant digits).
pub fn format_real(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| IoError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::io(path, e))
}

// ---------------------------------------------------------------- XYZ

/// Reads whitespace-separated `x y z [extra...]` lines.
///
/// Lines starting with `#` are comments. A `# columns: a b c` comment names
/// the extra columns; it may list the leading `x y z` too. Without it extra
/// columns are called `c0, c1, ...`.
pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut header: Option<Vec<String>> = None;
    let mut points = Vec::new();
    let mut extras: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut row = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| IoError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(cols) = comment.trim().strip_prefix("columns:") {
                header = Some(cols.split_whitespace().map(str::to_string).collect());
            }
            continue;
        }
        row.clear();
        for tok in trimmed.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| IoError::parse(path, lineno, format!("malformed number `{tok}`")))?;
            row.push(v);
        }
        if row.len() < 3 {
            return Err(IoError::parse(
                path,
                lineno,
                format!("expected at least 3 values, found {}", row.len()),
            ));
        }
        match width {
            None => {
                width = Some(row.len());
                extras = vec![Vec::new(); row.len() - 3];
            }
            Some(w) if w != row.len() => {
                return Err(IoError::parse(
                    path,
                    lineno,
                    format!("expected {w} values, found {}", row.len()),
                ));
            }
            Some(_) => {}
        }
        let p = Point3::new(row[0], row[1], row[2]);
        if !p.is_finite() {
            return Err(IoError::parse(path, lineno, "non-finite coordinate"));
        }
        points.push(p);
        for (col, v) in extras.iter_mut().zip(&row[3..]) {
            col.push(*v);
        }
    }

    let names: Vec<String> = match header {
        Some(h) if h.len() == extras.len() => h,
        Some(h) if h.len() == extras.len() + 3 => h[3..].to_vec(),
        Some(h) if width.is_some() => {
            return Err(IoError::parse(
                path,
                0,
                format!(
                    "`# columns:` lists {} names but rows carry {} extra values",
                    h.len(),
                    extras.len()
                ),
            ))
        }
        _ => (0..extras.len()).map(|i| format!("c{i}")).collect(),
    };
    let mut cloud = PointCloud::new(points);
    for (name, values) in names.into_iter().zip(extras) {
        cloud.set_scalar(name, values)?;
    }
    Ok(cloud)
}

pub fn write_xyz(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let mut out = String::new();
    if !cloud.scalars.is_empty() {
        out.push_str("# columns: x y z");
        for (name, _) in &cloud.scalars {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
    }
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(
            out,
            "{} {} {}",
            format_real(p.x),
            format_real(p.y),
            format_real(p.z)
        );
        for (_, v) in &cloud.scalars {
            out.push(' ');
            out.push_str(&format_real(v[i]));
        }
        out.push('\n');
        if out.len() > 1 << 16 {
            w.write_all(out.as_bytes())
                .map_err(|e| IoError::io(path, e))?;
            out.clear();
        }
    }
    w.write_all(out.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| IoError::io(path, e))
}

// ---------------------------------------------------------------- PLY

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

struct PlyHeader {
    format: PlyFormat,
    elements: Vec<PlyElement>,
}

fn read_ply_header<R: BufRead>(reader: &mut R, path: &Path) -> Result<PlyHeader> {
    let mut line = String::new();
    let mut lineno = 0usize;
    let mut next_line = |reader: &mut R, line: &mut String| -> Result<usize> {
        line.clear();
        let n = reader.read_line(line).map_err(|e| IoError::io(path, e))?;
        if n == 0 {
            return Err(IoError::Truncated {
                path: path.to_path_buf(),
                detail: "header not terminated by end_header".into(),
            });
        }
        lineno += 1;
        Ok(lineno)
    };

    let n = next_line(reader, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(IoError::parse(path, n, "missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let n = next_line(reader, &mut line)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", fmt, version] => {
                if *version != "1.0" {
                    return Err(IoError::UnsupportedFormat {
                        path: path.to_path_buf(),
                        format: format!("{fmt} {version}"),
                    });
                }
                format = Some(match *fmt {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::Binary,
                    other => {
                        return Err(IoError::UnsupportedFormat {
                            path: path.to_path_buf(),
                            format: other.to_string(),
                        })
                    }
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| IoError::parse(path, n, format!("bad element count `{count}`")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, _name] => {
                let count = ScalarType::parse(count_ty)
                    .ok_or_else(|| IoError::parse(path, n, format!("unknown type `{count_ty}`")))?;
                let item = ScalarType::parse(item_ty)
                    .ok_or_else(|| IoError::parse(path, n, format!("unknown type `{item_ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| IoError::parse(path, n, "property before element"))?
                    .properties
                    .push(PlyProperty::List { count, item });
            }
            ["property", ty, name] => {
                let ty = ScalarType::parse(ty)
                    .ok_or_else(|| IoError::parse(path, n, format!("unknown type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| IoError::parse(path, n, "property before element"))?
                    .properties
                    .push(PlyProperty::Scalar {
                        name: name.to_string(),
                        ty,
                    });
            }
            _ => {
                return Err(IoError::parse(
                    path,
                    n,
                    format!("unexpected header line `{}`", line.trim_end()),
                ))
            }
        }
    }
    let format = format.ok_or_else(|| IoError::parse(path, 0, "missing format line"))?;
    Ok(PlyHeader { format, elements })
}

/// Reads the vertex element of a PLY file. Scalar vertex properties other
/// than x/y/z become scalar fields; list properties and other elements are
/// skipped.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut reader = BufReader::new(open(path)?);
    let header = read_ply_header(&mut reader, path)?;

    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| IoError::MissingProperty {
            path: path.to_path_buf(),
            property: "x".into(),
        })?;
    let vertex = &header.elements[vertex_pos];
    let find = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|p| matches!(p, PlyProperty::Scalar { name, .. } if name == axis))
            .ok_or_else(|| IoError::MissingProperty {
                path: path.to_path_buf(),
                property: axis.into(),
            })
    };
    let (ix, iy, iz) = (find("x")?, find("y")?, find("z")?);
    let extra: Vec<(usize, String)> = vertex
        .properties
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            PlyProperty::Scalar { name, .. } if i != ix && i != iy && i != iz => {
                Some((i, name.clone()))
            }
            _ => None,
        })
        .collect();

    let mut values = vec![0.0f64; vertex.properties.len()];
    let mut points = Vec::with_capacity(vertex.count);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(vertex.count); extra.len()];

    match header.format {
        PlyFormat::Ascii => {
            let mut tokens = AsciiTokens::new(reader, path);
            for element in &header.elements[..vertex_pos] {
                for _ in 0..element.count {
                    skip_ascii_record(&mut tokens, element)?;
                }
            }
            for _ in 0..vertex.count {
                for (slot, prop) in values.iter_mut().zip(&vertex.properties) {
                    match prop {
                        PlyProperty::Scalar { .. } => *slot = tokens.next_number()?,
                        PlyProperty::List { .. } => {
                            let n = tokens.next_number()? as usize;
                            for _ in 0..n {
                                tokens.next_number()?;
                            }
                        }
                    }
                }
                push_vertex(
                    &values,
                    (ix, iy, iz),
                    &extra,
                    &mut points,
                    &mut columns,
                    path,
                )?;
            }
        }
        PlyFormat::Binary => {
            for element in &header.elements[..vertex_pos] {
                for _ in 0..element.count {
                    skip_binary_record(&mut reader, element, path)?;
                }
            }
            let fixed: Option<usize> = vertex
                .properties
                .iter()
                .map(|p| match p {
                    PlyProperty::Scalar { ty, .. } => Some(ty.size()),
                    PlyProperty::List { .. } => None,
                })
                .sum();
            let mut buf = vec![0u8; fixed.unwrap_or(0)];
            for v in 0..vertex.count {
                if fixed.is_some() {
                    read_exact(&mut reader, &mut buf, path, v)?;
                    let mut off = 0;
                    for (slot, prop) in values.iter_mut().zip(&vertex.properties) {
                        if let PlyProperty::Scalar { ty, .. } = prop {
                            *slot = ty.decode_le(&buf[off..]);
                            off += ty.size();
                        }
                    }
                } else {
                    let mut scratch = [0u8; 8];
                    for (slot, prop) in values.iter_mut().zip(&vertex.properties) {
                        match prop {
                            PlyProperty::Scalar { ty, .. } => {
                                read_exact(&mut reader, &mut scratch[..ty.size()], path, v)?;
                                *slot = ty.decode_le(&scratch);
                            }
                            PlyProperty::List { count, item } => {
                                read_exact(&mut reader, &mut scratch[..count.size()], path, v)?;
                                let n = count.decode_le(&scratch) as usize;
                                let mut skip = vec![0u8; n * item.size()];
                                read_exact(&mut reader, &mut skip, path, v)?;
                            }
                        }
                    }
                }
                push_vertex(
                    &values,
                    (ix, iy, iz),
                    &extra,
                    &mut points,
                    &mut columns,
                    path,
                )?;
            }
        }
    }

    let mut cloud = PointCloud::new(points);
    for ((_, name), col) in extra.into_iter().zip(columns) {
        // Duplicate or reserved property names would violate the field invariants.
        if cloud.scalar(&name).is_some() {
            return Err(IoError::InvalidField {
                name,
                reason: "duplicate property".into(),
            });
        }
        cloud.set_scalar(name, col)?;
    }
    Ok(cloud)
}

fn push_vertex(
    values: &[f64],
    (ix, iy, iz): (usize, usize, usize),
    extra: &[(usize, String)],
    points: &mut Vec<Point3>,
    columns: &mut [Vec<f64>],
    path: &Path,
) -> Result<()> {
    let p = Point3::new(values[ix], values[iy], values[iz]);
    if !p.is_finite() {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("non-finite coordinate in vertex {}", points.len()),
        });
    }
    points.push(p);
    for (col, (i, _)) in columns.iter_mut().zip(extra) {
        col.push(values[*i]);
    }
    Ok(())
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], path: &Path, vertex: usize) -> Result<()> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            IoError::Truncated {
                path: path.to_path_buf(),
                detail: format!("ended inside record {vertex}"),
            }
        } else {
            IoError::io(path, e)
        }
    })
}

fn skip_binary_record<R: Read>(reader: &mut R, element: &PlyElement, path: &Path) -> Result<()> {
    let mut scratch = [0u8; 8];
    for prop in &element.properties {
        match prop {
            PlyProperty::Scalar { ty, .. } => {
                read_exact(reader, &mut scratch[..ty.size()], path, 0)?
            }
            PlyProperty::List { count, item } => {
                read_exact(reader, &mut scratch[..count.size()], path, 0)?;
                let n = count.decode_le(&scratch) as usize;
                let mut skip = vec![0u8; n * item.size()];
                read_exact(reader, &mut skip, path, 0)?;
            }
        }
    }
    Ok(())
}

struct AsciiTokens<'a, R> {
    reader: R,
    path: &'a Path,
    line: String,
    lineno: usize,
    pos: usize,
}

impl<'a, R: BufRead> AsciiTokens<'a, R> {
    fn new(reader: R, path: &'a Path) -> Self {
        Self {
            reader,
            path,
            line: String::new(),
            lineno: 0,
            pos: 0,
        }
    }

    fn next_token(&mut self) -> Result<Option<(usize, usize)>> {
        loop {
            let rest = &self.line[self.pos..];
            let skipped = rest.len() - rest.trim_start().len();
            let start = self.pos + skipped;
            if start < self.line.len() {
                let tok_len = self.line[start..]
                    .find(char::is_whitespace)
                    .unwrap_or(self.line.len() - start);
                self.pos = start + tok_len;
                return Ok(Some((start, start + tok_len)));
            }
            self.line.clear();
            self.pos = 0;
            let n = self
                .reader
                .read_line(&mut self.line)
                .map_err(|e| IoError::io(self.path, e))?;
            if n == 0 {
                return Ok(None);
            }
            self.lineno += 1;
        }
    }

    fn next_number(&mut self) -> Result<f64> {
        match self.next_token()? {
            None => Err(IoError::Truncated {
                path: self.path.to_path_buf(),
                detail: "fewer values than the header declares".into(),
            }),
            Some((a, b)) => {
                let tok = &self.line[a..b];
                tok.parse().map_err(|_| IoError::Parse {
                    path: self.path.to_path_buf(),
                    line: self.lineno,
                    message: format!("malformed number `{tok}` in body"),
                })
            }
        }
    }
}

fn skip_ascii_record<R: BufRead>(
    tokens: &mut AsciiTokens<'_, R>,
    element: &PlyElement,
) -> Result<()> {
    for prop in &element.properties {
        match prop {
            PlyProperty::Scalar { .. } => {
                tokens.next_number()?;
            }
            PlyProperty::List { .. } => {
                let n = tokens.next_number()? as usize;
                for _ in 0..n {
                    tokens.next_number()?;
                }
            }
        }
    }
    Ok(())
}

/// Writes a PLY with double x/y/z and one double property per scalar field.
pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::Binary => "binary_little_endian",
    };
    let mut header = format!(
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        cloud.len()
    );
    for (name, _) in &cloud.scalars {
        let _ = writeln!(header, "property double {name}");
    }
    header.push_str("end_header\n");
    let io = |e| IoError::io(path, e);
    w.write_all(header.as_bytes()).map_err(io)?;

    match format {
        PlyFormat::Binary => {
            let mut rec = Vec::with_capacity(8 * (3 + cloud.scalars.len()));
            for (i, p) in cloud.points.iter().enumerate() {
                rec.clear();
                for v in [p.x, p.y, p.z] {
                    rec.extend_from_slice(&v.to_le_bytes());
                }
                for (_, col) in &cloud.scalars {
                    rec.extend_from_slice(&col[i].to_le_bytes());
                }
                w.write_all(&rec).map_err(io)?;
            }
        }
        PlyFormat::Ascii => {
            let mut line = String::new();
            for (i, p) in cloud.points.iter().enumerate() {
                line.clear();
                let _ = write!(
                    line,
                    "{} {} {}",
                    format_real(p.x),
                    format_real(p.y),
                    format_real(p.z)
                );
                for (_, col) in &cloud.scalars {
                    line.push(' ');
                    line.push_str(&format_real(col[i]));
                }
                line.push('\n');
                w.write_all(line.as_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Reads `.ply`, otherwise treats the file as XYZ text.
pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    if has_extension(path, "ply") {
        read_ply(path)
    } else {
        read_xyz(path)
    }
}

/// Writes binary PLY for `.ply`, otherwise XYZ text.
pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if has_extension(path, "ply") {
        write_ply(cloud, path, PlyFormat::Binary)
    } else {
        write_xyz(cloud, path)
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

// ---------------------------------------------------------------- CSV

/// A CSV cell: numbers go through [`format_real`], text is quoted when needed.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Renders a CSV document with `\n` line endings.
pub fn render_csv<S: AsRef<str>>(headers: &[S], rows: &[Vec<Cell>]) -> Result<String> {
    let mut out = String::new();
    for (i, h) in headers.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_field(&mut out, h.as_ref());
    }
    out.push('\n');
    for (r, row) in rows.iter().enumerate() {
        if row.len() != headers.len() {
            return Err(IoError::RaggedRow {
                row: r,
                got: row.len(),
                expected: headers.len(),
            });
        }
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match cell {
                Cell::Real(v) => out.push_str(&format_real(*v)),
                Cell::Text(t) => push_field(&mut out, t),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_table<S: AsRef<str>>(
    headers: &[S],
    rows: &[Vec<Cell>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_csv(headers, rows)?;
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// Writes a numeric table. Values use the shortest round-trip representation.
pub fn write_csv<S: AsRef<str>>(
    headers: &[S],
    rows: &[Vec<f64>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    // Validate before touching the filesystem.
    if let Some((r, row)) = rows
        .iter()
        .enumerate()
        .find(|(_, row)| row.len() != headers.len())
    {
        return Err(IoError::RaggedRow {
            row: r,
            got: row.len(),
            expected: headers.len(),
        });
    }
    let mut w = create(path)?;
    let io = |e| IoError::io(path, e);
    let mut line = String::new();
    for (i, h) in headers.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        push_field(&mut line, h.as_ref());
    }
    line.push('\n');
    w.write_all(line.as_bytes()).map_err(io)?;
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_real(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// A numeric CSV table as headers plus rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Reads a numeric CSV written by [`write_csv`]. `true`/`false` cells parse
/// as 1/0. Quoted fields are not supported in numeric tables.
pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    let mut lines = reader.lines().enumerate();
    let headers: Vec<String> = match lines.next() {
        None => return Err(IoError::parse(path, 1, "missing header row")),
        Some((_, line)) => line
            .map_err(|e| IoError::io(path, e))?
            .trim_end_matches('\r')
            .split(',')
            .map(str::to_string)
            .collect(),
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| IoError::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| match tok {
                "true" => Ok(1.0),
                "false" => Ok(0.0),
                _ => tok
                    .parse::<f64>()
                    .map_err(|_| IoError::parse(path, lineno, format!("malformed number `{tok}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != headers.len() {
            return Err(IoError::parse(
                path,
                lineno,
                format!("{} fields, header has {}", row.len(), headers.len()),
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable { headers, rows })
}
