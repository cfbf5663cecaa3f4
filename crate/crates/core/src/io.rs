//! File formats: the `SFVQVEC1` vector container, CSV, direction sidecars, SVG and PGM figures.
//!
//! Binary layout (little-endian): 8-byte magic `SFVQVEC1`, `u32` count, `u32` dim, then
//! `count * dim` IEEE-754 `f32` values, row-major. Values are computed in `f64` and narrowed
//! on write.
//!
//! Every writer renders its full output in memory before touching the filesystem, so a
//! validation failure never leaves a partial file behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::pca_directions;
use crate::directions::DirectionVec;
use crate::error::{Error, Result};
use crate::quantizer::Codebook;
use crate::vectors::VectorSet;

pub const MAGIC: &[u8; 8] = b"SFVQVEC1";
pub const HEADER_LEN: usize = 16;

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Encodes a vector set in the binary container.
pub fn encode_vectors(vs: &VectorSet) -> Result<Vec<u8>> {
    let count = u32::try_from(vs.count())
        .map_err(|_| Error::Shape(format!("{} rows exceed the u32 header", vs.count())))?;
    let dim = u32::try_from(vs.dim())
        .map_err(|_| Error::Shape(format!("dimension {} exceeds the u32 header", vs.dim())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * vs.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for &v in vs.as_slice() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::Numeric(format!("{v} does not fit in f32")));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_vectors(bytes: &[u8], path: &Path) -> Result<VectorSet> {
    if bytes.len() < HEADER_LEN {
        if !MAGIC.starts_with(&bytes[..bytes.len().min(8)]) {
            return Err(format_err(path, "bad magic"));
        }
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(format_err(
            path,
            format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..8])),
        ));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as u64;
    if dim == 0 {
        return Err(format_err(path, "dimension is zero"));
    }
    let expected = HEADER_LEN as u64 + 4 * count * dim;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Length {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    if found > expected {
        return Err(format_err(
            path,
            format!("{} trailing bytes after payload", found - expected),
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    VectorSet::new(dim as usize, data)
}

fn encode_csv(vs: &VectorSet) -> String {
    let mut s = String::new();
    for row in vs.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn decode_csv(text: &str, path: &Path) -> Result<VectorSet> {
    let mut dim = None;
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(format_err(
                    path,
                    format!("line {} has {} fields, expected {d}", lineno + 1, row.len()),
                ))
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| format_err(path, "no rows"))?;
    VectorSet::new(dim, data)
}

/// Writes `vs` as binary, or as CSV text when the extension is `.csv`.
///
/// CSV has no header, so an empty set can only be written in binary.
pub fn write_vectors(path: impl AsRef<Path>, vs: &VectorSet) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv(path) {
        if vs.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        encode_csv(vs).into_bytes()
    } else {
        encode_vectors(vs)?
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_vectors(path: impl AsRef<Path>) -> Result<VectorSet> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if is_csv(path) {
        let text = String::from_utf8(bytes).map_err(|_| format_err(path, "not UTF-8"))?;
        decode_csv(&text, path)
    } else {
        decode_vectors(&bytes, path)
    }
}

pub fn write_codebook(path: impl AsRef<Path>, codebook: &Codebook) -> Result<()> {
    write_vectors(path, codebook.points())
}

pub fn read_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    Codebook::new(read_vectors(path)?)
}

/// Path of the text sidecar that accompanies a direction file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn direction_sidecar(d: &DirectionVec) -> Result<String> {
    for (key, value) in [("label", &d.label), ("layer_mask", &d.layer_mask)] {
        if value.contains(['\n', '\r']) {
            return Err(Error::InvalidConfig(format!("{key} must be a single line")));
        }
    }
    Ok(format!(
        "label={}\npair={},{}\nlayer_mask={}\nraw_norm={}\n",
        d.label, d.source_pair.0, d.source_pair.1, d.layer_mask, d.raw_norm
    ))
}

/// Writes the direction as a one-row vector file plus a `key=value` sidecar at `<path>.txt`.
pub fn write_direction(path: impl AsRef<Path>, d: &DirectionVec) -> Result<()> {
    let path = path.as_ref();
    let meta = direction_sidecar(d)?;
    let row = VectorSet::new(d.dim(), d.vector.clone())?;
    let bytes = if is_csv(path) {
        encode_csv(&row).into_bytes()
    } else {
        encode_vectors(&row)?
    };
    fs::write(path, bytes)?;
    fs::write(sidecar_path(path), meta)?;
    Ok(())
}

pub fn read_direction(path: impl AsRef<Path>) -> Result<DirectionVec> {
    let path = path.as_ref();
    let row = read_vectors(path)?;
    if row.count() != 1 {
        return Err(format_err(
            path,
            format!("{} rows, expected 1", row.count()),
        ));
    }
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)?;
    let mut d = DirectionVec {
        vector: row.into_vec(),
        source_pair: (0, 1),
        label: String::new(),
        layer_mask: String::new(),
        raw_norm: f64::NAN,
    };
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format_err(&side, format!("malformed line {line:?}")))?;
        match key {
            "label" => d.label = value.to_string(),
            "layer_mask" => d.layer_mask = value.to_string(),
            "pair" => {
                let (a, b) = value
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                    .ok_or_else(|| format_err(&side, format!("bad pair {value:?}")))?;
                d.source_pair = (a, b);
            }
            "raw_norm" => {
                d.raw_norm = value
                    .parse()
                    .map_err(|_| format_err(&side, format!("bad raw_norm {value:?}")))?
            }
            _ => {}
        }
    }
    Ok(d)
}

/// Decimal with at most 6 significant digits, trailing zeros trimmed.
fn fmt6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

type Projection = Box<dyn Fn(&[f64]) -> [f64; 2]>;

const CANVAS: f64 = 800.0;
const LIGHT: [f64; 3] = [222.0, 235.0, 247.0];
const DARK: [f64; 3] = [8.0, 48.0, 107.0];

/// Light-to-dark color at `t` in [0, 1]; every channel falls strictly as `t` grows.
fn ramp(t: f64) -> String {
    let c: Vec<String> = LIGHT
        .iter()
        .zip(DARK)
        .map(|(l, d)| fmt6(l + (d - l) * t))
        .collect();
    format!("rgb({},{},{})", c[0], c[1], c[2])
}

/// SVG of the data (gray squares), the codewords (circles) and the curve, one `<line>` per
/// segment, colored from light at the first codeword to dark at the last.
///
/// Data with more than two dimensions is shown on its two leading principal axes.
pub fn curve_svg(data: &VectorSet, codebook: &Codebook) -> Result<String> {
    if data.dim() < 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: data.dim(),
        });
    }
    data.ensure_dim(codebook.dim())?;
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let project: Projection = if data.dim() == 2 {
        Box::new(|x| [x[0], x[1]])
    } else {
        let pca = pca_directions(data, 2, 0)?;
        Box::new(move |x| {
            let p = pca.project(x);
            [p[0], p[1]]
        })
    };
    let pts: Vec<[f64; 2]> = data.rows().map(&project).collect();
    let cws: Vec<[f64; 2]> = codebook.codewords().map(&project).collect();

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span = (0..2)
        .map(|a| hi[a] - lo[a])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let margin = 0.05 * span;
    let scale = CANVAS / (span + 2.0 * margin);
    let to_px = |p: [f64; 2]| {
        [
            (p[0] - lo[0] + margin) * scale,
            CANVAS - (p[1] - lo[1] + margin) * scale,
        ]
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r##"<g fill="#a0a0a0">"##);
    for p in pts {
        let [x, y] = to_px(p);
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="2" height="2"/>"#,
            fmt6(x - 1.0),
            fmt6(y - 1.0)
        );
    }
    let _ = writeln!(s, "</g>");
    let segs = codebook.segments();
    let _ = writeln!(s, r#"<g stroke-width="2" stroke-linecap="round">"#);
    for k in 0..segs {
        let t = if segs > 1 {
            k as f64 / (segs - 1) as f64
        } else {
            0.0
        };
        let [x1, y1] = to_px(cws[k]);
        let [x2, y2] = to_px(cws[k + 1]);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}"/>"#,
            fmt6(x1),
            fmt6(y1),
            fmt6(x2),
            fmt6(y2),
            ramp(t)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="0.5">"#);
    let n = codebook.len();
    for (i, c) in cws.into_iter().enumerate() {
        let [x, y] = to_px(c);
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#,
            fmt6(x),
            fmt6(y),
            ramp(i as f64 / (n - 1) as f64)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_curve_svg(
    data: &VectorSet,
    codebook: &Codebook,
    path: impl AsRef<Path>,
) -> Result<()> {
    let svg = curve_svg(data, codebook)?;
    fs::write(path, svg)?;
    Ok(())
}

/// Binary 8-bit PGM of a square matrix, bright where entries are small.
pub fn heatmap_pgm(matrix: &[Vec<f64>]) -> Result<Vec<u8>> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    if let Some(r) = matrix.iter().position(|row| row.len() != n) {
        return Err(Error::Shape(format!(
            "row {r} has {} entries in a {n}x{n} matrix",
            matrix[r].len()
        )));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite heatmap entry".into()));
    }
    let max = matrix.iter().flatten().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    for v in matrix.iter().flatten() {
        let px = if max > 0.0 {
            (255.0 * (1.0 - v / max)).round().clamp(0.0, 255.0) as u8
        } else {
            255
        };
        out.push(px);
    }
    Ok(out)
}

pub fn render_heatmap_pgm(matrix: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let bytes = heatmap_pgm(matrix)?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt6_digits() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(123.456789), "123.457");
        assert_eq!(fmt6(800.0), "800");
        assert_eq!(fmt6(0.000123456789), "0.000123457");
        assert_eq!(fmt6(-1.5), "-1.5");
        assert_eq!(fmt6(-0.0000001), "-0.0000001");
    }

    #[test]
    fn header_arithmetic() {
        let vs = VectorSet::new(3, vec![0.5; 6]).unwrap();
        let bytes = encode_vectors(&vs).unwrap();
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(&bytes[..8], b"SFVQVEC1");
        assert_eq!(&bytes[8..16], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(decode_vectors(&bytes, Path::new("x")).unwrap(), vs);
    }

    #[test]
    fn decode_errors() {
        let vs = VectorSet::new(2, vec![1.0, 2.0]).unwrap();
        let mut bytes = encode_vectors(&vs).unwrap();
        let p = Path::new("x.vec");
        assert!(matches!(
            decode_vectors(&bytes[..bytes.len() - 1], p),
            Err(Error::Length { .. })
        ));
        assert!(matches!(
            decode_vectors(&bytes[..10], p),
            Err(Error::Length { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_vectors(&long, p),
            Err(Error::Format { .. })
        ));
        bytes[7] = b'2';
        assert!(matches!(
            decode_vectors(&bytes, p),
            Err(Error::Format { .. })
        ));
        let mut nan = encode_vectors(&vs).unwrap();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_vectors(&nan, p), Err(Error::Numeric(_))));
        let huge = VectorSet::new(1, vec![1e300]).unwrap();
        assert!(matches!(encode_vectors(&huge), Err(Error::Numeric(_))));
    }

    #[test]
    fn csv_parsing() {
        let p = Path::new("x.csv");
        let vs = decode_csv("1,2\n\n3.5, -4\n", p).unwrap();
        assert_eq!(vs.as_slice(), &[1.0, 2.0, 3.5, -4.0]);
        assert!(decode_csv("1,2\n3\n", p).is_err());
        assert!(decode_csv("", p).is_err());
        assert!(decode_csv("a,b\n", p).is_err());
        assert_eq!(decode_csv(&encode_csv(&vs), p).unwrap(), vs);
    }

    #[test]
    fn pgm_examples() {
        let zeros = vec![vec![0.0; 2]; 2];
        assert_eq!(&heatmap_pgm(&zeros).unwrap()[11..], &[255; 4]);

        let m = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![0.5, 1.0, 0.0],
        ];
        let bytes = heatmap_pgm(&m).unwrap();
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 9);
        assert_eq!((px[0], px[4], px[8]), (255, 255, 255));
        assert_eq!(px.iter().filter(|&&p| p == 0).count(), 1);
        assert_eq!(px[1], 128);

        assert!(matches!(
            heatmap_pgm(&[vec![0.0, 1.0]]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            heatmap_pgm(&[vec![f64::NAN]]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn ramp_darkens() {
        let lum = |t: f64| {
            let c: Vec<f64> = LIGHT
                .iter()
                .zip(DARK)
                .map(|(l, d)| l + (d - l) * t)
                .collect();
            0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
        };
        assert!(lum(0.0) > lum(0.5) && lum(0.5) > lum(1.0));
        assert_eq!(ramp(0.0), "rgb(222,235,247)");
        assert_eq!(ramp(1.0), "rgb(8,48,107)");
    }

    #[test]
    fn svg_rejects_one_dimensional() {
        let data = VectorSet::new(1, vec![0.0, 1.0]).unwrap();
        let cb = Codebook::new(data.clone()).unwrap();
        assert!(matches!(
            curve_svg(&data, &cb),
            Err(Error::Dimension { .. })
        ));
    }
}
