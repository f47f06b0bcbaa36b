//! PLY point-cloud interchange.
//!
//! Writes `ascii` or `binary_little_endian` files with `float x, y, z`
//! vertex properties. Two comment lines carry the cloud metadata:
//!
//! ```text
//! comment frame sensor
//! comment sensor_origin 0.0 0.0 1.5
//! ```
//!
//! The reader accepts any scalar vertex properties (x, y, z required) and
//! reports malformed input with the byte offset where parsing failed.

use std::fs;
use std::path::Path;

use super::{Frame, PointCloud, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn to_bytes(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let o = cloud.sensor_origin;
    let mut out = format!(
        "ply\nformat {fmt} 1.0\ncomment frame {}\ncomment sensor_origin {} {} {}\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.frame.as_str(),
        o.x,
        o.y,
        o.z,
        cloud.len()
    )
    .into_bytes();
    match format {
        PlyFormat::Ascii => {
            for p in &cloud.points {
                out.extend_from_slice(format!("{} {} {}\n", p.x as f32, p.y as f32, p.z as f32).as_bytes());
            }
        }
        PlyFormat::BinaryLittleEndian => {
            for p in &cloud.points {
                for v in [p.x, p.y, p.z] {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn write_ply(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    fs::write(path, to_bytes(cloud, format)).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

struct Element {
    name: String,
    count: usize,
    props: Vec<(String, Scalar)>,
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Parses PLY bytes into a cloud.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Result<(usize, String)> {
        let start = *pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| start + i)
            .ok_or_else(|| err(start, "unexpected end of header"))?;
        *pos = end + 1;
        let line = std::str::from_utf8(&bytes[start..end])
            .map_err(|_| err(start, "header is not valid UTF-8"))?
            .trim_end_matches('\r')
            .to_string();
        Ok((start, line))
    };

    let (off, magic) = next_line(&mut pos)?;
    if magic.trim() != "ply" {
        return Err(err(off, "missing 'ply' magic"));
    }
    let mut format = None;
    let mut frame = Frame::Sensor;
    let mut origin = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (off, line) = next_line(&mut pos)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, ..] => return Err(err(off, format!("unsupported format '{other}'"))),
            ["comment", "frame", f] => {
                frame = match *f {
                    "sensor" => Frame::Sensor,
                    "site" => Frame::Site,
                    other => return Err(err(off, format!("unknown frame '{other}'"))),
                }
            }
            ["comment", "sensor_origin", x, y, z] => {
                let parse = |s: &str| s.parse::<f64>().map_err(|_| err(off, format!("bad sensor_origin value '{s}'")));
                origin = Some(Vec3::new(parse(x)?, parse(y)?, parse(z)?));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| err(off, format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let el = elements.last().ok_or_else(|| err(off, "property before element"))?;
                if el.name == "vertex" || elements.iter().all(|e| e.name != "vertex") {
                    return Err(err(off, "list properties are only supported after the vertex element"));
                }
            }
            ["property", ty, name] => {
                let scalar = Scalar::parse(ty).ok_or_else(|| err(off, format!("unknown property type '{ty}'")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| err(off, "property before element"))?
                    .props
                    .push((name.to_string(), scalar));
            }
            _ => return Err(err(off, format!("unrecognised header line '{line}'"))),
        }
    }
    let format = format.ok_or_else(|| err(0, "missing format line"))?;
    let origin = origin.ok_or_else(|| err(0, "missing 'comment sensor_origin x y z' line"))?;
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| err(pos, "no vertex element"))?;
    let idx = |n: &str| elements[vi].props.iter().position(|(p, _)| p == n);
    let (ix, iy, iz) = match (idx("x"), idx("y"), idx("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(err(pos, "vertex element lacks x, y, z properties")),
    };

    // skip scalar-only elements that precede the vertices
    let mut points = Vec::with_capacity(elements[vi].count);
    match format {
        PlyFormat::BinaryLittleEndian => {
            for e in &elements[..vi] {
                let stride: usize = e.props.iter().map(|(_, s)| s.size()).sum();
                pos += stride * e.count;
            }
            let props = &elements[vi].props;
            let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
            let mut offsets = Vec::with_capacity(props.len());
            let mut acc = 0;
            for (_, s) in props {
                offsets.push(acc);
                acc += s.size();
            }
            for _ in 0..elements[vi].count {
                if pos + stride > bytes.len() {
                    return Err(err(bytes.len(), format!("truncated vertex data: needed {} bytes at offset {pos}", stride)));
                }
                let rec = &bytes[pos..pos + stride];
                let get = |k: usize| props[k].1.read_le(&rec[offsets[k]..]);
                points.push(Vec3::new(get(ix), get(iy), get(iz)));
                pos += stride;
            }
        }
        PlyFormat::Ascii => {
            let mut lines_to_skip: usize = elements[..vi].iter().map(|e| e.count).sum();
            while lines_to_skip > 0 {
                next_line(&mut pos)?;
                lines_to_skip -= 1;
            }
            let nprops = elements[vi].props.len();
            for _ in 0..elements[vi].count {
                if pos >= bytes.len() {
                    return Err(err(pos, "truncated vertex data"));
                }
                let (off, line) = match next_line(&mut pos) {
                    Ok(v) => v,
                    Err(_) => {
                        let start = pos;
                        pos = bytes.len();
                        (
                            start,
                            std::str::from_utf8(&bytes[start..])
                                .map_err(|_| err(start, "vertex data is not valid UTF-8"))?
                                .to_string(),
                        )
                    }
                };
                let vals: Vec<&str> = line.split_whitespace().collect();
                if vals.len() < nprops {
                    return Err(err(off, format!("expected {nprops} values, found {}", vals.len())));
                }
                let props = &elements[vi].props;
                let num = |k: usize| -> Result<f64> {
                    let v = vals[k].parse::<f64>().map_err(|_| err(off, format!("bad number '{}'", vals[k])))?;
                    // shortest f32 text reparsed as f64 is not the stored value
                    Ok(match props[k].1 {
                        Scalar::F32 => v as f32 as f64,
                        _ => v,
                    })
                };
                points.push(Vec3::new(num(ix)?, num(iy)?, num(iz)?));
            }
        }
    }
    if let Some(bad) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
        return Err(err(pos, format!("vertex {bad} has a non-finite coordinate")));
    }
    Ok(PointCloud::new(points, frame, origin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> PointCloud {
        PointCloud::new(
            vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.25, -1.5)],
            Frame::Site,
            Vec3::new(0.0, 0.0, 1.5),
        )
    }

    #[test]
    fn both_formats_round_trip() {
        for fmt in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let back = parse_ply(&to_bytes(&sample(), fmt)).unwrap();
            assert_eq!(back, sample());
        }
    }

    #[test]
    fn truncated_binary_names_offset() {
        let mut bytes = to_bytes(&sample(), PlyFormat::BinaryLittleEndian);
        bytes.truncate(bytes.len() - 3);
        match parse_ply(&bytes) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset as usize, bytes.len());
                assert!(message.contains("truncated"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_ascii_value_names_line_offset() {
        let text = "ply\nformat ascii 1.0\ncomment sensor_origin 0 0 0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 two 3\n";
        let header_len = text.find("1 two").unwrap();
        match parse_ply(text.as_bytes()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset as usize, header_len),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_origin_rejected() {
        let text = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(text.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn extra_properties_and_doubles() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\ncomment sensor_origin 1 2 3\nelement vertex 1\nproperty uchar intensity\nproperty double x\nproperty double y\nproperty double z\nend_header\n".to_vec();
        bytes.push(7);
        for v in [0.1f64, 0.2, 0.3] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let c = parse_ply(&bytes).unwrap();
        assert_eq!(c.points[0], Vec3::new(0.1, 0.2, 0.3));
        assert_eq!(c.sensor_origin, Vec3::new(1.0, 2.0, 3.0));
    }

    proptest! {
        #[test]
        fn f32_exact_points_survive(xs in proptest::collection::vec((-1e4f32..1e4, -1e4f32..1e4, -1e3f32..1e3), 0..50)) {
            let pts: Vec<Vec3> = xs.iter().map(|&(x, y, z)| Vec3::new(x as f64, y as f64, z as f64)).collect();
            let cloud = PointCloud::new(pts, Frame::Sensor, Vec3::new(0.5, -0.25, 1.5));
            for fmt in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
                prop_assert_eq!(parse_ply(&to_bytes(&cloud, fmt)).unwrap(), cloud.clone());
            }
        }
    }
}
