//! PLY point clouds: ASCII and binary little-endian, `x`/`y`/`z` as float or
//! double. Other vertex properties and other elements are read and skipped.

use std::fmt::Write as _;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Self::F32 | Self::F64)
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => f64::from(b[0] as i8),
            Self::U8 => f64::from(b[0]),
            Self::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            Self::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            Self::I32 => f64::from(i32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Self::U32 => f64::from(u32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Self::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::ParseAt {
        offset,
        message: message.into(),
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut first = true;

    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(parse_err(bytes.len(), "header not terminated by end_header"));
        };
        let line_start = offset;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| parse_err(line_start, "header is not valid UTF-8"))?
            .trim_end_matches('\r');
        offset += nl + 1;

        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or("");
        if first {
            if line != "ply" {
                return Err(parse_err(0, "missing 'ply' magic"));
            }
            first = false;
            continue;
        }
        match keyword {
            "" | "comment" | "obj_info" => {}
            "format" => {
                let fmt = tokens.next().unwrap_or("");
                encoding = Some(match fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(parse_err(line_start, "unsupported endianness: binary_big_endian"))
                    }
                    other => return Err(parse_err(line_start, format!("unknown format '{other}'"))),
                });
            }
            "element" => {
                let name = tokens.next().ok_or_else(|| parse_err(line_start, "element without name"))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(line_start, "element count is not a non-negative integer"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_start, "property before any element"))?;
                let ty = tokens.next().unwrap_or("");
                let prop = if ty == "list" {
                    let count_ty = tokens.next().and_then(ScalarType::parse);
                    let item_ty = tokens.next().and_then(ScalarType::parse);
                    match (count_ty, item_ty, tokens.next()) {
                        (Some(count_ty), Some(item_ty), Some(_)) => Property::List { count_ty, item_ty },
                        _ => return Err(parse_err(line_start, "malformed list property")),
                    }
                } else {
                    let ty = ScalarType::parse(ty)
                        .ok_or_else(|| parse_err(line_start, format!("unknown property type '{ty}'")))?;
                    let name = tokens.next().ok_or_else(|| parse_err(line_start, "property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                element.properties.push(prop);
            }
            "end_header" => break,
            other => return Err(parse_err(line_start, format!("unexpected header keyword '{other}'"))),
        }
    }

    let encoding = encoding.ok_or_else(|| parse_err(0, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
    })
}

/// Positions of x, y, z within the vertex property list.
fn xyz_slots(element: &Element, header_offset: usize) -> Result<[usize; 3]> {
    let mut slots = [usize::MAX; 3];
    for (k, prop) in element.properties.iter().enumerate() {
        if let Property::Scalar { name, ty } = prop {
            let axis = match name.as_str() {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => continue,
            };
            if !ty.is_float() {
                return Err(parse_err(header_offset, format!("vertex property '{name}' must be float or double")));
            }
            slots[axis] = k;
        }
    }
    if slots.contains(&usize::MAX) {
        return Err(parse_err(header_offset, "vertex element lacks x, y and z properties"));
    }
    Ok(slots)
}

struct AsciiTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> AsciiTokens<'a> {
    fn next(&mut self) -> Result<(usize, f64)> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(parse_err(self.pos, "truncated body: expected more values"));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| parse_err(start, "invalid UTF-8"))?;
        let value = text
            .parse::<f64>()
            .map_err(|_| parse_err(start, format!("'{text}' is not a number")))?;
        Ok((start, value))
    }
}

struct BinaryReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BinaryReader<'a> {
    fn read(&mut self, ty: ScalarType) -> Result<f64> {
        let size = ty.size();
        if self.pos + size > self.bytes.len() {
            return Err(parse_err(self.pos, "truncated body: unexpected end of data"));
        }
        let v = ty.decode_le(&self.bytes[self.pos..self.pos + size]);
        self.pos += size;
        Ok(v)
    }
}

fn list_len(value: f64, offset: usize) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        return Err(parse_err(offset, "list length must be a non-negative integer"));
    }
    Ok(value as usize)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(header.body_offset, "no vertex element"))?;
    let slots = xyz_slots(&header.elements[vertex_pos], header.body_offset)?;

    let mut points = Vec::with_capacity(header.elements[vertex_pos].count);
    let mut row = Vec::new();
    match header.encoding {
        PlyEncoding::Ascii => {
            let mut tokens = AsciiTokens {
                bytes,
                pos: header.body_offset,
            };
            for (e_idx, element) in header.elements.iter().enumerate() {
                for _ in 0..element.count {
                    row.clear();
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { .. } => row.push(tokens.next()?.1),
                            Property::List { .. } => {
                                let (at, n) = tokens.next()?;
                                for _ in 0..list_len(n, at)? {
                                    tokens.next()?;
                                }
                                row.push(f64::NAN);
                            }
                        }
                    }
                    if e_idx == vertex_pos {
                        points.push(Point3::new(row[slots[0]], row[slots[1]], row[slots[2]]));
                    }
                }
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let mut reader = BinaryReader {
                bytes,
                pos: header.body_offset,
            };
            for (e_idx, element) in header.elements.iter().enumerate() {
                for _ in 0..element.count {
                    row.clear();
                    for prop in &element.properties {
                        match *prop {
                            Property::Scalar { ty, .. } => row.push(reader.read(ty)?),
                            Property::List { count_ty, item_ty } => {
                                let at = reader.pos;
                                let n = list_len(reader.read(count_ty)?, at)?;
                                for _ in 0..n {
                                    reader.read(item_ty)?;
                                }
                                row.push(f64::NAN);
                            }
                        }
                    }
                    if e_idx == vertex_pos {
                        points.push(Point3::new(row[slots[0]], row[slots[1]], row[slots[2]]));
                    }
                }
            }
        }
    }
    if let Some(idx) = points.iter().position(|p| !p.is_finite()) {
        return Err(parse_err(header.body_offset, format!("vertex {idx} has a non-finite coordinate")));
    }
    PointCloud::new(points)
}

/// Serializes a cloud with `x`, `y`, `z` stored as `scalar` (F32 or F64).
pub fn write_ply(cloud: &PointCloud, encoding: PlyEncoding, scalar: ScalarType) -> Result<Vec<u8>> {
    let type_name = match scalar {
        ScalarType::F32 => "float",
        ScalarType::F64 => "double",
        _ => return Err(Error::invalid("PLY coordinates must be written as float or double")),
    };
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let mut header = String::new();
    let _ = write!(
        header,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty {type_name} x\nproperty {type_name} y\nproperty {type_name} z\nend_header\n",
        cloud.len()
    );
    let mut out = header.into_bytes();
    match encoding {
        PlyEncoding::Ascii => {
            let mut body = String::with_capacity(cloud.len() * 32);
            for p in cloud.points() {
                let _ = match scalar {
                    ScalarType::F32 => writeln!(body, "{} {} {}", p.x as f32, p.y as f32, p.z as f32),
                    _ => writeln!(body, "{} {} {}", p.x, p.y, p.z),
                };
            }
            out.extend_from_slice(body.as_bytes());
        }
        PlyEncoding::BinaryLittleEndian => {
            out.reserve(cloud.len() * 3 * scalar.size());
            for p in cloud.points() {
                for v in [p.x, p.y, p.z] {
                    match scalar {
                        ScalarType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                        _ => out.extend_from_slice(&v.to_le_bytes()),
                    }
                }
            }
        }
    }
    Ok(out)
}
