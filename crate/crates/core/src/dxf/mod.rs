//! ASCII DXF writer and reader for the sketch subset, a structural linter,
//! and point-cloud sampling of drawn geometry.

mod lint;
mod reader;
mod sample;
mod writer;

use thiserror::Error;

pub use lint::lint_dxf;
pub use reader::{parse_pairs, read_dxf, DxfRead};
pub use sample::{bbox_diagonal, sample_points, PointCloud};
pub use writer::{write_dxf, DxfDocument};

pub const LAYER_GEOMETRY: &str = "GEOM";
pub const LAYER_ANNOTATION: &str = "ANNOT";
pub const ACAD_VERSION: &str = "AC1015";

/// Prefixes of TEXT entities that carry annotations DXF has no entity for.
pub const TOLERANCE_PREFIX: &str = "TOL\u{b1}";
pub const CHAMFER_PREFIX: &str = "C";
pub const ROUGHNESS_PREFIX: &str = "Ra";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DxfError {
    #[error("malformed DXF: {0}")]
    Malformed(String),
    #[error("malformed {entity} entity: {message}")]
    BadEntity { entity: String, message: String },
    #[error("cannot sample an empty model")]
    EmptyModel,
    #[error("sample budget must be at least 1")]
    ZeroBudget,
}

/// Escapes non-ASCII characters as `\U+XXXX` so files stay 7-bit clean.
pub(crate) fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii() {
            out.push(c);
        } else {
            let mut buf = [0u16; 2];
            for unit in c.encode_utf16(&mut buf) {
                out.push_str(&format!("\\U+{unit:04X}"));
            }
        }
    }
    out
}

pub(crate) fn unescape_text(s: &str) -> String {
    let mut units: Vec<u16> = Vec::new();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    let flush = |units: &mut Vec<u16>, out: &mut String| {
        out.extend(char::decode_utf16(units.drain(..)).map(|r| r.unwrap_or('\u{fffd}')));
    };
    while i < s.len() {
        if s[i..].starts_with("\\U+") {
            let hex = s.get(i + 3..i + 7).filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()));
            if let Some(u) = hex.and_then(|h| u16::from_str_radix(h, 16).ok()) {
                units.push(u);
                i += 7;
                continue;
            }
        }
        flush(&mut units, &mut out);
        let c = s[i..].chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    flush(&mut units, &mut out);
    out
}
