//! Ingestion and serialization of point clouds, object maps and embedding tables.

mod objects;
mod ply;
mod xyz;

use std::path::Path;

pub use objects::{EmbeddingTable, ObjectInstance, ObjectMap, MIN_EMBEDDING_NORM};
pub use ply::{parse_ply, write_ply, PlyEncoding, ScalarType};
pub use xyz::{parse_xyz, write_xyz};

use crate::cloud::PointCloud;
use crate::error::Result;

/// Loads a `.ply` or whitespace `.xyz`/`.txt` cloud, chosen by extension.
pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let is_ply = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"))
        || bytes.starts_with(b"ply\n")
        || bytes.starts_with(b"ply\r\n");
    if is_ply {
        parse_ply(&bytes)
    } else {
        parse_xyz(&String::from_utf8_lossy(&bytes))
    }
}

pub fn save_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_ply(cloud, PlyEncoding::BinaryLittleEndian, ScalarType::F64)?)?;
    Ok(())
}
