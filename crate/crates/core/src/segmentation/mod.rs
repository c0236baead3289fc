//! Room and transition instance masks: the built-in segmenter, mask
//! interchange (RLE JSON), IoU and polygon rasterization.

mod heuristic;
mod polygon;
pub mod rle;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::BinaryGrid;
use crate::occupancy::GridSpec;

pub use heuristic::{connected_components, segment_heuristic, SegmenterParams};
pub use polygon::{point_in_polygon, polygon_to_mask};

pub type InstanceId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Room,
    Transition,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Room => "room",
            Category::Transition => "transition",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "room" => Ok(Category::Room),
            "transition" => Ok(Category::Transition),
            other => Err(Error::schema(format!("unknown category '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub instance_id: InstanceId,
    pub category: Category,
    pub mask: BinaryGrid,
    pub confidence: f64,
    /// Room-type phrase, when known (ground truth or labeled predictions).
    pub label: Option<String>,
}

impl InstanceMask {
    pub fn new(instance_id: InstanceId, category: Category, mask: BinaryGrid, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invalid(format!(
                "instance {instance_id}: confidence {confidence} outside [0, 1]"
            )));
        }
        if !mask.any() {
            return Err(Error::invalid(format!("instance {instance_id}: mask is empty")));
        }
        Ok(Self {
            instance_id,
            category,
            mask,
            confidence,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn area(&self) -> usize {
        self.mask.count_ones()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub spec: GridSpec,
    pub instances: Vec<InstanceMask>,
}

impl SegmentationResult {
    pub fn new(spec: GridSpec, instances: Vec<InstanceMask>) -> Result<Self> {
        let mut ids = HashSet::new();
        for inst in &instances {
            if !ids.insert(inst.instance_id) {
                return Err(Error::schema(format!("duplicate instance id {}", inst.instance_id)));
            }
            if inst.mask.dims() != (spec.width, spec.height) {
                return Err(Error::dim(format!(
                    "instance {} is {}x{}, grid is {}x{}",
                    inst.instance_id,
                    inst.mask.width(),
                    inst.mask.height(),
                    spec.width,
                    spec.height
                )));
            }
        }
        Ok(Self { spec, instances })
    }

    pub fn rooms(&self) -> impl Iterator<Item = &InstanceMask> {
        self.instances.iter().filter(|m| m.category == Category::Room)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &InstanceMask> {
        self.instances.iter().filter(|m| m.category == Category::Transition)
    }

    pub fn get(&self, id: InstanceId) -> Option<&InstanceMask> {
        self.instances.iter().find(|m| m.instance_id == id)
    }

    pub fn to_json(&self) -> String {
        let doc = MaskDoc {
            width: self.spec.width,
            height: self.spec.height,
            grid: Some(self.spec),
            instances: self
                .instances
                .iter()
                .map(|m| MaskRecord {
                    id: m.instance_id,
                    category: m.category.as_str().to_string(),
                    confidence: m.confidence,
                    label: m.label.clone(),
                    rle: rle::encode(&m.mask),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("masks serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Writes one PNG per instance as `<category>_<id>.png`.
    pub fn save_pngs(&self, dir: impl AsRef<Path>) -> Result<()> {
        for m in &self.instances {
            m.mask
                .save_png(dir.as_ref().join(format!("{}_{}.png", m.category, m.instance_id)))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MaskRecord {
    id: InstanceId,
    category: String,
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    rle: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct MaskDoc {
    width: usize,
    height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    instances: Vec<MaskRecord>,
}

/// Reads the grid geometry embedded in a mask document, when present.
pub fn mask_file_spec(text: &str) -> Result<Option<GridSpec>> {
    let doc: MaskDoc = serde_json::from_str(text)?;
    Ok(doc.grid)
}

/// Loads masks produced by an external predictor (or exported by this crate).
/// Overlapping instances are allowed.
pub fn import_masks(text: &str, spec: &GridSpec) -> Result<SegmentationResult> {
    let doc: MaskDoc = serde_json::from_str(text)?;
    if (doc.width, doc.height) != (spec.width, spec.height) {
        return Err(Error::dim(format!(
            "mask file is {}x{}, grid is {}x{}",
            doc.width, doc.height, spec.width, spec.height
        )));
    }
    let instances = doc
        .instances
        .into_iter()
        .map(|r| {
            let category: Category = r.category.parse()?;
            let mask = rle::decode(&r.rle, doc.width, doc.height)
                .map_err(|e| Error::schema(format!("instance {}: {e}", r.id)))?;
            let mut inst = InstanceMask::new(r.id, category, mask, r.confidence)
                .map_err(|e| Error::schema(e.to_string()))?;
            inst.label = r.label;
            Ok(inst)
        })
        .collect::<Result<Vec<_>>>()?;
    SegmentationResult::new(*spec, instances).map_err(|e| match e {
        Error::Dimension(m) => Error::Dimension(m),
        other => Error::schema(other.to_string()),
    })
}

/// Convenience loader that takes the grid geometry from the file itself.
pub fn load_masks(path: impl AsRef<Path>) -> Result<SegmentationResult> {
    let text = std::fs::read_to_string(path)?;
    let spec = mask_file_spec(&text)?.ok_or_else(|| Error::schema("mask file carries no grid geometry"))?;
    import_masks(&text, &spec)
}

/// Intersection over union; 0 when both masks are empty.
pub fn mask_iou(a: &BinaryGrid, b: &BinaryGrid) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}
