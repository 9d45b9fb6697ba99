//! In-memory volume model shared by every stage: a 3D scalar field with voxel
//! spacing, a canonical-axes orientation tag, and free-form provenance.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array3;

use crate::error::{Error, Result};

/// Anatomical direction of increasing index along each grid axis, restricted
/// to the eight axis-aligned sign combinations (x: R/L, y: A/P, z: S/I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    Ras,
    Las,
    Rps,
    Lps,
    Rai,
    Lai,
    Rpi,
    Lpi,
}

impl Orientation {
    pub const ALL: [Orientation; 8] = [
        Orientation::Ras,
        Orientation::Las,
        Orientation::Rps,
        Orientation::Lps,
        Orientation::Rai,
        Orientation::Lai,
        Orientation::Rpi,
        Orientation::Lpi,
    ];

    /// Sign of each axis relative to RAS (+x = Right, +y = Anterior, +z = Superior).
    pub fn signs(self) -> [i8; 3] {
        let code = self.code();
        let b = code.as_bytes();
        [
            if b[0] == b'R' { 1 } else { -1 },
            if b[1] == b'A' { 1 } else { -1 },
            if b[2] == b'S' { 1 } else { -1 },
        ]
    }

    pub fn code(self) -> &'static str {
        match self {
            Orientation::Ras => "RAS",
            Orientation::Las => "LAS",
            Orientation::Rps => "RPS",
            Orientation::Lps => "LPS",
            Orientation::Rai => "RAI",
            Orientation::Lai => "LAI",
            Orientation::Rpi => "RPI",
            Orientation::Lpi => "LPI",
        }
    }

    pub fn from_signs(signs: [i8; 3]) -> Orientation {
        let x = signs[0] > 0;
        let y = signs[1] > 0;
        let z = signs[2] > 0;
        match (x, y, z) {
            (true, true, true) => Orientation::Ras,
            (false, true, true) => Orientation::Las,
            (true, false, true) => Orientation::Rps,
            (false, false, true) => Orientation::Lps,
            (true, true, false) => Orientation::Rai,
            (false, true, false) => Orientation::Lai,
            (true, false, false) => Orientation::Rpi,
            (false, false, false) => Orientation::Lpi,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A 3D scalar field. `data[[i, j, k]]` is the voxel at grid index (i, j, k);
/// axis 0 is left-right, axis 1 anterior-posterior, axis 2 slice direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub data: Array3<f32>,
    /// Voxel edge lengths in mm, all strictly positive.
    pub spacing: [f32; 3],
    pub orientation: Orientation,
    /// Free-form provenance carried through the pipeline and persisted as a sidecar.
    pub meta: BTreeMap<String, String>,
}

impl Volume {
    pub fn new(data: Array3<f32>, spacing: [f32; 3], orientation: Orientation) -> Result<Volume> {
        let v = Volume { data, spacing, orientation, meta: BTreeMap::new() };
        v.validate()?;
        Ok(v)
    }

    /// Checks the invariants every module must uphold on its outputs.
    pub fn validate(&self) -> Result<()> {
        if self.spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "spacing must be positive, got {:?}",
                self.spacing
            )));
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("volume data contains NaN/Inf".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        let d = self.data.dim();
        (d.0, d.1, d.2)
    }

    /// Same grid, new data.
    pub fn with_data(&self, data: Array3<f32>) -> Volume {
        Volume {
            data,
            spacing: self.spacing,
            orientation: self.orientation,
            meta: self.meta.clone(),
        }
    }
}

/// A {0,1} field on the same grid as its owning volume.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub data: Array3<u8>,
}

impl BinaryMask {
    pub fn new(data: Array3<u8>) -> Result<BinaryMask> {
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidSpec("mask values must be 0 or 1".into()));
        }
        Ok(BinaryMask { data })
    }

    pub fn zeros(shape: (usize, usize, usize)) -> BinaryMask {
        BinaryMask { data: Array3::zeros(shape) }
    }

    /// Interprets a volume as a mask; every voxel must be exactly 0 or 1.
    pub fn from_volume(v: &Volume) -> Result<BinaryMask> {
        let mut data = Array3::zeros(v.data.dim());
        for (m, &x) in data.iter_mut().zip(v.data.iter()) {
            if x == 0.0 {
                *m = 0;
            } else if x == 1.0 {
                *m = 1;
            } else {
                return Err(Error::InvalidSpec(format!(
                    "mask volume has non-binary value {x}"
                )));
            }
        }
        Ok(BinaryMask { data })
    }

    pub fn to_volume(&self, spacing: [f32; 3], orientation: Orientation) -> Volume {
        Volume {
            data: self.data.mapv(|v| v as f32),
            spacing,
            orientation,
            meta: BTreeMap::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    /// Errors unless the mask shape equals the owner's grid.
    pub fn check_grid(&self, owner: &Volume) -> Result<()> {
        if self.data.dim() != owner.data.dim() {
            return Err(Error::ShapeMismatch(format!(
                "mask shape {:?} != volume shape {:?}",
                self.data.dim(),
                owner.data.dim()
            )));
        }
        Ok(())
    }
}
