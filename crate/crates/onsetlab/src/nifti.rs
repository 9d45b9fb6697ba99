//! Minimal NIfTI-1 single-file (.nii) reader/writer.
//!
//! Scope is deliberately narrow: little-endian, axis-aligned affines, 3D
//! scalar volumes. Intensities are converted to 32-bit floats on read no
//! matter the on-disk type; writes always store float32. Free-form `meta`
//! travels in a JSON sidecar next to the volume (`<stem>.meta.json`).

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array3;

use crate::error::{Error, Result};
use crate::volume::{Orientation, Volume};

const HEADER_SIZE: i32 = 348;
const VOX_OFFSET: f32 = 352.0;
const MAGIC: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Reads a single-volume NIfTI-1 file, scaling intensities to f32.
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    if bytes.len() < 352 {
        return Err(malformed("file shorter than a NIfTI-1 header"));
    }
    let mut c = Cursor::new(&bytes);
    let sizeof_hdr = c.read_i32::<LittleEndian>().unwrap();
    if sizeof_hdr != HEADER_SIZE {
        if sizeof_hdr.swap_bytes() == HEADER_SIZE {
            return Err(malformed("big-endian NIfTI is not supported"));
        }
        return Err(malformed("bad sizeof_hdr (not a NIfTI-1 file)"));
    }
    if &bytes[344..348] != MAGIC {
        return Err(malformed("missing n+1 magic (only single-file .nii supported)"));
    }

    let mut dim = [0i16; 8];
    for (d, chunk) in dim.iter_mut().zip(bytes[40..56].chunks_exact(2)) {
        *d = i16::from_le_bytes([chunk[0], chunk[1]]);
    }
    let ndim = dim[0];
    if ndim == 4 && dim[4] > 1 {
        return Err(malformed("4D series are not supported; expected a single 3D volume"));
    }
    if !(1..=4).contains(&ndim) {
        return Err(malformed(&format!("unsupported dimensionality {ndim}")));
    }
    let nx = dim[1].max(1) as usize;
    let ny = if ndim >= 2 { dim[2].max(1) as usize } else { 1 };
    let nz = if ndim >= 3 { dim[3].max(1) as usize } else { 1 };

    let datatype = i16::from_le_bytes([bytes[70], bytes[71]]);
    let mut pixdim = [0f32; 8];
    for (p, chunk) in pixdim.iter_mut().zip(bytes[76..108].chunks_exact(4)) {
        *p = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
    }
    let vox_offset = f32::from_le_bytes(bytes[108..112].try_into().unwrap()) as usize;
    let scl_slope = f32::from_le_bytes(bytes[112..116].try_into().unwrap());
    let scl_inter = f32::from_le_bytes(bytes[116..120].try_into().unwrap());
    let sform_code = i16::from_le_bytes([bytes[254], bytes[255]]);

    let spacing = [pixdim[1], pixdim[2], pixdim[3]];
    if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(malformed(&format!("non-positive voxel spacing {spacing:?}")));
    }

    let orientation = if sform_code > 0 {
        let mut srow = [[0f32; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            for (cix, v) in row.iter_mut().enumerate() {
                let off = 280 + r * 16 + cix * 4;
                *v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            }
        }
        let mut signs = [0i8; 3];
        for axis in 0..3 {
            let col = [srow[0][axis], srow[1][axis], srow[2][axis]];
            // Axis-aligned: the on-diagonal entry must dominate.
            let diag = col[axis];
            let off_mag = col
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != axis)
                .map(|(_, v)| v.abs())
                .fold(0.0f32, f32::max);
            if diag.abs() < 1e-6 || off_mag > 1e-3 * diag.abs() {
                return Err(malformed("non-axis-aligned affine is not supported"));
            }
            signs[axis] = if diag > 0.0 { 1 } else { -1 };
        }
        Orientation::from_signs(signs)
    } else {
        Orientation::Ras
    };

    let offset = vox_offset.max(352);
    let nvox = nx * ny * nz;
    let elem = match datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        DT_INT32 | DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => return Err(malformed(&format!("unsupported datatype code {other}"))),
    };
    if bytes.len() < offset + nvox * elem {
        return Err(malformed("file truncated: fewer voxels than the header promises"));
    }
    let raw = &bytes[offset..offset + nvox * elem];
    let mut flat = Vec::with_capacity(nvox);
    match datatype {
        DT_UINT8 => flat.extend(raw.iter().map(|&b| b as f32)),
        DT_INT16 => flat.extend(
            raw.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]]) as f32),
        ),
        DT_INT32 => flat.extend(
            raw.chunks_exact(4)
                .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f32),
        ),
        DT_FLOAT32 => flat.extend(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        ),
        DT_FLOAT64 => flat.extend(raw.chunks_exact(8).map(|c| {
            f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]) as f32
        })),
        _ => unreachable!(),
    }
    // slope == 0 means "no scaling" per the standard.
    if scl_slope != 0.0 && (scl_slope != 1.0 || scl_inter != 0.0) {
        for v in &mut flat {
            *v = *v * scl_slope + scl_inter;
        }
    }
    if !flat.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(format!("{} holds NaN/Inf voxels", path.display())));
    }

    // NIfTI stores x fastest; build in Fortran order then normalize layout.
    use ndarray::ShapeBuilder;
    let arr_f = Array3::from_shape_vec((nx, ny, nz).f(), flat)
        .map_err(|e| malformed(&format!("dim/data mismatch: {e}")))?;
    let data = arr_f.as_standard_layout().to_owned();

    let mut meta = BTreeMap::new();
    let sc = sidecar_path(path);
    if sc.exists() {
        let text = fs::read_to_string(&sc).map_err(|e| Error::io(&sc, e))?;
        meta = serde_json::from_str(&text)?;
    }

    let mut vol = Volume::new(data, spacing, orientation)?;
    vol.meta = meta;
    Ok(vol)
}

/// Writes a volume as float32 NIfTI-1, plus a JSON sidecar when meta is nonempty.
pub fn write_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    v.validate()?;
    let (nx, ny, nz) = v.shape();

    let mut out: Vec<u8> = Vec::with_capacity(352 + nx * ny * nz * 4);
    // header
    out.write_i32::<LittleEndian>(HEADER_SIZE).unwrap();
    out.resize(40, 0); // data_type/db_name/extents/session_error/regular/dim_info
    let dims: [i16; 8] = [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for d in dims {
        out.write_i16::<LittleEndian>(d).unwrap();
    }
    out.resize(70, 0); // intent_p1..3, intent_code
    out.write_i16::<LittleEndian>(DT_FLOAT32).unwrap();
    out.write_i16::<LittleEndian>(32).unwrap(); // bitpix
    out.write_i16::<LittleEndian>(0).unwrap(); // slice_start
    let pixdim: [f32; 8] = [1.0, v.spacing[0], v.spacing[1], v.spacing[2], 0.0, 0.0, 0.0, 0.0];
    for p in pixdim {
        out.write_f32::<LittleEndian>(p).unwrap();
    }
    out.write_f32::<LittleEndian>(VOX_OFFSET).unwrap();
    out.write_f32::<LittleEndian>(1.0).unwrap(); // scl_slope
    out.write_f32::<LittleEndian>(0.0).unwrap(); // scl_inter
    out.write_i16::<LittleEndian>(0).unwrap(); // slice_end
    out.push(0); // slice_code
    out.push(2); // xyzt_units: mm
    out.resize(148, 0); // cal_max..glmin
    let descrip = b"onsetlab";
    out.extend_from_slice(descrip);
    out.resize(252, 0); // rest of descrip + aux_file
    out.write_i16::<LittleEndian>(0).unwrap(); // qform_code
    out.write_i16::<LittleEndian>(1).unwrap(); // sform_code
    out.resize(280, 0); // quatern/qoffset
    let signs = v.orientation.signs();
    let mut srow = [[0f32; 4]; 3];
    for axis in 0..3 {
        srow[axis][axis] = signs[axis] as f32 * v.spacing[axis];
    }
    for row in srow {
        for val in row {
            out.write_f32::<LittleEndian>(val).unwrap();
        }
    }
    out.resize(344, 0); // intent_name
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[0, 0, 0, 0]); // no extensions
    debug_assert_eq!(out.len(), 352);

    // voxels, x fastest
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                out.write_f32::<LittleEndian>(v.data[[i, j, k]]).unwrap();
            }
        }
    }

    fs::write(path, &out).map_err(|e| Error::io(path, e))?;
    let sc = sidecar_path(path);
    if v.meta.is_empty() {
        if sc.exists() {
            fs::remove_file(&sc).map_err(|e| Error::io(&sc, e))?;
        }
    } else {
        let text = serde_json::to_string_pretty(&v.meta)?;
        fs::write(&sc, text).map_err(|e| Error::io(&sc, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn constant_volume_round_trips() {
        let dir = tmpdir();
        let p = dir.path().join("c.nii");
        let data = Array3::from_elem((8, 8, 8), 3.25f32);
        let v = Volume::new(data, [1.0, 1.0, 1.0], Orientation::Ras).unwrap();
        write_volume(&v, &p).unwrap();
        let r = read_volume(&p).unwrap();
        assert_eq!(r.data, v.data);
        assert_eq!(r.spacing, v.spacing);
        assert_eq!(r.orientation, v.orientation);
    }

    #[test]
    fn spacing_passes_through() {
        let dir = tmpdir();
        let p = dir.path().join("s.nii");
        let v = Volume::new(Array3::zeros((4, 4, 4)), [1.0, 1.0, 6.5], Orientation::Ras).unwrap();
        write_volume(&v, &p).unwrap();
        let r = read_volume(&p).unwrap();
        assert_eq!(r.spacing, [1.0, 1.0, 6.5]);
    }

    #[test]
    fn random_volumes_round_trip_bit_exact() {
        let dir = tmpdir();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for trial in 0..100 {
            let shape = (
                rng.random_range(2..10usize),
                rng.random_range(2..10usize),
                rng.random_range(2..10usize),
            );
            let data = Array3::from_shape_fn(shape, |_| rng.random_range(-10.0f32..10.0));
            let spacing = [
                rng.random_range(0.2f32..4.0),
                rng.random_range(0.2f32..4.0),
                rng.random_range(0.2f32..4.0),
            ];
            let orient = Orientation::ALL[trial % 8];
            let v = Volume::new(data, spacing, orient).unwrap();
            let p = dir.path().join(format!("r{trial}.nii"));
            write_volume(&v, &p).unwrap();
            let r = read_volume(&p).unwrap();
            assert_eq!(r.data, v.data, "trial {trial}");
            assert_eq!(r.spacing, v.spacing);
            assert_eq!(r.orientation, v.orientation);
        }
    }

    #[test]
    fn corner_voxel_keeps_its_index() {
        let dir = tmpdir();
        let mut data = Array3::<f32>::zeros((5, 6, 7));
        data[[4, 0, 6]] = 9.0;
        let v = Volume::new(data, [1.0; 3], Orientation::Lps).unwrap();
        let p = dir.path().join("corner.nii");
        write_volume(&v, &p).unwrap();
        let r = read_volume(&p).unwrap();
        assert_eq!(r.data[[4, 0, 6]], 9.0);
        assert_eq!(r.data.iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn meta_survives_in_sidecar() {
        let dir = tmpdir();
        let p = dir.path().join("m.nii");
        let mut v = Volume::new(Array3::zeros((3, 3, 3)), [1.0; 3], Orientation::Ras).unwrap();
        v.meta.insert("stage".into(), "raw".into());
        v.meta.insert("case".into(), "case_0003".into());
        write_volume(&v, &p).unwrap();
        let r = read_volume(&p).unwrap();
        assert_eq!(r.meta.get("stage").map(String::as_str), Some("raw"));
        assert_eq!(r.meta.get("case").map(String::as_str), Some("case_0003"));
    }

    #[test]
    fn nan_rejected_on_write_and_read() {
        let dir = tmpdir();
        let p = dir.path().join("n.nii");
        let ok = Volume::new(Array3::zeros((4, 4, 4)), [1.0; 3], Orientation::Ras).unwrap();
        write_volume(&ok, &p).unwrap();

        let mut bad = ok.clone();
        bad.data[[0, 0, 0]] = f32::NAN;
        let err = write_volume(&bad, dir.path().join("bad.nii")).unwrap_err();
        assert!(err.to_string().contains("non-finite intensities"), "{err}");
        assert!(!dir.path().join("bad.nii").exists(), "no partial file");

        // Patch one stored voxel to NaN and re-read.
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[352..356].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        let err = read_volume(&p).unwrap_err();
        assert!(err.to_string().contains("non-finite intensities"), "{err}");
    }

    #[test]
    fn four_dimensional_series_rejected() {
        let dir = tmpdir();
        let p = dir.path().join("t.nii");
        let v = Volume::new(Array3::zeros((2, 2, 2)), [1.0; 3], Orientation::Ras).unwrap();
        write_volume(&v, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        // dim[0] = 4, dim[4] = 3
        bytes[40..42].copy_from_slice(&4i16.to_le_bytes());
        bytes[48..50].copy_from_slice(&3i16.to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        let err = read_volume(&p).unwrap_err();
        assert!(err.to_string().contains("4D"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_volume("/nonexistent/zz.nii").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn int16_with_scaling_converts_to_f32() {
        let dir = tmpdir();
        let p = dir.path().join("i16.nii");
        let v = Volume::new(
            Array3::from_shape_fn((3, 2, 2), |(i, j, k)| (i + 2 * j + 4 * k) as f32),
            [1.0; 3],
            Orientation::Ras,
        )
        .unwrap();
        write_volume(&v, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[70..72].copy_from_slice(&DT_INT16.to_le_bytes());
        bytes[72..74].copy_from_slice(&16i16.to_le_bytes());
        bytes[112..116].copy_from_slice(&0.5f32.to_le_bytes()); // scl_slope
        bytes[116..120].copy_from_slice(&1.0f32.to_le_bytes()); // scl_inter
        // Replace the payload with i16 values 0..12 in x-fastest order.
        let mut data = bytes[..352].to_vec();
        for idx in 0..12i16 {
            data.extend_from_slice(&idx.to_le_bytes());
        }
        std::fs::write(&p, &data).unwrap();
        let r = read_volume(&p).unwrap();
        // value = raw * 0.5 + 1.0; raw runs 0..12 in x-fastest order
        assert_eq!(r.data[[0, 0, 0]], 1.0);
        assert_eq!(r.data[[1, 0, 0]], 1.5);
        assert_eq!(r.data[[0, 1, 0]], 2.5);
        assert_eq!(r.data[[0, 0, 1]], 4.0);
    }
}
