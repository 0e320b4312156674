//! On-disk formats.
//!
//! Rasters are a raw little-endian `f32` payload (`.imgraw` for images,
//! `.sinraw` for sinograms) with a JSON sidecar header at `<file>.json`
//! holding `{width, height, dtype, order}`. Geometry is a standalone JSON
//! document. All writes go through a temp-file-plus-rename so concurrent
//! producers on disjoint paths never expose partial files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{BeamMode, GridSpec, Image, ScanGeometry, Sinogram, TomoError};

#[derive(Serialize, Deserialize)]
struct RawHeader {
    width: usize,
    height: usize,
    dtype: String,
    order: String,
}

fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), TomoError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{stem}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| TomoError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| TomoError::io(&tmp, e))?;
    f.sync_all().map_err(|e| TomoError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| TomoError::io(path, e))?;
    Ok(())
}

fn write_raster(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<(), TomoError> {
    let header = RawHeader {
        width,
        height,
        dtype: "f32".into(),
        order: "row-major".into(),
    };
    let header_bytes = serde_json::to_vec_pretty(&header)
        .map_err(|e| TomoError::format(path, e.to_string()))?;
    let mut payload = Vec::with_capacity(values.len() * 4);
    for &v in values {
        payload.extend_from_slice(&(v as f32).to_le_bytes());
    }
    atomic_write(path, &payload)?;
    atomic_write(&header_path(path), &header_bytes)?;
    Ok(())
}

fn read_raster(path: &Path) -> Result<(usize, usize, Vec<f64>), TomoError> {
    let hp = header_path(path);
    let header_bytes = fs::read(&hp).map_err(|e| TomoError::io(&hp, e))?;
    let header: RawHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| TomoError::format(&hp, e.to_string()))?;
    if header.dtype != "f32" {
        return Err(TomoError::format(&hp, format!("unsupported dtype {}", header.dtype)));
    }
    if header.order != "row-major" {
        return Err(TomoError::format(&hp, format!("unsupported order {}", header.order)));
    }
    let payload = fs::read(path).map_err(|e| TomoError::io(path, e))?;
    let expected = header.width * header.height * 4;
    if payload.len() != expected {
        return Err(TomoError::format(
            path,
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((header.width, header.height, values))
}

/// Writes an image as `.imgraw` payload plus JSON sidecar header.
pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<(), TomoError> {
    let n = image.n();
    write_raster(path.as_ref(), n, n, image.values())
}

/// Reads an `.imgraw` image; `pixel_size` supplies the physical scale the
/// header does not carry.
pub fn read_image(path: impl AsRef<Path>, pixel_size: f64) -> Result<Image, TomoError> {
    let path = path.as_ref();
    let (width, height, values) = read_raster(path)?;
    if width != height {
        return Err(TomoError::format(
            path,
            format!("image must be square, got {width}×{height}"),
        ));
    }
    let grid = GridSpec::new(width, pixel_size)?;
    Image::new(grid, values)
}

/// Writes a sinogram as `.sinraw` payload plus JSON sidecar header
/// (width = detectors, height = views).
pub fn write_sinogram(path: impl AsRef<Path>, sino: &Sinogram) -> Result<(), TomoError> {
    let geom = sino.geometry();
    write_raster(
        path.as_ref(),
        geom.num_detectors,
        geom.num_views(),
        sino.values(),
    )
}

/// Reads a `.sinraw` sinogram and binds it to `geometry`, validating shape.
pub fn read_sinogram(path: impl AsRef<Path>, geometry: ScanGeometry) -> Result<Sinogram, TomoError> {
    let path = path.as_ref();
    let (width, height, values) = read_raster(path)?;
    if width != geometry.num_detectors || height != geometry.num_views() {
        return Err(TomoError::format(
            path,
            format!(
                "sinogram is {height}×{width}, geometry implies {}×{}",
                geometry.num_views(),
                geometry.num_detectors
            ),
        ));
    }
    Sinogram::new(geometry, values)
}

#[derive(Serialize, Deserialize)]
struct AngleRange {
    start_deg: f64,
    count: usize,
    step_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct GeometryFile {
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    angles_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angles: Option<AngleRange>,
    num_detectors: usize,
    detector_spacing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dso: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dsd: Option<f64>,
}

/// Serializes geometry to its JSON document form.
pub fn write_geometry(path: impl AsRef<Path>, geom: &ScanGeometry) -> Result<(), TomoError> {
    let path = path.as_ref();
    let (mode, dso, dsd) = match geom.mode {
        BeamMode::Parallel => ("parallel-beam", None, None),
        BeamMode::Fan {
            source_to_center,
            source_to_detector,
        } => ("fan-beam", Some(source_to_center), Some(source_to_detector)),
    };
    let file = GeometryFile {
        mode: mode.into(),
        angles_deg: Some(geom.angles_deg.clone()),
        angles: None,
        num_detectors: geom.num_detectors,
        detector_spacing: geom.detector_spacing,
        dso,
        dsd,
    };
    let bytes =
        serde_json::to_vec_pretty(&file).map_err(|e| TomoError::format(path, e.to_string()))?;
    atomic_write(path, &bytes)
}

/// Reads a geometry JSON document; angles may be listed explicitly or given
/// as `{start_deg, count, step_deg}`.
pub fn read_geometry(path: impl AsRef<Path>) -> Result<ScanGeometry, TomoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| TomoError::io(path, e))?;
    let file: GeometryFile =
        serde_json::from_slice(&bytes).map_err(|e| TomoError::format(path, e.to_string()))?;
    let angles = match (file.angles_deg, file.angles) {
        (Some(list), None) => list,
        (None, Some(r)) => (0..r.count)
            .map(|i| r.start_deg + i as f64 * r.step_deg)
            .collect(),
        _ => {
            return Err(TomoError::format(
                path,
                "exactly one of angles_deg or angles must be present",
            ))
        }
    };
    match file.mode.as_str() {
        "parallel-beam" => {
            ScanGeometry::parallel(angles, file.num_detectors, file.detector_spacing)
        }
        "fan-beam" => {
            let dso = file.dso.ok_or_else(|| TomoError::format(path, "fan-beam needs dso"))?;
            let dsd = file.dsd.ok_or_else(|| TomoError::format(path, "fan-beam needs dsd"))?;
            ScanGeometry::fan(angles, file.num_detectors, file.detector_spacing, dso, dsd)
        }
        other => Err(TomoError::format(path, format!("unknown mode {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_roundtrip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::unit(8).unwrap();
        let mut rng = crate::rng::SeedStream::new([5, 0, 0, 0]);
        let values: Vec<f64> = (0..64).map(|_| rng.uniform()).collect();
        let img = Image::new(grid, values.clone()).unwrap();
        let path = dir.path().join("x.imgraw");
        write_image(&path, &img).unwrap();
        let back = read_image(&path, 1.0).unwrap();
        for (orig, rt) in values.iter().zip(back.values()) {
            assert_eq!(*orig as f32, *rt as f32);
            assert_eq!(*rt, (*orig as f32) as f64);
        }
    }

    #[test]
    fn sinogram_roundtrip_and_shape_validation() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::unit(8).unwrap();
        let geom = ScanGeometry::fan_covering(&grid, vec![0.0, 45.0, 90.0]).unwrap();
        let img = Image::constant(grid, 0.5).unwrap();
        let sino = crate::forward_project(&img, &geom);
        let path = dir.path().join("b.sinraw");
        write_sinogram(&path, &sino).unwrap();
        let back = read_sinogram(&path, geom.clone()).unwrap();
        assert_eq!(back.values().len(), geom.num_rays());

        let other = ScanGeometry::fan_covering(&grid, vec![0.0, 45.0]).unwrap();
        assert!(read_sinogram(&path, other).is_err());
    }

    #[test]
    fn geometry_roundtrip_and_range_form() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::unit(16).unwrap();
        let geom = ScanGeometry::fan_covering(&grid, vec![0.0, 6.0, 12.0]).unwrap();
        let path = dir.path().join("geom.json");
        write_geometry(&path, &geom).unwrap();
        let back = read_geometry(&path).unwrap();
        assert_eq!(back, geom);

        let ranged = r#"{
            "mode": "parallel-beam",
            "angles": {"start_deg": 0.0, "count": 4, "step_deg": 45.0},
            "num_detectors": 32,
            "detector_spacing": 0.5
        }"#;
        let rp = dir.path().join("ranged.json");
        fs::write(&rp, ranged).unwrap();
        let g = read_geometry(&rp).unwrap();
        assert_eq!(g.angles_deg, vec![0.0, 45.0, 90.0, 135.0]);
        assert_eq!(g.num_detectors, 32);
    }

    #[test]
    fn header_carries_exact_keys() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::unit(4).unwrap();
        let img = Image::zeros(grid);
        let path = dir.path().join("z.imgraw");
        write_image(&path, &img).unwrap();
        let header: serde_json::Value =
            serde_json::from_slice(&fs::read(header_path(&path)).unwrap()).unwrap();
        assert_eq!(header["width"], 4);
        assert_eq!(header["height"], 4);
        assert_eq!(header["dtype"], "f32");
        assert_eq!(header["order"], "row-major");
    }
}
