//! NIFTI-1 single-file reader/writer and tumor region derivation.
//!
//! Only `n+1` single-file images (`.nii`, optionally gzip-compressed) with
//! exactly three spatial dimensions are accepted. Byte order is detected
//! from `dim[0]`. The affine is kept on the volume for reference but never
//! used to resample; inputs are expected to be co-registered already.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER_SIZE: usize = 348;
const MIN_VOX_OFFSET: usize = 352;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    T1w,
    T1ce,
    T2w,
    Flair,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::T1w, Modality::T1ce, Modality::T2w, Modality::Flair];

    /// Token used in feature names.
    pub fn token(self) -> &'static str {
        match self {
            Modality::T1w => "t1",
            Modality::T1ce => "t1ce",
            Modality::T2w => "t2",
            Modality::Flair => "flair",
        }
    }

    /// Display name in reports.
    pub fn label(self) -> &'static str {
        match self {
            Modality::T1w => "T1",
            Modality::T1ce => "T1-ce",
            Modality::T2w => "T2",
            Modality::Flair => "FLAIR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegionKind {
    Whole,
    Core,
    EnhCore,
}

impl RegionKind {
    pub const ALL: [RegionKind; 3] = [RegionKind::Whole, RegionKind::Core, RegionKind::EnhCore];

    pub fn token(self) -> &'static str {
        match self {
            RegionKind::Whole => "whole",
            RegionKind::Core => "core",
            RegionKind::EnhCore => "enhcore",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RegionKind::Whole => "Whole",
            RegionKind::Core => "Core",
            RegionKind::EnhCore => "Enh-core",
        }
    }

    /// Whether a label code belongs to this region.
    pub fn contains_label(self, code: u8) -> bool {
        match self {
            RegionKind::Whole => matches!(code, 1 | 2 | 4),
            RegionKind::Core => matches!(code, 1 | 4),
            RegionKind::EnhCore => code == 4,
        }
    }
}

/// Voxel grid geometry shared by volumes and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: [usize; 3],
    /// Millimetres per voxel along x, y, z.
    pub spacing: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive and finite, got {spacing:?}"
            )));
        }
        Ok(Grid { dims, spacing })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index, x fastest.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let rest = index / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    fn matches(&self, other: &Grid) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }
}

/// A 3D scalar intensity image.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub grid: Grid,
    pub data: Vec<f64>,
    pub modality: Option<Modality>,
    /// Rows of the voxel-to-world affine (sform if present, otherwise a
    /// spacing diagonal). Informational only.
    pub affine: [[f64; 4]; 3],
}

impl Volume {
    pub fn new(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                grid.dims
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite intensity at voxel {i}")));
        }
        Ok(Volume {
            affine: diagonal_affine(&grid.spacing),
            grid,
            data,
            modality: None,
        })
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = Some(modality);
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing
    }
}

fn diagonal_affine(spacing: &[f64; 3]) -> [[f64; 4]; 3] {
    [
        [spacing[0], 0.0, 0.0, 0.0],
        [0.0, spacing[1], 0.0, 0.0],
        [0.0, 0.0, spacing[2], 0.0],
    ]
}

/// Segmentation labels: 0 background, 1 non-enhancing core / necrosis,
/// 2 edema, 4 enhancing core.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub grid: Grid,
    pub labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(grid: Grid, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "label length {} does not match dims {:?}",
                labels.len(),
                grid.dims
            )));
        }
        if let Some(i) = labels.iter().position(|&l| !matches!(l, 0 | 1 | 2 | 4)) {
            return Err(Error::InvalidLabel {
                index: i,
                value: f64::from(labels[i]),
            });
        }
        Ok(LabelMask { grid, labels })
    }

    /// Interpret a parsed volume as a label image. Every value must be one
    /// of the integer codes 0, 1, 2, 4.
    pub fn from_volume(volume: &Volume) -> Result<Self> {
        let labels = volume
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                0.0 => Ok(0),
                1.0 => Ok(1),
                2.0 => Ok(2),
                4.0 => Ok(4),
                value => Err(Error::InvalidLabel { index: i, value }),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(LabelMask {
            grid: volume.grid,
            labels,
        })
    }

    /// Check that a companion volume has identical geometry.
    pub fn check_compatible(&self, volume: &Volume) -> Result<()> {
        if !self.grid.matches(&volume.grid) {
            return Err(Error::DimensionMismatch(format!(
                "mask dims {:?} spacing {:?} vs volume dims {:?} spacing {:?}",
                self.grid.dims, self.grid.spacing, volume.grid.dims, volume.grid.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: Grid,
    pub member: Vec<bool>,
    pub kind: RegionKind,
}

impl RegionMask {
    pub fn from_labels(mask: &LabelMask, kind: RegionKind) -> Self {
        RegionMask {
            grid: mask.grid,
            member: mask.labels.iter().map(|&l| kind.contains_label(l)).collect(),
            kind,
        }
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    /// Flat indices of member voxels, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.member.len() == other.member.len()
            && self.member.iter().zip(&other.member).all(|(&a, &b)| !a || b)
    }
}

/// The three nested analysis regions of one label mask.
#[derive(Debug, Clone)]
pub struct Regions {
    pub whole: RegionMask,
    pub core: RegionMask,
    pub enh_core: RegionMask,
    /// Set when the whole-tumor region has no voxels.
    pub empty: bool,
}

impl Regions {
    pub fn get(&self, kind: RegionKind) -> &RegionMask {
        match kind {
            RegionKind::Whole => &self.whole,
            RegionKind::Core => &self.core,
            RegionKind::EnhCore => &self.enh_core,
        }
    }
}

/// Whole = {1, 2, 4}, Core = {1, 4}, EnhCore = {4}.
pub fn derive_regions(mask: &LabelMask) -> Regions {
    let whole = RegionMask::from_labels(mask, RegionKind::Whole);
    let empty = whole.is_empty();
    Regions {
        core: RegionMask::from_labels(mask, RegionKind::Core),
        enh_core: RegionMask::from_labels(mask, RegionKind::EnhCore),
        whole,
        empty,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

impl fmt::Display for Endian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Endian::Little => "little-endian",
            Endian::Big => "big-endian",
        })
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl HeaderReader<'_> {
    fn array<const N: usize>(&self, offset: usize) -> [u8; N] {
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[offset..offset + N]);
        out
    }

    fn i16(&self, offset: usize) -> i16 {
        let b = self.array::<2>(offset);
        match self.endian {
            Endian::Little => i16::from_le_bytes(b),
            Endian::Big => i16::from_be_bytes(b),
        }
    }

    fn i32(&self, offset: usize) -> i32 {
        let b = self.array::<4>(offset);
        match self.endian {
            Endian::Little => i32::from_le_bytes(b),
            Endian::Big => i32::from_be_bytes(b),
        }
    }

    fn f32(&self, offset: usize) -> f32 {
        let b = self.array::<4>(offset);
        match self.endian {
            Endian::Little => f32::from_le_bytes(b),
            Endian::Big => f32::from_be_bytes(b),
        }
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

/// Parse a single-file NIFTI-1 image, gzip-compressed or not.
pub fn parse_nifti(bytes: &[u8]) -> Result<Volume> {
    if is_gzip(bytes) {
        let mut raw = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut raw)
            .map_err(|e| Error::nifti(0, format!("gzip decode failed: {e}")))?;
        return parse_raw(&raw);
    }
    parse_raw(bytes)
}

fn parse_raw(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::nifti(
            bytes.len(),
            format!("truncated header: {} bytes, need {HEADER_SIZE}", bytes.len()),
        ));
    }
    let le = i16::from_le_bytes([bytes[40], bytes[41]]);
    let be = i16::from_be_bytes([bytes[40], bytes[41]]);
    let endian = if (1..=7).contains(&le) {
        Endian::Little
    } else if (1..=7).contains(&be) {
        Endian::Big
    } else {
        return Err(Error::nifti(40, format!("dim[0] = {le} is outside 1..=7 in either byte order")));
    };
    let h = HeaderReader { bytes, endian };

    let sizeof_hdr = h.i32(0);
    if sizeof_hdr != HEADER_SIZE as i32 {
        return Err(Error::nifti(0, format!("sizeof_hdr = {sizeof_hdr}, expected {HEADER_SIZE}")));
    }
    let magic = &bytes[344..348];
    if magic != b"n+1\0" {
        let detail = if magic == b"ni1\0" {
            "paired .hdr/.img images are not supported".to_string()
        } else {
            format!("bad magic {:?}", String::from_utf8_lossy(magic))
        };
        return Err(Error::nifti(344, detail));
    }

    let ndim = h.i16(40);
    if ndim != 3 {
        return Err(Error::nifti(40, format!("expected 3 dimensions, header declares {ndim}")));
    }
    let mut dims = [0usize; 3];
    for (axis, d) in dims.iter_mut().enumerate() {
        let offset = 42 + 2 * axis;
        let v = h.i16(offset);
        if v <= 0 {
            return Err(Error::nifti(offset, format!("dim[{}] = {v} must be positive", axis + 1)));
        }
        *d = v as usize;
    }

    let datatype = h.i16(70);
    let elem_size = match datatype {
        DT_UINT8 | DT_INT8 => 1,
        DT_INT16 | DT_UINT16 => 2,
        DT_INT32 | DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => return Err(Error::nifti(70, format!("unsupported datatype code {other}"))),
    };

    let mut spacing = [0f64; 3];
    for (axis, s) in spacing.iter_mut().enumerate() {
        let offset = 80 + 4 * axis;
        let v = f64::from(h.f32(offset));
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::nifti(offset, format!("pixdim[{}] = {v} must be positive", axis + 1)));
        }
        *s = v;
    }

    let vox_offset = f64::from(h.f32(108));
    if !(vox_offset.is_finite() && vox_offset >= MIN_VOX_OFFSET as f64) {
        return Err(Error::nifti(108, format!("vox_offset = {vox_offset} is below {MIN_VOX_OFFSET}")));
    }
    let data_start = vox_offset as usize;

    let slope = f64::from(h.f32(112));
    let inter = f64::from(h.f32(116));
    let (slope, inter) = if slope != 0.0 && slope.is_finite() {
        (slope, if inter.is_finite() { inter } else { 0.0 })
    } else {
        (1.0, 0.0)
    };

    let sform_code = h.i16(254);
    let affine = if sform_code > 0 {
        let mut rows = [[0f64; 4]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = f64::from(h.f32(280 + 16 * r + 4 * c));
            }
        }
        rows
    } else {
        diagonal_affine(&spacing)
    };

    let n = dims[0] * dims[1] * dims[2];
    // dims are bounded by i16, but a hostile vox_offset can be huge
    let need = data_start.saturating_add(n * elem_size);
    if bytes.len() < need {
        return Err(Error::nifti(
            bytes.len(),
            format!("truncated payload: need {need} bytes, have {}", bytes.len()),
        ));
    }
    let payload = &bytes[data_start..need];

    let mut data = Vec::with_capacity(n);
    for (i, chunk) in payload.chunks_exact(elem_size).enumerate() {
        let raw = decode_element(chunk, datatype, endian);
        let v = slope * raw + inter;
        if !v.is_finite() {
            return Err(Error::nifti(data_start + i * elem_size, "non-finite voxel value"));
        }
        data.push(v);
    }

    Ok(Volume {
        grid: Grid { dims, spacing },
        data,
        modality: None,
        affine,
    })
}

fn decode_element(chunk: &[u8], datatype: i16, endian: Endian) -> f64 {
    macro_rules! read {
        ($t:ty) => {{
            let b = chunk.try_into().expect("chunk size matches element size");
            match endian {
                Endian::Little => <$t>::from_le_bytes(b) as f64,
                Endian::Big => <$t>::from_be_bytes(b) as f64,
            }
        }};
    }
    match datatype {
        DT_UINT8 => f64::from(chunk[0]),
        DT_INT8 => f64::from(chunk[0] as i8),
        DT_INT16 => read!(i16),
        DT_UINT16 => read!(u16),
        DT_INT32 => read!(i32),
        DT_FLOAT32 => read!(f32),
        DT_FLOAT64 => read!(f64),
        _ => unreachable!("datatype validated before decoding"),
    }
}

/// Storage type used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageType {
    Uint8,
    Int16,
    Float32,
    Float64,
}

impl StorageType {
    fn code(self) -> i16 {
        match self {
            StorageType::Uint8 => DT_UINT8,
            StorageType::Int16 => DT_INT16,
            StorageType::Float32 => DT_FLOAT32,
            StorageType::Float64 => DT_FLOAT64,
        }
    }

    fn bits(self) -> i16 {
        match self {
            StorageType::Uint8 => 8,
            StorageType::Int16 => 16,
            StorageType::Float32 => 32,
            StorageType::Float64 => 64,
        }
    }
}

/// Encode a minimal little-endian single-file NIFTI-1 image.
///
/// Integer storage types round to nearest and saturate.
pub fn encode_nifti(grid: &Grid, data: &[f64], storage: StorageType) -> Vec<u8> {
    assert_eq!(data.len(), grid.len(), "data length must match grid");
    let mut hdr = vec![0u8; MIN_VOX_OFFSET];
    let put_i16 = |buf: &mut [u8], off: usize, v: i16| buf[off..off + 2].copy_from_slice(&v.to_le_bytes());
    let put_f32 = |buf: &mut [u8], off: usize, v: f32| buf[off..off + 4].copy_from_slice(&v.to_le_bytes());

    hdr[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    hdr[38] = b'r'; // regular
    put_i16(&mut hdr, 40, 3);
    for axis in 0..3 {
        put_i16(&mut hdr, 42 + 2 * axis, grid.dims[axis] as i16);
    }
    for axis in 3..7 {
        put_i16(&mut hdr, 42 + 2 * axis, 1);
    }
    put_i16(&mut hdr, 70, storage.code());
    put_i16(&mut hdr, 72, storage.bits());
    put_f32(&mut hdr, 76, 1.0);
    for axis in 0..3 {
        put_f32(&mut hdr, 80 + 4 * axis, grid.spacing[axis] as f32);
    }
    put_f32(&mut hdr, 108, MIN_VOX_OFFSET as f32);
    hdr[123] = 2; // mm
    put_i16(&mut hdr, 254, 1); // sform_code: scanner
    for axis in 0..3 {
        put_f32(&mut hdr, 280 + 16 * axis + 4 * axis, grid.spacing[axis] as f32);
    }
    hdr[344..348].copy_from_slice(b"n+1\0");

    let elem = storage.bits() as usize / 8;
    hdr.reserve(data.len() * elem);
    for &v in data {
        match storage {
            StorageType::Uint8 => hdr.push(v.round().clamp(0.0, 255.0) as u8),
            StorageType::Int16 => {
                hdr.extend_from_slice(&(v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16).to_le_bytes())
            }
            StorageType::Float32 => hdr.extend_from_slice(&(v as f32).to_le_bytes()),
            StorageType::Float64 => hdr.extend_from_slice(&v.to_le_bytes()),
        }
    }
    hdr
}

fn gzip(bytes: &[u8]) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(bytes).expect("writing to a Vec cannot fail");
    enc.finish().expect("writing to a Vec cannot fail")
}

pub fn read_volume(path: &Path) -> Result<Volume> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_nifti(&bytes)
}

pub fn read_label_mask(path: &Path) -> Result<LabelMask> {
    LabelMask::from_volume(&read_volume(path)?)
}

/// Write an image; a `.gz` extension selects gzip compression.
pub fn write_nifti(path: &Path, grid: &Grid, data: &[f64], storage: StorageType) -> Result<()> {
    let raw = encode_nifti(grid, data, storage);
    let bytes = if path.extension().is_some_and(|e| e == "gz") {
        gzip(&raw)
    } else {
        raw
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_label_mask(path: &Path, mask: &LabelMask) -> Result<()> {
    let data: Vec<f64> = mask.labels.iter().map(|&l| f64::from(l)).collect();
    write_nifti(path, &mask.grid, &data, StorageType::Uint8)
}
