//! MVOL container.
//!
//! Little-endian layout:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 6    | magic `"MVOL1\0"`                       |
//! | 6      | 2    | u16 version (= 1)                       |
//! | 8      | 12   | u32 nx, ny, nz                          |
//! | 20     | 12   | f32 sx, sy, sz (mm per voxel)           |
//! | 32     | 1    | u8 kind: 0 = float volume, 1 = mask     |
//! | 33     | ...  | nx·ny·nz × f32, or nx·ny·nz × u8 ∈ {0,1} |
//!
//! The payload is x-fastest. Decoding is strict: the buffer must hold exactly
//! header + payload bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::MvolError;
use crate::volgrid::{Dims, Mask3D, Spacing, Volume3D};

pub const MAGIC: &[u8; 6] = b"MVOL1\0";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Volume = 0,
    Mask = 1,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Volume => "volume",
            Kind::Mask => "mask",
        }
    }

    fn sample_size(self) -> usize {
        match self {
            Kind::Volume => 4,
            Kind::Mask => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub dims: Dims,
    pub spacing: Spacing,
    pub kind: Kind,
}

impl Header {
    pub fn payload_len(&self) -> usize {
        self.dims.iter().product::<usize>() * self.kind.sample_size()
    }
}

/// Either payload kind, as found on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum MvolData {
    Volume(Volume3D),
    Mask(Mask3D),
}

/// Total encoded size for a payload of `dims`.
pub fn encoded_len(dims: Dims, kind: Kind) -> usize {
    HEADER_LEN + dims.iter().product::<usize>() * kind.sample_size()
}

pub fn decode_header(bytes: &[u8]) -> Result<Header, MvolError> {
    if bytes.len() < HEADER_LEN {
        // A short buffer that already disagrees on the magic is not an MVOL file at all.
        let n = bytes.len().min(MAGIC.len());
        if bytes[..n] != MAGIC[..n] {
            return Err(MvolError::BadMagic);
        }
        return Err(MvolError::Truncated {
            needed: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..6] != MAGIC {
        return Err(MvolError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != VERSION {
        return Err(MvolError::UnsupportedVersion(version));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let raw_dims = [u32_at(8), u32_at(12), u32_at(16)];
    let spacing = [f32_at(20), f32_at(24), f32_at(28)];
    let kind = match bytes[32] {
        0 => Kind::Volume,
        1 => Kind::Mask,
        k => return Err(MvolError::UnknownKind(k)),
    };
    if raw_dims.contains(&0) {
        return Err(MvolError::ZeroDimension(raw_dims));
    }
    let dims = raw_dims.map(|d| d as usize);
    let overflow = dims[0]
        .checked_mul(dims[1])
        .and_then(|n| n.checked_mul(dims[2]))
        .and_then(|n| n.checked_mul(kind.sample_size()))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .is_none();
    if overflow {
        return Err(MvolError::DimensionOverflow(raw_dims));
    }
    if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(MvolError::InvalidSpacing(spacing));
    }
    Ok(Header {
        dims,
        spacing,
        kind,
    })
}

pub fn decode(bytes: &[u8]) -> Result<MvolData, MvolError> {
    let header = decode_header(bytes)?;
    let needed = HEADER_LEN + header.payload_len();
    if bytes.len() < needed {
        return Err(MvolError::Truncated {
            needed,
            actual: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(MvolError::TrailingBytes(bytes.len() - needed));
    }
    let payload = &bytes[HEADER_LEN..];
    match header.kind {
        Kind::Volume => {
            let mut data = Vec::with_capacity(payload.len() / 4);
            for (index, chunk) in payload.chunks_exact(4).enumerate() {
                let value = f32::from_le_bytes(chunk.try_into().unwrap());
                if !value.is_finite() {
                    return Err(MvolError::NonFiniteSample { index, value });
                }
                data.push(value);
            }
            Ok(MvolData::Volume(Volume3D::from_parts_unchecked(
                header.dims,
                header.spacing,
                data,
            )))
        }
        Kind::Mask => {
            let mut data = Vec::with_capacity(payload.len());
            for (index, &value) in payload.iter().enumerate() {
                match value {
                    0 => data.push(false),
                    1 => data.push(true),
                    _ => return Err(MvolError::InvalidMaskByte { index, value }),
                }
            }
            Ok(MvolData::Mask(Mask3D::from_parts_unchecked(
                header.dims,
                header.spacing.map(f32::to_bits),
                data,
            )))
        }
    }
}

pub fn decode_volume(bytes: &[u8]) -> Result<Volume3D, MvolError> {
    match decode(bytes)? {
        MvolData::Volume(v) => Ok(v),
        MvolData::Mask(_) => Err(MvolError::KindMismatch {
            expected: Kind::Volume.name(),
            found: Kind::Mask.name(),
        }),
    }
}

pub fn decode_mask(bytes: &[u8]) -> Result<Mask3D, MvolError> {
    match decode(bytes)? {
        MvolData::Mask(m) => Ok(m),
        MvolData::Volume(_) => Err(MvolError::KindMismatch {
            expected: Kind::Mask.name(),
            found: Kind::Volume.name(),
        }),
    }
}

fn encode_header(out: &mut Vec<u8>, dims: Dims, spacing: Spacing, kind: Kind) {
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        // Volume constructors reject dims that do not fit the header.
        let d = u32::try_from(d).expect("dimension exceeds u32");
        out.extend_from_slice(&d.to_le_bytes());
    }
    for s in spacing {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.push(kind as u8);
}

pub fn encode_volume(v: &Volume3D) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(v.dims(), Kind::Volume));
    encode_header(&mut out, v.dims(), v.spacing(), Kind::Volume);
    for s in v.data() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn encode_mask(m: &Mask3D) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(m.dims(), Kind::Mask));
    encode_header(&mut out, m.dims(), m.spacing(), Kind::Mask);
    out.extend(m.data().iter().map(|&b| b as u8));
    out
}

pub fn read_mvol(path: impl AsRef<Path>) -> Result<Volume3D, MvolError> {
    decode_volume(&fs::read(path)?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask3D, MvolError> {
    decode_mask(&fs::read(path)?)
}

pub fn read_any(path: impl AsRef<Path>) -> Result<MvolData, MvolError> {
    decode(&fs::read(path)?)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), MvolError> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn write_mvol(v: &Volume3D, path: impl AsRef<Path>) -> Result<(), MvolError> {
    write_bytes(path.as_ref(), &encode_volume(v))
}

pub fn write_mask(m: &Mask3D, path: impl AsRef<Path>) -> Result<(), MvolError> {
    write_bytes(path.as_ref(), &encode_mask(m))
}
