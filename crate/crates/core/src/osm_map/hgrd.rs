//! `HGRD` raster container plus its JSON sidecar.
//!
//! Layout (all little-endian): magic `HGRD`, `u32` version (1), `u32`
//! channels, `u32` height, `u32` width, then `channels * height * width`
//! `f32` values, channel-major and row-major within a channel.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridSpec, RasterGrid, CHANNELS};
use crate::error::{Error, Result};
use crate::geodesy::EnuFrame;

pub const MAGIC: &[u8; 4] = b"HGRD";
pub const VERSION: u32 = 1;

/// Raw HGRD payload with an arbitrary channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct HgrdImage {
    pub channels: u32,
    pub height: u32,
    pub width: u32,
    pub data: Vec<f32>,
}

/// Contents of `<name>.json` next to an `.hgrd` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(flatten)]
    pub spec: GridSpec,
    #[serde(flatten)]
    pub frame: EnuFrame,
}

pub fn encode(img: &HgrdImage, mut out: impl Write) -> Result<()> {
    let expected = img.channels as usize * img.height as usize * img.width as usize;
    if img.data.len() != expected {
        return Err(Error::BadShape(format!(
            "HGRD payload has {} values, header implies {expected}",
            img.data.len()
        )));
    }
    out.write_all(MAGIC)?;
    for v in [VERSION, img.channels, img.height, img.width] {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(expected * 4);
    for v in &img.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn decode(mut input: impl Read) -> Result<HgrdImage> {
    let mut header = [0u8; 20];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::InvalidRaster("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::InvalidRaster("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (version, channels, height, width) = (word(0), word(1), word(2), word(3));
    if version != VERSION {
        return Err(Error::InvalidRaster(format!("unsupported version {version}")));
    }
    let n = channels as usize * height as usize * width as usize;
    let mut bytes = Vec::with_capacity(n * 4);
    input.read_to_end(&mut bytes)?;
    if bytes.len() != n * 4 {
        return Err(Error::InvalidRaster(format!(
            "payload is {} bytes, header implies {}",
            bytes.len(),
            n * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(HgrdImage {
        channels,
        height,
        width,
        data,
    })
}

impl From<&RasterGrid> for HgrdImage {
    fn from(g: &RasterGrid) -> Self {
        HgrdImage {
            channels: CHANNELS as u32,
            height: g.height() as u32,
            width: g.width() as u32,
            data: g.data.clone(),
        }
    }
}

pub fn sidecar_path(hgrd: &Path) -> PathBuf {
    hgrd.with_extension("json")
}

/// Writes `path` and its `.json` sidecar.
pub fn write_grid(path: &Path, grid: &RasterGrid, frame: &EnuFrame) -> Result<()> {
    let mut bytes = Vec::new();
    encode(&HgrdImage::from(grid), &mut bytes)?;
    fs::write(path, bytes)?;
    let sidecar = Sidecar {
        spec: grid.spec,
        frame: *frame,
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a raster and its sidecar, checking that both agree on the shape.
pub fn read_grid(path: &Path) -> Result<(RasterGrid, EnuFrame)> {
    let img = decode(fs::File::open(path)?)?;
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    if img.channels as usize != CHANNELS {
        return Err(Error::BadShape(format!("expected {CHANNELS} channels, found {}", img.channels)));
    }
    if img.width as usize != sidecar.spec.width_px || img.height as usize != sidecar.spec.height_px {
        return Err(Error::BadShape(format!(
            "HGRD is {}x{} but sidecar says {}x{}",
            img.width, img.height, sidecar.spec.width_px, sidecar.spec.height_px
        )));
    }
    Ok((RasterGrid::from_data(sidecar.spec, img.data)?, sidecar.frame))
}
