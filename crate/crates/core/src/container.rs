//! Self-describing binary container for images and sinograms.
//!
//! Layout: the 8-byte magic `STOMO\0\0\x01`, a little-endian `u32` header
//! length, that many bytes of UTF-8 JSON header, then the values as
//! little-endian `f64` in storage order (x fastest for images, detector cell
//! fastest for sinograms).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ScanGeometry, Sinogram};
use crate::grid::{GridSpec, ImageGrid};

pub const MAGIC: [u8; 8] = *b"STOMO\0\0\x01";
const DTYPE: &str = "f64";
const MAX_HEADER: u32 = 1 << 20;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Header {
    Image {
        dtype: String,
        dims: [usize; 3],
        voxel_size: [f64; 3],
        origin: [f64; 3],
    },
    Sinogram {
        dtype: String,
        /// `[n_theta, n_p]`.
        shape: [usize; 2],
        geometry: ScanGeometry,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stored {
    Image(ImageGrid),
    Sinogram(Sinogram),
}

fn write_raw<W: Write>(mut out: W, header: &Header, values: &[f64]) -> Result<()> {
    let text = serde_json::to_string(header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(&MAGIC)?;
    out.write_all(&(text.len() as u32).to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_image<W: Write>(out: W, image: &ImageGrid) -> Result<()> {
    let s = image.spec();
    let header = Header::Image {
        dtype: DTYPE.into(),
        dims: s.dims,
        voxel_size: s.voxel_size,
        origin: s.origin,
    };
    write_raw(out, &header, image.values())
}

pub fn write_sinogram<W: Write>(out: W, sino: &Sinogram) -> Result<()> {
    let g = sino.geometry();
    let header = Header::Sinogram {
        dtype: DTYPE.into(),
        shape: [g.n_theta(), g.n_p()],
        geometry: g.clone(),
    };
    write_raw(out, &header, sino.values())
}

fn read_values<R: Read>(mut input: R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Format("payload too large".into()))?];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("payload shorter than {n} values")))?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read<R: Read>(mut input: R) -> Result<Stored> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic".into()))?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut len = [0u8; 4];
    input
        .read_exact(&mut len)
        .map_err(|_| Error::Format("missing header length".into()))?;
    let len = u32::from_le_bytes(len);
    if len > MAX_HEADER {
        return Err(Error::Format(format!("header of {len} bytes is implausibly large")));
    }
    let mut text = vec![0u8; len as usize];
    input
        .read_exact(&mut text)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let text = String::from_utf8(text).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    match header {
        Header::Image {
            dtype,
            dims,
            voxel_size,
            origin,
        } => {
            check_dtype(&dtype)?;
            let spec = GridSpec {
                dims,
                voxel_size,
                origin,
            };
            spec.validate().map_err(|e| Error::Format(e.to_string()))?;
            let values = read_values(input, spec.len())?;
            Ok(Stored::Image(ImageGrid::new(spec, values)?))
        }
        Header::Sinogram { dtype, shape, geometry } => {
            check_dtype(&dtype)?;
            geometry.validate().map_err(|e| Error::Format(e.to_string()))?;
            if shape != [geometry.n_theta(), geometry.n_p()] {
                return Err(Error::Format("sinogram shape disagrees with its geometry".into()));
            }
            let values = read_values(input, geometry.n_measurements())?;
            Ok(Stored::Sinogram(Sinogram::new(geometry, values)?))
        }
    }
}

fn check_dtype(dtype: &str) -> Result<()> {
    if dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype '{dtype}'")));
    }
    Ok(())
}

pub fn save_image(path: impl AsRef<Path>, image: &ImageGrid) -> Result<()> {
    write_image(BufWriter::new(File::create(path)?), image)
}

pub fn save_sinogram(path: impl AsRef<Path>, sino: &Sinogram) -> Result<()> {
    write_sinogram(BufWriter::new(File::create(path)?), sino)
}

pub fn load(path: impl AsRef<Path>) -> Result<Stored> {
    read(BufReader::new(File::open(path)?))
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    match load(path.as_ref())? {
        Stored::Image(img) => Ok(img),
        Stored::Sinogram(_) => Err(Error::Format(format!(
            "{} holds a sinogram, expected an image",
            path.as_ref().display()
        ))),
    }
}

pub fn load_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    match load(path.as_ref())? {
        Stored::Sinogram(s) => Ok(s),
        Stored::Image(_) => Err(Error::Format(format!(
            "{} holds an image, expected a sinogram",
            path.as_ref().display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_magic_length_header_payload() {
        let img = ImageGrid::new(GridSpec::unit(2, 1, 1).unwrap(), vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();
        assert_eq!(&buf[..8], b"STOMO\0\0\x01");
        let len = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&buf[12..12 + len]).unwrap();
        assert_eq!(header["kind"], "image");
        assert_eq!(header["dtype"], "f64");
        assert_eq!(buf.len(), 12 + len + 16);
        assert_eq!(&buf[12 + len..12 + len + 8], &1.5f64.to_le_bytes());
        assert_eq!(read(buf.as_slice()).unwrap(), Stored::Image(img));
    }

    #[test]
    fn sinogram_round_trip() {
        let geom = ScanGeometry::cone_beam_3d(vec![0.0, 2.0], 2, 3, 1.5, 40.0, 20.0).unwrap();
        let sino = Sinogram::new(geom, (0..12).map(|v| v as f64 * 0.25).collect()).unwrap();
        let mut buf = Vec::new();
        write_sinogram(&mut buf, &sino).unwrap();
        assert_eq!(read(buf.as_slice()).unwrap(), Stored::Sinogram(sino));
    }

    #[test]
    fn rejects_corruption() {
        let img = ImageGrid::new(GridSpec::unit(2, 2, 1).unwrap(), vec![0.0; 4]).unwrap();
        let mut buf = Vec::new();
        write_image(&mut buf, &img).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read(bad.as_slice()), Err(Error::Format(_))));

        let short = &buf[..buf.len() - 3];
        assert!(matches!(read(short), Err(Error::Format(_))));

        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read(long.as_slice()), Err(Error::Format(_))));
    }
}
