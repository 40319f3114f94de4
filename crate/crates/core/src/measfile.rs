//! SLCI measurement file format (binary, little-endian):
//!
//! ```text
//! magic   "SLCI"          4 bytes
//! version u16             currently 1
//! n_x     u32
//! n_y     u32
//! channels u8             1 or 3
//! m       u32             measurements per channel
//! permutation seed u64
//! row-selection seed u64
//! calibration flag u8     0 = ideal, 1 = physical (raw)
//! g       f64
//! f       f64
//! values  channels x m f64
//! ```
//!
//! Round trips are bit-exact; f64 payloads are stored verbatim.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hadamard::{CalibrationTag, MeasurementMeta, MeasurementVector};
use crate::real::Real;

pub const MAGIC: &[u8; 4] = b"SLCI";
pub const VERSION: u16 = 1;

pub fn encode_measurements<R: Real>(channels: &[MeasurementVector<R>]) -> Result<Vec<u8>> {
    if channels.is_empty() || channels.len() > u8::MAX as usize {
        return Err(Error::invalid("need at least one measurement channel"));
    }
    let meta = &channels[0].meta;
    if channels.iter().any(|c| c.meta != *meta) {
        return Err(Error::invalid("channels disagree on measurement metadata"));
    }
    if channels.iter().any(|c| c.values.len() != meta.m as usize) {
        return Err(Error::SizeMismatch(
            "channel value count differs from metadata".into(),
        ));
    }
    let (flag, g, f) = match meta.calibration {
        CalibrationTag::Ideal => (0u8, 1.0, 0.0),
        CalibrationTag::Physical { g, f } => (1u8, g, f),
    };
    let mut out = Vec::with_capacity(48 + channels.len() * meta.m as usize * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&meta.n_x.to_le_bytes());
    out.extend_from_slice(&meta.n_y.to_le_bytes());
    out.push(channels.len() as u8);
    out.extend_from_slice(&meta.m.to_le_bytes());
    out.extend_from_slice(&meta.permutation_seed.to_le_bytes());
    out.extend_from_slice(&meta.row_seed.to_le_bytes());
    out.push(flag);
    out.extend_from_slice(&g.to_le_bytes());
    out.extend_from_slice(&f.to_le_bytes());
    for c in channels {
        for v in &c.values {
            out.extend_from_slice(&v.to_f64().unwrap().to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_measurements<R: Real>(bytes: &[u8]) -> Result<Vec<MeasurementVector<R>>> {
    const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 1 + 4 + 8 + 8 + 1 + 8 + 8;
    if bytes.len() < HEADER_LEN {
        return Err(Error::SizeMismatch(format!(
            "file of {} bytes shorter than {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> &'a [u8] {
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        s
    }
    let mut pos = 4usize;
    let mut take = |n: usize| take(bytes, &mut pos, n);
    let version = u16::from_le_bytes(take(2).try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n_x = u32::from_le_bytes(take(4).try_into().unwrap());
    let n_y = u32::from_le_bytes(take(4).try_into().unwrap());
    let channels = take(1)[0] as usize;
    let m = u32::from_le_bytes(take(4).try_into().unwrap());
    let permutation_seed = u64::from_le_bytes(take(8).try_into().unwrap());
    let row_seed = u64::from_le_bytes(take(8).try_into().unwrap());
    let flag = take(1)[0];
    let g = f64::from_le_bytes(take(8).try_into().unwrap());
    let f = f64::from_le_bytes(take(8).try_into().unwrap());
    let calibration = match flag {
        0 => CalibrationTag::Ideal,
        1 => CalibrationTag::Physical { g, f },
        other => {
            return Err(Error::Parse {
                offset: pos - 17,
                message: format!("unknown calibration flag {other}"),
            })
        }
    };
    if channels == 0 {
        return Err(Error::SizeMismatch("zero channels".into()));
    }
    let expected = channels * m as usize * 8;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(Error::SizeMismatch(format!(
            "header promises {expected} payload bytes, file has {}",
            payload.len()
        )));
    }
    let meta = MeasurementMeta {
        n_x,
        n_y,
        m,
        permutation_seed,
        row_seed,
        calibration,
    };
    let mut out = Vec::with_capacity(channels);
    for c in 0..channels {
        let values = (0..m as usize)
            .map(|i| {
                let o = (c * m as usize + i) * 8;
                let v = f64::from_le_bytes(payload[o..o + 8].try_into().unwrap());
                R::from_f64(v).ok_or_else(|| Error::invalid("value not representable"))
            })
            .collect::<Result<_>>()?;
        out.push(MeasurementVector {
            values,
            meta: meta.clone(),
        });
    }
    Ok(out)
}

pub fn read_measurements<R: Real>(path: impl AsRef<Path>) -> Result<Vec<MeasurementVector<R>>> {
    decode_measurements(&fs::read(path)?)
}

pub fn write_measurements<R: Real>(
    path: impl AsRef<Path>,
    channels: &[MeasurementVector<R>],
) -> Result<()> {
    fs::write(path, encode_measurements(channels)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{sense_ideal, sense_physical, CalibrationModel};
    use crate::hadamard::HadamardOperator;
    use crate::image::ImagePlane;
    use crate::rng::Rng;

    fn sample_channels() -> Vec<MeasurementVector<f64>> {
        let op = HadamardOperator::<f64>::build(8, 8, 0.25, 5).unwrap();
        let mut rng = Rng::new(1);
        (0..3)
            .map(|_| {
                let img = ImagePlane::from_fn(8, 8, |_, _| rng.next_f64());
                sense_ideal(&op, &img, 0.0, 0).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trip_bit_exact() {
        let chans = sample_channels();
        let bytes = encode_measurements(&chans).unwrap();
        let back: Vec<MeasurementVector<f64>> = decode_measurements(&bytes).unwrap();
        assert_eq!(back, chans);
        assert_eq!(encode_measurements(&back).unwrap(), bytes);
    }

    #[test]
    fn physical_round_trip() {
        let op = HadamardOperator::<f64>::build(4, 4, 0.5, 2).unwrap();
        let cal = CalibrationModel::new(0.9, 0.05).unwrap();
        let mut rng = Rng::new(3);
        let img = ImagePlane::from_fn(4, 4, |_, _| rng.next_f64());
        let z = sense_physical(&op, &img, &cal).unwrap();
        let bytes = encode_measurements(std::slice::from_ref(&z)).unwrap();
        let back: Vec<MeasurementVector<f64>> = decode_measurements(&bytes).unwrap();
        assert_eq!(back[0], z);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_measurements(&sample_channels()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            decode_measurements::<f64>(&bytes),
            Err(Error::BadMagic)
        ));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = encode_measurements(&sample_channels()).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            decode_measurements::<f64>(&bytes),
            Err(Error::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn payload_size_mismatch() {
        let mut bytes = encode_measurements(&sample_channels()).unwrap();
        bytes.truncate(bytes.len() - 8);
        assert!(matches!(
            decode_measurements::<f64>(&bytes),
            Err(Error::SizeMismatch(_))
        ));
    }
}
