//! Binary feature-frame files: posed depth frames paired with patch features,
//! as dumped by an external feature extractor.
//!
//! Layout (all scalars little-endian):
//!
//! ```text
//! header   ASCII line "onemap-frames v1 feature_dim=<f>\n"
//! record*  u32  payload length in bytes, then the payload:
//!            f64 x, y, heading, camera_height, max_range
//!            u32 width, height
//!            f64 fx, fy, cx, cy
//!            f32 depth[height * width]        row-major, meters
//!            u8  valid[height * width]        0 = censored/missing
//!            u32 patch_height, patch_width, dim
//!            f32 features[patch_height * patch_width * dim]
//! ```
//!
//! An empty file (no header) is an empty sequence.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::frame::FeatureFrame;
use crate::error::{Error, Result};
use crate::observation::{Intrinsics, Pose2, PosedObservation};

const MAGIC: &str = "onemap-frames v1";

pub fn write_feature_frames(
    path: impl AsRef<Path>,
    feature_dim: usize,
    frames: &[(PosedObservation, FeatureFrame)],
) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{MAGIC} feature_dim={feature_dim}")?;
    for (obs, frame) in frames {
        let mut rec = Vec::new();
        for v in [
            obs.pose.x,
            obs.pose.y,
            obs.pose.heading,
            obs.camera_height,
            obs.max_range,
        ] {
            rec.extend_from_slice(&v.to_le_bytes());
        }
        let k = &obs.intrinsics;
        rec.extend_from_slice(&(k.width as u32).to_le_bytes());
        rec.extend_from_slice(&(k.height as u32).to_le_bytes());
        for v in [k.fx, k.fy, k.cx, k.cy] {
            rec.extend_from_slice(&v.to_le_bytes());
        }
        for d in &obs.depth {
            rec.extend_from_slice(&d.to_le_bytes());
        }
        rec.extend(obs.valid.iter().map(|&v| v as u8));
        for v in [frame.height, frame.width, frame.dim] {
            rec.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for f in &frame.data {
            rec.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&(rec.len() as u32).to_le_bytes());
        out.extend_from_slice(&rec);
    }
    fs::write(path, out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    record: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Parse {
                record: self.record,
                message: format!("truncated: needed {n} bytes, {} left", self.buf.len()),
            });
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.parse_err("size overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn parse_err(&self, message: &str) -> Error {
        Error::Parse {
            record: self.record,
            message: message.to_string(),
        }
    }
}

fn parse_header(line: &str) -> Option<usize> {
    let rest = line.strip_prefix(MAGIC)?.trim();
    rest.strip_prefix("feature_dim=")?.parse().ok()
}

/// Loads every record of a feature-frame file. Record indices in errors are
/// zero-based.
pub fn load_feature_frames(path: impl AsRef<Path>) -> Result<Vec<(PosedObservation, FeatureFrame)>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or(Error::Parse {
        record: 0,
        message: "missing header line".into(),
    })?;
    let header = std::str::from_utf8(&bytes[..newline]).unwrap_or("");
    let feature_dim = parse_header(header).ok_or_else(|| Error::Parse {
        record: 0,
        message: format!("bad header '{header}'"),
    })?;

    let mut rest = &bytes[newline + 1..];
    let mut out = Vec::new();
    while !rest.is_empty() {
        let record = out.len();
        let mut outer = Reader { buf: rest, record };
        let len = outer.u32()? as usize;
        let payload = outer.take(len)?;
        rest = outer.buf;

        let mut r = Reader {
            buf: payload,
            record,
        };
        let (x, y, heading, camera_height, max_range) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let intrinsics = Intrinsics {
            width,
            height,
            fx: r.f64()?,
            fy: r.f64()?,
            cx: r.f64()?,
            cy: r.f64()?,
        };
        let n = width * height;
        let depth = r.f32s(n)?;
        let valid = r.take(n)?.iter().map(|&b| b != 0).collect();
        let (ph, pw, dim) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        if dim != feature_dim {
            return Err(Error::Schema {
                record,
                message: format!("feature_dim {dim} differs from file header {feature_dim}"),
            });
        }
        let data = r.f32s(ph * pw * dim)?;
        if !r.buf.is_empty() {
            return Err(r.parse_err("trailing bytes in record"));
        }
        let frame = FeatureFrame::new(ph, pw, dim, data).map_err(|e| Error::Parse {
            record,
            message: e.to_string(),
        })?;
        let obs = PosedObservation {
            pose: Pose2::new(x, y, heading),
            camera_height,
            intrinsics,
            max_range,
            depth,
            valid,
            hit_labels: Vec::new(),
            hit_cells: Vec::new(),
        };
        obs.check_shape().map_err(|e| Error::Parse {
            record,
            message: e.to_string(),
        })?;
        out.push((obs, frame));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize, seed: f32) -> (PosedObservation, FeatureFrame) {
        let obs = PosedObservation {
            pose: Pose2::new(1.25 + seed as f64, 2.5, 0.3),
            camera_height: 0.88,
            intrinsics: Intrinsics::from_hfov(4, 2, 1.5, 0.5),
            max_range: 6.0,
            depth: (0..8).map(|i| 1.0 + i as f32 * 0.25 + seed).collect(),
            valid: (0..8).map(|i| i != 3).collect(),
            hit_labels: vec![],
            hit_cells: vec![],
        };
        let frame = FeatureFrame::new(1, 2, dim, (0..2 * dim).map(|i| i as f32 * 0.1 - seed).collect()).unwrap();
        (obs, frame)
    }

    #[test]
    fn empty_file_is_empty_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        fs::write(&p, b"").unwrap();
        assert!(load_feature_frames(&p).unwrap().is_empty());
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let frames = vec![sample(3, 0.0), sample(3, 1.0)];
        write_feature_frames(&p, 3, &frames).unwrap();
        assert_eq!(load_feature_frames(&p).unwrap(), frames);
    }

    #[test]
    fn mismatched_dim_names_the_record() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bin");
        let mut frames: Vec<_> = (0..5).map(|i| sample(3, i as f32)).collect();
        frames[3] = sample(4, 3.0);
        write_feature_frames(&p, 3, &frames).unwrap();
        match load_feature_frames(&p) {
            Err(Error::Schema { record, .. }) => assert_eq!(record, 3),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        write_feature_frames(&p, 3, &[sample(3, 0.0), sample(3, 1.0)]).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 5);
        fs::write(&p, bytes).unwrap();
        assert!(matches!(load_feature_frames(&p), Err(Error::Parse { record: 1, .. })));
    }
}
