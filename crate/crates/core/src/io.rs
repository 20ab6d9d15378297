//! File formats: radar frames (.wxr), masks (.msk), satellite frames (.msg),
//! shadow sectors (.ssv), precipitation sums (.sum) and texture-library
//! index files.
//!
//! Every binary format is an ASCII header line followed by a raw payload;
//! write∘read is byte-identical for valid data.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo::shadow::ShadowSector;
use crate::grid::{GridSpec, MaskRole, PixelMask, RadarFrame, MAX_LABEL};
use crate::texture::TextureClass;

/// Byte marking an invalid pixel in a frame payload.
const INVALID_BYTE: u8 = 255;

/// Number of satellite channels in a `.msg` file.
pub const MSG_CHANNEL_COUNT: usize = 12;

fn split_header(bytes: &[u8], path: &Path) -> Result<(String, usize)> {
    let pos = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(format!("{}: missing header line", path.display())))?;
    let header = std::str::from_utf8(&bytes[..pos])
        .map_err(|_| Error::parse(format!("{}: header is not ASCII", path.display())))?;
    Ok((header.to_string(), pos + 1))
}

fn parse_count(field: &str, what: &str, path: &Path) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| Error::parse(format!("{}: bad {what} {field:?}", path.display())))
}

/// Reads a `.wxr` radar frame. Cell size is fixed at 1 km (the format does
/// not carry physical resolution).
pub fn read_frame(path: &Path) -> Result<RadarFrame> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, path)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "WXR1" {
        return Err(Error::parse(format!("{}: bad frame header {header:?}", path.display())));
    }
    let width = parse_count(fields[1], "width", path)?;
    let height = parse_count(fields[2], "height", path)?;
    let timestamp = fields[3]
        .parse::<i64>()
        .map_err(|_| Error::parse(format!("{}: bad timestamp {:?}", path.display(), fields[3])))?;
    let spec = GridSpec::new(width, height, 1.0)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let payload = &bytes[payload_at..];
    if payload.len() != spec.len() {
        return Err(Error::parse(format!(
            "{}: payload holds {} bytes, expected {}",
            path.display(),
            payload.len(),
            spec.len()
        )));
    }
    let mut labels = vec![0u8; spec.len()];
    let mut valid = vec![true; spec.len()];
    for (i, &b) in payload.iter().enumerate() {
        if b == INVALID_BYTE {
            valid[i] = false;
        } else if b <= MAX_LABEL {
            labels[i] = b;
        } else {
            return Err(Error::parse(format!(
                "{}: byte {b} at offset {i} is neither a label nor the invalid marker",
                path.display()
            )));
        }
    }
    RadarFrame::from_parts(spec, labels, valid, timestamp)
}

/// Writes a `.wxr` radar frame.
pub fn write_frame(frame: &RadarFrame, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(frame.spec.len() + 32);
    write!(
        out,
        "WXR1 {} {} {}\n",
        frame.spec.width, frame.spec.height, frame.timestamp
    )?;
    for i in 0..frame.spec.len() {
        out.push(if frame.valid[i] { frame.labels[i] } else { INVALID_BYTE });
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a `.msk` mask file.
pub fn read_mask(path: &Path) -> Result<PixelMask> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, path)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "MSK1" {
        return Err(Error::parse(format!("{}: bad mask header {header:?}", path.display())));
    }
    let width = parse_count(fields[1], "width", path)?;
    let height = parse_count(fields[2], "height", path)?;
    let role = MaskRole::from_str(fields[3])?;
    let spec = GridSpec::new(width, height, 1.0)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let payload = &bytes[payload_at..];
    if payload.len() != spec.len() {
        return Err(Error::parse(format!(
            "{}: payload holds {} bytes, expected {}",
            path.display(),
            payload.len(),
            spec.len()
        )));
    }
    let mut bits = vec![false; spec.len()];
    for (i, &b) in payload.iter().enumerate() {
        match b {
            0 => {}
            1 => bits[i] = true,
            other => {
                return Err(Error::parse(format!(
                    "{}: mask byte {other} at offset {i} is not 0/1",
                    path.display()
                )))
            }
        }
    }
    PixelMask::from_bits(spec, bits, role)
}

/// Writes a `.msk` mask file.
pub fn write_mask(mask: &PixelMask, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(mask.spec.len() + 32);
    write!(
        out,
        "MSK1 {} {} {}\n",
        mask.spec.width,
        mask.spec.height,
        mask.role.as_str()
    )?;
    out.extend(mask.bits.iter().map(|&b| b as u8));
    fs::write(path, out)?;
    Ok(())
}

/// Satellite frame: 12 co-registered real-valued channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MsgFrame {
    /// Raster geometry (matches the radar grid).
    pub spec: GridSpec,
    /// Channel planes, each row-major with `spec.len()` values.
    pub channels: Vec<Vec<f32>>,
    /// Acquisition time, seconds since the Unix epoch.
    pub timestamp: i64,
}

impl MsgFrame {
    /// Builds a satellite frame, enforcing the 12-channel finite-value contract.
    pub fn new(spec: GridSpec, channels: Vec<Vec<f32>>, timestamp: i64) -> Result<Self> {
        if channels.len() != MSG_CHANNEL_COUNT {
            return Err(Error::domain(format!(
                "satellite frame needs {MSG_CHANNEL_COUNT} channels, got {}",
                channels.len()
            )));
        }
        for (c, plane) in channels.iter().enumerate() {
            if plane.len() != spec.len() {
                return Err(Error::domain(format!("channel {c} size does not match grid")));
            }
            if let Some(i) = plane.iter().position(|v| !v.is_finite()) {
                return Err(Error::domain(format!("channel {c} holds a non-finite value at {i}")));
            }
        }
        Ok(MsgFrame { spec, channels, timestamp })
    }

    /// The 12-channel vector at `(x, y)`.
    pub fn vector(&self, x: usize, y: usize) -> [f64; MSG_CHANNEL_COUNT] {
        let i = self.spec.index(x, y);
        let mut v = [0.0; MSG_CHANNEL_COUNT];
        for (c, plane) in self.channels.iter().enumerate() {
            v[c] = plane[i] as f64;
        }
        v
    }
}

/// Reads a `.msg` satellite frame.
pub fn read_msg(path: &Path) -> Result<MsgFrame> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, path)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "MSG1" {
        return Err(Error::parse(format!("{}: bad satellite header {header:?}", path.display())));
    }
    let width = parse_count(fields[1], "width", path)?;
    let height = parse_count(fields[2], "height", path)?;
    let timestamp = fields[3]
        .parse::<i64>()
        .map_err(|_| Error::parse(format!("{}: bad timestamp {:?}", path.display(), fields[3])))?;
    let channels = parse_count(fields[4], "channel count", path)?;
    if channels != MSG_CHANNEL_COUNT {
        return Err(Error::parse(format!(
            "{}: channel count {channels} unsupported (expected {MSG_CHANNEL_COUNT})",
            path.display()
        )));
    }
    let spec = GridSpec::new(width, height, 1.0)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let payload = &bytes[payload_at..];
    let expected = spec.len() * MSG_CHANNEL_COUNT * 4;
    if payload.len() != expected {
        return Err(Error::parse(format!(
            "{}: payload holds {} bytes, expected {expected}",
            path.display(),
            payload.len()
        )));
    }
    let mut planes = Vec::with_capacity(MSG_CHANNEL_COUNT);
    for c in 0..MSG_CHANNEL_COUNT {
        let mut plane = Vec::with_capacity(spec.len());
        let base = c * spec.len() * 4;
        for i in 0..spec.len() {
            let o = base + i * 4;
            let v = f32::from_le_bytes([payload[o], payload[o + 1], payload[o + 2], payload[o + 3]]);
            if !v.is_finite() {
                return Err(Error::parse(format!(
                    "{}: non-finite value in channel {c} at index {i}",
                    path.display()
                )));
            }
            plane.push(v);
        }
        planes.push(plane);
    }
    MsgFrame::new(spec, planes, timestamp)
}

/// Writes a `.msg` satellite frame.
pub fn write_msg(msg: &MsgFrame, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(msg.spec.len() * MSG_CHANNEL_COUNT * 4 + 40);
    write!(
        out,
        "MSG1 {} {} {} {}\n",
        msg.spec.width, msg.spec.height, msg.timestamp, MSG_CHANNEL_COUNT
    )?;
    for plane in &msg.channels {
        for v in plane {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-pixel accumulated dBZ over many frames (the "yearly sum").
#[derive(Debug, Clone, PartialEq)]
pub struct SumImage {
    /// Raster geometry.
    pub spec: GridSpec,
    /// Row-major dBZ sums.
    pub sums: Vec<f64>,
    /// Number of frames accumulated.
    pub frame_count: u64,
}

/// Reads a `.sum` accumulated-precipitation file.
pub fn read_sum(path: &Path) -> Result<SumImage> {
    let bytes = fs::read(path)?;
    let (header, payload_at) = split_header(&bytes, path)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "SUM1" {
        return Err(Error::parse(format!("{}: bad sum header {header:?}", path.display())));
    }
    let width = parse_count(fields[1], "width", path)?;
    let height = parse_count(fields[2], "height", path)?;
    let frame_count = fields[3]
        .parse::<u64>()
        .map_err(|_| Error::parse(format!("{}: bad frame count {:?}", path.display(), fields[3])))?;
    let spec = GridSpec::new(width, height, 1.0)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let payload = &bytes[payload_at..];
    if payload.len() != spec.len() * 8 {
        return Err(Error::parse(format!(
            "{}: payload holds {} bytes, expected {}",
            path.display(),
            payload.len(),
            spec.len() * 8
        )));
    }
    let mut sums = Vec::with_capacity(spec.len());
    for i in 0..spec.len() {
        let o = i * 8;
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&payload[o..o + 8]);
        let v = f64::from_le_bytes(buf);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::parse(format!(
                "{}: sum at index {i} is not a non-negative finite value",
                path.display()
            )));
        }
        sums.push(v);
    }
    Ok(SumImage { spec, sums, frame_count })
}

/// Writes a `.sum` accumulated-precipitation file.
pub fn write_sum(sum: &SumImage, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(sum.spec.len() * 8 + 40);
    write!(
        out,
        "SUM1 {} {} {}\n",
        sum.spec.width, sum.spec.height, sum.frame_count
    )?;
    for v in &sum.sums {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Formats a value with six significant digits, as used in `.ssv` files.
fn fmt_sig6(v: f64) -> String {
    format!("{v:.5e}")
}

/// Writes shadow sectors as `.ssv` text: one line per sector,
/// `station_index theta_start theta_end r_start r_end`.
pub fn write_sectors(sectors: &[(usize, ShadowSector)], path: &Path) -> Result<()> {
    let mut out = String::new();
    for (station, s) in sectors {
        out.push_str(&format!(
            "{station} {} {} {} {}\n",
            fmt_sig6(s.theta_start),
            fmt_sig6(s.theta_end),
            fmt_sig6(s.r_start_km),
            fmt_sig6(s.r_end_km)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads shadow sectors from `.ssv` text.
pub fn read_sectors(path: &Path) -> Result<Vec<(usize, ShadowSector)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(format!(
                "{}:{}: expected 5 fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let station = parse_count(fields[0], "station index", path)?;
        let nums: Vec<f64> = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::parse(format!("{}:{}: bad number {f:?}", path.display(), lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        let sector = ShadowSector::new(nums[0], nums[1], nums[2], nums[3])
            .map_err(|e| Error::parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push((station, sector));
    }
    Ok(out)
}

/// One texture-library index entry: a patch file path and its class.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryIndexEntry {
    /// Patch path as stored in the index (relative paths resolve against the
    /// index file's directory).
    pub filename: String,
    /// Ground-truth class of the patch.
    pub class: TextureClass,
}

/// Reads a texture-library index file: one `<filename> <class>` line per patch.
pub fn read_library_index(path: &Path) -> Result<Vec<LibraryIndexEntry>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (filename, class) = line.rsplit_once(char::is_whitespace).ok_or_else(|| {
            Error::parse(format!("{}:{}: expected \"<filename> <class>\"", path.display(), lineno + 1))
        })?;
        let class = TextureClass::from_str(class.trim())
            .map_err(|e| Error::parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(LibraryIndexEntry { filename: filename.trim().to_string(), class });
    }
    Ok(out)
}

/// Writes a texture-library index file.
pub fn write_library_index(entries: &[LibraryIndexEntry], path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{} {}\n", e.filename, e.class.as_str()));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Resolves an index entry's patch path against the index file location.
pub fn resolve_patch_path(index_path: &Path, entry: &LibraryIndexEntry) -> PathBuf {
    let p = Path::new(&entry.filename);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        index_path.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn frame_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.wxr");
        let spec = GridSpec::new(5, 4, 1.0).unwrap();
        let mut frame = RadarFrame::new(spec, 1_700_000_123);
        frame.set_label(1, 1, 13).unwrap();
        frame.set_label(4, 3, 7).unwrap();
        frame.set_invalid(0, 0);
        write_frame(&frame, &path).unwrap();
        let first = fs::read(&path).unwrap();
        let back = read_frame(&path).unwrap();
        assert_eq!(back, frame);
        write_frame(&back, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn hand_encoded_frame_parses_to_expected_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hand.wxr");
        let mut bytes = b"WXR1 3 2 42\n".to_vec();
        bytes.extend_from_slice(&[0, 5, 13, 255, 1, 0]);
        fs::write(&path, &bytes).unwrap();
        let frame = read_frame(&path).unwrap();
        assert_eq!(frame.spec.width, 3);
        assert_eq!(frame.spec.height, 2);
        assert_eq!(frame.timestamp, 42);
        assert_eq!(frame.labels, vec![0, 5, 13, 0, 1, 0]);
        assert_eq!(frame.valid, vec![true, true, true, false, true, true]);
    }

    #[test]
    fn frame_with_out_of_range_byte_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wxr");
        let mut bytes = b"WXR1 2 1 0\n".to_vec();
        bytes.extend_from_slice(&[14, 0]);
        fs::write(&path, &bytes).unwrap();
        match read_frame(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("14"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.wxr");
        let mut bytes = b"WXR1 4 4 0\n".to_vec();
        bytes.extend_from_slice(&[0; 10]);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_frame(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn mask_roundtrip_preserves_role() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.msk");
        let spec = GridSpec::new(3, 3, 1.0).unwrap();
        let mut mask = PixelMask::new(spec, MaskRole::Shadow);
        mask.set(2, 2, true);
        write_mask(&mask, &path).unwrap();
        let back = read_mask(&path).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn msg_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.msg");
        let spec = GridSpec::new(4, 2, 1.0).unwrap();
        let channels: Vec<Vec<f32>> = (0..12)
            .map(|c| (0..spec.len()).map(|i| (c * 100 + i) as f32 * 0.5).collect())
            .collect();
        let msg = MsgFrame::new(spec, channels, 77).unwrap();
        write_msg(&msg, &path).unwrap();
        let back = read_msg(&path).unwrap();
        assert_eq!(back, msg);
    }

    #[test]
    fn msg_with_wrong_channel_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.msg");
        let mut bytes = b"MSG1 1 1 0 3\n".to_vec();
        bytes.extend_from_slice(&[0u8; 12]);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_msg(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn sum_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.sum");
        let spec = GridSpec::new(2, 2, 1.0).unwrap();
        let sum = SumImage { spec, sums: vec![0.0, 1.5, 2.25, 1e6], frame_count: 99 };
        write_sum(&sum, &path).unwrap();
        assert_eq!(read_sum(&path).unwrap(), sum);
    }

    #[test]
    fn sectors_roundtrip_within_six_digits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ssv");
        let sectors = vec![
            (0usize, ShadowSector::new(0.3, 0.65, 10.0, 225.0).unwrap()),
            (3usize, ShadowSector::new(5.93412, 6.28318, 10.0, 128.0).unwrap()),
        ];
        write_sectors(&sectors, &path).unwrap();
        let back = read_sectors(&path).unwrap();
        assert_eq!(back.len(), 2);
        for ((si, a), (sj, b)) in sectors.iter().zip(&back) {
            assert_eq!(si, sj);
            for (x, y) in [
                (a.theta_start, b.theta_start),
                (a.theta_end, b.theta_end),
                (a.r_start_km, b.r_start_km),
                (a.r_end_km, b.r_end_km),
            ] {
                assert!((x - y).abs() <= 1e-5 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn library_index_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("library.cov");
        let entries = vec![
            LibraryIndexEntry { filename: "p000.wxr".into(), class: TextureClass::Artifact },
            LibraryIndexEntry { filename: "p001.wxr".into(), class: TextureClass::Precipitation },
        ];
        write_library_index(&entries, &path).unwrap();
        assert_eq!(read_library_index(&path).unwrap(), entries);
        let resolved = resolve_patch_path(&path, &entries[0]);
        assert_eq!(resolved, dir.path().join("p000.wxr"));
    }
}
