//! Frame files (binary PGM, PNG) and the CSV artifacts of experiments.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pipeline::Detection;
use crate::synth::GroundTruthEntry;

fn read_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Read {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Encodes 8-bit pixels as binary PGM (P5, maxval 255).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a binary PGM with 8-bit samples. Comments in the header are
/// skipped.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(format!("unsupported magic {:?}, expected P5", fields[0]));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(format!("only 8-bit PGM is supported, maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = w * h;
    if w == 0 || h == 0 || bytes.len() < pos + need {
        return Err(format!("raster truncated: need {need} bytes"));
    }
    let mut px = bytes[pos..pos + need].to_vec();
    if maxval != 255 {
        for p in &mut px {
            *p = ((*p as usize * 255 + maxval / 2) / maxval) as u8;
        }
    }
    Ok((w, h, px))
}

pub fn write_pgm(path: &Path, frame_u8: &[u8], width: usize, height: usize) -> Result<()> {
    fs::write(path, encode_pgm(width, height, frame_u8)).map_err(|e| io_err(path, e))
}

/// Writes a `[0, 1]` luminance frame as 8-bit PGM.
pub fn write_frame_pgm(path: &Path, frame: &Frame) -> Result<()> {
    write_pgm(path, &frame.to_u8(), frame.width(), frame.height())
}

/// Writes a response map rescaled so its own min..max spans 0..255.
pub fn write_map_pgm(path: &Path, map: &Frame) -> Result<()> {
    let lo = map.min_value().min(0.0);
    let hi = map.max_value();
    write_pgm(path, &map.to_u8_scaled(lo, hi), map.width(), map.height())
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
}

/// Reads a PGM or PNG as `[0, 1]` luminance. Colour images are converted
/// with 0.299/0.587/0.114 weights.
pub fn read_gray_image(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| read_err(path, e.to_string()))?;
    if bytes.starts_with(b"P5") {
        let (w, h, px) = decode_pgm(&bytes).map_err(|e| read_err(path, e))?;
        return Frame::from_u8(w, h, &px);
    }
    let img = image::load_from_memory(&bytes).map_err(|e| read_err(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let data = rgb.pixels().map(|p| luma(p[0], p[1], p[2])).collect();
        Frame::from_vec(w, h, data)
    } else {
        Frame::from_u8(w, h, img.to_luma8().as_raw())
    }
}

/// Frame files (`.pgm`, `.png`) in a directory, sorted by file name.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| read_err(dir, e.to_string()))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| read_err(dir, e.to_string()))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("pgm") | Some("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

/// Writes a CSV with a header row and `\n` line endings.
pub fn write_csv<R: AsRef<[String]>>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.as_ref().join(","))?;
        }
        w.flush()
    };
    emit().map_err(|e| io_err(path, e))
}

/// `frame,cx,cy`
pub fn write_ground_truth(path: &Path, gt: &[GroundTruthEntry]) -> Result<()> {
    let rows: Vec<Vec<String>> = gt
        .iter()
        .map(|g| vec![g.frame_index.to_string(), g.cx.to_string(), g.cy.to_string()])
        .collect();
    write_csv(path, &["frame", "cx", "cy"], &rows)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    let text = fs::read_to_string(path).map_err(|e| read_err(path, e.to_string()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "frame,cx,cy" => {}
        other => {
            return Err(read_err(
                path,
                format!("expected header `frame,cx,cy`, got {other:?}"),
            ))
        }
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || read_err(path, format!("malformed row {}: {line:?}", n + 2));
        if cols.len() != 3 {
            return Err(bad());
        }
        out.push(GroundTruthEntry {
            frame_index: cols[0].trim().parse().map_err(|_| bad())?,
            cx: cols[1].trim().parse().map_err(|_| bad())?,
            cy: cols[2].trim().parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

/// `frame,x,y,score`
pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    let rows: Vec<Vec<String>> = dets
        .iter()
        .map(|d| {
            vec![
                d.frame_index.to_string(),
                d.x.to_string(),
                d.y.to_string(),
                d.score.to_string(),
            ]
        })
        .collect();
    write_csv(path, &["frame", "x", "y", "score"], &rows)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| io_err(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
