//! TUM RGB-D style sequences: an associations file pairing depth and colour
//! frames, 16-bit depth PNGs and 8-bit colour PNGs.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};

use crate::{DepthImage, PerceptionError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub depth: PathBuf,
    pub rgb: Option<PathBuf>,
}

/// Reads `associations.txt` (`t rgb_path t depth_path`, in either order) or,
/// failing that, `depth.txt` (`t depth_path`) from a sequence directory.
/// Frames are returned in file order with paths resolved against `dir`.
pub fn read_sequence(dir: &Path) -> Result<Vec<Frame>> {
    let assoc = dir.join("associations.txt");
    if assoc.exists() {
        return parse_associations(&std::fs::read_to_string(&assoc)?, dir);
    }
    let depth = dir.join("depth.txt");
    if depth.exists() {
        return parse_associations(&std::fs::read_to_string(&depth)?, dir);
    }
    Err(PerceptionError::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} has neither associations.txt nor depth.txt", dir.display()),
    )))
}

pub fn parse_associations(text: &str, dir: &Path) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| PerceptionError::Parse { line: i + 1, message };
        let f: Vec<&str> = line.split_whitespace().collect();
        let stamp = |s: &str| s.parse::<f64>().map_err(|e| err(format!("timestamp {s:?}: {e}")));
        let frame = match f.as_slice() {
            [t, d] => Frame {
                timestamp: stamp(t)?,
                depth: dir.join(d),
                rgb: None,
            },
            [t1, p1, t2, p2] => {
                // The depth file is whichever path mentions depth; TUM's
                // associate.py writes rgb first by default.
                let (t1, t2) = (stamp(t1)?, stamp(t2)?);
                let (t, d, rgb) = if p1.contains("depth") && !p2.contains("depth") {
                    (t1, p1, p2)
                } else {
                    (t2, p2, p1)
                };
                Frame {
                    timestamp: t,
                    depth: dir.join(d),
                    rgb: Some(dir.join(rgb)),
                }
            }
            _ => return Err(err(format!("expected 2 or 4 fields, got {}", f.len()))),
        };
        frames.push(frame);
    }
    Ok(frames)
}

fn image_error(path: &Path, message: impl ToString) -> PerceptionError {
    PerceptionError::Image {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Loads a 16-bit single-channel depth PNG as raw depth units.
pub fn load_depth_png(path: &Path) -> Result<DepthImage> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(image_error(path, "depth image must be 16-bit grayscale"));
    };
    let (w, h) = buf.dimensions();
    let values = buf.into_raw().into_iter().map(f64::from).collect();
    Ok(DepthImage::new(w as usize, h as usize, values))
}

/// Writes raw depth units, rounded and clamped to 16 bits.
pub fn save_depth_png(depth: &DepthImage, path: &Path) -> Result<()> {
    let raw: Vec<u16> = depth
        .values
        .iter()
        .map(|&d| if d.is_finite() { d.round().clamp(0.0, 65535.0) as u16 } else { 0 })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width as u32, depth.height as u32, raw)
            .ok_or_else(|| image_error(path, "buffer size mismatch"))?;
    buf.save(path).map_err(|e| image_error(path, e))
}

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

pub fn load_rgb_png(path: &Path) -> Result<ColorImage> {
    let img = image::open(path).map_err(|e| image_error(path, e))?.into_rgb8();
    let (w, h) = img.dimensions();
    Ok(ColorImage {
        width: w as usize,
        height: h as usize,
        pixels: img.pixels().map(|p| p.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn associations_in_either_order() {
        let dir = Path::new("/seq");
        let text = "# comment\n1.0 rgb/a.png 1.01 depth/a.png\n2.0 depth/b.png 2.02 rgb/b.png\n3.0 depth/c.png\n";
        let f = parse_associations(text, dir).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[0].timestamp, 1.01);
        assert_eq!(f[0].depth, dir.join("depth/a.png"));
        assert_eq!(f[0].rgb.as_deref(), Some(dir.join("rgb/a.png").as_path()));
        assert_eq!(f[1].timestamp, 2.0);
        assert_eq!(f[1].depth, dir.join("depth/b.png"));
        assert_eq!(f[2].rgb, None);
        assert!(parse_associations("1.0 a b\n", dir).is_err());
        assert!(parse_associations("x depth/a.png\n", dir).is_err());
    }
}
