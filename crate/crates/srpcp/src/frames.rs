//! Grayscale frame stacks (binary PGM) and their matrix form.
//!
//! Frame `j` becomes column `j` of an `(height * width) x frames` matrix.
//! Within a column the row index varies fastest: pixel `(i, c)` sits at
//! position `c * height + i`. Values are scaled to `[0, 1]` by `1/255`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use srpcp_core::DenseMatrix;

use crate::error::{IoError, IoResult};

/// 8-bit image, pixels in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> IoResult<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(IoError::Format(format!(
                "{} pixels do not fill a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }
}

/// Real-valued image, pixels in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl FloatImage {
    /// Clamps to `[0, 1]` and rounds to the nearest of 256 levels.
    pub fn quantize(&self) -> GrayImage {
        let pixels = self
            .pixels
            .iter()
            .map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameStack {
    pub height: usize,
    pub width: usize,
    pub frames: Vec<GrayImage>,
}

impl FrameStack {
    pub fn new(frames: Vec<GrayImage>) -> IoResult<Self> {
        let first = frames
            .first()
            .ok_or_else(|| IoError::Format("no frames".into()))?;
        let (width, height) = (first.width, first.height);
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| (f.width, f.height) != (width, height))
        {
            return Err(IoError::Format(format!(
                "frame {i} is {}x{}, frame 0 is {width}x{height}",
                f.width, f.height
            )));
        }
        Ok(FrameStack { height, width, frames })
    }
}

pub fn parse_pgm(bytes: &[u8]) -> IoResult<GrayImage> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    let magic = next_token(bytes, &mut pos);
    if magic != b"P5" {
        return Err(IoError::Parse {
            line: 1,
            column: 1,
            message: "not a binary PGM (P5) file".into(),
        });
    }
    for (slot, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        let tok = next_token(bytes, &mut pos);
        *slot = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IoError::Format(format!("bad PGM {name}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(IoError::Format(format!("PGM maxval {maxval}, expected 255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let len = width * height;
    let raster = bytes
        .get(pos..pos + len)
        .ok_or_else(|| IoError::Format("PGM raster shorter than width * height".into()))?;
    GrayImage::new(width, height, raster.to_vec())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> &'a [u8] {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    &bytes[start..*pos]
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn read_pgm(path: &Path) -> IoResult<GrayImage> {
    let bytes = fs::read(path).map_err(|e| IoError::at(path, e))?;
    parse_pgm(&bytes).map_err(|e| match e {
        IoError::Parse { line, column, message } => IoError::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        IoError::Format(msg) => IoError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> IoResult<()> {
    let mut f = fs::File::create(path).map_err(|e| IoError::at(path, e))?;
    f.write_all(&encode_pgm(img)).map_err(|e| IoError::at(path, e))
}

/// Every `*.pgm` file of `dir`, in lexicographic file-name order.
pub fn frame_paths(dir: &Path) -> IoResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| IoError::at(dir, e))? {
        let path = entry.map_err(|e| IoError::at(dir, e))?.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn load_frame_stack(dir: &Path) -> IoResult<FrameStack> {
    let paths = frame_paths(dir)?;
    if paths.is_empty() {
        return Err(IoError::Format(format!("no PGM frames in {}", dir.display())));
    }
    let frames = paths.iter().map(|p| read_pgm(p)).collect::<IoResult<Vec<_>>>()?;
    FrameStack::new(frames)
}

pub fn stack_to_matrix(stack: &FrameStack) -> IoResult<DenseMatrix> {
    let (h, w) = (stack.height, stack.width);
    let frames = &stack.frames;
    Ok(DenseMatrix::from_fn(h * w, frames.len(), |k, j| {
        let (i, c) = (k % h, k / h);
        f64::from(frames[j].pixels[i * w + c]) / 255.0
    })?)
}

/// Column `index` of `m` as a `height x width` image.
pub fn unstack_column(m: &DenseMatrix, index: usize, height: usize, width: usize) -> IoResult<FloatImage> {
    if index >= m.cols() {
        return Err(IoError::Format(format!("column {index} out of range ({} columns)", m.cols())));
    }
    if height * width != m.rows() {
        return Err(IoError::Format(format!(
            "{height}x{width} frames need {} rows, matrix has {}",
            height * width,
            m.rows()
        )));
    }
    let col = m.column(index);
    let mut pixels = vec![0.0; height * width];
    for c in 0..width {
        for i in 0..height {
            pixels[i * width + c] = col[c * height + i];
        }
    }
    Ok(FloatImage { width, height, pixels })
}

/// Linear interpolation between order statistics, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Maps the 1st..99th percentile range linearly onto `[0, 1]`, clipping
/// outside it. A constant image is returned unchanged.
pub fn contrast_stretch(img: &FloatImage) -> FloatImage {
    let mut sorted = img.pixels.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile(&sorted, 0.01);
    let hi = percentile(&sorted, 0.99);
    if !(hi > lo) {
        return img.clone();
    }
    let scale = 1.0 / (hi - lo);
    FloatImage {
        width: img.width,
        height: img.height,
        pixels: img
            .pixels
            .iter()
            .map(|&x| ((x - lo) * scale).clamp(0.0, 1.0))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 200]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.pixels.clone()), (2, 1, vec![7, 200]));
        assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_ascii_pgm() {
        assert!(matches!(parse_pgm(b"P2\n1 1\n255\n0\n"), Err(IoError::Parse { .. })));
        assert!(matches!(parse_pgm(b"P5\n2 2\n255\n\x00"), Err(IoError::Format(_))));
    }

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.01), 1.0);
        assert_eq!(percentile(&v, 0.995), 99.5);
    }
}
