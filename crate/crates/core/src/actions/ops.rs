//! Native pixel operations. All are pure: the same input always yields the
//! same buffer, whichever [`Exec`] mode runs them.

use serde::{Deserialize, Serialize};

use super::text::{draw_text, text_size, TextStyle};
use crate::error::ActionError;
use crate::model::{BBox, ImageData, PixelRect};
use crate::par::{for_each_row, map_slice, Exec};

/// Rec. 601 luma, rounded half up, in integer arithmetic.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    ((299 * rgb[0] as u32 + 587 * rgb[1] as u32 + 114 * rgb[2] as u32 + 500) / 1000) as u8
}

/// Grayscale conversion: every pixel becomes `(L, L, L)`; alpha is kept.
pub fn color_transform(image: &ImageData, exec: Exec) -> ImageData {
    let ch = image.channels() as usize;
    let mut out = image.clone();
    let stride = out.stride();
    for_each_row(exec, out.pixels_mut(), stride, |_, row| {
        for px in row.chunks_exact_mut(ch) {
            let l = luma([px[0], px[1], px[2]]);
            px[..3].fill(l);
        }
    });
    out
}

fn luma_plane(image: &ImageData) -> Vec<u8> {
    image.pixels().chunks_exact(image.channels() as usize).map(|p| luma([p[0], p[1], p[2]])).collect()
}

/// Sobel gradient magnitude of the luma plane (edges replicated), scaled so
/// the strongest gradient maps to 255, then binarized: `>= threshold` is
/// white. A flat image has no gradient and comes out black.
pub fn edge_detect(image: &ImageData, threshold: u8, exec: Exec) -> ImageData {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let gray = luma_plane(image);
    let at = |x: isize, y: isize| -> i32 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        gray[y * w + x] as i32
    };
    let rows: Vec<usize> = (0..h).collect();
    let mag2: Vec<u32> = map_slice(exec, &rows, |&y| {
        let y = y as isize;
        (0..w as isize)
            .map(|x| {
                let gx = at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)
                    - at(x - 1, y - 1)
                    - 2 * at(x - 1, y)
                    - at(x - 1, y + 1);
                let gy = at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)
                    - at(x - 1, y - 1)
                    - 2 * at(x, y - 1)
                    - at(x + 1, y - 1);
                (gx * gx + gy * gy) as u32
            })
            .collect::<Vec<u32>>()
    })
    .concat();
    let max = mag2.iter().copied().max().unwrap_or(0);
    let ch = image.channels() as usize;
    let mut out = image.clone();
    let stride = out.stride();
    let max_mag = (max as f64).sqrt();
    for_each_row(exec, out.pixels_mut(), stride, |y, row| {
        for (x, px) in row.chunks_exact_mut(ch).enumerate() {
            let m2 = mag2[y * w + x];
            let on = max > 0 && {
                let scaled = ((m2 as f64).sqrt() * 255.0 / max_mag).round();
                scaled >= threshold as f64
            };
            px[..3].fill(if on { 255 } else { 0 });
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomParams {
    /// Context added on each side, as a fraction of the crop size.
    pub margin: f64,
    /// Requested magnification.
    pub upscale: f64,
    /// Bound on the longer output side; magnification shrinks to honour it.
    pub max_side: u32,
}

impl Default for ZoomParams {
    fn default() -> Self {
        Self { margin: 0.05, upscale: 2.0, max_side: 1024 }
    }
}

/// Pixel rectangle a zoom on `region` will crop, margin included.
pub fn zoom_rect(width: u32, height: u32, region: &BBox, margin: f64) -> Result<PixelRect, ActionError> {
    let core = region.to_pixels(width, height);
    if core.is_empty() {
        return Err(ActionError::DegenerateBox(format!(
            "({}, {}, {}, {}) on {width}x{height}",
            region.x0, region.y0, region.x1, region.y1
        )));
    }
    let mx = (margin.max(0.0) * core.width() as f64).round() as u32;
    let my = (margin.max(0.0) * core.height() as f64).round() as u32;
    Ok(PixelRect {
        x0: core.x0.saturating_sub(mx),
        y0: core.y0.saturating_sub(my),
        x1: (core.x1 + mx).min(width),
        y1: (core.y1 + my).min(height),
    })
}

/// Output size for a crop of `cw x ch` under `params`.
pub fn zoom_output_size(cw: u32, ch: u32, params: &ZoomParams) -> (u32, u32) {
    let longest = cw.max(ch) as f64;
    let max_side = params.max_side.max(1) as f64;
    let upscale = params.upscale.max(f64::MIN_POSITIVE);
    let side = |v: u32| {
        let v = v as f64;
        let scaled = if upscale * longest <= max_side { v * upscale } else { v * max_side / longest };
        (scaled.round() as u32).max(1)
    };
    (side(cw), side(ch))
}

/// Crops `region` (plus margin) and magnifies it by nearest neighbour.
pub fn zoom_crop(image: &ImageData, region: &BBox, params: &ZoomParams) -> Result<ImageData, ActionError> {
    let rect = zoom_rect(image.width(), image.height(), region, params.margin)?;
    let (cw, chh) = (rect.width(), rect.height());
    let (ow, oh) = zoom_output_size(cw, chh, params);
    let ch = image.channels() as usize;
    let mut pixels = Vec::with_capacity(ow as usize * oh as usize * ch);
    for oy in 0..oh as u64 {
        let sy = rect.y0 as u64 + (2 * oy + 1) * chh as u64 / (2 * oh as u64);
        for ox in 0..ow as u64 {
            let sx = rect.x0 as u64 + (2 * ox + 1) * cw as u64 / (2 * ow as u64);
            let i = (sy as usize * image.width() as usize + sx as usize) * ch;
            pixels.extend_from_slice(&image.pixels()[i..i + ch]);
        }
    }
    ImageData::new(ow, oh, image.channels(), pixels).map_err(|e| ActionError::InvalidImage(e.to_string()))
}

/// Rows (or columns) covered by an axis of `stroke` pixels centred on
/// `len / 2`.
pub fn axis_span(len: u32, stroke: u32) -> std::ops::Range<u32> {
    let start = (len / 2).saturating_sub(stroke / 2);
    start..(start + stroke).min(len)
}

const LABEL_INSET: u32 = 2;
const LABEL_PAD: u32 = 1;

/// Where the quadrant labels go, in order Q1 (top-left), Q2 (top-right),
/// Q3 (bottom-right), Q4 (bottom-left). Empty when the quadrants are too
/// small to hold a label clear of the axes.
pub fn ruler_label_rects(width: u32, height: u32, stroke: u32) -> Vec<PixelRect> {
    let (lw, lh) = text_size("Q1", 1, LABEL_PAD);
    let hx = axis_span(width, stroke);
    let hy = axis_span(height, stroke);
    let fits_x = hx.start >= lw + 2 * LABEL_INSET && width - hx.end >= lw + 2 * LABEL_INSET;
    let fits_y = hy.start >= lh + 2 * LABEL_INSET && height - hy.end >= lh + 2 * LABEL_INSET;
    if !(fits_x && fits_y) {
        return Vec::new();
    }
    let left = LABEL_INSET;
    let right = width - LABEL_INSET - lw;
    let top = LABEL_INSET;
    let bottom = height - LABEL_INSET - lh;
    let r = |x: u32, y: u32| PixelRect { x0: x, y0: y, x1: x + lw, y1: y + lh };
    vec![r(left, top), r(right, top), r(right, bottom), r(left, bottom)]
}

/// Black on bright images, white on dark ones, by mean luma.
pub fn contrast_color(image: &ImageData) -> [u8; 3] {
    let plane = luma_plane(image);
    let sum: u64 = plane.iter().map(|&v| v as u64).sum();
    if sum * 2 >= 255 * plane.len() as u64 {
        [0, 0, 0]
    } else {
        [255, 255, 255]
    }
}

/// Draws quadrant axes through the centre and labels the quadrants
/// Q1..Q4 clockwise from the top-left.
pub fn spatial_ruler(image: &ImageData, stroke: u32) -> ImageData {
    let color = contrast_color(image);
    let inverse = color.map(|c| 255 - c);
    let mut out = image.clone();
    let (w, h) = (out.width(), out.height());
    for y in axis_span(h, stroke) {
        for x in 0..w {
            out.set_rgb(x, y, color);
        }
    }
    for x in axis_span(w, stroke) {
        for y in 0..h {
            out.set_rgb(x, y, color);
        }
    }
    let style = TextStyle { fg: color, bg: inverse, scale: 1, pad: LABEL_PAD };
    for (i, rect) in ruler_label_rects(w, h, stroke).into_iter().enumerate() {
        draw_text(&mut out, rect.x0, rect.y0, &format!("Q{}", i + 1), &style);
    }
    out
}

pub const DEFAULT_PALETTE: [[u8; 3]; 6] =
    [[230, 25, 75], [60, 180, 75], [0, 130, 200], [245, 130, 48], [145, 30, 180], [70, 240, 240]];

/// Outlines each box with a `stroke`-pixel border drawn inward from its
/// pixel rectangle, colours cycling through `palette`, and writes the label
/// above the box (or just inside its top edge when there is no room above).
pub fn draw_boxes(image: &ImageData, boxes: &[BBox], stroke: u32, palette: &[[u8; 3]]) -> ImageData {
    let mut out = image.clone();
    let (w, h) = (out.width(), out.height());
    let palette: &[[u8; 3]] = if palette.is_empty() { &DEFAULT_PALETTE } else { palette };
    for (i, b) in boxes.iter().enumerate() {
        let color = palette[i % palette.len()];
        let r = b.to_pixels(w, h);
        if r.is_empty() {
            continue;
        }
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                let edge = x < r.x0 + stroke || x + stroke >= r.x1 || y < r.y0 + stroke || y + stroke >= r.y1;
                if edge {
                    out.set_rgb(x, y, color);
                }
            }
        }
        let label = b.label.trim();
        if label.is_empty() {
            continue;
        }
        let fg = if luma(color) >= 128 { [0, 0, 0] } else { [255, 255, 255] };
        let style = TextStyle { fg, bg: color, scale: 1, pad: 1 };
        let max_chars = (w.saturating_sub(2) / super::text::GLYPH) as usize;
        let text: String = label.chars().take(max_chars.max(1)).collect();
        let (tw, th) = text_size(&text, 1, 1);
        let ty = if r.y0 >= th { r.y0 - th } else { (r.y0 + stroke).min(h.saturating_sub(th)) };
        let tx = r.x0.min(w.saturating_sub(tw));
        draw_text(&mut out, tx, ty, &text, &style);
    }
    out
}
