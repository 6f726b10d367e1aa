//! Bitmap text for labels, from the public-domain 8x8 font.

use font8x8::{UnicodeFonts, BASIC_FONTS};

use crate::model::{ImageData, PixelRect};

pub const GLYPH: u32 = 8;

/// Pixel size of `text` rendered at `scale` with `pad` pixels of
/// background on every side.
pub fn text_size(text: &str, scale: u32, pad: u32) -> (u32, u32) {
    let n = text.chars().count() as u32;
    (n * GLYPH * scale + 2 * pad, GLYPH * scale + 2 * pad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextStyle {
    pub fg: [u8; 3],
    pub bg: [u8; 3],
    pub scale: u32,
    pub pad: u32,
}

/// Draws `text` with its padded background box's top-left at `(x, y)`,
/// clipped to the image. Returns the rectangle that may have changed.
pub fn draw_text(image: &mut ImageData, x: u32, y: u32, text: &str, style: &TextStyle) -> PixelRect {
    let TextStyle { fg, bg, scale, pad } = *style;
    let (tw, th) = text_size(text, scale, pad);
    let rect = PixelRect {
        x0: x.min(image.width()),
        y0: y.min(image.height()),
        x1: (x + tw).min(image.width()),
        y1: (y + th).min(image.height()),
    };
    for py in rect.y0..rect.y1 {
        for px in rect.x0..rect.x1 {
            image.set_rgb(px, py, bg);
        }
    }
    for (i, ch) in text.chars().enumerate() {
        let glyph = BASIC_FONTS.get(ch).or_else(|| BASIC_FONTS.get('?')).unwrap_or([0; 8]);
        let gx = x + pad + i as u32 * GLYPH * scale;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH {
                if bits >> col & 1 == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let px = gx + col * scale + dx;
                        let py = y + pad + row as u32 * scale + dy;
                        if rect.contains(px, py) {
                            image.set_rgb(px, py, fg);
                        }
                    }
                }
            }
        }
    }
    rect
}
