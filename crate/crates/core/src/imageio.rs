//! Conversions between [`ImageData`] and encoded bytes.

use std::io::Cursor;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use image::{DynamicImage, ImageFormat};

use crate::error::ModelError;
use crate::model::ImageData;

/// Decodes PNG or JPEG bytes. Images carrying an alpha channel stay RGBA,
/// everything else becomes RGB.
pub fn decode(bytes: &[u8]) -> Result<ImageData, ModelError> {
    let img = image::load_from_memory(bytes).map_err(|e| ModelError::InvalidImage(e.to_string()))?;
    from_dynamic(img)
}

pub fn read(path: &Path) -> Result<ImageData, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| ModelError::InvalidImage(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}

fn from_dynamic(img: DynamicImage) -> Result<ImageData, ModelError> {
    let (w, h) = (img.width(), img.height());
    if img.color().has_alpha() {
        ImageData::new(w, h, 4, img.into_rgba8().into_raw())
    } else {
        ImageData::new(w, h, 3, img.into_rgb8().into_raw())
    }
}

pub fn encode_png(image: &ImageData) -> Vec<u8> {
    let color = if image.channels() == 4 { image::ExtendedColorType::Rgba8 } else { image::ExtendedColorType::Rgb8 };
    let mut out = Cursor::new(Vec::new());
    image::write_buffer_with_format(&mut out, image.pixels(), image.width(), image.height(), color, ImageFormat::Png)
        .expect("PNG encoding of a validated buffer into memory cannot fail");
    out.into_inner()
}

pub fn png_base64(image: &ImageData) -> String {
    B64.encode(encode_png(image))
}

pub fn decode_base64(text: &str) -> Result<ImageData, ModelError> {
    let bytes = B64.decode(text.trim()).map_err(|e| ModelError::InvalidImage(format!("bad base64: {e}")))?;
    decode(&bytes)
}
