//! Built-in deterministic tool backend.
//!
//! - `detect_referring(q)`: one box `(0.25, 0.25, 0.75, 0.75)`, score 1.0,
//!   labelled `q`.
//! - `detect_dense`: two fixed boxes, see [`STUB_DENSE_BOXES`].
//! - `segment(q)`: the input with every pixel inside the referring box
//!   blended halfway toward [`STUB_WASH`]: `(p + c + 1) / 2` per colour
//!   channel, alpha untouched.

use super::protocol::{encode_error, ToolAction, ToolRequest, ToolResponse};
use super::{Health, ToolClient};
use crate::error::ToolError;
use crate::model::{BBox, ImageData};

pub const STUB_VERSION: &str = "stub-1";
pub const STUB_REFERRING_BOX: (f64, f64, f64, f64) = (0.25, 0.25, 0.75, 0.75);
/// `(x0, y0, x1, y1, score)`, both labelled `"object"`.
pub const STUB_DENSE_BOXES: [(f64, f64, f64, f64, f64); 2] =
    [(0.05, 0.05, 0.45, 0.45, 0.9), (0.55, 0.55, 0.95, 0.95, 0.8)];
pub const STUB_WASH: [u8; 3] = [30, 144, 255];

#[derive(Debug, Clone, Copy, Default)]
pub struct StubTool;

impl StubTool {
    pub fn respond(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError> {
        if let Some(message) = req.violation() {
            return Err(ToolError::ToolReported { kind: "malformed_request".into(), message });
        }
        let query = req.query.as_deref().unwrap_or_default();
        match req.action {
            ToolAction::DetectReferring => Ok(ToolResponse::boxes(vec![referring_box(query)])),
            ToolAction::DetectDense => Ok(ToolResponse::boxes(
                STUB_DENSE_BOXES
                    .iter()
                    .map(|&(x0, y0, x1, y1, s)| BBox { x0, y0, x1, y1, score: s, label: "object".into() })
                    .collect(),
            )),
            ToolAction::Segment => {
                let image = req.decode_image()?;
                Ok(ToolResponse::overlay(&stub_wash(&image, &referring_box(query))))
            }
        }
    }
}

impl StubTool {
    /// Serves one raw `/v1/tool` body the way a sidecar in stub mode does:
    /// returns the HTTP status and response body.
    pub fn handle(&self, body: &str) -> (u16, String) {
        let result = ToolRequest::decode(body)
            .map_err(|message| ToolError::ToolReported { kind: "malformed_request".into(), message })
            .and_then(|req| self.respond(&req));
        match result {
            Ok(resp) => (200, resp.encode()),
            Err(e) if e.kind() == "malformed_request" => (400, encode_error(&e)),
            Err(e) => (500, encode_error(&e)),
        }
    }
}

fn referring_box(label: &str) -> BBox {
    let (x0, y0, x1, y1) = STUB_REFERRING_BOX;
    BBox { x0, y0, x1, y1, score: 1.0, label: label.to_string() }
}

/// The stub's segmentation overlay.
pub fn stub_wash(image: &ImageData, region: &BBox) -> ImageData {
    let rect = region.to_pixels(image.width(), image.height());
    let mut out = image.clone();
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let p = out.rgb(x, y);
            let blended = std::array::from_fn(|c| (p[c] as u16 + STUB_WASH[c] as u16).div_ceil(2) as u8);
            out.set_rgb(x, y, blended);
        }
    }
    out
}

impl ToolClient for StubTool {
    fn call(&self, req: &ToolRequest) -> Result<ToolResponse, ToolError> {
        self.respond(req)
    }

    fn health(&self) -> Result<Health, ToolError> {
        Ok(Health { ok: true, version: STUB_VERSION.to_string() })
    }
}
