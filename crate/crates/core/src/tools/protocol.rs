//! Wire format shared with the vision-tool sidecar.
//!
//! Request: `{"action", "image", "query"?, "request_id"}`.
//! Response: `{"boxes": [{x0,y0,x1,y1,score,label}], "elapsed_ms"}` or
//! `{"overlay": "<png b64>", "elapsed_ms"}`; failures carry
//! `{"error": {"kind", "message"}}`.

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ToolError;
use crate::imageio;
use crate::model::{ActionKind, BBox, ImageData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolAction {
    Segment,
    DetectReferring,
    DetectDense,
}

impl ToolAction {
    pub fn for_action(kind: ActionKind) -> Option<Self> {
        match kind {
            ActionKind::Segmentation => Some(ToolAction::Segment),
            ActionKind::ReferringObjectDetection | ActionKind::ZoomIn => Some(ToolAction::DetectReferring),
            ActionKind::DenseObjectDetection => Some(ToolAction::DetectDense),
            _ => None,
        }
    }

    pub fn takes_query(self) -> bool {
        matches!(self, ToolAction::Segment | ToolAction::DetectReferring)
    }

    pub fn returns_boxes(self) -> bool {
        !matches!(self, ToolAction::Segment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRequest {
    pub action: ToolAction,
    /// Base64 PNG.
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub request_id: Uuid,
}

impl ToolRequest {
    pub fn new(action: ToolAction, image: &ImageData, query: Option<&str>) -> Result<Self, ToolError> {
        Self::with_id(action, image, query, Uuid::new_v4())
    }

    pub fn with_id(
        action: ToolAction,
        image: &ImageData,
        query: Option<&str>,
        request_id: Uuid,
    ) -> Result<Self, ToolError> {
        let req = Self {
            action,
            image: imageio::png_base64(image),
            query: if action.takes_query() { query.map(str::to_string) } else { None },
            request_id,
        };
        match req.violation() {
            Some(message) => Err(ToolError::ToolReported { kind: "malformed_request".into(), message }),
            None => Ok(req),
        }
    }

    pub fn violation(&self) -> Option<String> {
        let has_query = self.query.as_deref().is_some_and(|q| !q.trim().is_empty());
        match (self.action.takes_query(), has_query) {
            (true, false) => Some(format!("{:?} requires a query", self.action)),
            (false, true) => Some(format!("{:?} takes no query", self.action)),
            _ => None,
        }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("request serialization is infallible")
    }

    pub fn decode(text: &str) -> Result<Self, String> {
        let req: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match req.violation() {
            Some(v) => Err(v),
            None => Ok(req),
        }
    }

    pub fn decode_image(&self) -> Result<ImageData, ToolError> {
        imageio::decode_base64(&self.image).map_err(|e| ToolError::ToolReported {
            kind: "malformed_request".into(),
            message: format!("request image: {e}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToolOutput {
    Boxes(Vec<BBox>),
    /// Base64 PNG.
    OverlayImage(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolResponse {
    pub output: ToolOutput,
    pub elapsed_ms: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireError {
    kind: String,
    message: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct WireResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boxes: Option<Vec<BBox>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    overlay: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<WireError>,
}

impl ToolResponse {
    pub fn boxes(boxes: Vec<BBox>) -> Self {
        Self { output: ToolOutput::Boxes(boxes), elapsed_ms: 0 }
    }

    pub fn overlay(image: &ImageData) -> Self {
        Self { output: ToolOutput::OverlayImage(imageio::png_base64(image)), elapsed_ms: 0 }
    }

    pub fn encode(&self) -> String {
        let mut wire = WireResponse { elapsed_ms: Some(self.elapsed_ms), ..Default::default() };
        match &self.output {
            ToolOutput::Boxes(b) => wire.boxes = Some(b.clone()),
            ToolOutput::OverlayImage(o) => wire.overlay = Some(o.clone()),
        }
        serde_json::to_string(&wire).expect("response serialization is infallible")
    }

    /// Parses a response body and checks it against the request's action.
    pub fn decode(text: &str, action: ToolAction) -> Result<Self, ToolError> {
        let wire: WireResponse =
            serde_json::from_str(text).map_err(|e| ToolError::MalformedResponse(format!("{e}: {}", clip(text))))?;
        if let Some(err) = wire.error {
            return Err(ToolError::ToolReported { kind: err.kind, message: err.message });
        }
        let output = match (wire.boxes, wire.overlay) {
            (Some(b), None) => ToolOutput::Boxes(b),
            (None, Some(o)) => ToolOutput::OverlayImage(o),
            _ => {
                return Err(ToolError::MalformedResponse("response must carry exactly one of boxes or overlay".into()))
            }
        };
        let resp = Self { output, elapsed_ms: wire.elapsed_ms.unwrap_or(0) };
        resp.check(action)?;
        Ok(resp)
    }

    /// Applies the variant rule and box invariants.
    pub fn check(&self, action: ToolAction) -> Result<(), ToolError> {
        match (&self.output, action.returns_boxes()) {
            (ToolOutput::Boxes(boxes), true) => {
                if let Some(v) = boxes.iter().find_map(BBox::violation) {
                    return Err(ToolError::MalformedResponse(v));
                }
                Ok(())
            }
            (ToolOutput::OverlayImage(_), false) => Ok(()),
            (ToolOutput::Boxes(_), false) => {
                Err(ToolError::MalformedResponse("segment must return an overlay image".into()))
            }
            (ToolOutput::OverlayImage(_), true) => {
                Err(ToolError::MalformedResponse("detection must return boxes".into()))
            }
        }
    }
}

/// Body of an error reply, as the sidecar sends it.
pub fn encode_error(err: &ToolError) -> String {
    let message = match err {
        ToolError::ToolReported { message, .. } => message.clone(),
        other => other.to_string(),
    };
    let wire = WireResponse { error: Some(WireError { kind: err.kind().to_string(), message }), ..Default::default() };
    serde_json::to_string(&wire).expect("error serialization is infallible")
}

fn clip(text: &str) -> &str {
    let end = text.char_indices().nth(200).map_or(text.len(), |(i, _)| i);
    &text[..end]
}
