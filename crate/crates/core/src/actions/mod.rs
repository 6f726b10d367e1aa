//! Executes plan steps against an image.
//!
//! Edge detection, zoom, the spatial ruler, grayscale and box drawing run
//! natively. Segmentation and object detection go through a
//! [`ToolClient`]; when the tool fails the step degrades to the original
//! image with an explanatory caption instead of failing the run.

pub mod ops;
pub mod text;

use serde::{Deserialize, Serialize};

pub use ops::{color_transform, draw_boxes, edge_detect, spatial_ruler, zoom_crop, ZoomParams, DEFAULT_PALETTE};

use crate::error::{ActionError, ToolError};
use crate::imageio;
use crate::model::{ActionKind, BBox, ImageData, PlanStep, VisualRationale};
use crate::par::Exec;
use crate::tools::{ToolAction, ToolClient, ToolOutput, ToolRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionConfig {
    pub edge_threshold: u8,
    pub zoom: ZoomParams,
    pub axis_stroke: u32,
    pub box_stroke: u32,
    pub palette: Vec<[u8; 3]>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ActionConfig {
    fn default() -> Self {
        Self {
            edge_threshold: 96,
            zoom: ZoomParams::default(),
            axis_stroke: 2,
            box_stroke: 3,
            palette: DEFAULT_PALETTE.to_vec(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionOutcome {
    pub visual: VisualRationale,
    /// A remote tool failed and the original image stands in.
    pub degraded: bool,
    pub note: Option<String>,
}

impl ActionOutcome {
    fn ok(image: ImageData, producer: ActionKind, caption: impl Into<String>) -> Self {
        Self {
            visual: VisualRationale { image, producer, annotations: None, caption: caption.into() },
            degraded: false,
            note: None,
        }
    }
}

/// Runs one step. Tool failures degrade; only invalid inputs (or an empty
/// zoom region) are errors.
pub fn execute(
    step: &PlanStep,
    image: &ImageData,
    tools: &dyn ToolClient,
    config: &ActionConfig,
) -> Result<ActionOutcome, ActionError> {
    if let Some(v) = step.violations().into_iter().next() {
        return Err(ActionError::InvalidStep(v));
    }
    if let Some(v) = image.violations().into_iter().next() {
        return Err(ActionError::InvalidImage(v));
    }
    let kind = step.action;
    match kind {
        ActionKind::ColorTransform => {
            Ok(ActionOutcome::ok(color_transform(image, config.exec), kind, "converted to grayscale"))
        }
        ActionKind::EdgeDetection => Ok(ActionOutcome::ok(
            edge_detect(image, config.edge_threshold, config.exec),
            kind,
            format!("Sobel edge map, threshold {}", config.edge_threshold),
        )),
        ActionKind::SpatialRuler => Ok(ActionOutcome::ok(
            spatial_ruler(image, config.axis_stroke),
            kind,
            "quadrant axes drawn; Q1 top-left, Q2 top-right, Q3 bottom-right, Q4 bottom-left",
        )),
        ActionKind::ZoomIn => zoom_step(step, image, tools, config),
        ActionKind::Segmentation | ActionKind::DenseObjectDetection | ActionKind::ReferringObjectDetection => {
            match segment_or_detect(step, image, tools, config) {
                Ok((out, boxes)) => {
                    let caption = match kind {
                        ActionKind::Segmentation => {
                            format!("segmentation mask for {:?}", step.target_phrase().unwrap_or_default())
                        }
                        _ => describe_boxes(&boxes),
                    };
                    let mut outcome = ActionOutcome::ok(out, kind, caption);
                    if kind != ActionKind::Segmentation {
                        outcome.visual.annotations = Some(boxes);
                    }
                    Ok(outcome)
                }
                Err(ActionError::Tool(e)) => Ok(degraded(image, kind, &e)),
                Err(e) => Err(e),
            }
        }
    }
}

fn degraded(image: &ImageData, kind: ActionKind, err: &ToolError) -> ActionOutcome {
    let note = format!("tool unavailable: {err}");
    ActionOutcome {
        visual: VisualRationale {
            image: image.clone(),
            producer: kind,
            annotations: None,
            caption: format!("original image ({note})"),
        },
        degraded: true,
        note: Some(note),
    }
}

fn describe_boxes(boxes: &[BBox]) -> String {
    if boxes.is_empty() {
        return "no objects detected".to_string();
    }
    let parts: Vec<String> =
        boxes.iter().map(|b| format!("{} ({:.2},{:.2})-({:.2},{:.2})", b.label, b.x0, b.y0, b.x1, b.y1)).collect();
    format!("{} box(es): {}", boxes.len(), parts.join("; "))
}

fn zoom_step(
    step: &PlanStep,
    image: &ImageData,
    tools: &dyn ToolClient,
    config: &ActionConfig,
) -> Result<ActionOutcome, ActionError> {
    let region = match step.box_override() {
        Some(b) => b,
        None => {
            let query = step.target_phrase().unwrap_or_default();
            let found = ToolRequest::new(ToolAction::DetectReferring, image, Some(query))
                .and_then(|req| tools.call(&req).and_then(|r| r.check(req.action).map(|_| r)));
            match found {
                Err(e) => return Ok(degraded(image, ActionKind::ZoomIn, &e)),
                Ok(resp) => match best_box(resp.output) {
                    Some(b) => b,
                    None => {
                        let mut out = ActionOutcome::ok(
                            image.clone(),
                            ActionKind::ZoomIn,
                            format!("no region matched {query:?}; original image kept"),
                        );
                        out.note = Some("zoom target not found".into());
                        return Ok(out);
                    }
                },
            }
        }
    };
    let zoomed = zoom_crop(image, &region, &config.zoom)?;
    let caption = format!(
        "zoomed on {:?} at ({:.2},{:.2})-({:.2},{:.2})",
        region.label, region.x0, region.y0, region.x1, region.y1
    );
    let mut out = ActionOutcome::ok(zoomed, ActionKind::ZoomIn, caption);
    out.visual.annotations = Some(vec![region]);
    Ok(out)
}

/// Highest score wins; earlier boxes win ties.
fn best_box(output: ToolOutput) -> Option<BBox> {
    let ToolOutput::Boxes(boxes) = output else { return None };
    boxes.into_iter().reduce(|best, b| if b.score > best.score { b } else { best })
}

/// Calls the tool for a segmentation or detection step. Detection boxes are
/// drawn onto the image; segmentation returns the tool's overlay.
pub fn segment_or_detect(
    step: &PlanStep,
    image: &ImageData,
    tools: &dyn ToolClient,
    config: &ActionConfig,
) -> Result<(ImageData, Vec<BBox>), ActionError> {
    let action = match step.action {
        ActionKind::Segmentation => ToolAction::Segment,
        ActionKind::ReferringObjectDetection => ToolAction::DetectReferring,
        ActionKind::DenseObjectDetection => ToolAction::DetectDense,
        other => return Err(ActionError::InvalidStep(format!("{other} is not a tool action"))),
    };
    let query = step.target_phrase();
    if action.takes_query() && query.is_none() {
        return Err(ActionError::InvalidStep(format!("{} needs a target", step.action)));
    }
    let req = ToolRequest::new(action, image, query)?;
    let resp = tools.call(&req)?;
    resp.check(action)?;
    match resp.output {
        ToolOutput::Boxes(boxes) => Ok((draw_boxes(image, &boxes, config.box_stroke, &config.palette), boxes)),
        ToolOutput::OverlayImage(b64) => {
            let overlay =
                imageio::decode_base64(&b64).map_err(|e| ToolError::MalformedResponse(format!("overlay: {e}")))?;
            if (overlay.width(), overlay.height()) != (image.width(), image.height()) {
                return Err(ToolError::MalformedResponse(format!(
                    "overlay is {}x{}, input is {}x{}",
                    overlay.width(),
                    overlay.height(),
                    image.width(),
                    image.height()
                ))
                .into());
            }
            Ok((overlay, Vec::new()))
        }
    }
}
