//! Domain types shared by every stage of the pipeline. Nothing here does I/O.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::ModelError;

/// An 8-bit raster, row-major, with 3 (RGB) or 4 (RGBA) interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageData {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
}

impl ImageData {
    pub fn new(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::InvalidImage(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if channels != 3 && channels != 4 {
            return Err(ModelError::InvalidImage(format!("unsupported channel count {channels}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(ModelError::InvalidImage(format!(
                "pixel buffer holds {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self { width, height, channels, pixels })
    }

    /// Builds an image without validating it. Used to represent malformed
    /// inputs so that [`validate_task`] can report them.
    pub fn new_unchecked(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Self {
        Self { width, height, channels, pixels }
    }

    /// A solid RGB image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, 3, pixels).expect("filled image dimensions must be positive")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Row stride in bytes.
    pub fn stride(&self) -> usize {
        self.width as usize * self.channels as usize
    }

    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Structural problems with the raster, empty when well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.width == 0 || self.height == 0 {
            out.push(format!("image dimensions must be positive, got {}x{}", self.width, self.height));
        }
        if self.channels != 3 && self.channels != 4 {
            out.push(format!("unsupported channel count {}", self.channels));
        } else {
            let expected = self.width as usize * self.height as usize * self.channels as usize;
            if self.pixels.len() != expected {
                out.push(format!("pixel buffer holds {} bytes, expected {expected}", self.pixels.len()));
            }
        }
        out
    }

    /// Hex SHA-256 over dimensions, channel count and raw pixels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update([self.channels]);
        h.update(&self.pixels);
        hex::encode(h.finalize())
    }
}

impl fmt::Debug for ImageData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageData")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .field("pixels", &format_args!("<{} bytes>", self.pixels.len()))
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct ImageDataRepr {
    width: u32,
    height: u32,
    channels: u8,
    pixels: String,
}

impl Serialize for ImageData {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ImageDataRepr {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels: B64.encode(&self.pixels),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ImageData {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ImageDataRepr::deserialize(deserializer)?;
        let pixels = B64.decode(repr.pixels).map_err(serde::de::Error::custom)?;
        ImageData::new(repr.width, repr.height, repr.channels, pixels).map_err(serde::de::Error::custom)
    }
}

/// The closed set of image operations a plan step may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Segmentation,
    EdgeDetection,
    ZoomIn,
    DenseObjectDetection,
    ReferringObjectDetection,
    SpatialRuler,
    ColorTransform,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Segmentation,
        ActionKind::EdgeDetection,
        ActionKind::ZoomIn,
        ActionKind::DenseObjectDetection,
        ActionKind::ReferringObjectDetection,
        ActionKind::SpatialRuler,
        ActionKind::ColorTransform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Segmentation => "segmentation",
            ActionKind::EdgeDetection => "edge_detection",
            ActionKind::ZoomIn => "zoom_in",
            ActionKind::DenseObjectDetection => "dense_object_detection",
            ActionKind::ReferringObjectDetection => "referring_object_detection",
            ActionKind::SpatialRuler => "spatial_ruler",
            ActionKind::ColorTransform => "color_transform",
        }
    }

    /// Whether a plan step with this action must name a target phrase.
    pub fn requires_target(self) -> bool {
        matches!(self, ActionKind::ReferringObjectDetection | ActionKind::ZoomIn | ActionKind::Segmentation)
    }

    /// Whether this action is served by the external vision tool.
    pub fn is_remote(self) -> bool {
        matches!(
            self,
            ActionKind::Segmentation | ActionKind::DenseObjectDetection | ActionKind::ReferringObjectDetection
        )
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        alias_action(s)
    }
}

/// Resolves an action name, canonical or alias, ignoring case and
/// separators (`_`, `-`, whitespace).
pub fn alias_action(name: &str) -> Result<ActionKind, ModelError> {
    let key: String = name
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ");
    let kind = match key.as_str() {
        "segmentation" | "segment" => ActionKind::Segmentation,
        "edge detection" | "edges" => ActionKind::EdgeDetection,
        "zoom in" | "zoom" | "zoomin" => ActionKind::ZoomIn,
        "dense object detection" | "dense detection" => ActionKind::DenseObjectDetection,
        "referring object detection" | "referring detection" | "object detection" | "detection" => {
            ActionKind::ReferringObjectDetection
        }
        "spatial ruler" | "ruler" => ActionKind::SpatialRuler,
        "color transform" | "color space conversion" | "grayscale" | "colour transform" => ActionKind::ColorTransform,
        _ => return Err(ModelError::UnknownAction(name.to_string())),
    };
    Ok(kind)
}

/// A scalar plan parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            Scalar::Text(t) => t.trim().parse().ok(),
            Scalar::Bool(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: u32,
    pub subgoal: String,
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Scalar>,
}

impl PlanStep {
    pub fn new(index: u32, subgoal: impl Into<String>, action: ActionKind) -> Self {
        Self { index, subgoal: subgoal.into(), action, target: None, params: BTreeMap::new() }
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target = Some(target.into());
        self
    }

    /// The target phrase, if present and not blank.
    pub fn target_phrase(&self) -> Option<&str> {
        self.target.as_deref().map(str::trim).filter(|t| !t.is_empty())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.index == 0 {
            out.push("step index must be 1-based".to_string());
        }
        if self.action.requires_target() && self.target_phrase().is_none() {
            out.push(format!("step {} uses {} but names no target", self.index, self.action));
        }
        out
    }

    /// A bounding box supplied directly through `x0,y0,x1,y1` params.
    pub fn box_override(&self) -> Option<BBox> {
        let get = |k: &str| self.params.get(k).and_then(Scalar::as_f64);
        let (x0, y0, x1, y1) = (get("x0")?, get("y0")?, get("x1")?, get("y1")?);
        BBox::new(x0, y0, x1, y1, 1.0, self.target.clone().unwrap_or_default()).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub raw_model_text: String,
    /// Problems the parser tolerated, such as dropped or truncated steps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Plan {
    pub fn violations(&self, max_steps: usize) -> Vec<String> {
        let mut out = Vec::new();
        if self.steps.is_empty() {
            out.push("plan has no steps".to_string());
        }
        if self.steps.len() > max_steps {
            out.push(format!("plan has {} steps, limit is {max_steps}", self.steps.len()));
        }
        for pair in self.steps.windows(2) {
            if pair[1].index <= pair[0].index {
                out.push(format!("step index {} does not follow {}", pair[1].index, pair[0].index));
            }
        }
        for step in &self.steps {
            out.extend(step.violations());
        }
        out
    }
}

/// Axis-aligned box in normalized `[0, 1]` image coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub score: f64,
    pub label: String,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64, score: f64, label: impl Into<String>) -> Result<Self, ModelError> {
        let b = Self { x0, y0, x1, y1, score, label: label.into() };
        match b.violation() {
            Some(v) => Err(ModelError::InvalidBox(v)),
            None => Ok(b),
        }
    }

    pub fn violation(&self) -> Option<String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![self.x0, self.y0, self.x1, self.y1, self.score].into_iter().all(unit) {
            return Some(format!(
                "box ({}, {}, {}, {}) score {} leaves [0,1]",
                self.x0, self.y0, self.x1, self.y1, self.score
            ));
        }
        if self.x0 >= self.x1 || self.y0 >= self.y1 {
            return Some(format!("box ({}, {}, {}, {}) is empty", self.x0, self.y0, self.x1, self.y1));
        }
        None
    }

    /// Pixel rectangle `[x0, x1) x [y0, y1)` obtained by rounding against
    /// the image dimensions.
    pub fn to_pixels(&self, width: u32, height: u32) -> PixelRect {
        let px = |v: f64, dim: u32| (v * dim as f64).round().clamp(0.0, dim as f64) as u32;
        PixelRect { x0: px(self.x0, width), y0: px(self.y0, height), x1: px(self.x1, width), y1: px(self.y1, height) }
    }
}

/// Half-open pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualRationale {
    pub image: ImageData,
    pub producer: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<BBox>>,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodalRationale {
    pub step: PlanStep,
    pub visual: Option<VisualRationale>,
    pub textual: String,
    /// Why the step produced no visual, when it did not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RationaleSeries {
    pub items: Vec<MultimodalRationale>,
}

impl RationaleSeries {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn has_visuals(&self) -> bool {
        self.items.iter().any(|i| i.visual.is_some())
    }
}

/// Which rationales feed the answering request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RationaleMode {
    Hybrid,
    TextOnly,
    ZeroShot,
}

impl RationaleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RationaleMode::Hybrid => "hybrid",
            RationaleMode::TextOnly => "text_only",
            RationaleMode::ZeroShot => "zero_shot",
        }
    }
}

impl fmt::Display for RationaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RationaleMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "hybrid" => Ok(RationaleMode::Hybrid),
            "text_only" | "textonly" => Ok(RationaleMode::TextOnly),
            "zero_shot" | "zeroshot" => Ok(RationaleMode::ZeroShot),
            _ => Err(ModelError::UnknownMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub text: String,
    pub choice: Option<String>,
    pub mode: RationaleMode,
    /// Set when the rationale chain could not be built and the answer came
    /// from a degraded path.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

impl AnswerOption {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into() }
    }
}

/// One visual question: the unit of evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub question: String,
    pub image: ImageData,
    #[serde(default)]
    pub options: Vec<AnswerOption>,
    #[serde(default)]
    pub gold_answer: Option<String>,
    #[serde(default)]
    pub category: Option<String>,
}

impl Task {
    pub fn new(id: impl Into<String>, question: impl Into<String>, image: ImageData) -> Self {
        Self { id: id.into(), question: question.into(), image, options: Vec::new(), gold_answer: None, category: None }
    }

    /// Assigns labels A, B, C, ... to `texts` in order.
    pub fn with_options<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.options = texts.into_iter().enumerate().map(|(i, t)| AnswerOption::new(option_label(i), t)).collect();
        self
    }

    pub fn option_labels(&self) -> Vec<&str> {
        self.options.iter().map(|o| o.label.as_str()).collect()
    }
}

/// Label of the `i`-th option: A, B, ..., Z.
pub fn option_label(i: usize) -> String {
    char::from(b'A' + (i % 26) as u8).to_string()
}

/// Lists every broken `Task` invariant; empty when the task is well formed.
pub fn validate_task(task: &Task) -> Vec<String> {
    let mut out = Vec::new();
    if task.id.trim().is_empty() {
        out.push("task id is empty".to_string());
    }
    out.extend(task.image.violations());

    let mut seen = std::collections::BTreeSet::new();
    let mut dups = Vec::new();
    for o in &task.options {
        if !seen.insert(o.label.as_str()) && !dups.contains(&o.label) {
            dups.push(o.label.clone());
        }
    }
    if !dups.is_empty() {
        out.push(format!("duplicate option labels: {}", dups.join(", ")));
    } else {
        for (i, o) in task.options.iter().enumerate() {
            let expected = option_label(i);
            if o.label != expected {
                out.push(format!("option {} has label {:?}, expected {expected:?}", i + 1, o.label));
                break;
            }
        }
    }
    out
}
