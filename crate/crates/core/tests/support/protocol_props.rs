//! Tool wire protocol: randomized round trips and the stub conformance
//! corpus.

use imgthought::imageio;
use imgthought::model::{BBox, ImageData};
use imgthought::tools::{StubTool, ToolAction, ToolOutput, ToolRequest, ToolResponse};
use proptest::collection::vec;
use proptest::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use uuid::Uuid;

use super::{check, ensure, fixtures, CheckResult};

fn tool_action() -> impl Strategy<Value = ToolAction> {
    prop_oneof![Just(ToolAction::Segment), Just(ToolAction::DetectReferring), Just(ToolAction::DetectDense)]
}

fn small_image() -> impl Strategy<Value = ImageData> {
    (1..=6u32, 1..=6u32, prop_oneof![Just(3u8), Just(4u8)]).prop_flat_map(|(w, h, c)| {
        vec(any::<u8>(), (w * h * c as u32) as usize).prop_map(move |px| ImageData::new(w, h, c, px).unwrap())
    })
}

fn query() -> impl Strategy<Value = String> {
    "[ -~é漢🙂\"\\\\\t\n]{1,24}".prop_filter("blank", |q| !q.trim().is_empty())
}

/// Encoding a request and decoding it gives the same request and the same
/// pixels back.
pub fn request_round_trip(cases: u32) -> CheckResult {
    check(cases, (tool_action(), small_image(), query(), any::<u128>()), |(action, image, q, id)| {
        let query = action.takes_query().then_some(q.as_str());
        let req = ToolRequest::with_id(action, &image, query, Uuid::from_u128(id))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let wire = req.encode();
        let back = ToolRequest::decode(&wire).map_err(TestCaseError::fail)?;
        ensure(back == req, || format!("request changed over the wire: {wire}"))?;
        let pixels = back.decode_image().map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(pixels == image, || "image changed over the wire".into())
    })
}

fn unit_box() -> impl Strategy<Value = BBox> {
    (0.0..0.5f64, 0.0..0.5f64, 0.5..=1.0f64, 0.5..=1.0f64, 0.0..=1.0f64, "[ -~漢]{0,12}")
        .prop_map(|(x0, y0, x1, y1, s, label)| BBox::new(x0, y0, x1, y1, s, label).unwrap())
}

/// Responses survive encoding, for both variants.
pub fn response_round_trip(cases: u32) -> CheckResult {
    let output = prop_oneof![
        vec(unit_box(), 0..5).prop_map(|b| (ToolAction::DetectDense, ToolOutput::Boxes(b))),
        small_image().prop_map(|i| (ToolAction::Segment, ToolOutput::OverlayImage(imageio::png_base64(&i)))),
    ];
    check(cases, (output, any::<u64>()), |((action, output), elapsed_ms)| {
        let resp = ToolResponse { output, elapsed_ms };
        let back = ToolResponse::decode(&resp.encode(), action).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(back == resp, || "response changed over the wire".into())
    })
}

#[derive(Debug, Deserialize)]
struct Corpus {
    cases: Vec<Case>,
}

#[derive(Debug, Deserialize)]
struct Case {
    name: String,
    request: String,
    expect: Expect,
}

#[derive(Debug, Deserialize)]
struct Expect {
    status: u16,
    body: Option<String>,
    overlay: Option<Overlay>,
    error_kind: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Overlay {
    width: u32,
    height: u32,
    channels: u8,
    sha256: String,
}

#[derive(Debug, Deserialize)]
struct ReplyBody {
    overlay: Option<String>,
    error: Option<ReplyError>,
}

#[derive(Debug, Deserialize)]
struct ReplyError {
    kind: String,
}

/// Serves every corpus request with the stub and compares the replies:
/// box bodies byte for byte, overlays by decoded pixels, errors by kind.
/// Returns the number of cases checked.
pub fn stub_conformance() -> Result<usize, String> {
    let path = fixtures::root().join("tool_conformance/corpus.json");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let corpus: Corpus = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let stub = StubTool;
    for case in &corpus.cases {
        let fail = |msg: String| format!("{}: {msg}", case.name);
        let (status, body) = stub.handle(&case.request);
        if status != case.expect.status {
            return Err(fail(format!("status {status}, want {} ({body})", case.expect.status)));
        }
        if let Some(want) = &case.expect.body {
            if &body != want {
                return Err(fail(format!("body\n  got  {body}\n  want {want}")));
            }
            continue;
        }
        let reply: ReplyBody = serde_json::from_str(&body).map_err(|e| fail(e.to_string()))?;
        if let Some(want) = &case.expect.overlay {
            let b64 = reply.overlay.ok_or_else(|| fail("no overlay".into()))?;
            let img = imageio::decode_base64(&b64).map_err(|e| fail(e.to_string()))?;
            let got = (img.width(), img.height(), img.channels(), hex::encode(Sha256::digest(img.pixels())));
            let expected = (want.width, want.height, want.channels, want.sha256.clone());
            if got != expected {
                return Err(fail(format!("overlay {got:?}, want {expected:?}")));
            }
        }
        if let Some(want) = &case.expect.error_kind {
            let kind = reply.error.map(|e| e.kind);
            if kind.as_deref() != Some(want.as_str()) {
                return Err(fail(format!("error kind {kind:?}, want {want}")));
            }
        }
    }
    Ok(corpus.cases.len())
}
