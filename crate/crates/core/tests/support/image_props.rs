//! Pixel-exact properties of the native image operations. Expected values
//! come from integer oracles written here, not from the library.

use imgthought::actions::ops::{ruler_label_rects, DEFAULT_PALETTE};
use imgthought::actions::{color_transform, draw_boxes, edge_detect, spatial_ruler, zoom_crop, ZoomParams};
use imgthought::error::ActionError;
use imgthought::model::{BBox, ImageData};
use imgthought::par::Exec;
use proptest::collection::vec;
use proptest::prelude::*;

use super::{check, ensure, CheckResult};

/// Box coordinates are multiples of 1/1024 so that `v × dim` is exact in
/// floating point and the integer oracle can round without ties drifting.
const GRID: u32 = 1024;

fn image(max_side: u32) -> impl Strategy<Value = ImageData> {
    (1..=max_side, 1..=max_side, prop_oneof![Just(3u8), Just(4u8)]).prop_flat_map(|(w, h, c)| {
        vec(any::<u8>(), (w * h * c as u32) as usize).prop_map(move |px| ImageData::new(w, h, c, px).unwrap())
    })
}

fn grid_span() -> impl Strategy<Value = (u32, u32)> {
    (0..GRID, 0..GRID).prop_filter_map("empty span", |(a, b)| (a != b).then(|| (a.min(b), a.max(b))))
}

fn grid_box() -> impl Strategy<Value = BBox> {
    (grid_span(), grid_span()).prop_map(|((x0, x1), (y0, y1))| {
        let g = GRID as f64;
        BBox::new(x0 as f64 / g, y0 as f64 / g, x1 as f64 / g, y1 as f64 / g, 1.0, "").unwrap()
    })
}

/// round-half-up of `k / GRID × dim`, clamped to `dim`.
fn grid_px(v: f64, dim: u32) -> u32 {
    let k = (v * GRID as f64) as u64;
    (((2 * k * dim as u64 + GRID as u64) / (2 * GRID as u64)) as u32).min(dim)
}

fn oracle_luma(r: u8, g: u8, b: u8) -> u8 {
    // The unique integer L with 1000L - 500 <= s < 1000L + 500.
    let s = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    (0..=255u32).find(|l| 1000 * l <= s + 500 && s + 500 < 1000 * (l + 1)).unwrap() as u8
}

/// Grayscale is idempotent, matches the luma oracle per pixel, keeps alpha,
/// and gives the same buffer in both execution modes.
pub fn color_transform_idempotence(cases: u32) -> CheckResult {
    check(cases, image(24), |img| {
        let once = color_transform(&img, Exec::Parallel);
        ensure(color_transform(&once, Exec::Parallel) == once, || "f(f(x)) != f(x)".into())?;
        ensure(color_transform(&img, Exec::Sequential) == once, || "sequential and parallel differ".into())?;
        let ch = img.channels() as usize;
        for (src, out) in img.pixels().chunks(ch).zip(once.pixels().chunks(ch)) {
            let l = oracle_luma(src[0], src[1], src[2]);
            ensure(out[..3] == [l, l, l], || format!("{src:?} -> {out:?}, want {l}"))?;
            if ch == 4 {
                ensure(out[3] == src[3], || "alpha changed".into())?;
            }
        }
        Ok(())
    })
}

/// Uniform images have no gradient, so every threshold yields black.
pub fn edge_detect_uniform(cases: u32) -> CheckResult {
    let strat = (1..=48u32, 1..=48u32, any::<[u8; 3]>(), any::<u8>(), any::<u8>(), any::<bool>());
    check(cases, strat, |(w, h, rgb, alpha, threshold, rgba)| {
        let img = if rgba {
            let px: Vec<u8> = (0..w * h).flat_map(|_| [rgb[0], rgb[1], rgb[2], alpha]).collect();
            ImageData::new(w, h, 4, px).unwrap()
        } else {
            ImageData::filled(w, h, rgb)
        };
        let out = edge_detect(&img, threshold, Exec::Parallel);
        ensure((out.width(), out.height(), out.channels()) == (w, h, img.channels()), || "shape changed".into())?;
        let ch = img.channels() as usize;
        for px in out.pixels().chunks(ch) {
            ensure(px[..3] == [0, 0, 0], || format!("{w}x{h} {rgb:?} t={threshold}: lit pixel {px:?}"))?;
            if ch == 4 {
                ensure(px[3] == alpha, || "alpha changed".into())?;
            }
        }
        Ok(())
    })
}

fn coord_image(w: u32, h: u32) -> ImageData {
    let mut px = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            px.extend_from_slice(&[x as u8, y as u8, ((x >> 8) | ((y >> 8) << 4)) as u8]);
        }
    }
    ImageData::new(w, h, 3, px).unwrap()
}

fn decode_coord(p: [u8; 3]) -> (u32, u32) {
    (p[0] as u32 | ((p[2] as u32 & 0xf) << 8), p[1] as u32 | ((p[2] as u32 >> 4) << 8))
}

/// Output dimensions follow `round(crop × factor)` with the margin added
/// and clamped, where the factor is the requested magnification unless the
/// longer side would exceed the bound. Every output pixel is sampled from
/// inside the crop.
pub fn zoom_crop_dimensions(cases: u32) -> CheckResult {
    // (margin, m, M) with margin = m / M
    let margins =
        prop_oneof![Just((0.0, 0u64, 1u64)), Just((0.05, 1, 20)), Just((1.0 / 32.0, 1, 32)), Just((0.125, 1, 8))];
    let strat = (1..=300u32, 1..=300u32, grid_box(), margins, 4..=32u32, 1..=640u32);
    check(cases, strat, |(w, h, b, (margin, m_num, m_den), up8, max_side)| {
        let img = coord_image(w, h);
        let params = ZoomParams { margin, upscale: up8 as f64 / 8.0, max_side };
        let (x0, y0, x1, y1) = (grid_px(b.x0, w), grid_px(b.y0, h), grid_px(b.x1, w), grid_px(b.y1, h));
        let result = zoom_crop(&img, &b, &params);
        if x1 == x0 || y1 == y0 {
            return ensure(matches!(result, Err(ActionError::DegenerateBox(_))), || {
                format!("{w}x{h} {b:?}: expected DegenerateBox, got {result:?}")
            });
        }
        let out = result.map_err(|e| TestCaseError::fail(format!("{w}x{h} {b:?}: {e}")))?;
        // margin pixels, rounded half up in integers
        let pad = |len: u32| ((2 * m_num * len as u64 + m_den) / (2 * m_den)) as u32;
        let (mx, my) = (pad(x1 - x0), pad(y1 - y0));
        let cx0 = x0.saturating_sub(mx);
        let cy0 = y0.saturating_sub(my);
        let cx1 = (x1 + mx).min(w);
        let cy1 = (y1 + my).min(h);
        let (cw, chh) = ((cx1 - cx0) as u64, (cy1 - cy0) as u64);
        let longest = cw.max(chh);
        let scale = |len: u64| -> u32 {
            let v = if up8 as u64 * longest <= 8 * max_side as u64 {
                (2 * len * up8 as u64 + 8) / 16
            } else {
                (2 * len * max_side as u64 + longest) / (2 * longest)
            };
            v.max(1) as u32
        };
        let want = (scale(cw), scale(chh));
        ensure((out.width(), out.height()) == want, || {
            format!("{w}x{h} {b:?} {params:?}: got {}x{}, want {want:?}", out.width(), out.height())
        })?;
        for y in 0..out.height() {
            for x in 0..out.width() {
                let (sx, sy) = decode_coord(out.rgb(x, y));
                ensure(sx >= cx0 && sx < cx1 && sy >= cy0 && sy < cy1, || {
                    format!("output ({x},{y}) sampled ({sx},{sy}) outside crop")
                })?;
            }
        }
        Ok(())
    })
}

fn axis(len: u32, stroke: u32) -> std::ops::Range<u32> {
    let start = (len / 2).saturating_sub(stroke / 2);
    start..(start + stroke).min(len)
}

/// Only axis and label pixels change; axes are fully painted in the colour
/// that contrasts with the mean luminance.
pub fn spatial_ruler_locality(cases: u32) -> CheckResult {
    check(cases, (image(64), 1..=4u32), |(img, stroke)| {
        let out = spatial_ruler(&img, stroke);
        let (w, h) = (img.width(), img.height());
        let (ax, ay) = (axis(w, stroke), axis(h, stroke));
        let labels = ruler_label_rects(w, h, stroke);
        for r in &labels {
            let clear_x = r.x1 <= ax.start || r.x0 >= ax.end;
            let clear_y = r.y1 <= ay.start || r.y0 >= ay.end;
            ensure(clear_x && clear_y, || format!("label {r:?} overlaps an axis"))?;
        }
        let ch = img.channels() as usize;
        let total: u64 = img.pixels().chunks(ch).map(|p| oracle_luma(p[0], p[1], p[2]) as u64).sum();
        let bright = 2 * total >= 255 * (w * h) as u64;
        for y in 0..h {
            for x in 0..w {
                let on_axis = ax.contains(&x) || ay.contains(&y);
                let in_label = labels.iter().any(|r| r.contains(x, y));
                let (before, after) = (img.rgb(x, y), out.rgb(x, y));
                if on_axis {
                    let c = after[0];
                    ensure(after == [c, c, c] && (c == 0 || c == 255), || format!("axis pixel {after:?}"))?;
                    ensure((c == 0) == bright, || format!("axis colour {c}, luma total {total}"))?;
                } else if !in_label {
                    ensure(before == after, || format!("({x},{y}) changed outside axes and labels"))?;
                }
            }
        }
        if ch == 4 {
            let alpha_kept = img.pixels().chunks(4).zip(out.pixels().chunks(4)).all(|(a, b)| a[3] == b[3]);
            ensure(alpha_kept, || "alpha changed".into())?;
        }
        Ok(())
    })
}

/// An unlabelled box paints exactly a ring of `stroke` pixels inside its
/// rounded pixel rectangle, in the first palette colour.
pub fn draw_boxes_outline(cases: u32) -> CheckResult {
    const BG: [u8; 3] = [1, 2, 3];
    let stroke = 3u32;
    check(cases, (1..=160u32, 1..=160u32, grid_box()), move |(w, h, b)| {
        let img = ImageData::filled(w, h, BG);
        let out = draw_boxes(&img, std::slice::from_ref(&b), stroke, &DEFAULT_PALETTE);
        let (x0, y0, x1, y1) = (grid_px(b.x0, w), grid_px(b.y0, h), grid_px(b.x1, w), grid_px(b.y1, h));
        let colour = DEFAULT_PALETTE[0];
        for y in 0..h {
            for x in 0..w {
                let inside = x >= x0 && x < x1 && y >= y0 && y < y1;
                let ring = inside && (x - x0 < stroke || x1 - 1 - x < stroke || y - y0 < stroke || y1 - 1 - y < stroke);
                let want = if ring { colour } else { BG };
                ensure(out.rgb(x, y) == want, || {
                    format!(
                        "{w}x{h} rect ({x0},{y0})-({x1},{y1}): pixel ({x},{y}) is {:?}, want {want:?}",
                        out.rgb(x, y)
                    )
                })?;
            }
        }
        Ok(())
    })
}
