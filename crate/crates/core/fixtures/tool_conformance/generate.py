"""Regenerates corpus.json, the golden request/response corpus for the
vision-tool protocol's stub backend.

Expectations are computed here from the stub rules, independently of the
Rust client:
  detect_referring(q) -> one box (0.25, 0.25, 0.75, 0.75), score 1.0, label q
  detect_dense        -> (0.05,0.05,0.45,0.45) score 0.9 and
                         (0.55,0.55,0.95,0.95) score 0.8, label "object"
  segment(q)          -> pixels inside the referring box blended toward
                         (30, 144, 255) as (p + c + 1) // 2, alpha untouched
Box corners map to pixels by floor(v * dim + 0.5), clamped to the image.
"""

import base64
import hashlib
import io
import json
import math
import os

from PIL import Image

WASH = (30, 144, 255)
REF = (0.25, 0.25, 0.75, 0.75)
DENSE = [(0.05, 0.05, 0.45, 0.45, 0.9), (0.55, 0.55, 0.95, 0.95, 0.8)]


def png_b64(img):
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def make_image(w, h, mode, seed):
    img = Image.new(mode, (w, h))
    px = img.load()
    for y in range(h):
        for x in range(w):
            r = (x * 37 + y * 11 + seed) % 256
            g = (x * 5 + y * 53 + seed * 3) % 256
            b = (x * y + seed * 7) % 256
            px[x, y] = (r, g, b) if mode == "RGB" else (r, g, b, (x * 40 + y * 9) % 256)
    return img


def to_px(v, dim):
    return int(min(max(math.floor(v * dim + 0.5), 0), dim))


def wash(img):
    out = img.copy()
    w, h = out.size
    x0, y0, x1, y1 = to_px(REF[0], w), to_px(REF[1], h), to_px(REF[2], w), to_px(REF[3], h)
    px = out.load()
    for y in range(y0, y1):
        for x in range(x0, x1):
            p = px[x, y]
            blended = tuple((p[c] + WASH[c] + 1) // 2 for c in range(3))
            px[x, y] = blended + tuple(p[3:])
    return out


def box(x0, y0, x1, y1, score, label):
    return {"x0": x0, "y0": y0, "x1": x1, "y1": y1, "score": score, "label": label}


def body(obj):
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def request(action, img, query, rid):
    req = {"action": action, "image": png_b64(img)}
    if query is not None:
        req["query"] = query
    req["request_id"] = rid
    return body(req)


def rid(n):
    return "00000000-0000-4000-8000-%012d" % n


def main():
    cases = []

    def boxes_case(name, action, img, query, boxes, n):
        cases.append({
            "name": name,
            "request": request(action, img, query, rid(n)),
            "expect": {"status": 200, "body": body({"boxes": boxes, "elapsed_ms": 0})},
        })

    def segment_case(name, img, query, n):
        out = wash(img)
        cases.append({
            "name": name,
            "request": request("segment", img, query, rid(n)),
            "expect": {
                "status": 200,
                "overlay": {
                    "width": out.size[0],
                    "height": out.size[1],
                    "channels": len(out.getbands()),
                    "sha256": hashlib.sha256(out.tobytes()).hexdigest(),
                },
            },
        })

    def error_case(name, raw, n):
        cases.append({
            "name": name,
            "request": raw,
            "expect": {"status": 400, "error_kind": "malformed_request"},
        })

    rgb = make_image(8, 8, "RGB", 1)
    odd = make_image(7, 3, "RGB", 2)
    rgba = make_image(5, 5, "RGBA", 3)
    wide = make_image(33, 17, "RGB", 4)

    boxes_case("referring_cat", "detect_referring", rgb, "cat", [box(*REF, 1.0, "cat")], 1)
    label = "红色 bus \"front\""
    boxes_case("referring_unicode_label", "detect_referring", odd, label, [box(*REF, 1.0, label)], 2)
    boxes_case("referring_rgba", "detect_referring", rgba, "dog", [box(*REF, 1.0, "dog")], 3)
    dense = [box(*b, "object") for b in DENSE]
    boxes_case("dense_rgb", "detect_dense", rgb, None, dense, 4)
    boxes_case("dense_wide", "detect_dense", wide, None, dense, 5)
    segment_case("segment_square", rgb, "cat", 6)
    segment_case("segment_odd_dims", odd, "bus", 7)
    segment_case("segment_rgba_keeps_alpha", rgba, "dog", 8)
    segment_case("segment_wide", wide, "road", 9)
    error_case("referring_without_query", request("detect_referring", rgb, None, rid(10)), 10)
    error_case("segment_blank_query", request("segment", rgb, "   ", rid(11)), 11)
    error_case("dense_with_query", request("detect_dense", rgb, "cat", rid(12)), 12)
    error_case("unknown_action", request("rotate", rgb, None, rid(13)), 13)
    error_case("not_json", "{\"action\": ", 14)
    error_case("bad_image", body({"action": "segment", "image": "AAAA", "query": "x", "request_id": rid(15)}), 15)

    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "corpus.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"version": 1, "cases": cases}, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
