use sha2::{Digest, Sha256};

use super::{ChatMessage, DecodeSettings, Part};

const DOMAIN: &[u8] = b"imgthought/chat-request/v1";

/// Content hash of a chat request: roles, text parts, decoded image pixels
/// (with dimensions) and decode settings, in order. Hex-encoded SHA-256.
///
/// Images are hashed as raw pixels so that the hash does not depend on how
/// the image was originally encoded.
pub fn request_fingerprint(messages: &[ChatMessage], settings: &DecodeSettings) -> String {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update((messages.len() as u64).to_le_bytes());
    for m in messages {
        field(&mut h, m.role.as_str().as_bytes());
        h.update((m.parts.len() as u64).to_le_bytes());
        for part in &m.parts {
            match part {
                Part::Text(t) => {
                    h.update(b"T");
                    field(&mut h, t.as_bytes());
                }
                Part::Image(img) => {
                    h.update(b"I");
                    h.update(img.width().to_le_bytes());
                    h.update(img.height().to_le_bytes());
                    h.update([img.channels()]);
                    field(&mut h, img.pixels());
                }
            }
        }
    }
    h.update(settings.temperature.to_bits().to_le_bytes());
    h.update(settings.max_tokens.to_le_bytes());
    hex::encode(h.finalize())
}

fn field(h: &mut Sha256, bytes: &[u8]) {
    h.update((bytes.len() as u64).to_le_bytes());
    h.update(bytes);
}
