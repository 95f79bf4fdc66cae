//! Deterministic placeholder rendering used by the offline providers.

use std::io::Cursor;

use font8x8::{UnicodeFonts, BASIC_FONTS};
use image::{ImageFormat, Rgb, RgbImage};

use crate::error::ProviderError;

pub(crate) const GLYPH: u32 = 8;

/// Draws `text` with its top-left corner at (x, y), each glyph pixel
/// expanded to a `scale`×`scale` block. Characters without a glyph render
/// as '?'; anything past the right edge is clipped.
pub(crate) fn draw_text(img: &mut RgbImage, x: u32, y: u32, scale: u32, text: &str, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    for (i, c) in text.chars().enumerate() {
        let glyph = BASIC_FONTS
            .get(c)
            .or_else(|| BASIC_FONTS.get('?'))
            .unwrap_or([0; 8]);
        let gx = x + i as u32 * GLYPH * scale;
        if gx >= w {
            break;
        }
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH {
                if bits & (1 << col) == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let px = gx + col * scale + dx;
                        let py = y + row as u32 * scale + dy;
                        if px < w && py < h {
                            img.put_pixel(px, py, color);
                        }
                    }
                }
            }
        }
    }
}

/// Greedy word wrap to at most `width` characters per line; overlong words
/// are hard-split.
pub(crate) fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut line = String::new();
    for word in text.split_whitespace() {
        let mut word: Vec<char> = word.chars().collect();
        while word.len() > width {
            if !line.is_empty() {
                lines.push(std::mem::take(&mut line));
            }
            lines.push(word.drain(..width).collect());
        }
        let word: String = word.into_iter().collect();
        let needed = if line.is_empty() { word.chars().count() } else { line.chars().count() + 1 + word.chars().count() };
        if needed > width && !line.is_empty() {
            lines.push(std::mem::take(&mut line));
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&word);
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines
}

pub(crate) fn encode_png(img: &RgbImage) -> Result<Vec<u8>, ProviderError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| ProviderError::new(crate::error::ProviderErrorKind::MalformedResponse, e.to_string()))?;
    Ok(out.into_inner())
}

pub(crate) fn decode_png(bytes: &[u8]) -> Result<RgbImage, ProviderError> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map(|img| img.to_rgb8())
        .map_err(|e| {
            ProviderError::new(
                crate::error::ProviderErrorKind::Rejected,
                format!("source is not a PNG image: {e}"),
            )
        })
}
