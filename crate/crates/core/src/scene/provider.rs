use std::sync::Arc;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::render::{decode_png, draw_text, encode_png, wrap, GLYPH};
use super::ViewParams;
use crate::error::ProviderError;

/// Street-level imagery backend.
pub trait SceneProvider: Send + Sync {
    fn name(&self) -> &str;

    /// PNG bytes for the given (already validated) view.
    fn fetch_scene_image(&self, view: &ViewParams) -> Result<Vec<u8>, ProviderError>;
}

/// Everything an image-revision backend receives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionRequest {
    #[serde(skip)]
    pub source_png: Vec<u8>,
    pub instruction: String,
    pub prompts: Vec<String>,
}

impl RevisionRequest {
    /// Instruction followed by one numbered line per prompt.
    pub fn prompt_text(&self) -> String {
        let mut text = self.instruction.trim_end().to_string();
        for (i, p) in self.prompts.iter().enumerate() {
            text.push_str(&format!("\n{}. {}", i + 1, p.trim()));
        }
        text
    }
}

/// Prompt-conditioned image editing backend.
pub trait ImageProvider: Send + Sync {
    fn name(&self) -> &str;

    /// PNG bytes of the revised image.
    fn revise(&self, request: &RevisionRequest) -> Result<Vec<u8>, ProviderError>;
}

impl<P: SceneProvider + ?Sized> SceneProvider for Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn fetch_scene_image(&self, view: &ViewParams) -> Result<Vec<u8>, ProviderError> {
        (**self).fetch_scene_image(view)
    }
}

impl<P: ImageProvider + ?Sized> ImageProvider for Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn revise(&self, request: &RevisionRequest) -> Result<Vec<u8>, ProviderError> {
        (**self).revise(request)
    }
}

const INK: Rgb<u8> = Rgb([250, 250, 245]);

/// Offline scene provider: a sky/ground placeholder whose colors come from
/// the panorama id, with the view parameters printed on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockSceneProvider {
    pub width: u32,
    pub height: u32,
}

impl Default for MockSceneProvider {
    fn default() -> Self {
        Self {
            width: 640,
            height: 640,
        }
    }
}

impl MockSceneProvider {
    fn labels(view: &ViewParams) -> Vec<String> {
        vec![
            format!("PANO {}", view.panorama_id),
            format!("HEADING {:.2}", view.heading),
            format!("PITCH {:.2} FOV {:.2}", view.pitch, view.fov),
            format!("LAT {:.6}", view.lat),
            format!("LON {:.6}", view.lon),
        ]
    }
}

impl SceneProvider for MockSceneProvider {
    fn name(&self) -> &str {
        "mock-scene"
    }

    fn fetch_scene_image(&self, view: &ViewParams) -> Result<Vec<u8>, ProviderError> {
        let digest = Sha256::digest(view.panorama_id.as_bytes());
        let sky = Rgb([96 + digest[0] / 4, 140 + digest[1] / 4, 190 + digest[2] / 5]);
        let ground = Rgb([70 + digest[3] / 4, 70 + digest[4] / 4, 60 + digest[5] / 4]);
        let (w, h) = (self.width, self.height);
        let horizon = (h as f64 / 2.0 * (1.0 + view.pitch / 90.0)).round() as u32;
        let mut img = RgbImage::from_fn(w, h, |_, y| if y < horizon { sky } else { ground });

        let scale = if w >= 320 { 2 } else { 1 };
        let line_height = GLYPH * scale + 6;
        let width_chars = ((w / (GLYPH * scale)).saturating_sub(2)).max(1) as usize;
        let mut y = GLYPH * scale;
        for label in Self::labels(view) {
            for line in wrap(&label, width_chars) {
                draw_text(&mut img, GLYPH * scale, y, scale, &line, INK);
                y += line_height;
            }
        }
        encode_png(&img)
    }
}

/// Offline revision provider: darkens a band at the bottom of the source
/// and writes the numbered prompts into it. A stripe along the top edge is
/// colored by a digest of the full instruction text.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MockImageProvider;

impl ImageProvider for MockImageProvider {
    fn name(&self) -> &str {
        "mock-image"
    }

    fn revise(&self, request: &RevisionRequest) -> Result<Vec<u8>, ProviderError> {
        let mut img = decode_png(&request.source_png)?;
        let (w, h) = img.dimensions();
        let width_chars = ((w / GLYPH).saturating_sub(2)).max(1) as usize;
        let mut lines = Vec::new();
        for (i, p) in request.prompts.iter().enumerate() {
            for (j, line) in wrap(p, width_chars.saturating_sub(3).max(1)).into_iter().enumerate() {
                let prefix = if j == 0 { format!("{}. ", i + 1) } else { "   ".into() };
                lines.push(format!("{prefix}{line}"));
            }
        }
        let line_height = GLYPH + 4;
        let band = ((lines.len() as u32 * line_height) + GLYPH).min(h);
        let top = h - band;
        for y in top..h {
            for x in 0..w {
                let Rgb([r, g, b]) = *img.get_pixel(x, y);
                img.put_pixel(x, y, Rgb([r / 3, g / 3, b / 3]));
            }
        }
        let mut y = top + GLYPH / 2;
        for line in &lines {
            if y + GLYPH > h {
                break;
            }
            draw_text(&mut img, GLYPH, y, 1, line, INK);
            y += line_height;
        }
        let digest = Sha256::digest(request.prompt_text().as_bytes());
        let stripe = Rgb([digest[0], digest[1], digest[2]]);
        for y in 0..(GLYPH / 2).min(h) {
            for x in 0..w {
                img.put_pixel(x, y, stripe);
            }
        }
        encode_png(&img)
    }
}

/// Stands in for a live adapter whose endpoint or credentials are missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnavailableProvider {
    pub reason: String,
}

impl SceneProvider for UnavailableProvider {
    fn name(&self) -> &str {
        "unavailable"
    }

    fn fetch_scene_image(&self, _: &ViewParams) -> Result<Vec<u8>, ProviderError> {
        Err(ProviderError::unavailable(self.reason.clone()))
    }
}

impl ImageProvider for UnavailableProvider {
    fn name(&self) -> &str {
        "unavailable"
    }

    fn revise(&self, _: &RevisionRequest) -> Result<Vec<u8>, ProviderError> {
        Err(ProviderError::unavailable(self.reason.clone()))
    }
}
