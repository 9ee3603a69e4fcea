//! Semantic-extraction boundary: an image goes in, a bounded text message
//! comes out. Backends are a fixture-keyed mock and an OpenAI-compatible
//! remote client.

mod fixtures;
mod remote;

pub use fixtures::{load_fixtures, Fixture, MockBackend};
pub use remote::{request_body, RemoteBackend, API_KEY_ENV};

use crate::error::{Error, Result};

pub const DEFAULT_L_MAX: usize = 4096;
pub const DEFAULT_PROMPT: &str = "Describe this scene for a nearby vehicle: list vehicles, pedestrians, \
road markings, free and occupied parking spaces, signals and hazards, with positions.";
pub const COMPRESSION_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionRequest {
    pub image: Vec<u8>,
    pub media_type: String,
    pub prompt: String,
    pub model: String,
    /// Maximum words kept from the completion.
    pub l_max: usize,
}

impl ExtractionRequest {
    pub fn new(image: Vec<u8>, media_type: &str) -> Self {
        ExtractionRequest {
            image,
            media_type: media_type.to_string(),
            prompt: DEFAULT_PROMPT.to_string(),
            model: "llava-1.5-7b-hf".to_string(),
            l_max: DEFAULT_L_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image.is_empty() {
            return Err(Error::invalid("image", "must not be empty"));
        }
        if self.l_max == 0 {
            return Err(Error::invalid("l_max", "must be >= 1"));
        }
        Ok(())
    }
}

/// Media type guessed from a file extension.
pub fn media_type_for(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        _ => "image/jpeg",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub latency_s: f64,
}

pub trait Backend {
    fn complete(&self, request: &ExtractionRequest) -> Result<Completion>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMessage {
    pub text: String,
    pub word_count: usize,
    pub source_bytes: usize,
    pub text_bytes: usize,
    pub latency_s: f64,
}

impl SemanticMessage {
    pub fn compression_ratio(&self) -> f64 {
        self.text_bytes as f64 / self.source_bytes as f64
    }
}

/// Keeps the first `l_max` whitespace-separated words, preserving the
/// original spacing between them.
pub fn truncate_words(text: &str, l_max: usize) -> (&str, usize) {
    let mut count = 0;
    let mut end = 0;
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_word {
                in_word = false;
                end = i;
                if count == l_max {
                    return (text[..end].trim_start(), count);
                }
            }
        } else if !in_word {
            in_word = true;
            count += 1;
        }
    }
    if in_word {
        end = text.len();
    }
    (text[..end].trim_start(), count)
}

pub fn extract(request: &ExtractionRequest, backend: &dyn Backend) -> Result<SemanticMessage> {
    request.validate()?;
    let completion = backend.complete(request)?;
    let (text, words) = truncate_words(&completion.text, request.l_max);
    if words == 0 {
        return Err(Error::Remote {
            kind: crate::error::RemoteErrorKind::Protocol,
            message: "backend returned no text".into(),
            retries: 0,
        });
    }
    Ok(SemanticMessage {
        text: text.to_string(),
        word_count: words,
        source_bytes: request.image.len(),
        text_bytes: text.len(),
        latency_s: completion.latency_s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub count: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

pub fn compression_report(messages: &[SemanticMessage]) -> Result<CompressionReport> {
    if messages.is_empty() {
        return Err(Error::invalid("messages", "need at least one message"));
    }
    let ratios: Vec<f64> = messages.iter().map(SemanticMessage::compression_ratio).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(CompressionReport {
        count: ratios.len(),
        mean_ratio: mean,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        pass: mean <= COMPRESSION_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);

    impl Backend for Fixed {
        fn complete(&self, _: &ExtractionRequest) -> Result<Completion> {
            Ok(Completion {
                text: self.0.to_string(),
                latency_s: 0.0,
            })
        }
    }

    fn msg(text_bytes: usize, source_bytes: usize) -> SemanticMessage {
        SemanticMessage {
            text: String::new(),
            word_count: 1,
            source_bytes,
            text_bytes,
            latency_s: 0.0,
        }
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate_words("  a  bb\tccc\n", 2), ("a  bb", 2));
        assert_eq!(truncate_words("one two", 5), ("one two", 2));
        assert_eq!(truncate_words("", 3), ("", 0));
        assert_eq!(truncate_words("solo", 1), ("solo", 1));
    }

    #[test]
    fn single_word_limit() {
        let mut req = ExtractionRequest::new(vec![1, 2, 3], "image/jpeg");
        req.l_max = 1;
        let m = extract(&req, &Fixed("Two cars parked.")).unwrap();
        assert_eq!(m.text, "Two");
        assert_eq!(m.word_count, 1);
        assert_eq!(m.text_bytes, 3);
    }

    #[test]
    fn request_validation() {
        let req = ExtractionRequest::new(Vec::new(), "image/jpeg");
        assert!(extract(&req, &Fixed("x")).is_err());
        let mut req = ExtractionRequest::new(vec![0], "image/jpeg");
        req.l_max = 0;
        assert!(req.validate().is_err());
    }

    #[test]
    fn report_thresholds() {
        let r = compression_report(&[msg(1, 2)]).unwrap();
        assert_eq!(r.mean_ratio, 0.5);
        assert!(!r.pass);
        let r = compression_report(&[msg(2, 100), msg(4, 100)]).unwrap();
        assert!((r.mean_ratio - 0.03).abs() < 1e-15);
        assert_eq!((r.min_ratio, r.max_ratio), (0.02, 0.04));
        assert!(r.pass);
        assert!(compression_report(&[]).is_err());
    }

    #[test]
    fn media_types() {
        use std::path::Path;
        assert_eq!(media_type_for(Path::new("a/001.JPG")), "image/jpeg");
        assert_eq!(media_type_for(Path::new("x.png")), "image/png");
    }
}
