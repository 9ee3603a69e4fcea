use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{Backend, Completion, ExtractionRequest};
use crate::error::{Error, Result};

/// One `(image, caption)` pair listed in `manifest.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub id: String,
    pub image_path: PathBuf,
    pub text_path: PathBuf,
    pub image_bytes: usize,
    pub text_bytes: usize,
}

#[derive(Debug, serde::Deserialize)]
struct ManifestRow {
    id: String,
    image_bytes: usize,
    text_bytes: usize,
}

fn file_len(path: &Path) -> Result<usize> {
    Ok(std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len() as usize)
}

/// Reads `manifest.csv` (`id,image_bytes,text_bytes`) and checks that the
/// recorded sizes match `NNN.jpg` and `NNN.txt` on disk.
pub fn load_fixtures(dir: &Path) -> Result<Vec<Fixture>> {
    let manifest = dir.join("manifest.csv");
    let file = std::fs::File::open(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: ManifestRow = row?;
        let image_path = dir.join(format!("{}.jpg", row.id));
        let text_path = dir.join(format!("{}.txt", row.id));
        let (img, txt) = (file_len(&image_path)?, file_len(&text_path)?);
        if img != row.image_bytes || txt != row.text_bytes {
            return Err(Error::invalid(
                "manifest.csv",
                format!(
                    "fixture {}: manifest says {}/{} bytes, files have {img}/{txt}",
                    row.id, row.image_bytes, row.text_bytes
                ),
            ));
        }
        out.push(Fixture {
            id: row.id,
            image_path,
            text_path,
            image_bytes: img,
            text_bytes: txt,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("manifest.csv", "no fixtures listed"));
    }
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Returns the stored caption of a known image, keyed by its SHA-256.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    captions: HashMap<String, String>,
}

impl MockBackend {
    pub fn insert(&mut self, image: &[u8], caption: String) {
        self.captions.insert(sha256_hex(image), caption);
    }

    pub fn from_fixtures(fixtures: &[Fixture]) -> Result<Self> {
        let mut m = MockBackend::default();
        for f in fixtures {
            let image = std::fs::read(&f.image_path).map_err(|e| Error::io(&f.image_path, e))?;
            let text = std::fs::read_to_string(&f.text_path).map_err(|e| Error::io(&f.text_path, e))?;
            m.insert(&image, text);
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &ExtractionRequest) -> Result<Completion> {
        let key = sha256_hex(&request.image);
        match self.captions.get(&key) {
            Some(text) => Ok(Completion {
                text: text.clone(),
                latency_s: 0.0,
            }),
            None => Err(Error::UnknownFixture(key)),
        }
    }
}
