use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::provider::ProviderError;
use crate::trace::ExtractionTrace;

/// Hex SHA-256 of the trimmed text; the fixture file stem.
pub fn fixture_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.trim().as_bytes()))
}

pub fn fixture_path(dir: &Path, text: &str) -> PathBuf {
    dir.join(format!("{}.json", fixture_key(text)))
}

/// On-disk form of a recorded extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub text: String,
    pub trace: ExtractionTrace,
}

pub fn load_fixture(dir: &Path, text: &str) -> Result<Fixture, ProviderError> {
    let path = fixture_path(dir, text);
    let bytes = fs::read(&path).map_err(|_| ProviderError::MissingFixture(path.display().to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| ProviderError::BadFixture {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes a fixture atomically (temporary file, then rename).
pub fn save_fixture(dir: &Path, fixture: &Fixture) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = fixture_path(dir, &fixture.text);
    let tmp = path.with_extension("json.tmp");
    let mut text = serde_json::to_string_pretty(fixture).map_err(std::io::Error::other)?;
    text.push('\n');
    let mut file = fs::File::create(&tmp)?;
    file.write_all(text.as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}
