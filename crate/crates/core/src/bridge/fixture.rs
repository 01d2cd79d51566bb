use std::path::{Path, PathBuf};

use super::{BridgeError, Detector, DetectorKind, DetectorRequest, DetectorResponse};

/// Serves canned responses from `root/<clip>/<kind>/<key>.json`.
///
/// The key is the `region` payload field for OCR requests, `<frame>_<face>`
/// for face embeddings that carry a `face` index, and the frame number
/// otherwise. A missing file is an `ok: false` miss; a file that is
/// not valid JSON is a protocol error naming the path.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    root: PathBuf,
}

impl FixtureBackend {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, BridgeError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(BridgeError::Unavailable(format!("fixture root {} is not a directory", root.display())));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, req: &DetectorRequest) -> Option<PathBuf> {
        let key = match req.kind {
            DetectorKind::Ocr => match req.payload.get("region").and_then(|r| r.as_str()) {
                Some(region) => region.to_string(),
                None => req.frame.to_string(),
            },
            DetectorKind::FaceEmbed => match req.payload.get("face").and_then(|f| f.as_u64()) {
                Some(face) => format!("{}_{face}", req.frame),
                None => req.frame.to_string(),
            },
            _ => req.frame.to_string(),
        };
        // clip ids and region names must stay single path components
        let safe = |s: &str| !s.is_empty() && s != "." && s != ".." && !s.contains(['/', '\\']);
        (safe(&req.clip) && safe(&key)).then(|| self.root.join(&req.clip).join(req.kind.as_str()).join(format!("{key}.json")))
    }
}

impl Detector for FixtureBackend {
    fn request(&mut self, req: &DetectorRequest) -> Result<DetectorResponse, BridgeError> {
        let Some(path) = self.path_for(req) else {
            return Ok(DetectorResponse::error(&req.id, "no fixture"));
        };
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(DetectorResponse::error(&req.id, "no fixture")),
            Err(e) => return Err(BridgeError::Io(format!("{}: {e}", path.display()))),
        };
        let value = serde_json::from_str(&text).map_err(|e| BridgeError::Protocol(format!("{}: {e}", path.display())))?;
        Ok(DetectorResponse::ok(&req.id, value))
    }
}
