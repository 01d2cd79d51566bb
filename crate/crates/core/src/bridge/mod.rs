//! Line-delimited JSON protocol to external model backends.
//!
//! A connection carries one request at a time: the client writes one JSON
//! object and a LF, then reads exactly one JSON line whose `id` must echo the
//! request. Parallelism comes from holding several connections, handed out by
//! [`DetectorPool`].

mod fixture;
mod process;
pub mod results;

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::formats::RasterFile;
use crate::imaging::Image;

pub use fixture::FixtureBackend;
pub use process::{serve, ProcessBackend, StdioConnection};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Base64 of the 8-bit PGM/PPM encoding, the `image` field of request payloads.
pub fn encode_image(image: &Image<f64>) -> String {
    let raster = RasterFile::from_image(image, 255).expect("normalized image quantizes");
    base64::engine::general_purpose::STANDARD.encode(raster.encode())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BridgeError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend exited: {0}")]
    BackendExit(String),
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("detector unavailable: {0}")]
    Unavailable(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    FaceDetect,
    FaceEmbed,
    ObjectDetect,
    SceneClassify,
    Ocr,
    SlateDetect,
    PoseHeight,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 7] = [
        DetectorKind::FaceDetect,
        DetectorKind::FaceEmbed,
        DetectorKind::ObjectDetect,
        DetectorKind::SceneClassify,
        DetectorKind::Ocr,
        DetectorKind::SlateDetect,
        DetectorKind::PoseHeight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::FaceDetect => "face_detect",
            DetectorKind::FaceEmbed => "face_embed",
            DetectorKind::ObjectDetect => "object_detect",
            DetectorKind::SceneClassify => "scene_classify",
            DetectorKind::Ocr => "ocr",
            DetectorKind::SlateDetect => "slate_detect",
            DetectorKind::PoseHeight => "pose_height",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = BridgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DetectorKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| BridgeError::Protocol(format!("unknown detector kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorRequest {
    pub id: String,
    pub kind: DetectorKind,
    pub clip: String,
    pub frame: u32,
    #[serde(default)]
    pub payload: Value,
}

/// Exactly one of `result` (when `ok`) and `error` is present on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResponse", into = "RawResponse")]
pub struct DetectorResponse {
    pub id: String,
    pub outcome: Result<Value, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResponse {
    id: String,
    ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl TryFrom<RawResponse> for DetectorResponse {
    type Error = String;

    fn try_from(raw: RawResponse) -> Result<Self, Self::Error> {
        let outcome = match (raw.ok, raw.result, raw.error) {
            (true, Some(r), None) => Ok(r),
            (false, None, Some(e)) => Err(e),
            _ => return Err("response must carry result when ok and error otherwise".into()),
        };
        Ok(Self { id: raw.id, outcome })
    }
}

impl From<DetectorResponse> for RawResponse {
    fn from(r: DetectorResponse) -> Self {
        match r.outcome {
            Ok(v) => RawResponse { id: r.id, ok: true, result: Some(v), error: None },
            Err(e) => RawResponse { id: r.id, ok: false, result: None, error: Some(e) },
        }
    }
}

impl DetectorResponse {
    pub fn ok(id: impl Into<String>, result: Value) -> Self {
        Self { id: id.into(), outcome: Ok(result) }
    }

    pub fn error(id: impl Into<String>, message: impl Into<String>) -> Self {
        Self { id: id.into(), outcome: Err(message.into()) }
    }

    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// One backend conversation. Implementations handle a single request at a time.
pub trait Detector: Send {
    fn request(&mut self, req: &DetectorRequest) -> Result<DetectorResponse, BridgeError>;
}

/// Assigns request ids and checks that replies echo them.
pub struct DetectorClient {
    backend: Box<dyn Detector>,
    next_id: u64,
}

impl DetectorClient {
    pub fn new(backend: Box<dyn Detector>) -> Self {
        Self { backend, next_id: 0 }
    }

    /// `Ok(Err(reason))` is a backend-side miss (`ok: false`).
    pub fn call(&mut self, kind: DetectorKind, clip: &str, frame: u32, payload: Value) -> Result<Result<Value, String>, BridgeError> {
        self.next_id += 1;
        let req = DetectorRequest { id: format!("r{}", self.next_id), kind, clip: clip.to_string(), frame, payload };
        let resp = self.backend.request(&req)?;
        if resp.id != req.id {
            return Err(BridgeError::Protocol(format!("response id {:?} does not match request id {:?}", resp.id, req.id)));
        }
        Ok(resp.outcome)
    }

    /// Calls and decodes the result into `R`; misses come back as `None`.
    pub fn call_typed<R: for<'de> Deserialize<'de>>(
        &mut self,
        kind: DetectorKind,
        clip: &str,
        frame: u32,
        payload: Value,
    ) -> Result<Option<R>, BridgeError> {
        match self.call(kind, clip, frame, payload)? {
            Ok(v) => serde_json::from_value(v)
                .map(Some)
                .map_err(|e| BridgeError::Protocol(format!("{kind} result does not fit its schema: {e}"))),
            Err(reason) => {
                log::debug!("{kind} miss for {clip} frame {frame}: {reason}");
                Ok(None)
            }
        }
    }
}

type Factory = Box<dyn Fn() -> Result<Box<dyn Detector>, BridgeError> + Send + Sync>;

/// Thread-safe set of connections; each checkout is exclusive until dropped.
pub struct DetectorPool {
    idle: Mutex<Vec<DetectorClient>>,
    factory: Factory,
}

impl DetectorPool {
    pub fn new(factory: impl Fn() -> Result<Box<dyn Detector>, BridgeError> + Send + Sync + 'static) -> Self {
        Self { idle: Mutex::new(Vec::new()), factory: Box::new(factory) }
    }

    pub fn checkout(&self) -> Result<PooledClient<'_>, BridgeError> {
        let idle = self.idle.lock().expect("pool lock").pop();
        let client = match idle {
            Some(c) => c,
            None => DetectorClient::new((self.factory)()?),
        };
        Ok(PooledClient { pool: self, client: Some(client) })
    }

    pub fn idle_count(&self) -> usize {
        self.idle.lock().expect("pool lock").len()
    }
}

pub struct PooledClient<'a> {
    pool: &'a DetectorPool,
    client: Option<DetectorClient>,
}

impl std::ops::Deref for PooledClient<'_> {
    type Target = DetectorClient;

    fn deref(&self) -> &DetectorClient {
        self.client.as_ref().expect("present until drop")
    }
}

impl std::ops::DerefMut for PooledClient<'_> {
    fn deref_mut(&mut self) -> &mut DetectorClient {
        self.client.as_mut().expect("present until drop")
    }
}

impl Drop for PooledClient<'_> {
    fn drop(&mut self) {
        if let Some(c) = self.client.take() {
            if let Ok(mut idle) = self.pool.idle.lock() {
                idle.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    struct Echo {
        wrong_id: bool,
    }

    impl Detector for Echo {
        fn request(&mut self, req: &DetectorRequest) -> Result<DetectorResponse, BridgeError> {
            let id = if self.wrong_id { "other".to_string() } else { req.id.clone() };
            Ok(DetectorResponse::ok(id, json!({"text": "7", "confidence": 0.5})))
        }
    }

    #[test]
    fn response_wire_shape() {
        let ok = DetectorResponse::ok("a", json!([1]));
        assert_eq!(ok.to_line(), r#"{"id":"a","ok":true,"result":[1]}"#);
        let err = DetectorResponse::error("b", "no fixture");
        assert_eq!(err.to_line(), r#"{"id":"b","ok":false,"error":"no fixture"}"#);
        assert!(serde_json::from_str::<DetectorResponse>(r#"{"id":"a","ok":true}"#).is_err());
        assert!(serde_json::from_str::<DetectorResponse>(r#"{"id":"a","ok":false,"result":1,"error":"x"}"#).is_err());
        assert_eq!(serde_json::from_str::<DetectorResponse>(&err.to_line()).unwrap(), err);
    }

    #[test]
    fn ids_are_checked() {
        let mut good = DetectorClient::new(Box::new(Echo { wrong_id: false }));
        let r: Option<results::OcrResult> = good.call_typed(DetectorKind::Ocr, "c1", 3, json!({})).unwrap();
        assert_eq!(r.unwrap().text, "7");
        let mut bad = DetectorClient::new(Box::new(Echo { wrong_id: true }));
        assert!(matches!(bad.call(DetectorKind::Ocr, "c1", 3, json!({})), Err(BridgeError::Protocol(_))));
    }

    #[test]
    fn pool_reuses_connections() {
        let pool = DetectorPool::new(|| Ok(Box::new(Echo { wrong_id: false }) as Box<dyn Detector>));
        {
            let _a = pool.checkout().unwrap();
            let _b = pool.checkout().unwrap();
        }
        assert_eq!(pool.idle_count(), 2);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    let mut c = pool.checkout().unwrap();
                    c.call(DetectorKind::Ocr, "c", 0, Value::Null).unwrap().unwrap();
                });
            }
        });
        assert!(pool.idle_count() >= 2);
    }

    #[test]
    fn kind_names() {
        for k in DetectorKind::ALL {
            assert_eq!(k.as_str().parse::<DetectorKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), json!(k.as_str()));
        }
    }
}
