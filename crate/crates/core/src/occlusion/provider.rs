//! Sources of deoccluded detections: a file-backed oracle for tests and
//! reproducible bundles, and (behind the `remote-provider` feature) an HTTP
//! client for a real inpaint-and-detect service.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Rect2;
use crate::occlusion::Detection;
use crate::raster::io::read_mask_png;
use crate::raster::BinaryMask;

/// What a provider gets to see: the source image (if the scene has one),
/// the union mask of the occluders to remove, and their detection ids.
pub struct ProviderRequest<'a> {
    pub image: Option<&'a Path>,
    pub occluder_mask: &'a BinaryMask,
    pub removed_ids: &'a BTreeSet<u32>,
}

pub trait MaskProvider: Sync {
    /// Detections of the scene with the requested occluders removed.
    fn deoccluded_detections(&self, request: &ProviderRequest<'_>) -> Result<Vec<Detection>>;
}

/// Serialized detection: the on-disk shape shared by scene documents and
/// oracle bundles. `mask` is a PNG path relative to the file that contains
/// the record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub id: u32,
    pub category: String,
    /// [x0, y0, x1, y1] in pixels.
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub mask: String,
    pub rigid: bool,
}

impl DetectionRecord {
    /// Loads the mask and validates the box. `base` is the directory the
    /// record's relative paths resolve against.
    pub fn resolve(&self, base: &Path) -> Result<Detection> {
        let bbox = Rect2::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3])?;
        let mask = read_mask_png(&base.join(&self.mask))?;
        Ok(Detection {
            id: self.id,
            category: self.category.clone(),
            bbox,
            mask,
            rigid: self.rigid,
        })
    }

    pub fn from_detection(d: &Detection, mask_path: &str) -> DetectionRecord {
        DetectionRecord {
            id: d.id,
            category: d.category.clone(),
            bbox: [d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1],
            mask: mask_path.to_string(),
            rigid: d.rigid,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectionFile {
    detections: Vec<DetectionRecord>,
}

/// Directory key for one removal subset: the first 16 hex characters of
/// the SHA-256 of the ascending ids joined with '-'.
pub fn subset_key(ids: &BTreeSet<u32>) -> String {
    let joined = ids
        .iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join("-");
    let digest = Sha256::digest(joined.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

/// Reads precomputed deoccluded detections from
/// `<root>/<subset_key>/detections.json`, masks resolved next to it.
#[derive(Debug, Clone)]
pub struct FileOracleProvider {
    root: PathBuf,
}

impl FileOracleProvider {
    pub fn new(root: impl Into<PathBuf>) -> FileOracleProvider {
        FileOracleProvider { root: root.into() }
    }

    /// Writes one subset's detections (used by bundle generators).
    pub fn write_entry(
        root: &Path,
        ids: &BTreeSet<u32>,
        records: &[DetectionRecord],
    ) -> Result<PathBuf> {
        let dir = root.join(subset_key(ids));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("detections.json");
        let file = DetectionFile {
            detections: records.to_vec(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Json {
                path: path.clone(),
                message: e.to_string(),
            })?;
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(dir)
    }
}

impl MaskProvider for FileOracleProvider {
    fn deoccluded_detections(&self, request: &ProviderRequest<'_>) -> Result<Vec<Detection>> {
        let dir = self.root.join(subset_key(request.removed_ids));
        let path = dir.join("detections.json");
        let file = File::open(&path).map_err(|e| {
            Error::Provider(format!(
                "no oracle entry for subset {:?} at {}: {e}",
                request.removed_ids,
                path.display()
            ))
        })?;
        let parsed: DetectionFile =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
                path: path.clone(),
                message: e.to_string(),
            })?;
        parsed
            .detections
            .iter()
            .map(|r| r.resolve(&dir))
            .collect()
    }
}

#[cfg(feature = "remote-provider")]
pub use remote::RemoteProvider;

#[cfg(feature = "remote-provider")]
mod remote {
    use super::*;
    use base64::engine::general_purpose::STANDARD as BASE64;
    use base64::Engine;
    use std::time::Duration;

    /// HTTP client for an inpaint-and-detect service speaking the JSON +
    /// base64-PNG protocol. Timeout and retry count come from
    /// `SCENEFIT_PROVIDER_TIMEOUT_MS` (default 30000) and
    /// `SCENEFIT_PROVIDER_RETRIES` (default 2).
    pub struct RemoteProvider {
        endpoint: String,
        retries: u32,
        client: reqwest::blocking::Client,
    }

    #[derive(Serialize)]
    struct RemoteRequest {
        #[serde(skip_serializing_if = "Option::is_none")]
        image: Option<String>,
        occluder_mask: String,
    }

    #[derive(Deserialize)]
    struct RemoteDetection {
        category: String,
        #[serde(rename = "box")]
        bbox: [f64; 4],
        mask: String,
        rigid: bool,
    }

    #[derive(Deserialize)]
    struct RemoteResponse {
        detections: Vec<RemoteDetection>,
    }

    fn env_u64(name: &str, default: u64) -> Result<u64> {
        match std::env::var(name) {
            Ok(v) => v.parse().map_err(|_| {
                Error::Configuration(format!("{name} must be an integer, got {v:?}"))
            }),
            Err(_) => Ok(default),
        }
    }

    impl RemoteProvider {
        pub fn new(endpoint: impl Into<String>) -> Result<RemoteProvider> {
            let timeout_ms = env_u64("SCENEFIT_PROVIDER_TIMEOUT_MS", 30_000)?;
            let retries = env_u64("SCENEFIT_PROVIDER_RETRIES", 2)? as u32;
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_millis(timeout_ms))
                .build()
                .map_err(|e| Error::Provider(format!("http client: {e}")))?;
            Ok(RemoteProvider {
                endpoint: endpoint.into(),
                retries,
                client,
            })
        }

        fn call_once(&self, body: &RemoteRequest) -> Result<Vec<Detection>> {
            let response = self
                .client
                .post(&self.endpoint)
                .json(body)
                .send()
                .map_err(|e| Error::Provider(format!("request to {}: {e}", self.endpoint)))?;
            if !response.status().is_success() {
                return Err(Error::Provider(format!(
                    "{} answered {}",
                    self.endpoint,
                    response.status()
                )));
            }
            let parsed: RemoteResponse = response
                .json()
                .map_err(|e| Error::Provider(format!("bad response body: {e}")))?;
            parsed
                .detections
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let bytes = BASE64
                        .decode(&d.mask)
                        .map_err(|e| Error::Provider(format!("mask base64: {e}")))?;
                    let mask = crate::raster::io::mask_from_png_bytes(&bytes)?;
                    Ok(Detection {
                        // The service reports no ids; assign by position.
                        id: (i + 1) as u32,
                        category: d.category.clone(),
                        bbox: Rect2::new(d.bbox[0], d.bbox[1], d.bbox[2], d.bbox[3])?,
                        mask,
                        rigid: d.rigid,
                    })
                })
                .collect()
        }
    }

    impl MaskProvider for RemoteProvider {
        fn deoccluded_detections(&self, request: &ProviderRequest<'_>) -> Result<Vec<Detection>> {
            let image = match request.image {
                Some(path) => Some(BASE64.encode(
                    std::fs::read(path).map_err(|e| Error::io(path, e))?,
                )),
                None => None,
            };
            let body = RemoteRequest {
                image,
                occluder_mask: BASE64.encode(crate::raster::io::mask_png_bytes(
                    request.occluder_mask,
                )?),
            };
            let mut last = None;
            for attempt in 0..=self.retries {
                match self.call_once(&body) {
                    Ok(dets) => return Ok(dets),
                    Err(e) => {
                        log::warn!("provider attempt {} failed: {e}", attempt + 1);
                        last = Some(e);
                    }
                }
            }
            Err(last.unwrap_or_else(|| Error::Provider("no attempts made".into())))
        }
    }
}
