//! Screenshot decoding, downscaling and re-encoding.
//!
//! The local path downsizes to fit `max_dimension_px` and re-encodes to the target type.
//! An optional remote compressor (raw bytes in, compressed bytes out) can sit in front of
//! it; when the remote call fails the local path is used and a warning is logged.

use std::io::Cursor;
use std::time::Duration;

use async_trait::async_trait;
use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::{CompressionType, FilterType as PngFilter, PngEncoder};
use image::imageops::FilterType;
use image::{DynamicImage, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::model::{MediaType, ScreenshotImage};

#[derive(Debug, Error)]
pub enum ImagePrepError {
    #[error("unsupported or undecodable image: {0}")]
    UnsupportedImage(String),
    #[error("remote compressor unavailable: {0}")]
    RemoteCompressorUnavailable(String),
    #[error("invalid compression policy: {0}")]
    InvalidPolicy(String),
}

/// Endpoint of an external compression service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteService {
    pub endpoint: String,
    /// Environment variable holding the service credential, if it needs one.
    #[serde(default)]
    pub credential_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionPolicy {
    pub max_dimension_px: u32,
    pub target_media_type: MediaType,
    /// JPEG quality, 1 to 100.
    pub quality: u8,
    #[serde(default)]
    pub remote_service: Option<RemoteService>,
}

impl Default for CompressionPolicy {
    fn default() -> Self {
        Self {
            max_dimension_px: 1024,
            target_media_type: MediaType::Png,
            quality: 85,
            remote_service: None,
        }
    }
}

impl CompressionPolicy {
    pub fn validate(&self) -> Result<(), ImagePrepError> {
        if self.max_dimension_px < 64 {
            return Err(ImagePrepError::InvalidPolicy(format!(
                "max_dimension_px must be at least 64, got {}",
                self.max_dimension_px
            )));
        }
        if !(1..=100).contains(&self.quality) {
            return Err(ImagePrepError::InvalidPolicy(format!(
                "quality must be within 1..=100, got {}",
                self.quality
            )));
        }
        Ok(())
    }
}

/// Sniffs and decodes the header of an encoded image.
pub fn load_screenshot(bytes: Vec<u8>) -> Result<ScreenshotImage, ImagePrepError> {
    let media_type = MediaType::sniff(&bytes)
        .ok_or_else(|| ImagePrepError::UnsupportedImage("not a PNG or JPEG payload".into()))?;
    let (width_px, height_px) = ImageReader::with_format(Cursor::new(&bytes), image_format(media_type))
        .into_dimensions()
        .map_err(|e| ImagePrepError::UnsupportedImage(e.to_string()))?;
    if width_px == 0 || height_px == 0 {
        return Err(ImagePrepError::UnsupportedImage("zero-sized image".into()));
    }
    Ok(ScreenshotImage {
        bytes,
        media_type,
        width_px,
        height_px,
    })
}

/// Size that fits inside `max_dim` on the longer side, keeping the aspect ratio.
/// The shorter side is rounded to the nearest pixel and never drops below 1.
pub fn target_dimensions(width: u32, height: u32, max_dim: u32) -> (u32, u32) {
    let long = width.max(height);
    if long <= max_dim {
        return (width, height);
    }
    let scale = |side: u32| -> u32 {
        let num = side as u64 * max_dim as u64;
        let den = long as u64;
        (((2 * num + den) / (2 * den)) as u32).max(1)
    };
    if width >= height {
        (max_dim, scale(height))
    } else {
        (scale(width), max_dim)
    }
}

/// Local downscale and re-encode.
///
/// An image that already fits and has the target type is returned untouched. When only
/// the encoding differs and re-encoding would grow the payload, the input is returned
/// unchanged as well.
pub fn compress(
    image: &ScreenshotImage,
    policy: &CompressionPolicy,
) -> Result<ScreenshotImage, ImagePrepError> {
    policy.validate()?;
    let (width, height) =
        target_dimensions(image.width_px, image.height_px, policy.max_dimension_px);
    let needs_resize = (width, height) != (image.width_px, image.height_px);
    if !needs_resize && image.media_type == policy.target_media_type {
        return Ok(image.clone());
    }

    let decoded = decode(image)?;
    let resized = if needs_resize {
        decoded.resize_exact(width, height, FilterType::Triangle)
    } else {
        decoded
    };
    let bytes = encode(&resized, policy.target_media_type, policy.quality)?;
    if !needs_resize && bytes.len() > image.bytes.len() {
        return Ok(image.clone());
    }
    Ok(ScreenshotImage {
        bytes,
        media_type: policy.target_media_type,
        width_px: width,
        height_px: height,
    })
}

fn image_format(media_type: MediaType) -> ImageFormat {
    match media_type {
        MediaType::Png => ImageFormat::Png,
        MediaType::Jpeg => ImageFormat::Jpeg,
    }
}

fn decode(image: &ScreenshotImage) -> Result<DynamicImage, ImagePrepError> {
    ImageReader::with_format(Cursor::new(&image.bytes), image_format(image.media_type))
        .decode()
        .map_err(|e| ImagePrepError::UnsupportedImage(e.to_string()))
}

fn encode(img: &DynamicImage, media_type: MediaType, quality: u8) -> Result<Vec<u8>, ImagePrepError> {
    let mut out = Vec::new();
    let result = match media_type {
        MediaType::Png => img.write_with_encoder(PngEncoder::new_with_quality(
            &mut out,
            CompressionType::Best,
            PngFilter::Adaptive,
        )),
        MediaType::Jpeg => {
            // JPEG has no alpha channel.
            let rgb = DynamicImage::ImageRgb8(img.to_rgb8());
            rgb.write_with_encoder(JpegEncoder::new_with_quality(&mut out, quality))
        }
    };
    result.map_err(|e| ImagePrepError::UnsupportedImage(e.to_string()))?;
    Ok(out)
}

/// Swappable compression service.
#[async_trait]
pub trait ImageCompressor: Send + Sync {
    async fn compress(&self, image: &ScreenshotImage) -> Result<ScreenshotImage, ImagePrepError>;
}

/// Runs [`compress`] with a fixed policy.
#[derive(Debug, Clone, Default)]
pub struct LocalCompressor {
    pub policy: CompressionPolicy,
}

impl LocalCompressor {
    pub fn new(policy: CompressionPolicy) -> Self {
        Self { policy }
    }
}

#[async_trait]
impl ImageCompressor for LocalCompressor {
    async fn compress(&self, image: &ScreenshotImage) -> Result<ScreenshotImage, ImagePrepError> {
        compress(image, &self.policy)
    }
}

/// Posts the raw image to a remote service, falling back to the local path on failure.
#[derive(Debug, Clone)]
pub struct RemoteCompressor {
    policy: CompressionPolicy,
    service: RemoteService,
    client: reqwest::Client,
}

impl RemoteCompressor {
    pub fn new(policy: CompressionPolicy, service: RemoteService) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .unwrap_or_default();
        Self {
            policy,
            service,
            client,
        }
    }

    /// Only the remote call, without fallback.
    pub async fn compress_remote(
        &self,
        image: &ScreenshotImage,
    ) -> Result<ScreenshotImage, ImagePrepError> {
        let unavailable = |e: String| ImagePrepError::RemoteCompressorUnavailable(e);
        let mut request = self
            .client
            .post(&self.service.endpoint)
            .header(reqwest::header::CONTENT_TYPE, image.media_type.mime())
            .body(image.bytes.clone());
        if let Some(var) = &self.service.credential_env {
            let key = std::env::var(var).map_err(|_| unavailable(format!("{var} is not set")))?;
            request = request.bearer_auth(key);
        }
        let response = request.send().await.map_err(|e| unavailable(e.to_string()))?;
        if !response.status().is_success() {
            return Err(unavailable(format!("HTTP {}", response.status())));
        }
        let bytes = response
            .bytes()
            .await
            .map_err(|e| unavailable(e.to_string()))?
            .to_vec();
        let remote = load_screenshot(bytes).map_err(|e| unavailable(e.to_string()))?;
        // The service controls bytes, not dimensions; enforce the size cap locally.
        compress(&remote, &self.policy)
    }
}

#[async_trait]
impl ImageCompressor for RemoteCompressor {
    async fn compress(&self, image: &ScreenshotImage) -> Result<ScreenshotImage, ImagePrepError> {
        match self.compress_remote(image).await {
            Ok(out) => Ok(out),
            Err(err) => {
                warn!(error = %err, "remote compression failed, using local compression");
                compress(image, &self.policy)
            }
        }
    }
}

/// Compressor chosen by the policy: remote with fallback when a service is configured.
pub fn compressor_for(policy: CompressionPolicy) -> Box<dyn ImageCompressor> {
    match policy.remote_service.clone() {
        Some(service) => Box::new(RemoteCompressor::new(policy, service)),
        None => Box::new(LocalCompressor::new(policy)),
    }
}
