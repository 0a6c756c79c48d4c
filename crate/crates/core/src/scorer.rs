//! Client for an external image-embedding sidecar.
//!
//! Wire format: every message is a big-endian `u32` byte length followed by
//! that many bytes of JSON. Requests are `{"image": "<base64 png>"}`,
//! replies `{"embedding": [f, ...]}` or `{"error": "..."}`.

use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCORER_ADDR_ENV: &str = "FORGE_SCORER_ADDR";
const MAX_MESSAGE: u32 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("scorer protocol error: {0}")]
    Protocol(String),
    #[error("scorer rejected the image: {0}")]
    Rejected(String),
}

pub trait Embedder {
    fn embed(&self, png: &[u8]) -> Result<Vec<f64>, ScorerError>;
}

#[derive(Serialize)]
struct Request<'a> {
    image: &'a str,
}

#[derive(Deserialize)]
struct Reply {
    embedding: Option<Vec<f64>>,
    error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct TcpEmbedder {
    pub addr: String,
    pub timeout: Duration,
}

impl TcpEmbedder {
    pub fn new(addr: impl Into<String>) -> Self {
        TcpEmbedder {
            addr: addr.into(),
            timeout: Duration::from_secs(10),
        }
    }

    /// Address from the environment override, else `fallback`.
    pub fn from_env(fallback: Option<&str>) -> Option<Self> {
        std::env::var(SCORER_ADDR_ENV)
            .ok()
            .filter(|s| !s.is_empty())
            .or_else(|| fallback.map(str::to_owned))
            .map(TcpEmbedder::new)
    }
}

pub fn write_frame(w: &mut impl Write, body: &[u8]) -> std::io::Result<()> {
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(body)?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len);
    if len > MAX_MESSAGE {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "frame too large"));
    }
    let mut body = vec![0; len as usize];
    r.read_exact(&mut body)?;
    Ok(body)
}

impl Embedder for TcpEmbedder {
    fn embed(&self, png: &[u8]) -> Result<Vec<f64>, ScorerError> {
        let unavailable = |e: std::io::Error| ScorerError::Unavailable(e.to_string());
        let addr = self
            .addr
            .to_socket_addrs()
            .map_err(unavailable)?
            .next()
            .ok_or_else(|| ScorerError::Unavailable(format!("cannot resolve {}", self.addr)))?;
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(unavailable)?;
        stream.set_read_timeout(Some(self.timeout)).map_err(unavailable)?;
        stream.set_write_timeout(Some(self.timeout)).map_err(unavailable)?;
        let b64 = base64::engine::general_purpose::STANDARD.encode(png);
        let body = serde_json::to_vec(&Request { image: &b64 }).map_err(|e| ScorerError::Protocol(e.to_string()))?;
        write_frame(&mut stream, &body).map_err(unavailable)?;
        let reply = read_frame(&mut stream).map_err(|e| ScorerError::Protocol(e.to_string()))?;
        let reply: Reply = serde_json::from_slice(&reply).map_err(|e| ScorerError::Protocol(e.to_string()))?;
        match (reply.embedding, reply.error) {
            (_, Some(e)) => Err(ScorerError::Rejected(e)),
            (Some(v), None) if !v.is_empty() => Ok(v),
            _ => Err(ScorerError::Protocol("reply carries no embedding".into())),
        }
    }
}

fn normalized(v: &[f64]) -> Result<Vec<f64>, ScorerError> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !n.is_finite() || n == 0.0 {
        return Err(ScorerError::Protocol("embedding has zero or non-finite norm".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Cosine of the two images' embeddings.
pub fn semantic_similarity(a_png: &[u8], b_png: &[u8], scorer: &dyn Embedder) -> Result<f64, ScorerError> {
    let a = normalized(&scorer.embed(a_png)?)?;
    let b = normalized(&scorer.embed(b_png)?)?;
    if a.len() != b.len() {
        return Err(ScorerError::Protocol(format!(
            "embedding lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0))
}
