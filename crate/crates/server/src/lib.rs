//! HTTP/JSON front end for the folding environment.
//!
//! Sessions live in memory behind one mutex each; folding, solving and
//! rendering run on the blocking pool.

mod config;
mod error;
mod routes;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use forge_core::env::Session;
use forge_core::library::{load_library, Design};
use forge_core::scorer::TcpEmbedder;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use config::{ConfigError, ServerConfig};
pub use error::ApiError;
pub use routes::router;

pub struct AppState {
    config: ServerConfig,
    library: BTreeMap<String, Design>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Result<Self, ConfigError> {
        let library = match &config.targets_dir {
            Some(dir) => load_library(dir)?.into_iter().map(|d| (d.id.clone(), d)).collect(),
            None => BTreeMap::new(),
        };
        Ok(AppState {
            config,
            library,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn embedder(&self) -> Option<TcpEmbedder> {
        TcpEmbedder::from_env(self.config.scorer_addr.as_deref())
    }
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Binds `addr` and serves in a background task. Port 0 picks a free port.
pub async fn spawn(addr: &str, state: Arc<AppState>) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tracing::info!(%local, "forge service listening");
    Ok((local, tokio::spawn(serve(listener, state))))
}
