//! Service configuration, read from a TOML file.
//!
//! ```toml
//! store = "site.store.json"
//! base_url = "https://example.org/cms"
//! page_size = 50
//! admins = [1]
//!
//! [tokens]
//! "secret-token-for-mike" = 1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::ItemId;

pub const DEFAULT_BASE_URL: &str = "http://localhost:8080";
pub const DEFAULT_PAGE_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Store file; changes are saved there after every mutation.
    pub store: Option<PathBuf>,
    /// Prefix of every link the service emits, without a trailing slash.
    pub base_url: String,
    pub page_size: usize,
    /// Agents that bypass grant checks.
    pub admins: Vec<ItemId>,
    /// Bearer token to agent id.
    pub tokens: BTreeMap<String, ItemId>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            store: None,
            base_url: DEFAULT_BASE_URL.to_string(),
            page_size: DEFAULT_PAGE_SIZE,
            admins: Vec::new(),
            tokens: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config: ServiceConfig = toml::from_str(text).map_err(|e| Error::BadRequest(e.to_string()))?;
        config.normalize()?;
        Ok(config)
    }

    /// Reads a config file; a relative `store` path is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = ServiceConfig::parse(&std::fs::read_to_string(path)?)?;
        if let (Some(store), Some(dir)) = (&config.store, path.parent()) {
            if store.is_relative() {
                config.store = Some(dir.join(store));
            }
        }
        Ok(config)
    }

    pub fn with_base_url(mut self, base_url: impl Into<String>) -> Self {
        self.base_url = base_url.into();
        self.base_url.truncate(self.base_url.trim_end_matches('/').len());
        self
    }

    fn normalize(&mut self) -> Result<()> {
        self.base_url.truncate(self.base_url.trim_end_matches('/').len());
        if self.page_size == 0 {
            return Err(Error::BadRequest("page_size must be positive".into()));
        }
        Ok(())
    }
}
