//! Cached download of the LIBSVM benchmark datasets.
//!
//! Files live at `<cache_dir>/<name>.libsvm`. A cache hit never touches the
//! network. Download locations come from a flat key-value file:
//!
//! ```text
//! # comment
//! a8a.url = https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/a8a
//! a8a.sha256 = <hex digest>
//! a8a.length = 2890213
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::libsvm::{parse_libsvm, ParseError, ParseOptions};
use super::Dataset;

const LIBSVM_BINARY: &str = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary";

/// The three benchmark sets, with their published training sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NamedDataset {
    A8a,
    W8a,
    Ijcnn1,
}

impl NamedDataset {
    pub const ALL: [NamedDataset; 3] = [Self::A8a, Self::W8a, Self::Ijcnn1];

    pub fn name(self) -> &'static str {
        match self {
            Self::A8a => "a8a",
            Self::W8a => "w8a",
            Self::Ijcnn1 => "ijcnn1",
        }
    }

    /// `(n, d)` of the training split.
    pub fn expected_shape(self) -> (usize, usize) {
        match self {
            Self::A8a => (22_696, 123),
            Self::W8a => (49_749, 300),
            Self::Ijcnn1 => (49_990, 22),
        }
    }

    /// Regularization weight used with this dataset in the benchmark protocol.
    pub fn lambda(self) -> f64 {
        match self {
            Self::A8a | Self::W8a => 1e-2,
            Self::Ijcnn1 => 1e-4,
        }
    }

    fn default_url(self) -> String {
        match self {
            Self::A8a => format!("{LIBSVM_BINARY}/a8a"),
            Self::W8a => format!("{LIBSVM_BINARY}/w8a"),
            // only distributed compressed; point the config at a decompressed copy
            Self::Ijcnn1 => format!("{LIBSVM_BINARY}/ijcnn1.bz2"),
        }
    }
}

impl fmt::Display for NamedDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedDataset {
    type Err = FetchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| FetchError::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("unknown dataset {0:?} (expected one of a8a, w8a, ijcnn1)")]
    UnknownDataset(String),
    #[error("download of {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("checksum mismatch for {name}: expected {expected}, got {found}")]
    Checksum {
        name: String,
        expected: String,
        found: String,
    },
    #[error("length mismatch for {name}: expected {expected} bytes, got {found}")]
    Length { name: String, expected: u64, found: u64 },
    #[error("{url} is a compressed archive; decompress it to {cache_path} or configure an uncompressed url")]
    Compressed { url: String, cache_path: PathBuf },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("parse error in {path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
}

impl FetchError {
    /// Network failures may succeed on a later attempt; everything else will not.
    pub fn is_retriable(&self) -> bool {
        matches!(self, Self::Network { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSource {
    pub url: String,
    pub sha256: Option<String>,
    pub length: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchConfig {
    sources: BTreeMap<NamedDataset, DatasetSource>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        let sources = NamedDataset::ALL
            .into_iter()
            .map(|d| {
                (
                    d,
                    DatasetSource {
                        url: d.default_url(),
                        sha256: None,
                        length: None,
                    },
                )
            })
            .collect();
        Self { sources }
    }
}

impl FetchConfig {
    /// Parses `name.key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, FetchError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FetchError::Config { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let (name, field) = key
                .split_once('.')
                .ok_or_else(|| err(format!("expected <dataset>.<field>, got {key:?}")))?;
            let name: NamedDataset = name.parse().map_err(|e: FetchError| err(e.to_string()))?;
            let src = cfg.sources.get_mut(&name).expect("all datasets have defaults");
            match field {
                "url" => src.url = value.to_string(),
                "sha256" => src.sha256 = Some(value.to_ascii_lowercase()),
                "length" => {
                    src.length = Some(value.parse().map_err(|_| err(format!("bad length {value:?}")))?)
                }
                other => return Err(err(format!("unknown field {other:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FetchError> {
        let text = fs::read_to_string(path).map_err(|source| FetchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn source(&self, name: NamedDataset) -> &DatasetSource {
        &self.sources[&name]
    }
}

pub trait Downloader {
    fn download(&self, url: &str) -> Result<Vec<u8>, FetchError>;
}

/// HTTPS downloads via `ureq`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpDownloader;

impl Downloader for HttpDownloader {
    fn download(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        let net = |message: String| FetchError::Network {
            url: url.to_string(),
            message,
        };
        let mut resp = ureq::get(url).call().map_err(|e| net(e.to_string()))?;
        let mut bytes = Vec::new();
        resp.body_mut()
            .as_reader()
            .read_to_end(&mut bytes)
            .map_err(|e| net(e.to_string()))?;
        Ok(bytes)
    }
}

#[derive(Debug)]
pub struct FetchOutcome {
    pub dataset: Dataset<f64>,
    pub path: PathBuf,
    pub cache_hit: bool,
}

pub fn cache_path(cache_dir: &Path, name: NamedDataset) -> PathBuf {
    cache_dir.join(format!("{}.libsvm", name.name()))
}

fn verify(name: NamedDataset, src: &DatasetSource, bytes: &[u8], path: &Path) -> Result<(), FetchError> {
    if bytes.starts_with(b"BZh") || bytes.starts_with(&[0x1f, 0x8b]) {
        return Err(FetchError::Compressed {
            url: src.url.clone(),
            cache_path: path.to_path_buf(),
        });
    }
    if let Some(expected) = src.length {
        let found = bytes.len() as u64;
        if found != expected {
            return Err(FetchError::Length {
                name: name.name().to_string(),
                expected,
                found,
            });
        }
    }
    if let Some(expected) = &src.sha256 {
        let found = hex::encode(Sha256::digest(bytes));
        if &found != expected {
            return Err(FetchError::Checksum {
                name: name.name().to_string(),
                expected: expected.clone(),
                found,
            });
        }
    }
    Ok(())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), FetchError> {
    let io_err = |source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension(format!("libsvm.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Returns the named dataset, downloading it into `cache_dir` when absent.
pub fn fetch_dataset(
    name: NamedDataset,
    cache_dir: &Path,
    config: &FetchConfig,
    downloader: &dyn Downloader,
) -> Result<FetchOutcome, FetchError> {
    let path = cache_path(cache_dir, name);
    let cache_hit = path.is_file();
    if !cache_hit {
        let src = config.source(name);
        let bytes = downloader.download(&src.url)?;
        verify(name, src, &bytes, &path)?;
        write_atomically(&path, &bytes)?;
    }
    let file = fs::File::open(&path).map_err(|source| FetchError::Io {
        path: path.clone(),
        source,
    })?;
    let (_, dim) = name.expected_shape();
    let opts = ParseOptions::classification(name.name()).with_dim(dim);
    let dataset = parse_libsvm(io::BufReader::new(file), &opts).map_err(|source| FetchError::Parse {
        path: path.clone(),
        source,
    })?;
    Ok(FetchOutcome {
        dataset,
        path,
        cache_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    struct Canned {
        body: Vec<u8>,
        calls: Cell<usize>,
    }

    impl Downloader for Canned {
        fn download(&self, _url: &str) -> Result<Vec<u8>, FetchError> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.body.clone())
        }
    }

    struct Offline;

    impl Downloader for Offline {
        fn download(&self, url: &str) -> Result<Vec<u8>, FetchError> {
            Err(FetchError::Network {
                url: url.to_string(),
                message: "offline".into(),
            })
        }
    }

    #[test]
    fn downloads_once_then_hits_cache() {
        let dir = tempfile::tempdir().unwrap();
        let dl = Canned {
            body: b"+1 1:1 3:0.5\n-1 22:1\n".to_vec(),
            calls: Cell::new(0),
        };
        let cfg = FetchConfig::default();
        let first = fetch_dataset(NamedDataset::Ijcnn1, dir.path(), &cfg, &dl).unwrap();
        assert!(!first.cache_hit);
        assert_eq!((first.dataset.len(), first.dataset.dim()), (2, 22));
        let second = fetch_dataset(NamedDataset::Ijcnn1, dir.path(), &cfg, &Offline).unwrap();
        assert!(second.cache_hit);
        assert_eq!(first.dataset, second.dataset);
        assert_eq!(dl.calls.get(), 1);
        assert!(dir.path().join("ijcnn1.libsvm").is_file());
    }

    #[test]
    fn offline_with_empty_cache_is_retriable() {
        let dir = tempfile::tempdir().unwrap();
        let err = fetch_dataset(NamedDataset::A8a, dir.path(), &FetchConfig::default(), &Offline).unwrap_err();
        assert!(err.is_retriable());
        assert!(!cache_path(dir.path(), NamedDataset::A8a).exists());
    }

    #[test]
    fn checksum_and_length_are_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let body = b"+1 1:1\n".to_vec();
        let dl = Canned {
            body: body.clone(),
            calls: Cell::new(0),
        };
        let digest = hex::encode(Sha256::digest(&body));
        let bad = FetchConfig::parse("a8a.sha256 = 00ff\n").unwrap();
        let err = fetch_dataset(NamedDataset::A8a, dir.path(), &bad, &dl).unwrap_err();
        assert!(matches!(err, FetchError::Checksum { .. }) && !err.is_retriable());
        let bad_len = FetchConfig::parse("a8a.length = 3\n").unwrap();
        assert!(matches!(
            fetch_dataset(NamedDataset::A8a, dir.path(), &bad_len, &dl),
            Err(FetchError::Length { expected: 3, found: 7, .. })
        ));
        let good = FetchConfig::parse(&format!("a8a.sha256 = {}\na8a.length = 7\n", digest.to_uppercase())).unwrap();
        let out = fetch_dataset(NamedDataset::A8a, dir.path(), &good, &dl).unwrap();
        assert_eq!(out.dataset.dim(), 123);
    }

    #[test]
    fn compressed_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let dl = Canned {
            body: b"BZh91AY&SY...".to_vec(),
            calls: Cell::new(0),
        };
        let err = fetch_dataset(NamedDataset::Ijcnn1, dir.path(), &FetchConfig::default(), &dl).unwrap_err();
        assert!(matches!(err, FetchError::Compressed { .. }));
    }

    #[test]
    fn config_parsing() {
        let cfg = FetchConfig::parse("# mirror\nw8a.url = file:///tmp/w8a\n\n").unwrap();
        assert_eq!(cfg.source(NamedDataset::W8a).url, "file:///tmp/w8a");
        assert!(cfg.source(NamedDataset::A8a).url.ends_with("/binary/a8a"));
        assert!(matches!(FetchConfig::parse("nope\n"), Err(FetchError::Config { line: 1, .. })));
        assert!(matches!(FetchConfig::parse("x.url = y\n"), Err(FetchError::Config { line: 1, .. })));
        assert!(matches!(FetchConfig::parse("a8a.colour = y\n"), Err(FetchError::Config { .. })));
    }

    #[test]
    fn shapes_match_published_table() {
        assert_eq!(NamedDataset::A8a.expected_shape(), (22_696, 123));
        assert_eq!(NamedDataset::W8a.expected_shape(), (49_749, 300));
        assert_eq!(NamedDataset::Ijcnn1.expected_shape(), (49_990, 22));
        assert_eq!(NamedDataset::Ijcnn1.lambda(), 1e-4);
        assert_eq!("w8a".parse::<NamedDataset>().unwrap(), NamedDataset::W8a);
    }
}
