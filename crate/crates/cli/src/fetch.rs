//! Checksum-pinned dataset download.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use tactsim_core::config::{load_json, UnknownKeys};

use crate::{Failure, Stage};

#[derive(Debug, Deserialize)]
struct Manifest {
    files: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
struct Entry {
    /// `http(s)://` or `file://` URL.
    url: String,
    sha256: String,
    /// File name under the destination; defaults to the last URL segment.
    #[serde(default)]
    name: Option<String>,
    /// Unpack a `.tar.gz` archive after verification (default: by extension).
    #[serde(default)]
    unpack: Option<bool>,
}

pub fn run(manifest: &Path, dest: &Path, unknown: UnknownKeys) -> Result<(), Failure> {
    let (m, ignored) = load_json::<Manifest>(manifest, unknown).stage("load manifest")?;
    for key in ignored {
        eprintln!("warning: ignoring unknown key `{key}`");
    }
    fs::create_dir_all(dest).map_err(|e| Failure::usage("create destination", format!("{}: {e}", dest.display())))?;
    for entry in &m.files {
        fetch_one(entry, dest)?;
    }
    println!("fetched {} file(s) into {}", m.files.len(), dest.display());
    Ok(())
}

fn fetch_one(entry: &Entry, dest: &Path) -> Result<(), Failure> {
    let name = match &entry.name {
        Some(n) => n.clone(),
        None => entry
            .url
            .rsplit('/')
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Failure::usage("load manifest", format!("cannot derive a file name from `{}`", entry.url)))?
            .to_string(),
    };
    if name.contains('/') || name.contains('\\') || name == ".." {
        return Err(Failure::usage("load manifest", format!("file name `{name}` must not contain path separators")));
    }
    let bytes = download(&entry.url)?;
    let digest = hex(&Sha256::digest(&bytes));
    if !digest.eq_ignore_ascii_case(entry.sha256.trim()) {
        return Err(Failure::usage(
            "verify checksum",
            format!("{name}: expected sha256 {}, got {digest}; refusing to unpack", entry.sha256),
        ));
    }
    let target = dest.join(&name);
    fs::write(&target, &bytes).map_err(|e| Failure::usage("write download", format!("{}: {e}", target.display())))?;
    let is_tarball = name.ends_with(".tar.gz") || name.ends_with(".tgz");
    if entry.unpack.unwrap_or(is_tarball) {
        let gz = flate2::read::GzDecoder::new(Cursor::new(bytes));
        tar::Archive::new(gz)
            .unpack(dest)
            .map_err(|e| Failure::usage("unpack archive", format!("{name}: {e}")))?;
    }
    println!("{name}: ok");
    Ok(())
}

fn download(url: &str) -> Result<Vec<u8>, Failure> {
    if let Some(path) = url.strip_prefix("file://") {
        return fs::read(path).map_err(|e| Failure::usage("download", format!("{path}: {e}")));
    }
    let mut response = ureq::get(url)
        .call()
        .map_err(|e| Failure::usage("download", format!("{url}: {e}")))?;
    response
        .body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_vec()
        .map_err(|e| Failure::usage("download", format!("{url}: {e}")))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
