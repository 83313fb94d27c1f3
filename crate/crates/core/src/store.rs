//! Content-addressed blob store. Blobs are named `<sha256-hex>.<ext>` in a
//! single flat directory, so identical screenshots shared by split
//! trajectories are stored once.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::types::{ImageRef, MediaRef};

static TMP_SEQ: AtomicU64 = AtomicU64::new(0);

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct BlobStore {
    root: PathBuf,
}

impl BlobStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn put(&self, bytes: &[u8], ext: &str) -> io::Result<String> {
        let name = format!("{}.{}", sha256_hex(bytes), ext);
        let path = self.root.join(&name);
        if !path.exists() {
            // Write to a temp name first so concurrent writers never expose a partial blob.
            let seq = TMP_SEQ.fetch_add(1, Ordering::Relaxed);
            let tmp = self.root.join(format!(".{name}.{}.{seq}", std::process::id()));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(name)
    }

    pub fn put_image(&self, png_bytes: &[u8]) -> io::Result<ImageRef> {
        self.put(png_bytes, "png").map(ImageRef)
    }

    pub fn put_media(&self, bytes: &[u8], ext: &str) -> io::Result<MediaRef> {
        self.put(bytes, ext).map(MediaRef)
    }

    pub fn path_of(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.path_of(name).is_file()
    }

    pub fn read(&self, name: &str) -> io::Result<Vec<u8>> {
        fs::read(self.path_of(name))
    }

    pub fn read_image(&self, r: &ImageRef) -> io::Result<Vec<u8>> {
        self.read(r.as_str())
    }

    /// Copy a blob into another store, keeping its name.
    pub fn copy_to(&self, name: &str, other: &BlobStore) -> io::Result<()> {
        let dst = other.path_of(name);
        if !dst.exists() {
            fs::copy(self.path_of(name), dst)?;
        }
        Ok(())
    }
}
