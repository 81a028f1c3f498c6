use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::coco::CocoImage;
use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

/// Where source images come from.
pub trait ImageSource: Sync {
    fn load(&self, image: &CocoImage) -> Result<ImageBuffer>;
}

/// Where output images go.
pub trait ImageSink: Sync {
    fn write(&self, file_name: &str, image: &ImageBuffer) -> Result<()>;
}

/// Resolves `file_name` against a directory.
#[derive(Debug, Clone)]
pub struct DirSource {
    pub root: PathBuf,
}

impl DirSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirSource { root: root.into() }
    }
}

impl ImageSource for DirSource {
    fn load(&self, image: &CocoImage) -> Result<ImageBuffer> {
        let img = ImageBuffer::load_rgb(&self.root.join(&image.file_name))?;
        if (img.width(), img.height()) != (image.width, image.height) {
            return Err(Error::Malformed(format!(
                "{} is {}x{} but the dataset says {}x{}",
                image.file_name,
                img.width(),
                img.height(),
                image.width,
                image.height
            )));
        }
        Ok(img)
    }
}

/// Writes PNG files into a directory, creating it on first use.
#[derive(Debug, Clone)]
pub struct DirSink {
    pub root: PathBuf,
}

impl DirSink {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(DirSink { root })
    }
}

impl ImageSink for DirSink {
    fn write(&self, file_name: &str, image: &ImageBuffer) -> Result<()> {
        image.save_png(&self.root.join(file_name))
    }
}

/// In-memory images keyed by image id.
#[derive(Debug, Default, Clone)]
pub struct MemorySource(pub HashMap<u64, ImageBuffer>);

impl ImageSource for MemorySource {
    fn load(&self, image: &CocoImage) -> Result<ImageBuffer> {
        self.0.get(&image.id).cloned().ok_or_else(|| Error::Io {
            path: image.file_name.clone().into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such image"),
        })
    }
}

/// Collects written images in memory.
#[derive(Debug, Default)]
pub struct MemorySink(pub Mutex<BTreeMap<String, ImageBuffer>>);

impl MemorySink {
    pub fn into_inner(self) -> BTreeMap<String, ImageBuffer> {
        self.0.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

impl ImageSink for MemorySink {
    fn write(&self, file_name: &str, image: &ImageBuffer) -> Result<()> {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(file_name.to_string(), image.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl ImageSink for NullSink {
    fn write(&self, _: &str, _: &ImageBuffer) -> Result<()> {
        Ok(())
    }
}

/// `dir/a.jpg` -> `dir_a`: a flat, extension-free stem for output names.
pub(crate) fn flat_stem(file_name: &str) -> String {
    let path = Path::new(file_name);
    let stem = path.with_extension("");
    stem.to_string_lossy()
        .chars()
        .map(|c| if c == '/' || c == '\\' { '_' } else { c })
        .collect()
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}
