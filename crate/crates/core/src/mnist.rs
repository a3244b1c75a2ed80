//! MNIST IDX parsing, dataset loading and playground seed selection.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Classifier, Dataset, Image, Split, IMAGE_SIDE, NUM_CLASSES};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

/// One of the four canonical MNIST files and the SHA-256 of its decompressed bytes.
#[derive(Debug, Clone, Copy)]
pub struct MnistFile {
    pub name: &'static str,
    pub sha256: &'static str,
}

pub const MNIST_FILES: [MnistFile; 4] = [
    MnistFile {
        name: "train-images-idx3-ubyte",
        sha256: "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    },
    MnistFile {
        name: "train-labels-idx1-ubyte",
        sha256: "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    },
    MnistFile {
        name: "t10k-images-idx3-ubyte",
        sha256: "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    },
    MnistFile {
        name: "t10k-labels-idx1-ubyte",
        sha256: "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    fn encoded_len(&self) -> usize {
        4 + 4 * self.dims.len()
    }
}

fn be_u32(bytes: &[u8], offset: usize, field: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(field, Some(offset), "header truncated"))
}

pub fn parse_header(bytes: &[u8]) -> Result<IdxHeader> {
    let magic = be_u32(bytes, 0, "magic")?;
    let rank = match magic {
        IMAGES_MAGIC => 3,
        LABELS_MAGIC => 1,
        other => {
            return Err(Error::format(
                "magic",
                Some(0),
                format!("expected {IMAGES_MAGIC} or {LABELS_MAGIC}, found {other}"),
            ))
        }
    };
    let dims = (0..rank)
        .map(|d| be_u32(bytes, 4 + 4 * d, &format!("dims[{d}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdxHeader { magic, dims })
}

fn payload<'a>(bytes: &'a [u8], header: &IdxHeader, item_len: usize) -> Result<&'a [u8]> {
    let start = header.encoded_len();
    let expected = header.dims[0] as usize * item_len;
    let available = bytes.len() - start;
    if available < expected {
        return Err(Error::format(
            "payload",
            Some(bytes.len()),
            format!("truncated: header promises {expected} bytes, {available} present"),
        ));
    }
    if available > expected {
        return Err(Error::format(
            "payload",
            Some(start + expected),
            format!("{} trailing bytes after the last item", available - expected),
        ));
    }
    Ok(&bytes[start..])
}

/// Parses an IDX image file; each pixel byte `v` becomes `v / 255`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    let header = parse_header(bytes)?;
    if header.magic != IMAGES_MAGIC {
        return Err(Error::format(
            "magic",
            Some(0),
            format!("expected image magic {IMAGES_MAGIC}, found {}", header.magic),
        ));
    }
    if header.dims[1] as usize != IMAGE_SIDE || header.dims[2] as usize != IMAGE_SIDE {
        return Err(Error::format(
            "dims",
            Some(8),
            format!(
                "images must be {IMAGE_SIDE}x{IMAGE_SIDE}, found {}x{}",
                header.dims[1], header.dims[2]
            ),
        ));
    }
    let data = payload(bytes, &header, IMAGE_SIDE * IMAGE_SIDE)?;
    data.chunks_exact(IMAGE_SIDE * IMAGE_SIDE).map(Image::from_u8).collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let header = parse_header(bytes)?;
    if header.magic != LABELS_MAGIC {
        return Err(Error::format(
            "magic",
            Some(0),
            format!("expected label magic {LABELS_MAGIC}, found {}", header.magic),
        ));
    }
    let data = payload(bytes, &header, 1)?;
    if let Some(pos) = data.iter().position(|&l| usize::from(l) >= NUM_CLASSES) {
        return Err(Error::format(
            "label",
            Some(header.encoded_len() + pos),
            format!("label {} is outside 0..{NUM_CLASSES}", data[pos]),
        ));
    }
    Ok(data.to_vec())
}

pub fn encode_idx_images(images: &[Image]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * IMAGE_SIDE * IMAGE_SIDE);
    for word in [IMAGES_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn gunzip(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    GzDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| Error::format("gzip", None, e.to_string()))?;
    Ok(out)
}

/// Reads a file, gunzipping it when the name ends in `.gz`.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "gz") {
        gunzip(&raw)
    } else {
        Ok(raw)
    }
}

/// Finds `name` or `name.gz` inside `dir`.
pub fn locate(dir: &Path, name: &str) -> Result<PathBuf> {
    let plain = dir.join(name);
    if plain.is_file() {
        return Ok(plain);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::Data(format!(
        "{} not found (also tried {})",
        plain.display(),
        gz.display()
    )))
}

pub fn load_split(dir: &Path, split: Split) -> Result<Dataset> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let images = parse_idx_images(&read_maybe_gz(&locate(dir, &format!("{prefix}-images-idx3-ubyte"))?)?)?;
    let labels = parse_idx_labels(&read_maybe_gz(&locate(dir, &format!("{prefix}-labels-idx1-ubyte"))?)?)?;
    Dataset::new(images, labels, split)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Checks decompressed bytes of a canonical file against its pinned digest.
pub fn verify_digest(name: &str, bytes: &[u8]) -> Result<()> {
    let file = MNIST_FILES
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::Argument(format!("{name} is not a canonical MNIST file")))?;
    let actual = sha256_hex(bytes);
    if actual != file.sha256 {
        return Err(Error::Data(format!(
            "{name}: sha256 {actual} does not match pinned {}",
            file.sha256
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedEntry {
    /// Index of the image in the test split.
    pub seed_id: usize,
    pub label: u8,
    pub image: Image,
}

/// Seed images offered by the playground, ordered by label then id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSet {
    pub entries: Vec<SeedEntry>,
}

impl SeedSet {
    pub fn get(&self, seed_id: usize) -> Option<&SeedEntry> {
        self.entries.iter().find(|e| e.seed_id == seed_id)
    }
}

/// Picks `per_class` test images for every class, in an order fixed by
/// `rng_seed`. With a model, only images it classifies correctly qualify.
pub fn select_seeds(
    test: &Dataset,
    per_class: usize,
    rng_seed: u64,
    model: Option<&dyn Classifier>,
) -> Result<SeedSet> {
    if per_class == 0 {
        return Err(Error::Argument("per_class must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..test.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    let mut counts = [0usize; NUM_CLASSES];
    let mut entries = Vec::with_capacity(per_class * NUM_CLASSES);
    for i in order {
        let label = test.labels[i];
        let slot = &mut counts[usize::from(label)];
        if *slot == per_class {
            continue;
        }
        if let Some(m) = model {
            if m.forward(&test.images[i])?.argmax() != usize::from(label) {
                continue;
            }
        }
        *slot += 1;
        entries.push(SeedEntry {
            seed_id: i,
            label,
            image: test.images[i].clone(),
        });
        if entries.len() == per_class * NUM_CLASSES {
            break;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n < per_class) {
        return Err(Error::Data(format!(
            "only {} usable seed(s) for class {c}, wanted {per_class}",
            counts[c]
        )));
    }
    entries.sort_by_key(|e| (e.label, e.seed_id));
    Ok(SeedSet { entries })
}
