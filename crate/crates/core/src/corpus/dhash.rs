use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub const DHASH_ALGORITHM: &str = "dhash-9x8";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("image must be at least 1x1, got {0}x{1}")]
    Empty(usize, usize),
    #[error("pixel buffer has {got} values for {width}x{height}")]
    Size { width: usize, height: usize, got: usize },
    #[error("invalid PGM: {0}")]
    Pgm(String),
    #[error("threshold {0} outside 0..=64")]
    Threshold(u32),
    #[error("cannot decode image: {0}")]
    Decode(String),
}

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> GrayImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty(width, height));
        }
        if pixels.len() != width * height {
            return Err(ImageError::Size {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Result<Self, ImageError> {
        let pixels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    /// Binary (`P5`) or ASCII (`P2`) PGM, 8 or 16 bit.
    pub fn parse_pgm(bytes: &[u8]) -> Result<Self, ImageError> {
        let err = |m: &str| ImageError::Pgm(m.to_string());
        let mut pos = 0usize;
        let mut header = Vec::new();
        while header.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(err("truncated header"));
            }
            header.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| err("non-ascii header"))?.to_string());
        }
        let magic = header[0].as_str();
        let num = |s: &str| s.parse::<usize>().map_err(|_| err("bad header number"));
        let (w, h, maxval) = (num(&header[1])?, num(&header[2])?, num(&header[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(err("maxval out of range"));
        }
        let count = w.checked_mul(h).ok_or_else(|| err("image too large"))?;
        let pixels: Vec<T> = match magic {
            "P5" => {
                let data = &bytes[(pos + 1).min(bytes.len())..];
                let bpp = if maxval < 256 { 1 } else { 2 };
                if data.len() < count * bpp {
                    return Err(err("truncated raster"));
                }
                (0..count)
                    .map(|i| {
                        let v = if bpp == 1 {
                            usize::from(data[i])
                        } else {
                            usize::from(data[2 * i]) << 8 | usize::from(data[2 * i + 1])
                        };
                        T::of_usize(v)
                    })
                    .collect()
            }
            "P2" => {
                let rest = std::str::from_utf8(&bytes[pos..]).map_err(|_| err("non-ascii raster"))?;
                let vals: Vec<T> = rest
                    .split_ascii_whitespace()
                    .take(count)
                    .map(|t| t.parse::<usize>().map(T::of_usize).map_err(|_| err("bad pixel")))
                    .collect::<Result<_, _>>()?;
                if vals.len() < count {
                    return Err(err("truncated raster"));
                }
                vals
            }
            _ => return Err(err("expected P2 or P5")),
        };
        Self::new(w, h, pixels)
    }
}

/// A 64-bit dHash. Bit `63 - k` holds comparison `k` (row-major).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageHash {
    #[serde(with = "hex_bits")]
    pub bits: u64,
    pub algorithm: String,
    pub source: String,
}

mod hex_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16).map_err(serde::de::Error::custom)
    }
}

impl ImageHash {
    pub fn distance(&self, other: &ImageHash) -> u32 {
        hamming(self.bits, other.bits)
    }
}

impl fmt::Display for ImageHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.bits)
    }
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

/// Resampling weights for one axis: a triangle filter whose support widens
/// with the downscale factor, so every source pixel contributes.
fn axis_weights<T: Scalar>(src: usize, dst: usize) -> Vec<(usize, Vec<T>)> {
    let scale = src as f64 / dst as f64;
    let support = scale.max(1.0);
    (0..dst)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale;
            let lo = ((center - support).floor().max(0.0)) as usize;
            let hi = ((center + support).ceil() as usize).min(src);
            let mut w: Vec<f64> = (lo..hi)
                .map(|i| {
                    let t = ((i as f64 + 0.5 - center) / support).abs();
                    (1.0 - t).max(0.0)
                })
                .collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                w.iter_mut().for_each(|x| *x /= total);
            } else {
                let nearest = (center.floor() as usize).min(src - 1);
                return (nearest, vec![T::one()]);
            }
            (lo, w.into_iter().map(T::of).collect())
        })
        .collect()
}

fn resize<T: Scalar>(img: &GrayImage<T>, w: usize, h: usize) -> Vec<T> {
    let min = img.pixels.iter().copied().fold(T::infinity(), T::min);
    let xs = axis_weights::<T>(img.width, w);
    let ys = axis_weights::<T>(img.height, h);
    let mut rows = vec![T::zero(); img.height * w];
    for y in 0..img.height {
        let src = &img.pixels[y * img.width..(y + 1) * img.width];
        for (ox, (start, wts)) in xs.iter().enumerate() {
            rows[y * w + ox] = wts.iter().enumerate().map(|(k, &c)| c * (src[start + k] - min)).sum();
        }
    }
    let mut out = vec![T::zero(); w * h];
    for (oy, (start, wts)) in ys.iter().enumerate() {
        for ox in 0..w {
            out[oy * w + ox] = wts.iter().enumerate().map(|(k, &c)| c * rows[(start + k) * w + ox]).sum();
        }
    }
    out
}

/// Difference hash: resample to 9×8, then set one bit per horizontally
/// adjacent pair where the left pixel is brighter.
pub fn dhash_bits<T: Scalar>(img: &GrayImage<T>) -> u64 {
    let small = resize(img, 9, 8);
    let mut bits = 0u64;
    for row in 0..8 {
        for col in 0..8 {
            let k = row * 8 + col;
            if small[row * 9 + col] > small[row * 9 + col + 1] {
                bits |= 1u64 << (63 - k);
            }
        }
    }
    bits
}

pub fn dhash<T: Scalar>(img: &GrayImage<T>, source: &str) -> ImageHash {
    ImageHash {
        bits: dhash_bits(img),
        algorithm: DHASH_ALGORITHM.to_string(),
        source: source.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearDuplicate {
    pub a: usize,
    pub b: usize,
    pub distance: u32,
}

/// All unordered pairs `(i < j)` within `threshold` bits.
pub fn hamming_near_duplicates(hashes: &[ImageHash], threshold: u32) -> Result<Vec<NearDuplicate>, ImageError> {
    if threshold > 64 {
        return Err(ImageError::Threshold(threshold));
    }
    let mut out = Vec::new();
    for i in 0..hashes.len() {
        for j in i + 1..hashes.len() {
            let distance = hashes[i].distance(&hashes[j]);
            if distance <= threshold {
                out.push(NearDuplicate { a: i, b: j, distance });
            }
        }
    }
    Ok(out)
}

/// Decodes PGM natively and PNG/JPEG with the `image-adapter` feature.
pub fn load_gray(path: &std::path::Path) -> Result<GrayImage<f64>, ImageError> {
    let bytes = std::fs::read(path).map_err(|e| ImageError::Decode(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        return GrayImage::parse_pgm(&bytes);
    }
    decode_other(&bytes)
}

#[cfg(feature = "image-adapter")]
fn decode_other(bytes: &[u8]) -> Result<GrayImage<f64>, ImageError> {
    let img = image::load_from_memory(bytes).map_err(|e| ImageError::Decode(e.to_string()))?;
    let luma = img.to_luma8();
    let (w, h) = luma.dimensions();
    GrayImage::new(w as usize, h as usize, luma.into_raw().into_iter().map(f64::from).collect())
}

#[cfg(not(feature = "image-adapter"))]
fn decode_other(_bytes: &[u8]) -> Result<GrayImage<f64>, ImageError> {
    Err(ImageError::Decode("only PGM is supported; build with the image-adapter feature for PNG/JPEG".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> GrayImage<f64> {
        GrayImage::from_fn(w, h, f).unwrap()
    }

    #[test]
    fn constant_image_has_no_bits() {
        assert_eq!(dhash_bits(&img(40, 30, |_, _| 77.0)), 0);
        assert_eq!(dhash_bits(&img(1, 1, |_, _| 5.0)), 0);
    }

    #[test]
    fn decreasing_gradient_sets_every_bit() {
        assert_eq!(dhash_bits(&img(90, 40, |x, _| 255.0 - x as f64)), u64::MAX);
        assert_eq!(dhash_bits(&img(9, 8, |x, _| 9.0 - x as f64)), u64::MAX);
        assert_eq!(dhash_bits(&img(90, 40, |x, _| x as f64)), 0);
    }

    #[test]
    fn self_distance_zero_and_f32_agrees() {
        let a = img(33, 21, |x, y| ((x * 7 + y * 13) % 17) as f64);
        assert_eq!(dhash(&a, "a").distance(&dhash(&a, "b")), 0);
        let f: GrayImage<f32> = GrayImage::from_fn(64, 64, |x, y| (x as f32 * 0.3).sin() * 100.0 + y as f32).unwrap();
        let d: GrayImage<f64> = GrayImage::from_fn(64, 64, |x, y| (x as f64 * 0.3).sin() * 100.0 + y as f64).unwrap();
        assert!(hamming(dhash_bits(&f), dhash_bits(&d)) <= 2);
    }

    #[test]
    fn near_duplicate_pairs() {
        let h = |bits: u64| ImageHash { bits, algorithm: DHASH_ALGORITHM.into(), source: String::new() };
        let hashes = [h(0), h(0b11_1111), h(u64::MAX)];
        let pairs = hamming_near_duplicates(&hashes, 10).unwrap();
        assert_eq!(pairs, [NearDuplicate { a: 0, b: 1, distance: 6 }]);
        assert_eq!(hamming_near_duplicates(&[h(5), h(5)], 0).unwrap()[0].distance, 0);
        assert!(hamming_near_duplicates(&hashes, 65).is_err());
    }

    #[test]
    fn pgm_parsing() {
        let p2 = b"P2\n# c\n3 2\n255\n0 1 2\n3 4 5\n";
        let a: GrayImage<f64> = GrayImage::parse_pgm(p2).unwrap();
        assert_eq!((a.width(), a.height(), a.get(2, 1)), (3, 2, 5.0));
        let mut p5 = b"P5 2 1 255\n".to_vec();
        p5.extend([10u8, 20]);
        let b: GrayImage<f64> = GrayImage::parse_pgm(&p5).unwrap();
        assert_eq!(b.pixels(), [10.0, 20.0]);
        assert!(GrayImage::<f64>::parse_pgm(b"P5 2 2 255\n\x01").is_err());
        assert!(GrayImage::<f64>::parse_pgm(b"P6 1 1 255\n\x01\x02\x03").is_err());
    }

    #[test]
    fn hash_serializes_as_hex() {
        let h = ImageHash { bits: 0xdead_beef, algorithm: DHASH_ALGORITHM.into(), source: "x.pgm".into() };
        let json = serde_json::to_string(&h).unwrap();
        assert!(json.contains("00000000deadbeef"));
        assert_eq!(serde_json::from_str::<ImageHash>(&json).unwrap(), h);
    }

    proptest! {
        #[test]
        fn brightness_offset_invariance(seed in proptest::collection::vec(0u8..=255, 12 * 10), c in 0u16..1000) {
            let base = img(12, 10, |x, y| f64::from(seed[y * 12 + x]));
            let shifted = img(12, 10, |x, y| f64::from(seed[y * 12 + x]) + f64::from(c));
            prop_assert_eq!(dhash_bits(&base), dhash_bits(&shifted));
        }
    }

    #[test]
    fn hamming_is_a_metric_on_bytes() {
        for a in 0u64..256 {
            for b in 0u64..256 {
                let ab = hamming(a, b);
                assert_eq!(ab, hamming(b, a));
                assert_eq!(ab == 0, a == b);
                for c in 0u64..256 {
                    assert!(hamming(a, c) <= ab + hamming(b, c));
                }
            }
        }
    }
}
