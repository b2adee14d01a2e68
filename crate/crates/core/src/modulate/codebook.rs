//! Random shell codebooks and their flat binary file format.
//!
//! File layout, all little-endian: magic `WNCB`, version `u32`, `M` `u64`,
//! `n` `u64`, `P` `f64`, seed `u64`, then `M * n` `f64` codeword entries,
//! row-major by message.

use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};
use crate::rng::fill_standard_normals;

pub const MAGIC: &[u8; 4] = b"WNCB";
pub const FORMAT_VERSION: u32 = 1;
const NORM_TOLERANCE: f64 = 1e-9;

/// Mixed-radix bijection between messages `0..prod(levels)` and index tuples.
/// The first component is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageMap {
    levels: Vec<usize>,
    size: usize,
}

impl MessageMap {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() || levels.contains(&0) {
            return Err(invalid(format!("levels must be nonempty and positive, got {levels:?}")));
        }
        let size = levels
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m))
            .ok_or_else(|| invalid("message count overflows usize"))?;
        Ok(MessageMap { levels, size })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, indices: &[usize]) -> usize {
        assert_eq!(indices.len(), self.levels.len(), "index tuple dimension");
        indices.iter().zip(&self.levels).fold(0, |m, (&j, &levels)| {
            debug_assert!(j < levels);
            m * levels + j
        })
    }

    pub fn decode(&self, mut message: usize) -> Vec<usize> {
        assert!(message < self.size, "message {message} out of range");
        let mut out = vec![0; self.levels.len()];
        for (slot, &levels) in out.iter_mut().zip(&self.levels).rev() {
            *slot = message % levels;
            message /= levels;
        }
        out
    }
}

/// `M` codewords in `R^n`, each of squared norm `n P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    power: f64,
    seed: u64,
    map: MessageMap,
    words: Vec<f64>,
}

/// Draws `M` i.i.d. isotropic Gaussian vectors from the seeded stream and rescales
/// each onto the sphere of radius `sqrt(n P)`. Codeword `m` depends only on
/// `(m, n, P, seed)`.
pub fn build_codebook(size: usize, n: usize, power: f64, seed: u64) -> Result<Codebook> {
    Codebook::random(MessageMap::new(vec![size])?, n, power, seed)
}

impl Codebook {
    pub fn random(map: MessageMap, n: usize, power: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("block length must be positive"));
        }
        if !(power.is_finite() && power >= 0.0) {
            return Err(invalid(format!("power must be finite and >= 0, got {power}")));
        }
        let radius = (n as f64 * power).sqrt();
        let mut words = vec![0.0; map.size() * n];
        for (m, row) in words.chunks_mut(n).enumerate() {
            fill_standard_normals(seed, 0, m as u64, row);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm > 0.0, "degenerate Gaussian draw");
            let scale = radius / norm;
            row.iter_mut().for_each(|v| *v *= scale);
        }
        let codebook = Codebook { n, power, seed, map, words };
        if power > 0.0 {
            codebook.check_distinct()?;
        }
        Ok(codebook)
    }

    /// Fails if two messages share a codeword. At `P = 0` every codeword is the
    /// origin by construction, so callers skip the check there.
    fn check_distinct(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.size()).collect();
        let cmp = |a: &usize, b: &usize| {
            self.codeword(*a)
                .iter()
                .zip(self.codeword(*b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        };
        order.sort_unstable_by(cmp);
        if let Some(w) = order.windows(2).find(|w| cmp(&w[0], &w[1]).is_eq()) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(invalid(format!("messages {a} and {b} share a codeword")));
        }
        Ok(())
    }

    /// Wraps explicit codewords; every row must sit on the `n P` shell.
    pub fn from_codewords(rows: Vec<Vec<f64>>, power: f64) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(invalid("codebook needs at least one nonempty codeword"));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("codewords differ in length"));
        }
        let target = n as f64 * power;
        for (m, row) in rows.iter().enumerate() {
            let energy: f64 = row.iter().map(|v| v * v).sum();
            if (energy - target).abs() > NORM_TOLERANCE * target.max(f64::MIN_POSITIVE) {
                return Err(invalid(format!(
                    "codeword {m} has energy {energy}, expected {target}"
                )));
            }
        }
        let map = MessageMap::new(vec![rows.len()])?;
        Ok(Codebook { n, power, seed: 0, map, words: rows.concat() })
    }

    /// Replaces the message map; the codebook size must match.
    pub fn with_levels(mut self, levels: Vec<usize>) -> Result<Self> {
        let map = MessageMap::new(levels)?;
        if map.size() != self.size() {
            return Err(invalid(format!(
                "levels multiply to {}, codebook holds {}",
                map.size(),
                self.size()
            )));
        }
        self.map = map;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.map.size()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn message_map(&self) -> &MessageMap {
        &self.map
    }

    pub fn codeword(&self, message: usize) -> &[f64] {
        &self.words[message * self.n..(message + 1) * self.n]
    }

    pub fn codewords(&self) -> impl Iterator<Item = &[f64]> {
        self.words.chunks(self.n)
    }

    /// Minimum-distance (ML for AWGN) decision; ties go to the smallest message.
    pub fn nearest(&self, y: &[f64]) -> usize {
        assert_eq!(y.len(), self.n, "received vector length");
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (m, c) in self.codewords().enumerate() {
            let mut d = 0.0;
            for (a, b) in y.iter().zip(c) {
                let diff = a - b;
                d += diff * diff;
                if d > best_d {
                    break;
                }
            }
            if d < best_d {
                best_d = d;
                best = m;
            }
        }
        best
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.size() as u64).to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&self.power.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        for v in &self.words {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a codebook file. The message map comes back one-dimensional; use
    /// [`Codebook::with_levels`] to restore a product structure.
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut input, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let version = u32::from_le_bytes(read_array(&mut input)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let size = u64::from_le_bytes(read_array(&mut input)?);
        let n = u64::from_le_bytes(read_array(&mut input)?);
        let power = f64::from_le_bytes(read_array(&mut input)?);
        let seed = u64::from_le_bytes(read_array(&mut input)?);
        let (size, n) = (usize::try_from(size), usize::try_from(n));
        let (Ok(size), Ok(n)) = (size, n) else {
            return Err(Error::Format("dimensions exceed platform limits".into()));
        };
        if size == 0 || n == 0 {
            return Err(Error::Format("empty codebook".into()));
        }
        let count = size
            .checked_mul(n)
            .ok_or_else(|| Error::Format("codebook too large".into()))?;
        let mut words = Vec::with_capacity(count);
        for _ in 0..count {
            words.push(f64::from_le_bytes(read_array(&mut input)?));
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after codeword data".into()));
        }
        Ok(Codebook { n, power, seed, map: MessageMap::new(vec![size])?, words })
    }
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(input, &mut buf)?;
    Ok(buf)
}
