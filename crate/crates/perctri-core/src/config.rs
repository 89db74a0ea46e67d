//! Site configurations on `B(n)` and their sampling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::geometry::Vertex;

/// An open/closed assignment on `B(n)`, one bit per site, row-major from
/// `(-n,-n)`; bit set = open.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    n: u32,
    words: Vec<u64>,
    pub master_seed: u64,
    pub trial_id: u64,
}

/// Number of sites in `B(n)`.
pub fn site_count(n: u32) -> usize {
    let s = 2 * n as usize + 1;
    s * s
}

/// The ChaCha8 key for a given master seed and box radius. Trials use
/// `stream = trial_id` under this key, so a run's configurations do not depend
/// on how trials are scheduled.
pub fn stream_key(master_seed: u64, n: u32) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    key
}

impl Configuration {
    fn blank(n: u32) -> Self {
        Configuration { n, words: vec![0; site_count(n).div_ceil(64)], master_seed: 0, trial_id: 0 }
    }

    pub fn all_open(n: u32) -> Self {
        Self::from_fn(n, |_| true)
    }

    pub fn all_closed(n: u32) -> Self {
        Self::blank(n)
    }

    pub fn from_fn(n: u32, mut open: impl FnMut(Vertex) -> bool) -> Self {
        let mut c = Self::blank(n);
        for i in 0..c.len() {
            if open(c.vertex(i)) {
                c.set_idx(i, true);
            }
        }
        c
    }

    /// Configuration whose site `i` (row-major) is open iff bit `i` of `bits` is set.
    pub fn from_index_bits(n: u32, bits: u64) -> Self {
        assert!(site_count(n) <= 64);
        let mut c = Self::blank(n);
        c.words[0] = bits & low_mask(site_count(n));
        c
    }

    /// In-place form of [`Configuration::from_index_bits`].
    pub fn set_index_bits(&mut self, bits: u64) {
        assert!(self.len() <= 64);
        self.words[0] = bits & low_mask(self.len());
    }

    /// Sample with `P(open) = 1/2` from the per-trial stream of `master_seed`.
    pub fn sample(n: u32, master_seed: u64, trial_id: u64) -> Self {
        let mut c = Self::blank(n);
        c.resample(master_seed, trial_id);
        c
    }

    /// Overwrite in place with the sample for `(master_seed, trial_id)`.
    pub fn resample(&mut self, master_seed: u64, trial_id: u64) {
        let mut rng = ChaCha8Rng::from_seed(stream_key(master_seed, self.n));
        rng.set_stream(trial_id);
        for w in self.words.iter_mut() {
            *w = rng.next_u64();
        }
        let len = self.len();
        if let Some(last) = self.words.last_mut() {
            let rem = len % 64;
            if rem != 0 {
                *last &= low_mask(rem);
            }
        }
        self.master_seed = master_seed;
        self.trial_id = trial_id;
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn side_len(&self) -> usize {
        2 * self.n as usize + 1
    }

    pub fn len(&self) -> usize {
        site_count(self.n)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.norm() <= self.n as i64
    }

    pub fn index(&self, v: Vertex) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        let n = self.n as i64;
        Some(((v.y as i64 + n) as usize) * self.side_len() + (v.x as i64 + n) as usize)
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        let s = self.side_len();
        let n = self.n as i32;
        Vertex::new((i % s) as i32 - n, (i / s) as i32 - n)
    }

    #[inline]
    pub fn is_open_idx(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// State of `v`; panics if `v ∉ B(n)`.
    pub fn is_open(&self, v: Vertex) -> bool {
        self.is_open_idx(self.index(v).expect("vertex outside configuration"))
    }

    pub fn set_idx(&mut self, i: usize, open: bool) {
        if open {
            self.words[i >> 6] |= 1 << (i & 63);
        } else {
            self.words[i >> 6] &= !(1 << (i & 63));
        }
    }

    pub fn set(&mut self, v: Vertex, open: bool) {
        let i = self.index(v).expect("vertex outside configuration");
        self.set_idx(i, open);
    }

    /// Copy with the state of `v` flipped.
    pub fn flipped(&self, v: Vertex) -> Self {
        let mut c = self.clone();
        let i = c.index(v).expect("vertex outside configuration");
        c.set_idx(i, !c.is_open_idx(i));
        c
    }

    /// Image under the half turn `(x, y) ↦ (-x, -y)`, a lattice automorphism that
    /// swaps top with bottom and left with right. Row-major order is simply reversed.
    pub fn rotated_half_turn(&self) -> Self {
        let mut c = Self::blank(self.n);
        c.master_seed = self.master_seed;
        c.trial_id = self.trial_id;
        self.rotate_into(&mut c);
        c
    }

    pub(crate) fn rotate_into(&self, out: &mut Configuration) {
        debug_assert_eq!(out.n, self.n);
        let len = self.len();
        for w in out.words.iter_mut() {
            *w = 0;
        }
        for i in 0..len {
            if self.is_open_idx(i) {
                out.set_idx(len - 1 - i, true);
            }
        }
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Packed payload bytes: site `i` is bit `i % 8` of byte `i / 8`.
    pub fn payload_bytes(&self) -> Vec<u8> {
        let nbytes = self.len().div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(nbytes);
        out
    }

    pub fn from_payload_bytes(n: u32, bytes: &[u8], master_seed: u64, trial_id: u64) -> Result<Self> {
        let mut c = Self::blank(n);
        let nbytes = c.len().div_ceil(8);
        if bytes.len() != nbytes {
            return invalid(format!("payload for n={n} needs {nbytes} bytes, got {}", bytes.len()));
        }
        for (k, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            c.words[k] = u64::from_le_bytes(buf);
        }
        let rem = c.len() % 64;
        if rem != 0 {
            let last = c.words.len() - 1;
            if c.words[last] & !low_mask(rem) != 0 {
                return invalid("payload has bits set beyond the last site");
            }
        }
        c.master_seed = master_seed;
        c.trial_id = trial_id;
        Ok(c)
    }

    /// Restriction to `B(m)` for `m ≤ n` (same provenance).
    pub fn restricted(&self, m: u32) -> Self {
        assert!(m <= self.n);
        let mut c = Self::from_fn(m, |v| self.is_open(v));
        c.master_seed = self.master_seed;
        c.trial_id = self.trial_id;
        c
    }
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// `sample_config(n, master_seed, trial_id)`.
pub fn sample_config(n: u32, master_seed: u64, trial_id: u64) -> Result<Configuration> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    Ok(Configuration::sample(n, master_seed, trial_id))
}

/// Index arithmetic for `B(n)` in row-major order.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Grid {
    pub n: i32,
    pub side: usize,
    pub len: usize,
}

impl Grid {
    pub fn new(n: u32) -> Self {
        let side = 2 * n as usize + 1;
        Grid { n: n as i32, side, len: side * side }
    }

    /// Zero-based column and row.
    #[inline]
    pub fn col_row(&self, i: usize) -> (usize, usize) {
        (i % self.side, i / self.side)
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> Vertex {
        let (c, r) = self.col_row(i);
        Vertex::new(c as i32 - self.n, r as i32 - self.n)
    }

    #[inline]
    pub fn index(&self, v: Vertex) -> Option<usize> {
        let c = v.x + self.n;
        let r = v.y + self.n;
        if c < 0 || r < 0 || c as usize >= self.side || r as usize >= self.side {
            return None;
        }
        Some(r as usize * self.side + c as usize)
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> usize {
        row * self.side + col
    }

    /// Calls `f` on each in-box neighbour of site `i`.
    #[inline]
    pub fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let (c, r) = self.col_row(i);
        let s = self.side;
        let last = s - 1;
        if c < last {
            f(i + 1);
        }
        if c > 0 {
            f(i - 1);
        }
        if r < last {
            f(i + s);
        }
        if r > 0 {
            f(i - s);
            if c < last {
                f(i + 1 - s);
            }
        }
        if r < last && c > 0 {
            f(i + s - 1);
        }
    }

    /// Neighbours as a fixed array plus count, in the same order as `NEIGHBOR_OFFSETS`
    /// filtered to the box.
    #[inline]
    pub fn neighbors(&self, i: usize) -> ([usize; 6], usize) {
        let mut out = [0usize; 6];
        let mut k = 0;
        self.for_each_neighbor(i, |j| {
            out[k] = j;
            k += 1;
        });
        (out, k)
    }
}

/// Generation-stamped marks; `clear` is O(1).
#[derive(Clone, Debug, Default)]
pub(crate) struct Marks {
    stamp: Vec<u32>,
    cur: u32,
}

impl Marks {
    pub fn with_len(len: usize) -> Self {
        Marks { stamp: vec![0; len], cur: 1 }
    }

    pub fn ensure_len(&mut self, len: usize) {
        if self.stamp.len() < len {
            self.stamp.resize(len, 0);
        }
        if self.cur == 0 {
            self.cur = 1;
        }
    }

    pub fn clear(&mut self) {
        self.cur = self.cur.wrapping_add(1);
        if self.cur == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.cur = 1;
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.stamp[i] == self.cur
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.stamp[i] = self.cur;
    }

    /// Sets the mark and reports whether it was newly set.
    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        if self.stamp[i] == self.cur {
            false
        } else {
            self.stamp[i] = self.cur;
            true
        }
    }
}
