//! Unscrambled Sobol sequence with Joe–Kuo direction numbers
//! (`new-joe-kuo-6.21201`), generated in Gray-code order.

use crate::{Error, Result};

/// Highest supported dimension.
pub const MAX_DIMENSION: usize = 16;

const BITS: usize = 32;

// (degree s, coefficient a, initial m_1..m_s) for dimensions 2..=16.
// Dimension 1 is the van der Corput sequence (all m_k = 1).
const DIRECTIONS: [(u32, &[u32]); MAX_DIMENSION - 1] = [
    (0, &[1]),
    (1, &[1, 3]),
    (1, &[1, 3, 1]),
    (2, &[1, 1, 1]),
    (1, &[1, 1, 3, 3]),
    (4, &[1, 3, 5, 13]),
    (2, &[1, 1, 5, 5, 17]),
    (4, &[1, 1, 5, 5, 5]),
    (7, &[1, 1, 7, 11, 19]),
    (11, &[1, 1, 5, 1, 1]),
    (13, &[1, 1, 1, 3, 11]),
    (14, &[1, 3, 5, 5, 31]),
    (1, &[1, 3, 3, 9, 7, 49]),
    (13, &[1, 1, 1, 15, 21, 21]),
    (16, &[1, 3, 1, 13, 27, 49]),
];

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (a, m) = DIRECTIONS[dim - 1];
    let s = m.len();
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        v[k] = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                v[k] ^= v[k - j];
            }
        }
    }
    v
}

/// Iterator over Sobol points in `[0, 1)^m`, starting at index 1 (the
/// all-zeros point at index 0 is skipped).
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension {
                got: dim,
                max: MAX_DIMENSION,
            });
        }
        Ok(Self {
            directions: (0..dim).map(direction_numbers).collect(),
            state: vec![0; dim],
            index: 0,
        })
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.index >= (1u64 << BITS) - 1 {
            return None;
        }
        // point i+1 = point i XOR v[c], c = position of the lowest zero bit of i
        let c = self.index.trailing_ones() as usize;
        self.index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        Some(
            self.state
                .iter_mut()
                .zip(&self.directions)
                .map(|(x, v)| {
                    *x ^= v[c];
                    f64::from(*x) * scale
                })
                .collect(),
        )
    }
}
