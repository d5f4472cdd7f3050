//! Unit-square sample patterns.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::maps::UnitSquareSample;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplePattern {
    Independent,
    /// Jittered `nx x ny` grid with `nx * ny = spp` and `nx` as close to
    /// `sqrt(spp)` as the divisors allow.
    Jittered,
    /// Base-2 and base-3 radical inverses with per-pixel digit scrambling.
    LowDiscrepancy,
}

impl SamplePattern {
    pub const ALL: [SamplePattern; 3] = [
        SamplePattern::Independent,
        SamplePattern::Jittered,
        SamplePattern::LowDiscrepancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplePattern::Independent => "independent",
            SamplePattern::Jittered => "jittered",
            SamplePattern::LowDiscrepancy => "ld",
        }
    }

    /// `n` points of the pattern, drawing randomness from `rng`.
    pub fn generate(self, n: usize, rng: &mut RngStream) -> Vec<UnitSquareSample> {
        match self {
            SamplePattern::Independent => (0..n).map(|_| rng.square()).collect(),
            SamplePattern::Jittered => jittered(n, rng),
            SamplePattern::LowDiscrepancy => scrambled_radical_inverse(n, rng),
        }
    }
}

impl fmt::Display for SamplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" | "random" => Ok(SamplePattern::Independent),
            "jittered" | "stratified" => Ok(SamplePattern::Jittered),
            "ld" | "low-discrepancy" => Ok(SamplePattern::LowDiscrepancy),
            other => Err(Error::Scene(format!("unknown sample pattern '{other}'"))),
        }
    }
}

/// Grid shape used by the jittered pattern for `n` samples.
pub fn jitter_grid(n: usize) -> (usize, usize) {
    let mut nx = (n as f64).sqrt() as usize;
    while nx > 1 && !n.is_multiple_of(nx) {
        nx -= 1;
    }
    let nx = nx.max(1);
    (nx, n / nx)
}

fn jittered(n: usize, rng: &mut RngStream) -> Vec<UnitSquareSample> {
    if n == 0 {
        return Vec::new();
    }
    let (nx, ny) = jitter_grid(n);
    let mut out = Vec::with_capacity(n);
    for j in 0..ny {
        for i in 0..nx {
            let e1 = (i as f64 + rng.uniform()) / nx as f64;
            let e2 = (j as f64 + rng.uniform()) / ny as f64;
            out.push(UnitSquareSample::new(e1, e2));
        }
    }
    out
}

fn scrambled_radical_inverse(n: usize, rng: &mut RngStream) -> Vec<UnitSquareSample> {
    let xor = rng.next_u32();
    let perm = {
        let mut p = [0u32, 1, 2];
        for k in (1..3).rev() {
            let j = (rng.next_u32() as usize) % (k + 1);
            p.swap(k, j);
        }
        p
    };
    (0..n)
        .map(|i| {
            let e1 = f64::from((i as u32).reverse_bits() ^ xor) / 4_294_967_296.0;
            UnitSquareSample::new(e1, permuted_radical_inverse_3(i as u64, &perm))
        })
        .collect()
}

/// Base-3 radical inverse with every digit (including the trailing zeros up to
/// the precision limit) sent through `perm`.
fn permuted_radical_inverse_3(mut i: u64, perm: &[u32; 3]) -> f64 {
    let mut value = 0.0;
    let mut scale = 1.0 / 3.0;
    for _ in 0..33 {
        value += f64::from(perm[(i % 3) as usize]) * scale;
        i /= 3;
        scale /= 3.0;
    }
    value.min(crate::maps::ONE_MINUS_EPSILON)
}
