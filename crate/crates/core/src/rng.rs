//! Random draws used by the simulators.
//!
//! The engines never touch a generator directly; they ask a [`RandomSource`]
//! for one of three primitive draws. This keeps the draw sequence of a run
//! explicit, which lets a run be recorded into a [`Transcript`] and replayed
//! against a different implementation of the same model.
//!
//! Per-run seeds are derived from a master seed with [`derive_seed`]:
//!
//! ```text
//! mix(a, b)   = splitmix64(a ^ splitmix64(b))
//! seed(m,c,r) = mix(mix(m, c), r)
//! ```
//!
//! and each seed drives its own ChaCha8 stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub trait RandomSource {
    /// Uniform integer in `0..bound`; `bound` must be nonzero.
    fn below(&mut self, bound: usize) -> usize;

    /// Uniform real in `[0, 1)`.
    fn unit(&mut self) -> f64;

    /// Standard normal deviate.
    fn standard_normal(&mut self) -> f64;
}

impl<T: RandomSource + ?Sized> RandomSource for &mut T {
    fn below(&mut self, bound: usize) -> usize {
        (**self).below(bound)
    }

    fn unit(&mut self) -> f64 {
        (**self).unit()
    }

    fn standard_normal(&mut self) -> f64 {
        (**self).standard_normal()
    }
}

/// Seeded ChaCha8 stream; identical seeds give identical draw sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl RandomSource for RngStream {
    fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        self.inner.random_range(0..bound)
    }

    fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of run `run` in parameter cell `cell` of a sweep.
pub fn derive_seed(master: u64, cell: u64, run: u64) -> u64 {
    mix(mix(master, cell), run)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Draw {
    Below { bound: usize, value: usize },
    Unit(f64),
    Normal(f64),
}

pub type Transcript = Vec<Draw>;

/// Forwards to an inner source and logs every draw.
#[derive(Debug)]
pub struct Recorder<S> {
    inner: S,
    draws: Transcript,
}

impl<S: RandomSource> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Recorder {
            inner,
            draws: Vec::new(),
        }
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    pub fn into_transcript(self) -> Transcript {
        self.draws
    }
}

impl<S: RandomSource> RandomSource for Recorder<S> {
    fn below(&mut self, bound: usize) -> usize {
        let value = self.inner.below(bound);
        self.draws.push(Draw::Below { bound, value });
        value
    }

    fn unit(&mut self) -> f64 {
        let value = self.inner.unit();
        self.draws.push(Draw::Unit(value));
        value
    }

    fn standard_normal(&mut self) -> f64 {
        let value = self.inner.standard_normal();
        self.draws.push(Draw::Normal(value));
        value
    }
}

/// Plays back a transcript. Panics if the consumer requests a draw of a
/// different kind or bound than was recorded, or runs past the end.
#[derive(Debug)]
pub struct Replay {
    draws: Transcript,
    pos: usize,
}

impl Replay {
    pub fn new(draws: Transcript) -> Self {
        Replay { draws, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.draws.len() - self.pos
    }

    fn next(&mut self) -> Draw {
        let draw = *self
            .draws
            .get(self.pos)
            .unwrap_or_else(|| panic!("transcript exhausted after {} draws", self.pos));
        self.pos += 1;
        draw
    }
}

impl RandomSource for Replay {
    fn below(&mut self, bound: usize) -> usize {
        match self.next() {
            Draw::Below { bound: b, value } if b == bound => value,
            other => panic!(
                "draw {}: expected below({bound}), recorded {other:?}",
                self.pos - 1
            ),
        }
    }

    fn unit(&mut self) -> f64 {
        match self.next() {
            Draw::Unit(v) => v,
            other => panic!("draw {}: expected unit, recorded {other:?}", self.pos - 1),
        }
    }

    fn standard_normal(&mut self) -> f64 {
        match self.next() {
            Draw::Normal(v) => v,
            other => panic!("draw {}: expected normal, recorded {other:?}", self.pos - 1),
        }
    }
}
