//! Reproducible random-number streams and the Beta sampler.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng, TryRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::convert::Infallible;

/// A counter-based random stream: the pair (seed, stream_id) fully
/// determines the draw sequence, and distinct stream_ids give independent
/// streams from the same seed. Parallel work should hand each task its own
/// stream_id rather than sharing one stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            rng,
            seed,
            stream_id,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream with the same seed and a different stream_id,
    /// starting at the beginning of that stream.
    pub fn substream(&self, stream_id: u64) -> Self {
        RngStream::new(self.seed, stream_id)
    }

    /// Standard normal draw.
    pub fn sample_std_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw on (0, 1) (never exactly 0 or 1).
    pub fn sample_unit_open(&mut self) -> f64 {
        loop {
            let u: f64 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }
}

// Infallible TryRng implementation; the blanket impl in rand_core then
// provides the plain Rng interface, so RngStream plugs into any sampler.
impl TryRng for RngStream {
    type Error = Infallible;
    fn try_next_u32(&mut self) -> std::result::Result<u32, Infallible> {
        Ok(self.rng.next_u32())
    }
    fn try_next_u64(&mut self) -> std::result::Result<u64, Infallible> {
        Ok(self.rng.next_u64())
    }
    fn try_fill_bytes(&mut self, dst: &mut [u8]) -> std::result::Result<(), Infallible> {
        self.rng.fill_bytes(dst);
        Ok(())
    }
}

/// Beta(a, b) draw in the open interval (0, 1).
///
/// Built from two Gamma draws X/(X+Y) (Marsaglia–Tsang rejection with the
/// small-shape boost, as provided by the Gamma sampler), which stays valid
/// for shapes below 1. The rare draws that round to exactly 0 or 1 (possible
/// when a shape is tiny and a Gamma variate underflows) are redrawn, which
/// perturbs moments only below double precision.
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sample_beta requires positive finite shapes, got a={a}, b={b}"
        )));
    }
    let ga = Gamma::new(a, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("gamma shape a={a}: {e}")))?;
    let gb = Gamma::new(b, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("gamma shape b={b}: {e}")))?;
    for _ in 0..1000 {
        let x: f64 = ga.sample(&mut rng.rng);
        let y: f64 = gb.sample(&mut rng.rng);
        let s = x + y;
        if s > 0.0 {
            let r = x / s;
            if r > 0.0 && r < 1.0 {
                return Ok(r);
            }
        }
    }
    Err(Error::InvalidParameter(format!(
        "sample_beta failed to produce an interior draw for a={a}, b={b}"
    )))
}
