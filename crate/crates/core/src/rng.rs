//! Counter-based random substreams.
//!
//! Every trajectory (or shot) draws from its own ChaCha20 stream. The 256-bit
//! key is `SHA-256("nematic-substream-v1" || master_seed_le || scenario)` and
//! the 64-bit ChaCha stream id is the work-unit index, so two distinct indices
//! of the same scenario can never share a stream. Because each work unit owns
//! its generator, results do not depend on how units are scheduled on threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::C64;

/// Identifier recorded in run manifests so that streams can be reproduced by
/// an independent implementation.
pub const RNG_ALGORITHM: &str =
    "chacha20(rand_chacha 0.9); key=sha256(\"nematic-substream-v1\"||seed_le||scenario); stream=index";

const DOMAIN_TAG: &[u8] = b"nematic-substream-v1";

/// Key of one independent random substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubstreamKey {
    pub key: [u8; 32],
    pub stream: u64,
}

impl SubstreamKey {
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.key);
        rng.set_stream(self.stream);
        rng
    }
}

/// Deterministic mapping `(master seed, scenario, index) -> substream key`.
pub fn seed_derive(master_seed: u64, scenario: &str, index: u64) -> SubstreamKey {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update(master_seed.to_le_bytes());
    hasher.update(scenario.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    SubstreamKey { key, stream: index }
}

#[inline]
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex Gaussian whose real and imaginary parts are independent with the
/// given standard deviation each.
#[inline]
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, std_per_component: f64) -> C64 {
    let re = normal(rng);
    let im = normal(rng);
    C64::new(re * std_per_component, im * std_per_component)
}
