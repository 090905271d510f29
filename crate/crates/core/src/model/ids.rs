use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuid::Uuid;

/// A fresh random UUIDv4 string.
pub fn new_uid() -> String {
    Uuid::new_v4().to_string()
}

/// Source of UUIDv4-formatted identifiers, either OS-random or seeded.
#[derive(Debug, Default)]
pub struct IdGenerator {
    rng: Option<Mutex<ChaCha8Rng>>,
}

impl IdGenerator {
    pub fn random() -> Self {
        Self { rng: None }
    }

    pub fn seeded(seed: u64) -> Self {
        Self {
            rng: Some(Mutex::new(ChaCha8Rng::seed_from_u64(seed))),
        }
    }

    pub fn next_uid(&self) -> String {
        match &self.rng {
            None => new_uid(),
            Some(rng) => {
                let mut bytes = [0u8; 16];
                rng.lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .fill_bytes(&mut bytes);
                uuid::Builder::from_random_bytes(bytes)
                    .into_uuid()
                    .to_string()
            }
        }
    }
}
