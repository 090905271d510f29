use std::collections::{BTreeMap, BTreeSet};

use super::AlgorithmError;
use crate::geometry::{AbsolutePosition, Vector3};

/// Value assumed for a feature one side of a comparison lacks.
pub const MISSING_FEATURE: f64 = -100.0;

/// A signal signature recorded at a known position.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub uid: String,
    pub position: AbsolutePosition,
    /// Signal source uid to measured value, e.g. RSSI in dBm.
    pub features: BTreeMap<String, f64>,
}

impl Fingerprint {
    pub fn new(
        uid: impl Into<String>,
        position: AbsolutePosition,
        features: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            uid: uid.into(),
            position,
            features,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FingerprintStore {
    entries: Vec<Fingerprint>,
}

impl FingerprintStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store(&mut self, fp: Fingerprint) -> Result<(), AlgorithmError> {
        if fp.features.is_empty() {
            return Err(AlgorithmError::InvalidArgument(format!(
                "fingerprint `{}` has no features",
                fp.uid
            )));
        }
        self.entries.retain(|e| e.uid != fp.uid);
        self.entries.push(fp);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Fingerprint] {
        &self.entries
    }

    /// Euclidean distance over the union of keys, imputing
    /// [`MISSING_FEATURE`] for absent ones.
    pub fn feature_distance(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
        let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let x = a.get(k).copied().unwrap_or(MISSING_FEATURE);
                let y = b.get(k).copied().unwrap_or(MISSING_FEATURE);
                (x - y).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Mean position of the `k` nearest fingerprints. Equal distances are
    /// ordered by fingerprint uid. The accuracy is the mean distance from the
    /// neighbours' positions to the result.
    pub fn locate(
        &self,
        features: &BTreeMap<String, f64>,
        k: usize,
    ) -> Result<AbsolutePosition, AlgorithmError> {
        if self.entries.is_empty() {
            return Err(AlgorithmError::EmptyStore);
        }
        if k == 0 || k > self.entries.len() {
            return Err(AlgorithmError::InsufficientObservations {
                needed: k.max(1),
                got: self.entries.len(),
            });
        }
        let mut ranked: Vec<(f64, &Fingerprint)> = self
            .entries
            .iter()
            .map(|e| (Self::feature_distance(features, &e.features), e))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.uid.cmp(&b.1.uid)));
        let nearest = &ranked[..k];

        let unit = nearest[0].1.position.unit.clone();
        let mut points = Vec::with_capacity(k);
        for (_, fp) in nearest {
            points.push(fp.position.vector_in(&unit)?);
        }
        let mean = points.iter().fold(Vector3::ZERO, |acc, p| acc + *p) / k as f64;
        let spread = points.iter().map(|p| p.distance(&mean)).sum::<f64>() / k as f64;

        let mut out = nearest[0].1.position.clone();
        out.vector = mean;
        out.accuracy = Some(spread);
        out.accuracy_unit = unit;
        Ok(out)
    }
}
