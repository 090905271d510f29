use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::AlgorithmError;
use crate::services::NodeDataService;

/// The last `window` values of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmaWindow {
    window: usize,
    values: VecDeque<f64>,
}

impl SmaWindow {
    pub fn new(window: usize) -> Result<Self, AlgorithmError> {
        if window == 0 {
            return Err(AlgorithmError::InvalidArgument(
                "window must be at least 1".into(),
            ));
        }
        Ok(Self {
            window,
            values: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Adds a value and returns the mean of the retained values.
    pub fn push(&mut self, value: f64) -> f64 {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(value);
        self.mean()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return f64::NAN;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Simple moving average whose window is kept in the node-data store under
/// `(node_uid, object_uid)`.
pub fn sma_filter(
    store: &NodeDataService,
    node_uid: &str,
    object_uid: &str,
    value: f64,
    window: usize,
) -> Result<f64, AlgorithmError> {
    let mut state = match store.get::<SmaWindow>(node_uid, object_uid)? {
        Some(s) if s.window == window => s,
        _ => SmaWindow::new(window)?,
    };
    let mean = state.push(value);
    store.put(node_uid, object_uid, &state)?;
    Ok(mean)
}
