use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// A (possibly multi-channel) complex signal on the vertices of a graph.
///
/// Stored as an `N × C` matrix: one row per vertex, one column per channel.
/// Grayscale image patches use one channel, point clouds use three.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    data: CMat,
}

impl GraphSignal {
    pub fn new(data: CMat) -> Self {
        Self { data }
    }

    pub fn zeros(n: usize, channels: usize) -> Self {
        Self {
            data: Mat::zeros(n, channels),
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            data: Mat::from_fn(values.len(), 1, |i, _| c64::new(values[i], 0.0)),
        }
    }

    /// Builds a signal from real channels of equal length.
    pub fn from_real_channels(channels: &[Vec<f64>]) -> Result<Self> {
        let n = channels.first().map_or(0, Vec::len);
        if let Some(bad) = channels.iter().position(|c| c.len() != n) {
            return Err(Error::Shape(format!(
                "channel {bad} has length {}, expected {n}",
                channels[bad].len()
            )));
        }
        Ok(Self {
            data: Mat::from_fn(n, channels.len(), |i, j| c64::new(channels[j][i], 0.0)),
        })
    }

    pub fn from_complex(values: &[c64]) -> Self {
        Self {
            data: Mat::from_fn(values.len(), 1, |i, _| values[i]),
        }
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.data
    }

    pub fn into_mat(self) -> CMat {
        self.data
    }

    pub fn real_channel(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.data[(i, c)].re).collect()
    }

    pub fn real_channels(&self) -> Vec<Vec<f64>> {
        (0..self.channels()).map(|c| self.real_channel(c)).collect()
    }

    /// `‖x‖₂` over all channels.
    pub fn norm(&self) -> f64 {
        crate::linalg::frobenius(self.data.as_ref())
    }
}
