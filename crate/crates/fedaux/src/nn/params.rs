//! Flat parameter vectors, the unit exchanged between server and stations.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// All trainable parameters of a model as one flat `f64` vector, in the
/// canonical order (layer ascending, weights before biases; for a shared
/// model, trunk first then heads in task order). The length is fixed at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn segment(&self, offset: usize, len: usize) -> &[f64] {
        &self.values[offset..offset + len]
    }

    /// One plain SGD step, in place: `p[i] -= eta * g[i]`.
    pub fn sgd_step(&mut self, grads: &[f64], eta: f64) -> Result<()> {
        if grads.len() != self.values.len() {
            return Err(Error::internal(format!(
                "gradient length {} != parameter length {}",
                grads.len(),
                self.values.len()
            )));
        }
        for (p, g) in self.values.iter_mut().zip(grads) {
            *p -= eta * g;
        }
        Ok(())
    }

    /// Checkpoint form: u64 little-endian length, then each parameter as a
    /// little-endian `f32`. Lossy by design; training state stays `f64`.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut len8 = [0u8; 8];
        r.read_exact(&mut len8)
            .map_err(|e| Error::data(format!("checkpoint header: {}", e)))?;
        let len = u64::from_le_bytes(len8) as usize;
        let mut values = Vec::with_capacity(len);
        let mut buf = [0u8; 4];
        for i in 0..len {
            r.read_exact(&mut buf)
                .map_err(|e| Error::data(format!("checkpoint value {}: {}", i, e)))?;
            values.push(f32::from_le_bytes(buf) as f64);
        }
        Ok(Self { values })
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_hand_case() {
        let mut p = ParamVector::new(vec![1.0]);
        p.sgd_step(&[0.5], 0.005).unwrap();
        assert_eq!(p.as_slice(), &[0.9975]);
    }

    #[test]
    fn sgd_zero_gradient_is_identity() {
        let mut p = ParamVector::new(vec![0.25, -3.5, 7.0]);
        let before = p.clone();
        p.sgd_step(&[0.0, 0.0, 0.0], 0.1).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn sgd_unit_rate() {
        let mut p = ParamVector::new(vec![0.0, 0.0]);
        p.sgd_step(&[1.0, -1.0], 1.0).unwrap();
        assert_eq!(p.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn sgd_length_mismatch_is_internal_error() {
        let mut p = ParamVector::new(vec![1.0, 2.0]);
        assert!(matches!(p.sgd_step(&[1.0], 0.1), Err(Error::Internal(_))));
    }

    #[test]
    fn checkpoint_round_trip_is_f32_exact() {
        let p = ParamVector::new(vec![0.1, -1.5, 3.25e-4, 1234.5]);
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 4);
        let q = ParamVector::read_checkpoint(buf.as_slice()).unwrap();
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            assert_eq!(*a as f32, *b as f32);
            assert_eq!(*b, *a as f32 as f64);
        }
    }

    #[test]
    fn truncated_checkpoint_is_data_error() {
        let p = ParamVector::new(vec![1.0, 2.0]);
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(matches!(
            ParamVector::read_checkpoint(buf.as_slice()),
            Err(Error::Data(_))
        ));
    }
}
