//! A validated sequence of layers backed by a flat parameter segment.
//!
//! The canonical parameter order is: layers in ascending order, and within
//! a layer, weights before biases. Every consumer of flat vectors in this
//! crate (init, SGD, checkpoints, aggregation) relies on that order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::layer::{layer_backward, layer_forward, LayerRecord, LayerSpec};
use crate::nn::params::ParamVector;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct LayerStack {
    layers: Vec<LayerSpec>,
    /// Per-sample shapes, `shapes[0]` is the input, `shapes[i+1]` the output
    /// of layer `i`.
    shapes: Vec<Vec<usize>>,
    /// Per-layer `(offset, len)` into this stack's parameter segment.
    segments: Vec<(usize, usize)>,
    param_count: usize,
}

/// Opaque forward record consumed by [`LayerStack::backward`].
#[derive(Debug)]
pub struct ForwardCache {
    records: Vec<LayerRecord>,
    output_shape: Vec<usize>,
    param_count: usize,
}

impl ForwardCache {
    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }
}

impl LayerStack {
    /// Validates layer hyperparameters and shape compatibility end to end.
    /// `input_shape` is per-sample (no batch axis).
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::config(format!(
                "stack input shape {:?} must be non-empty with positive dims",
                input_shape
            )));
        }
        let mut shapes = vec![input_shape];
        let mut segments = Vec::with_capacity(layers.len());
        let mut offset = 0;
        for (i, layer) in layers.iter().enumerate() {
            let out = layer.output_shape(shapes.last().unwrap()).map_err(|e| {
                Error::config(format!("layer {} ({}): {}", i, layer.kind_name(), e))
            })?;
            shapes.push(out);
            let n = layer.param_count();
            segments.push((offset, n));
            offset += n;
        }
        Ok(Self {
            layers,
            shapes,
            segments,
            param_count: offset,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.shapes[0]
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Glorot-uniform weights, zero biases, fully determined by `rng`.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> ParamVector {
        let mut values = vec![0.0; self.param_count];
        for (layer, (offset, len)) in self.layers.iter().zip(&self.segments) {
            if *len == 0 {
                continue;
            }
            let (fan_in, fan_out) = layer.fans().expect("parameterized layer has fans");
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight_count = *len - bias_count(layer);
            for v in &mut values[*offset..*offset + weight_count] {
                *v = rng.random_range(-bound..bound);
            }
            // biases stay zero
        }
        ParamVector::new(values)
    }

    /// Runs the stack on a batch. `params` must be this stack's segment.
    /// Pure in `(params, x)`; the cache captures everything `backward` needs.
    pub fn forward(&self, params: &[f64], x: &Tensor) -> Result<(Tensor, ForwardCache)> {
        if params.len() != self.param_count {
            return Err(Error::internal(format!(
                "stack expects {} params, got {}",
                self.param_count,
                params.len()
            )));
        }
        if x.batch() == 0 || x.sample_shape() != self.input_shape() {
            return Err(Error::config(format!(
                "stack input: expected batched {:?}, got {:?}",
                self.input_shape(),
                x.shape()
            )));
        }
        let mut records = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for (layer, (offset, len)) in self.layers.iter().zip(&self.segments) {
            let (y, rec) = layer_forward(layer, &params[*offset..*offset + *len], &cur);
            records.push(rec);
            cur = y;
        }
        let cache = ForwardCache {
            records,
            output_shape: cur.shape().to_vec(),
            param_count: self.param_count,
        };
        Ok((cur, cache))
    }

    /// Backpropagates `dy` through the stack.
    ///
    /// Returns the input gradient and the parameter gradient in canonical
    /// order. The cache must come from a `forward` of this same stack with
    /// the same `params`.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        dy: &Tensor,
    ) -> Result<(Tensor, Vec<f64>)> {
        if cache.records.len() != self.layers.len() || cache.param_count != self.param_count {
            return Err(Error::internal("stale forward cache for this stack"));
        }
        if dy.shape() != cache.output_shape {
            return Err(Error::internal(format!(
                "upstream gradient shape {:?} does not match cached output {:?}",
                dy.shape(),
                cache.output_shape
            )));
        }
        let mut dparams = vec![0.0; self.param_count];
        let mut grad = dy.clone();
        for i in (0..self.layers.len()).rev() {
            let (offset, len) = self.segments[i];
            let (dx, dp) = layer_backward(
                &self.layers[i],
                &params[offset..offset + len],
                &cache.records[i],
                &grad,
            )?;
            dparams[offset..offset + len].copy_from_slice(&dp);
            grad = dx;
        }
        Ok((grad, dparams))
    }
}

fn bias_count(layer: &LayerSpec) -> usize {
    match *layer {
        LayerSpec::Conv1d { out_channels, .. } => out_channels,
        LayerSpec::Dense { out_features, .. } => out_features,
        _ => 0,
    }
}
