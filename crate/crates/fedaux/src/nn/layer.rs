//! Layer definitions, shape rules, and the per-layer forward/backward
//! kernels.
//!
//! Conventions (also the canonical flat-parameter order within a layer):
//! - `Dense` weights are `[out_features, in_features]` row-major, then the
//!   bias `[out_features]`; `y[b,o] = sum_i w[o,i] * x[b,i] + bias[o]`.
//! - `Conv1d` weights are `[out_channels, in_channels, kernel]` row-major,
//!   then the bias `[out_channels]`. Valid padding; output length is
//!   `(len - kernel) / stride + 1`.
//! - `MaxPool1d` windows are non-overlapping; a trailing remainder shorter
//!   than `pool_size` is dropped.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
    },
    Relu,
    MaxPool1d {
        pool_size: usize,
    },
    Flatten,
    Dense {
        in_features: usize,
        out_features: usize,
    },
}

impl LayerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool1d { .. } => "max-pool1d",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
        }
    }

    /// Trainable parameters held by this layer.
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => out_channels * in_channels * kernel_size + out_channels,
            LayerSpec::Dense {
                in_features,
                out_features,
            } => in_features * out_features + out_features,
            _ => 0,
        }
    }

    /// (fan_in, fan_out) as used by the uniform init bound.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => Some((in_channels * kernel_size, out_channels * kernel_size)),
            LayerSpec::Dense {
                in_features,
                out_features,
            } => Some((in_features, out_features)),
            _ => None,
        }
    }

    fn check_hyperparams(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => in_channels >= 1 && out_channels >= 1 && kernel_size >= 1 && stride >= 1,
            LayerSpec::MaxPool1d { pool_size } => pool_size >= 1,
            LayerSpec::Dense {
                in_features,
                out_features,
            } => in_features >= 1 && out_features >= 1,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{}: size hyperparameters must be >= 1",
                self.kind_name()
            )))
        }
    }

    /// Per-sample output shape for a per-sample `input` shape, or a
    /// configuration error if the layer cannot consume it.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.check_hyperparams()?;
        let fail = |why: &str| {
            Err(Error::config(format!(
                "{}: incompatible input shape {:?} ({})",
                self.kind_name(),
                input,
                why
            )))
        };
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                if input.len() != 2 {
                    return fail("expected [channels, length]");
                }
                let (c, l) = (input[0], input[1]);
                if c != in_channels {
                    return fail("channel count mismatch");
                }
                if l < kernel_size {
                    return fail("length shorter than kernel");
                }
                Ok(vec![out_channels, (l - kernel_size) / stride + 1])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::MaxPool1d { pool_size } => {
                if input.len() != 2 {
                    return fail("expected [channels, length]");
                }
                let (c, l) = (input[0], input[1]);
                if l < pool_size {
                    return fail("length shorter than pool window");
                }
                Ok(vec![c, l / pool_size])
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Dense {
                in_features,
                out_features,
            } => {
                if input.len() != 1 {
                    return fail("expected flat [features]; flatten first");
                }
                if input[0] != in_features {
                    return fail("feature count mismatch");
                }
                Ok(vec![out_features])
            }
        }
    }
}

/// What a layer keeps from its forward pass to support the backward pass.
#[derive(Debug, Clone)]
pub(crate) enum LayerRecord {
    Conv1d {
        input: Tensor,
    },
    Relu {
        input: Tensor,
    },
    MaxPool1d {
        input_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Flatten {
        input_shape: Vec<usize>,
    },
    Dense {
        input: Tensor,
    },
}

/// Forward pass of one layer. `params` is the layer's own segment.
pub(crate) fn layer_forward(
    layer: &LayerSpec,
    params: &[f64],
    x: &Tensor,
) -> (Tensor, LayerRecord) {
    match *layer {
        LayerSpec::Dense {
            in_features,
            out_features,
        } => {
            let batch = x.batch();
            let (w, bias) = params.split_at(in_features * out_features);
            let xv = x.values();
            let mut y = vec![0.0; batch * out_features];
            for b in 0..batch {
                let row = &xv[b * in_features..(b + 1) * in_features];
                for o in 0..out_features {
                    let wrow = &w[o * in_features..(o + 1) * in_features];
                    let mut acc = bias[o];
                    for i in 0..in_features {
                        acc += wrow[i] * row[i];
                    }
                    y[b * out_features + o] = acc;
                }
            }
            (
                Tensor::new(vec![batch, out_features], y),
                LayerRecord::Dense { input: x.clone() },
            )
        }
        LayerSpec::Conv1d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
        } => {
            let batch = x.batch();
            let len = x.shape()[2];
            let out_len = (len - kernel_size) / stride + 1;
            let (w, bias) = params.split_at(out_channels * in_channels * kernel_size);
            let xv = x.values();
            let mut y = vec![0.0; batch * out_channels * out_len];
            for b in 0..batch {
                let xb = &xv[b * in_channels * len..(b + 1) * in_channels * len];
                for co in 0..out_channels {
                    let wc =
                        &w[co * in_channels * kernel_size..(co + 1) * in_channels * kernel_size];
                    for t in 0..out_len {
                        let mut acc = bias[co];
                        for ci in 0..in_channels {
                            let xrow =
                                &xb[ci * len + t * stride..ci * len + t * stride + kernel_size];
                            let wrow = &wc[ci * kernel_size..(ci + 1) * kernel_size];
                            for k in 0..kernel_size {
                                acc += wrow[k] * xrow[k];
                            }
                        }
                        y[(b * out_channels + co) * out_len + t] = acc;
                    }
                }
            }
            (
                Tensor::new(vec![batch, out_channels, out_len], y),
                LayerRecord::Conv1d { input: x.clone() },
            )
        }
        LayerSpec::Relu => {
            let y: Vec<f64> = x.values().iter().map(|v| v.max(0.0)).collect();
            (
                Tensor::new(x.shape().to_vec(), y),
                LayerRecord::Relu { input: x.clone() },
            )
        }
        LayerSpec::MaxPool1d { pool_size } => {
            let batch = x.batch();
            let channels = x.shape()[1];
            let len = x.shape()[2];
            let out_len = len / pool_size;
            let xv = x.values();
            let mut y = vec![0.0; batch * channels * out_len];
            let mut argmax = vec![0usize; y.len()];
            for bc in 0..batch * channels {
                let base = bc * len;
                for t in 0..out_len {
                    let start = base + t * pool_size;
                    let mut best = xv[start];
                    let mut best_at = start;
                    for k in 1..pool_size {
                        if xv[start + k] > best {
                            best = xv[start + k];
                            best_at = start + k;
                        }
                    }
                    y[bc * out_len + t] = best;
                    argmax[bc * out_len + t] = best_at;
                }
            }
            (
                Tensor::new(vec![batch, channels, out_len], y),
                LayerRecord::MaxPool1d {
                    input_shape: x.shape().to_vec(),
                    argmax,
                },
            )
        }
        LayerSpec::Flatten => {
            let batch = x.batch();
            let per: usize = x.sample_shape().iter().product();
            (
                Tensor::new(vec![batch, per], x.values().to_vec()),
                LayerRecord::Flatten {
                    input_shape: x.shape().to_vec(),
                },
            )
        }
    }
}

/// Backward pass of one layer: takes the upstream gradient `dy`, returns
/// `(dx, dparams)` with `dparams` in the layer's canonical order.
pub(crate) fn layer_backward(
    layer: &LayerSpec,
    params: &[f64],
    record: &LayerRecord,
    dy: &Tensor,
) -> Result<(Tensor, Vec<f64>)> {
    match (*layer, record) {
        (
            LayerSpec::Dense {
                in_features,
                out_features,
            },
            LayerRecord::Dense { input },
        ) => {
            let batch = input.batch();
            let (w, _) = params.split_at(in_features * out_features);
            let xv = input.values();
            let dyv = dy.values();
            let mut dw = vec![0.0; in_features * out_features];
            let mut db = vec![0.0; out_features];
            let mut dx = vec![0.0; batch * in_features];
            for b in 0..batch {
                let xrow = &xv[b * in_features..(b + 1) * in_features];
                let dyrow = &dyv[b * out_features..(b + 1) * out_features];
                let dxrow = &mut dx[b * in_features..(b + 1) * in_features];
                for o in 0..out_features {
                    let g = dyrow[o];
                    db[o] += g;
                    let wrow = &w[o * in_features..(o + 1) * in_features];
                    let dwrow = &mut dw[o * in_features..(o + 1) * in_features];
                    for i in 0..in_features {
                        dwrow[i] += g * xrow[i];
                        dxrow[i] += g * wrow[i];
                    }
                }
            }
            let mut dparams = dw;
            dparams.extend_from_slice(&db);
            Ok((Tensor::new(vec![batch, in_features], dx), dparams))
        }
        (
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            },
            LayerRecord::Conv1d { input },
        ) => {
            let batch = input.batch();
            let len = input.shape()[2];
            let out_len = (len - kernel_size) / stride + 1;
            let (w, _) = params.split_at(out_channels * in_channels * kernel_size);
            let xv = input.values();
            let dyv = dy.values();
            let mut dw = vec![0.0; out_channels * in_channels * kernel_size];
            let mut db = vec![0.0; out_channels];
            let mut dx = vec![0.0; batch * in_channels * len];
            for b in 0..batch {
                let xb = &xv[b * in_channels * len..(b + 1) * in_channels * len];
                let dxb = &mut dx[b * in_channels * len..(b + 1) * in_channels * len];
                for co in 0..out_channels {
                    let wc =
                        &w[co * in_channels * kernel_size..(co + 1) * in_channels * kernel_size];
                    let dwc = &mut dw
                        [co * in_channels * kernel_size..(co + 1) * in_channels * kernel_size];
                    for t in 0..out_len {
                        let g = dyv[(b * out_channels + co) * out_len + t];
                        db[co] += g;
                        for ci in 0..in_channels {
                            let x0 = ci * len + t * stride;
                            for k in 0..kernel_size {
                                dwc[ci * kernel_size + k] += g * xb[x0 + k];
                                dxb[x0 + k] += g * wc[ci * kernel_size + k];
                            }
                        }
                    }
                }
            }
            let mut dparams = dw;
            dparams.extend_from_slice(&db);
            Ok((Tensor::new(input.shape().to_vec(), dx), dparams))
        }
        (LayerSpec::Relu, LayerRecord::Relu { input }) => {
            let dx: Vec<f64> = input
                .values()
                .iter()
                .zip(dy.values())
                .map(|(x, g)| if *x > 0.0 { *g } else { 0.0 })
                .collect();
            Ok((Tensor::new(input.shape().to_vec(), dx), Vec::new()))
        }
        (
            LayerSpec::MaxPool1d { .. },
            LayerRecord::MaxPool1d {
                input_shape,
                argmax,
            },
        ) => {
            let mut dx = vec![0.0; input_shape.iter().product()];
            for (g, at) in dy.values().iter().zip(argmax) {
                dx[*at] += *g;
            }
            Ok((Tensor::new(input_shape.clone(), dx), Vec::new()))
        }
        (LayerSpec::Flatten, LayerRecord::Flatten { input_shape }) => Ok((
            Tensor::new(input_shape.clone(), dy.values().to_vec()),
            Vec::new(),
        )),
        _ => Err(Error::internal(
            "forward record does not match the layer it is replayed against",
        )),
    }
}
