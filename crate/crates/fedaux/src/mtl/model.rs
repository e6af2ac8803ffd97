//! Hard-parameter-sharing model: one shared trunk, one small head per
//! task, all parameters in a single flat vector (trunk segment first, then
//! heads in declared task order).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mtl::weighting::ObjectiveMode;
use crate::nn::{softmax_cross_entropy, ForwardCache, LayerStack, ParamVector, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskRole {
    Main,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub role: TaskRole,
    pub num_classes: usize,
}

pub struct HardSharedModel {
    trunk: LayerStack,
    heads: Vec<(TaskSpec, LayerStack)>,
    /// (offset, len) per head into the flat vector; trunk occupies
    /// `0..trunk.param_count()`.
    head_segments: Vec<(usize, usize)>,
    param_count: usize,
}

/// Forward record for a whole multi-task pass.
pub struct MtlCache {
    trunk: ForwardCache,
    trunk_out: Tensor,
    heads: Vec<ForwardCache>,
}

impl HardSharedModel {
    pub fn new(trunk: LayerStack, heads: Vec<(TaskSpec, LayerStack)>) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::config("model needs at least one task head"));
        }
        for (i, (task, _)) in heads.iter().enumerate() {
            if task.num_classes < 2 {
                return Err(Error::config(format!(
                    "task {:?}: needs at least 2 classes",
                    task.id
                )));
            }
            if heads[..i].iter().any(|(t, _)| t.id == task.id) {
                return Err(Error::config(format!("duplicate task id {:?}", task.id)));
            }
        }
        let mut offset = trunk.param_count();
        let mut head_segments = Vec::with_capacity(heads.len());
        for (task, stack) in &heads {
            if stack.input_shape() != trunk.output_shape() {
                return Err(Error::config(format!(
                    "head {:?} expects input {:?} but the trunk produces {:?}",
                    task.id,
                    stack.input_shape(),
                    trunk.output_shape()
                )));
            }
            if stack.output_shape() != [task.num_classes] {
                return Err(Error::config(format!(
                    "head {:?} must end in {} logits, produces {:?}",
                    task.id,
                    task.num_classes,
                    stack.output_shape()
                )));
            }
            head_segments.push((offset, stack.param_count()));
            offset += stack.param_count();
        }
        Ok(Self {
            trunk,
            heads,
            head_segments,
            param_count: offset,
        })
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskSpec> {
        self.heads.iter().map(|(t, _)| t)
    }

    pub fn num_tasks(&self) -> usize {
        self.heads.len()
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.heads.iter().position(|(t, _)| t.id == id)
    }

    /// Position of the unique main task, required by the
    /// auxiliary-prioritizing objective.
    pub fn main_task_index(&self) -> Result<usize> {
        let mains: Vec<usize> = self
            .heads
            .iter()
            .enumerate()
            .filter(|(_, (t, _))| t.role == TaskRole::Main)
            .map(|(i, _)| i)
            .collect();
        match mains.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::config("no main task declared")),
            _ => Err(Error::config("more than one main task declared")),
        }
    }

    pub fn input_shape(&self) -> &[usize] {
        self.trunk.input_shape()
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn trunk_segment(&self) -> (usize, usize) {
        (0, self.trunk.param_count())
    }

    pub fn head_segment(&self, task: usize) -> (usize, usize) {
        self.head_segments[task]
    }

    pub fn init_params<R: Rng>(&self, rng: &mut R) -> ParamVector {
        let mut values = Vec::with_capacity(self.param_count);
        values.extend_from_slice(self.trunk.init_params(rng).as_slice());
        for (_, stack) in &self.heads {
            values.extend_from_slice(stack.init_params(rng).as_slice());
        }
        ParamVector::new(values)
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.param_count {
            return Err(Error::internal(format!(
                "model expects {} params, got {}",
                self.param_count,
                params.len()
            )));
        }
        Ok(())
    }

    /// Runs trunk once, then every head. Logits come back in declared task
    /// order.
    pub fn forward(&self, params: &ParamVector, x: &Tensor) -> Result<(Vec<Tensor>, MtlCache)> {
        self.check_params(params)?;
        let (t_ofs, t_len) = self.trunk_segment();
        let (trunk_out, trunk_cache) = self.trunk.forward(params.segment(t_ofs, t_len), x)?;
        let mut logits = Vec::with_capacity(self.heads.len());
        let mut head_caches = Vec::with_capacity(self.heads.len());
        for (i, (_, stack)) in self.heads.iter().enumerate() {
            let (ofs, len) = self.head_segments[i];
            let (y, cache) = stack.forward(params.segment(ofs, len), &trunk_out)?;
            logits.push(y);
            head_caches.push(cache);
        }
        Ok((
            logits,
            MtlCache {
                trunk: trunk_cache,
                trunk_out,
                heads: head_caches,
            },
        ))
    }

    /// Cross-entropy per task (batch means) plus the gradient of the
    /// weighted composite loss over the full flat parameter vector.
    ///
    /// `labels[i]` and `weights[i]` align with declared task order;
    /// `weights` are the effective per-task factors (main task 1 under the
    /// auxiliary-prioritizing objective). Head gradients are each head's
    /// own cross-entropy gradient scaled by its weight; the trunk gradient
    /// sums the weighted back-propagated head contributions.
    pub fn backward(
        &self,
        params: &ParamVector,
        logits: &[Tensor],
        cache: &MtlCache,
        labels: &[Vec<usize>],
        weights: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_params(params)?;
        if labels.len() != self.heads.len() || weights.len() != self.heads.len() {
            return Err(Error::internal(
                "labels/weights do not align with the task list",
            ));
        }
        let batch = cache.trunk_out.batch();
        if labels.iter().any(|l| l.len() != batch) {
            return Err(Error::data(format!(
                "per-task label arrays must all have batch size {}",
                batch
            )));
        }
        let mut grads = vec![0.0; self.param_count];
        let mut trunk_dy = Tensor::zeros(cache.trunk_out.shape().to_vec());
        let mut losses = Vec::with_capacity(self.heads.len());
        for (i, (_, stack)) in self.heads.iter().enumerate() {
            let (loss, mut dlogits) = softmax_cross_entropy(&logits[i], &labels[i])?;
            losses.push(loss);
            let w = weights[i];
            if w == 0.0 {
                // weighted-out task contributes nothing, exactly
                continue;
            }
            for v in dlogits.values_mut() {
                *v *= w;
            }
            let (ofs, len) = self.head_segments[i];
            let (dtrunk, dhead) =
                stack.backward(params.segment(ofs, len), &cache.heads[i], &dlogits)?;
            grads[ofs..ofs + len].copy_from_slice(&dhead);
            for (acc, d) in trunk_dy.values_mut().iter_mut().zip(dtrunk.values()) {
                *acc += *d;
            }
        }
        let (t_ofs, t_len) = self.trunk_segment();
        let (_, dtrunk_params) =
            self.trunk
                .backward(params.segment(t_ofs, t_len), &cache.trunk, &trunk_dy)?;
        grads[t_ofs..t_ofs + t_len].copy_from_slice(&dtrunk_params);
        Ok((losses, grads))
    }
}

/// Combines per-task losses into the training objective.
///
/// Under `FedAux` the main task enters with weight 1 and `weights` ranges
/// over the auxiliary tasks in task order; under `Mtdnn` `weights` ranges
/// over all tasks. `tasks` must align with `losses`.
pub fn composite_loss(
    tasks: &[TaskSpec],
    losses: &[f64],
    weights: &[f64],
    mode: ObjectiveMode,
) -> Result<f64> {
    if tasks.len() != losses.len() {
        return Err(Error::internal("losses do not align with the task list"));
    }
    match mode {
        ObjectiveMode::FedAux => {
            let main = tasks
                .iter()
                .position(|t| t.role == TaskRole::Main)
                .ok_or_else(|| Error::config("composite loss needs a main-task loss"))?;
            let aux_count = tasks.len() - 1;
            if weights.len() != aux_count {
                return Err(Error::internal(format!(
                    "{} auxiliary weights for {} auxiliary tasks",
                    weights.len(),
                    aux_count
                )));
            }
            let mut total = losses[main];
            let mut w = weights.iter();
            for (i, loss) in losses.iter().enumerate() {
                if i != main {
                    total += w.next().expect("aux weight") * loss;
                }
            }
            Ok(total)
        }
        ObjectiveMode::Mtdnn => {
            if weights.len() != tasks.len() {
                return Err(Error::internal(format!(
                    "{} weights for {} tasks",
                    weights.len(),
                    tasks.len()
                )));
            }
            Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
        }
        ObjectiveMode::SingleTask => {
            if losses.len() != 1 {
                return Err(Error::internal("single-task objective with several tasks"));
            }
            Ok(losses[0])
        }
    }
}

/// Expands scope weights into per-task effective factors aligned with the
/// declared task order: main weight 1 under `FedAux`, the scope weights
/// elsewhere.
pub fn effective_weights(
    tasks: &[TaskSpec],
    scope_weights: &[f64],
    mode: ObjectiveMode,
) -> Result<Vec<f64>> {
    match mode {
        ObjectiveMode::FedAux => {
            let aux_count = tasks
                .iter()
                .filter(|t| t.role == TaskRole::Auxiliary)
                .count();
            if tasks.len() - aux_count != 1 {
                return Err(Error::config(
                    "auxiliary-prioritizing objective needs exactly one main task",
                ));
            }
            if scope_weights.len() != aux_count {
                return Err(Error::internal(format!(
                    "{} weights for {} auxiliary tasks",
                    scope_weights.len(),
                    aux_count
                )));
            }
            let mut w = scope_weights.iter();
            Ok(tasks
                .iter()
                .map(|t| match t.role {
                    TaskRole::Main => 1.0,
                    TaskRole::Auxiliary => *w.next().expect("aux weight"),
                })
                .collect())
        }
        ObjectiveMode::Mtdnn => {
            if scope_weights.len() != tasks.len() {
                return Err(Error::internal(format!(
                    "{} weights for {} tasks",
                    scope_weights.len(),
                    tasks.len()
                )));
            }
            Ok(scope_weights.to_vec())
        }
        ObjectiveMode::SingleTask => {
            if tasks.len() != 1 {
                return Err(Error::internal("single-task objective with several tasks"));
            }
            Ok(vec![1.0])
        }
    }
}

/// Number of weights the strategy draws for this mode: auxiliary tasks
/// only under `FedAux`, all tasks under `Mtdnn`.
pub fn scope_size(tasks: &[TaskSpec], mode: ObjectiveMode) -> usize {
    match mode {
        ObjectiveMode::FedAux => tasks
            .iter()
            .filter(|t| t.role == TaskRole::Auxiliary)
            .count(),
        ObjectiveMode::Mtdnn => tasks.len(),
        ObjectiveMode::SingleTask => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;
    use crate::rng::{stream, StreamTag};

    fn task(id: &str, role: TaskRole, k: usize) -> TaskSpec {
        TaskSpec {
            id: id.into(),
            role,
            num_classes: k,
        }
    }

    fn dense(i: usize, o: usize) -> LayerSpec {
        LayerSpec::Dense {
            in_features: i,
            out_features: o,
        }
    }

    fn tiny_model() -> HardSharedModel {
        let trunk = LayerStack::new(vec![4], vec![dense(4, 3), LayerSpec::Relu]).unwrap();
        let heads = vec![
            (
                task("service", TaskRole::Main, 3),
                LayerStack::new(vec![3], vec![dense(3, 3)]).unwrap(),
            ),
            (
                task("duration", TaskRole::Auxiliary, 2),
                LayerStack::new(vec![3], vec![dense(3, 2)]).unwrap(),
            ),
            (
                task("bandwidth", TaskRole::Auxiliary, 2),
                LayerStack::new(vec![3], vec![dense(3, 2)]).unwrap(),
            ),
        ];
        HardSharedModel::new(trunk, heads).unwrap()
    }

    #[test]
    fn param_count_is_trunk_plus_heads() {
        let m = tiny_model();
        // trunk 4*3+3=15, heads 3*3+3=12, 3*2+2=8, 8
        assert_eq!(m.param_count(), 15 + 12 + 8 + 8);
        let p = m.init_params(&mut stream(0, StreamTag::ParamInit, 0, 0));
        assert_eq!(p.len(), m.param_count());
    }

    #[test]
    fn forward_yields_logits_per_task_in_declared_order() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(1, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[0.1, -0.2, 0.3, 0.4]]);
        let (logits, _) = m.forward(&p, &x).unwrap();
        assert_eq!(logits.len(), 3);
        assert_eq!(logits[0].shape(), &[1, 3]);
        assert_eq!(logits[1].shape(), &[1, 2]);
        assert_eq!(logits[2].shape(), &[1, 2]);
        let (again, _) = m.forward(&p, &x).unwrap();
        assert_eq!(logits, again);
    }

    #[test]
    fn forward_matches_hand_composed_stacks() {
        // trunk: identity-like dense (weights I, bias 0), head: known dense
        let trunk = LayerStack::new(vec![2], vec![dense(2, 2)]).unwrap();
        let head = LayerStack::new(vec![2], vec![dense(2, 2)]).unwrap();
        let m = HardSharedModel::new(trunk, vec![(task("only", TaskRole::Main, 2), head)]).unwrap();
        // trunk params: I2, zero bias; head: [[1,2],[3,4]] row-major [out,in], bias [0.5, -0.5]
        let p = ParamVector::new(vec![
            1.0, 0.0, 0.0, 1.0, 0.0, 0.0, // trunk
            1.0, 2.0, 3.0, 4.0, 0.5, -0.5, // head
        ]);
        let x = Tensor::from_rows(&[&[10.0, 20.0]]);
        let (logits, _) = m.forward(&p, &x).unwrap();
        // head row0: 1*10+2*20+0.5 = 50.5 ; row1: 3*10+4*20-0.5 = 109.5
        assert_eq!(logits[0].values(), &[50.5, 109.5]);
    }

    #[test]
    fn composite_loss_hand_cases() {
        let tasks = vec![
            task("m", TaskRole::Main, 2),
            task("a", TaskRole::Auxiliary, 2),
            task("b", TaskRole::Auxiliary, 2),
        ];
        let v =
            composite_loss(&tasks, &[0.9, 0.6, 0.3], &[0.5, 0.5], ObjectiveMode::FedAux).unwrap();
        assert!((v - 1.35).abs() < 1e-15);
        let v =
            composite_loss(&tasks, &[0.9, 0.6, 0.3], &[0.0, 0.0], ObjectiveMode::FedAux).unwrap();
        assert_eq!(v, 0.9);
        let v = composite_loss(
            &tasks,
            &[3.0, 3.0, 3.0],
            &[1.0 / 3.0; 3],
            ObjectiveMode::Mtdnn,
        )
        .unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn composite_loss_without_main_task_is_config_error() {
        let tasks = vec![
            task("a", TaskRole::Auxiliary, 2),
            task("b", TaskRole::Auxiliary, 2),
        ];
        assert!(matches!(
            composite_loss(&tasks, &[0.5, 0.5], &[0.5], ObjectiveMode::FedAux),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn composite_never_below_main_loss_for_nonnegative_weights() {
        let tasks = vec![
            task("m", TaskRole::Main, 2),
            task("a", TaskRole::Auxiliary, 2),
        ];
        for w in [0.0, 0.1, 0.9, 2.5] {
            for aux in [0.0, 0.4, 3.0] {
                let v = composite_loss(&tasks, &[1.2, aux], &[w], ObjectiveMode::FedAux).unwrap();
                assert!(v >= 1.2);
            }
        }
    }

    #[test]
    fn zero_aux_weights_reduce_to_main_task_gradient() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(2, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[0.4, -1.0, 0.7, 0.2], &[1.0, 0.3, -0.5, 0.8]]);
        let labels = vec![vec![2usize, 0], vec![1, 1], vec![0, 1]];
        let (logits, cache) = m.forward(&p, &x).unwrap();
        let (_, grads) = m
            .backward(&p, &logits, &cache, &labels, &[1.0, 0.0, 0.0])
            .unwrap();

        // single-task model over the same trunk
        let (h_ofs, h_len) = m.head_segment(0);
        let (t_ofs, t_len) = m.trunk_segment();
        let single = HardSharedModel::new(
            LayerStack::new(vec![4], vec![dense(4, 3), LayerSpec::Relu]).unwrap(),
            vec![(
                task("service", TaskRole::Main, 3),
                LayerStack::new(vec![3], vec![dense(3, 3)]).unwrap(),
            )],
        )
        .unwrap();
        let mut single_params = p.segment(t_ofs, t_len).to_vec();
        single_params.extend_from_slice(p.segment(h_ofs, h_len));
        let sp = ParamVector::new(single_params);
        let (sl, sc) = single.forward(&sp, &x).unwrap();
        let (_, sg) = single
            .backward(&sp, &sl, &sc, &labels[..1].to_vec(), &[1.0])
            .unwrap();

        // trunk and main-head segments agree; aux-head segments are zero
        assert_eq!(&grads[t_ofs..t_ofs + t_len], &sg[..t_len]);
        assert_eq!(&grads[h_ofs..h_ofs + h_len], &sg[t_len..]);
        for i in 1..3 {
            let (ofs, len) = m.head_segment(i);
            assert!(grads[ofs..ofs + len].iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn backward_is_linear_in_task_weights() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(3, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[0.4, -1.0, 0.7, 0.2], &[0.1, 0.9, -0.3, -0.6]]);
        let labels = vec![vec![0usize, 1], vec![1, 0], vec![0, 0]];
        let (logits, cache) = m.forward(&p, &x).unwrap();
        let single = |task: usize| {
            let mut w = vec![0.0; 3];
            w[task] = 1.0;
            m.backward(&p, &logits, &cache, &labels, &w).unwrap().1
        };
        let g0 = single(0);
        let g1 = single(1);
        let g2 = single(2);
        let (a, b, c) = (0.3, 1.7, 0.45);
        let (_, combined) = m
            .backward(&p, &logits, &cache, &labels, &[a, b, c])
            .unwrap();
        for i in 0..combined.len() {
            let expected = a * g0[i] + b * g1[i] + c * g2[i];
            assert!(
                (combined[i] - expected).abs() <= 1e-12,
                "coordinate {}: {} vs {}",
                i,
                combined[i],
                expected
            );
        }
    }

    #[test]
    fn single_task_backward_leaves_other_heads_untouched() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(4, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[1.0, 2.0, 3.0, 4.0]]);
        let labels = vec![vec![0usize], vec![1], vec![1]];
        let (logits, cache) = m.forward(&p, &x).unwrap();
        let (_, grads) = m
            .backward(&p, &logits, &cache, &labels, &[0.0, 1.0, 0.0])
            .unwrap();
        for i in [0usize, 2] {
            let (ofs, len) = m.head_segment(i);
            assert!(grads[ofs..ofs + len].iter().all(|g| *g == 0.0));
        }
        let (ofs, len) = m.head_segment(1);
        assert!(grads[ofs..ofs + len].iter().any(|g| *g != 0.0));
    }

    #[test]
    fn ragged_label_batches_are_a_data_error() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(5, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 0.0, 1.0]]);
        let labels = vec![vec![0usize, 1], vec![1], vec![0, 0]];
        let (logits, cache) = m.forward(&p, &x).unwrap();
        assert!(matches!(
            m.backward(&p, &logits, &cache, &labels, &[1.0, 1.0, 1.0]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn params_reassembled_from_segments_reproduce_forward_outputs() {
        let m = tiny_model();
        let p = m.init_params(&mut stream(6, StreamTag::ParamInit, 0, 0));
        let x = Tensor::from_rows(&[&[0.2, -0.4, 0.6, -0.8]]);
        let (expected, _) = m.forward(&p, &x).unwrap();

        let mut rebuilt = Vec::with_capacity(p.len());
        let (t_ofs, t_len) = m.trunk_segment();
        rebuilt.extend_from_slice(p.segment(t_ofs, t_len));
        for i in 0..m.num_tasks() {
            let (ofs, len) = m.head_segment(i);
            rebuilt.extend_from_slice(p.segment(ofs, len));
        }
        let rebuilt = ParamVector::new(rebuilt);
        assert_eq!(rebuilt, p);
        let (again, _) = m.forward(&rebuilt, &x).unwrap();
        assert_eq!(expected, again);
    }

    #[test]
    fn duplicate_task_ids_rejected() {
        let trunk = LayerStack::new(vec![2], vec![dense(2, 2)]).unwrap();
        let h = LayerStack::new(vec![2], vec![dense(2, 2)]).unwrap();
        let res = HardSharedModel::new(
            trunk,
            vec![
                (task("x", TaskRole::Main, 2), h.clone()),
                (task("x", TaskRole::Auxiliary, 2), h),
            ],
        );
        assert!(res.is_err());
    }

    #[test]
    fn head_shape_mismatch_rejected() {
        let trunk = LayerStack::new(vec![2], vec![dense(2, 3)]).unwrap();
        let head = LayerStack::new(vec![2], vec![dense(2, 2)]).unwrap();
        assert!(HardSharedModel::new(trunk, vec![(task("m", TaskRole::Main, 2), head)]).is_err());
    }
}
