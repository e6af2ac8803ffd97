/// Row-major `f64` tensor. The first axis is always the batch axis for
/// activations flowing through a stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    /// Panics if `values.len()` disagrees with `shape`; that is a
    /// programmer error, not an input error.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(
            values.len(),
            expected,
            "shape {:?} expects {} values, got {}",
            shape,
            expected,
            values.len()
        );
        Self { shape, values }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Batch size (size of the first axis).
    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    /// Shape with the batch axis stripped.
    pub fn sample_shape(&self) -> &[usize] {
        &self.shape[1..]
    }

    /// Reinterprets the values under a new shape of equal volume.
    pub fn reshape(mut self, shape: Vec<usize>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(self.values.len(), expected, "reshape volume mismatch");
        self.shape = shape;
        self
    }

    /// Builds a `[rows.len(), width]` tensor from per-row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty());
        let width = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            assert_eq!(row.len(), width, "ragged rows");
            values.extend_from_slice(row);
        }
        Self {
            shape: vec![rows.len(), width],
            values,
        }
    }
}
