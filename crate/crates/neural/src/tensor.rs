use crate::{NeuralError, Real};

/// Dense 4D tensor, `(batch, channels, height, width)`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<T> {
    dims: (usize, usize, usize, usize),
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    pub fn new(dims: (usize, usize, usize, usize), data: Vec<T>) -> Result<Self, NeuralError> {
        let expected = dims.0 * dims.1 * dims.2 * dims.3;
        if data.len() != expected {
            return Err(NeuralError::ShapeMismatch {
                what: "tensor data".into(),
                expected: format!("{expected} values for dims {dims:?}"),
                got: format!("{}", data.len()),
            });
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn zeros(dims: (usize, usize, usize, usize)) -> Self {
        Tensor4 {
            dims,
            data: vec![T::zero(); dims.0 * dims.1 * dims.2 * dims.3],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// One contiguous `(batch, channel)` plane of `height × width` values.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let (_, channels, h, w) = self.dims;
        let sz = h * w;
        let start = (n * channels + c) * sz;
        &self.data[start..start + sz]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let (_, channels, h, w) = self.dims;
        let sz = h * w;
        let start = (n * channels + c) * sz;
        &mut self.data[start..start + sz]
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Tensor4<U> {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
