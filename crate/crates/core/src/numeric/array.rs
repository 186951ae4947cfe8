use serde::{Deserialize, Serialize};

use super::NumericError;

/// Dense row-major array of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NumericError> {
        if shape.iter().any(|&d| d == 0) {
            return Err(NumericError::Shape {
                op: "array",
                detail: format!("zero-sized dimension in shape {shape:?}"),
            });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NumericError::Shape {
                op: "array",
                detail: format!("shape {shape:?} needs {expected} values, got {}", data.len()),
            });
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(NumericError::NonFinite(format!("array entry {bad}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn scalar(x: f64) -> Self {
        Self { shape: vec![1], data: vec![x] }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: vec![data.len().max(1)], data: if data.is_empty() { vec![0.0] } else { data } }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Numerically stable softmax along `axis`.
pub fn softmax(z: &Array, axis: usize) -> Result<Array, NumericError> {
    let shape = z.shape();
    if axis >= shape.len() {
        return Err(NumericError::Shape {
            op: "softmax",
            detail: format!("axis {axis} out of range for shape {shape:?}"),
        });
    }
    let axis_len = shape[axis];
    if axis_len == 0 {
        return Err(NumericError::Shape { op: "softmax", detail: "empty axis".into() });
    }
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = z.data().to_vec();
    for o in 0..outer {
        for i in 0..inner {
            let base = o * axis_len * inner + i;
            let idx = |k: usize| base + k * inner;
            let max = (0..axis_len).map(|k| z.data()[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in 0..axis_len {
                let e = (z.data()[idx(k)] - max).exp();
                out[idx(k)] = e;
                total += e;
            }
            for k in 0..axis_len {
                out[idx(k)] /= total;
            }
        }
    }
    Array::new(shape.to_vec(), out)
}

/// Softmax of a flat slice, written into `out`.
pub(crate) fn softmax_into(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(z) {
        *o = (x - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn softmax_examples() {
        let s = softmax(&Array::vector(vec![0.0, 0.0]), 0).unwrap();
        assert!(close(s.data(), &[0.5, 0.5]));
        let s = softmax(&Array::vector(vec![0.0, 3f64.ln()]), 0).unwrap();
        assert!(close(s.data(), &[0.25, 0.75]));
        let s = softmax(&Array::vector(vec![1000.0, 1000.0]), 0).unwrap();
        assert!(close(s.data(), &[0.5, 0.5]));
    }

    #[test]
    fn softmax_along_rows_and_columns() {
        let z = Array::new(vec![2, 3], vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]).unwrap();
        let rows = softmax(&z, 1).unwrap();
        let s0: f64 = rows.data()[..3].iter().sum();
        assert!((s0 - 1.0).abs() < 1e-12);
        assert!(close(&rows.data()[3..], &[1.0 / 3.0; 3]));
        let cols = softmax(&z, 0).unwrap();
        for c in 0..3 {
            assert!((cols.data()[c] + cols.data()[3 + c] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rejects_bad_axis() {
        assert!(softmax(&Array::vector(vec![1.0]), 1).is_err());
    }

    #[test]
    fn array_rejects_mismatch_and_nan() {
        assert!(Array::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Array::new(vec![1], vec![f64::NAN]).is_err());
    }
}
