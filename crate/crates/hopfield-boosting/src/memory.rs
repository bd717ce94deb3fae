//! Pattern memories and query batches: column-stacked matrices of
//! d-dimensional patterns.

use crate::error::{HbError, Result};
use crate::scalar::{cast, Scalar};
use ndarray::{Array2, ArrayView1, ArrayView2};

/// Tolerance on the unit-norm check for the `normalized` flag.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Column below this norm cannot be normalized.
const ZERO_NORM: f64 = 1e-12;

/// A memory of stored patterns: a `d x N` matrix whose columns are patterns.
///
/// Construction validates that the matrix is nonempty and finite, and
/// detects whether every column is unit-norm (within [`NORM_TOLERANCE`]),
/// setting the `normalized` flag accordingly.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMemory<F: Scalar = f64> {
    data: Array2<F>,
    normalized: bool,
}

impl<F: Scalar> PatternMemory<F> {
    pub fn new(data: Array2<F>) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(HbError::EmptyInput("pattern memory has no columns"));
        }
        if data.nrows() == 0 {
            return Err(HbError::EmptyInput("pattern memory has zero dimension"));
        }
        validate_finite(&data.view(), "pattern memory")?;
        let normalized = all_columns_unit(&data.view());
        Ok(Self { data, normalized })
    }

    /// The `d x N` pattern matrix.
    pub fn data(&self) -> &Array2<F> {
        &self.data
    }

    /// Feature dimension d.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of stored patterns N.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, F> {
        self.data.column(i)
    }

    pub fn view(&self) -> ArrayView2<'_, F> {
        self.data.view()
    }

    /// Largest column norm, the M of the energy constant.
    pub fn max_norm(&self) -> F {
        (0..self.len())
            .map(|i| column_norm(self.column(i)))
            .fold(F::zero(), F::max)
    }

    /// Mean of the stored patterns.
    pub fn mean_pattern(&self) -> ndarray::Array1<F> {
        let inv = F::one() / cast::<F>(self.len() as f64);
        self.data.sum_axis(ndarray::Axis(1)) * inv
    }

    /// New memory from the given columns (repeats allowed). Preserves the
    /// normalized flag without rescanning.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(HbError::EmptyInput("column selection is empty"));
        }
        let mut out = Array2::zeros((self.dim(), indices.len()));
        for (k, &i) in indices.iter().enumerate() {
            out.column_mut(k).assign(&self.data.column(i));
        }
        Ok(Self {
            data: out,
            normalized: self.normalized,
        })
    }

    pub fn into_data(self) -> Array2<F> {
        self.data
    }
}

/// A batch of query patterns, one per column; validated finite.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch<F: Scalar = f64> {
    data: Array2<F>,
}

impl<F: Scalar> QueryBatch<F> {
    pub fn new(data: Array2<F>) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(HbError::EmptyInput("query batch has no columns"));
        }
        validate_finite(&data.view(), "query batch")?;
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, F> {
        self.data.column(i)
    }

    pub fn view(&self) -> ArrayView2<'_, F> {
        self.data.view()
    }

    pub fn into_data(self) -> Array2<F> {
        self.data
    }
}

/// Divides every column by its l2 norm and returns the memory flagged
/// normalized. A column with norm below 1e-12 is rejected, naming its index.
pub fn normalize_columns<F: Scalar>(matrix: &Array2<F>) -> Result<PatternMemory<F>> {
    if matrix.ncols() == 0 {
        return Err(HbError::EmptyInput("matrix has no columns"));
    }
    validate_finite(&matrix.view(), "matrix")?;
    let mut out = matrix.clone();
    for i in 0..out.ncols() {
        let norm = column_norm(out.column(i));
        if norm < cast::<F>(ZERO_NORM) {
            return Err(HbError::ZeroNormColumn {
                index: i,
                norm: norm.to_f64().unwrap_or(0.0),
            });
        }
        let inv = F::one() / norm;
        out.column_mut(i).mapv_inplace(|v| v * inv);
    }
    Ok(PatternMemory {
        data: out,
        normalized: true,
    })
}

pub(crate) fn column_norm<F: Scalar>(col: ArrayView1<'_, F>) -> F {
    col.fold(F::zero(), |acc, &v| acc + v * v).sqrt()
}

pub(crate) fn is_unit<F: Scalar>(col: ArrayView1<'_, F>) -> bool {
    (column_norm(col) - F::one()).abs() <= cast::<F>(NORM_TOLERANCE)
}

fn all_columns_unit<F: Scalar>(data: &ArrayView2<'_, F>) -> bool {
    (0..data.ncols()).all(|i| is_unit(data.column(i)))
}

pub(crate) fn validate_finite<F: Scalar>(
    data: &ArrayView2<'_, F>,
    what: &'static str,
) -> Result<()> {
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(HbError::NonFinite { what, index });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn normalize_three_four_column() {
        let m: Array2<f64> = array![[3.0], [4.0]];
        let mem = normalize_columns(&m).unwrap();
        assert!((mem.column(0)[0] - 0.6).abs() < 1e-15);
        assert!((mem.column(0)[1] - 0.8).abs() < 1e-15);
        assert!(mem.is_normalized());
    }

    #[test]
    fn normalize_is_idempotent() {
        let m: Array2<f64> = array![[0.3, -1.5], [2.0, 0.7], [-0.4, 0.1]];
        let once = normalize_columns(&m).unwrap();
        let twice = normalize_columns(once.data()).unwrap();
        for (a, b) in once.data().iter().zip(twice.data().iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn already_unit_column_unchanged() {
        let m: Array2<f64> = array![[1.0], [0.0]];
        let mem = normalize_columns(&m).unwrap();
        assert!((mem.column(0)[0] - 1.0).abs() <= 1e-12);
        assert!((mem.column(0)[1]).abs() <= 1e-12);
    }

    #[test]
    fn zero_norm_column_rejected_with_index() {
        let m: Array2<f64> = array![[1.0, 0.0], [0.0, 0.0]];
        match normalize_columns(&m) {
            Err(HbError::ZeroNormColumn { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected ZeroNormColumn, got {other:?}"),
        }
    }

    #[test]
    fn normalized_flag_detected_on_construction() {
        let unit: Array2<f64> = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(PatternMemory::new(unit).unwrap().is_normalized());
        let raw: Array2<f64> = array![[2.0, 0.0], [0.0, 1.0]];
        assert!(!PatternMemory::new(raw).unwrap().is_normalized());
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert!(PatternMemory::<f64>::new(Array2::zeros((3, 0))).is_err());
        let m = array![[1.0, f64::NAN]];
        assert!(matches!(
            PatternMemory::new(m),
            Err(HbError::NonFinite { .. })
        ));
    }

    #[test]
    fn select_keeps_flag_and_columns() {
        let m = normalize_columns::<f64>(&array![[1.0, 0.0, 3.0], [0.0, 2.0, 4.0]]).unwrap();
        let sub = m.select(&[2, 0, 2]).unwrap();
        assert_eq!(sub.len(), 3);
        assert!(sub.is_normalized());
        assert_eq!(sub.column(0), m.column(2));
        assert_eq!(sub.column(1), m.column(0));
    }
}
