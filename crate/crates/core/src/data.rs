use crate::error::{check_finite, Error, Result};

/// `n` paired observations stored row-major: `xs` is `n x dim_x`, `ys` is `n x dim_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    dim_x: usize,
    dim_y: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSample {
    pub fn new(dim_x: usize, dim_y: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidParameter(
                "dimensions must be positive".into(),
            ));
        }
        if !xs.len().is_multiple_of(dim_x)
            || !ys.len().is_multiple_of(dim_y)
            || xs.len() / dim_x != ys.len() / dim_y
        {
            return Err(Error::InvalidParameter(format!(
                "xs ({} values, dim {dim_x}) and ys ({} values, dim {dim_y}) have different row counts",
                xs.len(),
                ys.len()
            )));
        }
        check_finite(&xs, "xs")?;
        check_finite(&ys, "ys")?;
        Ok(Self {
            dim_x,
            dim_y,
            xs,
            ys,
        })
    }

    pub(crate) fn zeros(dim_x: usize, dim_y: usize, n: usize) -> Self {
        Self {
            dim_x,
            dim_y,
            xs: vec![0.0; n * dim_x],
            ys: vec![0.0; n * dim_y],
        }
    }

    pub fn from_rows(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<Self> {
        let dim_x = xs.first().map_or(1, Vec::len);
        let dim_y = ys.first().map_or(1, Vec::len);
        if xs.iter().any(|r| r.len() != dim_x) || ys.iter().any(|r| r.len() != dim_y) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        Self::new(dim_x, dim_y, xs.concat(), ys.concat())
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.dim_x
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim_x..(i + 1) * self.dim_x]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.dim_y..(i + 1) * self.dim_y]
    }

    pub(crate) fn buffers_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.xs, &mut self.ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Column `j` of the concatenated `(x, y)` row.
    pub fn column(&self, j: usize) -> Vec<f64> {
        if j < self.dim_x {
            self.xs
                .iter()
                .skip(j)
                .step_by(self.dim_x)
                .copied()
                .collect()
        } else {
            let j = j - self.dim_x;
            self.ys
                .iter()
                .skip(j)
                .step_by(self.dim_y)
                .copied()
                .collect()
        }
    }

    /// Rows `order[0], order[1], ...` of `ys` paired with the original `xs`.
    pub fn with_permuted_y(&self, order: &[usize]) -> Self {
        let mut ys = Vec::with_capacity(self.ys.len());
        for &i in order {
            ys.extend_from_slice(self.y(i));
        }
        Self {
            dim_x: self.dim_x,
            dim_y: self.dim_y,
            xs: self.xs.clone(),
            ys,
        }
    }

    /// Subsample of rows `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            dim_x: self.dim_x,
            dim_y: self.dim_y,
            xs: self.xs[range.start * self.dim_x..range.end * self.dim_x].to_vec(),
            ys: self.ys[range.start * self.dim_y..range.end * self.dim_y].to_vec(),
        }
    }

    /// Applies `f` to each column of the concatenated row; used by standardization.
    pub(crate) fn map_columns(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let (dx, dy) = (self.dim_x, self.dim_y);
        for row in self.xs.chunks_mut(dx) {
            for (j, v) in row.iter_mut().enumerate() {
                f(j, v);
            }
        }
        for row in self.ys.chunks_mut(dy) {
            for (j, v) in row.iter_mut().enumerate() {
                f(dx + j, v);
            }
        }
    }
}
