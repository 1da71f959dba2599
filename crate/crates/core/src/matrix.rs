//! Row-major design matrix with named columns.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("{values} values cannot fill {rows} rows of {cols} columns")]
    Shape {
        rows: usize,
        cols: usize,
        values: usize,
    },
    #[error("column `{0}` already present")]
    DuplicateColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(columns: Vec<String>, n_rows: usize, values: Vec<f64>) -> Result<Self, MatrixError> {
        if values.len() != n_rows * columns.len() {
            return Err(MatrixError::Shape {
                rows: n_rows,
                cols: columns.len(),
                values: values.len(),
            });
        }
        Ok(Self {
            columns,
            n_rows,
            values,
        })
    }

    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let cols = columns.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(MatrixError::Shape {
                rows: rows.len(),
                cols,
                values: bad.len(),
            });
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(columns, rows.len(), values)
    }

    /// Columns named `f0, f1, ...`.
    pub fn anonymous(n_cols: usize, n_rows: usize, values: Vec<f64>) -> Result<Self, MatrixError> {
        Self::new(
            (0..n_cols).map(|i| format!("f{i}")).collect(),
            n_rows,
            values,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.columns.len();
        &self.values[r * c..(r + 1) * c]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.columns.len() + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let n = self.columns.len();
        self.values[r * n + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, c)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        DesignMatrix {
            columns: self.columns.clone(),
            n_rows: rows.len(),
            values,
        }
    }

    /// Copy with one more column appended on the right.
    pub fn with_column(
        &self,
        name: impl Into<String>,
        values: &[f64],
    ) -> Result<DesignMatrix, MatrixError> {
        let name = name.into();
        if self.columns.contains(&name) {
            return Err(MatrixError::DuplicateColumn(name));
        }
        if values.len() != self.n_rows {
            return Err(MatrixError::Shape {
                rows: self.n_rows,
                cols: self.n_cols() + 1,
                values: values.len(),
            });
        }
        let mut out = Vec::with_capacity(self.values.len() + self.n_rows);
        for (r, v) in values.iter().enumerate() {
            out.extend_from_slice(self.row(r));
            out.push(*v);
        }
        let mut columns = self.columns.clone();
        columns.push(name);
        Ok(DesignMatrix {
            columns,
            n_rows: self.n_rows,
            values: out,
        })
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
