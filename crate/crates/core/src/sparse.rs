//! Row-sparse matrices over F_q and Matrix Market coordinate I/O.

use crate::error::{Error, Result};
use crate::gf::{FieldCtx, FieldElem};
use std::io::{BufRead, Write};
use std::sync::Arc;

pub type Row = Vec<(u32, FieldElem)>;

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Row>,
    field: Arc<FieldCtx>,
}

impl PartialEq for SparseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ncols == other.ncols && self.rows == other.rows && *self.field == *other.field
    }
}

impl SparseMatrix {
    pub fn new(field: Arc<FieldCtx>, ncols: usize) -> Self {
        SparseMatrix { ncols, rows: Vec::new(), field }
    }

    pub fn from_rows(field: Arc<FieldCtx>, ncols: usize, rows: Vec<Vec<(usize, FieldElem)>>) -> Result<Self> {
        let mut m = Self::new(field, ncols);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn from_dense(field: Arc<FieldCtx>, ncols: usize, dense: &[Vec<FieldElem>]) -> Result<Self> {
        let rows = dense.iter().map(|r| r.iter().enumerate().map(|(j, &v)| (j, v)).collect()).collect();
        Self::from_rows(field, ncols, rows)
    }

    /// Appends a row given as (column, value) pairs in any order; repeated
    /// columns are summed and zeros dropped.
    pub fn push_row(&mut self, mut entries: Vec<(usize, FieldElem)>) -> Result<()> {
        if let Some(&(j, _)) = entries.iter().find(|e| e.0 >= self.ncols) {
            return Err(Error::BadInput(format!("column {j} out of range 0..{}", self.ncols)));
        }
        if let Some(&(_, v)) = entries.iter().find(|e| e.1.code() >= self.field.q() as usize) {
            return Err(Error::BadInput(format!("{v} is not an element of F_{}", self.field.q())));
        }
        entries.sort_by_key(|e| e.0);
        let mut row: Row = Vec::with_capacity(entries.len());
        for (j, v) in entries {
            match row.last_mut() {
                Some(last) if last.0 as usize == j => last.1 = self.field.add(last.1, v),
                _ => row.push((j as u32, v)),
            }
        }
        row.retain(|e| !e.1.is_zero());
        self.rows.push(row);
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_support_sizes(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_support_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.ncols];
        for r in &self.rows {
            for &(j, _) in r {
                c[j as usize] += 1;
            }
        }
        c
    }

    pub fn to_dense(&self) -> Vec<Vec<FieldElem>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![FieldElem::ZERO; self.ncols];
                for &(j, v) in r {
                    d[j as usize] = v;
                }
                d
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[FieldElem]) -> Result<Vec<FieldElem>> {
        if x.len() != self.ncols {
            return Err(Error::LengthMismatch(x.len(), self.ncols));
        }
        let f = &self.field;
        Ok(self
            .rows
            .iter()
            .map(|r| r.iter().fold(FieldElem::ZERO, |acc, &(j, v)| f.add(acc, f.mul(v, x[j as usize]))))
            .collect())
    }

    /// Sum of all rows.
    pub fn row_sum(&self) -> Vec<FieldElem> {
        let mut s = vec![FieldElem::ZERO; self.ncols];
        for r in &self.rows {
            for &(j, v) in r {
                s[j as usize] = self.field.add(s[j as usize], v);
            }
        }
        s
    }

    /// Same pattern with every stored value replaced by 1, over another field.
    pub fn pattern_over(&self, field: Arc<FieldCtx>) -> SparseMatrix {
        let rows = self.rows.iter().map(|r| r.iter().map(|&(j, _)| (j, FieldElem::ONE)).collect()).collect();
        SparseMatrix { ncols: self.ncols, rows, field }
    }

    /// Writes Matrix Market coordinate format with 1-based indices and
    /// values given as element codes. `comment` lines are prefixed with `%`.
    pub fn write_matrix_market<W: Write>(&self, w: &mut W, comment: &[String]) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate integer general")?;
        writeln!(w, "% q={}", self.field.q())?;
        for c in comment {
            writeln!(w, "% {c}")?;
        }
        writeln!(w, "{} {} {}", self.nrows(), self.ncols, self.nnz())?;
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                writeln!(w, "{} {} {}", i + 1, j + 1, v.0)?;
            }
        }
        Ok(())
    }

    /// Reads what `write_matrix_market` produces. The field is taken from a
    /// `% q=…` comment when present, else from `default_q`.
    pub fn read_matrix_market<R: BufRead>(r: R, default_q: u32) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))??;
        let h = header.to_lowercase();
        if !h.starts_with("%%matrixmarket matrix coordinate") {
            return Err(Error::Parse(format!("unsupported header: {header}")));
        }
        let mut q = default_q;
        let mut dims = None;
        let mut entries: Vec<(usize, usize, u32)> = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('%') {
                for tok in c.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("q=") {
                        q = v.trim_end_matches(',').parse().map_err(|_| Error::Parse(format!("bad q in {t}")))?;
                    }
                }
                continue;
            }
            let nums: Vec<usize> = t
                .split_whitespace()
                .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad line: {t}"))))
                .collect::<Result<_>>()?;
            match (dims, nums.as_slice()) {
                (None, &[m, n, _]) => dims = Some((m, n)),
                (Some((m, n)), &[i, j, v]) if i >= 1 && i <= m && j >= 1 && j <= n => {
                    entries.push((i - 1, j - 1, v as u32))
                }
                _ => return Err(Error::Parse(format!("bad line: {t}"))),
            }
        }
        let (m, n) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
        let field = Arc::new(FieldCtx::new(q)?);
        let mut rows: Vec<Vec<(usize, FieldElem)>> = vec![Vec::new(); m];
        for (i, j, v) in entries {
            rows[i].push((j, field.elem(v)?));
        }
        Self::from_rows(field, n, rows)
    }
}
