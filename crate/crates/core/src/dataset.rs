//! Sample collections over `{0,1}^d`, with optional ground-truth corruption
//! labels kept in a separate type so estimators can never read them.

/// Ground-truth provenance of a sample in a contaminated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Clean,
    Corrupt,
}

/// An ordered collection of binary `d`-vectors, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    d: usize,
    bits: Vec<u8>,
}

impl Dataset {
    pub fn new(d: usize) -> Self {
        Self { d, bits: Vec::new() }
    }

    pub fn with_capacity(d: usize, n: usize) -> Self {
        Self { d, bits: Vec::with_capacity(d * n) }
    }

    pub fn from_rows<'a, I>(d: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let mut data = Self::new(d);
        for row in rows {
            data.push_row(row);
        }
        data
    }

    /// Appends one sample. Panics if the row length differs from `d` or a
    /// value is not 0/1.
    pub fn push_row(&mut self, row: &[u8]) {
        assert_eq!(row.len(), self.d, "sample length must equal the dimension");
        debug_assert!(row.iter().all(|&b| b <= 1));
        self.bits.extend_from_slice(row);
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        if self.d == 0 { 0 } else { self.bits.len() / self.d }
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn row(&self, index: usize) -> &[u8] {
        &self.bits[index * self.d..(index + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks_exact(self.d)
    }

    pub fn clear(&mut self) {
        self.bits.clear();
    }
}

/// A dataset together with one provenance label per row.
///
/// Labels ride along for evaluation only; learning entry points accept a
/// bare [`Dataset`], so the label column has to be dropped explicitly before
/// any estimator can see the data.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub labels: Vec<Provenance>,
}

impl LabeledDataset {
    pub fn new(data: Dataset, labels: Vec<Provenance>) -> Self {
        assert_eq!(data.len(), labels.len(), "one label per sample");
        Self { data, labels }
    }

    pub fn all_clean(data: Dataset) -> Self {
        let labels = vec![Provenance::Clean; data.len()];
        Self { data, labels }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn corrupt_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Provenance::Corrupt).count()
    }
}
