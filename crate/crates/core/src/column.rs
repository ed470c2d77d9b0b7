//! Logical data model and column-wise serialization.
//!
//! A [`Tree`] is a set of branches (columns) sharing the same number of
//! entries (rows). Each branch is serialized into [`Basket`]s: a data region
//! holding the big-endian element bytes and, for jagged branches, an offset
//! region of cumulative `u32` end offsets into the data region.
//!
//! ```text
//! entries:  [a] [b c] [] [d]        (elem_width = 1)
//! data:     a b c d
//! offsets:  00000001 00000003 00000003 00000004
//! ```

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Default basket size target used by the container writer and the benchmarks.
pub const DEFAULT_BASKET_BYTES: usize = 32 * 1024;

/// Width in bytes of an offset-region value.
pub const OFFSET_WIDTH: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColumnError {
    #[error("entry {entry}: value {value:#x} does not fit in {width} byte(s)")]
    ValueOutOfRange {
        entry: usize,
        value: u64,
        width: usize,
    },
    #[error("column has no entries")]
    EmptyInput,
    #[error("malformed offsets: {0}")]
    MalformedOffsets(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("column kind does not match branch `{0}`")]
    KindMismatch(String),
    #[error("basket data region exceeds 4 GiB")]
    BasketTooLarge,
    #[error("invalid element width {0} (expected 1, 2, 4 or 8)")]
    InvalidWidth(u8),
    #[error("branch name must not be empty")]
    EmptyName,
    #[error("duplicate branch name `{0}`")]
    DuplicateBranch(String),
    #[error("schema must contain at least one branch")]
    EmptySchema,
}

/// Byte width of a serialized element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Width {
    W1,
    W2,
    W4,
    W8,
}

impl Width {
    pub const ALL: [Width; 4] = [Width::W1, Width::W2, Width::W4, Width::W8];

    pub const fn bytes(self) -> usize {
        match self {
            Width::W1 => 1,
            Width::W2 => 2,
            Width::W4 => 4,
            Width::W8 => 8,
        }
    }

    /// Largest unsigned value representable at this width.
    pub const fn max_value(self) -> u64 {
        match self {
            Width::W8 => u64::MAX,
            w => (1u64 << (8 * w.bytes())) - 1,
        }
    }
}

impl TryFrom<u8> for Width {
    type Error = ColumnError;

    fn try_from(bytes: u8) -> Result<Self, Self::Error> {
        match bytes {
            1 => Ok(Width::W1),
            2 => Ok(Width::W2),
            4 => Ok(Width::W4),
            8 => Ok(Width::W8),
            other => Err(ColumnError::InvalidWidth(other)),
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bytes())
    }
}

/// Layout of one branch's entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// One unsigned value per entry.
    FixedScalar(Width),
    /// A variable-length array of unsigned values per entry.
    JaggedArray(Width),
}

impl ElementKind {
    pub fn width(self) -> Width {
        match self {
            ElementKind::FixedScalar(w) | ElementKind::JaggedArray(w) => w,
        }
    }

    pub fn is_jagged(self) -> bool {
        matches!(self, ElementKind::JaggedArray(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchDescriptor {
    pub name: String,
    pub element: ElementKind,
}

impl BranchDescriptor {
    pub fn new(name: impl Into<String>, element: ElementKind) -> Result<Self, ColumnError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ColumnError::EmptyName);
        }
        Ok(Self { name, element })
    }

    pub fn fixed(name: impl Into<String>, width: Width) -> Result<Self, ColumnError> {
        Self::new(name, ElementKind::FixedScalar(width))
    }

    pub fn jagged(name: impl Into<String>, elem_width: Width) -> Result<Self, ColumnError> {
        Self::new(name, ElementKind::JaggedArray(elem_width))
    }
}

/// Ordered, non-empty list of uniquely named branches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    branches: Vec<BranchDescriptor>,
}

impl Schema {
    pub fn new(branches: Vec<BranchDescriptor>) -> Result<Self, ColumnError> {
        if branches.is_empty() {
            return Err(ColumnError::EmptySchema);
        }
        let mut seen = HashSet::new();
        for b in &branches {
            if b.name.is_empty() {
                return Err(ColumnError::EmptyName);
            }
            if !seen.insert(b.name.as_str()) {
                return Err(ColumnError::DuplicateBranch(b.name.clone()));
            }
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[BranchDescriptor] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.name == name)
    }
}

/// Entry values of one branch. Signed and floating point values are carried
/// as their raw bit patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Scalars(Vec<u64>),
    Arrays(Vec<Vec<u64>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Scalars(v) => v.len(),
            Column::Arrays(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serialized data-region size of entry `i` at `width`.
    pub fn entry_bytes(&self, i: usize, width: Width) -> usize {
        match self {
            Column::Scalars(_) => width.bytes(),
            Column::Arrays(v) => v[i].len() * width.bytes(),
        }
    }

    fn matches(&self, kind: ElementKind) -> bool {
        matches!(
            (self, kind),
            (Column::Scalars(_), ElementKind::FixedScalar(_))
                | (Column::Arrays(_), ElementKind::JaggedArray(_))
        )
    }

    fn extend(&mut self, other: Column) -> bool {
        match (self, other) {
            (Column::Scalars(a), Column::Scalars(b)) => a.extend(b),
            (Column::Arrays(a), Column::Arrays(b)) => a.extend(b),
            _ => return false,
        }
        true
    }
}

/// A schema plus one column per branch, all with the same entry count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    schema: Schema,
    columns: Vec<Column>,
}

impl Tree {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self, ColumnError> {
        if columns.len() != schema.len() {
            return Err(ColumnError::LengthMismatch(format!(
                "{} columns for {} branches",
                columns.len(),
                schema.len()
            )));
        }
        let n = columns[0].len();
        for (branch, column) in schema.branches().iter().zip(&columns) {
            if !column.matches(branch.element) {
                return Err(ColumnError::KindMismatch(branch.name.clone()));
            }
            if column.len() != n {
                return Err(ColumnError::LengthMismatch(format!(
                    "branch `{}` has {} entries, expected {}",
                    branch.name,
                    column.len(),
                    n
                )));
            }
        }
        Ok(Self { schema, columns })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_entries(&self) -> usize {
        self.columns[0].len()
    }

    pub fn into_parts(self) -> (Schema, Vec<Column>) {
        (self.schema, self.columns)
    }
}

/// Uncompressed chunk of one branch covering `n_entries` entries starting at
/// `first_entry`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basket {
    pub first_entry: u64,
    pub n_entries: u32,
    pub data: Vec<u8>,
    /// Cumulative end offsets, present iff the branch is jagged.
    pub offsets: Option<Vec<u8>>,
}

impl Basket {
    /// Decodes the offset region into entry end offsets.
    pub fn offset_values(&self) -> Option<Vec<u32>> {
        self.offsets.as_ref().map(|o| {
            o.chunks_exact(OFFSET_WIDTH)
                .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect()
        })
    }

    pub fn uncompressed_len(&self) -> usize {
        self.data.len() + self.offsets.as_ref().map_or(0, Vec::len)
    }
}

fn push_be(out: &mut Vec<u8>, value: u64, width: Width) {
    out.extend_from_slice(&value.to_be_bytes()[8 - width.bytes()..]);
}

fn read_be(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b))
}

fn check_value(entry: usize, value: u64, width: Width) -> Result<(), ColumnError> {
    if value > width.max_value() {
        return Err(ColumnError::ValueOutOfRange {
            entry,
            value,
            width: width.bytes(),
        });
    }
    Ok(())
}

/// Serializes a whole column into a single basket.
pub fn serialize_column(
    values: &Column,
    branch: &BranchDescriptor,
    first_entry: u64,
) -> Result<Basket, ColumnError> {
    if values.is_empty() {
        return Err(ColumnError::EmptyInput);
    }
    serialize_range(values, 0..values.len(), branch, first_entry)
}

fn serialize_range(
    values: &Column,
    range: Range<usize>,
    branch: &BranchDescriptor,
    first_entry: u64,
) -> Result<Basket, ColumnError> {
    let n_entries = u32::try_from(range.len()).map_err(|_| ColumnError::BasketTooLarge)?;
    match (values, branch.element) {
        (Column::Scalars(v), ElementKind::FixedScalar(width)) => {
            let mut data = Vec::with_capacity(range.len() * width.bytes());
            for i in range {
                check_value(i, v[i], width)?;
                push_be(&mut data, v[i], width);
            }
            if data.len() > u32::MAX as usize {
                return Err(ColumnError::BasketTooLarge);
            }
            Ok(Basket {
                first_entry,
                n_entries,
                data,
                offsets: None,
            })
        }
        (Column::Arrays(v), ElementKind::JaggedArray(width)) => {
            let mut data = Vec::new();
            let mut offsets = Vec::with_capacity(range.len() * OFFSET_WIDTH);
            for i in range {
                for &x in &v[i] {
                    check_value(i, x, width)?;
                    push_be(&mut data, x, width);
                }
                let end = u32::try_from(data.len()).map_err(|_| ColumnError::BasketTooLarge)?;
                offsets.extend_from_slice(&end.to_be_bytes());
            }
            Ok(Basket {
                first_entry,
                n_entries,
                data,
                offsets: Some(offsets),
            })
        }
        _ => Err(ColumnError::KindMismatch(branch.name.clone())),
    }
}

/// Inverse of [`serialize_column`].
pub fn deserialize_column(
    basket: &Basket,
    branch: &BranchDescriptor,
) -> Result<Column, ColumnError> {
    let n = basket.n_entries as usize;
    match branch.element {
        ElementKind::FixedScalar(width) => {
            if basket.offsets.is_some() {
                return Err(ColumnError::MalformedOffsets(
                    "offset region present for a fixed-width branch".into(),
                ));
            }
            let expected = n * width.bytes();
            if basket.data.len() != expected {
                return Err(ColumnError::LengthMismatch(format!(
                    "data is {} bytes, expected {n} x {width} = {expected}",
                    basket.data.len()
                )));
            }
            Ok(Column::Scalars(
                basket
                    .data
                    .chunks_exact(width.bytes())
                    .map(read_be)
                    .collect(),
            ))
        }
        ElementKind::JaggedArray(width) => {
            let raw = basket.offsets.as_ref().ok_or_else(|| {
                ColumnError::MalformedOffsets("missing offset region for a jagged branch".into())
            })?;
            if raw.len() != n * OFFSET_WIDTH {
                return Err(ColumnError::LengthMismatch(format!(
                    "offset region is {} bytes, expected {}",
                    raw.len(),
                    n * OFFSET_WIDTH
                )));
            }
            let ends = basket.offset_values().unwrap_or_default();
            let mut start = 0usize;
            let mut out = Vec::with_capacity(n);
            for (i, &end) in ends.iter().enumerate() {
                let end = end as usize;
                if end < start {
                    return Err(ColumnError::MalformedOffsets(format!(
                        "offset {i} ({end}) is below its predecessor ({start})"
                    )));
                }
                if end > basket.data.len() {
                    return Err(ColumnError::MalformedOffsets(format!(
                        "offset {i} ({end}) is past the data region ({} bytes)",
                        basket.data.len()
                    )));
                }
                let entry = &basket.data[start..end];
                if !entry.len().is_multiple_of(width.bytes()) {
                    return Err(ColumnError::LengthMismatch(format!(
                        "entry {i} is {} bytes, not a multiple of {width}",
                        entry.len()
                    )));
                }
                out.push(entry.chunks_exact(width.bytes()).map(read_be).collect());
                start = end;
            }
            if start != basket.data.len() {
                return Err(ColumnError::LengthMismatch(format!(
                    "last offset {start} does not close the {}-byte data region",
                    basket.data.len()
                )));
            }
            Ok(Column::Arrays(out))
        }
    }
}

/// Splits a column into baskets whose data region stays within
/// `target_basket_bytes`. An entry larger than the target gets a basket of
/// its own.
pub fn basketize(
    values: &Column,
    branch: &BranchDescriptor,
    target_basket_bytes: usize,
) -> Result<Vec<Basket>, ColumnError> {
    if values.is_empty() {
        return Err(ColumnError::EmptyInput);
    }
    let width = branch.element.width();
    let mut baskets = Vec::new();
    let mut start = 0usize;
    let mut fill = 0usize;
    for i in 0..values.len() {
        let size = values.entry_bytes(i, width);
        if i > start && (fill + size > target_basket_bytes || i - start == u32::MAX as usize) {
            baskets.push(serialize_range(values, start..i, branch, start as u64)?);
            start = i;
            fill = 0;
        }
        fill += size;
    }
    baskets.push(serialize_range(
        values,
        start..values.len(),
        branch,
        start as u64,
    )?);
    Ok(baskets)
}

/// Reassembles a column from its baskets, checking entry contiguity.
pub fn unbasketize(baskets: &[Basket], branch: &BranchDescriptor) -> Result<Column, ColumnError> {
    let mut out = match branch.element {
        ElementKind::FixedScalar(_) => Column::Scalars(Vec::new()),
        ElementKind::JaggedArray(_) => Column::Arrays(Vec::new()),
    };
    for basket in baskets {
        if basket.first_entry != out.len() as u64 {
            return Err(ColumnError::LengthMismatch(format!(
                "basket starts at entry {}, expected {}",
                basket.first_entry,
                out.len()
            )));
        }
        let part = deserialize_column(basket, branch)?;
        if !out.extend(part) {
            return Err(ColumnError::KindMismatch(branch.name.clone()));
        }
    }
    Ok(out)
}
