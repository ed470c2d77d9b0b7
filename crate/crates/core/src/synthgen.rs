//! Deterministic synthetic datasets.
//!
//! Two shapes are provided: a flat tree of fixed-width scalars and a jagged
//! tree of short variable-length arrays whose offset regions make up a large
//! share of the serialized bytes. Every branch draws from its own ChaCha8
//! stream seeded from `(seed, branch index)`, so output depends only on the
//! profile.
//!
//! Profiles can be written as `key=value` lines:
//!
//! ```text
//! # offset-heavy proxy
//! kind=jagged
//! events=100000
//! branches=5
//! lambda=3
//! width=4
//! values=gaussian
//! seed=7
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::column::{BranchDescriptor, Column, Schema, Tree, Width};

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How element values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueModel {
    /// Uniform over the full element width.
    Uniform,
    /// Normal variates stored as floats with the low half of the bit pattern
    /// cleared (16 significant bits in a 32-bit field).
    GaussianQuantized,
    /// One value per branch.
    Constant,
}

impl ValueModel {
    pub fn name(self) -> &'static str {
        match self {
            ValueModel::Uniform => "uniform",
            ValueModel::GaussianQuantized => "gaussian",
            ValueModel::Constant => "constant",
        }
    }
}

impl FromStr for ValueModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(ValueModel::Uniform),
            "gaussian" | "gaussian-quantized" => Ok(ValueModel::GaussianQuantized),
            "constant" => Ok(ValueModel::Constant),
            other => Err(format!("unknown value model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetProfile {
    FlatTree {
        n_events: usize,
        n_branches: usize,
        width: Width,
        values: ValueModel,
        seed: u64,
    },
    JaggedTree {
        n_events: usize,
        n_branches: usize,
        /// Mean array length (Poisson).
        lambda: f64,
        elem_width: Width,
        values: ValueModel,
        seed: u64,
    },
}

impl DatasetProfile {
    /// The 2,000-event, 10-branch gaussian tree used for level comparisons.
    pub fn flat_2000() -> Self {
        DatasetProfile::FlatTree {
            n_events: 2000,
            n_branches: 10,
            width: Width::W4,
            values: ValueModel::GaussianQuantized,
            seed: 42,
        }
    }

    /// Offset-heavy jagged tree: 100k events of short float arrays.
    pub fn jagged_proxy() -> Self {
        DatasetProfile::JaggedTree {
            n_events: 100_000,
            n_branches: 5,
            lambda: 3.0,
            elem_width: Width::W4,
            values: ValueModel::GaussianQuantized,
            seed: 7,
        }
    }

    /// Looks up a built-in profile by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "flat2000" | "flat" => Some(Self::flat_2000()),
            "jagged" | "nanoaod" | "jagged-proxy" => Some(Self::jagged_proxy()),
            _ => None,
        }
    }

    pub fn n_events(&self) -> usize {
        match *self {
            DatasetProfile::FlatTree { n_events, .. }
            | DatasetProfile::JaggedTree { n_events, .. } => n_events,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            DatasetProfile::FlatTree { seed, .. } | DatasetProfile::JaggedTree { seed, .. } => seed,
        }
    }

    /// Short identifier used as the dataset column of benchmark reports.
    pub fn id(&self) -> String {
        match *self {
            DatasetProfile::FlatTree {
                n_events,
                n_branches,
                width,
                values,
                seed,
            } => format!(
                "flat-n{n_events}-b{n_branches}-w{width}-{}-s{seed}",
                values.name()
            ),
            DatasetProfile::JaggedTree {
                n_events,
                n_branches,
                lambda,
                elem_width,
                values,
                seed,
            } => format!(
                "jagged-n{n_events}-b{n_branches}-l{lambda}-w{elem_width}-{}-s{seed}",
                values.name()
            ),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let invalid = |m: &str| Err(ProfileError::InvalidProfile(m.to_string()));
        let (n_events, n_branches) = match *self {
            DatasetProfile::FlatTree {
                n_events,
                n_branches,
                ..
            } => (n_events, n_branches),
            DatasetProfile::JaggedTree {
                n_events,
                n_branches,
                lambda,
                ..
            } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return invalid("lambda must be positive and finite");
                }
                (n_events, n_branches)
            }
        };
        if n_events == 0 {
            return invalid("n_events must be at least 1");
        }
        if n_branches == 0 || n_branches > u16::MAX as usize {
            return invalid("n_branches must be in 1..=65535");
        }
        Ok(())
    }

    /// Parses `key=value` lines. Missing keys take the defaults of
    /// [`DatasetProfile::flat_2000`] (or, with `kind=jagged`, of
    /// [`DatasetProfile::jagged_proxy`]).
    pub fn from_config(text: &str) -> Result<Self, ProfileError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ProfileError::Parse {
                line: i + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let jagged = match pairs.iter().find(|(_, k, _)| k == "kind") {
            None => false,
            Some((_, _, v)) if v == "flat" => false,
            Some((_, _, v)) if v == "jagged" => true,
            Some((line, _, v)) => {
                return Err(ProfileError::Parse {
                    line: *line,
                    message: format!("unknown kind `{v}`"),
                })
            }
        };
        let mut profile = if jagged {
            Self::jagged_proxy()
        } else {
            Self::flat_2000()
        };
        for (line, key, value) in &pairs {
            let err = |message: String| ProfileError::Parse {
                line: *line,
                message,
            };
            let num = |v: &str| v.parse::<u64>().map_err(|e| err(format!("`{key}`: {e}")));
            match (key.as_str(), &mut profile) {
                ("kind", _) => {}
                ("events", DatasetProfile::FlatTree { n_events, .. })
                | ("events", DatasetProfile::JaggedTree { n_events, .. }) => {
                    *n_events = num(value)? as usize
                }
                ("branches", DatasetProfile::FlatTree { n_branches, .. })
                | ("branches", DatasetProfile::JaggedTree { n_branches, .. }) => {
                    *n_branches = num(value)? as usize
                }
                ("seed", DatasetProfile::FlatTree { seed, .. })
                | ("seed", DatasetProfile::JaggedTree { seed, .. }) => *seed = num(value)?,
                ("width", DatasetProfile::FlatTree { width: w, .. })
                | ("width", DatasetProfile::JaggedTree { elem_width: w, .. }) => {
                    let bytes =
                        u8::try_from(num(value)?).map_err(|_| err("width out of range".into()))?;
                    *w = Width::try_from(bytes).map_err(|e| err(e.to_string()))?;
                }
                ("values", DatasetProfile::FlatTree { values, .. })
                | ("values", DatasetProfile::JaggedTree { values, .. }) => {
                    *values = value.parse().map_err(err)?
                }
                ("lambda", DatasetProfile::JaggedTree { lambda, .. }) => {
                    *lambda = value.parse().map_err(|e| err(format!("`lambda`: {e}")))?
                }
                (other, _) => return Err(err(format!("unknown key `{other}` for this kind"))),
            }
        }
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_config(&self) -> String {
        match *self {
            DatasetProfile::FlatTree {
                n_events,
                n_branches,
                width,
                values,
                seed,
            } => format!(
                "kind=flat\nevents={n_events}\nbranches={n_branches}\nwidth={width}\nvalues={}\nseed={seed}\n",
                values.name()
            ),
            DatasetProfile::JaggedTree {
                n_events,
                n_branches,
                lambda,
                elem_width,
                values,
                seed,
            } => format!(
                "kind=jagged\nevents={n_events}\nbranches={n_branches}\nlambda={lambda}\nwidth={elem_width}\nvalues={}\nseed={seed}\n",
                values.name()
            ),
        }
    }
}

impl fmt::Display for DatasetProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one branch.
pub fn branch_rng(seed: u64, branch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(branch as u64 + 1)))
}

struct ValueSource {
    model: ValueModel,
    width: Width,
    normal: Normal<f64>,
    constant: u64,
}

impl ValueSource {
    fn new(model: ValueModel, width: Width, branch: usize) -> Self {
        let mean = 25.0 * (branch as f64 + 1.0);
        Self {
            model,
            width,
            normal: Normal::new(mean, mean / 5.0).expect("finite positive sigma"),
            constant: (0x2A + branch as u64) & width.max_value(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self.model {
            ValueModel::Uniform => rng.random::<u64>() & self.width.max_value(),
            ValueModel::Constant => self.constant,
            ValueModel::GaussianQuantized => quantize(self.normal.sample(rng), self.width),
        }
    }
}

/// Keeps the upper half of the float bit pattern for 4- and 8-byte fields;
/// 2-byte fields hold the upper half of an f32 and 1-byte fields the value
/// rounded into 0..=255.
fn quantize(x: f64, width: Width) -> u64 {
    match width {
        Width::W1 => x.round().clamp(0.0, 255.0) as u64,
        Width::W2 => u64::from((x as f32).to_bits() >> 16),
        Width::W4 => u64::from((x as f32).to_bits() & 0xFFFF_0000),
        Width::W8 => x.to_bits() & 0xFFFF_FFFF_0000_0000,
    }
}

/// Generates the tree described by `profile`.
pub fn generate(profile: &DatasetProfile) -> Result<Tree, ProfileError> {
    profile.validate()?;
    let (branches, columns): (Vec<_>, Vec<_>) = match *profile {
        DatasetProfile::FlatTree {
            n_events,
            n_branches,
            width,
            values,
            seed,
        } => (0..n_branches)
            .map(|b| {
                let mut rng = branch_rng(seed, b);
                let src = ValueSource::new(values, width, b);
                let column = Column::Scalars((0..n_events).map(|_| src.draw(&mut rng)).collect());
                (BranchDescriptor::fixed(format!("flat_{b}"), width), column)
            })
            .unzip(),
        DatasetProfile::JaggedTree {
            n_events,
            n_branches,
            lambda,
            elem_width,
            values,
            seed,
        } => {
            let lengths = Poisson::new(lambda)
                .map_err(|e| ProfileError::InvalidProfile(format!("lambda: {e}")))?;
            (0..n_branches)
                .map(|b| {
                    let mut rng = branch_rng(seed, b);
                    let src = ValueSource::new(values, elem_width, b);
                    let column = Column::Arrays(
                        (0..n_events)
                            .map(|_| {
                                let len = lengths.sample(&mut rng) as usize;
                                (0..len).map(|_| src.draw(&mut rng)).collect()
                            })
                            .collect(),
                    );
                    (
                        BranchDescriptor::jagged(format!("jagged_{b}"), elem_width),
                        column,
                    )
                })
                .unzip()
        }
    };
    let branches = branches
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ProfileError::InvalidProfile(e.to_string()))?;
    let schema = Schema::new(branches).map_err(|e| ProfileError::InvalidProfile(e.to_string()))?;
    Tree::new(schema, columns).map_err(|e| ProfileError::InvalidProfile(e.to_string()))
}

/// Small payloads assembled from a fixed pool of record templates, with a
/// few bytes of each record varied. Useful for dictionary experiments: the
/// pool depends only on `pool_seed`, the assembly only on `seed`.
pub fn template_baskets(n: usize, max_len: usize, pool_seed: u64, seed: u64) -> Vec<Vec<u8>> {
    const TEMPLATES: usize = 48;
    const RECORD: usize = 40;
    let mut pool_rng = ChaCha8Rng::seed_from_u64(splitmix64(pool_seed));
    let pool: Vec<[u8; RECORD]> = (0..TEMPLATES)
        .map(|_| {
            let mut t = [0u8; RECORD];
            pool_rng.fill(&mut t[..]);
            t
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x5EED));
    (0..n)
        .map(|_| {
            let len = rng.random_range(max_len / 2..=max_len);
            let mut out = Vec::with_capacity(len);
            while out.len() < len {
                let mut record = pool[rng.random_range(0..TEMPLATES)];
                for _ in 0..3 {
                    let at = rng.random_range(0..RECORD);
                    record[at] = rng.random();
                }
                out.extend_from_slice(&record);
            }
            out.truncate(len);
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::{serialize_column, ElementKind};

    #[test]
    fn flat_2000_shape_and_determinism() {
        let p = DatasetProfile::flat_2000();
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_entries(), 2000);
        assert_eq!(a.schema().len(), 10);
        for branch in a.schema().branches() {
            assert_eq!(branch.element, ElementKind::FixedScalar(Width::W4));
        }
        // low 16 bits cleared
        if let Column::Scalars(v) = &a.columns()[0] {
            assert!(v.iter().all(|x| x & 0xFFFF == 0));
        }
    }

    #[test]
    fn seeds_change_output() {
        let mut p = DatasetProfile::flat_2000();
        let a = generate(&p).unwrap();
        if let DatasetProfile::FlatTree { seed, .. } = &mut p {
            *seed = 43;
        }
        assert_ne!(a, generate(&p).unwrap());
    }

    #[test]
    fn invalid_profiles() {
        let zero_lambda = DatasetProfile::JaggedTree {
            n_events: 10,
            n_branches: 1,
            lambda: 0.0,
            elem_width: Width::W4,
            values: ValueModel::Uniform,
            seed: 1,
        };
        assert!(matches!(
            generate(&zero_lambda),
            Err(ProfileError::InvalidProfile(_))
        ));
        let no_events = DatasetProfile::FlatTree {
            n_events: 0,
            n_branches: 1,
            width: Width::W4,
            values: ValueModel::Uniform,
            seed: 1,
        };
        assert!(matches!(
            generate(&no_events),
            Err(ProfileError::InvalidProfile(_))
        ));
    }

    #[test]
    fn jagged_offsets_are_ragged_cumulative_sums() {
        let p = DatasetProfile::JaggedTree {
            n_events: 100_000,
            n_branches: 5,
            lambda: 3.0,
            elem_width: Width::W4,
            values: ValueModel::GaussianQuantized,
            seed: 7,
        };
        let tree = generate(&p).unwrap();
        for (branch, column) in tree.schema().branches().iter().zip(tree.columns()) {
            let Column::Arrays(entries) = column else {
                panic!("jagged column expected")
            };
            let basket = serialize_column(column, branch, 0).unwrap();
            let offsets = basket.offset_values().unwrap();
            let mut expected = 0u32;
            let mut prev = 0u32;
            let mut strictly_increasing_steps = 0;
            for (entry, &off) in entries.iter().zip(&offsets) {
                expected += 4 * entry.len() as u32;
                assert_eq!(off, expected);
                if off > prev {
                    strictly_increasing_steps += 1;
                }
                prev = off;
            }
            // Poisson(3) gives an empty entry ~5% of the time.
            assert!(strictly_increasing_steps > 90_000);
            assert!(strictly_increasing_steps < 100_000);
        }
    }

    #[test]
    fn config_roundtrip() {
        for p in [DatasetProfile::flat_2000(), DatasetProfile::jagged_proxy()] {
            assert_eq!(DatasetProfile::from_config(&p.to_config()).unwrap(), p);
        }
        let p = DatasetProfile::from_config("kind=jagged\n# comment\nevents = 12\nlambda=0.5\n")
            .unwrap();
        assert_eq!(p.n_events(), 12);
        assert!(matches!(
            DatasetProfile::from_config("kind=flat\nlambda=2\n"),
            Err(ProfileError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            DatasetProfile::from_config("kind=jagged\nlambda=0\n"),
            Err(ProfileError::InvalidProfile(_))
        ));
        assert!(DatasetProfile::from_config("width=3").is_err());
        assert!(DatasetProfile::from_config("nonsense").is_err());
    }

    #[test]
    fn template_baskets_are_bounded_and_seeded() {
        let a = template_baskets(50, 512, 1, 2);
        assert_eq!(a, template_baskets(50, 512, 1, 2));
        assert_ne!(a, template_baskets(50, 512, 1, 3));
        assert!(a.iter().all(|b| (256..=512).contains(&b.len())));
    }

    #[test]
    fn quantize_widths() {
        assert_eq!(quantize(1.0, Width::W4), 0x3F80_0000);
        assert_eq!(quantize(1.0, Width::W2), 0x3F80);
        assert_eq!(quantize(300.0, Width::W1), 255);
        assert_eq!(quantize(1.0, Width::W8), 0x3FF0_0000_0000_0000);
    }
}
