//! Inputs shared by the criterion benches.

use basket_core::synthgen::{generate, DatasetProfile, ValueModel};
use basket_core::{basketize, Width};

/// Default basket target, in bytes.
pub const BASKET_BYTES: usize = 32 * 1024;

/// One full basket of gaussian-quantized 4-byte values, plus the element width.
pub fn flat_basket() -> (Vec<u8>, usize) {
    let profile = DatasetProfile::FlatTree {
        n_events: BASKET_BYTES / 4,
        n_branches: 1,
        width: Width::W4,
        values: ValueModel::GaussianQuantized,
        seed: 42,
    };
    let tree = generate(&profile).expect("profile is valid");
    let branch = &tree.schema().branches()[0];
    let baskets = basketize(&tree.columns()[0], branch, BASKET_BYTES).expect("column basketizes");
    let data = baskets.into_iter().next().expect("non-empty column").data;
    (data, branch.element.width().bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_basket_is_full() {
        let (data, width) = flat_basket();
        assert_eq!(width, 4);
        assert_eq!(data.len(), BASKET_BYTES);
    }
}
