use basket_core::{container, generate, CodecId, CompressionSettings, DatasetProfile, Level, PreconditionerKind};

#[test]
fn readme_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("nano.cbkt");
    let tree = generate(&DatasetProfile::jagged_proxy())?;
    let settings = CompressionSettings::new(CodecId::Lz4, Level::new(1)?)
        .with_preconditioner_kind(PreconditionerKind::BitShuffle, 4);
    let per_branch = vec![settings; tree.schema().len()];
    container::write_file(&path, &tree, &per_branch, 32 * 1024)?;
    assert_eq!(container::read_file(&path)?, tree);
    Ok(())
}
