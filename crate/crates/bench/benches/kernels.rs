use basket_bench::flat_basket;
use basket_core::precondition::{bitshuffle, bitunshuffle, shuffle, unshuffle};
use basket_core::{
    adler32, compress_block, decompress_block, CodecId, CompressionSettings, DictionaryTable,
    Level, PreconditionerKind,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn preconditioners(c: &mut Criterion) {
    let (data, stride) = flat_basket();
    let mut g = c.benchmark_group("precondition");
    g.throughput(Throughput::Bytes(data.len() as u64));
    g.bench_function("shuffle", |b| b.iter(|| shuffle(&data, stride)));
    g.bench_function("unshuffle", |b| b.iter(|| unshuffle(&data, stride)));
    g.bench_function("bitshuffle", |b| b.iter(|| bitshuffle(&data, stride)));
    g.bench_function("bitunshuffle", |b| b.iter(|| bitunshuffle(&data, stride)));
    g.bench_function("adler32", |b| b.iter(|| adler32(&data)));
    g.finish();
}

fn codecs(c: &mut Criterion) {
    let (data, stride) = flat_basket();
    let table = DictionaryTable::new();
    let mut g = c.benchmark_group("block");
    g.throughput(Throughput::Bytes(data.len() as u64));
    for codec in [
        CodecId::Deflate,
        CodecId::Lz4,
        CodecId::Lz4Hc,
        CodecId::Zstd,
    ] {
        for level in [1, 6, 9] {
            let s = CompressionSettings::new(codec, Level::new(level).unwrap())
                .with_preconditioner_kind(PreconditionerKind::Shuffle, stride as u8);
            let id = format!("{}-{level}", codec.name());
            g.bench_with_input(BenchmarkId::new("compress", &id), &s, |b, s| {
                b.iter(|| compress_block(&data, s).unwrap())
            });
            let block = compress_block(&data, &s).unwrap();
            g.bench_with_input(BenchmarkId::new("decompress", &id), &block, |b, block| {
                b.iter(|| decompress_block(block, &table).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, preconditioners, codecs);
criterion_main!(benches);
