use criterion::{criterion_group, criterion_main, Criterion};
use cypher_equiv::decide::{decide, DecideConfig, Outcome};
use cypher_equiv::frontend::parse_checked;
use cypher_equiv::gexpr::{build, simplify};
use cypher_equiv::normalize::normalize;
use cypher_equiv_bench::positive_pairs;

fn stages(c: &mut Criterion) {
    let pairs = positive_pairs();
    let texts: Vec<&str> = pairs.entries.iter().flat_map(|e| [e.q1.as_str(), e.q2.as_str()]).collect();
    let asts: Vec<_> = texts.iter().map(|t| parse_checked(t).unwrap()).collect();
    let normal: Vec<_> = asts.iter().map(|a| normalize(a).unwrap()).collect();

    c.bench_function("parse", |b| b.iter(|| texts.iter().map(|t| parse_checked(t).is_ok() as usize).sum::<usize>()));
    c.bench_function("normalize", |b| b.iter(|| asts.iter().map(|a| normalize(a).unwrap().trace.len()).sum::<usize>()));
    c.bench_function("build+simplify", |b| {
        b.iter(|| normal.iter().filter_map(|n| build(n).ok()).map(|c| simplify(&c.g).to_string().len()).sum::<usize>())
    });
}

fn end_to_end(c: &mut Criterion) {
    let pairs = positive_pairs();
    let cfg = DecideConfig::default();
    let mut g = c.benchmark_group("decide");
    g.sample_size(10);
    g.bench_function("positive suite", |b| {
        b.iter(|| {
            pairs.entries.iter().filter(|e| decide(&e.q1, &e.q2, &cfg).unwrap().outcome == Outcome::Equivalent).count()
        })
    });
    g.finish();
}

criterion_group!(benches, stages, end_to_end);
criterion_main!(benches);
