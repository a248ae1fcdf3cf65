//! Inputs shared by the benchmarks in `benches/`.

use cypher_equiv::pairfile::PairFile;

/// The bundled equivalent pairs.
pub fn positive_pairs() -> PairFile {
    PairFile::parse(include_str!("../../core/tests/data/positive.pairs")).expect("bundled pair file parses")
}
