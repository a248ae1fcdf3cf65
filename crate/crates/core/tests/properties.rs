//! Property tests over generated queries.

use cypher_equiv::decide::{decide, DecideConfig, Outcome};
use cypher_equiv::frontend::{parse_checked, print};
use cypher_equiv::gen::{random_pair, random_query, GenConfig, QuerySpec, Render};
use cypher_equiv::normalize::normalize;
use cypher_equiv::oracle::{differential_check, evaluate, DiffOutcome, OracleConfig, PropertyGraph, ResultBag};
use cypher_equiv::pairfile::{Expect, PairEntry, PairFile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_oracle() -> OracleConfig {
    OracleConfig { exhaustive_budget: 400, samples: 100, ..OracleConfig::default() }
}

fn fast_decide() -> DecideConfig {
    DecideConfig {
        oracle: OracleConfig { exhaustive_budget: 300, samples: 50, ..OracleConfig::default() },
        ..DecideConfig::default()
    }
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let (text, q) = random_query(&mut rng(seed), &GenConfig::default());
        let printed = print(&q);
        let again = parse_checked(&printed);
        prop_assert!(again.is_ok(), "{text}\n{printed}\n{again:?}");
        prop_assert_eq!(again.unwrap(), q);
    }

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>()) {
        let (text, q) = random_query(&mut rng(seed), &GenConfig::default());
        let once = normalize(&q).unwrap();
        let twice = normalize(&once.ast).unwrap();
        prop_assert!(twice.trace.is_empty(), "{text}\n{:?}", twice.trace);
        prop_assert_eq!(twice.ast, once.ast);
    }

    #[test]
    fn renamed_spellings_normalize_identically(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = QuerySpec::random(&mut r, &GenConfig::default());
        let a = spec.render(&Render::default());
        let b = spec.render(&Render { rename: true, ..Render::default() });
        if let (Ok(qa), Ok(qb)) = (parse_checked(&a), parse_checked(&b)) {
            prop_assert_eq!(normalize(&qa).unwrap().ast, normalize(&qb).unwrap().ast, "{}\n{}", a, b);
        }
    }

    #[test]
    fn pair_file_round_trips(seeds in proptest::collection::vec(any::<u64>(), 0..6), expects in proptest::collection::vec(0u8..3, 6)) {
        let entries: Vec<PairEntry> = seeds.iter().enumerate().map(|(i, &s)| {
            let (q1, q2, _) = random_pair(&mut rng(s), &GenConfig::default());
            let expect = [Expect::Equivalent, Expect::NonEquivalent, Expect::Unspecified][expects[i] as usize];
            PairEntry { id: format!("p{i}"), q1, q2, expect, meta: vec![("note".into(), format!("seed {s}"))] }
        }).collect();
        let file = PairFile { entries };
        let back = PairFile::parse(&file.to_string()).unwrap();
        prop_assert_eq!(back, file);
    }
}

proptest! {
    #![proptest_config(cases(60))]

    #[test]
    fn normalize_preserves_results(seed in any::<u64>()) {
        let (text, q) = random_query(&mut rng(seed), &GenConfig::default());
        let n = normalize(&q).unwrap();
        let out = differential_check(&q, &n.ast, &small_oracle()).unwrap();
        prop_assert!(!out.is_counterexample(), "{text}\n{}\n{out:?}", print(&n.ast));
    }

    #[test]
    fn union_is_deduplicated_union_all(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cfg = GenConfig { max_arity: 1, ..GenConfig::simple() };
        let (a, qa) = random_query(&mut r, &cfg);
        let (b, qb) = random_query(&mut r, &cfg);
        if qa.is_union() || qb.is_union() {
            return Ok(());
        }
        let (Ok(all), Ok(set)) = (parse_checked(&format!("{a} UNION ALL {b}")), parse_checked(&format!("{a} UNION {b}"))) else {
            return Ok(());
        };
        for g in small_oracle().graphs(&[&all, &set]).take(200) {
            if let (Ok(x), Ok(y)) = (evaluate(&all, &g), evaluate(&set, &g)) {
                let dedup = ResultBag { columns: x.columns, rows: x.support(), ordered: false };
                prop_assert!(dedup.same_as(&y), "{a} / {b}\n{g}");
            }
        }
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn decide_is_symmetric_and_deterministic(seed in any::<u64>()) {
        let (q1, q2, _) = random_pair(&mut rng(seed), &GenConfig::simple());
        let cfg = fast_decide();
        let ab = decide(&q1, &q2, &cfg).unwrap();
        let ba = decide(&q2, &q1, &cfg).unwrap();
        let again = decide(&q1, &q2, &cfg).unwrap();
        prop_assert_eq!(ab.outcome, ba.outcome, "{}\n{}\n{:?}\n{:?}", q1, q2, ab.reason, ba.reason);
        prop_assert_eq!(ab.outcome, again.outcome);
    }

    #[test]
    fn not_equivalent_witness_replays(seed in any::<u64>()) {
        let (q1, q2, _) = random_pair(&mut rng(seed), &GenConfig::simple());
        let v = decide(&q1, &q2, &fast_decide()).unwrap();
        if v.outcome == Outcome::NotEquivalent {
            let w = v.witness.expect("witness");
            let g = PropertyGraph::parse(&w.graph.to_string()).unwrap();
            let (a, b) = (parse_checked(&q1).unwrap(), parse_checked(&q2).unwrap());
            let out = cypher_equiv::oracle::compare_on(&a, &b, w.mapping.as_deref(), &g).unwrap();
            prop_assert!(matches!(out, Some(DiffOutcome::Counterexample { .. })), "{q1}\n{q2}");
        }
    }
}
