//! Acceptance suite: one test per release criterion, each printing a
//! `[C#] ... PASS` line (visible with `--nocapture`).
//!
//! Every expected value is produced by an independent oracle coded in this
//! file (brute-force ranking, n-gram counting, recursive LCS, a literal
//! transcription of the BM25 formula) or by hand derivation written out in
//! the comments — never by the implementation under test.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use approx::assert_abs_diff_eq;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use style_audit_core::answereval::{
    answer_style_unfairness, correctness_score, per_system_correctness, SystemCorrectness,
};
use style_audit_core::cache::DiskCache;
use style_audit_core::corpus::{QARecord, StyleId, SystemAnswer};
use style_audit_core::rankeval::{audit_query_styles, fractional_ranks, unfairness};
use style_audit_core::scorers::{
    Bm25Index, Bm25Params, EmbedOptions, EmbeddingScorer, MockScorer, MockSpec,
};
use style_audit_core::stylegen::{style_catalog, GenerationConfig};
use style_audit_core::textstats::{bleu, meteor, rouge_l};

// ---------------------------------------------------------------------------
// C1 — Eq.-3 exactness on reduced vectors
// ---------------------------------------------------------------------------

#[test]
fn c1_unfairness_exactness() {
    let start = Instant::now();
    // Hand derivations: [1,2,3] has spread 2 and population std sqrt(2/3);
    // [1,10] has spread 9 and std 4.5; a constant vector has both zero.
    assert_abs_diff_eq!(unfairness(&[1.0, 2.0, 3.0]), 1.632993, epsilon = 1e-6);
    assert_abs_diff_eq!(
        unfairness(&[1.0, 2.0, 3.0]),
        2.0 * (2.0f64 / 3.0).sqrt(),
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(unfairness(&[1.0, 10.0]), 40.5, epsilon = 1e-6);
    assert_abs_diff_eq!(unfairness(&[5.5; 10]), 0.0, epsilon = 1e-12);
    assert!(start.elapsed() < Duration::from_secs(1), "{:?}", start.elapsed());
    println!("[C1] Eq.3 exactness on reduced vectors: PASS");
}

// ---------------------------------------------------------------------------
// C2 — rank engine properties, >= 10^4 randomized cases
// ---------------------------------------------------------------------------

/// Independent fractional-rank oracle: rank(v) = |greater| + (|ties|+1)/2.
fn oracle_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let greater = values.iter().filter(|&&o| o > v).count() as f64;
            let ties = values.iter().filter(|&&o| o == v).count() as f64;
            greater + (ties + 1.0) / 2.0
        })
        .collect()
}

#[test]
fn c2_rank_engine_properties() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5261_6e6b);
    let cases = 10_000;
    for case in 0..cases {
        let n = rng.gen_range(1..=12);
        // Half-integer grid, so ties occur and every monotone transform below
        // stays strictly increasing after f64 rounding.
        let values: Vec<f64> =
            (0..n).map(|_| f64::from(rng.gen_range(-100i32..=100)) / 2.0).collect();
        let ranks = fractional_ranks(&values).unwrap();

        // Rank-sum conservation, exact: ranks are half-integers.
        let sum: f64 = ranks.iter().sum();
        assert_eq!(sum, (n * (n + 1)) as f64 / 2.0, "case {case}: {values:?}");

        // Brute-force tie oracle.
        assert_eq!(ranks, oracle_ranks(&values), "case {case}: {values:?}");

        // Invariance under strictly increasing transforms.
        let affine: Vec<f64> = values.iter().map(|v| 3.5 * v + 11.0).collect();
        let cubic: Vec<f64> = values.iter().map(|v| v.powi(3)).collect();
        let arctan: Vec<f64> = values.iter().map(|v| v.atan()).collect();
        let expish: Vec<f64> = values.iter().map(|v| (v / 100.0).exp()).collect();
        for transformed in [affine, cubic, arctan, expish] {
            assert_eq!(
                fractional_ranks(&transformed).unwrap(),
                ranks,
                "case {case}: {values:?}"
            );
        }
    }
    assert!(start.elapsed() < Duration::from_secs(10), "{:?}", start.elapsed());
    println!("[C2] rank engine properties over {cases} random cases: PASS");
}

// ---------------------------------------------------------------------------
// C3 — golden end-to-end run of the binary, byte-identical across runs
// ---------------------------------------------------------------------------

#[test]
fn c3_golden_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("groups.jsonl");
    common::write_group_corpus(&corpus, 3);
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");

    let start = Instant::now();
    for out in [&out_a, &out_b] {
        let (code, _, stderr) = common::run_bin(&[
            "audit-docs",
            "--corpus",
            corpus.to_str().unwrap(),
            "--scorer",
            "mock:position",
            "--cache-dir",
            dir.path().join("cache").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stderr}");
    }
    let elapsed = start.elapsed();

    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "two runs must be byte-identical");

    let parsed: serde_json::Value = serde_json::from_slice(&bytes_a).unwrap();
    let report = &parsed[0];
    for (i, style) in StyleId::ALL.iter().enumerate() {
        assert_abs_diff_eq!(
            report["avg_ranks"][style.as_str()].as_f64().unwrap(),
            (i + 1) as f64,
            epsilon = 1e-12
        );
    }
    // Hand derivation: spread 10-1 = 9; population std of 1..=10 is
    // sqrt(8.25); unfairness = 9*sqrt(8.25) = 25.85053...
    let expected = 9.0 * 8.25f64.sqrt();
    assert_abs_diff_eq!(report["unfairness"].as_f64().unwrap(), expected, epsilon = 1e-4);
    assert_eq!(report["n_groups"], 3);
    assert!(elapsed < Duration::from_secs(1), "{elapsed:?}");
    println!("[C3] golden audit-docs run (unfairness {expected:.5}, byte-identical): PASS");
}

// ---------------------------------------------------------------------------
// C4 — bias-direction sanity on controlled mocks
// ---------------------------------------------------------------------------

#[test]
fn c4_bias_direction_sanity() {
    let start = Instant::now();
    let groups = {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("groups.jsonl");
        common::write_group_corpus(&path, 4);
        style_audit_core::corpus::load_groups(&path).unwrap()
    };

    // A bump toward style_3 must make it the unique best (minimal) rank.
    let scorer = MockScorer::new(MockSpec::parse("hash+bump=style_3:2").unwrap());
    let report =
        style_audit_core::rankeval::audit_document_styles(&groups, &scorer, StyleId::Original)
            .unwrap();
    let style3 = report.avg_ranks.mean_ranks[&StyleId::Style3];
    for style in StyleId::ALL {
        if style != StyleId::Style3 {
            assert!(
                report.avg_ranks.mean_ranks[&style] > style3,
                "style_3 must be uniquely best"
            );
        }
    }
    assert!(report.unfairness > 0.0);

    // A bump following the query's style tag must reproduce style matching:
    // each sweep row's best document style equals that row's query style.
    let scorer = MockScorer::new(MockSpec::parse("hash+bump=query:2").unwrap());
    let matrix = audit_query_styles(&groups, &scorer).unwrap();
    assert_eq!(matrix.rows.len(), 10);
    for (query_style, row) in &matrix.rows {
        let best = row
            .avg_ranks
            .mean_ranks
            .iter()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(style, _)| *style)
            .unwrap();
        assert_eq!(best, *query_style, "row {query_style}");
    }
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
    println!("[C4] bias-direction sanity (fixed bump and style matching): PASS");
}

// ---------------------------------------------------------------------------
// C5 — BM25 against a literal transcription of the formula
// ---------------------------------------------------------------------------

/// Independent BM25: computed straight from token slices with linear scans,
/// no index, no shared code with the implementation.
fn oracle_bm25(docs: &[Vec<&str>], query: &[&str], doc_id: usize, k1: f64, b: f64) -> f64 {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let doc = &docs[doc_id];
    let dl = doc.len() as f64;
    let mut score = 0.0;
    for term in query {
        let tf = doc.iter().filter(|t| *t == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let df = docs.iter().filter(|d| d.contains(term)).count() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    score
}

fn check_corpus_against_oracle(docs: &[Vec<&str>], queries: &[Vec<&str>], params: Bm25Params) {
    let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
    let index = Bm25Index::build(&texts, params).unwrap();
    for query in queries {
        let query_text = query.join(" ");
        for doc_id in 0..docs.len() {
            let got = index.score(&query_text, doc_id).unwrap();
            let want = oracle_bm25(docs, query, doc_id, params.k1, params.b);
            assert!(
                (got - want).abs() <= 1e-9,
                "docs={docs:?} query={query:?} doc_id={doc_id}: got {got}, want {want}"
            );
            // The text-scoring path must agree with the indexed path.
            let by_text = index.score_text(&query_text, &texts[doc_id]);
            assert!((got - by_text).abs() <= 1e-12);
        }
    }
}

#[test]
fn c5_bm25_oracle_equivalence() {
    let start = Instant::now();
    let params = Bm25Params::default();

    // The ln(2) hand case: |D| = avgdl makes the tf factor cancel, leaving
    // idf = ln(1 + 1.5/1.5) = ln 2.
    let index = Bm25Index::build(&["cat sat", "dog ran"], params).unwrap();
    assert_abs_diff_eq!(
        index.score("cat", 0).unwrap(),
        std::f64::consts::LN_2,
        epsilon = 1e-6
    );

    // Exhaustive over a reduced subspace: every corpus of 1..=3 documents
    // over a 2-term vocabulary with lengths 1..=3, every query of 1..=2
    // terms over the same vocabulary plus one out-of-vocabulary term.
    let vocab = ["a", "b"];
    let mut all_docs: Vec<Vec<&str>> = Vec::new();
    for len in 1..=3usize {
        let count = vocab.len().pow(len as u32);
        for mut code in 0..count {
            let mut doc = Vec::with_capacity(len);
            for _ in 0..len {
                doc.push(vocab[code % vocab.len()]);
                code /= vocab.len();
            }
            all_docs.push(doc);
        }
    }
    let queries: Vec<Vec<&str>> =
        vec![vec!["a"], vec!["b"], vec!["zzz"], vec!["a", "a"], vec!["a", "b"], vec!["b", "b"]];
    let mut exhaustive = 0usize;
    let d = all_docs.len();
    for size in 1..=3usize {
        for mut code in 0..d.pow(size as u32) {
            let mut corpus = Vec::with_capacity(size);
            for _ in 0..size {
                corpus.push(all_docs[code % d].clone());
                code /= d;
            }
            check_corpus_against_oracle(&corpus, &queries, params);
            exhaustive += 1;
        }
    }

    // Randomized over the full stated space: corpora of up to 5 documents
    // from a 6-term vocabulary with lengths up to 4.
    let vocab6 = ["t0", "t1", "t2", "t3", "t4", "t5"];
    let mut rng = StdRng::seed_from_u64(0xB25);
    let random_cases = 10_000;
    for _ in 0..random_cases {
        let n_docs = rng.gen_range(1..=5);
        let docs: Vec<Vec<&str>> = (0..n_docs)
            .map(|_| {
                let len = rng.gen_range(1..=4);
                (0..len).map(|_| vocab6[rng.gen_range(0..vocab6.len())]).collect()
            })
            .collect();
        let query: Vec<&str> = (0..rng.gen_range(1..=3))
            .map(|_| {
                if rng.gen_bool(0.1) {
                    "oov"
                } else {
                    vocab6[rng.gen_range(0..vocab6.len())]
                }
            })
            .collect();
        let k1 = rng.gen_range(0.2..3.0);
        let b = rng.gen_range(0.0..=1.0);
        check_corpus_against_oracle(&docs, &[query], Bm25Params { k1, b });
    }

    assert!(start.elapsed() < Duration::from_secs(60), "{:?}", start.elapsed());
    println!(
        "[C5] bm25 oracle equivalence ({exhaustive} exhaustive + {random_cases} random corpora): PASS"
    );
}

// ---------------------------------------------------------------------------
// C6 — n-gram metrics against brute-force reimplementations
// ---------------------------------------------------------------------------

fn oracle_bleu(reff: &[&str], hyp: &[&str]) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let grams = |toks: &[&str], n: usize| -> Vec<Vec<String>> {
        if toks.len() < n {
            return Vec::new();
        }
        (0..=toks.len() - n)
            .map(|i| toks[i..i + n].iter().map(|t| t.to_string()).collect())
            .collect()
    };
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let hyp_grams = grams(hyp, n);
        let ref_grams = grams(reff, n);
        let mut used = vec![false; ref_grams.len()];
        let mut matched = 0usize;
        for gram in &hyp_grams {
            if let Some(j) = (0..ref_grams.len()).find(|&j| !used[j] && ref_grams[j] == *gram) {
                used[j] = true;
                matched += 1;
            }
        }
        let p = if matched == 0 {
            0.1 / hyp.len() as f64
        } else {
            matched as f64 / hyp_grams.len() as f64
        };
        log_sum += p.ln();
    }
    let bp = if hyp.len() < reff.len() {
        (1.0 - reff.len() as f64 / hyp.len() as f64).exp()
    } else {
        1.0
    };
    bp * (log_sum / 4.0).exp()
}

fn oracle_lcs(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() || b.is_empty() {
        0
    } else if a[0] == b[0] {
        1 + oracle_lcs(&a[1..], &b[1..])
    } else {
        oracle_lcs(&a[1..], b).max(oracle_lcs(a, &b[1..]))
    }
}

fn oracle_rouge_l(reff: &[&str], hyp: &[&str]) -> f64 {
    let lcs = oracle_lcs(reff, hyp);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / hyp.len() as f64;
    let r = lcs as f64 / reff.len() as f64;
    2.0 * p * r / (p + r)
}

/// Independent copy of the suffix-stripping rules.
fn oracle_stem(token: &str) -> String {
    let vowelly = |s: &str| s.chars().any(|c| "aeiouy".contains(c));
    if let Some(base) = token.strip_suffix("sses") {
        return format!("{base}ss");
    }
    if let Some(base) = token.strip_suffix("ies") {
        if base.len() >= 2 {
            return format!("{base}i");
        }
    }
    if token.ends_with("ss") {
        return token.into();
    }
    if let Some(base) = token.strip_suffix("ing") {
        if base.len() >= 3 && vowelly(base) {
            return base.into();
        }
    }
    if let Some(base) = token.strip_suffix("ed") {
        if base.len() >= 3 && vowelly(base) {
            return base.into();
        }
    }
    if let Some(base) = token.strip_suffix('s') {
        if base.len() >= 2 {
            return base.into();
        }
    }
    token.into()
}

fn oracle_meteor(reff: &[&str], hyp: &[&str]) -> f64 {
    if reff.is_empty() || hyp.is_empty() {
        return 0.0;
    }
    let mut ref_used = vec![false; reff.len()];
    let mut hyp_matched = vec![None::<usize>; hyp.len()];
    for (h, token) in hyp.iter().enumerate() {
        if let Some(r) = (0..reff.len()).find(|&r| !ref_used[r] && reff[r] == *token) {
            ref_used[r] = true;
            hyp_matched[h] = Some(r);
        }
    }
    for (h, token) in hyp.iter().enumerate() {
        if hyp_matched[h].is_some() {
            continue;
        }
        let hs = oracle_stem(token);
        if let Some(r) = (0..reff.len()).find(|&r| !ref_used[r] && oracle_stem(reff[r]) == hs) {
            ref_used[r] = true;
            hyp_matched[h] = Some(r);
        }
    }
    let pairs: Vec<(usize, usize)> = hyp_matched
        .iter()
        .enumerate()
        .filter_map(|(h, r)| r.map(|r| (h, r)))
        .collect();
    if pairs.is_empty() {
        return 0.0;
    }
    let m = pairs.len() as f64;
    let p = m / hyp.len() as f64;
    let r = m / reff.len() as f64;
    let fmean = p * r / (0.9 * p + 0.1 * r);
    let mut chunks = 1usize;
    for w in pairs.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }
    fmean * (1.0 - 0.5 * (chunks as f64 / m).powi(3))
}

#[test]
fn c6_metric_oracles() {
    let start = Instant::now();

    // Hand-derived anchors.
    assert_abs_diff_eq!(rouge_l("the cat sat on the mat", "the cat on mat"), 0.8, epsilon = 1e-6);
    assert_abs_diff_eq!(meteor("a b c d", "a b c d"), 0.9921875, epsilon = 1e-6);
    // Bleu hand case: precisions 1, 1, 1, eps = 0.1/3; BP = exp(1 - 6/3).
    let bleu_hand = (1.0f64 - 2.0).exp() * (0.1f64 / 3.0).powf(0.25);
    assert_abs_diff_eq!(bleu("the cat sat on the mat", "the cat sat"), bleu_hand, epsilon = 1e-6);
    // Boundaries.
    assert_abs_diff_eq!(bleu("x y z w", "x y z w"), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(rouge_l("x y z w", "x y z w"), 1.0, epsilon = 1e-12);
    assert_eq!(rouge_l("a b", "c d"), 0.0);
    assert_eq!(meteor("a b", "c d"), 0.0);
    assert_eq!(bleu("a b", ""), 0.0);

    // Brute-force cross-checks on random token sequences of length <= 8.
    let alphabet =
        ["cat", "cats", "dog", "run", "runs", "running", "sat", "walked", "mat", "the"];
    let mut rng = StdRng::seed_from_u64(0x6D65_7472);
    let cases = 1_200;
    for case in 0..cases {
        let draw = |rng: &mut StdRng| -> Vec<&str> {
            let len = rng.gen_range(0..=8);
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
        };
        let ref_tokens = draw(&mut rng);
        let hyp_tokens = draw(&mut rng);
        let ref_text = ref_tokens.join(" ");
        let hyp_text = hyp_tokens.join(" ");

        let got_bleu = bleu(&ref_text, &hyp_text);
        let want_bleu = oracle_bleu(&ref_tokens, &hyp_tokens);
        assert!(
            (got_bleu - want_bleu).abs() <= 1e-9,
            "case {case} bleu: ref={ref_tokens:?} hyp={hyp_tokens:?} {got_bleu} vs {want_bleu}"
        );

        let got_rouge = rouge_l(&ref_text, &hyp_text);
        let want_rouge = oracle_rouge_l(&ref_tokens, &hyp_tokens);
        assert!(
            (got_rouge - want_rouge).abs() <= 1e-9,
            "case {case} rouge: ref={ref_tokens:?} hyp={hyp_tokens:?} {got_rouge} vs {want_rouge}"
        );

        let got_meteor = meteor(&ref_text, &hyp_text);
        let want_meteor = oracle_meteor(&ref_tokens, &hyp_tokens);
        assert!(
            (got_meteor - want_meteor).abs() <= 1e-9,
            "case {case} meteor: ref={ref_tokens:?} hyp={hyp_tokens:?} {got_meteor} vs {want_meteor}"
        );

        for value in [got_bleu, got_rouge, got_meteor] {
            assert!((0.0..=1.0).contains(&value), "case {case}: metric out of [0,1]");
        }
    }

    assert!(start.elapsed() < Duration::from_secs(30), "{:?}", start.elapsed());
    println!("[C6] metric oracles ({cases} random cross-checks + hand anchors): PASS");
}

// ---------------------------------------------------------------------------
// C7 — answer-correctness module
// ---------------------------------------------------------------------------

struct DeterministicEmbedApi;

impl style_audit_core::endpoint::EmbeddingApi for DeterministicEmbedApi {
    fn embed(
        &self,
        _model: &str,
        inputs: &[String],
    ) -> style_audit_core::error::Result<Vec<Vec<f64>>> {
        Ok(inputs.iter().map(|t| common::stub_embedding(t)).collect())
    }
}

#[test]
fn c7_answer_correctness_module() {
    // Identical answer scores exactly 1.0 through a real embedding scorer
    // (cosine self-similarity, clamped).
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::new(dir.path());
    let api = DeterministicEmbedApi;
    let scorer = EmbeddingScorer::new(
        "stub-model".into(),
        "embedding:stub-model".into(),
        &api,
        &cache,
        EmbedOptions::default(),
    );
    let score = correctness_score("Fifty Pills", "Fifty Pills", &scorer).unwrap();
    assert_abs_diff_eq!(score, 1.0, epsilon = 0.0);

    // human_correct filtering: the incorrect answer must not contribute.
    let mut entries = BTreeMap::new();
    entries.insert(("gt".to_string(), "good answer".to_string()), 0.9);
    entries.insert(("gt".to_string(), "bad answer".to_string()), 0.1);
    let table = MockScorer::new(MockSpec::Table { entries, default: 0.5 });
    let records = vec![QARecord {
        question: "q".into(),
        gt_answer: "gt".into(),
        answers: vec![
            SystemAnswer { system_id: "sys".into(), text: "good answer".into(), human_correct: true },
            SystemAnswer { system_id: "sys".into(), text: "bad answer".into(), human_correct: false },
        ],
    }];
    let rows = per_system_correctness(&records, &table, true).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n_answers, 1);
    assert_abs_diff_eq!(rows[0].mean_score, 0.9, epsilon = 1e-12);
    let unfiltered = per_system_correctness(&records, &table, false).unwrap();
    assert_eq!(unfiltered[0].n_answers, 2);

    // Hand case: means [0.7, 0.9] -> spread 0.2 * population std 0.1 = 0.02.
    let rows = vec![
        SystemCorrectness { system_id: "a".into(), mean_score: 0.7, n_answers: 3 },
        SystemCorrectness { system_id: "b".into(), mean_score: 0.9, n_answers: 3 },
    ];
    assert_abs_diff_eq!(answer_style_unfairness(&rows).unwrap(), 0.02, epsilon = 1e-12);
    println!("[C7] answer-correctness module (self-similarity, filtering, 0.02 case): PASS");
}

// ---------------------------------------------------------------------------
// C8 — endpoint smoke: 50 groups, all 10 query styles
// ---------------------------------------------------------------------------

#[test]
fn c8_endpoint_smoke() {
    // An external endpoint can be supplied via STYLE_AUDIT_SMOKE_ENDPOINT
    // (with STYLE_AUDIT_SMOKE_MODEL); otherwise the deterministic local stub
    // serves as the OpenAI-compatible endpoint.
    let external = std::env::var("STYLE_AUDIT_SMOKE_ENDPOINT").ok();
    let stub = if external.is_none() { Some(common::StubServer::spawn()) } else { None };
    let base_url = external
        .clone()
        .unwrap_or_else(|| stub.as_ref().unwrap().base_url.clone());
    let model =
        std::env::var("STYLE_AUDIT_SMOKE_MODEL").unwrap_or_else(|_| "stub-model".into());

    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("groups.jsonl");
    common::write_group_corpus(&corpus, 50);
    let cache_dir = dir.path().join("cache");
    let spec = format!("embedding:{model}@{base_url}");

    let run = |out: &std::path::Path| -> Duration {
        let started = Instant::now();
        let (code, _, stderr) = common::run_bin(&[
            "audit-queries",
            "--corpus",
            corpus.to_str().unwrap(),
            "--scorer",
            &spec,
            "--cache-dir",
            cache_dir.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stderr}");
        started.elapsed()
    };

    let cold = run(&dir.path().join("cold.json"));
    assert!(cold < Duration::from_secs(300), "cold run took {cold:?}");

    let requests_after_cold = stub.as_ref().map(|s| s.request_count());
    let warm_a = run(&dir.path().join("warm_a.json"));
    assert!(warm_a < Duration::from_secs(10), "warm run took {warm_a:?}");
    let warm_b = run(&dir.path().join("warm_b.json"));
    assert!(warm_b < Duration::from_secs(10), "warm rerun took {warm_b:?}");

    if let (Some(stub), Some(before)) = (&stub, requests_after_cold) {
        assert_eq!(stub.request_count(), before, "warm runs must not hit the endpoint");
    }

    let warm_bytes_a = std::fs::read(dir.path().join("warm_a.json")).unwrap();
    let warm_bytes_b = std::fs::read(dir.path().join("warm_b.json")).unwrap();
    assert_eq!(warm_bytes_a, warm_bytes_b, "warm reruns must be byte-identical");
    let cold_bytes = std::fs::read(dir.path().join("cold.json")).unwrap();
    assert_eq!(cold_bytes, warm_bytes_a, "cold and warm agree on a deterministic endpoint");

    let endpoint_kind = if external.is_some() { "external" } else { "local stub" };
    println!(
        "[C8] endpoint smoke on {endpoint_kind} (cold {cold:.2?}, warm {warm_a:.2?}): PASS"
    );
}

// ---------------------------------------------------------------------------
// C9 — protocol fidelity: catalog strings, defaults, BM25 exclusion
// ---------------------------------------------------------------------------

#[test]
fn c9_protocol_fidelity() {
    let catalog = style_catalog();
    let expected: [(StyleId, &str); 9] = [
        (StyleId::Style0, "Please rewrite the following text"),
        (
            StyleId::Style1,
            "Your writing style is formal, efficient, and concise, using professional language and focusing on facts, figures, and data.",
        ),
        (
            StyleId::Style2,
            "Your writing style is clear and using simple language, often avoiding idioms or complex sentences.",
        ),
        (
            StyleId::Style3,
            "Your writing style is informal, often includes emojis, abbreviations, and internet slang.",
        ),
        (
            StyleId::Style4,
            "Your writing style is polite, respectful, and somewhat formal. You use more traditional language and avoid using slang or abbreviations.",
        ),
        (
            StyleId::Style5,
            "Your writing style is formal, detailed, and precise manner with structured texts. You use technical language and focus on evidence-based arguments.",
        ),
        (
            StyleId::Style6,
            "Your writing style is energetic, motivational, and positive manner.",
        ),
        (
            StyleId::Style7,
            "Your writing style is friendly, casual, and empathetic manner with personal anecdotes",
        ),
        (
            StyleId::Style8,
            "Your writing style is expressive and emotive (passionate, engaging, empathetic). You use metaphors, analogies, and storytelling to convey your points.",
        ),
    ];
    assert_eq!(catalog.len(), expected.len());
    for (prompt, (style, text)) in catalog.iter().zip(expected) {
        assert_eq!(prompt.style, style);
        assert_eq!(prompt.instruction.as_bytes(), text.as_bytes(), "{style}");
    }

    // Default generation temperature.
    let config = GenerationConfig::new("any-model");
    assert_abs_diff_eq!(config.temperature, 0.5, epsilon = 0.0);

    // BM25 cannot act as a correctness metric.
    let index = Bm25Index::build(&["some document"], Bm25Params::default()).unwrap();
    let bm25 = style_audit_core::scorers::Bm25Scorer::new(index);
    assert!(correctness_score("gt", "answer", &bm25).is_err());
    println!("[C9] protocol fidelity (catalog bytes, temperature 0.5, bm25 exclusion): PASS");
}
