//! Synthetic fixtures for benchmarking the audit pipeline at realistic
//! sizes: paragraph-scale documents, sentence-scale queries.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;

use style_audit_core::corpus::{AuditGroup, StyleId};

const WORDS: &[&str] = &[
    "episode", "comedy", "show", "song", "featured", "segment", "panellist", "expressed",
    "genuine", "dislike", "host", "played", "snippet", "mouthed", "line", "comedian",
    "finished", "lyrics", "chorus", "wedding", "prince", "performed", "june", "beautiful",
    "moment", "story", "heartfelt", "iconic", "appearance", "classic", "nailed", "tidbit",
];

/// Deterministic pseudo-text of `len` words.
pub fn synthetic_text(rng: &mut StdRng, len: usize) -> String {
    (0..len)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// A corpus of `n` complete groups with ~120-word documents and ~12-word
/// queries, the scale of the audits the pipeline is built for.
pub fn synthetic_groups(n: usize, seed: u64) -> Vec<AuditGroup> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|g| {
            let query_variants: BTreeMap<StyleId, String> = StyleId::ALL
                .iter()
                .map(|s| (*s, format!("{} ({s})", synthetic_text(&mut rng, 12))))
                .collect();
            let doc_variants: BTreeMap<StyleId, String> = StyleId::ALL
                .iter()
                .map(|s| {
                    let len = 100 + rng.gen_range(0..40);
                    (*s, synthetic_text(&mut rng, len))
                })
                .collect();
            AuditGroup { group_id: format!("g{g}"), query_variants, doc_variants }
        })
        .collect()
}

/// The document pool of a corpus, in audit order.
pub fn document_pool(groups: &[AuditGroup]) -> Vec<String> {
    groups
        .iter()
        .flat_map(|g| StyleId::ALL.iter().map(|s| g.doc_variants[s].clone()))
        .collect()
}
