//! Hashed word n-gram features.

use std::collections::BTreeMap;

/// Number of hash bits; the feature space has `2^FEATURE_BITS` buckets.
pub const FEATURE_BITS: u32 = 20;
pub const FEATURE_DIM: usize = 1 << FEATURE_BITS;

const MASK_TOKENS: [&str; 2] = ["XXX", "YYY"];

/// Sparse vector with strictly increasing indices and no zero entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// 64-bit FNV-1a; stable across platforms and releases, unlike `std`'s
/// `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercased alphanumeric words; the mask tokens `XXX` and `YYY` keep
/// their case so they never collide with an ordinary word.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            if MASK_TOKENS.contains(&w) {
                w.to_string()
            } else {
                w.to_lowercase()
            }
        })
        .collect()
}

/// Unigrams and bigrams hashed into [`FEATURE_DIM`] buckets with a sign
/// bit, then L2-normalized.
pub fn featurize(text: &str) -> SparseVector {
    let words = words(text);
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    let mut add = |feature: String| {
        let h = fnv1a(feature.as_bytes());
        let idx = (h & (FEATURE_DIM as u64 - 1)) as u32;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        *acc.entry(idx).or_insert(0.0) += sign;
    };
    for w in &words {
        add(format!("u:{w}"));
    }
    for pair in words.windows(2) {
        add(format!("b:{} {}", pair[0], pair[1]));
    }
    let mut entries: Vec<(u32, f64)> = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
    let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, v) in &mut entries {
            *v /= norm;
        }
    }
    SparseVector { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn masked_sentence_has_five_features() {
        let v = featurize("XXX contains YYY");
        assert_eq!(v.nnz(), 5);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_tokens_keep_case() {
        assert_eq!(words("XXX, xxx and Yyy; YYY."), ["XXX", "xxx", "and", "yyy", "YYY"]);
        assert_ne!(featurize("XXX"), featurize("xxx"));
    }

    #[test]
    fn deterministic() {
        let s = "Olive oil XXX is rich in YYY (hydroxytyrosol).";
        assert_eq!(featurize(s), featurize(s));
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn unit_cosine(s in "[a-zA-Z ]{1,60}") {
            let v = featurize(&s);
            let w = featurize(&s);
            prop_assert_eq!(&v, &w);
            if !v.is_empty() {
                let cos = v.dot(&w) / (v.norm() * w.norm());
                prop_assert!((cos - 1.0).abs() < 1e-12);
            }
        }
    }
}
