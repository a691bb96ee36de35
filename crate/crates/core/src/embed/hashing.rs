use crate::error::{Error, Result};
use crate::types::EmbeddingVector;

use super::EmbeddingBackend;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Signed feature hashing of lowercase unigrams and bigrams into `dim`
/// buckets, L2-normalized. Bucket is `h mod dim`, sign is the top bit of `h`.
pub fn hashing_embed(text: &str, dim: usize) -> Result<EmbeddingVector> {
    if dim < 2 {
        return Err(Error::param("dim", "hashing backend needs dim >= 2"));
    }
    let tokens = tokens(text);
    if tokens.is_empty() {
        return Err(Error::NoFeatures(text.to_string()));
    }
    let mut values = vec![0.0f64; dim];
    let mut add = |feature: &[u8]| {
        let h = fnv1a(feature);
        let bucket = (h % dim as u64) as usize;
        values[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    };
    for token in &tokens {
        let mut feature = b"u:".to_vec();
        feature.extend_from_slice(token.as_bytes());
        add(&feature);
    }
    for pair in tokens.windows(2) {
        let mut feature = b"b:".to_vec();
        feature.extend_from_slice(pair[0].as_bytes());
        feature.push(b' ');
        feature.extend_from_slice(pair[1].as_bytes());
        add(&feature);
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Every feature cancelled against an opposite-signed collision.
        return Err(Error::NoFeatures(text.to_string()));
    }
    for v in &mut values {
        *v /= norm;
    }
    EmbeddingVector::new(values)
}

/// Deterministic offline backend used in tests and small experiments.
#[derive(Debug, Clone)]
pub struct HashingBackend {
    dim: usize,
}

impl HashingBackend {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param("dim", "hashing backend needs dim >= 2"));
        }
        Ok(HashingBackend { dim })
    }
}

impl EmbeddingBackend for HashingBackend {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts.iter().map(|t| hashing_embed(t, self.dim)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn order_matters_through_bigrams() {
        let ab = hashing_embed("a b", 64).unwrap();
        let ba = hashing_embed("b a", 64).unwrap();
        assert_ne!(ab, ba);
        // Same unigram multiset: only the bigram bucket differs.
        let diff = ab
            .as_slice()
            .iter()
            .zip(ba.as_slice())
            .filter(|(x, y)| x != y)
            .count();
        assert!(diff <= 2);
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        assert_eq!(
            hashing_embed("Catalyst, SUPPORT!", 16).unwrap(),
            hashing_embed("catalyst support", 16).unwrap()
        );
    }

    #[test]
    fn no_tokens_is_error() {
        assert!(matches!(hashing_embed("--- !!", 16), Err(Error::NoFeatures(_))));
        assert!(hashing_embed("x", 1).is_err());
    }

    #[test]
    fn unit_norm() {
        for text in ["a", "the quick brown fox", "CO2 methanation over Ni/Al2O3"] {
            let v = hashing_embed(text, 7).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }
}
