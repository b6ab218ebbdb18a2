//! Enrichment kinds: per-kind homomorphism witnesses and proximity metrics.
//!
//! A kind's homomorphisms form a finite witness set. Witness `0` is always
//! the identity (byte equality); further witnesses are registered maps.
//! `hom_check(s, s')` holds when some witness sends `s` to `s'`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub const IDENTITY_BYTES: &str = "identity-bytes";
pub const VECTOR_F64: &str = "vector-f64";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnrichmentError {
    #[error("enrichment kind `{0}` is already registered")]
    DuplicateKind(String),
    #[error("unknown enrichment kind `{0}`")]
    UnknownKind(String),
    #[error("enrichment kind `{0}` has no proximity metric")]
    NoMetric(String),
    #[error("malformed `{kind}` payload: {message}")]
    Payload { kind: String, message: String },
}

type WitnessFn = Arc<dyn Fn(&[u8], &[u8]) -> bool + Send + Sync>;
type ProximityFn = Arc<dyn Fn(&[u8], &[u8]) -> Result<f64, String> + Send + Sync>;

#[derive(Clone)]
pub struct EnrichmentKind {
    name: String,
    witnesses: Vec<WitnessFn>,
    proximity: Option<ProximityFn>,
}

impl fmt::Debug for EnrichmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnrichmentKind")
            .field("name", &self.name)
            .field("witnesses", &(self.witnesses.len() + 1))
            .field("metric", &self.proximity.is_some())
            .finish()
    }
}

impl EnrichmentKind {
    /// A kind whose only homomorphism is the identity.
    pub fn new(name: impl Into<String>) -> Self {
        EnrichmentKind {
            name: name.into(),
            witnesses: Vec::new(),
            proximity: None,
        }
    }

    /// Adds a witness: a predicate deciding whether the map sends the first
    /// payload to the second.
    pub fn with_witness(mut self, w: impl Fn(&[u8], &[u8]) -> bool + Send + Sync + 'static) -> Self {
        self.witnesses.push(Arc::new(w));
        self
    }

    pub fn with_proximity(mut self, p: impl Fn(&[u8], &[u8]) -> Result<f64, String> + Send + Sync + 'static) -> Self {
        self.proximity = Some(Arc::new(p));
        self
    }

    pub fn identity_bytes() -> Self {
        EnrichmentKind::new(IDENTITY_BYTES)
    }

    /// Flat `f64` vectors with cosine proximity rescaled to `[0, 1]`; each
    /// matrix (row-major, `rows x cols`) becomes a linear-map witness.
    pub fn vector_f64(name: impl Into<String>, maps: Vec<LinearMap>) -> Self {
        let mut kind = EnrichmentKind::new(name).with_proximity(|a, b| {
            let a = decode_f64s(a).ok_or("payload length is not a multiple of 8")?;
            let b = decode_f64s(b).ok_or("payload length is not a multiple of 8")?;
            cosine_proximity(&a, &b)
        });
        for m in maps {
            kind = kind.with_witness(move |from, to| m.maps(from, to));
        }
        kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of witnesses, counting the identity.
    pub fn witness_count(&self) -> usize {
        self.witnesses.len() + 1
    }

    pub fn maps_via(&self, witness: usize, from: &[u8], to: &[u8]) -> bool {
        match witness {
            0 => from == to,
            w => self.witnesses.get(w - 1).is_some_and(|f| f(from, to)),
        }
    }

    pub fn hom_check(&self, from: &[u8], to: &[u8]) -> bool {
        (0..self.witness_count()).any(|w| self.maps_via(w, from, to))
    }

    pub fn has_metric(&self) -> bool {
        self.proximity.is_some()
    }
}

/// Row-major matrix used as a vector-kind witness.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data does not match its shape");
        LinearMap { rows, cols, data }
    }

    pub fn scaled_identity(n: usize, k: f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = k;
        }
        LinearMap::new(n, n, data)
    }

    pub fn apply(&self, v: &[f64]) -> Option<Vec<f64>> {
        (v.len() == self.cols).then(|| {
            (0..self.rows)
                .map(|r| (0..self.cols).map(|c| self.data[r * self.cols + c] * v[c]).sum())
                .collect()
        })
    }

    pub fn compose(&self, inner: &LinearMap) -> LinearMap {
        assert_eq!(self.cols, inner.rows);
        let mut data = vec![0.0; self.rows * inner.cols];
        for r in 0..self.rows {
            for c in 0..inner.cols {
                data[r * inner.cols + c] = (0..self.cols)
                    .map(|k| self.data[r * self.cols + k] * inner.data[k * inner.cols + c])
                    .sum();
            }
        }
        LinearMap::new(self.rows, inner.cols, data)
    }

    fn maps(&self, from: &[u8], to: &[u8]) -> bool {
        let (Some(a), Some(b)) = (decode_f64s(from), decode_f64s(to)) else {
            return false;
        };
        match self.apply(&a) {
            Some(img) if img.len() == b.len() => {
                img.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()))
            }
            _ => false,
        }
    }
}

pub fn decode_f64s(bytes: &[u8]) -> Option<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    )
}

/// `(cos + 1) / 2`; zero vectors are maximally close only to themselves.
pub fn cosine_proximity(a: &[f64], b: &[f64]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("dimension mismatch: {} vs {}", a.len(), b.len()));
    }
    if a == b {
        return Ok(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.5);
    }
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    Ok((cos + 1.0) / 2.0)
}

#[derive(Debug, Clone, Default)]
pub struct EnrichmentRegistry {
    kinds: BTreeMap<String, Arc<EnrichmentKind>>,
}

impl EnrichmentRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `identity-bytes` and an identity-only `vector-f64`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(EnrichmentKind::identity_bytes()).expect("fresh registry");
        r.register(EnrichmentKind::vector_f64(VECTOR_F64, Vec::new()))
            .expect("fresh registry");
        r
    }

    pub fn register(&mut self, kind: EnrichmentKind) -> Result<(), EnrichmentError> {
        if self.kinds.contains_key(kind.name()) {
            return Err(EnrichmentError::DuplicateKind(kind.name().to_string()));
        }
        self.kinds.insert(kind.name().to_string(), Arc::new(kind));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&EnrichmentKind, EnrichmentError> {
        self.kinds
            .get(name)
            .map(AsRef::as_ref)
            .ok_or_else(|| EnrichmentError::UnknownKind(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.kinds.contains_key(name)
    }

    pub fn hom_check(&self, kind: &str, from: &[u8], to: &[u8]) -> Result<bool, EnrichmentError> {
        Ok(self.get(kind)?.hom_check(from, to))
    }

    pub fn proximity(&self, kind: &str, a: &[u8], b: &[u8]) -> Result<f64, EnrichmentError> {
        let k = self.get(kind)?;
        let metric = k
            .proximity
            .as_ref()
            .ok_or_else(|| EnrichmentError::NoMetric(kind.to_string()))?;
        metric(a, b).map_err(|message| EnrichmentError::Payload {
            kind: kind.to_string(),
            message,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Enrichment;
    use proptest::prelude::*;

    /// Payload bytes with negative zero folded into zero, so that equal
    /// vectors have equal payloads.
    fn vec_bytes(v: &[f64]) -> Vec<u8> {
        let v: Vec<f64> = v.iter().map(|x| x + 0.0).collect();
        Enrichment::from_f64s("x", &v).payload
    }

    #[test]
    fn register_and_duplicates() {
        let mut r = EnrichmentRegistry::new();
        r.register(EnrichmentKind::identity_bytes()).unwrap();
        assert!(r.contains(IDENTITY_BYTES));
        assert_eq!(
            r.register(EnrichmentKind::identity_bytes()),
            Err(EnrichmentError::DuplicateKind(IDENTITY_BYTES.into()))
        );
        r.register(EnrichmentKind::vector_f64(VECTOR_F64, vec![])).unwrap();
        assert!(r.get(VECTOR_F64).unwrap().has_metric());
    }

    #[test]
    fn hom_check_cases() {
        let r = EnrichmentRegistry::with_builtins();
        assert!(r.hom_check(IDENTITY_BYTES, b"x", b"x").unwrap());
        assert!(!r.hom_check(IDENTITY_BYTES, b"x", b"y").unwrap());
        assert_eq!(
            r.hom_check("nope", b"x", b"x"),
            Err(EnrichmentError::UnknownKind("nope".into()))
        );

        let mut r = EnrichmentRegistry::new();
        r.register(EnrichmentKind::vector_f64(
            "lin",
            vec![LinearMap::scaled_identity(2, 2.0)],
        ))
        .unwrap();
        assert!(r
            .hom_check("lin", &vec_bytes(&[1.0, 2.0]), &vec_bytes(&[2.0, 4.0]))
            .unwrap());
        assert!(!r
            .hom_check("lin", &vec_bytes(&[1.0, 2.0]), &vec_bytes(&[2.0, 5.0]))
            .unwrap());
    }

    #[test]
    fn proximity_cases() {
        let r = EnrichmentRegistry::with_builtins();
        let a = vec_bytes(&[1.0, 0.0]);
        let b = vec_bytes(&[0.0, 3.0]);
        assert_eq!(r.proximity(VECTOR_F64, &a, &a).unwrap(), 1.0);
        assert!((r.proximity(VECTOR_F64, &a, &b).unwrap() - 0.5).abs() < 1e-12);
        assert!((r.proximity(VECTOR_F64, &a, &vec_bytes(&[-2.0, 0.0])).unwrap()).abs() < 1e-12);
        assert_eq!(
            r.proximity(IDENTITY_BYTES, &a, &a),
            Err(EnrichmentError::NoMetric(IDENTITY_BYTES.into()))
        );
        assert!(matches!(
            r.proximity(VECTOR_F64, &a, &vec_bytes(&[1.0])),
            Err(EnrichmentError::Payload { .. })
        ));
        assert!(matches!(
            r.proximity("nope", &a, &a),
            Err(EnrichmentError::UnknownKind(_))
        ));
    }

    fn rotation(quarter_turns: u32) -> LinearMap {
        let (c, s) = match quarter_turns % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        LinearMap::new(2, 2, vec![c, -s, s, c])
    }

    proptest! {
        #[test]
        fn identity_law(bytes in prop::collection::vec(any::<u8>(), 0..40)) {
            let r = EnrichmentRegistry::with_builtins();
            prop_assert!(r.hom_check(IDENTITY_BYTES, &bytes, &bytes).unwrap());
            prop_assert!(r.hom_check(VECTOR_F64, &bytes, &bytes).unwrap());
        }

        #[test]
        fn vector_proximity_laws(a in prop::collection::vec(-100i32..100, 3), b in prop::collection::vec(-100i32..100, 3)) {
            let r = EnrichmentRegistry::with_builtins();
            let a = vec_bytes(&a.iter().map(|x| *x as f64).collect::<Vec<_>>());
            let b = vec_bytes(&b.iter().map(|x| *x as f64).collect::<Vec<_>>());
            let ab = r.proximity(VECTOR_F64, &a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, r.proximity(VECTOR_F64, &b, &a).unwrap());
            prop_assert!((r.proximity(VECTOR_F64, &a, &a).unwrap() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn witnesses_compose_in_closed_sets(v in prop::collection::vec(-50i32..50, 2), i in 0u32..4, j in 0u32..4) {
            let kind = EnrichmentKind::vector_f64("rot", (1..4).map(rotation).collect());
            let v: Vec<f64> = v.iter().map(|x| *x as f64).collect();
            let mid = rotation(i).apply(&v).unwrap();
            let end = rotation(j).apply(&mid).unwrap();
            prop_assert!(kind.hom_check(&vec_bytes(&v), &vec_bytes(&mid)));
            prop_assert!(kind.hom_check(&vec_bytes(&mid), &vec_bytes(&end)));
            prop_assert!(kind.hom_check(&vec_bytes(&v), &vec_bytes(&end)));
            let composed = rotation(j).compose(&rotation(i));
            prop_assert_eq!(composed.apply(&v).unwrap(), end);
        }
    }
}
