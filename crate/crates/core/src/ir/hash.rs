//! Order-insensitive structure digests.
//!
//! The digest is SHA-256 over the canonical form: the single-line text
//! syntax with the slots of every level sorted by name, so `[]` hashes the
//! two bytes `[]`.

use std::fmt;

use sha2::{Digest as _, Sha256};

use super::{text::serialize_value, FeatureStructure, Value};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First 12 hex digits, used in traces.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..6])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.short())
    }
}

fn sorted(v: &Value) -> Value {
    match v {
        Value::Struct(fs) => {
            let mut slots: Vec<_> = fs.iter().map(|(k, v)| (k.clone(), sorted(v))).collect();
            slots.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Struct(FeatureStructure { slots })
        }
        other => other.clone(),
    }
}

/// Canonical text of a structure: slots sorted by name at every level.
pub fn canonical_form(fs: &FeatureStructure) -> String {
    serialize_value(&sorted(&Value::Struct(fs.clone())))
}

pub fn canonical_hash(fs: &FeatureStructure) -> Digest {
    Digest(Sha256::digest(canonical_form(fs).as_bytes()).into())
}

pub(super) fn value_digest(v: &Value) -> Digest {
    Digest(Sha256::digest(serialize_value(&sorted(v)).as_bytes()).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;

    #[test]
    fn order_insensitive() {
        let a = parse_ir("[(A 1) (B 2)]").unwrap();
        let b = parse_ir("[(B 2) (A 1)]").unwrap();
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
    }

    #[test]
    fn empty_digest_is_fixed() {
        // sha256 of the two bytes "[]"
        assert_eq!(
            canonical_hash(&FeatureStructure::new()).to_hex(),
            "4f53cda18c2baa0c0354bb5f9a3ecbe5ed12ab4d8e11ba873c2f11161202b945"
        );
    }
}
