//! Abelianized models of subgroups of direct products of free groups built
//! from binary arrays, with exact k-tuple surjection analysis, binary code
//! invariants, nilpotent-numerics bounds and a search for small witnesses.

pub mod combos;
pub mod f2codes;
pub mod nilpotent_numerics;
pub mod projection_analysis;
pub mod search;
pub mod sigma_model;
pub mod zlattice;

/// Serializes a `BigUint` as a decimal string so that JSON readers never
/// lose precision.
pub(crate) mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<BigUint>().map_err(D::Error::custom)
    }
}
