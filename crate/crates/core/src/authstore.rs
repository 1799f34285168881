//! Signed tuple storage: ingestion, HMAC signing, tamper detection, and the
//! owner's retained sample sketch.
//!
//! Every tuple gets a consecutive id starting at 1 and an HMAC-SHA-256 code
//! over a canonical encoding of `(id, values)`. The owner keeps a uniform
//! with-replacement sample of the relation (the sketch) for cheap local
//! verification, and can refresh it through a dummy-id exchange that hides
//! which ids it actually cares about.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::seed_rng;

/// Byte placed between fields of the canonical encoding.
const FIELD_SEP: u8 = 0x1f;
/// Byte terminating a canonical record.
const RECORD_END: u8 = 0x1e;

/// Ordered attribute names. All attribute values are signed 64-bit integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<String>,
}

impl Schema {
    pub fn new<S: Into<String>>(attributes: Vec<S>) -> Result<Self> {
        let attributes: Vec<String> = attributes.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.clone()) {
                return Err(Error::DuplicateAttribute(a.clone()));
            }
        }
        Ok(Schema { attributes })
    }

    pub fn index_of(&self, attr: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.to_string()))
    }

    pub fn width(&self) -> usize {
        self.attributes.len()
    }
}

/// A row with its assigned id and 32-byte authentication code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedTuple {
    pub id: u64,
    pub values: Vec<i64>,
    pub mac: [u8; 32],
}

/// A fully signed relation: ids are exactly 1..=n in ingestion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRelation {
    pub schema: Schema,
    pub tuples: Vec<SignedTuple>,
}

/// The owner's uniform with-replacement sample of `k` tuple copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSketch {
    /// `(id, values)` pairs; duplicates permitted.
    pub entries: Vec<(u64, Vec<i64>)>,
    pub k: usize,
    /// Population size N of the source relation.
    pub n: u64,
    pub seed: u64,
}

/// Canonical encoding of `(id, values)`: decimal text fields separated by
/// 0x1F, terminated by 0x1E. Injective because neither byte occurs in the
/// decimal text of an integer.
pub fn canonical_encode(id: u64, values: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + values.len() * 8);
    out.extend_from_slice(id.to_string().as_bytes());
    for v in values {
        out.push(FIELD_SEP);
        out.extend_from_slice(v.to_string().as_bytes());
    }
    out.push(RECORD_END);
    out
}

/// HMAC-SHA-256 per RFC 2104: block size 64, opad 0x5c, ipad 0x36.
pub fn hmac(key: &[u8], message: &[u8]) -> Result<[u8; 32]> {
    if key.is_empty() {
        return Err(Error::InvalidKey);
    }
    const BLOCK: usize = 64;
    let mut key_block = [0u8; BLOCK];
    if key.len() > BLOCK {
        let digest = Sha256::digest(key);
        key_block[..32].copy_from_slice(&digest);
    } else {
        key_block[..key.len()].copy_from_slice(key);
    }

    let mut ipad = [0x36u8; BLOCK];
    let mut opad = [0x5cu8; BLOCK];
    for i in 0..BLOCK {
        ipad[i] ^= key_block[i];
        opad[i] ^= key_block[i];
    }

    let mut inner = Sha256::new();
    inner.update(ipad);
    inner.update(message);
    let inner_digest = inner.finalize();

    let mut outer = Sha256::new();
    outer.update(opad);
    outer.update(inner_digest);
    let mut out = [0u8; 32];
    out.copy_from_slice(&outer.finalize());
    Ok(out)
}

/// Constant-time comparison of two 32-byte codes.
fn ct_eq(a: &[u8; 32], b: &[u8; 32]) -> bool {
    let mut diff = 0u8;
    for i in 0..32 {
        diff |= a[i] ^ b[i];
    }
    diff == 0
}

/// Signs raw rows into a relation, assigning ids 1..=N in input order.
pub fn sign_relation(schema: Schema, rows: Vec<Vec<i64>>, key: &[u8]) -> Result<SignedRelation> {
    if key.is_empty() {
        return Err(Error::InvalidKey);
    }
    let width = schema.width();
    let mut tuples = Vec::with_capacity(rows.len());
    for (i, values) in rows.into_iter().enumerate() {
        if values.len() != width {
            return Err(Error::SchemaMismatch {
                row: i,
                got: values.len(),
                expected: width,
            });
        }
        let id = (i + 1) as u64;
        let mac = hmac(key, &canonical_encode(id, &values))?;
        tuples.push(SignedTuple { id, values, mac });
    }
    Ok(SignedRelation { schema, tuples })
}

/// True iff the tuple's MAC verifies under `key` for its canonical encoding.
pub fn verify_tuple(tuple: &SignedTuple, key: &[u8]) -> bool {
    match hmac(key, &canonical_encode(tuple.id, &tuple.values)) {
        Ok(expected) => ct_eq(&expected, &tuple.mac),
        Err(_) => false,
    }
}

impl SignedRelation {
    pub fn n(&self) -> u64 {
        self.tuples.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Tuple with the given id (ids are consecutive from 1).
    pub fn get(&self, id: u64) -> Option<&SignedTuple> {
        if id >= 1 && id <= self.n() {
            Some(&self.tuples[(id - 1) as usize])
        } else {
            None
        }
    }

    /// Ids of tuples whose MACs fail under `key`.
    pub fn failing_ids(&self, key: &[u8]) -> Vec<u64> {
        self.tuples
            .iter()
            .filter(|t| !verify_tuple(t, key))
            .map(|t| t.id)
            .collect()
    }

    pub fn verify_all(&self, key: &[u8]) -> bool {
        self.tuples.iter().all(|t| verify_tuple(t, key))
    }
}

/// Draws `k` uniform with-replacement samples of the relation's tuples.
pub fn draw_sketch(relation: &SignedRelation, k: usize, seed: u64) -> Result<SampleSketch> {
    if relation.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if k == 0 {
        return Err(Error::Parameter("sketch size k must be >= 1".into()));
    }
    let n = relation.n();
    let mut rng = seed_rng(seed);
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let id = rng.random_range(1..=n);
        let tuple = relation.get(id).expect("id in range");
        entries.push((id, tuple.values.clone()));
    }
    Ok(SampleSketch { entries, k, n, seed })
}

/// A party that serves tuples by id. The honest implementation is a view of
/// the signed relation; tests model withholding and tampering servers.
pub trait TupleServer {
    /// Returns whatever tuples the server chooses to hand back for `ids`.
    fn fetch(&self, ids: &[u64]) -> Vec<SignedTuple>;
}

impl TupleServer for SignedRelation {
    fn fetch(&self, ids: &[u64]) -> Vec<SignedTuple> {
        ids.iter().filter_map(|&id| self.get(id).cloned()).collect()
    }
}

/// Refreshes sketch entries by requesting `requested` ids mixed with `dummy`
/// ids. The combined request is sorted and deduplicated so the server cannot
/// tell which ids feed the sketch. Every returned tuple's MAC is checked and
/// every requested id must be present.
pub fn resample_exchange(
    server: &dyn TupleServer,
    n: u64,
    requested: &[u64],
    dummy: &[u64],
    key: &[u8],
) -> Result<Vec<(u64, Vec<i64>)>> {
    for &id in requested.iter().chain(dummy.iter()) {
        if id < 1 || id > n {
            return Err(Error::IdOutOfRange(id, n));
        }
    }
    let combined: BTreeSet<u64> = requested.iter().chain(dummy.iter()).copied().collect();
    let request: Vec<u64> = combined.into_iter().collect();
    let returned = server.fetch(&request);

    let mut by_id = std::collections::BTreeMap::new();
    for tuple in returned {
        if !verify_tuple(&tuple, key) {
            return Err(Error::Tamper(tuple.id));
        }
        by_id.insert(tuple.id, tuple);
    }
    let mut refreshed = Vec::with_capacity(requested.len());
    for &id in requested {
        match by_id.get(&id) {
            Some(t) => refreshed.push((id, t.values.clone())),
            None => return Err(Error::WithheldTuple(id)),
        }
    }
    Ok(refreshed)
}

/// Reads an unsigned CSV: header row is the schema, every cell an integer.
pub fn read_csv<R: Read>(reader: R) -> Result<(Schema, Vec<Vec<i64>>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    let schema = Schema::new(headers)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row: std::result::Result<Vec<i64>, _> =
            record.iter().map(|s| s.trim().parse::<i64>()).collect();
        let row = row.map_err(|e| Error::Parameter(format!("non-integer cell: {e}")))?;
        rows.push(row);
    }
    Ok((schema, rows))
}

pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<(Schema, Vec<Vec<i64>>)> {
    read_csv(std::fs::File::open(path)?)
}

/// Writes an unsigned CSV with the schema as header.
pub fn write_csv<W: Write>(writer: W, schema: &Schema, rows: &[Vec<i64>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(&schema.attributes)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the signed form: `id` column first, schema columns, then a
/// trailing `mac` column holding lowercase hex of the 32-byte code.
pub fn write_signed_csv<W: Write>(writer: W, relation: &SignedRelation) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(relation.schema.attributes.iter().cloned());
    header.push("mac".to_string());
    wtr.write_record(&header)?;
    for t in &relation.tuples {
        let mut record = vec![t.id.to_string()];
        record.extend(t.values.iter().map(|v| v.to_string()));
        record.push(hex_lower(&t.mac));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the signed CSV form back into a relation. MACs are parsed, not
/// verified; call [`SignedRelation::verify_all`] to check them.
pub fn read_signed_csv<R: Read>(reader: R) -> Result<SignedRelation> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if headers.first().map(String::as_str) != Some("id")
        || headers.last().map(String::as_str) != Some("mac")
    {
        return Err(Error::Parameter(
            "signed CSV must have `id` first and `mac` last".into(),
        ));
    }
    let schema = Schema::new(headers[1..headers.len() - 1].to_vec())?;
    let width = schema.width();
    let mut tuples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != width + 2 {
            return Err(Error::SchemaMismatch {
                row: i,
                got: record.len().saturating_sub(2),
                expected: width,
            });
        }
        let id: u64 = record[0]
            .trim()
            .parse()
            .map_err(|e| Error::Parameter(format!("bad id: {e}")))?;
        let values: std::result::Result<Vec<i64>, _> = (1..=width)
            .map(|j| record[j].trim().parse::<i64>())
            .collect();
        let values = values.map_err(|e| Error::Parameter(format!("non-integer cell: {e}")))?;
        let mac = parse_hex32(record[width + 1].trim())?;
        tuples.push(SignedTuple { id, values, mac });
    }
    for (i, t) in tuples.iter().enumerate() {
        if t.id != (i + 1) as u64 {
            return Err(Error::Parameter(format!(
                "ids must be consecutive from 1, found {} at row {}",
                t.id, i
            )));
        }
    }
    Ok(SignedRelation { schema, tuples })
}

pub fn read_signed_csv_path<P: AsRef<Path>>(path: P) -> Result<SignedRelation> {
    read_signed_csv(std::fs::File::open(path)?)
}

pub fn hex_lower(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn parse_hex32(s: &str) -> Result<[u8; 32]> {
    if s.len() != 64 {
        return Err(Error::Parameter(format!("mac hex must be 64 chars, got {}", s.len())));
    }
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
            .map_err(|e| Error::Parameter(format!("bad mac hex: {e}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> Vec<u8> {
        vec![0xaa; 32]
    }

    fn small_relation() -> SignedRelation {
        let schema = Schema::new(vec!["a", "b"]).unwrap();
        sign_relation(
            schema,
            vec![vec![2, 10], vec![4, 20], vec![6, 30]],
            &key(),
        )
        .unwrap()
    }

    // RFC 4231 test case 1.
    #[test]
    fn hmac_rfc4231_case1() {
        let k = [0x0bu8; 20];
        let mac = hmac(&k, b"Hi There").unwrap();
        assert_eq!(
            hex_lower(&mac),
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"
        );
    }

    // RFC 4231 test case 2: key shorter than the block, text "what do ya want
    // for nothing?".
    #[test]
    fn hmac_rfc4231_case2() {
        let mac = hmac(b"Jefe", b"what do ya want for nothing?").unwrap();
        assert_eq!(
            hex_lower(&mac),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    // RFC 4231 test case 6 exercises the key > block-size path.
    #[test]
    fn hmac_rfc4231_case6_long_key() {
        let k = [0xaau8; 131];
        let mac = hmac(&k, b"Test Using Larger Than Block-Size Key - Hash Key First").unwrap();
        assert_eq!(
            hex_lower(&mac),
            "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"
        );
    }

    #[test]
    fn hmac_deterministic_and_bit_sensitive() {
        let k = [0x0bu8; 20];
        let a = hmac(&k, b"Hi There").unwrap();
        let b = hmac(&k, b"Hi There").unwrap();
        assert_eq!(a, b);
        // one bit flipped in the message
        let c = hmac(&k, b"Hi Thera").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hmac_rejects_empty_key() {
        assert!(matches!(hmac(b"", b"m"), Err(Error::InvalidKey)));
    }

    #[test]
    fn sign_assigns_consecutive_ids_and_verifies() {
        let rel = small_relation();
        assert_eq!(rel.n(), 3);
        for (i, t) in rel.tuples.iter().enumerate() {
            assert_eq!(t.id, (i + 1) as u64);
            assert!(verify_tuple(t, &key()));
        }
    }

    #[test]
    fn sign_empty_relation() {
        let schema = Schema::new(vec!["a"]).unwrap();
        let rel = sign_relation(schema, vec![], &key()).unwrap();
        assert_eq!(rel.n(), 0);
    }

    #[test]
    fn sign_rejects_width_mismatch() {
        let schema = Schema::new(vec!["a", "b"]).unwrap();
        let err = sign_relation(schema, vec![vec![1]], &key()).unwrap_err();
        assert!(matches!(err, Error::SchemaMismatch { .. }));
    }

    #[test]
    fn tampering_value_fails_verification() {
        let mut rel = small_relation();
        rel.tuples[1].values[0] ^= 1; // single bit flip
        assert!(!verify_tuple(&rel.tuples[1], &key()));
        assert_eq!(rel.failing_ids(&key()), vec![2]);
    }

    #[test]
    fn tampering_id_fails_verification() {
        let mut rel = small_relation();
        rel.tuples[0].id += 1;
        assert!(!verify_tuple(&rel.tuples[0], &key()));
    }

    #[test]
    fn zeroed_mac_fails_verification() {
        let mut rel = small_relation();
        rel.tuples[2].mac = [0u8; 32];
        assert!(!verify_tuple(&rel.tuples[2], &key()));
    }

    #[test]
    fn sketch_single_element_population() {
        let schema = Schema::new(vec!["a"]).unwrap();
        let rel = sign_relation(schema, vec![vec![42]], &key()).unwrap();
        let sketch = draw_sketch(&rel, 5, 1).unwrap();
        assert_eq!(sketch.entries.len(), 5);
        assert!(sketch.entries.iter().all(|(id, v)| *id == 1 && v == &[42]));
    }

    #[test]
    fn sketch_deterministic_under_seed() {
        let rel = small_relation();
        let a = draw_sketch(&rel, 100, 9).unwrap();
        let b = draw_sketch(&rel, 100, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sketch_rejects_empty_relation() {
        let schema = Schema::new(vec!["a"]).unwrap();
        let rel = sign_relation(schema, vec![], &key()).unwrap();
        assert!(matches!(draw_sketch(&rel, 3, 0), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn resample_honest_server() {
        let rel = small_relation();
        let entries = resample_exchange(&rel, rel.n(), &[3, 2], &[1], &key()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0], (3, vec![6, 30]));
        assert_eq!(entries[1], (2, vec![4, 20]));
    }

    #[test]
    fn resample_detects_withholding() {
        struct Withholder(SignedRelation, u64);
        impl TupleServer for Withholder {
            fn fetch(&self, ids: &[u64]) -> Vec<SignedTuple> {
                ids.iter()
                    .filter(|&&id| id != self.1)
                    .filter_map(|&id| self.0.get(id).cloned())
                    .collect()
            }
        }
        let rel = small_relation();
        let n = rel.n();
        let server = Withholder(rel, 3);
        let err = resample_exchange(&server, n, &[3, 2], &[1], &key()).unwrap_err();
        assert!(matches!(err, Error::WithheldTuple(3)));
    }

    #[test]
    fn resample_detects_tampering() {
        struct Tamperer(SignedRelation);
        impl TupleServer for Tamperer {
            fn fetch(&self, ids: &[u64]) -> Vec<SignedTuple> {
                let mut out = self.0.fetch(ids);
                for t in &mut out {
                    if t.id == 2 {
                        t.values[1] += 1000;
                    }
                }
                out
            }
        }
        let rel = small_relation();
        let n = rel.n();
        let server = Tamperer(rel);
        let err = resample_exchange(&server, n, &[2], &[1, 3], &key()).unwrap_err();
        assert!(matches!(err, Error::Tamper(2)));
    }

    #[test]
    fn resample_rejects_out_of_range_ids() {
        let rel = small_relation();
        let err = resample_exchange(&rel, rel.n(), &[9], &[], &key()).unwrap_err();
        assert!(matches!(err, Error::IdOutOfRange(9, 3)));
    }

    #[test]
    fn signed_csv_round_trip() {
        let rel = small_relation();
        let mut buf = Vec::new();
        write_signed_csv(&mut buf, &rel).unwrap();
        let back = read_signed_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rel);
        assert!(back.verify_all(&key()));
    }

    #[test]
    fn unsigned_csv_round_trip() {
        let schema = Schema::new(vec!["x", "y"]).unwrap();
        let rows = vec![vec![-1, 2], vec![3, -4]];
        let mut buf = Vec::new();
        write_csv(&mut buf, &schema, &rows).unwrap();
        let (s2, r2) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(s2, schema);
        assert_eq!(r2, rows);
    }
}
