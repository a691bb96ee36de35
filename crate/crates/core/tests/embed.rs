use std::io::Cursor;

use ontorel::artifact::{read_store, verify, write_records, write_store, ArtifactHeader, ArtifactKind, DigestStatus};
use ontorel::embed::{embed_batch, hashing_embed, vector_store_lookup, BackendDescriptor, HashingBackend, VectorStore};
use ontorel::Error;
use proptest::prelude::*;

#[test]
fn hashing_is_deterministic_and_unit_norm() {
    let a = hashing_embed("Catalytic hydrogenation of CO2", 64).unwrap();
    let b = hashing_embed("catalytic   hydrogenation of co2", 64).unwrap();
    assert_eq!(a, b);
    assert!((a.norm() - 1.0).abs() < 1e-12);
    assert_ne!(a, hashing_embed("hydrogenation catalytic of co2", 64).unwrap());
}

#[test]
fn hashing_rejects_featureless_text() {
    assert!(matches!(hashing_embed("!!! ...", 16), Err(Error::NoFeatures(_))));
    assert!(HashingBackend::new(1).is_err());
}

#[test]
fn embed_batch_checks_inputs() {
    let backend = HashingBackend::new(8).unwrap();
    assert!(embed_batch(&[], &backend).unwrap().is_empty());
    let err = embed_batch(&["ok".into(), "  ".into()], &backend).unwrap_err();
    assert_eq!(err.code(), "invalid_input");
    let v = embed_batch(&["a b".into(), "c d".into()], &backend).unwrap();
    assert!(v.iter().all(|e| e.dim() == 8));
}

#[test]
fn descriptors_parse_and_display() {
    for s in ["hashing:32", "store:vectors.ovs", "remote:http://localhost:8000#768"] {
        let d: BackendDescriptor = s.parse().unwrap();
        assert_eq!(d.to_string(), s);
    }
    for bad in ["hashing:x", "store:", "magic:3"] {
        assert!(bad.parse::<BackendDescriptor>().is_err(), "{bad}");
    }
}

fn sample_store() -> VectorStore {
    let mut store = VectorStore::new(3).unwrap();
    store.insert("b", &[0.25, -1.5, 3.0]).unwrap();
    store.insert("a", &[1.0, 0.0, -0.125]).unwrap();
    store
}

#[test]
fn store_binary_and_text_round_trip() {
    let store = sample_store();
    let mut bin = Vec::new();
    store.write_binary(&mut bin).unwrap();
    let back = VectorStore::read_binary(Cursor::new(&bin)).unwrap();
    let mut text = Vec::new();
    back.write_text(&mut text).unwrap();
    let again = VectorStore::read_text(Cursor::new(&text)).unwrap();
    for s in [&back, &again] {
        assert_eq!(s.len(), 2);
        assert_eq!(s.get_f32("b").unwrap(), &[0.25, -1.5, 3.0]);
    }
    let mut bin2 = Vec::new();
    again.write_binary(&mut bin2).unwrap();
    assert_eq!(bin, bin2);
}

#[test]
fn store_rejects_bad_input() {
    let mut store = VectorStore::new(2).unwrap();
    assert_eq!(store.insert("x", &[1.0]).unwrap_err().code(), "dimension_mismatch");
    assert!(VectorStore::read_binary(Cursor::new(b"NOTAVEC\nxx")).is_err());
    assert!(VectorStore::new(0).is_err());
}

#[test]
fn lookup_keeps_request_order() {
    let store = sample_store();
    let out = vector_store_lookup(&["a".into(), "b".into(), "a".into()], &store).unwrap();
    assert_eq!(out[0], out[2]);
    assert_eq!(out[1].as_slice(), &[0.25, -1.5, 3.0]);
    let err = vector_store_lookup(&["zzz".into()], &store).unwrap_err();
    assert!(matches!(err, Error::UnknownSampleId(ref id) if id == "zzz"));
}

#[test]
fn verify_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.txt");
    std::fs::write(&input, "source").unwrap();
    let path = dir.path().join("out.ndjson");
    let header = ArtifactHeader::new(ArtifactKind::Paragraphs, "test").input(&input).unwrap();
    write_records(&path, header, &[serde_json::json!({"x": 1})]).unwrap();
    assert!(verify(&path).unwrap().ok());

    std::fs::write(&input, "changed").unwrap();
    let report = verify(&path).unwrap();
    assert_eq!(report.body, DigestStatus::Ok);
    assert_eq!(report.inputs[0].1, DigestStatus::Mismatch);
    std::fs::remove_file(&input).unwrap();
    assert_eq!(verify(&path).unwrap().inputs[0].1, DigestStatus::Missing);

    let text = std::fs::read_to_string(&path).unwrap().replace("\"x\":1", "\"x\":2");
    std::fs::write(&path, text).unwrap();
    assert_eq!(verify(&path).unwrap().body, DigestStatus::Mismatch);
}

#[test]
fn store_artifacts_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.ovs");
    let mut store = sample_store();
    write_store(&path, ArtifactHeader::new(ArtifactKind::Vectors, "embed"), &mut store).unwrap();
    let (header, back) = read_store(&path).unwrap();
    assert_eq!(header.records, 2);
    assert_eq!(back.get_f32("a"), store.get_f32("a"));
    assert!(verify(&path).unwrap().ok());

    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    assert_eq!(verify(&path).unwrap().body, DigestStatus::Mismatch);
}

proptest! {
    #[test]
    fn hashing_vectors_are_unit_norm(words in prop::collection::vec("[a-z]{1,10}", 1..40), dim in 2usize..256) {
        let text = words.join(" ");
        match hashing_embed(&text, dim) {
            Ok(v) => {
                prop_assert_eq!(v.dim(), dim);
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            }
            Err(e) => prop_assert!(matches!(e, Error::NoFeatures(_))),
        }
    }

    #[test]
    fn store_round_trips_f32(values in prop::collection::vec(-1e6f32..1e6, 4)) {
        let mut store = VectorStore::new(4).unwrap();
        store.insert_f32("s", &values).unwrap();
        let mut bin = Vec::new();
        store.write_binary(&mut bin).unwrap();
        let back = VectorStore::read_binary(Cursor::new(bin)).unwrap();
        prop_assert_eq!(back.get_f32("s").unwrap(), &values[..]);
    }
}
