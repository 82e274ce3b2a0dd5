use mmskit::json::{
    thresholds_from_json, thresholds_json, AllocationJson, InstanceFile, Rat, TranscriptJson,
};
use mmskit_core::generate::{random_instance, random_normalized};
use mmskit_core::numeric::rat;
use mmskit_core::rbf::{guaranteed_thresholds, run_rbf_truthful, RbfConfig};
use mmskit_core::{Allocation, PriorityRanking, ThresholdList};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn instances_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = 1 + (rng.next_u32() % 5) as usize;
        let m = n + (rng.next_u32() % 6) as usize;
        let s = random_normalized(&mut rng, n, m, n, 9).unwrap();
        let text = serde_json::to_string(&InstanceFile::from_instance(&s.instance)).unwrap();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_instance().unwrap(), s.instance);
    }
}

#[test]
fn integers_and_strings_are_both_accepted() {
    let text = r#"{"agents": 2, "goods": 3, "valuations": [[1, "2", "3/6"], ["0", 4, "10/4"]]}"#;
    let inst: InstanceFile = serde_json::from_str(text).unwrap();
    let inst = inst.to_instance().unwrap();
    assert_eq!(inst.value(0, 2), &rat(1, 2));
    assert_eq!(inst.value(1, 2), &rat(5, 2));
    let out = serde_json::to_value(InstanceFile::from_instance(&inst)).unwrap();
    assert_eq!(out["valuations"][0][2], "1/2");
    assert_eq!(out["valuations"][1][1], "4");
}

#[test]
fn malformed_instances_are_rejected() {
    for text in [
        r#"{"agents": 1, "goods": 2, "valuations": [["1/0", 1]]}"#,
        r#"{"agents": 1, "goods": 2, "valuations": [["x", 1]]}"#,
        r#"{"agents": 2, "goods": 2, "valuations": [[1, 1]]}"#,
        r#"{"agents": 1, "goods": 3, "valuations": [[1, 1]]}"#,
        r#"{"agents": 1, "goods": 1, "valuations": [["-1"]]}"#,
    ] {
        let parsed = serde_json::from_str::<InstanceFile>(text).map_err(|e| e.to_string());
        assert!(
            parsed
                .and_then(|f| f.to_instance().map_err(|e| e.to_string()))
                .is_err(),
            "{text}"
        );
    }
}

#[test]
fn allocations_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = 1 + (rng.next_u32() % 4) as usize;
        let m = (rng.next_u32() % 9) as usize;
        let mut alloc = Allocation::empty(n);
        for g in 0..m {
            let slot = (rng.next_u32() as usize) % (n + 1);
            if slot == n {
                alloc.unallocated.insert(g);
            } else {
                alloc.bundles[slot].insert(g);
            }
        }
        let text = serde_json::to_string(&AllocationJson::from_allocation(&alloc)).unwrap();
        let back: AllocationJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_allocation().unwrap(), alloc);
    }
    let dup: AllocationJson = serde_json::from_str(r#"{"bundles": [[0, 0]]}"#).unwrap();
    assert!(dup.to_allocation().is_err());
}

#[test]
fn thresholds_round_trip() {
    for n in 1..=8 {
        let t = guaranteed_thresholds(n);
        let text = serde_json::to_string(&thresholds_json(&t)).unwrap();
        let back: Vec<Rat> = serde_json::from_str(&text).unwrap();
        assert_eq!(thresholds_from_json(&back).unwrap(), t);
    }
    let t = ThresholdList::new(vec![rat(9, 10), rat(3, 4)]).unwrap();
    assert_eq!(
        serde_json::to_string(&thresholds_json(&t)).unwrap(),
        r#"["9/10","3/4"]"#
    );
}

#[test]
fn transcripts_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut reductions = 0;
    for _ in 0..80 {
        let n = 1 + (rng.next_u32() % 5) as usize;
        let m = 2 * n + (rng.next_u32() % 8) as usize;
        let s = random_normalized(&mut rng, n, m, n, 9).unwrap();
        let out = run_rbf_truthful(
            &s.instance,
            &guaranteed_thresholds(n),
            &PriorityRanking::identity(n),
            RbfConfig::default(),
        )
        .unwrap();
        reductions += out.transcript.reductions.len();
        let text =
            serde_json::to_string(&TranscriptJson::from_transcript(&out.transcript)).unwrap();
        let back: TranscriptJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_transcript().unwrap(), out.transcript);
    }
    assert!(reductions > 0);
}

#[test]
fn random_instances_round_trip_through_text() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inst = random_instance(&mut rng, 3, 6, 10).unwrap();
    let text = serde_json::to_string_pretty(&InstanceFile::from_instance(&inst)).unwrap();
    let back: InstanceFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_instance().unwrap(), inst);
}
