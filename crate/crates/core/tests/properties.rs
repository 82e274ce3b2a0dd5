use mmskit_core::generate::random_normalized;
use mmskit_core::numeric::{from_usize, int, rat};
use mmskit_core::ordinal::run_1_out_of_d;
use mmskit_core::rbf::{
    guaranteed_thresholds, ord_st, run_rbf_pipeline, run_rbf_truthful, RbfConfig,
};
use mmskit_core::transform::{is_normalized_witnessed, prepare, Target};
use mmskit_core::verify::{check_structure, check_transcript, matches_reduction_order};
use mmskit_core::{
    bundle_value, is_t_mms, mms, mms_naive, Bundle, Instance, PriorityRanking, Rational,
    ThresholdList, DEFAULT_NODE_BUDGET,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BUDGET: u64 = DEFAULT_NODE_BUDGET;

fn matrix(
    agents: std::ops::RangeInclusive<usize>,
    goods: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Instance> {
    (agents, goods).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(0i64..=10, m), n)
            .prop_map(move |rows| Instance::from_integers(&rows).unwrap())
    })
}

fn row(goods: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Instance> {
    matrix(1..=1, goods)
}

fn permutation(n: usize) -> impl Strategy<Value = PriorityRanking> {
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(|r| PriorityRanking::new(r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn oracle_matches_enumeration(inst in row(0..=8), d in 1usize..=4) {
        let all = inst.all_goods();
        let fast = mms(&inst, 0, d, &all, BUDGET).unwrap();
        let slow = mms_naive(&inst, 0, d, &all).unwrap();
        prop_assert_eq!(&fast.value, &slow.value);
        let worst = fast.witness.part_values(&inst, 0).unwrap().into_iter().min().unwrap();
        prop_assert_eq!(worst, fast.value);
        prop_assert_eq!(fast.witness.d(), d);
    }

    #[test]
    fn more_parts_never_help(inst in row(0..=9), d in 1usize..=4) {
        let all = inst.all_goods();
        let coarse = mms(&inst, 0, d, &all, BUDGET).unwrap().value;
        let fine = mms(&inst, 0, d + 1, &all, BUDGET).unwrap().value;
        prop_assert!(fine <= coarse);
    }

    #[test]
    fn more_goods_never_hurt(inst in row(1..=9), d in 1usize..=4) {
        let all = inst.all_goods();
        let mut fewer = all.clone();
        let last = *fewer.iter().next_back().unwrap();
        fewer.remove(&last);
        let full = mms(&inst, 0, d, &all, BUDGET).unwrap().value;
        let part = mms(&inst, 0, d, &fewer, BUDGET).unwrap().value;
        prop_assert!(part <= full);
    }

    #[test]
    fn scaling_scales_the_share(inst in row(0..=8), d in 1usize..=3, p in 1i64..=7, q in 1i64..=7) {
        let c = rat(p, q);
        let scaled = Instance::new(
            inst.goods(),
            vec![inst.row(0).iter().map(|v| v * &c).collect()],
        ).unwrap();
        let all = inst.all_goods();
        let base = mms(&inst, 0, d, &all, BUDGET).unwrap().value;
        prop_assert_eq!(mms(&scaled, 0, d, &all, BUDGET).unwrap().value, base * c);
    }

    #[test]
    fn share_is_at_most_the_proportional_value(inst in row(0..=9), d in 1usize..=4) {
        let share = mms(&inst, 0, d, &inst.all_goods(), BUDGET).unwrap().value;
        prop_assert!(share * from_usize(d) <= inst.total_value(0));
    }

    #[test]
    fn lower_thresholds_keep_t_mms(
        inst in matrix(1..=4, 0..=7),
        seed in any::<u64>(),
        cut in 0i64..=10,
    ) {
        let n = inst.agents();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alloc = mmskit_core::Allocation::empty(n);
        for g in 0..inst.goods() {
            alloc.bundles[rand::Rng::gen_range(&mut rng, 0..n)].insert(g);
        }
        let all = inst.all_goods();
        let shares: Vec<Rational> = (0..n).map(|a| mms(&inst, a, n, &all, BUDGET).unwrap().value).collect();
        let ranking = PriorityRanking::identity(n);
        let high = ThresholdList::constant(n, Rational::from_integer(1.into())).unwrap();
        let low = ThresholdList::constant(n, rat(cut, 10)).unwrap();
        if is_t_mms(&inst, &alloc, &ranking, &high, &shares).unwrap() {
            prop_assert!(is_t_mms(&inst, &alloc, &ranking, &low, &shares).unwrap());
        }
        let zero = ThresholdList::constant(n, int(0)).unwrap();
        prop_assert!(is_t_mms(&inst, &alloc, &ranking, &zero, &shares).unwrap());
    }

    #[test]
    fn reduction_order_matches_the_regular_expression(word in prop::collection::vec(1u8..=4, 0..12)) {
        let re = regex::Regex::new("^(1*2*4*)(32*4*)*$").unwrap();
        let text: String = word.iter().map(|&c| char::from(b'0' + c)).collect();
        prop_assert_eq!(matches_reduction_order(&word), re.is_match(&text));
    }

    #[test]
    fn order_statistics_pick_sorted_positions(goods in prop::collection::btree_set(0usize..40, 0..12), picks in prop::collection::vec(1usize..=12, 0..5)) {
        let sorted: Vec<usize> = goods.iter().copied().collect();
        let expected: Bundle = picks.iter().filter(|&&j| j <= sorted.len()).map(|&j| sorted[j - 1]).collect();
        prop_assert_eq!(ord_st(&goods, &picks), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ordinal_pipeline_meets_every_share(inst in matrix(1..=5, 1..=9)) {
        let n = inst.agents();
        let d = 4 * n.div_ceil(3);
        let out = run_1_out_of_d(&inst, BUDGET).unwrap();
        out.allocation.validate(n, inst.goods()).unwrap();
        prop_assert!(out.allocation.is_complete(inst.goods()));
        let all = inst.all_goods();
        for a in 0..n {
            let share = mms(&inst, a, d, &all, BUDGET).unwrap().value;
            prop_assert!(bundle_value(&inst, a, &out.allocation.bundles[a]).unwrap() >= share);
        }
        prop_assert!(!out.run.is_some_and(|r| r.terminated_early));
    }

    #[test]
    fn pipeline_working_instances_are_witnessed(inst in matrix(1..=5, 1..=9)) {
        for target in [Target::Ordinal, Target::Proportional] {
            let record = prepare(&inst, target, BUDGET).unwrap();
            if let Some(w) = &record.working {
                prop_assert!(is_normalized_witnessed(w));
                prop_assert!(w.ordered.is_ordered());
                for a in 0..w.ordered.agents() {
                    prop_assert_eq!(w.ordered.total_value(a), from_usize(w.d));
                }
            }
        }
    }

    #[test]
    fn truthful_transcripts_are_consistent(seed in any::<u64>(), n in 1usize..=6, extra in 0usize..=8, rank_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_normalized(&mut rng, n, n + extra, n, 9).unwrap();
        let mut ranks: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut ranks[..], &mut ChaCha8Rng::seed_from_u64(rank_seed));
        let ranking = PriorityRanking::new(ranks).unwrap();
        let taus = guaranteed_thresholds(n);
        let out = run_rbf_truthful(&s.instance, &taus, &ranking, RbfConfig::default()).unwrap();
        prop_assert_eq!(check_transcript(&out.transcript), vec![]);
        for a in 0..n {
            let v = bundle_value(&s.instance, a, &out.allocation.bundles[a]).unwrap();
            prop_assert!(&v >= taus.at_rank(ranking.rank_of(a)));
        }
    }

    #[test]
    fn rbf_pipeline_meets_thresholds(
        (inst, ranking) in (1usize..=4).prop_flat_map(|n| (matrix(n..=n, 1..=8), permutation(n)))
    ) {
        let n = inst.agents();
        let taus = guaranteed_thresholds(n);
        let (record, out) = run_rbf_pipeline(&inst, &taus, &ranking, RbfConfig::default(), BUDGET).unwrap();
        for a in 0..n {
            let v = bundle_value(&inst, a, &out.allocation.bundles[a]).unwrap();
            prop_assert!(v >= taus.at_rank(ranking.rank_of(a)) * &record.original_mms[a]);
        }
    }

    #[test]
    fn normalized_instances_have_the_pair_structure(seed in any::<u64>(), d in 1usize..=8, extra in 0usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_normalized(&mut rng, 3, d + extra, d, 9).unwrap();
        prop_assert_eq!(check_structure(&s.instance, d), vec![]);
    }
}

#[test]
fn unnormalized_rows_break_the_structure() {
    let inst = Instance::from_integers(&[[3, 0, 0]]).unwrap();
    let found = check_structure(&inst, 2);
    assert!(!found.is_empty());
}
