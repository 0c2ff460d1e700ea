use addrloc::cachesim::{self, brute_force_optimal, lru_curve_from_distances, simulate, Policy, SearchLimits};
use addrloc::locality::{self, stack_distances, stack_distances_naive, WindowMode};
use addrloc::searchcost::{normalized_search_time, CostModel, LookupCost};
use addrloc::synth::{generate, GeneratorSpec, Model};
use addrloc::trace::{self, AddressId, TraceBuilder};
use proptest::prelude::*;

fn ref_string(max_distinct: u32, max_len: usize) -> impl Strategy<Value = Vec<AddressId>> {
    (1..=max_distinct).prop_flat_map(move |d| prop::collection::vec((0..d).prop_map(AddressId), 0..=max_len))
}

fn distinct(seq: &[AddressId]) -> usize {
    let mut v = seq.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tree_stack_distances_match_naive(seq in ref_string(16, 400)) {
        prop_assert_eq!(stack_distances(&seq), stack_distances_naive(&seq));
    }

    #[test]
    fn histogram_accounting(seq in ref_string(16, 300)) {
        let (_, h) = stack_distances(&seq);
        prop_assert_eq!(h.finite_total() + h.infinite_count, h.total);
        prop_assert_eq!(h.infinite_count as usize, distinct(&seq));
        prop_assert!(h.max_distance() <= distinct(&seq));
        let mut prev = 0.0;
        for d in 0..=distinct(&seq) {
            prop_assert!(h.cdf(d) >= prev);
            prev = h.cdf(d);
        }
        if h.total > 0 {
            let end = h.cdf(distinct(&seq)) + h.infinite_count as f64 / h.total as f64;
            prop_assert!((end - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mattson_curve_equals_direct_lru(seq in ref_string(16, 512)) {
        let caps: Vec<usize> = (1..=distinct(&seq).max(1) + 1).collect();
        let (_, h) = stack_distances(&seq);
        let from_distances = lru_curve_from_distances(&h, &caps).unwrap();
        let direct = cachesim::sweep(&seq, Policy::Lru, &caps).unwrap();
        prop_assert_eq!(from_distances, direct);
    }

    #[test]
    fn min_is_never_beaten(seq in ref_string(8, 64), seed in any::<u64>()) {
        for c in 1..=distinct(&seq).max(1) {
            let min = simulate(&seq, Policy::Min, c).unwrap().misses;
            for p in [Policy::Lru, Policy::Fifo, Policy::Rand { seed }] {
                prop_assert!(min <= simulate(&seq, p, c).unwrap().misses, "{} beat MIN at c={}", p, c);
            }
        }
    }

    #[test]
    fn min_matches_exhaustive_search(seq in ref_string(4, 12), c in 1usize..=3) {
        let brute = brute_force_optimal(&seq, c, SearchLimits::default()).unwrap();
        prop_assert_eq!(simulate(&seq, Policy::Min, c).unwrap().misses, brute);
    }

    #[test]
    fn stack_policies_are_monotone(seq in ref_string(12, 200)) {
        let caps: Vec<usize> = (1..=distinct(&seq).max(1)).collect();
        for p in [Policy::Lru, Policy::Min] {
            let curve = cachesim::sweep(&seq, p, &caps).unwrap();
            for w in curve.entries.windows(2) {
                prop_assert!(w[1].misses <= w[0].misses, "{} not monotone", p);
            }
        }
    }

    #[test]
    fn miss_bounds_and_reciprocity(seq in ref_string(10, 200), c in 1usize..12, seed in any::<u64>()) {
        for p in [Policy::Lru, Policy::Fifo, Policy::Rand { seed }, Policy::Min] {
            let s = simulate(&seq, p, c).unwrap();
            prop_assert!(s.misses <= s.references);
            prop_assert!(s.misses as usize >= distinct(&seq).min(1));
            prop_assert!(s.misses as usize >= distinct(&seq));
            if s.misses > 0 {
                prop_assert!((s.interfault_distance() * s.miss_ratio() - 1.0).abs() <= 1e-12);
            }
            if c >= distinct(&seq) {
                prop_assert_eq!(s.misses as usize, distinct(&seq));
            }
        }
    }

    #[test]
    fn search_time_decomposes(p in 0.0f64..=1.0, n in 1usize..5000, frac in 0.0f64..=1.0) {
        let c = 1 + ((n - 1) as f64 * frac) as usize;
        let models: [&dyn LookupCost; 3] = [&CostModel::BinarySearch, &CostModel::LinearScan, &CostModel::Constant(3.5)];
        for model in models {
            let t = normalized_search_time(p, c, n, model).unwrap();
            let decomposed = model.cost(c) / model.cost(n) + p;
            prop_assert!((t - decomposed).abs() <= 1e-12, "{} vs {}", t, decomposed);
        }
    }

    #[test]
    fn search_time_increases_with_miss_ratio(p in 0.0f64..0.99, dp in 0.001f64..0.01, n in 2usize..1000) {
        let c = n / 2 + 1;
        let lo = normalized_search_time(p, c, n, &CostModel::BinarySearch).unwrap();
        let hi = normalized_search_time(p + dp, c, n, &CostModel::BinarySearch).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn working_set_bounds_and_monotone(seq in ref_string(12, 300).prop_filter("non-empty", |s| !s.is_empty())) {
        let d = distinct(&seq);
        for mode in [WindowMode::Disjoint, WindowMode::Sliding] {
            let mut prev = 0.0;
            for w in 1..=seq.len().min(40) {
                let r = locality::working_set(&seq, w, mode).unwrap();
                prop_assert!(r.average_wss >= 1.0);
                prop_assert!(r.average_wss <= w.min(d) as f64 + 1e-12);
                if mode == WindowMode::Sliding {
                    prop_assert!(r.average_wss + 1e-12 >= prev);
                }
                prev = r.average_wss;
            }
        }
    }

    #[test]
    fn run_lengths_cover_sequence(seq in ref_string(3, 200)) {
        let runs = locality::run_lengths(&seq);
        let covered: u64 = runs.counts.iter().map(|(&n, &c)| n as u64 * c).sum();
        prop_assert_eq!(covered as usize, seq.len());
        prop_assert_eq!(runs.counts.values().sum::<u64>(), runs.total_runs);
    }

    #[test]
    fn concentration_shape(seq in ref_string(20, 300).prop_filter("non-empty", |s| !s.is_empty())) {
        let c = locality::concentration_curve(&seq).unwrap();
        prop_assert_eq!(*c.points.last().unwrap(), (1.0, 1.0));
        let mut prev = (0.0, 0.0);
        let mut prev_step = f64::INFINITY;
        for &(x, y) in &c.points {
            prop_assert!(x > prev.0 && y > prev.1);
            let step = y - prev.1;
            prop_assert!(step <= prev_step + 1e-12);
            prev_step = step;
            prev = (x, y);
        }
        prop_assert_eq!(c.destinations(), distinct(&seq));
    }

    #[test]
    fn trace_roundtrip(frames in prop::collection::vec(
        (0u64..5, "[a-z0-9:-]{1,6}", "[a-z0-9:-]{1,6}", prop::option::of("[A-Za-z]{1,6}"), prop::option::of(0u32..2000)),
        0..40,
    )) {
        let mut b = TraceBuilder::new();
        let mut ts = 0;
        for (dt, src, dst, proto, len) in &frames {
            ts += dt;
            b.push(ts, src, dst, proto.as_deref(), *len).unwrap();
        }
        let t = b.build();
        let mut buf = Vec::new();
        trace::write_trace(&t, &mut buf).unwrap();
        prop_assert_eq!(trace::parse_trace(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn split_partitions_trace(tags in prop::collection::vec(prop::option::of(prop::sample::select(vec!["LAT", "DECnet", "IP"])), 0..60)) {
        let mut b = TraceBuilder::new();
        for (i, tag) in tags.iter().enumerate() {
            b.push(i as u64, "s", &format!("d{}", i % 7), *tag, None).unwrap();
        }
        let t = b.build();
        let (lat, rest) = trace::split_by_protocol(&t, |p| p == "LAT");
        prop_assert_eq!(lat.len() + rest.len(), t.len());

        // merging by timestamp recovers the destination tokens
        let mut merged: Vec<(u64, String)> = lat
            .records()
            .iter()
            .map(|r| (r.timestamp, lat.interner().token(r.dst).unwrap().to_owned()))
            .chain(rest.records().iter().map(|r| (r.timestamp, rest.interner().token(r.dst).unwrap().to_owned())))
            .collect();
        merged.sort();
        let original: Vec<String> = t.destination_tokens().map(str::to_owned).collect();
        prop_assert_eq!(merged.into_iter().map(|(_, d)| d).collect::<Vec<_>>(), original);
        for side in [&lat, &rest] {
            let max_id = side.records().iter().flat_map(|r| [r.src.0, r.dst.0]).max();
            prop_assert_eq!(max_id.map_or(0, |m| m as usize + 1), side.interner().len());
        }
    }

    #[test]
    fn cyclic_generator_has_constant_stack_distance(k in 1usize..40, extra in 0usize..200) {
        let t = generate(&GeneratorSpec::new(Model::Cyclic { period: k }, k + extra, 3)).unwrap();
        let (d, _) = stack_distances(&t.destinations());
        prop_assert!(d[..k].iter().all(Option::is_none));
        prop_assert!(d[k..].iter().all(|&x| x == Some(k)));
    }

    #[test]
    fn summary_destinations_match_sequence(seq in ref_string(10, 100).prop_filter("non-empty", |s| !s.is_empty())) {
        let mut b = TraceBuilder::new();
        for (i, a) in seq.iter().enumerate() {
            b.push(i as u64, &format!("src{}", i % 3), &format!("x{}", a.0), None, None).unwrap();
        }
        let s = b.build().summarize().unwrap();
        prop_assert_eq!(s.distinct_destinations, distinct(&seq));
        prop_assert!(s.distinct_destinations <= s.distinct_addresses);
        prop_assert!(s.distinct_addresses <= 2 * s.frame_count);
    }
}

#[test]
fn belady_instance_lru_and_min_do_not_invert() {
    let s: Vec<AddressId> = [1, 2, 3, 4, 1, 2, 5, 1, 2, 3, 4, 5].into_iter().map(AddressId).collect();
    for p in [Policy::Lru, Policy::Min] {
        let c3 = simulate(&s, p, 3).unwrap().misses;
        let c4 = simulate(&s, p, 4).unwrap().misses;
        assert!(c4 <= c3, "{p}: {c3} -> {c4}");
    }
}

#[test]
fn lsm_with_decreasing_pmf_favours_lru() {
    let weights: Vec<f64> = (0..40).map(|i| 0.85f64.powi(i)).collect();
    let total: f64 = weights.iter().sum();
    let spec = GeneratorSpec::new(
        Model::LruStack {
            distance_pmf: weights.iter().map(|w| w / total).collect(),
            initial_stack: (0..40).map(|i| format!("n{i}")).collect(),
        },
        20_000,
        17,
    );
    let dst = generate(&spec).unwrap().destinations();
    for c in [2, 4, 8, 16, 32] {
        let lru = simulate(&dst, Policy::Lru, c).unwrap().misses;
        assert!(lru <= simulate(&dst, Policy::Fifo, c).unwrap().misses);
        assert!(lru <= simulate(&dst, Policy::Rand { seed: 5 }, c).unwrap().misses);
    }
}
