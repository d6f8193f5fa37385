use coldbench_core::driver::{read_measurements, write_measurements, Measurement};
use coldbench_core::report::{
    latency_cdf, summarize, to_json, BenchReport, LatencyStats, ReportError, RunContext,
};
use coldbench_core::workload::Op;
use proptest::prelude::*;

/// Smallest sample with at least `p` percent of the samples at or below it.
fn brute_percentile(xs: &[u64], p: u64) -> u64 {
    let n = xs.len() as u64;
    *xs.iter()
        .filter(|&&x| xs.iter().filter(|&&y| y <= x).count() as u64 * 100 >= p * n)
        .min()
        .unwrap()
}

fn measurement(i: u64, latency: u64, ok: bool) -> Measurement {
    Measurement {
        session: 0,
        request_id: i,
        op: if i.is_multiple_of(3) {
            Op::Put
        } else {
            Op::Get
        },
        priority: ["low", "normal", "urgent"][(i % 3) as usize].to_owned(),
        file_ids: Vec::new(),
        issue_time: i * 10,
        completion_time: i * 10 + latency,
        bytes: 1_000 + i,
        cost_delta_cents: 0.25,
        ok,
        error: if ok {
            String::new()
        } else {
            "unknown file".into()
        },
    }
}

#[test]
fn empty_or_all_failed_input_is_an_error() {
    assert!(matches!(
        summarize(&[], &RunContext::default()),
        Err(ReportError::Empty)
    ));
    let failed = vec![measurement(1, 5, false)];
    assert!(matches!(
        summarize(&failed, &RunContext::default()),
        Err(ReportError::Empty)
    ));
}

#[test]
fn failed_requests_are_counted_but_not_timed() {
    let ms = vec![
        measurement(1, 5, true),
        measurement(2, 1_000_000, false),
        measurement(4, 7, true),
    ];
    let r = summarize(&ms, &RunContext::default()).unwrap();
    assert_eq!((r.measurements, r.failed), (3, 1));
    assert_eq!(r.latency.all.max_us, 7);
    assert_eq!(r.get_bytes, 1_001 + 1_004);
}

#[test]
fn cdf_ends_at_one() {
    let ms: Vec<_> = (0..50).map(|i| measurement(i, 50 - i, true)).collect();
    let cdf = latency_cdf(&ms);
    assert_eq!(cdf.last().unwrap().1, 1.0);
    assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
}

proptest! {
    #[test]
    fn percentiles_match_brute_force(xs in prop::collection::vec(0u64..10_000, 1..200)) {
        let s = LatencyStats::from_latencies(xs.clone()).unwrap();
        prop_assert_eq!(s.p50_us, brute_percentile(&xs, 50));
        prop_assert_eq!(s.p95_us, brute_percentile(&xs, 95));
        prop_assert_eq!(s.p99_us, brute_percentile(&xs, 99));
        prop_assert_eq!(s.max_us, *xs.iter().max().unwrap());
        let mean = xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        prop_assert!((s.mean_us - mean).abs() < 1e-9);
    }

    #[test]
    fn report_json_round_trip(lat in prop::collection::vec(1u64..1_000_000, 1..40), seed in any::<u64>()) {
        let ms: Vec<_> = lat.iter().enumerate().map(|(i, &l)| measurement(i as u64, l, true)).collect();
        let ctx = RunContext { backend: "tape".into(), seed, ..RunContext::default() };
        let r = summarize(&ms, &ctx).unwrap();
        let text = to_json(&r).unwrap();
        let back: BenchReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn measurement_csv_round_trip(lat in prop::collection::vec(0u64..1_000_000, 0..40)) {
        let ms: Vec<_> = lat.iter().enumerate().map(|(i, &l)| measurement(i as u64, l, i % 5 != 0)).collect();
        let mut buf = Vec::new();
        write_measurements(&mut buf, &ms).unwrap();
        prop_assert_eq!(read_measurements(buf.as_slice()).unwrap(), ms);
    }
}
