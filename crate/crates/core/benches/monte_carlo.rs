use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use reconsense::channel::AvgSnr;
use reconsense::detector::DetectorParams;
use reconsense::fusion::FusionParams;
use reconsense::reconfig::{CsiMode, ReconfigParams};
use reconsense::simkit::{estimate_point_with, Execution, Hypothesis, McOptions, Scheme, SchemeConfig};

const TRIALS: u64 = 200_000;

fn schemes() -> Vec<(&'static str, Scheme)> {
    vec![
        (
            "noncoop",
            Scheme::NonCoop(DetectorParams::calibrated(100, 0.05).unwrap()),
        ),
        ("coop", Scheme::Coop(FusionParams::calibrated(10, 1, 10, 0.05).unwrap())),
        (
            "switching",
            Scheme::Reconfig(ReconfigParams::calibrated(10, 100, 0.05, CsiMode::Switching).unwrap()),
        ),
        (
            "selection",
            Scheme::Reconfig(ReconfigParams::calibrated(10, 100, 0.05, CsiMode::Selection).unwrap()),
        ),
    ]
}

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_point");
    group.sample_size(10);
    group.throughput(Throughput::Elements(TRIALS));
    for (name, scheme) in schemes() {
        let config = SchemeConfig::new(scheme, AvgSnr::from_db(0.0).unwrap());
        for (label, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let opts = McOptions {
                execution,
                ..McOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(label, name), &config, |b, cfg| {
                b.iter(|| estimate_point_with(cfg, Hypothesis::H1, TRIALS, 7, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
