use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dyncal_bench::case_observations;
use dyncal_core::experiments::{calibrate, CalibrationOptions};
use dyncal_core::tmcmc::{self, FnTarget};
use dyncal_core::{CandidateModel, ModelId, TmcmcConfig};

fn gaussian(c: &mut Criterion) {
    let target = FnTarget::uniform_box(vec![(-50.0, 50.0); 3], |x: &[f64]| {
        -0.5 * x.iter().map(|v| (v - 1.0).powi(2) * 100.0).sum::<f64>()
    });
    let mut group = c.benchmark_group("tmcmc_gaussian");
    for n in [500, 2000] {
        let config = TmcmcConfig {
            n_samples: n,
            ..TmcmcConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &config, |b, cfg| {
            b.iter(|| tmcmc::run(&target, cfg).expect("sampler converges"))
        });
    }
    group.finish();
}

fn calibration(c: &mut Criterion) {
    let data = case_observations(1, 0);
    let model = CandidateModel::new(ModelId::M2);
    let opts = CalibrationOptions {
        tmcmc: TmcmcConfig {
            n_samples: 200,
            ..TmcmcConfig::default()
        },
        ..CalibrationOptions::default()
    };
    let mut group = c.benchmark_group("calibrate");
    group.sample_size(10);
    group.bench_function("M2_N200", |b| b.iter(|| calibrate(&model, &data, &opts).expect("calibration succeeds")));
    group.finish();
}

criterion_group!(benches, gaussian, calibration);
criterion_main!(benches);
