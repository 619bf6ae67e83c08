//! Compares the data-parallel threshold sweep against the sequential
//! fallback on a deliberately small problem, plus a single-run baseline.
//!
//! Run with `cargo bench -p catena` (parallel sweep included only when the
//! `parallel` feature is on, which is the default).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use catena::bridge_model::{make_geometry, BridgeParams, CableGeometry};
use catena::dynamics::{simulate, SimOptions};
use catena::experiments::{build_ic, ExperimentSpec, SearchParams};

const N_CELLS: usize = 128;
const DT: f64 = 5e-3;
const HORIZON: f64 = 6.0;
const MODES: [usize; 2] = [9, 10];

fn setting() -> (BridgeParams, CableGeometry) {
    let p = BridgeParams::default();
    let geom = make_geometry(&p, N_CELLS).unwrap();
    (p, geom)
}

fn spec_template() -> ExperimentSpec {
    ExperimentSpec {
        horizon: HORIZON,
        ..ExperimentSpec::default()
    }
}

/// Coarse search so one sweep costs a handful of runs per mode.
fn search() -> SearchParams {
    SearchParams {
        resolution: 0.5,
        scan_start: 2.0,
        scan_step: 2.0,
        scan_limit: 16.0,
        ..SearchParams::default()
    }
}

fn bench_single_run(c: &mut Criterion) {
    let (p, geom) = setting();
    let spec = ExperimentSpec {
        excited_mode: 9,
        amplitude: 2.0,
        ..spec_template()
    };
    let ic = build_ic(&spec, &p).unwrap();
    let opts = SimOptions::default();

    c.bench_function("single-run/mode-9", |b| {
        b.iter(|| {
            let rec = simulate(
                black_box(&ic),
                HORIZON,
                DT,
                black_box(&geom),
                black_box(&p),
                &opts,
            )
            .unwrap();
            black_box(rec.summary.energy_drift)
        })
    });
}

fn bench_sweep(c: &mut Criterion) {
    let (p, geom) = setting();
    let template = spec_template();
    let base = SimOptions::default();
    let mut group = c.benchmark_group("threshold-sweep");
    group.sample_size(10);

    group.bench_with_input(
        BenchmarkId::new("sequential", MODES.len()),
        &MODES[..],
        |b, modes| {
            b.iter(|| {
                let out = catena::experiments::sweep_sequential(
                    black_box(modes),
                    &template,
                    &search(),
                    DT,
                    &geom,
                    &p,
                    &base,
                );
                for (_, r) in &out {
                    black_box(r.as_ref().unwrap().threshold);
                }
            })
        },
    );

    #[cfg(feature = "parallel")]
    group.bench_with_input(
        BenchmarkId::new("parallel", MODES.len()),
        &MODES[..],
        |b, modes| {
            b.iter(|| {
                let out = catena::experiments::sweep(
                    black_box(modes),
                    &template,
                    &search(),
                    DT,
                    &geom,
                    &p,
                    &base,
                );
                for (_, r) in &out {
                    black_box(r.as_ref().unwrap().threshold);
                }
            })
        },
    );

    group.finish();
}

criterion_group!(benches, bench_single_run, bench_sweep);
criterion_main!(benches);
