use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpcs_core::citygen::Point;
use wpcs_core::wpt::{
    assign_beams, blockage_probability, rx_power_dbm, Antenna, Beacon, BlockageGeometry, Candidate, LinearLink,
    LinkBudgetParams, Mount,
};

fn link_budget(c: &mut Criterion) {
    let params = LinkBudgetParams::default();
    let link = LinearLink::new(&params, 16.0);
    let distances: Vec<f64> = (1..=1000).map(|k| k as f64 * 0.06).collect();

    c.bench_function("rx_power_dbm", |b| {
        b.iter(|| distances.iter().map(|&d| rx_power_dbm(&params, 16.0, black_box(d))).sum::<f64>())
    });
    c.bench_function("linear_harvest", |b| {
        b.iter(|| distances.iter().map(|&d| link.harvest_w(black_box(d * d))).sum::<f64>())
    });

    let geom = BlockageGeometry {
        blocker_density_per_m2: 0.05,
        ..BlockageGeometry::default()
    };
    c.bench_function("blockage_probability", |b| {
        b.iter(|| distances.iter().map(|&d| blockage_probability(black_box(d), &geom)).sum::<f64>())
    });

    let beacon = Beacon {
        id: 0,
        mount: Mount::Static(Point { x: 0.0, y: 0.0 }),
        height_m: 3.0,
        antenna: Antenna::directional(16.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let devices: Vec<Candidate> = (0..20)
        .map(|i| {
            let p = Point {
                x: rng.gen_range(-40.0..40.0),
                y: rng.gen_range(-40.0..40.0),
            };
            Candidate::new(i, (Point { x: 0.0, y: 0.0 }, 3.0), (p, 1.2))
        })
        .collect();
    c.bench_function("assign_beams_20", |b| {
        b.iter(|| {
            let mut cands = devices.clone();
            assign_beams(&beacon, &mut cands, &geom, &mut rng)
        })
    });
}

criterion_group!(benches, link_budget);
criterion_main!(benches);
