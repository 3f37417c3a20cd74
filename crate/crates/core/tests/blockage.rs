//! Monte-Carlo check of the closed-form blockage probability.
//!
//! Bodies are thrown as a Poisson field around the link's ground track. A
//! trial is blocked when a body center sits within one radius of the track,
//! beyond the wearer's own footprint and before the ray climbs over body
//! height.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpcs_core::wpt::{blockage_probability, BlockageGeometry};

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u32 {
    let limit = (-mean).exp();
    let mut k = 0;
    let mut p = rng.gen::<f64>();
    while p > limit {
        k += 1;
        p *= rng.gen::<f64>();
    }
    k
}

fn blocked_once<R: Rng>(d2d: f64, g: &BlockageGeometry, rng: &mut R) -> bool {
    let r = g.body_diameter_m / 2.0;
    // Height of the ray above ground at distance t from the wearer.
    let ray = |t: f64| g.device_height_m + (g.beacon_height_m - g.device_height_m) * t / d2d;
    let (x0, x1, y0, y1) = (-1.0, d2d + 1.0, -1.0, 1.0);
    let n = poisson(g.blocker_density_per_m2 * (x1 - x0) * (y1 - y0), rng);
    (0..n).any(|_| {
        let x = rng.gen_range(x0..x1);
        let y: f64 = rng.gen_range(y0..y1);
        y.abs() < r && x >= r && x <= d2d && ray(x) <= g.blocker_height_m
    })
}

fn monte_carlo(d2d: f64, g: &BlockageGeometry, trials: u32, rng: &mut ChaCha8Rng) -> f64 {
    (0..trials).filter(|_| blocked_once(d2d, g, rng)).count() as f64 / trials as f64
}

#[test]
fn closed_form_matches_monte_carlo_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for lambda in [0.01, 0.05, 0.1, 0.2] {
        for d2d in [2.0, 5.0, 10.0, 20.0, 40.0] {
            let g = BlockageGeometry {
                blocker_density_per_m2: lambda,
                ..BlockageGeometry::default()
            };
            let exact = blockage_probability(d2d, &g);
            let mc = monte_carlo(d2d, &g, 40_000, &mut rng);
            assert!(
                (exact - mc).abs() < 0.01,
                "lambda {lambda} d {d2d}: closed {exact:.4} vs mc {mc:.4}"
            );
        }
    }
}

#[test]
fn zero_density_and_short_links_are_never_blocked() {
    let none = BlockageGeometry::default();
    assert_eq!(blockage_probability(40.0, &none), 0.0);
    let crowded = BlockageGeometry {
        blocker_density_per_m2: 0.2,
        ..none
    };
    assert_eq!(blockage_probability(0.72, &crowded), 0.0);
    assert_eq!(blockage_probability(0.3, &crowded), 0.0);
    assert!(blockage_probability(0.8, &crowded) > 0.0);
}

#[test]
fn probability_grows_with_distance_and_density() {
    let mut prev_row = vec![0.0; 50];
    for lambda in [0.0, 0.01, 0.05, 0.1, 0.2, 0.5] {
        let g = BlockageGeometry {
            blocker_density_per_m2: lambda,
            ..BlockageGeometry::default()
        };
        let mut prev = 0.0;
        for (k, slot) in prev_row.iter_mut().enumerate() {
            let p = blockage_probability(k as f64, &g);
            assert!((0.0..1.0).contains(&p));
            assert!(p >= prev);
            assert!(p >= *slot);
            prev = p;
            *slot = p;
        }
    }
}
