//! Exact dimer solver against independent counting oracles.

use planarstat::lattice::{enumerate_dimer_covers, Color, DimerCover, TorusLattice};
use planarstat::pfaffian::{
    calibrate_sector_signs, dimer_partition, ln_dimer_partition, ln_winding_partition, KasteleynSystem,
    sector_signs,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Weighted sum over tilings of the free sites of a periodic row by
/// horizontal dimers. `w(x)` is the weight of the dimer `(x, x+1)`.
fn row_tilings(free: u32, l: usize, w: &dyn Fn(usize) -> f64) -> f64 {
    fn linear(free: u32, from: usize, to: usize, w: &dyn Fn(usize) -> f64) -> f64 {
        let mut x = from;
        while x < to && free >> x & 1 == 0 {
            x += 1;
        }
        if x >= to {
            return 1.0;
        }
        if x + 1 < to && free >> (x + 1) & 1 == 1 {
            w(x) * linear(free, x + 2, to, w)
        } else {
            0.0
        }
    }
    let wrap_free = free >> (l - 1) & 1 == 1 && free & 1 == 1;
    let without = linear(free, 0, l, w);
    let with = if wrap_free {
        w(l - 1) * linear(free & !1 & !(1 << (l - 1)), 0, l, w)
    } else {
        0.0
    };
    without + with
}

/// Transfer-matrix partition function; handles every winding sector.
fn transfer_matrix_partition(l: usize, t: [f64; 4]) -> f64 {
    let lat = TorusLattice::build(l).unwrap();
    let states = 1usize << l;
    let class = |x: usize, y: usize, dir: usize| {
        let b = lat.bond_at(x as i64, y as i64, dir);
        t[lat.weight_class(b) as usize]
    };
    // row matrices: incoming vertical mask -> outgoing vertical mask
    let mut total = vec![vec![0.0; states]; states];
    for (i, row) in total.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for y in 0..l {
        let mut tm = vec![vec![0.0; states]; states];
        for (inc, trow) in tm.iter_mut().enumerate() {
            let avail = !(inc as u32) & ((1u32 << l) - 1);
            let mut out = avail;
            loop {
                let free = avail & !out;
                let h = row_tilings(free, l, &|x| class(x, y, 0));
                if h != 0.0 {
                    let up: f64 = (0..l).filter(|&x| out >> x & 1 == 1).map(|x| class(x, y, 1)).product();
                    trow[out as usize] += h * up;
                }
                if out == 0 {
                    break;
                }
                out = (out - 1) & avail;
            }
        }
        let mut next = vec![vec![0.0; states]; states];
        for i in 0..states {
            for k in 0..states {
                let a = total[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..states {
                    next[i][j] += a * tm[k][j];
                }
            }
        }
        total = next;
    }
    (0..states).map(|i| total[i][i]).sum()
}

fn random_weights(rng: &mut ChaCha8Rng) -> [f64; 4] {
    std::array::from_fn(|_| rng.gen_range(0.3..3.0))
}

#[test]
fn transfer_matrix_oracle_agrees_with_enumeration() {
    let lat = TorusLattice::build(4).unwrap();
    let n = enumerate_dimer_covers(&lat).unwrap().len() as f64;
    assert_eq!(transfer_matrix_partition(4, [1.0; 4]), n);
}

#[test]
fn partition_matches_transfer_matrix_up_to_l8() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for l in [4, 6, 8] {
        let lat = TorusLattice::build(l).unwrap();
        for w in [[1.0; 4], random_weights(&mut rng), random_weights(&mut rng)] {
            let want = transfer_matrix_partition(l, w);
            let got = dimer_partition(&KasteleynSystem::build(&lat, w).unwrap()).unwrap();
            assert!((got / want - 1.0).abs() < 1e-10, "L={l} w={w:?}: {got} vs {want}");
        }
    }
}

#[test]
fn six_by_six_calibration_agrees() {
    let lat = TorusLattice::build(6).unwrap();
    assert_eq!(calibrate_sector_signs(&lat).unwrap(), sector_signs(6));
}

#[test]
fn every_cover_enters_with_the_same_sign() {
    // Sum over sectors of each cover's term must be the same multiple of its
    // weight; this is what the frozen sign pattern relies on.
    for l in [4, 6] {
        let lat = TorusLattice::build(l).unwrap();
        let w = [1.3, 0.8, 2.1, 0.6];
        let sys = KasteleynSystem::build(&lat, w).unwrap();
        let covers = enumerate_dimer_covers(&lat).unwrap();
        let mut ratio = None;
        for c in &covers {
            let total: f64 = (0..4)
                .map(|s| {
                    let angles = (
                        if s & 2 != 0 { std::f64::consts::PI } else { 0.0 },
                        if s & 1 != 0 { std::f64::consts::PI } else { 0.0 },
                    );
                    sector_signs(l)[s] * sys.cover_term(c, angles).unwrap().re
                })
                .sum();
            let r = total / c.weight(&lat, &w);
            let r0 = *ratio.get_or_insert(r);
            assert!((r - r0).abs() < 1e-9, "L={l}");
        }
        assert!((ratio.unwrap().abs() - 2.0).abs() < 1e-9);
    }
}

#[test]
fn winding_resolved_partitions_match_enumeration() {
    for l in [4, 6] {
        let lat = TorusLattice::build(l).unwrap();
        let w = [1.0, 1.4, 0.7, 1.0];
        let sys = KasteleynSystem::build(&lat, w).unwrap();
        let mut by_winding: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for c in enumerate_dimer_covers(&lat).unwrap() {
            *by_winding.entry(c.winding(&lat)).or_default() += c.weight(&lat, &w);
        }
        let total: f64 = by_winding.values().sum();
        // Fourier projection: error is relative to the full partition function
        for (&wnd, &z) in &by_winding {
            let got = ln_winding_partition(&sys, wnd).unwrap().exp();
            assert!((got - z).abs() < 1e-11 * total, "L={l} w={wnd:?}: {got} vs {z}");
        }
        assert!((ln_dimer_partition(&sys).unwrap().exp() / total - 1.0).abs() < 1e-10);
        assert!(ln_winding_partition(&sys, (l as i64, 0)).unwrap() == f64::NEG_INFINITY);
    }
}

#[test]
fn columnar_cover_has_zero_winding() {
    let lat = TorusLattice::build(8).unwrap();
    assert_eq!(DimerCover::columnar(&lat).winding(&lat), (0, 0));
    let (b, w) = lat.count_colors();
    assert_eq!(b, w);
    assert_eq!(lat.color(0), Color::Black);
}

#[test]
fn free_energy_per_site_approaches_catalan_over_pi() {
    let catalan = 0.915_965_594_177_219;
    for l in [30usize, 32] {
        let lat = TorusLattice::build(l).unwrap();
        let sys = KasteleynSystem::uniform(&lat).unwrap();
        let f = ln_dimer_partition(&sys).unwrap() / (l * l) as f64;
        assert!((f - catalan / std::f64::consts::PI).abs() < 1e-3, "L={l}: {f}");
    }
}
