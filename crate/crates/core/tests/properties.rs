mod common;

use charges_core::config::{LimitRule, Schedule, Tolerances};
use charges_core::convergence::{
    oscillation_extract, quantize, verify_witness, OscillationConfig,
};
use charges_core::lipschitz::{
    cone_family, mcshane_extend, separated_indicator, verify_lipschitz, AnchoredFunction,
};
use charges_core::measures::{
    Family, FnFamily, Interval, IntervalCells, LocatedMeasure, SetAlgebra,
};
use charges_core::metric::{Manhattan, Partition};
use charges_core::pushdown::{external_pushdown, internal_pushdown, RoundingMap};
use charges_core::transport::{tv_distance, w1_dual, w1_primal, TransportTol};
use charges_core::{Measure, Rational, Scalar, Space};
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn setup(seed: u64, n: usize) -> (ChaCha8Rng, Space) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_metric(&mut rng, n, 0.05, 1.0);
    let s = Space::from_matrix(d, &1e-9).unwrap();
    (rng, s)
}

fn measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    let k = rng.gen_range(1..=n);
    Measure::from_weights(random_weights(rng, n, k), &1e-9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_are_valid(seed in any::<u64>(), n in 1usize..16, delta in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Space::from_coords(random_cloud(&mut rng, n), &Manhattan).unwrap();
        let p = s.build_partition(&delta).unwrap();
        let mut seen = vec![0; n];
        for (cell, rep) in p.cells().iter().zip(p.reps()) {
            prop_assert!(cell.contains(rep));
            for &a in cell {
                seen[a] += 1;
                for &b in cell {
                    prop_assert!(*s.dist(a, b) <= delta);
                }
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn greedy_sets_are_maximal(seed in any::<u64>(), n in 1usize..16, eps in 0.05f64..1.0) {
        let (_, s) = setup(seed, n);
        let y = s.greedy_separated_set(&eps, usize::MAX).unwrap();
        for (a, &i) in y.indices.iter().enumerate() {
            for &j in &y.indices[a + 1..] {
                prop_assert!(*s.dist(i, j) > eps);
            }
        }
        for x in 0..n {
            prop_assert!(y.indices.iter().any(|&c| *s.dist(x, c) <= eps));
        }
    }

    #[test]
    fn cover_size_is_monotone(seed in any::<u64>(), n in 1usize..16, e1 in 0.05f64..1.0, e2 in 0.05f64..1.0) {
        let (_, s) = setup(seed, n);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let small = s.covering_report(&lo).unwrap().centers.len();
        let large = s.covering_report(&hi).unwrap().centers.len();
        prop_assert!(large <= small);
    }

    #[test]
    fn duality_and_metric_axioms(seed in any::<u64>(), n in 2usize..8) {
        let (mut rng, s) = setup(seed, n);
        let a = measure(&mut rng, n);
        let b = measure(&mut rng, n);
        let c = measure(&mut rng, n);
        let tol = TransportTol::default();
        let w = |x: &Measure, y: &Measure| w1_primal(x, y, &s, &tol).unwrap().cost;
        let (dual, pot) = w1_dual(&a, &b, &s, &tol).unwrap();
        let ab = w(&a, &b);
        prop_assert!((ab - dual).abs() <= 1e-7);
        prop_assert!(verify_lipschitz(&pot.f, &s, &1.0, &1e-9).unwrap().ok);
        prop_assert!((ab - w(&b, &a)).abs() <= 1e-7);
        prop_assert!(w(&a, &c) <= ab + w(&b, &c) + 1e-7);
        prop_assert!(w(&a, &a).abs() <= 1e-12);
        // W₁ <= diam · TV
        prop_assert!(ab <= s.bound() * tv_distance(&a, &b).unwrap() + 1e-9);
        let k = rng.gen_range(0.25..4.0);
        let scaled = s.scaled(&k).unwrap();
        let wk = w1_primal(&a, &b, &scaled, &tol).unwrap().cost;
        prop_assert!((wk - k * ab).abs() <= 1e-7);
    }

    #[test]
    fn quantization_error_is_certified(seed in any::<u64>(), n in 1usize..14, delta in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Space::from_coords(random_cloud(&mut rng, n), &Manhattan).unwrap();
        let p = measure(&mut rng, n);
        let part = s.build_partition(&delta).unwrap();
        let q = quantize(&p, &part).unwrap();
        for (cell, &rep) in part.cells().iter().zip(part.reps()) {
            prop_assert!((q.quantized.weights()[rep] - p.measure_of(cell).unwrap()).abs() < 1e-12);
        }
        let w = w1_primal(&p, &q.quantized, &s, &TransportTol::default()).unwrap().cost;
        prop_assert!(w <= q.certified_bound + 1e-9);
        for f in cone_family(&s, 10, seed).unwrap() {
            let gap = (p.integrate(&f).unwrap() - q.quantized.integrate(&f).unwrap()).abs();
            prop_assert!(gap <= q.certified_bound + 1e-9);
        }
    }

    #[test]
    fn refinement_never_raises_the_bound(seed in any::<u64>(), n in 2usize..14, delta in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Space::from_coords(random_cloud(&mut rng, n), &Manhattan).unwrap();
        let p = measure(&mut rng, n);
        let coarse = s.build_partition(&delta).unwrap();
        // split the first multi-point cell in two
        let mut cells = coarse.cells().to_vec();
        let mut reps = coarse.reps().to_vec();
        if let Some(k) = cells.iter().position(|c| c.len() > 1) {
            let half = cells[k].len() / 2;
            let tail = cells[k].split_off(half);
            if !cells[k].contains(&reps[k]) {
                reps[k] = cells[k][0];
            }
            reps.push(tail[0]);
            cells.push(tail);
        }
        let fine = Partition::new(&s, cells, reps).unwrap();
        prop_assert!(fine.mesh() <= coarse.mesh());
        let q = quantize(&p, &fine).unwrap();
        prop_assert!(q.certified_bound <= *coarse.mesh());
    }

    #[test]
    fn mcshane_extends_and_stays_lipschitz(seed in any::<u64>(), n in 1usize..14, m in 0.1f64..5.0) {
        let (mut rng, s) = setup(seed, n);
        let k = rng.gen_range(1..=n);
        let mut anchors: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.gen_range(i..n);
            anchors.swap(i, j);
        }
        anchors.truncate(k);
        // values of an M-Lipschitz function restricted to the anchors
        let apex = rng.gen_range(0..n);
        let values: Vec<f64> = anchors.iter().map(|&a| m * s.dist(a, apex) - 0.3).collect();
        let f = AnchoredFunction::new(&s, anchors.clone(), values.clone(), m, &1e-12).unwrap();
        let g: Vec<f64> = (0..n).map(|x| mcshane_extend(&f, &s, x).unwrap()).collect();
        for (a, v) in anchors.iter().zip(&values) {
            prop_assert_eq!(g[*a], *v);
        }
        prop_assert!(verify_lipschitz(&g, &s, &m, &1e-12).unwrap().ok);
    }

    #[test]
    fn separated_indicator_integral_bounds(seed in any::<u64>(), n in 2usize..12) {
        let (mut rng, s) = setup(seed, n);
        let y = s.greedy_separated_set(&0.3, usize::MAX).unwrap();
        let b: Vec<usize> = y.indices.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let p = measure(&mut rng, n);
        let ext = separated_indicator(&s, &y, &b).unwrap().extend(&s).unwrap();
        let outside: Vec<usize> = (0..n).filter(|x| !y.indices.contains(x)).collect();
        let lo = p.measure_of(&b).unwrap();
        let hi = lo + p.measure_of(&outside).unwrap();
        prop_assert!(p.integrate(&ext).unwrap() >= lo - 1e-12);
        // the inf formula can exceed 1 away from Y; min(·, 1) is still Lipschitz
        let clipped: Vec<f64> = ext.iter().map(|v| v.min(1.0)).collect();
        let m = 1.0 / y.eps;
        prop_assert!(verify_lipschitz(&clipped, &s, &m, &1e-12).unwrap().ok);
        let v = p.integrate(&clipped).unwrap();
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn rounding_moves_mass_at_most_the_scale(seed in any::<u64>(), k in 1usize..8, atoms in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors: Vec<Vec<f64>> = (0..k).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let r = RoundingMap::new(anchors.clone(), Manhattan).unwrap();
        let pts: Vec<Vec<f64>> = (0..atoms).map(|_| vec![rng.gen_range(-0.2..1.2)]).collect();
        let w = random_weights(&mut rng, atoms, atoms);
        let m = LocatedMeasure::new(pts, w).unwrap();
        let pushed = r.push_forward(&m);
        prop_assert!((pushed.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let target = LocatedMeasure::with_tol(anchors, pushed.weights.clone(), &1e-9).unwrap();
        let d = charges_core::transport::located_distances(&m, &target, &Manhattan, &TransportTol::default()).unwrap();
        prop_assert!(d.w1 <= pushed.scale + 1e-9);
    }

    #[test]
    fn constant_families_push_down_to_themselves(seed in any::<u64>(), atoms in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<i64> = {
            let mut v: Vec<i64> = (0..10).collect();
            for i in 0..atoms {
                let j = rng.gen_range(i..10);
                v.swap(i, j);
            }
            v.truncate(atoms);
            v.sort();
            v
        };
        let pts: Vec<Vec<Rational>> = xs.iter().map(|&x| vec![Rational::from_ratio(x, 10)]).collect();
        let w = random_rational_weights(&mut rng, atoms, atoms);
        let m = LocatedMeasure::new(pts.clone(), w.clone()).unwrap();
        let fam = Family::Constant(m.clone());
        let cells = IntervalCells::new(vec![
            Interval::right_open(Rational::from_int(0), Rational::from_ratio(1, 2)),
            Interval::closed(Rational::from_ratio(1, 2), Rational::from_int(1)),
        ]).unwrap();
        let alg = SetAlgebra::power_set(2).unwrap();
        let tol = Tolerances::default();
        let sched = Schedule::default();
        let rule = LimitRule::default();
        let ipd = internal_pushdown(&fam, &alg, &cells, &sched, &rule, &tol).unwrap();
        let r = RoundingMap::new(pts, Manhattan).unwrap();
        let pd = external_pushdown(&fam, &r, &sched, &rule, &tol).unwrap();
        prop_assert_eq!(pd.measure.weights(), &w[..]);
        use charges_core::measures::SetRealizer;
        for member in alg.members() {
            let direct = m.mass_where(|x| cells.contains(member, 1, x));
            prop_assert_eq!(ipd.value(member).unwrap(), &direct);
            prop_assert_eq!(pd.mass_where(|x| cells.contains(member, 1, x)), direct);
        }
    }

    #[test]
    fn oscillation_witnesses_hold_exactly(seed in any::<u64>(), rounds in 1usize..6) {
        // P_n spreads mass over a few fresh integers, with a small tail on 1
        let seq = FnFamily(move |n: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
            let base = 10 * n as i64;
            let k = rng.gen_range(1..=3);
            let mut pts = vec![vec![Rational::one()]];
            let mut w = vec![Rational::from_ratio(1, 10)];
            for j in 0..k {
                pts.push(vec![Rational::from_int(base + j)]);
                w.push(Rational::from_ratio(9, 10 * k));
            }
            LocatedMeasure::new(pts, w)
        });
        let locate = |p: &[Rational]| -> Option<usize> {
            if p[0].is_integer() { p[0].to_integer().to_usize() } else { None }
        };
        let out = oscillation_extract(&seq, &locate, &OscillationConfig::new(rounds)).unwrap();
        let w = &out.witness;
        prop_assert!(verify_witness(w, &seq, &locate).unwrap());
        for (i, b) in w.sets.iter().enumerate() {
            prop_assert!(w.masses[i] > w.hi);
            if i > 0 {
                prop_assert!(w.prior_masses[i] < w.lo);
                for earlier in &w.sets[..i] {
                    prop_assert!(b.is_disjoint(earlier));
                }
            }
        }
    }
}
