use gainsynth_core::gain::{partial_sums, small_gain_compose, GainSpec, Valuation};
use gainsynth_core::machine::{dfm_run, feedback_interconnect, Dfm};
use gainsynth_core::plant::{make_tank, Interval, TankParams, DRAIN, PUMP};
use gainsynth_core::{rat, Gain, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec() -> GainSpec<u8, u8> {
    GainSpec {
        rho: Valuation::new([(0, rat(1, 2)), (1, rat(2, 1)), (2, rat(0, 1))]).unwrap(),
        mu: Valuation::new([(0, rat(-1, 1)), (1, rat(3, 4)), (2, rat(5, 3))]).unwrap(),
        gamma: Gain::Finite(rat(3, 2)),
    }
}

proptest! {
    #[test]
    fn partial_sums_are_additive(
        a in prop::collection::vec((0u8..3, 0u8..3), 1..20),
        b in prop::collection::vec((0u8..3, 0u8..3), 1..20),
    ) {
        let spec = spec();
        let split = |s: &[(u8, u8)]| -> (Vec<u8>, Vec<u8>) { s.iter().copied().unzip() };
        let (au, ay) = split(&a);
        let (bu, by) = split(&b);
        let ab: Vec<(u8, u8)> = a.iter().chain(&b).copied().collect();
        let (cu, cy) = split(&ab);
        let sa = partial_sums(&au, &ay, &spec, a.len() - 1).unwrap();
        let sb = partial_sums(&bu, &by, &spec, b.len() - 1).unwrap();
        let sc = partial_sums(&cu, &cy, &spec, ab.len() - 1).unwrap();
        let offset = *sa.last().unwrap();
        let expect: Vec<Rational> = sa.iter().copied().chain(sb.iter().map(|s| s + offset)).collect();
        prop_assert_eq!(sc, expect);
    }

    #[test]
    fn compose_rho_is_nonincreasing_in_tau(
        weights in prop::collection::vec(-6i64..6, 4),
        mu_d in prop::collection::vec(0i64..4, 2),
        t1 in 1i64..8,
        t2 in 1i64..8,
    ) {
        let (lo, hi) = (rat(t1.min(t2), 2), rat(t1.max(t2), 2));
        let rho_s = Valuation::new([
            ((0u8, 0u8), rat(weights[0], 1)),
            ((0, 1), rat(weights[1], 1)),
            ((1, 0), rat(weights[2], 1)),
            ((1, 1), rat(weights[3], 1)),
        ]).unwrap();
        let mu_s = Valuation::new([((0u8, 0u8), rat(1, 1)), ((1, 0), rat(0, 1))]).unwrap();
        let rho_d = Valuation::new([(0u8, rat(1, 1))]).unwrap();
        let mu_d = Valuation::new([(0u8, rat(mu_d[0], 1)), (1, rat(mu_d[1], 1))]).unwrap();
        let (r_lo, _) = small_gain_compose(&rho_s, &mu_s, &rho_d, &mu_d, rat(1, 1), lo).unwrap();
        let (r_hi, _) = small_gain_compose(&rho_s, &mu_s, &rho_d, &mu_d, rat(1, 1), hi).unwrap();
        for r in [0u8, 1] {
            prop_assert!(r_hi.get(&r).unwrap() <= r_lo.get(&r).unwrap());
        }
    }

    #[test]
    fn dfm_output_of_prefix_is_prefix_of_output(
        n in 1usize..5,
        table in prop::collection::vec((0usize..5, 0usize..3), 10),
        input in prop::collection::vec(0u8..2, 0..30),
        cut in 0usize..30,
    ) {
        let m = Dfm::from_fn((0..n).collect(), 0, vec![0u8, 1], vec!['a', 'b', 'c'], |q, u| {
            let (next, y) = table[q * 2 + u];
            (next % n, y)
        }).unwrap();
        let full = dfm_run(&m, &input).unwrap();
        let cut = cut.min(input.len());
        let prefix = dfm_run(&m, &input[..cut]).unwrap();
        prop_assert_eq!(full.len(), input.len());
        prop_assert_eq!(&full[..cut], &prefix[..]);
    }
}

#[test]
fn interval_image_contains_every_successor() {
    let plant = make_tank(&TankParams::reference()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let grid = |rng: &mut ChaCha8Rng| rat(rng.random_range(0..=240), 8);
    for _ in 0..10_000 {
        let (a, b) = (grid(&mut rng), grid(&mut rng));
        let (lo, hi) = (a.min(b), a.max(b));
        let interval = match rng.random_range(0..3) {
            0 if lo < hi => Interval::half_open(lo, hi),
            1 => Interval::point(lo),
            _ => Interval::closed(lo, hi),
        };
        let x = if interval.lo == interval.hi {
            interval.lo
        } else {
            let x = lo + (hi - lo) * rat(rng.random_range(0..1000), 1000);
            if interval.contains(x) { x } else { lo }
        };
        let u = if rng.random_bool(0.5) { PUMP } else { DRAIN };
        let image = plant.interval_image(u, interval).unwrap();
        assert!(image.contains(plant.step(x, u).unwrap()), "{x} in {interval:?} under {u:?}");
    }
}

type Plant = Dfm<usize, (bool, u8), (bool, u8)>;
type Controller = Dfm<usize, bool, bool>;

/// Random plant whose sensor output depends on the state only.
fn random_plant(rng: &mut ChaCha8Rng) -> Plant {
    let n = rng.random_range(1..5);
    let sensor: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let next: Vec<usize> = (0..n * 4).map(|_| rng.random_range(0..n)).collect();
    let z: Vec<u8> = (0..n * 4).map(|_| rng.random_range(0..2)).collect();
    let inputs = vec![(false, 0), (false, 1), (true, 0), (true, 1)];
    let outputs = vec![(false, 0), (false, 1), (true, 0), (true, 1)];
    Dfm::from_fn((0..n).collect(), 0, inputs, outputs, |q, i| {
        (next[q * 4 + i], usize::from(sensor[q]) * 2 + usize::from(z[q * 4 + i]))
    })
    .unwrap()
}

/// Random controller whose output may depend on the current reading.
fn random_controller(rng: &mut ChaCha8Rng) -> Controller {
    let n = rng.random_range(1..4);
    let table: Vec<(usize, usize)> = (0..n * 2).map(|_| (rng.random_range(0..n), rng.random_range(0..2))).collect();
    Dfm::from_fn((0..n).collect(), 0, vec![false, true], vec![false, true], |q, y| table[q * 2 + y]).unwrap()
}

#[test]
fn feedback_runs_satisfy_both_machines() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let m = random_plant(&mut rng);
        let k = random_controller(&mut rng);
        let closed = feedback_interconnect(&m, &k).unwrap();
        let reach_m = m.reachable_states();
        let reach_k = k.reachable_states();
        for q in closed.reachable_states() {
            let (qm, qk) = closed.states[q];
            assert!(reach_m.contains(&qm) && reach_k.contains(&qk));
        }
        // Walk the product and replay both machines alongside.
        let ws: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
        let (mut q, mut qm, mut qk) = (closed.initial, m.initial(), k.initial());
        for w in ws {
            let wi = closed.inputs.iter().position(|&x| x == w).unwrap();
            let (next, zi) = closed.transitions[q][wi][0];
            let y = m.outputs()[m.step(qm, 0).1].0;
            let (nk, ui) = k.step(qk, usize::from(y));
            let u = k.outputs()[ui];
            let input = m.inputs().iter().position(|&x| x == (u, w)).unwrap();
            let (nm, out) = m.step(qm, input);
            assert_eq!(m.outputs()[out].0, y);
            assert_eq!(closed.outputs[zi], m.outputs()[out].1);
            assert_eq!(closed.states[next], (nm, nk));
            (q, qm, qk) = (next, nm, nk);
        }
    }
}
