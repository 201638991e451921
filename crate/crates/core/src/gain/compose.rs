use alloc::collections::BTreeSet;

use num_traits::Signed;

use super::{GainError, Valuation};
use crate::rational::Rational;

/// Small-gain composition of an interconnection's valuations.
///
/// Given `rho_s` over `(r, w)` pairs and `mu_s` over `(v, z)` pairs for the
/// nominal system and an error system with gain `gamma_d` under
/// `rho_d` / `mu_d`, returns the closed-loop valuations
///
/// ```text
/// rho(r) = max_w { rho_s(r, w) - tau * mu_d(w) }
/// mu(v)  = min_z { mu_s(v, z) - tau * gamma_d * rho_d(z) }
/// ```
///
/// by enumerating the finite alphabets of `mu_d` and `rho_d`.
pub fn small_gain_compose<R, W, V, Z>(
    rho_s: &Valuation<(R, W)>,
    mu_s: &Valuation<(V, Z)>,
    rho_d: &Valuation<Z>,
    mu_d: &Valuation<W>,
    gamma_d: Rational,
    tau: Rational,
) -> Result<(Valuation<R>, Valuation<V>), GainError>
where
    R: Ord + Clone,
    W: Ord + Clone,
    V: Ord + Clone,
    Z: Ord + Clone,
{
    if !tau.is_positive() {
        return Err(GainError::NonPositiveTau);
    }
    if rho_d.is_empty() || mu_d.is_empty() {
        return Err(GainError::DegenerateAlphabet);
    }
    let rs: BTreeSet<R> = rho_s.alphabet().map(|(r, _)| r.clone()).collect();
    let vs: BTreeSet<V> = mu_s.alphabet().map(|(v, _)| v.clone()).collect();

    let mut rho = alloc::vec::Vec::with_capacity(rs.len());
    for r in rs {
        let mut best: Option<Rational> = None;
        for (w, weight) in mu_d.iter() {
            let value = rho_s.get(&(r.clone(), w.clone()))? - tau * weight;
            best = Some(best.map_or(value, |b| b.max(value)));
        }
        rho.push((r, best.expect("nonempty w alphabet")));
    }

    let mut mu = alloc::vec::Vec::with_capacity(vs.len());
    for v in vs {
        let mut best: Option<Rational> = None;
        for (z, weight) in rho_d.iter() {
            let value = mu_s.get(&(v.clone(), z.clone()))? - tau * gamma_d * weight;
            best = Some(best.map_or(value, |b| b.min(value)));
        }
        mu.push((v, best.expect("nonempty z alphabet")));
    }

    Ok((Valuation::new(rho)?, Valuation::new(mu)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn pairs(rs: &[i64], ws: &[i64], f: impl Fn(i64, i64) -> Rational) -> Valuation<(i64, i64)> {
        Valuation::new(
            rs.iter()
                .flat_map(|&r| ws.iter().map(move |&w| (r, w)))
                .map(|(r, w)| ((r, w), f(r, w))),
        )
        .unwrap()
    }

    #[test]
    fn mismatch_credit_cancels_exactly() {
        let tau = int(3);
        let rho_s = pairs(&[0, 1, 2], &[0, 1], |_, w| tau * int(w));
        let mu_s = pairs(&[0], &[0], |_, _| int(0));
        let mu_d = Valuation::from_fn([0i64, 1], |w| int(*w));
        let rho_d = Valuation::constant([0i64], int(1));
        let (rho, _) = small_gain_compose(&rho_s, &mu_s, &rho_d, &mu_d, int(1), tau).unwrap();
        assert!(rho.iter().all(|(_, w)| *w == int(0)));
        assert_eq!(rho.len(), 3);
    }

    #[test]
    fn zero_error_gain_leaves_the_min_over_z() {
        let rho_s = pairs(&[0], &[0], |_, _| int(0));
        let mu_s = pairs(&[0, 1], &[0, 1, 2], |v, z| int(v * 10 + 3 - z));
        let rho_d = Valuation::from_fn([0i64, 1, 2], |z| int(*z + 1));
        let mu_d = Valuation::constant([0i64], int(0));
        let (_, mu) = small_gain_compose(&rho_s, &mu_s, &rho_d, &mu_d, int(0), int(5)).unwrap();
        assert_eq!(mu.get(&0).unwrap(), int(1));
        assert_eq!(mu.get(&1).unwrap(), int(11));
    }

    #[test]
    fn constant_in_z_shifts_by_the_error_budget() {
        let rho_s = pairs(&[0], &[0], |_, _| int(0));
        let mu_s = pairs(&[0, 1, 2], &[0, 1], |v, _| int(v + 1));
        let rho_d = Valuation::constant([0i64, 1], int(1));
        let mu_d = Valuation::constant([0i64], int(0));
        let (_, mu) = small_gain_compose(&rho_s, &mu_s, &rho_d, &mu_d, int(1), int(1)).unwrap();
        for v in 0..3 {
            assert_eq!(mu.get(&v).unwrap(), int(v));
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let rho_s = pairs(&[0], &[0], |_, _| int(0));
        let mu_s = pairs(&[0], &[0], |_, _| int(0));
        let empty: Valuation<i64> = Valuation::new([]).unwrap();
        let one = Valuation::constant([0i64], int(1));
        assert_eq!(
            small_gain_compose(&rho_s, &mu_s, &one, &empty, int(1), int(1)),
            Err(GainError::DegenerateAlphabet)
        );
        assert_eq!(
            small_gain_compose(&rho_s, &mu_s, &one, &one, int(1), int(0)),
            Err(GainError::NonPositiveTau)
        );
        let wide_w = Valuation::constant([0i64, 1], int(1));
        assert_eq!(
            small_gain_compose(&rho_s, &mu_s, &one, &wide_w, int(1), int(1)),
            Err(GainError::AlphabetMismatch)
        );
    }
}
