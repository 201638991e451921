use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::GainError;
use crate::rational::{is_nonnegative, Gain, Rational};

/// A total weight table over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation<S: Ord> {
    weights: BTreeMap<S, Rational>,
}

impl<S: Ord + Clone> Valuation<S> {
    /// Builds a valuation; each symbol may appear once.
    pub fn new(entries: impl IntoIterator<Item = (S, Rational)>) -> Result<Self, GainError> {
        let mut weights = BTreeMap::new();
        for (symbol, weight) in entries {
            if weights.insert(symbol, weight).is_some() {
                return Err(GainError::DuplicateSymbol);
            }
        }
        Ok(Self { weights })
    }

    /// Assigns the same weight to every symbol of `alphabet`.
    pub fn constant(alphabet: impl IntoIterator<Item = S>, weight: Rational) -> Self {
        Self {
            weights: alphabet.into_iter().map(|s| (s, weight)).collect(),
        }
    }

    pub fn from_fn(alphabet: impl IntoIterator<Item = S>, f: impl Fn(&S) -> Rational) -> Self {
        Self {
            weights: alphabet.into_iter().map(|s| {
                let w = f(&s);
                (s, w)
            }).collect(),
        }
    }

    pub fn get(&self, symbol: &S) -> Result<Rational, GainError> {
        self.weights
            .get(symbol)
            .copied()
            .ok_or(GainError::AlphabetMismatch)
    }

    pub fn alphabet(&self) -> impl Iterator<Item = &S> + '_ {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &Rational)> + '_ {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.weights.values().all(is_nonnegative)
    }
}

/// Input/output valuations together with a gain constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GainSpec<I: Ord, O: Ord> {
    pub rho: Valuation<I>,
    pub mu: Valuation<O>,
    pub gamma: Gain,
}

/// Partial sums `sum_{t<=k} gamma*rho(u(t)) - mu(y(t))` for `k = 0..=horizon`.
///
/// The running minimum of the result is the finite-horizon witness for the
/// gain inequality.
pub fn partial_sums<I: Ord + Clone, O: Ord + Clone>(
    inputs: &[I],
    outputs: &[O],
    spec: &GainSpec<I, O>,
    horizon: usize,
) -> Result<Vec<Rational>, GainError> {
    let gamma = spec.gamma.finite().ok_or(GainError::InfiniteGamma)?;
    if inputs.len() <= horizon || outputs.len() <= horizon {
        return Err(GainError::SequenceTooShort);
    }
    let mut total = Rational::from_integer(0);
    let mut sums = Vec::with_capacity(horizon + 1);
    for (u, y) in inputs.iter().zip(outputs).take(horizon + 1) {
        total += gamma * spec.rho.get(u)? - spec.mu.get(y)?;
        sums.push(total);
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use alloc::vec;

    fn identity_on(values: &[i64]) -> Valuation<i64> {
        Valuation::from_fn(values.iter().copied(), |v| int(*v))
    }

    #[test]
    fn sums_of_pure_output_penalty() {
        let spec = GainSpec {
            rho: Valuation::constant([0i64], int(0)),
            mu: identity_on(&[0, 1]),
            gamma: Gain::Finite(int(1)),
        };
        let sums = partial_sums(&[0, 0, 0, 0], &[1, 1, 0, 0], &spec, 3).unwrap();
        assert_eq!(sums, vec![int(-1), int(-2), int(-2), int(-2)]);
    }

    #[test]
    fn sums_cancel_when_rho_matches_mu() {
        let spec = GainSpec {
            rho: Valuation::constant([0i64], int(1)),
            mu: identity_on(&[1]),
            gamma: Gain::Finite(int(1)),
        };
        let sums = partial_sums(&[0, 0, 0], &[1, 1, 1], &spec, 2).unwrap();
        assert_eq!(sums, vec![int(0); 3]);
    }

    #[test]
    fn zero_mu_gives_nondecreasing_sums() {
        let spec = GainSpec {
            rho: Valuation::new([(0i64, int(0)), (1, rat(1, 2)), (2, int(3))]).unwrap(),
            mu: Valuation::constant([0i64], int(0)),
            gamma: Gain::Finite(int(1)),
        };
        let sums = partial_sums(&[2, 0, 1, 1, 0], &[0; 5], &spec, 4).unwrap();
        assert!(sums.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn unknown_symbol_is_an_alphabet_mismatch() {
        let spec = GainSpec {
            rho: Valuation::constant([0i64], int(0)),
            mu: identity_on(&[0, 1]),
            gamma: Gain::Finite(int(1)),
        };
        assert_eq!(
            partial_sums(&[0, 0], &[1, 7], &spec, 1),
            Err(GainError::AlphabetMismatch)
        );
        assert_eq!(
            partial_sums(&[0], &[1], &spec, 1),
            Err(GainError::SequenceTooShort)
        );
    }

    #[test]
    fn duplicate_symbols_are_rejected() {
        assert_eq!(
            Valuation::new([(1u8, int(0)), (1u8, int(1))]),
            Err(GainError::DuplicateSymbol)
        );
    }
}
