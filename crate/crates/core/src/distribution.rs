//! Finite probability distributions with exact masses.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistributionError {
    #[error("negative mass {0}")]
    NegativeMass(Rational),
    #[error("masses sum to {0}, not 1")]
    NotNormalized(Rational),
    #[error("map undefined on a support element")]
    UndefinedOnSupport,
    #[error("empty support")]
    Empty,
}

/// A probability mass function with finite support.
///
/// Only strictly positive masses are stored, so two distributions are equal
/// exactly when they assign the same mass to every outcome. Values built via
/// [`FiniteDistribution::new_unchecked`] may violate normalization; model
/// validation is where those get reported.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteDistribution<X: Ord> {
    mass: BTreeMap<X, Rational>,
}

impl<X: Ord + Clone> FiniteDistribution<X> {
    /// Builds a distribution, merging repeated outcomes and dropping zeros.
    pub fn new(masses: impl IntoIterator<Item = (X, Rational)>) -> Result<Self, DistributionError> {
        let d = Self::new_unchecked(masses)?;
        let total = d.total();
        if !total.is_one() {
            return Err(DistributionError::NotNormalized(total));
        }
        Ok(d)
    }

    /// Like [`new`](Self::new) but without the sum-to-one check. Negative
    /// masses are still rejected.
    pub fn new_unchecked(
        masses: impl IntoIterator<Item = (X, Rational)>,
    ) -> Result<Self, DistributionError> {
        let mut mass: BTreeMap<X, Rational> = BTreeMap::new();
        for (x, p) in masses {
            if p.is_negative() {
                return Err(DistributionError::NegativeMass(p));
            }
            *mass.entry(x).or_insert_with(Rational::zero) += p;
        }
        mass.retain(|_, p| !p.is_zero());
        Ok(FiniteDistribution { mass })
    }

    pub fn point(x: X) -> Self {
        FiniteDistribution {
            mass: BTreeMap::from([(x, Rational::one())]),
        }
    }

    /// Uniform over the given outcomes.
    pub fn uniform(xs: impl IntoIterator<Item = X>) -> Result<Self, DistributionError> {
        let xs: Vec<X> = xs.into_iter().collect();
        if xs.is_empty() {
            return Err(DistributionError::Empty);
        }
        let p = Rational::new(1, xs.len() as i64).expect("nonzero length");
        Self::new(xs.into_iter().map(|x| (x, p.clone())))
    }

    pub fn mass(&self, x: &X) -> Rational {
        self.mass.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.mass.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.total().is_one()
    }

    pub fn support(&self) -> impl Iterator<Item = &X> {
        self.mass.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&X, &Rational)> {
        self.mass.iter()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// The outcome carrying all the mass, if there is one.
    pub fn as_point(&self) -> Option<&X> {
        match self.mass.iter().next() {
            Some((x, p)) if self.mass.len() == 1 && p.is_one() => Some(x),
            _ => None,
        }
    }

    /// Pushforward under a map that must be defined on the support.
    pub fn pushforward<Y: Ord + Clone>(
        &self,
        mut f: impl FnMut(&X) -> Option<Y>,
    ) -> Result<FiniteDistribution<Y>, DistributionError> {
        let mut mass: BTreeMap<Y, Rational> = BTreeMap::new();
        for (x, p) in &self.mass {
            let y = f(x).ok_or(DistributionError::UndefinedOnSupport)?;
            *mass.entry(y).or_insert_with(Rational::zero) += p;
        }
        Ok(FiniteDistribution { mass })
    }

    /// Pushforward under a total map.
    pub fn map<Y: Ord + Clone>(&self, mut f: impl FnMut(&X) -> Y) -> FiniteDistribution<Y> {
        self.pushforward(|x| Some(f(x))).expect("total map")
    }

    /// Mass of the outcomes satisfying `pred`.
    pub fn probability(&self, mut pred: impl FnMut(&X) -> bool) -> Rational {
        self.mass
            .iter()
            .filter(|(x, _)| pred(x))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn event_probability(&self, event: &BTreeSet<X>) -> Rational {
        self.probability(|x| event.contains(x))
    }

    /// Conditions on the outcomes satisfying `pred`; `None` if that event is
    /// null.
    pub fn condition(&self, mut pred: impl FnMut(&X) -> bool) -> Option<Self> {
        let kept: Vec<(X, Rational)> = self
            .mass
            .iter()
            .filter(|(x, _)| pred(x))
            .map(|(x, p)| (x.clone(), p.clone()))
            .collect();
        let z: Rational = kept.iter().map(|(_, p)| p).sum();
        if z.is_zero() {
            return None;
        }
        let mass = kept
            .into_iter()
            .map(|(x, p)| (x, p.checked_div(&z).expect("nonzero")))
            .collect();
        Some(FiniteDistribution { mass })
    }

    /// Expectation of `f` under this distribution.
    pub fn expectation<E>(
        &self,
        mut f: impl FnMut(&X) -> Result<Rational, E>,
    ) -> Result<Rational, E> {
        let mut acc = Rational::zero();
        for (x, p) in &self.mass {
            acc += p * &f(x)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn pushforward_constant_is_point_mass() {
        let d = FiniteDistribution::uniform(["w1", "w2"]).unwrap();
        let img = d.map(|_| 7);
        assert_eq!(img, FiniteDistribution::point(7));
    }

    #[test]
    fn pushforward_adds_masses() {
        let third = r("1/3");
        let d = FiniteDistribution::new([
            ("x1", third.clone()),
            ("x2", third.clone()),
            ("x3", third.clone()),
        ])
        .unwrap();
        let img = d.map(|x| if *x == "x3" { 'v' } else { 'u' });
        assert_eq!(img.mass(&'u'), r("2/3"));
        assert_eq!(img.mass(&'v'), r("1/3"));
        assert!(img.is_normalized());
    }

    #[test]
    fn pushforward_undefined_on_support() {
        let d = FiniteDistribution::uniform([1, 2]).unwrap();
        let err = d.pushforward(|x| (*x == 1).then_some(0)).unwrap_err();
        assert_eq!(err, DistributionError::UndefinedOnSupport);
        // undefined off the support is fine
        let d = FiniteDistribution::point(1);
        assert!(d.pushforward(|x| (*x == 1).then_some(0)).is_ok());
    }

    #[test]
    fn event_probability_extremes() {
        let d = FiniteDistribution::new([(0, r("1/4")), (1, r("3/4"))]).unwrap();
        assert_eq!(
            d.event_probability(&BTreeSet::from([0, 1, 2])),
            Rational::one()
        );
        assert_eq!(d.event_probability(&BTreeSet::new()), Rational::zero());
        assert_eq!(d.event_probability(&BTreeSet::from([1])), r("3/4"));
    }

    #[test]
    fn zero_masses_do_not_affect_equality() {
        let a = FiniteDistribution::new([(0, r("1")), (1, r("0"))]).unwrap();
        assert_eq!(a, FiniteDistribution::point(0));
        assert_eq!(a.as_point(), Some(&0));
        assert_eq!(a.support().count(), 1);
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(matches!(
            FiniteDistribution::new([(0, r("9/10"))]),
            Err(DistributionError::NotNormalized(_))
        ));
        assert!(matches!(
            FiniteDistribution::new([(0, r("3/2")), (1, r("-1/2"))]),
            Err(DistributionError::NegativeMass(_))
        ));
        assert!(!FiniteDistribution::new_unchecked([(0, r("9/10"))])
            .unwrap()
            .is_normalized());
    }

    #[test]
    fn conditioning() {
        let d = FiniteDistribution::new([(0, r("1/2")), (1, r("1/4")), (2, r("1/4"))]).unwrap();
        let c = d.condition(|x| *x > 0).unwrap();
        assert_eq!(c.mass(&1), r("1/2"));
        assert!(d.condition(|x| *x > 5).is_none());
    }
}
